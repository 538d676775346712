//! Question generation pipeline: templates, symbolic oracle, counterfactual
//! views, chart sampling, difficulty filtering, and dataset assembly.

pub mod chartgen;
pub mod dataset;
pub mod filter;
pub mod generate;
pub mod oracle;
pub mod question;
pub mod views;

pub use chartgen::sample_chart;
pub use dataset::{
    build_dataset, load_dataset, read_counters, read_manifest, verify_dataset, write_counters,
    write_manifest, BuildReport, FunnelCounters, GenConfig, GenError, LoadedItem, ManifestRecord,
    QuestionInfo, StreamReport,
};
pub use filter::{difficulty_filter, AnswerPolicy, FilterOutcome, NetPolicy, PerfectPolicy, UniformPolicy};
pub use generate::{
    generate_questions, generate_questions_weighted, validate_question, GenerationOutcome,
};
pub use oracle::{oracle_answer, OracleError, Verdict};
pub use question::{render_text, Question, QuestionParams, TemplateId, N_TEMPLATES};
pub use views::{check_view_contract, evidence_set, make_views, ChartViews};
