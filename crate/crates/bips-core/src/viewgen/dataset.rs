//! Dataset assembly: charts to manifests on disk.
//!
//! A build walks seeded charts through the full funnel
//! (generate -> validate -> filter -> edit/render) until the per-split item
//! targets are met, writing chart sources, PGM images, a JSONL manifest per
//! split, and a funnel-counter sidecar. Everything downstream of
//! `(config, master_seed)` is deterministic, so rebuilding a dataset yields
//! byte-identical files.

use crate::chartdsl::{parse_chart, same_layout, serialize_chart, ChartSpec};
use crate::policy::{FeatureConfig, PolicyError, PolicyParams};
use crate::render::{rasterize, read_pgm, write_pgm, Image, PgmError, RenderConfig, RenderError};
use crate::rng::{derive_seed, rng_from};
use crate::viewgen::filter::{difficulty_filter, AnswerPolicy, NetPolicy};
use crate::viewgen::generate::{generate_questions_weighted, validate_question};
use crate::viewgen::question::{Question, QuestionParams, TemplateId, N_TEMPLATES};
use crate::viewgen::views::{check_view_contract, make_views};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("dataset yield exhausted: wanted {wanted} items, got {got} from {charts} charts")]
    InsufficientYield { wanted: u32, got: u32, charts: u32 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Dataset build parameters, read and written as `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub train_items: u32,
    pub eval_items: u32,
    pub questions_per_chart: u32,
    /// Fraction of kept items that also get an evidence-preserving render.
    pub pres_ratio: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub margin: u32,
    pub filter_k: u32,
    pub filter_temperature: f64,
    /// Hidden width of the freshly initialized reference policy the
    /// difficulty filter samples from.
    pub hidden: u32,
    pub pooled: u32,
    pub base_policy_seed: u64,
    /// Give up when `max_chart_factor * items` charts fail to fill a split.
    pub max_chart_factor: u32,
    /// Relative template frequencies in [`TemplateId::ALL`] order; weight 0
    /// removes a template from generation.
    pub template_weights: [u32; N_TEMPLATES],
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            train_items: 500,
            eval_items: 200,
            questions_per_chart: 4,
            pres_ratio: 0.54,
            image_width: 64,
            image_height: 64,
            margin: 6,
            filter_k: 8,
            filter_temperature: 0.85,
            hidden: 64,
            pooled: 16,
            base_policy_seed: 1,
            max_chart_factor: 40,
            template_weights: [1; N_TEMPLATES],
        }
    }
}

impl GenConfig {
    /// Parses `key=value` lines; `#` starts a comment and unknown or
    /// duplicate keys are errors. Unlisted keys keep their defaults.
    pub fn from_kv(text: &str) -> Result<GenConfig, GenError> {
        let mut cfg = GenConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GenError::Config(format!("line {}: expected key=value", ln + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(GenError::Config(format!("duplicate key `{key}`")));
            }
            let bad = |e: &dyn std::fmt::Display| GenError::Config(format!("key `{key}`: {e}"));
            match key {
                "train_items" => cfg.train_items = value.parse().map_err(|e| bad(&e))?,
                "eval_items" => cfg.eval_items = value.parse().map_err(|e| bad(&e))?,
                "questions_per_chart" => {
                    cfg.questions_per_chart = value.parse().map_err(|e| bad(&e))?
                }
                "pres_ratio" => cfg.pres_ratio = value.parse().map_err(|e| bad(&e))?,
                "image_width" => cfg.image_width = value.parse().map_err(|e| bad(&e))?,
                "image_height" => cfg.image_height = value.parse().map_err(|e| bad(&e))?,
                "margin" => cfg.margin = value.parse().map_err(|e| bad(&e))?,
                "filter_k" => cfg.filter_k = value.parse().map_err(|e| bad(&e))?,
                "filter_temperature" => {
                    cfg.filter_temperature = value.parse().map_err(|e| bad(&e))?
                }
                "hidden" => cfg.hidden = value.parse().map_err(|e| bad(&e))?,
                "pooled" => cfg.pooled = value.parse().map_err(|e| bad(&e))?,
                "base_policy_seed" => cfg.base_policy_seed = value.parse().map_err(|e| bad(&e))?,
                "max_chart_factor" => cfg.max_chart_factor = value.parse().map_err(|e| bad(&e))?,
                "template_weights" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != N_TEMPLATES {
                        return Err(GenError::Config(format!(
                            "key `template_weights`: expected {N_TEMPLATES} comma-separated weights"
                        )));
                    }
                    for (slot, part) in cfg.template_weights.iter_mut().zip(parts) {
                        *slot = part.parse().map_err(|e| bad(&e))?;
                    }
                }
                _ => return Err(GenError::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "train_items={}", self.train_items);
        let _ = writeln!(out, "eval_items={}", self.eval_items);
        let _ = writeln!(out, "questions_per_chart={}", self.questions_per_chart);
        let _ = writeln!(out, "pres_ratio={}", self.pres_ratio);
        let _ = writeln!(out, "image_width={}", self.image_width);
        let _ = writeln!(out, "image_height={}", self.image_height);
        let _ = writeln!(out, "margin={}", self.margin);
        let _ = writeln!(out, "filter_k={}", self.filter_k);
        let _ = writeln!(out, "filter_temperature={}", self.filter_temperature);
        let _ = writeln!(out, "hidden={}", self.hidden);
        let _ = writeln!(out, "pooled={}", self.pooled);
        let _ = writeln!(out, "base_policy_seed={}", self.base_policy_seed);
        let _ = writeln!(out, "max_chart_factor={}", self.max_chart_factor);
        let weights: Vec<String> = self.template_weights.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "template_weights={}", weights.join(","));
        out
    }

    pub fn check(&self) -> Result<(), GenError> {
        if !(0.0..=1.0).contains(&self.pres_ratio) {
            return Err(GenError::Config("pres_ratio must be in [0, 1]".to_string()));
        }
        if self.filter_k == 0 || self.questions_per_chart == 0 || self.max_chart_factor == 0 {
            return Err(GenError::Config(
                "filter_k, questions_per_chart, max_chart_factor must be positive".to_string(),
            ));
        }
        if self.filter_temperature <= 0.0 {
            return Err(GenError::Config("filter_temperature must be positive".to_string()));
        }
        if self.template_weights.iter().all(|&w| w == 0) {
            return Err(GenError::Config("template_weights must not all be zero".to_string()));
        }
        Ok(())
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig { width: self.image_width, height: self.image_height, margin: self.margin }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            image_width: self.image_width,
            image_height: self.image_height,
            pooled: self.pooled,
        }
    }
}

/// Funnel tallies for one split. Later stages never exceed earlier ones:
/// `generated >= validated >= filtered >= edited`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelCounters {
    /// Question candidates attempted.
    pub generated: u64,
    /// Candidates that became structurally valid, oracle-confirmed questions.
    pub validated: u64,
    /// Validated questions the difficulty filter kept.
    pub filtered: u64,
    /// Kept questions whose counterfactual views were built and rendered.
    pub edited: u64,
}

impl FunnelCounters {
    pub fn check_monotone(&self) -> Result<(), String> {
        if self.generated >= self.validated
            && self.validated >= self.filtered
            && self.filtered >= self.edited
        {
            Ok(())
        } else {
            Err(format!("funnel counters not monotone: {self:?}"))
        }
    }
}

/// Question fields as stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionInfo {
    pub template: TemplateId,
    pub params: QuestionParams,
    pub text: String,
}

/// One dataset item. All paths are relative to the manifest's directory and
/// use forward slashes. `pres_image` is null for items outside the
/// evidence-preserving coverage fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub dsl_path: String,
    pub question: QuestionInfo,
    pub options: [String; 4],
    pub answer_index: u8,
    pub image: String,
    pub pres_image: Option<String>,
    pub abl_image: String,
    /// Correct draws the difficulty filter observed (out of `filter_k`).
    pub difficulty: u32,
    /// Seed the item's chart was sampled from.
    pub seed: u64,
}

impl ManifestRecord {
    pub fn to_question(&self) -> Question {
        Question {
            template: self.question.template,
            params: self.question.params.clone(),
            text: self.question.text.clone(),
            options: self.options.clone(),
            answer_index: self.answer_index,
        }
    }
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<(), GenError> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| GenError::Manifest(format!("serialize {}: {e}", r.id)))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>, GenError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(line)
            .map_err(|e| GenError::Manifest(format!("line {}: {e}", ln + 1)))?;
        record
            .to_question()
            .check()
            .map_err(|e| GenError::Manifest(format!("item {}: {e}", record.id)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_counters(path: &Path, counters: &FunnelCounters) -> Result<(), GenError> {
    let json = serde_json::to_string_pretty(counters)
        .map_err(|e| GenError::Manifest(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_counters(path: &Path) -> Result<FunnelCounters, GenError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| GenError::Manifest(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct StreamReport {
    pub manifest: PathBuf,
    pub counters: FunnelCounters,
    pub items: u32,
    /// Charts sampled to reach the target.
    pub charts: u32,
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub train: StreamReport,
    pub eval: StreamReport,
}

/// Builds both dataset splits under `out_dir`.
///
/// Layout: `charts/<split>_<chart>.dsl`, `images/<item>{,_pres,_abl}.pgm`,
/// `<split>.jsonl`, `<split>_counters.json`, plus a copy of the effective
/// config in `gen_config.txt`.
pub fn build_dataset(
    cfg: &GenConfig,
    master_seed: u64,
    out_dir: &Path,
) -> Result<BuildReport, GenError> {
    cfg.check()?;
    fs::create_dir_all(out_dir.join("charts"))?;
    fs::create_dir_all(out_dir.join("images"))?;
    fs::write(out_dir.join("gen_config.txt"), cfg.to_kv())?;

    let features = cfg.feature_config();
    let base_params = PolicyParams::init(
        features.feature_dim(),
        cfg.hidden as usize,
        cfg.base_policy_seed,
    );
    let policy = NetPolicy { params: &base_params, features };

    let train = build_split(cfg, master_seed, out_dir, "train", cfg.train_items, &policy)?;
    let eval = build_split(cfg, master_seed, out_dir, "eval", cfg.eval_items, &policy)?;
    Ok(BuildReport { train, eval })
}

fn split_code(split: &str) -> u64 {
    match split {
        "train" => 0,
        _ => 1,
    }
}

fn build_split(
    cfg: &GenConfig,
    master_seed: u64,
    out_dir: &Path,
    split: &str,
    target: u32,
    policy: &dyn AnswerPolicy,
) -> Result<StreamReport, GenError> {
    let render_cfg = cfg.render_config();
    let code = split_code(split);
    let mut counters = FunnelCounters::default();
    let mut records: Vec<ManifestRecord> = Vec::with_capacity(target as usize);
    let mut chart_idx: u64 = 0;
    let budget = u64::from(cfg.max_chart_factor) * u64::from(target);

    while (records.len() as u32) < target {
        if chart_idx >= budget {
            return Err(GenError::InsufficientYield {
                wanted: target,
                got: records.len() as u32,
                charts: chart_idx as u32,
            });
        }
        let chart_seed = derive_seed(master_seed, "chart", &[code, chart_idx]);
        let spec = crate::viewgen::chartgen::sample_chart(chart_seed);
        let question_seed = derive_seed(master_seed, "questions", &[code, chart_idx]);
        let outcome = generate_questions_weighted(
            &spec,
            question_seed,
            cfg.questions_per_chart as usize,
            &cfg.template_weights,
        );
        counters.generated += outcome.attempted as u64;
        counters.validated += outcome.questions.len() as u64;

        let mut chart_written = false;
        let dsl_rel = format!("charts/{split}_{chart_idx:05}.dsl");
        let mut image = None;
        for (qi, question) in outcome.questions.iter().enumerate() {
            if records.len() as u32 >= target {
                break;
            }
            let filter_seed = derive_seed(master_seed, "filter", &[code, chart_idx, qi as u64]);
            if image.is_none() {
                image = Some(rasterize(&spec, &render_cfg)?);
            }
            let base_image = image.as_ref().unwrap();
            let verdict = difficulty_filter(
                base_image,
                question,
                policy,
                cfg.filter_k,
                cfg.filter_temperature,
                filter_seed,
            )?;
            if !verdict.keep {
                continue;
            }
            counters.filtered += 1;

            let views = make_views(&spec, question)
                .map_err(|e| GenError::Internal(format!("views for kept item: {e}")))?;
            check_view_contract(&spec, question, &views).map_err(GenError::Internal)?;
            if !same_layout(&spec, &views.pres) || !same_layout(&spec, &views.abl) {
                return Err(GenError::Internal("edited view changed chart layout".to_string()));
            }

            if !chart_written {
                fs::write(out_dir.join(&dsl_rel), serialize_chart(&spec))?;
                chart_written = true;
            }
            let item_id = format!("{split}_{:05}", records.len());
            let image_rel = format!("images/{item_id}.pgm");
            write_pgm(base_image, &out_dir.join(&image_rel))?;

            let mut pres_rng = rng_from(master_seed, "pres", &[code, chart_idx, qi as u64]);
            let pres_rel = if pres_rng.random_bool(cfg.pres_ratio) {
                let rel = format!("images/{item_id}_pres.pgm");
                write_pgm(&rasterize(&views.pres, &render_cfg)?, &out_dir.join(&rel))?;
                Some(rel)
            } else {
                None
            };
            let abl_rel = format!("images/{item_id}_abl.pgm");
            write_pgm(&rasterize(&views.abl, &render_cfg)?, &out_dir.join(&abl_rel))?;
            counters.edited += 1;

            records.push(ManifestRecord {
                id: item_id,
                dsl_path: dsl_rel.clone(),
                question: QuestionInfo {
                    template: question.template,
                    params: question.params.clone(),
                    text: question.text.clone(),
                },
                options: question.options.clone(),
                answer_index: question.answer_index,
                image: image_rel,
                pres_image: pres_rel,
                abl_image: abl_rel,
                difficulty: verdict.difficulty_correct,
                seed: chart_seed,
            });
        }
        chart_idx += 1;
    }

    counters.check_monotone().map_err(GenError::Internal)?;
    let manifest = out_dir.join(format!("{split}.jsonl"));
    write_manifest(&manifest, &records)?;
    write_counters(&out_dir.join(format!("{split}_counters.json")), &counters)?;
    Ok(StreamReport { manifest, counters, items: records.len() as u32, charts: chart_idx as u32 })
}

/// A manifest record with its images loaded into memory.
#[derive(Debug, Clone)]
pub struct LoadedItem {
    pub record: ManifestRecord,
    pub question: Question,
    pub image: Image,
    pub pres: Option<Image>,
    pub abl: Image,
}

/// Loads a split's records and images. Paths resolve relative to the
/// manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<LoadedItem>, GenError> {
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let records = read_manifest(manifest_path)?;
    let mut items = Vec::with_capacity(records.len());
    for record in records {
        let question = record.to_question();
        let image = read_pgm(&root.join(&record.image))?;
        let pres = match &record.pres_image {
            Some(rel) => Some(read_pgm(&root.join(rel))?),
            None => None,
        };
        let abl = read_pgm(&root.join(&record.abl_image))?;
        if pres.as_ref().is_some_and(|p| (p.width, p.height) != (image.width, image.height))
            || (abl.width, abl.height) != (image.width, image.height)
        {
            return Err(GenError::Manifest(format!(
                "item {}: view image dimensions differ from the base image",
                record.id
            )));
        }
        items.push(LoadedItem { record, question, image, pres, abl });
    }
    Ok(items)
}

/// Re-checks a built split from disk: every record's question must be
/// structurally valid, oracle-answerable to its stored index on the parsed
/// chart, and its counterfactual views must satisfy the view contract.
/// Returns the number of verified items.
pub fn verify_dataset(manifest_path: &Path) -> Result<u32, GenError> {
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let records = read_manifest(manifest_path)?;
    let mut charts: std::collections::HashMap<String, ChartSpec> = std::collections::HashMap::new();
    let mut verified = 0;
    for record in &records {
        let spec = match charts.get(&record.dsl_path) {
            Some(s) => s.clone(),
            None => {
                let text = fs::read_to_string(root.join(&record.dsl_path))?;
                let spec = parse_chart(&text)
                    .map_err(|e| GenError::Manifest(format!("{}: {e}", record.dsl_path)))?;
                charts.insert(record.dsl_path.clone(), spec.clone());
                spec
            }
        };
        let question = record.to_question();
        if !validate_question(&spec, &question) {
            return Err(GenError::Manifest(format!(
                "item {}: stored question failed validation against its chart",
                record.id
            )));
        }
        verified += 1;
    }
    Ok(verified)
}
