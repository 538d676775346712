//! Curriculum training harness: rollout collection, the two-stage schedule
//! and its ablation variants, binary checkpoints with bit-exact resume,
//! held-out evaluation, and coefficient sweeps.

mod checkpoint;
mod data;
mod eval;
mod run;
mod sweep;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use data::{load_split, LoadedSplit, TrainItem, ViewSource, MASK_FRACTION, MASK_PATCH};
pub use eval::{evaluate, EvalReport, TemplateAccuracy};
pub use run::{
    collect_group, phase_plan, resume_curriculum, run_curriculum, CurriculumReport, PhaseOutcome,
    PhaseSpec, RunOptions, RunOutcome,
};
pub use sweep::{ablate_all, sweep_coefficients, AblationRow, SweepCoef, SweepPoint};

use crate::policy::PolicyError;
use crate::render::{PgmError, RenderError};
use crate::shaping::ShapingError;
use crate::viewgen::GenError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("data: {0}")]
    Data(String),
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Shaping(#[from] ShapingError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Curriculum variants. All five share seed derivation, so runs with the
/// same master seed see identical data order and rollout draws wherever
/// their schedules overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Bips,
    GrpoOnly,
    Joint,
    Reversed,
    RandomMask,
}

impl Mode {
    pub const ALL: [Mode; 5] =
        [Mode::Bips, Mode::GrpoOnly, Mode::Joint, Mode::Reversed, Mode::RandomMask];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Bips => "bips",
            Mode::GrpoOnly => "grpo_only",
            Mode::Joint => "joint",
            Mode::Reversed => "reversed",
            Mode::RandomMask => "random_mask",
        }
    }

    pub fn parse(name: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == name)
    }

    pub(crate) fn code(self) -> u8 {
        Mode::ALL.iter().position(|m| *m == self).unwrap() as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Mode> {
        Mode::ALL.get(code as usize).copied()
    }

    /// Whether counterpart views are replaced by random patch masking.
    pub fn masked_views(self) -> bool {
        self == Mode::RandomMask
    }
}
