//! Coefficient sweeps and the full ablation battery.

use super::run::{run_curriculum, CurriculumReport, RunOptions};
use super::{Mode, TrainerError};
use crate::shaping::TrainConfig;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepCoef {
    Alpha,
    Beta,
}

impl SweepCoef {
    pub fn name(self) -> &'static str {
        match self {
            SweepCoef::Alpha => "alpha",
            SweepCoef::Beta => "beta",
        }
    }

    pub fn parse(name: &str) -> Option<SweepCoef> {
        [SweepCoef::Alpha, SweepCoef::Beta].into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub accuracy: f64,
    pub report: CurriculumReport,
}

/// One full curriculum run per grid value, varying a single coefficient
/// while the other is pinned to 0, all under the same master seed and data.
/// Writes `sweep_<coef>.csv` plus one run directory per grid point.
pub fn sweep_coefficients(
    base: &TrainConfig,
    coef: SweepCoef,
    grid: &[f64],
    dataset_dir: &Path,
    master_seed: u64,
    out_dir: &Path,
) -> Result<Vec<SweepPoint>, TrainerError> {
    if grid.is_empty() {
        return Err(TrainerError::Config("sweep grid is empty".to_string()));
    }
    fs::create_dir_all(out_dir)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut csv = String::from("coef,value,accuracy\n");
    for &value in grid {
        let cfg = match coef {
            SweepCoef::Alpha => TrainConfig { alpha: value, beta: 0.0, ..base.clone() },
            SweepCoef::Beta => TrainConfig { alpha: 0.0, beta: value, ..base.clone() },
        };
        let run_dir = out_dir.join(format!("{}_{value}", coef.name()));
        let report =
            run_curriculum(&cfg, Mode::Bips, dataset_dir, master_seed, &run_dir, &RunOptions::default())?
                .completed()?;
        let accuracy = report.final_eval.accuracy;
        csv.push_str(&format!("{},{value},{accuracy}\n", coef.name()));
        points.push(SweepPoint { value, accuracy, report });
    }
    fs::write(out_dir.join(format!("sweep_{}.csv", coef.name())), csv)?;
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub mode: Mode,
    pub seed: u64,
    pub accuracy: f64,
    pub shortcut_score: f64,
    /// Held-out KL(pi(I) || pi(I_abl)) at the first phase boundary.
    pub kl_abl_mid: f64,
    /// Same divergence after the full schedule.
    pub kl_abl_final: f64,
}

/// Runs every mode over the given seeds on a shared dataset and collects the
/// comparison table. Writes `ablate.csv` plus one run directory per cell.
pub fn ablate_all(
    cfg: &TrainConfig,
    dataset_dir: &Path,
    seeds: &[u64],
    out_dir: &Path,
) -> Result<Vec<AblationRow>, TrainerError> {
    if seeds.is_empty() {
        return Err(TrainerError::Config("ablation needs at least one seed".to_string()));
    }
    fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    let mut csv = String::from("mode,seed,accuracy,shortcut_score,kl_abl_mid,kl_abl_final\n");
    for mode in Mode::ALL {
        for &seed in seeds {
            let run_dir = out_dir.join(format!("{}_{seed}", mode.name()));
            let report =
                run_curriculum(cfg, mode, dataset_dir, seed, &run_dir, &RunOptions::default())?
                    .completed()?;
            let row = AblationRow {
                mode,
                seed,
                accuracy: report.final_eval.accuracy,
                shortcut_score: report.final_eval.shortcut_score,
                kl_abl_mid: report.phases[0].eval.mean_kl_abl,
                kl_abl_final: report.final_eval.mean_kl_abl,
            };
            csv.push_str(&format!(
                "{},{seed},{},{},{},{}\n",
                mode.name(),
                row.accuracy,
                row.shortcut_score,
                row.kl_abl_mid,
                row.kl_abl_final
            ));
            rows.push(row);
        }
    }
    fs::write(out_dir.join("ablate.csv"), csv)?;
    Ok(rows)
}
