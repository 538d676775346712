//! `bips` CLI: dataset generation, difficulty filtering, curriculum
//! training, evaluation, coefficient sweeps, and the ablation battery.

use anyhow::{bail, Context, Result};
use bips_core::policy::FeatureConfig;
use bips_core::shaping::TrainConfig;
use bips_core::trainer::{
    ablate_all, evaluate, load_checkpoint, load_split, resume_curriculum, run_curriculum, Mode,
    RunOptions, RunOutcome, SweepCoef, ViewSource,
};
use bips_core::viewgen::{
    build_dataset, difficulty_filter, read_manifest, write_manifest, GenConfig, NetPolicy,
};
use clap::{Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "bips", version, about = "Chart-grounded policy training pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset: charts, questions, views, images, manifests.
    Gen {
        /// key=value generation config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the difficulty filter over a manifest with a trained policy.
    Filter {
        /// Checkpoint whose policy answers the questions.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, default_value_t = 0.85)]
        temperature: f64,
        /// Manifest (.jsonl) inside a dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Where the surviving records are written.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one curriculum mode on a generated dataset.
    Train {
        /// key=value training config; desk-scale defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset directory produced by `gen`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a paused checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Pause after this many optimizer steps, writing ckpt_paused.bpck.
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Evaluate a checkpoint on a manifest; prints the report as JSON.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        /// Manifest (.jsonl) inside a dataset directory.
        #[arg(long)]
        data: PathBuf,
    },
    /// Run one full curriculum per grid value of a single coefficient.
    Sweep {
        #[arg(long, value_parser = parse_coef)]
        coef: SweepCoef,
        /// Comma-separated coefficient values, e.g. 0,0.005,0.01,0.02,0.08
        #[arg(long)]
        grid: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every mode over a set of seeds and tabulate the comparison.
    Ablate {
        /// Run the full battery (the only supported selection).
        #[arg(long)]
        all: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated master seeds.
        #[arg(long, default_value = "1,2,3,4,5")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (bips|grpo_only|joint|reversed|random_mask)"))
}

fn parse_coef(s: &str) -> Result<SweepCoef, String> {
    SweepCoef::parse(s).ok_or_else(|| format!("unknown coefficient `{s}` (alpha|beta)"))
}

fn read_kv(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(String::new()),
    }
}

fn train_config(path: &Option<PathBuf>) -> Result<TrainConfig> {
    match path {
        Some(_) => Ok(TrainConfig::from_kv(&read_kv(path)?)?),
        None => Ok(TrainConfig::desk()),
    }
}

/// Splits `<dir>/<split>.jsonl` into its directory and split name.
fn manifest_parts(manifest: &Path) -> Result<(PathBuf, String)> {
    let dir = manifest.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let split = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .with_context(|| format!("manifest path {} has no stem", manifest.display()))?;
    Ok((dir, split.to_string()))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad grid value `{v}`")))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|v| v.trim().parse::<u64>().with_context(|| format!("bad seed `{v}`")))
        .collect()
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen { config, seed, out } => {
            let cfg = GenConfig::from_kv(&read_kv(&config)?)?;
            let report = build_dataset(&cfg, seed, &out)?;
            for (name, s) in [("train", &report.train), ("eval", &report.eval)] {
                println!(
                    "{name}: {} items from {} charts (generated {}, validated {}, kept {}, edited {})",
                    s.items,
                    s.charts,
                    s.counters.generated,
                    s.counters.validated,
                    s.counters.filtered,
                    s.counters.edited
                );
            }
            println!("wrote {}", out.display());
        }
        Cmd::Filter { policy, k, temperature, data, out, seed } => {
            let ck = load_checkpoint(&policy)?;
            let (dir, _) = manifest_parts(&data)?;
            let gen = GenConfig::from_kv(&fs::read_to_string(dir.join("gen_config.txt"))?)?;
            let features = FeatureConfig {
                image_width: gen.image_width,
                image_height: gen.image_height,
                pooled: ck.config.pooled,
            };
            let net = NetPolicy { params: &ck.params, features };
            let records = read_manifest(&data)?;
            let mut kept = Vec::new();
            for (i, record) in records.iter().enumerate() {
                let image = bips_core::render::read_pgm(&dir.join(&record.image))?;
                let question = record.to_question();
                let verdict = difficulty_filter(
                    &image,
                    &question,
                    &net,
                    k,
                    temperature,
                    bips_core::rng::derive_seed(seed, "refilter", &[i as u64]),
                )?;
                if verdict.keep {
                    let mut r = record.clone();
                    r.difficulty = verdict.difficulty_correct;
                    kept.push(r);
                }
            }
            write_manifest(&out, &kept)?;
            println!("kept {} of {} items (k={k}, temperature={temperature})", kept.len(), records.len());
            println!("wrote {}", out.display());
        }
        Cmd::Train { config, mode, seed, data, out, resume, stop_after } => {
            let opts = RunOptions { stop_after_steps: stop_after };
            let outcome = match resume {
                Some(ckpt) => resume_curriculum(&ckpt, &data, &out, &opts)?,
                None => {
                    let cfg = train_config(&config)?;
                    run_curriculum(&cfg, mode, &data, seed, &out, &opts)?
                }
            };
            match outcome {
                RunOutcome::Completed(report) => {
                    for phase in &report.phases {
                        println!(
                            "phase {}: step {} accuracy {:.4} kl_abl {:.5} ({})",
                            phase.tag,
                            phase.end_step,
                            phase.eval.accuracy,
                            phase.eval.mean_kl_abl,
                            phase.checkpoint
                        );
                    }
                    println!(
                        "final: accuracy {:.4} shortcut {:.4}",
                        report.final_eval.accuracy, report.final_eval.shortcut_score
                    );
                    println!("wrote {}", out.display());
                }
                RunOutcome::Paused { checkpoint, step } => {
                    println!("paused at step {step}: {}", checkpoint.display());
                }
            }
        }
        Cmd::Eval { ckpt, data } => {
            let ck = load_checkpoint(&ckpt)?;
            let (dir, split) = manifest_parts(&data)?;
            let loaded = load_split(
                &dir,
                &split,
                ck.config.pooled,
                ViewSource::for_mode(ck.mode),
                ck.master_seed,
            )?;
            if loaded.feature_dim != ck.params.input_dim {
                bail!(
                    "checkpoint expects input dimension {}, dataset produces {}",
                    ck.params.input_dim,
                    loaded.feature_dim
                );
            }
            let report = evaluate(&ck.params, &loaded.items)?;
            println!("{}", report.to_json());
        }
        Cmd::Sweep { coef, grid, config, data, seed, out } => {
            let cfg = train_config(&config)?;
            let grid = parse_grid(&grid)?;
            let points = bips_core::trainer::sweep_coefficients(&cfg, coef, &grid, &data, seed, &out)?;
            for p in &points {
                println!("{}={} accuracy {:.4}", coef.name(), p.value, p.accuracy);
            }
            println!("wrote {}", out.join(format!("sweep_{}.csv", coef.name())).display());
        }
        Cmd::Ablate { all, config, data, seeds, out } => {
            if !all {
                bail!("only the full battery is supported; pass --all");
            }
            let cfg = train_config(&config)?;
            let seeds = parse_seeds(&seeds)?;
            let rows = ablate_all(&cfg, &data, &seeds, &out)?;
            println!("mode,seed,accuracy,shortcut_score,kl_abl_mid,kl_abl_final");
            for r in &rows {
                println!(
                    "{},{},{:.4},{:.4},{:.5},{:.5}",
                    r.mode.name(),
                    r.seed,
                    r.accuracy,
                    r.shortcut_score,
                    r.kl_abl_mid,
                    r.kl_abl_final
                );
            }
            println!("wrote {}", out.join("ablate.csv").display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_paths_split_into_dir_and_stem() {
        let (dir, split) = manifest_parts(Path::new("/data/run1/train.jsonl")).unwrap();
        assert_eq!(dir, Path::new("/data/run1"));
        assert_eq!(split, "train");
        let (dir, split) = manifest_parts(Path::new("eval.jsonl")).unwrap();
        assert_eq!(dir, Path::new(""));
        assert_eq!(split, "eval");
    }

    #[test]
    fn grids_and_seeds_parse() {
        assert_eq!(parse_grid("0,0.005, 0.08").unwrap(), vec![0.0, 0.005, 0.08]);
        assert!(parse_grid("0,x").is_err());
        assert_eq!(parse_seeds("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_seeds("-1").is_err());
    }

    #[test]
    fn cli_parses_the_documented_forms() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "bips", "train", "--mode", "grpo_only", "--seed", "3", "--data", "d", "--out", "o",
        ])
        .unwrap();
        match cli.cmd {
            Cmd::Train { mode, seed, .. } => {
                assert_eq!(mode, Mode::GrpoOnly);
                assert_eq!(seed, 3);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["bips", "train", "--mode", "bogus", "--data", "d", "--out", "o"]).is_err());
        let cli = Cli::try_parse_from([
            "bips", "sweep", "--coef", "alpha", "--grid", "0,0.01", "--data", "d", "--out", "o",
        ])
        .unwrap();
        match cli.cmd {
            Cmd::Sweep { coef, .. } => assert_eq!(coef, SweepCoef::Alpha),
            _ => panic!("wrong subcommand"),
        }
    }
}
