//! The curriculum engine: batched rollout collection under a frozen
//! snapshot, stage-composed objectives on one tape per batch, AdamW updates,
//! per-step metrics, and stage-boundary checkpoints.
//!
//! Every random draw derives from `(master_seed, label, indices)`, never
//! from accumulated generator state, so a run is a pure function of
//! `(dataset, config, mode, master seed)` and can be paused and resumed at
//! any batch boundary without changing a single byte of output.

use super::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use super::data::{load_split, TrainItem, ViewSource};
use super::eval::{evaluate, EvalReport};
use super::{Mode, TrainerError};
use crate::policy::{
    adamw_update, forward, logprob_node, AdamHyper, AdamState, Graph, ParamLeaves, PolicyParams,
};
use crate::rng::{derive_seed, rng_from};
use crate::shaping::{
    compute_reward, consistency_node, grpo_loss_node, kl_divergence, separation_node,
    stage_objective, GrpoInputs, LossReport, Rollout, RolloutGroup, StageTag, TrainConfig,
    METRICS_HEADER,
};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// One schedule entry: which objective composition runs, on which subset,
/// for how many epochs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSpec {
    pub tag: StageTag,
    /// Restrict to items that have a preserving view.
    pub pres_only: bool,
    pub epochs: u32,
}

/// The schedule for each mode. The two-phase modes share epoch counts so
/// mode comparisons hold the optimization budget fixed; `joint` folds both
/// terms into one phase of the combined length.
pub fn phase_plan(mode: Mode, cfg: &TrainConfig) -> Vec<PhaseSpec> {
    match mode {
        Mode::Bips | Mode::GrpoOnly | Mode::RandomMask => vec![
            PhaseSpec { tag: StageTag::Stage1, pres_only: true, epochs: cfg.stage1_epochs },
            PhaseSpec { tag: StageTag::Stage2, pres_only: false, epochs: cfg.stage2_epochs },
        ],
        Mode::Joint => vec![PhaseSpec {
            tag: StageTag::Joint,
            pres_only: false,
            epochs: cfg.stage1_epochs + cfg.stage2_epochs,
        }],
        Mode::Reversed => vec![
            PhaseSpec { tag: StageTag::RevSep, pres_only: false, epochs: cfg.stage1_epochs },
            PhaseSpec { tag: StageTag::RevCons, pres_only: true, epochs: cfg.stage2_epochs },
        ],
    }
}

fn effective_coeffs(mode: Mode, cfg: &TrainConfig) -> (f64, f64) {
    if mode == Mode::GrpoOnly {
        (0.0, 0.0)
    } else {
        (cfg.alpha, cfg.beta)
    }
}

/// Samples `group_size` rollouts for one item under a frozen snapshot and
/// fills rewards and advantages.
pub fn collect_group(
    item: &TrainItem,
    snapshot: &PolicyParams,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutGroup, TrainerError> {
    let dist = forward(snapshot, &item.features, cfg.temperature)?;
    let rollouts = (0..cfg.group_size)
        .map(|_| {
            let opt = dist.sample(rng) as u8;
            Rollout {
                option_index: opt,
                old_logprob: dist.logprobs[opt as usize],
                reward: compute_reward(opt, item.answer_index),
            }
        })
        .collect();
    Ok(RolloutGroup::new(item.index, rollouts)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOutcome {
    pub tag: String,
    pub end_step: u64,
    pub checkpoint: String,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumReport {
    pub mode: String,
    pub master_seed: u64,
    pub final_step: u64,
    pub phases: Vec<PhaseOutcome>,
    pub final_eval: EvalReport,
}

impl CurriculumReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Pause and checkpoint once this many optimizer steps have completed.
    pub stop_after_steps: Option<u64>,
}

#[derive(Debug)]
pub enum RunOutcome {
    Completed(CurriculumReport),
    Paused { checkpoint: PathBuf, step: u64 },
}

impl RunOutcome {
    pub fn completed(self) -> Result<CurriculumReport, TrainerError> {
        match self {
            RunOutcome::Completed(report) => Ok(report),
            RunOutcome::Paused { step, .. } => Err(TrainerError::Config(format!(
                "run paused at step {step} instead of completing"
            ))),
        }
    }
}

struct Engine {
    cfg: TrainConfig,
    mode: Mode,
    master_seed: u64,
    alpha: f64,
    beta: f64,
    plan: Vec<PhaseSpec>,
    train: Vec<TrainItem>,
    heldout: Vec<TrainItem>,
    out_dir: PathBuf,
    params: PolicyParams,
    adam: AdamState,
    ref_params: PolicyParams,
    step: u64,
}

/// Trains `mode` from a fresh policy on the dataset under `dataset_dir`,
/// writing `metrics.csv`, per-phase checkpoints and eval reports, `eval.json`
/// (final held-out report), and `report.json` into `out_dir`.
pub fn run_curriculum(
    cfg: &TrainConfig,
    mode: Mode,
    dataset_dir: &Path,
    master_seed: u64,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome, TrainerError> {
    cfg.check()?;
    let source = ViewSource::for_mode(mode);
    let train = load_split(dataset_dir, "train", cfg.pooled, source, master_seed)?;
    let heldout = load_split(dataset_dir, "eval", cfg.pooled, source, master_seed)?;
    let params = PolicyParams::init(
        train.feature_dim,
        cfg.hidden as usize,
        derive_seed(master_seed, "init", &[]),
    );
    let n = params.len();
    fs::create_dir_all(out_dir)?;
    let mut engine = Engine {
        cfg: cfg.clone(),
        mode,
        master_seed,
        alpha: 0.0,
        beta: 0.0,
        plan: phase_plan(mode, cfg),
        train: train.items,
        heldout: heldout.items,
        out_dir: out_dir.to_path_buf(),
        ref_params: params.clone(),
        params,
        adam: AdamState::new(n),
        step: 0,
    };
    (engine.alpha, engine.beta) = effective_coeffs(mode, cfg);

    let metrics_path = out_dir.join("metrics.csv");
    let mut metrics = BufWriter::new(fs::File::create(&metrics_path)?);
    writeln!(metrics, "{METRICS_HEADER}")?;
    engine.run((0, 0, 0), opts, &mut metrics)
}

/// Continues a paused run. The dataset is reloaded from `dataset_dir` under
/// the checkpoint's own seed and mode; `metrics.csv` in `out_dir` is
/// appended to, so resuming in the original directory reproduces the
/// uninterrupted run's outputs byte for byte.
pub fn resume_curriculum(
    ckpt_path: &Path,
    dataset_dir: &Path,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome, TrainerError> {
    let ck = load_checkpoint(ckpt_path)?;
    let cfg = ck.config.clone();
    let source = ViewSource::for_mode(ck.mode);
    let train = load_split(dataset_dir, "train", cfg.pooled, source, ck.master_seed)?;
    let heldout = load_split(dataset_dir, "eval", cfg.pooled, source, ck.master_seed)?;
    if train.feature_dim != ck.params.input_dim {
        return Err(TrainerError::Data(format!(
            "checkpoint expects input dimension {}, dataset produces {}",
            ck.params.input_dim, train.feature_dim
        )));
    }
    fs::create_dir_all(out_dir)?;
    let mut engine = Engine {
        alpha: 0.0,
        beta: 0.0,
        plan: phase_plan(ck.mode, &cfg),
        mode: ck.mode,
        master_seed: ck.master_seed,
        train: train.items,
        heldout: heldout.items,
        out_dir: out_dir.to_path_buf(),
        params: ck.params,
        adam: ck.adam,
        ref_params: ck.ref_params,
        step: ck.step,
        cfg,
    };
    (engine.alpha, engine.beta) = effective_coeffs(engine.mode, &engine.cfg);

    let metrics_path = out_dir.join("metrics.csv");
    let fresh = !metrics_path.exists();
    let mut metrics =
        BufWriter::new(fs::OpenOptions::new().create(true).append(true).open(&metrics_path)?);
    if fresh {
        writeln!(metrics, "{METRICS_HEADER}")?;
    }
    engine.run((ck.phase_index, ck.epoch, ck.batch), opts, &mut metrics)
}

impl Engine {
    fn checkpoint_at(&self, stage: StageTag, position: (u32, u32, u32)) -> Checkpoint {
        Checkpoint {
            master_seed: self.master_seed,
            mode: self.mode,
            stage,
            phase_index: position.0,
            epoch: position.1,
            batch: position.2,
            step: self.step,
            params: self.params.clone(),
            adam: self.adam.clone(),
            ref_params: self.ref_params.clone(),
            config: self.cfg.clone(),
        }
    }

    fn run(
        &mut self,
        start: (u32, u32, u32),
        opts: &RunOptions,
        metrics: &mut BufWriter<fs::File>,
    ) -> Result<RunOutcome, TrainerError> {
        let mut phases_out = Vec::new();
        // When resuming, rebuild the outcomes of already-finished phases
        // from their boundary checkpoints so the final report still covers
        // the whole schedule; evaluation is deterministic, so the entries
        // match the uninterrupted run's exactly.
        for p in 0..(start.0 as usize).min(self.plan.len()) {
            let tag = self.plan[p].tag;
            let ck_name = format!("ckpt_phase{p}_{}.bpck", tag.name());
            let path = self.out_dir.join(&ck_name);
            if !path.exists() {
                continue;
            }
            let ck = load_checkpoint(&path)?;
            let eval = evaluate(&ck.params, &self.heldout)?;
            phases_out.push(PhaseOutcome {
                tag: tag.name().to_string(),
                end_step: ck.step,
                checkpoint: ck_name,
                eval,
            });
        }
        for p in (start.0 as usize)..self.plan.len() {
            let phase = self.plan[p].clone();
            let entering_fresh = p as u32 > start.0 || (start.1 == 0 && start.2 == 0);
            if entering_fresh {
                self.ref_params = self.params.clone();
            }
            let subset: Vec<usize> = self
                .train
                .iter()
                .enumerate()
                .filter(|(_, it)| !phase.pres_only || it.pres_features.is_some())
                .map(|(i, _)| i)
                .collect();
            if subset.is_empty() {
                return Err(TrainerError::Config(format!(
                    "phase {} has an empty item subset",
                    phase.tag.name()
                )));
            }

            let epoch0 = if p as u32 == start.0 { start.1 } else { 0 };
            for epoch in epoch0..phase.epochs {
                let mut order = subset.clone();
                let mut rng = rng_from(self.master_seed, "shuffle", &[p as u64, u64::from(epoch)]);
                shuffle(&mut order, &mut rng);
                let batch0 =
                    if p as u32 == start.0 && epoch == start.1 { start.2 as usize } else { 0 };
                let chunks: Vec<&[usize]> = order.chunks(self.cfg.batch as usize).collect();
                for (b, chunk) in chunks.iter().enumerate().skip(batch0) {
                    if let Some(cap) = opts.stop_after_steps {
                        if self.step >= cap {
                            let path = self.out_dir.join("ckpt_paused.bpck");
                            let ck =
                                self.checkpoint_at(phase.tag, (p as u32, epoch, b as u32));
                            save_checkpoint(&path, &ck)?;
                            metrics.flush()?;
                            return Ok(RunOutcome::Paused { checkpoint: path, step: self.step });
                        }
                    }
                    self.train_batch(p as u32, epoch, b as u32, phase.tag, chunk, metrics)?;
                }
            }

            let ck_name = format!("ckpt_phase{p}_{}.bpck", phase.tag.name());
            let ck = self.checkpoint_at(phase.tag, (p as u32 + 1, 0, 0));
            save_checkpoint(&self.out_dir.join(&ck_name), &ck)?;
            let eval = evaluate(&self.params, &self.heldout)?;
            let eval_name = format!("eval_phase{p}_{}.json", phase.tag.name());
            fs::write(self.out_dir.join(&eval_name), eval.to_json() + "\n")?;
            phases_out.push(PhaseOutcome {
                tag: phase.tag.name().to_string(),
                end_step: self.step,
                checkpoint: ck_name,
                eval,
            });
        }
        metrics.flush()?;

        let final_eval = match phases_out.last() {
            Some(last) => last.eval.clone(),
            // Resuming past the end of the plan: just evaluate.
            None => evaluate(&self.params, &self.heldout)?,
        };
        fs::write(self.out_dir.join("eval.json"), final_eval.to_json() + "\n")?;
        let report = CurriculumReport {
            mode: self.mode.name().to_string(),
            master_seed: self.master_seed,
            final_step: self.step,
            phases: phases_out,
            final_eval,
        };
        fs::write(self.out_dir.join("report.json"), report.to_json() + "\n")?;
        Ok(RunOutcome::Completed(report))
    }

    fn train_batch(
        &mut self,
        phase: u32,
        epoch: u32,
        batch_idx: u32,
        tag: StageTag,
        chunk: &[usize],
        metrics: &mut BufWriter<fs::File>,
    ) -> Result<(), TrainerError> {
        let snapshot = self.params.clone();
        let mut groups = Vec::with_capacity(chunk.len());
        for &ti in chunk {
            let item = &self.train[ti];
            let mut rng = rng_from(
                self.master_seed,
                "rollout",
                &[u64::from(phase), u64::from(epoch), u64::from(batch_idx), item.index as u64],
            );
            groups.push(collect_group(item, &snapshot, &self.cfg, &mut rng)?);
        }

        let t = self.cfg.temperature;
        let mut g = Graph::new();
        let leaves = ParamLeaves::insert(&mut g, &self.params);
        let mut grpo_nodes = Vec::with_capacity(chunk.len());
        let mut cons_nodes = Vec::new();
        let mut sep_nodes = Vec::new();
        let mut kl_ref_sum = 0.0;
        let mut clip_sum = 0.0;
        let mut kl_pres_sum = 0.0;
        let mut pres_count = 0u32;
        let mut kl_abl_sum = 0.0;
        let mut correct = 0u32;

        for (k, &ti) in chunk.iter().enumerate() {
            let item = &self.train[ti];
            let group = &groups[k];
            let lp = logprob_node(&mut g, &leaves, &item.features, t);
            let here = forward(&self.params, &item.features, t)?;
            let ref_lp = forward(&self.ref_params, &item.features, t)?.logprobs;
            let options: Vec<u8> = group.rollouts.iter().map(|r| r.option_index).collect();
            let old_lps: Vec<f64> = group.rollouts.iter().map(|r| r.old_logprob).collect();
            correct += group.rollouts.iter().filter(|r| r.reward.correct).count() as u32;
            let gn = grpo_loss_node(
                &mut g,
                lp,
                &GrpoInputs {
                    options: &options,
                    old_logprobs: &old_lps,
                    advantages: &group.advantages,
                    ref_logprobs: ref_lp,
                    epsilon: self.cfg.epsilon,
                    gamma: self.cfg.gamma,
                },
            )?;
            kl_ref_sum += g.scalar(gn.kl_to_ref);
            clip_sum += gn.clip_fraction;
            grpo_nodes.push(gn.loss);

            if tag.uses_consistency() {
                match &item.pres_features {
                    Some(pf) => {
                        let pres = forward(&self.params, pf, t)?;
                        cons_nodes.push(consistency_node(
                            &mut g,
                            lp,
                            &pres.logprobs,
                            group.correct_fraction(),
                            self.cfg.c_cons,
                        ));
                        kl_pres_sum += kl_divergence(&here, &pres)?;
                        pres_count += 1;
                    }
                    None => cons_nodes.push(g.scalar_const(0.0)),
                }
            }
            if tag.uses_separation() {
                let abl = forward(&self.params, &item.abl_features, t)?;
                sep_nodes.push(separation_node(&mut g, lp, &abl.logprobs, self.cfg.c_sep));
                kl_abl_sum += kl_divergence(&here, &abl)?;
            }
        }

        let l_grpo = g.mean(&grpo_nodes);
        let l_cons = tag.uses_consistency().then(|| g.mean(&cons_nodes));
        let l_sep = tag.uses_separation().then(|| g.mean(&sep_nodes));
        let l_total = stage_objective(&mut g, tag, l_grpo, l_cons, l_sep, self.alpha, self.beta)?;

        let grads = g.backward(l_total);
        let flat = leaves.flat_grad(&grads);
        adamw_update(
            self.params.as_mut_slice(),
            &flat,
            &mut self.adam,
            &AdamHyper { lr: self.cfg.lr, ..AdamHyper::default() },
        );
        self.step += 1;

        let n = chunk.len() as f64;
        let report = LossReport {
            l_grpo: g.scalar(l_grpo),
            l_cons: l_cons.map_or(0.0, |id| g.scalar(id)),
            l_sep: l_sep.map_or(0.0, |id| g.scalar(id)),
            l_total: g.scalar(l_total),
            kl_to_ref: kl_ref_sum / n,
            kl_to_pres: if pres_count > 0 { kl_pres_sum / f64::from(pres_count) } else { 0.0 },
            kl_to_abl: if l_sep.is_some() { kl_abl_sum / n } else { 0.0 },
            clip_fraction: clip_sum / n,
        };
        let accuracy =
            f64::from(correct) / (n * f64::from(self.cfg.group_size));
        writeln!(metrics, "{}", report.csv_row(self.step, tag, accuracy))?;
        Ok(())
    }
}

/// Fisher-Yates with draws in a fixed order, so the permutation is a pure
/// function of the generator seed.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::Rng;
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::Reward;
    use crate::viewgen::{build_dataset, GenConfig, TemplateId};

    fn mini_gen() -> GenConfig {
        GenConfig { train_items: 8, eval_items: 4, ..GenConfig::default() }
    }

    fn mini_cfg() -> TrainConfig {
        TrainConfig {
            batch: 4,
            lr: 0.02,
            stage1_epochs: 1,
            stage2_epochs: 1,
            hidden: 8,
            pooled: 8,
            ..TrainConfig::default()
        }
    }

    fn synthetic_item(index: usize, dim: usize, answer: u8) -> TrainItem {
        let features: Vec<f64> = (0..dim).map(|j| ((index * 17 + j) as f64 * 0.31).cos()).collect();
        TrainItem {
            index,
            id: format!("it_{index}"),
            template: TemplateId::ALL[index % TemplateId::ALL.len()],
            answer_index: answer,
            features: features.clone(),
            pres_features: Some(features.iter().map(|v| v * 0.9).collect()),
            abl_features: features.iter().map(|v| v * 0.1).collect(),
        }
    }

    #[test]
    fn plans_match_the_schedules() {
        let cfg = TrainConfig::default();
        for mode in [Mode::Bips, Mode::GrpoOnly, Mode::RandomMask] {
            let plan = phase_plan(mode, &cfg);
            assert_eq!(plan.len(), 2);
            assert_eq!(plan[0], PhaseSpec { tag: StageTag::Stage1, pres_only: true, epochs: 5 });
            assert_eq!(plan[1], PhaseSpec { tag: StageTag::Stage2, pres_only: false, epochs: 3 });
        }
        let joint = phase_plan(Mode::Joint, &cfg);
        assert_eq!(joint, vec![PhaseSpec { tag: StageTag::Joint, pres_only: false, epochs: 8 }]);
        let rev = phase_plan(Mode::Reversed, &cfg);
        assert_eq!(rev[0], PhaseSpec { tag: StageTag::RevSep, pres_only: false, epochs: 5 });
        assert_eq!(rev[1], PhaseSpec { tag: StageTag::RevCons, pres_only: true, epochs: 3 });
    }

    #[test]
    fn collect_group_fills_rewards_and_advantages() {
        let item = synthetic_item(0, 10, 2);
        let cfg = TrainConfig { group_size: 8, ..TrainConfig::default() };
        let params = PolicyParams::init(10, 6, 4);

        let mut rng = rng_from(1, "rollout", &[0]);
        let a = collect_group(&item, &params, &cfg, &mut rng).unwrap();
        assert_eq!(a.rollouts.len(), 8);
        let mean: f64 = a.advantages.iter().sum::<f64>() / 8.0;
        assert!(mean.abs() < 1e-9);
        for r in &a.rollouts {
            assert_eq!(r.reward, compute_reward(r.option_index, 2));
        }

        let mut rng = rng_from(1, "rollout", &[0]);
        let b = collect_group(&item, &params, &cfg, &mut rng).unwrap();
        assert_eq!(a, b);

        // A policy that always answers correctly has zero-variance rewards.
        let mut sure = PolicyParams::zeros(10, 6);
        let nb = sure.len();
        sure.as_mut_slice()[nb - 4 + 2] = 50.0;
        let mut rng = rng_from(2, "rollout", &[0]);
        let c = collect_group(&item, &sure, &cfg, &mut rng).unwrap();
        assert!(c.rollouts.iter().all(|r| r.reward == Reward { format_ok: true, correct: true }));
        assert_eq!(c.advantages, vec![0.0; 8]);
        assert_eq!(c.correct_fraction(), 1.0);
    }

    #[test]
    fn curriculum_runs_deterministically_and_isolates_stages() {
        let data_dir = tempfile::tempdir().unwrap();
        build_dataset(&mini_gen(), 11, data_dir.path()).unwrap();
        let cfg = mini_cfg();

        let run = |out: &Path| {
            run_curriculum(&cfg, Mode::Bips, data_dir.path(), 3, out, &RunOptions::default())
                .unwrap()
                .completed()
                .unwrap()
        };
        let out_a = tempfile::tempdir().unwrap();
        let out_b = tempfile::tempdir().unwrap();
        let ra = run(out_a.path());
        let rb = run(out_b.path());
        assert_eq!(ra, rb);
        for name in ["metrics.csv", "eval.json", "report.json", "ckpt_phase0_stage1.bpck", "ckpt_phase1_stage2.bpck"] {
            assert_eq!(
                fs::read(out_a.path().join(name)).unwrap(),
                fs::read(out_b.path().join(name)).unwrap(),
                "{name} differs between identical runs"
            );
        }

        let csv = fs::read_to_string(out_a.path().join("metrics.csv")).unwrap();
        let mut saw = (false, false);
        for line in csv.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 11);
            let (stage, l_cons, l_sep) = (cells[1], cells[3], cells[4]);
            match stage {
                "stage1" => {
                    assert_eq!(l_sep, "0", "separation must stay inert in stage 1");
                    saw.0 = true;
                }
                "stage2" => {
                    assert_eq!(l_cons, "0", "consistency must stay inert in stage 2");
                    saw.1 = true;
                }
                other => panic!("unexpected stage {other}"),
            }
        }
        assert!(saw.0 && saw.1);
        assert_eq!(ra.phases.len(), 2);
        assert_eq!(ra.final_eval, ra.phases[1].eval);
    }

    #[test]
    fn pause_and_resume_reproduce_the_uninterrupted_run() {
        let data_dir = tempfile::tempdir().unwrap();
        build_dataset(&mini_gen(), 12, data_dir.path()).unwrap();
        let cfg = mini_cfg();

        let full = tempfile::tempdir().unwrap();
        run_curriculum(&cfg, Mode::Bips, data_dir.path(), 9, full.path(), &RunOptions::default())
            .unwrap()
            .completed()
            .unwrap();

        let split = tempfile::tempdir().unwrap();
        let paused = run_curriculum(
            &cfg,
            Mode::Bips,
            data_dir.path(),
            9,
            split.path(),
            &RunOptions { stop_after_steps: Some(2) },
        )
        .unwrap();
        let RunOutcome::Paused { checkpoint, step } = paused else {
            panic!("expected a paused run");
        };
        assert_eq!(step, 2);
        resume_curriculum(&checkpoint, data_dir.path(), split.path(), &RunOptions::default())
            .unwrap()
            .completed()
            .unwrap();

        for name in ["metrics.csv", "eval.json", "report.json", "ckpt_phase1_stage2.bpck"] {
            assert_eq!(
                fs::read(full.path().join(name)).unwrap(),
                fs::read(split.path().join(name)).unwrap(),
                "{name} differs after resume"
            );
        }
    }

    #[test]
    fn grpo_only_equals_bips_with_zero_coefficients() {
        let data_dir = tempfile::tempdir().unwrap();
        build_dataset(&mini_gen(), 13, data_dir.path()).unwrap();

        let zeroed = TrainConfig { alpha: 0.0, beta: 0.0, ..mini_cfg() };
        let out_a = tempfile::tempdir().unwrap();
        let out_b = tempfile::tempdir().unwrap();
        run_curriculum(&mini_cfg(), Mode::GrpoOnly, data_dir.path(), 4, out_a.path(), &RunOptions::default())
            .unwrap()
            .completed()
            .unwrap();
        run_curriculum(&zeroed, Mode::Bips, data_dir.path(), 4, out_b.path(), &RunOptions::default())
            .unwrap()
            .completed()
            .unwrap();

        let ck_a = load_checkpoint(&out_a.path().join("ckpt_phase1_stage2.bpck")).unwrap();
        let ck_b = load_checkpoint(&out_b.path().join("ckpt_phase1_stage2.bpck")).unwrap();
        assert_eq!(ck_a.params, ck_b.params);
        assert_eq!(ck_a.adam, ck_b.adam);
        assert_eq!(
            fs::read(out_a.path().join("metrics.csv")).unwrap(),
            fs::read(out_b.path().join("metrics.csv")).unwrap()
        );
    }

    /// An independent clipped-surrogate policy-gradient loop: same data
    /// order, rollouts, and optimizer, but the objective is assembled
    /// directly without any of the shaping composition machinery.
    fn plain_pg_final_params(
        items: &[TrainItem],
        plan: &[PhaseSpec],
        cfg: &TrainConfig,
        master_seed: u64,
        feature_dim: usize,
    ) -> PolicyParams {
        let mut params = PolicyParams::init(
            feature_dim,
            cfg.hidden as usize,
            derive_seed(master_seed, "init", &[]),
        );
        let mut adam = AdamState::new(params.len());
        for (p, phase) in plan.iter().enumerate() {
            for epoch in 0..phase.epochs {
                let mut order: Vec<usize> = items
                    .iter()
                    .enumerate()
                    .filter(|(_, it)| !phase.pres_only || it.pres_features.is_some())
                    .map(|(i, _)| i)
                    .collect();
                let mut rng =
                    rng_from(master_seed, "shuffle", &[p as u64, u64::from(epoch)]);
                shuffle(&mut order, &mut rng);
                for (b, chunk) in order.chunks(cfg.batch as usize).enumerate() {
                    let snapshot = params.clone();
                    let mut g = Graph::new();
                    let leaves = ParamLeaves::insert(&mut g, &params);
                    let mut item_losses = Vec::new();
                    for &ti in chunk {
                        let item = &items[ti];
                        let mut rng = rng_from(
                            master_seed,
                            "rollout",
                            &[p as u64, u64::from(epoch), b as u64, item.index as u64],
                        );
                        let dist = forward(&snapshot, &item.features, cfg.temperature).unwrap();
                        let draws: Vec<usize> =
                            (0..cfg.group_size).map(|_| dist.sample(&mut rng)).collect();
                        let rewards: Vec<f64> = draws
                            .iter()
                            .map(|&o| if o as u8 == item.answer_index { 1.0 } else { 0.1 })
                            .collect();
                        let advantages =
                            crate::shaping::group_advantages(&rewards).unwrap();
                        let lp = logprob_node(&mut g, &leaves, &item.features, cfg.temperature);
                        let mut terms = Vec::new();
                        for (d, &opt) in draws.iter().enumerate() {
                            let picked = g.index(lp, opt);
                            let old = g.scalar_const(dist.logprobs[opt]);
                            let diff = g.sub(picked, old);
                            let ratio = g.exp(diff);
                            let lo = g.clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
                            let a = g.scale(ratio, advantages[d]);
                            let c = g.scale(lo, advantages[d]);
                            terms.push(g.min(a, c));
                        }
                        let surr = g.mean(&terms);
                        item_losses.push(g.neg(surr));
                    }
                    let loss = g.mean(&item_losses);
                    let grads = g.backward(loss);
                    let flat = leaves.flat_grad(&grads);
                    adamw_update(
                        params.as_mut_slice(),
                        &flat,
                        &mut adam,
                        &AdamHyper { lr: cfg.lr, ..AdamHyper::default() },
                    );
                }
            }
        }
        params
    }

    #[test]
    fn zero_coefficient_trainer_reduces_to_plain_policy_gradient() {
        let data_dir = tempfile::tempdir().unwrap();
        build_dataset(&mini_gen(), 14, data_dir.path()).unwrap();
        let cfg = TrainConfig { gamma: 0.0, ..mini_cfg() };

        for seed in [1u64, 2, 3, 4, 5] {
            let out = tempfile::tempdir().unwrap();
            run_curriculum(
                &cfg,
                Mode::GrpoOnly,
                data_dir.path(),
                seed,
                out.path(),
                &RunOptions::default(),
            )
            .unwrap()
            .completed()
            .unwrap();
            let ck = load_checkpoint(&out.path().join("ckpt_phase1_stage2.bpck")).unwrap();

            let split =
                load_split(data_dir.path(), "train", cfg.pooled, ViewSource::Edited, seed)
                    .unwrap();
            let plan = phase_plan(Mode::GrpoOnly, &cfg);
            let plain =
                plain_pg_final_params(&split.items, &plan, &cfg, seed, split.feature_dim);
            assert_eq!(ck.params, plain, "seed {seed} diverged from plain PG");
        }
    }

    #[test]
    fn random_mask_trains_without_edited_renders_on_disk() {
        let data_dir = tempfile::tempdir().unwrap();
        build_dataset(&mini_gen(), 15, data_dir.path()).unwrap();
        for entry in fs::read_dir(data_dir.path().join("images")).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().to_string();
            if name.contains("_pres") || name.contains("_abl") {
                fs::remove_file(path).unwrap();
            }
        }
        let out = tempfile::tempdir().unwrap();
        let report = run_curriculum(
            &mini_cfg(),
            Mode::RandomMask,
            data_dir.path(),
            6,
            out.path(),
            &RunOptions::default(),
        )
        .unwrap()
        .completed()
        .unwrap();
        assert_eq!(report.phases.len(), 2);
        assert!((0.0..=1.0).contains(&report.final_eval.accuracy));
    }
}
