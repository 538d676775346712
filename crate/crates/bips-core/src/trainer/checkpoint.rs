//! Binary checkpoints with a documented byte layout and bit-exact resume.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "BPCK"
//! 4       4     u32 format version (currently 1)
//! 8       8     u64 master seed
//! 16      1     u8  mode code (bips=0, grpo_only=1, joint=2, reversed=3, random_mask=4)
//! 17      1     u8  stage tag (stage1=0, stage2=1, joint=2, rev_sep=3, rev_cons=4)
//! 18      4     u32 phase index (next phase to run, counts from 0)
//! 22      4     u32 epoch within the phase
//! 26      4     u32 batch within the epoch
//! 30      8     u64 optimizer steps completed
//! 38      8     u64 policy input dimension D
//! 46      8     u64 policy hidden width H
//! 54      8     u64 AdamW step counter
//! 62      8N    f64[N] parameters        (N = H*D + H + 4*H + 4)
//! ..      8N    f64[N] AdamW first moment
//! ..      8N    f64[N] AdamW second moment
//! ..      8N    f64[N] reference-policy parameters (phase-entry snapshot)
//! ..      4     u32 config byte length L
//! ..      L     UTF-8 key=value training config
//! ```
//!
//! The `(phase, epoch, batch)` triple points at the next batch to process;
//! together with the master seed it determines all subsequent rollout draws,
//! so resuming reproduces the uninterrupted run byte for byte.

use super::{Mode, TrainerError};
use crate::policy::{AdamState, PolicyParams};
use crate::shaping::{StageTag, TrainConfig};
use std::fs;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"BPCK";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub master_seed: u64,
    pub mode: Mode,
    pub stage: StageTag,
    pub phase_index: u32,
    pub epoch: u32,
    pub batch: u32,
    pub step: u64,
    pub params: PolicyParams,
    pub adam: AdamState,
    pub ref_params: PolicyParams,
    pub config: TrainConfig,
}

fn stage_code(tag: StageTag) -> u8 {
    match tag {
        StageTag::Stage1 => 0,
        StageTag::Stage2 => 1,
        StageTag::Joint => 2,
        StageTag::RevSep => 3,
        StageTag::RevCons => 4,
    }
}

fn stage_from_code(code: u8) -> Option<StageTag> {
    [StageTag::Stage1, StageTag::Stage2, StageTag::Joint, StageTag::RevSep, StageTag::RevCons]
        .get(code as usize)
        .copied()
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), TrainerError> {
    let n = ck.params.len();
    if ck.adam.m.len() != n || ck.adam.v.len() != n || ck.ref_params.len() != n {
        return Err(TrainerError::Checkpoint(format!(
            "inconsistent block lengths: params {n}, m {}, v {}, ref {}",
            ck.adam.m.len(),
            ck.adam.v.len(),
            ck.ref_params.len()
        )));
    }
    let config = ck.config.to_kv().into_bytes();
    let mut out = Vec::with_capacity(62 + 32 * n + 4 + config.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&ck.master_seed.to_le_bytes());
    out.push(ck.mode.code());
    out.push(stage_code(ck.stage));
    out.extend_from_slice(&ck.phase_index.to_le_bytes());
    out.extend_from_slice(&ck.epoch.to_le_bytes());
    out.extend_from_slice(&ck.batch.to_le_bytes());
    out.extend_from_slice(&ck.step.to_le_bytes());
    out.extend_from_slice(&(ck.params.input_dim as u64).to_le_bytes());
    out.extend_from_slice(&(ck.params.hidden as u64).to_le_bytes());
    out.extend_from_slice(&ck.adam.step.to_le_bytes());
    push_f64s(&mut out, ck.params.as_slice());
    push_f64s(&mut out, &ck.adam.m);
    push_f64s(&mut out, &ck.adam.v);
    push_f64s(&mut out, ck.ref_params.as_slice());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    fs::write(path, out)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TrainerError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            TrainerError::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.at))
        })?;
        let slice = &self.bytes[self.at..end];
        self.at = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, TrainerError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, TrainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, TrainerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>, TrainerError> {
        let raw = self.take(count * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, TrainerError> {
    let bytes = fs::read(path)?;
    let mut c = Cursor { bytes: &bytes, at: 0 };
    if c.take(4)? != MAGIC {
        return Err(TrainerError::Checkpoint("bad magic, not a checkpoint file".to_string()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(TrainerError::Checkpoint(format!(
            "unsupported version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let master_seed = c.u64()?;
    let mode_code = c.u8()?;
    let mode = Mode::from_code(mode_code)
        .ok_or_else(|| TrainerError::Checkpoint(format!("unknown mode code {mode_code}")))?;
    let stage_byte = c.u8()?;
    let stage = stage_from_code(stage_byte)
        .ok_or_else(|| TrainerError::Checkpoint(format!("unknown stage code {stage_byte}")))?;
    let phase_index = c.u32()?;
    let epoch = c.u32()?;
    let batch = c.u32()?;
    let step = c.u64()?;
    let input_dim = c.u64()? as usize;
    let hidden = c.u64()? as usize;
    let adam_step = c.u64()?;
    let n = PolicyParams::n_params(input_dim, hidden);
    let params = PolicyParams::from_vec(input_dim, hidden, c.f64s(n)?)?;
    let adam = AdamState { m: c.f64s(n)?, v: c.f64s(n)?, step: adam_step };
    let ref_params = PolicyParams::from_vec(input_dim, hidden, c.f64s(n)?)?;
    let config_len = c.u32()? as usize;
    let config_text = std::str::from_utf8(c.take(config_len)?)
        .map_err(|e| TrainerError::Checkpoint(format!("config block not UTF-8: {e}")))?;
    let config = TrainConfig::from_kv(config_text)
        .map_err(|e| TrainerError::Checkpoint(format!("config block: {e}")))?;
    if c.at != bytes.len() {
        return Err(TrainerError::Checkpoint(format!(
            "{} trailing bytes after config block",
            bytes.len() - c.at
        )));
    }
    Ok(Checkpoint {
        master_seed,
        mode,
        stage,
        phase_index,
        epoch,
        batch,
        step,
        params,
        adam,
        ref_params,
        config,
    })
}
