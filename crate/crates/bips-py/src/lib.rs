//! Python bindings for the chart-grounded training pipeline.
//!
//! The module mirrors the CLI surface: dataset generation, curriculum
//! training, checkpoint evaluation, plus the chart DSL and rasterizer as
//! directly callable pieces. Reports cross the boundary as JSON strings so
//! the Python side stays schema-free.

use bips_core::chartdsl::{parse_chart, serialize_chart};
use bips_core::render::{mask_patches, parse_pgm, pgm_bytes, rasterize, RenderConfig};
use bips_core::shaping::TrainConfig as CoreTrainConfig;
use bips_core::trainer::{
    evaluate, load_checkpoint, load_split, run_curriculum, Checkpoint as CoreCheckpoint, Mode,
    RunOptions, RunOutcome, ViewSource,
};
use bips_core::viewgen::{build_dataset, GenConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use std::path::Path;

fn normalize_chart_impl(dsl: &str) -> Result<String, String> {
    let spec = parse_chart(dsl).map_err(|e| e.to_string())?;
    Ok(serialize_chart(&spec))
}

fn rasterize_chart_impl(dsl: &str, width: u32, height: u32, margin: u32) -> Result<Vec<u8>, String> {
    let spec = parse_chart(dsl).map_err(|e| e.to_string())?;
    let cfg = RenderConfig { width, height, margin };
    let img = rasterize(&spec, &cfg).map_err(|e| e.to_string())?;
    Ok(pgm_bytes(&img))
}

fn mask_image_impl(pgm: &[u8], fraction: f64, patch: u32, seed: u64) -> Result<Vec<u8>, String> {
    let img = parse_pgm(pgm).map_err(|e| e.to_string())?;
    let masked = mask_patches(&img, fraction, patch, seed).map_err(|e| e.to_string())?;
    Ok(pgm_bytes(&masked))
}

fn generate_impl(config_kv: &str, seed: u64, out_dir: &str) -> Result<String, String> {
    let cfg = GenConfig::from_kv(config_kv).map_err(|e| e.to_string())?;
    let report = build_dataset(&cfg, seed, Path::new(out_dir)).map_err(|e| e.to_string())?;
    let side = |s: &bips_core::viewgen::StreamReport| {
        serde_json::json!({
            "manifest": s.manifest.display().to_string(),
            "items": s.items,
            "charts": s.charts,
            "generated": s.counters.generated,
            "validated": s.counters.validated,
            "filtered": s.counters.filtered,
            "edited": s.counters.edited,
        })
    };
    let v = serde_json::json!({ "train": side(&report.train), "eval": side(&report.eval) });
    Ok(serde_json::to_string_pretty(&v).expect("report serializes"))
}

fn train_impl(config_kv: &str, mode: &str, data_dir: &str, seed: u64, out_dir: &str) -> Result<String, String> {
    let cfg = CoreTrainConfig::from_kv(config_kv).map_err(|e| e.to_string())?;
    let mode = Mode::parse(mode).ok_or_else(|| format!("unknown mode `{mode}`"))?;
    let outcome = run_curriculum(
        &cfg,
        mode,
        Path::new(data_dir),
        seed,
        Path::new(out_dir),
        &RunOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    match outcome {
        RunOutcome::Completed(report) => Ok(report.to_json()),
        RunOutcome::Paused { .. } => Err("run paused unexpectedly".into()),
    }
}

fn eval_core(ck: &CoreCheckpoint, manifest: &str) -> Result<String, String> {
    let manifest = Path::new(manifest);
    let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
    let split = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| format!("manifest path {} has no stem", manifest.display()))?;
    let loaded = load_split(dir, split, ck.config.pooled, ViewSource::for_mode(ck.mode), ck.master_seed)
        .map_err(|e| e.to_string())?;
    if loaded.feature_dim != ck.params.input_dim {
        return Err(format!(
            "checkpoint expects input dimension {}, dataset produces {}",
            ck.params.input_dim, loaded.feature_dim
        ));
    }
    let report = evaluate(&ck.params, &loaded.items).map_err(|e| e.to_string())?;
    Ok(report.to_json())
}

fn evaluate_checkpoint_impl(ckpt: &str, manifest: &str) -> Result<String, String> {
    let ck = load_checkpoint(Path::new(ckpt)).map_err(|e| e.to_string())?;
    eval_core(&ck, manifest)
}

fn err(e: String) -> PyErr {
    PyValueError::new_err(e)
}

/// Parses a chart DSL document and reprints it in canonical form.
#[pyfunction]
fn normalize_chart(dsl: &str) -> PyResult<String> {
    normalize_chart_impl(dsl).map_err(err)
}

/// Renders a chart DSL document to PGM bytes.
#[pyfunction]
#[pyo3(signature = (dsl, width = 64, height = 64, margin = 6))]
fn rasterize_chart(py: Python<'_>, dsl: &str, width: u32, height: u32, margin: u32) -> PyResult<Py<PyBytes>> {
    let bytes = rasterize_chart_impl(dsl, width, height, margin).map_err(err)?;
    Ok(PyBytes::new(py, &bytes).unbind())
}

/// Blanks a deterministic fraction of square patches in a PGM image.
#[pyfunction]
#[pyo3(signature = (pgm, fraction = 0.6, patch = 8, seed = 0))]
fn mask_image(py: Python<'_>, pgm: &[u8], fraction: f64, patch: u32, seed: u64) -> PyResult<Py<PyBytes>> {
    let bytes = mask_image_impl(pgm, fraction, patch, seed).map_err(err)?;
    Ok(PyBytes::new(py, &bytes).unbind())
}

/// Builds a dataset from a key=value generation config; returns a JSON
/// summary of both splits.
#[pyfunction]
#[pyo3(signature = (config_kv = "", seed = 0, out_dir = "dataset"))]
fn generate(config_kv: &str, seed: u64, out_dir: &str) -> PyResult<String> {
    generate_impl(config_kv, seed, out_dir).map_err(err)
}

/// Runs one curriculum mode over a generated dataset; returns the run
/// report as JSON.
#[pyfunction]
#[pyo3(signature = (config_kv, mode, data_dir, seed = 0, out_dir = "run"))]
fn train(config_kv: &str, mode: &str, data_dir: &str, seed: u64, out_dir: &str) -> PyResult<String> {
    train_impl(config_kv, mode, data_dir, seed, out_dir).map_err(err)
}

/// Evaluates a checkpoint against a manifest; returns the report as JSON.
#[pyfunction]
fn evaluate_checkpoint(ckpt: &str, manifest: &str) -> PyResult<String> {
    evaluate_checkpoint_impl(ckpt, manifest).map_err(err)
}

/// Training hyperparameters, constructed from key=value text.
#[pyclass(name = "TrainConfig")]
struct PyTrainConfig {
    inner: CoreTrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (kv = ""))]
    fn new(kv: &str) -> PyResult<Self> {
        let inner = CoreTrainConfig::from_kv(kv).map_err(|e| err(e.to_string()))?;
        Ok(PyTrainConfig { inner })
    }

    /// Small-corpus preset sized for minutes-long runs.
    #[staticmethod]
    fn desk() -> PyTrainConfig {
        PyTrainConfig { inner: CoreTrainConfig::desk() }
    }

    fn to_kv(&self) -> String {
        self.inner.to_kv()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn group_size(&self) -> u32 {
        self.inner.group_size
    }

    fn __repr__(&self) -> String {
        format!("TrainConfig({})", self.inner.to_kv().trim_end().replace('\n', ", "))
    }
}

/// A trained policy snapshot loaded from a `.bpck` file.
#[pyclass(name = "Checkpoint")]
struct PyCheckpoint {
    inner: CoreCheckpoint,
}

#[pymethods]
impl PyCheckpoint {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = load_checkpoint(Path::new(path)).map_err(|e| err(e.to_string()))?;
        Ok(PyCheckpoint { inner })
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.name()
    }

    #[getter]
    fn stage(&self) -> &'static str {
        self.inner.stage.name()
    }

    #[getter]
    fn step(&self) -> u64 {
        self.inner.step
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.params.input_dim
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.params.hidden
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.params.len()
    }

    fn params(&self) -> Vec<f64> {
        self.inner.params.as_slice().to_vec()
    }

    fn config_kv(&self) -> String {
        self.inner.config.to_kv()
    }

    /// Evaluates this checkpoint on a manifest; returns the report as JSON.
    fn evaluate(&self, manifest: &str) -> PyResult<String> {
        eval_core(&self.inner, manifest).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Checkpoint(mode={}, stage={}, step={}, n_params={})",
            self.inner.mode.name(),
            self.inner.stage.name(),
            self.inner.step,
            self.inner.params.len()
        )
    }
}

#[pymodule]
fn bips_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_chart, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize_chart, m)?)?;
    m.add_function(wrap_pyfunction!(mask_image, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_checkpoint, m)?)?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyCheckpoint>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DSL: &str = "chart grid=1x1 title=\"demo\"\n\
        panel id=p0 at=0,0 xrange=0..3 yrange=0..4\n\
        series id=s0 kind=line visible=true points=(0,1)(1,2)(2,1)(3,3)\n\
        series id=s1 kind=line visible=true points=(0,3)(1,1)(2,3)(3,1)\n\
        end\n";

    #[test]
    fn chart_helpers_round_trip() {
        let canon = normalize_chart_impl(DSL).unwrap();
        assert_eq!(normalize_chart_impl(&canon).unwrap(), canon);
        assert!(normalize_chart_impl("chart grid=").is_err());

        let pgm = rasterize_chart_impl(DSL, 64, 64, 6).unwrap();
        assert!(pgm.starts_with(b"P5\n64 64\n255\n"));

        let masked = mask_image_impl(&pgm, 0.6, 8, 7).unwrap();
        assert_eq!(masked.len(), pgm.len());
        let blank = |b: &[u8]| b.iter().rev().take(64 * 64).filter(|&&p| p == 255).count();
        assert!(blank(&masked) > blank(&pgm));
    }

    #[test]
    fn pipeline_helpers_cover_generate_train_evaluate() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        let run = tmp.path().join("run");
        let gen = generate_impl("train_items=6\neval_items=3\n", 5, data.to_str().unwrap()).unwrap();
        let gen: serde_json::Value = serde_json::from_str(&gen).unwrap();
        assert_eq!(gen["train"]["items"], 6);
        assert_eq!(gen["eval"]["items"], 3);

        let cfg = "batch=3\nlr=0.02\nstage1_epochs=1\nstage2_epochs=1\nhidden=8\npooled=8\n";
        let report = train_impl(cfg, "grpo_only", data.to_str().unwrap(), 5, run.to_str().unwrap()).unwrap();
        let report: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(report["mode"], "grpo_only");
        let final_acc = report["final_eval"]["accuracy"].as_f64().unwrap();

        let ckpt = run.join("ckpt_phase1_stage2.bpck");
        let manifest = data.join("eval.jsonl");
        let eval = evaluate_checkpoint_impl(ckpt.to_str().unwrap(), manifest.to_str().unwrap()).unwrap();
        let eval: serde_json::Value = serde_json::from_str(&eval).unwrap();
        assert_eq!(eval["accuracy"].as_f64().unwrap(), final_acc);
    }
}
