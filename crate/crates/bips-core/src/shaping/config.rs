//! Training hyperparameters, read and written as `key=value` lines.

use super::losses::ShapingError;
use std::fmt::Write as _;

/// All knobs of the two-stage trainer. Defaults are the full-scale settings;
/// [`TrainConfig::desk`] shrinks the batch and raises the learning rate to
/// suit the small reference corpus and policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Consistency coefficient (stage objective weight on the pull term).
    pub alpha: f64,
    /// Separation coefficient (weight on the push term).
    pub beta: f64,
    /// Cap on the consistency KL.
    pub c_cons: f64,
    /// Cap on the separation KL.
    pub c_sep: f64,
    /// PPO-style ratio clip half-width.
    pub epsilon: f64,
    /// Weight on the KL to the stage-entry reference policy.
    pub gamma: f64,
    /// Rollouts sampled per item.
    pub group_size: u32,
    /// Sampling temperature for rollouts and training-time logprobs.
    pub temperature: f64,
    pub lr: f64,
    pub batch: u32,
    pub stage1_epochs: u32,
    pub stage2_epochs: u32,
    /// Policy hidden width; with `pooled`, fixes the parameter count.
    pub hidden: u32,
    /// Pixel pooling grid used by feature extraction.
    pub pooled: u32,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            alpha: 0.01,
            beta: 0.02,
            c_cons: 1.0,
            c_sep: 0.2,
            epsilon: 0.2,
            gamma: 0.01,
            group_size: 8,
            temperature: 0.85,
            lr: 1e-6,
            batch: 256,
            stage1_epochs: 5,
            stage2_epochs: 3,
            hidden: 64,
            pooled: 16,
        }
    }
}

impl TrainConfig {
    /// Settings sized for the bundled 500/200-item corpus: small batches and
    /// a learning rate suited to a tiny policy instead of a giant one.
    pub fn desk() -> TrainConfig {
        TrainConfig { batch: 32, lr: 0.01, ..TrainConfig::default() }
    }

    pub fn check(&self) -> Result<(), ShapingError> {
        let nonneg = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ShapingError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        let positive = [
            ("c_cons", self.c_cons),
            ("c_sep", self.c_sep),
            ("temperature", self.temperature),
            ("lr", self.lr),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ShapingError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.group_size < 2 {
            return Err(ShapingError::Config("group_size must be at least 2".to_string()));
        }
        if self.batch == 0 || self.stage1_epochs == 0 || self.stage2_epochs == 0 {
            return Err(ShapingError::Config(
                "batch and stage epochs must be at least 1".to_string(),
            ));
        }
        if self.hidden == 0 || self.pooled == 0 {
            return Err(ShapingError::Config("hidden and pooled must be positive".to_string()));
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<TrainConfig, ShapingError> {
        let mut cfg = TrainConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ShapingError::Config(format!("line {}: expected key=value", ln + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ShapingError::Config(format!("duplicate key `{key}`")));
            }
            let bad = |e: &dyn std::fmt::Display| ShapingError::Config(format!("key `{key}`: {e}"));
            match key {
                "alpha" => cfg.alpha = value.parse().map_err(|e| bad(&e))?,
                "beta" => cfg.beta = value.parse().map_err(|e| bad(&e))?,
                "c_cons" => cfg.c_cons = value.parse().map_err(|e| bad(&e))?,
                "c_sep" => cfg.c_sep = value.parse().map_err(|e| bad(&e))?,
                "epsilon" => cfg.epsilon = value.parse().map_err(|e| bad(&e))?,
                "gamma" => cfg.gamma = value.parse().map_err(|e| bad(&e))?,
                "group_size" => cfg.group_size = value.parse().map_err(|e| bad(&e))?,
                "temperature" => cfg.temperature = value.parse().map_err(|e| bad(&e))?,
                "lr" => cfg.lr = value.parse().map_err(|e| bad(&e))?,
                "batch" => cfg.batch = value.parse().map_err(|e| bad(&e))?,
                "stage1_epochs" => cfg.stage1_epochs = value.parse().map_err(|e| bad(&e))?,
                "stage2_epochs" => cfg.stage2_epochs = value.parse().map_err(|e| bad(&e))?,
                "hidden" => cfg.hidden = value.parse().map_err(|e| bad(&e))?,
                "pooled" => cfg.pooled = value.parse().map_err(|e| bad(&e))?,
                _ => return Err(ShapingError::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "beta={}", self.beta);
        let _ = writeln!(out, "c_cons={}", self.c_cons);
        let _ = writeln!(out, "c_sep={}", self.c_sep);
        let _ = writeln!(out, "epsilon={}", self.epsilon);
        let _ = writeln!(out, "gamma={}", self.gamma);
        let _ = writeln!(out, "group_size={}", self.group_size);
        let _ = writeln!(out, "temperature={}", self.temperature);
        let _ = writeln!(out, "lr={}", self.lr);
        let _ = writeln!(out, "batch={}", self.batch);
        let _ = writeln!(out, "stage1_epochs={}", self.stage1_epochs);
        let _ = writeln!(out, "stage2_epochs={}", self.stage2_epochs);
        let _ = writeln!(out, "hidden={}", self.hidden);
        let _ = writeln!(out, "pooled={}", self.pooled);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_the_published_settings() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.beta, 0.02);
        assert_eq!(cfg.c_cons, 1.0);
        assert_eq!(cfg.c_sep, 0.2);
        assert_eq!(cfg.gamma, 0.01);
        assert_eq!(cfg.group_size, 8);
        assert_eq!(cfg.temperature, 0.85);
        assert_eq!(cfg.lr, 1e-6);
        assert_eq!(cfg.batch, 256);
        assert_eq!((cfg.stage1_epochs, cfg.stage2_epochs), (5, 3));
        assert_eq!(cfg.check(), Ok(()));
    }

    #[test]
    fn kv_roundtrips_and_validates() {
        let cfg = TrainConfig::desk();
        assert_eq!(TrainConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
        assert!(TrainConfig::from_kv("alpha=-0.5").is_err());
        assert!(TrainConfig::from_kv("c_sep=0").is_err());
        assert!(TrainConfig::from_kv("group_size=1").is_err());
        assert!(TrainConfig::from_kv("mystery=1").is_err());
        let partial = TrainConfig::from_kv("alpha=0 # off\nbeta=0\n").unwrap();
        assert_eq!((partial.alpha, partial.beta), (0.0, 0.0));
        assert_eq!(partial.batch, 256);
    }
}
