use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bvlift::field::Metric;
use serde::Deserialize;

/// Run settings from `--config`; every field is optional and command-line flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub directions: Option<usize>,
    pub mollifier_eps_over_h: Option<Vec<f64>>,
    pub jump_threshold: Option<f64>,
    pub metric: Option<Metric>,
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == Some(0) {
            bail!("config: trials must be positive");
        }
        if self.directions == Some(0) {
            bail!("config: directions must be positive");
        }
        if let Some(eps) = &self.mollifier_eps_over_h {
            if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                bail!("config: mollifier_eps_over_h must be a nonempty list of positive numbers");
            }
        }
        if let Some(t) = self.jump_threshold {
            if !(t.is_finite() && t > 0.0) {
                bail!("config: jump_threshold must be positive");
            }
        }
        Ok(())
    }
}

/// Settings after merging flags over the config file over defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub trials: usize,
    pub directions: usize,
    pub eps_over_h: Vec<f64>,
    pub jump_threshold: Option<f64>,
    pub metric: Metric,
    pub output_dir: PathBuf,
}

/// Flag values shared by several subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub directions: Option<usize>,
    pub eps_over_h: Option<Vec<f64>>,
    pub jump_threshold: Option<f64>,
    pub metric: Option<Metric>,
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn resolve(&self, flags: Overrides) -> Result<Resolved> {
        let merged = Config {
            seed: flags.seed.or(self.seed),
            trials: flags.trials.or(self.trials),
            directions: flags.directions.or(self.directions),
            mollifier_eps_over_h: flags.eps_over_h.or_else(|| self.mollifier_eps_over_h.clone()),
            jump_threshold: flags.jump_threshold.or(self.jump_threshold),
            metric: flags.metric.or(self.metric),
            output_dir: flags.output_dir.or_else(|| self.output_dir.clone()),
        };
        merged.validate()?;
        Ok(Resolved {
            seed: merged.seed.unwrap_or(7),
            trials: merged.trials.unwrap_or(bvlift::lifting::DEFAULT_TRIALS),
            directions: merged.directions.unwrap_or(bvlift::lifting::DEFAULT_DIRECTIONS),
            eps_over_h: merged
                .mollifier_eps_over_h
                .unwrap_or_else(|| vec![8.0, 16.0, 32.0]),
            jump_threshold: merged.jump_threshold,
            metric: merged.metric.unwrap_or(Metric::Geodesic),
            output_dir: merged.output_dir.unwrap_or_else(|| PathBuf::from("bvlift-out")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg: Config =
            serde_json::from_str(r#"{"seed": 3, "trials": 9, "metric": "euclidean_tensor"}"#).unwrap();
        let r = cfg
            .resolve(Overrides {
                seed: Some(11),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(r.seed, 11);
        assert_eq!(r.trials, 9);
        assert_eq!(r.metric, Metric::EuclideanTensor);
        assert_eq!(r.directions, bvlift::lifting::DEFAULT_DIRECTIONS);
    }

    #[test]
    fn rejects_nonpositive_values() {
        let cfg: Config = serde_json::from_str(r#"{"trials": 0}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg: Config = serde_json::from_str(r#"{"mollifier_eps_over_h": [4, -1]}"#).unwrap();
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<Config>(r#"{"sed": 1}"#).is_err());
    }
}
