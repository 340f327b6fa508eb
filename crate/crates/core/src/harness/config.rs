//! Study configuration: a flat TOML file of scalars and arrays.
//!
//! ```toml
//! model = "aft"            # or "weibull"
//! mu = 0.0                 # AFT only
//! beta = 1.5
//! sigma_eps = 0.4
//! shape = 1.0              # Weibull only
//! scale = 1.0
//! k = [2, 4, 6, 8, 10]
//! m = [20, 50]
//! rho = [0.1, 0.3, 0.5, 0.7, 0.9]
//! p_cens = [0.0, 0.1, 0.3, 0.5]
//! levels = [0.75, 0.5, 0.25, 0.1]
//! b_mc = 2000
//! b_true = 1000
//! seed = 20240917
//! output = "efficiency.csv"
//! calibration_draws = 1000000
//! calibration_tol = 0.005
//! calibration_seed = 1
//! mixing_sets = 1000000
//! ```
//!
//! Every key is optional; omitted keys take the defaults shown above.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{AftModel, SuperpopulationModel, WeibullModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Aft,
    Weibull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelKind,
    pub mu: f64,
    pub beta: f64,
    pub sigma_eps: f64,
    pub shape: f64,
    pub scale: f64,
    pub k: Vec<usize>,
    pub m: Vec<usize>,
    pub rho: Vec<f64>,
    pub p_cens: Vec<f64>,
    pub levels: Vec<f64>,
    pub b_mc: usize,
    pub b_true: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub calibration_draws: usize,
    pub calibration_tol: f64,
    pub calibration_seed: u64,
    pub mixing_sets: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model: ModelKind::Aft,
            mu: 0.0,
            beta: 1.5,
            sigma_eps: 0.4,
            shape: 1.0,
            scale: 1.0,
            k: vec![2, 4, 6, 8, 10],
            m: vec![20, 50],
            rho: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            p_cens: vec![0.0, 0.1, 0.3, 0.5],
            levels: vec![0.75, 0.5, 0.25, 0.1],
            b_mc: 2000,
            b_true: 1000,
            seed: 20240917,
            output: None,
            calibration_draws: 1_000_000,
            calibration_tol: 0.005,
            calibration_seed: 1,
            mixing_sets: 1_000_000,
        }
    }
}

/// Replicate counts of the full-scale study.
pub const FULL_B_MC: usize = 10_000;
pub const FULL_B_TRUE: usize = 4_000;

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().replace('\n', " | "),
        })?;
        config.validate(path)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Switch to the full-scale replicate counts.
    pub fn full(mut self) -> Self {
        self.b_mc = FULL_B_MC;
        self.b_true = FULL_B_TRUE;
        self
    }

    /// The superpopulation with ranking noise left unset.
    pub fn superpopulation(&self) -> SuperpopulationModel {
        match self.model {
            ModelKind::Aft => {
                SuperpopulationModel::Aft(AftModel::new(self.mu, self.beta, self.sigma_eps))
            }
            ModelKind::Weibull => {
                SuperpopulationModel::Weibull(WeibullModel::new(self.shape, self.scale))
            }
        }
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        let fail = |field: &str, message: String| {
            Err(Error::Config {
                path: path.to_path_buf(),
                message: format!("field `{field}`: {message}"),
            })
        };
        if let Err(e) = self.superpopulation().validate() {
            return fail("model", e.to_string());
        }
        let lists: [(&str, bool); 5] = [
            ("k", self.k.is_empty()),
            ("m", self.m.is_empty()),
            ("rho", self.rho.is_empty()),
            ("p_cens", self.p_cens.is_empty()),
            ("levels", self.levels.is_empty()),
        ];
        for (field, empty) in lists {
            if empty {
                return fail(field, "must not be empty".into());
            }
        }
        if let Some(k) = self.k.iter().find(|&&k| k == 0) {
            return fail("k", format!("set sizes must be >= 1, got {k}"));
        }
        if let Some(m) = self.m.iter().find(|&&m| m == 0) {
            return fail("m", format!("cycle counts must be >= 1, got {m}"));
        }
        if let Some(r) = self.rho.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return fail("rho", format!("must lie in (0,1], got {r}"));
        }
        if let Some(p) = self.p_cens.iter().find(|&&p| !(0.0..1.0).contains(&p)) {
            return fail("p_cens", format!("must lie in [0,1), got {p}"));
        }
        if let Some(l) = self.levels.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
            return fail("levels", format!("must lie in (0,1), got {l}"));
        }
        if self.b_mc < 2 {
            return fail(
                "b_mc",
                format!("need at least 2 replicates, got {}", self.b_mc),
            );
        }
        if self.b_true == 1 {
            return fail("b_true", "must be 0 (disabled) or at least 2".into());
        }
        if self.calibration_draws < 3 {
            return fail("calibration_draws", "need at least 3 draws".into());
        }
        if !(self.calibration_tol > 0.0) {
            return fail("calibration_tol", "must be positive".into());
        }
        if self.mixing_sets == 0 {
            return fail("mixing_sets", "must be >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_study_grid() {
        let c = Config::from_toml("", Path::new("empty.toml")).unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.k, vec![2, 4, 6, 8, 10]);
        assert_eq!(c.levels, vec![0.75, 0.5, 0.25, 0.1]);
        let full = c.full();
        assert_eq!((full.b_mc, full.b_true), (10_000, 4_000));
    }

    #[test]
    fn round_trip() {
        let c = Config {
            model: ModelKind::Weibull,
            k: vec![4, 6],
            output: Some("out.csv".into()),
            ..Config::default()
        };
        let back = Config::from_toml(&c.to_toml(), Path::new("x")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_file_and_field() {
        let err = Config::from_toml("rho = [0.5, 1.5]", Path::new("grid.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grid.toml") && msg.contains("`rho`"), "{msg}");

        let err = Config::from_toml("bogus = 3", Path::new("grid.toml")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");

        let err = Config::from_toml("b_mc = \"many\"", Path::new("grid.toml")).unwrap_err();
        assert!(err.to_string().contains("b_mc"), "{err}");

        let err = Config::load(Path::new("/definitely/missing.toml")).unwrap_err();
        assert!(err.to_string().contains("missing.toml"));
    }
}
