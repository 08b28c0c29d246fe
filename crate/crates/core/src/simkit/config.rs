//! Study configuration and the canned table setups.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::approx::{check_levels, TABLE_Q_LEVELS};
use crate::error::{Error, Result};
use crate::population::StatKind;
use crate::simkit::generate::{DistSpec, OutlierScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Bias and `√MSE` of the scale strategies.
    BiasMse,
    /// Quantile approximations to the Studentized statistic.
    Approximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub study: StudyKind,
    pub scenario: OutlierScenario,
    pub n: usize,
    pub rho_targets: Vec<f64>,
    /// Samples in the study loop.
    pub replications: usize,
    #[serde(default = "default_reference_r")]
    pub mc_reference_r: usize,
    #[serde(default = "default_levels")]
    pub q_levels: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<StatKind>,
    #[serde(default = "default_one")]
    pub bootstrap_populations: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

fn default_name() -> String {
    "study".into()
}

fn default_reference_r() -> usize {
    100_000
}

fn default_levels() -> Vec<f64> {
    TABLE_Q_LEVELS.to_vec()
}

fn default_kinds() -> Vec<StatKind> {
    StatKind::ALL.to_vec()
}

fn default_one() -> usize {
    1
}

fn default_resamples() -> usize {
    10_000
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let big_n = self.scenario.pop_size;
        if self.n < 3 || self.n >= big_n {
            return Err(Error::Config(format!(
                "need 3 <= n < N, got n={}, N={big_n}",
                self.n
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if let Some(rho) = self.rho_targets.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::Config(format!("target correlation {rho} outside (0, 1]")));
        }
        check_levels(&self.q_levels).map_err(|e| Error::Config(e.to_string()))?;
        if self.study == StudyKind::Approximation {
            if self.kinds.is_empty() {
                return Err(Error::Config("no statistic kinds given".into()));
            }
            if self.bootstrap_populations == 0 || self.bootstrap_resamples == 0 {
                return Err(Error::Config("bootstrap sizes must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Argument(format!("unknown scale `{other}` (desk|paper)"))),
        }
    }
}

pub const TABLE_NAMES: [&str; 10] = ["t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9", "t10"];

fn normal_scenario(p_sequence: Vec<usize>) -> OutlierScenario {
    OutlierScenario {
        base: DistSpec::Normal {
            mu: 0.0,
            sigma_sq: 1.0,
        },
        outlier: DistSpec::Normal {
            mu: 0.0,
            sigma_sq: 9.0,
        },
        pop_size: 1000,
        p_sequence,
    }
}

fn gamma_scenario(p_sequence: Vec<usize>) -> OutlierScenario {
    let root3 = 3f64.sqrt();
    OutlierScenario {
        base: DistSpec::Gamma {
            shape: 3.0,
            scale: 1.0 / root3,
        },
        outlier: DistSpec::Gamma {
            shape: 3.0,
            scale: root3,
        },
        pop_size: 1000,
        p_sequence,
    }
}

/// The setup behind a numbered table.
///
/// `t1`, `t2`: accuracy of the scale strategies, normal and gamma families,
/// `p = 0, 20, …, 100`. `t3`–`t6`: approximations without outliers, `t7`–`t10`
/// with 60 outliers, alternating GMD and VAR, normal then gamma.
pub fn canned(table: &str, scale: Scale, seed: u64) -> Result<StudyConfig> {
    let (reference, accuracy_r, resamples) = match scale {
        Scale::Desk => (100_000, 10_000, 10_000),
        Scale::Paper => (1_000_000, 100_000, 10_000),
    };
    let idx = TABLE_NAMES
        .iter()
        .position(|&t| t == table)
        .ok_or_else(|| Error::Argument(format!("unknown table `{table}` (t1..t10)")))?;
    let mut cfg = StudyConfig {
        name: table.to_string(),
        study: StudyKind::Approximation,
        scenario: normal_scenario(vec![0]),
        n: 200,
        rho_targets: vec![0.7],
        replications: 1_000,
        mc_reference_r: reference,
        q_levels: TABLE_Q_LEVELS.to_vec(),
        seed,
        kinds: vec![StatKind::Gmd],
        bootstrap_populations: 1,
        bootstrap_resamples: resamples,
    };
    if idx < 2 {
        let p = vec![0, 20, 40, 60, 80, 100];
        cfg.study = StudyKind::BiasMse;
        cfg.scenario = if idx == 0 {
            normal_scenario(p)
        } else {
            gamma_scenario(p)
        };
        cfg.rho_targets = vec![0.9, 0.7, 0.5];
        cfg.replications = accuracy_r;
    } else {
        let k = idx - 2;
        let p = if k < 4 { 0 } else { 60 };
        let normal = k % 4 < 2;
        cfg.scenario = if normal {
            normal_scenario(vec![p])
        } else {
            gamma_scenario(vec![p])
        };
        cfg.kinds = vec![if k % 2 == 0 { StatKind::Gmd } else { StatKind::Var }];
    }
    cfg.validate()?;
    Ok(cfg)
}
