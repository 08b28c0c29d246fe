//! Seeded populations, nested outlier contamination and auxiliary variables.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{AuxiliaryFrame, ScaleModel};
use crate::population::PopulationFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistSpec {
    Normal { mu: f64, sigma_sq: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistSpec::Normal { mu, sigma_sq } => mu.is_finite() && sigma_sq > 0.0 && sigma_sq.is_finite(),
            DistSpec::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid distribution {self}")))
        }
    }

    /// Model used by strategy S1 for populations from this family.
    pub fn scale_model(&self) -> ScaleModel {
        match *self {
            DistSpec::Normal { .. } => ScaleModel::Normal,
            DistSpec::Gamma { shape, .. } => ScaleModel::Gamma { shape },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match *self {
            DistSpec::Normal { mu, sigma_sq } => {
                let d = Normal::new(mu, sigma_sq.sqrt()).map_err(|e| Error::Argument(e.to_string()))?;
                d.sample_iter(rng).take(count).collect()
            }
            DistSpec::Gamma { shape, scale } => {
                let d = Gamma::new(shape, scale).map_err(|e| Error::Argument(e.to_string()))?;
                d.sample_iter(rng).take(count).collect()
            }
        })
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Normal { mu, sigma_sq } => write!(f, "N({mu}, {sigma_sq})"),
            DistSpec::Gamma { shape, scale } => write!(f, "G({shape}, {scale})"),
        }
    }
}

/// Base law, outlier law and the increasing outlier counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierScenario {
    pub base: DistSpec,
    pub outlier: DistSpec,
    #[serde(rename = "N")]
    pub pop_size: usize,
    pub p_sequence: Vec<usize>,
}

impl OutlierScenario {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.outlier.validate()?;
        if self.pop_size < 2 {
            return Err(Error::Argument(format!(
                "N must be at least 2, got {}",
                self.pop_size
            )));
        }
        if self.p_sequence.is_empty() {
            return Err(Error::Argument("p_sequence is empty".into()));
        }
        if self.p_sequence.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument("p_sequence must be nondecreasing".into()));
        }
        let p_max = *self.p_sequence.last().unwrap_or(&0);
        if p_max > self.pop_size {
            return Err(Error::Argument(format!(
                "p_max = {p_max} exceeds N = {}",
                self.pop_size
            )));
        }
        Ok(())
    }
}

/// One contamination level: its frame and the outlying unit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminatedLevel {
    pub p: usize,
    pub frame: PopulationFrame,
    /// Unit indices replaced by outliers; a prefix of the next level's set.
    pub outlier_indices: Vec<usize>,
    /// Unit values in unit order (not sorted).
    pub unit_values: Vec<f64>,
}

/// `N` iid draws frozen into a population.
pub fn generate_population<R: Rng + ?Sized>(
    spec: DistSpec,
    pop_size: usize,
    rng: &mut R,
) -> Result<PopulationFrame> {
    PopulationFrame::new(&spec.sample(pop_size, rng)?)
}

/// Base population followed by nested contaminations, one per `p`.
///
/// Outlying units are taken in the order of one random permutation and their
/// values are drawn once, so every level reuses the previous level's outliers.
pub fn contaminate<R: Rng + ?Sized>(
    scenario: &OutlierScenario,
    rng: &mut R,
) -> Result<Vec<ContaminatedLevel>> {
    scenario.validate()?;
    let base = scenario.base.sample(scenario.pop_size, rng)?;
    let mut order: Vec<usize> = (0..scenario.pop_size).collect();
    order.shuffle(rng);
    let p_max = *scenario.p_sequence.last().unwrap_or(&0);
    let replacements = scenario.outlier.sample(p_max, rng)?;
    scenario
        .p_sequence
        .iter()
        .map(|&p| {
            let mut units = base.clone();
            for (&unit, &value) in order[..p].iter().zip(&replacements) {
                units[unit] = value;
            }
            Ok(ContaminatedLevel {
                p,
                frame: PopulationFrame::new(&units)?,
                outlier_indices: order[..p].to_vec(),
                unit_values: units,
            })
        })
        .collect()
}

/// Noise scale `ϑ = 2σ_x √(1/ρ² - 1)` giving correlation `ρ` in
/// `z = 3 + 2x + ε`.
pub fn noise_scale(sigma_x: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Argument(format!(
            "target correlation must lie in (0, 1], got {rho}"
        )));
    }
    Ok(2.0 * sigma_x * (1.0 / (rho * rho) - 1.0).max(0.0).sqrt())
}

/// `z_i = 3 + 2x_i + ε_i` with `ε_i ~ N(0, ϑ²)` for the units of `x`
/// (given in unit order), recording the realised correlation.
pub fn generate_auxiliary<R: Rng + ?Sized>(
    x: &[f64],
    rho_target: f64,
    rng: &mut R,
) -> Result<AuxiliaryFrame> {
    let pop = PopulationFrame::new(x)?;
    let mu2 = pop.mu(2);
    if mu2 <= 0.0 {
        return Err(Error::Degenerate(
            "constant population has no auxiliary correlation".into(),
        ));
    }
    let theta = noise_scale(mu2.sqrt(), rho_target)?;
    let z: Vec<f64> = if theta == 0.0 {
        x.iter().map(|&v| 3.0 + 2.0 * v).collect()
    } else {
        let noise = Normal::new(0.0, theta).map_err(|e| Error::Argument(e.to_string()))?;
        x.iter().map(|&v| 3.0 + 2.0 * v + noise.sample(rng)).collect()
    };
    let rho = pearson(x, &z);
    Ok(AuxiliaryFrame::new(z)?.with_correlation(rho))
}

pub fn pearson(x: &[f64], z: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let (mut sxz, mut sxx, mut szz) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(z) {
        sxz += (a - mx) * (b - mz);
        sxx += (a - mx) * (a - mx);
        szz += (b - mz) * (b - mz);
    }
    sxz / (sxx * szz).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::StatKind;
    use crate::simkit::rng::{substream, Stream};
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    fn scenario() -> OutlierScenario {
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
            p_sequence: vec![0, 20, 40, 60, 80, 100],
        }
    }

    #[test]
    fn normal_population_moments() {
        let mut rng = substream(1, Stream::Population, &[]);
        let pop = generate_population(
            DistSpec::Normal {
                mu: 0.0,
                sigma_sq: 1.0,
            },
            1000,
            &mut rng,
        )
        .unwrap();
        assert!(pop.mean().abs() < 0.1);
        assert!((pop.mu(2) - 1.0).abs() < 0.15);
    }

    #[test]
    fn gamma_population_variance() {
        let spec = DistSpec::Gamma {
            shape: 3.0,
            scale: 1.0 / 3f64.sqrt(),
        };
        let mut rng = substream(2, Stream::Population, &[]);
        let pop = generate_population(spec, 1000, &mut rng).unwrap();
        assert!((pop.mu(2) - 1.0).abs() < 0.2, "{}", pop.mu(2));
        assert!((pop.mean() - 3f64.sqrt()).abs() < 0.12);
        assert!(generate_population(spec, 2, &mut rng).unwrap().len() == 2);
        assert!(DistSpec::Gamma {
            shape: 0.0,
            scale: 1.0
        }
        .validate()
        .is_err());
        assert!(DistSpec::Normal {
            mu: 0.0,
            sigma_sq: -1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn contamination_is_nested() {
        let mut rng = substream(3, Stream::OutlierOrder, &[]);
        let levels = contaminate(&scenario(), &mut rng).unwrap();
        assert_eq!(levels.len(), 6);
        for pair in levels.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert_eq!(&b.outlier_indices[..a.p], &a.outlier_indices[..]);
            let sa: HashSet<_> = a.outlier_indices.iter().collect();
            let sb: HashSet<_> = b.outlier_indices.iter().collect();
            assert_eq!(sa.symmetric_difference(&sb).count(), b.p - a.p);
            for &u in &a.outlier_indices {
                assert_eq!(a.unit_values[u], b.unit_values[u]);
            }
            let changed = (0..1000)
                .filter(|&u| a.unit_values[u] != b.unit_values[u])
                .count();
            assert!(changed <= b.p - a.p);
        }
        let base = &levels[0];
        assert!(base.outlier_indices.is_empty());
        // ten percent N(0, 9) outliers inflate the variance
        assert!(levels[5].frame.mu(2) > 1.4 * base.frame.mu(2));
    }

    #[test]
    fn contamination_rejects_bad_scenarios() {
        let mut rng = substream(3, Stream::OutlierOrder, &[]);
        let mut bad = scenario();
        bad.p_sequence = vec![0, 2000];
        assert!(matches!(contaminate(&bad, &mut rng), Err(Error::Argument(_))));
        bad.p_sequence = vec![40, 20];
        assert!(contaminate(&bad, &mut rng).is_err());
    }

    #[test]
    fn noise_scale_inversion() {
        assert_abs_diff_eq!(noise_scale(1.0, 0.5).unwrap(), 2.0 * 3f64.sqrt(), epsilon = 1e-14);
        assert_eq!(noise_scale(1.3, 1.0).unwrap(), 0.0);
        assert!(noise_scale(1.0, 0.0).is_err());
        assert!(noise_scale(1.0, 1.2).is_err());
    }

    #[test]
    fn auxiliary_correlation() {
        let mut rng = substream(4, Stream::Population, &[]);
        let x = DistSpec::Normal {
            mu: 0.0,
            sigma_sq: 1.0,
        }
        .sample(1000, &mut rng)
        .unwrap();
        let mut rng = substream(4, Stream::AuxiliaryNoise, &[0]);
        let aux = generate_auxiliary(&x, 0.7, &mut rng).unwrap();
        let rho = aux.correlation_with_x.unwrap();
        assert!((rho - 0.7).abs() <= 0.04, "{rho}");

        let exact = generate_auxiliary(&x, 1.0, &mut rng).unwrap();
        for (z, v) in exact.values().iter().zip(&x) {
            assert_eq!(*z, 3.0 + 2.0 * v);
        }
        let frame = exact.frame().unwrap();
        let pop = PopulationFrame::new(&x).unwrap();
        assert_abs_diff_eq!(
            frame.scale(StatKind::Gmd),
            2.0 * pop.scale(StatKind::Gmd),
            epsilon = 1e-10
        );

        assert!(matches!(
            generate_auxiliary(&[2.0; 5], 0.5, &mut rng),
            Err(Error::Degenerate(_))
        ));
    }
}
