//! Monte Carlo reference distributions and the two study harnesses.

use log::{info, warn};
use rayon::prelude::*;

use crate::approx::{
    bootstrap_pool, check_levels, edgeworth_quantile, edgeworth_table, empirical_quantile, normal_table,
    BootstrapPlan, QuantileSource, QuantileTable, ReplicationStats,
};
use crate::error::{Error, Result};
use crate::estimate::{
    auxiliary_correction, correction_factor, edgeworth_params_aux, edgeworth_params_hat, AuxiliaryFrame,
};
use crate::hoeffding::{edgeworth_params_true, EdgeworthParams};
use crate::population::{sort_values, PopulationFrame, StatKind};
use crate::simkit::config::{StudyConfig, StudyKind};
use crate::simkit::generate::{contaminate, generate_auxiliary, ContaminatedLevel};
use crate::simkit::rng::{derive_seed, substream, Stream};
use crate::simkit::sampling::{srswor_with, IndexSampler};
use crate::ustat::{studentize_in_place, u_statistic};

/// Smallest reference size accepted by [`mc_reference_cdf`].
pub const MIN_REFERENCE_DRAWS: usize = 1000;

/// Reference distribution of `(U - θ)/S` from `r` independent samples.
///
/// Draw `i` uses the substream `(seed, kind, i)`.
pub fn mc_reference_cdf(
    pop: &PopulationFrame,
    n: usize,
    kind: StatKind,
    r: usize,
    q_levels: &[f64],
    seed: u64,
) -> Result<QuantileTable> {
    if r < MIN_REFERENCE_DRAWS {
        return Err(Error::Argument(format!(
            "reference distribution needs at least {MIN_REFERENCE_DRAWS} draws, got {r}"
        )));
    }
    check_levels(q_levels)?;
    let big_n = pop.len();
    if n < 3 || n >= big_n {
        return Err(Error::Size(format!(
            "Studentized draws need 3 <= n < N, got n={n}, N={big_n}"
        )));
    }
    let theta = pop.scale(kind);
    let values = pop.values();
    let draws: Vec<Option<f64>> = (0..r)
        .into_par_iter()
        .map_init(
            || {
                (
                    IndexSampler::new(big_n),
                    Vec::with_capacity(n),
                    Vec::with_capacity(n),
                )
            },
            |(sampler, buf, scratch), i| {
                let mut rng = substream(seed, Stream::McReference, &[kind as u64, i as u64]);
                buf.clear();
                buf.extend(sampler.draw(n, &mut rng).iter().map(|&j| values[j]));
                studentize_in_place(buf, big_n, kind, theta, scratch)
            },
        )
        .collect();
    let mut pool: Vec<f64> = draws.iter().flatten().copied().collect();
    let excluded = r - pool.len();
    if excluded * 100 > r {
        warn!("{excluded} of {r} reference draws were degenerate");
    }
    QuantileTable::from_pool(q_levels, &mut pool, excluded, QuantileSource::MCReference)
}

/// Bias and root mean square error of one scale estimator at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub p: usize,
    pub p_over_n: f64,
    pub method: String,
    pub target: f64,
    pub bias: f64,
    pub rmse: f64,
    pub bias_se: f64,
    pub rmse_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizedCorrelation {
    pub p: usize,
    pub rho_target: f64,
    pub rho_realized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    pub correlations: Vec<RealizedCorrelation>,
    pub replications: usize,
}

impl AccuracyReport {
    pub fn row(&self, p: usize, method: &str) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.p == p && r.method == method)
    }
}

pub fn s2_label(rho: f64) -> String {
    format!("S2[rho={rho}]")
}

fn levels_for(cfg: &StudyConfig) -> Result<Vec<ContaminatedLevel>> {
    let mut rng = substream(cfg.seed, Stream::Population, &[]);
    contaminate(&cfg.scenario, &mut rng)
}

fn auxiliary_for(cfg: &StudyConfig, level: &ContaminatedLevel, rho: f64) -> Result<AuxiliaryFrame> {
    let mut rng = substream(cfg.seed, Stream::AuxiliaryNoise, &[level.p as u64, rho.to_bits()]);
    generate_auxiliary(&level.unit_values, rho, &mut rng)
}

/// Bias and `√MSE` of `√U_V`, S1 and S2 (one per target correlation)
/// against `√V`, over `R` samples per contamination level. The same samples
/// serve every method.
pub fn bias_mse_study(cfg: &StudyConfig) -> Result<AccuracyReport> {
    cfg.validate()?;
    let n = cfg.n;
    let a_model = correction_factor(cfg.scenario.base.scale_model())?;
    let mut rows = Vec::new();
    let mut correlations = Vec::new();
    for level in levels_for(cfg)? {
        let target = level.frame.scale(StatKind::Var).sqrt();
        let mut methods = vec![("sqrtUV".to_string(), None), ("S1".to_string(), Some(a_model))];
        for &rho in &cfg.rho_targets {
            let aux = auxiliary_for(cfg, &level, rho)?;
            correlations.push(RealizedCorrelation {
                p: level.p,
                rho_target: rho,
                rho_realized: aux.correlation_with_x.unwrap_or(f64::NAN),
            });
            methods.push((s2_label(rho), Some(auxiliary_correction(&aux)?)));
        }
        let pop = &level.frame;
        let draws: Vec<(f64, f64)> = (0..cfg.replications)
            .into_par_iter()
            .map_init(
                || IndexSampler::new(pop.len()),
                |sampler, r| {
                    let mut rng = substream(cfg.seed, Stream::StudySample, &[level.p as u64, r as u64]);
                    let s = srswor_with(pop, n, &mut rng, sampler)?;
                    Ok((
                        u_statistic(&s, StatKind::Var).sqrt(),
                        u_statistic(&s, StatKind::Gmd),
                    ))
                },
            )
            .collect::<Result<_>>()?;
        let p_over_n = level.p as f64 / cfg.scenario.pop_size as f64;
        for (method, a) in methods {
            let errors: Vec<f64> = draws
                .iter()
                .map(|&(sd, g)| match a {
                    None => sd - target,
                    Some(a) => a * g - target,
                })
                .collect();
            let (bias, bias_se, rmse, rmse_se) = accuracy(&errors);
            rows.push(AccuracyRow {
                p: level.p,
                p_over_n,
                method,
                target,
                bias,
                rmse,
                bias_se,
                rmse_se,
            });
        }
        info!("accuracy study: p = {} done", level.p);
    }
    Ok(AccuracyReport {
        rows,
        correlations,
        replications: cfg.replications,
    })
}

/// `(bias, se(bias), √MSE, se(√MSE))` from estimation errors.
fn accuracy(errors: &[f64]) -> (f64, f64, f64, f64) {
    let r = errors.len() as f64;
    let bias = errors.iter().sum::<f64>() / r;
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / r;
    let var_e = errors.iter().map(|e| (e - bias) * (e - bias)).sum::<f64>() / (r - 1.0).max(1.0);
    let var_sq = errors.iter().map(|e| (e * e - mse) * (e * e - mse)).sum::<f64>() / (r - 1.0).max(1.0);
    let rmse = mse.sqrt();
    let rmse_se = if rmse > 0.0 {
        (var_sq / r).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    (bias, (var_e / r).sqrt(), rmse, rmse_se)
}

/// Quantile approximations for one population and statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport {
    pub p: usize,
    pub kind: StatKind,
    pub q_levels: Vec<f64>,
    pub reference: QuantileTable,
    pub normal: QuantileTable,
    pub true_params: EdgeworthParams,
    pub edgeworth_true: QuantileTable,
    /// One per target correlation: (target, realised, parameters, table).
    pub edgeworth_aux: Vec<(f64, f64, EdgeworthParams, QuantileTable)>,
    pub edgeworth_hat: QuantileTable,
    pub bootstrap: QuantileTable,
    /// Degenerate inner bootstrap resamples over all samples.
    pub bootstrap_excluded_draws: usize,
}

/// Tables in the layout `F⁻¹, Φ⁻¹, H⁻¹, zĤ⁻¹, ÊĤ⁻¹, ŜĤ⁻¹, ÊF̃⁻¹, ŜF̃⁻¹`,
/// one per (contamination level, statistic).
pub fn approximation_study(cfg: &StudyConfig, kind: StatKind) -> Result<Vec<ApproximationReport>> {
    cfg.validate()?;
    levels_for(cfg)?
        .iter()
        .map(|level| approximation_for_level(cfg, level, kind))
        .collect()
}

/// Ĥ⁻¹ and F̃⁻¹ per level for one sample, and its degenerate bootstrap draws.
type SampleQuantiles = (Vec<Option<f64>>, Vec<Option<f64>>, usize);

fn approximation_for_level(
    cfg: &StudyConfig,
    level: &ContaminatedLevel,
    kind: StatKind,
) -> Result<ApproximationReport> {
    let pop = &level.frame;
    let q = &cfg.q_levels;
    let n = cfg.n;
    let ref_seed = derive_seed(cfg.seed, Stream::McReference, &[level.p as u64]);
    let reference = mc_reference_cdf(pop, n, kind, cfg.mc_reference_r, q, ref_seed)?;
    info!("{kind} p = {}: reference done", level.p);
    let normal = normal_table(q)?;
    let true_params = edgeworth_params_true(pop, n, kind)?;
    let edgeworth_true = edgeworth_table(q, &true_params, QuantileSource::EdgeworthTrue)?;
    let mut edgeworth_aux = Vec::new();
    for &rho in &cfg.rho_targets {
        let aux = auxiliary_for(cfg, level, rho)?;
        let params = edgeworth_params_aux(&aux, n, kind)?;
        let table = edgeworth_table(q, &params, QuantileSource::EdgeworthHatZ)?;
        edgeworth_aux.push((rho, aux.correlation_with_x.unwrap_or(f64::NAN), params, table));
    }

    let per_sample: Vec<SampleQuantiles> = (0..cfg.replications)
        .into_par_iter()
        .map_init(
            || IndexSampler::new(pop.len()),
            |sampler, r| {
                let ids = [level.p as u64, r as u64];
                let mut rng = substream(cfg.seed, Stream::StudySample, &ids);
                let s = srswor_with(pop, n, &mut rng, sampler)?;
                let hat = match edgeworth_params_hat(&s, kind) {
                    Ok(p) => q.iter().map(|&l| edgeworth_quantile(l, &p).ok()).collect(),
                    Err(Error::DegenerateSample(_)) => vec![None; q.len()],
                    Err(e) => return Err(e),
                };
                let plan = BootstrapPlan::new(
                    cfg.bootstrap_populations,
                    cfg.bootstrap_resamples,
                    derive_seed(
                        cfg.seed,
                        Stream::BootstrapSeed,
                        &[level.p as u64, kind as u64, r as u64],
                    ),
                )?;
                let (mut pool, dropped) = bootstrap_pool(&s, kind, plan)?;
                let boot = if pool.is_empty() {
                    vec![None; q.len()]
                } else {
                    sort_values(&mut pool);
                    q.iter().map(|&l| Some(empirical_quantile(&pool, l))).collect()
                };
                Ok((hat, boot, dropped))
            },
        )
        .collect::<Result<_>>()?;
    info!("{kind} p = {}: sample loop done", level.p);

    let hat: Vec<&[Option<f64>]> = per_sample.iter().map(|s| s.0.as_slice()).collect();
    let boot: Vec<&[Option<f64>]> = per_sample.iter().map(|s| s.1.as_slice()).collect();
    let bootstrap_excluded_draws = per_sample.iter().map(|s| s.2).sum();
    Ok(ApproximationReport {
        p: level.p,
        kind,
        q_levels: q.clone(),
        reference,
        normal,
        true_params,
        edgeworth_true,
        edgeworth_aux,
        edgeworth_hat: replicated_table(q, &hat, QuantileSource::EdgeworthHatA),
        bootstrap: replicated_table(q, &boot, QuantileSource::Bootstrap),
        bootstrap_excluded_draws,
    })
}

/// `Ê` and `Ŝ` per level over samples; `None` entries are excluded.
fn replicated_table(
    q_levels: &[f64],
    per_sample: &[&[Option<f64>]],
    source: QuantileSource,
) -> QuantileTable {
    let k = q_levels.len();
    let mut stats = ReplicationStats {
        mean: vec![f64::NAN; k],
        std_err: vec![f64::NAN; k],
        used: vec![0; k],
        excluded: vec![0; k],
    };
    for j in 0..k {
        let vals: Vec<f64> = per_sample.iter().filter_map(|s| s[j]).collect();
        stats.used[j] = vals.len();
        stats.excluded[j] = per_sample.len() - vals.len();
        if vals.is_empty() {
            continue;
        }
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        stats.mean[j] = mean;
        stats.std_err[j] = if vals.len() > 1 {
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
    }
    QuantileTable {
        q_levels: q_levels.to_vec(),
        quantiles: stats.mean.clone(),
        source,
        used: per_sample.len() - stats.excluded.iter().copied().max().unwrap_or(0),
        excluded: stats.excluded.iter().copied().max().unwrap_or(0),
        replication_stats: Some(stats),
    }
}

/// Output of one configured study.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyOutput {
    Accuracy(AccuracyReport),
    Approximation(Vec<ApproximationReport>),
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutput> {
    match cfg.study {
        StudyKind::BiasMse => bias_mse_study(cfg).map(StudyOutput::Accuracy),
        StudyKind::Approximation => {
            let mut all = Vec::new();
            for &kind in &cfg.kinds {
                all.extend(approximation_study(cfg, kind)?);
            }
            Ok(StudyOutput::Approximation(all))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::TABLE_Q_LEVELS;
    use crate::simkit::generate::{DistSpec, OutlierScenario};

    fn small_config(study: StudyKind) -> StudyConfig {
        StudyConfig {
            name: "small".into(),
            study,
            scenario: OutlierScenario {
                base: DistSpec::Normal {
                    mu: 0.0,
                    sigma_sq: 1.0,
                },
                outlier: DistSpec::Normal {
                    mu: 0.0,
                    sigma_sq: 9.0,
                },
                pop_size: 120,
                p_sequence: vec![0, 12],
            },
            n: 24,
            rho_targets: vec![0.9],
            replications: 40,
            mc_reference_r: 1000,
            q_levels: TABLE_Q_LEVELS.to_vec(),
            seed: 17,
            kinds: vec![StatKind::Gmd, StatKind::Var],
            bootstrap_populations: 1,
            bootstrap_resamples: 60,
        }
    }

    #[test]
    fn reference_checks_and_accounting() {
        let pop = PopulationFrame::new(&(0..50).map(|i| (i * i % 17) as f64).collect::<Vec<_>>()).unwrap();
        assert!(matches!(
            mc_reference_cdf(&pop, 10, StatKind::Gmd, 999, &TABLE_Q_LEVELS, 1),
            Err(Error::Argument(_))
        ));
        let t = mc_reference_cdf(&pop, 10, StatKind::Var, 2000, &TABLE_Q_LEVELS, 1).unwrap();
        assert_eq!(t.used + t.excluded, 2000);
        assert!(t.quantiles.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            t,
            mc_reference_cdf(&pop, 10, StatKind::Var, 2000, &TABLE_Q_LEVELS, 1).unwrap()
        );

        let flat = PopulationFrame::new(&[1.0; 30]).unwrap();
        assert!(matches!(
            mc_reference_cdf(&flat, 5, StatKind::Gmd, 1000, &TABLE_Q_LEVELS, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn accuracy_report_shape() {
        let cfg = small_config(StudyKind::BiasMse);
        let rep = bias_mse_study(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 2 * 3);
        assert_eq!(rep.correlations.len(), 2);
        for row in &rep.rows {
            assert!(row.rmse >= row.bias.abs());
        }
        assert_eq!(rep, bias_mse_study(&cfg).unwrap());
    }

    #[test]
    fn accuracy_helper() {
        let (bias, _, rmse, _) = accuracy(&[1.0, -1.0, 3.0, -3.0]);
        assert_eq!(bias, 0.0);
        assert_eq!(rmse, 5f64.sqrt());
    }

    #[test]
    fn approximation_report_shape() {
        let cfg = small_config(StudyKind::Approximation);
        let reports = approximation_study(&cfg, StatKind::Gmd).unwrap();
        assert_eq!(reports.len(), 2);
        for rep in &reports {
            let stats = rep.bootstrap.replication_stats.as_ref().unwrap();
            for j in 0..6 {
                assert_eq!(stats.used[j] + stats.excluded[j], 40);
            }
            assert_eq!(rep.reference.used + rep.reference.excluded, 1000);
        }
    }
}
