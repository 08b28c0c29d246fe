//! Approximations to the distribution of the Studentized statistic:
//! standard normal, one-term Edgeworth (true or estimated parameters) and
//! the finite-population bootstrap.

use std::fmt;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hoeffding::EdgeworthParams;
use crate::population::{population_scale, sort_values, PopulationFrame, StatKind};
use crate::simkit::rng::{substream, Stream};
use crate::simkit::sampling::IndexSampler;
use crate::ustat::{studentize_in_place, SampleDraw};

pub use crate::special::{normal_cdf, normal_pdf, normal_quantile};

/// Quantile levels reported in the approximation tables.
pub const TABLE_Q_LEVELS: [f64; 6] = [0.01, 0.05, 0.10, 0.90, 0.95, 0.99];

const SEARCH_LIMIT: f64 = 12.0;
const SEARCH_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantileSource {
    MCReference,
    Normal,
    EdgeworthTrue,
    EdgeworthHatA,
    EdgeworthHatZ,
    Bootstrap,
}

impl fmt::Display for QuantileSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuantileSource::MCReference => "mc_reference",
            QuantileSource::Normal => "normal",
            QuantileSource::EdgeworthTrue => "edgeworth_true",
            QuantileSource::EdgeworthHatA => "edgeworth_hat",
            QuantileSource::EdgeworthHatZ => "edgeworth_aux",
            QuantileSource::Bootstrap => "bootstrap",
        };
        f.write_str(s)
    }
}

/// Mean `Ê` and standard deviation `Ŝ` of sample-dependent quantiles over
/// repeated samples, per level.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Samples contributing to each level.
    pub used: Vec<usize>,
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub q_levels: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub source: QuantileSource,
    pub replication_stats: Option<ReplicationStats>,
    /// Draws entering the empirical distribution, when there is one.
    pub used: usize,
    /// Degenerate draws left out of it.
    pub excluded: usize,
}

impl QuantileTable {
    fn exact(q_levels: &[f64], quantiles: Vec<f64>, source: QuantileSource) -> Self {
        Self {
            q_levels: q_levels.to_vec(),
            quantiles,
            source,
            replication_stats: None,
            used: 0,
            excluded: 0,
        }
    }

    /// Quantiles of a pool of draws; sorts the pool.
    pub fn from_pool(
        q_levels: &[f64],
        pool: &mut [f64],
        excluded: usize,
        source: QuantileSource,
    ) -> Result<Self> {
        check_levels(q_levels)?;
        if pool.is_empty() {
            return Err(Error::Degenerate(format!(
                "all {excluded} draws were degenerate; no {source} distribution"
            )));
        }
        sort_values(pool);
        let quantiles = q_levels.iter().map(|&q| empirical_quantile(pool, q)).collect();
        Ok(Self {
            q_levels: q_levels.to_vec(),
            quantiles,
            source,
            replication_stats: None,
            used: pool.len(),
            excluded,
        })
    }

    /// Quantile at level `q`, if tabulated.
    pub fn at(&self, q: f64) -> Option<f64> {
        self.q_levels
            .iter()
            .position(|&l| l == q)
            .map(|i| self.quantiles[i])
    }
}

/// Levels must lie in `(0, 1)` and increase strictly.
pub fn check_levels(q_levels: &[f64]) -> Result<()> {
    if q_levels.is_empty() {
        return Err(Error::Argument("no quantile levels given".into()));
    }
    if let Some(q) = q_levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::Argument(format!("quantile level {q} outside (0, 1)")));
    }
    if q_levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("quantile levels must increase strictly".into()));
    }
    Ok(())
}

/// Order statistic at rank `⌈qR⌉` of a sorted pool of size `R`.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let r = sorted.len();
    let rank = ((q * r as f64).ceil() as usize).clamp(1, r);
    sorted[rank - 1]
}

pub fn normal_table(q_levels: &[f64]) -> Result<QuantileTable> {
    check_levels(q_levels)?;
    let quantiles = q_levels
        .iter()
        .map(|&q| normal_quantile(q))
        .collect::<Result<_>>()?;
    Ok(QuantileTable::exact(q_levels, quantiles, QuantileSource::Normal))
}

/// One-term Edgeworth expansion `H(y)`, unclamped.
pub fn edgeworth_cdf(y: f64, p: &EdgeworthParams) -> f64 {
    let ratio = p.n as f64 / p.pop_size as f64;
    let y2 = y * y;
    let poly = (1.0 - 2.0 * ratio + (2.0 - ratio) * y2) * p.alpha + 3.0 * (y2 + 1.0) * p.kappa;
    normal_cdf(y) + poly * normal_pdf(y) / (6.0 * p.tau_sq.sqrt())
}

/// `H(y)` clamped to `[0, 1]`.
pub fn edgeworth_cdf_clamped(y: f64, p: &EdgeworthParams) -> f64 {
    edgeworth_cdf(y, p).clamp(0.0, 1.0)
}

/// Root of `H(y) = q` on `[-12, 12]`. When the expansion is not monotone
/// and several roots exist, the one closest to `Φ⁻¹(q)` is returned.
pub fn edgeworth_quantile(q: f64, p: &EdgeworthParams) -> Result<f64> {
    let z = normal_quantile(q)?;
    let f = |y: f64| edgeworth_cdf_clamped(y, p) - q;
    let steps = (2.0 * SEARCH_LIMIT / SEARCH_STEP).round() as usize;
    let grid = |i: usize| -SEARCH_LIMIT + i as f64 * SEARCH_STEP;

    let mut best: Option<f64> = None;
    let mut consider = |root: f64| {
        if best.is_none_or(|b| (root - z).abs() < (b - z).abs()) {
            best = Some(root);
        }
    };
    let mut lo = grid(0);
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        consider(lo);
    }
    for i in 1..=steps {
        let hi = grid(i);
        let f_hi = f(hi);
        if f_hi == 0.0 {
            consider(hi);
        } else if f_lo != 0.0 && (f_lo < 0.0) != (f_hi < 0.0) {
            consider(bisect(&f, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    best.ok_or_else(|| {
        Error::Numerical(format!(
            "Edgeworth expansion does not reach level {q} on [-12, 12] (alpha={}, kappa={})",
            p.alpha, p.kappa
        ))
    })
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn edgeworth_table(
    q_levels: &[f64],
    p: &EdgeworthParams,
    source: QuantileSource,
) -> Result<QuantileTable> {
    check_levels(q_levels)?;
    let quantiles = q_levels
        .iter()
        .map(|&q| edgeworth_quantile(q, p))
        .collect::<Result<_>>()?;
    Ok(QuantileTable::exact(q_levels, quantiles, source))
}

/// Sizes of the bootstrap: empirical populations and resamples from each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapPlan {
    pub outer_populations: usize,
    pub inner_resamples: usize,
    pub seed: u64,
}

impl BootstrapPlan {
    pub fn new(outer_populations: usize, inner_resamples: usize, seed: u64) -> Result<Self> {
        if outer_populations == 0 || inner_resamples == 0 {
            return Err(Error::Argument(format!(
                "bootstrap sizes must be positive, got B_pop={outer_populations}, B_res={inner_resamples}"
            )));
        }
        Ok(Self {
            outer_populations,
            inner_resamples,
            seed,
        })
    }
}

/// `k` copies of the sample plus, when `l = N - kn > 0`, a subsample of
/// size `l` drawn without replacement from it.
pub fn bootstrap_population<R: rand::Rng + ?Sized>(s: &SampleDraw, rng: &mut R) -> Result<PopulationFrame> {
    let n = s.len();
    let big_n = s.parent_n();
    let (k, l) = (big_n / n, big_n % n);
    let mut values = Vec::with_capacity(big_n);
    for _ in 0..k {
        values.extend_from_slice(s.values());
    }
    if l > 0 {
        let mut sampler = IndexSampler::new(n);
        values.extend(sampler.draw(l, rng).iter().map(|&i| s.values()[i]));
    }
    PopulationFrame::new(&values)
}

/// Pooled bootstrap distribution of `(Ũ - E(Ũ | X̃)) / S̃`.
///
/// The centring is the population parameter of each empirical population.
/// Every resample uses its own substream keyed by
/// `(seed, population index, resample index)`.
pub fn bootstrap_distribution(
    s: &SampleDraw,
    kind: StatKind,
    plan: BootstrapPlan,
    q_levels: &[f64],
) -> Result<QuantileTable> {
    check_levels(q_levels)?;
    let (mut pool, excluded) = bootstrap_pool(s, kind, plan)?;
    if excluded > 0 {
        warn!("{excluded} degenerate bootstrap resamples excluded");
    }
    QuantileTable::from_pool(q_levels, &mut pool, excluded, QuantileSource::Bootstrap)
}

/// Studentized bootstrap draws and the number of degenerate ones.
pub fn bootstrap_pool(s: &SampleDraw, kind: StatKind, plan: BootstrapPlan) -> Result<(Vec<f64>, usize)> {
    let n = s.len();
    if n < 3 {
        return Err(Error::Size(format!("the bootstrap needs n >= 3, got {n}")));
    }
    let outer = if s.parent_n().is_multiple_of(n) {
        1
    } else {
        plan.outer_populations
    };
    let mut pool = Vec::with_capacity(outer * plan.inner_resamples);
    let mut excluded = 0;
    for b in 0..outer {
        let mut rng = substream(plan.seed, Stream::BootstrapPopulation, &[b as u64]);
        let tilde = bootstrap_population(s, &mut rng)?;
        let center = population_scale(&tilde, kind);
        let draws = resample_studentized(&tilde, n, kind, center, plan.seed, b as u64, plan.inner_resamples);
        for d in draws {
            match d {
                Some(t) => pool.push(t),
                None => excluded += 1,
            }
        }
    }
    Ok((pool, excluded))
}

fn resample_studentized(
    tilde: &PopulationFrame,
    n: usize,
    kind: StatKind,
    center: f64,
    seed: u64,
    population: u64,
    count: usize,
) -> Vec<Option<f64>> {
    let values = tilde.values();
    let big_n = values.len();
    (0..count)
        .into_par_iter()
        .map_init(
            || {
                (
                    IndexSampler::new(big_n),
                    Vec::with_capacity(n),
                    Vec::with_capacity(n),
                )
            },
            |(sampler, buf, scratch), r| {
                let mut rng = substream(seed, Stream::BootstrapResample, &[population, r as u64]);
                buf.clear();
                buf.extend(sampler.draw(n, &mut rng).iter().map(|&i| values[i]));
                studentize_in_place(buf, big_n, kind, center, scratch)
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn params(alpha: f64, kappa: f64, n: usize, big_n: usize) -> EdgeworthParams {
        EdgeworthParams::new(alpha, kappa, n, big_n).unwrap()
    }

    #[test]
    fn normal_constants() {
        let t = normal_table(&TABLE_Q_LEVELS).unwrap();
        let want = [-2.326, -1.645, -1.282, 1.282, 1.645, 2.326];
        for (got, w) in t.quantiles.iter().zip(want) {
            assert_abs_diff_eq!(*got, w, epsilon = 5e-4);
        }
        assert!(normal_table(&[0.5, 0.1]).is_err());
        assert!(normal_table(&[0.0]).is_err());
        assert!(normal_table(&[]).is_err());
    }

    #[test]
    fn edgeworth_reduces_to_normal() {
        let p = params(0.0, 0.0, 200, 1000);
        for i in -50..=50 {
            let y = i as f64 * 0.2;
            assert_eq!(edgeworth_cdf(y, &p), normal_cdf(y));
        }
        let q = edgeworth_quantile(0.01, &p).unwrap();
        assert_abs_diff_eq!(q, -2.326, epsilon = 5e-4);
    }

    #[test]
    fn edgeworth_direct_value() {
        let p = params(-0.3, -0.2, 200, 1000);
        let want = 0.5 + (0.6 * -0.3 + 3.0 * -0.2) * normal_pdf(0.0) / (6.0 * 160f64.sqrt());
        assert_abs_diff_eq!(edgeworth_cdf(0.0, &p), want, epsilon = 1e-15);
        assert_abs_diff_eq!(edgeworth_cdf(0.0, &p), 0.49590, epsilon = 5e-6);
        assert_eq!(edgeworth_cdf_clamped(-40.0, &p), 0.0);
        assert_eq!(edgeworth_cdf_clamped(40.0, &p), 1.0);
    }

    #[test]
    fn edgeworth_parity() {
        // The correction is an even function times φ, so
        // H(y) + H(-y) - 1 = 2·correction(y).
        let p = params(0.8, -0.35, 30, 120);
        let ratio = 30.0 / 120.0;
        for i in 0..60 {
            let y = i as f64 * 0.1;
            let corr = ((1.0 - 2.0 * ratio + (2.0 - ratio) * y * y) * p.alpha
                + 3.0 * (y * y + 1.0) * p.kappa)
                * normal_pdf(y)
                / (6.0 * p.tau_sq.sqrt());
            let lhs = edgeworth_cdf(y, &p) + edgeworth_cdf(-y, &p) - 1.0;
            assert_abs_diff_eq!(lhs, 2.0 * corr, epsilon = 1e-14);
        }
    }

    #[test]
    fn edgeworth_round_trip() {
        let p = params(-0.4, 0.25, 200, 1000);
        for q in [0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98] {
            let y = edgeworth_quantile(q, &p).unwrap();
            assert_abs_diff_eq!(edgeworth_cdf(y, &p), q, epsilon = 1e-9);
        }
    }

    #[test]
    fn edgeworth_picks_root_near_normal() {
        // Strong correction at tiny tau: H is not monotone, several roots.
        let p = params(6.0, 3.0, 3, 6);
        let q = 0.05;
        let y = edgeworth_quantile(q, &p).unwrap();
        let z = normal_quantile(q).unwrap();
        let mut roots = Vec::new();
        let mut prev = edgeworth_cdf_clamped(-12.0, &p) - q;
        for i in 1..=24_000 {
            let t = -12.0 + i as f64 * 0.001;
            let cur = edgeworth_cdf_clamped(t, &p) - q;
            if (prev < 0.0) != (cur < 0.0) {
                roots.push(t);
            }
            prev = cur;
        }
        let nearest = roots
            .iter()
            .copied()
            .min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()))
            .unwrap();
        assert!((y - nearest).abs() < 2e-3, "{y} vs {nearest} among {roots:?}");
    }

    #[test]
    fn edgeworth_without_root_is_numerical_error() {
        // the correction swamps Φ away from 0 and H(0) = 1/2, so H never falls to 0.3
        let p = params(1e300, 0.0, 3, 6);
        assert!(matches!(edgeworth_quantile(0.3, &p), Err(Error::Numerical(_))));
    }

    #[test]
    fn empirical_quantile_convention() {
        let pool: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(empirical_quantile(&pool, 0.05), 1.0);
        assert_eq!(empirical_quantile(&pool, 0.1), 1.0);
        assert_eq!(empirical_quantile(&pool, 0.11), 2.0);
        assert_eq!(empirical_quantile(&pool, 0.99), 10.0);
    }

    #[test]
    fn bootstrap_population_copies() {
        let s = SampleDraw::new(vec![1.0, 2.0, 4.0], 6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let tilde = bootstrap_population(&s, &mut rng).unwrap();
        assert_eq!(tilde.values(), &[1.0, 1.0, 2.0, 2.0, 4.0, 4.0]);
        // pair sum 28 over C(6,2) = 15 pairs
        assert_abs_diff_eq!(
            population_scale(&tilde, StatKind::Var),
            28.0 / 15.0,
            epsilon = 1e-14
        );

        let s = SampleDraw::new(vec![1.0, 2.0, 4.0, 8.0], 5).unwrap();
        let tilde = bootstrap_population(&s, &mut rng).unwrap();
        assert_eq!(tilde.len(), 5);
    }

    #[test]
    fn bootstrap_extra_element_is_uniform() {
        let s = SampleDraw::new(vec![1.0, 2.0, 4.0], 7).unwrap();
        let mut counts = [0usize; 3];
        let trials = 30_000;
        for t in 0..trials {
            let mut rng = substream(99, Stream::BootstrapPopulation, &[t]);
            let tilde = bootstrap_population(&s, &mut rng).unwrap();
            let total: f64 = tilde.values().iter().sum();
            let extra = total - 14.0;
            let idx = [1.0, 2.0, 4.0].iter().position(|&v| v == extra).unwrap();
            counts[idx] += 1;
        }
        let expected = trials as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 0.999 quantile of chi-square with 2 degrees of freedom
        assert!(chi2 < 13.816, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn bootstrap_degenerate_and_deterministic() {
        let flat = SampleDraw::new(vec![3.0; 5], 10).unwrap();
        let plan = BootstrapPlan::new(1, 50, 5).unwrap();
        assert!(matches!(
            bootstrap_distribution(&flat, StatKind::Gmd, plan, &TABLE_Q_LEVELS),
            Err(Error::Degenerate(_))
        ));
        let s = SampleDraw::new(vec![0.1, 0.5, 1.7, 2.0, 3.3, 3.9, 6.0], 21).unwrap();
        let a = bootstrap_distribution(&s, StatKind::Var, plan, &TABLE_Q_LEVELS).unwrap();
        let b = bootstrap_distribution(&s, StatKind::Var, plan, &TABLE_Q_LEVELS).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.used + a.excluded, 50);
        // l = 0 forces one empirical population
        let many = BootstrapPlan::new(7, 50, 5).unwrap();
        assert_eq!(
            bootstrap_distribution(&s, StatKind::Var, many, &TABLE_Q_LEVELS).unwrap(),
            a
        );
        assert!(BootstrapPlan::new(0, 10, 1).is_err());
    }
}
