//! The fixed finite population and its exact scale parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs;

/// Selects between Gini's mean difference and the empirical variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Gmd,
    Var,
}

impl StatKind {
    pub const ALL: [StatKind; 2] = [StatKind::Gmd, StatKind::Var];
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatKind::Gmd => f.write_str("gmd"),
            StatKind::Var => f.write_str("var"),
        }
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gmd" | "g" => Ok(StatKind::Gmd),
            "var" | "v" | "variance" => Ok(StatKind::Var),
            other => Err(Error::Argument(format!("unknown statistic kind `{other}`"))),
        }
    }
}

/// Mean and central moments `m_2..=m_6` of a slice, two-pass.
pub(crate) fn centered_moments(values: &[f64]) -> (f64, [f64; 5]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut acc = [0.0; 5];
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        let d3 = d2 * d;
        acc[0] += d2;
        acc[1] += d3;
        acc[2] += d2 * d2;
        acc[3] += d3 * d2;
        acc[4] += d3 * d3;
    }
    for a in &mut acc {
        *a /= n;
    }
    (mean, acc)
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Data(format!("non-finite value at position {i}"))),
        None => Ok(()),
    }
}

pub(crate) fn sort_values(values: &mut [f64]) {
    values.sort_by(f64::total_cmp);
}

pub(crate) fn spacings_of(sorted: &[f64]) -> Vec<f64> {
    sorted.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `a_i = (2i - m)/m` for `i = 1..m-1`.
pub(crate) fn rank_weights(m: usize) -> Vec<f64> {
    let mf = m as f64;
    (1..m).map(|i| (2.0 * i as f64 - mf) / mf).collect()
}

/// `C(m,2)^{-1} Σ_j (2j - m - 1) x_{j:m}` over a sorted slice.
pub(crate) fn gmd_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let mf = m as f64;
    let total: f64 = sorted
        .iter()
        .enumerate()
        .map(|(j, &x)| (2.0 * (j + 1) as f64 - mf - 1.0) * x)
        .sum();
    total / pairs(m)
}

/// A fixed finite population `x_1 <= ... <= x_N`.
///
/// Only the sorted values are retained; all derived quantities are computed
/// once at construction and the frame is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationFrame {
    values: Vec<f64>,
    spacings: Vec<f64>,
    weights_a: Vec<f64>,
    mean: f64,
    moments: [f64; 5],
}

impl PopulationFrame {
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::Size(format!(
                "a population needs at least 2 values, got {}",
                raw.len()
            )));
        }
        check_finite(raw)?;
        let mut values = raw.to_vec();
        sort_values(&mut values);
        let spacings = spacings_of(&values);
        let weights_a = rank_weights(values.len());
        let (mean, moments) = centered_moments(&values);
        Ok(Self {
            values,
            spacings,
            weights_a,
            mean,
            moments,
        })
    }

    /// Population size `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted population values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Δ_i = x_{i+1} - x_i`, length `N - 1`.
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    /// `a_i = (2i - N)/N`, length `N - 1`.
    pub fn weights_a(&self) -> &[f64] {
        &self.weights_a
    }

    /// Population mean `b_1`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Central moment `μ_k` for `2 <= k <= 6`.
    pub fn central_moment(&self, k: usize) -> Result<f64> {
        if !(2..=6).contains(&k) {
            return Err(Error::Argument(format!(
                "central moment order must be in 2..=6, got {k}"
            )));
        }
        Ok(self.moments[k - 2])
    }

    pub(crate) fn mu(&self, k: usize) -> f64 {
        self.moments[k - 2]
    }

    /// `G` or `V` of the population.
    pub fn scale(&self, kind: StatKind) -> f64 {
        population_scale(self, kind)
    }
}

/// Builds a frame from unsorted raw values; see [`PopulationFrame::new`].
pub fn build_population(raw: &[f64]) -> Result<PopulationFrame> {
    PopulationFrame::new(raw)
}

/// Population scale parameter: `G` (mean absolute pair difference) or `V`
/// (half the mean squared pair difference), in O(N) from the sorted values.
pub fn population_scale(pop: &PopulationFrame, kind: StatKind) -> f64 {
    let n = pop.len() as f64;
    match kind {
        StatKind::Gmd => gmd_sorted(pop.values()),
        StatKind::Var => n / (n - 1.0) * pop.mu(2),
    }
}

/// Reference O(N²) pair sum for the population scale parameters.
pub fn population_scale_pairwise(values: &[f64], kind: StatKind) -> f64 {
    let mut total = 0.0;
    for (i, &x) in values.iter().enumerate() {
        for &y in &values[i + 1..] {
            total += match kind {
                StatKind::Gmd => (x - y).abs(),
                StatKind::Var => (x - y) * (x - y) / 2.0,
            };
        }
    }
    total / pairs(values.len())
}

/// `(G², V)` evaluated through the double sums over spacings.
///
/// `G² = 4/(N²(N-1)²) [Σ i²(N-i)²Δ_i² + 2 Σ_{i<j} ij(N-i)(N-j)Δ_iΔ_j]` and
/// `V = 1/(N(N-1)) [Σ i(N-i)Δ_i² + 2 Σ_{i<j} i(N-j)Δ_iΔ_j]`. The inner sums
/// over `i < j` are carried as running prefixes.
pub fn delta_form(pop: &PopulationFrame) -> (f64, f64) {
    let big_n = pop.len() as f64;
    let mut g_diag = 0.0;
    let mut g_cross = 0.0;
    let mut g_prefix = 0.0;
    let mut v_diag = 0.0;
    let mut v_cross = 0.0;
    let mut v_prefix = 0.0;
    for (idx, &d) in pop.spacings().iter().enumerate() {
        let i = (idx + 1) as f64;
        let w = i * (big_n - i);
        g_diag += w * w * d * d;
        g_cross += g_prefix * w * d;
        g_prefix += w * d;
        v_diag += w * d * d;
        v_cross += v_prefix * (big_n - i) * d;
        v_prefix += i * d;
    }
    let g_sq = 4.0 / (big_n * big_n * (big_n - 1.0) * (big_n - 1.0)) * (g_diag + 2.0 * g_cross);
    let v = (v_diag + 2.0 * v_cross) / (big_n * (big_n - 1.0));
    (g_sq, v)
}

/// `N^{-1} Σ (x_i - b_1)^k`.
pub fn central_moment(pop: &PopulationFrame, k: usize) -> Result<f64> {
    pop.central_moment(k)
}
