//! Sample statistics `U_G`, `U_V` and the jackknife variance estimator.

use crate::error::{Error, Result};
use crate::pairs;
use crate::population::{
    centered_moments, check_finite, gmd_sorted, rank_weights, sort_values, spacings_of, StatKind,
};

/// One sample drawn without replacement from a population of `parent_n`
/// units.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    values: Vec<f64>,
    order_stats: Vec<f64>,
    spacings: Vec<f64>,
    weights_a: Vec<f64>,
    mean: f64,
    moments: [f64; 5],
    parent_n: usize,
}

impl SampleDraw {
    /// Requires `2 <= n < parent_n` and finite values.
    pub fn new(values: Vec<f64>, parent_n: usize) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::Size(format!("a sample needs at least 2 values, got {n}")));
        }
        if n >= parent_n {
            return Err(Error::Size(format!(
                "sample size {n} must be smaller than the population size {parent_n}"
            )));
        }
        check_finite(&values)?;
        let mut order_stats = values.clone();
        sort_values(&mut order_stats);
        let spacings = spacings_of(&order_stats);
        let weights_a = rank_weights(n);
        let (mean, moments) = centered_moments(&order_stats);
        Ok(Self {
            values,
            order_stats,
            spacings,
            weights_a,
            mean,
            moments,
            parent_n,
        })
    }

    /// Sample size `n`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in draw order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `X_{1:n} <= ... <= X_{n:n}`.
    pub fn order_stats(&self) -> &[f64] {
        &self.order_stats
    }

    /// `Δ_{i:n} = X_{i+1:n} - X_{i:n}`.
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    /// `A_i = (2i - n)/n`.
    pub fn weights_a(&self) -> &[f64] {
        &self.weights_a
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample central moment `m_k`, `2 <= k <= 6`.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if !(2..=6).contains(&k) {
            return Err(Error::Argument(format!(
                "sample moment order must be in 2..=6, got {k}"
            )));
        }
        Ok(self.moments[k - 2])
    }

    pub(crate) fn m(&self, k: usize) -> f64 {
        self.moments[k - 2]
    }

    /// Size of the population the sample was drawn from.
    pub fn parent_n(&self) -> usize {
        self.parent_n
    }

    /// `τ² = n(1 - n/N)`.
    pub fn tau_sq(&self) -> f64 {
        let n = self.len() as f64;
        n * (1.0 - n / self.parent_n as f64)
    }
}

/// `U_G` or `U_V` of the sample.
pub fn u_statistic(s: &SampleDraw, kind: StatKind) -> f64 {
    match kind {
        StatKind::Gmd => gmd_order_form(s),
        StatKind::Var => {
            let n = s.len() as f64;
            n / (n - 1.0) * s.m(2)
        }
    }
}

/// `U_G = C(n,2)^{-1} Σ_j (2j - n - 1) X_{j:n}`.
pub fn gmd_order_form(s: &SampleDraw) -> f64 {
    gmd_sorted(s.order_stats())
}

/// Reference O(n²) pair average of the kernel.
pub fn u_statistic_pairwise(values: &[f64], kind: StatKind) -> f64 {
    crate::population::population_scale_pairwise(values, kind)
}

/// Leave-one-out values `U_{n-1}(𝕏 \ X_i)`, in order-statistic order.
pub fn leave_one_out(s: &SampleDraw, kind: StatKind) -> Result<Vec<f64>> {
    let n = s.len();
    if n < 3 {
        return Err(Error::Size(format!(
            "the jackknife needs at least 3 observations, got {n}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    loo_sorted_into(s.order_stats(), kind, &mut out);
    Ok(out)
}

/// Leave-one-out values of a sorted slice of length at least 3, written to `out`.
pub(crate) fn loo_sorted_into(x: &[f64], kind: StatKind, out: &mut Vec<f64>) {
    let n = x.len();
    let nf = n as f64;
    out.clear();
    match kind {
        StatKind::Gmd => {
            // T = Σ_{i<j} |X_i - X_j|; removing X_r subtracts its distance sum.
            let total_pairs = gmd_sorted(x) * pairs(n);
            let sum_all: f64 = x.iter().sum();
            let denom = pairs(n - 1);
            let mut below = 0.0;
            out.extend(x.iter().enumerate().map(|(r, &xr)| {
                let rf = r as f64;
                let above = sum_all - below - xr;
                let dist = xr * rf - below + above - xr * (nf - 1.0 - rf);
                below += xr;
                (total_pairs - dist) / denom
            }));
        }
        StatKind::Var => {
            // Downdate the centred sum of squares.
            let mean = x.iter().sum::<f64>() / nf;
            let ss: f64 = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let ratio = nf / (nf - 1.0);
            out.extend(x.iter().map(|&xi| {
                let d = xi - mean;
                ((ss - d * d * ratio) / (nf - 2.0)).max(0.0)
            }));
        }
    }
}

/// Sorts `buf` in place and returns `(U - center)/S`, or `None` when the
/// jackknife variance vanishes. `buf` must hold at least 3 finite values.
pub(crate) fn studentize_in_place(
    buf: &mut [f64],
    parent_n: usize,
    kind: StatKind,
    center: f64,
    scratch: &mut Vec<f64>,
) -> Option<f64> {
    sort_values(buf);
    let u = match kind {
        StatKind::Gmd => gmd_sorted(buf),
        StatKind::Var => {
            let nf = buf.len() as f64;
            let mean = buf.iter().sum::<f64>() / nf;
            buf.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0)
        }
    };
    loo_sorted_into(buf, kind, scratch);
    let s_sq = jackknife_from_leave_one_out(scratch, parent_n);
    (s_sq > 0.0).then(|| (u - center) / s_sq.sqrt())
}

/// Jackknife variance estimator
/// `S² = (1 - n/N) (n-1)/n Σ_i (U_{n-1}(𝕏 \ X_i) - Ū)²`.
pub fn jackknife_variance(s: &SampleDraw, kind: StatKind) -> Result<f64> {
    let loo = leave_one_out(s, kind)?;
    Ok(jackknife_from_leave_one_out(&loo, s.parent_n()))
}

pub(crate) fn jackknife_from_leave_one_out(loo: &[f64], parent_n: usize) -> f64 {
    let nf = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / nf;
    let ss: f64 = loo.iter().map(|u| (u - mean) * (u - mean)).sum();
    (1.0 - nf / parent_n as f64) * (nf - 1.0) / nf * ss
}

/// `(U - center)/S` with `S` the jackknife standard error.
pub fn studentized_value(s: &SampleDraw, kind: StatKind, center: f64) -> Result<f64> {
    let s_sq = jackknife_variance(s, kind)?;
    if s_sq <= 0.0 {
        return Err(Error::DegenerateSample(
            "jackknife variance is zero; the Studentized statistic is undefined".into(),
        ));
    }
    Ok((u_statistic(s, kind) - center) / s_sq.sqrt())
}
