//! Population-side Hoeffding decomposition of `U_G` and `U_V` under
//! sampling without replacement: influence functions, variance components,
//! the exact variance, and the true one-term Edgeworth parameters.
//!
//! For a sample of size `n` from `N` units,
//! `U = EU + Σ_i g₁(X_i) + Σ_{i<j} g₂(X_i, X_j)` and
//! `Var U = n(N-n)/(N-1) σ₁² + C(n,2) C(N-n,2) / C(N-2,2) σ₂²`
//! with `σ₁² = E g₁²(X₁)` and `σ₂² = E g₂²(X₁, X₂)`.
//!
//! Every closed form here has a definition-based counterpart
//! (`*_by_definition`, [`edgeworth_params_oracle`]) built only from the kernel
//! `h` and conditional expectations, so the two can be checked against each
//! other.

use log::warn;

use crate::error::{Error, Result};
use crate::pairs;
use crate::population::{population_scale, PopulationFrame, StatKind};
use crate::spacing::{SecondOrderSums, Spacings};
use crate::special::NeumaierSum;

/// Influence values and variance components for one (statistic, n, population).
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingParts {
    pub kind: StatKind,
    pub n: usize,
    pub pop_size: usize,
    /// `g₁(x_k)` for every unit, in sorted-population order.
    pub g1: Vec<f64>,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

/// Parameters `(α, κ)` of the one-term Edgeworth expansion together with the
/// design quantities it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeworthParams {
    pub alpha: f64,
    pub kappa: f64,
    /// `τ² = n(1 - n/N)`.
    pub tau_sq: f64,
    pub n: usize,
    pub pop_size: usize,
    /// `min(n, N - n)`, informational.
    pub n_star: usize,
}

impl EdgeworthParams {
    pub fn new(alpha: f64, kappa: f64, n: usize, pop_size: usize) -> Result<Self> {
        if n == 0 || n >= pop_size {
            return Err(Error::Argument(format!(
                "need 0 < n < N, got n={n}, N={pop_size}"
            )));
        }
        if !alpha.is_finite() || !kappa.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite Edgeworth parameters (alpha={alpha}, kappa={kappa})"
            )));
        }
        Ok(Self {
            alpha,
            kappa,
            tau_sq: tau_sq(n, pop_size),
            n,
            pop_size,
            n_star: n.min(pop_size - n),
        })
    }

    /// Parameters of the plain normal approximation.
    pub fn normal(n: usize, pop_size: usize) -> Result<Self> {
        Self::new(0.0, 0.0, n, pop_size)
    }
}

/// How the GMD κ triple sum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaMethod {
    /// Pair representation `Σ_{k<l} g₂ g₁ g₁` with separable prefix sums, O(N).
    #[default]
    PairSum,
    /// Closed-form `c_{ijm}` sum grouped by case with power prefix sums, O(N²).
    Grouped,
    /// Literal `(N-1)³` loop over `c_{ijm}`; for cross-checks only.
    Triple,
}

/// Which form of the VAR κ to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarKappa {
    #[default]
    Full,
    /// Keep only the `μ₃²` term inside the bracket.
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeworthOptions {
    pub kappa_method: KappaMethod,
    pub var_kappa: VarKappa,
}

pub(crate) fn tau_sq(n: usize, pop_size: usize) -> f64 {
    let nf = n as f64;
    nf * (1.0 - nf / pop_size as f64)
}

fn check_design(pop: &PopulationFrame, n: usize, min_pop: usize) -> Result<()> {
    let big_n = pop.len();
    if big_n < min_pop {
        return Err(Error::Argument(format!(
            "population size must be at least {min_pop}, got {big_n}"
        )));
    }
    if n < 2 || n >= big_n {
        return Err(Error::Argument(format!(
            "sample size must satisfy 2 <= n < N, got n={n}, N={big_n}"
        )));
    }
    Ok(())
}

/// First-order influence function `g₁(x_k)` for every unit.
///
/// GMD: `g₁(x_k) = -(2/n) N/(N-2) Σ_i (𝕀{i >= k} - i/N) a_i Δ_i`.
/// VAR: `g₁(x_k) = (1/n) N/(N-2) ((x_k - b₁)² - μ₂)`.
pub fn influence_first(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<Vec<f64>> {
    check_design(pop, n, 3)?;
    let big_n = pop.len() as f64;
    let nf = n as f64;
    let fpc = big_n / (big_n - 2.0);
    Ok(match kind {
        StatKind::Gmd => {
            let factor = -2.0 / nf * fpc;
            Spacings::new(pop.spacings(), pop.weights_a())
                .linear_scores()
                .into_iter()
                .map(|l| factor * l)
                .collect()
        }
        StatKind::Var => {
            let factor = fpc / nf;
            let (b1, mu2) = (pop.mean(), pop.mu(2));
            pop.values()
                .iter()
                .map(|x| factor * ((x - b1) * (x - b1) - mu2))
                .collect()
        }
    })
}

fn kernel(kind: StatKind, n: usize) -> impl Fn(f64, f64) -> f64 {
    let norm = pairs(n);
    move |x, y| match kind {
        StatKind::Gmd => (x - y).abs() / norm,
        StatKind::Var => (x - y) * (x - y) / 2.0 / norm,
    }
}

/// `g₁(x_k) = (n-1) (N-1)/(N-2) E(h(X₁,X₂) - Eh | X₁ = x_k)`, averaging the
/// kernel over the `N - 1` partners. O(N²).
pub fn influence_first_by_definition(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<Vec<f64>> {
    check_design(pop, n, 3)?;
    let x = pop.values();
    let big_n = x.len();
    let h = kernel(kind, n);
    let eh = population_scale(pop, kind) / pairs(n);
    let factor = (n as f64 - 1.0) * (big_n as f64 - 1.0) / (big_n as f64 - 2.0);
    Ok((0..big_n)
        .map(|k| {
            let partner_mean =
                (0..big_n).filter(|&l| l != k).map(|l| h(x[k], x[l])).sum::<f64>() / (big_n as f64 - 1.0);
            factor * (partner_mean - eh)
        })
        .collect())
}

/// Evaluator for `g₂(x_k, x_l)` with the O(N) set-up done once.
pub struct SecondOrder<'a> {
    pop: &'a PopulationFrame,
    kind: StatKind,
    n: usize,
    sums: Option<SecondOrderSums>,
}

impl<'a> SecondOrder<'a> {
    pub fn new(pop: &'a PopulationFrame, n: usize, kind: StatKind) -> Result<Self> {
        check_design(pop, n, 3)?;
        let sums = match kind {
            StatKind::Gmd => Some(SecondOrderSums::new(pop.spacings(), pop.len() as f64)),
            StatKind::Var => None,
        };
        Ok(Self { pop, kind, n, sums })
    }

    pub fn kind(&self) -> StatKind {
        self.kind
    }

    /// `g₂(x_k, x_l)` for 0-based unit indices `k != l` of the sorted frame.
    pub fn eval(&self, k: usize, l: usize) -> Result<f64> {
        let big_n = self.pop.len();
        if k == l || k >= big_n || l >= big_n {
            return Err(Error::Argument(format!(
                "need distinct unit indices below {big_n}, got ({k}, {l})"
            )));
        }
        Ok(self.eval_unchecked(k.min(l), k.max(l)))
    }

    /// `k < l`, both in range.
    pub(crate) fn eval_unchecked(&self, k: usize, l: usize) -> f64 {
        let big_n = self.pop.len() as f64;
        let nf = self.n as f64;
        match &self.sums {
            Some(sums) => {
                let a = (big_n - 1.0) * (big_n - 2.0);
                -4.0 / (nf * (nf - 1.0)) * sums.eval(k + 1, l + 1) / a
            }
            None => {
                let x = self.pop.values();
                let (b1, mu2) = (self.pop.mean(), self.pop.mu(2));
                let dk = x[k] - b1;
                let dl = x[l] - b1;
                let diff = x[k] - x[l];
                (diff * diff + 2.0 * big_n / ((big_n - 1.0) * (big_n - 2.0)) * mu2
                    - big_n / (big_n - 2.0) * (dk * dk + dl * dl))
                    / (nf * (nf - 1.0))
            }
        }
    }
}

/// Second-order influence function `g₂(x_k, x_l)` (0-based, `k != l`).
///
/// Builds the prefix sums on every call; use [`SecondOrder`] for many pairs.
pub fn influence_second(pop: &PopulationFrame, n: usize, kind: StatKind, k: usize, l: usize) -> Result<f64> {
    SecondOrder::new(pop, n, kind)?.eval(k, l)
}

/// `g₂(x_k, x_l) = h(x_k, x_l) - Eh - (g₁(x_k) + g₁(x_l))/(n-1)` from a
/// definition-based `g₁` (see [`influence_first_by_definition`]).
pub fn influence_second_by_definition(
    pop: &PopulationFrame,
    n: usize,
    kind: StatKind,
    g1: &[f64],
    k: usize,
    l: usize,
) -> f64 {
    let x = pop.values();
    let h = kernel(kind, n);
    let eh = population_scale(pop, kind) / pairs(n);
    h(x[k], x[l]) - eh - (g1[k] + g1[l]) / (n as f64 - 1.0)
}

/// Closed-form `(σ₁², σ₂²)`.
pub fn sigma_components(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<(f64, f64)> {
    check_design(pop, n, 3)?;
    let big_n = pop.len() as f64;
    let nf = n as f64;
    let (s1, s2) = match kind {
        StatKind::Gmd => {
            let sp = Spacings::new(pop.spacings(), pop.weights_a());
            let s1 = 4.0 / (nf * nf) / ((big_n - 2.0) * (big_n - 2.0)) * sp.sigma1_bracket();
            let s2 = 16.0
                / (nf * nf * (nf - 1.0) * (nf - 1.0))
                / (big_n * (big_n - 1.0) * (big_n - 1.0) * (big_n - 2.0))
                * sp.sigma2_bracket();
            (s1, s2)
        }
        StatKind::Var => {
            let (mu2, mu4) = (pop.mu(2), pop.mu(4));
            let r = big_n / (big_n - 2.0);
            let s1 = r * r / (nf * nf) * (mu4 - mu2 * mu2);
            let s2 = 4.0 / (nf * nf * (nf - 1.0) * (nf - 1.0)) * big_n / ((big_n - 1.0) * (big_n - 2.0))
                * ((big_n * big_n - 3.0 * big_n + 3.0) / (big_n - 1.0) * mu2 * mu2 - mu4);
            (s1, s2)
        }
    };
    Ok((
        clamp_nonnegative(s1, s1, "sigma1^2")?,
        clamp_nonnegative(s2, s1, "sigma2^2")?,
    ))
}

/// Rounding can push a component slightly below zero; tiny negatives relative
/// to `σ₁²` are clamped, anything larger is a numerical failure.
fn clamp_nonnegative(value: f64, reference: f64, name: &str) -> Result<f64> {
    if value >= 0.0 {
        return Ok(value);
    }
    let scale = reference.abs().max(f64::MIN_POSITIVE);
    if value.abs() < 1e-12 * scale || value.abs() < 1e-300 {
        warn!("{name} = {value:e} clamped to zero");
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("{name} is negative: {value:e}")))
    }
}

/// Influence values and both variance components.
pub fn decompose(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<HoeffdingParts> {
    let g1 = influence_first(pop, n, kind)?;
    let (sigma1_sq, sigma2_sq) = sigma_components(pop, n, kind)?;
    Ok(HoeffdingParts {
        kind,
        n,
        pop_size: pop.len(),
        g1,
        sigma1_sq,
        sigma2_sq,
    })
}

/// Combines variance components into `Var U`.
pub fn variance_from_components(n: usize, pop_size: usize, sigma1_sq: f64, sigma2_sq: f64) -> f64 {
    let nf = n as f64;
    let big_n = pop_size as f64;
    let linear = nf * (big_n - nf) / (big_n - 1.0);
    let quadratic = pairs(n) * pairs(pop_size - n) / pairs(pop_size - 2);
    linear * sigma1_sq + quadratic * sigma2_sq
}

/// Exact `Var U` under sampling without replacement.
pub fn u_variance(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<f64> {
    check_design(pop, n, 4)?;
    let (s1, s2) = sigma_components(pop, n, kind)?;
    Ok(variance_from_components(n, pop.len(), s1, s2))
}

/// True `(α, κ)` from the closed forms, default options.
pub fn edgeworth_params_true(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<EdgeworthParams> {
    edgeworth_params_true_with(pop, n, kind, EdgeworthOptions::default())
}

/// True `(α, κ)` from the closed forms.
pub fn edgeworth_params_true_with(
    pop: &PopulationFrame,
    n: usize,
    kind: StatKind,
    opts: EdgeworthOptions,
) -> Result<EdgeworthParams> {
    check_design(pop, n, 4)?;
    let (sigma1_sq, _) = sigma_components(pop, n, kind)?;
    if sigma1_sq <= 0.0 {
        return Err(Error::Degenerate(
            "sigma1^2 is zero; the Edgeworth parameters are undefined".into(),
        ));
    }
    let big_n = pop.len() as f64;
    let nf = n as f64;
    let tau2 = tau_sq(n, pop.len());
    let inv_s3 = sigma1_sq.powf(-1.5);
    let r = big_n / (big_n - 2.0);
    let (alpha, kappa) = match kind {
        StatKind::Gmd => {
            let sp = Spacings::new(pop.spacings(), pop.weights_a());
            let nm2 = big_n - 2.0;
            let alpha = -inv_s3 * 8.0 / (nf * nf * nf) / (nm2 * nm2 * nm2) * sp.alpha_bracket();
            let csum = match opts.kappa_method {
                KappaMethod::PairSum => sp.kappa_sum_linear(),
                KappaMethod::Grouped => sp.kappa_sum_grouped(),
                KappaMethod::Triple => sp.kappa_sum_triple(),
            };
            let kappa = -inv_s3 * tau2 * 16.0 / (nf * nf * nf * (nf - 1.0)) * big_n
                / ((big_n - 1.0) * (big_n - 1.0) * nm2 * nm2 * nm2)
                * csum;
            (alpha, kappa)
        }
        StatKind::Var => {
            let (mu2, mu3, mu4, mu6) = (pop.mu(2), pop.mu(3), pop.mu(4), pop.mu(6));
            let alpha = inv_s3 / (nf * nf * nf) * r * r * r * (2.0 * mu2 * mu2 * mu2 - 3.0 * mu4 * mu2 + mu6);
            let kappa = inv_s3 * tau2 * 2.0 / (nf * nf * nf * (nf - 1.0)) * r * r * r / (big_n - 1.0)
                * var_kappa_bracket(big_n, mu2, mu3, mu4, mu6, opts.var_kappa);
            (alpha, kappa)
        }
    };
    EdgeworthParams::new(alpha, kappa, n, pop.len())
}

/// `-(N-2)μ₃² - (2N-1)/(N-1) μ₄μ₂ + N/(N-1) μ₂³ + μ₆`, or its first term only.
pub(crate) fn var_kappa_bracket(
    big_n: f64,
    mu2: f64,
    mu3: f64,
    mu4: f64,
    mu6: f64,
    variant: VarKappa,
) -> f64 {
    let lead = -(big_n - 2.0) * mu3 * mu3;
    match variant {
        VarKappa::Simplified => lead,
        VarKappa::Full => {
            lead - (2.0 * big_n - 1.0) / (big_n - 1.0) * mu4 * mu2
                + big_n / (big_n - 1.0) * mu2 * mu2 * mu2
                + mu6
        }
    }
}

/// `(α, κ)` straight from their definitions
/// `α = σ₁⁻³ E g₁³(X₁)`, `κ = σ₁⁻³ τ² E g₂(X₁,X₂) g₁(X₁) g₁(X₂)`,
/// with `g₁` and `g₂` built from the kernel alone. O(N²).
pub fn edgeworth_params_oracle(pop: &PopulationFrame, n: usize, kind: StatKind) -> Result<EdgeworthParams> {
    check_design(pop, n, 4)?;
    let g1 = influence_first_by_definition(pop, n, kind)?;
    let big_n = pop.len();
    let sigma1_sq = g1.iter().map(|g| g * g).sum::<f64>() / big_n as f64;
    if sigma1_sq <= 0.0 {
        return Err(Error::Degenerate(
            "sigma1^2 is zero; the Edgeworth parameters are undefined".into(),
        ));
    }
    let inv_s3 = sigma1_sq.powf(-1.5);
    let third = g1.iter().map(|g| g * g * g).sum::<f64>() / big_n as f64;
    let mut cross = NeumaierSum::default();
    for k in 0..big_n {
        for l in k + 1..big_n {
            let g2 = influence_second_by_definition(pop, n, kind, &g1, k, l);
            cross.add(g2 * g1[k] * g1[l]);
        }
    }
    let alpha = inv_s3 * third;
    let kappa = inv_s3 * tau_sq(n, big_n) * cross.value() / pairs(big_n);
    EdgeworthParams::new(alpha, kappa, n, big_n)
}
