//! Special functions: the standard normal law, the regularized incomplete
//! Beta function and compensated summation.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Standard normal density `φ(y)`.
#[inline]
pub fn normal_pdf(y: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * y * y).exp()
}

/// Standard normal distribution function `Φ(y)`.
#[inline]
pub fn normal_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y / std::f64::consts::SQRT_2)
}

/// Standard normal quantile `Φ^{-1}(q)` for `q` in `(0, 1)`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Argument(format!(
            "quantile level must lie in (0, 1), got {q}"
        )));
    }
    let std = Normal::standard();
    let mut y = std.inverse_cdf(q);
    // One Newton step on Φ(y) = q tightens the tails.
    let pdf = normal_pdf(y);
    if pdf > 0.0 {
        y -= (normal_cdf(y) - q) / pdf;
    }
    Ok(y)
}

/// Regularized incomplete Beta function `I_t(u, v)`.
///
/// Evaluated by the modified Lentz continued fraction on whichever side of
/// `t = (u + 1)/(u + v + 2)` converges fastest, using
/// `I_t(u, v) = 1 - I_{1-t}(v, u)` for the other side.
pub fn regularized_incomplete_beta(t: f64, u: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) || t.is_nan() {
        return Err(Error::Argument(format!("t must lie in [0, 1], got {t}")));
    }
    if !(u > 0.0 && u.is_finite() && v > 0.0 && v.is_finite()) {
        return Err(Error::Argument(format!(
            "shape parameters must be positive and finite, got ({u}, {v})"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(u + v) - ln_gamma(u) - ln_gamma(v) + u * t.ln() + v * (1.0 - t).ln();
    let front = ln_front.exp();
    let value = if t < (u + 1.0) / (u + v + 2.0) {
        front * beta_continued_fraction(t, u, v)? / u
    } else {
        1.0 - front * beta_continued_fraction(1.0 - t, v, u)? / v
    };
    Ok(value.clamp(0.0, 1.0))
}

fn beta_continued_fraction(t: f64, u: f64, v: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;

    let qab = u + v;
    let qap = u + 1.0;
    let qam = u - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * t / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (v - m) * t / ((qam + m2) * (u + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(u + m) * (qab + m) * t / ((u + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Numerical(format!(
        "incomplete beta continued fraction did not converge at t={t}, u={u}, v={v}"
    )))
}
