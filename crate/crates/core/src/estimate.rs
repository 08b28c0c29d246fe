//! Sample-based and auxiliary-based estimators: variance components,
//! Edgeworth parameters, and the GMD scale-estimation strategies.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hoeffding::{
    self, variance_from_components, EdgeworthOptions, EdgeworthParams, KappaMethod, VarKappa,
};
use crate::population::{population_scale, PopulationFrame, StatKind};
use crate::spacing::Spacings;
pub use crate::special::regularized_incomplete_beta;
use crate::ustat::{u_statistic, SampleDraw};

/// Values of an auxiliary variable known for every population unit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryFrame {
    z_values: Vec<f64>,
    /// Realised correlation with the study variable, when known.
    pub correlation_with_x: Option<f64>,
}

impl AuxiliaryFrame {
    pub fn new(z_values: Vec<f64>) -> Result<Self> {
        crate::population::check_finite(&z_values)?;
        if z_values.len() < 2 {
            return Err(Error::Size(format!(
                "auxiliary frame needs at least 2 values, got {}",
                z_values.len()
            )));
        }
        Ok(Self {
            z_values,
            correlation_with_x: None,
        })
    }

    pub fn with_correlation(mut self, rho: f64) -> Self {
        self.correlation_with_x = Some(rho);
        self
    }

    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.z_values
    }

    /// The auxiliary values as a population, rejecting constant `z`.
    pub fn frame(&self) -> Result<PopulationFrame> {
        let frame = PopulationFrame::new(&self.z_values)?;
        if frame.spacings().iter().all(|&d| d == 0.0) {
            return Err(Error::DegenerateAux("auxiliary variable is constant".into()));
        }
        Ok(frame)
    }
}

/// Superpopulation model assumed by strategy S1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleModel {
    Normal,
    Exponential,
    Gamma { shape: f64 },
}

impl fmt::Display for ScaleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleModel::Normal => f.write_str("normal"),
            ScaleModel::Exponential => f.write_str("exponential"),
            ScaleModel::Gamma { shape } => write!(f, "gamma:{shape}"),
        }
    }
}

impl FromStr for ScaleModel {
    type Err = Error;

    /// `normal`, `exponential` or `gamma:<shape>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "normal" => Ok(ScaleModel::Normal),
            "exponential" | "exp" => Ok(ScaleModel::Exponential),
            _ => match lower.strip_prefix("gamma:") {
                Some(k) => {
                    let shape: f64 = k
                        .parse()
                        .map_err(|_| Error::Argument(format!("bad gamma shape `{k}`")))?;
                    Ok(ScaleModel::Gamma { shape })
                }
                None => Err(Error::Argument(format!("unknown scale model `{s}`"))),
            },
        }
    }
}

/// Multiplier `a` making `a·U_G` estimate `√V` under the model.
pub fn correction_factor(model: ScaleModel) -> Result<f64> {
    match model {
        ScaleModel::Normal => Ok(std::f64::consts::PI.sqrt() / 2.0),
        ScaleModel::Exponential => Ok(1.0),
        ScaleModel::Gamma { shape } => {
            if !(shape > 0.0 && shape.is_finite()) {
                return Err(Error::Argument(format!(
                    "gamma shape must be positive and finite, got {shape}"
                )));
            }
            let ib = regularized_incomplete_beta(0.5, shape + 1.0, shape)?;
            Ok(1.0 / (shape.sqrt() * (2.0 - 4.0 * ib)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Model-based correction of `U_G` towards `√V`.
    S1,
    /// Correction of `U_G` towards `√V` evaluated on the auxiliary variable.
    S2,
    /// `U_G` as an estimator of `G` itself.
    S3,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            "s3" => Ok(Strategy::S3),
            other => Err(Error::Argument(format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::S1 => f.write_str("s1"),
            Strategy::S2 => f.write_str("s2"),
            Strategy::S3 => f.write_str("s3"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleTarget {
    SqrtV,
    G,
}

impl fmt::Display for ScaleTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleTarget::SqrtV => f.write_str("sqrtV"),
            ScaleTarget::G => f.write_str("G"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyEstimate {
    pub strategy: Strategy,
    pub point: f64,
    pub correction_a: f64,
    pub target: ScaleTarget,
}

/// `a_z = √V_z / G_z` from the auxiliary population.
pub fn auxiliary_correction(aux: &AuxiliaryFrame) -> Result<f64> {
    let frame = aux.frame()?;
    let g = population_scale(&frame, StatKind::Gmd);
    let v = population_scale(&frame, StatKind::Var);
    Ok(v.sqrt() / g)
}

/// Scale estimate of the chosen strategy.
pub fn scale_estimate(
    strategy: Strategy,
    sample: &SampleDraw,
    model: Option<ScaleModel>,
    aux: Option<&AuxiliaryFrame>,
) -> Result<StrategyEstimate> {
    let u = u_statistic(sample, StatKind::Gmd);
    let (correction_a, target) = match strategy {
        Strategy::S1 => {
            let model =
                model.ok_or_else(|| Error::Argument("strategy S1 needs a superpopulation model".into()))?;
            (correction_factor(model)?, ScaleTarget::SqrtV)
        }
        Strategy::S2 => {
            let aux = aux.ok_or_else(|| Error::Argument("strategy S2 needs an auxiliary variable".into()))?;
            (auxiliary_correction(aux)?, ScaleTarget::SqrtV)
        }
        Strategy::S3 => (1.0, ScaleTarget::G),
    };
    Ok(StrategyEstimate {
        strategy,
        point: correction_a * u,
        correction_a,
        target,
    })
}

/// Plug-in variance components and the resulting estimate of `Var U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub var_u: f64,
}

fn check_sample(s: &SampleDraw, min_n: usize) -> Result<()> {
    if s.len() < min_n {
        return Err(Error::Size(format!(
            "need at least {min_n} observations, got {}",
            s.len()
        )));
    }
    if s.parent_n() < 4 {
        return Err(Error::Size(format!(
            "population size must be at least 4, got {}",
            s.parent_n()
        )));
    }
    Ok(())
}

/// Plug-in estimators `σ̂₁², σ̂₂²` and `Var̂ U`.
///
/// GMD uses the sample spacings `Δ_{i:n}` with weights `A_i = (2i-n)/n`;
/// VAR replaces `μ₂, μ₄` by the sample moments.
pub fn sigma_components_hat(s: &SampleDraw, kind: StatKind) -> Result<VarianceEstimate> {
    check_sample(s, 3)?;
    let nf = s.len() as f64;
    let big_n = s.parent_n() as f64;
    let r = big_n / (big_n - 2.0);
    let (sigma1_sq, sigma2_sq) = match kind {
        StatKind::Gmd => {
            let sp = Spacings::new(s.spacings(), s.weights_a());
            let n4 = nf * nf * nf * nf;
            let nm1 = nf - 1.0;
            let s1 = 4.0 / n4 * r * r * sp.sigma1_bracket();
            let s2 = 16.0 / (n4 * nm1 * nm1 * nm1 * nm1) * r * sp.sigma2_bracket();
            (s1, s2)
        }
        StatKind::Var => {
            let (m2, m4) = (s.m(2), s.m(4));
            let s1 = r * r / (nf * nf) * (m4 - m2 * m2);
            let s2 = 4.0 / (nf * nf * (nf - 1.0) * (nf - 1.0)) * big_n / ((big_n - 1.0) * (big_n - 2.0))
                * ((big_n * big_n - 3.0 * big_n + 3.0) / (big_n - 1.0) * m2 * m2 - m4);
            (s1, s2)
        }
    };
    let sigma1_sq = sigma1_sq.max(0.0);
    Ok(VarianceEstimate {
        sigma1_sq,
        sigma2_sq,
        var_u: variance_from_components(s.len(), s.parent_n(), sigma1_sq, sigma2_sq),
    })
}

/// Plug-in `(α̂, κ̂)` from the sample alone, default options.
pub fn edgeworth_params_hat(s: &SampleDraw, kind: StatKind) -> Result<EdgeworthParams> {
    edgeworth_params_hat_with(s, kind, EdgeworthOptions::default())
}

/// Plug-in `(α̂, κ̂)` from the sample alone.
pub fn edgeworth_params_hat_with(
    s: &SampleDraw,
    kind: StatKind,
    opts: EdgeworthOptions,
) -> Result<EdgeworthParams> {
    check_sample(s, 4)?;
    let est = sigma_components_hat(s, kind)?;
    if est.sigma1_sq <= 0.0 {
        return Err(Error::DegenerateSample(
            "estimated sigma1^2 is zero; no Edgeworth correction".into(),
        ));
    }
    let nf = s.len() as f64;
    let big_n = s.parent_n() as f64;
    let r = big_n / (big_n - 2.0);
    let r3 = r * r * r;
    let inv_s3 = est.sigma1_sq.powf(-1.5);
    let tau2 = s.tau_sq();
    let (alpha, kappa) = match kind {
        StatKind::Gmd => {
            let sp = Spacings::new(s.spacings(), s.weights_a());
            let n3 = nf * nf * nf;
            let nm1 = nf - 1.0;
            let alpha = -inv_s3 * 8.0 / (n3 * n3) * r3 * sp.alpha_bracket();
            let csum = match opts.kappa_method {
                KappaMethod::PairSum => sp.kappa_sum_linear(),
                KappaMethod::Grouped => sp.kappa_sum_grouped(),
                KappaMethod::Triple => sp.kappa_sum_triple(),
            };
            let kappa = -inv_s3 * tau2 * 16.0 / (n3 * nf * nf * nm1 * nm1 * nm1) * r3 * csum;
            (alpha, kappa)
        }
        StatKind::Var => {
            let (m2, m3, m4, m6) = (s.m(2), s.m(3), s.m(4), s.m(6));
            let alpha = inv_s3 / (nf * nf * nf) * r3 * (2.0 * m2 * m2 * m2 - 3.0 * m4 * m2 + m6);
            let kappa = inv_s3 * tau2 * 2.0 / (nf * nf * nf * (nf - 1.0)) * r3 / (big_n - 1.0)
                * hoeffding::var_kappa_bracket(big_n, m2, m3, m4, m6, opts.var_kappa);
            (alpha, kappa)
        }
    };
    EdgeworthParams::new(alpha, kappa, s.len(), s.parent_n())
}

/// `(α, κ)` of the auxiliary population, used in place of the unknown true
/// parameters. Not sample dependent.
pub fn edgeworth_params_aux(aux: &AuxiliaryFrame, n: usize, kind: StatKind) -> Result<EdgeworthParams> {
    edgeworth_params_aux_with(aux, n, kind, EdgeworthOptions::default())
}

pub fn edgeworth_params_aux_with(
    aux: &AuxiliaryFrame,
    n: usize,
    kind: StatKind,
    opts: EdgeworthOptions,
) -> Result<EdgeworthParams> {
    let frame = aux.frame()?;
    hoeffding::edgeworth_params_true_with(&frame, n, kind, opts)
}

/// Convenience for the simplified VAR κ variant.
pub fn simplified_var_options() -> EdgeworthOptions {
    EdgeworthOptions {
        var_kappa: VarKappa::Simplified,
        ..Default::default()
    }
}
