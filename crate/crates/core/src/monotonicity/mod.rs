//! Weighted monotonicity, the Harnack inequality and decay of oscillations
//! for discrete varifolds.

pub mod kernel;
pub mod weight;

use serde::{Deserialize, Serialize};

use crate::geometry::{Plane, Vector};
use crate::varifold::{within, Ball, DiscreteVarifold};
use crate::{par, Error, Result};

pub use kernel::{divergence_slack, kernel_g, kernel_h, KernelEval, KernelSpec};
pub use weight::ConvexWeight;

/// Distance below which the origin counts as a support point.
pub const SUPPORT_TOL: f64 = 1e-8;
/// Density bound assumed by the monotonicity and Harnack statements.
pub const DENSITY_BOUND: f64 = 1.5;

/// Discretization tolerance `K · h · (1 + Λ) · ‖f‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolModel {
    pub k: f64,
}

impl Default for TolModel {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

impl TolModel {
    pub fn tol(&self, h: f64, lambda: f64, f_sup: f64) -> f64 {
        self.k * h * (1.0 + lambda) * f_sup
    }

    /// Calibrates `K` from the same quantities measured on two mesh levels
    /// `h` and `h/2`, assuming first-order convergence: the coarse error is
    /// estimated by `2 |q_h - q_{h/2}|`.
    pub fn richardson(coarse: &[f64], fine: &[f64], h: f64, lambda: f64, f_sup: f64) -> Self {
        let scale = h * (1.0 + lambda) * f_sup;
        let k = coarse
            .iter()
            .zip(fine)
            .map(|(c, f)| 2.0 * (c - f).abs())
            .fold(0.0, f64::max);
        Self {
            k: if scale > 0.0 { k / scale } else { 0.0 },
        }
    }
}

/// `I(r) = (ω_m r^m)^{-1} Σ_{|x| ≤ r} w Θ f(x)`.
pub fn weighted_density(v: &DiscreteVarifold, f: &ConvexWeight, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be > 0")));
    }
    let atoms = v.atoms();
    let sum = par::sum_range(atoms.len(), |i| {
        let a = &atoms[i];
        if within(a.x.norm(), r) {
            a.mass() * f.value(&a.x)
        } else {
            0.0
        }
    });
    Ok(sum / (v.context.omega_m * r.powi(v.context.m as i32)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub f: ConvexWeight,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub curve: DensityCurve,
    /// `I(r) - f(0) + C0 Λ (‖f‖_∞ + r) r` per radius.
    pub slack: Vec<f64>,
    pub min_slack: f64,
    pub c0: f64,
    /// Smallest `C0` making every slack at least `-tol_disc` (`inf` if none does).
    pub smallest_c0: f64,
    pub tol_disc: f64,
    pub f0: f64,
    pub f_sup: f64,
    pub max_density_ratio: f64,
    pub density_bound_ok: bool,
}

impl MonotonicityCheck {
    pub fn passed(&self) -> bool {
        self.min_slack >= -self.tol_disc
    }
}

/// Runs the weighted monotonicity check with a given constant and
/// tolerance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerifier {
    pub c0: f64,
    pub tol: TolModel,
}

impl Default for MonotonicityVerifier {
    fn default() -> Self {
        Self {
            c0: 10.0,
            tol: TolModel::default(),
        }
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// `sup f` over atoms in `B_r(0)`.
pub fn weight_sup(v: &DiscreteVarifold, f: &ConvexWeight, r: f64) -> f64 {
    v.atoms()
        .iter()
        .filter(|a| within(a.x.norm(), r))
        .map(|a| f.value(&a.x))
        .fold(0.0, f64::max)
}

impl MonotonicityVerifier {
    pub fn verify(&self, v: &DiscreteVarifold, f: &ConvexWeight, radii: &[f64]) -> Result<MonotonicityCheck> {
        check_radii(radii)?;
        let d = v.context.d;
        let origin = Vector::zeros(d);
        let dist = v.distance_to_support(&origin);
        if !(dist <= SUPPORT_TOL) {
            return Err(Error::NotInSupport(dist));
        }
        let values = par::map_slice(radii, |&r| weighted_density(v, f, r))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let rmax = *radii.last().unwrap();
        let f0 = f.value(&origin);
        let f_sup = weight_sup(v, f, rmax).max(f0);
        let lambda = v.lambda;
        let tol_disc = self.tol.tol(v.mesh_size(), lambda, f_sup);
        let slack: Vec<f64> = radii
            .iter()
            .zip(&values)
            .map(|(&r, &i)| i - f0 + self.c0 * lambda * (f_sup + r) * r)
            .collect();
        let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
        let mut smallest_c0: f64 = 0.0;
        for (&r, &i) in radii.iter().zip(&values) {
            let deficit = f0 - i - tol_disc;
            if deficit > 0.0 {
                let gain = lambda * (f_sup + r) * r;
                smallest_c0 = if gain > 0.0 { smallest_c0.max(deficit / gain) } else { f64::INFINITY };
            }
        }
        let ball = Ball::centered(d, rmax)?;
        let max_density_ratio = v.max_density_ratio(&ball, radii);
        let density_bound_ok = max_density_ratio <= DENSITY_BOUND;
        if !density_bound_ok {
            log::warn!("density hypothesis violated: max ratio {max_density_ratio:.4} > 3/2");
        }
        Ok(MonotonicityCheck {
            curve: DensityCurve {
                radii: radii.to_vec(),
                values,
                f: f.clone(),
                lambda,
            },
            slack,
            min_slack,
            c0: self.c0,
            smallest_c0,
            tol_disc,
            f0,
            f_sup,
            max_density_ratio,
            density_bound_ok,
        })
    }
}

pub fn verify_weighted_monotonicity(
    v: &DiscreteVarifold,
    f: &ConvexWeight,
    radii: &[f64],
    c0: f64,
) -> Result<MonotonicityCheck> {
    MonotonicityVerifier {
        c0,
        ..Default::default()
    }
    .verify(v, f, radii)
}

/// Largest density ratio over balls centred at support points of `B_{R/2}`
/// with radii `R/8, R/4, R/2`, and at the origin with radius `R`.
pub fn density_hypothesis(v: &DiscreteVarifold, big_r: f64) -> Result<f64> {
    let d = v.context.d;
    let inner = Ball::centered(d, big_r / 2.0)?;
    let local = v.max_density_ratio(&inner, &[big_r / 8.0, big_r / 4.0, big_r / 2.0]);
    let top = v.density_ratio(&Ball::centered(d, big_r)?);
    Ok(local.max(top))
}

/// Outcome of a check whose hypotheses may fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackCertificate {
    pub hyp_ok: bool,
    pub base_in_support: bool,
    pub osc_hyp_ok: bool,
    pub lambda_hyp_ok: bool,
    pub density_ok: bool,
    pub max_density_ratio: f64,
    pub osc_r: f64,
    pub osc_eta_r: f64,
    pub conclusion: Outcome,
}

impl HarnackCertificate {
    pub fn conclusion_ok(&self) -> bool {
        self.conclusion == Outcome::Pass
    }
}

/// Checks `osc(B_{ηR}) ≤ (1 - η) osc(B_R)` under `osc(B_R) ≤ ηR`,
/// `Λ ≤ osc(B_R)/R²` and the `3/2` density bound.
pub fn harnack_certificate(v: &DiscreteVarifold, s: &Plane, big_r: f64, eta: f64) -> Result<HarnackCertificate> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must lie in (0, 1)")));
    }
    let d = v.context.d;
    let osc_r = v.oscillation(s, &Ball::centered(d, big_r)?)?;
    let osc_eta_r = v.oscillation(s, &Ball::centered(d, eta * big_r)?)?;
    let base_in_support = v.distance_to_support(&Vector::zeros(d)) <= SUPPORT_TOL;
    let osc_hyp_ok = osc_r <= eta * big_r;
    let lambda_hyp_ok = v.lambda <= osc_r / (big_r * big_r);
    let max_density_ratio = density_hypothesis(v, big_r)?;
    let density_ok = max_density_ratio <= DENSITY_BOUND;
    let hyp_ok = base_in_support && osc_hyp_ok && lambda_hyp_ok && density_ok;
    let conclusion = if hyp_ok {
        Outcome::from_bool(osc_eta_r <= (1.0 - eta) * osc_r)
    } else {
        Outcome::NotApplicable
    };
    Ok(HarnackCertificate {
        hyp_ok,
        base_in_support,
        osc_hyp_ok,
        lambda_hyp_ok,
        density_ok,
        max_density_ratio,
        osc_r,
        osc_eta_r,
        conclusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub radii: Vec<f64>,
    pub osc: Vec<f64>,
    pub big_r: f64,
    /// `osc(B_R) + Λ R²`.
    pub reference: f64,
    /// `+inf` when every oscillation vanishes.
    pub beta_fit: f64,
    pub c_fit: f64,
}

impl DecayFit {
    /// `osc(r) ≤ C (osc_R + ΛR²)(r/R)^β (1 + 1e-6)` at every sampled scale.
    pub fn bound_holds(&self) -> bool {
        self.radii.iter().zip(&self.osc).all(|(&r, &o)| {
            let bound = if self.beta_fit.is_infinite() {
                0.0
            } else {
                self.c_fit * self.reference * (r / self.big_r).powf(self.beta_fit)
            };
            o <= bound * (1.0 + 1e-6) + f64::MIN_POSITIVE
        })
    }

    /// `(log r, log osc)` pairs for plotting; zero oscillations are skipped.
    pub fn log_curve(&self) -> Vec<(f64, f64)> {
        self.radii
            .iter()
            .zip(&self.osc)
            .filter(|(_, &o)| o > 0.0)
            .map(|(r, o)| (r.ln(), o.ln()))
            .collect()
    }
}

/// Geometric sequence `R, R/2, …, R/2^{k-1}`.
pub fn dyadic_scales(big_r: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| big_r / 2f64.powi(i as i32)).collect()
}

/// Least-squares fit of `log osc = log A + β log r`, then the smallest `C`
/// with `osc ≤ C · reference · (r/R)^β` at every scale.
pub fn power_law_fit(radii: &[f64], osc: &[f64], big_r: f64, reference: f64) -> Result<DecayFit> {
    if radii.len() < 3 || radii.len() != osc.len() {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 scales, got {}",
            radii.len()
        )));
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(osc)
        .filter(|(_, &o)| o > 0.0)
        .map(|(r, o)| (r.ln(), o.ln()))
        .collect();
    let (beta_fit, c_fit) = if pts.len() < 2 {
        (f64::INFINITY, 0.0)
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let beta = sxy / sxx;
        let c = radii
            .iter()
            .zip(osc)
            .map(|(&r, &o)| o / (reference * (r / big_r).powf(beta)))
            .fold(0.0, f64::max);
        (beta, c)
    };
    Ok(DecayFit {
        radii: radii.to_vec(),
        osc: osc.to_vec(),
        big_r,
        reference,
        beta_fit,
        c_fit,
    })
}

/// Fits the decay exponent of `osc_S(B_r)` over the given scales, which must
/// lie in `[osc(B_R) + ΛR², R]`.
pub fn fit_decay(v: &DiscreteVarifold, s: &Plane, big_r: f64, scales: &[f64]) -> Result<DecayFit> {
    if scales.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 scales, got {}",
            scales.len()
        )));
    }
    let d = v.context.d;
    let osc_r = v.oscillation(s, &Ball::centered(d, big_r)?)?;
    let reference = osc_r + v.lambda * big_r * big_r;
    for &r in scales {
        if r > big_r * (1.0 + 1e-12) || r < reference * (1.0 - 1e-12) {
            return Err(Error::OutOfRange(format!(
                "scale {r} outside [{reference:e}, {big_r}]"
            )));
        }
    }
    let osc = par::map_slice(scales, |&r| v.oscillation(s, &Ball::centered(d, r)?))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    power_law_fit(scales, &osc, big_r, reference)
}
