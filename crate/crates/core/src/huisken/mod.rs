//! The cut-off backward heat kernel, Gaussian densities of flow tracks,
//! weighted Huisken monotonicity and the parabolic Harnack and decay checks.

pub mod graph;

use serde::{Deserialize, Serialize};

use crate::brakke::{spacetime_oscillation, FlowTrack, ParabolicCylinder};
use crate::cutoff::smoothstep_down;
use crate::geometry::{trace_over_basis, Matrix, Plane, Vector};
use crate::monotonicity::{power_law_fit, ConvexWeight, DecayFit, Outcome, TolModel, DENSITY_BOUND, SUPPORT_TOL};
use crate::regularity::Hypothesis;
use crate::varifold::{Ball, DiscreteVarifold};
use crate::{par, Error, Result};

pub use graph::{parabolic_extract_graph, parabolic_extract_graph_with, ParabolicGraphOptions, SpaceTimeGraphPatch, SpaceTimeSample};

/// Relative tolerance used when locating a time between frames.
const TIME_TOL: f64 = 1e-12;

/// `ρ_R(x, t) = (4π(−t))^{−m/2} exp(−|x|²/(4(−t))) φ(|x|/R)` with the
/// cubic profile `φ(s) = 1 − (3u² − 2u³)`, `u = 2s − 1`, on `[1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelSpec {
    pub m: usize,
    pub radius: f64,
}

impl HeatKernelSpec {
    pub fn new(m: usize, radius: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDimension("kernel dimension must be >= 1".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff radius {radius} must be > 0")));
        }
        Ok(Self { m, radius })
    }

    /// `(φ, φ′, φ″)` at `s`.
    pub fn profile(s: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = smoothstep_down(2.0 * s - 1.0);
        (v, 2.0 * d1, 4.0 * d2)
    }
}

struct KernelJet {
    value: f64,
    gradient: Vector,
    dt: f64,
    hessian: Matrix,
}

fn kernel_jet(x: &Vector, t: f64, spec: &HeatKernelSpec) -> Result<KernelJet> {
    if !(t < 0.0) {
        return Err(Error::OutOfRange(format!("kernel time t = {t} must be < 0")));
    }
    let d = x.len();
    let tau = -t;
    let m = spec.m as f64;
    let r = x.norm();
    let s = r / spec.radius;
    if s >= 1.0 {
        return Ok(KernelJet {
            value: 0.0,
            gradient: Vector::zeros(d),
            dt: 0.0,
            hessian: Matrix::zeros(d, d),
        });
    }
    let g = (4.0 * std::f64::consts::PI * tau).powf(-0.5 * m) * (-r * r / (4.0 * tau)).exp();
    let g_grad = x * (-g / (2.0 * tau));
    let g_dt = g * (m / (2.0 * tau) - r * r / (4.0 * tau * tau));
    let g_hess = (x * x.transpose()) * (g / (4.0 * tau * tau)) - Matrix::identity(d, d) * (g / (2.0 * tau));
    let (phi, d1, d2) = HeatKernelSpec::profile(s);
    let (p_grad, p_hess) = if d1 == 0.0 && d2 == 0.0 || r == 0.0 {
        (Vector::zeros(d), Matrix::zeros(d, d))
    } else {
        let xh = x / r;
        let outer = &xh * xh.transpose();
        let rr = spec.radius;
        (
            &xh * (d1 / rr),
            &outer * (d2 / (rr * rr)) + (Matrix::identity(d, d) - &outer) * (d1 / (rr * r)),
        )
    };
    let hessian = &g_hess * phi + &g_grad * p_grad.transpose() + &p_grad * g_grad.transpose() + p_hess * g;
    Ok(KernelJet {
        value: g * phi,
        gradient: &g_grad * phi + p_grad * g,
        dt: g_dt * phi,
        hessian,
    })
}

/// `(ρ_R, ∇ρ_R, ∂_t ρ_R)` at `(x, t)`, `t < 0`.
pub fn heat_kernel(x: &Vector, t: f64, spec: &HeatKernelSpec) -> Result<(f64, Vector, f64)> {
    let j = kernel_jet(x, t, spec)?;
    Ok((j.value, j.gradient, j.dt))
}

/// `∂_t ρ + div_S ∇ρ + |S^⊥ ∇ρ|² / ρ`, which vanishes where the cutoff is
/// inactive.
pub fn kernel_residual(x: &Vector, t: f64, s: &Plane, spec: &HeatKernelSpec) -> Result<f64> {
    let j = kernel_jet(x, t, spec)?;
    if !(j.value > 0.0) {
        return Err(Error::KernelZero);
    }
    let (_, normal) = s.project(&j.gradient);
    Ok(j.dt + trace_over_basis(&j.hessian, s.basis()) + normal.norm_squared() / j.value)
}

/// A space-time base point `(x₀, t₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePoint {
    pub x: Vector,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vector, t: f64) -> Self {
        Self { x, t }
    }

    pub fn origin(d: usize) -> Self {
        Self::new(Vector::zeros(d), 0.0)
    }
}

fn frame_density(v: &DiscreteVarifold, f: &ConvexWeight, base: &Vector, t: f64, spec: &HeatKernelSpec) -> Result<f64> {
    let atoms = v.atoms();
    let terms = par::map_range(atoms.len(), |i| {
        let a = &atoms[i];
        let (rho, _, _) = heat_kernel(&(&a.x - base), t, spec)?;
        Ok(if rho > 0.0 { a.mass() * f.value(&a.x) * rho } else { 0.0 })
    });
    terms.into_iter().sum()
}

/// `(k, λ)` with the time `s` equal to `(1 − λ) t_k + λ t_{k+1}`.
fn bracket(track: &FlowTrack, s: f64) -> Result<(usize, f64)> {
    let times = track.times();
    let scale = TIME_TOL * (1.0 + times[0].abs().max(times[times.len() - 1].abs()));
    if s < times[0] - scale || s > times[times.len() - 1] + scale {
        return Err(Error::OutOfRange(format!(
            "time {s} outside the track [{}, {}]",
            times[0],
            times[times.len() - 1]
        )));
    }
    for k in 0..times.len() {
        if (times[k] - s).abs() <= scale {
            return Ok((k, 0.0));
        }
        if k + 1 < times.len() && s < times[k + 1] {
            return Ok((k, (s - times[k]) / (times[k + 1] - times[k])));
        }
    }
    Ok((times.len() - 1, 0.0))
}

/// `∫ f ρ_r(· − x₀, t) dM_{t₀+t}`, interpolating linearly in time between the
/// bracketing frames.
pub fn gaussian_density(track: &FlowTrack, f: &ConvexWeight, base: &SpaceTimePoint, r: f64, t: f64) -> Result<f64> {
    if !(t < 0.0 && t >= -r * r * (1.0 + TIME_TOL)) {
        return Err(Error::OutOfRange(format!("t = {t} must lie in [-r², 0) with r = {r}")));
    }
    let spec = HeatKernelSpec::new(track.context.m, r)?;
    let (k, lambda) = bracket(track, base.t + t)?;
    let frames = track.frames();
    let lower = frame_density(&frames[k].varifold, f, &base.x, t, &spec)?;
    if lambda == 0.0 {
        return Ok(lower);
    }
    let upper = frame_density(&frames[k + 1].varifold, f, &base.x, t, &spec)?;
    Ok((1.0 - lambda) * lower + lambda * upper)
}

/// A Gaussian density is resolved at kernel time `t` when `√(−t)` is at least
/// the frame mesh size.
fn resolved(v: &DiscreteVarifold, t: f64) -> bool {
    let h = v.mesh_size();
    !(h > 0.0) || -t >= h * h
}

/// Base-point test: `x₀` lies within `√(2m(t₀ − t_f)) + Λ(t₀ − t_f)` of the
/// support of the last frame at or before `t₀` (the radius of a shrinking
/// sphere barrier); for `t₀` a frame time this is the support tolerance.
pub fn base_on_track(track: &FlowTrack, base: &SpaceTimePoint) -> Result<f64> {
    let frames = track.frames();
    let scale = TIME_TOL * (1.0 + track.t_start().abs().max(track.t_end().abs()));
    let f = frames
        .iter()
        .rev()
        .find(|f| f.t <= base.t + scale)
        .ok_or_else(|| Error::OutOfRange(format!("t0 = {} precedes the track", base.t)))?;
    let gap = (base.t - f.t).max(0.0);
    let allowed = (2.0 * track.context.m as f64 * gap).sqrt() + track.lambda_v * gap + SUPPORT_TOL;
    let dist = f.varifold.distance_to_support(&base.x);
    if dist > allowed {
        return Err(Error::NotInSupport(dist));
    }
    Ok(dist)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuiskenCheck {
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    pub bound: Vec<f64>,
    pub slack: Vec<f64>,
    /// False where `√(−t)` is below the mesh size; such times are excluded
    /// from `min_slack`.
    pub resolved: Vec<bool>,
    pub min_slack: f64,
    pub tol_disc: f64,
    pub f_x0: f64,
    /// `sup f` over the atoms of `Q_r(X₀)`.
    pub eps: f64,
    pub lambda_v: f64,
    pub c: f64,
    /// Largest density ratio over the frames of `Q_r(X₀)`.
    pub density_ratio_max: f64,
    /// Largest frame spacing in `[t₀ − r², t₀]`, bounding the interpolation error.
    pub frame_spacing: f64,
    /// Set when the base frame is not well approximated by a plane at `x₀`.
    pub tangent_flag: bool,
}

impl HuiskenCheck {
    pub fn passed(&self) -> bool {
        self.min_slack >= -self.tol_disc
    }

    /// `max (D(t_j) − D(t_i))⁺` over resolved `t_i < t_j`.
    pub fn monotonicity_defect(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.density)
            .zip(&self.resolved)
            .filter(|(_, &ok)| ok)
            .map(|((&t, &d), _)| (t, d))
            .collect();
        let mut worst: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let (early, late) = if a.0 < b.0 { (a, b) } else { (b, a) };
                worst = worst.max(late.1 - early.1);
            }
        }
        worst
    }
}

/// Frames of the backwards cylinder `Q_r(X₀)`.
fn frames_in<'a>(track: &'a FlowTrack, q: &ParabolicCylinder) -> Vec<&'a crate::brakke::Frame> {
    track.frames().iter().filter(|f| q.contains_time(f.t)).collect()
}

/// Checks `∫ f ρ_r(· − x₀, t) dM_{t₀+t} ≥ f(x₀) − C(Λ + ε/r² + εΛ²)(−t)` at
/// each of the given kernel times.
pub fn verify_huisken_monotonicity(
    track: &FlowTrack,
    f: &ConvexWeight,
    base: &SpaceTimePoint,
    r: f64,
    times: &[f64],
    c: f64,
) -> Result<HuiskenCheck> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be > 0")));
    }
    base_on_track(track, base)?;
    let q = ParabolicCylinder::new(base.x.clone(), base.t, r)?;
    let frames = frames_in(track, &q);
    let f_x0 = f.value(&base.x);
    let ball = Ball::new(base.x.clone(), r)?;
    let mut eps = f_x0;
    let mut density_ratio_max: f64 = 0.0;
    let mut h: f64 = 0.0;
    for fr in &frames {
        for a in fr.varifold.atoms_in_ball(&ball) {
            eps = eps.max(f.value(&a.x));
        }
        density_ratio_max = density_ratio_max.max(fr.varifold.density_ratio(&ball));
        h = h.max(fr.varifold.mesh_size());
    }
    let frame_spacing = frames.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max);
    let lambda_v = track.lambda_v;
    let rate = c * (lambda_v + eps / (r * r) + eps * lambda_v * lambda_v);
    let density = par::map_slice(times, |&t| gaussian_density(track, f, base, r, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let bound: Vec<f64> = times.iter().map(|&t| f_x0 - rate * (-t)).collect();
    let slack: Vec<f64> = density.iter().zip(&bound).map(|(d, b)| d - b).collect();
    let resolved_at: Vec<bool> = times
        .iter()
        .map(|&t| {
            bracket(track, base.t + t)
                .map(|(k, _)| resolved(&track.frames()[k].varifold, t))
                .unwrap_or(false)
        })
        .collect();
    let min_slack = slack
        .iter()
        .zip(&resolved_at)
        .filter(|(_, &ok)| ok)
        .map(|(s, _)| *s)
        .fold(f64::INFINITY, f64::min);
    let tangent_flag = tangent_flag(track, base, r);
    Ok(HuiskenCheck {
        times: times.to_vec(),
        density,
        bound,
        slack,
        resolved: resolved_at,
        min_slack,
        tol_disc: TolModel::default().tol(h / r, lambda_v * r, eps),
        f_x0,
        eps,
        lambda_v,
        c,
        density_ratio_max,
        frame_spacing,
        tangent_flag,
    })
}

/// Plane-fit residual `osc_T(B_{r/4}(x₀))/(r/4) > 0.1` on the base frame.
fn tangent_flag(track: &FlowTrack, base: &SpaceTimePoint, r: f64) -> bool {
    let Some(fr) = track.frames().iter().rev().find(|f| f.t <= base.t) else {
        return true;
    };
    let Ok(ball) = Ball::new(base.x.clone(), r / 4.0) else {
        return true;
    };
    match fr.varifold.best_fit_plane(&ball) {
        Ok(t) => fr
            .varifold
            .oscillation(&t, &ball)
            .map(|o| o / (r / 4.0) > 0.1)
            .unwrap_or(true),
        Err(_) => true,
    }
}

/// Largest resolved Gaussian density `∫ρ_R(· − x₀, t − t₀) dM_t` over the
/// frames with `t ∈ [t₀ − R², t₀)`.
pub fn max_gaussian_density(track: &FlowTrack, base: &SpaceTimePoint, big_r: f64) -> Result<f64> {
    let q = ParabolicCylinder::new(base.x.clone(), base.t, big_r)?;
    let spec = HeatKernelSpec::new(track.context.m, big_r)?;
    let one = ConvexWeight::constant(1.0)?;
    let mut best = f64::NEG_INFINITY;
    for fr in frames_in(track, &q) {
        let t = fr.t - base.t;
        if t < 0.0 && resolved(&fr.varifold, t) {
            best = best.max(frame_density(&fr.varifold, &one, &base.x, t, &spec)?);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "no frame in [t0 - R², t0) resolves the Gaussian density (R = {big_r})"
        )));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicHarnack {
    pub hypotheses: Vec<Hypothesis>,
    pub osc_r: f64,
    pub osc_eta_r: f64,
    pub eta: f64,
    pub outcome: Outcome,
}

/// Checks `osc(Q_{ηR}) ≤ (1 − η) osc(Q_R)` under `∫ρ_R dM_t ≤ 3/2`,
/// `osc(Q_R) ≤ ηR` and `ΛR² ≤ osc(Q_R)`.
pub fn parabolic_harnack(track: &FlowTrack, s: &Plane, base: &SpaceTimePoint, big_r: f64, eta: f64) -> Result<ParabolicHarnack> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must lie in (0, 1)")));
    }
    let q = ParabolicCylinder::new(base.x.clone(), base.t, big_r)?;
    let osc_r = spacetime_oscillation(track, s, &q)?;
    let osc_eta_r = spacetime_oscillation(track, s, &q.scaled(eta)?)?;
    let off_track = if base_on_track(track, base).is_ok() { 0.0 } else { 1.0 };
    let density = max_gaussian_density(track, base, big_r)?;
    let hypotheses = vec![
        Hypothesis::new("base point on track", off_track, 0.0),
        Hypothesis::new("gaussian density <= 3/2", density, DENSITY_BOUND),
        Hypothesis::new("osc(Q_R) <= eta R", osc_r, eta * big_r),
        Hypothesis::new("Lambda R^2 <= osc(Q_R)", track.lambda_v * big_r * big_r, osc_r),
    ];
    let outcome = if hypotheses.iter().all(|h| h.holds) {
        Outcome::from_bool(osc_eta_r <= (1.0 - eta) * osc_r)
    } else {
        Outcome::NotApplicable
    };
    Ok(ParabolicHarnack {
        hypotheses,
        osc_r,
        osc_eta_r,
        eta,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicDecay {
    pub max_gaussian_density: f64,
    pub outcome: Outcome,
    /// Absent when the density hypothesis fails.
    pub fit: Option<DecayFit>,
}

/// Power-law fit of `osc_S(Q_r(X₀))` over the given scales, which must lie in
/// `[osc(Q_R) + ΛR², R]`.
pub fn parabolic_decay_fit(track: &FlowTrack, s: &Plane, base: &SpaceTimePoint, big_r: f64, scales: &[f64]) -> Result<ParabolicDecay> {
    if scales.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 scales, got {}",
            scales.len()
        )));
    }
    let density = max_gaussian_density(track, base, big_r)?;
    if !(density <= DENSITY_BOUND) {
        return Ok(ParabolicDecay {
            max_gaussian_density: density,
            outcome: Outcome::NotApplicable,
            fit: None,
        });
    }
    let q = ParabolicCylinder::new(base.x.clone(), base.t, big_r)?;
    let osc_r = spacetime_oscillation(track, s, &q)?;
    let reference = osc_r + track.lambda_v * big_r * big_r;
    for &r in scales {
        if r > big_r * (1.0 + 1e-12) || r < reference * (1.0 - 1e-12) {
            return Err(Error::OutOfRange(format!("scale {r} outside [{reference:e}, {big_r}]")));
        }
    }
    let osc = par::map_slice(scales, |&r| spacetime_oscillation(track, s, &q.scaled(r / big_r)?))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ParabolicDecay {
        max_gaussian_density: density,
        outcome: Outcome::Pass,
        fit: Some(power_law_fit(scales, &osc, big_r, reference)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brakke::tracks::{linspace, static_track};
    use crate::brakke::{graphical_flow_run, shrinking_sphere_track, Boundary, FlowGrid, FlowRunConfig, Transport};
    use crate::geometry::GeometryContext;
    use crate::monotonicity::fit_decay;
    use crate::varifold::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ctx() -> GeometryContext {
        GeometryContext::new(3, 2).unwrap()
    }

    /// Pure Gaussian in closed form.
    fn gaussian(m: f64, x2: f64, tau: f64) -> f64 {
        (4.0 * PI * tau).powf(-m / 2.0) * (-x2 / (4.0 * tau)).exp()
    }

    #[test]
    fn profile_shape() {
        assert_eq!(HeatKernelSpec::profile(0.3), (1.0, 0.0, 0.0));
        assert_eq!(HeatKernelSpec::profile(1.0).0, 0.0);
        let peak = (0..=10_000)
            .map(|i| HeatKernelSpec::profile(0.5 + 0.5 * i as f64 / 10_000.0).1.abs())
            .fold(0.0, f64::max);
        assert!(peak <= 3.0 + 1e-12 && peak > 3.0 - 1e-6, "{peak}");
    }

    #[test]
    fn kernel_values() {
        let spec = HeatKernelSpec::new(2, 10.0).unwrap();
        let (v, g, _) = heat_kernel(&Vector::zeros(3), -1.0, &spec).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(g.norm(), 0.0);
        let far = Vector::from_column_slice(&[10.0, 0.0, 0.0]);
        assert_eq!(heat_kernel(&far, -1.0, &spec).unwrap().0, 0.0);
        assert!(heat_kernel(&far, 0.0, &spec).is_err());
    }

    #[test]
    fn kernel_derivatives_match_differences() {
        let spec = HeatKernelSpec::new(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = Vector::from_fn(3, |_, _| rng.random_range(-0.55..0.55));
            let t = rng.random_range(-0.5..-0.05);
            let (v, g, dt) = heat_kernel(&x, t, &spec).unwrap();
            let e = 1e-6;
            let vt = (heat_kernel(&x, t + e, &spec).unwrap().0 - heat_kernel(&x, t - e, &spec).unwrap().0) / (2.0 * e);
            assert!((vt - dt).abs() <= 1e-6 * (1.0 + dt.abs()), "{vt} {dt}");
            for i in 0..3 {
                let mut xp = x.clone();
                xp[i] += e;
                let mut xm = x.clone();
                xm[i] -= e;
                let gi = (heat_kernel(&xp, t, &spec).unwrap().0 - heat_kernel(&xm, t, &spec).unwrap().0) / (2.0 * e);
                assert!((gi - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()));
            }
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn plane_integral_of_kernel() {
        let spec = HeatKernelSpec::new(2, 1e3).unwrap();
        let h = 0.05;
        let n = 200;
        let mut sum = 0.0;
        for i in -n..=n {
            for j in -n..=n {
                let x = Vector::from_column_slice(&[i as f64 * h, j as f64 * h, 0.0]);
                sum += heat_kernel(&x, -1.0, &spec).unwrap().0 * h * h;
            }
        }
        assert!((sum - 1.0).abs() < 1e-6, "{sum}");
    }

    #[test]
    fn residual_vanishes_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let r = rng.random_range(0.5..4.0);
            let spec = HeatKernelSpec::new(2, r).unwrap();
            let mut x = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            x *= rng.random_range(0.0..0.5) * r / x.norm();
            let t = -rng.random_range(0.01..1.0) * r * r;
            let s = Plane::random(3, 2, &mut rng);
            let res = kernel_residual(&x, t, &s, &spec).unwrap();
            let scale = gaussian(2.0, 0.0, -t) / -t;
            assert!(res.abs() <= 1e-12 * scale, "{res}");
        }
        let spec = HeatKernelSpec::new(2, 1.0).unwrap();
        let s = Plane::horizontal(3, 2).unwrap();
        assert!(matches!(
            kernel_residual(&Vector::from_column_slice(&[1.0, 0.0, 0.0]), -0.1, &s, &spec),
            Err(Error::KernelZero)
        ));
    }

    #[test]
    fn annulus_residual_scales() {
        let sup_scaled = |r: f64, seed: u64| {
            let spec = HeatKernelSpec::new(2, r).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: f64 = 0.0;
            for _ in 0..10_000 {
                let mut x = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                x *= rng.random_range(0.5..0.999) * r / x.norm();
                let t = -rng.random_range(0.25..1.0) * r * r;
                let s = Plane::random(3, 2, &mut rng);
                best = best.max(kernel_residual(&x, t, &s, &spec).unwrap().abs());
            }
            best * r.powi(4)
        };
        let vals: Vec<f64> = [(1.0, 1), (2.0, 2), (4.0, 3)].iter().map(|&(r, s)| sup_scaled(r, s)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        assert!(hi.is_finite() && hi <= 1.1 * lo, "{vals:?}");
    }

    fn static_plane(h: f64, radius: f64, times: &[f64]) -> FlowTrack {
        let v = shapes::flat_lattice(ctx(), &Plane::horizontal(3, 2).unwrap(), h, radius, &Vector::zeros(3)).unwrap();
        static_track(&v, times, "static plane").unwrap()
    }

    #[test]
    fn density_examples() {
        let tr = static_plane(0.02, 1.0, &[-0.05, -0.02, 0.0]);
        let base = SpaceTimePoint::origin(3);
        let one = ConvexWeight::constant(1.0).unwrap();
        let d = gaussian_density(&tr, &one, &base, 5.0, -0.02).unwrap();
        assert!((d - 1.0).abs() < 1e-3, "{d}");
        let c = ConvexWeight::constant(0.3).unwrap();
        let dc = gaussian_density(&tr, &c, &base, 5.0, -0.02).unwrap();
        assert!((dc - 0.3 * d).abs() < 1e-12);
        let empty = static_track(&DiscreteVarifold::empty(ctx()), &[-1.0, 0.0], "empty").unwrap();
        assert_eq!(gaussian_density(&empty, &one, &base, 2.0, -0.5).unwrap(), 0.0);
        assert!(gaussian_density(&tr, &one, &base, 5.0, -1.0).is_err());
        assert!(gaussian_density(&tr, &one, &base, 0.1, -0.02).is_err());
        // between frames the density is the linear interpolation
        let mid = gaussian_density(&tr, &one, &base, 5.0, -0.03).unwrap();
        assert!((mid - 1.0).abs() < 1e-3);
    }

    #[test]
    fn density_is_parabolically_invariant() {
        let tr = shrinking_sphere_track(ctx(), true, (-1.0, -0.1), 10, 0.1).unwrap();
        let base = SpaceTimePoint::origin(3);
        let f = ConvexWeight::constant(1.0).unwrap();
        let lam = 1.7;
        let scaled = tr.parabolic_scaled(lam).unwrap();
        for &t in &tr.times() {
            let a = gaussian_density(&tr, &f, &base, 3.0, t).unwrap();
            let b = gaussian_density(&scaled, &f, &base, 3.0 * lam, t * lam * lam).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn huisken_examples() {
        let times: Vec<f64> = linspace(-1.0, 0.0, 11);
        let tr = static_plane(0.02, 1.6, &times);
        let base = SpaceTimePoint::origin(3);
        let sample: Vec<f64> = linspace(-1.0, -0.01, 20);
        for f in [
            ConvexWeight::constant(0.1).unwrap(),
            ConvexWeight::trunc_linear(vec![0.6, 0.8, 0.0], vec![0.0; 3], 0.0).unwrap(),
        ] {
            let chk = verify_huisken_monotonicity(&tr, &f, &base, 1.0, &sample, 10.0).unwrap();
            assert!(chk.min_slack >= -1e-3, "{} {:?}", f.kind(), chk.slack);
            assert!(chk.passed());
            assert!(!chk.tangent_flag);
        }
        let zero = ConvexWeight::constant(0.0).unwrap();
        let chk = verify_huisken_monotonicity(&tr, &zero, &base, 1.0, &sample, 10.0).unwrap();
        assert!(chk.slack.iter().all(|&s| s == 0.0));

        let off = SpaceTimePoint::new(Vector::from_column_slice(&[0.0, 0.0, 0.3]), 0.0);
        assert!(matches!(
            verify_huisken_monotonicity(&tr, &zero, &off, 1.0, &sample, 10.0),
            Err(Error::NotInSupport(_))
        ));
    }

    #[test]
    fn shrinking_sphere_density_is_monotone() {
        let tr = shrinking_sphere_track(ctx(), true, (-1.0, -0.05), 20, 0.05).unwrap();
        let base = SpaceTimePoint::origin(3);
        let f = ConvexWeight::constant(1.0).unwrap();
        let chk = verify_huisken_monotonicity(&tr, &f, &base, 5.0, &tr.times(), 10.0).unwrap();
        assert!(chk.monotonicity_defect() <= 1e-2, "{:?} {:?}", chk.density, chk.resolved);
        for d in &chk.density {
            assert!((d - 4.0 / std::f64::consts::E).abs() < 1e-9, "{d}");
        }
    }

    fn two_planes(times: &[f64]) -> FlowTrack {
        let s = Plane::horizontal(3, 2).unwrap();
        let a = shapes::flat_lattice(ctx(), &s, 0.02, 1.0, &Vector::zeros(3)).unwrap();
        let b = shapes::flat_lattice(ctx(), &s, 0.02, 1.0, &Vector::from_column_slice(&[0.0, 0.0, 0.1])).unwrap();
        static_track(&a.union(&b).unwrap(), times, "two planes").unwrap()
    }

    #[test]
    fn harnack_and_decay() {
        let times = linspace(-0.25, 0.0, 6);
        let s = Plane::horizontal(3, 2).unwrap();
        let base = SpaceTimePoint::origin(3);
        let tilted = shapes::tilted_plane(ctx(), 0.02, 0.5 / 64.0, 0.6).unwrap();
        let tr = static_track(&tilted, &times, "static tilted").unwrap();
        let h = parabolic_harnack(&tr, &s, &base, 0.5, 0.05).unwrap();
        assert_eq!(h.outcome, Outcome::Pass, "{:?}", h.hypotheses);

        let scales = crate::monotonicity::dyadic_scales(0.5, 5);
        let fit = parabolic_decay_fit(&tr, &s, &base, 0.5, &scales).unwrap().fit.unwrap();
        let elliptic = fit_decay(&tilted, &s, 0.5, &scales).unwrap();
        assert!((fit.beta_fit - elliptic.beta_fit).abs() < 1e-8);
        assert!((fit.c_fit - elliptic.c_fit).abs() < 1e-8);
        assert!((0.99..=1.01).contains(&fit.beta_fit), "{}", fit.beta_fit);

        let two = two_planes(&[-1.0, -0.1, -0.01, -0.005, 0.0]);
        let d = parabolic_decay_fit(&two, &s, &base, 1.0, &crate::monotonicity::dyadic_scales(1.0, 5)).unwrap();
        assert_eq!(d.outcome, Outcome::NotApplicable);
        assert!(d.max_gaussian_density > 1.5, "{}", d.max_gaussian_density);
        assert_eq!(parabolic_harnack(&two, &s, &base, 1.0, 0.05).unwrap().outcome, Outcome::NotApplicable);
    }

    #[test]
    fn heat_flow_decays_faster_than_linear() {
        let grid = FlowGrid {
            m: 1,
            n: 512,
            origin: -PI,
            length: 2.0 * PI,
            boundary: Boundary::Periodic,
        };
        let cfg = FlowRunConfig {
            t_start: -0.25,
            t_end: 0.0,
            frames: 101,
            cfl: 0.9,
        };
        let tr = graphical_flow_run(&grid, &|x| 0.01 * x[0].sin(), Transport::None, &cfg).unwrap();
        let base = SpaceTimePoint::origin(2);
        let last = &tr.frames()[tr.len() - 1].varifold;
        let scales = crate::monotonicity::dyadic_scales(0.4, 5);
        let tangent = last.best_fit_plane(&Ball::centered(2, scales[4]).unwrap()).unwrap();
        let d = parabolic_decay_fit(&tr, &tangent, &base, 0.4, &scales).unwrap();
        let beta = d.fit.unwrap().beta_fit;
        assert!(beta >= 1.5, "{beta}");
    }

    #[test]
    fn random_residuals_are_finite() {
        let spec = HeatKernelSpec::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = Vector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
            if x.norm() >= 1.0 {
                continue;
            }
            let s = Plane::random(4, 3, &mut rng);
            assert!(kernel_residual(&x, -0.3, &s, &spec).unwrap().is_finite());
        }
    }
}
