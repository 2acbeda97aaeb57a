//! Time-indexed varifolds with a transport field, the Brakke inequality and
//! the parabolic maximum principle.

pub mod graphical;
pub mod io;
pub mod tracks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutoff::RadialCutoff;
use crate::geometry::{half_diameter, trace_m_min, GeometryContext, Matrix, Plane, SymMatrix, Vector};
use crate::monotonicity::{TolModel, SUPPORT_TOL};
use crate::regularity::LOCAL_MAX_RADIUS;
use crate::varifold::{within, DiscreteVarifold};
use crate::{par, Error, Result};

pub use graphical::{graphical_flow_run, Boundary, FlowGrid, FlowRunConfig, Transport};
pub use io::{load_flow, parse_dvflow, save_flow, to_dvflow_string};
pub use tracks::shrinking_sphere_track;

/// Relative tolerance for matching requested times to frame times.
const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub varifold: DiscreteVarifold,
    /// Transport vector per atom.
    pub velocity: Vec<Vector>,
}

impl Frame {
    /// A frame with zero transport.
    pub fn still(t: f64, varifold: DiscreteVarifold) -> Self {
        let d = varifold.context.d;
        let velocity = vec![Vector::zeros(d); varifold.len()];
        Self { t, varifold, velocity }
    }
}

/// Frames `(t, V_t)` with strictly increasing times and a shared `(d, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrack {
    pub context: GeometryContext,
    frames: Vec<Frame>,
    /// `sup |v|` over all atoms and frames.
    pub lambda_v: f64,
    pub method: String,
}

impl FlowTrack {
    pub fn new(frames: Vec<Frame>, method: impl Into<String>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidArgument("a flow track needs at least one frame".into()))?;
        let context = first.varifold.context;
        let mut lambda_v: f64 = 0.0;
        for (i, f) in frames.iter().enumerate() {
            if f.varifold.context != context {
                return Err(Error::DimensionMismatch {
                    expected: context.d,
                    found: f.varifold.context.d,
                });
            }
            if !f.t.is_finite() {
                return Err(Error::InvalidArgument(format!("frame {i} has non-finite time")));
            }
            if i > 0 && !(f.t > frames[i - 1].t) {
                return Err(Error::InvalidArgument(format!(
                    "frame times must increase strictly (frame {i}: {} after {})",
                    f.t,
                    frames[i - 1].t
                )));
            }
            if f.velocity.len() != f.varifold.len() {
                return Err(Error::DimensionMismatch {
                    expected: f.varifold.len(),
                    found: f.velocity.len(),
                });
            }
            for v in &f.velocity {
                if v.len() != context.d {
                    return Err(Error::DimensionMismatch {
                        expected: context.d,
                        found: v.len(),
                    });
                }
                lambda_v = lambda_v.max(v.norm());
            }
            let off = f
                .varifold
                .atoms()
                .iter()
                .filter(|a| (a.multiplicity - a.multiplicity.round()).abs() > 0.05)
                .count();
            if off > 0 {
                log::warn!("frame {i}: {off} atoms with non-integer multiplicity");
            }
        }
        Ok(Self {
            context,
            frames,
            lambda_v,
            method: method.into(),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.frames[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.frames[self.frames.len() - 1].t
    }

    /// Index of the frame at time `t` (relative tolerance `1e-12`).
    pub fn frame_index(&self, t: f64) -> Result<usize> {
        let scale = 1.0 + self.t_start().abs().max(self.t_end().abs());
        self.frames
            .iter()
            .position(|f| (f.t - t).abs() <= TIME_TOL * scale)
            .ok_or_else(|| Error::OutOfRange(format!("t = {t} is not a frame time")))
    }

    /// Space-time translation `(x, t) ↦ (x + shift, t + dt)`.
    pub fn translated(&self, shift: &Vector, dt: f64) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .map(|f| Frame {
                t: f.t + dt,
                varifold: f.varifold.translated(shift),
                velocity: f.velocity.clone(),
            })
            .collect();
        Self::new(frames, self.method.clone())
    }

    /// Parabolic dilation `(x, t) ↦ (λx, λ²t)`; velocities scale by `1/λ`.
    pub fn parabolic_scaled(&self, lambda: f64) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                Ok(Frame {
                    t: f.t * lambda * lambda,
                    varifold: f.varifold.scaled(lambda)?,
                    velocity: f.velocity.iter().map(|v| v / lambda).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, self.method.clone())
    }

    /// Largest `|H|` over all frames.
    pub fn max_curvature(&self) -> f64 {
        self.frames.iter().map(|f| f.varifold.max_curvature()).fold(0.0, f64::max)
    }

    /// Distance from `(x, t)` to the nearest atom of the frame at `t`.
    pub fn distance_to_track(&self, x: &Vector, t: f64) -> Result<f64> {
        let i = self.frame_index(t)?;
        Ok(self.frames[i].varifold.distance_to_support(x))
    }
}

/// Backwards cylinder `B_R(x₀) × [t₀ − R², t₀]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicCylinder {
    pub center: Vector,
    pub t0: f64,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn new(center: Vector, t0: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius {radius} must be > 0")));
        }
        Ok(Self { center, t0, radius })
    }

    pub fn contains_time(&self, t: f64) -> bool {
        let slack = TIME_TOL * (1.0 + self.t0.abs() + self.radius * self.radius);
        t <= self.t0 + slack && t >= self.t0 - self.radius * self.radius - slack
    }

    pub fn contains(&self, x: &Vector, t: f64) -> bool {
        self.contains_time(t) && within((x - &self.center).norm(), self.radius)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.center.clone(), self.t0, self.radius * factor)
    }
}

/// Time factor of a separable test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTime {
    pub a: f64,
    pub b: f64,
}

/// `φ(x, t) = ψ(x) (a + b t)` with `ψ` a radial cutoff (or `1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeTestFunction {
    pub spatial: Option<RadialCutoff>,
    pub time: AffineTime,
}

impl SpaceTimeTestFunction {
    pub fn constant(c: f64) -> Self {
        Self {
            spatial: None,
            time: AffineTime { a: c, b: 0.0 },
        }
    }

    pub fn cutoff(cutoff: RadialCutoff) -> Self {
        Self {
            spatial: Some(cutoff),
            time: AffineTime { a: 1.0, b: 0.0 },
        }
    }

    pub fn with_time(mut self, a: f64, b: f64) -> Self {
        self.time = AffineTime { a, b };
        self
    }

    /// `(φ, ∇φ, ∂_t φ)`.
    pub fn eval(&self, x: &Vector, t: f64) -> (f64, Vector, f64) {
        let (psi, grad) = match &self.spatial {
            Some(c) => c.eval(x),
            None => (1.0, Vector::zeros(x.len())),
        };
        let tau = self.time.a + self.time.b * t;
        (psi * tau, grad * tau, psi * self.time.b)
    }
}

/// Normal part `(T_x M)^⊥ v`.
pub fn normal_part(plane: &Plane, v: &Vector) -> Vector {
    v - plane.basis() * (plane.basis().transpose() * v)
}

/// Both sides of the Brakke inequality on `[t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakkeResidual {
    /// `M_{t2}(φ(·,t2)) − M_{t1}(φ(·,t1))`.
    pub lhs: f64,
    /// Trapezoid in time of `∫ ∂_tφ + (−φH + ∇φ)·(H + v^⊥) dM_t`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub residual: f64,
    /// Trapezoid of `∫ |∂_tφ| + |(−φH + ∇φ)·(H + v^⊥)| dM_t`, for relative tolerances.
    pub scale: f64,
}

fn frame_terms(frame: &Frame, phi: &SpaceTimeTestFunction) -> Result<(f64, f64, f64)> {
    let atoms = frame.varifold.atoms();
    let terms = par::map_range(atoms.len(), |i| {
        let a = &atoms[i];
        let (p, grad, dt) = phi.eval(&a.x, frame.t);
        let vperp = normal_part(&a.plane, &frame.velocity[i]);
        let flux = (&grad - &a.h * p).dot(&(&a.h + vperp));
        (p, a.mass() * p, a.mass() * (dt + flux), a.mass() * (dt.abs() + flux.abs()))
    });
    let mut mass = 0.0;
    let mut integrand = 0.0;
    let mut scale = 0.0;
    for (p, m, i, s) in terms {
        if p < 0.0 {
            return Err(Error::NegativeTestFunction { value: p });
        }
        mass += m;
        integrand += i;
        scale += s;
    }
    Ok((mass, integrand, scale))
}

/// `RHS − LHS` of the Brakke inequality between the frames at `t1 < t2`.
pub fn brakke_residual(track: &FlowTrack, phi: &SpaceTimeTestFunction, t1: f64, t2: f64) -> Result<BrakkeResidual> {
    if !(t1 < t2) {
        return Err(Error::InvalidArgument(format!("need t1 < t2, got {t1}, {t2}")));
    }
    let i1 = track.frame_index(t1)?;
    let i2 = track.frame_index(t2)?;
    let per_frame = (i1..=i2)
        .map(|i| frame_terms(&track.frames[i], phi))
        .collect::<Result<Vec<_>>>()?;
    let lhs = per_frame[per_frame.len() - 1].0 - per_frame[0].0;
    let mut rhs = 0.0;
    let mut scale = 0.0;
    for k in 0..per_frame.len() - 1 {
        let dt = track.frames[i1 + k + 1].t - track.frames[i1 + k].t;
        rhs += 0.5 * dt * (per_frame[k].1 + per_frame[k + 1].1);
        scale += 0.5 * dt * (per_frame[k].2 + per_frame[k + 1].2);
    }
    Ok(BrakkeResidual {
        lhs,
        rhs,
        residual: rhs - lhs,
        scale,
    })
}

/// Half the `S^⊥` diameter of all track atoms inside the cylinder.
pub fn spacetime_oscillation(track: &FlowTrack, s: &Plane, q: &ParabolicCylinder) -> Result<f64> {
    let comp = s.complement();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for f in track.frames.iter().filter(|f| q.contains_time(f.t)) {
        for a in f.varifold.atoms() {
            if within((&a.x - &q.center).norm(), q.radius) {
                pts.push(comp.coords(&(&a.x - &q.center)).iter().copied().collect());
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(half_diameter(&pts))
}

/// `f(x, t) = c + b·x + ½ xᵀ A x + c_t t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeQuadratic {
    pub c: f64,
    pub b: Vector,
    pub a: SymMatrix,
    pub c_t: f64,
}

impl SpaceTimeQuadratic {
    pub fn new(c: f64, b: Vector, a: SymMatrix, c_t: f64) -> Result<Self> {
        if b.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.len(),
            });
        }
        Ok(Self { c, b, a, c_t })
    }

    pub fn value(&self, x: &Vector, t: f64) -> f64 {
        self.c + self.b.dot(x) + 0.5 * (self.a.matrix() * x).dot(x) + self.c_t * t
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.b + self.a.matrix() * x
    }

    /// The barrier `|T^⊥x|²/2 − |x''|²/(2m) + x_m²/2 − x_m + t/(2m)` for the
    /// half-plane `{x_m ≥ 0}` of `T = span(e_1..e_m)` (1-based axes).
    pub fn half_plane_barrier(d: usize, m: usize) -> Result<Self> {
        if m < 1 || m >= d {
            return Err(Error::InvalidDimension(format!("need 1 <= m < d, got m = {m}, d = {d}")));
        }
        let mf = m as f64;
        let diag: Vec<f64> = (0..d)
            .map(|i| if i + 1 < m { -1.0 / mf } else { 1.0 })
            .collect();
        let mut b = Vector::zeros(d);
        b[m - 1] = -1.0;
        Self::new(0.0, b, SymMatrix::from_diagonal(&diag), 1.0 / (2.0 * mf))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicMaxCheck {
    pub trace_m: f64,
    pub dt_f: f64,
    pub grad_norm: f64,
    pub lambda_v: f64,
    /// `trace_m D²f − ∂_t f − Λ|∇f|` at `X0`.
    pub residual: f64,
    pub tol_disc: f64,
}

impl ParabolicMaxCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.tol_disc
    }
}

/// `trace_m D²f(X0) − ∂_t f(X0) − Λ|∇f(X0)|` with `Λ = sup|v|`, after
/// checking that `f` restricted to the track up to time `t0` has a local
/// maximum at `X0 = (x0, t0)` within the parabolic radius `0.1`.
pub fn parabolic_max_principle_residual(
    track: &FlowTrack,
    f: &SpaceTimeQuadratic,
    x0: &Vector,
    t0: f64,
) -> Result<ParabolicMaxCheck> {
    let d = track.context.d;
    if x0.len() != d || f.b.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x0.len() });
    }
    let dist = track.distance_to_track(x0, t0)?;
    if !(dist <= SUPPORT_TOL) {
        return Err(Error::NotInSupport(dist));
    }
    let q = ParabolicCylinder::new(x0.clone(), t0, LOCAL_MAX_RADIUS)?;
    let f0 = f.value(x0, t0);
    let slack = 1e-12 * (1.0 + f0.abs());
    for fr in track.frames.iter().filter(|fr| q.contains_time(fr.t)) {
        for a in fr.varifold.atoms() {
            if q.contains(&a.x, fr.t) {
                let fx = f.value(&a.x, fr.t);
                if fx > f0 + slack {
                    return Err(Error::NotLocalMax(format!(
                        "f = {fx:e} at (x, t = {}) exceeds f(X0) = {f0:e}",
                        fr.t
                    )));
                }
            }
        }
    }
    let trace_m = trace_m_min(&f.a, track.context.m)?;
    let grad_norm = f.gradient(x0).norm();
    let lambda_v = track.lambda_v;
    let h = track.frames[track.frame_index(t0)?].varifold.mesh_size();
    let hess_norm = f.a.eigenvalues_ascending().iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    Ok(ParabolicMaxCheck {
        trace_m,
        dt_f: f.c_t,
        grad_norm,
        lambda_v,
        residual: trace_m - f.c_t - lambda_v * grad_norm,
        tol_disc: TolModel::default().tol(h, lambda_v, grad_norm + hess_norm + f.c_t.abs()),
    })
}

/// Random space-time quadratics `f = g·(x − x0) + ½(x − x0)ᵀA(x − x0) + c_t(t − t0)`
/// with `g` normal to the atom plane, kept when the track certifies a local
/// maximum at `(x0, t0)`. Base frames have a full backwards cylinder of radius
/// `0.1` inside the track. Codimension one only; gives up after `1000 · count`
/// draws.
pub fn touching_spacetime_quadratics(track: &FlowTrack, count: usize, seed: u64) -> Vec<(SpaceTimeQuadratic, Vector, f64)> {
    let d = track.context.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let lag = LOCAL_MAX_RADIUS * LOCAL_MAX_RADIUS;
    let eligible: Vec<usize> = (0..track.len())
        .filter(|&i| track.frames[i].t - lag >= track.t_start() && !track.frames[i].varifold.is_empty())
        .collect();
    if eligible.is_empty() || d != track.context.m + 1 {
        return out;
    }
    for _ in 0..1000 * count {
        if out.len() == count {
            break;
        }
        let fr = &track.frames[eligible[rng.random_range(0..eligible.len())]];
        let a = &fr.varifold.atoms()[rng.random_range(0..fr.varifold.len())];
        let g = a.plane.complement().basis_vector(0) * rng.random_range(-2.0..2.0);
        let mut q = Matrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        q = &q + q.transpose();
        q -= Matrix::identity(d, d) * rng.random_range(0.5..3.0);
        let Ok(a_mat) = SymMatrix::new(q) else { continue };
        let c_t = rng.random_range(-1.0..1.0);
        let x0 = a.x.clone();
        let b = &g - a_mat.matrix() * &x0;
        let c = -g.dot(&x0) + 0.5 * (a_mat.matrix() * &x0).dot(&x0) - c_t * fr.t;
        let Ok(f) = SpaceTimeQuadratic::new(c, b, a_mat, c_t) else { continue };
        if parabolic_max_principle_residual(track, &f, &x0, fr.t).is_ok() {
            out.push((f, x0, fr.t));
        }
    }
    out
}
