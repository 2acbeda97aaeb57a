//! Excess, improvement of flatness, graph extraction and the elliptic
//! maximum principle.

pub mod graph;
pub mod touch;

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{plane_distance, trace_m_min, Matrix, Plane, SymMatrix, Vector};
use crate::monotonicity::{density_hypothesis, Outcome, TolModel, DENSITY_BOUND, SUPPORT_TOL};
use crate::varifold::{within, Ball, DiscreteVarifold};
use crate::{Error, Result};

pub use graph::{extract_graph, extract_graph_with, GraphOptions, GraphPatch, GraphSample};
pub use touch::{viscosity_touch, TouchCertificate, TouchFunction};

/// `osc_T(B)/r + C_pen Λ r` with `T` the best-fit plane over `B`.
pub fn excess(v: &DiscreteVarifold, ball: &Ball, c_pen: f64) -> Result<f64> {
    let t = v.best_fit_plane(ball)?;
    let osc = v.oscillation(&t, ball)?;
    Ok(osc / ball.radius + c_pen * v.lambda * ball.radius)
}

/// Constants of the improvement-of-flatness step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessConfig {
    pub eta: f64,
    pub alpha: f64,
    pub eps0: f64,
    pub c: f64,
}

impl Default for FlatnessConfig {
    fn default() -> Self {
        Self {
            eta: 0.25,
            alpha: 0.5,
            eps0: 0.02,
            c: 0.1,
        }
    }
}

impl FlatnessConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("eta", self.eta), ("alpha", self.alpha), ("eps0", self.eps0)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} = {x} must lie in (0, 1)")));
            }
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidArgument(format!("c = {} must be > 0", self.c)));
        }
        Ok(())
    }
}

/// A measured hypothesis `value ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub holds: bool,
}

impl Hypothesis {
    pub(crate) fn new(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            holds: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessImprovement {
    pub t: Plane,
    /// `osc_S(B_R)/R`.
    pub eps: f64,
    pub osc_s: f64,
    pub osc_t_eta: f64,
    /// `η^{1+α} osc_S(B_R)`.
    pub bound: f64,
    pub plane_distance: f64,
    /// `|S − T| / ε` (`0` when both vanish).
    pub distance_ratio: f64,
    pub hypotheses: Vec<Hypothesis>,
    pub outcome: Outcome,
}

impl FlatnessImprovement {
    pub fn ok(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn violated(&self) -> Vec<&str> {
        self.hypotheses
            .iter()
            .filter(|h| !h.holds)
            .map(|h| h.name.as_str())
            .collect()
    }
}

/// Measures the hypotheses at scale `R = ball.radius`, fits `T` over
/// `B_{ηR}` and checks `osc_T(B_{ηR}) ≤ η^{1+α} osc_S(B_R)`.
pub fn improve_flatness(
    v: &DiscreteVarifold,
    ball: &Ball,
    s: &Plane,
    cfg: &FlatnessConfig,
) -> Result<FlatnessImprovement> {
    cfg.validate()?;
    let big_r = ball.radius;
    let osc_s = v.oscillation(s, ball)?;
    let eps = osc_s / big_r;
    let local = v.translated(&-&ball.center);
    let max_density = density_hypothesis(&local, big_r)?;
    let dist = v.distance_to_support(&ball.center);
    let hypotheses = vec![
        Hypothesis::new("base point in support", dist, SUPPORT_TOL),
        Hypothesis::new("flatness osc_S <= eps0 R", osc_s, cfg.eps0 * big_r),
        Hypothesis::new("curvature Lambda <= c eps / R", v.lambda, cfg.c * eps / big_r),
        Hypothesis::new("density ratio <= 3/2", max_density, DENSITY_BOUND),
    ];
    let inner = ball.scaled(cfg.eta)?;
    let t = v.best_fit_plane(&inner)?;
    let osc_t_eta = v.oscillation(&t, &inner)?;
    let bound = cfg.eta.powf(1.0 + cfg.alpha) * osc_s;
    let pd = plane_distance(s, &t)?;
    let distance_ratio = if eps > 0.0 {
        pd / eps
    } else if pd > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let outcome = if hypotheses.iter().all(|h| h.holds) {
        Outcome::from_bool(osc_t_eta <= bound * (1.0 + 1e-9) + 1e-14 * big_r)
    } else {
        Outcome::NotApplicable
    };
    Ok(FlatnessImprovement {
        t,
        eps,
        osc_s,
        osc_t_eta,
        bound,
        plane_distance: pd,
        distance_ratio,
        hypotheses,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessDecay {
    pub radii: Vec<f64>,
    pub excess: Vec<f64>,
    pub eta: f64,
    pub alpha: f64,
    /// Smallest `C` with `E(η^k R) ≤ C η^{αk} E(R) + tol` for all `k`.
    pub c_fit: f64,
    pub tol: f64,
}

impl ExcessDecay {
    pub fn holds(&self, c_max: f64) -> bool {
        self.c_fit <= c_max
    }
}

/// Excess at the scales `η^k R`, `k = 0..=levels`, around `ball.center`.
pub fn excess_decay(
    v: &DiscreteVarifold,
    ball: &Ball,
    eta: f64,
    alpha: f64,
    levels: usize,
    c_pen: f64,
    tol: f64,
) -> Result<ExcessDecay> {
    let radii: Vec<f64> = (0..=levels).map(|k| ball.radius * eta.powi(k as i32)).collect();
    let excess = radii
        .iter()
        .map(|&r| excess(v, &Ball::new(ball.center.clone(), r)?, c_pen))
        .collect::<Result<Vec<_>>>()?;
    let e0 = excess[0];
    let mut c_fit: f64 = 0.0;
    for (k, &e) in excess.iter().enumerate().skip(1) {
        let scale = eta.powf(alpha * k as f64) * e0;
        let over = e - tol;
        if over > 0.0 {
            c_fit = c_fit.max(if scale > 0.0 { over / scale } else { f64::INFINITY });
        }
    }
    Ok(ExcessDecay {
        radii,
        excess,
        eta,
        alpha,
        c_fit,
        tol,
    })
}

/// `f(x) = c + b·x + ½ xᵀ A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    pub c: f64,
    pub b: Vector,
    pub a: SymMatrix,
}

impl QuadraticField {
    pub fn new(c: f64, b: Vector, a: SymMatrix) -> Result<Self> {
        if b.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.len(),
            });
        }
        Ok(Self { c, b, a })
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.c + self.b.dot(x) + 0.5 * (self.a.matrix() * x).dot(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.b + self.a.matrix() * x
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// Radius of the neighbourhood used to certify a local maximum.
pub const LOCAL_MAX_RADIUS: f64 = 0.1;

/// Checks that `value(x0)` dominates every sampled value within
/// `LOCAL_MAX_RADIUS` of `x0`, with a relative allowance of `1e-12`.
pub(crate) fn check_local_max<'a, I, F>(points: I, x0: &Vector, value: F) -> Result<()>
where
    I: IntoIterator<Item = &'a Vector>,
    F: Fn(&Vector) -> f64,
{
    let f0 = value(x0);
    let slack = 1e-12 * (1.0 + f0.abs());
    for x in points {
        if within((x - x0).norm(), LOCAL_MAX_RADIUS) {
            let fx = value(x);
            if fx > f0 + slack {
                return Err(Error::NotLocalMax(format!(
                    "f = {fx:e} at distance {:e} exceeds f(x0) = {f0:e}",
                    (x - x0).norm()
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleCheck {
    pub trace_m: f64,
    pub grad_norm: f64,
    pub lambda: f64,
    /// `trace_m D²f(x0) − Λ |∇f(x0)|`.
    pub residual: f64,
    pub tol_disc: f64,
}

impl MaxPrincipleCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.tol_disc
    }
}

/// `trace_m D²f(x0) − Λ|∇f(x0)|` after verifying that `x0` is a support
/// point where `f` restricted to the atoms has a local maximum.
pub fn max_principle_residual(v: &DiscreteVarifold, f: &QuadraticField, x0: &Vector) -> Result<MaxPrincipleCheck> {
    if f.dim() != v.context.d || x0.len() != v.context.d {
        return Err(Error::DimensionMismatch {
            expected: v.context.d,
            found: x0.len().min(f.dim()),
        });
    }
    let dist = v.distance_to_support(x0);
    if !(dist <= SUPPORT_TOL) {
        return Err(Error::NotInSupport(dist));
    }
    check_local_max(v.atoms().iter().map(|a| &a.x), x0, |x| f.value(x))?;
    let trace_m = trace_m_min(&f.a, v.context.m)?;
    let grad_norm = f.gradient(x0).norm();
    let lambda = v.lambda;
    let hess_norm = f.a.eigenvalues_ascending().iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let tol_disc = TolModel::default().tol(v.mesh_size(), lambda, grad_norm + hess_norm);
    Ok(MaxPrincipleCheck {
        trace_m,
        grad_norm,
        lambda,
        residual: trace_m - lambda * grad_norm,
        tol_disc,
    })
}

/// Random quadratics `f(x) = g·(x − x0) + ½(x − x0)ᵀA(x − x0)` with `A`
/// negative definite and `g` normal to the atom plane at `x0`, kept when the
/// atoms certify a local maximum at `x0`. Codimension one only. Gives up after
/// `1000 · count` draws.
pub fn touching_quadratics(v: &DiscreteVarifold, count: usize, seed: u64) -> Vec<(QuadraticField, Vector)> {
    let d = v.context.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if v.is_empty() || d != v.context.m + 1 {
        return out;
    }
    for _ in 0..1000 * count {
        if out.len() == count {
            break;
        }
        let a = &v.atoms()[rng.random_range(0..v.len())];
        let nrm = a.plane.complement().basis_vector(0);
        let g = nrm * rng.random_range(-2.0..2.0);
        let mut q = Matrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        q = &q + q.transpose();
        q -= Matrix::identity(d, d) * rng.random_range(2.0..5.0);
        let Ok(a_mat) = SymMatrix::new(q) else { continue };
        let x0 = a.x.clone();
        let b = &g - a_mat.matrix() * &x0;
        let c = -g.dot(&x0) + 0.5 * (a_mat.matrix() * &x0).dot(&x0);
        let Ok(f) = QuadraticField::new(c, b, a_mat) else { continue };
        if check_local_max(v.atoms().iter().map(|a| &a.x), &x0, |x| f.value(x)).is_ok() {
            out.push((f, x0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryContext;
    use crate::varifold::shapes;

    fn ctx() -> GeometryContext {
        GeometryContext::new(3, 2).unwrap()
    }

    fn horizontal() -> Plane {
        Plane::horizontal(3, 2).unwrap()
    }

    fn flat(h: f64, radius: f64) -> DiscreteVarifold {
        shapes::flat_lattice(ctx(), &horizontal(), h, radius, &Vector::zeros(3)).unwrap()
    }

    #[test]
    fn excess_examples() {
        let b = Ball::centered(3, 0.5).unwrap();
        assert!(excess(&flat(0.02, 1.0), &b, 10.0).unwrap() < 1e-12);
        let tilted = shapes::tilted_plane(ctx(), 0.2, 0.02, 1.0).unwrap();
        assert!(excess(&tilted, &b, 10.0).unwrap() < 1e-12);
        let cap = shapes::sphere_cap(ctx(), 10.0, 0.005, 0.6)
            .unwrap()
            .with_curvature_bound(0.1, true)
            .unwrap();
        let e = excess(&cap, &b, 10.0).unwrap();
        assert!((e - 0.5125).abs() <= 0.01, "{e}");
        assert!(excess(&cap, &Ball::new(Vector::from_column_slice(&[5.0, 0.0, 0.0]), 0.1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn improvement_of_flatness_examples() {
        let cfg = FlatnessConfig::default();
        let s = horizontal();
        let b = Ball::centered(3, 1.0).unwrap();
        let tilted = shapes::tilted_plane(ctx(), 0.01, 0.01, 1.2).unwrap();
        let imp = improve_flatness(&tilted, &b, &s, &cfg).unwrap();
        assert!(imp.ok(), "{:?}", imp.hypotheses);
        assert!(imp.osc_t_eta < 1e-12);
        assert!(imp.distance_ratio <= 2.0 && imp.distance_ratio > 0.9);

        let eps = 0.01;
        let saddle = shapes::graph_patch(ctx(), 0.01, 1.2, &[], &|x: &[f64]| {
            (
                eps * (x[0] * x[0] - x[1] * x[1]) / 2.0,
                vec![eps * x[0], -eps * x[1]],
                Matrix::from_diagonal(&Vector::from_column_slice(&[eps, -eps])),
            )
        })
        .unwrap();
        let imp = improve_flatness(&saddle, &b, &s, &cfg).unwrap();
        assert!(imp.ok(), "{:?}", imp.hypotheses);
        assert!(imp.distance_ratio <= 2.0);

        let a = flat(0.02, 1.2);
        let two = a.union(&a.translated(&Vector::from_column_slice(&[0.0, 0.0, 0.01]))).unwrap();
        let imp = improve_flatness(&two, &b, &s, &cfg).unwrap();
        assert_eq!(imp.outcome, Outcome::NotApplicable);
        assert_eq!(imp.violated(), vec!["density ratio <= 3/2"]);
    }

    #[test]
    fn iterated_excess_decay_on_cap() {
        let cap = shapes::sphere_cap(ctx(), 10.0, 0.0005, 0.26).unwrap();
        let b = Ball::centered(3, 0.25).unwrap();
        let dec = excess_decay(&cap, &b, 0.25, 0.5, 4, 10.0, 0.0).unwrap();
        assert!(dec.holds(10.0), "{dec:?}");
        let tilted = shapes::tilted_plane(ctx(), 0.05, 0.0005, 0.26).unwrap();
        let dec = excess_decay(&tilted, &Ball::centered(3, 0.25).unwrap(), 0.25, 0.5, 4, 10.0, 1e-12).unwrap();
        assert_eq!(dec.c_fit, 0.0);
    }

    #[test]
    fn max_principle_examples() {
        let north = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let sphere = shapes::sphere(ctx(), 1.0, 0.02, &north).unwrap();
        let x3 = QuadraticField::new(0.0, north.clone(), SymMatrix::from_diagonal(&[0.0; 3])).unwrap();
        let r = max_principle_residual(&sphere, &x3, &north).unwrap();
        assert!((r.residual + 2.0).abs() < 1e-12);
        let half = QuadraticField::new(0.0, Vector::zeros(3), SymMatrix::identity(3)).unwrap();
        for a in sphere.atoms().iter().step_by(997) {
            let r = max_principle_residual(&sphere, &half, &a.x).unwrap();
            assert!(r.residual.abs() < 1e-3, "{}", r.residual);
        }
        let plane = flat(0.02, 0.5);
        let concave = QuadraticField::new(0.0, Vector::zeros(3), SymMatrix::from_diagonal(&[-1.0; 3])).unwrap();
        let r = max_principle_residual(&plane, &concave, &Vector::zeros(3)).unwrap();
        assert_eq!(r.residual, -2.0);
        let south = -&north;
        assert!(matches!(
            max_principle_residual(&sphere, &x3, &south),
            Err(Error::NotLocalMax(_))
        ));
    }


    #[test]
    fn random_quadratic_maxima_obey_the_principle() {
        let north = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let sphere = shapes::sphere(ctx(), 1.0, 0.02, &north).unwrap();
        let cat = shapes::catenoid(ctx(), 0.8, 0.02).unwrap();
        for (v, seed) in [(&sphere, 1), (&cat, 2)] {
            for (f, x0) in touching_quadratics(v, 50, seed) {
                let r = max_principle_residual(v, &f, &x0).unwrap();
                assert!(r.passed(), "{r:?}");
            }
        }
    }
}
