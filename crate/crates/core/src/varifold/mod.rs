//! Discrete varifolds: weighted atoms carrying a tangent plane, a
//! multiplicity and a mean curvature vector.

pub mod field;
pub mod io;
pub mod mesh;
pub mod shapes;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::geometry::{half_diameter, GeometryContext, Matrix, Plane, Vector};
use crate::spatial::PointGrid;
use crate::{par, Error, Result};

pub use field::TestField;

const LAMBDA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: Vector,
    pub weight: f64,
    pub plane: Plane,
    pub multiplicity: f64,
    pub h: Vector,
}

impl Atom {
    pub fn new(x: Vector, weight: f64, plane: Plane, h: Vector) -> Self {
        Self {
            x,
            weight,
            plane,
            multiplicity: 1.0,
            h,
        }
    }

    /// `weight · multiplicity`.
    pub fn mass(&self) -> f64 {
        self.weight * self.multiplicity
    }
}

/// `dist <= radius` up to a relative rounding allowance of `1e-12`, so that
/// lattice points placed exactly on a sphere are counted as inside.
pub fn within(dist: f64, radius: f64) -> bool {
    dist <= radius * (1.0 + 1e-12)
}

/// Closed ball `B_r(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vector,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius {radius} must be > 0")));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(d: usize, radius: f64) -> Result<Self> {
        Self::new(Vector::zeros(d), radius)
    }

    pub fn contains(&self, x: &Vector) -> bool {
        within((x - &self.center).norm(), self.radius)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.center.clone(), self.radius * factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVarifold {
    pub context: GeometryContext,
    atoms: Vec<Atom>,
    pub lambda: f64,
    rim: RimCache,
}

/// Lazily computed rim atoms. Ignored by equality.
#[derive(Debug, Clone, Default)]
struct RimCache(std::sync::OnceLock<Vec<usize>>);

impl PartialEq for RimCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// First variation `δV(F)` together with the mean-curvature side of the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    /// `Σ w Θ div_S F`.
    pub value: f64,
    /// `-Σ w Θ H·F`.
    pub curvature_term: f64,
    /// `Σ w Θ (|div_S F| + |H·F|)`, the scale used for relative residuals.
    pub scale: f64,
    /// Set when `F` does not vanish near the rim of the data.
    pub unreliable: bool,
}

impl FirstVariation {
    pub fn residual(&self) -> f64 {
        self.value - self.curvature_term
    }

    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual().abs() / self.scale
        } else {
            self.residual().abs()
        }
    }
}

impl DiscreteVarifold {
    pub fn new(context: GeometryContext, atoms: Vec<Atom>, lambda: f64) -> Result<Self> {
        for a in &atoms {
            if a.x.len() != context.d || a.h.len() != context.d {
                return Err(Error::DimensionMismatch {
                    expected: context.d,
                    found: a.x.len().min(a.h.len()),
                });
            }
            if a.plane.ambient_dim() != context.d || a.plane.dim() != context.m {
                return Err(Error::DimensionMismatch {
                    expected: context.m,
                    found: a.plane.dim(),
                });
            }
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(Error::InvalidArgument(format!("negative weight {}", a.weight)));
            }
            if !(a.multiplicity >= 1.0) || !a.multiplicity.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "multiplicity {} below 1",
                    a.multiplicity
                )));
            }
        }
        let hmax = atoms.iter().map(|a| a.h.norm()).fold(0.0, f64::max);
        if !(lambda >= 0.0) || lambda < hmax - LAMBDA_SLACK {
            return Err(Error::InvalidArgument(format!(
                "lambda {lambda} is below max |H| = {hmax}"
            )));
        }
        let mass: f64 = atoms.iter().map(Atom::mass).sum();
        if !atoms.is_empty() && !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument(format!("total mass {mass} must be positive")));
        }
        Ok(Self {
            context,
            atoms,
            lambda,
            rim: RimCache::default(),
        })
    }

    /// Builds the varifold with `lambda = max |H|`.
    pub fn with_measured_lambda(context: GeometryContext, atoms: Vec<Atom>) -> Result<Self> {
        let hmax = atoms.iter().map(|a| a.h.norm()).fold(0.0, f64::max);
        Self::new(context, atoms, hmax)
    }

    pub fn empty(context: GeometryContext) -> Self {
        Self {
            context,
            atoms: Vec::new(),
            lambda: 0.0,
            rim: RimCache::default(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(Atom::mass).sum()
    }

    /// Typical atom spacing, `(median weight)^{1/m}`.
    pub fn mesh_size(&self) -> f64 {
        if self.atoms.is_empty() {
            return 0.0;
        }
        let mut w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        w.sort_by(|a, b| a.total_cmp(b));
        w[w.len() / 2].powf(1.0 / self.context.m as f64)
    }

    pub fn max_curvature(&self) -> f64 {
        self.atoms.iter().map(|a| a.h.norm()).fold(0.0, f64::max)
    }

    /// Same atoms with `H` replaced by zero and a prescribed `lambda`.
    pub fn with_curvature_bound(&self, lambda: f64, clear_h: bool) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let mut a = a.clone();
                if clear_h {
                    a.h.fill(0.0);
                }
                a
            })
            .collect();
        Self::new(self.context, atoms, lambda)
    }

    pub fn union(&self, other: &DiscreteVarifold) -> Result<Self> {
        if self.context != other.context {
            return Err(Error::DimensionMismatch {
                expected: self.context.d,
                found: other.context.d,
            });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Self::new(self.context, atoms, self.lambda.max(other.lambda))
    }

    pub fn translated(&self, shift: &Vector) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                x: &a.x + shift,
                ..a.clone()
            })
            .collect();
        Self {
            context: self.context,
            atoms,
            lambda: self.lambda,
            rim: RimCache::default(),
        }
    }

    /// Image under an orthogonal map `Q`.
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom {
                    x: q * &a.x,
                    h: q * &a.h,
                    plane: a.plane.transformed(q)?,
                    ..a.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            context: self.context,
            atoms,
            lambda: self.lambda,
            rim: RimCache::default(),
        })
    }

    /// Image under `x ↦ s x`: weights scale by `s^m`, curvature by `1/s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("scale {s} must be > 0")));
        }
        let m = self.context.m as i32;
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                x: &a.x * s,
                weight: a.weight * s.powi(m),
                h: &a.h / s,
                ..a.clone()
            })
            .collect();
        Ok(Self {
            context: self.context,
            atoms,
            lambda: self.lambda / s,
            rim: RimCache::default(),
        })
    }

    pub fn atoms_in_ball(&self, ball: &Ball) -> Vec<&Atom> {
        self.atoms.iter().filter(|a| ball.contains(&a.x)).collect()
    }

    pub fn mass_in_ball(&self, ball: &Ball) -> f64 {
        par::sum_range(self.atoms.len(), |i| {
            let a = &self.atoms[i];
            if ball.contains(&a.x) {
                a.mass()
            } else {
                0.0
            }
        })
    }

    /// `M(B) / (ω_m r^m)`.
    pub fn density_ratio(&self, ball: &Ball) -> f64 {
        self.mass_in_ball(ball) / (self.context.omega_m * ball.radius.powi(self.context.m as i32))
    }

    /// Largest density ratio over balls centred at atoms of `ball` with the
    /// given radii; used to audit the `3/2` density hypothesis.
    pub fn max_density_ratio(&self, ball: &Ball, radii: &[f64]) -> f64 {
        let centers: Vec<&Atom> = self.atoms_in_ball(ball);
        let stride = (centers.len() / 64).max(1);
        let picks: Vec<&Atom> = centers.into_iter().step_by(stride).collect();
        par::max_range(picks.len(), |i| {
            radii
                .iter()
                .map(|&r| {
                    Ball::new(picks[i].x.clone(), r)
                        .map(|b| self.density_ratio(&b))
                        .unwrap_or(0.0)
                })
                .fold(0.0, f64::max)
        })
        .max(0.0)
    }

    /// Distance from `p` to the nearest atom.
    pub fn distance_to_support(&self, p: &Vector) -> f64 {
        self.atoms
            .iter()
            .map(|a| (&a.x - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `δV(F) = Σ w Θ div_{T} F`, with the curvature side `-Σ w Θ H·F`.
    pub fn first_variation(&self, f: &TestField) -> Result<FirstVariation> {
        if f.dim() != self.context.d {
            return Err(Error::DimensionMismatch {
                expected: self.context.d,
                found: f.dim(),
            });
        }
        let terms = par::map_range(self.atoms.len(), |i| {
            let a = &self.atoms[i];
            let (value, jac) = f.eval_with_jacobian(&a.x);
            let div = crate::geometry::trace_over_basis(&jac, a.plane.basis());
            let hf = a.h.dot(&value);
            (a.mass() * div, a.mass() * hf, a.mass() * (div.abs() + hf.abs()), value.norm())
        });
        let mut out = FirstVariation {
            value: 0.0,
            curvature_term: 0.0,
            scale: 0.0,
            unreliable: false,
        };
        for &(div, hf, s, _) in &terms {
            out.value += div;
            out.curvature_term -= hf;
            out.scale += s;
        }
        let peak = terms.iter().map(|t| t.3).fold(0.0, f64::max);
        out.unreliable = self
            .rim_atoms()
            .iter()
            .any(|&i| terms[i].3 > 1e-12 * peak.max(1e-300));
        Ok(out)
    }

    /// Atoms at the edge of the data: the mass-weighted centroid of their
    /// neighbours within three spacings is displaced tangentially.
    pub fn rim_atoms(&self) -> &[usize] {
        self.rim.0.get_or_init(|| self.find_rim())
    }

    fn find_rim(&self) -> Vec<usize> {
        let n = self.atoms.len();
        if n == 0 {
            return Vec::new();
        }
        let rho = 3.0 * self.mesh_size();
        if !(rho > 0.0) {
            return Vec::new();
        }
        let pts: Vec<&Vector> = self.atoms.iter().map(|a| &a.x).collect();
        let grid = PointGrid::new(pts.iter().copied(), rho);
        let flags = par::map_range(n, |i| {
            let a = &self.atoms[i];
            let nb = grid.query(&pts, &a.x, rho);
            let mut mass = 0.0;
            let mut offset = Vector::zeros(self.context.m);
            for j in nb {
                let b = &self.atoms[j];
                mass += b.mass();
                offset += a.plane.coords(&(&b.x - &a.x)) * b.mass();
            }
            mass > 0.0 && (offset / mass).norm() > 0.25 * rho
        });
        flags
            .into_iter()
            .enumerate()
            .filter_map(|(i, f)| f.then_some(i))
            .collect()
    }

    /// Half the diameter of `S^⊥`-coordinates of atoms in `ball`.
    pub fn oscillation(&self, s: &Plane, ball: &Ball) -> Result<f64> {
        let comp = s.complement();
        let pts: Vec<Vec<f64>> = self
            .atoms
            .iter()
            .filter(|a| ball.contains(&a.x))
            .map(|a| comp.coords(&a.x).iter().copied().collect())
            .collect();
        if pts.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(half_diameter(&pts))
    }

    /// Weighted PCA plane of the atoms in `ball`.
    pub fn best_fit_plane(&self, ball: &Ball) -> Result<Plane> {
        let inside = self.atoms_in_ball(ball);
        let m = self.context.m;
        let d = self.context.d;
        if inside.len() < m + 1 {
            return Err(Error::RankDeficient);
        }
        let mass: f64 = inside.iter().map(|a| a.mass()).sum();
        if !(mass > 0.0) {
            return Err(Error::RankDeficient);
        }
        let mut mean = Vector::zeros(d);
        for a in &inside {
            mean += &a.x * a.mass();
        }
        mean /= mass;
        let mut cov = Matrix::zeros(d, d);
        for a in &inside {
            let y = &a.x - &mean;
            cov.syger(a.mass() / mass, &y, &y, 1.0);
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let top = eig.eigenvalues[order[0]];
        let mth = eig.eigenvalues[order[m - 1]];
        if !(top > 0.0) || mth <= 1e-14 * top {
            return Err(Error::RankDeficient);
        }
        let cols: Vec<Vector> = order[..m]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        Plane::from_spanning(&cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_rotation;
    use crate::varifold::shapes;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ctx(d: usize, m: usize) -> GeometryContext {
        GeometryContext::new(d, m).unwrap()
    }

    #[test]
    fn plane_disk_mass() {
        let s = Plane::horizontal(3, 2).unwrap();
        let v = shapes::flat_lattice(ctx(3, 2), &s, 0.01, 1.05, &Vector::zeros(3)).unwrap();
        let b = Ball::centered(3, 1.0).unwrap();
        assert!((v.mass_in_ball(&b) - PI).abs() <= 0.01 * PI);
        assert_relative_eq!(v.density_ratio(&b), 1.0, epsilon = 0.01);
        assert_eq!(DiscreteVarifold::empty(ctx(3, 2)).mass_in_ball(&b), 0.0);
    }

    #[test]
    fn two_planes_double_density() {
        let s = Plane::horizontal(3, 2).unwrap();
        let up = Vector::from_column_slice(&[0.0, 0.0, 0.05]);
        let a = shapes::flat_lattice(ctx(3, 2), &s, 0.01, 1.1, &up).unwrap();
        let b = shapes::flat_lattice(ctx(3, 2), &s, 0.01, 1.1, &(-&up)).unwrap();
        let v = a.union(&b).unwrap();
        // each sheet meets B_1 in a disk of radius sqrt(1 - 0.05^2)
        let ratio = v.density_ratio(&Ball::centered(3, 1.0).unwrap());
        assert!((ratio - 2.0 * (1.0 - 0.0025)).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn invariants_reject_bad_atoms() {
        let c = ctx(3, 2);
        let s = Plane::horizontal(3, 2).unwrap();
        let mut a = Atom::new(Vector::zeros(3), 1.0, s.clone(), Vector::from_column_slice(&[0.0, 0.0, 2.0]));
        assert!(DiscreteVarifold::new(c, vec![a.clone()], 1.0).is_err());
        assert!(DiscreteVarifold::new(c, vec![a.clone()], 2.0).is_ok());
        a.multiplicity = 0.5;
        assert!(DiscreteVarifold::new(c, vec![a.clone()], 2.0).is_err());
        a.multiplicity = 1.0;
        a.weight = -1.0;
        assert!(DiscreteVarifold::new(c, vec![a], 2.0).is_err());
    }

    #[test]
    fn sphere_identity_field() {
        let v = shapes::sphere(ctx(3, 2), 1.0, 0.02, &Vector::from_column_slice(&[0.0, 0.0, 1.0])).unwrap();
        let fv = v.first_variation(&TestField::identity(3)).unwrap();
        assert!((fv.value - 8.0 * PI).abs() < 0.2, "{}", fv.value);
        assert!((fv.curvature_term - 8.0 * PI).abs() < 0.2);
        assert!(!fv.unreliable);
    }

    #[test]
    fn plane_constant_field_is_zero() {
        let s = Plane::horizontal(3, 2).unwrap();
        let v = shapes::flat_lattice(ctx(3, 2), &s, 0.02, 1.0, &Vector::zeros(3)).unwrap();
        let f = TestField::constant(Vector::from_column_slice(&[1.0, -2.0, 0.5]));
        let fv = v.first_variation(&f).unwrap();
        assert!(fv.value.abs() < 1e-10);
        // a field that does not vanish at the rim is flagged
        assert!(fv.unreliable);
    }

    #[test]
    fn oscillation_examples() {
        let c = ctx(3, 2);
        let s = Plane::horizontal(3, 2).unwrap();
        let shifted = shapes::flat_lattice(c, &s, 0.05, 1.2, &Vector::from_column_slice(&[0.0, 0.0, 0.3])).unwrap();
        let b = Ball::centered(3, 1.0).unwrap();
        assert!(shifted.oscillation(&s, &b).unwrap() < 1e-15);

        for slope in [0.05, 0.1, 0.2] {
            let tilted = shapes::tilted_plane(c, slope, 0.01, 1.2).unwrap();
            let osc = tilted.oscillation(&s, &b).unwrap();
            // the ball cuts the graph at x_0 = 1/sqrt(1 + s^2)
            let exact = slope / (1.0 + slope * slope).sqrt();
            assert!((osc - exact).abs() <= slope * 0.01 + 1e-12, "{slope}: {osc}");
            assert!((osc - slope).abs() <= 0.5 * slope.powi(3) + slope * 0.01);
        }

        let cap = shapes::sphere_cap(c, 10.0, 0.002, 0.6).unwrap();
        let osc = cap.oscillation(&s, &Ball::centered(3, 0.5).unwrap()).unwrap();
        assert!((osc - 0.00625).abs() < 5e-4, "{osc}");
        assert!(matches!(
            cap.oscillation(&s, &Ball::new(Vector::from_column_slice(&[5.0, 0.0, 0.0]), 0.1).unwrap()),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn oscillation_is_rigid_motion_invariant() {
        let c = ctx(3, 2);
        let s = Plane::horizontal(3, 2).unwrap();
        let cap = shapes::sphere_cap(c, 2.0, 0.02, 0.6).unwrap();
        let b = Ball::centered(3, 0.5).unwrap();
        let base = cap.oscillation(&s, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let q = random_rotation(3, &mut rng);
            let rv = cap.rotated(&q).unwrap();
            let rs = s.transformed(&q).unwrap();
            let rb = Ball::new(&q * &b.center, b.radius).unwrap();
            assert!((rv.oscillation(&rs, &rb).unwrap() - base).abs() < 1e-10);
            let shift = Vector::from_column_slice(&[0.3, -1.0, 2.0]);
            let tv = cap.translated(&shift);
            let tb = Ball::new(&b.center + &shift, b.radius).unwrap();
            assert!((tv.oscillation(&s, &tb).unwrap() - base).abs() < 1e-10);
        }
    }

    #[test]
    fn oscillation_is_monotone_in_ball() {
        let c = ctx(3, 2);
        let cap = shapes::sphere_cap(c, 3.0, 0.02, 0.8).unwrap();
        let s = Plane::horizontal(3, 2).unwrap();
        let mut prev = 0.0;
        for k in 1..=10 {
            let b = Ball::centered(3, 0.07 * k as f64).unwrap();
            let o = cap.oscillation(&s, &b).unwrap();
            assert!(o >= prev);
            prev = o;
        }
    }

    #[test]
    fn cone_density_is_scale_free() {
        // a union of three rays from the origin is a cone (m = 1)
        let c = ctx(2, 1);
        let mut atoms = Vec::new();
        for k in 0..3 {
            let th = 2.0 * PI * k as f64 / 3.0 + 0.3;
            let dir = Vector::from_column_slice(&[th.cos(), th.sin()]);
            let line = Plane::from_spanning(&[dir.clone()]).unwrap();
            for j in 0..1000 {
                let t = (j as f64 + 0.5) * 1e-3;
                atoms.push(Atom::new(&dir * t, 1e-3, line.clone(), Vector::zeros(2)));
            }
        }
        let v = DiscreteVarifold::new(c, atoms, 0.0).unwrap();
        for r in [0.1, 0.25, 0.5, 0.8] {
            let ratio = v.density_ratio(&Ball::centered(2, r).unwrap());
            assert!((ratio - 1.5).abs() < 1e-10, "{r}: {ratio}");
        }
    }

    #[test]
    fn best_fit_plane_examples() {
        let c = ctx(3, 2);
        let s = Plane::horizontal(3, 2).unwrap();
        let flat = shapes::flat_lattice(c, &s, 0.05, 1.0, &Vector::zeros(3)).unwrap();
        let b = Ball::centered(3, 0.8).unwrap();
        let fit = flat.best_fit_plane(&b).unwrap();
        assert!(crate::geometry::plane_distance(&fit, &s).unwrap() < 1e-8);

        let theta: f64 = 0.05;
        let tilted = shapes::tilted_plane(c, theta.tan(), 0.02, 1.0).unwrap();
        let fit = tilted.best_fit_plane(&b).unwrap();
        let normal = fit.complement().basis_vector(0);
        let recovered = normal[2].abs().acos();
        assert!((recovered - theta).abs() < 1e-6);

        let cap = shapes::sphere_cap(c, 10.0, 0.01, 0.6).unwrap();
        let fit = cap.best_fit_plane(&Ball::centered(3, 0.5).unwrap()).unwrap();
        assert!(crate::geometry::plane_distance(&fit, &s).unwrap() < 0.01);

        let line = shapes::flat_lattice(ctx(3, 1), &Plane::horizontal(3, 1).unwrap(), 0.1, 1.0, &Vector::zeros(3)).unwrap();
        let as_surface: Vec<Atom> = line
            .atoms()
            .iter()
            .map(|a| Atom::new(a.x.clone(), a.weight, s.clone(), a.h.clone()))
            .collect();
        let degenerate = DiscreteVarifold::new(c, as_surface, 0.0).unwrap();
        assert!(matches!(degenerate.best_fit_plane(&b), Err(Error::RankDeficient)));
    }

    #[test]
    fn best_fit_plane_is_near_optimal_for_oscillation() {
        let c = ctx(3, 2);
        let cap = shapes::sphere_cap(c, 4.0, 0.02, 0.6).unwrap();
        let b = Ball::centered(3, 0.5).unwrap();
        let fit = cap.best_fit_plane(&b).unwrap();
        let s = Plane::horizontal(3, 2).unwrap();
        assert!(cap.oscillation(&fit, &b).unwrap() <= cap.oscillation(&s, &b).unwrap() * 1.1);
    }

    #[test]
    fn scaling_and_rim() {
        let c = ctx(3, 2);
        let s = Plane::horizontal(3, 2).unwrap();
        let v = shapes::flat_lattice(c, &s, 0.05, 1.0, &Vector::zeros(3)).unwrap();
        let rim = v.rim_atoms();
        assert!(!rim.is_empty());
        for &i in rim {
            assert!(v.atoms()[i].x.norm() > 0.8);
        }
        let big = v.scaled(2.0).unwrap();
        assert_relative_eq!(big.total_mass(), 4.0 * v.total_mass(), max_relative = 1e-12);
    }
}
