//! Analytic sample surfaces with closed-form weights, tangent planes and
//! mean curvature.

use std::f64::consts::PI;

use crate::geometry::{GeometryContext, Matrix, Plane, Vector};
use crate::varifold::{Atom, DiscreteVarifold};
use crate::{Error, Result};

/// Height function of a codimension-one graph: value, gradient and Hessian at `x'`.
pub type HeightFn<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>, Matrix) + 'a;

/// A disk removed from the graph domain, in base-plane coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub center: Vec<f64>,
    pub radius: f64,
}

fn check_spacing(spacing: f64, radius: f64) -> Result<()> {
    if !(spacing > 0.0) || !(radius > 0.0) || spacing > radius {
        return Err(Error::InvalidArgument(format!(
            "need 0 < spacing <= radius (got {spacing}, {radius})"
        )));
    }
    Ok(())
}

/// All integer multi-indices `k ∈ Z^m` with `|k h| <= radius`.
fn lattice_points(m: usize, spacing: f64, radius: f64) -> Vec<Vec<f64>> {
    let n = (radius / spacing).floor() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-n; m];
    loop {
        let p: Vec<f64> = idx.iter().map(|&k| k as f64 * spacing).collect();
        if p.iter().map(|c| c * c).sum::<f64>().sqrt() <= radius {
            out.push(p);
        }
        let mut j = 0;
        loop {
            if j == m {
                return out;
            }
            if idx[j] < n {
                idx[j] += 1;
                break;
            }
            idx[j] = -n;
            j += 1;
        }
    }
}

/// Square lattice of spacing `h` on the disk of radius `radius` in the plane
/// `offset + S`; the point `offset` is always an atom.
pub fn flat_lattice(
    ctx: GeometryContext,
    plane: &Plane,
    spacing: f64,
    radius: f64,
    offset: &Vector,
) -> Result<DiscreteVarifold> {
    check_spacing(spacing, radius)?;
    if plane.dim() != ctx.m || plane.ambient_dim() != ctx.d {
        return Err(Error::DimensionMismatch {
            expected: ctx.m,
            found: plane.dim(),
        });
    }
    let w = spacing.powi(ctx.m as i32);
    let atoms = lattice_points(ctx.m, spacing, radius)
        .into_iter()
        .map(|p| {
            let x = offset + plane.basis() * Vector::from_vec(p);
            Atom::new(x, w, plane.clone(), Vector::zeros(ctx.d))
        })
        .collect();
    DiscreteVarifold::new(ctx, atoms, 0.0)
}

/// Flat lattice on `S = span(e_0..e_{m-1})` with the atoms inside the given
/// holes removed.
pub fn punctured_plane(ctx: GeometryContext, spacing: f64, radius: f64, holes: &[Hole]) -> Result<DiscreteVarifold> {
    graph_patch(ctx, spacing, radius, holes, &|x: &[f64]| {
        (0.0, vec![0.0; x.len()], Matrix::zeros(x.len(), x.len()))
    })
}

/// Graph `x_m = u(x')` over the disk of radius `radius` in
/// `span(e_0..e_{m-1})`, sampled on a square lattice.
///
/// Weights are `h^m W` with `W = sqrt(1 + |∇u|²)`; the mean curvature vector
/// is `κ ν` with `ν = (-∇u, 1)/W` and `κ = (Δu - ∇uᵀ D²u ∇u / W²) / W`.
pub fn graph_patch(
    ctx: GeometryContext,
    spacing: f64,
    radius: f64,
    holes: &[Hole],
    u: &HeightFn<'_>,
) -> Result<DiscreteVarifold> {
    check_spacing(spacing, radius)?;
    if ctx.d != ctx.m + 1 {
        return Err(Error::InvalidDimension(format!(
            "graph patches need codimension 1, got d = {}, m = {}",
            ctx.d, ctx.m
        )));
    }
    let m = ctx.m;
    let d = ctx.d;
    let hm = spacing.powi(m as i32);
    let mut atoms = Vec::new();
    for p in lattice_points(m, spacing, radius) {
        let in_hole = holes.iter().any(|hole| {
            p.iter()
                .zip(&hole.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                < hole.radius
        });
        if in_hole {
            continue;
        }
        atoms.push(graph_atom(d, m, &p, hm, u)?);
    }
    DiscreteVarifold::with_measured_lambda(ctx, atoms)
}

pub(crate) fn graph_atom(d: usize, m: usize, p: &[f64], cell: f64, u: &HeightFn<'_>) -> Result<Atom> {
    let (val, grad, hess) = u(p);
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    let w = (1.0 + g2).sqrt();
    let mut x = Vector::zeros(d);
    for i in 0..m {
        x[i] = p[i];
    }
    x[m] = val;
    let tangents: Vec<Vector> = (0..m)
        .map(|i| {
            let mut t = Vector::zeros(d);
            t[i] = 1.0;
            t[m] = grad[i];
            t
        })
        .collect();
    let plane = Plane::from_spanning(&tangents)?;
    let g = Vector::from_column_slice(&grad);
    let lap = hess.trace();
    let quad = (&hess * &g).dot(&g);
    let kappa = (lap - quad / (w * w)) / w;
    let mut nu = Vector::zeros(d);
    for i in 0..m {
        nu[i] = -grad[i] / w;
    }
    nu[m] = 1.0 / w;
    Ok(Atom::new(x, cell * w, plane, nu * kappa))
}

/// The plane `x_m = slope · x_0`, sampled by a square lattice of spacing
/// `h` on the disk of radius `radius` inside the plane itself, so that in-plane
/// distances from the origin are exact multiples of `h` along the axes.
pub fn tilted_plane(ctx: GeometryContext, slope: f64, spacing: f64, radius: f64) -> Result<DiscreteVarifold> {
    if ctx.d != ctx.m + 1 {
        return Err(Error::InvalidDimension("tilted planes are built in codimension 1".into()));
    }
    let w = (1.0 + slope * slope).sqrt();
    let mut cols = Vec::with_capacity(ctx.m);
    let mut first = Vector::zeros(ctx.d);
    first[0] = 1.0 / w;
    first[ctx.m] = slope / w;
    cols.push(first);
    for i in 1..ctx.m {
        let mut e = Vector::zeros(ctx.d);
        e[i] = 1.0;
        cols.push(e);
    }
    flat_lattice(ctx, &Plane::from_orthonormal(Matrix::from_columns(&cols))?, spacing, radius, &Vector::zeros(ctx.d))
}

/// Linear graph `x_m = slope · x_0` sampled over the base-plane lattice.
pub fn linear_graph(ctx: GeometryContext, slope: f64, spacing: f64, radius: f64) -> Result<DiscreteVarifold> {
    graph_patch(ctx, spacing, radius, &[], &move |x: &[f64]| {
        let mut g = vec![0.0; x.len()];
        g[0] = slope;
        (slope * x[0], g, Matrix::zeros(x.len(), x.len()))
    })
}

/// Quadratic graph `u = ½ x'ᵀ A x'`.
pub fn quadratic_graph(ctx: GeometryContext, a: &Matrix, spacing: f64, radius: f64) -> Result<DiscreteVarifold> {
    if a.nrows() != ctx.m || a.ncols() != ctx.m {
        return Err(Error::DimensionMismatch {
            expected: ctx.m,
            found: a.nrows(),
        });
    }
    let a = a.clone();
    graph_patch(ctx, spacing, radius, &[], &move |x: &[f64]| {
        let xv = Vector::from_column_slice(x);
        let ax = &a * &xv;
        (0.5 * xv.dot(&ax), ax.iter().copied().collect(), a.clone())
    })
}

/// Height of the lower cap of the sphere of radius `rho` centred at `rho e_m`.
pub fn sphere_cap_height(rho: f64, r: f64) -> f64 {
    rho - (rho * rho - r * r).sqrt()
}

/// Cap of the sphere of radius `rho` tangent to `S` at the origin, as a graph
/// over the disk of radius `radius < rho`.
pub fn sphere_cap(ctx: GeometryContext, rho: f64, spacing: f64, radius: f64) -> Result<DiscreteVarifold> {
    if !(radius < rho) {
        return Err(Error::InvalidArgument(format!(
            "cap radius {radius} must be below the sphere radius {rho}"
        )));
    }
    graph_patch(ctx, spacing, radius, &[], &move |x: &[f64]| {
        let m = x.len();
        let r2: f64 = x.iter().map(|c| c * c).sum();
        let q = (rho * rho - r2).sqrt();
        let grad: Vec<f64> = x.iter().map(|c| c / q).collect();
        let mut hess = Matrix::identity(m, m) / q;
        for i in 0..m {
            for j in 0..m {
                hess[(i, j)] += x[i] * x[j] / (q * q * q);
            }
        }
        (rho - q, grad, hess)
    })
}

/// Orthogonal map sending `e_0` to the unit vector `u` (a Householder
/// reflection, or the identity).
fn frame_to(u: &Vector) -> Matrix {
    let d = u.len();
    let mut e0 = Vector::zeros(d);
    e0[0] = 1.0;
    let w = &e0 - u;
    let n2 = w.norm_squared();
    if n2 < 1e-30 {
        return Matrix::identity(d, d);
    }
    Matrix::identity(d, d) - (&w * w.transpose()) * (2.0 / n2)
}

/// Round `m`-sphere of the given radius centred at the origin of `R^{m+1}`
/// (`m ∈ {1, 2}`), with an atom exactly at `radius · base_dir/|base_dir|`.
///
/// For `m = 2` the atoms are midpoints of a latitude/longitude grid whose
/// poles are orthogonal to `base_dir`, with exact cell areas as weights.
pub fn sphere(ctx: GeometryContext, radius: f64, spacing: f64, base_dir: &Vector) -> Result<DiscreteVarifold> {
    if ctx.d != ctx.m + 1 || ctx.m > 2 {
        return Err(Error::InvalidDimension(format!(
            "sphere sampler supports m in {{1, 2}} with d = m + 1 (got m = {}, d = {})",
            ctx.m, ctx.d
        )));
    }
    if !(radius > 0.0) || !(spacing > 0.0) {
        return Err(Error::InvalidArgument("radius and spacing must be positive".into()));
    }
    let nb = base_dir.norm();
    if base_dir.len() != ctx.d || !(nb > 0.0) {
        return Err(Error::InvalidArgument("base direction must be a nonzero d-vector".into()));
    }
    let q = frame_to(&(base_dir / nb));
    let m = ctx.m as f64;
    let mut atoms = Vec::new();
    let mut push = |y: Vector, weight: f64, tangents: Vec<Vector>| -> Result<()> {
        let x = &q * &y;
        let tangents: Vec<Vector> = tangents.iter().map(|t| &q * t).collect();
        let h = &x * (-m / (radius * radius));
        atoms.push(Atom::new(x, weight, Plane::from_spanning(&tangents)?, h));
        Ok(())
    };
    if ctx.m == 1 {
        let n = ((2.0 * PI * radius / spacing).round() as usize).max(3);
        for j in 0..n {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let y = Vector::from_column_slice(&[radius * phi.cos(), radius * phi.sin()]);
            let t = Vector::from_column_slice(&[-phi.sin(), phi.cos()]);
            push(y, 2.0 * PI * radius / n as f64, vec![t])?;
        }
    } else {
        let mut n_theta = ((PI * radius / spacing).round() as usize).max(3);
        if n_theta % 2 == 0 {
            n_theta += 1;
        }
        let dtheta = PI / n_theta as f64;
        for k in 0..n_theta {
            let (ta, tb) = (k as f64 * dtheta, (k + 1) as f64 * dtheta);
            let tm = if 2 * k + 1 == n_theta { PI / 2.0 } else { 0.5 * (ta + tb) };
            let band = 2.0 * PI * radius * radius * (ta.cos() - tb.cos());
            let n_phi = ((2.0 * PI * radius * tm.sin() / spacing).round() as usize).max(3);
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                // poles on ±e_2, so the equator passes through e_0
                let y = Vector::from_column_slice(&[
                    radius * tm.sin() * phi.cos(),
                    radius * tm.sin() * phi.sin(),
                    radius * tm.cos(),
                ]);
                let e_theta = Vector::from_column_slice(&[
                    tm.cos() * phi.cos(),
                    tm.cos() * phi.sin(),
                    -tm.sin(),
                ]);
                let e_phi = Vector::from_column_slice(&[-phi.sin(), phi.cos(), 0.0]);
                push(y, band / n_phi as f64, vec![e_theta, e_phi])?;
            }
        }
    }
    DiscreteVarifold::new(ctx, atoms, m / radius)
}

/// Catenoid patch `(cosh v cos θ, cosh v sin θ, v)`, `|v| <= v_max`, with an
/// atom at `(1, 0, 0)`. Minimal, so `H = 0`.
pub fn catenoid(ctx: GeometryContext, v_max: f64, spacing: f64) -> Result<DiscreteVarifold> {
    if ctx.d != 3 || ctx.m != 2 {
        return Err(Error::InvalidDimension("catenoid lives in R^3 with m = 2".into()));
    }
    check_spacing(spacing, v_max)?;
    let prim = |v: f64| 0.5 * v + 0.25 * (2.0 * v).sinh();
    let mut n_v = ((2.0 * v_max / spacing).round() as usize).max(3);
    if n_v % 2 == 0 {
        n_v += 1;
    }
    let dv = 2.0 * v_max / n_v as f64;
    let mut atoms = Vec::new();
    for k in 0..n_v {
        let va = -v_max + k as f64 * dv;
        let vb = va + dv;
        let vm = if 2 * k + 1 == n_v { 0.0 } else { 0.5 * (va + vb) };
        let n_t = ((2.0 * PI * vm.cosh() / spacing).round() as usize).max(3);
        let weight = (prim(vb) - prim(va)) * 2.0 * PI / n_t as f64;
        for j in 0..n_t {
            let th = 2.0 * PI * j as f64 / n_t as f64;
            let x = Vector::from_column_slice(&[vm.cosh() * th.cos(), vm.cosh() * th.sin(), vm]);
            let t1 = Vector::from_column_slice(&[-th.sin(), th.cos(), 0.0]);
            let t2 = Vector::from_column_slice(&[vm.sinh() * th.cos(), vm.sinh() * th.sin(), 1.0]);
            atoms.push(Atom::new(x, weight, Plane::from_spanning(&[t1, t2])?, Vector::zeros(3)));
        }
    }
    DiscreteVarifold::new(ctx, atoms, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::Ball;
    use approx::assert_relative_eq;

    fn ctx(d: usize, m: usize) -> GeometryContext {
        GeometryContext::new(d, m).unwrap()
    }

    #[test]
    fn sphere_area_and_curvature() {
        let north = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let s = sphere(ctx(3, 2), 1.0, 0.02, &north).unwrap();
        assert_relative_eq!(s.total_mass(), 4.0 * PI, max_relative = 1e-12);
        assert!(s.atoms().iter().any(|a| (&a.x - &north).norm() < 1e-14));
        for a in s.atoms() {
            assert!((a.x.norm() - 1.0).abs() < 1e-12);
            assert!((a.h.norm() - 2.0).abs() < 1e-12);
            assert!(a.plane.basis().tr_mul(&a.x).amax() < 1e-12);
        }
        let c = sphere(ctx(2, 1), 0.5, 0.01, &Vector::from_column_slice(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(c.total_mass(), PI, max_relative = 1e-12);
        assert_relative_eq!(c.lambda, 2.0);
    }

    #[test]
    fn sphere_mass_in_large_ball() {
        let s = sphere(ctx(3, 2), 1.0, 0.03, &Vector::from_column_slice(&[0.0, 0.0, 1.0])).unwrap();
        assert!((s.mass_in_ball(&Ball::centered(3, 2.0).unwrap()) - 4.0 * PI).abs() < 0.05);
    }

    #[test]
    fn north_pole_density() {
        // near the pole the unit sphere is the graph of 1 - sqrt(1 - |x'|^2)
        let cap = sphere_cap(ctx(3, 2), 1.0, 0.002, 0.3).unwrap();
        let ratio = cap.density_ratio(&Ball::centered(3, 0.2).unwrap());
        // chord radius r gives cap area exactly π r^2
        assert!((ratio - 1.0).abs() < 0.005, "{ratio}");
    }

    #[test]
    fn catenoid_is_minimal_with_exact_area() {
        let cat = catenoid(ctx(3, 2), 1.0, 0.02).unwrap();
        let exact = 2.0 * PI * (1.0 + 0.5 * 2.0f64.sinh());
        assert_relative_eq!(cat.total_mass(), exact, max_relative = 1e-12);
        assert_eq!(cat.lambda, 0.0);
        let base = Vector::from_column_slice(&[1.0, 0.0, 0.0]);
        assert!(cat.distance_to_support(&base) < 1e-14);
    }

    #[test]
    fn graph_curvature_matches_sphere() {
        let rho = 2.0;
        let cap = sphere_cap(ctx(3, 2), rho, 0.05, 1.0).unwrap();
        let center = Vector::from_column_slice(&[0.0, 0.0, rho]);
        for a in cap.atoms() {
            let expected = (&center - &a.x) * (2.0 / (rho * rho));
            assert!((&a.h - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn punctured_plane_misses_hole() {
        let hole = Hole {
            center: vec![0.0, 0.0],
            radius: 0.1,
        };
        let v = punctured_plane(ctx(3, 2), 0.01, 1.0, &[hole]).unwrap();
        assert!(v.distance_to_support(&Vector::zeros(3)) >= 0.1 - 1e-12);
    }
}
