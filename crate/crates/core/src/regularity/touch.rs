//! The touching function `G(x) = ½|S^⊥x/ε − h(Sx)|² + (δ/2)|Sx|²` built on a
//! discrete harmonic `h`, and the contradiction certificate it can produce.

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{plane_distance, trace_m_min, trace_over_basis, Matrix, Plane, SymMatrix, Vector};
use crate::varifold::DiscreteVarifold;
use crate::{par, Error, Result};

/// Radius of the disk `B^S_{1/4}` carrying the harmonic part.
pub const TOUCH_RADIUS: f64 = 0.25;
/// Largest number of unknowns in the dense Dirichlet solve.
const MAX_UNKNOWNS: usize = 1500;
const HARMONIC_TOL: f64 = 1e-8;

/// Harmonic part on a uniform grid plus the parameters `ε`, `δ`.
///
/// Nodes cover `[-1/4 - 2s, 1/4 + 2s]^m`; nodes strictly inside the disk are
/// unknowns of the `(2m+1)`-point Laplacian, all others carry the Dirichlet
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchFunction {
    pub m: usize,
    pub k: usize,
    pub spacing: f64,
    pub eps: f64,
    pub delta: f64,
    half: i64,
    /// Node values, `k` per node, row-major in the first index.
    values: Vec<Vec<f64>>,
    unknown: Vec<bool>,
    residual: f64,
}

impl TouchFunction {
    /// Solves the discrete Dirichlet problem with data `boundary` (evaluated at
    /// every node outside the open disk). The spacing is enlarged if the
    /// requested one would exceed the solver size.
    pub fn solve(
        m: usize,
        k: usize,
        spacing: f64,
        eps: f64,
        delta: f64,
        boundary: &dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::InvalidDimension(format!("need m, k >= 1, got {m}, {k}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be > 0")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1/2)")));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidArgument(format!("spacing = {spacing} must be > 0")));
        }
        let mut n = (TOUCH_RADIUS / spacing).ceil().max(2.0) as i64;
        let unit_ball = crate::geometry::unit_ball_volume(m)?;
        while n > 2 && unit_ball * (n as f64).powi(m as i32) > MAX_UNKNOWNS as f64 {
            n -= 1;
        }
        let spacing = TOUCH_RADIUS / n as f64;
        let half = n + 2;
        let side = (2 * half + 1) as usize;
        let total = side.pow(m as u32);
        let mut tf = Self {
            m,
            k,
            spacing,
            eps,
            delta,
            half,
            values: vec![vec![0.0; k]; total],
            unknown: vec![false; total],
            residual: 0.0,
        };
        let mut index_of = vec![usize::MAX; total];
        let mut unknowns = Vec::new();
        for node in 0..total {
            let y = tf.position(node);
            let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r < TOUCH_RADIUS * (1.0 - 1e-12) {
                tf.unknown[node] = true;
                index_of[node] = unknowns.len();
                unknowns.push(node);
            } else {
                let g = boundary(&y);
                if g.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, found: g.len() });
                }
                tf.values[node] = g;
            }
        }
        let nu = unknowns.len();
        let mut a = Matrix::zeros(nu, nu);
        let mut rhs = Matrix::zeros(nu, k);
        for (row, &node) in unknowns.iter().enumerate() {
            a[(row, row)] = 2.0 * m as f64;
            for nb in tf.neighbours(node) {
                if tf.unknown[nb] {
                    a[(row, index_of[nb])] -= 1.0;
                } else {
                    for c in 0..k {
                        rhs[(row, c)] += tf.values[nb][c];
                    }
                }
            }
        }
        let chol = Cholesky::new(a).ok_or_else(|| Error::InvalidArgument("Dirichlet matrix is not positive definite".into()))?;
        let sol = chol.solve(&rhs);
        for (row, &node) in unknowns.iter().enumerate() {
            tf.values[node] = (0..k).map(|c| sol[(row, c)]).collect();
        }
        tf.residual = tf.harmonic_residual();
        if !(tf.residual <= HARMONIC_TOL) {
            return Err(Error::InvalidArgument(format!(
                "harmonic residual {:e} exceeds {HARMONIC_TOL:e}",
                tf.residual
            )));
        }
        Ok(tf)
    }

    fn side(&self) -> i64 {
        2 * self.half + 1
    }

    fn multi_index(&self, mut node: usize) -> Vec<i64> {
        let side = self.side() as usize;
        let mut idx = vec![0i64; self.m];
        for j in (0..self.m).rev() {
            idx[j] = (node % side) as i64 - self.half;
            node /= side;
        }
        idx
    }

    fn node(&self, idx: &[i64]) -> usize {
        let side = self.side();
        idx.iter().fold(0usize, |acc, &i| acc * side as usize + (i + self.half) as usize)
    }

    fn position(&self, node: usize) -> Vec<f64> {
        self.multi_index(node).iter().map(|&i| i as f64 * self.spacing).collect()
    }

    fn neighbours(&self, node: usize) -> Vec<usize> {
        let idx = self.multi_index(node);
        let mut out = Vec::with_capacity(2 * self.m);
        for j in 0..self.m {
            for step in [-1, 1] {
                let mut nb = idx.clone();
                nb[j] += step;
                if nb[j].abs() <= self.half {
                    out.push(self.node(&nb));
                }
            }
        }
        out
    }

    /// Largest `|Δ_h h|` over unknown nodes, with `Δ_h` the `(2m+1)`-point
    /// Laplacian divided by `s²`.
    pub fn harmonic_residual(&self) -> f64 {
        let s2 = self.spacing * self.spacing;
        let mut worst: f64 = 0.0;
        for node in 0..self.values.len() {
            if !self.unknown[node] {
                continue;
            }
            for c in 0..self.k {
                let sum: f64 = self.neighbours(node).iter().map(|&nb| self.values[nb][c]).sum();
                worst = worst.max((sum - 2.0 * self.m as f64 * self.values[node][c]).abs() / s2);
            }
        }
        worst
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Value, gradient (`k × m`) and per-component Hessians from central
    /// differences at a node; indices are clamped one node inside the grid.
    fn node_jets(&self, idx: &[i64]) -> (Vec<f64>, Matrix, Vec<Matrix>) {
        let lim = self.half - 1;
        let base: Vec<i64> = idx.iter().map(|&i| i.clamp(-lim, lim)).collect();
        let at = |shift: &[(usize, i64)]| -> &Vec<f64> {
            let mut j = base.clone();
            for &(axis, d) in shift {
                j[axis] += d;
            }
            &self.values[self.node(&j)]
        };
        let s = self.spacing;
        let value = self.values[self.node(&idx.iter().map(|&i| i.clamp(-self.half, self.half)).collect::<Vec<_>>())].clone();
        let mut grad = Matrix::zeros(self.k, self.m);
        let mut hess = vec![Matrix::zeros(self.m, self.m); self.k];
        let centre = at(&[]);
        for a in 0..self.m {
            let (p, q) = (at(&[(a, 1)]), at(&[(a, -1)]));
            for c in 0..self.k {
                grad[(c, a)] = (p[c] - q[c]) / (2.0 * s);
                hess[c][(a, a)] = (p[c] - 2.0 * centre[c] + q[c]) / (s * s);
            }
            for b in a + 1..self.m {
                let (pp, pm) = (at(&[(a, 1), (b, 1)]), at(&[(a, 1), (b, -1)]));
                let (mp, mm) = (at(&[(a, -1), (b, 1)]), at(&[(a, -1), (b, -1)]));
                for c in 0..self.k {
                    let v = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * s * s);
                    hess[c][(a, b)] = v;
                    hess[c][(b, a)] = v;
                }
            }
        }
        (value, grad, hess)
    }

    /// Multilinear interpolation of the nodal value, gradient and Hessian.
    pub fn eval(&self, y: &[f64]) -> (Vec<f64>, Matrix, Vec<Matrix>) {
        let m = self.m;
        let lo: Vec<i64> = y
            .iter()
            .map(|&c| ((c / self.spacing).floor() as i64).clamp(-self.half, self.half - 1))
            .collect();
        let frac: Vec<f64> = y
            .iter()
            .zip(&lo)
            .map(|(&c, &l)| (c / self.spacing - l as f64).clamp(0.0, 1.0))
            .collect();
        let mut value = vec![0.0; self.k];
        let mut grad = Matrix::zeros(self.k, m);
        let mut hess = vec![Matrix::zeros(m, m); self.k];
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let idx: Vec<i64> = (0..m)
                .map(|j| {
                    let up = (corner >> j) & 1 == 1;
                    w *= if up { frac[j] } else { 1.0 - frac[j] };
                    lo[j] + up as i64
                })
                .collect();
            if w == 0.0 {
                continue;
            }
            let (v, g, h) = self.node_jets(&idx);
            for c in 0..self.k {
                value[c] += w * v[c];
                hess[c] += &h[c] * w;
            }
            grad += g * w;
        }
        (value, grad, hess)
    }

    /// `G`, `∇G` and `D²G` at an ambient point.
    pub fn g_eval(&self, s: &Plane, x: &Vector) -> Result<(f64, Vector, SymMatrix)> {
        let d = s.ambient_dim();
        if s.dim() != self.m || d - self.m != self.k || x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
        let comp = s.complement();
        let q = s.basis().transpose();
        let nmat = comp.basis().transpose();
        let y: Vec<f64> = (&q * x).iter().copied().collect();
        let z = &nmat * x;
        let (h, dh, d2h) = self.eval(&y);
        let y_vec = Vector::from_column_slice(&y);
        let mut value = 0.5 * self.delta * y_vec.norm_squared();
        let mut grad = q.transpose() * &y_vec * self.delta;
        let mut hess = q.transpose() * &q * self.delta;
        for c in 0..self.k {
            let f = z[c] / self.eps - h[c];
            let grad_f = nmat.row(c).transpose() / self.eps - q.transpose() * dh.row(c).transpose();
            let hess_f = -(q.transpose() * &d2h[c] * &q);
            value += 0.5 * f * f;
            grad += &grad_f * f;
            hess += &grad_f * grad_f.transpose() + hess_f * f;
        }
        Ok((value, grad, SymMatrix::new(hess)?))
    }
}

/// Minimum of `trace_T D²G` over a family of sampled planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneScan {
    pub gamma: f64,
    /// Sampled planes with `|T − S| ≤ γ`.
    pub near_min: f64,
    /// Sampled planes with `|T − S| > γ`.
    pub far_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchCertificate {
    pub x_star: Vec<f64>,
    pub g_max: f64,
    pub interior: bool,
    /// Exact `inf_T div_T ∇G(x*)`, the sum of the `m` smallest eigenvalues.
    pub min_div: f64,
    /// Minimum over the random Grassmannian sample.
    pub sampled_min: f64,
    pub scans: Vec<PlaneScan>,
    /// `Λ |∇G(x*)|`.
    pub rhs: f64,
    /// Columns of a minimizing plane.
    pub plane: Vec<Vec<f64>>,
    pub harmonic_residual: f64,
}

impl TouchCertificate {
    /// `interior ∧ min_div > rhs`: the configuration contradicts the
    /// maximum principle.
    pub fn contradiction(&self) -> bool {
        self.interior && self.min_div > self.rhs
    }
}

pub const PLANE_SAMPLES: usize = 10_000;
pub const GAMMAS: [f64; 3] = [0.05, 0.1, 0.2];

/// Plane spanned by the columns of `S` tilted by a random normal
/// perturbation of operator size about `gamma`.
fn perturbed_plane<R: rand::Rng>(s: &Plane, gamma: f64, rng: &mut R) -> Result<Plane> {
    let comp = s.complement();
    let m = s.dim();
    let k = comp.dim();
    let mix = Matrix::from_fn(k, m, |_, _| rng.random_range(-1.0..1.0));
    let norm = mix.norm().max(1e-300);
    let tilt = comp.basis() * mix * (gamma * rng.random_range(0.0..1.0) / norm);
    let cols: Vec<Vector> = (0..m).map(|j| s.basis().column(j) + tilt.column(j)).collect();
    Plane::from_spanning(&cols)
}

/// Maximizes `G` over atoms with `|Sx| ≤ 1/4` and evaluates the divergence
/// of `∇G` there over all `m`-planes.
pub fn viscosity_touch(v: &DiscreteVarifold, tf: &TouchFunction, s: &Plane, seed: u64) -> Result<TouchCertificate> {
    if !(tf.residual <= HARMONIC_TOL) {
        return Err(Error::InvalidArgument("harmonic part is not solved".into()));
    }
    let atoms: Vec<&Vector> = v
        .atoms()
        .iter()
        .map(|a| &a.x)
        .filter(|x| s.coords(x).norm() <= TOUCH_RADIUS)
        .collect();
    if atoms.is_empty() {
        return Err(Error::EmptySupport);
    }
    let values = par::map_range(atoms.len(), |i| tf.g_eval(s, atoms[i]).map(|g| g.0))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, &g) in values.iter().enumerate() {
        if g > values[best] {
            best = i;
        }
    }
    let x_star = atoms[best];
    let (g_max, grad, hess) = tf.g_eval(s, x_star)?;
    let interior = s.coords(x_star).norm() <= TOUCH_RADIUS - tf.delta;
    let m = s.dim();
    let d = s.ambient_dim();
    let min_div = trace_m_min(&hess, m)?;
    let eig = nalgebra::SymmetricEigen::new(hess.matrix().clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let plane: Vec<Vec<f64>> = order[..m]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = Vec::with_capacity(PLANE_SAMPLES);
    for _ in 0..PLANE_SAMPLES {
        sampled.push(Plane::random(d, m, &mut rng));
    }
    for &gamma in &GAMMAS {
        for _ in 0..PLANE_SAMPLES / 10 {
            sampled.push(perturbed_plane(s, gamma, &mut rng)?);
        }
    }
    let traces: Vec<(f64, f64)> = par::map_slice(&sampled, |t| {
        (
            trace_over_basis(hess.matrix(), t.basis()),
            plane_distance(s, t).unwrap_or(1.0),
        )
    });
    let sampled_min = traces.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let scans = GAMMAS
        .iter()
        .map(|&gamma| {
            let (near, far): (Vec<&(f64, f64)>, Vec<&(f64, f64)>) = traces.iter().partition(|t| t.1 <= gamma);
            PlaneScan {
                gamma,
                near_min: near.iter().map(|t| t.0).fold(f64::INFINITY, f64::min),
                far_min: far.iter().map(|t| t.0).fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    Ok(TouchCertificate {
        x_star: x_star.iter().copied().collect(),
        g_max,
        interior,
        min_div: min_div.min(sampled_min),
        sampled_min,
        scans,
        rhs: v.lambda * grad.norm(),
        plane,
        harmonic_residual: tf.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryContext;
    use crate::varifold::shapes;
    use rand::{Rng, SeedableRng};

    fn ctx() -> GeometryContext {
        GeometryContext::new(3, 2).unwrap()
    }

    fn s() -> Plane {
        Plane::horizontal(3, 2).unwrap()
    }

    /// Random harmonic polynomial of degree at most 3 in two variables.
    fn harmonic_poly(rng: &mut ChaCha8Rng) -> [f64; 7] {
        std::array::from_fn(|_| rng.random_range(-1.0..1.0))
    }

    fn eval_poly(c: &[f64; 7], y: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let (x, z) = (y[0], y[1]);
        let v = c[0] + c[1] * x + c[2] * z + c[3] * (x * x - z * z) + c[4] * x * z
            + c[5] * (x * x * x - 3.0 * x * z * z)
            + c[6] * (3.0 * x * x * z - z * z * z);
        let gx = c[1] + 2.0 * c[3] * x + c[4] * z + c[5] * (3.0 * x * x - 3.0 * z * z) + c[6] * 6.0 * x * z;
        let gz = c[2] - 2.0 * c[3] * z + c[4] * x - c[5] * 6.0 * x * z + c[6] * (3.0 * x * x - 3.0 * z * z);
        let hxx = 2.0 * c[3] + 6.0 * c[5] * x + 6.0 * c[6] * z;
        let hxz = c[4] - 6.0 * c[5] * z + 6.0 * c[6] * x;
        let hess = Matrix::from_row_slice(2, 2, &[hxx, hxz, hxz, -hxx]);
        (v, vec![gx, gz], hess)
    }

    #[test]
    fn harmonic_polynomials_are_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = harmonic_poly(&mut rng);
        let tf = TouchFunction::solve(2, 1, 1.0 / 64.0, 0.1, 0.01, &|y| vec![eval_poly(&c, y).0]).unwrap();
        assert!(tf.residual() <= 1e-8);
        for y in [[0.0, 0.0], [0.1, -0.05], [-0.17, 0.12]] {
            let (v, g, _) = tf.eval(&y);
            let (ve, ge, _) = eval_poly(&c, &y);
            assert!((v[0] - ve).abs() < 1e-3, "{} vs {ve}", v[0]);
            assert!((g[(0, 0)] - ge[0]).abs() < 1e-2);
        }
    }

    #[test]
    fn g_derivatives_match_differences() {
        let tf = TouchFunction::solve(2, 1, 1.0 / 32.0, 0.1, 0.05, &|y| vec![y[0] * y[1] + y[0]]).unwrap();
        let plane = s();
        let x = Vector::from_column_slice(&[0.03, -0.07, 0.004]);
        let (_, grad, _) = tf.g_eval(&plane, &x).unwrap();
        let step = 1e-6;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let fd = (tf.g_eval(&plane, &xp).unwrap().0 - tf.g_eval(&plane, &xm).unwrap().0) / (2.0 * step);
            assert!((fd - grad[j]).abs() < 2e-3 * (1.0 + grad[j].abs()), "{j}: {fd} vs {}", grad[j]);
        }
    }

    #[test]
    fn plane_gives_boundary_maximum() {
        let plane = shapes::flat_lattice(ctx(), &s(), 0.01, 0.3, &Vector::zeros(3)).unwrap();
        let tf = TouchFunction::solve(2, 1, 0.01, 0.1, 0.01, &|_| vec![0.0]).unwrap();
        let cert = viscosity_touch(&plane, &tf, &s(), 1).unwrap();
        assert!(!cert.interior);
        assert!(!cert.contradiction());
        let r = (cert.x_star[0].powi(2) + cert.x_star[1].powi(2)).sqrt();
        assert!((r - 0.25).abs() < 0.01);
    }

    #[test]
    fn exact_discrete_harmonic_graph_has_no_certificate() {
        let eps = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = harmonic_poly(&mut rng);
        let tf = TouchFunction::solve(2, 1, 0.01, eps, 0.01, &|y| vec![eval_poly(&c, y).0]).unwrap();
        let graph = shapes::graph_patch(ctx(), 0.005, 0.3, &[], &|y: &[f64]| {
            let (v, g, h) = tf.eval(y);
            (eps * v[0], vec![eps * g[(0, 0)], eps * g[(0, 1)]], h[0].clone() * eps)
        })
        .unwrap();
        let cert = viscosity_touch(&graph, &tf, &s(), 2).unwrap();
        assert!(!cert.contradiction(), "{cert:?}");
    }

    #[test]
    fn non_harmonic_graph_fires() {
        let eps = 0.05;
        let tf = TouchFunction::solve(2, 1, 0.01, eps, 0.01, &|y| vec![y[0] * y[0] + y[1] * y[1]]).unwrap();
        let graph = shapes::graph_patch(ctx(), 0.005, 0.3, &[], &|y: &[f64]| {
            (
                eps * (y[0] * y[0] + y[1] * y[1]),
                vec![2.0 * eps * y[0], 2.0 * eps * y[1]],
                Matrix::identity(2, 2) * (2.0 * eps),
            )
        })
        .unwrap()
        .with_curvature_bound(0.0, true)
        .unwrap();
        let cert = viscosity_touch(&graph, &tf, &s(), 3).unwrap();
        assert!(cert.interior);
        assert!(cert.min_div > cert.rhs && cert.rhs == 0.0);
        assert!(cert.contradiction());
        assert!(cert.sampled_min >= cert.min_div);
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.contains("\"x_star\"") && json.contains("\"plane\""));
    }

    #[test]
    fn harmonic_graphs_never_certify() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let c = harmonic_poly(&mut rng);
            let eps = rng.random_range(0.01..0.1);
            let delta = rng.random_range(0.005..0.05);
            let tf = TouchFunction::solve(2, 1, 1.0 / 48.0, eps, delta, &|y| vec![eval_poly(&c, y).0]).unwrap();
            let graph = shapes::graph_patch(ctx(), 0.01, 0.3, &[], &|y: &[f64]| {
                let (v, g, h) = eval_poly(&c, y);
                (eps * v, vec![eps * g[0], eps * g[1]], h * eps)
            })
            .unwrap();
            let cert = viscosity_touch(&graph, &tf, &s(), seed).unwrap();
            assert!(!cert.contradiction(), "seed {seed}: {cert:?}");
        }
    }
}
