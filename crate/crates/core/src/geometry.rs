//! Planes in the Grassmannian, orthogonal projections and the spectral
//! functionals (`trace_S`, `trace_m`) shared by every other module.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

const GRAM_TOL: f64 = 1e-10;

/// Volume of the unit ball in `R^m`, `π^{m/2} / Γ(m/2 + 1)`.
pub fn unit_ball_volume(m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidDimension(format!("m = {m} must be >= 1")));
    }
    // ω_k = 2π/k · ω_{k-2}, starting from ω_0 = 1 and ω_1 = 2.
    let mut omega = if m % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if m % 2 == 0 { 2 } else { 3 };
    while k <= m {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    Ok(omega)
}

/// Ambient dimension `d`, surface dimension `m` and `ω_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryContext {
    pub d: usize,
    pub m: usize,
    pub omega_m: f64,
}

impl GeometryContext {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("d = {d} must be >= 2")));
        }
        if m < 1 || m >= d {
            return Err(Error::InvalidDimension(format!(
                "need 1 <= m < d, got m = {m}, d = {d}"
            )));
        }
        Ok(Self {
            d,
            m,
            omega_m: unit_ball_volume(m)?,
        })
    }

    pub fn codim(&self) -> usize {
        self.d - self.m
    }
}

/// An `m`-dimensional linear subspace of `R^d`, stored as a `d × m` matrix
/// with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    basis: Matrix,
}

impl Plane {
    /// Wraps an orthonormal basis, rejecting Gram deviations above `1e-10`.
    pub fn from_orthonormal(basis: Matrix) -> Result<Self> {
        let dev = gram_deviation(&basis);
        if dev > GRAM_TOL {
            return Err(Error::NotOrthonormal(dev));
        }
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::InvalidDimension(format!(
                "basis of shape {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalises a spanning family by modified Gram–Schmidt.
    pub fn from_spanning(vectors: &[Vector]) -> Result<Self> {
        let first = vectors.first().ok_or(Error::RankDeficient)?;
        let d = first.len();
        let mut cols: Vec<Vector> = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            let scale = v.norm();
            let mut w = v.clone();
            for q in &cols {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
            // second pass for numerical orthogonality
            for q in &cols {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
            let n = w.norm();
            if !(n > 1e-12 * scale.max(1e-300)) {
                return Err(Error::RankDeficient);
            }
            cols.push(w / n);
        }
        Ok(Self {
            basis: Matrix::from_columns(&cols),
        })
    }

    /// The span of the given coordinate axes of `R^d`.
    pub fn coordinate(d: usize, axes: &[usize]) -> Result<Self> {
        let cols: Vec<Vector> = axes
            .iter()
            .map(|&a| {
                if a >= d {
                    Err(Error::InvalidDimension(format!("axis {a} >= d = {d}")))
                } else {
                    Ok(Vector::from_fn(d, |i, _| if i == a { 1.0 } else { 0.0 }))
                }
            })
            .collect::<Result<_>>()?;
        Self::from_spanning(&cols)
    }

    /// `span(e_0, …, e_{m-1})`.
    pub fn horizontal(d: usize, m: usize) -> Result<Self> {
        Self::coordinate(d, &(0..m).collect::<Vec<_>>())
    }

    /// Uniformly distributed random plane (Gaussian columns, orthonormalised).
    pub fn random<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Self {
        loop {
            let cols: Vec<Vector> = (0..m)
                .map(|_| Vector::from_fn(d, |_, _| rng.sample(StandardNormal)))
                .collect();
            if let Ok(p) = Self::from_spanning(&cols) {
                return p;
            }
        }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        self.basis.column(i).into_owned()
    }

    /// Orthogonal projector `P_S = B Bᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// Coordinates of `S x` in the stored basis.
    pub fn coords(&self, x: &Vector) -> Vector {
        self.basis.tr_mul(x)
    }

    /// `(S x, S^⊥ x)` as ambient vectors.
    pub fn project(&self, x: &Vector) -> (Vector, Vector) {
        let tangential = &self.basis * self.coords(x);
        let normal = x - &tangential;
        (tangential, normal)
    }

    /// An orthonormal basis of `S^⊥`, chosen greedily from the coordinate
    /// axes so that the result is deterministic.
    pub fn complement(&self) -> Plane {
        let d = self.ambient_dim();
        let k = d - self.dim();
        let mut chosen: Vec<Vector> = Vec::with_capacity(k);
        let residual = |e: &Vector, chosen: &[Vector]| {
            let mut w = e - &self.basis * self.basis.tr_mul(e);
            for q in chosen {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
            w
        };
        for _ in 0..k {
            let mut best: Option<Vector> = None;
            let mut best_norm = -1.0;
            for i in 0..d {
                let e = Vector::from_fn(d, |j, _| if j == i { 1.0 } else { 0.0 });
                let w = residual(&e, &chosen);
                let n = w.norm();
                if n > best_norm + 1e-12 {
                    best_norm = n;
                    best = Some(w);
                }
            }
            let mut w = best.expect("d >= 1");
            for q in &chosen {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
            let n = w.norm();
            chosen.push(w / n);
        }
        Plane {
            basis: Matrix::from_columns(&chosen),
        }
    }

    /// Image of the plane under an orthogonal map.
    pub fn transformed(&self, rotation: &Matrix) -> Result<Plane> {
        if rotation.ncols() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: rotation.ncols(),
            });
        }
        let cols: Vec<Vector> = (0..self.dim())
            .map(|i| rotation * self.basis.column(i))
            .collect();
        Plane::from_spanning(&cols)
    }

    /// Re-orthonormalises a near-orthonormal basis; returns the Gram deviation
    /// of the input alongside.
    pub fn reorthonormalized(basis: Matrix) -> Result<(Self, f64)> {
        let dev = gram_deviation(&basis);
        let cols: Vec<Vector> = (0..basis.ncols())
            .map(|i| basis.column(i).into_owned())
            .collect();
        Ok((Self::from_spanning(&cols)?, dev))
    }
}

/// Max-entry deviation of `BᵀB` from the identity.
pub fn gram_deviation(basis: &Matrix) -> f64 {
    let g = basis.tr_mul(basis);
    let mut dev: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).abs());
        }
    }
    dev
}

/// A symmetric `d × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Accepts matrices symmetric to `1e-12` (relative to the largest entry)
    /// and stores the exact symmetric part.
    pub fn new(a: Matrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let scale = a.amax().max(1.0);
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (deviation {asym:e})"
            )));
        }
        Ok(Self((&a + a.transpose()) * 0.5))
    }

    pub fn identity(d: usize) -> Self {
        Self(Matrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues_ascending(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

/// Operator norm of `P_S − P_T`.
pub fn plane_distance(s: &Plane, t: &Plane) -> Result<f64> {
    if s.ambient_dim() != t.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: s.ambient_dim(),
            found: t.ambient_dim(),
        });
    }
    if s.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: t.dim(),
        });
    }
    let diff = s.projector() - t.projector();
    let ev = SymmetricEigen::new(diff).eigenvalues;
    Ok(ev.amax().min(1.0))
}

/// `Σ_i A ξ_i · ξ_i` over the stored orthonormal basis of `S`.
pub fn trace_over_plane(a: &SymMatrix, s: &Plane) -> Result<f64> {
    if a.dim() != s.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: s.ambient_dim(),
            found: a.dim(),
        });
    }
    Ok(trace_over_basis(a.matrix(), s.basis()))
}

pub(crate) fn trace_over_basis(a: &Matrix, basis: &Matrix) -> f64 {
    let mut tr = 0.0;
    for i in 0..basis.ncols() {
        let xi = basis.column(i);
        tr += (a * xi).dot(&xi);
    }
    tr
}

/// Sum of the `m` smallest eigenvalues, i.e. `min_S trace_S A` over `m`-planes.
pub fn trace_m_min(a: &SymMatrix, m: usize) -> Result<f64> {
    if m < 1 || m > a.dim() {
        return Err(Error::OutOfRange(format!(
            "m = {m} must lie in [1, {}]",
            a.dim()
        )));
    }
    Ok(a.eigenvalues_ascending().iter().take(m).sum())
}

/// Half the Euclidean diameter of a point set, exact.
///
/// One-dimensional sets use the range; planar sets go through the convex hull;
/// higher dimensions use a pairwise scan.
pub fn half_diameter(points: &[Vec<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let k = points[0].len();
    match k {
        0 => 0.0,
        1 => {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[0]), hi.max(p[0]))
                });
            0.5 * (hi - lo)
        }
        2 => {
            let hull = convex_hull_2d(points);
            0.5 * pairwise_diameter(&hull)
        }
        _ => 0.5 * pairwise_diameter(points),
    }
}

fn pairwise_diameter(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let best = crate::par::max_range(n, |i| {
        let mut best: f64 = 0.0;
        for j in (i + 1)..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.max(d2);
        }
        best
    });
    best.max(0.0).sqrt()
}

/// Andrew's monotone chain; keeps collinear extremes out.
fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts.into_iter().map(|(x, y)| vec![x, y]).collect();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().map(|(x, y)| vec![x, y]).collect()
}

/// Random orthogonal `d × d` matrix (QR of a Gaussian matrix with sign fix).
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}
