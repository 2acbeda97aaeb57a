//! Extraction of a `C^{1,α}` graph over a plane from a flat varifold.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Cholesky;

use crate::geometry::{Matrix, Plane, Vector};
use crate::varifold::{Ball, DiscreteVarifold};
use crate::{par, Error, Result};

/// Affine fit `z ≈ value + G (y − center)` of one cell.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AffineFit {
    pub value: Vec<f64>,
    /// `k × p`, row `i` is the gradient of component `i`.
    pub gradient: Vec<Vec<f64>>,
    /// Largest distance of a sample height from the fitted plane.
    pub spread: f64,
    pub count: usize,
}

/// Weighted least-squares affine fit. Coordinates are rescaled by `scale`
/// (one entry per coordinate) to keep the normal equations well conditioned.
/// Falls back to the weighted mean with zero slope when the samples do not
/// span the cell.
pub(crate) fn fit_affine(samples: &[(&[f64], &[f64], f64)], center: &[f64], scale: &[f64]) -> AffineFit {
    let p = center.len();
    let k = samples[0].1.len();
    let mut ata = Matrix::zeros(p + 1, p + 1);
    let mut atz = Matrix::zeros(p + 1, k);
    let mut row = Vector::zeros(p + 1);
    for (y, z, w) in samples {
        row[0] = 1.0;
        for j in 0..p {
            row[j + 1] = (y[j] - center[j]) / scale[j];
        }
        ata.syger(*w, &row, &row, 1.0);
        for i in 0..k {
            for j in 0..=p {
                atz[(j, i)] += w * row[j] * z[i];
            }
        }
    }
    let diag_max = ata.diagonal().amax();
    let coef = if samples.len() > p {
        Cholesky::new(ata.clone())
            .filter(|c| c.l().diagonal().iter().all(|&l| l * l > 1e-10 * diag_max))
            .map(|c| c.solve(&atz))
    } else {
        None
    };
    let coef = coef.unwrap_or_else(|| {
        let mut c = Matrix::zeros(p + 1, k);
        for i in 0..k {
            c[(0, i)] = atz[(0, i)] / ata[(0, 0)];
        }
        c
    });
    let value: Vec<f64> = (0..k).map(|i| coef[(0, i)]).collect();
    let gradient: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..p).map(|j| coef[(j + 1, i)] / scale[j]).collect())
        .collect();
    let spread = samples
        .iter()
        .map(|(y, z, _)| {
            (0..k)
                .map(|i| {
                    let mut pred = value[i];
                    for j in 0..p {
                        pred += gradient[i][j] * (y[j] - center[j]);
                    }
                    (z[i] - pred).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    AffineFit {
        value,
        gradient,
        spread,
        count: samples.len(),
    }
}

/// Integer multi-indices `k` with `|k| ≤ radius / cell`, in lexicographic order.
pub(crate) fn cells_in_disk(m: usize, cell: f64, radius: f64) -> Vec<Vec<i64>> {
    let n = (radius / cell).floor() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-n; m];
    loop {
        let r2: f64 = idx.iter().map(|&k| (k as f64 * cell).powi(2)).sum();
        if r2.sqrt() <= radius * (1.0 + 1e-12) {
            out.push(idx.clone());
        }
        let mut j = m;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if idx[j] < n {
                idx[j] += 1;
                break;
            }
            idx[j] = -n;
        }
    }
}

/// One grid cell of a graph patch.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub cell: Vec<i64>,
    /// Cell centre in base-plane coordinates.
    pub point: Vec<f64>,
    pub height: Vec<f64>,
    /// `(d − m) × m`.
    pub gradient: Vec<Vec<f64>>,
    pub count: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPatch {
    pub base_plane: Plane,
    pub origin: Vector,
    pub domain_radius: f64,
    pub cell: f64,
    pub holder_alpha: f64,
    pub c1alpha_norm: f64,
    /// `osc_S(B)/r + Λ r` at the extraction ball.
    pub flatness: f64,
    pub spread_threshold: f64,
    pub max_spread: f64,
    pub samples: Vec<GraphSample>,
}

/// Largest `|u(y) − u(x) − ∇u(x)(y − x)| / |x − y|^{1+α}` over sample pairs.
pub(crate) fn holder_seminorm(points: &[Vec<f64>], heights: &[Vec<f64>], grads: &[Vec<Vec<f64>>], alpha: f64) -> f64 {
    holder_seminorm_with(points, heights, grads, alpha, |diff| diff.iter().map(|c| c * c).sum::<f64>().sqrt())
}

/// As [`holder_seminorm`] with a caller-supplied distance of the coordinate
/// difference. Gradients act on the leading coordinates only, so trailing
/// coordinates (such as time) enter through `dist` alone.
pub(crate) fn holder_seminorm_with<D>(
    points: &[Vec<f64>],
    heights: &[Vec<f64>],
    grads: &[Vec<Vec<f64>>],
    alpha: f64,
    dist: D,
) -> f64
where
    D: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = points.len();
    par::max_range(n, |a| {
        let mut best: f64 = 0.0;
        for b in 0..n {
            if a == b {
                continue;
            }
            let diff: Vec<f64> = points[b].iter().zip(&points[a]).map(|(y, x)| y - x).collect();
            let dist = dist(&diff);
            let err = heights[a]
                .iter()
                .enumerate()
                .map(|(i, ua)| {
                    let lin: f64 = grads[a][i].iter().zip(&diff).map(|(g, dx)| g * dx).sum();
                    (heights[b][i] - ua - lin).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            best = best.max(err / dist.powf(1.0 + alpha));
        }
        best
    })
    .max(0.0)
}

impl GraphPatch {
    pub fn m(&self) -> usize {
        self.base_plane.dim()
    }

    pub fn codim(&self) -> usize {
        self.base_plane.ambient_dim() - self.base_plane.dim()
    }

    /// Number of sample pairs violating the stored Hölder bound.
    pub fn holder_violations(&self) -> usize {
        let pts: Vec<Vec<f64>> = self.samples.iter().map(|s| s.point.clone()).collect();
        let mut count = 0;
        for (a, sa) in self.samples.iter().enumerate() {
            for (b, sb) in self.samples.iter().enumerate() {
                if a == b {
                    continue;
                }
                let one = holder_seminorm(
                    &[pts[a].clone(), pts[b].clone()],
                    &[sa.height.clone(), sb.height.clone()],
                    &[sa.gradient.clone(), sb.gradient.clone()],
                    self.holder_alpha,
                );
                if one > self.c1alpha_norm * (1.0 + 1e-12) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Largest deviation of the sampled heights from `u` at the cell centres.
    pub fn max_height_error<F: Fn(&[f64]) -> Vec<f64>>(&self, u: F) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let exact = u(&s.point);
                s.height
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `x1..xm, u1..uk, du<i>_<j>` (`∂u_i/∂x_j`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = self.m();
        let k = self.codim();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=m).map(|j| format!("x{j}")).collect();
        header.extend((1..=k).map(|i| format!("u{i}")));
        for i in 1..=k {
            header.extend((1..=m).map(|j| format!("du{i}_{j}")));
        }
        w.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.point.iter().map(|x| format!("{x:e}")).collect();
            rec.extend(s.height.iter().map(|x| format!("{x:e}")));
            for g in &s.gradient {
                rec.extend(g.iter().map(|x| format!("{x:e}")));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphOptions {
    pub alpha: f64,
    /// Cell side; defaults to `max(4h, 2r/64)`.
    pub cell: Option<f64>,
    /// Graph domain radius as a fraction of the ball radius.
    pub domain_fraction: f64,
    /// Factor applied to the expected Hölder bound in the single-valuedness test.
    pub spread_factor: f64,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            cell: None,
            domain_fraction: 0.5,
            spread_factor: 4.0,
        }
    }
}

pub fn extract_graph(v: &DiscreteVarifold, ball: &Ball, s: &Plane) -> Result<GraphPatch> {
    extract_graph_with(v, ball, s, &GraphOptions::default())
}

/// Bins the atoms of `ball` by their `S`-coordinates, fits an affine height
/// per cell and checks coverage, single-valuedness and the Hölder bound.
pub fn extract_graph_with(v: &DiscreteVarifold, ball: &Ball, s: &Plane, opts: &GraphOptions) -> Result<GraphPatch> {
    let m = v.context.m;
    if s.dim() != m || s.ambient_dim() != v.context.d {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: s.dim(),
        });
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {} must lie in (0, 1)", opts.alpha)));
    }
    let r = ball.radius;
    let cell = opts.cell.unwrap_or_else(|| (4.0 * v.mesh_size()).max(2.0 * r / 64.0));
    let domain_radius = opts.domain_fraction * r;
    let comp = s.complement();
    let osc = v.oscillation(s, ball)?;
    let flatness = osc / r + v.lambda * r;
    let spread_threshold = opts.spread_factor * flatness * r * (cell / r).powf(1.0 + opts.alpha) + 1e-9 * r;

    let mut coords: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut bins: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for a in v.atoms_in_ball(ball) {
        let rel = &a.x - &ball.center;
        let y: Vec<f64> = s.coords(&rel).iter().copied().collect();
        let z: Vec<f64> = comp.coords(&rel).iter().copied().collect();
        let key: Vec<i64> = y.iter().map(|c| (c / cell).round() as i64).collect();
        bins.entry(key).or_default().push(coords.len());
        coords.push((y, z, a.mass()));
    }

    let cells = cells_in_disk(m, cell, domain_radius);
    let scale = vec![cell; m];
    let mut samples = Vec::with_capacity(cells.len());
    for key in cells {
        let members = bins.get(&key).ok_or_else(|| Error::SupportGap { cell: key.clone() })?;
        let center: Vec<f64> = key.iter().map(|&k| k as f64 * cell).collect();
        let pts: Vec<(&[f64], &[f64], f64)> = members
            .iter()
            .map(|&i| (coords[i].0.as_slice(), coords[i].1.as_slice(), coords[i].2))
            .collect();
        let fit = fit_affine(&pts, &center, &scale);
        if fit.spread > spread_threshold {
            return Err(Error::MultiValued {
                cell: key,
                spread: fit.spread,
                threshold: spread_threshold,
            });
        }
        samples.push(GraphSample {
            cell: key,
            point: center,
            height: fit.value,
            gradient: fit.gradient,
            count: fit.count,
            spread: fit.spread,
        });
    }
    let points: Vec<Vec<f64>> = samples.iter().map(|s| s.point.clone()).collect();
    let heights: Vec<Vec<f64>> = samples.iter().map(|s| s.height.clone()).collect();
    let grads: Vec<Vec<Vec<f64>>> = samples.iter().map(|s| s.gradient.clone()).collect();
    let c1alpha_norm = holder_seminorm(&points, &heights, &grads, opts.alpha);
    let max_spread = samples.iter().map(|s| s.spread).fold(0.0, f64::max);
    Ok(GraphPatch {
        base_plane: s.clone(),
        origin: ball.center.clone(),
        domain_radius,
        cell,
        holder_alpha: opts.alpha,
        c1alpha_norm,
        flatness,
        spread_threshold,
        max_spread,
        samples,
    })
}
