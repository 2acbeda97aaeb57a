//! Explicit finite differences for graphical mean curvature flow with a
//! transport term, `m ∈ {1, 2}`:
//!
//! `∂_t u = Δu − ∇uᵀ D²u ∇u / W² + W (v·ν)`, `W = √(1 + |∇u|²)`.

use crate::brakke::tracks::linspace;
use crate::brakke::{FlowTrack, Frame};
use crate::geometry::{GeometryContext, Matrix, Plane, Vector};
use crate::varifold::{Atom, DiscreteVarifold};
use crate::{Error, Result};

/// Largest initial slope accepted.
pub const MAX_INITIAL_SLOPE: f64 = 0.5;
/// Slope at which a run is aborted.
pub const BLOW_UP_SLOPE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Boundary nodes keep their initial values.
    Dirichlet,
}

/// Uniform grid on `[origin, origin + length]^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowGrid {
    pub m: usize,
    /// Cells per axis.
    pub n: usize,
    pub origin: f64,
    pub length: f64,
    pub boundary: Boundary,
}

impl FlowGrid {
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Nodes per axis: `n` for periodic grids, `n + 1` otherwise.
    fn side(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.n,
            Boundary::Dirichlet => self.n + 1,
        }
    }

    fn count(&self) -> usize {
        self.side().pow(self.m as u32)
    }

    fn index(&self, node: usize) -> Vec<usize> {
        let side = self.side();
        let mut rest = node;
        let mut idx = vec![0; self.m];
        for j in (0..self.m).rev() {
            idx[j] = rest % side;
            rest /= side;
        }
        idx
    }

    fn node(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.side() + i)
    }

    fn position(&self, node: usize) -> Vec<f64> {
        let h = self.spacing();
        self.index(node).iter().map(|&i| self.origin + i as f64 * h).collect()
    }

    fn is_boundary(&self, node: usize) -> bool {
        self.boundary == Boundary::Dirichlet && self.index(node).iter().any(|&i| i == 0 || i == self.n)
    }

    /// Neighbour of `node` shifted by `step` along `axis`.
    fn shift(&self, node: usize, axis: usize, step: i64) -> usize {
        let mut idx = self.index(node);
        let side = self.side() as i64;
        idx[axis] = (idx[axis] as i64 + step).rem_euclid(side) as usize;
        self.node(&idx)
    }

    fn validate(&self) -> Result<()> {
        if !(self.m == 1 || self.m == 2) {
            return Err(Error::InvalidDimension(format!(
                "graphical flows support m in {{1, 2}}, got {}",
                self.m
            )));
        }
        if self.n < 4 || !(self.length > 0.0) {
            return Err(Error::InvalidArgument("grid needs n >= 4 and a positive length".into()));
        }
        Ok(())
    }
}

/// Transport field `v(x, t)` in ambient coordinates.
#[derive(Debug, Clone, Copy)]
pub enum Transport {
    None,
    /// Constant vector (length `d = m + 1`).
    Constant([f64; 3]),
    Field(fn(&Vector, f64) -> Vector),
}

impl Transport {
    fn eval(&self, x: &Vector, t: f64) -> Vector {
        match self {
            Self::None => Vector::zeros(x.len()),
            Self::Constant(c) => Vector::from_column_slice(&c[..x.len()]),
            Self::Field(f) => f(x, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRunConfig {
    pub t_start: f64,
    pub t_end: f64,
    /// Output frames including both end points.
    pub frames: usize,
    /// `Δt ≤ cfl · h² / (2m)`.
    pub cfl: f64,
}

/// Central-difference gradient and Hessian at a node.
fn jets(grid: &FlowGrid, u: &[f64], node: usize) -> (Vec<f64>, Matrix) {
    let h = grid.spacing();
    let m = grid.m;
    let mut g = vec![0.0; m];
    let mut hess = Matrix::zeros(m, m);
    for a in 0..m {
        let p = grid.shift(node, a, 1);
        let q = grid.shift(node, a, -1);
        g[a] = (u[p] - u[q]) / (2.0 * h);
        hess[(a, a)] = (u[p] - 2.0 * u[node] + u[q]) / (h * h);
        for b in a + 1..m {
            let pp = grid.shift(p, b, 1);
            let pm = grid.shift(p, b, -1);
            let mp = grid.shift(q, b, 1);
            let mm = grid.shift(q, b, -1);
            let v = (u[pp] - u[pm] - u[mp] + u[mm]) / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    (g, hess)
}

fn ambient(x: &[f64], height: f64) -> Vector {
    let mut p: Vec<f64> = x.to_vec();
    p.push(height);
    Vector::from_vec(p)
}

fn max_slope(grid: &FlowGrid, u: &[f64]) -> f64 {
    (0..grid.count())
        .filter(|&i| !grid.is_boundary(i))
        .map(|i| jets(grid, u, i).0.iter().map(|g| g * g).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Converts the grid state into a varifold; Dirichlet boundary nodes are
/// left out.
fn frame_of(grid: &FlowGrid, u: &[f64], t: f64, transport: &Transport) -> Result<Frame> {
    let m = grid.m;
    let d = m + 1;
    let ctx = GeometryContext::new(d, m)?;
    let hm = grid.spacing().powi(m as i32);
    let mut atoms = Vec::new();
    let mut velocity = Vec::new();
    for node in 0..grid.count() {
        if grid.is_boundary(node) {
            continue;
        }
        let y = grid.position(node);
        let (g, hess) = jets(grid, u, node);
        let gv = Vector::from_column_slice(&g);
        let w2 = 1.0 + gv.norm_squared();
        let w = w2.sqrt();
        let lap = hess.trace();
        let kappa = (lap - (&hess * &gv).dot(&gv) / w2) / w;
        let mut nu = Vector::zeros(d);
        for j in 0..m {
            nu[j] = -g[j] / w;
        }
        nu[m] = 1.0 / w;
        let tangents: Vec<Vector> = (0..m)
            .map(|j| {
                let mut e = Vector::zeros(d);
                e[j] = 1.0;
                e[m] = g[j];
                e
            })
            .collect();
        let x = ambient(&y, u[node]);
        velocity.push(transport.eval(&x, t));
        atoms.push(Atom::new(x, hm * w, Plane::from_spanning(&tangents)?, nu * kappa));
    }
    Ok(Frame {
        t,
        varifold: DiscreteVarifold::with_measured_lambda(ctx, atoms)?,
        velocity,
    })
}

/// Runs the flow from `u0` and records `cfg.frames` equally spaced frames.
pub fn graphical_flow_run(
    grid: &FlowGrid,
    u0: &dyn Fn(&[f64]) -> f64,
    transport: Transport,
    cfg: &FlowRunConfig,
) -> Result<FlowTrack> {
    grid.validate()?;
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return Err(Error::Cfl(cfg.cfl));
    }
    if !(cfg.t_end > cfg.t_start) || cfg.frames < 2 {
        return Err(Error::InvalidArgument("need t_end > t_start and at least 2 frames".into()));
    }
    let m = grid.m;
    let h = grid.spacing();
    let dt_max = cfg.cfl * h * h / (2.0 * m as f64);
    let mut u: Vec<f64> = (0..grid.count()).map(|i| u0(&grid.position(i))).collect();
    let slope = max_slope(grid, &u);
    if slope > MAX_INITIAL_SLOPE {
        return Err(Error::InvalidArgument(format!(
            "initial slope {slope} exceeds {MAX_INITIAL_SLOPE}"
        )));
    }
    let times = linspace(cfg.t_start, cfg.t_end, cfg.frames);
    let mut frames = vec![frame_of(grid, &u, times[0], &transport)?];
    let mut rate = vec![0.0; u.len()];
    for (k, w) in times.windows(2).enumerate() {
        let steps = ((w[1] - w[0]) / dt_max).ceil().max(1.0) as usize;
        let dt = (w[1] - w[0]) / steps as f64;
        for s in 0..steps {
            let t = w[0] + s as f64 * dt;
            for (node, r) in rate.iter_mut().enumerate() {
                if grid.is_boundary(node) {
                    *r = 0.0;
                    continue;
                }
                let (g, hess) = jets(grid, &u, node);
                let gv = Vector::from_column_slice(&g);
                let w2 = 1.0 + gv.norm_squared();
                let mcf = hess.trace() - (&hess * &gv).dot(&gv) / w2;
                let v = transport.eval(&ambient(&grid.position(node), u[node]), t);
                let forcing = v[m] - (0..m).map(|j| g[j] * v[j]).sum::<f64>();
                *r = mcf + forcing;
            }
            for (ui, r) in u.iter_mut().zip(&rate) {
                *ui += dt * r;
            }
        }
        let slope = max_slope(grid, &u);
        if !(slope <= BLOW_UP_SLOPE) {
            return Err(Error::GradientBlowUp {
                frame: k + 1,
                max_grad: slope,
            });
        }
        frames.push(frame_of(grid, &u, w[1], &transport)?);
    }
    let kind = match grid.boundary {
        Boundary::Periodic => "periodic",
        Boundary::Dirichlet => "dirichlet",
    };
    FlowTrack::new(frames, format!("graphical-mcf (m = {m}, n = {}, {kind}, cfl = {})", grid.n, cfg.cfl))
}
