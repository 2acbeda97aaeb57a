//! Space-time graph extraction over a backwards cylinder.

use std::collections::BTreeMap;
use std::io::Write;

use crate::brakke::{spacetime_oscillation, FlowTrack, ParabolicCylinder};
use crate::geometry::Plane;
use crate::regularity::graph::{cells_in_disk, fit_affine, holder_seminorm_with};
use crate::regularity::Hypothesis;
use crate::varifold::Ball;
use crate::{Error, Result};

/// One spatial cell of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSample {
    pub cell: Vec<i64>,
    pub frame: usize,
    /// Frame time minus `t₀`.
    pub t: f64,
    /// Cell centre in base-plane coordinates.
    pub point: Vec<f64>,
    pub height: Vec<f64>,
    pub gradient: Vec<Vec<f64>>,
    pub count: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGraphPatch {
    pub base_plane: Plane,
    pub cylinder: ParabolicCylinder,
    /// Spatial radius of the graph domain; its time extent is its square.
    pub domain_radius: f64,
    pub cell: f64,
    pub holder_alpha: f64,
    /// Largest `|u(y,s) − u(x,t) − ∇u(x,t)·(y − x)| / (|x − y|² + |t − s|)^{(1+α)/2}`.
    pub c1alpha_norm: f64,
    /// `osc_S(Q_R)/R + ‖v‖ R`.
    pub flatness: f64,
    pub spread_threshold: f64,
    pub max_spread: f64,
    pub hypotheses: Vec<Hypothesis>,
    pub samples: Vec<SpaceTimeSample>,
}

impl SpaceTimeGraphPatch {
    pub fn m(&self) -> usize {
        self.base_plane.dim()
    }

    pub fn codim(&self) -> usize {
        self.base_plane.ambient_dim() - self.base_plane.dim()
    }

    /// Largest deviation of the heights from `u(x, t)` at the cell centres.
    pub fn max_height_error<F: Fn(&[f64], f64) -> Vec<f64>>(&self, u: F) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let exact = u(&s.point, s.t);
                s.height
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `x1..xm, t, u1..uk, du<i>_<j>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = self.m();
        let k = self.codim();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=m).map(|j| format!("x{j}")).collect();
        header.push("t".into());
        header.extend((1..=k).map(|i| format!("u{i}")));
        for i in 1..=k {
            header.extend((1..=m).map(|j| format!("du{i}_{j}")));
        }
        w.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.point.iter().map(|x| format!("{x:e}")).collect();
            rec.push(format!("{:e}", s.t));
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
pub struct ParabolicGraphOptions {
    pub alpha: f64,
    /// Cell side; defaults to `max(4h, 2ρ/64)` with `ρ` the domain radius.
    pub cell: Option<f64>,
    /// The graph lives over `Q_{θR/8}`.
    pub theta: f64,
    pub spread_factor: f64,
    /// Flatness threshold `δ₀` reported in the hypotheses.
    pub delta0: f64,
}

impl Default for ParabolicGraphOptions {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            cell: None,
            theta: 0.25,
            spread_factor: 4.0,
            delta0: 0.02,
        }
    }
}

pub fn parabolic_extract_graph(track: &FlowTrack, q: &ParabolicCylinder, s: &Plane) -> Result<SpaceTimeGraphPatch> {
    parabolic_extract_graph_with(track, q, s, &ParabolicGraphOptions::default())
}

/// Per frame of `Q_{θR/8}`, bins the atoms by their `S`-coordinates and fits an
/// affine height per cell; every cell of every frame must be covered.
pub fn parabolic_extract_graph_with(
    track: &FlowTrack,
    q: &ParabolicCylinder,
    s: &Plane,
    opts: &ParabolicGraphOptions,
) -> Result<SpaceTimeGraphPatch> {
    let m = track.context.m;
    if s.dim() != m || s.ambient_dim() != track.context.d {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: s.dim(),
        });
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {} must lie in (0, 1)", opts.alpha)));
    }
    if !(opts.theta > 0.0 && opts.theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta = {} must lie in (0, 1]", opts.theta)));
    }
    let big_r = q.radius;
    let osc = spacetime_oscillation(track, s, q)?;
    let flatness = osc / big_r + track.lambda_v * big_r;
    let hypotheses = vec![
        Hypothesis::new("flatness osc_S(Q_R) <= delta0 R", osc, opts.delta0 * big_r),
        Hypothesis::new("transport |v| <= delta0 / R", track.lambda_v, opts.delta0 / big_r),
    ];
    let rho = opts.theta * big_r / 8.0;
    let inner = q.scaled(opts.theta / 8.0)?;
    let frames: Vec<(usize, &crate::brakke::Frame)> = track
        .frames()
        .iter()
        .enumerate()
        .filter(|(_, f)| inner.contains_time(f.t))
        .collect();
    if frames.is_empty() {
        return Err(Error::SupportGap { cell: Vec::new() });
    }
    let h = frames.iter().map(|(_, f)| f.varifold.mesh_size()).fold(0.0, f64::max);
    let cell = opts.cell.unwrap_or_else(|| (4.0 * h).max(2.0 * rho / 64.0));
    let spread_threshold =
        opts.spread_factor * flatness * big_r * (cell / big_r).powf(1.0 + opts.alpha) + 1e-9 * big_r;
    let comp = s.complement();
    let cells = cells_in_disk(m, cell, rho);
    let scale = vec![cell; m];
    let gather = Ball::new(q.center.clone(), 2.0 * rho + cell)?;

    let mut samples = Vec::new();
    for (index, frame) in frames {
        let mut coords: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
        let mut bins: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for a in frame.varifold.atoms_in_ball(&gather) {
            let rel = &a.x - &q.center;
            let y: Vec<f64> = s.coords(&rel).iter().copied().collect();
            let z: Vec<f64> = comp.coords(&rel).iter().copied().collect();
            let key: Vec<i64> = y.iter().map(|c| (c / cell).round() as i64).collect();
            bins.entry(key).or_default().push(coords.len());
            coords.push((y, z, a.mass()));
        }
        for key in &cells {
            let mut tagged = key.clone();
            tagged.push(index as i64);
            let members = bins.get(key).ok_or_else(|| Error::SupportGap { cell: tagged.clone() })?;
            let center: Vec<f64> = key.iter().map(|&k| k as f64 * cell).collect();
            let pts: Vec<(&[f64], &[f64], f64)> = members
                .iter()
                .map(|&i| (coords[i].0.as_slice(), coords[i].1.as_slice(), coords[i].2))
                .collect();
            let fit = fit_affine(&pts, &center, &scale);
            if fit.spread > spread_threshold {
                return Err(Error::MultiValued {
                    cell: tagged,
                    spread: fit.spread,
                    threshold: spread_threshold,
                });
            }
            samples.push(SpaceTimeSample {
                cell: key.clone(),
                frame: index,
                t: frame.t - q.t0,
                point: center,
                height: fit.value,
                gradient: fit.gradient,
                count: fit.count,
                spread: fit.spread,
            });
        }
    }
    let points: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut p = s.point.clone();
            p.push(s.t);
            p
        })
        .collect();
    let heights: Vec<Vec<f64>> = samples.iter().map(|s| s.height.clone()).collect();
    let grads: Vec<Vec<Vec<f64>>> = samples.iter().map(|s| s.gradient.clone()).collect();
    let c1alpha_norm = holder_seminorm_with(&points, &heights, &grads, opts.alpha, |diff| {
        let (x, t) = diff.split_at(m);
        (x.iter().map(|c| c * c).sum::<f64>() + t[0].abs()).sqrt()
    });
    let max_spread = samples.iter().map(|s| s.spread).fold(0.0, f64::max);
    Ok(SpaceTimeGraphPatch {
        base_plane: s.clone(),
        cylinder: q.clone(),
        domain_radius: rho,
        cell,
        holder_alpha: opts.alpha,
        c1alpha_norm,
        flatness,
        spread_threshold,
        max_spread,
        hypotheses,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brakke::tracks::{linspace, static_track};
    use crate::brakke::{graphical_flow_run, Boundary, FlowGrid, FlowRunConfig, Frame, Transport};
    use crate::geometry::{GeometryContext, Vector};
    use crate::varifold::{shapes, DiscreteVarifold};

    fn ctx() -> GeometryContext {
        GeometryContext::new(2, 1).unwrap()
    }

    fn line() -> Plane {
        Plane::horizontal(2, 1).unwrap()
    }

    #[test]
    fn static_tilted_line() {
        let slope = 0.01;
        let v = shapes::tilted_plane(ctx(), slope, 1e-4, 1.05).unwrap();
        let tr = static_track(&v, &linspace(-0.01, 0.0, 11), "static").unwrap();
        let q = ParabolicCylinder::new(Vector::zeros(2), 0.0, 1.0).unwrap();
        let g = parabolic_extract_graph(&tr, &q, &line()).unwrap();
        assert!(g.c1alpha_norm <= 1e-6, "{}", g.c1alpha_norm);
        assert!(g.hypotheses.iter().all(|h| h.holds));
        let err = g.max_height_error(|x, _| vec![slope * x[0]]);
        assert!(err < 1e-12, "{err}");
        for s in &g.samples {
            assert!((s.gradient[0][0] - slope).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x1,t,u1,du1_1\n"));
    }

    #[test]
    fn space_time_hole_is_a_gap() {
        let v = shapes::tilted_plane(ctx(), 0.0, 1e-4, 1.05).unwrap();
        let holed: Vec<_> = v.atoms().iter().filter(|a| a.x.norm() > 0.005).cloned().collect();
        let holed = DiscreteVarifold::new(ctx(), holed, 0.0).unwrap();
        let times = linspace(-0.001, 0.0, 5);
        let frames: Vec<Frame> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| Frame::still(t, if i == 2 { holed.clone() } else { v.clone() }))
            .collect();
        let tr = FlowTrack::new(frames, "holed").unwrap();
        let q = ParabolicCylinder::new(Vector::zeros(2), 0.0, 1.0).unwrap();
        match parabolic_extract_graph(&tr, &q, &line()) {
            Err(Error::SupportGap { cell }) => assert_eq!(cell.last(), Some(&2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn heat_flow_round_trip() {
        let grid = FlowGrid {
            m: 1,
            n: 400,
            origin: -0.5,
            length: 1.0,
            boundary: Boundary::Dirichlet,
        };
        let cfg = FlowRunConfig {
            t_start: -0.02,
            t_end: 0.0,
            frames: 21,
            cfl: 0.9,
        };
        let tr = graphical_flow_run(&grid, &|x| 0.01 * x[0].sin(), Transport::None, &cfg).unwrap();
        let q = ParabolicCylinder::new(Vector::zeros(2), 0.0, 0.5).unwrap();
        let opts = ParabolicGraphOptions {
            theta: 1.0,
            ..Default::default()
        };
        let g = parabolic_extract_graph_with(&tr, &q, &line(), &opts).unwrap();
        assert!(g.samples.len() > 10);
        let interp = |x: &[f64], t: f64| {
            let f = &tr.frames()[tr.frame_index(t).unwrap()];
            let atoms = f.varifold.atoms();
            let k = atoms.iter().position(|a| a.x[0] > x[0]).unwrap();
            let (a, b) = (&atoms[k - 1], &atoms[k]);
            let lam = (x[0] - a.x[0]) / (b.x[0] - a.x[0]);
            vec![(1.0 - lam) * a.x[1] + lam * b.x[1]]
        };
        let err = g.max_height_error(interp);
        assert!(err <= 2.0 * g.spread_threshold, "{err} {}", g.spread_threshold);
        assert!(g.c1alpha_norm <= 10.0 * g.flatness, "{} {}", g.c1alpha_norm, g.flatness);
    }
}
