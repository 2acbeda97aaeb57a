//! Exact flow tracks: static surfaces, the shrinking sphere and a translating
//! plane.

use crate::brakke::{FlowTrack, Frame};
use crate::geometry::{GeometryContext, Plane, Vector};
use crate::varifold::{shapes, Atom, DiscreteVarifold};
use crate::{Error, Result};

/// The same varifold at every time, with zero transport.
pub fn static_track(v: &DiscreteVarifold, times: &[f64], method: &str) -> Result<FlowTrack> {
    let frames = times.iter().map(|&t| Frame::still(t, v.clone())).collect();
    FlowTrack::new(frames, method)
}

/// `n` equally spaced times from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect()
}

/// Round `m`-sphere with radius `√(−2mt)` (or `√(1 − 2mt)` when
/// `end_at_zero` is false), sampled by rescaling one unit sphere so every
/// frame has the same atoms up to dilation.
pub fn shrinking_sphere_track(
    ctx: GeometryContext,
    end_at_zero: bool,
    t_range: (f64, f64),
    n_frames: usize,
    spacing: f64,
) -> Result<FlowTrack> {
    let (ta, tb) = t_range;
    if !(ta < tb) || n_frames < 2 {
        return Err(Error::InvalidArgument(format!(
            "need t_start < t_end and at least 2 frames (got {ta}, {tb}, {n_frames})"
        )));
    }
    if tb >= 0.0 {
        return Err(Error::OutOfRange(format!("frame time {tb} must be < 0")));
    }
    let mut base = Vector::zeros(ctx.d);
    base[ctx.d - 1] = 1.0;
    let unit = shapes::sphere(ctx, 1.0, spacing, &base)?;
    let m = ctx.m as f64;
    let offset = if end_at_zero { 0.0 } else { 1.0 };
    let frames = linspace(ta, tb, n_frames)
        .into_iter()
        .map(|t| {
            let r = (offset - 2.0 * m * t).sqrt();
            Ok(Frame::still(t, unit.scaled(r)?))
        })
        .collect::<Result<Vec<_>>>()?;
    FlowTrack::new(frames, format!("shrinking-sphere (m = {}, exact)", ctx.m))
}

/// The plane `span(e_1..e_m)` lifted by `c t` along `e_d`, with transport
/// `c e_d` at every atom.
pub fn translating_plane_track(ctx: GeometryContext, c: f64, times: &[f64], spacing: f64, radius: f64) -> Result<FlowTrack> {
    let s = Plane::horizontal(ctx.d, ctx.m)?;
    let mut up = Vector::zeros(ctx.d);
    up[ctx.d - 1] = 1.0;
    let frames = times
        .iter()
        .map(|&t| {
            let v = shapes::flat_lattice(ctx, &s, spacing, radius, &(&up * (c * t)))?;
            let velocity = vec![&up * c; v.len()];
            Ok(Frame {
                t,
                varifold: v,
                velocity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FlowTrack::new(frames, "translating-plane (exact)")
}

/// Static half-plane `{x_m ≥ 0}` of `span(e_1..e_m)` (1-based axes) with `H = 0`.
pub fn half_plane_track(ctx: GeometryContext, spacing: f64, radius: f64, times: &[f64]) -> Result<FlowTrack> {
    let s = Plane::horizontal(ctx.d, ctx.m)?;
    let full = shapes::flat_lattice(ctx, &s, spacing, radius, &Vector::zeros(ctx.d))?;
    let atoms: Vec<Atom> = full
        .atoms()
        .iter()
        .filter(|a| a.x[ctx.m - 1] >= 0.0)
        .cloned()
        .collect();
    let half = DiscreteVarifold::new(ctx, atoms, 0.0)?;
    static_track(&half, times, "half-plane (static)")
}
