//! The elliptic kernels `h` and `g_{r,s} = r^{2-m} h(x/r) - s^{2-m} h(x/s)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{trace_over_basis, unit_ball_volume, Matrix, Plane, Vector};
use crate::{Error, Result};

/// Value, gradient and Hessian of a scalar kernel at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEval {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

/// Parameters of `g_{r,s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub m: usize,
    pub r: f64,
    pub s: f64,
}

impl KernelSpec {
    pub fn new(m: usize, r: f64, s: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension(format!("kernel needs m >= 2, got {m}")));
        }
        if !(r > 0.0 && r < s) {
            return Err(Error::InvalidArgument(format!("need 0 < r < s, got r = {r}, s = {s}")));
        }
        Ok(Self { m, r, s })
    }
}

/// `h` with gradient and Hessian; interior branch on the closed unit ball.
fn h_full(x: &Vector, m: usize) -> Result<KernelEval> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!("kernel needs m >= 2, got {m}")));
    }
    let d = x.len();
    let omega = unit_ball_volume(m)?;
    let mf = m as f64;
    let r2 = x.norm_squared();
    let r = r2.sqrt();
    let inv_m_omega = 1.0 / (mf * omega);
    if r <= 1.0 {
        let value = if m == 2 {
            (1.0 - r2) / (4.0 * PI)
        } else {
            (mf / 2.0 - (mf - 2.0) * r2 / 2.0) / (omega * mf * (mf - 2.0))
        };
        Ok(KernelEval {
            value,
            gradient: x * (-inv_m_omega),
            hessian: Matrix::identity(d, d) * (-inv_m_omega),
        })
    } else {
        let value = if m == 2 {
            -r.ln() / (2.0 * PI)
        } else {
            r.powf(2.0 - mf) / (omega * mf * (mf - 2.0))
        };
        let rm = r.powi(m as i32);
        let xhat = x / r;
        let hessian = (Matrix::identity(d, d) / mf - &xhat * xhat.transpose()) * (-1.0 / (omega * rm));
        Ok(KernelEval {
            value,
            gradient: x * (-inv_m_omega / rm),
            hessian,
        })
    }
}

/// `h(x)` and its gradient.
pub fn kernel_h(x: &Vector, m: usize) -> Result<(f64, Vector)> {
    let k = h_full(x, m)?;
    Ok((k.value, k.gradient))
}

/// `h(x)` with gradient and Hessian.
pub fn kernel_h_full(x: &Vector, m: usize) -> Result<KernelEval> {
    h_full(x, m)
}

/// `g_{r,s}(x)` with gradient and Hessian. For `m = 2` the constant
/// `log(s/r)/(2π)` is added so that `g` vanishes outside `B_s`.
pub fn kernel_g(x: &Vector, spec: &KernelSpec) -> Result<KernelEval> {
    let m = spec.m as i32;
    let hr = h_full(&(x / spec.r), spec.m)?;
    let hs = h_full(&(x / spec.s), spec.m)?;
    let (r, s) = (spec.r, spec.s);
    let mut value = r.powi(2 - m) * hr.value - s.powi(2 - m) * hs.value;
    if spec.m == 2 {
        value += (s / r).ln() / (2.0 * PI);
    }
    if x.norm() >= s {
        value = 0.0;
    }
    Ok(KernelEval {
        value,
        gradient: hr.gradient * r.powi(1 - m) - hs.gradient * s.powi(1 - m),
        hessian: hr.hessian * r.powi(-m) - hs.hessian * s.powi(-m),
    })
}

/// `div_S ∇g` at `x` and the slack of
/// `div_S ∇g ≤ -χ_{B_r}/(ω_m r^m) + χ_{B_s}/(ω_m s^m)`.
pub fn divergence_slack(x: &Vector, spec: &KernelSpec, plane: &Plane) -> Result<(f64, f64)> {
    let g = kernel_g(x, spec)?;
    let div = trace_over_basis(&g.hessian, plane.basis());
    let omega = unit_ball_volume(spec.m)?;
    let n = x.norm();
    let m = spec.m as i32;
    let mut bound = 0.0;
    if n <= spec.r {
        bound -= 1.0 / (omega * spec.r.powi(m));
    }
    if n <= spec.s {
        bound += 1.0 / (omega * spec.s.powi(m));
    }
    Ok((div, bound - div))
}
