//! Cubic smoothstep cutoff profile shared by test fields and the heat kernel.

/// Decreasing C¹ profile on `[0, 1]`: `1 - (3s² - 2s³)`, clamped outside.
///
/// Returns `(value, first derivative, second derivative)` with respect to `s`.
pub fn smoothstep_down(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let v = 1.0 - s * s * (3.0 - 2.0 * s);
        let d1 = -6.0 * s * (1.0 - s);
        let d2 = -6.0 + 12.0 * s;
        (v, d1, d2)
    }
}

/// Radial cutoff equal to 1 inside `inner`, 0 outside `outer`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCutoff {
    pub center: nalgebra::DVector<f64>,
    pub inner: f64,
    pub outer: f64,
}

impl RadialCutoff {
    pub fn new(center: nalgebra::DVector<f64>, inner: f64, outer: f64) -> crate::Result<Self> {
        if !(inner >= 0.0 && outer > inner) {
            return Err(crate::Error::InvalidArgument(format!(
                "cutoff radii must satisfy 0 <= inner < outer (got {inner}, {outer})"
            )));
        }
        Ok(Self {
            center,
            inner,
            outer,
        })
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, x: &nalgebra::DVector<f64>) -> (f64, nalgebra::DVector<f64>) {
        let diff = x - &self.center;
        let r = diff.norm();
        let width = self.outer - self.inner;
        let (v, d1, _) = smoothstep_down((r - self.inner) / width);
        if d1 == 0.0 || r == 0.0 {
            (v, nalgebra::DVector::zeros(x.len()))
        } else {
            (v, diff * (d1 / (width * r)))
        }
    }

    pub fn contains(&self, x: &nalgebra::DVector<f64>) -> bool {
        (x - &self.center).norm() < self.outer
    }
}
