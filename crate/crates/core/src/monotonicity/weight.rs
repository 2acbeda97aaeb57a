//! Non-negative convex weights with gradient norm at most one.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Vector;
use crate::varifold::io::fmt_float;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexWeight {
    /// `f ≡ c`.
    Const { c: f64 },
    /// `f(x) = (a·(x - y0) - c)^+`.
    TruncLinear { a: Vec<f64>, y0: Vec<f64>, c: f64 },
    /// `f(x) = |a·x|`.
    AbsLinear { a: Vec<f64> },
}

fn check_slope(a: &[f64]) -> Result<()> {
    let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("|a| = {n} exceeds 1")));
    }
    Ok(())
}

impl ConvexWeight {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("constant weight {c} must be >= 0")));
        }
        Ok(Self::Const { c })
    }

    pub fn trunc_linear(a: Vec<f64>, y0: Vec<f64>, c: f64) -> Result<Self> {
        check_slope(&a)?;
        if a.len() != y0.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: y0.len(),
            });
        }
        Ok(Self::TruncLinear { a, y0, c })
    }

    pub fn abs_linear(a: Vec<f64>) -> Result<Self> {
        check_slope(&a)?;
        Ok(Self::AbsLinear { a })
    }

    /// Value and a subgradient (the one-sided gradient is zero at kinks).
    pub fn eval(&self, x: &Vector) -> (f64, Vector) {
        let d = x.len();
        match self {
            Self::Const { c } => (*c, Vector::zeros(d)),
            Self::TruncLinear { a, y0, c } => {
                let s: f64 = a.iter().zip(y0).zip(x.iter()).map(|((a, y), x)| a * (x - y)).sum::<f64>() - c;
                if s > 0.0 {
                    (s, Vector::from_column_slice(a))
                } else {
                    (0.0, Vector::zeros(d))
                }
            }
            Self::AbsLinear { a } => {
                let s: f64 = a.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
                let g = Vector::from_column_slice(a);
                if s > 0.0 {
                    (s, g)
                } else if s < 0.0 {
                    (-s, -g)
                } else {
                    (0.0, Vector::zeros(d))
                }
            }
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.eval(x).0
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Const { .. } => None,
            Self::TruncLinear { a, .. } | Self::AbsLinear { a } => Some(a.len()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Const { .. } => "const",
            Self::TruncLinear { .. } => "tlin",
            Self::AbsLinear { .. } => "abslin",
        }
    }

    /// `f(λ ·)`, i.e. the weight pulled back by a dilation.
    pub fn dilated(&self, lambda: f64) -> Self {
        match self {
            Self::Const { c } => Self::Const { c: *c },
            Self::TruncLinear { a, y0, c } => Self::TruncLinear {
                a: a.iter().map(|v| v * lambda).collect(),
                y0: y0.iter().map(|v| v / lambda).collect(),
                c: *c,
            },
            Self::AbsLinear { a } => Self::AbsLinear {
                a: a.iter().map(|v| v * lambda).collect(),
            },
        }
    }

    /// Parses `const <c>`, `tlin <a_1..a_d> <y0_1..y0_d> <c>` or
    /// `abslin <a_1..a_d>` for ambient dimension `d`.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let nums = |slice: &[&str]| -> Result<Vec<f64>> {
            slice
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("invalid number `{t}` in weight spec")))
                })
                .collect()
        };
        match toks.first().copied() {
            Some("const") if toks.len() == 2 => Self::constant(nums(&toks[1..])?[0]),
            Some("tlin") if toks.len() == 2 * d + 2 => {
                let v = nums(&toks[1..])?;
                Self::trunc_linear(v[..d].to_vec(), v[d..2 * d].to_vec(), v[2 * d])
            }
            Some("abslin") if toks.len() == d + 1 => Self::abs_linear(nums(&toks[1..])?),
            _ => Err(Error::InvalidArgument(format!(
                "cannot parse weight `{text}` for d = {d}"
            ))),
        }
    }
}

impl fmt::Display for ConvexWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(" ");
        match self {
            Self::Const { c } => write!(f, "const {}", fmt_float(*c)),
            Self::TruncLinear { a, y0, c } => write!(f, "tlin {} {} {}", join(a), join(y0), fmt_float(*c)),
            Self::AbsLinear { a } => write!(f, "abslin {}", join(a)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slope_bound_enforced() {
        assert!(ConvexWeight::abs_linear(vec![1.0, 0.5]).is_err());
        assert!(ConvexWeight::trunc_linear(vec![0.6, 0.8], vec![0.0, 0.0], 0.1).is_ok());
        assert!(ConvexWeight::constant(-1.0).is_err());
    }

    #[test]
    fn subgradient_matches_differences_away_from_kinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ws = [
            ConvexWeight::trunc_linear(vec![0.6, 0.0, 0.8], vec![0.1, 0.2, 0.0], -0.3).unwrap(),
            ConvexWeight::abs_linear(vec![0.0, 0.7, 0.2]).unwrap(),
            ConvexWeight::constant(0.4).unwrap(),
        ];
        for w in &ws {
            for _ in 0..200 {
                let x = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let (v, g) = w.eval(&x);
                assert!(v >= 0.0);
                assert!(g.norm() <= 1.0 + 1e-12);
                let step = 1e-7;
                let mut kink = false;
                let mut fd = Vector::zeros(3);
                for k in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += step;
                    xm[k] -= step;
                    let (vp, gp) = w.eval(&xp);
                    let (vm, gm) = w.eval(&xm);
                    kink |= (gp - gm).norm() > 0.0;
                    fd[k] = (vp - vm) / (2.0 * step);
                }
                if !kink {
                    assert!((fd - g).norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn convexity_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = ConvexWeight::trunc_linear(vec![0.0, 1.0], vec![0.0, 0.0], 0.2).unwrap();
        for _ in 0..500 {
            let a = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let b = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let t: f64 = rng.random();
            let mid = &a * t + &b * (1.0 - t);
            assert!(w.value(&mid) <= t * w.value(&a) + (1.0 - t) * w.value(&b) + 1e-14);
        }
    }

    #[test]
    fn parse_round_trip() {
        for text in ["const 0.1", "tlin 1 0 0 0 0 0 -0.3", "abslin 0 0.5 0"] {
            let w = ConvexWeight::parse(text, 3).unwrap();
            assert_eq!(ConvexWeight::parse(&w.to_string(), 3).unwrap(), w);
        }
        assert!(ConvexWeight::parse("tlin 1 0", 3).is_err());
        assert!(ConvexWeight::parse("quad 1", 3).is_err());
    }
}
