//! Polynomial test vector fields with an optional compactly supporting
//! radial cutoff.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cutoff::RadialCutoff;
use crate::geometry::{Matrix, Vector};
use crate::{Error, Result};

/// `coeff · Π x_j^{powers[j]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, x: &Vector) -> f64 {
        let mut v = self.coeff;
        for (j, &p) in self.powers.iter().enumerate() {
            v *= x[j].powi(p as i32);
        }
        v
    }

    fn partial(&self, x: &Vector, k: usize) -> f64 {
        let pk = self.powers[k];
        if pk == 0 {
            return 0.0;
        }
        let mut v = self.coeff * pk as f64;
        for (j, &p) in self.powers.iter().enumerate() {
            let e = if j == k { p - 1 } else { p };
            v *= x[j].powi(e as i32);
        }
        v
    }
}

/// `F(x) = ψ(x) P(x)` with `P` polynomial of degree at most 3 and `ψ` a
/// radial cutoff (or `ψ ≡ 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    d: usize,
    components: Vec<Vec<Monomial>>,
    cutoff: Option<RadialCutoff>,
}

impl TestField {
    pub fn new(d: usize, components: Vec<Vec<Monomial>>, cutoff: Option<RadialCutoff>) -> Result<Self> {
        if components.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: components.len(),
            });
        }
        for m in components.iter().flatten() {
            if m.powers.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.powers.len(),
                });
            }
            if m.degree() > 3 {
                return Err(Error::InvalidArgument(format!(
                    "monomial degree {} exceeds 3",
                    m.degree()
                )));
            }
        }
        if let Some(c) = &cutoff {
            if c.center.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.center.len(),
                });
            }
        }
        Ok(Self {
            d,
            components,
            cutoff,
        })
    }

    /// `F(x) = x`.
    pub fn identity(d: usize) -> Self {
        let components = (0..d)
            .map(|i| {
                let mut powers = vec![0; d];
                powers[i] = 1;
                vec![Monomial { coeff: 1.0, powers }]
            })
            .collect();
        Self {
            d,
            components,
            cutoff: None,
        }
    }

    pub fn constant(c: Vector) -> Self {
        let d = c.len();
        let components = c
            .iter()
            .map(|&v| vec![Monomial { coeff: v, powers: vec![0; d] }])
            .collect();
        Self {
            d,
            components,
            cutoff: None,
        }
    }

    /// Random polynomial field with Gaussian coefficients on all monomials of
    /// degree `<= degree` in the coordinates centred at the cutoff centre.
    pub fn random<R: Rng + ?Sized>(d: usize, degree: u32, cutoff: Option<RadialCutoff>, rng: &mut R) -> Result<Self> {
        if degree > 3 {
            return Err(Error::InvalidArgument(format!("degree {degree} exceeds 3")));
        }
        let exps = exponents(d, degree);
        let shift = cutoff.as_ref().map(|c| c.center.clone());
        let components = (0..d)
            .map(|_| {
                let mut poly: Vec<Monomial> = Vec::new();
                for e in &exps {
                    let c: f64 = rng.sample(StandardNormal);
                    poly.extend(shifted_monomial(c, e, shift.as_ref()));
                }
                poly
            })
            .collect();
        Self::new(d, components, cutoff)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> Option<&RadialCutoff> {
        self.cutoff.as_ref()
    }

    fn eval_poly(&self, x: &Vector) -> (Vector, Matrix) {
        let d = self.d;
        let mut value = Vector::zeros(d);
        let mut jac = Matrix::zeros(d, d);
        for (i, poly) in self.components.iter().enumerate() {
            for mono in poly {
                value[i] += mono.eval(x);
                for k in 0..d {
                    jac[(i, k)] += mono.partial(x, k);
                }
            }
        }
        (value, jac)
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        self.eval_with_jacobian(x).0
    }

    /// `(F(x), DF(x))` with `DF_{ik} = ∂_k F_i`.
    pub fn eval_with_jacobian(&self, x: &Vector) -> (Vector, Matrix) {
        let (p, dp) = self.eval_poly(x);
        match &self.cutoff {
            None => (p, dp),
            Some(c) => {
                let (psi, grad) = c.eval(x);
                let jac = dp * psi + &p * grad.transpose();
                (p * psi, jac)
            }
        }
    }

    /// `sup |F|` over sample points.
    pub fn sup_norm_on<'a, I: IntoIterator<Item = &'a Vector>>(&self, points: I) -> f64 {
        points.into_iter().map(|x| self.eval(x).norm()).fold(0.0, f64::max)
    }
}

fn exponents(d: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(j: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if j == cur.len() {
            out.push(cur.clone());
            return;
        }
        for p in 0..=left {
            cur[j] = p;
            rec(j + 1, left - p, cur, out);
        }
        cur[j] = 0;
    }
    rec(0, degree, &mut cur, &mut out);
    out
}

/// Expands `c · Π (x_j - s_j)^{e_j}` into monomials in `x`.
fn shifted_monomial(c: f64, e: &[u32], shift: Option<&Vector>) -> Vec<Monomial> {
    let Some(s) = shift else {
        return vec![Monomial {
            coeff: c,
            powers: e.to_vec(),
        }];
    };
    let d = e.len();
    let mut terms = vec![Monomial {
        coeff: c,
        powers: vec![0; d],
    }];
    for j in 0..d {
        let mut next = Vec::new();
        for t in &terms {
            // (x_j - s_j)^p = Σ_k C(p,k) x_j^k (-s_j)^{p-k}
            let p = e[j];
            for k in 0..=p {
                let binom = binomial(p, k) as f64;
                let mut powers = t.powers.clone();
                powers[j] = k;
                next.push(Monomial {
                    coeff: t.coeff * binom * (-s[j]).powi((p - k) as i32),
                    powers,
                });
            }
        }
        terms = next;
    }
    terms
}

fn binomial(n: u32, k: u32) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobian_matches_centered_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let center = Vector::from_fn(3, |_, _| rng.random_range(-0.5..0.5));
            let cut = RadialCutoff::new(center.clone(), 0.2, 0.8).unwrap();
            let f = TestField::random(3, 3, Some(cut), &mut rng).unwrap();
            for _ in 0..10 {
                let x = &center + Vector::from_fn(3, |_, _| rng.random_range(-0.7..0.7));
                let (_, jac) = f.eval_with_jacobian(&x);
                let step = 1e-5;
                for k in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += step;
                    xm[k] -= step;
                    let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * step);
                    for i in 0..3 {
                        let scale = jac[(i, k)].abs().max(1.0);
                        assert!((fd[i] - jac[(i, k)]).abs() <= 1e-6 * scale, "{} vs {}", fd[i], jac[(i, k)]);
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_expansion_is_exact() {
        let s = Vector::from_column_slice(&[0.3, -0.7]);
        let terms = shifted_monomial(2.0, &[2, 1], Some(&s));
        let x = Vector::from_column_slice(&[1.1, 0.4]);
        let expanded: f64 = terms.iter().map(|t| t.eval(&x)).sum();
        let direct = 2.0 * (x[0] - s[0]).powi(2) * (x[1] - s[1]);
        assert!((expanded - direct).abs() < 1e-14);
    }

    #[test]
    fn rejects_high_degree() {
        let bad = vec![vec![Monomial { coeff: 1.0, powers: vec![4, 0] }], vec![]];
        assert!(TestField::new(2, bad, None).is_err());
        assert!(TestField::random(2, 4, None, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn cutoff_kills_field_outside() {
        let cut = RadialCutoff::new(Vector::zeros(2), 0.1, 0.5).unwrap();
        let f = TestField::random(2, 2, Some(cut), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let (v, j) = f.eval_with_jacobian(&Vector::from_column_slice(&[0.6, 0.0]));
        assert_eq!(v.norm() + j.norm(), 0.0);
    }
}
