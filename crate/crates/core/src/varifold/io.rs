//! DVF text format.
//!
//! ```text
//! DVF 1
//! dim <d> <m>
//! lambda <float>
//! atoms <N>
//! <x_1..x_d> <weight> <multiplicity> <H_1..H_d> <b_11..b_1d> .. <b_m1..b_md>
//! ```
//!
//! Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{GeometryContext, Matrix, Plane, Vector};
use crate::varifold::{Atom, DiscreteVarifold};
use crate::{Error, Result};

const ACCEPT_DEVIATION: f64 = 1e-10;
const REPAIR_DEVIATION: f64 = 1e-6;

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.split('\n')
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
                .filter(|(_, l)| {
                    let t = l.trim_start();
                    !t.is_empty() && !t.starts_with('#')
                }),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    pub fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(Error::parse(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    pub fn peek(&mut self) -> Option<(usize, &'a str)> {
        self.inner.peek().copied()
    }

    /// Reads `<keyword> <values...>` and returns the values.
    pub fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next_line(key)?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok((n, parts.collect())),
            other => Err(Error::parse(
                n,
                format!("expected `{key}`, found `{}`", other.unwrap_or("")),
            )),
        }
    }
}

pub fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("invalid number `{tok}`")))
}

fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid integer `{tok}`")))
}

fn single<'a>(line: usize, vals: &[&'a str], what: &str) -> Result<&'a str> {
    match vals {
        [v] => Ok(v),
        _ => Err(Error::parse(line, format!("`{what}` takes exactly one value"))),
    }
}

/// Parses everything after the `DVF 1` header line.
pub fn parse_body(lines: &mut Lines<'_>) -> Result<DiscreteVarifold> {
    let (n, dims) = lines.keyword("dim")?;
    if dims.len() != 2 {
        return Err(Error::parse(n, "`dim` takes two integers"));
    }
    let d = parse_usize(n, dims[0])?;
    let m = parse_usize(n, dims[1])?;
    let ctx = GeometryContext::new(d, m).map_err(|e| Error::parse(n, e.to_string()))?;
    let (n, lam) = lines.keyword("lambda")?;
    let lambda = parse_f64(n, single(n, &lam, "lambda")?)?;
    let (n, cnt) = lines.keyword("atoms")?;
    let count = parse_usize(n, single(n, &cnt, "atoms")?)?;
    let width = 2 * d + 2 + m * d;
    let mut atoms = Vec::with_capacity(count);
    for k in 0..count {
        if let Some((pn, pl)) = lines.peek() {
            if pl.split_whitespace().next().map_or(false, |t| t.parse::<f64>().is_err()) {
                return Err(Error::parse(
                    pn,
                    format!("atom count mismatch: header declares {count}, found {k}"),
                ));
            }
        }
        let (ln, line) = lines
            .next_line("atom line")
            .map_err(|_| Error::parse(lines.last + 1, format!("atom count mismatch: header declares {count}, found {k}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_f64(ln, t))
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(Error::parse(
                ln,
                format!("expected {width} numbers on an atom line, found {}", vals.len()),
            ));
        }
        let x = Vector::from_column_slice(&vals[0..d]);
        let weight = vals[d];
        let multiplicity = vals[d + 1];
        let h = Vector::from_column_slice(&vals[d + 2..2 * d + 2]);
        let basis = Matrix::from_fn(d, m, |i, j| vals[2 * d + 2 + j * d + i]);
        let plane = match Plane::from_orthonormal(basis.clone()) {
            Ok(p) => p,
            Err(_) => {
                let (p, dev) = Plane::reorthonormalized(basis).map_err(|e| Error::parse(ln, e.to_string()))?;
                if dev >= REPAIR_DEVIATION {
                    return Err(Error::parse(ln, format!("basis is not orthonormal (deviation {dev:e})")));
                }
                log::warn!("line {ln}: re-orthonormalized tangent basis (deviation {dev:e})");
                debug_assert!(dev > ACCEPT_DEVIATION);
                p
            }
        };
        atoms.push(Atom {
            x,
            weight,
            plane,
            multiplicity,
            h,
        });
    }
    DiscreteVarifold::new(ctx, atoms, lambda).map_err(|e| Error::parse(n, e.to_string()))
}

pub fn parse_dvf(text: &str) -> Result<DiscreteVarifold> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.keyword("DVF")?;
    if head != ["1"] {
        return Err(Error::parse(n, "unsupported DVF version"));
    }
    let v = parse_body(&mut lines)?;
    if let Some((n, _)) = lines.peek() {
        return Err(Error::parse(n, "trailing content after the declared atoms"));
    }
    Ok(v)
}

/// Writes the body (everything after `DVF 1`).
pub fn write_body(out: &mut String, v: &DiscreteVarifold) {
    let ctx = v.context;
    let _ = writeln!(out, "dim {} {}", ctx.d, ctx.m);
    let _ = writeln!(out, "lambda {}", fmt_float(v.lambda));
    let _ = writeln!(out, "atoms {}", v.len());
    for a in v.atoms() {
        let mut fields: Vec<String> = Vec::with_capacity(2 * ctx.d + 2 + ctx.m * ctx.d);
        fields.extend(a.x.iter().map(|&c| fmt_float(c)));
        fields.push(fmt_float(a.weight));
        fields.push(fmt_float(a.multiplicity));
        fields.extend(a.h.iter().map(|&c| fmt_float(c)));
        for j in 0..ctx.m {
            fields.extend(a.plane.basis().column(j).iter().map(|&c| fmt_float(c)));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
}

pub fn to_dvf_string(v: &DiscreteVarifold) -> String {
    let mut out = String::from("DVF 1\n");
    write_body(&mut out, v);
    out
}

pub fn load_varifold(path: impl AsRef<Path>) -> Result<DiscreteVarifold> {
    parse_dvf(&std::fs::read_to_string(path)?)
}

pub fn save_varifold(v: &DiscreteVarifold, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_dvf_string(v))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::shapes;

    const ONE_ATOM: &str = "DVF 1\n# a single atom\ndim 3 2\nlambda 0\natoms 1\n0 0 0 0.25 2 0 0 0 1 0 0 0 1 0\n";

    #[test]
    fn single_atom_file() {
        let v = parse_dvf(ONE_ATOM).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.total_mass(), 0.5);
    }

    #[test]
    fn atom_count_mismatch_names_line() {
        let text = "DVF 1\ndim 3 2\nlambda 0\natoms 2\n0 0 0 1 1 0 0 0 1 0 0 0 1 0\n";
        match parse_dvf(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("mismatch"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(parse_dvf("DVG 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_dvf("DVF 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_dvf("DVF 1\ndim 3\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn basis_repair_and_rejection() {
        let nearly = "DVF 1\ndim 3 2\nlambda 0\natoms 1\n0 0 0 1 1 0 0 0 1.0000001 0 0 0 1 0\n";
        let v = parse_dvf(nearly).unwrap();
        assert!(crate::geometry::gram_deviation(v.atoms()[0].plane.basis()) < 1e-14);
        let bad = "DVF 1\ndim 3 2\nlambda 0\natoms 1\n0 0 0 1 1 0 0 0 1.1 0 0 0 1 0\n";
        assert!(matches!(parse_dvf(bad), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn sphere_round_trip_is_byte_identical() {
        let ctx = GeometryContext::new(3, 2).unwrap();
        let s = shapes::sphere(ctx, 1.0, 0.1, &Vector::from_column_slice(&[0.0, 0.0, 1.0])).unwrap();
        let text = to_dvf_string(&s);
        let back = parse_dvf(&text).unwrap();
        assert_eq!(to_dvf_string(&back), text);
        for (a, b) in s.atoms().iter().zip(back.atoms()) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.h, b.h);
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.plane, b.plane);
        }
    }
}
