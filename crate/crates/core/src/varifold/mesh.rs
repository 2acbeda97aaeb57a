//! Segment and triangle meshes, and their conversion to varifolds with a
//! discrete Laplace–Beltrami mean curvature.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use crate::geometry::{GeometryContext, Matrix, Plane, Vector};
use crate::varifold::{Atom, DiscreteVarifold};
use crate::{Error, Result};

const MIN_MEASURE: f64 = 1e-14;

/// Simplicial mesh of dimension `m ∈ {1, 2}` in `R^d`.
#[derive(Debug, Clone)]
pub struct SimplexMesh {
    pub context: GeometryContext,
    pub vertices: Vec<Vector>,
    pub simplices: Vec<Vec<usize>>,
}

impl SimplexMesh {
    pub fn new(context: GeometryContext, vertices: Vec<Vector>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        if context.m > 2 {
            return Err(Error::InvalidDimension(format!(
                "meshes support m in {{1, 2}}, got {}",
                context.m
            )));
        }
        for v in &vertices {
            if v.len() != context.d {
                return Err(Error::DimensionMismatch {
                    expected: context.d,
                    found: v.len(),
                });
            }
        }
        for s in &simplices {
            if s.len() != context.m + 1 {
                return Err(Error::DimensionMismatch {
                    expected: context.m + 1,
                    found: s.len(),
                });
            }
            if s.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidArgument("simplex references a missing vertex".into()));
            }
        }
        Ok(Self {
            context,
            vertices,
            simplices,
        })
    }

    /// Sum of simplex measures.
    pub fn area(&self) -> f64 {
        self.simplices
            .iter()
            .map(|s| match s.len() {
                2 => (&self.vertices[s[1]] - &self.vertices[s[0]]).norm(),
                _ => triangle_area(&self.vertices[s[0]], &self.vertices[s[1]], &self.vertices[s[2]]),
            })
            .sum()
    }

    fn neighbours(&self) -> Vec<BTreeSet<usize>> {
        let mut nb = vec![BTreeSet::new(); self.vertices.len()];
        for s in &self.simplices {
            for &a in s {
                for &b in s {
                    if a != b {
                        nb[a].insert(b);
                    }
                }
            }
        }
        nb
    }

    /// Vertices on the boundary: for triangles, endpoints of edges used once;
    /// for segments, vertices used once.
    pub fn boundary_vertices(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if self.context.m == 1 {
            let mut count: HashMap<usize, usize> = HashMap::new();
            for s in &self.simplices {
                for &i in s {
                    *count.entry(i).or_default() += 1;
                }
            }
            out.extend(count.into_iter().filter(|&(_, c)| c == 1).map(|(i, _)| i));
        } else {
            let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for s in &self.simplices {
                for k in 0..3 {
                    let (a, b) = (s[k], s[(k + 1) % 3]);
                    *edges.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            for ((a, b), c) in edges {
                if c == 1 {
                    out.insert(a);
                    out.insert(b);
                }
            }
        }
        out
    }
}

fn triangle_area(a: &Vector, b: &Vector, c: &Vector) -> f64 {
    let u = b - a;
    let v = c - a;
    let uu = u.dot(&u);
    let vv = v.dot(&v);
    let uv = u.dot(&v);
    0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
}

fn cot_at(apex: &Vector, p: &Vector, q: &Vector) -> f64 {
    let u = p - apex;
    let v = q - apex;
    let dot = u.dot(&v);
    let cross2 = (u.dot(&u) * v.dot(&v) - dot * dot).max(0.0);
    dot / cross2.sqrt()
}

/// Varifold of a mesh: Voronoi (mixed) areas as weights, `H = Δ_Σ x`,
/// and tangent planes from a principal-component fit of each vertex star.
///
/// Boundary vertices take the average `H` of their interior neighbours.
pub fn estimate_mean_curvature(mesh: &SimplexMesh) -> Result<DiscreteVarifold> {
    let n = mesh.vertices.len();
    let d = mesh.context.d;
    let m = mesh.context.m;
    let mut lap = vec![Vector::zeros(d); n];
    let mut area = vec![0.0; n];
    for (idx, s) in mesh.simplices.iter().enumerate() {
        if m == 1 {
            let (a, b) = (s[0], s[1]);
            let e = &mesh.vertices[b] - &mesh.vertices[a];
            let len = e.norm();
            if len < MIN_MEASURE {
                return Err(Error::DegenerateSimplex { index: idx, measure: len });
            }
            lap[a] += &e / len;
            lap[b] -= &e / len;
            area[a] += 0.5 * len;
            area[b] += 0.5 * len;
        } else {
            let p = [&mesh.vertices[s[0]], &mesh.vertices[s[1]], &mesh.vertices[s[2]]];
            let tri = triangle_area(p[0], p[1], p[2]);
            if tri < MIN_MEASURE {
                return Err(Error::DegenerateSimplex { index: idx, measure: tri });
            }
            let cots: Vec<f64> = (0..3).map(|k| cot_at(p[k], p[(k + 1) % 3], p[(k + 2) % 3])).collect();
            for k in 0..3 {
                let (i, j) = (s[(k + 1) % 3], s[(k + 2) % 3]);
                let w = 0.5 * cots[k];
                let e = &mesh.vertices[j] - &mesh.vertices[i];
                lap[i] += &e * w;
                lap[j] -= &e * w;
            }
            let obtuse = (0..3).find(|&k| cots[k] < 0.0);
            for k in 0..3 {
                let a_k = match obtuse {
                    Some(o) if o == k => 0.5 * tri,
                    Some(_) => 0.25 * tri,
                    None => {
                        let (j, l) = ((k + 1) % 3, (k + 2) % 3);
                        let e_kj = (p[j] - p[k]).norm_squared();
                        let e_kl = (p[l] - p[k]).norm_squared();
                        0.125 * (e_kj * cots[l] + e_kl * cots[j])
                    }
                };
                area[s[k]] += a_k;
            }
        }
    }
    let boundary = mesh.boundary_vertices();
    let nb = mesh.neighbours();
    let mut h: Vec<Vector> = (0..n)
        .map(|i| {
            if area[i] > 0.0 {
                &lap[i] / area[i]
            } else {
                Vector::zeros(d)
            }
        })
        .collect();
    for &b in &boundary {
        let interior: Vec<usize> = nb[b].iter().copied().filter(|j| !boundary.contains(j)).collect();
        h[b] = if interior.is_empty() {
            Vector::zeros(d)
        } else {
            interior.iter().fold(Vector::zeros(d), |acc, &j| acc + &h[j]) / interior.len() as f64
        };
    }
    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        if nb[i].is_empty() {
            continue;
        }
        let plane = star_plane(&mesh.vertices, i, &nb[i], m)?;
        atoms.push(Atom::new(mesh.vertices[i].clone(), area[i], plane, h[i].clone()));
    }
    DiscreteVarifold::with_measured_lambda(mesh.context, atoms)
}

fn star_plane(vertices: &[Vector], i: usize, nb: &BTreeSet<usize>, m: usize) -> Result<Plane> {
    let d = vertices[i].len();
    let pts: Vec<&Vector> = std::iter::once(&vertices[i]).chain(nb.iter().map(|&j| &vertices[j])).collect();
    let mean = pts.iter().fold(Vector::zeros(d), |acc, p| acc + *p) / pts.len() as f64;
    let mut cov = Matrix::zeros(d, d);
    for p in &pts {
        let y = *p - &mean;
        cov.syger(1.0, &y, &y, 1.0);
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<Vector> = order[..m].iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    Plane::from_spanning(&cols)
}

/// Closed regular polygon with `n` vertices on the circle of radius `radius`.
pub fn circle_polyline(n: usize, radius: f64) -> Result<SimplexMesh> {
    let ctx = GeometryContext::new(2, 1)?;
    let vertices = (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            Vector::from_column_slice(&[radius * t.cos(), radius * t.sin()])
        })
        .collect();
    let simplices = (0..n).map(|j| vec![j, (j + 1) % n]).collect();
    SimplexMesh::new(ctx, vertices, simplices)
}

/// Triangulated square `[-half, half]²` in the plane `x_2 = 0` of `R^3`.
pub fn flat_grid(n: usize, half: f64) -> Result<SimplexMesh> {
    let ctx = GeometryContext::new(3, 2)?;
    let h = 2.0 * half / n as f64;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vector::from_column_slice(&[-half + i as f64 * h, -half + j as f64 * h, 0.0]));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut simplices = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if (i + j) % 2 == 0 {
                simplices.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                simplices.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                simplices.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
                simplices.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    SimplexMesh::new(ctx, vertices, simplices)
}

/// Geodesic sphere: icosahedron refined `levels` times, vertices projected
/// to the sphere of radius `radius`. Has `20 · 4^levels` faces.
pub fn icosphere(levels: usize, radius: f64) -> Result<SimplexMesh> {
    let ctx = GeometryContext::new(3, 2)?;
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let mut vertices: Vec<Vector> = raw
        .iter()
        .map(|p| Vector::from_column_slice(p).normalize() * radius)
        .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let p = (&vertices[a] + &vertices[b]).normalize() * radius;
                vertices.push(p);
                vertices.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut vertices);
            let bc = midpoint(f[1], f[2], &mut vertices);
            let ca = midpoint(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    SimplexMesh::new(ctx, vertices, faces.iter().map(|f| f.to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::Ball;

    #[test]
    fn icosphere_curvature() {
        let mesh = icosphere(5, 1.0).unwrap();
        let v = estimate_mean_curvature(&mesh).unwrap();
        for a in v.atoms() {
            let hn = a.h.norm();
            assert!((hn - 2.0).abs() < 0.05, "|H| = {hn}");
            let cos = -a.h.dot(&a.x) / (hn * a.x.norm());
            assert!(cos > (2.0f64).to_radians().cos(), "angle off by {}", cos.acos().to_degrees());
        }
        let mass = v.mass_in_ball(&Ball::centered(3, 2.0).unwrap());
        assert!((mass - 4.0 * PI).abs() < 0.05, "{mass}");
    }

    #[test]
    fn flat_mesh_has_no_curvature() {
        let v = estimate_mean_curvature(&flat_grid(20, 1.0).unwrap()).unwrap();
        assert!(v.lambda <= 1e-8);
        assert!((v.total_mass() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn circle_curvature() {
        let v = estimate_mean_curvature(&circle_polyline(400, 0.5).unwrap()).unwrap();
        for a in v.atoms() {
            assert!((a.h.norm() - 2.0).abs() < 0.01);
            assert!(a.h.dot(&a.x) < 0.0);
        }
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let ctx = GeometryContext::new(3, 2).unwrap();
        let vs = vec![
            Vector::from_column_slice(&[0.0, 0.0, 0.0]),
            Vector::from_column_slice(&[1.0, 0.0, 0.0]),
            Vector::from_column_slice(&[2.0, 0.0, 0.0]),
        ];
        let mesh = SimplexMesh::new(ctx, vs, vec![vec![0, 1, 2]]).unwrap();
        assert!(matches!(
            estimate_mean_curvature(&mesh),
            Err(Error::DegenerateSimplex { index: 0, .. })
        ));
    }
}
