//! Uniform hash grid for radius queries over point clouds.

use std::collections::HashMap;

use crate::geometry::Vector;

pub struct PointGrid {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointGrid {
    pub fn new<'a, I>(points: I, cell: f64) -> Self
    where
        I: IntoIterator<Item = &'a Vector>,
    {
        assert!(cell > 0.0, "cell size must be positive");
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.into_iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    /// Indices of all stored points with `|p - center| <= radius`, ascending.
    pub fn query(&self, points: &[&Vector], center: &Vector, radius: f64) -> Vec<usize> {
        let lo = key_shifted(center, self.cell, -radius);
        let hi = key_shifted(center, self.cell, radius);
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            if let Some(ids) = self.buckets.get(&cur) {
                for &i in ids {
                    if (points[i] - center).norm() <= radius {
                        out.push(i);
                    }
                }
            }
            // odometer increment over the box [lo, hi]
            let mut k = 0;
            loop {
                if k == cur.len() {
                    out.sort_unstable();
                    return out;
                }
                if cur[k] < hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo[k];
                k += 1;
            }
        }
    }
}

fn key(p: &Vector, cell: f64) -> Vec<i64> {
    p.iter().map(|c| (c / cell).floor() as i64).collect()
}

fn key_shifted(p: &Vector, cell: f64, shift: f64) -> Vec<i64> {
    p.iter().map(|c| ((c + shift) / cell).floor() as i64).collect()
}
