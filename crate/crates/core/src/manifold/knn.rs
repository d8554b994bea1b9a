use std::collections::HashMap;

use crate::{dist2, Point3};

/// Uniform-cell spatial index for k-nearest-neighbor queries in ℝ³.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Point3>,
    origin: Point3,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
    /// Largest occupied cell key per axis; the smallest is 0.
    max_key: [i64; 3],
}

impl PointIndex {
    pub fn new(points: Vec<Point3>) -> Self {
        assert!(!points.is_empty(), "PointIndex needs at least one point");
        let mut lo = points[0];
        let mut hi = points[0];
        for p in &points {
            for c in 0..3 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let ext: Vec<f64> = (0..3).map(|c| (hi[c] - lo[c]).max(1e-12)).collect();
        // points typically fill a curve or surface, so size cells on the
        // largest extent rather than the box volume
        let dim_guess = ext.iter().filter(|&&e| e > 1e-9).count().max(1) as f64;
        let span = ext.iter().cloned().fold(0.0, f64::max);
        let cell = if span < 1e-9 {
            1.0
        } else {
            span / (points.len() as f64 / 4.0).powf(1.0 / dim_guess.min(2.0))
        };

        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(&lo, cell, p)).or_default().push(i as u32);
        }
        let mut max_key = [0i64; 3];
        for k in cells.keys() {
            for c in 0..3 {
                max_key[c] = max_key[c].max(k[c]);
            }
        }
        PointIndex {
            points,
            origin: lo,
            cell,
            cells,
            max_key,
        }
    }

    fn key(origin: &Point3, cell: f64, p: &Point3) -> [i64; 3] {
        [
            ((p[0] - origin[0]) / cell).floor() as i64,
            ((p[1] - origin[1]) / cell).floor() as i64,
            ((p[2] - origin[2]) / cell).floor() as i64,
        ]
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest indexed points to `q`, as (index, distance) sorted by
    /// distance with ties broken by index. `exclude` skips one index.
    pub fn nearest(&self, q: &Point3, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let center = Self::key(&self.origin, self.cell, q);
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        // Chebyshev distance from the query cell to the nearest and the
        // farthest occupied cell
        let (mut near, mut far) = (0i64, 0i64);
        for c in 0..3 {
            let gap = (-center[c]).max(center[c] - self.max_key[c]).max(0);
            near = near.max(gap);
            far = far.max(center[c].abs().max((center[c] - self.max_key[c]).abs()));
        }
        let mut ring = near;
        loop {
            if 6 * (2 * ring + 1) * (2 * ring + 1) > 4 * self.cells.len() as i64 + 64 {
                return self.brute_force(q, k, exclude);
            }
            self.visit_ring(center, ring, |i| {
                if Some(i) == exclude {
                    return;
                }
                let d2 = dist2(q, &self.points[i]);
                if best.len() < k || (d2, i) < best[best.len() - 1] {
                    let pos = best.partition_point(|e| *e < (d2, i));
                    best.insert(pos, (d2, i));
                    if best.len() > k {
                        best.pop();
                    }
                }
            });
            // anything in ring r+1 is at least r cells away
            let reach = ring as f64 * self.cell;
            if best.len() == k && best[k - 1].0 <= reach * reach {
                break;
            }
            if ring >= far {
                break;
            }
            ring += 1;
        }
        best.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn brute_force(&self, q: &Point3, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, p)| (dist2(q, p), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn visit_ring(&self, c: [i64; 3], r: i64, mut f: impl FnMut(usize)) {
        for dx in -r..=r {
            for dy in -r..=r {
                for dz in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &i in ids {
                            f(i as usize);
                        }
                    }
                }
            }
        }
    }
}
