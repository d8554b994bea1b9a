//! Approximate intrinsic distances.
//!
//! Curves use exact cumulative arc length. Surfaces use shortest paths in a
//! symmetric κ-nearest-neighbor graph over a dense parameter grid with
//! Euclidean edge weights.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{quadrature_grid, wrap_params, Param, ParametricManifold, PointIndex};
use crate::{Error, Point3, Result};

/// Resolution of the auxiliary grid and graph degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicConfig {
    /// Per-parameter grid counts. `None` selects [`GeodesicConfig::default_resolution`].
    pub resolution: Option<Vec<usize>>,
    pub knn: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            resolution: None,
            knn: 16,
        }
    }
}

impl GeodesicConfig {
    pub fn default_resolution(k: usize) -> Vec<usize> {
        if k == 1 {
            vec![1 << 14]
        } else {
            vec![360, 270]
        }
    }

    pub fn resolution_for(&self, k: usize) -> Vec<usize> {
        self.resolution.clone().unwrap_or_else(|| Self::default_resolution(k))
    }
}

/// Geodesic distance between two parameter tuples on `m`.
///
/// Builds the auxiliary structure on every call; reuse a [`Geodesic`] for
/// repeated queries.
pub fn geodesic_distance(m: Arc<dyn ParametricManifold>, x: Param, y: Param, cfg: &GeodesicConfig) -> Result<f64> {
    Geodesic::build(m, cfg)?.distance(x, y)
}

#[derive(Debug, Clone)]
pub enum Geodesic {
    Arc(ArcLength),
    Graph(GraphGeodesic),
}

impl Geodesic {
    pub fn build(m: Arc<dyn ParametricManifold>, cfg: &GeodesicConfig) -> Result<Self> {
        match m.intrinsic_dim() {
            1 => {
                let res = cfg.resolution_for(1);
                if res.len() != 1 {
                    return Err(Error::config(format!(
                        "geodesic resolution for a curve needs 1 entry, got {}",
                        res.len()
                    )));
                }
                Ok(Geodesic::Arc(ArcLength::new(m, res[0])?))
            }
            2 => Ok(Geodesic::Graph(GraphGeodesic::new(m, &cfg.resolution_for(2), cfg.knn)?)),
            k => Err(Error::Parameter(format!("unsupported intrinsic dimension {k}"))),
        }
    }

    pub fn manifold(&self) -> &Arc<dyn ParametricManifold> {
        match self {
            Geodesic::Arc(a) => &a.manifold,
            Geodesic::Graph(g) => &g.manifold,
        }
    }

    pub fn distance(&self, x: Param, y: Param) -> Result<f64> {
        match self {
            Geodesic::Arc(a) => Ok(a.distance(x[0], y[0])),
            Geodesic::Graph(g) => g.distance(x, y),
        }
    }

    /// Distance matrix among `ts`.
    pub fn pairwise(&self, ts: &[Param]) -> Result<Vec<Vec<f64>>> {
        match self {
            Geodesic::Arc(a) => Ok(ts
                .iter()
                .map(|x| ts.iter().map(|y| a.distance(x[0], y[0])).collect())
                .collect()),
            Geodesic::Graph(g) => g.pairwise(ts),
        }
    }
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Cumulative arc length of a closed curve, tabulated on a uniform grid
/// with 5-point Gauss–Legendre per cell.
#[derive(Debug, Clone)]
pub struct ArcLength {
    manifold: Arc<dyn ParametricManifold>,
    step: f64,
    cumulative: Vec<f64>,
}

impl ArcLength {
    pub fn new(manifold: Arc<dyn ParametricManifold>, cells: usize) -> Result<Self> {
        if manifold.intrinsic_dim() != 1 {
            return Err(Error::Parameter("arc length needs a curve".into()));
        }
        if cells < 2 {
            return Err(Error::config("arc-length table needs at least 2 cells"));
        }
        let step = TAU / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            acc += Self::segment(manifold.as_ref(), i as f64 * step, (i + 1) as f64 * step);
            cumulative.push(acc);
        }
        Ok(ArcLength {
            manifold,
            step,
            cumulative,
        })
    }

    fn segment(m: &dyn ParametricManifold, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        GL5.iter()
            .map(|&(x, w)| w * super::volume_element(m, [mid + half * x, 0.0]))
            .sum::<f64>()
            * half
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arc length from parameter 0 to `theta` (wrapped into [0, 2π)).
    pub fn arc(&self, theta: f64) -> f64 {
        let t = wrap_params(self.manifold.as_ref(), [theta, 0.0])[0];
        let i = ((t / self.step) as usize).min(self.cumulative.len() - 2);
        let t0 = i as f64 * self.step;
        self.cumulative[i] + Self::segment(self.manifold.as_ref(), t0, t)
    }

    /// Length of the shorter of the two arcs joining the parameters.
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (self.arc(a) - self.arc(b)).abs();
        d.min(self.total() - d)
    }
}

/// Shortest paths in a symmetric κ-NN graph over a midpoint parameter grid.
#[derive(Debug, Clone)]
pub struct GraphGeodesic {
    manifold: Arc<dyn ParametricManifold>,
    resolution: Vec<usize>,
    knn: usize,
    params: Vec<Param>,
    index: PointIndex,
    adjacency: Vec<Vec<(u32, f64)>>,
}

/// Distances from a set of sources to a set of targets.
#[derive(Debug, Clone)]
pub struct SourceField {
    /// Distance from each target to its nearest source.
    pub target_distance: Vec<f64>,
    /// Smallest distance between two distinct sources (∞ for one source).
    pub closest_pair: f64,
}

/// Which vertices [`GraphGeodesic::source_field`] reports on.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    /// The graph's own grid vertices.
    Grid,
    /// Arbitrary points on the manifold, attached as extra vertices.
    Points(&'a [Param]),
}

#[derive(Clone, Copy, PartialEq)]
struct Item {
    d: f64,
    v: u32,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties on vertex id
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Grid graph plus extra vertices attached by κ-NN over the union.
struct Augmented<'a> {
    base: &'a GraphGeodesic,
    extra: Vec<Vec<(u32, f64)>>,
    back: Vec<Vec<(u32, f64)>>,
}

impl<'a> Augmented<'a> {
    fn new(base: &'a GraphGeodesic, pts: &[Point3]) -> Self {
        let n = base.params.len();
        let mut extra: Vec<Vec<(u32, f64)>> = vec![Vec::new(); pts.len()];
        let mut back: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let extra_index = if pts.is_empty() {
            None
        } else {
            Some(PointIndex::new(pts.to_vec()))
        };
        for (e, p) in pts.iter().enumerate() {
            let grid = base.index.nearest(p, base.knn, None);
            let mut cand: Vec<(f64, u32)> = grid.iter().map(|&(i, d)| (d, i as u32)).collect();
            if let Some(idx) = &extra_index {
                for (j, d) in idx.nearest(p, base.knn, Some(e)) {
                    cand.push((d, (n + j) as u32));
                }
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(base.knn);
            for (d, v) in cand {
                let ev = (n + e) as u32;
                if (v as usize) < n {
                    extra[e].push((v, d));
                    back[v as usize].push((ev, d));
                } else {
                    let j = v as usize - n;
                    extra[e].push((v, d));
                    extra[j].push((ev, d));
                }
            }
        }
        for list in extra.iter_mut() {
            list.sort_by_key(|a| a.0);
            list.dedup_by(|a, b| a.0 == b.0);
        }
        Augmented { base, extra, back }
    }

    fn len(&self) -> usize {
        self.base.params.len() + self.extra.len()
    }

    fn for_neighbors(&self, v: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.base.params.len();
        if v < n {
            for &(u, w) in self.base.adjacency[v].iter().chain(self.back[v].iter()) {
                f(u as usize, w);
            }
        } else {
            for &(u, w) in &self.extra[v - n] {
                f(u as usize, w);
            }
        }
    }

    /// Multi-source Dijkstra. Returns distance and nearest-source label per
    /// vertex; `stop` ends the search once that vertex is settled.
    fn dijkstra(&self, sources: &[usize], stop: Option<usize>) -> (Vec<f64>, Vec<u32>) {
        let mut d = vec![f64::INFINITY; self.len()];
        let mut label = vec![u32::MAX; self.len()];
        let mut heap = BinaryHeap::new();
        for (s, &v) in sources.iter().enumerate() {
            if d[v] > 0.0 {
                d[v] = 0.0;
                label[v] = s as u32;
                heap.push(Item { d: 0.0, v: v as u32 });
            }
        }
        while let Some(Item { d: dv, v }) = heap.pop() {
            let v = v as usize;
            if dv > d[v] {
                continue;
            }
            if Some(v) == stop {
                break;
            }
            let lv = label[v];
            self.for_neighbors(v, |u, w| {
                let nd = dv + w;
                if nd < d[u] {
                    d[u] = nd;
                    label[u] = lv;
                    heap.push(Item { d: nd, v: u as u32 });
                }
            });
        }
        (d, label)
    }
}

impl GraphGeodesic {
    pub fn new(manifold: Arc<dyn ParametricManifold>, resolution: &[usize], knn: usize) -> Result<Self> {
        if knn == 0 {
            return Err(Error::config("geodesic.knn must be positive"));
        }
        let grid = quadrature_grid(manifold.as_ref(), resolution).map_err(|e| Error::config(e.to_string()))?;
        let n = grid.len();
        if knn >= n {
            return Err(Error::config(format!(
                "geodesic.knn = {knn} needs more than {n} grid points"
            )));
        }
        let index = PointIndex::new(grid.points.clone());
        let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, d) in index.nearest(&grid.points[i], knn, Some(i)) {
                adjacency[i].push((j as u32, d));
                adjacency[j].push((i as u32, d));
            }
        }
        for list in adjacency.iter_mut() {
            list.sort_by_key(|a| a.0);
            list.dedup_by(|a, b| a.0 == b.0);
        }
        let g = GraphGeodesic {
            manifold,
            resolution: resolution.to_vec(),
            knn,
            params: grid.params,
            index,
            adjacency,
        };
        let reached = g.component_size(0);
        if reached != n {
            return Err(Error::config(format!(
                "κ-NN graph with κ = {knn} is disconnected ({reached} of {n} grid points reachable); increase geodesic.knn"
            )));
        }
        Ok(g)
    }

    fn component_size(&self, start: usize) -> usize {
        let mut seen = vec![false; self.params.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &(u, _) in &self.adjacency[v] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    stack.push(u as usize);
                }
            }
        }
        count
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn knn(&self) -> usize {
        self.knn
    }

    pub fn grid_params(&self) -> &[Param] {
        &self.params
    }

    fn embed_all(&self, ts: &[Param]) -> Vec<Point3> {
        ts.iter()
            .map(|&t| self.manifold.map(wrap_params(self.manifold.as_ref(), t)))
            .collect()
    }

    pub fn distance(&self, x: Param, y: Param) -> Result<f64> {
        let m = self.manifold.as_ref();
        let (x, y) = (wrap_params(m, x), wrap_params(m, y));
        if x == y {
            return Ok(0.0);
        }
        let pts = self.embed_all(&[x, y]);
        let aug = Augmented::new(self, &pts);
        let n = self.params.len();
        let (d, _) = aug.dijkstra(&[n], Some(n + 1));
        let out = d[n + 1];
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::config(
                "query points are not connected in the κ-NN graph; increase geodesic.knn",
            ))
        }
    }

    /// All pairwise distances among `ts`, from one graph holding every point.
    pub fn pairwise(&self, ts: &[Param]) -> Result<Vec<Vec<f64>>> {
        let m = self.manifold.as_ref();
        let wrapped: Vec<Param> = ts.iter().map(|&t| wrap_params(m, t)).collect();
        let aug = Augmented::new(self, &self.embed_all(&wrapped));
        let n = self.params.len();
        let mut out = vec![vec![0.0; ts.len()]; ts.len()];
        for i in 0..ts.len() {
            let (d, _) = aug.dijkstra(&[n + i], None);
            for j in 0..ts.len() {
                out[i][j] = if wrapped[i] == wrapped[j] { 0.0 } else { d[n + j] };
                if !out[i][j].is_finite() {
                    return Err(Error::config(
                        "query points are not connected in the κ-NN graph; increase geodesic.knn",
                    ));
                }
            }
        }
        // one Dijkstra per row: symmetrize the last-bit differences
        for i in 0..ts.len() {
            for j in 0..i {
                let v = out[i][j].min(out[j][i]);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }

    /// Nearest-source distances for `targets` and the closest source pair.
    pub fn source_field(&self, sources: &[Param], targets: Targets<'_>) -> Result<SourceField> {
        let n = self.params.len();
        let mut extra: Vec<Param> = sources.to_vec();
        if let Targets::Points(ts) = targets {
            extra.extend_from_slice(ts);
        }
        let pts = self.embed_all(&extra);
        let aug = Augmented::new(self, &pts);
        let src: Vec<usize> = (0..sources.len()).map(|s| n + s).collect();
        let (d, label) = aug.dijkstra(&src, None);

        let target_distance: Vec<f64> = match targets {
            Targets::Grid => d[..n].to_vec(),
            Targets::Points(ts) => d[n + sources.len()..n + sources.len() + ts.len()].to_vec(),
        };
        if target_distance.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(
                "some targets are unreachable in the κ-NN graph; increase geodesic.knn",
            ));
        }

        // the shortest path between the two closest sources crosses an edge
        // whose endpoints carry different nearest-source labels
        let mut closest_pair = f64::INFINITY;
        for v in 0..aug.len() {
            if label[v] == u32::MAX {
                continue;
            }
            aug.for_neighbors(v, |u, w| {
                if label[u] != u32::MAX && label[u] != label[v] {
                    closest_pair = closest_pair.min(d[v] + w + d[u]);
                }
            });
        }
        Ok(SourceField {
            target_distance,
            closest_pair,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist;
    use crate::manifold::{builtin, Circle, Curve6Lobe, Torus};
    use std::f64::consts::PI;

    #[test]
    fn circle_antipodal() {
        let g = Geodesic::build(Arc::new(Circle), &GeodesicConfig::default()).unwrap();
        assert!((g.distance([0.0, 0.0], [PI, 0.0]).unwrap() - PI).abs() < 1e-12);
        assert!((g.distance([0.1, 0.0], [0.1 + TAU, 0.0]).unwrap()).abs() < 1e-12);
        assert!((g.distance([-0.3, 0.0], [0.3, 0.0]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn curve_total_length() {
        let a = ArcLength::new(Arc::new(Curve6Lobe), 1 << 12).unwrap();
        assert!((a.total() - 11.025_683_547_587_412).abs() < 1e-11);
    }

    #[test]
    fn torus_meridian() {
        let g = Geodesic::build(Arc::new(Torus), &GeodesicConfig::default()).unwrap();
        let d = g.distance([0.0, 0.0], [0.0, PI]).unwrap();
        assert!((d - PI / 3.0).abs() / (PI / 3.0) < 0.02, "d = {d}");
    }

    /// Plain Dijkstra on a doubled-resolution grid graph, built without the
    /// spatial index (brute-force neighbor search restricted to a parameter
    /// window).
    #[test]
    fn torus_meridian_dijkstra_oracle() {
        let m = Torus;
        let (nt, nl) = (24usize, 270usize);
        // thin band of θ around 0 suffices for a meridian path
        let dt = TAU / 360.0;
        let dl = TAU / nl as f64;
        let mut pts = Vec::new();
        for i in 0..nt {
            for j in 0..nl {
                let t = (i as f64 - nt as f64 / 2.0 + 0.5) * dt;
                pts.push(m.map([t, j as f64 * dl]));
            }
        }
        let n = pts.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dist(&pts[i], &pts[j]), j))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(d, j) in all.iter().take(8) {
                adj[i].push((j, d));
                adj[j].push((i, d));
            }
        }
        let src = (nt / 2) * nl; // θ≈0, λ=0
        let dst = (nt / 2) * nl + nl / 2; // λ=π
        let mut d = vec![f64::INFINITY; n];
        d[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item { d: 0.0, v: src as u32 });
        while let Some(Item { d: dv, v }) = heap.pop() {
            if dv > d[v as usize] {
                continue;
            }
            for &(u, w) in &adj[v as usize] {
                if dv + w < d[u] {
                    d[u] = dv + w;
                    heap.push(Item { d: dv + w, v: u as u32 });
                }
            }
        }
        let oracle = d[dst];
        let g = Geodesic::build(Arc::new(Torus), &GeodesicConfig::default()).unwrap();
        let ours = g
            .distance(m_param(src, nt, nl, dt, dl), m_param(dst, nt, nl, dt, dl))
            .unwrap();
        assert!((oracle - PI / 3.0).abs() / (PI / 3.0) < 0.01, "oracle {oracle}");
        assert!((ours - oracle).abs() / oracle < 0.02, "ours {ours} oracle {oracle}");
    }

    fn m_param(idx: usize, nt: usize, nl: usize, dt: f64, dl: f64) -> Param {
        let (i, j) = (idx / nl, idx % nl);
        [(i as f64 - nt as f64 / 2.0 + 0.5) * dt, j as f64 * dl]
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let g = Geodesic::build(builtin("torus").unwrap(), &GeodesicConfig::default()).unwrap();
        assert_eq!(g.distance([1.0, 2.0], [1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(g.distance([1.0, 2.0], [1.0 + TAU, 2.0 - TAU]).unwrap(), 0.0);
    }

    #[test]
    fn disconnected_graph_is_a_config_error() {
        let cfg = GeodesicConfig {
            resolution: Some(vec![180, 135]),
            knn: 1,
        };
        assert!(matches!(Geodesic::build(Arc::new(Torus), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn sandwich_symmetry_triangle() {
        let cfg = GeodesicConfig {
            resolution: Some(vec![90, 68]),
            knn: 8,
        };
        let ms: [Arc<dyn ParametricManifold>; 2] = [Arc::new(Torus), Arc::new(Curve6Lobe)];
        for m in ms {
            let cfg = if m.intrinsic_dim() == 1 {
                GeodesicConfig::default()
            } else {
                cfg.clone()
            };
            let g = Geodesic::build(m.clone(), &cfg).unwrap();
            let ps: Vec<Param> = (0..12).map(|i| [i as f64 * 0.9, i as f64 * 2.3]).collect();
            let d = g.pairwise(&ps).unwrap();
            let mut worst_ratio: f64 = 0.0;
            for a in 0..ps.len() {
                for b in 0..ps.len() {
                    assert_eq!(d[a][b], d[b][a]);
                    let e = dist(&m.map(ps[a]), &m.map(ps[b]));
                    assert!(d[a][b] >= e - 1e-12);
                    if e > 0.0 {
                        worst_ratio = worst_ratio.max(d[a][b] / e);
                    }
                    for c in 0..ps.len() {
                        assert!(d[a][b] <= d[a][c] + d[c][b] + 1e-12);
                    }
                }
            }
            assert!(worst_ratio.is_finite() && worst_ratio < 5.0, "C = {worst_ratio}");
        }
    }

    #[test]
    fn closest_pair_of_sources() {
        let g = GraphGeodesic::new(Arc::new(Torus), &[180, 135], 8).unwrap();
        let sources = [[0.0, 0.0], [0.3, 0.0], [3.0, 3.0]];
        let f = g.source_field(&sources, Targets::Grid).unwrap();
        // two points 0.3 rad apart on the outer equator of radius 4/3
        let arc = 0.3 * 4.0 / 3.0;
        assert!((f.closest_pair - arc).abs() / arc < 0.03, "{}", f.closest_pair);
        assert_eq!(f.target_distance.len(), 180 * 135);
    }
}
