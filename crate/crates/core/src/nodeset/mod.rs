//! Node sets on a manifold and their fill distance, separation radius and
//! mesh ratio.

mod riesz;

use std::sync::Arc;

use serde::Serialize;

use crate::manifold::{
    quadrature_grid, wrap_params, EvaluationGrid, Geodesic, Param, ParametricManifold, PointIndex, Targets,
};
use crate::{Error, Point3, Result};

pub use riesz::{minimize_riesz, minimize_riesz_traced, riesz_energy, RieszOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    RieszOptimized {
        seed: u64,
        iterations: usize,
        s: f64,
        energy: f64,
    },
    Explicit,
}

/// Distinct nodes on a manifold, stored both as parameters and as points.
#[derive(Debug, Clone)]
pub struct NodeSet {
    manifold: Arc<dyn ParametricManifold>,
    params: Vec<Param>,
    points: Vec<Point3>,
    provenance: Provenance,
    measures: Option<MeshMeasures>,
}

impl NodeSet {
    /// Nodes at explicit parameter tuples (wrapped into the period cell).
    pub fn from_params(m: Arc<dyn ParametricManifold>, params: &[Param]) -> Result<Self> {
        let mut wrapped = Vec::with_capacity(params.len());
        for &t in params {
            crate::manifold::embed(m.as_ref(), t)?;
            wrapped.push(wrap_params(m.as_ref(), t));
        }
        let points = wrapped.iter().map(|&t| m.map(t)).collect();
        Self::build(m, wrapped, points, Provenance::Explicit)
    }

    pub(crate) fn build(
        manifold: Arc<dyn ParametricManifold>,
        params: Vec<Param>,
        points: Vec<Point3>,
        provenance: Provenance,
    ) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Parameter("a node set needs at least one node".into()));
        }
        if let Some((i, j)) = coincident_pair(&points) {
            return Err(Error::SingularConfiguration(i, j));
        }
        Ok(NodeSet {
            manifold,
            params,
            points,
            provenance,
            measures: None,
        })
    }

    pub fn manifold(&self) -> &Arc<dyn ParametricManifold> {
        &self.manifold
    }

    pub fn params(&self) -> &[Param] {
        &self.params
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

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Measures attached by [`NodeSet::with_measures`], if any.
    pub fn measures(&self) -> Option<&MeshMeasures> {
        self.measures.as_ref()
    }

    pub fn with_measures(mut self, mm: MeshMeasures) -> Self {
        self.measures = Some(mm);
        self
    }

    /// Every other node, starting with the first.
    pub fn every_other(&self) -> Result<Self> {
        let params: Vec<Param> = self.params.iter().step_by(2).copied().collect();
        let points: Vec<Point3> = self.points.iter().step_by(2).copied().collect();
        Self::build(self.manifold.clone(), params, points, Provenance::Explicit)
    }
}

fn coincident_pair(points: &[Point3]) -> Option<(usize, usize)> {
    if points.len() < 2 {
        return None;
    }
    let index = PointIndex::new(points.to_vec());
    let mut first: Option<(usize, usize)> = None;
    for (i, p) in points.iter().enumerate() {
        let (j, d) = index.nearest(p, 1, Some(i))[0];
        if d == 0.0 {
            let pair = (i.min(j), i.max(j));
            first = Some(first.map_or(pair, |f| f.min(pair)));
        }
    }
    first
}

/// Fill distance h, separation radius q and mesh ratio ρ = h/q, all in
/// geodesic length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshMeasures {
    pub h: f64,
    /// +∞ for a single node.
    pub q: f64,
    pub rho: f64,
}

impl MeshMeasures {
    fn new(h: f64, q: f64) -> Self {
        MeshMeasures { h, q, rho: h / q }
    }
}

/// h, q and ρ of `nodes`.
///
/// On curves both come from the exact arc-length gaps between consecutive
/// nodes: h is half the largest gap and q half the smallest, so `grid` only
/// serves the density warning. On surfaces h is the largest graph distance
/// from a grid point to the nodes and q half the shortest node-to-node
/// graph path.
pub fn mesh_measures(nodes: &NodeSet, grid: &EvaluationGrid, geo: &Geodesic) -> Result<MeshMeasures> {
    if geo.manifold().name() != nodes.manifold().name() {
        return Err(Error::config(format!(
            "geodesic structure is for {}, nodes live on {}",
            geo.manifold().name(),
            nodes.manifold().name()
        )));
    }
    let mm = match geo {
        Geodesic::Arc(arc) => {
            let mut s: Vec<f64> = nodes.params().iter().map(|t| arc.arc(t[0])).collect();
            s.sort_by(f64::total_cmp);
            let total = arc.total();
            let mut gaps: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
            gaps.push(total - s[s.len() - 1] + s[0]);
            let widest = gaps.iter().cloned().fold(0.0, f64::max);
            let q = if s.len() == 1 {
                f64::INFINITY
            } else {
                0.5 * gaps.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            MeshMeasures::new(0.5 * widest, q)
        }
        Geodesic::Graph(g) => {
            // h over the denser of the graph vertices and the evaluation grid
            let targets = if g.grid_params().len() >= grid.len() {
                Targets::Grid
            } else {
                Targets::Points(&grid.params)
            };
            let field = g.source_field(nodes.params(), targets)?;
            let h = field.target_distance.iter().cloned().fold(0.0, f64::max);
            MeshMeasures::new(h, 0.5 * field.closest_pair)
        }
    };
    let m = nodes.manifold().as_ref();
    let spacing = match geo {
        Geodesic::Graph(g) if g.grid_params().len() >= grid.len() => quadrature_grid(m, g.resolution())?.max_spacing(m),
        _ => grid.max_spacing(m),
    };
    if spacing > mm.q {
        log::warn!(
            "sample spacing {spacing:.3e} exceeds the separation radius {:.3e}; h may be underestimated",
            mm.q
        );
    }
    Ok(mm)
}

/// Half the smallest Euclidean distance between two nodes.
pub fn euclidean_separation(points: &[Point3]) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let index = PointIndex::new(points.to_vec());
    0.5 * points
        .iter()
        .enumerate()
        .map(|(i, p)| index.nearest(p, 1, Some(i))[0].1)
        .fold(f64::INFINITY, f64::min)
}
