use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Attachment, ColorNetwork, EndKind, GenealogyTree};
use crate::stats::CompensatedSum;
use crate::{Error, Result};

/// Child `v` of the color tree is glued at mutation `mutation` of `parent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlueRef {
    pub parent: usize,
    pub mutation: usize,
}

/// A point on lineage `lineage` of color `vertex`, `offset` after its birth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRef {
    pub vertex: usize,
    pub lineage: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    /// A piece of a lineage between consecutive event points.
    Segment,
    /// Zero-length connector from a lineage to a lineage branching off it.
    Branch,
    /// Zero-length connector from the end of a merged lineage to the
    /// continuing lineage.
    Coalescence,
    /// Zero-length connector from a mutation point to the root of the color
    /// it founds.
    Glue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GluedParts {
    tree: GenealogyTree,
    decorations: Vec<ColorNetwork>,
    glue: Vec<Option<GlueRef>>,
}

/// The glued network: color tree, decorations and the derived metric graph.
/// Node times are absolute heights (distance from the root).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "GluedParts", try_from = "GluedParts")]
pub struct GluedNetwork {
    pub tree: GenealogyTree,
    pub decorations: Vec<ColorNetwork>,
    pub glue: Vec<Option<GlueRef>>,
    /// Absolute time of each color's root.
    pub offsets: Vec<f64>,
    pub node_times: Vec<f64>,
    pub edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Node ids along each lineage, in time order: `[vertex][lineage]`.
    lineage_nodes: Vec<Vec<Vec<usize>>>,
    /// Cumulative lineage lengths for uniform sampling.
    length_index: Vec<(f64, usize, usize)>,
    total_length: f64,
}

impl From<GluedNetwork> for GluedParts {
    fn from(g: GluedNetwork) -> Self {
        GluedParts {
            tree: g.tree,
            decorations: g.decorations,
            glue: g.glue,
        }
    }
}

impl TryFrom<GluedParts> for GluedNetwork {
    type Error = Error;
    fn try_from(p: GluedParts) -> Result<Self> {
        let g = glue(p.tree, p.decorations)?;
        if g.glue != p.glue {
            return Err(Error::Structure("glue map does not match the tree".into()));
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Identifies each child color's root with the matching mutation point of
/// its parent and builds the metric graph.
pub fn glue(tree: GenealogyTree, decorations: Vec<ColorNetwork>) -> Result<GluedNetwork> {
    let n = tree.len();
    if decorations.len() != n {
        return Err(Error::Structure(format!(
            "{} decorations for {n} colors",
            decorations.len()
        )));
    }
    for (v, d) in decorations.iter().enumerate() {
        if d.mutation_count() != tree.outdegree(v) {
            return Err(Error::Structure(format!(
                "color {v} has {} mutations but outdegree {}",
                d.mutation_count(),
                tree.outdegree(v)
            )));
        }
        if d.trajectory.initial_state != 1 || d.lineages.iter().any(|l| l.end_kind == EndKind::Open) {
            return Err(Error::Structure(format!("color {v} is not a complete decoration")));
        }
    }
    let mut offsets = vec![0.0; n];
    let mut glue_map = vec![None; n];
    for v in 0..n {
        let d = &decorations[v];
        for (i, &c) in tree.children[v].iter().enumerate() {
            offsets[c] = offsets[v] + (d.mutation_points[i].1 - d.trajectory.start_time);
            glue_map[c] = Some(GlueRef { parent: v, mutation: i });
        }
    }

    let mut node_times = Vec::new();
    let mut edges = Vec::new();
    let mut lineage_nodes = Vec::with_capacity(n);
    // Per lineage: interior node id for each branch-off / merge-in lineage.
    let mut branch_node: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut merge_node: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (v, d) in decorations.iter().enumerate() {
        let abs = |t: f64| offsets[v] + (t - d.trajectory.start_time);
        let nl = d.lineages.len();
        let mut interior: Vec<Vec<(f64, usize, bool)>> = vec![Vec::new(); nl];
        for (j, l) in d.lineages.iter().enumerate() {
            if let Attachment::Branch { lineage, time } = l.parent {
                interior[lineage].push((time, j, true));
            }
            if let EndKind::CoalescedInto(target) = l.end_kind {
                interior[target].push((l.end, j, false));
            }
        }
        let mut bn = vec![usize::MAX; nl];
        let mut mn = vec![usize::MAX; nl];
        let mut ln = Vec::with_capacity(nl);
        for (j, l) in d.lineages.iter().enumerate() {
            let ev = &mut interior[j];
            ev.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut ids = Vec::with_capacity(ev.len() + 2);
            ids.push(node_times.len());
            node_times.push(abs(l.birth));
            for &(t, other, is_branch) in ev.iter() {
                ids.push(node_times.len());
                if is_branch {
                    bn[other] = node_times.len();
                } else {
                    mn[other] = node_times.len();
                }
                node_times.push(abs(t));
            }
            ids.push(node_times.len());
            node_times.push(abs(l.end));
            for w in ids.windows(2) {
                edges.push(Edge {
                    from: w[0],
                    to: w[1],
                    weight: node_times[w[1]] - node_times[w[0]],
                    kind: EdgeKind::Segment,
                });
            }
            ln.push(ids);
        }
        lineage_nodes.push(ln);
        branch_node.push(bn);
        merge_node.push(mn);
    }
    for (v, d) in decorations.iter().enumerate() {
        let ln = &lineage_nodes[v];
        for (j, l) in d.lineages.iter().enumerate() {
            if let Attachment::Branch { .. } = l.parent {
                edges.push(Edge {
                    from: branch_node[v][j],
                    to: ln[j][0],
                    weight: 0.0,
                    kind: EdgeKind::Branch,
                });
            }
            if let EndKind::CoalescedInto(_) = l.end_kind {
                edges.push(Edge {
                    from: *ln[j].last().unwrap(),
                    to: merge_node[v][j],
                    weight: 0.0,
                    kind: EdgeKind::Coalescence,
                });
            }
        }
        for (i, &c) in tree.children[v].iter().enumerate() {
            let lm = d.mutation_points[i].0;
            edges.push(Edge {
                from: *ln[lm].last().unwrap(),
                to: lineage_nodes[c][0][0],
                weight: 0.0,
                kind: EdgeKind::Glue,
            });
        }
    }
    let mut adjacency = vec![Vec::new(); node_times.len()];
    for e in &edges {
        adjacency[e.from].push((e.to, e.weight));
        adjacency[e.to].push((e.from, e.weight));
    }
    let mut length_index = Vec::new();
    let mut acc = CompensatedSum::new();
    for (v, d) in decorations.iter().enumerate() {
        for (j, l) in d.lineages.iter().enumerate() {
            acc.add(l.length());
            length_index.push((acc.value(), v, j));
        }
    }
    let mut total = CompensatedSum::new();
    decorations.iter().for_each(|d| total.add(d.trajectory.integral()));
    Ok(GluedNetwork {
        tree,
        decorations,
        glue: glue_map,
        offsets,
        node_times,
        edges,
        adjacency,
        lineage_nodes,
        length_index,
        total_length: total.value(),
    })
}

impl GluedNetwork {
    pub fn n_colors(&self) -> usize {
        self.tree.len()
    }

    /// `|G| = Σ_v L_v`.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Sum of metric-graph edge weights.
    pub fn graph_length(&self) -> f64 {
        let mut s = CompensatedSum::new();
        self.edges.iter().for_each(|e| s.add(e.weight));
        s.value()
    }

    pub fn node_count(&self) -> usize {
        self.node_times.len()
    }

    pub fn root_node(&self) -> usize {
        self.lineage_nodes[0][0][0]
    }

    pub fn root_point(&self) -> PointRef {
        PointRef {
            vertex: 0,
            lineage: 0,
            offset: 0.0,
        }
    }

    /// Absolute time of a point; equals its distance from the root.
    pub fn height(&self, p: &PointRef) -> f64 {
        let d = &self.decorations[p.vertex];
        self.offsets[p.vertex] + (d.lineages[p.lineage].birth - d.trajectory.start_time) + p.offset
    }

    /// Decoration-local time of a point.
    pub fn local_time(&self, p: &PointRef) -> f64 {
        self.decorations[p.vertex].lineages[p.lineage].birth + p.offset
    }

    pub fn max_height(&self) -> f64 {
        self.node_times.iter().copied().fold(0.0, f64::max)
    }

    /// The point at mutation `i` of color `v`.
    pub fn mutation_point(&self, v: usize, i: usize) -> PointRef {
        let d = &self.decorations[v];
        let (l, t) = d.mutation_points[i];
        PointRef {
            vertex: v,
            lineage: l,
            offset: t - d.lineages[l].birth,
        }
    }

    /// Number of same-color lineages alive at the point's time.
    pub fn lineages_alive_at(&self, p: &PointRef) -> u64 {
        self.decorations[p.vertex].trajectory.state_at(self.local_time(p))
    }

    fn check_point(&self, p: &PointRef) -> Result<()> {
        let l = self
            .decorations
            .get(p.vertex)
            .and_then(|d| d.lineages.get(p.lineage))
            .ok_or_else(|| Error::InvalidArgument(format!("no lineage {p:?}")))?;
        if !(p.offset >= 0.0 && p.offset <= l.length()) {
            return Err(Error::InvalidArgument(format!("offset outside lineage: {p:?}")));
        }
        Ok(())
    }

    /// The two nodes bounding the point's segment, with distances to each.
    fn locate(&self, p: &PointRef) -> [(usize, f64); 2] {
        let ids = &self.lineage_nodes[p.vertex][p.lineage];
        let h = self.height(p);
        let k = ids.partition_point(|&id| self.node_times[id] <= h).clamp(1, ids.len() - 1);
        let (a, b) = (ids[k - 1], ids[k]);
        [
            (a, (h - self.node_times[a]).max(0.0)),
            (b, (self.node_times[b] - h).max(0.0)),
        ]
    }

    fn dijkstra(&self, sources: &[(usize, f64)]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.node_count()];
        let mut heap = BinaryHeap::new();
        for &(s, d) in sources {
            if d < dist[s] {
                dist[s] = d;
                heap.push(HeapItem(d, s));
            }
        }
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(w, len) in &self.adjacency[u] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        dist
    }

    /// Distances from `a` to every node.
    pub fn distances_from(&self, a: &PointRef) -> Result<Vec<f64>> {
        self.check_point(a)?;
        Ok(self.dijkstra(&self.locate(a)))
    }

    /// Distance to `b` given node distances from `a`.
    pub fn distance_via(&self, dist: &[f64], a: &PointRef, b: &PointRef) -> f64 {
        let mut best = f64::INFINITY;
        for (node, d) in self.locate(b) {
            best = best.min(dist[node] + d);
        }
        if a.vertex == b.vertex && a.lineage == b.lineage {
            let [(la, _), _] = self.locate(a);
            let [(lb, _), _] = self.locate(b);
            if la == lb {
                best = best.min((self.height(a) - self.height(b)).abs());
            }
        }
        best
    }

    /// A length-uniform random point.
    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> PointRef {
        let total = self.length_index.last().map(|x| x.0).unwrap_or(0.0);
        let u = rng.random::<f64>() * total;
        let i = self
            .length_index
            .partition_point(|x| x.0 <= u)
            .min(self.length_index.len() - 1);
        let (_, v, l) = self.length_index[i];
        let len = self.decorations[v].lineages[l].length();
        PointRef {
            vertex: v,
            lineage: l,
            offset: rng.random::<f64>() * len,
        }
    }
}

/// Shortest-path distance in the metric graph.
pub fn distance(g: &GluedNetwork, a: &PointRef, b: &PointRef) -> Result<f64> {
    g.check_point(b)?;
    let dist = g.distances_from(a)?;
    Ok(g.distance_via(&dist, a, b))
}

pub fn uniform_point<R: Rng + ?Sized>(g: &GluedNetwork, rng: &mut R) -> Result<PointRef> {
    if !(g.total_length() > 0.0) {
        return Err(Error::InvalidArgument("network has zero length".into()));
    }
    Ok(g.uniform_point(rng))
}
