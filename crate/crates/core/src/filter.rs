//! Max-min timestamp tables and the candidate edge index.
//!
//! For a query DAG orientation, the table stores per (query vertex u, data
//! vertex v, query edge e) the largest, over weak embeddings of the sub-DAG
//! below u anchored at v, of the minimum timestamp assigned to e's temporal
//! descendants in that sub-DAG. A query edge e = (u1,u2) is then matchable
//! to a data edge with timestamp t exactly when t < table[u2, image(u2), e],
//! which makes the membership test constant time. Tables are maintained
//! incrementally per edge arrival and expiration; a pair survives into the
//! candidate index only when it is matchable in both the forward and the
//! reversed orientation under a single endpoint assignment.
//!
//! Each orientation constrains only pairs e ≺ e' whose ancestor side is e in
//! that orientation; a pair that sits anti-aligned here is aligned in the
//! other orientation and is enforced there.

use crate::dag::QueryDag;
use crate::graph::{EdgeId, LabelId, TemporalGraph, Timestamp, VertexId};
use crate::query::{QueryEdgeId, QueryVertexId, TemporalQuery};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtTimestamp {
    NegInf,
    Finite(Timestamp),
    PosInf,
}

impl fmt::Display for ExtTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtTimestamp::NegInf => write!(f, "-inf"),
            ExtTimestamp::Finite(t) => write!(f, "{t}"),
            ExtTimestamp::PosInf => write!(f, "+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reverse,
}

impl Orientation {
    fn tag(self) -> &'static str {
        match self {
            Orientation::Forward => "fwd",
            Orientation::Reverse => "rev",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ResolvedELabel {
    Unlabeled,
    Label(LabelId),
    /// Label string never interned by the graph: matches no data edge.
    Unmatchable,
}

/// Endpoint assignment of a data edge to a query edge, independent of DAG
/// orientation: `false` maps the data source to the query edge's `u` side.
pub type Assign = bool;

fn assigned_images(src: VertexId, dst: VertexId, assign: Assign) -> (VertexId, VertexId) {
    if assign {
        (dst, src)
    } else {
        (src, dst)
    }
}

/// One DAG orientation with everything the table needs resolved against a
/// concrete graph: labels as graph label ids, the aligned temporal-ancestor
/// matrix, and per-vertex relevant edge sets.
#[derive(Debug, Clone)]
pub struct FilterDag {
    pub orientation: Orientation,
    dag: QueryDag,
    qlabel: Vec<Option<LabelId>>,
    qelabel: Vec<ResolvedELabel>,
    /// aligned[e] bit f set when e precedes f and e is an ancestor edge of f.
    aligned: Vec<u64>,
    /// Per vertex: edges with at least one aligned descendant in the sub-DAG
    /// below it, ascending.
    rel: Vec<Vec<QueryEdgeId>>,
    /// Per vertex, per edge: slot of that edge in `rel`, if any.
    rel_slot: Vec<Vec<Option<usize>>>,
}

impl FilterDag {
    pub fn new(
        q: &TemporalQuery,
        graph: &TemporalGraph,
        dag: QueryDag,
        orientation: Orientation,
    ) -> Self {
        let n = q.vertex_count();
        let m = q.edge_count();
        let qlabel = q
            .vertices()
            .map(|u| graph.label_id(&q.vertex(u).label))
            .collect();
        let qelabel = q
            .edges()
            .map(|e| match &q.edge(e).elabel {
                None => ResolvedELabel::Unlabeled,
                Some(name) => match graph.label_id(name) {
                    Some(id) => ResolvedELabel::Label(id),
                    None => ResolvedELabel::Unmatchable,
                },
            })
            .collect();
        let mut aligned = vec![0u64; m];
        for e in q.edges() {
            for f in q.edges() {
                if q.precedes(e, f) && dag.edge_is_ancestor(e, f) {
                    aligned[e.0] |= 1 << f.0;
                }
            }
        }
        let mut rel = vec![Vec::new(); n];
        let mut rel_slot = vec![vec![None; m]; n];
        for u in q.vertices() {
            let below = dag.subdag_edges_from_vertex(u);
            for e in q.edges() {
                if below.iter().any(|&f| aligned[e.0] >> f.0 & 1 == 1) {
                    rel_slot[u.0][e.0] = Some(rel[u.0].len());
                    rel[u.0].push(e);
                }
            }
        }
        FilterDag {
            orientation,
            dag,
            qlabel,
            qelabel,
            aligned,
            rel,
            rel_slot,
        }
    }

    pub fn dag(&self) -> &QueryDag {
        &self.dag
    }

    pub fn relevant(&self, u: QueryVertexId) -> &[QueryEdgeId] {
        &self.rel[u.0]
    }

    pub fn is_aligned_descendant(&self, e: QueryEdgeId, f: QueryEdgeId) -> bool {
        self.aligned[e.0] >> f.0 & 1 == 1
    }

    pub fn vertex_label_ok(&self, graph: &TemporalGraph, u: QueryVertexId, v: VertexId) -> bool {
        self.qlabel[u.0] == Some(graph.vertex_label(v))
    }

    pub fn elabel_ok(&self, e: QueryEdgeId, have: Option<LabelId>) -> bool {
        match self.qelabel[e.0] {
            ResolvedELabel::Unlabeled => have.is_none(),
            ResolvedELabel::Label(id) => have == Some(id),
            ResolvedELabel::Unmatchable => false,
        }
    }

    /// Valid assignments of data edge `d` to query edge `e`: endpoint
    /// labels, edge label, and (in directed mode) direction compatible.
    pub fn assignments(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        e: QueryEdgeId,
        d: EdgeId,
    ) -> Vec<Assign> {
        let rec = graph.edge(d);
        if rec.src == rec.dst || !self.elabel_ok(e, rec.elabel) {
            return Vec::new();
        }
        let qrec = q.edge(e);
        let mut out = Vec::new();
        for assign in [false, true] {
            if assign && graph.is_directed() {
                continue;
            }
            let (u_img, v_img) = assigned_images(rec.src, rec.dst, assign);
            if self.vertex_label_ok(graph, qrec.u, u_img)
                && self.vertex_label_ok(graph, qrec.v, v_img)
            {
                out.push(assign);
            }
        }
        out
    }

    /// Parent and child images of DAG edge `e` matched to `d` under `assign`.
    pub fn oriented_images(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        e: QueryEdgeId,
        d: EdgeId,
        assign: Assign,
    ) -> (VertexId, VertexId) {
        let rec = graph.edge(d);
        let (u_img, v_img) = assigned_images(rec.src, rec.dst, assign);
        if self.dag.child_endpoint(e) == q.edge(e).v {
            (u_img, v_img)
        } else {
            (v_img, u_img)
        }
    }

    /// Child image of DAG edge `f` when matched to `d` with its parent image
    /// at `parent_img`; None when `d` cannot match there. The parent image's
    /// own vertex label is the caller's concern.
    fn child_image(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        f: QueryEdgeId,
        parent_img: VertexId,
        d: EdgeId,
    ) -> Option<VertexId> {
        let rec = graph.edge(d);
        if rec.src == rec.dst || !self.elabel_ok(f, rec.elabel) {
            return None;
        }
        let other = if rec.src == parent_img {
            rec.dst
        } else if rec.dst == parent_img {
            rec.src
        } else {
            return None;
        };
        if graph.is_directed() {
            let qrec = q.edge(f);
            let (want_src, want_dst) = if qrec.u == self.dag.parent_endpoint(f) {
                (parent_img, other)
            } else {
                (other, parent_img)
            };
            if rec.src != want_src || rec.dst != want_dst {
                return None;
            }
        }
        let child = self.dag.child_endpoint(f);
        if !self.vertex_label_ok(graph, child, other) {
            return None;
        }
        Some(other)
    }
}

pub struct MaxMinTable {
    ctx: FilterDag,
    /// Stored cells for internal query vertices; presence means a weak
    /// embedding of the sub-DAG exists there, and the vector holds the
    /// max-min timestamp per relevant edge. Leaf cells are synthesized.
    cells: HashMap<(QueryVertexId, VertexId), Vec<ExtTimestamp>>,
    /// TC-matchable (query edge, data edge, assignment) triples in this
    /// orientation.
    members: HashSet<(QueryEdgeId, EdgeId, Assign)>,
}

impl MaxMinTable {
    pub fn new(ctx: FilterDag) -> Self {
        MaxMinTable {
            ctx,
            cells: HashMap::new(),
            members: HashSet::new(),
        }
    }

    pub fn ctx(&self) -> &FilterDag {
        &self.ctx
    }

    pub fn members(&self) -> &HashSet<(QueryEdgeId, EdgeId, Assign)> {
        &self.members
    }

    pub fn stored_cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Weak-embedding existence of the sub-DAG below `u` anchored at `v`.
    pub fn exists(&self, graph: &TemporalGraph, u: QueryVertexId, v: VertexId) -> bool {
        if self.ctx.dag.is_leaf(u) {
            self.ctx.vertex_label_ok(graph, u, v)
        } else {
            self.cells.contains_key(&(u, v))
        }
    }

    /// Stored max-min timestamp for `e` of the sub-DAG below `u` at `v`.
    pub fn vertex_value(
        &self,
        graph: &TemporalGraph,
        u: QueryVertexId,
        v: VertexId,
        e: QueryEdgeId,
    ) -> ExtTimestamp {
        if self.ctx.dag.is_leaf(u) {
            return if self.ctx.vertex_label_ok(graph, u, v) {
                ExtTimestamp::PosInf
            } else {
                ExtTimestamp::NegInf
            };
        }
        match self.cells.get(&(u, v)) {
            None => ExtTimestamp::NegInf,
            Some(vals) => match self.ctx.rel_slot[u.0][e.0] {
                Some(slot) => vals[slot],
                None => ExtTimestamp::PosInf,
            },
        }
    }

    /// Max-min timestamp for `e` of the sub-DAG below DAG edge `f` when `f`
    /// is matched to data edge `d` under `assign`.
    pub fn edge_entry(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        f: QueryEdgeId,
        d: EdgeId,
        assign: Assign,
        e: QueryEdgeId,
    ) -> ExtTimestamp {
        let (_, c_img) = self.ctx.oriented_images(graph, q, f, d, assign);
        let child = self.ctx.dag.child_endpoint(f);
        let below = self.vertex_value(graph, child, c_img, e);
        if self.ctx.is_aligned_descendant(e, f) {
            below.min(ExtTimestamp::Finite(graph.edge(d).ts))
        } else {
            below
        }
    }

    /// Direct evaluation of the recurrence for one (u, v, e) entry.
    pub fn recompute_entry(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        u: QueryVertexId,
        v: VertexId,
        e: QueryEdgeId,
    ) -> ExtTimestamp {
        match self.recompute_cell(graph, q, u, v, None) {
            None => ExtTimestamp::NegInf,
            Some(vals) => match self.ctx.rel_slot[u.0][e.0] {
                Some(slot) => vals[slot],
                None => ExtTimestamp::PosInf,
            },
        }
    }

    /// Constant-time membership test: `e` is TC-matchable to `d` under
    /// `assign` iff the data timestamp is below the child-endpoint entry.
    pub fn is_tc_matchable(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        e: QueryEdgeId,
        d: EdgeId,
        assign: Assign,
    ) -> bool {
        let (_, c_img) = self.ctx.oriented_images(graph, q, e, d, assign);
        let child = self.ctx.dag.child_endpoint(e);
        ExtTimestamp::Finite(graph.edge(d).ts) < self.vertex_value(graph, child, c_img, e)
    }

    /// Full recurrence evaluation of cell (u, v); None when no weak
    /// embedding of the sub-DAG below `u` exists at `v`.
    fn recompute_cell(
        &self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        u: QueryVertexId,
        v: VertexId,
        exclude: Option<EdgeId>,
    ) -> Option<Vec<ExtTimestamp>> {
        if !self.ctx.vertex_label_ok(graph, u, v) {
            return None;
        }
        let rel = &self.ctx.rel[u.0];
        if self.ctx.dag.is_leaf(u) {
            return Some(Vec::new());
        }
        let mut acc = vec![ExtTimestamp::PosInf; rel.len()];
        for &(f, child) in self.ctx.dag.children(u) {
            let mut branch_exists = false;
            let mut best = vec![ExtTimestamp::NegInf; rel.len()];
            for d in graph.incident_unordered(v) {
                if Some(d) == exclude {
                    continue;
                }
                let Some(w) = self.ctx.child_image(graph, q, f, v, d) else {
                    continue;
                };
                if !self.exists(graph, child, w) {
                    continue;
                }
                branch_exists = true;
                let ts = ExtTimestamp::Finite(graph.edge(d).ts);
                for (slot, &e) in rel.iter().enumerate() {
                    let below = self.vertex_value(graph, child, w, e);
                    let val = if self.ctx.is_aligned_descendant(e, f) {
                        below.min(ts)
                    } else {
                        below
                    };
                    if val > best[slot] {
                        best[slot] = val;
                    }
                }
            }
            if !branch_exists {
                return None;
            }
            for slot in 0..acc.len() {
                if best[slot] < acc[slot] {
                    acc[slot] = best[slot];
                }
            }
        }
        Some(acc)
    }

    /// All (query edge, data edge, assignment) triples that became
    /// TC-matchable in this orientation because of the arrival of `d`.
    pub fn tcm_insertion(
        &mut self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        d: EdgeId,
    ) -> Vec<(QueryEdgeId, EdgeId, Assign)> {
        self.update(graph, q, d, false)
    }

    /// Triples that stop being TC-matchable because `d` expires. The edge is
    /// still present in the graph; every evaluation excludes it.
    pub fn tcm_deletion(
        &mut self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        d: EdgeId,
    ) -> Vec<(QueryEdgeId, EdgeId, Assign)> {
        self.update(graph, q, d, true)
    }

    fn update(
        &mut self,
        graph: &TemporalGraph,
        q: &TemporalQuery,
        d: EdgeId,
        deletion: bool,
    ) -> Vec<(QueryEdgeId, EdgeId, Assign)> {
        let exclude = if deletion { Some(d) } else { None };
        let mut delta = Vec::new();
        let ts = ExtTimestamp::Finite(graph.edge(d).ts);

        let mut worklist: VecDeque<(QueryVertexId, VertexId)> = VecDeque::new();
        let mut queued: HashSet<(QueryVertexId, VertexId)> = HashSet::new();

        // The arriving or dying edge's own pairs first, tested against the
        // current table, then the parent cells it touches.
        for e in q.edges() {
            for assign in self.ctx.assignments(graph, q, e, d) {
                let (p_img, c_img) = self.ctx.oriented_images(graph, q, e, d, assign);
                let child = self.ctx.dag.child_endpoint(e);
                if deletion {
                    if self.members.remove(&(e, d, assign)) {
                        delta.push((e, d, assign));
                    }
                } else if ts < self.vertex_value(graph, child, c_img, e)
                    && self.members.insert((e, d, assign))
                {
                    delta.push((e, d, assign));
                }
                let parent = self.ctx.dag.parent_endpoint(e);
                if queued.insert((parent, p_img)) {
                    worklist.push_back((parent, p_img));
                }
            }
        }

        while let Some((u, v)) = worklist.pop_front() {
            queued.remove(&(u, v));
            if self.ctx.dag.is_leaf(u) {
                continue;
            }
            let old = self.cells.get(&(u, v)).cloned();
            let new = self.recompute_cell(graph, q, u, v, exclude);
            if new == old {
                continue;
            }

            // Candidate pairs whose membership reads this cell get re-tested;
            // parent cells that read it get recomputed in turn.
            let mut retests: Vec<(QueryEdgeId, EdgeId, Assign, ExtTimestamp)> = Vec::new();
            let mut parents_to_visit: Vec<(QueryVertexId, VertexId)> = Vec::new();
            for &(f, parent_qv) in self.ctx.dag.parents(u) {
                for d2 in graph.incident_unordered(v) {
                    if Some(d2) == exclude {
                        continue;
                    }
                    let rec2 = graph.edge(d2);
                    if rec2.src == rec2.dst {
                        continue;
                    }
                    let w = if rec2.src == v { rec2.dst } else { rec2.src };
                    // v must sit on the child side of f.
                    let child_ok = self
                        .ctx
                        .child_image(graph, q, f, w, d2)
                        .map(|img| img == v)
                        .unwrap_or(false);
                    if !child_ok || !self.ctx.vertex_label_ok(graph, parent_qv, w) {
                        continue;
                    }
                    let assign = if self.ctx.dag.child_endpoint(f) == q.edge(f).v {
                        rec2.dst != v
                    } else {
                        rec2.src != v
                    };
                    retests.push((f, d2, assign, ExtTimestamp::Finite(rec2.ts)));
                    parents_to_visit.push((parent_qv, w));
                }
            }

            for (f, d2, assign, t2) in retests {
                let was = t2 < read_value(&self.ctx, u, &old, f);
                let now = t2 < read_value(&self.ctx, u, &new, f);
                if was == now {
                    continue;
                }
                if now {
                    if self.members.insert((f, d2, assign)) {
                        delta.push((f, d2, assign));
                    }
                } else if self.members.remove(&(f, d2, assign)) {
                    delta.push((f, d2, assign));
                }
            }

            match new {
                Some(vals) => {
                    self.cells.insert((u, v), vals);
                }
                None => {
                    self.cells.remove(&(u, v));
                }
            }
            for key in parents_to_visit {
                if queued.insert(key) {
                    worklist.push_back(key);
                }
            }
        }
        delta
    }

    /// Fresh table built bottom-up over the active graph; the differential
    /// baseline for the incremental path.
    pub fn rebuilt(&self, graph: &TemporalGraph, q: &TemporalQuery) -> MaxMinTable {
        let mut fresh = MaxMinTable::new(self.ctx.clone());
        for &u in self.ctx.dag.topo_order().iter().rev() {
            if self.ctx.dag.is_leaf(u) {
                continue;
            }
            for v in graph.vertex_ids() {
                if let Some(vals) = fresh.recompute_cell(graph, q, u, v, None) {
                    fresh.cells.insert((u, v), vals);
                }
            }
        }
        for d in graph.active_edge_ids() {
            for e in q.edges() {
                for assign in fresh.ctx.assignments(graph, q, e, d) {
                    if fresh.is_tc_matchable(graph, q, e, d, assign) {
                        fresh.members.insert((e, d, assign));
                    }
                }
            }
        }
        fresh
    }

    pub fn state_eq(&self, other: &MaxMinTable) -> bool {
        self.cells == other.cells && self.members == other.members
    }

    /// One line per stored entry: `T <orient> <u> <v> <e> <value>`, sorted.
    pub fn dump(&self, graph: &TemporalGraph, q: &TemporalQuery) -> String {
        let mut lines = Vec::new();
        for (&(u, v), vals) in &self.cells {
            for (slot, &e) in self.ctx.rel[u.0].iter().enumerate() {
                lines.push((
                    q.vertex(u).ext_id,
                    graph.ext_id(v),
                    q.edge(e).ext_id,
                    vals[slot],
                ));
            }
        }
        lines.sort();
        let mut out = String::new();
        for (u, v, e, val) in lines {
            out.push_str(&format!(
                "T {} {} {} {} {}\n",
                self.ctx.orientation.tag(),
                u,
                v,
                e,
                val
            ));
        }
        out
    }
}

fn read_value(
    ctx: &FilterDag,
    u: QueryVertexId,
    cell: &Option<Vec<ExtTimestamp>>,
    e: QueryEdgeId,
) -> ExtTimestamp {
    match cell {
        None => ExtTimestamp::NegInf,
        Some(vals) => match ctx.rel_slot[u.0][e.0] {
            Some(slot) => vals[slot],
            None => ExtTimestamp::PosInf,
        },
    }
}

/// Candidate edge pairs admitted by both orientations under a common
/// endpoint assignment; the matcher's edge-level filter.
#[derive(Debug, Default)]
pub struct CandidateIndex {
    pairs: HashSet<(QueryEdgeId, EdgeId)>,
    peak: usize,
}

impl CandidateIndex {
    pub fn new() -> Self {
        CandidateIndex::default()
    }

    pub fn contains(&self, e: QueryEdgeId, d: EdgeId) -> bool {
        self.pairs.contains(&(e, d))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    /// Reconciles the pair set after both orientations processed one graph
    /// event. Returns the pairs whose index membership flipped, paired with
    /// their new presence.
    pub fn apply_delta(
        &mut self,
        fwd: &MaxMinTable,
        rev: &MaxMinTable,
        fwd_delta: &[(QueryEdgeId, EdgeId, Assign)],
        rev_delta: &[(QueryEdgeId, EdgeId, Assign)],
    ) -> Vec<((QueryEdgeId, EdgeId), bool)> {
        let mut touched: Vec<(QueryEdgeId, EdgeId)> = fwd_delta
            .iter()
            .chain(rev_delta.iter())
            .map(|&(e, d, _)| (e, d))
            .collect();
        touched.sort();
        touched.dedup();
        let mut flips = Vec::new();
        for (e, d) in touched {
            let visible = [false, true].into_iter().any(|assign| {
                fwd.members().contains(&(e, d, assign)) && rev.members().contains(&(e, d, assign))
            });
            let was = self.pairs.contains(&(e, d));
            if visible && !was {
                self.pairs.insert((e, d));
                flips.push(((e, d), true));
            } else if !visible && was {
                self.pairs.remove(&(e, d));
                flips.push(((e, d), false));
            }
        }
        self.peak = self.peak.max(self.pairs.len());
        flips
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, RUNNING_STREAM};
    use crate::oracle;

    fn qv(q: &TemporalQuery, ext: u64) -> QueryVertexId {
        q.vertices().find(|&u| q.vertex(u).ext_id == ext).unwrap()
    }

    fn qe(q: &TemporalQuery, ext: u64) -> QueryEdgeId {
        q.edges().find(|&e| q.edge(e).ext_id == ext).unwrap()
    }

    fn dv(g: &TemporalGraph, ext: u64) -> VertexId {
        g.resolve_vertex(ext).unwrap()
    }

    fn de(g: &TemporalGraph, ts: Timestamp) -> EdgeId {
        g.active_edge_ids().find(|&d| g.edge(d).ts == ts).unwrap()
    }

    /// Active window right before the t=14 arrival: edges 5..=13.
    fn pre_arrival_state() -> (TemporalGraph, TemporalQuery, MaxMinTable, MaxMinTable, CandidateIndex)
    {
        let q = fixtures::running_query();
        let g = fixtures::graph_at(RUNNING_STREAM, Some(13), Some(9));
        let (fwd, rev, index) = fixtures::build_filter_state(&g, &q);
        (g, q, fwd, rev, index)
    }

    #[test]
    fn entry_before_arrival_is_seven() {
        let (g, q, fwd, _, _) = pre_arrival_state();
        let got = fwd.vertex_value(&g, qv(&q, 3), dv(&g, 4), qe(&q, 2));
        assert_eq!(got, ExtTimestamp::Finite(7));
    }

    #[test]
    fn arrival_emits_exactly_the_two_pairs() {
        let (mut g, q, mut fwd, _, _) = pre_arrival_state();
        let s14 = g
            .insert_edge(dv(&g, 4), dv(&g, 7), None, 14)
            .unwrap();
        let delta = fwd.tcm_insertion(&g, &q, s14);
        let mut pairs: Vec<(u64, Timestamp)> = delta
            .iter()
            .map(|&(e, d, _)| (q.edge(e).ext_id, g.edge(d).ts))
            .collect();
        pairs.sort();
        assert_eq!(pairs, vec![(2, 8), (6, 14)]);
        assert_eq!(
            fwd.vertex_value(&g, qv(&q, 3), dv(&g, 4), qe(&q, 2)),
            ExtTimestamp::Finite(10)
        );
    }

    fn post_arrival_state() -> (TemporalGraph, TemporalQuery, MaxMinTable, MaxMinTable, CandidateIndex)
    {
        let q = fixtures::running_query();
        let g = fixtures::graph_at(RUNNING_STREAM, Some(14), Some(10));
        let (fwd, rev, index) = fixtures::build_filter_state(&g, &q);
        (g, q, fwd, rev, index)
    }

    #[test]
    fn recurrence_reproduces_the_entry() {
        let (g, q, fwd, _, _) = post_arrival_state();
        // Child contributions: min(10, 13) through the D-labeled branch and
        // max(min(inf,7), min(inf,14)) = 14 through the E-labeled branch.
        let e2 = qe(&q, 2);
        assert_eq!(
            fwd.vertex_value(&g, qv(&q, 4), dv(&g, 5), e2),
            ExtTimestamp::Finite(10)
        );
        assert_eq!(
            fwd.edge_entry(&g, &q, qe(&q, 4), de(&g, 13), false, e2),
            ExtTimestamp::Finite(10)
        );
        assert_eq!(
            fwd.edge_entry(&g, &q, qe(&q, 6), de(&g, 7), false, e2),
            ExtTimestamp::Finite(7)
        );
        assert_eq!(
            fwd.edge_entry(&g, &q, qe(&q, 6), de(&g, 14), false, e2),
            ExtTimestamp::Finite(14)
        );
        assert_eq!(
            fwd.recompute_entry(&g, &q, qv(&q, 3), dv(&g, 4), e2),
            ExtTimestamp::Finite(10)
        );
    }

    #[test]
    fn membership_test_fixture() {
        let (g, q, fwd, _, _) = post_arrival_state();
        let e2 = qe(&q, 2);
        assert!(fwd.is_tc_matchable(&g, &q, e2, de(&g, 8), false));
        assert!(!fwd.is_tc_matchable(&g, &q, e2, de(&g, 12), false));
        // A leaf child endpoint with a matching label admits any timestamp.
        assert!(fwd.is_tc_matchable(&g, &q, qe(&q, 6), de(&g, 14), false));
    }

    #[test]
    fn leaf_entries_are_synthesized() {
        let (g, q, fwd, _, _) = post_arrival_state();
        let u5 = qv(&q, 5);
        assert!(fwd.exists(&g, u5, dv(&g, 7)));
        assert_eq!(
            fwd.vertex_value(&g, u5, dv(&g, 7), qe(&q, 6)),
            ExtTimestamp::PosInf
        );
        assert_eq!(
            fwd.vertex_value(&g, u5, dv(&g, 1), qe(&q, 6)),
            ExtTimestamp::NegInf
        );
    }

    #[test]
    fn incremental_matches_rebuilt() {
        let (g, q, fwd, rev, _) = post_arrival_state();
        assert!(fwd.state_eq(&fwd.rebuilt(&g, &q)));
        assert!(rev.state_eq(&rev.rebuilt(&g, &q)));
    }

    #[test]
    fn insert_then_delete_restores_table() {
        let (mut g, q, mut fwd, _, _) = pre_arrival_state();
        let before_cells = fwd.dump(&g, &q);
        let before_members: Vec<_> = {
            let mut v: Vec<_> = fwd.members().iter().copied().collect();
            v.sort();
            v
        };
        let s14 = g.insert_edge(dv(&g, 4), dv(&g, 7), None, 14).unwrap();
        let ins = fwd.tcm_insertion(&g, &q, s14);
        let del = fwd.tcm_deletion(&g, &q, s14);
        let mut ins_sorted = ins.clone();
        ins_sorted.sort();
        let mut del_sorted = del;
        del_sorted.sort();
        assert_eq!(ins_sorted, del_sorted);
        assert_eq!(fwd.dump(&g, &q), before_cells);
        let mut after_members: Vec<_> = fwd.members().iter().copied().collect();
        after_members.sort();
        assert_eq!(after_members, before_members);
    }

    #[test]
    fn matchability_agrees_with_weak_embedding_search() {
        let (g, q, fwd, rev, _) = post_arrival_state();
        for table in [&fwd, &rev] {
            for e in q.edges() {
                for d in g.active_edge_ids() {
                    let assigns = table.ctx().assignments(&g, &q, e, d);
                    let table_says = assigns
                        .iter()
                        .any(|&a| table.is_tc_matchable(&g, &q, e, d, a));
                    let oracle_says =
                        oracle::enumerate_tc_weak(&g, &q, table.ctx().dag(), e, d);
                    assert_eq!(
                        table_says,
                        oracle_says,
                        "edge {} data ts {} orientation {:?}",
                        q.edge(e).ext_id,
                        g.edge(d).ts,
                        table.ctx().orientation
                    );
                }
            }
        }
    }

    #[test]
    fn index_requires_both_orientations() {
        let (g, q, fwd, rev, index) = post_arrival_state();
        for e in q.edges() {
            for d in g.active_edge_ids() {
                let expect = [false, true].into_iter().any(|a| {
                    fwd.members().contains(&(e, d, a)) && rev.members().contains(&(e, d, a))
                });
                assert_eq!(index.contains(e, d), expect);
            }
        }
        // The non-matchable pair stays out.
        assert!(!index.contains(qe(&q, 2), de(&g, 12)));
        assert!(index.contains(qe(&q, 2), de(&g, 8)));
    }

    #[test]
    fn unmatched_label_arrival_is_inert() {
        let (mut g, q, mut fwd, _, _) = pre_arrival_state();
        let before = fwd.dump(&g, &q);
        // v6 has label E, v2 label B: a B-E edge matches no query edge.
        let d = g.insert_edge(dv(&g, 2), dv(&g, 6), None, 14).unwrap();
        let delta = fwd.tcm_insertion(&g, &q, d);
        assert!(delta.is_empty());
        assert_eq!(fwd.dump(&g, &q), before);
    }
}
