//! Rooted acyclic orientations of the query graph.
//!
//! The builder greedily picks the next vertex whose placement realizes the
//! most new temporal ancestor-descendant pairs. Pairs are counted over the
//! provisional DAG in which every edge with at least one placed endpoint is
//! oriented away from its first-placed endpoint, so a pair is credited to the
//! placement that fixes the descendant edge's orientation.

use crate::query::{QueryEdgeId, QueryError, QueryVertexId, TemporalQuery};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct QueryDag {
    /// Per query edge, its orientation as (parent endpoint, child endpoint).
    orient: Vec<(QueryVertexId, QueryVertexId)>,
    /// Per vertex, outgoing (edge, child) pairs ascending by edge id.
    children: Vec<Vec<(QueryEdgeId, QueryVertexId)>>,
    /// Per vertex, incoming (edge, parent) pairs ascending by edge id.
    parents: Vec<Vec<(QueryEdgeId, QueryVertexId)>>,
    /// Vertices with no incoming edges. A built DAG has exactly one; the
    /// reverse of a DAG with several leaves lists them all, standing under an
    /// implicit super-root that contributes no edges.
    roots: Vec<QueryVertexId>,
    /// Topological order (the insertion order for built DAGs).
    topo: Vec<QueryVertexId>,
    /// Score of each vertex at the moment it was popped, aligned with `topo`.
    /// Empty for reversed DAGs.
    pop_scores: Vec<usize>,
    score: usize,
    ta_pairs: BTreeSet<(QueryEdgeId, QueryEdgeId)>,
}

impl QueryDag {
    pub fn parent_endpoint(&self, e: QueryEdgeId) -> QueryVertexId {
        self.orient[e.0].0
    }

    pub fn child_endpoint(&self, e: QueryEdgeId) -> QueryVertexId {
        self.orient[e.0].1
    }

    pub fn children(&self, u: QueryVertexId) -> &[(QueryEdgeId, QueryVertexId)] {
        &self.children[u.0]
    }

    pub fn parents(&self, u: QueryVertexId) -> &[(QueryEdgeId, QueryVertexId)] {
        &self.parents[u.0]
    }

    pub fn roots(&self) -> &[QueryVertexId] {
        &self.roots
    }

    pub fn topo_order(&self) -> &[QueryVertexId] {
        &self.topo
    }

    pub fn pop_scores(&self) -> &[usize] {
        &self.pop_scores
    }

    pub fn score(&self) -> usize {
        self.score
    }

    pub fn ta_pairs(&self) -> &BTreeSet<(QueryEdgeId, QueryEdgeId)> {
        &self.ta_pairs
    }

    pub fn is_leaf(&self, u: QueryVertexId) -> bool {
        self.children[u.0].is_empty()
    }

    /// True when `anc`'s child endpoint reaches `desc`'s parent endpoint
    /// (or equals it), i.e. `anc` is an ancestor edge of `desc`.
    pub fn edge_is_ancestor(&self, anc: QueryEdgeId, desc: QueryEdgeId) -> bool {
        if anc == desc {
            return false;
        }
        let from = self.child_endpoint(anc);
        let to = self.parent_endpoint(desc);
        from == to || self.vertex_reaches(from, to)
    }

    fn vertex_reaches(&self, from: QueryVertexId, to: QueryVertexId) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.children.len()];
        seen[from.0] = true;
        while let Some(u) = stack.pop() {
            for &(_, c) in &self.children[u.0] {
                if c == to {
                    return true;
                }
                if !seen[c.0] {
                    seen[c.0] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Edge set of the sub-DAG starting at `u`: edges of all paths from `u`.
    pub fn subdag_edges_from_vertex(&self, u: QueryVertexId) -> BTreeSet<QueryEdgeId> {
        let mut edges = BTreeSet::new();
        let mut stack = vec![u];
        let mut seen = vec![false; self.children.len()];
        seen[u.0] = true;
        while let Some(x) = stack.pop() {
            for &(e, c) in &self.children[x.0] {
                edges.insert(e);
                if !seen[c.0] {
                    seen[c.0] = true;
                    stack.push(c);
                }
            }
        }
        edges
    }

    /// Edge set of the sub-DAG starting at edge `e`.
    pub fn subdag_edges_from_edge(&self, e: QueryEdgeId) -> BTreeSet<QueryEdgeId> {
        let mut edges = self.subdag_edges_from_vertex(self.child_endpoint(e));
        edges.insert(e);
        edges
    }

    /// All ordered pairs (e1, e2) where e1 is an ancestor edge of e2 and the
    /// two are temporally related, recomputed from scratch by reachability.
    pub fn compute_ta_pairs(&self, q: &TemporalQuery) -> BTreeSet<(QueryEdgeId, QueryEdgeId)> {
        let mut pairs = BTreeSet::new();
        for e1 in q.edges() {
            for e2 in q.edges() {
                if q.temporally_related(e1, e2) && self.edge_is_ancestor(e1, e2) {
                    pairs.insert((e1, e2));
                }
            }
        }
        pairs
    }

    /// Reversal: every orientation flipped, ancestor pairs recomputed.
    pub fn reverse(&self, q: &TemporalQuery) -> QueryDag {
        let n = self.children.len();
        let orient: Vec<_> = self.orient.iter().map(|&(p, c)| (c, p)).collect();
        let mut dag = QueryDag {
            orient,
            children: vec![Vec::new(); n],
            parents: vec![Vec::new(); n],
            roots: Vec::new(),
            topo: self.topo.iter().rev().copied().collect(),
            pop_scores: Vec::new(),
            score: 0,
            ta_pairs: BTreeSet::new(),
        };
        for (i, &(p, c)) in dag.orient.iter().enumerate() {
            dag.children[p.0].push((QueryEdgeId(i), c));
            dag.parents[c.0].push((QueryEdgeId(i), p));
        }
        for u in 0..n {
            if dag.parents[u].is_empty() {
                dag.roots.push(QueryVertexId(u));
            }
        }
        dag.ta_pairs = dag.compute_ta_pairs(q);
        dag.score = dag.ta_pairs.len();
        dag
    }
}

/// Oriented view of the query while a DAG is under construction. Edges with
/// both endpoints placed point from the earlier placement; edges with one
/// placed endpoint point toward the unplaced side.
struct Provisional<'a> {
    q: &'a TemporalQuery,
    /// Placement position per vertex, usize::MAX when unplaced.
    pos: Vec<usize>,
}

impl<'a> Provisional<'a> {
    fn orientation(&self, e: QueryEdgeId) -> Option<(QueryVertexId, QueryVertexId)> {
        let rec = self.q.edge(e);
        let (pu, pv) = (self.pos[rec.u.0], self.pos[rec.v.0]);
        match (pu != usize::MAX, pv != usize::MAX) {
            (true, true) => {
                if pu < pv {
                    Some((rec.u, rec.v))
                } else {
                    Some((rec.v, rec.u))
                }
            }
            (true, false) => Some((rec.u, rec.v)),
            (false, true) => Some((rec.v, rec.u)),
            (false, false) => None,
        }
    }

    /// Number of temporally related ordered pairs in ancestor-descendant
    /// position under the current provisional orientation.
    fn ta_count(&self) -> usize {
        let m = self.q.edge_count();
        let orient: Vec<_> = (0..m).map(|i| self.orientation(QueryEdgeId(i))).collect();
        let n = self.q.vertex_count();
        // reach[a] = bitset of vertices reachable from a via oriented edges
        let mut adj = vec![0u64; n];
        for o in orient.iter().flatten() {
            adj[o.0 .0] |= 1 << o.1 .0;
        }
        let mut reach = adj.clone();
        loop {
            let mut changed = false;
            for a in 0..n {
                let mut acc = reach[a];
                let mut bits = reach[a];
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    acc |= reach[b];
                }
                if acc != reach[a] {
                    reach[a] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut count = 0;
        for e1 in 0..m {
            let Some((_, c1)) = orient[e1] else { continue };
            for (e2, o2) in orient.iter().enumerate() {
                if e1 == e2 {
                    continue;
                }
                let Some((p2, _)) = *o2 else { continue };
                if !self.q.temporally_related(QueryEdgeId(e1), QueryEdgeId(e2)) {
                    continue;
                }
                if c1 == p2 || reach[c1.0] >> p2.0 & 1 == 1 {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Score a hypothetical next placement: how many new temporally related
/// ordered pairs enter the ancestor-descendant relation of the provisional
/// DAG if `u` is placed after `placed`.
pub fn placement_score(q: &TemporalQuery, placed: &[QueryVertexId], u: QueryVertexId) -> usize {
    let mut prov = Provisional {
        q,
        pos: vec![usize::MAX; q.vertex_count()],
    };
    for (i, &p) in placed.iter().enumerate() {
        prov.pos[p.0] = i;
    }
    let base = prov.ta_count();
    prov.pos[u.0] = placed.len();
    prov.ta_count() - base
}

/// Greedy construction rooted at `r`. Returns the DAG and its score, the
/// total number of temporal ancestor-descendant pairs it realizes.
pub fn build_dag(q: &TemporalQuery, r: QueryVertexId) -> Result<QueryDag, QueryError> {
    let n = q.vertex_count();
    let mut prov = Provisional {
        q,
        pos: vec![usize::MAX; n],
    };
    // cand entries: (vertex, insertion index)
    let mut cand: Vec<(QueryVertexId, usize)> = vec![(r, 0)];
    let mut insertions = 1usize;
    let mut in_cand = vec![false; n];
    in_cand[r.0] = true;
    let mut placed: Vec<QueryVertexId> = Vec::new();
    let mut pop_scores: Vec<usize> = Vec::new();
    let mut base = 0usize;

    while !cand.is_empty() {
        // Scores are recomputed for every pending candidate each round.
        let mut best: Option<(usize, usize, usize)> = None; // (score, ins, slot)
        for (slot, &(u, ins)) in cand.iter().enumerate() {
            prov.pos[u.0] = placed.len();
            let score = prov.ta_count() - base;
            prov.pos[u.0] = usize::MAX;
            let better = match best {
                None => true,
                Some((bs, bi, _)) => score > bs || (score == bs && ins < bi),
            };
            if better {
                best = Some((score, ins, slot));
            }
        }
        let (score, _, slot) = best.expect("cand nonempty");
        let (u, _) = cand.swap_remove(slot);
        prov.pos[u.0] = placed.len();
        placed.push(u);
        pop_scores.push(score);
        base = prov.ta_count();
        for e in q.incident_edges(u) {
            let other = q.other_endpoint(e, u);
            if prov.pos[other.0] == usize::MAX && !in_cand[other.0] {
                in_cand[other.0] = true;
                cand.push((other, insertions));
                insertions += 1;
            }
        }
    }

    if placed.len() != n {
        return Err(QueryError::Disconnected);
    }

    let total = pop_scores.iter().sum();
    let mut dag = QueryDag {
        orient: Vec::with_capacity(q.edge_count()),
        children: vec![Vec::new(); n],
        parents: vec![Vec::new(); n],
        roots: vec![r],
        topo: placed,
        pop_scores,
        score: total,
        ta_pairs: BTreeSet::new(),
    };
    for i in 0..q.edge_count() {
        let o = prov.orientation(QueryEdgeId(i)).expect("all placed");
        dag.orient.push(o);
        dag.children[o.0 .0].push((QueryEdgeId(i), o.1));
        dag.parents[o.1 .0].push((QueryEdgeId(i), o.0));
    }
    dag.ta_pairs = dag.compute_ta_pairs(q);
    debug_assert_eq!(dag.score, dag.ta_pairs.len());
    Ok(dag)
}

/// Builds one DAG per root and keeps the highest score, ties to the
/// smallest root id.
pub fn best_dag(q: &TemporalQuery) -> Result<QueryDag, QueryError> {
    let mut best: Option<QueryDag> = None;
    for r in q.vertices() {
        let dag = build_dag(q, r)?;
        let better = match &best {
            None => true,
            Some(b) => dag.score > b.score,
        };
        if better {
            best = Some(dag);
        }
    }
    best.ok_or(QueryError::NoEdges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{QueryEdge, QueryVertex};

    fn qe(i: usize) -> QueryEdgeId {
        QueryEdgeId(i)
    }
    fn qv(i: usize) -> QueryVertexId {
        QueryVertexId(i)
    }

    /// The six-edge query used throughout: u1..u5 (here 0..4), edges
    /// e0=(u0,u1) e1=(u0,u2) e2=(u1,u3) e3=(u2,u3) e4=(u3,u4) e5=(u2,u4),
    /// order e0<e2, e0<e4, e1<e3, e1<e4, e1<e5.
    pub fn running_query() -> TemporalQuery {
        let vertices = ["A", "B", "C", "D", "E"]
            .iter()
            .enumerate()
            .map(|(i, l)| QueryVertex {
                ext_id: i as u64 + 1,
                label: l.to_string(),
            })
            .collect();
        let ends = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (2, 4)];
        let edges = ends
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| QueryEdge {
                ext_id: i as u64 + 1,
                u: qv(u),
                v: qv(v),
                elabel: None,
            })
            .collect();
        let order = vec![
            (qe(0), qe(2)),
            (qe(0), qe(4)),
            (qe(1), qe(3)),
            (qe(1), qe(4)),
            (qe(1), qe(5)),
        ];
        TemporalQuery::new(vertices, edges, order).unwrap()
    }

    #[test]
    fn running_query_scores() {
        let q = running_query();
        let dag = build_dag(&q, qv(0)).unwrap();
        assert_eq!(dag.score(), 5);
        assert_eq!(dag.roots(), &[qv(0)]);
        // Placement order: root, then the score-2 vertex u2, then u1 (1),
        // u3 (2), u4 (0).
        assert_eq!(dag.topo_order(), &[qv(0), qv(2), qv(1), qv(3), qv(4)]);
        // Orientations match the placement order.
        assert_eq!(dag.parent_endpoint(qe(1)), qv(0));
        assert_eq!(dag.child_endpoint(qe(1)), qv(2));
        assert_eq!(dag.parent_endpoint(qe(2)), qv(1));
        assert_eq!(dag.child_endpoint(qe(2)), qv(3));
    }

    #[test]
    fn running_query_subdags() {
        let q = running_query();
        let dag = build_dag(&q, qv(0)).unwrap();
        // Sub-DAG below u2 holds e3, e4, e5; below edge e1 also e1 itself.
        assert_eq!(
            dag.subdag_edges_from_vertex(qv(2)),
            [qe(3), qe(4), qe(5)].into_iter().collect()
        );
        assert_eq!(
            dag.subdag_edges_from_edge(qe(1)),
            [qe(1), qe(3), qe(4), qe(5)].into_iter().collect()
        );
    }

    #[test]
    fn best_dag_running_query() {
        let q = running_query();
        let dag = best_dag(&q).unwrap();
        assert_eq!(dag.score(), 5);
        assert!(best_dag(&q).unwrap().score() >= build_dag(&q, qv(3)).unwrap().score());
    }

    #[test]
    fn empty_order_scores_zero() {
        let vertices = (0..3)
            .map(|i| QueryVertex {
                ext_id: i,
                label: "A".into(),
            })
            .collect();
        let edges = vec![
            QueryEdge { ext_id: 0, u: qv(0), v: qv(1), elabel: None },
            QueryEdge { ext_id: 1, u: qv(1), v: qv(2), elabel: None },
        ];
        let q = TemporalQuery::new(vertices, edges, vec![]).unwrap();
        for r in q.vertices() {
            assert_eq!(build_dag(&q, r).unwrap().score(), 0);
        }
        // Tie on score 0: the smallest root id wins.
        assert_eq!(best_dag(&q).unwrap().roots(), &[qv(0)]);
    }

    #[test]
    fn single_edge_query() {
        let vertices = vec![
            QueryVertex { ext_id: 0, label: "A".into() },
            QueryVertex { ext_id: 1, label: "B".into() },
        ];
        let edges = vec![QueryEdge { ext_id: 0, u: qv(0), v: qv(1), elabel: None }];
        let q = TemporalQuery::new(vertices, edges, vec![]).unwrap();
        let dag = best_dag(&q).unwrap();
        assert_eq!(dag.score(), 0);
        let rev = dag.reverse(&q);
        assert_eq!(rev.parent_endpoint(qe(0)), dag.child_endpoint(qe(0)));
    }

    #[test]
    fn reverse_is_involutive() {
        let q = running_query();
        let dag = best_dag(&q).unwrap();
        let back = dag.reverse(&q).reverse(&q);
        for e in q.edges() {
            assert_eq!(back.parent_endpoint(e), dag.parent_endpoint(e));
        }
        assert_eq!(back.ta_pairs(), dag.ta_pairs());
    }

    #[test]
    fn reverse_flips_e4() {
        let q = running_query();
        let dag = build_dag(&q, qv(0)).unwrap();
        let rev = dag.reverse(&q);
        assert_eq!(rev.parent_endpoint(qe(4)), dag.child_endpoint(qe(4)));
        assert_eq!(rev.child_endpoint(qe(4)), dag.parent_endpoint(qe(4)));
        // Single leaf in the forward DAG, so the reverse has one root.
        assert_eq!(rev.roots(), &[qv(4)]);
    }

    #[test]
    fn score_equals_pair_count_everywhere() {
        let q = running_query();
        for r in q.vertices() {
            let dag = build_dag(&q, r).unwrap();
            assert_eq!(dag.score(), dag.compute_ta_pairs(&q).len());
        }
    }

    #[test]
    fn ancestor_pairs_of_the_running_dag() {
        let q = running_query();
        let dag = build_dag(&q, qv(0)).unwrap();
        // e1 (0-based index 1) sits above e3, e4, e5 and is related to all.
        for desc in [3, 4, 5] {
            assert!(dag.ta_pairs().contains(&(qe(1), qe(desc))));
        }
        assert!(dag.ta_pairs().contains(&(qe(0), qe(2))));
        assert!(dag.ta_pairs().contains(&(qe(0), qe(4))));
        // Precedence queries behind the pairs.
        assert!(q.precedes(qe(1), qe(4)));
        assert!(!q.precedes(qe(4), qe(1)));
        assert_eq!(q.density_ratio().unwrap(), (5, 15));
    }

    #[test]
    fn acyclic_by_topological_positions() {
        let q = running_query();
        let dag = best_dag(&q).unwrap();
        let mut pos = vec![0; q.vertex_count()];
        for (i, &u) in dag.topo_order().iter().enumerate() {
            pos[u.0] = i;
        }
        for e in q.edges() {
            assert!(pos[dag.parent_endpoint(e).0] < pos[dag.child_endpoint(e).0]);
        }
    }
}
