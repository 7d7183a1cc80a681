//! Backtracking enumeration of time-constrained embeddings that contain a
//! designated data edge.
//!
//! The search maps whole edges, not just vertices: parallel data edges
//! differ by timestamp, so which one a query edge takes matters. Three
//! pruning rules cut parallel-edge candidates, keyed by the unmapped
//! temporally related edges of the edge being matched:
//!
//! * none remain: explore one representative candidate and emit the other
//!   candidates' embeddings by substitution;
//! * all related the same way: explore candidates chronologically (or in
//!   reverse) and stop at the first failure;
//! * mixed: track temporal failing sets and drop the remaining candidates
//!   when a failed subtree did not involve the edge at all.
//!
//! Failing sets extend the plain definition with the query edges whose
//! mapped images were excluded from a candidate list for injectivity:
//! remapping such an edge frees its image, so a failure that leaned on the
//! exclusion is not independent of it. Without this the search can miss
//! embeddings through parallel query edges. Representative-collapsing and
//! failure skips likewise exempt candidates that an unmapped parallel query
//! edge could claim.

use crate::filter::{CandidateIndex, MaxMinTable};
use crate::graph::{EdgeId, TemporalGraph, VertexId};
use crate::query::{QueryEdgeId, QueryVertexId, TemporalQuery};
use std::collections::HashSet;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Occurred,
    Expired,
}

/// A complete vertex and edge mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Embedding {
    pub vmap: Vec<VertexId>,
    pub emap: Vec<EdgeId>,
}

#[derive(Debug, Clone)]
pub struct MatchOptions {
    pub limit: Option<u64>,
    pub prune: bool,
    pub filter: bool,
    pub deadline: Option<Instant>,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            limit: None,
            prune: true,
            filter: true,
            deadline: None,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MatchStats {
    pub nodes_visited: u64,
    pub emitted: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abort {
    Limit,
    Deadline,
}

/// Set of query edges implicated in a failed subtree. `Full` disables
/// pruning along the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailingSet {
    Full,
    Edges(u64),
}

impl FailingSet {
    pub fn empty() -> Self {
        FailingSet::Edges(0)
    }

    pub fn insert(&mut self, e: QueryEdgeId) {
        if let FailingSet::Edges(bits) = self {
            *bits |= 1 << e.0;
        }
    }

    pub fn union(&mut self, other: &FailingSet) {
        match (self as &FailingSet, other) {
            (_, FailingSet::Full) => *self = FailingSet::Full,
            (FailingSet::Edges(a), FailingSet::Edges(b)) => *self = FailingSet::Edges(a | b),
            (FailingSet::Full, _) => {}
        }
    }

    pub fn contains(&self, e: QueryEdgeId) -> bool {
        match self {
            FailingSet::Full => true,
            FailingSet::Edges(bits) => bits >> e.0 & 1 == 1,
        }
    }
}

/// Failing-set combination over a node's failed children. With no children
/// (an empty candidate list) the result is just `r_plus`; when some child's
/// failure did not involve the edge it mapped, that child's set alone
/// explains the node's failure; otherwise the union does. `Full` absorbs.
pub fn combine_failing_sets(
    children: &[(QueryEdgeId, FailingSet)],
    r_plus: &[QueryEdgeId],
) -> FailingSet {
    let mut result = match children
        .iter()
        .find(|(e, tf)| !tf.contains(*e))
    {
        Some((_, tf)) => *tf,
        None => {
            let mut acc = FailingSet::empty();
            for (_, tf) in children {
                acc.union(tf);
            }
            acc
        }
    };
    for &e in r_plus {
        result.insert(e);
    }
    result
}

/// A partial, injective, endpoint-consistent mapping under construction.
#[derive(Debug, Clone)]
pub struct PartialEmbedding {
    vmap: Vec<Option<VertexId>>,
    emap: Vec<Option<EdgeId>>,
    used_v: HashSet<VertexId>,
    used_e: HashSet<EdgeId>,
    edges_mapped: usize,
}

impl PartialEmbedding {
    pub fn new(q: &TemporalQuery) -> Self {
        PartialEmbedding {
            vmap: vec![None; q.vertex_count()],
            emap: vec![None; q.edge_count()],
            used_v: HashSet::new(),
            used_e: HashSet::new(),
            edges_mapped: 0,
        }
    }

    /// Test helper: build a partial embedding from explicit pairs.
    pub fn from_pairs(
        q: &TemporalQuery,
        vertices: &[(QueryVertexId, VertexId)],
        edges: &[(QueryEdgeId, EdgeId)],
    ) -> Self {
        let mut m = PartialEmbedding::new(q);
        for &(u, v) in vertices {
            m.map_vertex(u, v);
        }
        for &(e, d) in edges {
            m.map_edge(e, d);
        }
        m
    }

    pub fn vertex(&self, u: QueryVertexId) -> Option<VertexId> {
        self.vmap[u.0]
    }

    pub fn edge(&self, e: QueryEdgeId) -> Option<EdgeId> {
        self.emap[e.0]
    }

    pub fn vertex_used(&self, v: VertexId) -> bool {
        self.used_v.contains(&v)
    }

    pub fn edge_used(&self, d: EdgeId) -> bool {
        self.used_e.contains(&d)
    }

    pub fn map_vertex(&mut self, u: QueryVertexId, v: VertexId) {
        debug_assert!(self.vmap[u.0].is_none() && !self.used_v.contains(&v));
        self.vmap[u.0] = Some(v);
        self.used_v.insert(v);
    }

    pub fn unmap_vertex(&mut self, u: QueryVertexId) {
        let v = self.vmap[u.0].take().expect("vertex mapped");
        self.used_v.remove(&v);
    }

    pub fn map_edge(&mut self, e: QueryEdgeId, d: EdgeId) {
        debug_assert!(self.emap[e.0].is_none() && !self.used_e.contains(&d));
        self.emap[e.0] = Some(d);
        self.used_e.insert(d);
        self.edges_mapped += 1;
    }

    pub fn unmap_edge(&mut self, e: QueryEdgeId) {
        let d = self.emap[e.0].take().expect("edge mapped");
        self.used_e.remove(&d);
        self.edges_mapped -= 1;
    }

    pub fn is_complete(&self, q: &TemporalQuery) -> bool {
        self.edges_mapped == q.edge_count()
    }
}

/// Mapped/unmapped split of the edges temporally related to `e`.
pub fn compute_r(
    q: &TemporalQuery,
    m: &PartialEmbedding,
    e: QueryEdgeId,
) -> (Vec<QueryEdgeId>, Vec<QueryEdgeId>) {
    let mut r_plus = Vec::new();
    let mut r_minus = Vec::new();
    for &other in q.related_edges(e) {
        if m.edge(other).is_some() {
            r_plus.push(other);
        } else {
            r_minus.push(other);
        }
    }
    (r_plus, r_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RClass {
    /// No unmapped related edges: candidates are interchangeable.
    Free,
    /// e precedes every unmapped related edge.
    AllAfterSelf,
    /// Every unmapped related edge precedes e.
    AllBeforeSelf,
    Mixed,
}

pub enum Extension {
    Edge(QueryEdgeId),
    Vertex(QueryVertexId, Vec<VertexId>),
}

struct SubCtx {
    e: QueryEdgeId,
    alternatives: Vec<EdgeId>,
}

pub struct Matcher<'a> {
    pub graph: &'a TemporalGraph,
    pub q: &'a TemporalQuery,
    pub fwd: &'a MaxMinTable,
    pub rev: &'a MaxMinTable,
    pub index: &'a CandidateIndex,
    pub opts: MatchOptions,
}

type Sink<'s> = dyn FnMut(&Embedding, Polarity) + 's;

/// Mutable state threaded through one seeded search.
struct Search<'a, 'b> {
    subs: Vec<SubCtx>,
    polarity: Polarity,
    stats: &'a mut MatchStats,
    sink: &'a mut Sink<'b>,
}

enum Outcome {
    Found,
    Failed(FailingSet),
}

impl<'a> Matcher<'a> {
    /// Reports every time-constrained embedding whose edge map contains
    /// `seed`, each exactly once.
    pub fn find_matches(
        &self,
        seed: EdgeId,
        polarity: Polarity,
        stats: &mut MatchStats,
        sink: &mut Sink<'_>,
    ) -> Result<(), Abort> {
        let mut run = Search {
            subs: Vec::new(),
            polarity,
            stats,
            sink,
        };
        for e in self.q.edges() {
            if self.opts.filter && !self.index.contains(e, seed) {
                continue;
            }
            for assign in self.fwd.ctx().assignments(self.graph, self.q, e, seed) {
                let rec = self.graph.edge(seed);
                let (u_img, v_img) = if assign {
                    (rec.dst, rec.src)
                } else {
                    (rec.src, rec.dst)
                };
                let qrec = self.q.edge(e);
                if u_img == v_img {
                    continue;
                }
                let mut m = PartialEmbedding::new(self.q);
                m.map_vertex(qrec.u, u_img);
                m.map_vertex(qrec.v, v_img);
                m.map_edge(e, seed);
                self.extend(&mut m, Some(e), &mut run)?;
            }
        }
        Ok(())
    }

    fn extend(
        &self,
        m: &mut PartialEmbedding,
        last_edge: Option<QueryEdgeId>,
        run: &mut Search<'_, '_>,
    ) -> Result<Outcome, Abort> {
        run.stats.nodes_visited += 1;
        if run.stats.nodes_visited & 1023 == 0 {
            if let Some(deadline) = self.opts.deadline {
                if Instant::now() >= deadline {
                    return Err(Abort::Deadline);
                }
            }
        }
        if m.is_complete(self.q) {
            self.emit_with_substitutions(m, run)?;
            return Ok(Outcome::Found);
        }
        let outcome = match self.next_extension(m) {
            Extension::Edge(e) => self.attempt_edge(m, e, run)?,
            Extension::Vertex(u, cands) => self.attempt_vertex(m, u, cands, run)?,
        };
        match outcome {
            Outcome::Found => Ok(Outcome::Found),
            Outcome::Failed(mut tf) => {
                // The node's own constrained edge joins its failing set.
                if let Some(le) = last_edge {
                    for &other in self.q.related_edges(le) {
                        if m.edge(other).is_some() {
                            tf.insert(other);
                        }
                    }
                }
                Ok(Outcome::Failed(tf))
            }
        }
    }

    /// Smallest-id unmapped query edge with both endpoints mapped, else the
    /// frontier vertex with the fewest candidates (ties to the smallest id).
    pub fn next_extension(&self, m: &PartialEmbedding) -> Extension {
        for e in self.q.edges() {
            let rec = self.q.edge(e);
            if m.edge(e).is_none()
                && m.vertex(rec.u).is_some()
                && m.vertex(rec.v).is_some()
            {
                return Extension::Edge(e);
            }
        }
        let mut best: Option<(usize, QueryVertexId, Vec<VertexId>)> = None;
        for u in self.q.vertices() {
            if m.vertex(u).is_some() {
                continue;
            }
            let has_mapped_neighbor = self
                .q
                .incident_edges(u)
                .iter()
                .any(|&f| m.vertex(self.q.other_endpoint(f, u)).is_some());
            if !has_mapped_neighbor {
                continue;
            }
            let cands = self.candidate_vertices(m, u);
            let better = match &best {
                None => true,
                Some((n, bu, _)) => cands.len() < *n || (cands.len() == *n && u < *bu),
            };
            if better {
                best = Some((cands.len(), u, cands));
            }
        }
        let (_, u, cands) = best.expect("connected query leaves a frontier");
        Extension::Vertex(u, cands)
    }

    /// Candidate images for an unmapped query vertex adjacent to the mapped
    /// region: label match, weak-embedding existence in both orientations,
    /// unused, and per mapped neighbor at least one admissible data edge.
    pub fn candidate_vertices(&self, m: &PartialEmbedding, u: QueryVertexId) -> Vec<VertexId> {
        let mapped_nbrs: Vec<(QueryEdgeId, VertexId)> = self
            .q
            .incident_edges(u)
            .into_iter()
            .filter_map(|f| {
                m.vertex(self.q.other_endpoint(f, u)).map(|w| (f, w))
            })
            .collect();
        let (anchor_f, anchor_w) = mapped_nbrs[0];
        let mut cands: Vec<VertexId> = Vec::new();
        for d in self.graph.incident_unordered(anchor_w) {
            let Some(v) = self.admissible_neighbor(anchor_f, u, anchor_w, d) else {
                continue;
            };
            if m.vertex_used(v) || cands.contains(&v) {
                continue;
            }
            if self.opts.filter
                && !(self.fwd.exists(self.graph, u, v) && self.rev.exists(self.graph, u, v))
            {
                continue;
            }
            let all_connected = mapped_nbrs.iter().skip(1).all(|&(f, w)| {
                self.graph
                    .incident_unordered(w)
                    .any(|d2| self.admissible_neighbor(f, u, w, d2) == Some(v))
            });
            if all_connected {
                cands.push(v);
            }
        }
        cands.sort();
        cands
    }

    /// Image of `u` when data edge `d` at `w` matches query edge `f`
    /// (f joins `u` to a query vertex whose image is `w`).
    fn admissible_neighbor(
        &self,
        f: QueryEdgeId,
        u: QueryVertexId,
        w: VertexId,
        d: EdgeId,
    ) -> Option<VertexId> {
        let rec = self.graph.edge(d);
        if rec.src == rec.dst {
            return None;
        }
        let ctx = self.fwd.ctx();
        if !ctx.elabel_ok(f, rec.elabel) {
            return None;
        }
        let v = if rec.src == w {
            rec.dst
        } else if rec.dst == w {
            rec.src
        } else {
            return None;
        };
        if self.graph.is_directed() {
            let qrec = self.q.edge(f);
            let (want_src, want_dst) = if qrec.u == u { (v, w) } else { (w, v) };
            if rec.src != want_src || rec.dst != want_dst {
                return None;
            }
        }
        if !ctx.vertex_label_ok(self.graph, u, v) {
            return None;
        }
        if self.opts.filter && !self.index.contains(f, d) {
            return None;
        }
        Some(v)
    }

    /// Candidate data edges for `e` under `m` in chronological order, plus
    /// the query edges whose mapped images were excluded for injectivity.
    pub fn compute_ec(
        &self,
        m: &PartialEmbedding,
        e: QueryEdgeId,
    ) -> (Vec<EdgeId>, FailingSet) {
        let qrec = self.q.edge(e);
        let x = m.vertex(qrec.u).expect("endpoint mapped");
        let y = m.vertex(qrec.v).expect("endpoint mapped");
        let mut culprits = FailingSet::empty();
        let mut out = Vec::new();
        let ctx = self.fwd.ctx();
        for d in self.graph.edges_between(x, y, None, None, None) {
            let rec = self.graph.edge(d);
            if !ctx.elabel_ok(e, rec.elabel) {
                continue;
            }
            if self.opts.filter && !self.index.contains(e, d) {
                continue;
            }
            let mut temporal_ok = true;
            for &other in self.q.related_edges(e) {
                if let Some(dother) = m.edge(other) {
                    let to = self.graph.edge(dother).ts;
                    let ok = if self.q.precedes(e, other) {
                        rec.ts < to
                    } else {
                        rec.ts > to
                    };
                    if !ok {
                        temporal_ok = false;
                        break;
                    }
                }
            }
            if !temporal_ok {
                continue;
            }
            if m.edge_used(d) {
                for other in self.q.edges() {
                    if m.edge(other) == Some(d) {
                        culprits.insert(other);
                    }
                }
                continue;
            }
            out.push(d);
        }
        (out, culprits)
    }

    fn classify(&self, m: &PartialEmbedding, e: QueryEdgeId) -> RClass {
        let mut any_after = false;
        let mut any_before = false;
        for &other in self.q.related_edges(e) {
            if m.edge(other).is_none() {
                if self.q.precedes(e, other) {
                    any_after = true;
                } else {
                    any_before = true;
                }
            }
        }
        match (any_after, any_before) {
            (false, false) => RClass::Free,
            (true, false) => RClass::AllAfterSelf,
            (false, true) => RClass::AllBeforeSelf,
            (true, true) => RClass::Mixed,
        }
    }

    /// True when some unmapped parallel query edge could also use `d`, which
    /// exempts `d` from representative-collapsing and failure skips.
    fn shareable(&self, m: &PartialEmbedding, e: QueryEdgeId, d: EdgeId) -> bool {
        let qrec = self.q.edge(e);
        for other in self.q.edges() {
            if other == e || m.edge(other).is_some() {
                continue;
            }
            let orec = self.q.edge(other);
            let parallel = if self.graph.is_directed() {
                (orec.u, orec.v) == (qrec.u, qrec.v)
            } else {
                (orec.u, orec.v) == (qrec.u, qrec.v) || (orec.u, orec.v) == (qrec.v, qrec.u)
            };
            if !parallel {
                continue;
            }
            let usable = if self.opts.filter {
                self.index.contains(other, d)
            } else {
                self.fwd.ctx().elabel_ok(other, self.graph.edge(d).elabel)
            };
            if usable {
                return true;
            }
        }
        false
    }

    fn attempt_edge(
        &self,
        m: &mut PartialEmbedding,
        e: QueryEdgeId,
        run: &mut Search<'_, '_>,
    ) -> Result<Outcome, Abort> {
        let (ec, culprits) = self.compute_ec(m, e);
        if ec.is_empty() {
            let (r_plus, _) = compute_r(self.q, m, e);
            let mut tf = combine_failing_sets(&[], &r_plus);
            tf.union(&culprits);
            return Ok(Outcome::Failed(tf));
        }

        let class = if self.opts.prune {
            self.classify(m, e)
        } else {
            RClass::Mixed // explore everything, no rule fires below
        };

        let mut order = ec;
        if self.opts.prune && class == RClass::AllBeforeSelf {
            order.reverse();
        }

        // Representative-collapsing for interchangeable candidates: explore
        // shareable candidates plus one exclusive representative; the other
        // exclusives become substitution alternatives at emission time.
        let mut alternatives = Vec::new();
        let mut rep = None;
        if self.opts.prune && class == RClass::Free {
            let mut kept = Vec::new();
            for d in order {
                if self.shareable(m, e, d) {
                    kept.push(d);
                } else if rep.is_none() {
                    rep = Some(d);
                    kept.push(d);
                } else {
                    alternatives.push(d);
                }
            }
            order = kept;
        }

        let mut found = false;
        let mut children: Vec<(QueryEdgeId, FailingSet)> = Vec::new();
        let mut skipping = false;
        for d in order {
            if skipping && !self.shareable(m, e, d) {
                continue;
            }
            m.map_edge(e, d);
            let pushed = rep == Some(d) && !alternatives.is_empty();
            if pushed {
                run.subs.push(SubCtx {
                    e,
                    alternatives: std::mem::take(&mut alternatives),
                });
            }
            let child = self.extend(m, Some(e), run);
            if pushed {
                alternatives = run.subs.pop().expect("pushed above").alternatives;
            }
            m.unmap_edge(e);
            match child? {
                Outcome::Found => found = true,
                Outcome::Failed(tf) => {
                    children.push((e, tf));
                    if self.opts.prune && class == RClass::Mixed && !tf.contains(e) {
                        break;
                    }
                    // The chronological skip is justified only by the failure
                    // of an exclusive candidate: a completion through a later
                    // candidate can then swap onto this one. A shareable
                    // candidate may have failed merely because it starved an
                    // unmapped parallel edge of its image.
                    if self.opts.prune
                        && (class == RClass::AllAfterSelf || class == RClass::AllBeforeSelf)
                        && !self.shareable(m, e, d)
                    {
                        skipping = true;
                    }
                }
            }
        }
        if found {
            return Ok(Outcome::Found);
        }
        let mut tf = combine_failing_sets(&children, &[]);
        tf.union(&culprits);
        Ok(Outcome::Failed(tf))
    }

    fn attempt_vertex(
        &self,
        m: &mut PartialEmbedding,
        u: QueryVertexId,
        cands: Vec<VertexId>,
        run: &mut Search<'_, '_>,
    ) -> Result<Outcome, Abort> {
        if cands.is_empty() {
            return Ok(Outcome::Failed(FailingSet::Full));
        }
        let mut found = false;
        let mut combined = FailingSet::empty();
        for v in cands {
            m.map_vertex(u, v);
            let child = self.extend(m, None, run);
            m.unmap_vertex(u);
            match child? {
                Outcome::Found => found = true,
                Outcome::Failed(tf) => combined.union(&tf),
            }
        }
        if found {
            Ok(Outcome::Found)
        } else {
            Ok(Outcome::Failed(combined))
        }
    }

    fn emit_with_substitutions(
        &self,
        m: &PartialEmbedding,
        run: &mut Search<'_, '_>,
    ) -> Result<(), Abort> {
        let vmap: Vec<VertexId> = m.vmap.iter().map(|v| v.expect("complete")).collect();
        let emap: Vec<EdgeId> = m.emap.iter().map(|d| d.expect("complete")).collect();
        let mut used: HashSet<EdgeId> = emap.iter().copied().collect();
        let mut current = Embedding { vmap, emap };
        self.emit_one(&current, run)?;
        let subs = std::mem::take(&mut run.subs);
        let result = self.substitute(&mut current, &mut used, &subs, run);
        run.subs = subs;
        result
    }

    fn substitute(
        &self,
        current: &mut Embedding,
        used: &mut HashSet<EdgeId>,
        subs: &[SubCtx],
        run: &mut Search<'_, '_>,
    ) -> Result<(), Abort> {
        let Some((ctx, rest)) = subs.split_first() else {
            return Ok(());
        };
        // Keep the representative, recurse over deeper contexts.
        self.substitute(current, used, rest, run)?;
        let orig = current.emap[ctx.e.0];
        for &alt in &ctx.alternatives {
            if used.contains(&alt) {
                continue;
            }
            used.remove(&orig);
            used.insert(alt);
            current.emap[ctx.e.0] = alt;
            self.emit_one(current, run)?;
            self.substitute(current, used, rest, run)?;
            current.emap[ctx.e.0] = orig;
            used.remove(&alt);
            used.insert(orig);
        }
        Ok(())
    }

    fn emit_one(&self, emb: &Embedding, run: &mut Search<'_, '_>) -> Result<(), Abort> {
        debug_assert!(verify_embedding(self.graph, self.q, emb));
        run.stats.emitted += 1;
        (run.sink)(emb, run.polarity);
        if let Some(limit) = self.opts.limit {
            if run.stats.emitted >= limit {
                return Err(Abort::Limit);
            }
        }
        Ok(())
    }
}

/// Full check of the embedding conditions: injectivity, labels, endpoint
/// consistency, and strict temporal order.
pub fn verify_embedding(graph: &TemporalGraph, q: &TemporalQuery, emb: &Embedding) -> bool {
    let mut seen_v = HashSet::new();
    for (u, &v) in emb.vmap.iter().enumerate() {
        if !seen_v.insert(v) {
            return false;
        }
        if graph.label_name(graph.vertex_label(v)) != q.vertex(QueryVertexId(u)).label {
            return false;
        }
    }
    let mut seen_e = HashSet::new();
    for (i, &d) in emb.emap.iter().enumerate() {
        if !seen_e.insert(d) {
            return false;
        }
        let e = QueryEdgeId(i);
        let rec = graph.edge(d);
        if !rec.active {
            return false;
        }
        let qrec = q.edge(e);
        let (x, y) = (emb.vmap[qrec.u.0], emb.vmap[qrec.v.0]);
        let endpoints_ok = if graph.is_directed() {
            rec.src == x && rec.dst == y
        } else {
            (rec.src == x && rec.dst == y) || (rec.src == y && rec.dst == x)
        };
        if !endpoints_ok {
            return false;
        }
        let elabel_ok = match (&qrec.elabel, rec.elabel) {
            (None, None) => true,
            (Some(name), Some(id)) => graph.label_name(id) == *name,
            _ => false,
        };
        if !elabel_ok {
            return false;
        }
    }
    for a in q.edges() {
        for b in q.edges() {
            if q.precedes(a, b)
                && graph.edge(emb.emap[a.0]).ts >= graph.edge(emb.emap[b.0]).ts
            {
                return false;
            }
        }
    }
    true
}
