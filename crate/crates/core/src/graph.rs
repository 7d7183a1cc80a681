//! Windowed temporal data multigraph.
//!
//! Edges carry timestamps and arrive in nondecreasing timestamp order; the
//! stream engine expires them from the front of each adjacency list when they
//! leave the sliding window. Parallel edges between the same pair of vertices
//! are distinguished by timestamp plus a global arrival sequence number.

use std::collections::{HashMap, VecDeque};
use thiserror::Error;

pub type Timestamp = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

/// Index into the edge arena; doubles as the arrival sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelId(pub u32);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(u64),
    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),
    #[error("edge timestamp {ts} is below the adjacency tail {tail}")]
    TimestampRegression { ts: Timestamp, tail: Timestamp },
    #[error("edge is not at the head of its adjacency lists")]
    NotAtHead,
    #[error("edge is not active")]
    NotActive,
}

#[derive(Debug, Clone)]
pub struct EdgeRecord {
    pub src: VertexId,
    pub dst: VertexId,
    pub elabel: Option<LabelId>,
    pub ts: Timestamp,
    pub active: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TemporalGraph {
    directed: bool,
    label_names: Vec<String>,
    label_index: HashMap<String, LabelId>,
    ext_ids: Vec<u64>,
    vertex_index: HashMap<u64, VertexId>,
    vlabels: Vec<LabelId>,
    // Undirected graphs keep the whole incidence list in `out_adj`;
    // directed graphs split outgoing/incoming.
    out_adj: Vec<VecDeque<EdgeId>>,
    in_adj: Vec<VecDeque<EdgeId>>,
    edges: Vec<EdgeRecord>,
    active_edges: usize,
}

impl TemporalGraph {
    pub fn new(directed: bool) -> Self {
        TemporalGraph {
            directed,
            ..Default::default()
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn intern_label(&mut self, name: &str) -> LabelId {
        if let Some(&id) = self.label_index.get(name) {
            return id;
        }
        let id = LabelId(self.label_names.len() as u32);
        self.label_names.push(name.to_string());
        self.label_index.insert(name.to_string(), id);
        id
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.label_index.get(name).copied()
    }

    pub fn label_name(&self, l: LabelId) -> &str {
        &self.label_names[l.0 as usize]
    }

    pub fn add_vertex(&mut self, ext_id: u64, label: &str) -> Result<VertexId, GraphError> {
        if self.vertex_index.contains_key(&ext_id) {
            return Err(GraphError::DuplicateVertex(ext_id));
        }
        let label = self.intern_label(label);
        let id = VertexId(self.ext_ids.len() as u32);
        self.ext_ids.push(ext_id);
        self.vertex_index.insert(ext_id, id);
        self.vlabels.push(label);
        self.out_adj.push(VecDeque::new());
        self.in_adj.push(VecDeque::new());
        Ok(id)
    }

    pub fn resolve_vertex(&self, ext_id: u64) -> Option<VertexId> {
        self.vertex_index.get(&ext_id).copied()
    }

    pub fn ext_id(&self, v: VertexId) -> u64 {
        self.ext_ids[v.0 as usize]
    }

    pub fn vertex_count(&self) -> usize {
        self.ext_ids.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.ext_ids.len() as u32).map(VertexId)
    }

    pub fn vertex_label(&self, v: VertexId) -> LabelId {
        self.vlabels[v.0 as usize]
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeRecord {
        &self.edges[e.0 as usize]
    }

    pub fn is_active(&self, e: EdgeId) -> bool {
        self.edges[e.0 as usize].active
    }

    pub fn active_edge_count(&self) -> usize {
        self.active_edges
    }

    /// All active edge ids in arrival order. Linear in the arena; test and
    /// oracle use only.
    pub fn active_edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, r)| r.active)
            .map(|(i, _)| EdgeId(i as u32))
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.out_adj[v.0 as usize].len() + self.in_adj[v.0 as usize].len()
    }

    fn tail_ts(list: &VecDeque<EdgeId>, edges: &[EdgeRecord]) -> Option<Timestamp> {
        list.back().map(|e| edges[e.0 as usize].ts)
    }

    pub fn insert_edge(
        &mut self,
        src: VertexId,
        dst: VertexId,
        elabel: Option<&str>,
        ts: Timestamp,
    ) -> Result<EdgeId, GraphError> {
        if src.0 as usize >= self.ext_ids.len() {
            return Err(GraphError::UnknownVertex(src.0 as u64));
        }
        if dst.0 as usize >= self.ext_ids.len() {
            return Err(GraphError::UnknownVertex(dst.0 as u64));
        }
        let (a, b) = if self.directed {
            (&self.out_adj[src.0 as usize], &self.in_adj[dst.0 as usize])
        } else {
            (&self.out_adj[src.0 as usize], &self.out_adj[dst.0 as usize])
        };
        for tail in [Self::tail_ts(a, &self.edges), Self::tail_ts(b, &self.edges)]
            .into_iter()
            .flatten()
        {
            if ts < tail {
                return Err(GraphError::TimestampRegression { ts, tail });
            }
        }
        let elabel = elabel.map(|l| self.intern_label(l));
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(EdgeRecord {
            src,
            dst,
            elabel,
            ts,
            active: true,
        });
        if self.directed {
            self.out_adj[src.0 as usize].push_back(id);
            self.in_adj[dst.0 as usize].push_back(id);
        } else {
            self.out_adj[src.0 as usize].push_back(id);
            if src != dst {
                self.out_adj[dst.0 as usize].push_back(id);
            }
        }
        self.active_edges += 1;
        Ok(id)
    }

    /// Removes an expired edge. It must be the chronologically earliest
    /// active edge at both endpoints; expirations arrive in arrival order.
    pub fn delete_expired(&mut self, e: EdgeId) -> Result<(), GraphError> {
        let rec = self.edges.get(e.0 as usize).ok_or(GraphError::NotActive)?;
        if !rec.active {
            return Err(GraphError::NotActive);
        }
        let (src, dst) = (rec.src, rec.dst);
        if self.directed {
            if self.out_adj[src.0 as usize].front() != Some(&e)
                || self.in_adj[dst.0 as usize].front() != Some(&e)
            {
                return Err(GraphError::NotAtHead);
            }
            self.out_adj[src.0 as usize].pop_front();
            self.in_adj[dst.0 as usize].pop_front();
        } else {
            if self.out_adj[src.0 as usize].front() != Some(&e)
                || (src != dst && self.out_adj[dst.0 as usize].front() != Some(&e))
            {
                return Err(GraphError::NotAtHead);
            }
            self.out_adj[src.0 as usize].pop_front();
            if src != dst {
                self.out_adj[dst.0 as usize].pop_front();
            }
        }
        self.edges[e.0 as usize].active = false;
        self.active_edges -= 1;
        Ok(())
    }

    /// Active incidence list of `v` in chronological order. For directed
    /// graphs this merges the outgoing and incoming lists.
    pub fn incident(&self, v: VertexId) -> Vec<EdgeId> {
        if !self.directed {
            return self.out_adj[v.0 as usize].iter().copied().collect();
        }
        let out = &self.out_adj[v.0 as usize];
        let inc = &self.in_adj[v.0 as usize];
        let mut merged = Vec::with_capacity(out.len() + inc.len());
        let (mut i, mut j) = (0, 0);
        while i < out.len() && j < inc.len() {
            if out[i] <= inc[j] {
                merged.push(out[i]);
                i += 1;
            } else {
                merged.push(inc[j]);
                j += 1;
            }
        }
        merged.extend(out.iter().skip(i));
        merged.extend(inc.iter().skip(j));
        merged
    }

    /// Active incidence of `v` without the chronological merge of directed
    /// lists; the fast path for table recomputation.
    pub fn incident_unordered(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.out_adj[v.0 as usize]
            .iter()
            .chain(self.in_adj[v.0 as usize].iter())
            .copied()
    }

    /// Like [`incident`](Self::incident) but paired with the opposite endpoint.
    pub fn incident_edges(&self, v: VertexId) -> Vec<(EdgeId, VertexId)> {
        self.incident(v)
            .into_iter()
            .map(|e| {
                let r = self.edge(e);
                let other = if r.src == v { r.dst } else { r.src };
                (e, other)
            })
            .collect()
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.out_adj[v.0 as usize].iter().copied()
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.in_adj[v.0 as usize].iter().copied()
    }

    /// Active parallel edges between `u` and `v` in chronological order,
    /// optionally restricted by edge label and open timestamp bounds. In
    /// directed mode only edges oriented `u -> v` qualify.
    pub fn edges_between(
        &self,
        u: VertexId,
        v: VertexId,
        elabel: Option<Option<LabelId>>,
        min_ts_exclusive: Option<Timestamp>,
        max_ts_exclusive: Option<Timestamp>,
    ) -> Vec<EdgeId> {
        let mut result = Vec::new();
        for &e in &self.out_adj[u.0 as usize] {
            let r = self.edge(e);
            let matches = if self.directed {
                r.src == u && r.dst == v
            } else {
                (r.src == u && r.dst == v) || (r.src == v && r.dst == u)
            };
            if !matches {
                continue;
            }
            if let Some(want) = elabel {
                if r.elabel != want {
                    continue;
                }
            }
            if let Some(lo) = min_ts_exclusive {
                if r.ts <= lo {
                    continue;
                }
            }
            if let Some(hi) = max_ts_exclusive {
                if r.ts >= hi {
                    continue;
                }
            }
            result.push(e);
        }
        result
    }

    /// Checks that every adjacency list is sorted by (ts, arrival sequence).
    pub fn adjacency_is_chronological(&self) -> bool {
        let sorted = |list: &VecDeque<EdgeId>| {
            list.iter()
                .zip(list.iter().skip(1))
                .all(|(&a, &b)| (self.edge(a).ts, a) <= (self.edge(b).ts, b))
        };
        self.out_adj.iter().all(sorted) && self.in_adj.iter().all(sorted)
    }
}
