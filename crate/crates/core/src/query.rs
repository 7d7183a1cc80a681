//! Temporal query graph: a small labeled multigraph plus a strict partial
//! order on its edges, stored as a transitive closure bit matrix.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryVertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryEdgeId(pub usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("duplicate query vertex id {0}")]
    DuplicateVertex(u64),
    #[error("duplicate query edge id {0}")]
    DuplicateEdge(u64),
    #[error("unknown query vertex id {0}")]
    UnknownVertex(u64),
    #[error("order pair references unknown edge id {0}")]
    UnknownOrderEdge(u64),
    #[error("self-loop on query vertex {0}")]
    SelfLoop(u64),
    #[error("temporal order contains a cycle")]
    OrderCycle,
    #[error("query graph is not connected")]
    Disconnected,
    #[error("query has no edges")]
    NoEdges,
    #[error("density needs at least two query edges")]
    TooFewEdges,
}

#[derive(Debug, Clone)]
pub struct QueryVertex {
    pub ext_id: u64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct QueryEdge {
    pub ext_id: u64,
    pub u: QueryVertexId,
    pub v: QueryVertexId,
    pub elabel: Option<String>,
}

/// Strict partial order over query edges; `closure` row `i` has bit `j` set
/// when edge `i` precedes edge `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalOrder {
    edge_count: usize,
    direct: Vec<(QueryEdgeId, QueryEdgeId)>,
    closure: Vec<u64>,
}

impl TemporalOrder {
    /// Transitive closure over the direct pairs; rejects cycles.
    pub fn build(
        edge_count: usize,
        direct: Vec<(QueryEdgeId, QueryEdgeId)>,
    ) -> Result<Self, QueryError> {
        assert!(edge_count <= 64, "query edge count is limited to 64");
        let mut closure = vec![0u64; edge_count];
        for &(a, b) in &direct {
            if a.0 >= edge_count || b.0 >= edge_count {
                return Err(QueryError::UnknownOrderEdge(a.0.max(b.0) as u64));
            }
            closure[a.0] |= 1 << b.0;
        }
        // Floyd-Warshall over bit rows.
        for k in 0..edge_count {
            for i in 0..edge_count {
                if closure[i] >> k & 1 == 1 {
                    closure[i] |= closure[k];
                }
            }
        }
        for (i, row) in closure.iter().enumerate() {
            if row >> i & 1 == 1 {
                return Err(QueryError::OrderCycle);
            }
        }
        Ok(TemporalOrder {
            edge_count,
            direct,
            closure,
        })
    }

    pub fn empty(edge_count: usize) -> Self {
        TemporalOrder::build(edge_count, Vec::new()).unwrap()
    }

    pub fn direct_pairs(&self) -> &[(QueryEdgeId, QueryEdgeId)] {
        &self.direct
    }

    pub fn closure_pairs(&self) -> Vec<(QueryEdgeId, QueryEdgeId)> {
        let mut pairs = Vec::new();
        for i in 0..self.edge_count {
            for j in 0..self.edge_count {
                if self.closure[i] >> j & 1 == 1 {
                    pairs.push((QueryEdgeId(i), QueryEdgeId(j)));
                }
            }
        }
        pairs
    }

    pub fn precedes(&self, a: QueryEdgeId, b: QueryEdgeId) -> bool {
        self.closure[a.0] >> b.0 & 1 == 1
    }

    pub fn related(&self, a: QueryEdgeId, b: QueryEdgeId) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }
}

#[derive(Debug, Clone)]
pub struct TemporalQuery {
    vertices: Vec<QueryVertex>,
    edges: Vec<QueryEdge>,
    order: TemporalOrder,
    /// Per edge: all temporally related edges, ascending.
    related: Vec<Vec<QueryEdgeId>>,
}

impl TemporalQuery {
    pub fn new(
        vertices: Vec<QueryVertex>,
        edges: Vec<QueryEdge>,
        direct_pairs: Vec<(QueryEdgeId, QueryEdgeId)>,
    ) -> Result<Self, QueryError> {
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].iter().any(|o| o.ext_id == v.ext_id) {
                return Err(QueryError::DuplicateVertex(v.ext_id));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if edges[..i].iter().any(|o| o.ext_id == e.ext_id) {
                return Err(QueryError::DuplicateEdge(e.ext_id));
            }
            if e.u.0 >= vertices.len() || e.v.0 >= vertices.len() {
                return Err(QueryError::UnknownVertex(e.ext_id));
            }
            if e.u == e.v {
                return Err(QueryError::SelfLoop(vertices[e.u.0].ext_id));
            }
        }
        let order = TemporalOrder::build(edges.len(), direct_pairs)?;
        let mut related = vec![Vec::new(); edges.len()];
        for (i, rel) in related.iter_mut().enumerate() {
            for j in 0..edges.len() {
                if i != j && order.related(QueryEdgeId(i), QueryEdgeId(j)) {
                    rel.push(QueryEdgeId(j));
                }
            }
        }
        Ok(TemporalQuery {
            vertices,
            edges,
            order,
            related,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, u: QueryVertexId) -> &QueryVertex {
        &self.vertices[u.0]
    }

    pub fn edge(&self, e: QueryEdgeId) -> &QueryEdge {
        &self.edges[e.0]
    }

    pub fn vertices(&self) -> impl Iterator<Item = QueryVertexId> {
        (0..self.vertices.len()).map(QueryVertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = QueryEdgeId> {
        (0..self.edges.len()).map(QueryEdgeId)
    }

    pub fn order(&self) -> &TemporalOrder {
        &self.order
    }

    pub fn precedes(&self, a: QueryEdgeId, b: QueryEdgeId) -> bool {
        self.order.precedes(a, b)
    }

    pub fn temporally_related(&self, a: QueryEdgeId, b: QueryEdgeId) -> bool {
        self.order.related(a, b)
    }

    pub fn related_edges(&self, e: QueryEdgeId) -> &[QueryEdgeId] {
        &self.related[e.0]
    }

    /// Edges incident to `u`, ascending by id.
    pub fn incident_edges(&self, u: QueryVertexId) -> Vec<QueryEdgeId> {
        self.edges()
            .filter(|&e| self.edges[e.0].u == u || self.edges[e.0].v == u)
            .collect()
    }

    pub fn other_endpoint(&self, e: QueryEdgeId, u: QueryVertexId) -> QueryVertexId {
        let rec = &self.edges[e.0];
        if rec.u == u {
            rec.v
        } else {
            rec.u
        }
    }

    /// (related pair count, total unordered pair count).
    pub fn density_ratio(&self) -> Result<(usize, usize), QueryError> {
        let m = self.edges.len();
        if m < 2 {
            return Err(QueryError::TooFewEdges);
        }
        let mut related = 0;
        for i in 0..m {
            for j in i + 1..m {
                if self.order.related(QueryEdgeId(i), QueryEdgeId(j)) {
                    related += 1;
                }
            }
        }
        Ok((related, m * (m - 1) / 2))
    }

    pub fn density(&self) -> Result<f64, QueryError> {
        let (num, den) = self.density_ratio()?;
        Ok(num as f64 / den as f64)
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![QueryVertexId(0)];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for e in &self.edges {
                for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                    if a == u && !seen[b.0] {
                        seen[b.0] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Aggregated structural validation: connectivity and non-degeneracy.
    /// Self-loops, bad ids, and order cycles are already rejected by `new`.
    pub fn validate(&self) -> Result<(), Vec<QueryError>> {
        let mut errors = Vec::new();
        if self.edges.is_empty() {
            errors.push(QueryError::NoEdges);
        }
        if !self.is_connected() {
            errors.push(QueryError::Disconnected);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize) -> QueryEdgeId {
        QueryEdgeId(i)
    }

    #[test]
    fn closure_is_transitive() {
        let o = TemporalOrder::build(3, vec![(e(0), e(1)), (e(1), e(2))]).unwrap();
        let mut pairs = o.closure_pairs();
        pairs.sort();
        assert_eq!(pairs, vec![(e(0), e(1)), (e(0), e(2)), (e(1), e(2))]);
    }

    #[test]
    fn cycle_rejected() {
        assert_eq!(
            TemporalOrder::build(2, vec![(e(0), e(1)), (e(1), e(0))]),
            Err(QueryError::OrderCycle)
        );
    }

    #[test]
    fn empty_order() {
        let o = TemporalOrder::empty(4);
        assert!(o.closure_pairs().is_empty());
    }

    #[test]
    fn closure_idempotent() {
        let o = TemporalOrder::build(4, vec![(e(0), e(1)), (e(1), e(3))]).unwrap();
        let again = TemporalOrder::build(4, o.closure_pairs()).unwrap();
        assert_eq!(o.closure_pairs(), again.closure_pairs());
    }

    #[test]
    fn related_is_irreflexive_and_symmetric() {
        let o = TemporalOrder::build(3, vec![(e(0), e(1))]).unwrap();
        assert!(o.related(e(0), e(1)));
        assert!(o.related(e(1), e(0)));
        assert!(!o.precedes(e(1), e(0)));
        assert!(!o.related(e(2), e(2)));
    }

    fn path_query(order: Vec<(QueryEdgeId, QueryEdgeId)>) -> TemporalQuery {
        // u0 - u1 - u2 - u3 path with distinct labels.
        let vertices = (0..4)
            .map(|i| QueryVertex {
                ext_id: i as u64,
                label: ((b'A' + i as u8) as char).to_string(),
            })
            .collect();
        let edges = (0..3)
            .map(|i| QueryEdge {
                ext_id: i as u64,
                u: QueryVertexId(i),
                v: QueryVertexId(i + 1),
                elabel: None,
            })
            .collect();
        TemporalQuery::new(vertices, edges, order).unwrap()
    }

    #[test]
    fn density_examples() {
        let q = path_query(vec![(e(0), e(1))]);
        assert_eq!(q.density_ratio().unwrap(), (1, 3));
        let q = path_query(vec![]);
        assert_eq!(q.density().unwrap(), 0.0);
        let q = path_query(vec![(e(0), e(1)), (e(1), e(2))]);
        assert_eq!(q.density().unwrap(), 1.0);
    }

    #[test]
    fn density_requires_two_edges() {
        let vertices = vec![
            QueryVertex { ext_id: 0, label: "A".into() },
            QueryVertex { ext_id: 1, label: "B".into() },
        ];
        let edges = vec![QueryEdge {
            ext_id: 0,
            u: QueryVertexId(0),
            v: QueryVertexId(1),
            elabel: None,
        }];
        let q = TemporalQuery::new(vertices, edges, vec![]).unwrap();
        assert_eq!(q.density_ratio(), Err(QueryError::TooFewEdges));
    }

    #[test]
    fn disconnected_query_fails_validation() {
        let vertices = (0..4)
            .map(|i| QueryVertex {
                ext_id: i,
                label: "A".into(),
            })
            .collect();
        let edges = vec![
            QueryEdge { ext_id: 0, u: QueryVertexId(0), v: QueryVertexId(1), elabel: None },
            QueryEdge { ext_id: 1, u: QueryVertexId(2), v: QueryVertexId(3), elabel: None },
        ];
        let q = TemporalQuery::new(vertices, edges, vec![]).unwrap();
        assert_eq!(q.validate(), Err(vec![QueryError::Disconnected]));
    }

    #[test]
    fn order_pair_with_unknown_edge_rejected() {
        let vertices = vec![
            QueryVertex { ext_id: 0, label: "A".into() },
            QueryVertex { ext_id: 1, label: "B".into() },
        ];
        let edges = vec![QueryEdge {
            ext_id: 0,
            u: QueryVertexId(0),
            v: QueryVertexId(1),
            elabel: None,
        }];
        assert!(matches!(
            TemporalQuery::new(vertices, edges, vec![(e(0), e(99))]),
            Err(QueryError::UnknownOrderEdge(99))
        ));
    }

    #[test]
    fn self_loop_rejected() {
        let vertices = vec![QueryVertex { ext_id: 0, label: "A".into() }];
        let edges = vec![QueryEdge {
            ext_id: 0,
            u: QueryVertexId(0),
            v: QueryVertexId(0),
            elabel: None,
        }];
        assert!(matches!(
            TemporalQuery::new(vertices, edges, vec![]),
            Err(QueryError::SelfLoop(0))
        ));
    }

    #[test]
    fn parallel_query_edges_allowed() {
        let vertices = vec![
            QueryVertex { ext_id: 0, label: "A".into() },
            QueryVertex { ext_id: 1, label: "B".into() },
        ];
        let edges = vec![
            QueryEdge { ext_id: 0, u: QueryVertexId(0), v: QueryVertexId(1), elabel: None },
            QueryEdge { ext_id: 1, u: QueryVertexId(0), v: QueryVertexId(1), elabel: None },
        ];
        let q = TemporalQuery::new(vertices, edges, vec![(e(0), e(1))]).unwrap();
        assert!(q.validate().is_ok());
        assert_eq!(q.density().unwrap(), 1.0);
    }
}
