//! Inline copies of the two worked examples exercised across the test
//! suites, plus a helper that replays a snapshot through the filter layer.

use crate::filter::{CandidateIndex, FilterDag, MaxMinTable, Orientation};
use crate::graph::TemporalGraph;
use crate::query::TemporalQuery;
use crate::{dag, io};

/// Six-edge query on five vertices: e1=(u1,u2), e2=(u1,u3), e3=(u2,u4),
/// e4=(u3,u4), e5=(u4,u5), e6=(u3,u5); order e1<e3, e1<e5, e2<e4, e2<e5,
/// e2<e6.
pub const RUNNING_QUERY: &str = "\
v 1 A
v 2 B
v 3 C
v 4 D
v 5 E
e 1 1 2 -
e 2 1 3 -
e 3 2 4 -
e 4 3 4 -
e 5 4 5 -
e 6 3 5 -
o 1 3
o 1 5
o 2 4
o 2 5
o 2 6
";

/// Fourteen-edge stream on seven vertices; edge k arrives at time k. With a
/// window of 10 exactly one embedding occurs (at t=14) and expires (t=16).
pub const RUNNING_STREAM: &str = "\
v 1 A
v 2 B
v 3 C
v 4 C
v 5 D
v 6 E
v 7 E
e 1 2 - 1
e 3 5 - 2
e 2 6 - 3
e 1 3 - 4
e 3 7 - 5
e 1 2 - 6
e 4 7 - 7
e 1 4 - 8
e 5 6 - 9
e 5 7 - 10
e 2 5 - 11
e 1 4 - 12
e 4 5 - 13
e 4 7 - 14
";

/// Seven-edge query with a parallel pair: e1=(u1,u2), e2=e3=(u2,u3),
/// e4=(u1,u3), e5=(u3,u4), e6=(u4,u5), e7=(u5,u6); order e3<e4, e5<e2,
/// e2<e6.
pub const PRUNING_QUERY: &str = "\
v 1 A
v 2 B
v 3 C
v 4 D
v 5 E
v 6 F
e 1 1 2 -
e 2 2 3 -
e 3 2 3 -
e 4 1 3 -
e 5 3 4 -
e 6 4 5 -
e 7 5 6 -
o 3 4
o 5 2
o 2 6
";

/// Stream for the pruning walkthrough. Vertex 3 and 4 share label C so the
/// query vertex u3 has two images; all other labels are unique.
pub const PRUNING_STREAM: &str = "\
v 1 A
v 2 B
v 3 C
v 4 C
v 5 D
v 6 E
v 7 F
e 4 5 - 1
e 2 3 - 2
e 1 3 - 3
e 1 3 - 4
e 2 3 - 5
e 2 3 - 6
e 3 5 - 7
e 2 3 - 8
e 5 6 - 9
e 2 4 - 10
e 2 4 - 11
e 1 2 - 12
e 1 2 - 13
e 6 7 - 14
e 1 2 - 15
";

pub fn running_query() -> TemporalQuery {
    io::parse_query(RUNNING_QUERY).unwrap()
}

pub fn pruning_query() -> TemporalQuery {
    io::parse_query(PRUNING_QUERY).unwrap()
}

/// Materializes a stream prefix as a static graph: all edges with timestamp
/// at most `upto` (and, when `window` is given, above `upto - window`) are
/// active.
pub fn graph_at(
    text: &str,
    upto: Option<crate::graph::Timestamp>,
    window: Option<crate::graph::Timestamp>,
) -> TemporalGraph {
    let stream = io::parse_stream(text).unwrap();
    let mut g = TemporalGraph::new(false);
    for (id, label) in &stream.vertices {
        g.add_vertex(*id, label).unwrap();
    }
    let mut pending = Vec::new();
    for e in &stream.edges {
        if let Some(hi) = upto {
            if e.ts > hi {
                continue;
            }
        }
        let s = g.resolve_vertex(e.src).unwrap();
        let d = g.resolve_vertex(e.dst).unwrap();
        let id = g.insert_edge(s, d, e.elabel.as_deref(), e.ts).unwrap();
        pending.push((e.ts, id));
    }
    if let (Some(hi), Some(w)) = (upto, window) {
        for (ts, id) in pending {
            if ts + w <= hi {
                g.delete_expired(id).unwrap();
            }
        }
    }
    g
}

/// Builds both orientation tables and the candidate index for the active
/// snapshot by replaying every active edge through the insertion path.
pub fn build_filter_state(
    graph: &TemporalGraph,
    q: &TemporalQuery,
) -> (MaxMinTable, MaxMinTable, CandidateIndex) {
    let fwd_dag = dag::best_dag(q).unwrap();
    let rev_dag = fwd_dag.reverse(q);
    let mut fwd = MaxMinTable::new(FilterDag::new(q, graph, fwd_dag, Orientation::Forward));
    let mut rev = MaxMinTable::new(FilterDag::new(q, graph, rev_dag, Orientation::Reverse));
    let mut index = CandidateIndex::new();
    for d in graph.active_edge_ids() {
        let fd = fwd.tcm_insertion(graph, q, d);
        let rd = rev.tcm_insertion(graph, q, d);
        index.apply_delta(&fwd, &rev, &fd, &rd);
    }
    (fwd, rev, index)
}
