//! Brute-force reference enumeration, straight from the embedding
//! definition: map query vertices one at a time, then assign every query
//! edge an image among the parallel edges between its endpoint images, and
//! keep the assignments whose timestamps respect the temporal order.
//!
//! Deliberately shares no traversal machinery with the engine's matcher:
//! no DAG, no candidate index, no pruning. Exponential time is accepted;
//! callers bound the instance size.

use crate::dag::QueryDag;
use crate::graph::{EdgeId, TemporalGraph, VertexId};
use crate::matcher::Embedding;
use crate::query::{QueryEdgeId, QueryVertexId, TemporalQuery};
use std::collections::BTreeSet;

/// All time-constrained embeddings of `q` in the active snapshot of `graph`.
pub fn enumerate_all(graph: &TemporalGraph, q: &TemporalQuery) -> BTreeSet<Embedding> {
    let mut result = BTreeSet::new();
    if q.edge_count() == 0 {
        return result;
    }
    // Vertex assignment order: breadth-first from vertex 0 so each vertex
    // after the first has a mapped neighbor to anchor on.
    let order = bfs_order(q);
    let mut vmap: Vec<Option<VertexId>> = vec![None; q.vertex_count()];
    assign_vertex(graph, q, &order, 0, &mut vmap, &mut result);
    result
}

fn bfs_order(q: &TemporalQuery) -> Vec<QueryVertexId> {
    let mut order = vec![QueryVertexId(0)];
    let mut seen = vec![false; q.vertex_count()];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        for e in q.incident_edges(u) {
            let w = q.other_endpoint(e, u);
            if !seen[w.0] {
                seen[w.0] = true;
                order.push(w);
            }
        }
    }
    order
}

fn assign_vertex(
    graph: &TemporalGraph,
    q: &TemporalQuery,
    order: &[QueryVertexId],
    depth: usize,
    vmap: &mut Vec<Option<VertexId>>,
    result: &mut BTreeSet<Embedding>,
) {
    if depth == order.len() {
        let mut emap: Vec<Option<EdgeId>> = vec![None; q.edge_count()];
        assign_edges(graph, q, vmap, 0, &mut emap, result);
        return;
    }
    let u = order[depth];
    // Candidates come from the whole vertex set for the first query vertex
    // and from a mapped neighbor's active adjacency afterwards (BFS order
    // guarantees one exists); condition (3) forces adjacency anyway.
    let candidates: Vec<VertexId> = if depth == 0 {
        graph.vertex_ids().collect()
    } else {
        let anchor = q
            .incident_edges(u)
            .into_iter()
            .find_map(|e| vmap[q.other_endpoint(e, u).0])
            .expect("BFS order maps a neighbor first");
        let mut seen: Vec<VertexId> = graph
            .incident_unordered(anchor)
            .map(|d| {
                let rec = graph.edge(d);
                if rec.src == anchor {
                    rec.dst
                } else {
                    rec.src
                }
            })
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    };
    for v in candidates {
        if vmap.contains(&Some(v)) {
            continue;
        }
        if graph.label_name(graph.vertex_label(v)) != q.vertex(u).label {
            continue;
        }
        // Every edge to an already-mapped vertex must have at least one
        // structural image; cheap necessary condition.
        let feasible = q.incident_edges(u).iter().all(|&e| {
            let w = q.other_endpoint(e, u);
            match vmap[w.0] {
                None => true,
                Some(img) => !structural_images(graph, q, e, u, v, img).is_empty(),
            }
        });
        if !feasible {
            continue;
        }
        vmap[u.0] = Some(v);
        assign_vertex(graph, q, order, depth + 1, vmap, result);
        vmap[u.0] = None;
    }
}

/// Active data edges that can serve as the image of query edge `e` given
/// the images of its endpoints (labels hold by construction).
fn structural_images(
    graph: &TemporalGraph,
    q: &TemporalQuery,
    e: QueryEdgeId,
    u: QueryVertexId,
    u_img: VertexId,
    other_img: VertexId,
) -> Vec<EdgeId> {
    let qrec = q.edge(e);
    let (x, y) = if qrec.u == u {
        (u_img, other_img)
    } else {
        (other_img, u_img)
    };
    graph
        .edges_between(x, y, None, None, None)
        .into_iter()
        .filter(|&d| {
            let rec = graph.edge(d);
            match (&qrec.elabel, rec.elabel) {
                (None, None) => true,
                (Some(name), Some(id)) => graph.label_name(id) == *name,
                _ => false,
            }
        })
        .collect()
}

fn assign_edges(
    graph: &TemporalGraph,
    q: &TemporalQuery,
    vmap: &[Option<VertexId>],
    next: usize,
    emap: &mut Vec<Option<EdgeId>>,
    result: &mut BTreeSet<Embedding>,
) {
    if next == q.edge_count() {
        // Temporal order checked at leaf level.
        for a in q.edges() {
            for b in q.edges() {
                if q.precedes(a, b) {
                    let ta = graph.edge(emap[a.0].unwrap()).ts;
                    let tb = graph.edge(emap[b.0].unwrap()).ts;
                    if ta >= tb {
                        return;
                    }
                }
            }
        }
        result.insert(Embedding {
            vmap: vmap.iter().map(|v| v.unwrap()).collect(),
            emap: emap.iter().map(|d| d.unwrap()).collect(),
        });
        return;
    }
    let e = QueryEdgeId(next);
    let qrec = q.edge(e);
    let u_img = vmap[qrec.u.0].unwrap();
    let v_img = vmap[qrec.v.0].unwrap();
    for d in structural_images(graph, q, e, qrec.u, u_img, v_img) {
        if emap.contains(&Some(d)) {
            continue;
        }
        emap[next] = Some(d);
        assign_edges(graph, q, vmap, next + 1, emap, result);
        emap[next] = None;
    }
}

/// Whether a weak embedding of the sub-DAG at `e` anchored at `d` exists in
/// which every mapped aligned descendant of `e` carries a timestamp above
/// the anchor's: the matchability reference for one orientation.
pub fn enumerate_tc_weak(
    graph: &TemporalGraph,
    q: &TemporalQuery,
    dag: &QueryDag,
    e: QueryEdgeId,
    d: EdgeId,
) -> bool {
    let rec = graph.edge(d);
    if rec.src == rec.dst {
        return false;
    }
    let qrec = q.edge(e);
    let child = dag.child_endpoint(e);
    for assign in [false, true] {
        if assign && graph.is_directed() {
            continue;
        }
        let (u_img, v_img) = if assign {
            (rec.dst, rec.src)
        } else {
            (rec.src, rec.dst)
        };
        let (p_img, c_img) = if child == qrec.v {
            (u_img, v_img)
        } else {
            (v_img, u_img)
        };
        if !edge_homomorphic(graph, q, e, dag, p_img, c_img, d) {
            continue;
        }
        if weak_from(graph, q, dag, e, rec.ts, child, c_img) {
            return true;
        }
    }
    false
}

/// Label, edge-label, and direction admissibility of one tree-edge mapping.
fn edge_homomorphic(
    graph: &TemporalGraph,
    q: &TemporalQuery,
    f: QueryEdgeId,
    dag: &QueryDag,
    p_img: VertexId,
    c_img: VertexId,
    d: EdgeId,
) -> bool {
    let rec = graph.edge(d);
    let qrec = q.edge(f);
    let parent = dag.parent_endpoint(f);
    let (pu, cu) = (parent, dag.child_endpoint(f));
    if graph.label_name(graph.vertex_label(p_img)) != q.vertex(pu).label
        || graph.label_name(graph.vertex_label(c_img)) != q.vertex(cu).label
    {
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
    if graph.is_directed() {
        let (want_src, want_dst) = if qrec.u == parent {
            (p_img, c_img)
        } else {
            (c_img, p_img)
        };
        if rec.src != want_src || rec.dst != want_dst {
            return false;
        }
    }
    true
}

/// Homomorphism search over the path tree below `u` anchored at `v`. The
/// path tree's branches are independent, so each child branch is satisfied
/// separately.
fn weak_from(
    graph: &TemporalGraph,
    q: &TemporalQuery,
    dag: &QueryDag,
    anchor: QueryEdgeId,
    anchor_ts: crate::graph::Timestamp,
    u: QueryVertexId,
    v: VertexId,
) -> bool {
    for &(f, child) in dag.children(u) {
        let constrained = q.precedes(anchor, f) && dag.edge_is_ancestor(anchor, f);
        let mut ok = false;
        for d in graph.incident_unordered(v) {
            let rec = graph.edge(d);
            if rec.src == rec.dst {
                continue;
            }
            let w = if rec.src == v { rec.dst } else { rec.src };
            if !edge_homomorphic(graph, q, f, dag, v, w, d) {
                continue;
            }
            if constrained && rec.ts <= anchor_ts {
                continue;
            }
            if weak_from(graph, q, dag, anchor, anchor_ts, child, w) {
                ok = true;
                break;
            }
        }
        if !ok {
            return false;
        }
    }
    true
}
