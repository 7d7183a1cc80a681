//! Workload generation: random-walk query extraction, permutation-induced
//! temporal orders at a target density, and synthetic temporal streams.

use crate::graph::{EdgeId, TemporalGraph, Timestamp, VertexId};
use crate::io::{StreamEdge, StreamFile};
use crate::query::{QueryEdge, QueryEdgeId, QueryVertex, QueryVertexId, TemporalQuery};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("random walk could not collect {0} edges")]
    WalkExhausted(usize),
    #[error("density must lie in [0, 1]")]
    InvalidDensity,
    #[error("witness timestamps collide; re-walk with a fresh seed")]
    TimestampCollision,
    #[error("graph has no active edges")]
    EmptyGraph,
}

/// A generated query topology plus the data elements it was traced from.
/// The witness is an embedding of the (order-free) query by construction.
#[derive(Debug, Clone)]
pub struct WalkedQuery {
    pub query: TemporalQuery,
    /// Witness data edge per query edge.
    pub witness_edges: Vec<EdgeId>,
    /// Witness data vertex per query vertex.
    pub witness_vertices: Vec<VertexId>,
}

/// Extracts a connected `size`-edge query by random walk over the active
/// snapshot, copying vertex labels from the visited data vertices. Distinct
/// parallel data edges become distinct (parallel) query edges.
pub fn random_walk_query(
    graph: &TemporalGraph,
    size: usize,
    seed: u64,
) -> Result<WalkedQuery, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<EdgeId> = graph.active_edge_ids().collect();
    if active.is_empty() {
        return Err(GenError::EmptyGraph);
    }
    'restart: for _ in 0..64 {
        let start = active[rng.gen_range(0..active.len())];
        let rec = graph.edge(start);
        if rec.src == rec.dst {
            continue;
        }
        let mut vmap: HashMap<VertexId, QueryVertexId> = HashMap::new();
        let mut vlist: Vec<VertexId> = Vec::new();
        let mut collected: Vec<EdgeId> = Vec::new();
        let intern = |v: VertexId, vmap: &mut HashMap<_, _>, vlist: &mut Vec<_>| {
            *vmap.entry(v).or_insert_with(|| {
                vlist.push(v);
                QueryVertexId(vlist.len() - 1)
            })
        };
        intern(rec.src, &mut vmap, &mut vlist);
        intern(rec.dst, &mut vmap, &mut vlist);
        collected.push(start);
        let mut here = if rng.gen() { rec.dst } else { rec.src };
        let mut steps = 0usize;
        while collected.len() < size {
            steps += 1;
            if steps > size * 64 {
                continue 'restart;
            }
            let incident: Vec<EdgeId> = graph
                .incident_unordered(here)
                .filter(|&d| graph.edge(d).src != graph.edge(d).dst)
                .collect();
            if incident.is_empty() {
                continue 'restart;
            }
            let d = incident[rng.gen_range(0..incident.len())];
            let drec = graph.edge(d);
            let next = if drec.src == here { drec.dst } else { drec.src };
            if !collected.contains(&d) {
                intern(drec.src, &mut vmap, &mut vlist);
                intern(drec.dst, &mut vmap, &mut vlist);
                collected.push(d);
            }
            here = next;
        }
        let vertices: Vec<QueryVertex> = vlist
            .iter()
            .enumerate()
            .map(|(i, &v)| QueryVertex {
                ext_id: i as u64,
                label: graph.label_name(graph.vertex_label(v)).to_string(),
            })
            .collect();
        let edges: Vec<QueryEdge> = collected
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let r = graph.edge(d);
                QueryEdge {
                    ext_id: i as u64,
                    u: vmap[&r.src],
                    v: vmap[&r.dst],
                    elabel: r.elabel.map(|l| graph.label_name(l).to_string()),
                }
            })
            .collect();
        let query = TemporalQuery::new(vertices, edges, Vec::new())
            .expect("walked topology is well formed");
        return Ok(WalkedQuery {
            query,
            witness_edges: collected,
            witness_vertices: vlist,
        });
    }
    Err(GenError::WalkExhausted(size))
}

/// Imposes a temporal order of roughly the target density, keeping the
/// witness satisfiable: a pair e before e' is only ever generated when the
/// witness timestamp of e is below that of e'.
///
/// Density 1 needs strictly increasing witness timestamps (the chain over
/// them); collisions are an error so the caller can re-walk. Intermediate
/// densities draw random permutations, intersect permutation precedence
/// with witness-timestamp precedence, and trim the resulting closed set one
/// non-implied pair at a time down to the target count.
pub fn impose_order(
    edge_count: usize,
    witness_ts: &[Timestamp],
    density: f64,
    seed: u64,
) -> Result<Vec<(QueryEdgeId, QueryEdgeId)>, GenError> {
    if !(0.0..=1.0).contains(&density) || density.is_nan() {
        return Err(GenError::InvalidDensity);
    }
    assert_eq!(edge_count, witness_ts.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if density == 0.0 || edge_count < 2 {
        return Ok(Vec::new());
    }
    {
        let mut sorted = witness_ts.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(GenError::TimestampCollision);
        }
    }
    let total_pairs = edge_count * (edge_count - 1) / 2;
    let target = (density * total_pairs as f64).round() as usize;
    // Pairs consistent with the witness timestamps; a random permutation
    // thins this total order. Retry permutations until enough pairs survive.
    let mut best: Vec<(usize, usize)> = Vec::new();
    for _ in 0..4096 {
        let mut perm: Vec<usize> = (0..edge_count).collect();
        perm.shuffle(&mut rng);
        let mut pos = vec![0usize; edge_count];
        for (p, &e) in perm.iter().enumerate() {
            pos[e] = p;
        }
        let mut pairs = Vec::new();
        for a in 0..edge_count {
            for b in 0..edge_count {
                if a != b && pos[a] < pos[b] && witness_ts[a] < witness_ts[b] {
                    pairs.push((a, b));
                }
            }
        }
        if pairs.len() > best.len() {
            best = pairs;
        }
        if best.len() >= target {
            break;
        }
    }
    let mut set: Vec<(usize, usize)> = best;
    // Drop non-implied pairs until the target count; removal of a pair with
    // no chain through an intermediate keeps the set transitively closed.
    while set.len() > target {
        let removable: Vec<usize> = (0..set.len())
            .filter(|&i| {
                let (a, b) = set[i];
                !set.iter()
                    .any(|&(x, c)| x == a && set.contains(&(c, b)))
            })
            .collect();
        let pick = removable[rng.gen_range(0..removable.len())];
        set.swap_remove(pick);
    }
    Ok(set
        .into_iter()
        .map(|(a, b)| (QueryEdgeId(a), QueryEdgeId(b)))
        .collect())
}

/// Deterministic synthetic stream: uniformly labeled vertices, unit-step
/// timestamps, and a tunable tendency to revisit vertex pairs so parallel
/// edges appear. `parallel_rate` is the targeted mean multiplicity.
pub fn synth_stream(
    n_vertices: usize,
    n_edges: usize,
    label_count: usize,
    parallel_rate: f64,
    seed: u64,
) -> StreamFile {
    assert!(n_vertices >= 2 && label_count >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = StreamFile::default();
    for v in 0..n_vertices {
        let label = format!("L{}", rng.gen_range(0..label_count));
        out.vertices.push((v as u64, label));
    }
    let reuse_prob = if parallel_rate > 1.0 {
        (parallel_rate - 1.0) / parallel_rate
    } else {
        0.0
    };
    // Reuse draws come uniformly from the distinct pairs seen so far, so
    // multiplicities concentrate near the target instead of piling onto a
    // few hot pairs.
    let mut distinct: Vec<(u64, u64)> = Vec::new();
    for i in 0..n_edges {
        let reuse = !distinct.is_empty() && rng.gen_bool(reuse_prob);
        let pair = if reuse {
            distinct[rng.gen_range(0..distinct.len())]
        } else {
            loop {
                let a = rng.gen_range(0..n_vertices) as u64;
                let b = rng.gen_range(0..n_vertices) as u64;
                if a != b {
                    break (a, b);
                }
            }
        };
        if !reuse && !distinct.contains(&pair) {
            distinct.push(pair);
        }
        out.edges.push(StreamEdge {
            src: pair.0,
            dst: pair.1,
            elabel: None,
            ts: (i + 1) as Timestamp,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io;

    fn seeded_graph() -> TemporalGraph {
        let stream = synth_stream(12, 40, 3, 2.0, 7);
        let mut g = TemporalGraph::new(false);
        for (id, l) in &stream.vertices {
            g.add_vertex(*id, l).unwrap();
        }
        for e in &stream.edges {
            let s = g.resolve_vertex(e.src).unwrap();
            let d = g.resolve_vertex(e.dst).unwrap();
            g.insert_edge(s, d, e.elabel.as_deref(), e.ts).unwrap();
        }
        g
    }

    #[test]
    fn single_edge_walk() {
        let g = seeded_graph();
        let w = random_walk_query(&g, 1, 3).unwrap();
        assert_eq!(w.query.edge_count(), 1);
        assert_eq!(w.witness_edges.len(), 1);
    }

    #[test]
    fn walk_is_deterministic() {
        let g = seeded_graph();
        let a = random_walk_query(&g, 4, 11).unwrap();
        let b = random_walk_query(&g, 4, 11).unwrap();
        assert_eq!(a.witness_edges, b.witness_edges);
        assert_eq!(io::write_query(&a.query), io::write_query(&b.query));
    }

    #[test]
    fn witness_is_an_embedding() {
        let g = seeded_graph();
        for seed in 0..8 {
            let w = random_walk_query(&g, 4, seed).unwrap();
            let emb = crate::matcher::Embedding {
                vmap: w.witness_vertices.clone(),
                emap: w.witness_edges.clone(),
            };
            assert!(crate::matcher::verify_embedding(&g, &w.query, &emb));
        }
    }

    #[test]
    fn density_zero_is_empty() {
        assert!(impose_order(5, &[1, 2, 3, 4, 5], 0.0, 1).unwrap().is_empty());
    }

    #[test]
    fn permutation_condition_blocks_inverted_pair() {
        // ts(e0)=5, ts(e1)=3: rule (2) never admits (e0, e1) nor the
        // ts-inverted (e1, e0)... only pairs with rising witness timestamps.
        let pairs = impose_order(2, &[5, 3], 1.0, 1).unwrap();
        assert_eq!(pairs, vec![(QueryEdgeId(1), QueryEdgeId(0))]);
    }

    #[test]
    fn collision_is_an_error() {
        assert_eq!(
            impose_order(3, &[4, 4, 9], 1.0, 1),
            Err(GenError::TimestampCollision)
        );
    }

    #[test]
    fn density_targets_are_met() {
        for &target in &[0.25, 0.5, 0.75, 1.0] {
            for seed in 0..10 {
                let ts: Vec<Timestamp> = (1..=8).collect();
                let pairs = impose_order(8, &ts, target, seed).unwrap();
                let q_pairs = 8 * 7 / 2;
                let realized = pairs.len() as f64 / q_pairs as f64;
                assert!(
                    (realized - target).abs() <= 0.1,
                    "target {target} realized {realized}"
                );
            }
        }
    }

    #[test]
    fn order_is_transitively_closed_and_acyclic() {
        use crate::query::TemporalOrder;
        for seed in 0..10 {
            let ts: Vec<Timestamp> = vec![3, 9, 1, 7, 5, 11];
            let pairs = impose_order(6, &ts, 0.5, seed).unwrap();
            let order = TemporalOrder::build(6, pairs.clone()).unwrap();
            let mut closed = order.closure_pairs();
            closed.sort();
            let mut direct = pairs;
            direct.sort();
            assert_eq!(closed, direct);
            // Witness satisfiability.
            for (a, b) in closed {
                assert!(ts[a.0] < ts[b.0]);
            }
        }
    }

    #[test]
    fn synth_stream_deterministic_and_parallel() {
        let a = synth_stream(10, 60, 2, 3.0, 5);
        let b = synth_stream(10, 60, 2, 3.0, 5);
        assert_eq!(io::write_stream(&a), io::write_stream(&b));
        let empty = synth_stream(4, 0, 2, 1.0, 5);
        assert!(empty.edges.is_empty());
        assert_eq!(empty.vertices.len(), 4);
        // High parallel rate: mean multiplicity above 1.
        let mut mult: HashMap<(u64, u64), usize> = HashMap::new();
        for e in &a.edges {
            *mult.entry((e.src.min(e.dst), e.src.max(e.dst))).or_default() += 1;
        }
        let mean = a.edges.len() as f64 / mult.len() as f64;
        assert!(mean > 1.0, "mean multiplicity {mean}");
    }
}
