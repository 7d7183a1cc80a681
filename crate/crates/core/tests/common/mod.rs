//! Shared harness for the integration suites: deterministic random
//! instances and an engine driver that checks each event against the
//! brute-force oracle.

use std::collections::BTreeSet;
use tempomatch::engine::{EngineOptions, MatchReport, StreamEngine, Summary};
use tempomatch::gen;
use tempomatch::io::StreamFile;
use tempomatch::matcher::Polarity;
use tempomatch::oracle;
use tempomatch::query::{QueryEdge, QueryVertex};
use tempomatch::{Embedding, TemporalGraph, TemporalQuery, Timestamp};

pub struct Instance {
    pub stream: StreamFile,
    pub query: TemporalQuery,
    pub window: Timestamp,
    pub label: String,
}

/// Deterministic instance family: sizes, label counts, parallel-edge rates
/// and order densities all cycle with the index; the active window never
/// exceeds 40 edges.
pub fn instance(i: u64) -> Instance {
    let labels = 4 + (i % 5) as usize; // 4..=8
    let vertices = 10 + (i % 7) as usize; // 10..=16
    let rate = 1.0 + (i % 5) as f64 * 0.5; // 1.0..=3.0
    let edges = 60 + (i % 41) as usize; // 60..=100
    let window = 25 + (i % 16); // 25..=40
    let density = [0.0, 0.5, 1.0][(i % 3) as usize];
    let size = 3 + (i % 4) as usize; // 3..=6
    let stream = gen::synth_stream(vertices, edges, labels, rate, 0x5eed ^ i);
    let graph = materialize(&stream);
    let query = walk_query(&graph, size, density, i);
    Instance {
        stream,
        query,
        window,
        label: format!(
            "i={i} labels={labels} vertices={vertices} rate={rate} edges={edges} window={window} density={density} size={size}"
        ),
    }
}

pub fn materialize(stream: &StreamFile) -> TemporalGraph {
    let mut g = TemporalGraph::new(false);
    for (id, label) in &stream.vertices {
        g.add_vertex(*id, label).unwrap();
    }
    for e in &stream.edges {
        let s = g.resolve_vertex(e.src).unwrap();
        let d = g.resolve_vertex(e.dst).unwrap();
        g.insert_edge(s, d, e.elabel.as_deref(), e.ts).unwrap();
    }
    g
}

/// Random-walk a query and impose an order of the given density, re-walking
/// with derived seeds until the witness timestamps are distinct.
pub fn walk_query(graph: &TemporalGraph, size: usize, density: f64, seed: u64) -> TemporalQuery {
    for attempt in 0..256u64 {
        let s = seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15));
        let walked = match gen::random_walk_query(graph, size, s) {
            Ok(w) => w,
            Err(_) => continue,
        };
        let ts: Vec<Timestamp> = walked
            .witness_edges
            .iter()
            .map(|&d| graph.edge(d).ts)
            .collect();
        match gen::impose_order(size, &ts, density, s) {
            Ok(pairs) => {
                let vertices: Vec<QueryVertex> = walked
                    .query
                    .vertices()
                    .map(|u| walked.query.vertex(u).clone())
                    .collect();
                let edges: Vec<QueryEdge> = walked
                    .query
                    .edges()
                    .map(|e| walked.query.edge(e).clone())
                    .collect();
                return TemporalQuery::new(vertices, edges, pairs).unwrap();
            }
            Err(gen::GenError::TimestampCollision) => continue,
            Err(e) => panic!("impose_order: {e}"),
        }
    }
    panic!("no walk with distinct witness timestamps");
}

pub fn engine_options(window: Timestamp, filter: bool, prune: bool) -> EngineOptions {
    let mut opts = EngineOptions::new(window);
    opts.match_opts.filter = filter;
    opts.match_opts.prune = prune;
    opts
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CanonReport {
    pub occurred: bool,
    pub embedding: Embedding,
}

fn canon(r: &MatchReport) -> CanonReport {
    CanonReport {
        occurred: r.polarity == Polarity::Occurred,
        embedding: r.embedding.clone(),
    }
}

pub struct RunResult {
    pub reports: Vec<CanonReport>,
    pub summary: Summary,
}

/// Straight run collecting canonicalized reports.
pub fn run_engine(inst: &Instance, opts: EngineOptions) -> RunResult {
    let mut engine = StreamEngine::new(&inst.stream, inst.query.clone(), opts).unwrap();
    let mut reports = Vec::new();
    let mut sink = |r: &MatchReport| reports.push(canon(r));
    engine.run(&mut sink).unwrap();
    reports.sort();
    RunResult {
        reports,
        summary: engine.summary(),
    }
}

/// Runs the engine event by event; at each event asserts that the reports
/// equal the oracle snapshot diff, and optionally that both incremental
/// tables equal a from-scratch rebuild.
pub fn run_against_oracle(inst: &Instance, check_tables: bool) -> Summary {
    let opts = engine_options(inst.window, true, true);
    let mut engine = StreamEngine::new(&inst.stream, inst.query.clone(), opts).unwrap();
    let mut before: BTreeSet<Embedding> = BTreeSet::new();
    let mut batch: Vec<MatchReport> = Vec::new();
    loop {
        let outcome = engine.step(&mut |r| batch.push(r.clone())).unwrap();
        let Some(outcome) = outcome else { break };
        let after = oracle::enumerate_all(engine.graph(), engine.query());
        let mut want: Vec<CanonReport> = after
            .difference(&before)
            .map(|m| CanonReport {
                occurred: true,
                embedding: m.clone(),
            })
            .chain(before.difference(&after).map(|m| CanonReport {
                occurred: false,
                embedding: m.clone(),
            }))
            .collect();
        want.sort();
        let mut got: Vec<CanonReport> = batch.drain(..).map(|r| canon(&r)).collect();
        got.sort();
        assert_eq!(
            got, want,
            "snapshot diff mismatch at fire time {} ({})",
            outcome.fire_time, inst.label
        );
        if check_tables {
            let g = engine.graph();
            let q = engine.query();
            assert!(
                engine.fwd_table().state_eq(&engine.fwd_table().rebuilt(g, q)),
                "forward table diverged at fire time {} ({})",
                outcome.fire_time,
                inst.label
            );
            assert!(
                engine.rev_table().state_eq(&engine.rev_table().rebuilt(g, q)),
                "reverse table diverged at fire time {} ({})",
                outcome.fire_time,
                inst.label
            );
        }
        before = after;
    }
    engine.summary()
}
