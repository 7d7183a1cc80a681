//! Event loop: merges the arrival stream with the expiration queue, keeps
//! the graph, both max-min tables and the candidate index in step, and
//! dispatches matching for every event.
//!
//! Expired embeddings are enumerated before the dying edge is torn out of
//! the structures; a deleted edge could no longer appear in any mapping.
//! At equal fire times expirations run first: when an edge with timestamp t
//! arrives, the window (t - w, t] has already dropped timestamp t - w.

use crate::dag;
use crate::filter::{CandidateIndex, FilterDag, MaxMinTable, Orientation};
use crate::graph::{EdgeId, GraphError, TemporalGraph, Timestamp, VertexId};
use crate::io::StreamFile;
use crate::matcher::{Abort, Embedding, MatchOptions, MatchStats, Matcher, Polarity};
use crate::query::{QueryError, TemporalQuery};
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("window must be positive")]
    ZeroWindow,
    #[error("invalid query: {0:?}")]
    Query(Vec<QueryError>),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("stream references unknown vertex {0}")]
    UnknownStreamVertex(u64),
    #[error("deadline exceeded")]
    Timeout,
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub window: Timestamp,
    pub directed: bool,
    pub match_opts: MatchOptions,
}

impl EngineOptions {
    pub fn new(window: Timestamp) -> Self {
        EngineOptions {
            window,
            directed: false,
            match_opts: MatchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Summary {
    pub events_processed: u64,
    pub embeddings_occurred: u64,
    pub embeddings_expired: u64,
    pub search_nodes_visited: u64,
    pub candidate_pairs_current: u64,
    pub peak_candidate_pairs: u64,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "events_processed={}", self.events_processed)?;
        writeln!(f, "embeddings_occurred={}", self.embeddings_occurred)?;
        writeln!(f, "embeddings_expired={}", self.embeddings_expired)?;
        writeln!(f, "search_nodes_visited={}", self.search_nodes_visited)?;
        writeln!(f, "candidate_pairs_current={}", self.candidate_pairs_current)?;
        write!(f, "peak_candidate_pairs={}", self.peak_candidate_pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchReport {
    pub fire_time: Timestamp,
    pub polarity: Polarity,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Expiration,
}

#[derive(Debug, Clone, Copy)]
pub struct EventOutcome {
    pub fire_time: Timestamp,
    pub kind: EventKind,
    pub edge: EdgeId,
    pub reports: u64,
}

/// Immutable between-events view of the engine's structures.
pub struct Snapshot<'a> {
    pub graph: &'a TemporalGraph,
    pub query: &'a TemporalQuery,
    pub fwd: &'a crate::filter::MaxMinTable,
    pub rev: &'a crate::filter::MaxMinTable,
    pub index: &'a crate::filter::CandidateIndex,
    pub last_fire_time: Timestamp,
}

struct Arrival {
    src: VertexId,
    dst: VertexId,
    elabel: Option<String>,
    ts: Timestamp,
}

pub struct StreamEngine {
    graph: TemporalGraph,
    query: TemporalQuery,
    fwd: MaxMinTable,
    rev: MaxMinTable,
    index: CandidateIndex,
    arrivals: Vec<Arrival>,
    cursor: usize,
    pending: VecDeque<(Timestamp, EdgeId)>,
    options: EngineOptions,
    summary: Summary,
    last_fire: Timestamp,
    stopped: bool,
}

impl StreamEngine {
    pub fn new(
        stream: &StreamFile,
        query: TemporalQuery,
        options: EngineOptions,
    ) -> Result<Self, EngineError> {
        if options.window == 0 {
            return Err(EngineError::ZeroWindow);
        }
        query.validate().map_err(EngineError::Query)?;
        let mut graph = TemporalGraph::new(options.directed);
        for (ext, label) in &stream.vertices {
            graph.add_vertex(*ext, label)?;
        }
        // Labels that only ever appear on edges must be interned before the
        // query is resolved against the graph.
        for edge in &stream.edges {
            if let Some(l) = &edge.elabel {
                graph.intern_label(l);
            }
        }
        let mut arrivals = Vec::with_capacity(stream.edges.len());
        for edge in &stream.edges {
            let src = graph
                .resolve_vertex(edge.src)
                .ok_or(EngineError::UnknownStreamVertex(edge.src))?;
            let dst = graph
                .resolve_vertex(edge.dst)
                .ok_or(EngineError::UnknownStreamVertex(edge.dst))?;
            arrivals.push(Arrival {
                src,
                dst,
                elabel: edge.elabel.clone(),
                ts: edge.ts,
            });
        }
        let fwd_dag = dag::best_dag(&query).map_err(|e| EngineError::Query(vec![e]))?;
        let rev_dag = fwd_dag.reverse(&query);
        let fwd = MaxMinTable::new(FilterDag::new(&query, &graph, fwd_dag, Orientation::Forward));
        let rev = MaxMinTable::new(FilterDag::new(&query, &graph, rev_dag, Orientation::Reverse));
        Ok(StreamEngine {
            graph,
            query,
            fwd,
            rev,
            index: CandidateIndex::new(),
            arrivals,
            cursor: 0,
            pending: VecDeque::new(),
            options,
            summary: Summary::default(),
            last_fire: 0,
            stopped: false,
        })
    }

    pub fn graph(&self) -> &TemporalGraph {
        &self.graph
    }

    pub fn query(&self) -> &TemporalQuery {
        &self.query
    }

    pub fn fwd_table(&self) -> &MaxMinTable {
        &self.fwd
    }

    pub fn rev_table(&self) -> &MaxMinTable {
        &self.rev
    }

    pub fn index(&self) -> &CandidateIndex {
        &self.index
    }

    pub fn summary(&self) -> Summary {
        self.summary
    }

    pub fn last_fire_time(&self) -> Timestamp {
        self.last_fire
    }

    /// Read-only view of the engine state between events. Rust's borrow
    /// rules make a mid-event call impossible: `step` holds the engine
    /// exclusively while an event is in flight.
    pub fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            graph: &self.graph,
            query: &self.query,
            fwd: &self.fwd,
            rev: &self.rev,
            index: &self.index,
            last_fire_time: self.last_fire,
        }
    }

    fn matcher(&self) -> Matcher<'_> {
        Matcher {
            graph: &self.graph,
            q: &self.query,
            fwd: &self.fwd,
            rev: &self.rev,
            index: &self.index,
            opts: self.options.match_opts.clone(),
        }
    }

    /// Processes the next event, feeding each report to `sink`. Returns None
    /// when the stream is drained (or a report limit stopped the run).
    pub fn step(
        &mut self,
        sink: &mut dyn FnMut(&MatchReport),
    ) -> Result<Option<EventOutcome>, EngineError> {
        if self.stopped {
            return Ok(None);
        }
        if let Some(deadline) = self.options.match_opts.deadline {
            if std::time::Instant::now() >= deadline {
                return Err(EngineError::Timeout);
            }
        }
        let next_arrival_ts = self.arrivals.get(self.cursor).map(|a| a.ts);
        let next_expiry = self.pending.front().copied();
        let outcome = match (next_arrival_ts, next_expiry) {
            (None, None) => return Ok(None),
            (Some(_), Some((fire, d))) if fire <= next_arrival_ts.unwrap() => {
                self.fire_expiration(fire, d, sink)?
            }
            (None, Some((fire, d))) => self.fire_expiration(fire, d, sink)?,
            (Some(ts), _) => self.fire_arrival(ts, sink)?,
        };
        self.summary.events_processed += 1;
        self.summary.candidate_pairs_current = self.index.len() as u64;
        self.summary.peak_candidate_pairs = self.index.peak() as u64;
        Ok(Some(outcome))
    }

    fn fire_arrival(
        &mut self,
        ts: Timestamp,
        sink: &mut dyn FnMut(&MatchReport),
    ) -> Result<EventOutcome, EngineError> {
        let arrival = &self.arrivals[self.cursor];
        self.cursor += 1;
        let d = self.graph.insert_edge(
            arrival.src,
            arrival.dst,
            arrival.elabel.as_deref(),
            arrival.ts,
        )?;
        self.pending.push_back((ts + self.options.window, d));
        self.last_fire = ts;

        let fwd_delta = self.fwd.tcm_insertion(&self.graph, &self.query, d);
        let rev_delta = self.rev.tcm_insertion(&self.graph, &self.query, d);
        self.index
            .apply_delta(&self.fwd, &self.rev, &fwd_delta, &rev_delta);

        let reports = self.dispatch(d, ts, Polarity::Occurred, sink)?;
        Ok(EventOutcome {
            fire_time: ts,
            kind: EventKind::Arrival,
            edge: d,
            reports,
        })
    }

    fn fire_expiration(
        &mut self,
        fire: Timestamp,
        d: EdgeId,
        sink: &mut dyn FnMut(&MatchReport),
    ) -> Result<EventOutcome, EngineError> {
        self.pending.pop_front();
        self.last_fire = fire;

        // Match before teardown so the dying edge can still be mapped.
        let reports = self.dispatch(d, fire, Polarity::Expired, sink)?;

        let fwd_delta = self.fwd.tcm_deletion(&self.graph, &self.query, d);
        let rev_delta = self.rev.tcm_deletion(&self.graph, &self.query, d);
        self.index
            .apply_delta(&self.fwd, &self.rev, &fwd_delta, &rev_delta);
        self.graph.delete_expired(d)?;
        Ok(EventOutcome {
            fire_time: fire,
            kind: EventKind::Expiration,
            edge: d,
            reports,
        })
    }

    fn dispatch(
        &mut self,
        d: EdgeId,
        fire_time: Timestamp,
        polarity: Polarity,
        sink: &mut dyn FnMut(&MatchReport),
    ) -> Result<u64, EngineError> {
        let mut stats = MatchStats::default();
        // The per-run report budget spans events.
        let all_emitted = self.summary.embeddings_occurred + self.summary.embeddings_expired;
        let mut matcher = self.matcher();
        if let Some(limit) = matcher.opts.limit {
            let remaining = limit.saturating_sub(all_emitted);
            if remaining == 0 {
                self.stopped = true;
                return Ok(0);
            }
            matcher.opts.limit = Some(remaining);
        }
        let mut reports = 0u64;
        let result = matcher.find_matches(d, polarity, &mut stats, &mut |emb, pol| {
            let report = MatchReport {
                fire_time,
                polarity: pol,
                embedding: emb.clone(),
            };
            reports += 1;
            sink(&report);
        });
        self.summary.search_nodes_visited += stats.nodes_visited;
        match polarity {
            Polarity::Occurred => self.summary.embeddings_occurred += reports,
            Polarity::Expired => self.summary.embeddings_expired += reports,
        }
        match result {
            Ok(()) => Ok(reports),
            Err(Abort::Limit) => {
                self.stopped = true;
                Ok(reports)
            }
            Err(Abort::Deadline) => Err(EngineError::Timeout),
        }
    }

    /// Drives the event loop to completion.
    pub fn run(&mut self, sink: &mut dyn FnMut(&MatchReport)) -> Result<Summary, EngineError> {
        while self.step(sink)?.is_some() {}
        Ok(self.summary)
    }

    /// Window invariant: the active edge set is exactly the set of inserted
    /// edges with timestamp in (t - w, t] for the last fire time t.
    pub fn window_invariant_holds(&self) -> bool {
        let w = self.options.window;
        let t = self.last_fire;
        let mut inserted = 0usize;
        for i in 0..self.cursor {
            let ts = self.arrivals[i].ts;
            let should_be_active = ts <= t && t < ts + w;
            inserted += usize::from(should_be_active);
            if should_be_active != self.graph.is_active(EdgeId(i as u32)) {
                return false;
            }
        }
        inserted == self.graph.active_edge_count()
    }
}
