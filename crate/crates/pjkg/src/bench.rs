//! Computational-metric harness: latency, throughput, and scalability of
//! the graph store under a fixed read-only query workload.
//!
//! Every measurement takes a [`Clock`] so the formula paths are testable
//! with scripted timestamps; real runs use the monotonic wall clock.
//! Queries only ever take `&PropertyGraph`, so workload execution cannot
//! mutate the graph.

use crate::graph::{Direction, PropertyGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("scalability needs at least two factors")]
    NeedsBaseline,
    #[error("concurrency must be at least 1")]
    BadConcurrency,
}

/// One query against the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    FindByLabel { label: String },
    PropertyFilter { label: String, key: String, value: String },
    Neighbors { node_id: String },
    JourneyTraversal { patient_id: String },
}

impl Query {
    pub fn kind(&self) -> &'static str {
        match self {
            Query::FindByLabel { .. } => "find-by-label",
            Query::PropertyFilter { .. } => "property-filter",
            Query::Neighbors { .. } => "neighbors",
            Query::JourneyTraversal { .. } => "journey-traversal",
        }
    }

    /// Executes the query, returning a result count so the optimizer
    /// cannot discard the work.
    pub fn run(&self, graph: &PropertyGraph) -> usize {
        match self {
            Query::FindByLabel { label } => {
                graph.find_nodes(label, None).map(|v| v.len()).unwrap_or(0)
            }
            Query::PropertyFilter { label, key, value } => graph
                .find_nodes(label, Some((key, value)))
                .map(|v| v.len())
                .unwrap_or(0),
            Query::Neighbors { node_id } => graph
                .neighbors(node_id, Direction::Both, None)
                .map(|v| v.len())
                .unwrap_or(0),
            Query::JourneyTraversal { patient_id } => {
                graph.journey(patient_id).map(|v| v.len()).unwrap_or(0)
            }
        }
    }
}

/// Parameter-free description of a workload; queries are instantiated
/// against a concrete graph so the same spec applies across scale
/// factors.
#[derive(Debug, Clone, Copy)]
pub struct WorkloadSpec {
    pub queries: usize,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        // 1000 queries: 40% find-by-label, 30% neighbors,
        // 20% property-filter, 10% journey-traversal
        WorkloadSpec {
            queries: 1000,
            seed: 42,
        }
    }
}

impl WorkloadSpec {
    /// Instantiates the concrete query list for a graph, choosing
    /// parameters with a seeded RNG.
    pub fn instantiate(&self, graph: &PropertyGraph) -> Vec<Query> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let labels: Vec<String> = graph
            .schema()
            .classes
            .iter()
            .map(|c| c.label.clone())
            .collect();
        let node_ids: Vec<String> = graph.nodes().map(|n| n.id.clone()).collect();
        let patient_ids: Vec<String> = graph
            .nodes()
            .filter(|n| n.label == "Patient")
            .map(|n| n.id.clone())
            .collect();

        let mut queries = Vec::with_capacity(self.queries);
        for i in 0..self.queries {
            let bucket = i % 10;
            let query = if bucket < 4 {
                Query::FindByLabel {
                    label: labels.choose(&mut rng).cloned().unwrap_or_default(),
                }
            } else if bucket < 7 {
                match node_ids.choose(&mut rng) {
                    Some(id) => Query::Neighbors { node_id: id.clone() },
                    None => Query::FindByLabel {
                        label: labels.choose(&mut rng).cloned().unwrap_or_default(),
                    },
                }
            } else if bucket < 9 {
                // sample an existing (node, property) pair so filters hit
                let pick = node_ids
                    .choose(&mut rng)
                    .and_then(|id| graph.node(id))
                    .and_then(|n| {
                        let props: Vec<_> = n.properties.iter().collect();
                        props
                            .get(rng.gen_range(0..props.len().max(1)).min(props.len().saturating_sub(1)))
                            .map(|(k, v)| (n.label.clone(), (*k).clone(), (*v).clone()))
                    });
                match pick {
                    Some((label, key, value)) => Query::PropertyFilter { label, key, value },
                    None => Query::FindByLabel {
                        label: labels.choose(&mut rng).cloned().unwrap_or_default(),
                    },
                }
            } else {
                match patient_ids.choose(&mut rng) {
                    Some(id) => Query::JourneyTraversal {
                        patient_id: id.clone(),
                    },
                    None => Query::FindByLabel {
                        label: labels.choose(&mut rng).cloned().unwrap_or_default(),
                    },
                }
            };
            queries.push(query);
        }
        queries
    }
}

/// Time source for measurements.
pub trait Clock {
    fn now(&mut self) -> Duration;
}

/// Monotonic wall clock.
pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn new() -> MonotonicClock {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&mut self) -> Duration {
        self.0.elapsed()
    }
}

/// Scripted clock for deterministic formula tests: returns the queued
/// timestamps in order, then repeats the last one.
pub struct ScriptedClock {
    times: std::collections::VecDeque<Duration>,
    last: Duration,
}

impl ScriptedClock {
    pub fn from_millis(times: &[f64]) -> ScriptedClock {
        ScriptedClock {
            times: times
                .iter()
                .map(|ms| Duration::from_nanos((ms * 1e6) as u64))
                .collect(),
            last: Duration::ZERO,
        }
    }
}

impl Clock for ScriptedClock {
    fn now(&mut self) -> Duration {
        if let Some(t) = self.times.pop_front() {
            self.last = t;
        }
        self.last
    }
}

/// Latency and throughput figures with a per-kind breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub mean_latency_ms: f64,
    pub throughput_qps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalability_pct: Option<f64>,
    pub per_kind_breakdown: BTreeMap<String, KindStats>,
    pub environment: Environment,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KindStats {
    pub queries: usize,
    pub mean_latency_ms: f64,
}

/// Host descriptor embedded in every report so numbers are never compared
/// across machines silently.
#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
}

impl Environment {
    pub fn capture() -> Environment {
        Environment {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            logical_cpus: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Table mirroring the performance-comparison layout.
    pub fn to_table(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:>14} {:>22} {:>20}",
            "Store", "Latency (ms)", "Throughput (q/s)", "Scalability (%)"
        );
        let _ = writeln!(out, "{:-<20} {:->14} {:->22} {:->20}", "", "", "", "");
        let scal = self
            .scalability_pct
            .map(|s| format!("{s:.2}"))
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "{:<20} {:>14.4} {:>22.2} {:>20}",
            "embedded", self.mean_latency_ms, self.throughput_qps, scal
        );
        let _ = writeln!(
            out,
            "host: {} {} ({} cpus)",
            self.environment.os, self.environment.arch, self.environment.logical_cpus
        );
        out
    }
}

fn duration_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Mean wall-clock latency in milliseconds, with per-query durations
/// retained for the breakdown.
pub fn measure_latency(
    graph: &PropertyGraph,
    queries: &[Query],
    clock: &mut dyn Clock,
) -> Result<(f64, BTreeMap<String, KindStats>), BenchError> {
    if queries.is_empty() {
        return Err(BenchError::EmptyWorkload);
    }
    let mut total = Duration::ZERO;
    let mut by_kind: BTreeMap<String, (usize, Duration)> = BTreeMap::new();
    for query in queries {
        let start = clock.now();
        std::hint::black_box(query.run(graph));
        let elapsed = clock.now().saturating_sub(start);
        total += elapsed;
        let entry = by_kind.entry(query.kind().to_string()).or_default();
        entry.0 += 1;
        entry.1 += elapsed;
    }
    let mean = duration_ms(total) / queries.len() as f64;
    let breakdown = by_kind
        .into_iter()
        .map(|(kind, (count, dur))| {
            (
                kind,
                KindStats {
                    queries: count,
                    mean_latency_ms: duration_ms(dur) / count as f64,
                },
            )
        })
        .collect();
    Ok((mean, breakdown))
}

/// Completed queries per second of total wall-clock time, with
/// `concurrency` read workers splitting the workload.
pub fn measure_throughput(
    graph: &PropertyGraph,
    queries: &[Query],
    concurrency: usize,
    clock: &mut dyn Clock,
) -> Result<f64, BenchError> {
    if queries.is_empty() {
        return Err(BenchError::EmptyWorkload);
    }
    if concurrency == 0 {
        return Err(BenchError::BadConcurrency);
    }
    let start = clock.now();
    if concurrency == 1 {
        for query in queries {
            std::hint::black_box(query.run(graph));
        }
    } else {
        let chunk = queries.len().div_ceil(concurrency);
        std::thread::scope(|scope| {
            for part in queries.chunks(chunk) {
                scope.spawn(move || {
                    for query in part {
                        std::hint::black_box(query.run(graph));
                    }
                });
            }
        });
    }
    let total = clock.now().saturating_sub(start);
    let secs = total.as_secs_f64();
    if secs == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(queries.len() as f64 / secs)
}

/// Scalability: relative latency change from the smallest to the largest
/// factor, positive when latency improved or held under load:
/// (L(min) - L(max)) / L(min) x 100.
pub fn scalability_pct(latency_at_min: f64, latency_at_max: f64) -> f64 {
    (latency_at_min - latency_at_max) / latency_at_min * 100.0
}

/// Builds a graph at each factor via `build`, measures mean latency on
/// each, and applies the scalability formula to the smallest and largest
/// factors.
pub fn measure_scalability<F>(
    mut build: F,
    factors: &[u32],
    spec: &WorkloadSpec,
    clock: &mut dyn Clock,
) -> Result<f64, BenchError>
where
    F: FnMut(u32) -> PropertyGraph,
{
    if factors.len() < 2 {
        return Err(BenchError::NeedsBaseline);
    }
    let mut sorted = factors.to_vec();
    sorted.sort_unstable();
    let mut latencies = BTreeMap::new();
    for &factor in &[sorted[0], *sorted.last().expect("non-empty")] {
        let graph = build(factor);
        let queries = spec.instantiate(&graph);
        if queries.is_empty() {
            return Err(BenchError::EmptyWorkload);
        }
        let (mean, _) = measure_latency(&graph, &queries, clock)?;
        latencies.insert(factor, mean);
    }
    let min = latencies[&sorted[0]];
    let max = latencies[sorted.last().expect("non-empty")];
    Ok(scalability_pct(min, max))
}

/// Replicates a graph `factor` times with fresh ids, for scalability
/// runs: copy k gets every node and edge under an `s<k>:` id prefix.
pub fn replicate_graph(graph: &PropertyGraph, factor: u32) -> PropertyGraph {
    let mut scaled = PropertyGraph::new(graph.schema_arc());
    for k in 0..factor.max(1) {
        let mut sub = crate::graph::Subgraph::default();
        for node in graph.nodes() {
            let mut copy = node.clone();
            copy.id = format!("s{k}:{}", node.id);
            if copy.label == "Patient" {
                copy.properties
                    .insert("ID".to_string(), copy.id.clone());
            }
            sub.push_node(copy);
        }
        for edge in graph.edges() {
            let mut copy = edge.clone();
            copy.source_id = format!("s{k}:{}", edge.source_id);
            copy.target_id = format!("s{k}:{}", edge.target_id);
            sub.push_edge(copy);
        }
        scaled
            .merge_subgraph(&sub)
            .expect("replicated graph stays valid");
    }
    scaled
}

/// Runs the default latency + throughput pass over one graph.
pub fn run_bench(
    graph: &PropertyGraph,
    spec: &WorkloadSpec,
    concurrency: usize,
    clock: &mut dyn Clock,
) -> Result<BenchReport, BenchError> {
    let queries = spec.instantiate(graph);
    let (mean_latency_ms, per_kind_breakdown) = measure_latency(graph, &queries, clock)?;
    let throughput_qps = measure_throughput(graph, &queries, concurrency, clock)?;
    Ok(BenchReport {
        mean_latency_ms,
        throughput_qps,
        scalability_pct: None,
        per_kind_breakdown,
        environment: Environment::capture(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Node};
    use crate::ontology::OntologySchema;
    use std::sync::Arc;

    fn sample_graph() -> PropertyGraph {
        let mut g = PropertyGraph::new(Arc::new(OntologySchema::default_schema()));
        g.add_node(Node::new("PA1", "Patient").with_property("ID", "PA1")).unwrap();
        g.add_node(Node::new("PA1:1", "Encounter").with_property("Encounter Number", "1"))
            .unwrap();
        g.add_edge(Edge::new("PA1", "HAS_START", "PA1:1")).unwrap();
        g
    }

    #[test]
    fn latency_mean_with_scripted_clock() {
        let g = sample_graph();
        let queries = vec![
            Query::FindByLabel { label: "Patient".to_string() };
            3
        ];
        // per-query windows: 2.0, 2.4, 2.8 ms
        let mut clock = ScriptedClock::from_millis(&[0.0, 2.0, 2.0, 4.4, 4.4, 7.2]);
        let (mean, breakdown) = measure_latency(&g, &queries, &mut clock).unwrap();
        assert!((mean - 2.4).abs() < 1e-9);
        assert_eq!(breakdown["find-by-label"].queries, 3);
    }

    #[test]
    fn empty_workload_rejected() {
        let g = sample_graph();
        let mut clock = MonotonicClock::new();
        assert_eq!(
            measure_latency(&g, &[], &mut clock),
            Err(BenchError::EmptyWorkload)
        );
        assert_eq!(
            measure_throughput(&g, &[], 1, &mut clock),
            Err(BenchError::EmptyWorkload)
        );
    }

    #[test]
    fn throughput_quotient_with_scripted_clock() {
        let g = sample_graph();
        let queries = vec![Query::FindByLabel { label: "Patient".to_string() }; 3000];
        let mut clock = ScriptedClock::from_millis(&[0.0, 1000.0]);
        let qps = measure_throughput(&g, &queries, 1, &mut clock).unwrap();
        assert!((qps - 3000.0).abs() < 1e-9);
    }

    #[test]
    fn throughput_rejects_zero_concurrency() {
        let g = sample_graph();
        let queries = vec![Query::FindByLabel { label: "Patient".to_string() }];
        let mut clock = MonotonicClock::new();
        assert_eq!(
            measure_throughput(&g, &queries, 0, &mut clock),
            Err(BenchError::BadConcurrency)
        );
    }

    #[test]
    fn scalability_formula() {
        assert!((scalability_pct(2.0, 2.0)).abs() < 1e-12);
        // L(1)=2.0, L(4)=1.8548 -> +7.26%
        assert!((scalability_pct(2.0, 1.8548) - 7.26).abs() < 1e-9);
        // degradation is negative
        assert!(scalability_pct(2.0, 2.2) < 0.0);
    }

    #[test]
    fn scalability_needs_two_factors() {
        let spec = WorkloadSpec { queries: 10, seed: 1 };
        let mut clock = MonotonicClock::new();
        let err = measure_scalability(|_| sample_graph(), &[1], &spec, &mut clock).unwrap_err();
        assert_eq!(err, BenchError::NeedsBaseline);
    }

    #[test]
    fn workload_instantiation_is_deterministic_and_mix_is_fixed() {
        let g = sample_graph();
        let spec = WorkloadSpec { queries: 100, seed: 7 };
        let a = spec.instantiate(&g);
        let b = spec.instantiate(&g);
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        let finds = a.iter().filter(|q| q.kind() == "find-by-label").count();
        assert_eq!(finds, 40);
    }

    #[test]
    fn workload_execution_does_not_mutate_graph() {
        let g = sample_graph();
        let before = g.to_canonical_json();
        let spec = WorkloadSpec { queries: 50, seed: 3 };
        let mut clock = MonotonicClock::new();
        run_bench(&g, &spec, 2, &mut clock).unwrap();
        assert_eq!(g.to_canonical_json(), before);
    }

    #[test]
    fn real_clock_smoke() {
        let g = sample_graph();
        let spec = WorkloadSpec { queries: 200, seed: 5 };
        let mut clock = MonotonicClock::new();
        let report = run_bench(&g, &spec, 1, &mut clock).unwrap();
        assert!(report.mean_latency_ms > 0.0);
        assert!(report.throughput_qps > 0.0);
        assert!(!report.per_kind_breakdown.is_empty());
        assert!(report.environment.logical_cpus >= 1);
    }
}
