//! The experiment driver: replays a trace through one algorithm and compares its
//! estimates with Dijkstra at every stage.

use std::time::Instant;

use serde::Serialize;

use dsssp_core::ato::CopyRunner;
use dsssp_core::bootstrap::{DispatchKind, EngineKind, Hierarchy, LevelConfig};
use dsssp_core::dense::DenseEngine;
use dsssp_core::es_tree::EsTree;
use dsssp_core::rng::{below, named_stream};
use dsssp_core::sssp::Host;
use dsssp_core::verify::{check_estimate, dijkstra_oracle, ContractVerdict};
use dsssp_core::{AppliedUpdate, DecrementalGraph, UpdateEvent, Vertex, Weight, INF};

use crate::error::{CliError, CliResult};
use crate::threads::Threaded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// Dijkstra from scratch after every update.
    Recompute,
    /// Even–Shiloach tree to depth δ.
    Es,
    /// Bucketed engine on an acyclic input.
    Dag,
    /// Level hierarchy with dense engines.
    Dense,
    /// Level hierarchy with hopset engines.
    Sparse,
    /// `dense` when m > n^1.5, else `sparse`.
    Auto,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Self::Recompute => "recompute",
            Self::Es => "es",
            Self::Dag => "dag",
            Self::Dense => "dense",
            Self::Sparse => "sparse",
            Self::Auto => "auto",
        }
    }

    /// Resolves `auto` for a graph with `n` vertices and `m` edges.
    pub fn resolve(self, n: usize, m: usize) -> Self {
        match self {
            Self::Auto if m as f64 > (n as f64).powf(1.5) => Self::Dense,
            Self::Auto => Self::Sparse,
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    None,
    /// `k` distinct random vertices per stage.
    Sampled(usize),
    Full,
}

impl std::str::FromStr for VerifyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "full" => Ok(Self::Full),
            _ => s
                .strip_prefix("sampled:")
                .and_then(|k| k.parse().ok())
                .map(Self::Sampled)
                .ok_or_else(|| format!("expected none, full or sampled:K, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub algo: Algo,
    pub epsilon: f64,
    /// Depth for `es` and `dag`; defaults to `W·n`.
    pub delta: Option<Weight>,
    pub c: f64,
    pub bundle: Option<usize>,
    pub gamma: Option<u32>,
    /// Separator success parameter for the hierarchy's orders.
    pub zeta: Option<f64>,
    pub verify: VerifyMode,
    pub seed: u64,
    pub workers: usize,
    pub root: Vertex,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            algo: Algo::Auto,
            epsilon: 0.5,
            delta: None,
            c: 2.0,
            bundle: None,
            gamma: None,
            zeta: None,
            verify: VerifyMode::Full,
            seed: 0,
            workers: 1,
            root: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub scans: u64,
    pub repairs: u64,
    pub splits: u64,
}

/// One CSV row. Unverified stages get a single row without vertex data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub stage: u64,
    pub vertex: Option<Vertex>,
    pub exact: Option<Weight>,
    pub estimate: Option<Weight>,
    pub verdict: &'static str,
    pub counters: Counters,
    pub ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub algo: &'static str,
    pub n: usize,
    pub m: usize,
    pub stages: u64,
    pub checked: u64,
    pub ok: u64,
    pub out_of_range: u64,
    pub lower_violations: u64,
    pub upper_violations: u64,
    pub build_ms: f64,
    pub update_ms: f64,
    pub counters: Counters,
    /// Hierarchy only: level count and how internal structures were dispatched.
    pub levels: Option<usize>,
    pub dispatch_pooled: u64,
    pub dispatch_recursive: u64,
    pub dispatch_es: u64,
}

impl Summary {
    pub fn violations(&self) -> u64 {
        self.lower_violations + self.upper_violations
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub summary: Summary,
    pub rows: Vec<Row>,
}

pub const CSV_HEADER: &str = "stage,vertex,exact,estimate,verdict,counter_scans,counter_repairs,counter_splits,ms";

fn field(v: Option<Weight>) -> String {
    match v {
        None => String::new(),
        Some(INF) => "inf".into(),
        Some(x) => x.to_string(),
    }
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let vertex = r.vertex.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.3}\n",
                r.stage,
                vertex,
                field(r.exact),
                field(r.estimate),
                r.verdict,
                r.counters.scans,
                r.counters.repairs,
                r.counters.splits,
                r.ms
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// What an algorithm promises: `estimate ≤ (1+factor)·exact` for exact distances in
/// `[lo, hi]`, and never below the exact distance.
#[derive(Clone, Copy, Debug)]
struct Contract {
    factor: f64,
    lo: Weight,
    hi: Weight,
}

impl Contract {
    fn verdict(&self, exact: Weight, estimate: Weight) -> ContractVerdict {
        let in_range = exact != INF && exact >= self.lo && exact <= self.hi;
        check_estimate(exact, estimate, self.factor, 0, in_range)
    }
}

#[allow(clippy::large_enum_variant)]
enum Tracker {
    Recompute(Vec<Weight>),
    Es(EsTree),
    Dag(DenseEngine),
    Hierarchy(Hierarchy),
}

impl Tracker {
    fn update(&mut self, g: &DecrementalGraph, up: &AppliedUpdate, runner: &dyn CopyRunner, root: Vertex) -> CliResult<()> {
        match self {
            Self::Recompute(d) => *d = dijkstra_oracle(&g.view(), root),
            Self::Es(t) => t.handle_update(g, up),
            Self::Dag(e) => e.handle_update(g, Some(up), &[]),
            Self::Hierarchy(h) => h.handle_update(g, up, runner)?,
        }
        Ok(())
    }

    fn estimate(&self, v: Vertex) -> Weight {
        match self {
            Self::Recompute(d) => d[v],
            Self::Es(t) => t.dist(v),
            Self::Dag(e) => e.query(v),
            Self::Hierarchy(h) => h.query(v),
        }
    }

    fn counters(&self) -> Counters {
        match self {
            Self::Recompute(_) => Counters::default(),
            Self::Es(t) => Counters { scans: t.scans(), ..Counters::default() },
            Self::Dag(e) => {
                let c = e.counters();
                Counters { scans: c.scans, repairs: c.repairs, splits: c.splits }
            }
            Self::Hierarchy(h) => {
                let c = h.counters();
                Counters { scans: c.engines.scans, repairs: c.engines.repairs, splits: c.splits }
            }
        }
    }
}

fn build(g: &DecrementalGraph, algo: Algo, opts: &RunOptions, runner: &dyn CopyRunner) -> CliResult<(Tracker, Contract)> {
    let n = g.n();
    let full = g.weight_bound().saturating_mul(n.max(1) as Weight);
    let delta = opts.delta.unwrap_or(full);
    let root = opts.root;
    Ok(match algo {
        Algo::Recompute => (Tracker::Recompute(dijkstra_oracle(&g.view(), root)), Contract { factor: 0.0, lo: 0, hi: INF - 1 }),
        Algo::Es => {
            let tree = EsTree::build(g, Host::whole(n), root, delta, false);
            (Tracker::Es(tree), Contract { factor: 0.0, lo: 0, hi: delta })
        }
        Algo::Dag => {
            let engine = DenseEngine::dag(g, root, delta, opts.epsilon)
                .map_err(|e| CliError::IncompatibleAlgo { algo: "dag", reason: e.to_string() })?;
            let contract = Contract { factor: 4.0 * opts.epsilon, lo: delta.div_ceil(2), hi: delta.saturating_sub(1) };
            (Tracker::Dag(engine), contract)
        }
        Algo::Dense | Algo::Sparse => {
            let mut cfg = LevelConfig::new(n, g.weight_bound(), opts.epsilon);
            cfg.c = opts.c;
            cfg.engine = if algo == Algo::Dense { EngineKind::Dense } else { EngineKind::Sparse };
            if let Some(l) = opts.bundle {
                cfg.bundle = l;
            }
            if let Some(gm) = opts.gamma {
                cfg.gamma = gm;
            }
            cfg.zeta = opts.zeta;
            let h = Hierarchy::build(g, cfg, Some(root), opts.seed, runner)?;
            (Tracker::Hierarchy(h), Contract { factor: opts.epsilon, lo: 0, hi: full })
        }
        Algo::Auto => unreachable!("resolved before building"),
    })
}

fn sample(n: usize, k: usize, seed: u64, stage: u64) -> Vec<Vertex> {
    let mut rng = named_stream(seed, "verify-sample", stage);
    let mut all: Vec<Vertex> = (0..n).collect();
    let k = k.min(n);
    for i in 0..k {
        let j = i + below(&mut rng, n - i);
        all.swap(i, j);
    }
    all.truncate(k);
    all.sort_unstable();
    all
}

/// Replays `trace` on `graph` with `opts.algo`. Contract violations are counted in the
/// summary, not raised; see [`check_report`].
pub fn run(mut graph: DecrementalGraph, trace: &[UpdateEvent], opts: &RunOptions) -> CliResult<Report> {
    let n = graph.n();
    if opts.root >= n {
        return Err(CliError::Spec(format!("root {} outside a graph of {n} vertices", opts.root)));
    }
    if !(opts.epsilon > 0.0 && opts.epsilon <= 1.0) {
        return Err(CliError::Spec(format!("epsilon {} outside (0, 1]", opts.epsilon)));
    }
    let algo = opts.algo.resolve(n, graph.live_edge_count());
    let runner = Threaded { workers: opts.workers.max(1) };
    let mut summary = Summary { algo: algo.name(), n, m: graph.live_edge_count(), ..Summary::default() };
    let start = Instant::now();
    let (mut tracker, contract) = build(&graph, algo, opts, &runner)?;
    summary.build_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut rows = Vec::new();
    let mut record = |stage: u64, g: &DecrementalGraph, t: &Tracker, ms: f64, summary: &mut Summary| {
        let counters = t.counters();
        let vertices = match opts.verify {
            VerifyMode::None => {
                rows.push(Row { stage, vertex: None, exact: None, estimate: None, verdict: "unchecked", counters, ms });
                return;
            }
            VerifyMode::Full => (0..n).collect(),
            VerifyMode::Sampled(k) => sample(n, k, opts.seed, stage),
        };
        let exact = dijkstra_oracle(&g.view(), opts.root);
        for v in vertices {
            let est = t.estimate(v);
            let verdict = contract.verdict(exact[v], est);
            summary.checked += 1;
            match verdict {
                ContractVerdict::Ok => summary.ok += 1,
                ContractVerdict::OutOfRange => summary.out_of_range += 1,
                ContractVerdict::LowerViolated => summary.lower_violations += 1,
                ContractVerdict::UpperViolated => summary.upper_violations += 1,
            }
            rows.push(Row {
                stage,
                vertex: Some(v),
                exact: Some(exact[v]),
                estimate: Some(est),
                verdict: verdict.as_str(),
                counters,
                ms,
            });
        }
    };
    record(0, &graph, &tracker, summary.build_ms, &mut summary);
    for (i, &ev) in trace.iter().enumerate() {
        let up = graph.apply_update(ev)?;
        let t = Instant::now();
        tracker.update(&graph, &up, &runner, opts.root)?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        summary.update_ms += ms;
        record(i as u64 + 1, &graph, &tracker, ms, &mut summary);
    }
    summary.stages = trace.len() as u64 + 1;
    summary.counters = tracker.counters();
    if let Tracker::Hierarchy(h) = &tracker {
        summary.levels = Some(h.levels());
        for r in h.dispatch_log() {
            match r.kind {
                DispatchKind::Pooled => summary.dispatch_pooled += 1,
                DispatchKind::Recursive => summary.dispatch_recursive += 1,
                DispatchKind::Es => summary.dispatch_es += 1,
            }
        }
    }
    Ok(Report { summary, rows })
}

/// Turns contract violations in a verified run into an error.
pub fn check_report(report: &Report, verify: VerifyMode) -> CliResult<()> {
    let violations = report.summary.violations();
    if verify != VerifyMode::None && violations > 0 {
        return Err(CliError::VerificationFailed { violations });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{full_trace, GraphSpec};

    fn workload(spec: GraphSpec, seed: u64) -> (DecrementalGraph, Vec<UpdateEvent>) {
        let (n, edges) = spec.generate(seed).unwrap();
        let trace = full_trace(&edges, Some(5), seed);
        (DecrementalGraph::new(n, &edges).unwrap(), trace)
    }

    #[test]
    fn recompute_never_violates() {
        let (g, trace) = workload(GraphSpec::Random { n: 20, density: 0.2, max_weight: 5 }, 1);
        let opts = RunOptions { algo: Algo::Recompute, ..RunOptions::default() };
        let report = run(g, &trace, &opts).unwrap();
        assert_eq!(report.summary.violations(), 0);
        assert_eq!(report.summary.checked, 20 * (trace.len() as u64 + 1));
        assert!(report.to_csv().starts_with(CSV_HEADER));
    }

    #[test]
    fn dag_rejects_cycles() {
        let (g, trace) = workload(GraphSpec::Grid { side: 3, max_weight: 2 }, 1);
        let opts = RunOptions { algo: Algo::Dag, delta: Some(8), ..RunOptions::default() };
        assert!(matches!(run(g, &trace, &opts), Err(CliError::IncompatibleAlgo { .. })));
    }

    #[test]
    fn auto_switch() {
        assert_eq!(Algo::Auto.resolve(16, 65), Algo::Dense);
        assert_eq!(Algo::Auto.resolve(16, 64), Algo::Sparse);
        assert_eq!(Algo::Es.resolve(16, 100), Algo::Es);
    }

    #[test]
    fn violations_fail_only_when_verifying() {
        let summary = Summary { upper_violations: 2, ..Summary::default() };
        let report = Report { summary, rows: Vec::new() };
        let err = check_report(&report, VerifyMode::Full).unwrap_err();
        assert!(matches!(err, CliError::VerificationFailed { violations: 2 }));
        assert_eq!(err.exit_code(), 2);
        assert!(check_report(&report, VerifyMode::None).is_ok());
    }

    #[test]
    fn verify_modes_parse() {
        assert_eq!("full".parse::<VerifyMode>(), Ok(VerifyMode::Full));
        assert_eq!("sampled:7".parse::<VerifyMode>(), Ok(VerifyMode::Sampled(7)));
        assert!("sampled:".parse::<VerifyMode>().is_err());
    }

    #[test]
    fn sampled_rows_are_distinct_and_replayable() {
        let (g, trace) = workload(GraphSpec::Random { n: 24, density: 0.15, max_weight: 4 }, 2);
        let opts = RunOptions { algo: Algo::Dense, bundle: Some(2), verify: VerifyMode::Sampled(5), ..RunOptions::default() };
        let a = run(g.clone(), &trace, &opts).unwrap();
        let b = run(g, &trace, &opts).unwrap();
        let strip = |r: &Report| r.rows.iter().map(|x| (x.stage, x.vertex, x.estimate, x.verdict)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.summary.checked, 5 * (trace.len() as u64 + 1));
        assert_eq!(a.summary.violations(), 0);
    }
}
