//! The level hierarchy that bootstraps restricted SSSP from approximate topological
//! orders, and the multi-scale query on top of it.
//!
//! Level `i` keeps a bundle of orders built with depth `2^(i-2)` (levels `i ≤ 2` use the
//! trivial order). The restricted SSSP structures those orders need are dispatched by
//! host size: large hosts get a multi-scale structure over strictly lower bundles running
//! on the whole graph, small hosts a recursive hierarchy on a copy of the host.
//!
//! All multi-scale structures live in one [`Pool`] per hierarchy. An engine is keyed by
//! `(bundle level, copy, root, direction, depth, ε)`, so structures requested by
//! different levels, copies or the top-level query share engines whenever they agree on
//! all of these.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use spin::{Mutex, MutexGuard};

use crate::ato::{AtoBundle, AtoConfig, CopyRunner, Sequential};
use crate::dense::{BucketViolation, DenseConfig, DenseCounters, DenseEngine};
use crate::error::{Error, Result};
use crate::es_tree::{Directions, EsSssp};
use crate::graph::{AppliedUpdate, DecrementalGraph, EdgeId, UpdateEvent, Vertex, Weight, INF};
use crate::rng::named_stream;
use crate::scc_topo::SplitEvent;
use crate::sparse::{SparseConfig, SparseEngine};
use crate::sssp::{Host, RestrictedSssp, SsspFactory};

use rand_core::RngCore;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Dense,
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelConfig {
    /// Highest level; levels run `0..=max_level`.
    pub max_level: usize,
    /// Hosts with at least `n / 2^γ` vertices are served on the whole graph.
    pub gamma: u32,
    pub c: f64,
    /// Copies per bundle (`ℓ`).
    pub bundle: usize,
    /// Accuracy of the top-level query.
    pub epsilon: f64,
    pub engine: EngineKind,
    /// Separator success parameter handed to every order; `None` keeps the default.
    pub zeta: Option<f64>,
    /// Engines over bundle `k` assume quality `quality · n / 2^k`.
    pub quality: f64,
    /// Nesting depth below which small hosts get recursive hierarchies; at the cap they
    /// get ES trees.
    pub recursion_cap: usize,
    pub stride: bool,
}

impl LevelConfig {
    /// Defaults for a graph with `n` vertices and maximum weight `w`; `ℓ = ⌈40 c ln n⌉`.
    pub fn new(n: usize, w: Weight, epsilon: f64) -> Self {
        let c = 2.0;
        Self {
            max_level: max_level(n, w),
            gamma: 4,
            c,
            bundle: libm::ceil(40.0 * c * libm::log(n.max(2) as f64)) as usize,
            epsilon,
            engine: EngineKind::Dense,
            zeta: None,
            quality: 1.0,
            recursion_cap: 2,
            stride: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1]"));
        }
        if self.bundle == 0 {
            return Err(Error::InvalidParameter("a bundle needs at least one copy"));
        }
        if self.quality <= 0.0 || self.quality.is_nan() {
            return Err(Error::InvalidParameter("quality must be positive"));
        }
        Ok(())
    }
}

/// `⌊lg(W·n)⌋`, at least 0.
pub fn max_level(n: usize, w: Weight) -> usize {
    let wn = (w.max(1) as u128) * (n.max(1) as u128);
    (127 - wn.leading_zeros()) as usize
}

/// Depth of the orders in bundle `level`; 0 for the trivial levels.
pub fn level_delta(level: usize) -> Weight {
    if level <= 2 {
        0
    } else {
        1 << (level - 2).min(62)
    }
}

/// One scale of a multi-scale structure: engines over bundle `level` with depth `depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub level: usize,
    pub depth: Weight,
}

/// How a structure of depth `δ` and accuracy `ε` splits into scales, given `available`
/// bundles. Returns the ES depth and the scales.
///
/// With `ε_s = ε/4`, the ES tree covers distances up to `⌈1/ε_s⌉` exactly and bundle `k`
/// covers `[2^(k-1)/ε_s, 2^k/ε_s]`, where its diameter term `2^k` costs at most
/// `2ε_s·dist` and the engine's own slack another `2ε_s·dist`.
pub fn scale_plan(depth: Weight, epsilon: f64, available: usize) -> (Weight, Vec<Scale>) {
    let inv = 4.0 / epsilon;
    let es = (libm::ceil(inv) as Weight).min(depth);
    let mut scales = Vec::new();
    for level in 1..available {
        let lo = libm::ldexp(inv, level as i32 - 1);
        if lo >= depth as f64 {
            break;
        }
        let hi = libm::ceil(libm::ldexp(inv, level as i32));
        let d = if hi >= depth as f64 { depth } else { hi as Weight };
        scales.push(Scale { level, depth: d });
    }
    (es, scales)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct EngineKey {
    level: usize,
    copy: usize,
    root: Vertex,
    reversed: bool,
    depth: Weight,
    eps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntryKey {
    root: Vertex,
    depth: Weight,
    eps: u64,
    both: bool,
}

impl EntryKey {
    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn depth(&self) -> Weight {
        self.depth
    }
}

#[allow(clippy::large_enum_variant)]
enum ScaleEngine {
    Dense(DenseEngine),
    Sparse(SparseEngine),
}

impl ScaleEngine {
    fn query(&self, v: Vertex) -> Weight {
        match self {
            Self::Dense(e) => e.query(v),
            Self::Sparse(e) => e.query(v),
        }
    }

    fn counters(&self) -> DenseCounters {
        match self {
            Self::Dense(e) => e.counters(),
            Self::Sparse(e) => e.counters().as_dense(),
        }
    }

    fn handle_update(&mut self, graph: &DecrementalGraph, up: &AppliedUpdate, splits: &[SplitEvent]) {
        match self {
            Self::Dense(e) => e.handle_update(graph, Some(up), splits),
            Self::Sparse(e) => e.handle_update(graph, Some(up), splits),
        }
    }

    /// Moves whenever some estimate may have changed.
    fn change_count(&self) -> u64 {
        let c = self.counters();
        c.increments + c.splits
    }
}

struct PoolEngine {
    engine: ScaleEngine,
    seen: u64,
}

struct Entry {
    es: (Vertex, Weight),
    engines: Vec<EngineKey>,
    from: Vec<Weight>,
    to: Vec<Weight>,
    dirty: bool,
    generation: u64,
}

/// Per-scale estimate of one vertex, for reports and the minimum-selector audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScaleEstimate {
    /// Bundle level, or `None` for the small-distance ES tree.
    pub level: Option<usize>,
    pub copy: usize,
    pub depth: Weight,
    pub estimate: Weight,
}

/// The multi-scale structures of one hierarchy, shared by all of its levels.
pub struct Pool {
    n: usize,
    seed: u64,
    config: LevelConfig,
    bundles: Vec<Arc<Mutex<AtoBundle>>>,
    es: BTreeMap<(Vertex, Weight), (EsSssp, u64)>,
    engines: BTreeMap<EngineKey, PoolEngine>,
    entries: BTreeMap<EntryKey, Entry>,
    es_users: BTreeMap<(Vertex, Weight), Vec<EntryKey>>,
    engine_users: BTreeMap<EngineKey, Vec<EntryKey>>,
}

impl Pool {
    fn new(n: usize, seed: u64, config: LevelConfig) -> Self {
        Self {
            n,
            seed,
            config,
            bundles: Vec::new(),
            es: BTreeMap::new(),
            engines: BTreeMap::new(),
            entries: BTreeMap::new(),
            es_users: BTreeMap::new(),
            engine_users: BTreeMap::new(),
        }
    }

    fn key(root: Vertex, depth: Weight, epsilon: f64, both: bool) -> EntryKey {
        EntryKey { root, depth, eps: epsilon.to_bits(), both }
    }

    fn engine_seed(&self, key: &EngineKey) -> u64 {
        let index = (((key.level * 4096 + key.copy) * self.n + key.root) * 2 + key.reversed as usize) as u64;
        named_stream(self.seed ^ key.depth, "scale-engine", index).next_u64()
    }

    fn build_engine(&self, graph: &DecrementalGraph, key: &EngineKey) -> Result<ScaleEngine> {
        let bundle = self.bundles[key.level].lock();
        let ato = &bundle.copies()[key.copy];
        let epsilon = f64::from_bits(key.eps) / 4.0;
        let mut quality = (self.config.quality * self.n as f64 / libm::ldexp(1.0, key.level as i32)).max(1.0);
        Ok(match self.config.engine {
            EngineKind::Dense => {
                let mut cfg = DenseConfig::new(key.depth, epsilon, quality, ato.eta_diam());
                cfg.stride = self.config.stride;
                cfg.reversed = key.reversed;
                ScaleEngine::Dense(DenseEngine::new(graph, ato.topo(), key.root, cfg))
            }
            EngineKind::Sparse => {
                quality = quality.max(libm::ceil(self.n as f64 / key.depth as f64));
                let mut cfg = SparseConfig::new(key.depth, epsilon, quality, ato.eta_diam());
                cfg.c = self.config.c;
                cfg.reversed = key.reversed;
                let mut rng = named_stream(self.engine_seed(key), "sparse-sample", 0);
                ScaleEngine::Sparse(SparseEngine::new(graph, ato.topo(), key.root, cfg, &mut rng)?)
            }
        })
    }

    /// Makes sure the structure `key` exists, building whatever it is missing from the
    /// current state of the graph and bundles.
    fn ensure(&mut self, graph: &DecrementalGraph, key: EntryKey) -> Result<()> {
        if self.entries.contains_key(&key) {
            return Ok(());
        }
        let epsilon = f64::from_bits(key.eps);
        let (es_depth, scales) = scale_plan(key.depth, epsilon, self.bundles.len());
        let es = (key.root, es_depth);
        if !self.es.contains_key(&es) {
            let tree = EsSssp::build(graph, Host::whole(self.n), key.root, es_depth, Directions::Both);
            let gen = tree.generation();
            self.es.insert(es, (tree, gen));
        }
        self.es_users.entry(es).or_default().push(key);
        let mut engines = Vec::new();
        for s in scales {
            let copies = self.bundles[s.level].lock().len();
            for copy in 0..copies {
                for reversed in [false, true] {
                    if reversed && !key.both {
                        continue;
                    }
                    let ek = EngineKey { level: s.level, copy, root: key.root, reversed, depth: s.depth, eps: key.eps };
                    if !self.engines.contains_key(&ek) {
                        let engine = self.build_engine(graph, &ek)?;
                        let seen = engine.change_count();
                        self.engines.insert(ek, PoolEngine { engine, seen });
                    }
                    self.engine_users.entry(ek).or_default().push(key);
                    engines.push(ek);
                }
            }
        }
        let entry = Entry { es, engines, from: Vec::new(), to: Vec::new(), dirty: true, generation: 0 };
        self.entries.insert(key, entry);
        Ok(())
    }

    fn mark(entries: &mut BTreeMap<EntryKey, Entry>, users: Option<&Vec<EntryKey>>) {
        for k in users.into_iter().flatten() {
            if let Some(e) = entries.get_mut(k) {
                e.dirty = true;
                e.generation += 1;
            }
        }
    }

    fn update_es(&mut self, graph: &DecrementalGraph, up: &AppliedUpdate) {
        for (key, (tree, seen)) in self.es.iter_mut() {
            tree.handle_update(graph, up);
            if tree.generation() != *seen {
                *seen = tree.generation();
                Self::mark(&mut self.entries, self.es_users.get(key));
            }
        }
    }

    fn update_level(&mut self, graph: &DecrementalGraph, up: &AppliedUpdate, level: usize, splits: &[Vec<SplitEvent>]) {
        let lo = EngineKey { level, copy: 0, root: 0, reversed: false, depth: 0, eps: 0 };
        let hi = EngineKey { level: level + 1, ..lo };
        for (key, pe) in self.engines.range_mut(lo..hi) {
            pe.engine.handle_update(graph, up, &splits[key.copy]);
            let now = pe.engine.change_count();
            if now != pe.seen {
                pe.seen = now;
                Self::mark(&mut self.entries, self.engine_users.get(key));
            }
        }
    }

    fn refresh(&mut self, key: &EntryKey) {
        let entry = self.entries.get_mut(key).expect("structure was ensured");
        if !entry.dirty {
            return;
        }
        let (tree, _) = &self.es[&entry.es];
        entry.from = (0..self.n).map(|v| tree.from_root(v)).collect();
        entry.to = (0..self.n).map(|v| tree.to_root(v)).collect();
        for ek in &entry.engines {
            let engine = &self.engines[ek].engine;
            let out = if ek.reversed { &mut entry.to } else { &mut entry.from };
            for (v, slot) in out.iter_mut().enumerate() {
                *slot = (*slot).min(engine.query(v));
            }
        }
        entry.dirty = false;
    }

    fn read(&mut self, key: &EntryKey, v: Vertex, forward: bool) -> Weight {
        self.refresh(key);
        let entry = &self.entries[key];
        if forward {
            entry.from[v]
        } else {
            entry.to[v]
        }
    }

    fn generation(&self, key: &EntryKey) -> u64 {
        self.entries[key].generation
    }

    fn scale_estimates(&self, key: &EntryKey, v: Vertex) -> Vec<ScaleEstimate> {
        let entry = &self.entries[key];
        let (tree, _) = &self.es[&entry.es];
        let mut out = alloc::vec![ScaleEstimate { level: None, copy: 0, depth: entry.es.1, estimate: tree.from_root(v) }];
        for ek in entry.engines.iter().filter(|k| !k.reversed) {
            let estimate = self.engines[ek].engine.query(v);
            out.push(ScaleEstimate { level: Some(ek.level), copy: ek.copy, depth: ek.depth, estimate });
        }
        out
    }

    fn counters(&self) -> DenseCounters {
        let mut total = DenseCounters::default();
        for pe in self.engines.values() {
            let c = pe.engine.counters();
            total.scans += c.scans;
            total.repairs += c.repairs;
            total.increments += c.increments;
            total.splits += c.splits;
            total.rekeys += c.rekeys;
            total.bucket_rescans += c.bucket_rescans;
            total.bucket_moves += c.bucket_moves;
        }
        for (tree, _) in self.es.values() {
            total.scans += tree.scans();
        }
        total
    }

    fn audit_buckets(&self) -> core::result::Result<usize, BucketViolation> {
        let mut audited = 0;
        for pe in self.engines.values() {
            if let ScaleEngine::Dense(e) = &pe.engine {
                e.audit_buckets()?;
                audited += 1;
            }
        }
        Ok(audited)
    }
}

/// A handle on a pooled whole-graph structure. The hierarchy keeps the pool up to date
/// before the level holding this handle sees the update, so updates are no-ops here.
struct PooledSssp {
    pool: Arc<Mutex<Pool>>,
    key: EntryKey,
}

impl RestrictedSssp for PooledSssp {
    fn root(&self) -> Vertex {
        self.key.root
    }

    fn depth(&self) -> Weight {
        self.key.depth
    }

    fn from_root(&self, v: Vertex) -> Weight {
        self.pool.lock().read(&self.key, v, true)
    }

    fn to_root(&self, v: Vertex) -> Weight {
        self.pool.lock().read(&self.key, v, false)
    }

    fn handle_update(&mut self, _graph: &DecrementalGraph, _update: &AppliedUpdate) {}

    fn generation(&self) -> u64 {
        self.pool.lock().generation(&self.key)
    }
}

enum Inner {
    Hierarchy(Box<Hierarchy>, EntryKey),
    Es(EsSssp),
}

/// A small host served by a hierarchy built on a private copy of the host.
struct RecursiveSssp {
    root: Vertex,
    depth: Weight,
    local_of: Vec<Option<Vertex>>,
    edge_local: BTreeMap<EdgeId, EdgeId>,
    graph: DecrementalGraph,
    inner: Inner,
    inner_generation: u64,
    generation: u64,
    failures: Arc<Mutex<u64>>,
}

impl RecursiveSssp {
    fn build(graph: &DecrementalGraph, host: &Host, root: Vertex, depth: Weight, parent: &LevelFactory) -> Result<Self> {
        let view = host.view(graph);
        let mut local_of = alloc::vec![None; graph.n()];
        let mut count = 0;
        for v in view.vertices() {
            local_of[v] = Some(count);
            count += 1;
        }
        let mut edges = Vec::new();
        let mut edge_local = BTreeMap::new();
        for e in view.edge_ids() {
            let (t, h) = view.endpoints(e);
            edge_local.insert(e, edges.len());
            edges.push((local_of[t].expect("host edge"), local_of[h].expect("host edge"), view.weight(e)));
        }
        let sub = DecrementalGraph::new(count, &edges)?;
        let mut config = parent.config;
        config.c = 4.0 * parent.config.c * libm::log(parent.n.max(2) as f64);
        config.max_level = max_level(count, sub.weight_bound());
        let local_root = local_of[root].expect("root is hosted");
        let seed = named_stream(parent.seed, "recursive", ((parent.level as u64) << 32) ^ ((count as u64) << 20) ^ root as u64).next_u64();
        let h = Hierarchy::build_nested(&sub, config, None, seed, &Sequential, parent.nesting + 1, parent.log.clone())?;
        let key = Pool::key(local_root, depth, 1.0, true);
        h.pool.lock().ensure(&sub, key)?;
        let inner_generation = h.pool.lock().generation(&key);
        Ok(Self {
            root,
            depth,
            local_of,
            edge_local,
            graph: sub,
            inner: Inner::Hierarchy(Box::new(h), key),
            inner_generation,
            generation: 0,
            failures: parent.failures.clone(),
        })
    }

    fn read(&self, v: Vertex, forward: bool) -> Weight {
        let Some(l) = self.local_of.get(v).copied().flatten() else { return INF };
        match &self.inner {
            Inner::Hierarchy(h, key) => h.pool.lock().read(key, l, forward),
            Inner::Es(t) if forward => t.from_root(l),
            Inner::Es(t) => t.to_root(l),
        }
    }
}

impl RestrictedSssp for RecursiveSssp {
    fn root(&self) -> Vertex {
        self.root
    }

    fn depth(&self) -> Weight {
        self.depth
    }

    fn from_root(&self, v: Vertex) -> Weight {
        self.read(v, true)
    }

    fn to_root(&self, v: Vertex) -> Weight {
        self.read(v, false)
    }

    fn handle_update(&mut self, _graph: &DecrementalGraph, update: &AppliedUpdate) {
        let Some(&le) = self.edge_local.get(&update.edge) else { return };
        let e = self.graph.edge(le);
        let event = if update.is_deletion() {
            UpdateEvent::delete(e.tail, e.head)
        } else {
            UpdateEvent::increase(e.tail, e.head, update.new_weight)
        };
        let up = self.graph.apply_update(event).expect("host copy mirrors the graph");
        let gen = match &mut self.inner {
            Inner::Hierarchy(h, key) => match h.handle_update(&self.graph, &up, &Sequential) {
                Ok(()) => Some(h.pool.lock().generation(key)),
                Err(_) => None,
            },
            Inner::Es(t) => {
                t.handle_update(&self.graph, &up);
                Some(t.generation())
            }
        };
        let gen = gen.unwrap_or_else(|| {
            // The nested hierarchy failed; an exact tree keeps the host served.
            *self.failures.lock() += 1;
            let local_root = self.local_of[self.root].expect("root is hosted");
            let tree = EsSssp::build(&self.graph, Host::whole(self.graph.n()), local_root, self.depth, Directions::Both);
            let g = tree.generation();
            self.inner = Inner::Es(tree);
            self.generation += 1;
            g
        });
        if gen != self.inner_generation {
            self.inner_generation = gen;
            self.generation += 1;
        }
    }

    fn generation(&self) -> u64 {
        self.generation
    }
}

/// How a restricted SSSP request was served.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DispatchKind {
    /// Multi-scale structure over lower bundles on the whole graph.
    Pooled,
    /// Hierarchy on a copy of the host.
    Recursive,
    /// ES tree on the host, at the recursion cap.
    Es,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DispatchRecord {
    pub level: usize,
    /// 0 for the outermost hierarchy.
    pub nesting: usize,
    pub host_size: usize,
    /// Vertex count of the graph the serving structure runs on.
    pub serving_size: usize,
    pub kind: DispatchKind,
    /// Whether the serving graph contains every host vertex and live host edge.
    pub contains_host: bool,
}

struct LevelFactory {
    level: usize,
    depth: Weight,
    n: usize,
    nesting: usize,
    seed: u64,
    config: LevelConfig,
    pool: Arc<Mutex<Pool>>,
    log: Arc<Mutex<Vec<DispatchRecord>>>,
    failures: Arc<Mutex<u64>>,
}

impl LevelFactory {
    fn is_large(&self, size: usize) -> bool {
        ((size as u128) << self.config.gamma.min(64)) >= self.n as u128
    }
}

impl SsspFactory for LevelFactory {
    fn depth(&self) -> Weight {
        self.depth
    }

    fn build(&self, graph: &DecrementalGraph, host: Host, root: Vertex) -> Result<Box<dyn RestrictedSssp>> {
        let size = host.size();
        let record = |kind, serving_size, contains_host| DispatchRecord {
            level: self.level,
            nesting: self.nesting,
            host_size: size,
            serving_size,
            kind,
            contains_host,
        };
        if self.is_large(size) {
            let key = Pool::key(root, self.depth, 1.0, true);
            self.pool.lock().ensure(graph, key)?;
            self.log.lock().push(record(DispatchKind::Pooled, graph.n(), true));
            return Ok(Box::new(PooledSssp { pool: self.pool.clone(), key }));
        }
        if self.nesting < self.config.recursion_cap {
            let r = RecursiveSssp::build(graph, &host, root, self.depth, self)?;
            let view = host.view(graph);
            let contains = view.vertices().all(|v| r.local_of[v].is_some())
                && view.edge_ids().all(|e| r.edge_local.contains_key(&e));
            self.log.lock().push(record(DispatchKind::Recursive, r.graph.n(), contains));
            return Ok(Box::new(r));
        }
        self.log.lock().push(record(DispatchKind::Es, size, true));
        Ok(Box::new(EsSssp::build(graph, host, root, self.depth, Directions::Both)))
    }
}

/// Aggregate counters of one hierarchy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HierarchyCounters {
    /// Engine and ES counters summed over the pool.
    pub engines: DenseCounters,
    /// Split events emitted by all bundles.
    pub splits: u64,
    pub pooled_structures: usize,
    /// Nested hierarchies that failed and fell back to an ES tree.
    pub nested_failures: u64,
}

/// Bundles for every level plus the pooled multi-scale structures built over them.
pub struct Hierarchy {
    config: LevelConfig,
    n: usize,
    bundles: Vec<Arc<Mutex<AtoBundle>>>,
    pool: Arc<Mutex<Pool>>,
    top: Option<EntryKey>,
    selector: Vec<Weight>,
    splits: u64,
    log: Arc<Mutex<Vec<DispatchRecord>>>,
    failures: Arc<Mutex<u64>>,
}

impl core::fmt::Debug for Hierarchy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Hierarchy")
            .field("n", &self.n)
            .field("levels", &self.bundles.len())
            .field("top", &self.top)
            .finish_non_exhaustive()
    }
}

impl Hierarchy {
    /// Builds levels bottom-up. With a root, also builds the top-level query from it,
    /// covering distances up to `W·n` at accuracy `config.epsilon`.
    pub fn build(
        graph: &DecrementalGraph,
        config: LevelConfig,
        root: Option<Vertex>,
        seed: u64,
        runner: &dyn CopyRunner,
    ) -> Result<Self> {
        Self::build_nested(graph, config, root, seed, runner, 0, Arc::new(Mutex::new(Vec::new())))
    }

    fn build_nested(
        graph: &DecrementalGraph,
        config: LevelConfig,
        root: Option<Vertex>,
        seed: u64,
        runner: &dyn CopyRunner,
        nesting: usize,
        log: Arc<Mutex<Vec<DispatchRecord>>>,
    ) -> Result<Self> {
        config.validate()?;
        let n = graph.n();
        if let Some(r) = root {
            if r >= n {
                return Err(Error::VertexOutOfRange { vertex: r, n });
            }
        }
        let pool = Arc::new(Mutex::new(Pool::new(n, seed, config)));
        let failures = Arc::new(Mutex::new(0));
        let mut bundles = Vec::new();
        for level in 0..=config.max_level {
            let bundle = if level <= 2 {
                AtoBundle::trivial(graph)
            } else {
                let delta = level_delta(level);
                let factory = LevelFactory {
                    level,
                    depth: delta,
                    n,
                    nesting,
                    seed,
                    config,
                    pool: pool.clone(),
                    log: log.clone(),
                    failures: failures.clone(),
                };
                let ato = AtoConfig { delta, c: config.c, zeta: config.zeta };
                let level_seed = named_stream(seed, "level", level as u64).next_u64();
                AtoBundle::build(graph, ato, Arc::new(factory), level_seed, config.bundle, runner)
                    .map_err(|e| Error::HierarchyFailed { level, source: Box::new(e) })?
            };
            let bundle = Arc::new(Mutex::new(bundle));
            pool.lock().bundles.push(bundle.clone());
            bundles.push(bundle);
        }
        let top = match root {
            Some(r) => {
                let depth = graph.weight_bound().saturating_mul(n.max(1) as Weight);
                let key = Pool::key(r, depth, config.epsilon, false);
                pool.lock().ensure(graph, key)?;
                Some(key)
            }
            None => None,
        };
        let mut h = Self { config, n, bundles, pool, top, selector: Vec::new(), splits: 0, log, failures };
        h.refresh_selector();
        Ok(h)
    }

    fn refresh_selector(&mut self) {
        if let Some(key) = self.top {
            let mut pool = self.pool.lock();
            pool.refresh(&key);
            self.selector.clone_from(&pool.entries[&key].from);
        }
    }

    /// Processes an update already applied to `graph`, level by level from the bottom;
    /// every level sees settled lower levels.
    pub fn handle_update(&mut self, graph: &DecrementalGraph, update: &AppliedUpdate, runner: &dyn CopyRunner) -> Result<()> {
        self.pool.lock().update_es(graph, update);
        for (level, bundle) in self.bundles.iter().enumerate() {
            let splits = bundle
                .lock()
                .handle_update(graph, update, runner)
                .map_err(|e| Error::HierarchyFailed { level, source: Box::new(e) })?;
            self.splits += splits.iter().map(|s| s.len() as u64).sum::<u64>();
            self.pool.lock().update_level(graph, update, level, &splits);
        }
        self.refresh_selector();
        Ok(())
    }

    pub fn config(&self) -> &LevelConfig {
        &self.config
    }

    pub fn levels(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, level: usize) -> MutexGuard<'_, AtoBundle> {
        self.bundles[level].lock()
    }

    pub fn root(&self) -> Option<Vertex> {
        self.top.map(|k| k.root)
    }

    /// The top-level estimate of `dist(root, v)`: the minimum over all scales, read in
    /// constant time. `INF` without a root.
    pub fn query(&self, v: Vertex) -> Weight {
        self.selector.get(v).copied().unwrap_or(INF)
    }

    /// Every per-scale estimate feeding [`Hierarchy::query`] for `v`.
    pub fn scale_estimates(&self, v: Vertex) -> Vec<ScaleEstimate> {
        match &self.top {
            Some(key) => self.pool.lock().scale_estimates(key, v),
            None => Vec::new(),
        }
    }

    /// A multi-scale restricted SSSP over this hierarchy's bundles, from and to `root`
    /// up to `depth` at accuracy `epsilon`, running on the whole graph.
    pub fn restricted_sssp(
        &self,
        graph: &DecrementalGraph,
        root: Vertex,
        depth: Weight,
        epsilon: f64,
    ) -> Result<Box<dyn RestrictedSssp>> {
        let key = Pool::key(root, depth, epsilon, true);
        self.pool.lock().ensure(graph, key)?;
        Ok(Box::new(PooledSssp { pool: self.pool.clone(), key }))
    }

    pub fn dispatch_log(&self) -> Vec<DispatchRecord> {
        self.log.lock().clone()
    }

    pub fn counters(&self) -> HierarchyCounters {
        let pool = self.pool.lock();
        HierarchyCounters {
            engines: pool.counters(),
            splits: self.splits,
            pooled_structures: pool.engines.len() + pool.es.len(),
            nested_failures: *self.failures.lock(),
        }
    }

    /// Runs the bucket audit on every pooled dense engine; returns how many were checked.
    pub fn audit_buckets(&self) -> core::result::Result<usize, BucketViolation> {
        self.pool.lock().audit_buckets()
    }
}
