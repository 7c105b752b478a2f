mod common;

use common::{bidirected_grid, full_trace, random_graph, rng};
use dsssp_core::ato::Sequential;
use dsssp_core::bootstrap::{DispatchKind, Hierarchy, LevelConfig};
use dsssp_core::verify::dijkstra_oracle;
use dsssp_core::{DecrementalGraph, INF};
use proptest::prelude::*;

fn small_config(g: &DecrementalGraph, bundle: usize) -> LevelConfig {
    let mut cfg = LevelConfig::new(g.n(), g.weight_bound(), 0.5);
    cfg.bundle = bundle;
    cfg
}

/// Replays a full trace and returns `(checked, upper-bound misses)`; panics on any
/// underestimate or minimum-selector mismatch.
fn sweep(mut g: DecrementalGraph, cfg: LevelConfig, seed: u64) -> Option<(usize, usize)> {
    let trace = full_trace(&mut rng("hierarchy-trace", seed), &g, Some(7));
    let mut h = Hierarchy::build(&g, cfg, Some(0), seed, &Sequential).ok()?;
    let (mut checked, mut misses) = (0, 0);
    for ev in trace {
        let up = g.apply_update(ev).unwrap();
        h.handle_update(&g, &up, &Sequential).ok()?;
        let exact = dijkstra_oracle(&g.view(), 0);
        for v in 0..g.n() {
            let est = h.query(v);
            assert!(est >= exact[v], "vertex {v}: {est} below {}", exact[v]);
            let min = h.scale_estimates(v).iter().map(|s| s.estimate).min().unwrap();
            assert_eq!(est, min);
            if exact[v] != INF {
                checked += 1;
                misses += (est as f64 > 1.5 * exact[v] as f64) as usize;
            }
        }
        assert!(h.audit_buckets().is_ok());
    }
    Some((checked, misses))
}

#[test]
fn end_to_end_estimates_bracket_the_oracle() {
    let (mut checked, mut misses) = (0, 0);
    for seed in 0..4 {
        let mut r = rng("hierarchy", seed);
        let g = random_graph(&mut r, 32, 0.12, 8);
        let cfg = small_config(&g, 3);
        let (c, m) = sweep(g, cfg, seed).expect("default parameters do not fail here");
        checked += c;
        misses += m;
    }
    assert!(checked > 1000);
    assert!(misses * 100 <= checked, "{misses} of {checked} above (1+ε)·dist");
}

#[test]
fn trivial_levels_and_level_count() {
    let edges: Vec<_> = (0..7).map(|i| (i, i + 1, 1)).collect();
    let g = DecrementalGraph::new(8, &edges).unwrap();
    let h = Hierarchy::build(&g, small_config(&g, 2), Some(0), 3, &Sequential).unwrap();
    assert_eq!(h.levels(), 4);
    for level in 0..3 {
        assert!(h.bundle(level).copies().iter().all(|a| a.is_trivial()));
    }
    assert!(!h.bundle(3).copies()[0].is_trivial());
    assert_eq!(h.query(0), 0);
    assert_eq!(h.query(7), 7);
}

#[test]
fn unreachable_is_infinite() {
    let g = DecrementalGraph::new(3, &[(0, 1, 2), (2, 0, 1)]).unwrap();
    let h = Hierarchy::build(&g, small_config(&g, 2), Some(0), 1, &Sequential).unwrap();
    assert_eq!(h.query(0), 0);
    assert_eq!(h.query(1), 2);
    assert_eq!(h.query(2), INF);
}

/// Orders on a unit grid with a raised top level keep large nodes, so both dispatch
/// branches run. Initialization may fail with the small ζ; the first seeds that build are
/// used.
fn grid_runs(gamma: u32, recursion_cap: usize) -> Vec<Hierarchy> {
    let mut out = Vec::new();
    for seed in 0..12 {
        let g = bidirected_grid(&mut rng("dispatch-grid", seed), 6, 1);
        let mut cfg = small_config(&g, 2);
        cfg.max_level = 12;
        cfg.zeta = Some(2.0);
        cfg.gamma = gamma;
        cfg.recursion_cap = recursion_cap;
        let trace = full_trace(&mut rng("dispatch-trace", seed), &g, None);
        let mut g = g;
        let Ok(mut h) = Hierarchy::build(&g, cfg, Some(0), seed, &Sequential) else { continue };
        let mut ok = true;
        for ev in trace {
            let up = g.apply_update(ev).unwrap();
            if h.handle_update(&g, &up, &Sequential).is_err() {
                ok = false;
                break;
            }
            let exact = dijkstra_oracle(&g.view(), 0);
            assert!((0..g.n()).all(|v| h.query(v) >= exact[v]));
        }
        if ok {
            out.push(h);
        }
        if out.len() == 2 {
            break;
        }
    }
    assert!(!out.is_empty(), "no grid hierarchy survived initialization");
    out
}

#[test]
fn dispatch_serves_every_host_from_a_supergraph() {
    let n = 36u128;
    let mut kinds = [0usize; 3];
    for h in grid_runs(4, 2) {
        for r in h.dispatch_log() {
            assert!(r.contains_host, "{r:?}");
            assert!(r.serving_size >= r.host_size);
            let large = (r.host_size as u128) << 4 >= n;
            match r.kind {
                DispatchKind::Pooled => {
                    kinds[0] += 1;
                    assert!(large && r.nesting == 0 && r.serving_size == 36);
                }
                DispatchKind::Recursive => {
                    kinds[1] += 1;
                    assert!(r.nesting < 2 && r.serving_size == r.host_size);
                    if r.nesting == 0 {
                        assert!(!large);
                    }
                }
                DispatchKind::Es => kinds[2] += 1,
            }
        }
    }
    assert!(kinds[0] > 0 && kinds[1] > 0, "{kinds:?}");
}

#[test]
fn zero_recursion_cap_uses_trees_for_small_hosts() {
    for h in grid_runs(0, 0) {
        for r in h.dispatch_log() {
            assert_ne!(r.kind, DispatchKind::Recursive);
            if r.kind == DispatchKind::Pooled {
                assert_eq!(r.host_size, 36, "γ = 0 only sends the whole graph to the pool");
            }
        }
    }
}

#[test]
fn rebuilding_from_the_same_seed_is_identical() {
    let mut r = rng("determinism", 0);
    let g0 = random_graph(&mut r, 24, 0.15, 6);
    let trace = full_trace(&mut r, &g0, Some(4));
    let run = || {
        let mut g = g0.clone();
        let mut h = Hierarchy::build(&g, small_config(&g, 2), Some(0), 9, &Sequential).unwrap();
        let mut rows = Vec::new();
        for &ev in &trace {
            let up = g.apply_update(ev).unwrap();
            h.handle_update(&g, &up, &Sequential).unwrap();
            rows.push((0..g.n()).map(|v| h.query(v)).collect::<Vec<_>>());
        }
        (rows, h.counters())
    };
    assert_eq!(run(), run());
}

#[test]
fn short_distances_come_out_exact() {
    let mut r = rng("short", 0);
    let g = random_graph(&mut r, 30, 0.15, 3);
    let h = Hierarchy::build(&g, small_config(&g, 2), None, 4, &Sequential).unwrap();
    let eps = 0.5;
    let s = h.restricted_sssp(&g, 5, 200, eps).unwrap();
    let out = dijkstra_oracle(&g.view(), 5);
    let inn = dijkstra_oracle(&g.view().reversed(), 5);
    for v in 0..g.n() {
        assert!(s.from_root(v) >= out[v] && s.to_root(v) >= inn[v]);
        if out[v] <= 8 {
            assert_eq!(s.from_root(v), out[v]);
        }
        if inn[v] <= 8 {
            assert_eq!(s.to_root(v), inn[v]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn never_underestimates(seed in 0u64..1_000, n in 2usize..14, w in 1u64..6) {
        let mut r = rng("hierarchy-prop", seed);
        let g = random_graph(&mut r, n, 0.3, w);
        let cfg = small_config(&g, 1);
        sweep(g, cfg, seed);
    }
}
