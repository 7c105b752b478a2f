mod common;

use std::sync::Arc;

use common::{full_trace, random_dag, random_graph, rng};
use dsssp_core::ato::{Ato, AtoConfig};
use dsssp_core::dense::{DenseConfig, DenseEngine};
use dsssp_core::es_tree::EsFactory;
use dsssp_core::verify::dijkstra_oracle;
use dsssp_core::INF;

#[test]
fn dag_mode_bound_and_stride_equivalence() {
    for seed in 0..6 {
        let mut r = rng("dense-dag", seed);
        let mut g = random_dag(&mut r, 40, 0.2, 6);
        let trace = full_trace(&mut r, &g, Some(5));
        let delta = 24;
        let eps = 0.25;
        let mut plain = DenseEngine::dag(&g, 0, delta, eps).unwrap();
        let mut stride = plain.clone();
        let mut cfg = *stride.config();
        cfg.stride = true;
        stride = DenseEngine::new(&g, &dsssp_core::scc_topo::SccTopo::compute(&g.view()), 0, cfg);
        for ev in trace {
            let up = g.apply_update(ev).unwrap();
            plain.handle_update(&g, Some(&up), &[]);
            stride.handle_update(&g, Some(&up), &[]);
            plain.audit_buckets().unwrap();
            let exact = dijkstra_oracle(&g.view(), 0);
            for v in 0..g.n() {
                let est = plain.query(v);
                assert_eq!(est, stride.query(v), "stride mode diverged at vertex {v}");
                assert!(est >= exact[v], "underestimate at {v}: {est} < {}", exact[v]);
                if exact[v] != INF && 2 * exact[v] >= delta && exact[v] < delta {
                    assert!(est as f64 <= (1.0 + 4.0 * eps) * exact[v] as f64, "{est} vs {}", exact[v]);
                }
            }
        }
    }
}

fn sweep_engine_over_order(mut g: dsssp_core::DecrementalGraph, delta: u64, seed: u64) -> u64 {
    let mut r = rng("dense-ato-trace", seed);
    let trace = full_trace(&mut r, &g, Some(7));
    let config = AtoConfig { delta, c: 1.0, zeta: Some(2.0) };
    let mut ato = Ato::init(&g, config, Arc::new(EsFactory { depth: delta }), rng("ato", seed)).unwrap();
    let eta = ato.eta_diam();
    let mut cfg = DenseConfig::new(delta, 0.5, 4.0, eta);
    cfg.stride = true;
    let mut fwd = DenseEngine::new(&g, ato.topo(), 0, cfg);
    cfg.stride = false;
    let mut plain = DenseEngine::new(&g, ato.topo(), 0, cfg);
    cfg.reversed = true;
    cfg.stride = true;
    let mut bwd = DenseEngine::new(&g, ato.topo(), 0, cfg);
    let mut splits_seen = 0;
    for ev in trace {
        let up = g.apply_update(ev).unwrap();
        let splits = ato.handle_update(&g, &up).unwrap();
        splits_seen += splits.len() as u64;
        fwd.handle_update(&g, Some(&up), &splits);
        plain.handle_update(&g, Some(&up), &splits);
        bwd.handle_update(&g, Some(&up), &splits);
        fwd.audit_buckets().unwrap();
        bwd.audit_buckets().unwrap();
        let out = dijkstra_oracle(&g.view(), 0);
        let inn = dijkstra_oracle(&g.view().reversed(), 0);
        for v in 0..g.n() {
            assert_eq!(fwd.query(v), plain.query(v));
            assert!(fwd.query(v) >= out[v]);
            assert!(bwd.query(v) >= inn[v]);
            if fwd.query(v) != INF {
                let (_, walk) = fwd.path(&g, v).unwrap();
                assert_eq!((walk[0], *walk.last().unwrap()), (0, v));
                let w: u64 = walk.windows(2).map(|p| g.weight(g.find_edge(p[0], p[1]).unwrap())).sum();
                assert!(w >= out[v]);
            }
            if bwd.query(v) != INF {
                let (_, walk) = bwd.path(&g, v).unwrap();
                assert_eq!((walk[0], *walk.last().unwrap()), (v, 0));
                for p in walk.windows(2) {
                    assert!(g.find_edge(p[0], p[1]).is_some_and(|e| g.weight(e) != INF));
                }
            }
        }
    }
    splits_seen
}

#[test]
fn engine_over_maintained_order_never_underestimates() {
    for seed in 0..3 {
        let mut r = rng("dense-ato", seed);
        sweep_engine_over_order(random_graph(&mut r, 32, 0.15, 8), 32, seed);
        let splits = sweep_engine_over_order(common::bidirected_grid(&mut r, 5, 1), 2048, seed);
        assert!(splits > 0);
    }
}
