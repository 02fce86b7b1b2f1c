use netbandit::bandit::{Algorithm, ConfidencePolicy, GobLin, Grouping, Runner, RunnerOptions};
use netbandit::data::{Environment, FourCliques};
use netbandit::eval::equivalence_suite;
use netbandit::graph::{block_graph, inject_graph_noise, make_4cliques, spectral_cluster, Partition};

#[test]
fn special_cases_reduce_to_baselines() {
    let results = equivalence_suite(10, 5, 500, 42).unwrap();
    assert_eq!(results.len(), 4);
    for e in results {
        assert_eq!(e.choice_mismatches, 0, "{}", e.name);
        assert!(e.max_scalar_gap <= 1e-9, "{}: {:e}", e.name, e.max_scalar_gap);
    }
}

/// BLOCK keeps only intra-cluster edges, so it must behave exactly like one
/// GOB.Lin per cluster, each on the cluster's induced subgraph.
#[test]
fn block_equals_independent_goblin_per_cluster() {
    let clean = make_4cliques(3, 4).unwrap();
    let (g, _) = inject_graph_noise(&clean, 10.0, 5).unwrap();
    let p: Partition = spectral_cluster(&g, 3, 1).unwrap();
    let policy = ConfidencePolicy::simplified(0.4);
    let d = 3;
    let mut block = Runner::with_options(
        Algorithm::GobLinBlock { clusters: 3 },
        &g,
        d,
        policy,
        RunnerOptions { partition: Some(p.clone()), ..RunnerOptions::default() },
    )
    .unwrap();

    let members = p.members();
    let mut local = vec![(0, 0); g.n()];
    let mut per_cluster: Vec<GobLin> = members
        .iter()
        .enumerate()
        .map(|(k, nodes)| {
            for (pos, &u) in nodes.iter().enumerate() {
                local[u] = (k, pos);
            }
            GobLin::new(&g.induced(nodes).unwrap(), d, Grouping::Dense).unwrap()
        })
        .collect();
    assert_eq!(block_graph(&g, &p).unwrap().edge_count(), members.iter().map(|m| g.induced(m).unwrap().edge_count()).sum());

    let env = FourCliques { clique_count: 3, clique_size: 4, d, set_size: 6, graph_noise: 0.0, payoff_noise: 0.2 }
        .build(8)
        .unwrap()
        .env;
    for t in 1..=300 {
        let ev = env.event(8, t);
        let fb = env.feedback(8, &ev);
        let (k, pos) = local[ev.user];
        let a = block.select(ev.user, &ev.candidates, t).unwrap();
        let b = per_cluster[k].select(&policy, pos, &ev.candidates, t).unwrap();
        assert_eq!(a, b, "round {t}");
        block.update(ev.user, &ev.candidates[a], fb.payoffs[a]).unwrap();
        per_cluster[k].update(pos, &ev.candidates[b], fb.payoffs[b]).unwrap();
    }
    let gob = block.graph_engine().unwrap();
    for u in 0..g.n() {
        let (k, pos) = local[u];
        let want = per_cluster[k].user_weights(pos).unwrap();
        let got = gob.user_weights(u).unwrap();
        for (x, y) in want.iter().zip(&got) {
            assert!((x - y).abs() <= 1e-9, "user {u}: {x} vs {y}");
        }
    }
}
