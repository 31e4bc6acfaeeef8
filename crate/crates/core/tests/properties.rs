use ambiform::beamform::{constraint_residuals, solve, BeamformOptions, BeamformStatus};
use ambiform::gating::{in_aa_gate, in_pairwise_set, rect_gate, ConfusionTable};
use ambiform::graph::threshold_graph;
use ambiform::scene::{AntennaArray, Target};
use ambiform::tradeoff::{pareto_indices, TradeoffPoint};
use ambiform::waveform::generate;
use ambiform::{AmbiguityGraph, Scene, SceneF32, TargetF32};
use proptest::prelude::*;

fn azimuths(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.3f64..1.3, k).prop_filter("separated azimuths", |az| {
        let mut s = az.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.windows(2).all(|w| w[1] - w[0] > 0.1)
    })
}

fn scene_strategy() -> impl Strategy<Value = Scene> {
    (2usize..=5)
        .prop_flat_map(|n| (Just(n), 1usize..=n))
        .prop_flat_map(|(n, k)| {
            (
                Just(n),
                azimuths(k),
                prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.3f64..2.0, 0.3f64..2.0), k),
            )
        })
        .prop_map(|(n, az, priors)| {
            let targets = az
                .into_iter()
                .zip(priors)
                .map(|(a, (t, w, st, sw))| Target::new(a, t, w, st, sw))
                .collect();
            Scene::new(AntennaArray::ula(n).unwrap(), targets).unwrap()
        })
}

fn graph_for(k: usize, bits: u64) -> AmbiguityGraph {
    let mut g = AmbiguityGraph::empty(k);
    let mut b = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            if bits >> b & 1 == 1 {
                g.add_edge(i, j);
            }
            b += 1;
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_entries_are_unit_modulus_and_conjugate_symmetric(n in 1usize..12, theta in -1.5f64..1.5) {
        let array = AntennaArray::ula(n).unwrap();
        let a = array.steering(theta);
        let b = array.steering(-theta);
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x.norm() - 1.0).abs() < 1e-12);
            prop_assert!((x - y.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn distinct_azimuths_give_full_rank(scene in scene_strategy()) {
        prop_assert_eq!(scene.steering_matrix_rank(), scene.n_targets());
    }

    #[test]
    fn wider_rectangular_gates_contain_narrower(t in -3.0f64..3.0, w in -3.0f64..3.0, s1 in 0.5f64..3.0, extra in 0.0f64..2.0,
                                                 pt in -8.0f64..8.0, pw in -8.0f64..8.0) {
        let target = Target::new(0.0, t, w, 0.7, 1.3);
        let small = rect_gate(&target, s1).unwrap();
        let large = rect_gate(&target, s1 + extra).unwrap();
        if small.contains((pt, pw)) {
            prop_assert!(large.contains((pt, pw)));
        }
    }

    #[test]
    fn pairwise_sets_are_exclusive(scene in scene_strategy(), pt in -5.0f64..5.0, pw in -5.0f64..5.0) {
        let k = scene.n_targets();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let a = in_pairwise_set((pt, pw), i, j, &scene).unwrap();
                    let b = in_pairwise_set((pt, pw), j, i, &scene).unwrap();
                    prop_assert!(!(a && b));
                }
            }
        }
    }

    #[test]
    fn adding_edges_only_grows_gates(scene in scene_strategy(), bits in any::<u64>(), extra in any::<u64>(),
                                     pt in -5.0f64..5.0, pw in -5.0f64..5.0) {
        let k = scene.n_targets();
        let small = graph_for(k, bits);
        let large = graph_for(k, bits | extra);
        for i in 0..k {
            if in_aa_gate((pt, pw), i, &small, &scene).unwrap() {
                prop_assert!(in_aa_gate((pt, pw), i, &large, &scene).unwrap());
            }
        }
    }

    #[test]
    fn threshold_graphs_are_nested(entries in prop::collection::vec(0.0f64..1.0, 12), g1 in 0.0f64..1.0, g2 in 0.0f64..1.0) {
        let mut rows = vec![vec![0.0; 4]; 4];
        let mut it = entries.into_iter();
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i != j {
                    *v = it.next().unwrap();
                }
            }
        }
        let table = ConfusionTable::from_rows(rows).unwrap();
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        prop_assert!(threshold_graph(&table, lo).is_subgraph_of(&threshold_graph(&table, hi)));
        prop_assert!(threshold_graph(&table, 1.0).is_complete());
    }

    #[test]
    fn graph_text_round_trips(k in 1usize..9, bits in any::<u64>()) {
        let g = graph_for(k, bits);
        prop_assert_eq!(AmbiguityGraph::decode(k, &g.encode()).unwrap(), g);
    }

    #[test]
    fn ambiguity_is_bounded_and_symmetric(seed in 0u64..1000, n in 0usize..2, np in 0usize..2,
                                          dtau in -1.0f64..1.0, domega in -200.0f64..200.0) {
        let set = generate::<f64>(2, 64.0, 1.0, seed).unwrap();
        let x = set.ambiguity(n, np, dtau, domega).unwrap();
        prop_assert!(x.norm() <= 1.0 + 1e-12);
        let y = set.ambiguity(np, n, -dtau, -domega).unwrap();
        let rotated = y.conj() * num_complex::Complex::from_polar(1.0, -domega * dtau);
        prop_assert!((x - rotated).norm() < 1e-12);
    }

    #[test]
    fn pareto_set_is_exactly_the_undominated_points(raw in prop::collection::vec((0.0f64..3.0, 0.0f64..1.0, any::<bool>()), 1..20)) {
        let points: Vec<TradeoffPoint<f64>> = raw
            .into_iter()
            .map(|(p, c, feasible)| TradeoffPoint {
                graph: AmbiguityGraph::empty(1),
                power_gain: p,
                status: if feasible { BeamformStatus::Optimal } else { BeamformStatus::Infeasible },
                assoc_prob: c,
                assoc_stderr: 0.0,
                gamma: None,
            })
            .collect();
        let front = pareto_indices(&points);
        for (i, p) in points.iter().enumerate() {
            let beaten = points.iter().any(|q| q.feasible() && q.dominates(p, 0.0, 0.0));
            prop_assert_eq!(front.contains(&i), p.feasible() && !beaten);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimal_designs_satisfy_their_constraints(scene in scene_strategy(), bits in any::<u64>()) {
        let graph = graph_for(scene.n_targets(), bits);
        let result = solve(&scene, &graph, &BeamformOptions::default()).unwrap();
        prop_assert_eq!(result.status, BeamformStatus::Optimal);
        let res = constraint_residuals(&result.matrix.entries, &scene, &graph);
        prop_assert!(res.within(0.0), "{:?}", res);
        prop_assert!(result.objective > 0.0 && result.objective <= scene.n_antennas() as f64 + 1e-9);
    }

    #[test]
    fn single_and_double_precision_agree(scene in scene_strategy(), bits in any::<u64>()) {
        let graph = graph_for(scene.n_targets(), bits);
        let targets: Vec<TargetF32> = scene
            .targets()
            .iter()
            .map(|t| TargetF32::new(t.azimuth as f32, t.tau_mean as f32, t.omega_mean as f32, t.tau_std as f32, t.omega_std as f32))
            .collect();
        let single = SceneF32::new(*scene.array(), targets).unwrap();
        let p64 = solve(&scene, &graph, &BeamformOptions::default()).unwrap().objective;
        let r32 = solve(&single, &graph, &BeamformOptions::default()).unwrap();
        prop_assert!(((r32.objective as f64) - p64).abs() <= 1e-2 * p64.max(1.0), "{} vs {}", r32.objective, p64);
    }
}
