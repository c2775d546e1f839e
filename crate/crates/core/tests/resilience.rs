use proptest::prelude::*;
use rescot_core::abstraction::{BimodalAbstraction, BimodalBuilder};
use rescot_core::games::{solve_parity, Arena};
use rescot_core::resilience::{
    brute_force_resilience, classify, disturbance_update, initial_ranking, random_bimodal, risk_update,
    strategy_pruning, Mode, RandomParams, ResilienceMap, ResilienceValue, ResilientController,
};
use rescot_core::Error;
use ResilienceValue::*;

fn g1() -> BimodalAbstraction {
    BimodalBuilder::new(3, 1)
        .colors(&[1, 2, 1])
        .normal(0, 0, &[1])
        .normal(1, 0, &[1])
        .normal(2, 0, &[2])
        .dist(1, 0, &[2])
        .build()
        .unwrap()
}

fn g2() -> BimodalAbstraction {
    BimodalBuilder::new(2, 1)
        .colors(&[2, 1])
        .normal(0, 0, &[0])
        .normal(1, 0, &[0])
        .dist(0, 0, &[1])
        .dist(1, 0, &[1])
        .build()
        .unwrap()
}

/// The spike cost depends on the action: action 0 can be punished with one
/// spike, action 1 only with two.
fn action_dependent() -> BimodalAbstraction {
    // 0: losing sink, 1: safe sink, 2: one spike away from 0, 3: choice.
    BimodalBuilder::new(4, 2)
        .colors(&[1, 0, 0, 0])
        .normal(0, 0, &[0])
        .normal(1, 0, &[1])
        .normal(2, 0, &[2])
        .dist(2, 0, &[0])
        .normal(3, 0, &[1])
        .dist(3, 0, &[0])
        .normal(3, 1, &[1])
        .dist(3, 1, &[2])
        .build()
        .unwrap()
}

fn oracle(g: &BimodalAbstraction) -> ResilienceMap {
    brute_force_resilience(g, g.num_states() + 1).unwrap()
}

#[test]
fn fixtures() {
    let m = classify(&g1(), Mode::Reference).unwrap().map;
    assert_eq!(m.values(), &[Fin(1), Fin(1), Fin(0)]);
    assert_eq!(oracle(&g1()), m);
    let m = classify(&g2(), Mode::Reference).unwrap().map;
    assert_eq!(m.values(), &[Omega, Omega]);
    assert_eq!(oracle(&g2()), m);
}

#[test]
fn action_dependent_spike_costs() {
    let g = action_dependent();
    let expected = [Fin(0), OmegaPlusOne, Fin(1), Fin(2)];
    assert_eq!(oracle(&g).values(), &expected);
    assert_eq!(classify(&g, Mode::Reference).unwrap().map.values(), &expected);
}

#[test]
fn paper_literal_g1_is_pinned() {
    let m = classify(&g1(), Mode::PaperLiteral).unwrap().map;
    assert_eq!(m.values(), &[Fin(0), Fin(0), Fin(0)]);
    let reference = classify(&g1(), Mode::Reference).unwrap().map;
    assert_eq!(reference.diff(&m), vec![(0, Fin(1), Fin(0)), (1, Fin(1), Fin(0))]);
}

#[test]
fn no_disturbances() {
    let g = BimodalBuilder::new(3, 1)
        .colors(&[0, 1, 2])
        .normal(0, 0, &[0])
        .normal(1, 0, &[1])
        .normal(2, 0, &[0])
        .build()
        .unwrap();
    let c = classify(&g, Mode::Reference).unwrap();
    assert_eq!(c.map.values(), &[OmegaPlusOne, Fin(0), OmegaPlusOne]);
    assert_eq!(c.finite.ranking, initial_ranking(&g, Mode::Reference));
    assert_eq!(oracle(&g), c.map);
}

#[test]
fn g1_operators_step_by_step() {
    let g = g1();
    let r0 = initial_ranking(&g, Mode::Reference);
    assert_eq!(r0.states(), &[None, None, Some(0)]);
    let r1 = disturbance_update(&r0, &g, Mode::Reference);
    assert_eq!(r1.states(), &[None, Some(1), Some(0)]);
    let (r2, _) = risk_update(&r1, &strategy_pruning(&r0, &g, Mode::Reference), Mode::Reference);
    assert_eq!(r2.states(), &[Some(1), Some(1), Some(0)]);
}

#[test]
fn oracle_size_guard() {
    let g = BimodalBuilder::new(70, 1).build().unwrap();
    assert!(matches!(
        brute_force_resilience(&g, 71),
        Err(Error::OracleTooLarge { states: 70, .. })
    ));
}

#[test]
fn controller_document_round_trip() {
    let c = classify(&g1(), Mode::Reference).unwrap().controller;
    let mut buf = Vec::new();
    c.write_json(&mut buf).unwrap();
    assert_eq!(ResilientController::read_json(buf.as_slice()).unwrap(), c);
    let tampered = String::from_utf8(buf).unwrap().replace("\"version\": 1", "\"version\": 9");
    assert!(ResilientController::read_json(tampered.as_bytes()).is_err());
}

#[test]
fn oracle_agreement_on_many_seeds() {
    let dense = RandomParams {
        enabled: 0.85,
        normal_density: 0.15,
        dist_density: 0.12,
        ..RandomParams::default()
    };
    let mut deep = 0;
    for params in [RandomParams::default(), dense] {
        for seed in 0..400 {
            let g = random_bimodal(seed, &params);
            let got = classify(&g, Mode::Reference).unwrap().map;
            assert_eq!(got, oracle(&g), "seed {seed}, {params:?}");
            deep += got.values().iter().filter(|v| v.finite().is_some_and(|k| k >= 2)).count();
        }
    }
    assert!(deep >= 10, "random instances should exercise ranks above 1");
}

fn spike_free_winning(g: &BimodalAbstraction) -> Vec<bool> {
    solve_parity(&Arena::spike_free(g)).winning
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_and_top_laws(seed in any::<u64>()) {
        let g = random_bimodal(seed, &RandomParams::default());
        let m = classify(&g, Mode::Reference).unwrap().map;
        let win = spike_free_winning(&g);
        let union = solve_parity(&Arena::union(&g)).winning;
        for q in 0..g.num_states() {
            prop_assert_eq!(m.get(q) == Fin(0), !win[q]);
            prop_assert_eq!(m.get(q) == OmegaPlusOne, union[q]);
        }
    }

    #[test]
    fn removing_a_disturbance_edge_never_hurts(seed in any::<u64>(), pick in any::<usize>()) {
        let g = random_bimodal(seed, &RandomParams::default());
        let edges: Vec<(usize, usize, usize)> = (0..g.num_states())
            .flat_map(|q| (0..g.num_actions()).map(move |u| (q, u)))
            .flat_map(|(q, u)| g.dist(q, u).iter().map(move |&t| (q, u, t)).collect::<Vec<_>>())
            .collect();
        prop_assume!(!edges.is_empty());
        let (eq, eu, et) = edges[pick % edges.len()];
        let h = g.with_dist_rows(|q, u, s| s.iter().copied().filter(|&t| (q, u, t) != (eq, eu, et)).collect());
        let before = classify(&g, Mode::Reference).unwrap().map;
        let after = classify(&h, Mode::Reference).unwrap().map;
        for q in 0..g.num_states() {
            prop_assert!(after.get(q) >= before.get(q), "state {}", q);
        }
        prop_assert_eq!(after, oracle(&h));
    }

    #[test]
    fn ranks_only_grow_in_domain_and_shrink_in_value(seed in any::<u64>()) {
        let g = random_bimodal(seed, &RandomParams::default());
        let mut r = initial_ranking(&g, Mode::Reference);
        for _ in 0..(g.num_states() * (g.num_actions() + 1) * (g.num_states() + 2) + 2) {
            let d = disturbance_update(&r, &g, Mode::Reference);
            let (next, _) = risk_update(&d, &strategy_pruning(&r, &g, Mode::Reference), Mode::Reference);
            for q in 0..g.num_states() {
                if let Some(k) = r.get(q) {
                    prop_assert!(next.get(q).is_some_and(|k2| k2 <= k));
                }
            }
            if next == r {
                break;
            }
            r = next;
        }
        let fixed = classify(&g, Mode::Reference).unwrap();
        prop_assert_eq!(&fixed.finite.ranking, &r);
        let max = fixed.finite.ranking.image().last().copied().unwrap_or(0);
        prop_assert!((max as usize) < g.num_states().max(1));
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>()) {
        let g = random_bimodal(seed, &RandomParams::default());
        let m = classify(&g, Mode::Reference).unwrap().map;
        prop_assert_eq!(ResilienceMap::from_csv(&m.to_csv()).unwrap(), m);
    }
}
