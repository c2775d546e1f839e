use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rescot_core::abstraction::{
    apply_obstacle_sinks, check_frr_sample, find_abstraction, find_risk_aware_abstraction, lift_colors,
    BimodalAbstraction, BimodalBuilder, GridParams, Quantizer,
};
use rescot_core::system::{AxisBox, ColorMap, ColorRegion, Dynamics, Linear, SampledSystem, Unicycle};
use rescot_core::Error;

fn line_grid(inputs: Vec<Vec<f64>>) -> Quantizer {
    Quantizer::new(GridParams {
        state_lo: vec![0.0],
        state_hi: vec![4.0],
        eta: vec![1.0],
        periodic: vec![false],
        input_values: inputs,
    })
    .unwrap()
}

fn drift(w_normal: f64, w_high: f64) -> SampledSystem {
    SampledSystem::new(
        Arc::new(Linear::new(vec![vec![0.0]], vec![vec![1.0]]).unwrap()),
        AxisBox::symmetric(&[w_normal]).unwrap(),
        AxisBox::symmetric(&[w_high]).unwrap(),
        1.0,
    )
}

/// Interval arithmetic for `ẋ = b u + w` on a 1-D grid: the cell center moves
/// by `τ b u`, the radius grows by `τ |w|`. Returns intersected cells plus the
/// sink index `n` if the box leaves `[lo, lo + n eta)`.
fn interval_oracle(lo: f64, eta: f64, n: usize, cell: usize, shift: f64, w: f64, tau: f64) -> Vec<usize> {
    let c = lo + (cell as f64 + 0.5) * eta + shift;
    let r = eta / 2.0 + tau * w;
    let (a, b) = (c - r, c + r);
    let mut out: Vec<usize> = (0..n)
        .filter(|&k| {
            let (cl, ch) = (lo + k as f64 * eta, lo + (k + 1) as f64 * eta);
            a < ch && b > cl
        })
        .collect();
    if a < lo || b > lo + n as f64 * eta {
        out.push(n);
    }
    out
}

#[test]
fn drifting_line_matches_interval_arithmetic() {
    let sys = drift(0.1, 1.1);
    let q = line_grid(vec![vec![1.0]]);
    let nor = find_abstraction(&sys, &q, &sys.w_normal).unwrap();
    assert_eq!(nor.get(0, 0), &[0, 1, 2]);
    let gamma = find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(0)).unwrap();
    assert_eq!(gamma.nor(0, 0), &[0, 1, 2]);
    // The attainable box [-0.1, 3.1] also leaves the domain on the left.
    assert_eq!(gamma.dist(0, 0), &[3, 4]);
    for cell in 0..4 {
        assert_eq!(gamma.nor(cell, 0), interval_oracle(0.0, 1.0, 4, cell, 1.0, 0.1, 1.0).as_slice());
        let high = interval_oracle(0.0, 1.0, 4, cell, 1.0, 1.1, 1.0);
        let mut union: Vec<usize> = gamma.nor(cell, 0).iter().chain(gamma.dist(cell, 0)).copied().collect();
        union.sort_unstable();
        assert_eq!(union, high);
    }
    assert_eq!(gamma.nor(4, 0), &[4]);
    assert!(gamma.dist(4, 0).is_empty());
    assert_eq!(gamma.color(4), 1);
}

#[test]
fn zero_dynamics_are_self_loops() {
    let sys = SampledSystem::new(
        Arc::new(Linear::zero(1)),
        AxisBox::symmetric(&[0.0]).unwrap(),
        AxisBox::symmetric(&[0.3]).unwrap(),
        1.0,
    );
    let q = line_grid(vec![vec![0.0]]);
    let nor = find_abstraction(&sys, &q, &sys.w_normal).unwrap();
    for cell in 0..4 {
        assert_eq!(nor.get(cell, 0), &[cell]);
    }
    let gamma = find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(2)).unwrap();
    assert_eq!(check_frr_sample(&sys, &gamma, &q, 2000, 1).unwrap().violations(), 0);
}

#[test]
fn negligible_margin_gives_no_disturbance_edges() {
    let sys = SampledSystem::new(
        Arc::new(Linear::zero(1)),
        AxisBox::symmetric(&[0.01]).unwrap(),
        AxisBox::symmetric(&[0.02]).unwrap(),
        1.0,
    );
    let q = line_grid(vec![vec![0.0]]);
    let gamma = find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(0)).unwrap();
    assert_eq!(gamma.dist_edge_count(), 0);
}

fn unicycle_grid(side: f64, eta: f64) -> Quantizer {
    let tau = 0.3;
    let mut inputs = Vec::new();
    for v in [0.6, 1.2] {
        for w in [-PI / 4.0 / tau, 0.0, PI / 4.0 / tau] {
            inputs.push(vec![v, w]);
        }
    }
    Quantizer::new(GridParams {
        state_lo: vec![0.0, 0.0, -PI],
        state_hi: vec![side, side, PI],
        eta: vec![eta, eta, PI / 4.0],
        periodic: vec![false, false, true],
        input_values: inputs,
    })
    .unwrap()
}

fn unicycle(dynamics: Arc<dyn Dynamics>) -> SampledSystem {
    SampledSystem::new(
        dynamics,
        AxisBox::symmetric(&[0.01, 0.01, 0.01]).unwrap(),
        AxisBox::symmetric(&[0.15, 0.15, 0.1]).unwrap(),
        0.3,
    )
}

#[test]
fn unicycle_abstraction_is_sound_on_samples() {
    let sys = unicycle(Arc::new(Unicycle));
    let q = unicycle_grid(3.0, 0.2);
    let gamma = find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(0)).unwrap();
    assert!(gamma.dist_edge_count() > 0);
    let report = check_frr_sample(&sys, &gamma, &q, 10_000, 3).unwrap();
    assert_eq!(report.samples, 10_000);
    assert_eq!(report.violations(), 0, "{report:?}");
}

/// Unicycle whose growth bound is scaled down, so the abstraction misses
/// reachable cells.
struct Shrunk;

impl Dynamics for Shrunk {
    fn name(&self) -> &str {
        "shrunk"
    }
    fn state_dim(&self) -> usize {
        3
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64], dx: &mut [f64]) {
        Unicycle.vector_field(x, u, w, dx)
    }
    fn growth_bound(&self, r: &[f64], u: &[f64], w_radius: &[f64], dr: &mut [f64]) {
        Unicycle.growth_bound(r, u, w_radius, dr);
        for d in dr.iter_mut() {
            *d *= 0.1;
        }
    }
}

#[test]
fn shrunken_growth_bound_is_caught() {
    let q = unicycle_grid(3.0, 0.2);
    let sound = unicycle(Arc::new(Unicycle));
    let gamma = find_risk_aware_abstraction(&sound, &q, &ColorMap::uniform(0)).unwrap();
    // Transitions from the unsound bound, checked against the true system.
    let shrunk = unicycle(Arc::new(Shrunk));
    let bad = find_risk_aware_abstraction(&shrunk, &q, &ColorMap::uniform(0)).unwrap();
    assert!(bad.normal_edge_count() < gamma.normal_edge_count());
    let report = check_frr_sample(&sound, &bad, &q, 5_000, 3).unwrap();
    assert!(report.violations() > 0);
}

#[test]
fn dump_round_trip_and_version_check() {
    let sys = drift(0.1, 1.1);
    let q = line_grid(vec![vec![1.0], vec![-1.0]]);
    let gamma = find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(0)).unwrap();
    let mut buf = Vec::new();
    gamma.write_json(&mut buf).unwrap();
    assert_eq!(BimodalAbstraction::read_json(buf.as_slice()).unwrap(), gamma);
    let text = String::from_utf8(buf).unwrap().replace("\"version\":1", "\"version\":2");
    assert!(matches!(BimodalAbstraction::read_json(text.as_bytes()), Err(Error::Format(_))));
}

#[test]
fn color_lifting() {
    let q = line_grid(vec![vec![0.0]]);
    let aligned = ColorMap {
        regions: vec![ColorRegion {
            boxes: vec![AxisBox::new(vec![3.0], vec![4.0]).unwrap()],
            color: 2,
        }],
        default_color: 1,
        obstacles: Vec::new(),
    };
    assert_eq!(lift_colors(&q, &aligned).unwrap(), vec![1, 1, 1, 2, 3]);
    assert_eq!(lift_colors(&q, &ColorMap::uniform(4)).unwrap(), vec![4, 4, 4, 4, 5]);
    let straddle = ColorMap {
        regions: vec![ColorRegion {
            boxes: vec![AxisBox::new(vec![2.5], vec![4.0]).unwrap()],
            color: 2,
        }],
        default_color: 1,
        obstacles: Vec::new(),
    };
    assert!(matches!(lift_colors(&q, &straddle), Err(Error::ColorStraddle { cell: 2, .. })));
}

#[test]
fn obstacle_sinks() {
    let g = BimodalBuilder::new(3, 2)
        .normal(0, 0, &[1])
        .dist(0, 0, &[2])
        .normal(1, 0, &[2])
        .dist(1, 0, &[0])
        .normal(1, 1, &[0])
        .normal(2, 0, &[2])
        .build()
        .unwrap();
    assert_eq!(apply_obstacle_sinks(&g, &[]), g);
    let h = apply_obstacle_sinks(&g, &[1]);
    assert_eq!(h.nor(1, 0), &[1]);
    assert_eq!(h.nor(1, 1), &[1]);
    assert!(h.dist(1, 0).is_empty());
    assert_eq!(h.nor(0, 0), &[1]);
    assert_eq!(h.dist(0, 0), &[2]);
    assert!(h.obstacle()[1]);

    let sys = drift(0.1, 1.1);
    let q = line_grid(vec![vec![1.0]]);
    let cmap = ColorMap {
        regions: Vec::new(),
        default_color: 0,
        obstacles: vec![AxisBox::new(vec![1.2], vec![1.8]).unwrap()],
    };
    let gamma = find_risk_aware_abstraction(&sys, &q, &cmap).unwrap();
    assert_eq!(gamma.nor(1, 0), &[1]);
    assert!(gamma.dist(1, 0).is_empty());
    assert!(gamma.nor(0, 0).contains(&1));
}

#[test]
fn construction_is_deterministic() {
    let sys = unicycle(Arc::new(Unicycle));
    let q = unicycle_grid(2.0, 0.25);
    let dump = || {
        let mut buf = Vec::new();
        find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(0))
            .unwrap()
            .write_json(&mut buf)
            .unwrap();
        buf
    };
    assert_eq!(dump(), dump());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_successors_are_high_successors(
        a in 0.0f64..0.5,
        b in 0.1f64..2.0,
        u in -1.0f64..1.0,
        wn in 0.0f64..0.2,
        extra in 0.01f64..0.5,
    ) {
        let sys = SampledSystem::new(
            Arc::new(Linear::new(vec![vec![a]], vec![vec![b]]).unwrap()),
            AxisBox::symmetric(&[wn]).unwrap(),
            AxisBox::symmetric(&[wn + extra]).unwrap(),
            0.5,
        );
        let q = Quantizer::new(GridParams {
            state_lo: vec![-2.0],
            state_hi: vec![2.0],
            eta: vec![0.25],
            periodic: vec![false],
            input_values: vec![vec![u], vec![0.0]],
        })
        .unwrap();
        let nor = find_abstraction(&sys, &q, &sys.w_normal).unwrap();
        let high = find_abstraction(&sys, &q, &sys.w_high).unwrap();
        for cell in 0..q.num_states() {
            for act in 0..2 {
                prop_assert!(!nor.get(cell, act).is_empty());
                prop_assert!(nor.get(cell, act).iter().all(|s| high.get(cell, act).contains(s)));
            }
        }
        let gamma = find_risk_aware_abstraction(&sys, &q, &ColorMap::uniform(0)).unwrap();
        prop_assert_eq!(check_frr_sample(&sys, &gamma, &q, 500, 0).unwrap().violations(), 0);
    }

    #[test]
    fn quantizer_round_trip(x in 0.0f64..3.0, y in 0.0f64..3.0, th in -PI..PI, k in -3i32..3) {
        let q = unicycle_grid(3.0, 0.2);
        for cell in [0, q.num_cells() / 2, q.num_cells() - 1] {
            prop_assert_eq!(q.quantize(&q.cell_center(cell)), cell);
        }
        let wrapped = th + 2.0 * PI * f64::from(k);
        prop_assert_eq!(q.quantize(&[x, y, th]), q.quantize(&[x, y, wrapped]));
    }
}
