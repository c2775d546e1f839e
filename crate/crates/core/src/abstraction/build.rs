use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::transitions::sorted_difference;
use super::{BimodalAbstraction, Quantizer, TransitionMap};
use crate::system::{integrate_nominal, integrate_radius, validate_problem, AxisBox, ColorMap, SampledSystem};
use crate::{Color, Error, Result, StateId};

/// Relative inset of the corner samples used when lifting colors, so that
/// corners of grid-aligned regions do not touch neighboring regions.
const CORNER_INSET: f64 = 1e-7;

/// Successor sets of every `(cell, input)` pair under disturbances bounded by
/// `w`, via the nominal center trajectory and the growth-bound radius.
///
/// The out-of-domain sink loops on itself under every action.
pub fn find_abstraction(sys: &SampledSystem, quantizer: &Quantizer, w: &AxisBox) -> Result<TransitionMap> {
    let grid = quantizer.grid();
    let n = quantizer.dim();
    if sys.state_dim() != n {
        return Err(Error::InvalidGrid(format!(
            "grid has dimension {n}, system has {}",
            sys.state_dim()
        )));
    }
    if grid.input_values[0].len() != sys.input_dim() {
        return Err(Error::InvalidGrid(format!(
            "inputs have dimension {}, system expects {}",
            grid.input_values[0].len(),
            sys.input_dim()
        )));
    }
    let num_actions = grid.input_values.len();
    let num_cells = quantizer.num_cells();
    let ood = quantizer.out_of_domain();
    let w_radius = w.radius();
    let w_zero = vec![0.0; n];
    let r0: Vec<f64> = grid.eta.iter().map(|e| e / 2.0).collect();
    let extent: Vec<f64> = grid
        .state_lo
        .iter()
        .zip(&grid.state_hi)
        .map(|(l, h)| h - l)
        .collect();
    let too_wide = AtomicUsize::new(0);

    let rows: Vec<Vec<StateId>> = (0..num_cells * num_actions)
        .into_par_iter()
        .map(|p| -> Result<Vec<StateId>> {
            let (cell, u) = (p / num_actions, p % num_actions);
            let input = &grid.input_values[u];
            let center = integrate_nominal(sys, &quantizer.cell_center(cell), input, &w_zero, sys.tau)?;
            let radius = integrate_radius(sys, &r0, input, &w_radius, sys.tau)?;
            let lo: Vec<f64> = center.iter().zip(&radius).map(|(c, r)| c - r).collect();
            let hi: Vec<f64> = center.iter().zip(&radius).map(|(c, r)| c + r).collect();
            if radius.iter().zip(&extent).any(|(r, e)| 2.0 * r > *e) {
                too_wide.fetch_add(1, Ordering::Relaxed);
            }
            let (mut succ, exits) = quantizer.cells_meeting(&lo, &hi);
            if exits {
                succ.push(ood);
            }
            Ok(succ)
        })
        .collect::<Result<_>>()?;

    let wide = too_wide.into_inner();
    if wide > 0 {
        log::warn!("{wide} attainable boxes are wider than the domain; abstraction is sound but coarse");
    }
    let sink_rows = (0..num_actions).map(|_| vec![ood]);
    Ok(TransitionMap::from_rows(
        quantizer.num_states(),
        num_actions,
        rows.into_iter().chain(sink_rows),
    ))
}

/// The highest odd color not below any color of `cmap`.
pub fn worst_odd_color(cmap: &ColorMap) -> Color {
    let c = cmap.max_color();
    if c % 2 == 1 {
        c
    } else {
        c + 1
    }
}

/// Builds the risk-aware abstraction: normal transitions under `w_normal`,
/// disturbance transitions `δ_high \ δ_nor`, lifted colors and obstacle sinks.
pub fn find_risk_aware_abstraction(
    sys: &SampledSystem,
    quantizer: &Quantizer,
    cmap: &ColorMap,
) -> Result<BimodalAbstraction> {
    validate_problem(sys, cmap).map_err(Error::InvalidProblem)?;
    let colors = lift_colors(quantizer, cmap)?;
    let nor = find_abstraction(sys, quantizer, &sys.w_normal)?;
    let high = find_abstraction(sys, quantizer, &sys.w_high)?;
    let dist = high.map_rows(|q, u, h| sorted_difference(h, nor.get(q, u)));
    let gamma = BimodalAbstraction::new(
        nor,
        dist,
        colors,
        vec![false; quantizer.num_states()],
        Some(quantizer.out_of_domain()),
        Some(quantizer.grid().clone()),
    )?;
    let obstacles = obstacle_cells(quantizer, cmap);
    Ok(apply_obstacle_sinks(&gamma, &obstacles))
}

/// Colors of every abstract state. A cell's color is read at its center and
/// at its (slightly inset) corners; disagreement is an error. The
/// out-of-domain sink gets the worst odd color.
pub fn lift_colors(quantizer: &Quantizer, cmap: &ColorMap) -> Result<Vec<Color>> {
    let n = quantizer.dim();
    let eta = &quantizer.grid().eta;
    let mut colors = Vec::with_capacity(quantizer.num_states());
    let mut sample = vec![0.0; n];
    for cell in 0..quantizer.num_cells() {
        let center = quantizer.cell_center(cell);
        let c0 = cmap.color_of(&center);
        for corner in 0..(1usize << n) {
            for i in 0..n {
                let sign = if corner >> i & 1 == 1 { 1.0 } else { -1.0 };
                sample[i] = center[i] + sign * eta[i] * (0.5 - CORNER_INSET);
            }
            let c = cmap.color_of(&sample);
            if c != c0 {
                return Err(Error::ColorStraddle {
                    cell,
                    first: c0,
                    second: c,
                });
            }
        }
        colors.push(c0);
    }
    colors.push(worst_odd_color(cmap));
    Ok(colors)
}

/// Cells whose interior meets an obstacle box (or whose center lies in one).
pub fn obstacle_cells(quantizer: &Quantizer, cmap: &ColorMap) -> Vec<StateId> {
    if cmap.obstacles.is_empty() {
        return Vec::new();
    }
    (0..quantizer.num_cells())
        .filter(|&cell| {
            let (lo, hi) = quantizer.cell_bounds(cell);
            let center = quantizer.cell_center(cell);
            cmap.obstacles
                .iter()
                .any(|b| b.overlaps_interior(&lo, &hi) || b.contains(&center))
        })
        .collect()
}

/// Makes every listed state absorbing: a normal self-loop for each enabled
/// action and no disturbance successors. Transitions into those states are
/// kept.
pub fn apply_obstacle_sinks(gamma: &BimodalAbstraction, obstacles: &[StateId]) -> BimodalAbstraction {
    let mut is_obstacle = gamma.obstacle.clone();
    for &q in obstacles {
        is_obstacle[q] = true;
    }
    let mut out = gamma.clone();
    out.delta_nor = gamma.delta_nor.map_rows(|q, _, succ| {
        if is_obstacle[q] && !succ.is_empty() {
            vec![q]
        } else {
            succ.to_vec()
        }
    });
    out.delta_dist = gamma
        .delta_dist
        .map_rows(|q, _, succ| if is_obstacle[q] { Vec::new() } else { succ.to_vec() });
    out.obstacle = is_obstacle;
    out
}

/// Monte-Carlo containment counts for the two abstraction conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrrReport {
    pub samples: usize,
    /// Samples with `w ∈ w_normal` whose successor cell escapes `δ_nor(q, u)`.
    pub normal_violations: usize,
    /// Samples with `w ∈ w_high` whose successor cell escapes `δ_nor ∪ δ_dist`.
    pub high_violations: usize,
}

impl FrrReport {
    pub fn violations(&self) -> usize {
        self.normal_violations + self.high_violations
    }
}

/// Draws `samples` random one-step transitions of the concrete system from
/// non-obstacle cells and checks them against the abstraction.
pub fn check_frr_sample(
    sys: &SampledSystem,
    gamma: &BimodalAbstraction,
    quantizer: &Quantizer,
    samples: usize,
    seed: u64,
) -> Result<FrrReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = quantizer.grid();
    let domain = AxisBox::new(grid.state_lo.clone(), grid.state_hi.clone())?;
    let mut report = FrrReport {
        samples,
        ..FrrReport::default()
    };
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < samples {
        attempts += 1;
        if attempts > samples.saturating_mul(1000).max(1000) {
            break;
        }
        let x = domain.sample(&mut rng);
        let q = quantizer.quantize(&x);
        if q == quantizer.out_of_domain() || gamma.obstacle[q] {
            continue;
        }
        let enabled: Vec<_> = gamma.enabled(q).collect();
        if enabled.is_empty() {
            continue;
        }
        let u = enabled[rng.gen_range(0..enabled.len())];
        let input = &grid.input_values[u];

        let w = sys.w_normal.sample(&mut rng);
        let next = quantizer.quantize(&integrate_nominal(sys, &x, input, &w, sys.tau)?);
        if gamma.nor(q, u).binary_search(&next).is_err() {
            report.normal_violations += 1;
        }

        let w = sys.w_high.sample(&mut rng);
        let next = quantizer.quantize(&integrate_nominal(sys, &x, input, &w, sys.tau)?);
        if gamma.nor(q, u).binary_search(&next).is_err() && gamma.dist(q, u).binary_search(&next).is_err() {
            report.high_violations += 1;
        }
        drawn += 1;
    }
    report.samples = drawn;
    Ok(report)
}
