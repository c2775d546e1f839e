//! Continuous sampled-time systems, disturbance boxes and continuous-space
//! color maps.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Color, Error, Result};

/// Fixed number of RK4 substeps per sampling period.
pub const RK4_SUBSTEPS: usize = 5;

/// Samples drawn when checking growth-bound monotonicity.
pub const MONOTONICITY_SAMPLES: usize = 1000;

/// Axis-aligned closed box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidBox("dimension must be positive".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::InvalidBox(format!(
                "bound dimensions differ ({} vs {})",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidBox(format!("non-finite bound in dimension {i}")));
            }
            if l > h {
                return Err(Error::InvalidBox(format!("lo[{i}] = {l} > hi[{i}] = {h}")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Box symmetric around the origin with the given half-widths.
    pub fn symmetric(radius: &[f64]) -> Result<Self> {
        Self::new(radius.iter().map(|r| -r).collect(), radius.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn is_subset_of(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| other.lo[i] <= self.lo[i] && self.hi[i] <= other.hi[i])
    }

    /// Componentwise bound on `|w|` over the box.
    pub fn radius(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l.abs().max(h.abs()))
            .collect()
    }

    /// Whether the open interiors of the two boxes overlap.
    pub fn overlaps_interior(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < hi[i] && lo[i] < self.hi[i])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if l < h { rng.gen_range(*l..=*h) } else { *l })
            .collect()
    }
}

/// Right-hand side of a perturbed ODE plus a growth bound for its
/// attainable-set radius.
///
/// The disturbance `w` has the state dimension and enters additively.
pub trait Dynamics: Send + Sync {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64], dx: &mut [f64]);
    /// Time derivative of the radius `r` of the attainable set around the
    /// nominal trajectory, given the disturbance radius `w_radius`.
    fn growth_bound(&self, r: &[f64], u: &[f64], w_radius: &[f64], dr: &mut [f64]);
}

/// Kinematic unicycle: `ẋ₀ = u₀ cos x₂ + w₀`, `ẋ₁ = u₀ sin x₂ + w₁`, `ẋ₂ = u₁ + w₂`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unicycle;

impl Dynamics for Unicycle {
    fn name(&self) -> &str {
        "unicycle"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64], dx: &mut [f64]) {
        dx[0] = u[0] * x[2].cos() + w[0];
        dx[1] = u[0] * x[2].sin() + w[1];
        dx[2] = u[1] + w[2];
    }

    fn growth_bound(&self, r: &[f64], u: &[f64], w_radius: &[f64], dr: &mut [f64]) {
        let v = u[0].abs();
        dr[0] = v * r[2] + w_radius[0];
        dr[1] = v * r[2] + w_radius[1];
        dr[2] = w_radius[2];
    }
}

/// Linear system `ẋ = A x + B u + w`.
///
/// The growth bound uses the Metzler part of `A` (diagonal as is, absolute
/// values off the diagonal).
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl Linear {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        if n == 0 || a.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidBox("A must be a non-empty square matrix".into()));
        }
        if b.len() != n {
            return Err(Error::InvalidBox(format!("B must have {n} rows")));
        }
        let m = b[0].len();
        if m == 0 || b.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidBox("B rows must share a positive length".into()));
        }
        Ok(Self { a, b })
    }

    /// `ẋ = w` in `n` dimensions with a single (ignored) input.
    pub fn zero(n: usize) -> Self {
        Self {
            a: vec![vec![0.0; n]; n],
            b: vec![vec![0.0]; n],
        }
    }
}

impl Dynamics for Linear {
    fn name(&self) -> &str {
        "linear"
    }

    fn state_dim(&self) -> usize {
        self.a.len()
    }

    fn input_dim(&self) -> usize {
        self.b[0].len()
    }

    fn vector_field(&self, x: &[f64], u: &[f64], w: &[f64], dx: &mut [f64]) {
        for (i, d) in dx.iter_mut().enumerate() {
            let ax: f64 = self.a[i].iter().zip(x).map(|(a, x)| a * x).sum();
            let bu: f64 = self.b[i].iter().zip(u).map(|(b, u)| b * u).sum();
            *d = ax + bu + w[i];
        }
    }

    fn growth_bound(&self, r: &[f64], _u: &[f64], w_radius: &[f64], dr: &mut [f64]) {
        for (i, d) in dr.iter_mut().enumerate() {
            *d = self.a[i]
                .iter()
                .enumerate()
                .map(|(j, a)| if i == j { a * r[j] } else { a.abs() * r[j] })
                .sum::<f64>()
                + w_radius[i];
        }
    }
}

/// A perturbed sampled-time control system.
#[derive(Clone)]
pub struct SampledSystem {
    pub dynamics: Arc<dyn Dynamics>,
    pub w_normal: AxisBox,
    pub w_high: AxisBox,
    /// Sampling period in seconds.
    pub tau: f64,
}

impl fmt::Debug for SampledSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledSystem")
            .field("dynamics", &self.dynamics.name())
            .field("w_normal", &self.w_normal)
            .field("w_high", &self.w_high)
            .field("tau", &self.tau)
            .finish()
    }
}

impl SampledSystem {
    pub fn new(dynamics: Arc<dyn Dynamics>, w_normal: AxisBox, w_high: AxisBox, tau: f64) -> Self {
        Self {
            dynamics,
            w_normal,
            w_high,
            tau,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    /// Whether `w` is a spike, i.e. lies in `w_high \ w_normal`.
    pub fn is_spike(&self, w: &[f64]) -> bool {
        !self.w_normal.contains(w)
    }
}

/// Classical RK4 with `steps` equal substeps over `[0, t]`.
pub(crate) fn rk4<F>(mut f: F, y0: &[f64], t: f64, steps: usize) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = y0.len();
    let h = t / steps as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for _ in 0..steps {
        f(&y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Time-`tau` flow of `ẋ = f(x, u, w)` with constant `u` and `w`.
pub fn integrate_nominal(
    sys: &SampledSystem,
    x: &[f64],
    u: &[f64],
    w: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    let dynamics = &sys.dynamics;
    let y = rk4(
        |y, dy| dynamics.vector_field(y, u, w, dy),
        x,
        tau,
        RK4_SUBSTEPS,
    );
    if y.iter().all(|v| v.is_finite()) {
        Ok(y)
    } else {
        Err(Error::IntegrationDiverged { state: y })
    }
}

/// Attainable-set radius after `tau`, starting from `r0`.
pub fn integrate_radius(
    sys: &SampledSystem,
    r0: &[f64],
    u: &[f64],
    w_radius: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    let dynamics = &sys.dynamics;
    let r = rk4(
        |r, dr| dynamics.growth_bound(r, u, w_radius, dr),
        r0,
        tau,
        RK4_SUBSTEPS,
    );
    if r.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(Error::IntegrationDiverged { state: r })
    }
}

/// A color assigned to a union of boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorRegion {
    pub boxes: Vec<AxisBox>,
    pub color: Color,
}

/// Continuous-space parity specification plus obstacle set.
///
/// The first region containing a point decides its color.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorMap {
    pub regions: Vec<ColorRegion>,
    pub default_color: Color,
    pub obstacles: Vec<AxisBox>,
}

impl ColorMap {
    pub fn uniform(color: Color) -> Self {
        Self {
            regions: Vec::new(),
            default_color: color,
            obstacles: Vec::new(),
        }
    }

    pub fn color_of(&self, x: &[f64]) -> Color {
        self.regions
            .iter()
            .find(|r| r.boxes.iter().any(|b| b.contains(x)))
            .map_or(self.default_color, |r| r.color)
    }

    pub fn is_obstacle(&self, x: &[f64]) -> bool {
        self.obstacles.iter().any(|b| b.contains(x))
    }

    pub fn max_color(&self) -> Color {
        self.regions
            .iter()
            .map(|r| r.color)
            .fold(self.default_color, Color::max)
    }
}

/// One violated problem invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemViolation {
    DimensionMismatch(String),
    NotIncluded,
    InclusionNotStrict,
    BadSamplingPeriod(f64),
    GrowthBoundNotMonotone { r: Vec<f64>, w_radius: Vec<f64> },
}

impl fmt::Display for ProblemViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            Self::NotIncluded => write!(f, "w_normal is not contained in w_high"),
            Self::InclusionNotStrict => write!(f, "w_high must strictly contain w_normal"),
            Self::BadSamplingPeriod(t) => write!(f, "sampling period must be positive, got {t}"),
            Self::GrowthBoundNotMonotone { r, w_radius } => write!(
                f,
                "growth bound is not monotone near r={r:?}, w_radius={w_radius:?}"
            ),
        }
    }
}

/// Checks the problem tuple `(system, w_high, colors)` and reports every
/// violated invariant.
pub fn validate_problem(sys: &SampledSystem, cmap: &ColorMap) -> Result<(), Vec<ProblemViolation>> {
    let n = sys.state_dim();
    let m = sys.input_dim();
    let mut out = Vec::new();

    for (name, b) in [("w_normal", &sys.w_normal), ("w_high", &sys.w_high)] {
        if b.dim() != n {
            out.push(ProblemViolation::DimensionMismatch(format!(
                "{name} has dimension {}, state dimension is {n}",
                b.dim()
            )));
        }
    }
    for (i, region) in cmap.regions.iter().enumerate() {
        if region.boxes.iter().any(|b| b.dim() != n) {
            out.push(ProblemViolation::DimensionMismatch(format!(
                "color region {i} has a box of the wrong dimension"
            )));
        }
    }
    if cmap.obstacles.iter().any(|b| b.dim() != n) {
        out.push(ProblemViolation::DimensionMismatch(
            "obstacle box of the wrong dimension".into(),
        ));
    }
    if !out.is_empty() {
        return Err(out);
    }

    if !sys.w_normal.is_subset_of(&sys.w_high) {
        out.push(ProblemViolation::NotIncluded);
    } else if sys.w_normal == sys.w_high {
        out.push(ProblemViolation::InclusionNotStrict);
    }
    if !(sys.tau > 0.0 && sys.tau.is_finite()) {
        out.push(ProblemViolation::BadSamplingPeriod(sys.tau));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let w_max = sys.w_high.radius();
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];
    for _ in 0..MONOTONICITY_SAMPLES {
        let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let r1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let r2: Vec<f64> = r1.iter().map(|r| r + rng.gen_range(0.0..=1.0)).collect();
        let w1: Vec<f64> = w_max.iter().map(|w| rng.gen_range(0.0..=1.0) * w).collect();
        let w2: Vec<f64> = w1
            .iter()
            .zip(&w_max)
            .map(|(a, b)| a + rng.gen_range(0.0..=1.0) * (b - a))
            .collect();
        sys.dynamics.growth_bound(&r1, &u, &w1, &mut g1);
        sys.dynamics.growth_bound(&r2, &u, &w2, &mut g2);
        if g1.iter().zip(&g2).any(|(a, b)| a > &(b + 1e-12)) {
            out.push(ProblemViolation::GrowthBoundNotMonotone { r: r1, w_radius: w1 });
            break;
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unicycle(d: f64) -> SampledSystem {
        SampledSystem::new(
            Arc::new(Unicycle),
            AxisBox::symmetric(&[0.05, 0.05, 0.0]).unwrap(),
            AxisBox::symmetric(&[d, d, 0.0]).unwrap(),
            0.3,
        )
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(AxisBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(AxisBox::new(vec![], vec![]).is_err());
    }

    #[test]
    fn zero_field_is_identity() {
        let sys = SampledSystem::new(
            Arc::new(Linear::zero(2)),
            AxisBox::symmetric(&[0.0, 0.0]).unwrap(),
            AxisBox::symmetric(&[1.0, 1.0]).unwrap(),
            0.3,
        );
        let x = [1.25, -3.5];
        let y = integrate_nominal(&sys, &x, &[0.0], &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn unicycle_straight_line() {
        let sys = unicycle(0.5);
        let y = integrate_nominal(&sys, &[0.0, 0.0, 0.0], &[1.0, 0.0], &[0.0; 3], 0.3).unwrap();
        assert_abs_diff_eq!(y[0], 0.3, epsilon = 1e-15);
        assert_eq!(y[1], 0.0);
        assert_eq!(y[2], 0.0);
    }

    #[test]
    fn unicycle_arc_matches_closed_form() {
        // With u = (v, ω) and θ(0) = 0: x = v/ω sin(ωt), y = v/ω (1 - cos(ωt)).
        let sys = unicycle(0.5);
        let t: f64 = 0.3;
        let y = integrate_nominal(&sys, &[0.0, 0.0, 0.0], &[1.0, 1.0], &[0.0; 3], t).unwrap();
        assert_abs_diff_eq!(y[0], t.sin(), epsilon = 1e-8);
        assert_abs_diff_eq!(y[1], 1.0 - t.cos(), epsilon = 1e-8);
        assert_abs_diff_eq!(y[2], t, epsilon = 1e-12);
    }

    #[test]
    fn rk4_on_linear_fields() {
        // ẋ = -x, exact solution e^{-t}; RK4 with 5 substeps over 0.5 s.
        let sys = SampledSystem::new(
            Arc::new(Linear::new(vec![vec![-1.0]], vec![vec![0.0]]).unwrap()),
            AxisBox::symmetric(&[0.0]).unwrap(),
            AxisBox::symmetric(&[0.1]).unwrap(),
            0.5,
        );
        let y = integrate_nominal(&sys, &[1.0], &[0.0], &[0.0], 0.5).unwrap();
        assert_abs_diff_eq!(y[0], (-0.5f64).exp(), epsilon = 1e-6);
        // Affine fields are integrated exactly.
        let drift = SampledSystem::new(
            Arc::new(Linear::new(vec![vec![0.0]], vec![vec![1.0]]).unwrap()),
            AxisBox::symmetric(&[0.0]).unwrap(),
            AxisBox::symmetric(&[0.1]).unwrap(),
            0.5,
        );
        let y = integrate_nominal(&drift, &[0.25], &[2.0], &[0.05], 0.5).unwrap();
        assert_abs_diff_eq!(y[0], 0.25 + 0.5 * 2.05, epsilon = 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let sys = SampledSystem::new(
            Arc::new(Linear::new(vec![vec![1e308]], vec![vec![0.0]]).unwrap()),
            AxisBox::symmetric(&[0.0]).unwrap(),
            AxisBox::symmetric(&[0.1]).unwrap(),
            1.0,
        );
        assert!(matches!(
            integrate_nominal(&sys, &[1e10], &[0.0], &[0.0], 1.0),
            Err(Error::IntegrationDiverged { .. })
        ));
    }

    #[test]
    fn colors_first_match_then_default() {
        let cmap = ColorMap {
            regions: vec![
                ColorRegion {
                    boxes: vec![AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()],
                    color: 2,
                },
                ColorRegion {
                    boxes: vec![AxisBox::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap()],
                    color: 0,
                },
            ],
            default_color: 1,
            obstacles: vec![AxisBox::new(vec![3.0, 3.0], vec![4.0, 4.0]).unwrap()],
        };
        assert_eq!(cmap.color_of(&[0.5, 0.5]), 2);
        assert_eq!(cmap.color_of(&[2.0, 2.0]), 0);
        assert_eq!(cmap.color_of(&[7.0, 7.0]), 1);
        assert!(cmap.is_obstacle(&[3.5, 3.5]));
        assert!(!cmap.is_obstacle(&[0.5, 0.5]));
        assert_eq!(cmap.max_color(), 2);
    }

    #[test]
    fn nominal_unicycle_problem_is_valid() {
        validate_problem(&unicycle(0.5), &ColorMap::uniform(1)).unwrap();
    }

    #[test]
    fn equal_boxes_are_rejected() {
        let errs = validate_problem(&unicycle(0.05), &ColorMap::uniform(1)).unwrap_err();
        assert_eq!(errs, vec![ProblemViolation::InclusionNotStrict]);
    }

    struct Shrinking;

    impl Dynamics for Shrinking {
        fn name(&self) -> &str {
            "shrinking"
        }
        fn state_dim(&self) -> usize {
            1
        }
        fn input_dim(&self) -> usize {
            1
        }
        fn vector_field(&self, _x: &[f64], _u: &[f64], w: &[f64], dx: &mut [f64]) {
            dx[0] = w[0];
        }
        fn growth_bound(&self, r: &[f64], _u: &[f64], w: &[f64], dr: &mut [f64]) {
            dr[0] = w[0] - r[0];
        }
    }

    #[test]
    fn decreasing_growth_bound_is_rejected() {
        let sys = SampledSystem::new(
            Arc::new(Shrinking),
            AxisBox::symmetric(&[0.0]).unwrap(),
            AxisBox::symmetric(&[1.0]).unwrap(),
            0.1,
        );
        let errs = validate_problem(&sys, &ColorMap::uniform(0)).unwrap_err();
        assert!(matches!(errs[0], ProblemViolation::GrowthBoundNotMonotone { .. }));
    }

    #[test]
    fn every_violation_is_reported() {
        let sys = SampledSystem::new(
            Arc::new(Unicycle),
            AxisBox::symmetric(&[0.5, 0.5, 0.0]).unwrap(),
            AxisBox::symmetric(&[0.05, 0.05, 0.0]).unwrap(),
            -1.0,
        );
        let errs = validate_problem(&sys, &ColorMap::uniform(1)).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs.contains(&ProblemViolation::NotIncluded));
        assert!(errs.contains(&ProblemViolation::BadSamplingPeriod(-1.0)));
    }

    proptest::proptest! {
        #[test]
        fn normal_samples_lie_in_high(seed in 0u64..1000, d in 0.06f64..5.0) {
            let sys = unicycle(d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = sys.w_normal.sample(&mut rng);
            proptest::prop_assert!(sys.w_high.contains(&w));
            proptest::prop_assert!(!sys.is_spike(&w));
        }
    }
}
