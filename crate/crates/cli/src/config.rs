//! Scenario configuration documents (TOML).
//!
//! The grammar is documented in `docs/formats.md`. Syntax errors carry the
//! line and column reported by the TOML parser; semantic errors name the
//! line of the block they concern.

use std::ops::Range;
use std::sync::Arc;

use rescot_core::abstraction::{GridParams, Quantizer};
use rescot_core::resilience::Mode;
use rescot_core::runtime::{NominalDisturbance, SpikeSchedule};
use rescot_core::system::{validate_problem, AxisBox, ColorMap, ColorRegion, Dynamics, Linear, SampledSystem, Unicycle};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, CliResult};

/// Names accepted by `system.dynamics`.
pub const DYNAMICS: &[&str] = &["unicycle", "linear"];

/// Margin added to a spike magnitude that equals the nominal bound.
pub const NOMINAL_MARGIN: f64 = 1e-12;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub system: Spanned<SystemConfig>,
    pub grid: Spanned<GridConfig>,
    pub spec: Spanned<SpecConfig>,
    run: Option<Spanned<RunConfig>>,
    /// Line starts of the source text, for error locations.
    #[serde(skip)]
    lines: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dynamics: String,
    /// State matrix of a linear system.
    pub a: Option<Vec<Vec<f64>>>,
    /// Input matrix of a linear system.
    pub b: Option<Vec<Vec<f64>>>,
    pub tau: f64,
    /// Half-widths of the nominal disturbance box.
    pub w_normal: Vec<f64>,
    /// Half-widths of the spike box. Exclusive with `d`.
    pub w_high: Option<Vec<f64>>,
    /// Spike magnitude: half-width `d` on every spike axis.
    pub d: Option<f64>,
    /// Axes affected by `d`; defaults to the axes with a nonzero nominal
    /// disturbance.
    pub spike_axes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub eta: Vec<f64>,
    #[serde(default)]
    pub periodic: Vec<bool>,
    pub inputs: Vec<Vec<f64>>,
}

/// A box given on the leading state axes; missing trailing axes span the
/// whole grid.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    #[serde(default)]
    pub name: String,
    pub color: u32,
    pub boxes: Vec<BoxConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub default_color: u32,
    #[serde(default)]
    pub regions: Vec<RegionConfig>,
    #[serde(default)]
    pub obstacles: Vec<BoxConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeConfig {
    pub step: usize,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NominalConfig {
    #[default]
    Zero,
    Random,
}

/// A named point whose cell is reported after classification.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub name: String,
    pub x: Vec<f64>,
}

/// A named box used to label trace cells in reports.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    pub name: String,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub nominal: NominalConfig,
    #[serde(default)]
    pub spikes: Vec<SpikeConfig>,
    #[serde(default)]
    pub probes: Vec<ProbeConfig>,
    #[serde(default)]
    pub labels: Vec<LabelConfig>,
    #[serde(default)]
    pub frr_samples: usize,
}

fn default_horizon() -> usize {
    100
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            seed: 0,
            horizon: default_horizon(),
            x0: None,
            nominal: NominalConfig::default(),
            spikes: Vec::new(),
            probes: Vec::new(),
            labels: Vec::new(),
            frr_samples: 0,
        }
    }
}

/// Everything the pipeline needs, built from a checked configuration.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sys: SampledSystem,
    pub quantizer: Quantizer,
    pub cmap: ColorMap,
}

impl ScenarioConfig {
    /// Parses and checks a configuration document.
    pub fn parse(text: &str) -> CliResult<Self> {
        let lines: Vec<usize> = std::iter::once(0)
            .chain(text.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        let mut cfg: Self = toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| locate(&lines, s.start)).unwrap_or_default();
            CliError::Config(format!("{at}{}", e.message()))
        })?;
        cfg.lines = lines;
        cfg.run.get_or_insert_with(|| Spanned::new(0..0, RunConfig::default()));
        cfg.check()?;
        Ok(cfg)
    }

    fn error(&self, span: Range<usize>, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{}{msg}", locate(&self.lines, span.start)))
    }

    /// Replaces the spike box by `[-d, d]` on the spike axes.
    pub fn set_spike_magnitude(&mut self, d: f64) -> CliResult<()> {
        let sys = self.system.get_mut();
        sys.d = Some(d);
        sys.w_high = None;
        let span = self.system.span();
        self.check_system().map_err(|m| self.error(span, m))
    }

    pub fn dim(&self) -> usize {
        self.grid.get_ref().lo.len()
    }

    fn check(&self) -> CliResult<()> {
        let at = |span: Range<usize>, r: Result<(), String>| r.map_err(|m| self.error(span, m));
        at(self.grid.span(), self.check_grid())?;
        at(self.system.span(), self.check_system())?;
        at(self.spec.span(), self.check_spec())?;
        at(self.run_spanned().span(), self.check_run())
    }

    fn check_grid(&self) -> Result<(), String> {
        let g = self.grid.get_ref();
        let n = g.lo.len();
        if n == 0 {
            return Err("[grid] needs at least one dimension".into());
        }
        if g.hi.len() != n || g.eta.len() != n || !(g.periodic.is_empty() || g.periodic.len() == n) {
            return Err(format!("[grid] lo, hi, eta and periodic must all have {n} entries"));
        }
        if g.inputs.is_empty() {
            return Err("[grid] inputs must list at least one input".into());
        }
        Ok(())
    }

    fn check_system(&self) -> Result<(), String> {
        let s = self.system.get_ref();
        let n = self.dim();
        let expected = match s.dynamics.as_str() {
            "unicycle" => {
                if s.a.is_some() || s.b.is_some() {
                    return Err("unicycle dynamics take no matrices".into());
                }
                Some((3, 2))
            }
            "linear" => match (&s.a, &s.b) {
                (Some(a), Some(b)) => Some((a.len(), b.first().map_or(0, Vec::len))),
                _ => return Err("linear dynamics need matrices a and b".into()),
            },
            other => return Err(format!("unknown dynamics {other:?}; known: {}", DYNAMICS.join(", "))),
        };
        if let Some((sn, sm)) = expected {
            if sn != n {
                return Err(format!("{} dynamics have {sn} states, the grid has {n} dimensions", s.dynamics));
            }
            let g = self.grid.get_ref();
            if let Some(bad) = g.inputs.iter().find(|u| u.len() != sm) {
                return Err(format!("input {bad:?} must have {sm} components"));
            }
        }
        if s.w_normal.len() != n {
            return Err(format!("w_normal must have {n} entries"));
        }
        match (&s.w_high, s.d) {
            (Some(_), Some(_)) => return Err("give either w_high or d, not both".into()),
            (None, None) => return Err("missing w_high or d".into()),
            (Some(w), None) if w.len() != n => return Err(format!("w_high must have {n} entries")),
            (None, Some(d)) if !(d.is_finite() && d >= 0.0) => return Err(format!("d must be a nonnegative number, got {d}")),
            _ => {}
        }
        if let Some(axes) = &s.spike_axes {
            if let Some(i) = axes.iter().find(|&&i| i >= n) {
                return Err(format!("spike axis {i} out of range"));
            }
        }
        Ok(())
    }

    fn check_spec(&self) -> Result<(), String> {
        let n = self.dim();
        let s = self.spec.get_ref();
        let boxes = s.regions.iter().flat_map(|r| &r.boxes).chain(&s.obstacles);
        for b in boxes {
            if b.lo.is_empty() || b.lo.len() > n || b.lo.len() != b.hi.len() {
                return Err(format!("box {:?}..{:?} must give 1 to {n} matching bounds", b.lo, b.hi));
            }
        }
        Ok(())
    }

    fn check_run(&self) -> Result<(), String> {
        let n = self.dim();
        let r = self.run();
        if r.x0.as_ref().is_some_and(|x| x.len() != n) {
            return Err(format!("x0 must have {n} entries"));
        }
        if let Some(s) = r.spikes.iter().find(|s| s.w.len() != n) {
            return Err(format!("spike at step {} must have {n} entries", s.step));
        }
        if let Some(p) = r.probes.iter().find(|p| p.x.len() != n) {
            return Err(format!("probe {:?} must have {n} entries", p.name));
        }
        if let Some(l) = r.labels.iter().find(|l| l.lo.is_empty() || l.lo.len() > n || l.lo.len() != l.hi.len()) {
            return Err(format!("label {:?} must give 1 to {n} bounds", l.name));
        }
        Ok(())
    }

    fn run_spanned(&self) -> &Spanned<RunConfig> {
        self.run.as_ref().expect("filled in by parse")
    }

    pub fn run(&self) -> &RunConfig {
        self.run_spanned().get_ref()
    }

    pub fn run_mut(&mut self) -> &mut RunConfig {
        self.run.as_mut().expect("filled in by parse").get_mut()
    }

    /// Half-widths of the spike box.
    /// Radii of the spike box. A spike magnitude equal to the nominal bound
    /// is widened by [`NOMINAL_MARGIN`] so that the problem stays well formed
    /// while producing no disturbance edges.
    pub fn w_high(&self) -> Vec<f64> {
        let s = self.system.get_ref();
        if let Some(w) = &s.w_high {
            return w.clone();
        }
        let d = s.d.unwrap_or(0.0);
        (0..s.w_normal.len())
            .map(|i| {
                let spiking = match &s.spike_axes {
                    Some(axes) => axes.contains(&i),
                    None => s.w_normal[i] > 0.0,
                };
                if spiking && d == s.w_normal[i] {
                    d + NOMINAL_MARGIN
                } else if spiking {
                    d
                } else {
                    s.w_normal[i]
                }
            })
            .collect()
    }

    pub fn grid_params(&self) -> GridParams {
        let g = self.grid.get_ref();
        GridParams {
            state_lo: g.lo.clone(),
            state_hi: g.hi.clone(),
            eta: g.eta.clone(),
            periodic: if g.periodic.is_empty() { vec![false; g.lo.len()] } else { g.periodic.clone() },
            input_values: g.inputs.clone(),
        }
    }

    /// Pads a partial box with the grid bounds.
    pub fn full_box(&self, b: &BoxConfig) -> CliResult<AxisBox> {
        let g = self.grid.get_ref();
        let mut lo = b.lo.clone();
        let mut hi = b.hi.clone();
        lo.extend_from_slice(&g.lo[lo.len()..]);
        hi.extend_from_slice(&g.hi[hi.len()..]);
        AxisBox::new(lo, hi).map_err(|e| self.error(self.spec.span(), e))
    }

    /// Builds system, grid and color map and checks the problem invariants.
    pub fn problem(&self) -> CliResult<Problem> {
        let s = self.system.get_ref();
        let sys_err = |e: rescot_core::Error| self.error(self.system.span(), e);
        let dynamics: Arc<dyn Dynamics> = match s.dynamics.as_str() {
            "unicycle" => Arc::new(Unicycle),
            _ => Arc::new(
                Linear::new(s.a.clone().unwrap_or_default(), s.b.clone().unwrap_or_default()).map_err(sys_err)?,
            ),
        };
        let sys = SampledSystem::new(
            dynamics,
            AxisBox::symmetric(&s.w_normal).map_err(sys_err)?,
            AxisBox::symmetric(&self.w_high()).map_err(sys_err)?,
            s.tau,
        );
        let quantizer = Quantizer::new(self.grid_params()).map_err(|e| self.error(self.grid.span(), e))?;
        let spec = self.spec.get_ref();
        let mut regions = Vec::with_capacity(spec.regions.len());
        for r in &spec.regions {
            regions.push(ColorRegion {
                boxes: r.boxes.iter().map(|b| self.full_box(b)).collect::<CliResult<_>>()?,
                color: r.color,
            });
        }
        let cmap = ColorMap {
            regions,
            default_color: spec.default_color,
            obstacles: spec.obstacles.iter().map(|b| self.full_box(b)).collect::<CliResult<_>>()?,
        };
        validate_problem(&sys, &cmap).map_err(|v| sys_err(rescot_core::Error::InvalidProblem(v)))?;
        rescot_core::abstraction::lift_colors(&quantizer, &cmap).map_err(|e| self.error(self.spec.span(), e))?;
        Ok(Problem { sys, quantizer, cmap })
    }

    /// The spike schedule of the `[run]` block.
    pub fn schedule(&self) -> CliResult<SpikeSchedule> {
        let r = self.run();
        let nominal = match r.nominal {
            NominalConfig::Zero => NominalDisturbance::Zero,
            NominalConfig::Random => NominalDisturbance::Random { seed: r.seed },
        };
        let mut spikes: Vec<(usize, Vec<f64>)> = r.spikes.iter().map(|s| (s.step, s.w.clone())).collect();
        spikes.sort_by_key(|s| s.0);
        SpikeSchedule::new(spikes, nominal).map_err(|e| self.error(self.run_spanned().span(), e))
    }

    /// Names of the labels whose box contains `x`.
    pub fn labels_at(&self, x: &[f64]) -> CliResult<Vec<String>> {
        let mut out = Vec::new();
        for l in &self.run().labels {
            let b = BoxConfig {
                lo: l.lo.clone(),
                hi: l.hi.clone(),
            };
            if self.full_box(&b)?.contains(x) {
                out.push(l.name.clone());
            }
        }
        Ok(out)
    }
}

fn locate(lines: &[usize], offset: usize) -> String {
    let line = lines.partition_point(|&start| start <= offset);
    let col = offset - lines[line.saturating_sub(1)] + 1;
    format!("line {line}, column {col}: ")
}
