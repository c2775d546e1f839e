use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RefinedController;
use crate::abstraction::BimodalAbstraction;
use crate::system::{integrate_nominal, SampledSystem};
use crate::{ActionId, Error, Result, StateId};

/// Disturbance applied at steps without a scheduled spike.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NominalDisturbance {
    Zero,
    Constant(Vec<f64>),
    /// Uniform in the normal disturbance box.
    Random { seed: u64 },
}

/// Spikes injected at given steps on top of a nominal disturbance policy.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeSchedule {
    spikes: Vec<(usize, Vec<f64>)>,
    nominal: NominalDisturbance,
}

impl SpikeSchedule {
    /// Step indices must be strictly increasing.
    pub fn new(spikes: Vec<(usize, Vec<f64>)>, nominal: NominalDisturbance) -> Result<Self> {
        if spikes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument("spike steps must be strictly increasing".into()));
        }
        Ok(Self { spikes, nominal })
    }

    /// No spikes, zero nominal disturbance.
    pub fn none() -> Self {
        Self {
            spikes: Vec::new(),
            nominal: NominalDisturbance::Zero,
        }
    }

    pub fn spikes(&self) -> &[(usize, Vec<f64>)] {
        &self.spikes
    }

    pub fn nominal(&self) -> &NominalDisturbance {
        &self.nominal
    }

    /// Spikes must lie in `w_high` but outside `w_normal`; a constant
    /// nominal disturbance must lie in `w_normal`.
    pub fn validate(&self, sys: &SampledSystem) -> Result<()> {
        let n = sys.state_dim();
        for (step, w) in &self.spikes {
            if w.len() != n || !sys.w_high.contains(w) || sys.w_normal.contains(w) {
                return Err(Error::InvalidArgument(format!(
                    "spike at step {step} must lie in w_high and outside w_normal"
                )));
            }
        }
        if let NominalDisturbance::Constant(w) = &self.nominal {
            if w.len() != n || !sys.w_normal.contains(w) {
                return Err(Error::InvalidArgument("constant disturbance must lie in w_normal".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of a single trace row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowVerdict {
    Ok,
    Obstacle,
    OutOfDomain,
    /// The controller has no action for the current cell.
    Uncontrolled,
}

impl fmt::Display for RowVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowVerdict::Ok => "ok",
            RowVerdict::Obstacle => "obstacle",
            RowVerdict::OutOfDomain => "out_of_domain",
            RowVerdict::Uncontrolled => "uncontrolled",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub x: Vec<f64>,
    /// Absent on a terminal violation row.
    pub action: Option<ActionId>,
    pub u: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub cell: StateId,
    pub spike: bool,
    pub verdict: RowVerdict,
}

/// Verdict of a whole trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceVerdict {
    Satisfied,
    Violated,
}

impl fmt::Display for TraceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceVerdict::Satisfied => "satisfied",
            TraceVerdict::Violated => "violated",
        })
    }
}

/// A closed-loop run: row `i` holds `x_i`, the input and disturbance applied
/// at step `i`, and the cell of `x_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub state_dim: usize,
    pub input_dim: usize,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cells(&self) -> Vec<StateId> {
        self.rows.iter().map(|r| r.cell).collect()
    }

    pub fn num_spikes(&self) -> usize {
        num_spikes(self)
    }

    /// Violated if any row is; otherwise the largest color over the second
    /// half of the run decides.
    pub fn verdict(&self, gamma: &BimodalAbstraction) -> TraceVerdict {
        if self.rows.iter().any(|r| r.verdict != RowVerdict::Ok) {
            return TraceVerdict::Violated;
        }
        let tail = &self.rows[self.rows.len() / 2..];
        match tail.iter().map(|r| gamma.color(r.cell)).max() {
            Some(c) if c % 2 == 1 => TraceVerdict::Violated,
            _ => TraceVerdict::Satisfied,
        }
    }

    /// Columns: `step, x0.., u0.., w0.., cell_id, spike, verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step");
        for i in 0..self.state_dim {
            write!(out, ",x{i}").unwrap();
        }
        for i in 0..self.input_dim {
            write!(out, ",u{i}").unwrap();
        }
        for i in 0..self.state_dim {
            write!(out, ",w{i}").unwrap();
        }
        out.push_str(",cell_id,spike,verdict\n");
        let push_opt = |out: &mut String, v: &Option<Vec<f64>>, len: usize| {
            for i in 0..len {
                match v {
                    Some(v) => write!(out, ",{}", v[i]).unwrap(),
                    None => out.push(','),
                }
            }
        };
        for r in &self.rows {
            write!(out, "{}", r.step).unwrap();
            for v in &r.x {
                write!(out, ",{v}").unwrap();
            }
            push_opt(&mut out, &r.u, self.input_dim);
            push_opt(&mut out, &r.w, self.state_dim);
            writeln!(out, ",{},{},{}", r.cell, u8::from(r.spike), r.verdict).unwrap();
        }
        out
    }
}

/// Steps whose disturbance lay outside the normal box.
pub fn num_spikes(trace: &Trace) -> usize {
    trace.rows.iter().filter(|r| r.spike).count()
}

/// Steps of an abstract run `cells[0] -actions[0]-> cells[1] …` that used a
/// disturbance edge.
pub fn num_abstract_spikes(gamma: &BimodalAbstraction, cells: &[StateId], actions: &[ActionId]) -> usize {
    assert_eq!(cells.len(), actions.len() + 1, "one action per transition");
    (0..actions.len())
        .filter(|&i| gamma.dist(cells[i], actions[i]).binary_search(&cells[i + 1]).is_ok())
        .count()
}

/// Runs the closed loop for at most `horizon` steps.
///
/// An `x0` outside the controller's domain is an error; leaving the domain
/// later ends the trace with a violation row instead.
pub fn simulate_closed_loop(
    sys: &SampledSystem,
    ctrl: &mut RefinedController,
    x0: &[f64],
    schedule: &SpikeSchedule,
    horizon: usize,
) -> Result<Trace> {
    let n = sys.state_dim();
    if x0.len() != n {
        return Err(Error::InvalidArgument(format!("x0 has dimension {}, expected {n}", x0.len())));
    }
    let mut trace = Trace {
        state_dim: n,
        input_dim: sys.input_dim(),
        rows: Vec::with_capacity(horizon),
    };
    if horizon == 0 {
        return Ok(trace);
    }
    let mut rng = match schedule.nominal {
        NominalDisturbance::Random { seed } => ChaCha8Rng::seed_from_u64(seed),
        _ => ChaCha8Rng::seed_from_u64(0),
    };
    let mut next_spike = schedule.spikes.iter().peekable();
    let mut x = x0.to_vec();
    for step in 0..horizon {
        let q = ctrl.quantizer().quantize(&x);
        let stop = if q == ctrl.quantizer().out_of_domain() {
            Some(RowVerdict::OutOfDomain)
        } else if ctrl.abstraction().obstacle()[q] {
            Some(RowVerdict::Obstacle)
        } else {
            None
        };
        let decision = match stop {
            Some(_) if step == 0 => {
                return Err(Error::OutOfControllerDomain {
                    x: x.clone(),
                    reason: "initial state is not controllable",
                })
            }
            Some(_) => None,
            None => match ctrl.decide(&x) {
                Ok(d) => Some(d),
                Err(e) if step == 0 => return Err(e),
                Err(_) => None,
            },
        };
        let Some(d) = decision else {
            trace.rows.push(TraceRow {
                step,
                x,
                action: None,
                u: None,
                w: None,
                cell: q,
                spike: false,
                verdict: stop.unwrap_or(RowVerdict::Uncontrolled),
            });
            break;
        };
        while next_spike.peek().is_some_and(|(s, _)| *s < step) {
            next_spike.next();
        }
        let w = match next_spike.peek() {
            Some((s, w)) if *s == step => w.clone(),
            _ => match &schedule.nominal {
                NominalDisturbance::Zero => vec![0.0; n],
                NominalDisturbance::Constant(w) => w.clone(),
                NominalDisturbance::Random { .. } => sys.w_normal.sample(&mut rng),
            },
        };
        let x_next = integrate_nominal(sys, &x, &d.input, &w, sys.tau)?;
        trace.rows.push(TraceRow {
            step,
            x,
            action: Some(d.action),
            u: Some(d.input),
            spike: !sys.w_normal.contains(&w),
            w: Some(w),
            cell: q,
            verdict: RowVerdict::Ok,
        });
        x = x_next;
    }
    Ok(trace)
}
