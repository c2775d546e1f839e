//! The pipeline stages behind each subcommand, plus their file outputs.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rescot_core::abstraction::{check_frr_sample, find_risk_aware_abstraction, BimodalAbstraction, FrrReport, Quantizer};
use rescot_core::resilience::{classify, Classification, Mode, ResilienceMap, ResilienceValue, ResilientController};
use rescot_core::runtime::{simulate_closed_loop, verify_k_resilient, RefinedController, SpikeSchedule, Trace};
use rescot_core::StateId;

use crate::config::{Problem, ScenarioConfig};
use crate::error::{CliError, CliResult};

pub const ABSTRACTION_FILE: &str = "abstraction.json";
pub const RESILIENCE_FILE: &str = "resilience.csv";
pub const CONTROLLER_FILE: &str = "controller.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const DIVERGENCE_FILE: &str = "mode_divergence.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRACE_LABELS_FILE: &str = "trace_labels.csv";
pub const PROBES_FILE: &str = "probes.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Sizes of an abstraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AbstractionSummary {
    pub states: usize,
    pub actions: usize,
    pub normal_edges: usize,
    pub dist_edges: usize,
}

impl AbstractionSummary {
    pub fn of(gamma: &BimodalAbstraction) -> Self {
        Self {
            states: gamma.num_states(),
            actions: gamma.num_actions(),
            normal_edges: gamma.normal_edge_count(),
            dist_edges: gamma.dist_edge_count(),
        }
    }
}

impl fmt::Display for AbstractionSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states = {}", self.states)?;
        writeln!(f, "actions = {}", self.actions)?;
        writeln!(f, "normal_edges = {}", self.normal_edges)?;
        write!(f, "dist_edges = {}", self.dist_edges)
    }
}

pub fn build_abstraction(problem: &Problem) -> CliResult<BimodalAbstraction> {
    Ok(find_risk_aware_abstraction(&problem.sys, &problem.quantizer, &problem.cmap)?)
}

/// Writes `bytes` to `path`, creating missing parent directories.
fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_bytes(path, text.as_bytes())
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn write_abstraction(gamma: &BimodalAbstraction, path: &Path) -> CliResult<()> {
    let mut buf = Vec::new();
    gamma.write_json(&mut buf)?;
    write_bytes(path, &buf)
}

pub fn read_abstraction(path: &Path) -> CliResult<BimodalAbstraction> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    BimodalAbstraction::read_json(bytes.as_slice())
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_controller(rc: &ResilientController, path: &Path) -> CliResult<()> {
    let mut buf = Vec::new();
    rc.write_json(&mut buf)?;
    write_bytes(path, &buf)
}

pub fn read_controller(path: &Path) -> CliResult<ResilientController> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    ResilientController::read_json(bytes.as_slice()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `value,count` for every value that occurs, in increasing order.
pub fn histogram_csv(map: &ResilienceMap) -> String {
    let mut out = String::from("value,count\n");
    for (v, n) in map.histogram() {
        let _ = writeln!(out, "{v},{n}");
    }
    out
}

/// States on which the two modes disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub rows: Vec<(StateId, ResilienceValue, ResilienceValue)>,
}

impl Divergence {
    pub fn compute(gamma: &BimodalAbstraction) -> CliResult<Self> {
        let reference = classify(gamma, Mode::Reference)?.map;
        let literal = classify(gamma, Mode::PaperLiteral)?.map;
        Ok(Self {
            rows: reference.diff(&literal),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state_id,reference,paper_literal\n");
        for (q, a, b) in &self.rows {
            let _ = writeln!(out, "{q},{a},{b}");
        }
        out
    }
}

/// Writes the resilience map, controller document and histogram into `dir`.
pub fn write_classification(c: &Classification, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    write_text(&dir.join(RESILIENCE_FILE), &c.map.to_csv())?;
    write_controller(&c.controller, &dir.join(CONTROLLER_FILE))?;
    write_text(&dir.join(HISTOGRAM_FILE), &histogram_csv(&c.map))
}

/// The quantizer stored in an abstraction dump.
pub fn quantizer_of(gamma: &BimodalAbstraction) -> CliResult<Quantizer> {
    let grid = gamma
        .grid()
        .ok_or_else(|| CliError::Config("abstraction carries no grid; it cannot drive a simulation".into()))?;
    Ok(Quantizer::new(grid.clone())?)
}

pub fn simulate(
    problem: &Problem,
    gamma: Arc<BimodalAbstraction>,
    rc: Arc<ResilientController>,
    x0: &[f64],
    schedule: &SpikeSchedule,
    horizon: usize,
) -> CliResult<Trace> {
    if rc.num_states != gamma.num_states() || rc.num_actions != gamma.num_actions() {
        return Err(CliError::Config(format!(
            "controller is for {} states and {} actions, abstraction has {} and {}",
            rc.num_states,
            rc.num_actions,
            gamma.num_states(),
            gamma.num_actions()
        )));
    }
    schedule.validate(&problem.sys)?;
    let quantizer = Arc::new(quantizer_of(&gamma)?);
    let mut ctrl = RefinedController::new(quantizer, gamma, rc)?;
    Ok(simulate_closed_loop(&problem.sys, &mut ctrl, x0, schedule, horizon)?)
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyRow {
    pub cell: StateId,
    pub k: ResilienceValue,
    pub holds: bool,
}

pub fn verify(
    gamma: &BimodalAbstraction,
    rc: &ResilientController,
    cells: &[StateId],
    k: ResilienceValue,
) -> CliResult<Vec<VerifyRow>> {
    cells
        .iter()
        .map(|&cell| {
            Ok(VerifyRow {
                cell,
                k,
                holds: verify_k_resilient(gamma, rc, cell, k)?,
            })
        })
        .collect()
}

pub fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = String::from("cell_id,k,result\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.cell, r.k, if r.holds { "pass" } else { "fail" });
    }
    out
}

/// A probe point after classification.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub name: String,
    pub cell: StateId,
    pub value: ResilienceValue,
    /// Verification at the value itself and, for finite values, one above.
    pub holds_at_value: bool,
    pub holds_above: Option<bool>,
}

/// Everything produced by a full scenario run.
pub struct ScenarioRun {
    pub name: String,
    pub mode: Mode,
    pub w_high: Vec<f64>,
    pub problem: Problem,
    pub gamma: Arc<BimodalAbstraction>,
    pub classification: Classification,
    pub frr: Option<FrrReport>,
    pub probes: Vec<ProbeRow>,
    pub trace: Option<Trace>,
    /// Label names of every trace row.
    pub trace_labels: Vec<Vec<String>>,
}

impl ScenarioRun {
    /// Number of trace rows carrying `label`.
    pub fn steps_in(&self, label: &str) -> usize {
        self.trace_labels.iter().filter(|l| l.iter().any(|n| n == label)).count()
    }

    pub fn probe(&self, name: &str) -> Option<&ProbeRow> {
        self.probes.iter().find(|p| p.name == name)
    }
}

/// Abstraction, classification, sampled soundness check, probes and the
/// closed-loop run of a configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> CliResult<ScenarioRun> {
    let run = cfg.run();
    let problem = cfg.problem()?;
    log::info!("building abstraction for {}", cfg.name);
    let gamma = Arc::new(build_abstraction(&problem)?);
    log::info!("{}", AbstractionSummary::of(&gamma).to_string().replace('\n', ", "));
    let frr = if run.frr_samples > 0 {
        Some(check_frr_sample(&problem.sys, &gamma, &problem.quantizer, run.frr_samples, run.seed)?)
    } else {
        None
    };
    log::info!("classifying in {} mode", run.mode);
    let classification = classify(&gamma, run.mode)?;
    let rc = Arc::new(classification.controller.clone());

    let mut probes = Vec::new();
    for p in &run.probes {
        let cell = problem.quantizer.quantize(&p.x);
        if cell == problem.quantizer.out_of_domain() {
            return Err(CliError::Config(format!("probe {:?} lies outside the grid", p.name)));
        }
        let value = classification.map.get(cell);
        let holds_at_value = verify_k_resilient(&gamma, &rc, cell, value)?;
        let holds_above = match value.successor().filter(|_| value.is_finite()) {
            Some(next) => Some(verify_k_resilient(&gamma, &rc, cell, next)?),
            None => None,
        };
        probes.push(ProbeRow {
            name: p.name.clone(),
            cell,
            value,
            holds_at_value,
            holds_above,
        });
    }

    let (trace, trace_labels) = match &run.x0 {
        Some(x0) => {
            let trace = simulate(&problem, gamma.clone(), rc, x0, &cfg.schedule()?, run.horizon)?;
            let labels = trace.rows.iter().map(|r| cfg.labels_at(&r.x)).collect::<CliResult<_>>()?;
            (Some(trace), labels)
        }
        None => (None, Vec::new()),
    };
    Ok(ScenarioRun {
        name: cfg.name.clone(),
        mode: run.mode,
        w_high: cfg.w_high(),
        problem,
        gamma,
        classification,
        frr,
        probes,
        trace,
        trace_labels,
    })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Deterministic `key = value` report of a scenario run.
pub fn scenario_summary(run: &ScenarioRun) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", run.name);
    let _ = writeln!(s, "mode = {}", run.mode);
    let _ = writeln!(s, "w_normal = {}", fmt_vec(&run.problem.sys.w_normal.radius()));
    let _ = writeln!(s, "w_high = {}", fmt_vec(&run.w_high));
    let _ = writeln!(s, "{}", AbstractionSummary::of(&run.gamma));
    let map = &run.classification.map;
    let _ = writeln!(s, "distinct_finite_values = {}", map.distinct_finite_values());
    let hist: Vec<String> = map.histogram().iter().map(|(v, n)| format!("{v}:{n}")).collect();
    let _ = writeln!(s, "histogram = {}", hist.join(" "));
    if let Some(f) = &run.frr {
        let _ = writeln!(s, "frr_samples = {}", f.samples);
        let _ = writeln!(s, "frr_normal_violations = {}", f.normal_violations);
        let _ = writeln!(s, "frr_high_violations = {}", f.high_violations);
    }
    for p in &run.probes {
        let _ = writeln!(s, "probe.{}.cell = {}", p.name, p.cell);
        let _ = writeln!(s, "probe.{}.value = {}", p.name, p.value);
    }
    if let Some(t) = &run.trace {
        let _ = writeln!(s, "trace.steps = {}", t.len());
        let _ = writeln!(s, "trace.spikes = {}", t.num_spikes());
        let _ = writeln!(s, "trace.verdict = {}", t.verdict(&run.gamma));
        if let Some(first) = t.rows.first() {
            let _ = writeln!(s, "trace.start_value = {}", map.get(first.cell));
        }
        let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
        for l in run.trace_labels.iter().flatten() {
            *per_label.entry(l).or_default() += 1;
        }
        for (l, n) in per_label {
            let _ = writeln!(s, "trace.steps_in.{l} = {n}");
        }
    }
    s
}

pub fn probes_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("name,cell_id,value,verified_at_value,verified_above\n");
    for p in &run.probes {
        let above = match p.holds_above {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "",
        };
        let at = if p.holds_at_value { "pass" } else { "fail" };
        let _ = writeln!(out, "{},{},{},{at},{above}", p.name, p.cell, p.value);
    }
    out
}

pub fn trace_labels_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("step,cell_id,labels\n");
    if let Some(t) = &run.trace {
        for (row, labels) in t.rows.iter().zip(&run.trace_labels) {
            let _ = writeln!(out, "{},{},{}", row.step, row.cell, labels.join(";"));
        }
    }
    out
}

/// Writes every artifact of a scenario run into `dir`.
pub fn write_scenario(run: &ScenarioRun, config_text: &str, dir: &Path) -> CliResult<()> {
    write_classification(&run.classification, dir)?;
    write_abstraction(&run.gamma, &dir.join(ABSTRACTION_FILE))?;
    write_text(&dir.join("scenario.toml"), config_text)?;
    write_text(&dir.join(PROBES_FILE), &probes_csv(run))?;
    if let Some(t) = &run.trace {
        write_text(&dir.join(TRACE_FILE), &t.to_csv())?;
        write_text(&dir.join(TRACE_LABELS_FILE), &trace_labels_csv(run))?;
    }
    write_text(&dir.join(SUMMARY_FILE), &scenario_summary(run))
}
