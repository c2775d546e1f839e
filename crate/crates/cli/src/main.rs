use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rescot::commands::{self, AbstractionSummary, Divergence};
use rescot::config::SpikeConfig;
use rescot::scenarios::{builtin_text, BUILTINS};
use rescot::{CliError, CliResult, ScenarioConfig};
use rescot_core::resilience::{classify, Mode, ResilienceValue};
use rescot_core::StateId;

#[derive(Parser)]
#[command(name = "rescot", version, about = "Resilient abstraction-based controller synthesis")]
struct Cli {
    /// Worker threads for abstraction and game solving (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Where the configuration comes from.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a built-in scenario.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct Overrides {
    /// Spike magnitude: the spike box becomes [-d, d] on the spike axes.
    #[arg(long)]
    d: Option<f64>,
    /// Resilience computation mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Seed for sampling and random nominal disturbances.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the risk-aware abstraction and write its dump.
    Abstract {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Output file for the abstraction dump.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute resilience values and the stitched controller.
    Classify {
        /// Abstraction dump to classify.
        #[arg(long)]
        abstraction: PathBuf,
        #[arg(long, default_value_t = Mode::Reference)]
        mode: Mode,
        /// Also write the states on which the two modes disagree.
        #[arg(long)]
        compare_modes: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the refined controller in closed loop and write the trace.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Abstraction dump the controller was computed on.
        #[arg(long)]
        abstraction: PathBuf,
        /// Controller document.
        #[arg(long)]
        controller: PathBuf,
        /// Initial state, comma separated (default: x0 of the configuration).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Spike as STEP:w0,w1,...; repeatable. Replaces the configured spikes.
        #[arg(long = "spike", value_parser = parse_spike, allow_hyphen_values = true)]
        spikes: Vec<SpikeConfig>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Output trace CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check k-resilience of a controller from the given cells.
    Verify {
        #[arg(long)]
        abstraction: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        /// Cell ids to check; repeatable.
        #[arg(long = "probe", required = true)]
        probes: Vec<StateId>,
        /// Spike budget: a number, `omega` or `omega+1`.
        #[arg(long)]
        k: ResilienceValue,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole pipeline on a built-in scenario or a configuration file.
    Scenario {
        /// Built-in scenario name.
        name: Option<String>,
        /// Configuration file instead of a built-in scenario.
        #[arg(long, conflicts_with = "name")]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// List the built-in scenarios.
        #[arg(long)]
        list: bool,
        /// Print the configuration of the scenario and exit.
        #[arg(long)]
        print_config: bool,
        /// Output directory.
        #[arg(long, required_unless_present_any = ["list", "print_config"])]
        out: Option<PathBuf>,
    },
}

fn parse_spike(s: &str) -> Result<SpikeConfig, String> {
    let (step, w) = s.split_once(':').ok_or("expected STEP:w0,w1,...")?;
    let step = step.trim().parse().map_err(|e| format!("bad step {step:?}: {e}"))?;
    let w = w
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad component {v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    Ok(SpikeConfig { step, w })
}

fn load(source: &Source) -> CliResult<(ScenarioConfig, String)> {
    let text = match (&source.config, &source.scenario) {
        (Some(path), _) => commands::read_text(path)?,
        (None, Some(name)) => builtin_text(name)?.to_string(),
        (None, None) => unreachable!("clap requires a source"),
    };
    let cfg = ScenarioConfig::parse(&text).map_err(|e| match (&source.config, e) {
        (Some(path), CliError::Config(m)) => CliError::Config(format!("{}: {m}", path.display())),
        (_, e) => e,
    })?;
    Ok((cfg, text))
}

fn apply(cfg: &mut ScenarioConfig, o: &Overrides) -> CliResult<()> {
    if let Some(d) = o.d {
        cfg.set_spike_magnitude(d)?;
    }
    if let Some(m) = o.mode {
        cfg.run_mut().mode = m;
    }
    if let Some(s) = o.seed {
        cfg.run_mut().seed = s;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Abstract { source, overrides, out } => {
            let (mut cfg, _) = load(&source)?;
            apply(&mut cfg, &overrides)?;
            let gamma = commands::build_abstraction(&cfg.problem()?)?;
            commands::write_abstraction(&gamma, &out)?;
            println!("{}", AbstractionSummary::of(&gamma));
        }
        Command::Classify {
            abstraction,
            mode,
            compare_modes,
            out,
        } => {
            let gamma = commands::read_abstraction(&abstraction)?;
            let c = classify(&gamma, mode)?;
            commands::write_classification(&c, &out)?;
            print!("{}", commands::histogram_csv(&c.map));
            if compare_modes {
                let d = Divergence::compute(&gamma)?;
                commands::write_text(&out.join(commands::DIVERGENCE_FILE), &d.to_csv())?;
                println!("mode_divergence = {} states", d.rows.len());
            }
        }
        Command::Simulate {
            source,
            overrides,
            abstraction,
            controller,
            x0,
            spikes,
            horizon,
            out,
        } => {
            let (mut cfg, _) = load(&source)?;
            apply(&mut cfg, &overrides)?;
            if !spikes.is_empty() {
                cfg.run_mut().spikes = spikes;
            }
            let x0 = x0
                .or_else(|| cfg.run().x0.clone())
                .ok_or_else(|| CliError::Config("no initial state: pass --x0 or set run.x0".into()))?;
            if x0.len() != cfg.dim() {
                return Err(CliError::Config(format!("x0 must have {} components", cfg.dim())));
            }
            let problem = cfg.problem()?;
            let gamma = Arc::new(commands::read_abstraction(&abstraction)?);
            let rc = Arc::new(commands::read_controller(&controller)?);
            let trace = commands::simulate(
                &problem,
                gamma.clone(),
                rc,
                &x0,
                &cfg.schedule()?,
                horizon.unwrap_or(cfg.run().horizon),
            )?;
            commands::write_text(&out, &trace.to_csv())?;
            println!("steps = {}", trace.len());
            println!("spikes = {}", trace.num_spikes());
            println!("verdict = {}", trace.verdict(&gamma));
        }
        Command::Verify {
            abstraction,
            controller,
            probes,
            k,
            out,
        } => {
            let gamma = commands::read_abstraction(&abstraction)?;
            let rc = commands::read_controller(&controller)?;
            let rows = commands::verify(&gamma, &rc, &probes, k)?;
            let report = commands::verify_csv(&rows);
            match out {
                Some(path) => commands::write_text(&path, &report)?,
                None => print!("{report}"),
            }
        }
        Command::Scenario {
            name,
            config,
            overrides,
            list,
            print_config,
            out,
        } => {
            if list {
                for (n, _) in BUILTINS {
                    println!("{n}");
                }
                return Ok(());
            }
            let source = Source {
                config,
                scenario: name,
            };
            if source.config.is_none() && source.scenario.is_none() {
                return Err(CliError::Config("give a scenario name or --config".into()));
            }
            let (mut cfg, text) = load(&source)?;
            if print_config {
                print!("{text}");
                return Ok(());
            }
            apply(&mut cfg, &overrides)?;
            let run = commands::run_scenario(&cfg)?;
            let dir = out.expect("clap requires --out");
            commands::write_scenario(&run, &text, &dir)?;
            print!("{}", commands::scenario_summary(&run));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rescot: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

