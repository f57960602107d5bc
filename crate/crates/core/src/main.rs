//! Command-line interface: single flashes and named experiment scenarios.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

use thermoflash::components::ComponentSet;
use thermoflash::experiments::runners::Scenario;
use thermoflash::flash::{
    self, feed_enthalpy, DerivativeMode, FlashResult, FlashSpec, FlashTarget, SolverConfig,
};

const BAR: f64 = 1e5;

#[derive(Parser)]
#[command(name = "thermoflash", version, about = "SRK flash calculations with exact dual-number derivatives")]
struct Cli {
    /// Component data file overriding the bundled four-species set.
    #[arg(long, global = true)]
    components: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single flash and print the result record as JSON.
    Flash {
        #[command(subcommand)]
        kind: FlashKind,
    },
    /// Run experiment scenarios from a config file and write CSV/JSON reports.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CommonFlashArgs {
    /// Feed mole fractions, comma separated (one per component).
    #[arg(long, value_delimiter = ',')]
    feed: Vec<f64>,
    /// Pressure in bar.
    #[arg(long)]
    pressure_bar: f64,
    /// Renormalize the feed to sum to one instead of rejecting it.
    #[arg(long)]
    normalize: bool,
    /// Newton derivative mode: ad or fd.
    #[arg(long, default_value = "ad")]
    mode: String,
    /// Step for fd mode, in the iterated variable's unit.
    #[arg(long, default_value_t = 1e-3)]
    fd_step: f64,
    /// Inner Rachford-Rice tolerance on |F(V)|.
    #[arg(long, default_value_t = 1e-10)]
    rr_tol: f64,
    /// Outer successive-substitution tolerance on relative K change.
    #[arg(long, default_value_t = 1e-10)]
    k_tol: f64,
    /// PV Newton tolerance on |F(T)|.
    #[arg(long, default_value_t = 1e-10)]
    pv_tol: f64,
    /// PH relative tolerance on the enthalpy error.
    #[arg(long, default_value_t = 1e-6)]
    ph_rtol: f64,
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    #[arg(long, default_value_t = 200)]
    max_inner: usize,
    /// Lower end of the temperature bracket for PV/PH, K.
    #[arg(long, default_value_t = 150.0)]
    t_min: f64,
    /// Upper end of the temperature bracket for PV/PH, K.
    #[arg(long, default_value_t = 400.0)]
    t_max: f64,
}

impl CommonFlashArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rr_tolerance: self.rr_tol,
            k_tolerance: self.k_tol,
            pv_tolerance: self.pv_tol,
            ph_relative_tolerance: self.ph_rtol,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            t_min: self.t_min,
            t_max: self.t_max,
        }
    }

    fn mode(&self) -> Result<DerivativeMode, String> {
        match self.mode.as_str() {
            "ad" => Ok(DerivativeMode::Ad),
            "fd" => Ok(DerivativeMode::Fd { step: self.fd_step }),
            other => Err(format!("unknown derivative mode `{other}` (expected ad or fd)")),
        }
    }

    fn feed(&self, set: &ComponentSet) -> Result<Vec<f64>, String> {
        if self.feed.len() != set.len() {
            return Err(format!(
                "feed has {} entries but the component set has {} species",
                self.feed.len(),
                set.len()
            ));
        }
        if self.feed.iter().any(|&z| !(z >= 0.0) || !z.is_finite()) {
            return Err(format!("feed fractions must be non-negative: {:?}", self.feed));
        }
        let sum: f64 = self.feed.iter().sum();
        if self.normalize {
            if sum <= 0.0 {
                return Err("feed fractions sum to zero".into());
            }
            return Ok(self.feed.iter().map(|z| z / sum).collect());
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(format!(
                "feed fractions sum to {sum}; pass --normalize to rescale them"
            ));
        }
        Ok(self.feed.clone())
    }
}

#[derive(Subcommand)]
enum FlashKind {
    /// Fixed temperature and pressure.
    Pt {
        #[command(flatten)]
        common: CommonFlashArgs,
        /// Temperature in K.
        #[arg(long)]
        temperature_k: f64,
    },
    /// Fixed vapor fraction; solves for temperature.
    Pv {
        #[command(flatten)]
        common: CommonFlashArgs,
        /// Target vapor fraction in [0, 1].
        #[arg(long)]
        vapor_fraction: f64,
        /// Optional Newton starting temperature, K.
        #[arg(long)]
        t_guess: Option<f64>,
    },
    /// Fixed total enthalpy; solves for temperature.
    Ph {
        #[command(flatten)]
        common: CommonFlashArgs,
        /// Total molar enthalpy target, J/mol. Alternative to feed conditions.
        #[arg(long, conflicts_with_all = ["feed_temperature_k", "duty"])]
        h_total: Option<f64>,
        /// Feed temperature, K; the target becomes feed enthalpy plus duty.
        #[arg(long, requires = "duty")]
        feed_temperature_k: Option<f64>,
        /// Heat duty, J/mol of feed.
        #[arg(long)]
        duty: Option<f64>,
        /// Optional Newton starting temperature, K.
        #[arg(long)]
        t_guess: Option<f64>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Scenario config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Scenario id to run; omit to run every scenario in the file.
    #[arg(long)]
    scenario: Option<String>,
    /// Directory for the CSV/JSON reports.
    #[arg(long, default_value = "reports")]
    out_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct ConfigDocument {
    #[serde(default)]
    solver: Option<SolverConfig>,
    #[serde(default)]
    scenario: Vec<Scenario>,
}

fn load_components(path: &Option<PathBuf>) -> Result<ComponentSet, String> {
    match path {
        Some(p) => ComponentSet::from_file(&p.display().to_string()).map_err(|e| e.to_string()),
        None => Ok(ComponentSet::bundled()),
    }
}

fn print_result(result: &FlashResult) {
    println!(
        "{}",
        serde_json::to_string_pretty(result).expect("result serializes")
    );
}

/// Exit status contract: 0 converged, 2 flagged non-convergence, 1 error.
fn flash_exit(result: FlashResult) -> ExitCode {
    let converged = result.converged;
    print_result(&result);
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn fail(msg: String) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::FAILURE
}

fn run_flash(kind: FlashKind, components: &Option<PathBuf>) -> ExitCode {
    let set = match load_components(components) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    // assemble the structured spec first; all validation lives on it
    let build = || -> Result<(FlashSpec, &CommonFlashArgs, Option<f64>), String> {
        match &kind {
            FlashKind::Pt { common, temperature_k } => {
                let spec = FlashSpec {
                    feed: common.feed(&set)?,
                    pressure: common.pressure_bar * BAR,
                    target: FlashTarget::Pt {
                        temperature: *temperature_k,
                    },
                    mode: common.mode()?,
                };
                Ok((spec, common, None))
            }
            FlashKind::Pv { common, vapor_fraction, t_guess } => {
                let spec = FlashSpec {
                    feed: common.feed(&set)?,
                    pressure: common.pressure_bar * BAR,
                    target: FlashTarget::Pv {
                        vapor_fraction: *vapor_fraction,
                    },
                    mode: common.mode()?,
                };
                Ok((spec, common, *t_guess))
            }
            FlashKind::Ph {
                common,
                h_total,
                feed_temperature_k,
                duty,
                t_guess,
            } => {
                let feed = common.feed(&set)?;
                let config = common.config();
                let p = common.pressure_bar * BAR;
                let h_total = match (h_total, feed_temperature_k) {
                    (Some(h), _) => *h,
                    (None, Some(t_feed)) => {
                        let h_mix = feed_enthalpy(&set, &feed, *t_feed, p, &config)
                            .map_err(|e| e.to_string())?;
                        h_mix + duty.unwrap_or(0.0)
                    }
                    (None, None) => {
                        return Err(
                            "pass either --h-total or --feed-temperature-k with --duty".into()
                        )
                    }
                };
                let spec = FlashSpec {
                    feed,
                    pressure: p,
                    target: FlashTarget::Ph { h_total },
                    mode: common.mode()?,
                };
                Ok((spec, common, *t_guess))
            }
        }
    };
    match build() {
        Ok((spec, common, t_guess)) => {
            match flash::run(&set, &spec, t_guess, &common.config()) {
                Ok(result) => flash_exit(result),
                Err(e) => fail(e.to_string()),
            }
        }
        Err(e) => fail(e),
    }
}

fn run_experiment(args: ExperimentArgs, components: &Option<PathBuf>) -> ExitCode {
    let set = match load_components(components) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", args.config.display())),
    };
    let doc: ConfigDocument = match toml::from_str(&text) {
        Ok(d) => d,
        Err(e) => return fail(format!("config does not parse: {e}")),
    };
    let config = doc.solver.unwrap_or_default();

    let selected: Vec<&Scenario> = match &args.scenario {
        Some(id) => {
            let found: Vec<&Scenario> = doc.scenario.iter().filter(|s| s.id() == id).collect();
            if found.is_empty() {
                return fail(format!(
                    "no scenario `{id}` in {} (available: {})",
                    args.config.display(),
                    doc.scenario
                        .iter()
                        .map(|s| s.id().to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
            found
        }
        None => doc.scenario.iter().collect(),
    };
    if selected.is_empty() {
        return fail("config contains no scenarios".into());
    }

    for scenario in selected {
        match scenario.run(&set, &config) {
            Ok(report) => match report.write(&args.out_dir) {
                Ok((csv, json)) => {
                    println!("wrote {}", csv.display());
                    println!("wrote {}", json.display());
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report.summary).expect("summary serializes")
                    );
                }
                Err(e) => return fail(format!("cannot write report: {e}")),
            },
            Err(e) => return fail(format!("scenario `{}` failed: {e}", scenario.id())),
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Flash { kind } => run_flash(kind, &cli.components),
        Command::Experiment(args) => run_experiment(args, &cli.components),
    }
}
