//! Command line front end: functional evaluation, classical bounds,
//! certificate verification, noise sweeps and the full audit report.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bellnet_core::bounds::{bound_report, classical_bound_formula, deterministic_max, mixed_bound};
use bellnet_core::functionals::{functional_value, NetworkAssembly};
use bellnet_core::noise::noise_curve;
use bellnet_core::obsfile::{export_observables, import_observables};
use bellnet_core::report::{acceptance_report, format_table};
use bellnet_core::schemes::optimal_observables;
use bellnet_core::sos::sos_report_seeded;
use bellnet_core::{sig12, Error, ScenarioKind, ScenarioSpec};

#[derive(Parser)]
#[command(
    name = "bellnet",
    version,
    about = "Nonlinear Bell functionals in asymmetric quantum star networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Formula,
    Enumerate,
    Mixed,
    All,
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct ScenarioArgs {
    /// standard-bilocal | bilocal-I | bilocal-II | trilocal-I | trilocal-II
    #[arg(long, value_parser = parse_kind)]
    scenario: ScenarioKind,

    /// Settings parameter n (default: 2 for standard-bilocal, 3 otherwise)
    #[arg(long)]
    n: Option<usize>,
}

impl ScenarioArgs {
    fn spec(&self) -> Result<ScenarioSpec, Error> {
        let n = self.n.unwrap_or(match self.scenario {
            ScenarioKind::StandardBilocal => 2,
            _ => 3,
        });
        ScenarioSpec::new(self.scenario, n)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the nonlinear functional on the optimal assembly
    Evaluate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classical bounds: closed formula, enumeration, mixed-strategy optimum
    Bounds {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        /// Duality-gap tolerance of the mixture optimizer
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify the sum-of-squares optimality certificate
    Sos {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Audit a third-party observable set instead of the built-in one
        #[arg(long)]
        observables: Option<PathBuf>,
        /// Seed for randomized audits
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Werner-noise sweep and critical visibility
    Noise {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Bisection refinement tolerance
        #[arg(long, default_value_t = 1e-6)]
        refine: f64,
        /// Sample count of the uniform sweep
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the full reproduction audit and print the pass/fail table
    Report {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Export the built-in observable set of a scenario
    Observables {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Round every number in a JSON tree to 12 significant digits.
fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig12(x)) {
                        *n = rounded;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn emit(output: &OutputArgs, text: String) -> Result<(), Error> {
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Domain(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let mut tree =
        serde_json::to_value(value).map_err(|e| Error::Domain(format!("serialization: {e}")))?;
    round_json(&mut tree);
    serde_json::to_string_pretty(&tree)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Domain(format!("serialization: {e}")))
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Evaluate { scenario, output } => {
            let spec = scenario.spec()?;
            let result = functional_value(&NetworkAssembly::optimal_assembly(&spec)?)?;
            let text = match output.format {
                Format::Json => to_json(&result)?,
                Format::Csv => {
                    let mut s = String::from("term,value,magnitude\n");
                    for (j, (v, m)) in result.terms.iter().zip(&result.magnitudes).enumerate() {
                        s.push_str(&format!("{},{},{}\n", j + 1, sig12(*v), sig12(*m)));
                    }
                    s.push_str(&format!("total,{},\n", sig12(result.total)));
                    s
                }
                Format::Text => {
                    let mut s = format!("{} functional value\n", spec);
                    for (j, v) in result.terms.iter().enumerate() {
                        s.push_str(&format!("  term {}: {}\n", j + 1, sig12(*v)));
                    }
                    s.push_str(&format!("  total: {}\n", sig12(result.total)));
                    s
                }
            };
            emit(&output, text)
        }
        Command::Bounds {
            scenario,
            method,
            tol,
            output,
        } => {
            let spec = scenario.spec()?;
            let text = match method {
                Method::All => {
                    let report = bound_report(&spec, tol)?;
                    match output.format {
                        Format::Json => to_json(&report)?,
                        Format::Csv => {
                            let mut s = String::from("method,value\n");
                            s.push_str(&format!("formula,{}\n", sig12(report.formula)));
                            if let Some(d) = &report.deterministic {
                                s.push_str(&format!("deterministic,{}\n", sig12(d.value)));
                            }
                            if let Some(m) = &report.mixed {
                                s.push_str(&format!("mixed,{}\n", sig12(m.value)));
                            }
                            s
                        }
                        Format::Text => {
                            let mut s = format!("{} classical bounds\n", spec);
                            s.push_str(&format!("  formula:       {}\n", sig12(report.formula)));
                            if let Some(d) = &report.deterministic {
                                s.push_str(&format!("  deterministic: {}\n", sig12(d.value)));
                            }
                            if let Some(m) = &report.mixed {
                                s.push_str(&format!("  mixed:         {}\n", sig12(m.value)));
                            }
                            if report.gap_flag {
                                s.push_str("  note: mixture optimum falls short of the formula\n");
                            }
                            s
                        }
                    }
                }
                Method::Formula => {
                    let value = classical_bound_formula(&spec);
                    match output.format {
                        Format::Json => to_json(&serde_json::json!({
                            "scenario": spec.kind().name(),
                            "n": spec.n(),
                            "formula": sig12(value),
                        }))?,
                        _ => format!("{}\n", sig12(value)),
                    }
                }
                Method::Enumerate => {
                    let result = deterministic_max(&spec)?;
                    match output.format {
                        Format::Json => to_json(&result)?,
                        _ => format!("{}\n", sig12(result.value)),
                    }
                }
                Method::Mixed => {
                    let result = mixed_bound(&spec, tol)?;
                    match output.format {
                        Format::Json => to_json(&result)?,
                        _ => format!("{}\n", sig12(result.value)),
                    }
                }
            };
            emit(&output, text)
        }
        Command::Sos {
            scenario,
            observables,
            seed,
            output,
        } => {
            let spec = scenario.spec()?;
            let assembly = match &observables {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::ObservableFile(format!("{}: {e}", path.display())))?;
                    let edges = import_observables(&spec, &text)?;
                    NetworkAssembly::with_edge_observables(&spec, edges)?
                }
                None => NetworkAssembly::optimal_assembly_product_bob(&spec)?,
            };
            let report = sos_report_seeded(&assembly, 1000, seed)?;
            let text = match output.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let mut s = String::from("check,deviation,tolerance,pass\n");
                    for c in &report.constraints.checks {
                        s.push_str(&format!(
                            "{},{},{},{}\n",
                            c.name.replace(',', ";"),
                            sig12(c.deviation),
                            c.tolerance,
                            c.pass
                        ));
                    }
                    s
                }
                Format::Text => {
                    let mut s = format!("{} certificate\n", spec);
                    s.push_str(&format!(
                        "  predicted optimum: {}\n  functional value:  {}\n  gamma: {}\n  max residual: {}\n",
                        sig12(report.predicted_optimum),
                        sig12(report.functional_value),
                        sig12(report.gamma),
                        sig12(report.max_residual)
                    ));
                    s.push_str(&format!(
                        "  constraint table: {} ({} checks, max deviation {})\n",
                        if report.constraints.pass {
                            "pass"
                        } else {
                            "VIOLATIONS"
                        },
                        report.constraints.checks.len(),
                        sig12(report.constraints.max_deviation)
                    ));
                    for note in &report.notes {
                        s.push_str(&format!("  note: {note}\n"));
                    }
                    s
                }
            };
            emit(&output, text)
        }
        Command::Noise {
            scenario,
            refine,
            samples,
            output,
        } => {
            let spec = scenario.spec()?;
            if samples < 2 {
                return Err(Error::Domain("need at least 2 sweep samples".into()));
            }
            let curve = noise_curve(&spec, samples, refine)?;
            // a CSV file target always receives the CSV payload
            if let Some(path) = &output.out {
                if path.extension().map(|e| e == "csv").unwrap_or(false) {
                    return emit(&output, curve.to_csv());
                }
            }
            let text = match output.format {
                Format::Json => to_json(&curve)?,
                Format::Csv => curve.to_csv(),
                Format::Text => format!(
                    "{}\n  critical visibility (bisection): {}\n  critical visibility (formula):  {}\n",
                    spec,
                    curve
                        .v_critical_empirical
                        .map(|v| sig12(v).to_string())
                        .unwrap_or_else(|| "no violation".into()),
                    sig12(curve.v_critical_formula)
                ),
            };
            emit(&output, text)
        }
        Command::Report { seed, output } => {
            let report = acceptance_report(seed)?;
            let text = match output.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let mut s = String::from("criterion,description,passed\n");
                    for c in &report.criteria {
                        s.push_str(&format!(
                            "{},{},{}\n",
                            c.id,
                            c.description.replace(',', ";"),
                            c.passed
                        ));
                    }
                    s
                }
                Format::Text => format_table(&report),
            };
            emit(&output, text)?;
            if report.passed {
                Ok(())
            } else {
                Err(Error::Contract("audit criteria failed".into()))
            }
        }
        Command::Observables { scenario, out } => {
            let spec = scenario.spec()?;
            spec.matrix_level()?;
            let obs = optimal_observables(&spec)?;
            let text = export_observables(&spec, &obs.edges);
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
