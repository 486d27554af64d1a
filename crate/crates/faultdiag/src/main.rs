//! Command-line front end: diagnosis, sensor placement, module
//! decomposition and the scaling benchmark over `.sdl` system files.
//!
//! All commands print JSON to stdout (CSV for `bench`). Exit codes:
//! 0 success, 1 no solution (UNSAT), 2 invalid input.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use faultdiag::diagnose;
use faultdiag::engine::{self, GroundRule};
use faultdiag::generate::{self, BenchSpec};
use faultdiag::model::{ComponentId, Configuration, Edge, Observation, System};
use faultdiag::modular::{self, ModularError};
use faultdiag::place;
use faultdiag::sdl::{self, SystemDescription};

#[derive(Parser)]
#[command(name = "faultdiag", version, about = "Model-based fault diagnosis toolkit")]
struct Cli {
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain an observation with minimal-cardinality fault sets.
    Diagnose {
        file: PathBuf,
        /// Observed readings, e.g. `a=1,b=1,s=0,c=0`.
        #[arg(long)]
        obs: String,
        /// Switch components whose outgoing switch edges are closed.
        #[arg(long, value_delimiter = ',')]
        on: Vec<String>,
        /// Source values, e.g. `a=1,b=0`; observed sources are filled in
        /// from --obs, anything else defaults to the first live state.
        #[arg(long)]
        inputs: Option<String>,
        /// Largest fault-set size to search.
        #[arg(long, default_value_t = 3)]
        size_cap: usize,
    },
    /// Identify the faulty component from a schedule of observations.
    Active {
        file: PathBuf,
        /// JSON file: a list of steps `{"on": [..], "inputs": {..},
        /// "readings": {..}}`, one per executed configuration.
        #[arg(long)]
        steps: PathBuf,
    },
    /// Place sensors and synthesize a certified configuration schedule.
    Place {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        /// Passive placement: require separation under every candidate
        /// configuration instead of synthesizing a schedule.
        #[arg(long)]
        basic: bool,
        /// Source values, e.g. `a=1,b=0`.
        #[arg(long)]
        inputs: Option<String>,
    },
    /// Decompose a system into modules with an acyclic quotient.
    Modules { file: PathBuf },
    /// Solve placement module by module, then certify globally.
    ModularPlace {
        file: PathBuf,
        /// Per-module sensor budget.
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        /// Per-module configuration budget.
        #[arg(long, default_value_t = 8)]
        k_prime: usize,
        /// Source values, e.g. `a=1,b=0`.
        #[arg(long)]
        inputs: Option<String>,
    },
    /// Time the placement search on random power systems; emits CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 150, 200])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [10])]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [10])]
        k: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum CliError {
    /// Invalid input: missing file, parse error, unknown names. Exit 2.
    Input(String),
    /// The problem is well-formed but has no solution. Exit 1.
    Unsat(String),
}

impl From<engine::EngineError> for CliError {
    fn from(e: engine::EngineError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(value) => {
            if let Some(value) = value {
                let text = if cli.pretty {
                    serde_json::to_string_pretty(&value).expect("serializable")
                } else {
                    serde_json::to_string(&value).expect("serializable")
                };
                println!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Unsat(reason)) => {
            eprintln!("unsat: {reason}");
            ExitCode::from(1)
        }
        Err(CliError::Input(reason)) => {
            eprintln!("error: {reason}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Option<serde_json::Value>, CliError> {
    match &cli.command {
        Command::Diagnose { file, obs, on, inputs, size_cap } => {
            let (desc, rules) = load(file)?;
            let obs = Observation { readings: parse_assignments(obs)? };
            let config = switch_config(&desc.system, on)?;
            let inputs = source_inputs(&desc.system, inputs.as_deref(), Some(&obs))?;
            let result = diagnose::basic_diagnose(
                &desc.system,
                &rules,
                &desc.assumptions,
                &config,
                &inputs,
                &obs,
                *size_cap,
            )?;
            if result.is_unsat() {
                return Err(CliError::Unsat(format!(
                    "no fault set of size <= {size_cap} explains the observation"
                )));
            }
            let diagnoses: Vec<Vec<&str>> = result
                .diagnoses
                .iter()
                .map(|d| d.delta.iter().map(ComponentId::as_str).collect())
                .collect();
            Ok(Some(json!({ "cardinality": result.cardinality, "diagnoses": diagnoses })))
        }
        Command::Active { file, steps } => {
            let (desc, rules) = load(file)?;
            let steps = load_steps(&desc.system, steps)?;
            let configs: Vec<Configuration> = steps.iter().map(|s| s.0.clone()).collect();
            let inputs: Vec<BTreeMap<ComponentId, String>> =
                steps.iter().map(|s| s.1.clone()).collect();
            let observations: Vec<Observation> = steps.iter().map(|s| s.2.clone()).collect();
            let result = diagnose::active_diagnose(
                &desc.system,
                &rules,
                &desc.assumptions,
                &configs,
                &inputs,
                &observations,
            )
            .map_err(|e| CliError::Unsat(e.to_string()))?;
            let faulty: Vec<&str> = result.delta.iter().map(ComponentId::as_str).collect();
            Ok(Some(json!({ "faulty": faulty })))
        }
        Command::Place { file, m_max, k_max, basic, inputs } => {
            let (desc, rules) = load(file)?;
            let inputs = source_inputs(&desc.system, inputs.as_deref(), None)?;
            if *basic {
                let placement = place::place_sensors_basic(
                    &desc.system,
                    &rules,
                    &desc.assumptions,
                    *m_max,
                    &inputs,
                )?
                .ok_or_else(|| {
                    CliError::Unsat(format!("no {m_max}-sensor placement separates all faults"))
                })?;
                let sensors: Vec<&str> =
                    placement.sensors.iter().map(ComponentId::as_str).collect();
                return Ok(Some(json!({ "sensors": sensors, "certified": true })));
            }
            let result = place::place_sensors_active(
                &desc.system,
                &rules,
                &desc.assumptions,
                &desc.safety,
                *m_max,
                *k_max,
                &inputs,
                None,
                None,
            )?
            .ok_or_else(|| {
                CliError::Unsat(format!(
                    "no certified placement within {m_max} sensors and {k_max} configurations"
                ))
            })?;
            Ok(Some(placement_json(&desc.system, &result)))
        }
        Command::Modules { file } => {
            let (desc, _) = load(file)?;
            let partition = modular::find_modules(&desc.system);
            let modules: Vec<Vec<&str>> = partition
                .modules
                .iter()
                .map(|m| m.iter().map(ComponentId::as_str).collect())
                .collect();
            let quotient: Vec<[usize; 2]> =
                partition.quotient_edges().into_iter().map(|(a, b)| [a, b]).collect();
            Ok(Some(json!({ "modules": modules, "quotient_edges": quotient })))
        }
        Command::ModularPlace { file, m_max, k_prime, inputs } => {
            let (desc, _) = load(file)?;
            let inputs = source_inputs(&desc.system, inputs.as_deref(), None)?;
            let partition = modular::find_modules(&desc.system);
            let out = modular::modular_place_sensors(
                &desc.system,
                &desc.rules,
                &desc.assumptions,
                &desc.safety,
                &partition,
                *m_max,
                *k_prime,
                &inputs,
            )
            .map_err(|e| match e {
                ModularError::Engine(e) => CliError::Input(e.to_string()),
                other => CliError::Unsat(other.to_string()),
            })?;
            if !out.result.certified {
                return Err(CliError::Unsat(
                    "per-module schedules do not certify globally".into(),
                ));
            }
            Ok(Some(placement_json(&desc.system, &out.result)))
        }
        Command::Bench { n, m, k, instances, seed } => {
            println!("n,m,k,mean_runtime,stddev");
            for &n in n {
                for &m in m {
                    for &k in k {
                        let row = generate::run_bench(&BenchSpec {
                            n_components: n,
                            m_sensors: m,
                            k_configs: k,
                            instances: *instances,
                            seed: *seed,
                        })?;
                        println!(
                            "{},{},{},{:.6},{:.6}",
                            row.n_components,
                            row.m_sensors,
                            row.k_configs,
                            row.mean_runtime,
                            row.stddev
                        );
                    }
                }
            }
            Ok(None)
        }
    }
}

fn load(path: &Path) -> Result<(SystemDescription, Vec<GroundRule>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let desc = sdl::parse_system(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let rules = engine::ground(&desc.system, &desc.rules)?;
    Ok((desc, rules))
}

/// Parse `name=value,name=value` pairs.
fn parse_assignments(text: &str) -> Result<BTreeMap<ComponentId, String>, CliError> {
    let mut out = BTreeMap::new();
    for part in text.split(',').filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected name=value, got `{part}`")))?;
        out.insert(ComponentId::from(name.trim()), value.trim().to_string());
    }
    Ok(out)
}

/// Close the outgoing switch edges of the named components.
fn switch_config(system: &System, names: &[String]) -> Result<Configuration, CliError> {
    let mut on = std::collections::BTreeSet::new();
    for name in names {
        let edges: Vec<&Edge> =
            system.switches.iter().filter(|e| e.from.as_str() == name).collect();
        if edges.is_empty() {
            return Err(CliError::Input(format!("`{name}` has no outgoing switch edge")));
        }
        on.extend(edges.into_iter().cloned());
    }
    Ok(Configuration { on_switches: on, inputs: BTreeMap::new() })
}

/// A value for every source: explicit flag first, then the observed
/// reading, then the type's first non-fault state.
fn source_inputs(
    system: &System,
    flag: Option<&str>,
    obs: Option<&Observation>,
) -> Result<BTreeMap<ComponentId, String>, CliError> {
    let explicit = flag.map(parse_assignments).transpose()?.unwrap_or_default();
    let mut out = BTreeMap::new();
    for src in &system.sources {
        let value = explicit
            .get(src)
            .or_else(|| obs.and_then(|o| o.readings.get(src)))
            .cloned()
            .or_else(|| {
                let ty = system.component_type(src)?;
                ty.states.iter().find(|s| **s != ty.fault_value).cloned()
            })
            .ok_or_else(|| CliError::Input(format!("no input value for source {src}")))?;
        out.insert(src.clone(), value);
    }
    Ok(out)
}

type Step = (Configuration, BTreeMap<ComponentId, String>, Observation);

fn load_steps(system: &System, path: &Path) -> Result<Vec<Step>, CliError> {
    #[derive(serde::Deserialize)]
    struct RawStep {
        #[serde(default)]
        on: Vec<String>,
        #[serde(default)]
        inputs: BTreeMap<String, String>,
        readings: BTreeMap<String, String>,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let raw: Vec<RawStep> = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut steps = Vec::with_capacity(raw.len());
    for step in raw {
        let config = switch_config(system, &step.on)?;
        let readings: BTreeMap<ComponentId, String> = step
            .readings
            .into_iter()
            .map(|(k, v)| (ComponentId::from(k.as_str()), v))
            .collect();
        let obs = Observation { readings };
        let mut inputs = source_inputs(system, None, Some(&obs))?;
        for (k, v) in step.inputs {
            inputs.insert(ComponentId::from(k.as_str()), v);
        }
        steps.push((config, inputs, obs));
    }
    Ok(steps)
}

/// Render a switch edge as its switch component when that component has a
/// single outgoing switch edge, otherwise as `from->to`.
fn edge_label(system: &System, edge: &Edge) -> String {
    let siblings = system.switches.iter().filter(|e| e.from == edge.from).count();
    if siblings == 1 {
        edge.from.to_string()
    } else {
        format!("{}->{}", edge.from, edge.to)
    }
}

fn placement_json(system: &System, result: &place::PlacementResult) -> serde_json::Value {
    let sensors: Vec<&str> = result.sensors.sensors.iter().map(ComponentId::as_str).collect();
    let configurations: Vec<serde_json::Value> = result
        .configurations
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let on: Vec<String> =
                c.on_switches.iter().map(|e| edge_label(system, e)).collect();
            let inputs: BTreeMap<&str, &str> =
                c.inputs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            if inputs.is_empty() {
                json!({ "id": i + 1, "on": on })
            } else {
                json!({ "id": i + 1, "on": on, "inputs": inputs })
            }
        })
        .collect();
    json!({
        "sensors": sensors,
        "configurations": configurations,
        "certified": result.certified,
    })
}
