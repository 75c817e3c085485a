use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use qcrit::config::{set_key, ConfigError, RunConfig};
use qcrit::golden::{compare_golden, Tolerances};
use qcrit::run::threads_from_env;

/// Datasets for ultrastrong-coupling criticality studies.
///
/// Every run command reads an optional JSON config, lays its flags over it
/// and writes `<dataset>.csv`, `<dataset>.gp` and `manifest.json` into the
/// output directory. Exit codes: 0 ok, 1 config or IO, 2 domain,
/// 3 convergence, 4 golden mismatch.
#[derive(Parser)]
#[command(name = "qcrit", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run config; flags given here override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Extra KEY=VALUE settings (dotted keys address nested objects).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Low-lying spectrum by exact diagonalisation over a coupling grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long = "Omega")]
        omega_q: Option<String>,
        #[arg(long)]
        n_qubits: Option<String>,
        #[arg(long)]
        g_grid: Option<String>,
        #[arg(long)]
        cutoff: Option<String>,
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        tolerance: Option<String>,
    },
    /// Two-photon dissipative phase diagram in the (g, Ω) plane.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long)]
        gamma_down: Option<String>,
        #[arg(long)]
        gamma_phi: Option<String>,
        #[arg(long)]
        n_qubits: Option<String>,
        #[arg(long)]
        g_grid: Option<String>,
        #[arg(long = "Omega-grid")]
        omega_q_grid: Option<String>,
    },
    /// QFI against protocol duration (critical ramp or dissipative steady state).
    QfiSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        v0: Option<String>,
        #[arg(long)]
        lambda_grid: Option<String>,
        #[arg(long = "Omega")]
        omega_q: Option<String>,
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        ratio_grid: Option<String>,
    },
    /// Excitation along a ramp towards the critical point.
    Adiabatic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        v0: Option<String>,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        lambda_end: Option<String>,
        #[arg(long)]
        cutoff: Option<String>,
        #[arg(long)]
        route: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Interferometric advantage of two-mode Gaussian states.
    GaussianAdvantage {
        #[command(flatten)]
        common: Common,
        /// Number of random states.
        #[arg(long)]
        count: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        /// JSON file holding a list of state documents.
        #[arg(long)]
        states_file: Option<PathBuf>,
    },
    /// Schrieffer-Wolff residual scaling and closed-form concordance.
    SwVerify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated model classes.
        #[arg(long)]
        models: Option<String>,
        /// Comma-separated ε values.
        #[arg(long)]
        epsilons: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        generators: Option<String>,
    },
    /// Dissipative steady states: Rabi covariance or two-photon mean field.
    DissipativeSteady {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long = "Omega")]
        omega_q: Option<String>,
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        ratio_grid: Option<String>,
        #[arg(long)]
        gamma_down: Option<String>,
        #[arg(long)]
        gamma_phi: Option<String>,
        #[arg(long)]
        n_qubits: Option<String>,
        #[arg(long)]
        g_grid: Option<String>,
    },
    /// Compares a CSV against a golden file column by column.
    Compare {
        data: PathBuf,
        golden: PathBuf,
        /// Default relative tolerance.
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        /// Absolute differences at or below this count as zero.
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Per-column override, NAME=TOL (repeatable).
        #[arg(long = "column-tol", value_name = "NAME=TOL")]
        column_tol: Vec<String>,
    },
}

/// Flag text to JSON: grids become a range string or a number list, list
/// keys are split on commas, anything numeric becomes a number.
fn flag_value(key: &str, raw: &str) -> Value {
    let number = |t: &str| -> Option<Value> {
        let t = t.trim();
        t.parse::<i64>().ok().map(Value::from).or_else(|| t.parse::<f64>().ok().map(Value::from))
    };
    if key.ends_with("_grid") || key == "epsilons" {
        if raw.contains(':') {
            return Value::String(raw.to_string());
        }
        let items: Vec<&str> = raw.split(',').filter(|s| !s.trim().is_empty()).collect();
        return Value::Array(items.iter().map(|t| number(t).unwrap_or_else(|| Value::String(t.to_string()))).collect());
    }
    if key == "models" {
        return Value::Array(raw.split(',').map(|s| Value::String(s.trim().to_string())).collect());
    }
    number(raw).unwrap_or_else(|| Value::String(raw.to_string()))
}

fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { path: String::new(), message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text)
        .map_err(|e| ConfigError { path: String::new(), message: format!("{}: invalid JSON: {e}", path.display()) })
}

fn build_config(
    name: &str,
    common: &Common,
    flags: &[(&str, &Option<String>)],
    extra: Option<(&str, Value)>,
) -> Result<RunConfig, ConfigError> {
    let mut doc = match &common.config {
        Some(p) => match read_json(p)? {
            Value::Object(m) => m,
            _ => return Err(ConfigError { path: String::new(), message: "config must be a JSON object".into() }),
        },
        None => Map::new(),
    };
    match doc.get("command") {
        Some(Value::String(c)) if c != name => {
            return Err(ConfigError {
                path: "command".into(),
                message: format!("config is for `{c}` but `{name}` was invoked"),
            })
        }
        _ => {}
    }
    doc.insert("command".into(), Value::String(name.into()));
    for (k, v) in flags {
        if let Some(v) = v {
            set_key(&mut doc, k, flag_value(k, v))?;
        }
    }
    if let Some((k, v)) = extra {
        set_key(&mut doc, k, v)?;
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError { path: kv.clone(), message: "--set expects KEY=VALUE".into() })?;
        set_key(&mut doc, k, flag_value(k, v))?;
    }
    if let Some(o) = &common.out {
        doc.insert("output".into(), Value::String(o.clone()));
    } else if !doc.contains_key("output") {
        doc.insert("output".into(), Value::String("qcrit-out".into()));
    }
    RunConfig::from_value(Value::Object(doc))
}

fn run_command(name: &str, common: &Common, flags: &[(&str, &Option<String>)], extra: Option<(&str, Value)>) -> u8 {
    let cfg = match build_config(name, common, flags, extra) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match qcrit::run_to_dir(&cfg, Path::new(&cfg.output), threads) {
        Ok(m) => {
            let bad = m.points.iter().filter(|p| !p.ok).count();
            eprintln!(
                "{}: {} points ({} flagged), {} files in {} ({:.2} s, {} threads)",
                name,
                m.points.len(),
                bad,
                m.outputs.len() + 1,
                cfg.output,
                m.wall_time_s,
                threads
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

fn compare(data: &Path, golden: &Path, rel: f64, abs: f64, column_tol: &[String]) -> u8 {
    let mut per_column = BTreeMap::new();
    for c in column_tol {
        match c.split_once('=').map(|(k, v)| (k, v.parse::<f64>())) {
            Some((k, Ok(v))) => {
                per_column.insert(k.to_string(), v);
            }
            _ => {
                eprintln!("error: --column-tol expects NAME=TOL, got `{c}`");
                return 1;
            }
        }
    }
    match compare_golden(data, golden, &Tolerances { rel, abs, per_column }) {
        Ok(r) => {
            print!("{r}");
            if !r.to_string().ends_with('\n') {
                println!();
            }
            if r.passed() {
                0
            } else {
                4
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Cmd::Spectrum { common, model, omega, omega_q, n_qubits, g_grid, cutoff, levels, tolerance } => run_command(
            "spectrum",
            common,
            &[
                ("model", model),
                ("omega", omega),
                ("Omega", omega_q),
                ("n_qubits", n_qubits),
                ("g_grid", g_grid),
                ("cutoff", cutoff),
                ("levels", levels),
                ("tolerance", tolerance),
            ],
            None,
        ),
        Cmd::PhaseDiagram { common, omega, kappa, gamma_down, gamma_phi, n_qubits, g_grid, omega_q_grid } => {
            run_command(
                "phase-diagram",
                common,
                &[
                    ("omega", omega),
                    ("kappa", kappa),
                    ("gamma_down", gamma_down),
                    ("gamma_phi", gamma_phi),
                    ("n_qubits", n_qubits),
                    ("g_grid", g_grid),
                    ("Omega_grid", omega_q_grid),
                ],
                None,
            )
        }
        Cmd::QfiSweep { common, protocol, omega, eta, v0, lambda_grid, omega_q, kappa, gamma, ratio_grid } => {
            run_command(
                "qfi-sweep",
                common,
                &[
                    ("protocol", protocol),
                    ("omega", omega),
                    ("eta", eta),
                    ("v0", v0),
                    ("lambda_grid", lambda_grid),
                    ("Omega", omega_q),
                    ("kappa", kappa),
                    ("gamma", gamma),
                    ("ratio_grid", ratio_grid),
                ],
                None,
            )
        }
        Cmd::Adiabatic { common, v0, eta, omega, lambda_end, cutoff, route, samples } => run_command(
            "adiabatic",
            common,
            &[
                ("v0", v0),
                ("eta", eta),
                ("omega", omega),
                ("lambda_end", lambda_end),
                ("cutoff", cutoff),
                ("route", route),
                ("samples", samples),
            ],
            None,
        ),
        Cmd::GaussianAdvantage { common, count, seed, states_file } => {
            let states = match states_file.as_deref().map(read_json).transpose() {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            run_command(
                "gaussian-advantage",
                common,
                &[("random.count", count), ("random.seed", seed)],
                states.map(|v| ("states", v)),
            )
        }
        Cmd::SwVerify { common, models, epsilons, lambda, order, generators } => run_command(
            "sw-verify",
            common,
            &[
                ("models", models),
                ("epsilons", epsilons),
                ("lambda", lambda),
                ("order", order),
                ("generators", generators),
            ],
            None,
        ),
        Cmd::DissipativeSteady {
            common,
            model,
            omega,
            omega_q,
            kappa,
            gamma,
            ratio_grid,
            gamma_down,
            gamma_phi,
            n_qubits,
            g_grid,
        } => run_command(
            "dissipative-steady",
            common,
            &[
                ("model", model),
                ("omega", omega),
                ("Omega", omega_q),
                ("kappa", kappa),
                ("gamma", gamma),
                ("ratio_grid", ratio_grid),
                ("gamma_down", gamma_down),
                ("gamma_phi", gamma_phi),
                ("n_qubits", n_qubits),
                ("g_grid", g_grid),
            ],
            None,
        ),
        Cmd::Compare { data, golden, rel_tol, abs_tol, column_tol } => {
            compare(data, golden, *rel_tol, *abs_tol, column_tol)
        }
    };
    ExitCode::from(code)
}
