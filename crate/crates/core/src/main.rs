use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use car_lab::commutant::{verify_center_identity, ClockShiftModel};
use car_lab::crossed_product::{check_stabilizer_properties, stabilizer_action, CircleFn, GradedElement};
use car_lab::fock::{self, FockSpace};
use car_lab::fredholm::charge_index;
use car_lab::linalg::{c, I};
use car_lab::mode_space::{HalfSpace, LoopFunction, ModeWindow, TrigPoly, UnitaryExpr};
use car_lab::report::{convergence_sweep, run_suite};
use car_lab::selfdual::implementability_check;
use car_lab::weyl::{self, GeneratorElement, WeylWord};
use car_lab::{LabConfig, LabError, Result};

#[derive(Parser)]
#[command(name = "car-lab", version, about = "Finite-window checks for circle-action CAR systems")]
struct Cli {
    /// TOML or JSON config file.
    #[arg(long, global = true, env = "CAR_LAB_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print JSON-lines records.
    Suite {
        /// index, schwinger, weyl, grading, stabilizer or all
        name: String,
    },
    /// Charge index of the multiplication operator of a loop.
    Index {
        #[arg(long = "loop")]
        loop_file: PathBuf,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Off-diagonal Hilbert–Schmidt norms and index sum of a unitary.
    Implementable {
        #[arg(long)]
        unitary: PathBuf,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Commutator of two implemented generators against the Schwinger scalar.
    Schwinger {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Vacuum expectation of exp(i dΓ(cA)).
    Vev {
        #[arg(long)]
        a: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Gauge covariance exponent of the implementer of a loop.
    Covariance {
        #[arg(long = "loop")]
        loop_file: PathBuf,
        #[arg(long, default_value_t = 4)]
        window: usize,
    },
    /// Center and relative commutant in a clock-and-shift model.
    Commutant {
        #[arg(long, default_value = "clockshift")]
        model: String,
        #[arg(long = "M", default_value_t = 5)]
        modulus: usize,
        #[arg(long = "K", default_value_t = 1)]
        multiplicity: usize,
    },
    /// Apply the stabilizer action of a unimodular function to an element.
    Stabilizer {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        element: PathBuf,
        #[arg(long)]
        theta: f64,
        /// Gauge parameter angle for the commutation check.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        zeta_angle: f64,
    },
    /// Checklist for a generator space and V₁.
    Requirements {
        #[arg(long)]
        gens: PathBuf,
        #[arg(long)]
        v1: PathBuf,
    },
    /// Weyl algebra utilities.
    Weyl {
        #[command(subcommand)]
        op: WeylOp,
    },
    /// Values of a windowed check across windows, as CSV.
    Sweep {
        /// vev, pairing or hs_offdiag
        #[arg(long)]
        check: String,
        #[arg(long, value_delimiter = ',', default_values_t = [6, 8, 10])]
        windows: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum WeylOp {
    /// Reduce a word of Weyl elements to phase · W(ΣA).
    Reduce {
        #[arg(long)]
        word: PathBuf,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn window(n: Option<usize>, default: usize) -> Result<ModeWindow> {
    ModeWindow::new(n.unwrap_or(default))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => LabConfig::from_path(p)?,
        None => LabConfig::default(),
    };
    let tol = &cfg.tolerances;
    match cli.command {
        Command::Suite { name } => {
            let run = run_suite(&name, &cfg)?;
            print!("{}", run.to_json_lines());
            Ok(ExitCode::from(run.exit_code() as u8))
        }
        Command::Index { loop_file, window: n } => {
            let f: LoopFunction = read_json(&loop_file)?;
            let w = n.map(ModeWindow::new).transpose()?;
            print_json(&charge_index(&f, HalfSpace::nonnegative(), w)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Implementable { unitary, window: n } => {
            let u: UnitaryExpr = read_json(&unitary)?;
            let w = n.map(ModeWindow::new).transpose()?;
            let r = implementability_check(&u, HalfSpace::nonnegative(), w)?;
            print_json(&r)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Schwinger { a, b, window: n } => {
            let (a, b): (TrigPoly, TrigPoly) = (read_json(&a)?, read_json(&b)?);
            let w = window(n, cfg.fock_n_max)?;
            let r = fock::schwinger_commutator(&a.operator(w)?, &b.operator(w)?, cfg.sector_cap)?;
            let expected = I * r.routes.fourier;
            let pass = r.residual <= tol.fock && (r.scalar - expected).norm() <= tol.fock;
            print_json(&json!({
                "value": r.scalar,
                "expected": expected,
                "tolerance": tol.fock,
                "pass": pass,
                "window": r.window,
                "residual": r.residual,
                "routes": r.routes,
                "safe_states": r.safe_states,
            }))?;
            Ok(verdict(pass))
        }
        Command::Vev { a, amplitude, window: n } => {
            let g = GeneratorElement::new(read_json::<TrigPoly>(&a)?)?.scale(amplitude);
            let w = window(n, cfg.n_max)?;
            let value = fock::vacuum_expectation_det(&g.poly().operator(w)?)?;
            let norm = weyl::pairing_norm(&g)?;
            let expected = (-0.5 * norm).exp();
            let pass = (value - c(expected, 0.0)).norm() <= tol.window_stability;
            print_json(&json!({
                "value": value,
                "expected": expected,
                "tolerance": tol.window_stability,
                "pass": pass,
                "window": w.n_max(),
                "pairing": norm,
                "generating_functional": weyl::generating_functional(&g)?,
            }))?;
            Ok(verdict(pass))
        }
        Command::Covariance { loop_file, window: n } => {
            let f: LoopFunction = read_json(&loop_file)?;
            let w = ModeWindow::new(n)?;
            let space = FockSpace::full(w, cfg.sector_cap)?;
            let phi = fock::loop_implementer(&f, &space)?;
            let (q, residual) = fock::covariance_exponent(&phi, tol.fock)?;
            let expected = charge_index(&f, HalfSpace::nonnegative(), None)?.q;
            let pass = q == expected && residual <= tol.fock;
            print_json(&json!({
                "value": q,
                "expected": expected,
                "tolerance": tol.fock,
                "pass": pass,
                "window": n,
                "phase_residual": residual,
            }))?;
            Ok(verdict(pass))
        }
        Command::Commutant { model, modulus, multiplicity } => {
            if model != "clockshift" {
                return Err(LabError::InvalidArgument(format!("unknown model `{model}`")));
            }
            let m = ClockShiftModel::new(modulus, multiplicity)?;
            let r = verify_center_identity(&m.fixed_point_generators(), &m.full_generators(), m.dim(), Some(&m.clock()))?;
            let pass = r.center_equals_relative_commutant;
            print_json(&json!({ "report": r, "pass": pass }))?;
            Ok(verdict(pass))
        }
        Command::Stabilizer { f, element, theta, zeta_angle } => {
            let f: CircleFn = read_json(&f)?;
            let mut raw: serde_json::Value = read_json(&element)?;
            raw["theta"] = json!(theta);
            let x: GradedElement = serde_json::from_value(raw)?;
            let image = stabilizer_action(&f, &x)?;
            let report = check_stabilizer_properties(&f, &x, car_lab::linalg::cis(zeta_angle))?;
            let pass = report.all;
            print_json(&json!({ "element": image, "report": report, "pass": pass }))?;
            Ok(verdict(pass))
        }
        Command::Requirements { gens, v1 } => {
            let gens: Vec<TrigPoly> = read_json(&gens)?;
            let v1: LoopFunction = read_json(&v1)?;
            let r = weyl::requirements_checklist(&gens, &v1)?;
            print_json(&r)?;
            Ok(verdict(r.all))
        }
        Command::Weyl { op: WeylOp::Reduce { word } } => {
            let word: WeylWord = read_json(&word)?;
            let (sum, phase) = weyl::reduce(&word)?;
            let spread = weyl::association_spread(&word)?;
            print_json(&json!({ "generator": sum, "phase": phase, "association_spread": spread }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { check, windows } => {
            let table = convergence_sweep(&check, &windows)?;
            print!("{}", table.to_csv());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("car-lab: {e}");
            ExitCode::from(2)
        }
    }
}
