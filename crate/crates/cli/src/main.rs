//! `gjn`: evaluation and verification front end.
//!
//! Exit codes: 0 success, 1 a check or reassembly failed, 2 invalid arguments or input.

mod input;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use jacobi_core::jacobi::{self, CSPoint};
use jacobi_core::symplectic::{cartan_decompose, gauss_decompose};
use jacobi_core::verify::{self, Suite, VerifyConfig};
use log::{debug, info};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "gjn", version, about = "Jacobi group G^J_n: evaluation and verification")]
struct Cli {
    /// Indentation of the JSON output; 0 prints a single line.
    #[arg(long, global = true, default_value_t = 2)]
    json_indent: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite and print its report.
    Verify {
        #[arg(value_parser = Suite::NAMES)]
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Sample count per check; exponent form such as `1e6` is accepted.
        #[arg(long, value_parser = input::count)]
        samples: Option<usize>,
        #[arg(long)]
        cutoff: Option<usize>,
        /// Replaces every default tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evaluate a quantity at JSON points (`-` reads standard input).
    Eval {
        what: Quantity,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// Dimension of the default points (the origin).
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
    /// Factor a JSON Sp(n, R) element `{"a": .., "b": ..}` (`-` reads standard input).
    Decompose {
        which: Which,
        #[arg(long)]
        g: String,
        /// Largest accepted reassembly residual.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Kernel,
    Potential,
    Form,
    Density,
    Lambda,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Gauss,
    Cartan,
}

fn print_json<T: Serialize>(v: &T, indent: usize) -> Result<(), CliError> {
    let text = if indent == 0 {
        serde_json::to_string(v)
    } else {
        let pad = vec![b' '; indent];
        let mut buf = Vec::new();
        let fmt = serde_json::ser::PrettyFormatter::with_indent(&pad);
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
        v.serialize(&mut ser).map(|_| String::from_utf8(buf).expect("utf-8 JSON"))
    }
    .map_err(|e| CliError::Failed(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn point_or_origin(arg: Option<&str>, n: usize) -> Result<CSPoint<f64>, CliError> {
    match arg {
        Some(a) => input::point(&input::read_arg(a)?),
        None => Ok(CSPoint::origin(n)),
    }
}

fn eval(what: Quantity, x: Option<&str>, y: Option<&str>, n: usize, k: f64) -> Result<Value, CliError> {
    if x == Some("-") && y == Some("-") {
        return Err(CliError::usage("only one of --x, --y can read standard input"));
    }
    let px = point_or_origin(x, n)?;
    let n = px.dim();
    let lib = |e: jacobi_core::Error| CliError::usage(e);
    let (anchor, value) = match what {
        Quantity::Kernel => {
            let py = point_or_origin(y, n)?;
            if py.dim() != n {
                return Err(CliError::usage("points of different dimension"));
            }
            ("coherent-state-overlap", json!(jacobi::kernel(&px, &py, k).map_err(lib)?))
        }
        Quantity::Potential => ("kahler-potential", json!(jacobi::kahler_potential(&px, k).map_err(lib)?)),
        Quantity::Form => ("kahler-two-form", json!(jacobi::kahler_form(&px, k).map_err(lib)?)),
        Quantity::Density => ("invariant-volume", json!(jacobi::density(&px).map_err(lib)?)),
        Quantity::Lambda => ("measure-normalization", json!(jacobi::measure_constants(n, k).map_err(lib)?)),
    };
    let name = match what {
        Quantity::Kernel => "kernel",
        Quantity::Potential => "potential",
        Quantity::Form => "form",
        Quantity::Density => "density",
        Quantity::Lambda => "lambda",
    };
    Ok(json!({ "quantity": name, "anchor": anchor, "n": n, "k": k, "value": value }))
}

fn decompose(which: Which, g: &str, tol: f64) -> Result<Value, CliError> {
    let g = input::sp_element(&input::read_arg(g)?, 1e-8)?;
    let m = g.matrix();
    let fail = |e: jacobi_core::Error| CliError::Failed(e.to_string());
    let (name, factors, residual) = match which {
        Which::Gauss => {
            let f = gauss_decompose(&g).map_err(fail)?;
            let r = (&f.reassemble() - &m).norm_max();
            ("gauss", json!(f), r)
        }
        Which::Cartan => {
            let f = cartan_decompose(&g).map_err(fail)?;
            let r = (&f.synthesize().map_err(fail)?.matrix() - &m).norm_max();
            ("cartan", json!(f), r)
        }
    };
    Ok(json!({
        "which": name,
        "factors": factors,
        "residual": residual,
        "tolerance": tol,
        "pass": residual <= tol,
    }))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let indent = cli.json_indent;
    match cli.cmd {
        Cmd::Verify {
            suite,
            n,
            k,
            seed,
            samples,
            cutoff,
            tol,
        } => {
            let suite: Suite = suite.parse().map_err(CliError::usage)?;
            let cfg = VerifyConfig {
                n,
                k,
                seed,
                samples,
                cutoff,
                tol,
            };
            debug!("verify {suite} with {cfg:?}");
            let t = Instant::now();
            let report = verify::run(suite, &cfg);
            info!("{} checks in {:.2?}", report.checks.len(), t.elapsed());
            for c in report.failures() {
                info!("FAIL {} residual {:?} tolerance {:e}", c.check, c.residual, c.tolerance);
            }
            print_json(&report, indent)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::Failed(format!("{} check(s) failed", report.failures().count())))
            }
        }
        Cmd::Eval { what, x, y, n, k } => print_json(&eval(what, x.as_deref(), y.as_deref(), n, k)?, indent),
        Cmd::Decompose { which, g, tol } => {
            let v = decompose(which, &g, tol)?;
            print_json(&v, indent)?;
            if v["pass"] == json!(true) {
                Ok(())
            } else {
                Err(CliError::Failed(format!("reassembly residual {} exceeds {tol:e}", v["residual"])))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VERBOSITY", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Failed(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
