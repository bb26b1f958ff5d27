//! seircheck: mechanical verification of the computational content of the
//! SEIR nonintegrability argument.
//!
//! Every subcommand writes a JSON report to stdout and a one-line human
//! summary to stderr. Exit codes: 0 = verdict delivered (including
//! non-elementary), 1 = a verification failed or a printed claim disagreed
//! (verdict `discrepancy`), 2 = usage or parse error, 3 = resource limit.

mod handlers;

use clap::{Parser, Subcommand};
use seircheck_core::error::Error;
use seircheck_core::report::Report;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "seircheck", version, about = "Exact verification of SEIR nonintegrability computations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Symbolic checks: first integrals, commuting fields, particular solutions
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
    /// Variational-equation operations
    Ve {
        #[command(subcommand)]
        cmd: VeCmd,
    },
    /// Elementarity decisions for the incomplete gamma family
    Risch {
        #[command(subcommand)]
        cmd: RischCmd,
    },
    /// Galois-matrix powers and non-commutativity certificates
    Galois {
        #[command(subcommand)]
        cmd: GaloisCmd,
    },
    /// Numerical integration and cross-checks
    Sim {
        #[command(subcommand)]
        cmd: SimCmd,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Residual of DF·f for a first-integral candidate
    Integral {
        /// Catalog name (si, sir, sei, seir, seir_ext) or a `name = expr` file path
        #[arg(long)]
        system: String,
        /// Candidate integral: an expression, or one of the built-in names F1, F2, F3
        #[arg(long = "F")]
        f: String,
        /// Parameter substitutions applied to the residual, e.g. `a=0` or `b=-a`
        #[arg(long)]
        subst: Option<String>,
    },
    /// Pairwise Lie brackets of the auxiliary fields and the system
    Commuting {
        #[arg(long)]
        system: String,
        /// Extra vector fields from `name = expr` files
        #[arg(long)]
        fields: Vec<String>,
    },
    /// Verify a built-in particular solution exactly
    Particular {
        #[arg(long)]
        case: String,
        /// `general` (invariant plane, C1 free) or `extended` (six-dimensional, C1 = 0)
        #[arg(long, default_value = "extended")]
        solution: String,
    },
}

#[derive(Subcommand)]
enum VeCmd {
    /// Print the variational-equation coefficient matrix
    Build {
        #[arg(long)]
        case: String,
    },
    /// Verify fundamental columns against the variational equation
    Verify {
        #[arg(long)]
        case: String,
        /// 1-based column index; verifies all six when omitted
        #[arg(long)]
        column: Option<usize>,
    },
    /// Verify the sigma-action identities on the fundamental set
    Sigma {
        #[arg(long)]
        case: String,
    },
}

#[derive(Subcommand)]
enum RischCmd {
    /// Decide elementarity of Gamma(alpha, x) for rational alpha
    Gamma {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
    },
    /// Solve q' + f q = g for rational q, g with poles only at x = 0
    Ode {
        /// Constant coefficient f
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        /// Right-hand side, an expression in x
        #[arg(long)]
        g: String,
    },
    /// Check the printed recurrence for Gamma(alpha+1, x) by differentiation
    Recurrence,
}

#[derive(Subcommand)]
enum GaloisCmd {
    /// Exact k-th power: closed form vs iterative, and the printed displays
    Power {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Produce and re-verify a non-commutativity certificate
    Noncommute {
        #[arg(long)]
        case: String,
    },
}

#[derive(Subcommand)]
enum SimCmd {
    /// Integrate a system and report drift, a trajectory, or the fundamental matrix
    Run {
        #[arg(long)]
        system: Option<String>,
        /// Comma-separated parameter assignments, e.g. `r=1,a=1,b=2,C2=1`
        #[arg(long, default_value = "")]
        params: String,
        /// Comma-separated initial state
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 10.0)]
        t1: f64,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        /// drift | trajectory | fundamental
        #[arg(long, default_value = "drift")]
        report: String,
        /// Extra conserved quantity to monitor (drift mode)
        #[arg(long = "F")]
        f: Option<String>,
        /// Output file for the trajectory CSV
        #[arg(long)]
        out: Option<String>,
        /// Case for the fundamental-matrix report (a_ne_b | a_eq_b)
        #[arg(long)]
        case: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = dispatch(cli.cmd);
    match result {
        Ok(mut report) => {
            report.runtime_ms = started.elapsed().as_millis();
            println!("{}", report.to_json());
            eprintln!(
                "{}: verdict {:?} ({} ms)",
                report.command,
                report.verdict,
                report.runtime_ms
            );
            ExitCode::from(report.verdict.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ResourceLimit(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<Report, Error> {
    match cmd {
        Cmd::Check { cmd } => match cmd {
            CheckCmd::Integral { system, f, subst } => {
                handlers::check_integral(&system, &f, subst.as_deref())
            }
            CheckCmd::Commuting { system, fields } => {
                handlers::check_commuting(&system, &fields)
            }
            CheckCmd::Particular { case, solution } => {
                handlers::check_particular(&case, &solution)
            }
        },
        Cmd::Ve { cmd } => match cmd {
            VeCmd::Build { case } => handlers::ve_build(&case),
            VeCmd::Verify { case, column } => handlers::ve_verify(&case, column),
            VeCmd::Sigma { case } => handlers::ve_sigma(&case),
        },
        Cmd::Risch { cmd } => match cmd {
            RischCmd::Gamma { alpha } => handlers::risch_gamma(&alpha),
            RischCmd::Ode { f, g } => handlers::risch_ode(&f, &g),
            RischCmd::Recurrence => handlers::risch_recurrence(),
        },
        Cmd::Galois { cmd } => match cmd {
            GaloisCmd::Power { case, k } => handlers::galois_power(&case, k),
            GaloisCmd::Noncommute { case } => handlers::galois_noncommute(&case),
        },
        Cmd::Sim { cmd } => match cmd {
            SimCmd::Run { system, params, init, t0, t1, rtol, atol, report, f, out, case } => {
                handlers::sim_run(handlers::SimArgs {
                    system,
                    params,
                    init,
                    t0,
                    t1,
                    rtol,
                    atol,
                    report,
                    extra_f: f,
                    out,
                    case,
                })
            }
        },
    }
}
