use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qlr::bench::{
    default_sweep_tim, resolve_threads, rows_to_csv, run_gadget_sweep, run_suite, sweep_to_csv,
    Suite,
};
use qlr::error::QlrError;
use qlr::evc::solve_evc;
use qlr::exact::{ground_energy_full, ground_energy_nullspace, ground_energy_tvc};
use qlr::generate::{generate_instance, GenConfig, GENERATOR_NAME};
use qlr::instance::{Kind, Psi};
use qlr::json::{
    convergence_to_json, evc_report_to_json, instance_to_json, parse_input, spectrum_to_json,
    InputFile, Report,
};
use qlr::localratio::{certify, local_ratios, lr_tpcvc, lr_tvc};
use qlr::state::{evaluate, feasibility};

#[derive(Parser)]
#[command(name = "qlr", version, about = "Solvers for vertex-cover-structured local Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded random instance file
    Gen {
        /// Instance kind: tvc, pcvc, or evc
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        /// Extra-edge probability beyond the spanning tree, in (0, 1]
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// PRNG stream index (instance id within a seed)
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Constraint state for evc: "singlet" or "diagonal:<alpha>"
        #[arg(long)]
        psi: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file and emit a report
    Solve {
        #[arg(long)]
        input: PathBuf,
        /// Algorithm: lr, exact, or evc
        #[arg(long, default_value = "lr")]
        algo: String,
        /// Also run the matching exact oracle and record the ratio
        #[arg(long)]
        exact: bool,
        /// Re-validate the decomposition certificate
        #[arg(long)]
        certify: bool,
        /// Feasibility tolerance
        #[arg(long, default_value_t = qlr::state::DEFAULT_FEASIBILITY_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite and emit CSV
    Bench {
        /// Suite: tvc-small, pcvc-small, evc-small, or gadget-sweep
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (QLR_THREADS overrides)
        #[arg(long)]
        threads: Option<usize>,
        /// Comma-separated pinning strengths for gadget-sweep
        #[arg(long, default_value = "8,16,32,64")]
        delta_list: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a spin-model gadget over pinning strengths
    Gadget {
        /// TIM JSON file; defaults to the built-in two-spin model
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "8,16,32,64")]
        delta_list: String,
        /// Number of low eigenvalues compared
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Output path; a .csv suffix selects CSV instead of JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print version and provenance information
    Version,
}

fn parse_psi(text: &str) -> Result<Psi, QlrError> {
    if text == "singlet" {
        return Ok(Psi::Singlet);
    }
    if let Some(alpha) = text.strip_prefix("diagonal:") {
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| QlrError::InvalidParameter(format!("bad psi alpha in {:?}", text)))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(QlrError::InvalidParameter("alpha must be in [0, 1]".into()));
        }
        return Ok(Psi::Diagonal {
            alpha,
            beta: (1.0 - alpha * alpha).sqrt(),
        });
    }
    Err(QlrError::InvalidParameter(format!(
        "psi must be \"singlet\" or \"diagonal:<alpha>\", got {:?}",
        text
    )))
}

fn parse_kind(text: &str) -> Result<Kind, QlrError> {
    match text {
        "tvc" => Ok(Kind::Tvc),
        "pcvc" => Ok(Kind::Pcvc),
        "evc" => Ok(Kind::Evc),
        other => Err(QlrError::InvalidParameter(format!(
            "unknown kind {:?} (expected tvc, pcvc, evc)",
            other
        ))),
    }
}

fn parse_delta_list(text: &str) -> Result<Vec<f64>, QlrError> {
    let deltas: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let deltas =
        deltas.map_err(|_| QlrError::InvalidParameter(format!("bad delta list {:?}", text)))?;
    if deltas.is_empty() || deltas.iter().any(|&d| d <= 0.0) {
        return Err(QlrError::InvalidParameter(
            "delta list must be positive and non-empty".into(),
        ));
    }
    Ok(deltas)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), QlrError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{}", text.trim_end()),
    }
    Ok(())
}

fn read_to_string(path: &PathBuf) -> Result<String, QlrError> {
    Ok(std::fs::read_to_string(path)?)
}

/// Ok(true) = success, Ok(false) = bound/validation violation.
fn run(cli: Cli) -> Result<bool, QlrError> {
    match cli.cmd {
        Cmd::Gen {
            kind,
            n,
            density,
            seed,
            stream,
            psi,
            out,
        } => {
            let mut cfg = GenConfig::new(parse_kind(&kind)?, n, density);
            cfg.psi = psi.as_deref().map(parse_psi).transpose()?;
            let inst = generate_instance(&cfg, seed, stream)?;
            emit(&out, &(instance_to_json(&inst) + "\n"))?;
            Ok(true)
        }
        Cmd::Solve {
            input,
            algo,
            exact,
            certify: want_certify,
            tol,
            out,
        } => {
            let file = parse_input(&read_to_string(&input)?)?;
            let inst = match file {
                InputFile::Instance(inst) => inst,
                InputFile::Tim(_) => {
                    return Err(QlrError::KindMismatch(
                        "spin-model files are for the gadget command".into(),
                    ))
                }
            };
            let oracle = |on: bool| -> Result<Option<f64>, QlrError> {
                if !on {
                    return Ok(None);
                }
                let rep = match inst.kind {
                    Kind::Tvc => ground_energy_tvc(&inst),
                    Kind::Pcvc => ground_energy_full(&inst),
                    Kind::Evc => ground_energy_nullspace(&inst),
                };
                match rep {
                    Ok(r) => Ok(r.ground_energy()),
                    Err(QlrError::CapExceeded(msg)) => {
                        eprintln!("oracle skipped: {}", msg);
                        Ok(None)
                    }
                    Err(e) => Err(e),
                }
            };
            match algo.as_str() {
                "lr" => {
                    let (state, cert) = match inst.kind {
                        Kind::Tvc => lr_tvc(&inst)?,
                        Kind::Pcvc => lr_tpcvc(&inst)?,
                        Kind::Evc => {
                            return Err(QlrError::KindMismatch(
                                "kind/algo mismatch: lr needs a tvc or pcvc instance".into(),
                            ))
                        }
                    };
                    let energy = evaluate(&inst, &state)?;
                    let exact_energy = oracle(exact)?;
                    let ratio = exact_energy
                        .filter(|e| e.abs() > 1e-12)
                        .map(|e| energy / e);
                    let cert_report = if want_certify {
                        Some(certify(&inst, &state, &cert)?)
                    } else {
                        None
                    };
                    let feasible =
                        inst.kind == Kind::Pcvc || feasibility(&inst, &state, tol)?;
                    let report = Report {
                        energy,
                        state: Some(&state),
                        certificate: Some(&cert),
                        local_ratios: Some(local_ratios(&inst, &state, &cert)?),
                        cert_report: cert_report.as_ref(),
                        exact: exact_energy,
                        ratio,
                    };
                    emit(&out, &(qlr::json::report_to_json(&report) + "\n"))?;
                    Ok(feasible && cert_report.map_or(true, |c| c.pass))
                }
                "exact" => {
                    let rep = match inst.kind {
                        Kind::Tvc => ground_energy_tvc(&inst)?,
                        Kind::Pcvc => ground_energy_full(&inst)?,
                        Kind::Evc => ground_energy_nullspace(&inst)?,
                    };
                    emit(&out, &(spectrum_to_json(&rep) + "\n"))?;
                    Ok(true)
                }
                "evc" => {
                    if inst.kind != Kind::Evc {
                        return Err(QlrError::KindMismatch(
                            "kind/algo mismatch: evc needs an evc instance".into(),
                        ));
                    }
                    let rep = solve_evc(&inst)?;
                    let exact_energy = oracle(exact)?;
                    emit(&out, &(evc_report_to_json(&rep, exact_energy) + "\n"))?;
                    Ok(exact_energy.map_or(true, |e| (rep.energy - e).abs() <= 1e-8))
                }
                other => Err(QlrError::InvalidParameter(format!(
                    "unknown algo {:?} (expected lr, exact, evc)",
                    other
                ))),
            }
        }
        Cmd::Bench {
            suite,
            trials,
            seed,
            threads,
            delta_list,
            out,
        } => {
            let suite = Suite::parse(&suite)?;
            if suite == Suite::GadgetSweep {
                let report =
                    run_gadget_sweep(&default_sweep_tim(), &parse_delta_list(&delta_list)?, 4)?;
                emit(&out, &sweep_to_csv(&report))?;
                eprintln!(
                    "suite=gadget-sweep rows={} monotone={}",
                    report.rows.len(),
                    report.monotone
                );
                return Ok(report.monotone);
            }
            let outcome = run_suite(suite, trials, seed, resolve_threads(threads))?;
            emit(&out, &rows_to_csv(&outcome.rows))?;
            eprintln!(
                "suite={} trials={} max_ratio={} mean_ratio={} failures={}",
                suite.name(),
                trials,
                outcome.max_ratio.map_or("-".into(), |r| format!("{:.6}", r)),
                outcome.mean_ratio.map_or("-".into(), |r| format!("{:.6}", r)),
                outcome.failures
            );
            for row in outcome.rows.iter().filter(|r| r.violation.is_some()) {
                eprintln!("trial {}: {}", row.id, row.violation.as_ref().unwrap());
            }
            Ok(outcome.passed())
        }
        Cmd::Gadget {
            input,
            delta_list,
            k,
            out,
        } => {
            let tim = match input {
                Some(path) => match parse_input(&read_to_string(&path)?)? {
                    InputFile::Tim(tim) => tim,
                    InputFile::Instance(_) => {
                        return Err(QlrError::KindMismatch(
                            "gadget expects a spin-model (kind \"tim\") file".into(),
                        ))
                    }
                },
                None => default_sweep_tim(),
            };
            let report = run_gadget_sweep(&tim, &parse_delta_list(&delta_list)?, k)?;
            let as_csv = out
                .as_ref()
                .and_then(|p| p.extension())
                .is_some_and(|e| e == "csv");
            if as_csv {
                emit(&out, &sweep_to_csv(&report))?;
            } else {
                emit(&out, &(convergence_to_json(&report) + "\n"))?;
            }
            Ok(report.monotone)
        }
        Cmd::Version => {
            println!(
                "qlr {} (rng: {})",
                env!("CARGO_PKG_VERSION"),
                GENERATOR_NAME
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}
