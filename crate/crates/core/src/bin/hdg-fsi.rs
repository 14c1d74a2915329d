use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hdg_fsi::assembly::Fault;
use hdg_fsi::cli::{self, exit, Study};
use hdg_fsi::config::{ProblemKind, RunConfig};

#[derive(Parser)]
#[command(name = "hdg-fsi", version, about = "HDG solver for linear fluid-structure interaction")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Error tables for a sweep in h, k or dt.
    Convergence {
        #[arg(long, value_enum)]
        study: StudyArg,
        #[arg(long)]
        config: PathBuf,
    },
    /// Single time-dependent run with probes and energy log.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the property suites.
    Verify {
        #[arg(long, value_enum, hide = true)]
        inject: Option<FaultArg>,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Print counts, labels and quality of a mesh file.
    Info { path: PathBuf },
    /// Write the structured mesh used by a built-in problem.
    Generate {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    H,
    P,
    Dt,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    StabilizationSign,
    FluidTrace,
}

fn fail(e: hdg_fsi::Error) -> i32 {
    eprintln!("error: {e}");
    cli::exit_code(&e)
}

fn init_threads() -> Result<(), i32> {
    let Ok(v) = std::env::var("HDG_FSI_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        eprintln!("error: HDG_FSI_THREADS must be a positive integer, got `{v}`");
        exit::CONFIG_ERROR
    })?;
    // a second initialization is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    Ok(())
}

fn dispatch(args: Args) -> i32 {
    if let Err(code) = init_threads() {
        return code;
    }
    match args.command {
        Command::Mesh {
            command: MeshCommand::Info { path },
        } => match cli::mesh_info(&path) {
            Ok(s) => {
                print!("{s}");
                exit::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Mesh {
            command: MeshCommand::Generate { problem, n, out },
        } => {
            let cfg = match RunConfig::parse(&format!("problem = {problem}\n")) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if cfg.problem == ProblemKind::Custom {
                eprintln!("error: `custom` has no built-in mesh");
                return exit::CONFIG_ERROR;
            }
            match cli::mesh_generate(cfg.problem, n, &out) {
                Ok(()) => exit::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Convergence { study, config } => {
            let study = match study {
                StudyArg::H => Study::H,
                StudyArg::P => Study::P,
                StudyArg::Dt => Study::Dt,
            };
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match cli::convergence(&cfg, study) {
                Ok(report) => {
                    print!("{}", hdg_fsi::reporting::to_markdown(&report.records, study_refinement(study)));
                    for v in &report.violations {
                        println!("threshold not met: {v}");
                    }
                    if report.violations.is_empty() {
                        exit::SUCCESS
                    } else {
                        exit::THRESHOLD_FAILURE
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Run { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match cli::run(&cfg) {
                Ok(report) => {
                    if let Some(r) = report.errors {
                        println!("t = {:.6}: e_sigma {:.4e}, e_u {:.4e}, e_p {:.4e}", report.state.t, r.e_sigma, r.e_u, r.e_p);
                    }
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    exit::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { inject } => {
            let fault = match inject {
                None => Fault::None,
                Some(FaultArg::StabilizationSign) => Fault::StabilizationSign,
                Some(FaultArg::FluidTrace) => Fault::FluidTrace,
            };
            let outcomes = cli::verify(fault);
            let mut ok = true;
            for o in &outcomes {
                println!("{} {}", if o.passed { "PASS" } else { "FAIL" }, o.name);
                for l in &o.lines {
                    println!("    {l}");
                }
                ok &= o.passed;
            }
            let passed = outcomes.iter().filter(|o| o.passed).count();
            println!("{passed}/{} suites passed", outcomes.len());
            if ok {
                exit::SUCCESS
            } else {
                exit::THRESHOLD_FAILURE
            }
        }
    }
}

fn study_refinement(study: Study) -> hdg_fsi::reporting::Refinement {
    match study {
        Study::Dt => hdg_fsi::reporting::Refinement::Time,
        _ => hdg_fsi::reporting::Refinement::Space,
    }
}

fn main() -> ExitCode {
    let code = dispatch(Args::parse());
    ExitCode::from(code as u8)
}
