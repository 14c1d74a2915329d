//! Drivers behind the `hdg-fsi` command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::assembly::Fault;
use crate::benchmarks::{Example1, Example2, ExactSolution, ParameterSet, PolynomialCase, ZeroSolution};
use crate::config::{CustomBc, Init, ProblemKind, Probe, RunConfig};
use crate::dofs::BoundaryCondition;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::mesh::{Mesh, Point};
use crate::reporting::{
    compute_errors, degree_csv, groups, mean_rates, rates, to_csv, to_markdown, write_file, ErrorRecord, Rate,
    Refinement, Sampler,
};
use crate::time::{energy_csv, run_with_energy, Discretization, Problem, State, StepOptions, Stepper};
use crate::verify::{run_all, SuiteOutcome};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const RUN_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const THRESHOLD_FAILURE: i32 = 3;
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::MeshParse { .. } | Error::Labels(_) | Error::BoundaryConditions(_) => exit::CONFIG_ERROR,
        _ => exit::RUN_FAILURE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    H,
    P,
    Dt,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::H => "h",
            Study::P => "p",
            Study::Dt => "dt",
        }
    }
}

/// A problem together with the solution it is compared against.
pub struct Setup {
    pub problem: Problem,
    pub exact: Option<Box<dyn ExactSolution>>,
    pub h: f64,
}

fn with_overrides(cfg: &RunConfig, mut m: crate::materials::MaterialSet) -> crate::materials::MaterialSet {
    cfg.materials.apply(&mut m);
    m
}

pub fn setup(cfg: &RunConfig, k: usize, n: usize) -> Result<Setup> {
    let h = 1.0 / n as f64;
    Ok(match cfg.problem {
        ProblemKind::Example1L1 | ProblemKind::Example1L2 => {
            let set = if cfg.problem == ProblemKind::Example1L1 { ParameterSet::L1 } else { ParameterSet::L2 };
            let ex = Example1 {
                materials: with_overrides(cfg, set.materials()),
            };
            Setup {
                problem: ex.problem(n)?,
                exact: Some(Box::new(ex)),
                h,
            }
        }
        ProblemKind::Exactness => {
            let base = PolynomialCase::new(k);
            let case = PolynomialCase {
                materials: with_overrides(cfg, base.materials),
                ..base
            };
            Setup {
                problem: case.problem(n)?,
                exact: Some(Box::new(case)),
                h,
            }
        }
        ProblemKind::Example2 => {
            let lambda_f = cfg.materials.lambda_f.unwrap_or(1e6);
            let mut ex = Example2::new(lambda_f);
            ex.materials = with_overrides(cfg, ex.materials);
            if let Some(p) = cfg.p_max {
                ex.pulse.p_max = p;
            }
            if let Some(t) = cfg.t_max {
                ex.pulse.t_max = t;
            }
            Setup {
                problem: ex.problem(cfg.refine)?,
                exact: None,
                h: 0.1 / cfg.refine.max(1) as f64,
            }
        }
        ProblemKind::Custom => {
            let path = cfg.mesh_file.as_ref().expect("checked by the parser");
            let mesh = Mesh::load(path)?;
            let zero = || SpaceTimeField::<1>::Zero;
            let bcs = cfg
                .bcs
                .iter()
                .map(|(label, bc)| {
                    let bc = match bc {
                        CustomBc::Velocity => BoundaryCondition::homogeneous_velocity(),
                        CustomBc::Traction => BoundaryCondition::Traction(SpaceTimeField::Zero),
                        CustomBc::Slip => BoundaryCondition::NormalVelocity {
                            velocity: zero(),
                            tangential_stress: zero(),
                        },
                        CustomBc::NormalStress => BoundaryCondition::NormalStress {
                            stress: zero(),
                            tangential_velocity: zero(),
                        },
                    };
                    (label.clone(), bc)
                })
                .collect();
            let h = mesh.h();
            Setup {
                problem: Problem {
                    mesh: Arc::new(mesh),
                    materials: with_overrides(cfg, ParameterSet::L1.materials()),
                    source_fluid: SpaceTimeField::Zero,
                    source_solid: SpaceTimeField::Zero,
                    interface: SpaceTimeField::Zero,
                    bcs,
                },
                exact: None,
                h,
            }
        }
    })
}

fn step_options(cfg: &RunConfig) -> StepOptions {
    StepOptions {
        solver: cfg.solver,
        residual_check: cfg.residual_check,
    }
}

fn initial_state(cfg: &RunConfig, disc: &Discretization, exact: &dyn ExactSolution) -> Result<State> {
    match cfg.init {
        Init::Consistent => disc.initialize_consistent(exact, 0.0),
        Init::Projected => Ok(disc.project(exact, 0.0)),
    }
}

/// One solve of a problem with a known solution.
pub fn measure_point(cfg: &RunConfig, k: usize, n: usize, steps: usize, dt: f64) -> Result<ErrorRecord> {
    let s = setup(cfg, k, n)?;
    let exact = s
        .exact
        .ok_or_else(|| Error::Config(format!("problem `{}` has no exact solution to measure against", cfg.problem.name())))?;
    let start = std::time::Instant::now();
    let fail = |e: Error| Error::InvalidInput(format!("run k={k} h={} dt={dt} failed: {e}", s.h));
    let disc = Discretization::new(s.problem, k).map_err(fail)?;
    let stepper = Stepper::new(disc.clone(), dt, step_options(cfg)).map_err(fail)?;
    let mut state = initial_state(cfg, &disc, exact.as_ref()).map_err(fail)?;
    stepper.run(&mut state, steps, |_, _| Ok(())).map_err(fail)?;
    let (e_sigma, e_u, e_p) = compute_errors(&disc, &state, exact.as_ref(), state.t)?;
    Ok(ErrorRecord {
        k,
        h: s.h,
        dt,
        steps,
        e_sigma,
        e_u,
        e_p,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Outcome of a study: records and threshold violations.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub records: Vec<ErrorRecord>,
    pub violations: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn single<T: Copy + std::fmt::Debug>(v: &[T], key: &str, study: Study) -> Result<T> {
    match v {
        [x] => Ok(*x),
        _ => Err(Error::Config(format!("`--study {}` needs a single `{key}`, got {v:?}", study.name()))),
    }
}

/// Runs a convergence sweep and writes `rates_<study>.csv` and `.md` under the
/// configured output directory.
///
/// For `--study h` the rate thresholds are compared with the mean rate minus
/// `k`; for `--study dt` every pairwise rate must lie within them.
pub fn convergence(cfg: &RunConfig, study: Study) -> Result<StudyReport> {
    if matches!(cfg.problem, ProblemKind::Example2 | ProblemKind::Custom) {
        return Err(Error::Config(format!("problem `{}` has no exact solution for a convergence study", cfg.problem.name())));
    }
    let mut records = Vec::new();
    match study {
        Study::H => {
            for &k in &cfg.k {
                for &n in &cfg.n {
                    for (l, dt) in cfg.steps_for(k, 1.0 / n as f64) {
                        records.push(measure_point(cfg, k, n, l, dt)?);
                    }
                }
            }
        }
        Study::P => {
            let n = single(&cfg.n, "n", study)?;
            for &k in &cfg.k {
                for (l, dt) in cfg.steps_for(k, 1.0 / n as f64) {
                    records.push(measure_point(cfg, k, n, l, dt)?);
                }
            }
        }
        Study::Dt => {
            let n = single(&cfg.n, "n", study)?;
            let k = single(&cfg.k, "k", study)?;
            for (l, dt) in cfg.steps_for(k, 1.0 / n as f64) {
                records.push(measure_point(cfg, k, n, l, dt)?);
            }
        }
    }
    let mut violations = Vec::new();
    let th = cfg.thresholds;
    let check = |what: &str, value: Rate, lo: Option<f64>, hi: Option<f64>, shift: f64, out: &mut Vec<String>| match value {
        Rate::Saturated => {}
        Rate::Value(v) => {
            if lo.is_some_and(|lo| v - shift < lo) || hi.is_some_and(|hi| v - shift > hi) {
                out.push(format!("{what} rate {v:.3} outside [{:?}, {:?}] (shift {shift})", lo, hi));
            }
        }
    };
    let by = if study == Study::Dt { Refinement::Time } else { Refinement::Space };
    match study {
        Study::H => {
            for g in groups(&records) {
                let m = mean_rates(&rates(g, by));
                let shift = g[0].k as f64;
                check(&format!("k={} mean stress", g[0].k), m[0], th.min_rate_sigma, th.max_rate_sigma, shift, &mut violations);
                check(&format!("k={} mean velocity", g[0].k), m[1], th.min_rate_u, th.max_rate_u, shift, &mut violations);
            }
        }
        Study::Dt => {
            for (i, r) in rates(&records, by).iter().enumerate() {
                check(&format!("pair {i} stress"), r[0], th.min_rate_sigma, th.max_rate_sigma, 0.0, &mut violations);
                check(&format!("pair {i} velocity"), r[1], th.min_rate_u, th.max_rate_u, 0.0, &mut violations);
            }
        }
        Study::P => {
            for w in records.windows(2) {
                if w[1].e_sigma >= w[0].e_sigma {
                    violations.push(format!("stress error does not decrease from k={} to k={}", w[0].k, w[1].k));
                }
            }
        }
    }
    let dir = &cfg.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = if study == Study::P { degree_csv(&records) } else { to_csv(&records, by) };
    let files = vec![
        dir.join(format!("rates_{}.csv", study.name())),
        dir.join(format!("rates_{}.md", study.name())),
        dir.join("resolved.cfg"),
    ];
    write_file(&files[0], &csv)?;
    write_file(&files[1], &to_markdown(&records, by))?;
    write_file(&files[2], &cfg.resolved())?;
    Ok(StudyReport {
        records,
        violations,
        files,
    })
}

/// Probe line sampled at the final time: `x` and one value per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeLine {
    pub probe: Probe,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProbeLine {
    pub fn file_name(&self) -> &'static str {
        match self.probe {
            Probe::Flow => "flow.csv",
            Probe::Pressure => "pressure.csv",
            Probe::Displacement => "displacement.csv",
        }
    }

    pub fn to_csv(&self) -> String {
        let col = match self.probe {
            Probe::Flow => "flow",
            Probe::Pressure => "pressure",
            Probe::Displacement => "displacement_y",
        };
        let mut s = format!("x,{col}\n");
        for (x, v) in self.x.iter().zip(&self.values) {
            let _ = writeln!(s, "{x},{v}");
        }
        s
    }
}

/// Flow proxy (two thirds of the horizontal velocity) and pressure on the
/// channel bottom, vertical displacement on the interface.
pub fn sample_probes(disc: &Discretization, state: &State, probes: &[Probe], points: usize) -> Result<Vec<ProbeLine>> {
    let len = crate::benchmarks::EXAMPLE2_LENGTH;
    let xs: Vec<f64> = (0..points).map(|i| len * i as f64 / (points - 1) as f64).collect();
    let sampler = Sampler::new(disc, state);
    let inward = |x: f64| -> Point { [if x < 0.5 * len { 1.0 } else { -1.0 }, 1.0] };
    let missing = |what: &str, x: f64| Error::InvalidInput(format!("probe `{what}` found no element at x = {x}"));
    probes
        .iter()
        .map(|&probe| {
            let values = xs
                .iter()
                .map(|&x| match probe {
                    Probe::Flow => sampler
                        .velocity([x, 0.0], inward(x))
                        .map(|u| 2.0 / 3.0 * u[0])
                        .ok_or_else(|| missing("flow", x)),
                    Probe::Pressure => sampler.pressure([x, 0.0], inward(x)).ok_or_else(|| missing("pressure", x)),
                    Probe::Displacement => sampler
                        .displacement([x, crate::benchmarks::EXAMPLE2_FLUID_HEIGHT], inward(x))
                        .map(|d| d[1])
                        .ok_or_else(|| missing("displacement", x)),
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ProbeLine {
                probe,
                x: xs.clone(),
                values,
            })
        })
        .collect()
}

/// Result of a `run`.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub state: State,
    pub probes: Vec<ProbeLine>,
    pub errors: Option<ErrorRecord>,
    pub files: Vec<PathBuf>,
}

/// Time-dependent run with probes, energy log and, when available, errors.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let k = single(&cfg.k, "k", Study::H).map_err(|_| Error::Config("`run` needs a single `k`".into()))?;
    let n = single(&cfg.n, "n", Study::H).map_err(|_| Error::Config("`run` needs a single `n`".into()))?;
    let s = setup(cfg, k, n)?;
    let steps = cfg.steps_for(k, s.h);
    let [(l, dt)] = steps.as_slice() else {
        return Err(Error::Config("`run` needs a single `L`".into()));
    };
    let (l, dt) = (*l, *dt);
    let start = std::time::Instant::now();
    let disc = Discretization::new(s.problem, k)?;
    let stepper = Stepper::new(disc.clone(), dt, step_options(cfg))?;
    let mut state = match (&s.exact, cfg.problem) {
        (Some(exact), _) => initial_state(cfg, &disc, exact.as_ref())?,
        (None, ProblemKind::Custom) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            disc.random_state(&mut rng)
        }
        (None, _) => initial_state(cfg, &disc, &ZeroSolution)?,
    };
    let dir = &cfg.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    if cfg.energy_log {
        let rows = run_with_energy(&stepper, &mut state, l)?;
        let path = dir.join("energy.csv");
        write_file(&path, &energy_csv(&rows))?;
        files.push(path);
    } else {
        stepper.run(&mut state, l, |_, _| Ok(()))?;
    }
    let probes = if cfg.problem == ProblemKind::Example2 {
        sample_probes(&disc, &state, &cfg.probes, cfg.probe_points)?
    } else {
        Vec::new()
    };
    for p in &probes {
        let path = dir.join(p.file_name());
        write_file(&path, &p.to_csv())?;
        files.push(path);
    }
    let errors = match &s.exact {
        Some(exact) => {
            let (e_sigma, e_u, e_p) = compute_errors(&disc, &state, exact.as_ref(), state.t)?;
            let rec = ErrorRecord {
                k,
                h: s.h,
                dt,
                steps: l,
                e_sigma,
                e_u,
                e_p,
                seconds: start.elapsed().as_secs_f64(),
            };
            let path = dir.join("errors.csv");
            write_file(&path, &to_csv(&[rec], Refinement::Space))?;
            files.push(path);
            Some(rec)
        }
        None => None,
    };
    let path = dir.join("resolved.cfg");
    write_file(&path, &cfg.resolved())?;
    files.push(path);
    Ok(RunReport {
        state,
        probes,
        errors,
        files,
    })
}

/// Property suites; the fault hook exists to show that the suites can fail.
pub fn verify(fault: Fault) -> Vec<SuiteOutcome> {
    run_all(fault)
}

pub fn mesh_info(path: &Path) -> Result<String> {
    Ok(Mesh::load(path)?.info())
}

/// Writes the structured mesh of a named problem.
pub fn mesh_generate(problem: ProblemKind, n: usize, path: &Path) -> Result<()> {
    let mesh = match problem {
        ProblemKind::Example1L1 | ProblemKind::Example1L2 => Example1::mesh(n)?,
        ProblemKind::Exactness => PolynomialCase::new(0).mesh(n)?,
        ProblemKind::Example2 => Example2::mesh(n)?,
        ProblemKind::Custom => return Err(Error::Config("`custom` has no built-in mesh".into())),
    };
    mesh.save(path)
}
