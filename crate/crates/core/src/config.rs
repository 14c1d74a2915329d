//! Run configuration files.
//!
//! The grammar is one `key = value` pair per line. Blank lines and text after
//! `#` are ignored. List values are comma separated. Unknown keys, repeated
//! keys and malformed values are errors.
//!
//! | key | value |
//! |---|---|
//! | `problem` | `example1_L1`, `example1_L2`, `example2`, `exactness`, `custom` |
//! | `k` | degree, or a list for `--study h` and `--study p` |
//! | `n` | cells per unit length, or a list for `--study h` |
//! | `mesh_file` | mesh path, only with `problem = custom` |
//! | `refine` | refinement factor of the `example2` mesh (`h = 0.1 / refine`) |
//! | `T` | final time |
//! | `L` | number of steps, or a list for `--study dt` |
//! | `dt_c` | constant `c` of the rule `dt = c h^((k+2)/2)` |
//! | `dt` | fixed step size; `L = round(T / dt)` |
//! | `lambda_f`, `rho_s`, `mu_s`, `lambda_s`, `beta_s`, `rho_f`, `mu_f` | material overrides |
//! | `p_max`, `t_max` | pressure pulse of `example2` |
//! | `solver` | `direct`, `iterative` or `monolithic` |
//! | `tol` | iterative solver tolerance |
//! | `init` | `consistent` or `projected` |
//! | `residual_check` | relative tolerance on the uncondensed residual, or `off` |
//! | `output` | output directory |
//! | `probes` | subset of `flow,pressure,displacement` |
//! | `probe_points` | number of probe samples along each line |
//! | `energy_log` | `true` or `false` |
//! | `bc.<label>` | `velocity`, `traction`, `slip` or `normal_stress` (homogeneous), `custom` only |
//! | `seed` | seed of the random initial state of `custom` runs |
//! | `min_rate_sigma`, `min_rate_u`, `max_rate_sigma`, `max_rate_u` | acceptance thresholds; `--study h` compares them with the mean rate minus `k`, `--study dt` with every rate |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sparse::{IterativeOptions, Preconditioner};
use crate::time::LinearSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Example1L1,
    Example1L2,
    Example2,
    Exactness,
    Custom,
}

impl ProblemKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "example1_L1" => ProblemKind::Example1L1,
            "example1_L2" => ProblemKind::Example1L2,
            "example2" => ProblemKind::Example2,
            "exactness" => ProblemKind::Exactness,
            "custom" => ProblemKind::Custom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Example1L1 => "example1_L1",
            ProblemKind::Example1L2 => "example1_L2",
            ProblemKind::Example2 => "example2",
            ProblemKind::Exactness => "exactness",
            ProblemKind::Custom => "custom",
        }
    }
}

/// How the number of steps is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    Steps(Vec<usize>),
    /// `dt = c h^((k+2)/2)`, rounded down so that `T / dt` is an integer.
    Rule(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Consistent,
    Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Flow,
    Pressure,
    Displacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustomBc {
    Velocity,
    Traction,
    Slip,
    NormalStress,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Thresholds {
    pub min_rate_sigma: Option<f64>,
    pub min_rate_u: Option<f64>,
    pub max_rate_sigma: Option<f64>,
    pub max_rate_u: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialOverrides {
    pub rho_s: Option<f64>,
    pub mu_s: Option<f64>,
    pub lambda_s: Option<f64>,
    pub beta_s: Option<f64>,
    pub rho_f: Option<f64>,
    pub mu_f: Option<f64>,
    pub lambda_f: Option<f64>,
}

impl MaterialOverrides {
    pub fn apply(&self, m: &mut crate::materials::MaterialSet) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut m.rho_s, self.rho_s);
        set(&mut m.mu_s, self.mu_s);
        set(&mut m.lambda_s, self.lambda_s);
        set(&mut m.beta_s, self.beta_s);
        set(&mut m.rho_f, self.rho_f);
        set(&mut m.mu_f, self.mu_f);
        set(&mut m.lambda_f, self.lambda_f);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub k: Vec<usize>,
    pub n: Vec<usize>,
    pub mesh_file: Option<PathBuf>,
    pub refine: usize,
    pub t_final: f64,
    pub steps: StepRule,
    pub materials: MaterialOverrides,
    pub p_max: Option<f64>,
    pub t_max: Option<f64>,
    pub solver: LinearSolver,
    pub init: Init,
    pub residual_check: Option<f64>,
    pub output: PathBuf,
    pub probes: Vec<Probe>,
    pub probe_points: usize,
    pub energy_log: bool,
    pub bcs: Vec<(String, CustomBc)>,
    pub seed: u64,
    pub thresholds: Thresholds,
}

const KEYS: &[&str] = &[
    "problem",
    "k",
    "n",
    "mesh_file",
    "refine",
    "T",
    "L",
    "dt_c",
    "dt",
    "lambda_f",
    "rho_s",
    "mu_s",
    "lambda_s",
    "beta_s",
    "rho_f",
    "mu_f",
    "p_max",
    "t_max",
    "solver",
    "tol",
    "init",
    "residual_check",
    "output",
    "probes",
    "probe_points",
    "energy_log",
    "seed",
    "min_rate_sigma",
    "min_rate_u",
    "max_rate_sigma",
    "max_rate_u",
];

struct Entry {
    value: String,
    line: usize,
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(e: &Entry, key: &str) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("`{key}` expects a number, got `{}`", e.value)))
}

fn parse_list<T: std::str::FromStr>(e: &Entry, key: &str) -> Result<Vec<T>> {
    e.value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| err(e.line, format!("`{key}` expects numbers, got `{}`", s.trim())))
        })
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, Entry> = BTreeMap::new();
        let mut bcs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(line, format!("`{key}` has no value")));
            }
            if let Some(label) = key.strip_prefix("bc.") {
                let bc = match value {
                    "velocity" => CustomBc::Velocity,
                    "traction" => CustomBc::Traction,
                    "slip" => CustomBc::Slip,
                    "normal_stress" => CustomBc::NormalStress,
                    _ => return Err(err(line, format!("unknown boundary condition `{value}`"))),
                };
                if bcs.iter().any(|(l, _)| l == label) {
                    return Err(err(line, format!("repeated key `{key}`")));
                }
                bcs.push((label.to_string(), bc));
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            if map.contains_key(key) {
                return Err(err(line, format!("repeated key `{key}`")));
            }
            map.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }

        let get = |k: &str| map.get(k);
        let problem = match get("problem") {
            None => return Err(Error::Config("missing key `problem`".into())),
            Some(e) => ProblemKind::parse(&e.value).ok_or_else(|| err(e.line, format!("unknown problem `{}`", e.value)))?,
        };
        let k = match get("k") {
            Some(e) => parse_list(e, "k")?,
            None => vec![if problem == ProblemKind::Example2 { 2 } else { 1 }],
        };
        let n = match get("n") {
            Some(e) => parse_list(e, "n")?,
            None => vec![8],
        };
        if n.contains(&0) {
            return Err(Error::Config("`n` must be positive".into()));
        }
        let mesh_file = get("mesh_file").map(|e| PathBuf::from(&e.value));
        if mesh_file.is_some() != (problem == ProblemKind::Custom) {
            return Err(Error::Config("`mesh_file` is required with, and only with, `problem = custom`".into()));
        }
        if !bcs.is_empty() && problem != ProblemKind::Custom {
            return Err(Error::Config("`bc.<label>` keys are only allowed with `problem = custom`".into()));
        }
        let refine = match get("refine") {
            Some(e) => parse_num(e, "refine")?,
            None => 1,
        };
        let default_t = match problem {
            ProblemKind::Example2 => 0.012,
            ProblemKind::Exactness => 0.4,
            _ => 0.3,
        };
        let t_final: f64 = match get("T") {
            Some(e) => parse_num(e, "T")?,
            None => default_t,
        };
        if !(t_final > 0.0) {
            return Err(Error::Config("`T` must be positive".into()));
        }
        let rules: Vec<&str> = ["L", "dt_c", "dt"].into_iter().filter(|k| map.contains_key(*k)).collect();
        let steps = match rules.as_slice() {
            [] => match problem {
                ProblemKind::Example2 => StepRule::Fixed(1e-4),
                _ => StepRule::Rule(0.1),
            },
            ["L"] => {
                let l: Vec<usize> = parse_list(&map["L"], "L")?;
                if l.contains(&0) {
                    return Err(err(map["L"].line, "`L` must be at least 1"));
                }
                StepRule::Steps(l)
            }
            ["dt_c"] => StepRule::Rule(parse_num(&map["dt_c"], "dt_c")?),
            ["dt"] => StepRule::Fixed(parse_num(&map["dt"], "dt")?),
            _ => return Err(Error::Config(format!("keys {rules:?} are exclusive; give exactly one"))),
        };
        let opt = |key: &str| -> Result<Option<f64>> { get(key).map(|e| parse_num(e, key)).transpose() };
        let materials = MaterialOverrides {
            rho_s: opt("rho_s")?,
            mu_s: opt("mu_s")?,
            lambda_s: opt("lambda_s")?,
            beta_s: opt("beta_s")?,
            rho_f: opt("rho_f")?,
            mu_f: opt("mu_f")?,
            lambda_f: opt("lambda_f")?,
        };
        let tol = opt("tol")?;
        let solver = match get("solver").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("direct", _)) => LinearSolver::Direct,
            Some(("monolithic", _)) => LinearSolver::Monolithic,
            Some(("iterative", _)) => LinearSolver::Iterative(IterativeOptions {
                tol: tol.unwrap_or(1e-12),
                preconditioner: Preconditioner::Ilu0,
                ..IterativeOptions::default()
            }),
            Some((other, line)) => return Err(err(line, format!("unknown solver `{other}`"))),
        };
        if tol.is_some() && !matches!(solver, LinearSolver::Iterative(_)) {
            return Err(Error::Config("`tol` only applies to `solver = iterative`".into()));
        }
        let init = match get("init").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("consistent", _)) => Init::Consistent,
            Some(("projected", _)) => Init::Projected,
            Some((other, line)) => return Err(err(line, format!("unknown init mode `{other}`"))),
        };
        let residual_check = match get("residual_check") {
            None => None,
            Some(e) if e.value == "off" => None,
            Some(e) => Some(parse_num(e, "residual_check")?),
        };
        let output = PathBuf::from(get("output").map(|e| e.value.as_str()).unwrap_or("out"));
        let probes = match get("probes") {
            None => vec![Probe::Flow, Probe::Pressure, Probe::Displacement],
            Some(e) => e
                .value
                .split(',')
                .map(|s| match s.trim() {
                    "flow" => Ok(Probe::Flow),
                    "pressure" => Ok(Probe::Pressure),
                    "displacement" => Ok(Probe::Displacement),
                    other => Err(err(e.line, format!("unknown probe `{other}`"))),
                })
                .collect::<Result<_>>()?,
        };
        let probe_points = match get("probe_points") {
            Some(e) => parse_num(e, "probe_points")?,
            None => 121,
        };
        if probe_points < 2 {
            return Err(Error::Config("`probe_points` must be at least 2".into()));
        }
        let energy_log = match get("energy_log").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("true", _)) => true,
            Some(("false", _)) => false,
            Some((other, line)) => return Err(err(line, format!("`energy_log` expects true or false, got `{other}`"))),
        };
        let seed = match get("seed") {
            Some(e) => parse_num(e, "seed")?,
            None => 0,
        };
        let thresholds = Thresholds {
            min_rate_sigma: opt("min_rate_sigma")?,
            min_rate_u: opt("min_rate_u")?,
            max_rate_sigma: opt("max_rate_sigma")?,
            max_rate_u: opt("max_rate_u")?,
        };
        Ok(RunConfig {
            problem,
            k,
            n,
            mesh_file,
            refine,
            t_final,
            steps,
            materials,
            p_max: opt("p_max")?,
            t_max: opt("t_max")?,
            solver,
            init,
            residual_check,
            output,
            probes,
            probe_points,
            energy_log,
            bcs,
            seed,
            thresholds,
        })
    }

    /// Number of steps and step size for degree `k` and mesh size `h`.
    pub fn steps_for(&self, k: usize, h: f64) -> Vec<(usize, f64)> {
        let t = self.t_final;
        match &self.steps {
            StepRule::Steps(l) => l.iter().map(|&l| (l, t / l as f64)).collect(),
            StepRule::Rule(c) => {
                let dt = c * h.powf((k as f64 + 2.0) / 2.0);
                let l = (t / dt).ceil().max(1.0) as usize;
                vec![(l, t / l as f64)]
            }
            StepRule::Fixed(dt) => {
                let l = (t / dt).round().max(1.0) as usize;
                vec![(l, t / l as f64)]
            }
        }
    }

    /// Fully resolved configuration in the input grammar.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "problem = {}", self.problem.name());
        let _ = writeln!(s, "k = {}", list(&self.k));
        if let Some(p) = &self.mesh_file {
            let _ = writeln!(s, "mesh_file = {}", p.display());
        } else if self.problem == ProblemKind::Example2 {
            let _ = writeln!(s, "refine = {}", self.refine);
        } else {
            let _ = writeln!(s, "n = {}", list(&self.n));
        }
        let _ = writeln!(s, "T = {}", self.t_final);
        match &self.steps {
            StepRule::Steps(l) => {
                let _ = writeln!(s, "L = {}", list(l));
            }
            StepRule::Rule(c) => {
                let _ = writeln!(s, "dt_c = {c}");
            }
            StepRule::Fixed(dt) => {
                let _ = writeln!(s, "dt = {dt}");
            }
        }
        let m = &self.materials;
        for (key, v) in [
            ("rho_s", m.rho_s),
            ("mu_s", m.mu_s),
            ("lambda_s", m.lambda_s),
            ("beta_s", m.beta_s),
            ("rho_f", m.rho_f),
            ("mu_f", m.mu_f),
            ("lambda_f", m.lambda_f),
            ("p_max", self.p_max),
            ("t_max", self.t_max),
            ("min_rate_sigma", self.thresholds.min_rate_sigma),
            ("min_rate_u", self.thresholds.min_rate_u),
            ("max_rate_sigma", self.thresholds.max_rate_sigma),
            ("max_rate_u", self.thresholds.max_rate_u),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{key} = {v}");
            }
        }
        match self.solver {
            LinearSolver::Direct => s.push_str("solver = direct\n"),
            LinearSolver::Monolithic => s.push_str("solver = monolithic\n"),
            LinearSolver::Iterative(o) => {
                let _ = writeln!(s, "solver = iterative\ntol = {}", o.tol);
            }
        }
        let _ = writeln!(
            s,
            "init = {}",
            match self.init {
                Init::Consistent => "consistent",
                Init::Projected => "projected",
            }
        );
        match self.residual_check {
            Some(r) => {
                let _ = writeln!(s, "residual_check = {r}");
            }
            None => s.push_str("residual_check = off\n"),
        }
        let _ = writeln!(s, "output = {}", self.output.display());
        let probes: Vec<&str> = self
            .probes
            .iter()
            .map(|p| match p {
                Probe::Flow => "flow",
                Probe::Pressure => "pressure",
                Probe::Displacement => "displacement",
            })
            .collect();
        let _ = writeln!(s, "probes = {}", probes.join(","));
        let _ = writeln!(s, "probe_points = {}", self.probe_points);
        let _ = writeln!(s, "energy_log = {}", self.energy_log);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (label, bc) in &self.bcs {
            let v = match bc {
                CustomBc::Velocity => "velocity",
                CustomBc::Traction => "traction",
                CustomBc::Slip => "slip",
                CustomBc::NormalStress => "normal_stress",
            };
            let _ = writeln!(s, "bc.{label} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse("problem = example1_L1\n").unwrap();
        assert_eq!(c.k, vec![1]);
        assert_eq!(c.steps, StepRule::Rule(0.1));
        assert_eq!(c.t_final, 0.3);
        assert_eq!(c.solver, LinearSolver::Direct);
    }

    #[test]
    fn unknown_and_repeated_keys_are_rejected() {
        let e = RunConfig::parse("problem = example2\nlamda_f = 1e5\n").unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("lamda_f"));
        assert!(RunConfig::parse("problem = example2\nk = 1\nk = 2\n").is_err());
        assert!(RunConfig::parse("problem = example2\nL = 3\ndt = 0.1\n").is_err());
        assert!(RunConfig::parse("k = 2\n").is_err());
        assert!(RunConfig::parse("problem = example1_L1\nsolver = cg\n").is_err());
    }

    #[test]
    fn resolved_config_parses_to_itself() {
        let text = "problem = example2 # channel\nlambda_f = 1e5\np_max = 0\nL = 120\nsolver = iterative\ntol = 1e-10\nprobes = flow, pressure\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.materials.lambda_f, Some(1e5));
        let again = RunConfig::parse(&c.resolved()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn step_rules() {
        let c = RunConfig::parse("problem = example1_L1\ndt_c = 0.1\n").unwrap();
        let (l, dt) = c.steps_for(0, 0.25)[0];
        assert_eq!(l, 12);
        assert!((dt - 0.025).abs() < 1e-15);
        let c = RunConfig::parse("problem = example1_L1\nL = 5,10\n").unwrap();
        assert_eq!(c.steps_for(3, 0.1).len(), 2);
        let c = RunConfig::parse("problem = example2\n").unwrap();
        assert_eq!(c.steps_for(2, 0.1), vec![(120, 0.012 / 120.0)]);
    }
}
