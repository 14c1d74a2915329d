//! Error norms, convergence rates and table output.

use std::fmt::Write as _;
use std::path::Path;

use crate::benchmarks::ExactSolution;
use crate::error::{Error, Result};
use crate::materials::{ddot, MaterialSet, SymTensor};
use crate::mesh::{Mesh, Point, Subdomain};
use crate::projection::eval_element;
use crate::time::{Discretization, Problem, State, StepOptions, Stepper};

/// Errors of one run at its final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub k: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub e_sigma: f64,
    pub e_u: f64,
    pub e_p: f64,
    pub seconds: f64,
}

/// `A sigma : sigma` with the compliance of the given phase.
pub fn h_density(materials: &MaterialSet, sub: Subdomain, s: SymTensor) -> f64 {
    ddot(materials.lame(sub).apply_a(s), s)
}

/// `‖sigma‖_H` of an element-wise stress field given by a closure.
pub fn h_norm(mesh: &Mesh, materials: &MaterialSet, rule: &crate::quadrature::TriangleRule, f: impl Fn(usize, [f64; 2]) -> SymTensor) -> f64 {
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let map = mesh.affine(e);
        let sub = mesh.subdomain(e);
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            sum += w * map.det * h_density(materials, sub, f(e, *xi));
        }
    }
    sum.sqrt()
}

/// `e_sigma` in the H-norm, `e_u` in `L²(Ω)` and `e_p` in `L²(Ω_f)`, with the
/// discrete pressure recovered from the fluid stress.
pub fn compute_errors(disc: &Discretization, state: &State, exact: &dyn ExactSolution, t: f64) -> Result<(f64, f64, f64)> {
    if (state.t - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::TimeMismatch { state: state.t, requested: t });
    }
    let mesh = disc.mesh();
    let m = disc.materials();
    let d = &disc.dofs;
    let tb = &disc.tables;
    let (mut es, mut eu, mut ep) = (0.0, 0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let map = mesh.affine(e);
        let sub = mesh.subdomain(e);
        let sig = state.sigma_of(d, e);
        let u = state.u_of(d, e);
        for (xi, w) in tb.vol.points.iter().zip(&tb.vol.weights) {
            let x = map.map(*xi);
            let wd = w * map.det;
            let sh: SymTensor = eval_element(&tb.stress, sig, *xi);
            let se = exact.stress(sub, x, t);
            let diff = [se[0] - sh[0], se[1] - sh[1], se[2] - sh[2]];
            es += wd * h_density(m, sub, diff);
            let uh: [f64; 2] = eval_element(&tb.velocity, u, *xi);
            let ue = exact.velocity(x, t);
            eu += wd * ((ue[0] - uh[0]).powi(2) + (ue[1] - uh[1]).powi(2));
            if sub == Subdomain::Fluid {
                ep += wd * (exact.pressure(x, t) - m.pressure(sh)).powi(2);
            }
        }
    }
    Ok((es.sqrt(), eu.sqrt(), ep.sqrt()))
}

/// Solves `problem` from the consistent initial state of `exact` at `t = 0`
/// over `steps` steps of size `dt` and measures the errors at the end.
pub fn measure(problem: Problem, exact: &dyn ExactSolution, k: usize, h: f64, dt: f64, steps: usize, options: StepOptions) -> Result<ErrorRecord> {
    let start = std::time::Instant::now();
    let disc = Discretization::new(problem, k)?;
    let stepper = Stepper::new(disc.clone(), dt, options)?;
    let mut state = disc.initialize_consistent(exact, 0.0)?;
    stepper.run(&mut state, steps, |_, _| Ok(()))?;
    let (e_sigma, e_u, e_p) = compute_errors(&disc, &state, exact, state.t)?;
    Ok(ErrorRecord {
        k,
        h,
        dt,
        steps,
        e_sigma,
        e_u,
        e_p,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Discrete fields evaluated at physical points.
#[derive(Debug, Clone, Copy)]
pub struct Sampler<'a> {
    pub disc: &'a Discretization,
    pub state: &'a State,
}

impl<'a> Sampler<'a> {
    pub fn new(disc: &'a Discretization, state: &'a State) -> Self {
        Sampler { disc, state }
    }

    /// Element containing `p` after nudging it by `toward` (to pick a side
    /// on facets), and the reference coordinates of `p` in it.
    fn locate(&self, p: Point, toward: Point) -> Option<(usize, Point)> {
        let mesh = self.disc.mesh();
        let probe = [p[0] + 1e-9 * toward[0], p[1] + 1e-9 * toward[1]];
        let e = mesh.locate(probe)?;
        Some((e, mesh.affine(e).inverse(p)))
    }

    pub fn velocity(&self, p: Point, toward: Point) -> Option<[f64; 2]> {
        let (e, xi) = self.locate(p, toward)?;
        Some(eval_element(&self.disc.tables.velocity, self.state.u_of(&self.disc.dofs, e), xi))
    }

    pub fn stress(&self, p: Point, toward: Point) -> Option<(Subdomain, SymTensor)> {
        let (e, xi) = self.locate(p, toward)?;
        let s = eval_element(&self.disc.tables.stress, self.state.sigma_of(&self.disc.dofs, e), xi);
        Some((self.disc.mesh().subdomain(e), s))
    }

    /// Fluid pressure; `None` outside the fluid.
    pub fn pressure(&self, p: Point, toward: Point) -> Option<f64> {
        match self.stress(p, toward)? {
            (Subdomain::Fluid, s) => Some(self.disc.materials().pressure(s)),
            _ => None,
        }
    }

    /// Solid displacement; `None` outside the solid.
    pub fn displacement(&self, p: Point, toward: Point) -> Option<[f64; 2]> {
        let (e, xi) = self.locate(p, toward)?;
        if self.disc.mesh().subdomain(e) != Subdomain::Solid {
            return None;
        }
        Some(eval_element(&self.disc.tables.velocity, self.state.displacement_of(&self.disc.dofs, e), xi))
    }
}

/// A convergence rate, or a marker for pairs where an error is at round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Value(f64),
    Saturated,
}

/// Errors at or below this are treated as exact.
pub const SATURATION: f64 = 1e-11;

impl Rate {
    pub fn between(e0: f64, e1: f64, x0: f64, x1: f64) -> Rate {
        if e0 <= SATURATION || e1 <= SATURATION {
            return Rate::Saturated;
        }
        Rate::Value((e0 / e1).ln() / (x0 / x1).ln())
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            Rate::Saturated => None,
        }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Value(v) => write!(f, "{v:.2}"),
            Rate::Saturated => write!(f, "sat"),
        }
    }
}

/// Refinement variable of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Space,
    Time,
}

/// Pairwise rates for `[sigma, u, p]` between consecutive records.
pub fn rates(records: &[ErrorRecord], by: Refinement) -> Vec<[Rate; 3]> {
    records
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (x0, x1) = match by {
                Refinement::Space => (a.h, b.h),
                Refinement::Time => (a.dt, b.dt),
            };
            [
                Rate::between(a.e_sigma, b.e_sigma, x0, x1),
                Rate::between(a.e_u, b.e_u, x0, x1),
                Rate::between(a.e_p, b.e_p, x0, x1),
            ]
        })
        .collect()
}

/// Arithmetic mean of the non-saturated rates, per quantity.
pub fn mean_rates(rates: &[[Rate; 3]]) -> [Rate; 3] {
    std::array::from_fn(|q| {
        let v: Vec<f64> = rates.iter().filter_map(|r| r[q].value()).collect();
        if v.is_empty() {
            Rate::Saturated
        } else {
            Rate::Value(v.iter().sum::<f64>() / v.len() as f64)
        }
    })
}

/// Consecutive records sharing a polynomial degree.
pub fn groups(records: &[ErrorRecord]) -> Vec<&[ErrorRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].k != records[start].k {
            if i > start {
                out.push(&records[start..i]);
            }
            start = i;
        }
    }
    out
}

pub const CSV_HEADER: &str = "k,h,dt,L,e_sigma,e_u,e_p,rate_sigma,rate_u,rate_p,seconds";

fn rate_cell(r: Option<Rate>) -> String {
    match r {
        None => String::new(),
        Some(Rate::Value(v)) => format!("{v}"),
        Some(Rate::Saturated) => "sat".into(),
    }
}

/// CSV with one row per record (rates against the previous record of the
/// same degree) and one `mean` row per degree with at least two records.
pub fn to_csv(records: &[ErrorRecord], by: Refinement) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for g in groups(records) {
        let r = rates(g, by);
        for (i, rec) in g.iter().enumerate() {
            let rr = if i == 0 { [None; 3] } else { r[i - 1].map(Some) };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                rec.k,
                rec.h,
                rec.dt,
                rec.steps,
                rec.e_sigma,
                rec.e_u,
                rec.e_p,
                rate_cell(rr[0]),
                rate_cell(rr[1]),
                rate_cell(rr[2]),
                rec.seconds
            );
        }
        if g.len() > 1 {
            let m = mean_rates(&r);
            let _ = writeln!(
                s,
                "{},mean,,,,,,{},{},{},",
                g[0].k,
                rate_cell(Some(m[0])),
                rate_cell(Some(m[1])),
                rate_cell(Some(m[2]))
            );
        }
    }
    s
}

/// Parses the record rows of [`to_csv`] output; mean rows are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<ErrorRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::InvalidInput(format!("unexpected CSV header {other:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 11 {
            return Err(Error::InvalidInput(format!("line {}: expected 11 columns, found {}", i + 2, c.len())));
        }
        if c[1] == "mean" {
            continue;
        }
        let bad = |what: &str| Error::InvalidInput(format!("line {}: bad {what}", i + 2));
        let f = |j: usize, what: &str| c[j].parse::<f64>().map_err(|_| bad(what));
        out.push(ErrorRecord {
            k: c[0].parse().map_err(|_| bad("k"))?,
            h: f(1, "h")?,
            dt: f(2, "dt")?,
            steps: c[3].parse().map_err(|_| bad("L"))?,
            e_sigma: f(4, "e_sigma")?,
            e_u: f(5, "e_u")?,
            e_p: f(6, "e_p")?,
            seconds: f(10, "seconds")?,
        });
    }
    Ok(out)
}

fn fraction(x: f64) -> String {
    let inv = 1.0 / x;
    if (inv - inv.round()).abs() < 1e-9 * inv {
        format!("1/{}", inv.round())
    } else {
        format!("{x:.3e}")
    }
}

/// Markdown table, one block per degree followed by its mean rates.
pub fn to_markdown(records: &[ErrorRecord], by: Refinement) -> String {
    let step = match by {
        Refinement::Space => "h",
        Refinement::Time => "dt",
    };
    let mut s = format!("| k | {step} | e_sigma | e_u | e_p |\n|---|---|---|---|---|\n");
    for g in groups(records) {
        for rec in g {
            let x = match by {
                Refinement::Space => rec.h,
                Refinement::Time => rec.dt,
            };
            let _ = writeln!(s, "| {} | {} | {:.2e} | {:.2e} | {:.2e} |", rec.k, fraction(x), rec.e_sigma, rec.e_u, rec.e_p);
        }
        if g.len() > 1 {
            let m = mean_rates(&rates(g, by));
            let _ = writeln!(s, "| rates | | {} | {} | {} |", m[0], m[1], m[2]);
        }
    }
    s
}

/// `k,e_sigma,e_u` rows of a degree study.
pub fn degree_csv(records: &[ErrorRecord]) -> String {
    let mut s = String::from("k,e_sigma,e_u\n");
    for r in records {
        let _ = writeln!(s, "{},{},{}", r.k, r.e_sigma, r.e_u);
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Least-squares slope and correlation of `(x, y)` pairs.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxy / sxx, sxy / (sxx * syy).sqrt())
}
