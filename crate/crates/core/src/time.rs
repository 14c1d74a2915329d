//! Crank–Nicolson time stepping, initialization and energy accounting.
//!
//! One step solves
//!
//! ```text
//! (M/dt)(x1 - x0) + K (x1 + x0)/2 = (b(t0) + b(t1))/2
//! ```
//!
//! where `M` holds the velocity mass and the solid compliance mass, and `K`
//! holds the fluid compliance mass, the skew coupling and the stabilization.
//! The solid displacement is carried along with `d1 = d0 + dt (u0 + u1)/2`
//! and enters the momentum equation through the spring term.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::assembly::{stabilization_weight, Fault, LocalOperators, Weights};
use crate::benchmarks::ExactSolution;
use crate::condense::{assemble_monolithic, assemble_schur, condense, local_trace_dofs, CondensedShape};
use crate::dofs::{facet_point, BoundaryCondition, DofMap, FacetRole, Tables};
use crate::error::{Error, Result};
use crate::field::{SpaceTimeField, TimeFn};
use crate::materials::{MaterialSet, SymTensor};
use crate::mesh::{Mesh, Point, Subdomain};
use crate::projection::{project_element, project_facet};
use crate::sparse::{solve_iterative, CsrMatrix, DirectSolver, IterativeOptions};

/// Data of a linear fluid–structure problem on a labelled mesh.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Arc<Mesh>,
    pub materials: MaterialSet,
    pub source_fluid: SpaceTimeField<2>,
    pub source_solid: SpaceTimeField<2>,
    /// Jump `(sigma_f - sigma_s) n_f` on the interface.
    pub interface: SpaceTimeField<2>,
    pub bcs: Vec<(String, BoundaryCondition)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    /// Condensed trace system, sparse LU.
    Direct,
    /// Condensed trace system, preconditioned GMRES.
    Iterative(IterativeOptions),
    /// Uncondensed system, sparse LU.
    Monolithic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub solver: LinearSolver,
    /// Tolerance on the scaled uncondensed residual, checked after every step.
    pub residual_check: Option<f64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            solver: LinearSolver::Direct,
            residual_check: None,
        }
    }
}

/// Coefficient vectors of the discrete state.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    /// `n_elements x n_sigma`.
    pub sigma: Vec<f64>,
    /// `n_elements x n_u`.
    pub u: Vec<f64>,
    /// `n_facets x n_hat`, constrained slots hold boundary data.
    pub trace: Vec<f64>,
    /// `n_elements x n_u`, zero on fluid elements.
    pub displacement: Vec<f64>,
}

impl State {
    pub fn zero(dofs: &DofMap) -> Self {
        State {
            t: 0.0,
            sigma: vec![0.0; dofs.n_elements * dofs.n_sigma],
            u: vec![0.0; dofs.n_elements * dofs.n_u],
            trace: vec![0.0; dofs.n_trace()],
            displacement: vec![0.0; dofs.n_elements * dofs.n_u],
        }
    }

    pub fn sigma_of(&self, dofs: &DofMap, e: usize) -> &[f64] {
        &self.sigma[e * dofs.n_sigma..(e + 1) * dofs.n_sigma]
    }

    pub fn u_of(&self, dofs: &DofMap, e: usize) -> &[f64] {
        &self.u[e * dofs.n_u..(e + 1) * dofs.n_u]
    }

    pub fn displacement_of(&self, dofs: &DofMap, e: usize) -> &[f64] {
        &self.displacement[e * dofs.n_u..(e + 1) * dofs.n_u]
    }
}

enum Component {
    Vector(SpaceTimeField<2>),
    Scalar(SpaceTimeField<1>, usize),
}

/// A field on a set of facets, expressed in the facet frames.
struct FacetField {
    facets: Vec<usize>,
    value: Component,
}

type SpaceKernel = Arc<dyn Fn(usize, Point) -> [f64; 2] + Send + Sync>;
type Evaluator = Box<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Precomputed load vectors `sum_i a_i(t) v_i + g(t)`.
struct LoadCache {
    len: usize,
    terms: Vec<(TimeFn, Vec<f64>)>,
    general: Vec<Evaluator>,
}

impl LoadCache {
    fn new(len: usize) -> Self {
        LoadCache {
            len,
            terms: Vec::new(),
            general: Vec::new(),
        }
    }

    fn at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (a, v) in &self.terms {
            let s = a(t);
            if s != 0.0 {
                out.iter_mut().zip(v).for_each(|(o, x)| *o += s * x);
            }
        }
        for g in &self.general {
            g(t, &mut out);
        }
        out
    }

    fn mean(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (a, v) in &self.terms {
            let s = 0.5 * (a(t0) + a(t1));
            if s != 0.0 {
                out.iter_mut().zip(v).for_each(|(o, x)| *o += s * x);
            }
        }
        if !self.general.is_empty() {
            let mut a = vec![0.0; self.len];
            let mut b = vec![0.0; self.len];
            for g in &self.general {
                g(t0, &mut a);
                g(t1, &mut b);
            }
            out.iter_mut().zip(a.iter().zip(&b)).for_each(|(o, (x, y))| *o += 0.5 * (x + y));
        }
        out
    }
}

/// Mesh, spaces, element operators and cached loads for one polynomial degree.
pub struct Discretization {
    pub problem: Problem,
    pub k: usize,
    pub dofs: DofMap,
    pub tables: Arc<Tables>,
    pub ops: LocalOperators,
    pub fault: Fault,
    sources: LoadCache,
    trace_loads: LoadCache,
    dirichlet: LoadCache,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("k", &self.k)
            .field("elements", &self.dofs.n_elements)
            .field("free_traces", &self.dofs.n_free())
            .finish()
    }
}

impl Discretization {
    pub fn new(problem: Problem, k: usize) -> Result<Arc<Self>> {
        Self::with_fault(problem, k, Fault::None)
    }

    #[doc(hidden)]
    pub fn with_fault(problem: Problem, k: usize, fault: Fault) -> Result<Arc<Self>> {
        problem.materials.validate()?;
        let mesh = problem.mesh.clone();
        let dofs = DofMap::new(&mesh, k, &problem.bcs)?;
        let tables = Arc::new(Tables::new(k)?);
        let ops = LocalOperators::build(&mesh, &dofs, &tables, &problem.materials, fault);

        let mut sources = LoadCache::new(dofs.n_elements * dofs.n_u);
        for (sub, field) in [
            (Subdomain::Fluid, &problem.source_fluid),
            (Subdomain::Solid, &problem.source_solid),
        ] {
            add_volume_field(&mut sources, &mesh, &tables, &dofs, sub, field);
        }

        let mut loads = Vec::new();
        let mut fixed = Vec::new();
        let interface: Vec<usize> = (0..dofs.n_facets)
            .filter(|&f| dofs.roles[f] == FacetRole::Interface)
            .collect();
        if !interface.is_empty() {
            loads.push(FacetField {
                facets: interface,
                value: Component::Vector(problem.interface.clone()),
            });
        }
        for (i, (_, bc)) in problem.bcs.iter().enumerate() {
            let facets: Vec<usize> = (0..dofs.n_facets)
                .filter(|&f| dofs.roles[f] == FacetRole::Boundary { bc: i })
                .collect();
            let (load, data) = match bc {
                BoundaryCondition::Velocity(g) => (None, Some(Component::Vector(g.clone()))),
                BoundaryCondition::Traction(g) => (Some(Component::Vector(g.clone())), None),
                BoundaryCondition::NormalStress {
                    stress,
                    tangential_velocity,
                } => (
                    Some(Component::Scalar(stress.clone(), 0)),
                    Some(Component::Scalar(tangential_velocity.clone(), 1)),
                ),
                BoundaryCondition::NormalVelocity {
                    velocity,
                    tangential_stress,
                } => (
                    Some(Component::Scalar(tangential_stress.clone(), 1)),
                    Some(Component::Scalar(velocity.clone(), 0)),
                ),
            };
            if let Some(value) = load {
                loads.push(FacetField {
                    facets: facets.clone(),
                    value,
                });
            }
            if let Some(value) = data {
                fixed.push(FacetField { facets, value });
            }
        }
        let frames = Arc::new(dofs.frames.clone());
        let mut trace_loads = LoadCache::new(dofs.n_trace());
        for field in loads {
            add_facet_field(&mut trace_loads, &mesh, &tables, &dofs, &frames, field, true);
        }
        let mut dirichlet = LoadCache::new(dofs.n_trace());
        for field in fixed {
            add_facet_field(&mut dirichlet, &mesh, &tables, &dofs, &frames, field, false);
        }

        Ok(Arc::new(Discretization {
            problem,
            k,
            dofs,
            tables,
            ops,
            fault,
            sources,
            trace_loads,
            dirichlet,
        }))
    }

    pub fn mesh(&self) -> &Mesh {
        &self.problem.mesh
    }

    pub fn materials(&self) -> &MaterialSet {
        &self.problem.materials
    }

    /// Trace vector holding the essential data at time `t` (zero elsewhere).
    pub fn boundary_data(&self, t: f64) -> Vec<f64> {
        self.dirichlet.at(t)
    }

    /// Facet loads at time `t`.
    pub fn trace_loads(&self, t: f64) -> Vec<f64> {
        self.trace_loads.at(t)
    }

    /// Element source loads at time `t` on velocity rows.
    pub fn source_loads(&self, t: f64) -> Vec<f64> {
        self.sources.at(t)
    }

    fn gather(&self, state: &State, e: usize, out: &mut [f64]) {
        let d = &self.dofs;
        out[..d.n_sigma].copy_from_slice(state.sigma_of(d, e));
        out[d.n_sigma..d.n_interior].copy_from_slice(state.u_of(d, e));
        for (i, f) in self.mesh().element_facets(e).into_iter().enumerate() {
            let at = d.n_interior + i * d.n_hat;
            out[at..at + d.n_hat].copy_from_slice(&state.trace[f * d.n_hat..(f + 1) * d.n_hat]);
        }
    }

    /// State with random element coefficients and random free traces.
    pub fn random_state(&self, rng: &mut impl Rng) -> State {
        let d = &self.dofs;
        let mut s = State::zero(d);
        s.sigma.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        s.u.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        for &i in &d.free {
            s.trace[i] = rng.random_range(-1.0..1.0);
        }
        s
    }

    /// Element-wise projection of an exact solution: velocity and stress on
    /// all elements, traces on all facets, displacement on solid elements.
    /// Constrained traces take the boundary data.
    pub fn project(&self, exact: &dyn ExactSolution, t: f64) -> State {
        let d = &self.dofs;
        let mesh = self.mesh();
        let tb = &self.tables;
        let mut s = State::zero(d);
        s.t = t;
        for e in 0..d.n_elements {
            let sub = mesh.subdomain(e);
            let sig = project_element(mesh, e, &tb.stress, &tb.vol, |p| exact.stress(sub, p, t));
            s.sigma[e * d.n_sigma..(e + 1) * d.n_sigma].copy_from_slice(&sig);
            let u = project_element(mesh, e, &tb.velocity, &tb.vol, |p| exact.velocity(p, t));
            s.u[e * d.n_u..(e + 1) * d.n_u].copy_from_slice(&u);
            if sub == Subdomain::Solid {
                let dd = project_element(mesh, e, &tb.velocity, &tb.vol, |p| exact.displacement(p, t));
                s.displacement[e * d.n_u..(e + 1) * d.n_u].copy_from_slice(&dd);
            }
        }
        let fixed = self.boundary_data(t);
        for f in 0..d.n_facets {
            let frame = d.frames[f];
            let c = project_facet(mesh, f, &tb.edge, &tb.line, |p| {
                let v = exact.velocity(p, t);
                [dot2(frame[0], v), dot2(frame[1], v)]
            });
            let at = f * d.n_hat;
            s.trace[at..at + d.n_hat].copy_from_slice(&c);
        }
        for &i in &d.fixed {
            s.trace[i] = fixed[i];
        }
        s
    }

    /// Initial state with projected velocity, solid stress and displacement,
    /// and the fluid stress and free traces solved from the algebraic part of
    /// the semi-discrete system at time `t`.
    pub fn initialize_consistent(&self, exact: &dyn ExactSolution, t: f64) -> Result<State> {
        let mut s = self.project(exact, t);
        self.solve_algebraic(&mut s)?;
        Ok(s)
    }

    /// Solves the fluid constitutive rows and the trace rows for the fluid
    /// stress and the free traces, all other components held fixed.
    pub fn solve_algebraic(&self, s: &mut State) -> Result<()> {
        let d = &self.dofs;
        let mesh = self.mesh();
        let w = Weights::algebraic();
        let fluid: Vec<usize> = (0..d.n_elements)
            .filter(|&e| mesh.subdomain(e) == Subdomain::Fluid)
            .collect();
        let mut fluid_slot = vec![usize::MAX; d.n_elements];
        for (i, &e) in fluid.iter().enumerate() {
            fluid_slot[e] = i;
        }
        let offset = fluid.len() * d.n_sigma;
        let n = offset + d.n_free();
        if n == 0 {
            return Ok(());
        }
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; n];
        let loads = self.trace_loads(s.t);
        for (i, &g) in d.free.iter().enumerate() {
            rhs[offset + i] += loads[g];
        }
        let nl = d.n_local();
        let mut x = vec![0.0; nl];
        for e in 0..d.n_elements {
            let op = self.ops.of(e);
            let a = op.matrix(&w);
            self.gather(s, e, &mut x);
            let traces = local_trace_dofs(mesh, d, e);
            let slot = fluid_slot[e];
            let unknown = |l: usize| -> Option<usize> {
                if l < d.n_sigma {
                    (slot != usize::MAX).then(|| slot * d.n_sigma + l)
                } else if l < d.n_interior {
                    None
                } else {
                    let f = d.free_index[traces[l - d.n_interior]];
                    (f != usize::MAX).then(|| offset + f)
                }
            };
            for r in 0..nl {
                let row = if r < d.n_sigma {
                    if slot == usize::MAX {
                        continue;
                    }
                    slot * d.n_sigma + r
                } else if r < d.n_interior {
                    continue;
                } else {
                    match unknown(r) {
                        Some(i) => i,
                        None => continue,
                    }
                };
                for c in 0..nl {
                    let v = a[r * nl + c];
                    if v == 0.0 {
                        continue;
                    }
                    match unknown(c) {
                        Some(col) => triplets.push((row, col, v)),
                        None => rhs[row] -= v * x[c],
                    }
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &triplets);
        let sol = DirectSolver::new(&a)?.solve(&rhs)?;
        for (i, &e) in fluid.iter().enumerate() {
            s.sigma[e * d.n_sigma..(e + 1) * d.n_sigma].copy_from_slice(&sol[i * d.n_sigma..(i + 1) * d.n_sigma]);
        }
        for (i, &g) in d.free.iter().enumerate() {
            s.trace[g] = sol[offset + i];
        }
        Ok(())
    }

    /// `E = ½(rho u, u) + ½(A_s sigma, sigma)_s + ½ beta ‖d‖²_s`.
    pub fn energy(&self, s: &State) -> f64 {
        let d = &self.dofs;
        let mesh = self.mesh();
        let m = self.materials();
        let comp_s = m.solid().compliance_matrix();
        let mut total = 0.0;
        for e in 0..d.n_elements {
            let det = mesh.affine(e).det;
            let sub = mesh.subdomain(e);
            let u = s.u_of(d, e);
            total += 0.5 * m.rho(sub) * det * u.iter().map(|v| v * v).sum::<f64>();
            if sub == Subdomain::Solid {
                total += 0.5 * det * stress_quadratic(&comp_s, s.sigma_of(d, e), d.nk);
                let dd = s.displacement_of(d, e);
                total += 0.5 * m.beta_s * det * dd.iter().map(|v| v * v).sum::<f64>();
            }
        }
        total
    }

    /// `dt [(A_f mean sigma, mean sigma)_f + sum_K sum_F s_F ‖mean u - mean û‖²_F]`.
    pub fn dissipation(&self, s0: &State, s1: &State) -> f64 {
        let d = &self.dofs;
        let mesh = self.mesh();
        let tb = &self.tables;
        let comp_f = self.materials().fluid().compliance_matrix();
        let dt = s1.t - s0.t;
        let mean = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect() };
        let mut total = 0.0;
        let (nk1, ne) = (d.nk1, d.ne);
        for e in 0..d.n_elements {
            let det = mesh.affine(e).det;
            if mesh.subdomain(e) == Subdomain::Fluid {
                let sig = mean(s0.sigma_of(d, e), s1.sigma_of(d, e));
                total += det * stress_quadratic(&comp_f, &sig, d.nk);
            }
            let u = mean(s0.u_of(d, e), s1.u_of(d, e));
            for (edge, f) in mesh.element_facets(e).into_iter().enumerate() {
                let len = mesh.facet_length(f);
                let sw = stabilization_weight(d.k, len);
                let hat = mean(
                    &s0.trace[f * d.n_hat..(f + 1) * d.n_hat],
                    &s1.trace[f * d.n_hat..(f + 1) * d.n_hat],
                );
                let frame = d.frames[f];
                let chi_tab = &tb.edge_chi[if mesh.edge_aligned(e, edge) { 0 } else { 1 }];
                for q in 0..tb.line.len() {
                    let psi = &tb.edge_u[edge][q * nk1..(q + 1) * nk1];
                    let chi = &chi_tab[q * ne..(q + 1) * ne];
                    let mut jump = [0.0; 2];
                    for a in 0..2 {
                        jump[a] = dot(&u[a * nk1..(a + 1) * nk1], psi);
                    }
                    for comp in 0..2 {
                        let h = dot(&hat[comp * ne..(comp + 1) * ne], chi);
                        jump[0] -= frame[comp][0] * h;
                        jump[1] -= frame[comp][1] * h;
                    }
                    total += sw * tb.line.weights[q] * len * (jump[0] * jump[0] + jump[1] * jump[1]);
                }
            }
        }
        dt * total
    }
}

fn stress_quadratic(comp: &[[f64; 3]; 3], sig: &[f64], nk: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..3 {
        for dd in 0..3 {
            if comp[c][dd] == 0.0 {
                continue;
            }
            s += comp[c][dd] * dot(&sig[c * nk..(c + 1) * nk], &sig[dd * nk..(dd + 1) * nk]);
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn add_volume_field(
    cache: &mut LoadCache,
    mesh: &Arc<Mesh>,
    tables: &Arc<Tables>,
    dofs: &DofMap,
    sub: Subdomain,
    field: &SpaceTimeField<2>,
) {
    let n_u = dofs.n_u;
    match field {
        SpaceTimeField::Zero => {}
        SpaceTimeField::Separable(terms) => {
            for (a, f) in terms {
                let mut v = vec![0.0; cache.len];
                volume_load(mesh, tables, n_u, sub, &|p| f(p), &mut v);
                cache.terms.push((a.clone(), v));
            }
        }
        SpaceTimeField::General(g) => {
            let (mesh, tables, g) = (mesh.clone(), tables.clone(), g.clone());
            cache
                .general
                .push(Box::new(move |t: f64, out: &mut [f64]| volume_load(&mesh, &tables, n_u, sub, &|p| g(p, t), out)));
        }
    }
}

/// Adds `(f, v)_K` on velocity rows of every element of `sub`.
fn volume_load(mesh: &Mesh, tables: &Tables, n_u: usize, sub: Subdomain, f: &(dyn Fn(Point) -> [f64; 2] + Sync), out: &mut [f64]) {
    let nk1 = tables.nk1();
    let nq = tables.vol.len();
    out.par_chunks_mut(n_u).enumerate().for_each(|(e, chunk)| {
        if mesh.subdomain(e) != sub {
            return;
        }
        let map = mesh.affine(e);
        for q in 0..nq {
            let val = f(map.map(tables.vol.points[q]));
            let w = tables.vol.weights[q] * map.det;
            let psi = &tables.vol_u[q * nk1..(q + 1) * nk1];
            for a in 0..2 {
                let wa = w * val[a];
                if wa == 0.0 {
                    continue;
                }
                for i in 0..nk1 {
                    chunk[a * nk1 + i] += wa * psi[i];
                }
            }
        }
    });
}

fn add_facet_field(
    cache: &mut LoadCache,
    mesh: &Arc<Mesh>,
    tables: &Arc<Tables>,
    dofs: &DofMap,
    frames: &Arc<Vec<[[f64; 2]; 2]>>,
    field: FacetField,
    integrate: bool,
) {
    let FacetField { facets, value } = field;
    let facets = Arc::new(facets);
    let (n_hat, ne) = (dofs.n_hat, dofs.ne);
    let mask = match value {
        Component::Vector(_) => [true, true],
        Component::Scalar(_, 0) => [true, false],
        Component::Scalar(..) => [false, true],
    };
    let kernel = |space: SpaceKernel| -> Evaluator {
        let (mesh, tables, facets) = (mesh.clone(), tables.clone(), facets.clone());
        Box::new(move |_t, out: &mut [f64]| {
            facet_load(&mesh, &tables, n_hat, ne, &facets, mask, integrate, &*space, out)
        })
    };
    // time-independent spatial parts become fixed vectors
    let mut separable: Vec<(TimeFn, SpaceKernel)> = Vec::new();
    let mut general: Vec<Arc<dyn Fn(usize, Point, f64) -> [f64; 2] + Send + Sync>> = Vec::new();
    match value {
        Component::Vector(SpaceTimeField::Zero) | Component::Scalar(SpaceTimeField::Zero, _) => {}
        Component::Vector(SpaceTimeField::Separable(terms)) => {
            for (a, f) in terms {
                let fr = frames.clone();
                let k: SpaceKernel = Arc::new(move |facet: usize, p: Point| {
                    let v = f(p);
                    [dot2(fr[facet][0], v), dot2(fr[facet][1], v)]
                });
                separable.push((a, k));
            }
        }
        Component::Scalar(SpaceTimeField::Separable(terms), c) => {
            for (a, f) in terms {
                let k: SpaceKernel = Arc::new(move |_: usize, p: Point| {
                    let mut out = [0.0; 2];
                    out[c] = f(p)[0];
                    out
                });
                separable.push((a, k));
            }
        }
        Component::Vector(SpaceTimeField::General(g)) => {
            let fr = frames.clone();
            general.push(Arc::new(move |facet: usize, p: Point, t: f64| {
                let v = g(p, t);
                [dot2(fr[facet][0], v), dot2(fr[facet][1], v)]
            }));
        }
        Component::Scalar(SpaceTimeField::General(g), c) => {
            general.push(Arc::new(move |_: usize, p: Point, t: f64| {
                let mut out = [0.0; 2];
                out[c] = g(p, t)[0];
                out
            }));
        }
    }
    for (a, space) in separable {
        let mut v = vec![0.0; cache.len];
        kernel(space)(0.0, &mut v);
        cache.terms.push((a, v));
    }
    for g in general {
        let (mesh, tables, facets) = (mesh.clone(), tables.clone(), facets.clone());
        cache.general.push(Box::new(move |t, out: &mut [f64]| {
            let at_t = |facet: usize, p: Point| g(facet, p, t);
            facet_load(&mesh, &tables, n_hat, ne, &facets, mask, integrate, &at_t, out)
        }));
    }
}

/// Adds `<g, chi_m>_F` (with `integrate`, scaled by `|F|`) or the reference
/// projection coefficients of `g` (without) on the masked frame components.
#[allow(clippy::too_many_arguments)]
fn facet_load(
    mesh: &Mesh,
    tables: &Tables,
    n_hat: usize,
    ne: usize,
    facets: &[usize],
    mask: [bool; 2],
    integrate: bool,
    g: &dyn Fn(usize, Point) -> [f64; 2],
    out: &mut [f64],
) {
    for &f in facets {
        let scale = if integrate { mesh.facet_length(f) } else { 1.0 };
        for q in 0..tables.line.len() {
            let s = tables.line.points[q];
            let val = g(f, facet_point(mesh, f, s));
            let chi = &tables.edge_chi[0][q * ne..(q + 1) * ne];
            let w = tables.line.weights[q] * scale;
            for e in 0..2 {
                if !mask[e] || val[e] == 0.0 {
                    continue;
                }
                for m in 0..ne {
                    out[f * n_hat + e * ne + m] += w * val[e] * chi[m];
                }
            }
        }
    }
}

enum Backend {
    Condensed {
        shapes: Vec<CondensedShape>,
        matrix: CsrMatrix,
        direct: Option<DirectSolver>,
        iterative: Option<IterativeOptions>,
    },
    Monolithic {
        solver: DirectSolver,
    },
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    /// Scaled uncondensed residual, when checked.
    pub residual: Option<f64>,
}

/// Crank–Nicolson stepper with a factorization reused for all steps.
pub struct Stepper {
    disc: Arc<Discretization>,
    dt: f64,
    lhs: Weights,
    rhs: Weights,
    options: StepOptions,
    backend: Backend,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("dt", &self.dt).field("options", &self.options).finish()
    }
}

impl Stepper {
    pub fn new(disc: Arc<Discretization>, dt: f64, options: StepOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let beta = disc.materials().beta_s;
        let lhs = Weights::cn_implicit(dt, beta);
        let rhs = Weights::cn_explicit(dt, beta);
        let backend = match options.solver {
            LinearSolver::Monolithic => {
                let a = assemble_monolithic(disc.mesh(), &disc.dofs, &disc.ops, &lhs);
                Backend::Monolithic {
                    solver: DirectSolver::new(&a)?,
                }
            }
            LinearSolver::Direct | LinearSolver::Iterative(_) => {
                let shapes = condense(&disc.ops, &lhs)?;
                let matrix = assemble_schur(disc.mesh(), &disc.dofs, &disc.ops, &shapes);
                let (direct, iterative) = match options.solver {
                    LinearSolver::Iterative(o) => (None, Some(o)),
                    _ => (Some(DirectSolver::new(&matrix)?), None),
                };
                Backend::Condensed {
                    shapes,
                    matrix,
                    direct,
                    iterative,
                }
            }
        };
        Ok(Stepper {
            disc,
            dt,
            lhs,
            rhs,
            options,
            backend,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    /// Global trace matrix of the condensed path, if any.
    pub fn trace_matrix(&self) -> Option<&CsrMatrix> {
        match &self.backend {
            Backend::Condensed { matrix, .. } => Some(matrix),
            Backend::Monolithic { .. } => None,
        }
    }

    /// Advances `state` by one step; returns the scaled residual when checked.
    pub fn step(&self, state: &mut State) -> Result<Option<f64>> {
        let disc = &*self.disc;
        let d = &disc.dofs;
        let mesh = disc.mesh();
        let (t0, t1) = (state.t, state.t + self.dt);
        let beta = disc.materials().beta_s;
        let nl = d.n_local();
        let ni = d.n_interior;
        let nt = nl - ni;
        let sources = disc.sources.mean(t0, t1);
        let loads = disc.trace_loads.mean(t0, t1);
        let fixed = disc.dirichlet.at(t1);
        let any_fixed = d.fixed.iter().any(|&i| fixed[i] != 0.0);

        // right-hand side per element, before and after eliminating the new boundary data
        let rhs: Vec<(Vec<f64>, Vec<f64>)> = (0..d.n_elements)
            .into_par_iter()
            .map(|e| {
                let op = disc.ops.of(e);
                let mut x = vec![0.0; nl];
                disc.gather(state, e, &mut x);
                let mut f = vec![0.0; nl];
                op.apply(&self.rhs, &x, &mut f);
                let src = &sources[e * d.n_u..(e + 1) * d.n_u];
                for (fi, s) in f[d.n_sigma..ni].iter_mut().zip(src) {
                    *fi += s;
                }
                if beta != 0.0 && op.subdomain == Subdomain::Solid {
                    let scale = beta * op.det;
                    for (fi, dd) in f[d.n_sigma..ni].iter_mut().zip(state.displacement_of(d, e)) {
                        *fi -= scale * dd;
                    }
                }
                let mut g = f.clone();
                if any_fixed {
                    let mut xf = vec![0.0; nl];
                    let mut touched = false;
                    for (i, fc) in mesh.element_facets(e).into_iter().enumerate() {
                        for l in 0..d.n_hat {
                            let gd = fc * d.n_hat + l;
                            if !d.is_free(gd) && fixed[gd] != 0.0 {
                                xf[ni + i * d.n_hat + l] = fixed[gd];
                                touched = true;
                            }
                        }
                    }
                    if touched {
                        let mut ax = vec![0.0; nl];
                        op.apply(&self.lhs, &xf, &mut ax);
                        g.iter_mut().zip(&ax).for_each(|(a, b)| *a -= b);
                    }
                }
                (f, g)
            })
            .collect();

        let mut new_trace = vec![0.0; d.n_trace()];
        let mut interior = vec![0.0; d.n_elements * ni];
        match &self.backend {
            Backend::Condensed {
                shapes,
                matrix,
                direct,
                iterative,
            } => {
                let w: Vec<(Vec<f64>, Vec<f64>)> = rhs
                    .par_iter()
                    .enumerate()
                    .map(|(e, (_, g))| {
                        let s = &shapes[disc.ops.shape_of[e]];
                        let gi = &g[..ni];
                        let w: Vec<f64> = (0..ni).map(|r| dot(&s.ainv[r * ni..(r + 1) * ni], gi)).collect();
                        let zt: Vec<f64> = (0..nt).map(|r| g[ni + r] - dot(&s.z[r * ni..(r + 1) * ni], gi)).collect();
                        (w, zt)
                    })
                    .collect();
                let mut b = vec![0.0; d.n_free()];
                for (i, &gd) in d.free.iter().enumerate() {
                    b[i] = loads[gd];
                }
                for e in 0..d.n_elements {
                    for (l, gd) in local_trace_dofs(mesh, d, e).into_iter().enumerate() {
                        let fi = d.free_index[gd];
                        if fi != usize::MAX {
                            b[fi] += w[e].1[l];
                        }
                    }
                }
                let xf = match (direct, iterative) {
                    (Some(lu), _) => lu.solve(&b)?,
                    (None, Some(o)) => solve_iterative(matrix, &b, o)?,
                    (None, None) => unreachable!(),
                };
                for (i, &gd) in d.free.iter().enumerate() {
                    new_trace[gd] = xf[i];
                }
                interior.par_chunks_mut(ni).enumerate().for_each(|(e, out)| {
                    let s = &shapes[disc.ops.shape_of[e]];
                    let xt: Vec<f64> = local_trace_dofs(mesh, d, e).into_iter().map(|gd| new_trace[gd]).collect();
                    for r in 0..ni {
                        out[r] = w[e].0[r] - dot(&s.y[r * nt..(r + 1) * nt], &xt);
                    }
                });
            }
            Backend::Monolithic { solver } => {
                let offset = d.n_elements * ni;
                let mut b = vec![0.0; offset + d.n_free()];
                for (i, &gd) in d.free.iter().enumerate() {
                    b[offset + i] = loads[gd];
                }
                for (e, (_, g)) in rhs.iter().enumerate() {
                    b[e * ni..(e + 1) * ni].copy_from_slice(&g[..ni]);
                    for (l, gd) in local_trace_dofs(mesh, d, e).into_iter().enumerate() {
                        let fi = d.free_index[gd];
                        if fi != usize::MAX {
                            b[offset + fi] += g[ni + l];
                        }
                    }
                }
                let x = solver.solve(&b)?;
                interior.copy_from_slice(&x[..offset]);
                for (i, &gd) in d.free.iter().enumerate() {
                    new_trace[gd] = x[offset + i];
                }
            }
        }
        for &gd in &d.fixed {
            new_trace[gd] = fixed[gd];
        }

        let old_u = std::mem::take(&mut state.u);
        let mut new_u = vec![0.0; old_u.len()];
        for e in 0..d.n_elements {
            let x = &interior[e * ni..(e + 1) * ni];
            state.sigma[e * d.n_sigma..(e + 1) * d.n_sigma].copy_from_slice(&x[..d.n_sigma]);
            new_u[e * d.n_u..(e + 1) * d.n_u].copy_from_slice(&x[d.n_sigma..]);
            if mesh.subdomain(e) == Subdomain::Solid {
                let r = e * d.n_u..(e + 1) * d.n_u;
                for ((dd, a), b) in state.displacement[r.clone()].iter_mut().zip(&old_u[r.clone()]).zip(&new_u[r]) {
                    *dd += 0.5 * self.dt * (a + b);
                }
            }
        }
        state.u = new_u;
        state.trace = new_trace;
        state.t = t1;

        match self.options.residual_check {
            None => Ok(None),
            Some(tol) => {
                let r = self.residual(state, &rhs, &loads);
                if r > tol {
                    return Err(Error::StepResidual {
                        residual: r,
                        tolerance: tol,
                        time: t1,
                    });
                }
                Ok(Some(r))
            }
        }
    }

    /// `max |A x - f| / max (|A| |x| + |f|)` over all uncondensed rows.
    fn residual(&self, state: &State, rhs: &[(Vec<f64>, Vec<f64>)], loads: &[f64]) -> f64 {
        let disc = &*self.disc;
        let d = &disc.dofs;
        let mesh = disc.mesh();
        let nl = d.n_local();
        let ni = d.n_interior;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let mut trace_r = vec![0.0; d.n_trace()];
        let mut trace_s = vec![0.0; d.n_trace()];
        for &gd in &d.free {
            trace_r[gd] = -loads[gd];
            trace_s[gd] = loads[gd].abs();
        }
        let mut x = vec![0.0; nl];
        let mut ax = vec![0.0; nl];
        let mut aax = vec![0.0; nl];
        for e in 0..d.n_elements {
            let op = disc.ops.of(e);
            disc.gather(state, e, &mut x);
            op.apply(&self.lhs, &x, &mut ax);
            op.apply_abs(&self.lhs, &x, &mut aax);
            let f = &rhs[e].0;
            for r in 0..ni {
                worst = worst.max((ax[r] - f[r]).abs());
                scale = scale.max(aax[r] + f[r].abs());
            }
            for (l, gd) in local_trace_dofs(mesh, d, e).into_iter().enumerate() {
                trace_r[gd] += ax[ni + l] - f[ni + l];
                trace_s[gd] += aax[ni + l] + f[ni + l].abs();
            }
        }
        for &gd in &d.free {
            worst = worst.max(trace_r[gd].abs());
            scale = scale.max(trace_s[gd]);
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Advances `steps` times, calling `observer` after each step.
    pub fn run(
        &self,
        state: &mut State,
        steps: usize,
        mut observer: impl FnMut(&State, &StepReport) -> Result<()>,
    ) -> Result<()> {
        for n in 1..=steps {
            let residual = self.step(state)?;
            observer(
                state,
                &StepReport {
                    step: n,
                    t: state.t,
                    residual,
                },
            )?;
        }
        Ok(())
    }
}

/// Energy log row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// `E^n + sum_{m<n} D^m`, constant for unforced problems.
    pub cumulative: f64,
}

/// Runs `steps` steps recording energy and dissipation.
pub fn run_with_energy(stepper: &Stepper, state: &mut State, steps: usize) -> Result<Vec<EnergyRow>> {
    let disc = stepper.discretization().clone();
    let e0 = disc.energy(state);
    let mut rows = vec![EnergyRow {
        n: 0,
        t: state.t,
        energy: e0,
        dissipation: 0.0,
        cumulative: e0,
    }];
    let mut dsum = 0.0;
    for n in 1..=steps {
        let prev = state.clone();
        stepper.step(state)?;
        let dn = disc.dissipation(&prev, state);
        dsum += dn;
        let en = disc.energy(state);
        rows.push(EnergyRow {
            n,
            t: state.t,
            energy: en,
            dissipation: dn,
            cumulative: en + dsum,
        });
    }
    Ok(rows)
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut s = String::from("n,t,E,D,E_cumulative_check\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.n, r.t, r.energy, r.dissipation, r.cumulative));
    }
    s
}

/// Evaluates a stress expansion at a reference point.
pub fn stress_at(tables: &Tables, coeffs: &[f64], xi: [f64; 2]) -> SymTensor {
    crate::projection::eval_element(&tables.stress, coeffs, xi)
}
