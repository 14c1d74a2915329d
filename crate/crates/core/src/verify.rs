//! Property suites run by `hdg-fsi verify` and by the test suite.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::Fault;
use crate::basis::TriangleBasis;
use crate::benchmarks::{ParameterSet, PolynomialCase};
use crate::dofs::{BoundaryCondition, Tables};
use crate::error::Result;
use crate::field::SpaceTimeField;
use crate::materials::MaterialSet;
use crate::mesh::{generate_structured, Mesh, Point, Rect};
use crate::projection::{element_error_sq, project_element};
use crate::quadrature;
use crate::reporting::{compute_errors, linear_fit};
use crate::time::{run_with_energy, Discretization, LinearSolver, Problem, StepOptions, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub lines: Vec<String>,
}

impl SuiteOutcome {
    fn new(name: &'static str) -> Self {
        SuiteOutcome {
            name,
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn fail(&mut self, line: String) {
        self.check(false, line);
    }
}

/// Unit square, solid above `y = 1/2`, with homogeneous velocity on top,
/// zero traction at the bottom and slip walls on the sides.
pub fn unforced_problem(n: usize, materials: MaterialSet) -> Result<Problem> {
    let mesh = generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n, Some(0.5))?.classify_facets(&[
        ("bottom", &|p: Point| p[1] < 1e-12),
        ("top", &|p: Point| p[1] > 1.0 - 1e-12),
        ("sides", &|p: Point| p[1] > 1e-12 && p[1] < 1.0 - 1e-12),
    ])?;
    Ok(Problem {
        mesh: Arc::new(mesh),
        materials,
        source_fluid: SpaceTimeField::Zero,
        source_solid: SpaceTimeField::Zero,
        interface: SpaceTimeField::Zero,
        bcs: vec![
            ("bottom".into(), BoundaryCondition::Traction(SpaceTimeField::Zero)),
            ("top".into(), BoundaryCondition::homogeneous_velocity()),
            (
                "sides".into(),
                BoundaryCondition::NormalVelocity {
                    velocity: SpaceTimeField::Zero,
                    tangential_stress: SpaceTimeField::Zero,
                },
            ),
        ],
    })
}

fn unit_square(n: usize) -> Result<Mesh> {
    generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n, Some(0.5))
}

/// Largest `|E^n + sum D - E^0| / E^0` over `steps` steps from a random state.
pub fn energy_defect(n: usize, k: usize, dt: f64, steps: usize, seed: u64, fault: Fault) -> Result<f64> {
    let mut m = ParameterSet::L1.materials();
    m.lambda_f = 1e3;
    let disc = Discretization::with_fault(unforced_problem(n, m)?, k, fault)?;
    let stepper = Stepper::new(disc.clone(), dt, StepOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = disc.random_state(&mut rng);
    let rows = run_with_energy(&stepper, &mut state, steps)?;
    let e0 = rows[0].energy;
    Ok(rows.iter().map(|r| ((r.cumulative - e0) / e0).abs()).fold(0.0, f64::max))
}

pub fn energy_suite(fault: Fault) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("energy");
    for k in 0..=2 {
        match energy_defect(8, k, 0.01, 50, 17 + k as u64, fault) {
            Ok(d) => out.check(d <= 1e-9, format!("k={k} h=1/8 50 steps: relative defect {d:.2e}")),
            Err(e) => out.fail(format!("k={k}: {e}")),
        }
    }
    out
}

/// Largest `(e_sigma, e_u)` over `steps` steps of the polynomial case.
pub fn exactness_errors(k: usize, n: usize, dt: f64, steps: usize, fault: Fault) -> Result<(f64, f64)> {
    let case = PolynomialCase::new(k);
    let disc = Discretization::with_fault(case.problem(n)?, k, fault)?;
    let options = StepOptions {
        solver: LinearSolver::Direct,
        residual_check: None,
    };
    let stepper = Stepper::new(disc.clone(), dt, options)?;
    let mut state = disc.initialize_consistent(&case, 0.0)?;
    let (mut es, mut eu, _) = compute_errors(&disc, &state, &case, 0.0)?;
    for _ in 0..steps {
        stepper.step(&mut state)?;
        let (a, b, _) = compute_errors(&disc, &state, &case, state.t)?;
        es = es.max(a);
        eu = eu.max(b);
    }
    Ok((es, eu))
}

pub fn exactness_suite(fault: Fault) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("exactness");
    for k in 0..=2 {
        for n in [2, 4] {
            match exactness_errors(k, n, 0.1, 4, fault) {
                Ok((es, eu)) => out.check(
                    es <= 1e-9 && eu <= 1e-9,
                    format!("k={k} h=1/{n}: e_sigma {es:.2e}, e_u {eu:.2e}"),
                ),
                Err(e) => out.fail(format!("k={k} h=1/{n}: {e}")),
            }
        }
    }
    out
}

/// Largest ratio `‖(h_F^{1/2}/(k+1)) tau n‖_{∂T_h} / ‖tau‖_H` over `samples`
/// random discrete stress fields.
pub fn trace_ratio(n: usize, k: usize, samples: usize, seed: u64) -> Result<f64> {
    let mesh = unit_square(n)?;
    let tables = Tables::new(k)?;
    let materials = ParameterSet::L1.materials();
    let nk = tables.nk();
    let nq = tables.line.len();
    // per element: compliance and the boundary Gram matrix of `B_c phi_j n`
    let mut boundary = Vec::with_capacity(mesh.num_elements());
    let mut compliance = Vec::with_capacity(mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let n3 = 3 * nk;
        let mut g = vec![0.0; n3 * n3];
        for (edge, f) in mesh.element_facets(e).into_iter().enumerate() {
            let len = mesh.facet_length(f);
            let scale = len / ((k + 1) * (k + 1)) as f64 * len;
            let nrm = mesh.outward_normal(e, edge);
            for q in 0..nq {
                let phi = &tables.edge_sigma[edge][q * nk..(q + 1) * nk];
                let w = tables.line.weights[q] * scale;
                // columns of the map coefficients -> tau n
                let mut cols = vec![[0.0; 2]; n3];
                for j in 0..nk {
                    cols[j] = [phi[j] * nrm[0], 0.0];
                    cols[nk + j] = [0.0, phi[j] * nrm[1]];
                    cols[2 * nk + j] = [phi[j] * nrm[1], phi[j] * nrm[0]];
                }
                for r in 0..n3 {
                    for c in 0..n3 {
                        g[r * n3 + c] += w * (cols[r][0] * cols[c][0] + cols[r][1] * cols[c][1]);
                    }
                }
            }
        }
        boundary.push(g);
        compliance.push((mesh.affine(e).det, materials.lame(mesh.subdomain(e)).compliance_matrix()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n3 = 3 * nk;
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; n3];
    for _ in 0..samples {
        let (mut num, mut den) = (0.0, 0.0);
        for e in 0..mesh.num_elements() {
            x.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            let g = &boundary[e];
            for r in 0..n3 {
                num += x[r] * g[r * n3..(r + 1) * n3].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            }
            let (det, a) = compliance[e];
            for c in 0..3 {
                for d in 0..3 {
                    if a[c][d] != 0.0 {
                        den += det * a[c][d] * (0..nk).map(|j| x[c * nk + j] * x[d * nk + j]).sum::<f64>();
                    }
                }
            }
        }
        worst = worst.max((num / den).sqrt());
    }
    Ok(worst)
}

pub const TRACE_MESHES: [usize; 4] = [4, 8, 16, 32];

pub fn trace_inequality_suite(max_k: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("trace-inequality");
    for k in 0..=max_k {
        let ratios: Result<Vec<f64>> = TRACE_MESHES
            .iter()
            .map(|&n| trace_ratio(n, k, 200, 100 + n as u64))
            .collect();
        match ratios {
            Ok(r) => {
                let growth = r.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                out.check(
                    growth < 1.1 && r.iter().all(|v| v.is_finite()),
                    format!("k={k}: max ratios {r:.3?}, largest growth under halving {growth:.3}"),
                );
            }
            Err(e) => out.fail(format!("k={k}: {e}")),
        }
    }
    out
}

/// `L²` projection error and the scaled facet error
/// `(sum_K sum_F h_F ‖f - Pi f‖²_F)^{1/2}` of `sin(pi x) sin(pi y)` onto `P_m`.
pub fn projection_errors(n: usize, m: usize) -> Result<(f64, f64)> {
    let mesh = unit_square(n)?;
    let basis = TriangleBasis::new(m);
    let rule = quadrature::triangle(2 * (m + 3))?;
    let line = quadrature::line(2 * (m + 3))?;
    let f = |p: Point| [(std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin()];
    let (mut vol, mut face) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let c = project_element(&mesh, e, &basis, &rule, f);
        vol += element_error_sq(&mesh, e, &basis, &rule, &c, f);
        let map = mesh.affine(e);
        for (edge, fc) in mesh.element_facets(e).into_iter().enumerate() {
            let len = mesh.facet_length(fc);
            for (&s, w) in line.points.iter().zip(&line.weights) {
                let xi = crate::basis::reference_edge_point(edge, s);
                let fh: [f64; 1] = crate::projection::eval_element(&basis, &c, xi);
                face += len * w * len * (f(map.map(xi))[0] - fh[0]).powi(2);
            }
        }
    }
    Ok((vol.sqrt(), face.sqrt()))
}

pub fn projection_suite(max_m: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("projection-rate");
    for m in 0..=max_m {
        let errs: Result<Vec<(f64, f64)>> = TRACE_MESHES.iter().map(|&n| projection_errors(n, m)).collect();
        match errs {
            Ok(errs) => {
                let lh: Vec<f64> = TRACE_MESHES.iter().map(|&n| (1.0 / n as f64).ln()).collect();
                let (sv, _) = linear_fit(&lh, &errs.iter().map(|e| e.0.ln()).collect::<Vec<_>>());
                let (sf, _) = linear_fit(&lh, &errs.iter().map(|e| e.1.ln()).collect::<Vec<_>>());
                let target = (m + 1) as f64;
                out.check(
                    (sv - target).abs() <= 0.2 && (sf - target).abs() <= 0.2,
                    format!("m={m}: volume slope {sv:.3}, facet slope {sf:.3}, expected {target}"),
                );
            }
            Err(e) => out.fail(format!("m={m}: {e}")),
        }
    }
    out
}

/// All suites, with an optional deliberate defect in the element operators.
pub fn run_all(fault: Fault) -> Vec<SuiteOutcome> {
    vec![
        energy_suite(fault),
        exactness_suite(fault),
        trace_inequality_suite(4),
        projection_suite(4),
    ]
}
