use std::sync::Arc;

use hdg_fsi::benchmarks::{Example1, ExactSolution, ParameterSet, PolynomialCase, ZeroSolution};
use hdg_fsi::dofs::BoundaryCondition;
use hdg_fsi::field::SpaceTimeField;
use hdg_fsi::materials::MaterialSet;
use hdg_fsi::mesh::{generate_structured, Point, Rect};
use hdg_fsi::time::{run_with_energy, Discretization, LinearSolver, Problem, State, StepOptions, Stepper};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn checked(solver: LinearSolver) -> StepOptions {
    StepOptions {
        solver,
        residual_check: Some(1e-10),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn state_diff(a: &State, b: &State) -> f64 {
    max_diff(&a.sigma, &b.sigma)
        .max(max_diff(&a.u, &b.u))
        .max(max_diff(&a.trace, &b.trace))
}

/// Unit square, solid on top, mixed homogeneous conditions.
fn unforced(n: usize, materials: MaterialSet) -> Problem {
    let mesh = generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n, Some(0.5))
        .unwrap()
        .classify_facets(&[
            ("bottom", &|p: Point| p[1] < 1e-12),
            ("top", &|p: Point| p[1] > 1.0 - 1e-12),
            ("sides", &|p: Point| p[1] > 1e-12 && p[1] < 1.0 - 1e-12),
        ])
        .unwrap();
    let zero = || SpaceTimeField::<1>::Zero;
    Problem {
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
                    velocity: zero(),
                    tangential_stress: zero(),
                },
            ),
        ],
    }
}

fn materials() -> MaterialSet {
    MaterialSet {
        rho_s: 1.3,
        mu_s: 2.0,
        lambda_s: 3.0,
        beta_s: 0.0,
        rho_f: 0.9,
        mu_f: 0.7,
        lambda_f: 50.0,
    }
}

#[test]
fn energy_balance_with_random_start() {
    for k in 0..=2 {
        let disc = Discretization::new(unforced(4, materials()), k).unwrap();
        let stepper = Stepper::new(disc.clone(), 0.05, checked(LinearSolver::Direct)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mut state = disc.random_state(&mut rng);
        let rows = run_with_energy(&stepper, &mut state, 20).unwrap();
        let e0 = rows[0].energy;
        for r in &rows {
            assert!(((r.cumulative - e0) / e0).abs() < 1e-10, "k={k} n={} {} vs {e0}", r.n, r.cumulative);
        }
        assert!(rows.last().unwrap().energy < e0);
    }
}

#[test]
fn spring_energy_balance() {
    let mut m = materials();
    m.beta_s = 40.0;
    let disc = Discretization::new(unforced(4, m), 1).unwrap();
    let stepper = Stepper::new(disc.clone(), 0.02, checked(LinearSolver::Direct)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut state = disc.random_state(&mut rng);
    let rows = run_with_energy(&stepper, &mut state, 20).unwrap();
    let e0 = rows[0].energy;
    assert!(state.displacement.iter().any(|&v| v != 0.0));
    for r in &rows {
        assert!(((r.cumulative - e0) / e0).abs() < 1e-10);
    }
}

#[test]
fn polynomial_solution_is_reproduced() {
    for k in 0..=2 {
        let case = PolynomialCase::new(k);
        let disc = Discretization::new(case.problem(2).unwrap(), k).unwrap();
        let stepper = Stepper::new(disc.clone(), 0.1, checked(LinearSolver::Direct)).unwrap();
        let mut state = disc.initialize_consistent(&case, 0.0).unwrap();
        let projected = disc.project(&case, 0.0);
        assert!(state_diff(&state, &projected) < 1e-10, "k={k} init {}", state_diff(&state, &projected));
        for _ in 0..5 {
            stepper.step(&mut state).unwrap();
            let exact = disc.project(&case, state.t);
            let d = state_diff(&state, &exact);
            assert!(d < 1e-9, "k={k} t={} diff {d}", state.t);
        }
    }
}

#[test]
fn condensed_and_monolithic_agree() {
    let ex = Example1::new(ParameterSet::L1);
    for k in 0..=2 {
        let disc = Discretization::new(ex.problem(2).unwrap(), k).unwrap();
        let a = Stepper::new(disc.clone(), 0.01, checked(LinearSolver::Direct)).unwrap();
        let b = Stepper::new(disc.clone(), 0.01, checked(LinearSolver::Monolithic)).unwrap();
        let mut sa = disc.initialize_consistent(&ex, 0.0).unwrap();
        let mut sb = sa.clone();
        for _ in 0..3 {
            a.step(&mut sa).unwrap();
            b.step(&mut sb).unwrap();
        }
        let scale = sa.sigma.iter().chain(&sa.u).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(state_diff(&sa, &sb) <= 1e-10 * scale.max(1.0), "k={k}");
    }
}

#[test]
fn zero_problem_stays_zero() {
    let case = PolynomialCase {
        amplitude: 0.0,
        ..PolynomialCase::new(1)
    };
    let disc = Discretization::new(case.problem(2).unwrap(), 1).unwrap();
    let stepper = Stepper::new(disc.clone(), 0.1, StepOptions::default()).unwrap();
    let mut state = disc.initialize_consistent(&ZeroSolution, 0.0).unwrap();
    stepper.run(&mut state, 3, |_, _| Ok(())).unwrap();
    assert!(state.sigma.iter().chain(&state.u).chain(&state.trace).all(|&v| v == 0.0));
    assert!((state.t - 0.3).abs() < 1e-15);
}

#[test]
fn example1_starts_from_rest() {
    let ex = Example1::new(ParameterSet::L1);
    let disc = Discretization::new(ex.problem(2).unwrap(), 1).unwrap();
    let s = disc.initialize_consistent(&ex, 0.0).unwrap();
    assert!(s.sigma.iter().chain(&s.u).chain(&s.trace).all(|&v| v.abs() < 1e-14));
    let _ = ex.velocity([0.5, 0.0], 0.0);
}
