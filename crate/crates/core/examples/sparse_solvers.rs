//! Direct and Krylov solves of a condensed trace system.
//!
//! `cargo run --release --example sparse_solvers`

use hdg_fsi::benchmarks::{Example1, ParameterSet};
use hdg_fsi::sparse::{relative_residual, solve_direct, solve_iterative, IterativeOptions, Preconditioner};
use hdg_fsi::time::{Discretization, StepOptions, Stepper};

fn main() -> hdg_fsi::Result<()> {
    let ex = Example1::new(ParameterSet::L1);
    let disc = Discretization::new(ex.problem(8)?, 2)?;
    let stepper = Stepper::new(disc, 1e-3, StepOptions::default())?;
    let a = stepper.trace_matrix().expect("condensed solver keeps its matrix");
    let b: Vec<f64> = (0..a.n_rows).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();

    let t = std::time::Instant::now();
    let x = solve_direct(a, &b)?;
    println!("direct LU: residual {:.1e} in {:.2?}", relative_residual(a, &x, &b), t.elapsed());

    for pre in [Preconditioner::Jacobi, Preconditioner::Ilu0] {
        let opts = IterativeOptions {
            tol: 1e-10,
            preconditioner: pre,
            ..IterativeOptions::default()
        };
        let t = std::time::Instant::now();
        match solve_iterative(a, &b, &opts) {
            Ok(y) => {
                let diff = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                println!("GMRES {pre:?}: residual {:.1e}, differs from LU by {diff:.1e} in {:.2?}", relative_residual(a, &y, &b), t.elapsed());
            }
            Err(e) => println!("GMRES {pre:?}: {e}"),
        }
    }
    Ok(())
}
