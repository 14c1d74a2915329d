//! Element operators and the condensed trace system.
//!
//! `cargo run --example static_condensation`

use hdg_fsi::assembly::{LocalOperators, Weights, Fault};
use hdg_fsi::benchmarks::PolynomialCase;
use hdg_fsi::condense::{assemble_monolithic, assemble_schur, condense};
use hdg_fsi::dofs::{DofMap, Tables};

fn main() -> hdg_fsi::Result<()> {
    let case = PolynomialCase::new(1);
    let problem = case.problem(4)?;
    for k in 0..=3 {
        let dofs = DofMap::new(&problem.mesh, k, &problem.bcs)?;
        let tables = Tables::new(k)?;
        let ops = LocalOperators::build(&problem.mesh, &dofs, &tables, &problem.materials, Fault::None);
        let w = Weights::cn_implicit(0.01, problem.materials.beta_s);
        let shapes = condense(&ops, &w)?;
        let schur = assemble_schur(&problem.mesh, &dofs, &ops, &shapes);
        let full = assemble_monolithic(&problem.mesh, &dofs, &ops, &w);
        println!(
            "k={k}: {} element shapes, trace system {} x {} ({} nonzeros), full system {} unknowns",
            shapes.len(),
            dofs.n_free(),
            dofs.n_free(),
            schur.nnz(),
            full.n_rows
        );
    }
    Ok(())
}
