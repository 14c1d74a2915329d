//! Discrete energy identity from a random start.
//!
//! `cargo run --release --example energy_balance`

use hdg_fsi::benchmarks::ParameterSet;
use hdg_fsi::time::{energy_csv, run_with_energy, Discretization, StepOptions, Stepper};
use hdg_fsi::verify::unforced_problem;
use rand::SeedableRng;

fn main() -> hdg_fsi::Result<()> {
    let mut materials = ParameterSet::L1.materials();
    materials.lambda_f = 1e3;
    let disc = Discretization::new(unforced_problem(8, materials)?, 1)?;
    let stepper = Stepper::new(disc.clone(), 0.01, StepOptions::default())?;
    let mut state = disc.random_state(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
    let rows = run_with_energy(&stepper, &mut state, 50)?;
    let csv = energy_csv(&rows);
    for line in csv.lines().step_by(10) {
        println!("{line}");
    }
    let e0 = rows[0].energy;
    let drift = rows.iter().map(|r| ((r.cumulative - e0) / e0).abs()).fold(0.0, f64::max);
    println!("energy fell from {e0:.4} to {:.4}; E + sum D drifts by {drift:.1e}", rows.last().unwrap().energy);
    Ok(())
}
