//! Channel driven by an inflow pressure pulse, sampled along probe lines.
//!
//! `cargo run --release --example pressure_pulse`

use hdg_fsi::cli::sample_probes;
use hdg_fsi::benchmarks::Example2;
use hdg_fsi::benchmarks::ZeroSolution;
use hdg_fsi::config::Probe;
use hdg_fsi::time::{Discretization, StepOptions, Stepper};

fn main() -> hdg_fsi::Result<()> {
    let ex = Example2::new(1e6);
    let disc = Discretization::new(ex.problem(1)?, 1)?;
    let stepper = Stepper::new(disc.clone(), 1e-4, StepOptions::default())?;
    let mut state = disc.initialize_consistent(&ZeroSolution, 0.0)?;
    for target in [0.003, 0.006, 0.012] {
        while state.t < target - 1e-12 {
            stepper.step(&mut state)?;
        }
        let lines = sample_probes(&disc, &state, &[Probe::Flow, Probe::Displacement], 13)?;
        let peak = |i: usize| {
            let l = &lines[i];
            let j = (0..l.values.len()).max_by(|&a, &b| l.values[a].abs().total_cmp(&l.values[b].abs())).unwrap();
            (l.x[j], l.values[j])
        };
        let (xf, qf) = peak(0);
        let (xd, qd) = peak(1);
        println!("t = {target}: flow peak {qf:.3e} at x = {xf:.2}, wall displacement peak {qd:.3e} at x = {xd:.2}");
    }
    Ok(())
}
