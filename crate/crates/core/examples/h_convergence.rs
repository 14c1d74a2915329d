//! Spatial convergence on the smooth manufactured solution.
//!
//! `cargo run --release --example h_convergence -- 1 4,8,16`

use hdg_fsi::benchmarks::{Example1, ParameterSet};
use hdg_fsi::reporting::{measure, to_markdown, Refinement};
use hdg_fsi::time::StepOptions;

fn main() -> hdg_fsi::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let k: usize = args.get(1).map_or(1, |s| s.parse().expect("degree"));
    let ns: Vec<usize> = args.get(2).map_or(vec![4, 8, 16], |s| s.split(',').map(|v| v.parse().expect("n")).collect());
    let ex = Example1::new(ParameterSet::L1);
    let t_final = 0.3;
    let mut records = Vec::new();
    for n in ns {
        let h = 1.0 / n as f64;
        let steps = (t_final / (0.1 * h.powf((k as f64 + 2.0) / 2.0))).ceil() as usize;
        let rec = measure(ex.problem(n)?, &ex, k, h, t_final / steps as f64, steps, StepOptions::default())?;
        records.push(rec);
    }
    print!("{}", to_markdown(&records, Refinement::Space));
    Ok(())
}
