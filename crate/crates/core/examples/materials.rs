//! Compliance tensors and the penalty pressure.
//!
//! `cargo run --example materials`

use hdg_fsi::benchmarks::ParameterSet;
use hdg_fsi::materials::ddot;

fn main() {
    let m = ParameterSet::L2.materials();
    let strain = [1e-3, -2e-3, 5e-4];
    for (name, lame) in [("solid", m.solid()), ("fluid", m.fluid())] {
        let sigma = lame.apply_c(strain);
        let back = lame.apply_a(sigma);
        println!(
            "{name}: sigma = [{:.3e}, {:.3e}, {:.3e}], |A C eps - eps| = {:.1e}, energy density {:.3e}",
            sigma[0],
            sigma[1],
            sigma[2],
            (0..3).map(|i| (back[i] - strain[i]).abs()).fold(0.0, f64::max),
            0.5 * ddot(sigma, strain)
        );
    }
    for lambda_f in [1e2, 1e4, 1e6] {
        let mut mm = m;
        mm.lambda_f = lambda_f;
        let sigma = mm.fluid().apply_c(strain);
        println!("lambda_f = {lambda_f:.0e}: pressure {:.4e}", mm.pressure(sigma));
    }
}
