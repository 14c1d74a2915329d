//! Quadrature rules and the orthonormal triangle basis.
//!
//! `cargo run --example quadrature_basis`

use hdg_fsi::basis::{dim_p, TriangleBasis};
use hdg_fsi::quadrature;

fn main() -> hdg_fsi::Result<()> {
    for degree in [2, 6, 12, 20] {
        let rule = quadrature::triangle(degree)?;
        // integral of x^a y^b over the reference triangle is a! b! / (a + b + 2)!
        let (a, b) = (degree / 2, degree - degree / 2);
        let approx: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
        let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
        let exact = fact(a) * fact(b) / fact(a + b + 2);
        println!("degree {degree:2}: {:3} points, x^{a} y^{b} error {:.1e}", rule.len(), (approx - exact).abs());
    }

    let m = 3;
    let basis = TriangleBasis::new(m);
    let rule = quadrature::triangle(2 * m)?;
    let mut worst: f64 = 0.0;
    for i in 0..dim_p(m) {
        for j in 0..dim_p(m) {
            let g: f64 = rule.points.iter().zip(&rule.weights).map(|(&p, w)| {
                let v = basis.eval(p);
                w * v[i] * v[j]
            }).sum();
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    println!("P_{m}: {} functions, Gram matrix differs from identity by {worst:.1e}", basis.len());
    Ok(())
}
