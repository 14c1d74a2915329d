//! Quadrature on the reference interval `[0, 1]` and the reference triangle
//! with vertices `(0,0)`, `(1,0)`, `(0,1)`.

use crate::error::{Error, Result};

/// Highest polynomial degree the rules below are generated for.
pub const MAX_DEGREE: usize = 60;

#[derive(Debug, Clone)]
pub struct LineRule {
    /// Nodes in `[0, 1]`.
    pub points: Vec<f64>,
    /// Weights summing to 1.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    /// Weights summing to 1/2, the reference area.
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn line(degree: usize) -> Result<LineRule> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree {
            requested: degree,
            max: MAX_DEGREE,
        });
    }
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    Ok(LineRule {
        points: x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
    })
}

/// Rule on the reference triangle exact for polynomials of total degree `degree`.
pub fn triangle(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree {
            requested: degree,
            max: MAX_DEGREE,
        });
    }
    match degree {
        0 | 1 => Ok(TriangleRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
        }),
        2 => Ok(TriangleRule {
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 6.0; 3],
        }),
        _ => Ok(collapsed(degree)),
    }
}

/// Duffy transform of a tensor Gauss rule. The Jacobian factor `(1 - eta)`
/// adds one degree in `eta`, which the extra point covers.
fn collapsed(degree: usize) -> TriangleRule {
    let n = (degree + 1) / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let s: Vec<f64> = x.iter().map(|&t| 0.5 * (t + 1.0)).collect();
    let ws: Vec<f64> = w.iter().map(|&v| 0.5 * v).collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, &eta) in s.iter().enumerate() {
        for (i, &xi) in s.iter().enumerate() {
            points.push([xi * (1.0 - eta), eta]);
            weights.push(ws[i] * ws[j] * (1.0 - eta));
        }
    }
    TriangleRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn monomial_integral(a: usize, b: usize) -> f64 {
        let mut r = 1.0;
        // a! b! / (a+b+2)! computed as a product to avoid overflow
        for i in 1..=b {
            r *= i as f64 / (a + i) as f64;
        }
        r / ((a + b + 1) * (a + b + 2)) as f64
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        for degree in 0..=24 {
            let rule = triangle(degree).unwrap();
            for a in 0..=degree {
                for b in 0..=degree - a {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!((q - exact).abs() <= 1e-14 * exact.max(1e-3), "deg {degree} x^{a} y^{b}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn monomial_formula_spot_values() {
        assert_eq!(monomial_integral(0, 0), 0.5);
        assert!((monomial_integral(1, 0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((monomial_integral(1, 1) - 1.0 / 24.0).abs() < 1e-16);
        assert!((monomial_integral(2, 0) - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn line_rules_integrate_monomials() {
        for degree in 0..=MAX_DEGREE {
            let rule = line(degree).unwrap();
            for p in 0..=degree.min(30) {
                let q: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-14, "deg {degree} p {p}");
            }
        }
    }

    #[test]
    fn all_points_inside_with_positive_weights() {
        for degree in [3, 10, 40, MAX_DEGREE] {
            let rule = triangle(degree).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-14);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                assert!(*w > 0.0);
                assert!(p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0);
            }
        }
    }

    #[test]
    fn too_high_degree_is_an_error() {
        assert!(matches!(
            triangle(MAX_DEGREE + 1),
            Err(Error::QuadratureDegree { requested: 61, .. })
        ));
        assert!(line(MAX_DEGREE + 1).is_err());
    }
}
