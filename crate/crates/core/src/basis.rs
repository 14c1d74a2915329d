//! Orthonormal polynomial bases on the reference triangle and reference edge.
//!
//! The triangle basis is orthonormal with respect to the plain `L²` product
//! on the reference triangle (area 1/2). On a physical element with affine
//! map of Jacobian determinant `det`, the mass matrix is therefore `det · I`.

use crate::quadrature;
use nalgebra::DMatrix;

/// Number of polynomials of total degree at most `m` in two variables.
pub const fn dim_p(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

#[derive(Debug, Clone)]
pub struct TriangleBasis {
    degree: usize,
    /// Monomial exponents `(p, q)` of `(x - 1/3)^p (y - 1/3)^q`.
    exps: Vec<(usize, usize)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: Vec<f64>,
}

impl TriangleBasis {
    pub fn new(degree: usize) -> Self {
        let n = dim_p(degree);
        let mut exps = Vec::with_capacity(n);
        for d in 0..=degree {
            for q in 0..=d {
                exps.push((d - q, q));
            }
        }
        let rule = quadrature::triangle(2 * degree).expect("degree within quadrature range");
        let samples = DMatrix::from_fn(rule.len(), n, |q, j| {
            rule.weights[q].sqrt() * monomials(degree, &exps, rule.points[q])[j]
        });
        let mut r = samples.qr().r();
        for i in 0..n {
            if r[(i, i)] < 0.0 {
                r.row_mut(i).neg_mut();
            }
        }
        let rinv = r.try_inverse().expect("raw basis is unisolvent on the rule");
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                coeffs[i * n + k] = rinv[(k, i)];
            }
        }
        TriangleBasis { degree, exps, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values of all basis functions at the reference point `xi`.
    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(xi, &mut out);
        out
    }

    pub fn eval_into(&self, xi: [f64; 2], out: &mut [f64]) {
        let n = self.len();
        let m = monomials(self.degree, &self.exps, xi);
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = dot(&self.coeffs[i * n..(i + 1) * n], &m);
        }
    }

    /// Reference gradients of all basis functions at `xi`.
    pub fn grad(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let n = self.len();
        let (px, dpx) = legendre(self.degree, xi[0]);
        let (py, dpy) = legendre(self.degree, xi[1]);
        let dx: Vec<f64> = self.exps.iter().map(|&(p, q)| dpx[p] * py[q]).collect();
        let dy: Vec<f64> = self.exps.iter().map(|&(p, q)| px[p] * dpy[q]).collect();
        (0..n)
            .map(|i| {
                let c = &self.coeffs[i * n..(i + 1) * n];
                [dot(c, &dx), dot(c, &dy)]
            })
            .collect()
    }
}

/// Products of Legendre polynomials in `2x - 1` and `2y - 1`, orthonormalized afterwards.
fn monomials(degree: usize, exps: &[(usize, usize)], xi: [f64; 2]) -> Vec<f64> {
    let (px, _) = legendre(degree, xi[0]);
    let (py, _) = legendre(degree, xi[1]);
    exps.iter().map(|&(p, q)| px[p] * py[q]).collect()
}

/// `P_n(2s - 1)` and its derivative in `s`, for `n = 0..=degree`.
fn legendre(degree: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    let z = 2.0 * s - 1.0;
    let mut p = vec![1.0; degree + 1];
    let mut dp = vec![0.0; degree + 1];
    if degree >= 1 {
        p[1] = z;
        dp[1] = 2.0;
    }
    for n in 2..=degree {
        p[n] = ((2 * n - 1) as f64 * z * p[n - 1] - (n - 1) as f64 * p[n - 2]) / n as f64;
        dp[n] = dp[n - 2] + 2.0 * (2 * n - 1) as f64 * p[n - 1];
    }
    (p, dp)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Shifted, normalized Legendre polynomials `sqrt(2n+1) P_n(2s - 1)` on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeBasis {
    degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(s, &mut out);
        out
    }

    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let z = 2.0 * s - 1.0;
        let (mut p0, mut p1) = (1.0, z);
        for (n, o) in out.iter_mut().enumerate().take(self.len()) {
            let p = match n {
                0 => 1.0,
                1 => z,
                _ => {
                    let p2 = ((2 * n - 1) as f64 * z * p1 - (n - 1) as f64 * p0) / n as f64;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            *o = ((2 * n + 1) as f64).sqrt() * p;
        }
    }
}

/// Reference coordinates of the point at parameter `s` along local edge `edge`,
/// running from local vertex `edge + 1` to `edge + 2`.
pub fn reference_edge_point(edge: usize, s: f64) -> [f64; 2] {
    const V: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let a = V[(edge + 1) % 3];
    let b = V[(edge + 2) % 3];
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}
