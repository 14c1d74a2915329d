//! `L²` projections onto element and facet polynomial spaces.
//!
//! With orthonormal reference bases the projection needs no mass solve:
//! the coefficient of basis function `i` is the reference integral of `f φ_i`.

use crate::basis::{EdgeBasis, TriangleBasis};
use crate::dofs::facet_point;
use crate::mesh::{Mesh, Point};
use crate::quadrature::{LineRule, TriangleRule};

/// Projection of a vector field onto `P_m(K)^N`, component-major.
pub fn project_element<const N: usize>(
    mesh: &Mesh,
    element: usize,
    basis: &TriangleBasis,
    rule: &TriangleRule,
    f: impl Fn(Point) -> [f64; N],
) -> Vec<f64> {
    let n = basis.len();
    let map = mesh.affine(element);
    let mut out = vec![0.0; N * n];
    let mut phi = vec![0.0; n];
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval_into(*xi, &mut phi);
        let v = f(map.map(*xi));
        for c in 0..N {
            let wv = w * v[c];
            for i in 0..n {
                out[c * n + i] += wv * phi[i];
            }
        }
    }
    out
}

/// Projection onto `P_m(F)^N` in the facet parameter running from the lower to
/// the higher global vertex index.
pub fn project_facet<const N: usize>(
    mesh: &Mesh,
    facet: usize,
    basis: &EdgeBasis,
    rule: &LineRule,
    g: impl Fn(Point) -> [f64; N],
) -> Vec<f64> {
    let n = basis.len();
    let mut out = vec![0.0; N * n];
    let mut chi = vec![0.0; n];
    for (&s, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval_into(s, &mut chi);
        let v = g(facet_point(mesh, facet, s));
        for c in 0..N {
            for m in 0..n {
                out[c * n + m] += w * v[c] * chi[m];
            }
        }
    }
    out
}

/// Evaluates an element expansion (component-major coefficients) at a reference point.
pub fn eval_element<const N: usize>(basis: &TriangleBasis, coeffs: &[f64], xi: [f64; 2]) -> [f64; N] {
    let phi = basis.eval(xi);
    let n = phi.len();
    std::array::from_fn(|c| coeffs[c * n..(c + 1) * n].iter().zip(&phi).map(|(a, b)| a * b).sum())
}

/// `L²(K)` norm of `f - f_h` for a vector field, squared.
pub fn element_error_sq<const N: usize>(
    mesh: &Mesh,
    element: usize,
    basis: &TriangleBasis,
    rule: &TriangleRule,
    coeffs: &[f64],
    f: impl Fn(Point) -> [f64; N],
) -> f64 {
    let map = mesh.affine(element);
    let mut sum = 0.0;
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let fh: [f64; N] = eval_element(basis, coeffs, *xi);
        let v = f(map.map(*xi));
        for c in 0..N {
            sum += w * (v[c] - fh[c]).powi(2);
        }
    }
    sum * map.det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect};
    use crate::quadrature;
    use nalgebra::{DMatrix, DVector};

    fn square() -> Mesh {
        generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), 2, 2, None).unwrap()
    }

    #[test]
    fn polynomials_are_reproduced() {
        let mesh = square();
        for m in 0..=4 {
            let basis = TriangleBasis::new(m);
            let rule = quadrature::triangle(2 * m + 2).unwrap();
            let (a, b) = ((m / 2) as i32, (m - m / 2) as i32);
            let f = |p: Point| [p[0].powi(m as i32) + 0.5 * p[1].powi(m as i32), 1.0 - p[0].powi(a) * p[1].powi(b)];
            for e in 0..mesh.num_elements() {
                let c = project_element(&mesh, e, &basis, &rule, f);
                let err = element_error_sq(&mesh, e, &basis, &rule, &c, f);
                assert!(err < 1e-26, "m={m} e={e} {err:e}");
            }
        }
    }

    #[test]
    fn zero_projects_to_zero() {
        let mesh = square();
        let basis = TriangleBasis::new(2);
        let rule = quadrature::triangle(4).unwrap();
        assert!(project_element(&mesh, 3, &basis, &rule, |_| [0.0]).iter().all(|&c| c == 0.0));
    }

    /// Normal equations with monomials `1, x, y` as an independent oracle.
    #[test]
    fn x_squared_onto_linears_matches_normal_equations() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![crate::mesh::Subdomain::Fluid]).unwrap();
        let basis = TriangleBasis::new(1);
        let rule = quadrature::triangle(6).unwrap();
        let c = project_element(&mesh, 0, &basis, &rule, |p| [p[0] * p[0]]);
        // integrals of x^a y^b over the reference triangle: a! b! / (a+b+2)!
        let i = |a: u32, b: u32| -> f64 {
            let f = |n: u32| (1..=n).product::<u32>() as f64;
            f(a) * f(b) / f(a + b + 2)
        };
        let g = DMatrix::from_row_slice(3, 3, &[i(0, 0), i(1, 0), i(0, 1), i(1, 0), i(2, 0), i(1, 1), i(0, 1), i(1, 1), i(0, 2)]);
        let rhs = DVector::from_row_slice(&[i(2, 0), i(3, 0), i(2, 1)]);
        let a = g.lu().solve(&rhs).unwrap();
        for p in [[0.2, 0.3], [0.6, 0.1], [1.0 / 3.0, 1.0 / 3.0]] {
            let oracle = a[0] + a[1] * p[0] + a[2] * p[1];
            let ours: [f64; 1] = eval_element(&basis, &c, p);
            assert!((oracle - ours[0]).abs() < 1e-12);
        }
        // residual is orthogonal to each basis function
        for j in 0..3 {
            let r: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    let v: [f64; 1] = eval_element(&basis, &c, *p);
                    w * (p[0] * p[0] - v[0]) * basis.eval(*p)[j]
                })
                .sum();
            assert!(r.abs() < 1e-11);
        }
    }

    #[test]
    fn facet_projection_of_cubic_onto_linears() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![crate::mesh::Subdomain::Fluid]).unwrap();
        // facet between vertices 0 and 1 is parametrized by s = x
        let f = (0..mesh.num_facets()).find(|&f| mesh.facet(f).vertices == [0, 1]).unwrap();
        let basis = EdgeBasis::new(1);
        let rule = quadrature::line(4).unwrap();
        let c = project_facet(&mesh, f, &basis, &rule, |p| [p[0].powi(3)]);
        // oracle: least squares a + b s against s^3 on [0,1]
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
        let rhs = DVector::from_row_slice(&[0.25, 0.2]);
        let ab = g.lu().solve(&rhs).unwrap();
        for s in [0.0, 0.3, 1.0] {
            let chi = basis.eval(s);
            let ours = c[0] * chi[0] + c[1] * chi[1];
            assert!((ours - (ab[0] + ab[1] * s)).abs() < 1e-13);
        }
        let cst = project_facet(&mesh, f, &basis, &rule, |_| [2.5]);
        assert!((cst[0] - 2.5).abs() < 1e-15 && cst[1].abs() < 1e-15);
    }
}
