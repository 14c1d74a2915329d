//! Isotropic constitutive laws and the material-weighted stress norm.
//!
//! Symmetric tensors are stored as `[xx, yy, xy]`.

use crate::error::{Error, Result};
use crate::mesh::Subdomain;

/// Spatial dimension.
pub const DIM: f64 = 2.0;

pub type SymTensor = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub mu: f64,
    pub lambda: f64,
}

impl Lame {
    /// `C tau = 2 mu tau + lambda tr(tau) I`.
    pub fn apply_c(&self, t: SymTensor) -> SymTensor {
        let tr = t[0] + t[1];
        [
            2.0 * self.mu * t[0] + self.lambda * tr,
            2.0 * self.mu * t[1] + self.lambda * tr,
            2.0 * self.mu * t[2],
        ]
    }

    /// `A tau = (tau - lambda / (2 mu + d lambda) tr(tau) I) / (2 mu)`, the inverse of `C`.
    pub fn apply_a(&self, t: SymTensor) -> SymTensor {
        let c = self.trace_coefficient();
        let tr = t[0] + t[1];
        let s = 1.0 / (2.0 * self.mu);
        [s * (t[0] - c * tr), s * (t[1] - c * tr), s * t[2]]
    }

    pub fn trace_coefficient(&self) -> f64 {
        self.lambda / (2.0 * self.mu + DIM * self.lambda)
    }

    /// Matrix of `A B_c : B_d` in the stored basis `B_0 = E11`, `B_1 = E22`,
    /// `B_2 = E12 + E21`.
    pub fn compliance_matrix(&self) -> [[f64; 3]; 3] {
        compliance_matrix(self.mu, self.trace_coefficient())
    }
}

pub(crate) fn compliance_matrix(mu: f64, trace_coefficient: f64) -> [[f64; 3]; 3] {
    let s = 1.0 / (2.0 * mu);
    [
        [s * (1.0 - trace_coefficient), -s * trace_coefficient, 0.0],
        [-s * trace_coefficient, s * (1.0 - trace_coefficient), 0.0],
        [0.0, 0.0, 2.0 * s],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSet {
    pub rho_s: f64,
    pub mu_s: f64,
    pub lambda_s: f64,
    /// Spring coefficient acting on the solid displacement.
    pub beta_s: f64,
    pub rho_f: f64,
    pub mu_f: f64,
    pub lambda_f: f64,
}

impl MaterialSet {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_s", self.rho_s),
            ("mu_s", self.mu_s),
            ("lambda_s", self.lambda_s),
            ("rho_f", self.rho_f),
            ("mu_f", self.mu_f),
            ("lambda_f", self.lambda_f),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.beta_s >= 0.0 && self.beta_s.is_finite()) {
            return Err(Error::InvalidInput(format!("beta_s must be non-negative, got {}", self.beta_s)));
        }
        Ok(())
    }

    pub fn solid(&self) -> Lame {
        Lame {
            mu: self.mu_s,
            lambda: self.lambda_s,
        }
    }

    pub fn fluid(&self) -> Lame {
        Lame {
            mu: self.mu_f,
            lambda: self.lambda_f,
        }
    }

    pub fn lame(&self, sub: Subdomain) -> Lame {
        match sub {
            Subdomain::Solid => self.solid(),
            Subdomain::Fluid => self.fluid(),
        }
    }

    pub fn rho(&self, sub: Subdomain) -> f64 {
        match sub {
            Subdomain::Solid => self.rho_s,
            Subdomain::Fluid => self.rho_f,
        }
    }

    /// Pressure recovered from a fluid stress: `p = -lambda_f / (2 mu_f + d lambda_f) tr(sigma)`.
    pub fn pressure(&self, sigma: SymTensor) -> f64 {
        -self.fluid().trace_coefficient() * (sigma[0] + sigma[1])
    }
}

/// Frobenius product of two symmetric tensors.
pub fn ddot(a: SymTensor, b: SymTensor) -> f64 {
    a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]
}

/// Symmetric gradient of a 2x2 gradient `g[a][b] = d_b v_a`.
pub fn sym_grad(g: [[f64; 2]; 2]) -> SymTensor {
    [g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0])]
}

/// `tau n` for a symmetric tensor.
pub fn apply_normal(t: SymTensor, n: [f64; 2]) -> [f64; 2] {
    [t[0] * n[0] + t[2] * n[1], t[2] * n[0] + t[1] * n[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: SymTensor, b: SymTensor, tol: f64) -> bool {
        let scale = 1.0 + a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn unit_lame_inverse_of_identity() {
        let l = Lame { mu: 1.0, lambda: 1.0 };
        let a = l.apply_a([1.0, 1.0, 0.0]);
        assert!(close(a, [0.25, 0.25, 0.0], 1e-15));
        assert!(close(l.apply_c(a), [1.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn deviatoric_tensor_only_sees_mu() {
        let l = Lame { mu: 3.0, lambda: 7.0 };
        assert!(close(l.apply_a([1.0, -1.0, 0.5]), [1.0 / 6.0, -1.0 / 6.0, 0.5 / 6.0], 1e-15));
        assert_eq!(l.apply_a([0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn nearly_incompressible_fluid() {
        let l = Lame { mu: 1.0, lambda: 1e6 };
        let a = l.apply_a([1.0, 1.0, 0.0]);
        let expected = 1.0 / (2e6 + 2.0);
        assert!((a[0] - expected).abs() < 1e-15 * l.lambda / l.mu * expected);
        assert!(close(l.apply_c(a), [1.0, 1.0, 0.0], 1e-15 * l.lambda / l.mu));
    }

    #[test]
    fn pressure_postprocessing() {
        let m = MaterialSet {
            rho_s: 1.0,
            mu_s: 1.0,
            lambda_s: 1.0,
            beta_s: 0.0,
            rho_f: 1.0,
            mu_f: 1.0,
            lambda_f: 1e6,
        };
        let p = m.pressure([-1.0, -1.0, 0.0]);
        assert!((p - 2e6 / (2e6 + 2.0)).abs() < 1e-15);
        assert_eq!(m.pressure([2.0, -2.0, 5.0]), 0.0);
    }

    #[test]
    fn compliance_matrix_matches_apply_a() {
        let l = Lame { mu: 0.7, lambda: 3.1 };
        let m = l.compliance_matrix();
        let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for c in 0..3 {
            for d in 0..3 {
                let v = ddot(l.apply_a(basis[c]), basis[d]);
                assert!((v - m[c][d]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deviatoric_limit() {
        let l = Lame { mu: 1.3, lambda: 1e9 };
        let t = [0.4, -1.7, 0.9];
        let tr = t[0] + t[1];
        let dev = [(t[0] - tr / 2.0) / 2.6, (t[1] - tr / 2.0) / 2.6, t[2] / 2.6];
        let a = l.apply_a(t);
        for i in 0..3 {
            assert!((a[i] - dev[i]).abs() <= 1e-8 * dev.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }

    proptest! {
        #[test]
        fn a_and_c_are_inverse(
            mu in 0.01f64..100.0, lambda in 0.01f64..1e6,
            t0 in -10.0f64..10.0, t1 in -10.0f64..10.0, t2 in -10.0f64..10.0,
        ) {
            let l = Lame { mu, lambda };
            let t = [t0, t1, t2];
            let tol = 1e-14 * (1.0 + lambda / mu);
            prop_assert!(close(l.apply_c(l.apply_a(t)), t, tol));
            prop_assert!(close(l.apply_a(l.apply_c(t)), t, tol));
        }

        #[test]
        fn compliance_is_positive_definite(
            mu in 0.01f64..100.0, lambda in 0.01f64..1e8,
            t0 in -10.0f64..10.0, t1 in -10.0f64..10.0, t2 in -10.0f64..10.0,
        ) {
            let t = [t0, t1, t2];
            prop_assume!(t.iter().any(|v| v.abs() > 1e-3));
            let l = Lame { mu, lambda };
            prop_assert!(ddot(l.apply_a(t), t) > 0.0);
        }
    }
}
