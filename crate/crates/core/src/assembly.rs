//! Element operators of the HDG scheme.
//!
//! Every element contributes a dense square matrix over its local vector
//! `[sigma, u, uhat(edge 0), uhat(edge 1), uhat(edge 2)]`. Rows are test
//! functions and columns trial functions. The matrix is split as
//!
//! ```text
//! A(w) = w.mass · M_rho + w.stress · M_A + w.coupling · C + w.spring · M_1
//! ```
//!
//! where `C` collects the skew stress/velocity coupling and the jump
//! stabilization, and the mass terms are block diagonal.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::dofs::{DofMap, Tables};
use crate::materials::{compliance_matrix, MaterialSet};
use crate::mesh::{Mesh, Subdomain};

/// Deliberate defects used to check that the verification suites notice them.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negates the stabilization weight.
    StabilizationSign,
    /// Uses `lambda / (2 mu + lambda)` in the fluid compliance.
    FluidTrace,
}

/// `(k + 1)² / h_F`.
pub fn stabilization_weight(k: usize, h_f: f64) -> f64 {
    ((k + 1) * (k + 1)) as f64 / h_f
}

/// Scalars multiplying the pieces of the element matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub mass: f64,
    pub solid: f64,
    pub fluid: f64,
    pub coupling: f64,
    pub spring: f64,
}

impl Weights {
    /// Left-hand side of one Crank–Nicolson step.
    pub fn cn_implicit(dt: f64, beta: f64) -> Self {
        Weights {
            mass: 1.0 / dt,
            solid: 1.0 / dt,
            fluid: 0.5,
            coupling: 0.5,
            spring: 0.25 * beta * dt,
        }
    }

    /// Operator applied to the old state on the right-hand side.
    pub fn cn_explicit(dt: f64, beta: f64) -> Self {
        Weights {
            mass: 1.0 / dt,
            solid: 1.0 / dt,
            fluid: -0.5,
            coupling: -0.5,
            spring: -0.25 * beta * dt,
        }
    }

    /// Algebraic part of the semi-discrete system.
    pub fn algebraic() -> Self {
        Weights {
            mass: 0.0,
            solid: 0.0,
            fluid: 1.0,
            coupling: 1.0,
            spring: 0.0,
        }
    }

    fn stress(&self, sub: Subdomain) -> f64 {
        match sub {
            Subdomain::Solid => self.solid,
            Subdomain::Fluid => self.fluid,
        }
    }
}

/// Element matrix pieces for one element shape.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub subdomain: Subdomain,
    pub n_sigma: usize,
    pub n_interior: usize,
    pub n_local: usize,
    /// Stress basis size `dim P_k`.
    pub nk: usize,
    pub det: f64,
    pub rho: f64,
    pub compliance: [[f64; 3]; 3],
    /// `C`, row-major `n_local x n_local`.
    pub coupling: Vec<f64>,
}

impl LocalOperator {
    /// Dense matrix `A(w)`, row-major.
    pub fn matrix(&self, w: &Weights) -> Vec<f64> {
        let n = self.n_local;
        let mut a: Vec<f64> = self.coupling.iter().map(|c| w.coupling * c).collect();
        let ws = w.stress(self.subdomain) * self.det;
        for c in 0..3 {
            for d in 0..3 {
                let v = ws * self.compliance[d][c];
                if v == 0.0 {
                    continue;
                }
                for j in 0..self.nk {
                    a[(d * self.nk + j) * n + c * self.nk + j] += v;
                }
            }
        }
        let mu = self.velocity_diagonal(w);
        for r in self.n_sigma..self.n_interior {
            a[r * n + r] += mu;
        }
        a
    }

    fn velocity_diagonal(&self, w: &Weights) -> f64 {
        let spring = if self.subdomain == Subdomain::Solid { w.spring } else { 0.0 };
        (w.mass * self.rho + spring) * self.det
    }

    /// `out = A(w) x`.
    pub fn apply(&self, w: &Weights, x: &[f64], out: &mut [f64]) {
        let n = self.n_local;
        for (r, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.coupling[r * n..(r + 1) * n];
            *o = w.coupling * dot(row, x);
        }
        self.add_block_diagonal(w, x, out, false);
    }

    /// `out = |A(w)| |x|`, used to scale residuals.
    pub fn apply_abs(&self, w: &Weights, x: &[f64], out: &mut [f64]) {
        let n = self.n_local;
        for (r, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.coupling[r * n..(r + 1) * n];
            *o = w.coupling.abs() * row.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>();
        }
        self.add_block_diagonal(w, x, out, true);
    }

    fn add_block_diagonal(&self, w: &Weights, x: &[f64], out: &mut [f64], abs: bool) {
        let ws = w.stress(self.subdomain) * self.det;
        let nk = self.nk;
        for d in 0..3 {
            for c in 0..3 {
                let v = ws * self.compliance[d][c];
                if v == 0.0 {
                    continue;
                }
                for j in 0..nk {
                    let t = v * x[c * nk + j];
                    out[d * nk + j] += if abs { t.abs() } else { t };
                }
            }
        }
        let mu = self.velocity_diagonal(w);
        for r in self.n_sigma..self.n_interior {
            let t = mu * x[r];
            out[r] += if abs { t.abs() } else { t };
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(B_c v)_a` for the stored tensor basis `E11`, `E22`, `E12 + E21`.
#[inline]
fn bv(c: usize, a: usize, v: [f64; 2]) -> f64 {
    match (c, a) {
        (0, 0) => v[0],
        (1, 1) => v[1],
        (2, 0) => v[1],
        (2, 1) => v[0],
        _ => 0.0,
    }
}

/// Builds the pieces of the element matrix of `element`.
pub fn assemble_local(
    mesh: &Mesh,
    element: usize,
    dofs: &DofMap,
    tables: &Tables,
    materials: &MaterialSet,
    fault: Fault,
) -> LocalOperator {
    let (nk, nk1, ne) = (dofs.nk, dofs.nk1, dofs.ne);
    let n_sigma = dofs.n_sigma;
    let n_interior = dofs.n_interior;
    let n_hat = dofs.n_hat;
    let n = dofs.n_local();
    let sub = mesh.subdomain(element);
    let map = mesh.affine(element);
    let det = map.det;
    let mut cmat = vec![0.0; n * n];
    let u0 = n_sigma;
    let t0 = n_interior;

    // G[v(a,i), sigma(c,j)] volume part: (B_c phi_j, grad psi_i e_a)
    let mut g = vec![0.0; dofs.n_u * n_sigma];
    let nq = tables.vol.len();
    for q in 0..nq {
        let w = tables.vol.weights[q] * det;
        let phi = &tables.vol_sigma[q * nk..(q + 1) * nk];
        for i in 0..nk1 {
            let grad = map.push_gradient(tables.vol_u_grad[q * nk1 + i]);
            for a in 0..2 {
                for c in 0..3 {
                    let b = bv(c, a, grad);
                    if b == 0.0 {
                        continue;
                    }
                    let row = &mut g[(a * nk1 + i) * n_sigma + c * nk..];
                    for j in 0..nk {
                        row[j] += w * b * phi[j];
                    }
                }
            }
        }
    }

    let facets = mesh.element_facets(element);
    let nqe = tables.line.len();
    for edge in 0..3 {
        let f = facets[edge];
        let len = mesh.facet_length(f);
        let normal = mesh.outward_normal(element, edge);
        let frame = dofs.frames[f];
        let chi_tab = &tables.edge_chi[if mesh.edge_aligned(element, edge) { 0 } else { 1 }];
        let mut s = stabilization_weight(dofs.k, len);
        if fault == Fault::StabilizationSign {
            s = -s;
        }
        let base = t0 + edge * n_hat;
        for q in 0..nqe {
            let w = tables.line.weights[q] * len;
            let phi = &tables.edge_sigma[edge][q * nk..(q + 1) * nk];
            let psi = &tables.edge_u[edge][q * nk1..(q + 1) * nk1];
            let chi = &chi_tab[q * ne..(q + 1) * ne];
            for c in 0..3 {
                let bn = [bv(c, 0, normal), bv(c, 1, normal)];
                // boundary part of G
                for a in 0..2 {
                    if bn[a] == 0.0 {
                        continue;
                    }
                    for i in 0..nk1 {
                        let row = &mut g[(a * nk1 + i) * n_sigma + c * nk..];
                        let wb = w * bn[a] * psi[i];
                        for j in 0..nk {
                            row[j] -= wb * phi[j];
                        }
                    }
                }
                // H[uhat(edge,e,m), sigma(c,j)] and its negated transpose
                for e in 0..2 {
                    let proj = bn[0] * frame[e][0] + bn[1] * frame[e][1];
                    if proj == 0.0 {
                        continue;
                    }
                    for m in 0..ne {
                        let r = base + e * ne + m;
                        let wp = w * proj * chi[m];
                        for j in 0..nk {
                            let col = c * nk + j;
                            let v = wp * phi[j];
                            cmat[r * n + col] += v;
                            cmat[col * n + r] -= v;
                        }
                    }
                }
            }
            // stabilization
            for a in 0..2 {
                for i in 0..nk1 {
                    let r = u0 + a * nk1 + i;
                    let ws = s * w * psi[i];
                    for i2 in 0..nk1 {
                        cmat[r * n + u0 + a * nk1 + i2] += ws * psi[i2];
                    }
                    for e in 0..2 {
                        let ra = frame[e][a];
                        if ra == 0.0 {
                            continue;
                        }
                        for m in 0..ne {
                            let col = base + e * ne + m;
                            let v = ws * ra * chi[m];
                            cmat[r * n + col] -= v;
                            cmat[col * n + r] -= v;
                        }
                    }
                }
            }
        }
        for d in 0..n_hat {
            cmat[(base + d) * n + base + d] += s * len;
        }
    }

    for a in 0..2 {
        for i in 0..nk1 {
            let r = u0 + a * nk1 + i;
            for col in 0..n_sigma {
                let v = g[(a * nk1 + i) * n_sigma + col];
                cmat[r * n + col] += v;
                cmat[col * n + r] -= v;
            }
        }
    }

    let lame = materials.lame(sub);
    let mut coefficient = lame.trace_coefficient();
    if fault == Fault::FluidTrace && sub == Subdomain::Fluid {
        coefficient = lame.lambda / (2.0 * lame.mu + lame.lambda);
    }
    LocalOperator {
        subdomain: sub,
        n_sigma,
        n_interior,
        n_local: n,
        nk,
        det,
        rho: materials.rho(sub),
        compliance: compliance_matrix(lame.mu, coefficient),
        coupling: cmat,
    }
}

/// Element operators of a whole mesh, shared between congruent elements.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    pub shapes: Vec<LocalOperator>,
    pub shape_of: Vec<usize>,
    /// First element of each shape.
    pub representatives: Vec<usize>,
}

impl LocalOperators {
    pub fn build(mesh: &Mesh, dofs: &DofMap, tables: &Tables, materials: &MaterialSet, fault: Fault) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut representatives = Vec::new();
        let mut shape_of = Vec::with_capacity(mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let key = shape_key(mesh, dofs, e);
            let next = representatives.len();
            let id = *index.entry(key).or_insert_with(|| {
                representatives.push(e);
                next
            });
            shape_of.push(id);
        }
        let shapes = representatives
            .par_iter()
            .map(|&e| assemble_local(mesh, e, dofs, tables, materials, fault))
            .collect();
        LocalOperators {
            shapes,
            shape_of,
            representatives,
        }
    }

    pub fn of(&self, element: usize) -> &LocalOperator {
        &self.shapes[self.shape_of[element]]
    }
}

/// Two elements share a key when their element matrices coincide exactly:
/// same Jacobian, subdomain, facet orientations and facet frames.
fn shape_key(mesh: &Mesh, dofs: &DofMap, e: usize) -> Vec<u64> {
    let map = mesh.affine(e);
    let mut key = Vec::with_capacity(20);
    for row in map.jac {
        for v in row {
            key.push(v.to_bits());
        }
    }
    key.push(mesh.subdomain(e) as u64);
    let facets = mesh.element_facets(e);
    for edge in 0..3 {
        key.push(mesh.edge_aligned(e, edge) as u64);
        for col in dofs.frames[facets[edge]] {
            for v in col {
                key.push(v.to_bits());
            }
        }
    }
    key
}
