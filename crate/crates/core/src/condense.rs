//! Static condensation of element interiors onto the facet traces, and the
//! uncondensed (monolithic) system used as an oracle.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assembly::{LocalOperator, LocalOperators, Weights};
use crate::dofs::DofMap;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// Per-shape elimination data, all row-major.
#[derive(Debug, Clone)]
pub struct CondensedShape {
    pub n_interior: usize,
    pub n_trace: usize,
    /// `A_II^{-1}`.
    pub ainv: Vec<f64>,
    /// `A_II^{-1} A_IT`.
    pub y: Vec<f64>,
    /// `A_TI A_II^{-1}`.
    pub z: Vec<f64>,
    /// `A_TT - A_TI A_II^{-1} A_IT`.
    pub schur: Vec<f64>,
}

impl CondensedShape {
    pub fn new(op: &LocalOperator, w: &Weights, representative: usize) -> Result<Self> {
        let n = op.n_local;
        let ni = op.n_interior;
        let nt = n - ni;
        let a = DMatrix::from_row_slice(n, n, &op.matrix(w));
        let aii = a.view((0, 0), (ni, ni)).into_owned();
        let ait = a.view((0, ni), (ni, nt)).into_owned();
        let ati = a.view((ni, 0), (nt, ni)).into_owned();
        let att = a.view((ni, ni), (nt, nt)).into_owned();
        let ainv = aii
            .try_inverse()
            .filter(|m| m.iter().all(|v| v.is_finite()))
            .ok_or(Error::LocalFactorization { element: representative })?;
        let y = &ainv * &ait;
        let z = &ati * &ainv;
        let schur = att - &ati * &y;
        let rows = |m: &DMatrix<f64>| -> Vec<f64> {
            let mut out = Vec::with_capacity(m.len());
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    out.push(m[(r, c)]);
                }
            }
            out
        };
        Ok(CondensedShape {
            n_interior: ni,
            n_trace: nt,
            ainv: rows(&ainv),
            y: rows(&y),
            z: rows(&z),
            schur: rows(&schur),
        })
    }
}

/// Condensed blocks for every element shape.
pub fn condense(ops: &LocalOperators, w: &Weights) -> Result<Vec<CondensedShape>> {
    ops.shapes
        .par_iter()
        .zip(ops.representatives.par_iter())
        .map(|(op, &rep)| CondensedShape::new(op, w, rep))
        .collect()
}

/// Global trace index of every local trace dof of `element`.
pub fn local_trace_dofs(mesh: &Mesh, dofs: &DofMap, element: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(3 * dofs.n_hat);
    for f in mesh.element_facets(element) {
        out.extend(f * dofs.n_hat..(f + 1) * dofs.n_hat);
    }
    out
}

/// Schur complement over the free trace dofs.
pub fn assemble_schur(mesh: &Mesh, dofs: &DofMap, ops: &LocalOperators, shapes: &[CondensedShape]) -> CsrMatrix {
    let nt = 3 * dofs.n_hat;
    let mut triplets = Vec::with_capacity(mesh.num_elements() * nt * nt);
    for e in 0..mesh.num_elements() {
        let s = &shapes[ops.shape_of[e]];
        let map = local_trace_dofs(mesh, dofs, e);
        for (r, &gr) in map.iter().enumerate() {
            let fr = dofs.free_index[gr];
            if fr == usize::MAX {
                continue;
            }
            for (c, &gc) in map.iter().enumerate() {
                let fc = dofs.free_index[gc];
                if fc == usize::MAX {
                    continue;
                }
                triplets.push((fr, fc, s.schur[r * nt + c]));
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_free(), dofs.n_free(), &triplets)
}

/// Full system over all element interior dofs followed by the free trace dofs.
pub fn assemble_monolithic(mesh: &Mesh, dofs: &DofMap, ops: &LocalOperators, w: &Weights) -> CsrMatrix {
    let ni = dofs.n_interior;
    let offset = mesh.num_elements() * ni;
    let n = offset + dofs.n_free();
    let mut triplets = Vec::new();
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; ops.shapes.len()];
    for e in 0..mesh.num_elements() {
        let sid = ops.shape_of[e];
        let op = &ops.shapes[sid];
        let a = cache[sid].get_or_insert_with(|| op.matrix(w));
        let nl = op.n_local;
        let traces = local_trace_dofs(mesh, dofs, e);
        let global = |l: usize| -> Option<usize> {
            if l < ni {
                Some(e * ni + l)
            } else {
                let f = dofs.free_index[traces[l - ni]];
                (f != usize::MAX).then(|| offset + f)
            }
        };
        for r in 0..nl {
            let Some(gr) = global(r) else { continue };
            for c in 0..nl {
                let v = a[r * nl + c];
                if v == 0.0 {
                    continue;
                }
                if let Some(gc) = global(c) {
                    triplets.push((gr, gc, v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}
