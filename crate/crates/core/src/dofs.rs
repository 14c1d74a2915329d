//! Degree-of-freedom layout, boundary conditions and reference tables.
//!
//! Per element the stress block holds `3 · dim P_k` coefficients ordered
//! component-major (`c * nk + j`, components `xx, yy, xy`), followed by
//! `2 · dim P_{k+1}` velocity coefficients (`a * nk1 + i`). Each facet carries
//! `2 · (k + 2)` trace coefficients (`e * ne + m`) expressed in the facet frame.

use crate::basis::{dim_p, reference_edge_point, EdgeBasis, TriangleBasis};
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::mesh::{FacetKind, Mesh, Point, INTERFACE_LABEL};
use crate::quadrature::{self, LineRule, TriangleRule};

/// Boundary condition attached to a facet label.
#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    /// Both velocity components prescribed.
    Velocity(SpaceTimeField<2>),
    /// Full traction `sigma n` prescribed.
    Traction(SpaceTimeField<2>),
    /// `(sigma n)·n` and `u·t` prescribed.
    NormalStress {
        stress: SpaceTimeField<1>,
        tangential_velocity: SpaceTimeField<1>,
    },
    /// `u·n` and `(sigma n)·t` prescribed.
    NormalVelocity {
        velocity: SpaceTimeField<1>,
        tangential_stress: SpaceTimeField<1>,
    },
}

impl BoundaryCondition {
    pub fn homogeneous_velocity() -> Self {
        BoundaryCondition::Velocity(SpaceTimeField::Zero)
    }

    fn rotated(&self) -> bool {
        matches!(
            self,
            BoundaryCondition::NormalStress { .. } | BoundaryCondition::NormalVelocity { .. }
        )
    }

    /// Which frame components are essential.
    fn constrained(&self) -> [bool; 2] {
        match self {
            BoundaryCondition::Velocity(_) => [true, true],
            BoundaryCondition::Traction(_) => [false, false],
            BoundaryCondition::NormalStress { .. } => [false, true],
            BoundaryCondition::NormalVelocity { .. } => [true, false],
        }
    }
}

/// Orthonormal frame of a facet; column `e` is `frame[e]`.
pub type Frame = [[f64; 2]; 2];

pub const CARTESIAN: Frame = [[1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FacetRole {
    Interior,
    Interface,
    Boundary { bc: usize },
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    /// `dim P_k`.
    pub nk: usize,
    /// `dim P_{k+1}`.
    pub nk1: usize,
    /// `dim P_{k+1}(F)`.
    pub ne: usize,
    pub n_sigma: usize,
    pub n_u: usize,
    pub n_interior: usize,
    /// Trace dofs per facet.
    pub n_hat: usize,
    pub n_elements: usize,
    pub n_facets: usize,
    pub roles: Vec<FacetRole>,
    pub frames: Vec<Frame>,
    pub constrained: Vec<[bool; 2]>,
    /// Free index of each trace dof, `usize::MAX` when constrained.
    pub free_index: Vec<usize>,
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    /// Fixed index of each trace dof, `usize::MAX` when free.
    pub fixed_index: Vec<usize>,
    pub bcs: Vec<(String, BoundaryCondition)>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, k: usize, bcs: &[(String, BoundaryCondition)]) -> Result<Self> {
        let nk = dim_p(k);
        let nk1 = dim_p(k + 1);
        let ne = k + 2;
        let n_hat = 2 * ne;
        let nf = mesh.num_facets();
        for (name, _) in bcs {
            if name == INTERFACE_LABEL {
                return Err(Error::BoundaryConditions(format!(
                    "the interface `{INTERFACE_LABEL}` cannot carry a boundary condition"
                )));
            }
            if mesh.label(name).is_none() {
                return Err(Error::BoundaryConditions(format!("no facet label named `{name}`")));
            }
        }
        let mut roles = Vec::with_capacity(nf);
        let mut frames = Vec::with_capacity(nf);
        let mut constrained = Vec::with_capacity(nf);
        for f in 0..nf {
            let facet = mesh.facet(f);
            let (role, frame, mask) = match facet.kind {
                FacetKind::Interior => (FacetRole::Interior, CARTESIAN, [false, false]),
                FacetKind::Interface => (FacetRole::Interface, CARTESIAN, [false, false]),
                FacetKind::Boundary => {
                    let name = mesh.facet_label(f).ok_or_else(|| {
                        let m = mesh.facet_midpoint(f);
                        Error::BoundaryConditions(format!(
                            "boundary facet at ({}, {}) carries no label",
                            m[0], m[1]
                        ))
                    })?;
                    let bc = bcs.iter().position(|(n, _)| n == name).ok_or_else(|| {
                        Error::BoundaryConditions(format!("label `{name}` has no boundary condition"))
                    })?;
                    let frame = if bcs[bc].1.rotated() {
                        let n = mesh.facet_normal(f);
                        [n, [-n[1], n[0]]]
                    } else {
                        CARTESIAN
                    };
                    (FacetRole::Boundary { bc }, frame, bcs[bc].1.constrained())
                }
            };
            roles.push(role);
            frames.push(frame);
            constrained.push(mask);
        }
        let mut free_index = vec![usize::MAX; nf * n_hat];
        let mut fixed_index = vec![usize::MAX; nf * n_hat];
        let mut free = Vec::new();
        let mut fixed = Vec::new();
        for f in 0..nf {
            for e in 0..2 {
                for m in 0..ne {
                    let d = f * n_hat + e * ne + m;
                    if constrained[f][e] {
                        fixed_index[d] = fixed.len();
                        fixed.push(d);
                    } else {
                        free_index[d] = free.len();
                        free.push(d);
                    }
                }
            }
        }
        Ok(DofMap {
            k,
            nk,
            nk1,
            ne,
            n_sigma: 3 * nk,
            n_u: 2 * nk1,
            n_interior: 3 * nk + 2 * nk1,
            n_hat,
            n_elements: mesh.num_elements(),
            n_facets: nf,
            roles,
            frames,
            constrained,
            free_index,
            free,
            fixed,
            fixed_index,
            bcs: bcs.to_vec(),
        })
    }

    pub fn n_trace(&self) -> usize {
        self.n_facets * self.n_hat
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Size of the local element vector: interior plus three facets.
    pub fn n_local(&self) -> usize {
        self.n_interior + 3 * self.n_hat
    }

    pub fn trace_dof(&self, f: usize, e: usize, m: usize) -> usize {
        f * self.n_hat + e * self.ne + m
    }

    pub fn is_free(&self, d: usize) -> bool {
        self.free_index[d] != usize::MAX
    }
}

/// Basis values at reference quadrature points, shared by all elements.
#[derive(Debug, Clone)]
pub struct Tables {
    pub k: usize,
    pub stress: TriangleBasis,
    pub velocity: TriangleBasis,
    pub edge: EdgeBasis,
    pub vol: TriangleRule,
    /// `nq x nk`.
    pub vol_sigma: Vec<f64>,
    /// `nq x nk1`.
    pub vol_u: Vec<f64>,
    /// `nq x nk1` reference gradients.
    pub vol_u_grad: Vec<[f64; 2]>,
    pub line: LineRule,
    /// Per local edge, `nq_e x nk`, at the local edge parameter.
    pub edge_sigma: [Vec<f64>; 3],
    /// Per local edge, `nq_e x nk1`.
    pub edge_u: [Vec<f64>; 3],
    /// Edge basis at `s` (`[0]`) and `1 - s` (`[1]`), `nq_e x ne`.
    pub edge_chi: [Vec<f64>; 2],
}

impl Tables {
    /// Volume rules are exact to degree `2(k + 3)`, facet rules to `2(k + 2)`.
    pub fn new(k: usize) -> Result<Self> {
        let stress = TriangleBasis::new(k);
        let velocity = TriangleBasis::new(k + 1);
        let edge = EdgeBasis::new(k + 1);
        let vol = quadrature::triangle(2 * (k + 3))?;
        let line = quadrature::line(2 * (k + 2))?;
        let mut vol_sigma = Vec::new();
        let mut vol_u = Vec::new();
        let mut vol_u_grad = Vec::new();
        for &p in &vol.points {
            vol_sigma.extend(stress.eval(p));
            vol_u.extend(velocity.eval(p));
            vol_u_grad.extend(velocity.grad(p));
        }
        let mut edge_sigma: [Vec<f64>; 3] = Default::default();
        let mut edge_u: [Vec<f64>; 3] = Default::default();
        for i in 0..3 {
            for &s in &line.points {
                let xi = reference_edge_point(i, s);
                edge_sigma[i].extend(stress.eval(xi));
                edge_u[i].extend(velocity.eval(xi));
            }
        }
        let mut edge_chi: [Vec<f64>; 2] = Default::default();
        for &s in &line.points {
            edge_chi[0].extend(edge.eval(s));
            edge_chi[1].extend(edge.eval(1.0 - s));
        }
        Ok(Tables {
            k,
            stress,
            velocity,
            edge,
            vol,
            vol_sigma,
            vol_u,
            vol_u_grad,
            line,
            edge_sigma,
            edge_u,
            edge_chi,
        })
    }

    pub fn nk(&self) -> usize {
        self.stress.len()
    }

    pub fn nk1(&self) -> usize {
        self.velocity.len()
    }

    pub fn ne(&self) -> usize {
        self.edge.len()
    }
}

/// Physical point at facet parameter `s`, running from the lower to the
/// higher global vertex.
pub fn facet_point(mesh: &Mesh, f: usize, s: f64) -> Point {
    let [a, b] = mesh.facet_endpoints(f);
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect};

    fn labelled_square(n: usize) -> Mesh {
        generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n, Some(0.5))
            .unwrap()
            .classify_facets(&[
                ("bottom", &|p: Point| p[1] == 0.0),
                ("rest", &|p: Point| p[1] != 0.0),
            ])
            .unwrap()
    }

    #[test]
    fn homogeneous_dirichlet_leaves_interior_facets_free() {
        let mesh = labelled_square(4);
        let bcs = vec![
            ("bottom".to_string(), BoundaryCondition::homogeneous_velocity()),
            ("rest".to_string(), BoundaryCondition::homogeneous_velocity()),
        ];
        for k in 0..3 {
            let d = DofMap::new(&mesh, k, &bcs).unwrap();
            let inner = mesh.num_facets() - mesh.count_facets(FacetKind::Boundary);
            assert_eq!(d.n_free(), 2 * (k + 2) * inner);
            assert_eq!(d.n_free() + d.fixed.len(), d.n_trace());
        }
    }

    #[test]
    fn mixed_conditions_rotate_and_constrain_one_component() {
        let mesh = labelled_square(2);
        let bcs = vec![
            (
                "bottom".to_string(),
                BoundaryCondition::NormalVelocity {
                    velocity: SpaceTimeField::Zero,
                    tangential_stress: SpaceTimeField::Zero,
                },
            ),
            ("rest".to_string(), BoundaryCondition::Traction(SpaceTimeField::Zero)),
        ];
        let d = DofMap::new(&mesh, 1, &bcs).unwrap();
        let bottom = &mesh.label("bottom").unwrap().facets;
        for &f in bottom {
            assert_eq!(d.constrained[f], [true, false]);
            assert_eq!(d.frames[f][0], [0.0, -1.0]);
            assert_eq!(d.frames[f][1], [1.0, 0.0]);
        }
        assert_eq!(d.fixed.len(), bottom.len() * 3);
    }

    #[test]
    fn missing_condition_is_an_error() {
        let mesh = labelled_square(2);
        let bcs = vec![("bottom".to_string(), BoundaryCondition::homogeneous_velocity())];
        let err = DofMap::new(&mesh, 0, &bcs).unwrap_err();
        assert!(err.to_string().contains("`rest`"), "{err}");
        let bcs = vec![("sigma".to_string(), BoundaryCondition::homogeneous_velocity())];
        assert!(DofMap::new(&mesh, 0, &bcs).is_err());
    }
}
