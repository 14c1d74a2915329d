//! Manufactured solutions and the pressure-pulse channel problem.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dofs::BoundaryCondition;
use crate::error::Result;
use crate::field::SpaceTimeField;
use crate::materials::{apply_normal, sym_grad, Lame, MaterialSet, SymTensor};
use crate::mesh::{generate_structured, Mesh, Point, Rect, Subdomain};
use crate::time::Problem;

/// Closed-form solution of a fluid–structure problem.
pub trait ExactSolution: Send + Sync {
    fn velocity(&self, p: Point, t: f64) -> [f64; 2];
    /// Stress of the given phase, in the model the scheme is compared against.
    fn stress(&self, sub: Subdomain, p: Point, t: f64) -> SymTensor;
    /// Fluid pressure.
    fn pressure(&self, p: Point, t: f64) -> f64;
    /// Solid displacement.
    fn displacement(&self, p: Point, t: f64) -> [f64; 2];
}

/// The solution that vanishes identically.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSolution;

impl ExactSolution for ZeroSolution {
    fn velocity(&self, _: Point, _: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn stress(&self, _: Subdomain, _: Point, _: f64) -> SymTensor {
        [0.0; 3]
    }
    fn pressure(&self, _: Point, _: f64) -> f64 {
        0.0
    }
    fn displacement(&self, _: Point, _: f64) -> [f64; 2] {
        [0.0; 2]
    }
}

/// Material parameter sets of the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterSet {
    /// All coefficients one, `lambda_f = 1e6`.
    L1,
    /// Nearly incompressible solid.
    L2,
}

impl ParameterSet {
    pub fn materials(self) -> MaterialSet {
        match self {
            ParameterSet::L1 => MaterialSet {
                rho_s: 1.0,
                mu_s: 1.0,
                lambda_s: 1.0,
                beta_s: 0.0,
                rho_f: 1.0,
                mu_f: 1.0,
                lambda_f: 1e6,
            },
            ParameterSet::L2 => MaterialSet {
                rho_s: 1e3,
                mu_s: 1e6,
                lambda_s: 1e10,
                beta_s: 0.0,
                rho_f: 1.0,
                mu_f: 1.0,
                lambda_f: 1e6,
            },
        }
    }
}

/// Smooth manufactured solution on `(0,1) x (-1,0.5)`, fluid below `y = 0`.
///
/// `u = sin(2t) U`, `d = sin²(t) U` and `p = sin(t) P` with a solenoidal `U`
/// vanishing on the outer boundary.
#[derive(Debug, Clone, Copy)]
pub struct Example1 {
    pub materials: MaterialSet,
}

const A: f64 = 8.0 * PI / 3.0;
const B: f64 = 4.0 * PI / 3.0;

impl Example1 {
    pub fn new(set: ParameterSet) -> Self {
        Example1 {
            materials: set.materials(),
        }
    }

    pub fn domain() -> Rect {
        Rect::new(0.0, 1.0, -1.0, 0.5)
    }

    pub fn shape(p: Point) -> [f64; 2] {
        let [x, y] = p;
        let s = (2.0 * PI * x).sin();
        [
            s * s * (A * (y + 1.0)).sin(),
            -1.5 * (4.0 * PI * x).sin() * (B * (y + 1.0)).sin().powi(2),
        ]
    }

    /// `grad[a][b] = d_b U_a`.
    pub fn shape_gradient(p: Point) -> [[f64; 2]; 2] {
        let [x, y] = p;
        let (a, b) = (A * (y + 1.0), B * (y + 1.0));
        let s2 = (2.0 * PI * x).sin();
        let s4 = (4.0 * PI * x).sin();
        [
            [2.0 * PI * s4 * a.sin(), s2 * s2 * A * a.cos()],
            [-6.0 * PI * (4.0 * PI * x).cos() * b.sin().powi(2), -1.5 * s4 * B * (2.0 * b).sin()],
        ]
    }

    pub fn shape_laplacian(p: Point) -> [f64; 2] {
        let [x, y] = p;
        let (a, b) = (A * (y + 1.0), B * (y + 1.0));
        let s2 = (2.0 * PI * x).sin();
        let s4 = (4.0 * PI * x).sin();
        [
            8.0 * PI * PI * (4.0 * PI * x).cos() * a.sin() - s2 * s2 * A * A * a.sin(),
            24.0 * PI * PI * s4 * b.sin().powi(2) - 3.0 * s4 * B * B * (2.0 * b).cos(),
        ]
    }

    pub fn pressure_shape(p: Point) -> f64 {
        (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin()
    }

    pub fn pressure_gradient(p: Point) -> [f64; 2] {
        let (sx, cx) = (2.0 * PI * p[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * p[1]).sin_cos();
        [2.0 * PI * cx * sy, 2.0 * PI * sx * cy]
    }

    fn elastic(lame: Lame, p: Point) -> SymTensor {
        lame.apply_c(sym_grad(Self::shape_gradient(p)))
    }

    /// `2 mu_f eps(U)`, the viscous part of the fluid stress per unit `sin(2t)`.
    fn viscous(&self, p: Point) -> SymTensor {
        let e = sym_grad(Self::shape_gradient(p));
        let mu = self.materials.mu_f;
        [2.0 * mu * e[0], 2.0 * mu * e[1], 2.0 * mu * e[2]]
    }

    /// Penalty stress `C_f eps(u_f)`.
    pub fn penalty_fluid_stress(&self, p: Point, t: f64) -> SymTensor {
        let s = Self::elastic(self.materials.fluid(), p);
        s.map(|v| v * (2.0 * t).sin())
    }

    pub fn source_fluid(&self) -> SpaceTimeField<2> {
        let m = self.materials;
        SpaceTimeField::Separable(vec![
            (
                Arc::new(|t: f64| 2.0 * (2.0 * t).cos()),
                Arc::new(move |p| Self::shape(p).map(|v| m.rho_f * v)),
            ),
            (
                Arc::new(|t: f64| (2.0 * t).sin()),
                Arc::new(move |p| Self::shape_laplacian(p).map(|v| -m.mu_f * v)),
            ),
            (Arc::new(|t: f64| t.sin()), Arc::new(Self::pressure_gradient)),
        ])
    }

    pub fn source_solid(&self) -> SpaceTimeField<2> {
        let m = self.materials;
        SpaceTimeField::Separable(vec![
            (
                Arc::new(|t: f64| 2.0 * (2.0 * t).cos()),
                Arc::new(move |p| Self::shape(p).map(|v| m.rho_s * v)),
            ),
            (
                Arc::new(|t: f64| t.sin().powi(2)),
                Arc::new(move |p| Self::shape_laplacian(p).map(|v| -m.mu_s * v)),
            ),
        ])
    }

    /// `(sigma_f - sigma_s) n_f` on `y = 0` with `n_f = (0, 1)`.
    pub fn interface_jump(&self) -> SpaceTimeField<2> {
        let this = *self;
        let n = [0.0, 1.0];
        let solid = self.materials.solid();
        SpaceTimeField::Separable(vec![
            (
                Arc::new(|t: f64| (2.0 * t).sin()),
                Arc::new(move |p| apply_normal(this.viscous(p), n)),
            ),
            (
                Arc::new(|t: f64| t.sin()),
                Arc::new(move |p| [0.0, -Self::pressure_shape(p)]),
            ),
            (
                Arc::new(|t: f64| t.sin().powi(2)),
                Arc::new(move |p| apply_normal(Self::elastic(solid, p), n).map(|v| -v)),
            ),
        ])
    }

    /// Labels `gamma_f` and `gamma_s` for the outer boundary.
    pub fn mesh(n: usize) -> Result<Mesh> {
        generate_structured(Self::domain(), n, (3 * n).div_ceil(2), Some(0.0))?
            .classify_facets(&[("gamma_f", &|p: Point| p[1] < 0.0), ("gamma_s", &|p: Point| p[1] > 0.0)])
    }

    /// Problem on the structured mesh with `n` cells per unit length.
    pub fn problem(&self, n: usize) -> Result<Problem> {
        Ok(Problem {
            mesh: Arc::new(Self::mesh(n)?),
            materials: self.materials,
            source_fluid: self.source_fluid(),
            source_solid: self.source_solid(),
            interface: self.interface_jump(),
            bcs: vec![
                ("gamma_f".into(), BoundaryCondition::homogeneous_velocity()),
                ("gamma_s".into(), BoundaryCondition::homogeneous_velocity()),
            ],
        })
    }
}

impl ExactSolution for Example1 {
    fn velocity(&self, p: Point, t: f64) -> [f64; 2] {
        Self::shape(p).map(|v| v * (2.0 * t).sin())
    }

    /// Physical stresses: `2 mu_f eps(u_f) - p I` and `C_s eps(d)`.
    fn stress(&self, sub: Subdomain, p: Point, t: f64) -> SymTensor {
        match sub {
            Subdomain::Fluid => {
                let v = self.viscous(p);
                let pr = self.pressure(p, t);
                let s = (2.0 * t).sin();
                [s * v[0] - pr, s * v[1] - pr, s * v[2]]
            }
            Subdomain::Solid => Self::elastic(self.materials.solid(), p).map(|v| v * t.sin().powi(2)),
        }
    }

    fn pressure(&self, p: Point, t: f64) -> f64 {
        t.sin() * Self::pressure_shape(p)
    }

    fn displacement(&self, p: Point, t: f64) -> [f64; 2] {
        Self::shape(p).map(|v| v * t.sin().powi(2))
    }
}

/// Space-polynomial, time-quadratic solution reproduced exactly by the scheme
/// with polynomial degree `k`, on the unit square with the solid above `y = 1/2`.
///
/// `u = q(t) R + l(t) U` with a rigid motion `R`, `U` of degree `k + 1`,
/// `q` quadratic and `l` linear. The solid stress is `L(t) C_s eps(U)` with
/// `L' = l`, the fluid stress `l(t) C_f eps(U)`.
#[derive(Debug, Clone, Copy)]
pub struct PolynomialCase {
    pub k: usize,
    pub materials: MaterialSet,
    /// Scales the whole solution; zero gives the trivial problem.
    pub amplitude: f64,
}

impl PolynomialCase {
    pub fn new(k: usize) -> Self {
        PolynomialCase {
            k,
            materials: MaterialSet {
                rho_s: 2.0,
                mu_s: 3.0,
                lambda_s: 5.0,
                beta_s: 0.0,
                rho_f: 1.0,
                mu_f: 0.5,
                lambda_f: 10.0,
            },
            amplitude: 1.0,
        }
    }

    pub fn domain() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    fn q(&self, t: f64) -> f64 {
        self.amplitude * (1.0 + t - 0.5 * t * t)
    }
    fn dq(&self, t: f64) -> f64 {
        self.amplitude * (1.0 - t)
    }
    fn big_q(&self, t: f64) -> f64 {
        self.amplitude * (t + 0.5 * t * t - t * t * t / 6.0)
    }
    fn l(&self, t: f64) -> f64 {
        self.amplitude * (0.5 + t)
    }
    fn dl(&self) -> f64 {
        self.amplitude
    }
    fn big_l(&self, t: f64) -> f64 {
        self.amplitude * (0.5 * t + 0.5 * t * t)
    }

    fn rigid(p: Point) -> [f64; 2] {
        [1.0 - p[1], 0.5 + p[0]]
    }

    fn m(&self) -> i32 {
        self.k as i32 + 1
    }

    fn s(p: Point) -> (f64, f64) {
        (p[0] + 0.3 * p[1], 0.5 * p[0] - p[1])
    }

    fn pow(x: f64, e: i32) -> f64 {
        if e < 0 {
            0.0
        } else {
            x.powi(e)
        }
    }

    pub fn shape(&self, p: Point) -> [f64; 2] {
        let (s1, s2) = Self::s(p);
        let m = self.m();
        [s1.powi(m) + 0.2, 0.7 * s2.powi(m) - p[0]]
    }

    pub fn shape_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        let (s1, s2) = Self::s(p);
        let m = self.m();
        let mf = m as f64;
        let d1 = mf * Self::pow(s1, m - 1);
        let d2 = 0.7 * mf * Self::pow(s2, m - 1);
        [[d1, 0.3 * d1], [0.5 * d2 - 1.0, -d2]]
    }

    /// `div C eps(U) = mu lap U + (mu + lambda) grad div U`.
    fn shape_divergence(&self, lame: Lame, p: Point) -> [f64; 2] {
        let (s1, s2) = Self::s(p);
        let m = self.m();
        let c = (m * (m - 1)) as f64;
        let h1 = c * Self::pow(s1, m - 2);
        let h2 = 0.7 * c * Self::pow(s2, m - 2);
        // second derivatives [xx, xy, yy] of each component
        let u1 = [h1, 0.3 * h1, 0.09 * h1];
        let u2 = [0.25 * h2, -0.5 * h2, h2];
        let lap = [u1[0] + u1[2], u2[0] + u2[2]];
        let grad_div = [u1[0] + u2[1], u1[1] + u2[2]];
        let (mu, la) = (lame.mu, lame.lambda);
        [mu * lap[0] + (mu + la) * grad_div[0], mu * lap[1] + (mu + la) * grad_div[1]]
    }

    fn elastic(&self, lame: Lame, p: Point) -> SymTensor {
        lame.apply_c(sym_grad(self.shape_gradient(p)))
    }

    /// Boundary labels `bottom` (traction), `sides_f`, `sides_s`, `top` (velocity).
    pub fn mesh(&self, n: usize) -> Result<Mesh> {
        self.mesh_cells(n, n)
    }

    /// Same labels on an `nx` by `ny` grid; `ny` must be even.
    pub fn mesh_cells(&self, nx: usize, ny: usize) -> Result<Mesh> {
        generate_structured(Self::domain(), nx, ny, Some(0.5))?.classify_facets(&[
            ("bottom", &|p: Point| p[1] < 1e-12),
            ("top", &|p: Point| p[1] > 1.0 - 1e-12),
            ("sides_f", &|p: Point| p[1] > 1e-12 && p[1] < 0.5),
            ("sides_s", &|p: Point| p[1] > 0.5 && p[1] < 1.0 - 1e-12),
        ])
    }

    pub fn problem(&self, n: usize) -> Result<Problem> {
        self.problem_on(self.mesh(n)?)
    }

    /// The problem on any mesh of the unit square carrying the labels of
    /// [`PolynomialCase::mesh`].
    pub fn problem_on(&self, mesh: Mesh) -> Result<Problem> {
        let this = *self;
        let m = self.materials;
        let velocity = SpaceTimeField::general(move |p, t| this.velocity(p, t));
        let traction = SpaceTimeField::general(move |p, t| apply_normal(this.stress(Subdomain::Fluid, p, t), [0.0, -1.0]));
        let source = move |sub: Subdomain| {
            SpaceTimeField::general(move |p, t| {
                let rho = m.rho(sub);
                let r = Self::rigid(p);
                let u = this.shape(p);
                let (scale, lame) = match sub {
                    Subdomain::Fluid => (this.l(t), m.fluid()),
                    Subdomain::Solid => (this.big_l(t), m.solid()),
                };
                let div = this.shape_divergence(lame, p);
                std::array::from_fn(|a| rho * (this.dq(t) * r[a] + this.dl() * u[a]) - scale * div[a])
            })
        };
        let interface = SpaceTimeField::general(move |p, t| {
            let f = this.stress(Subdomain::Fluid, p, t);
            let s = this.stress(Subdomain::Solid, p, t);
            apply_normal([f[0] - s[0], f[1] - s[1], f[2] - s[2]], [0.0, 1.0])
        });
        Ok(Problem {
            mesh: Arc::new(mesh),
            materials: m,
            source_fluid: source(Subdomain::Fluid),
            source_solid: source(Subdomain::Solid),
            interface,
            bcs: vec![
                ("bottom".into(), BoundaryCondition::Traction(traction)),
                ("top".into(), BoundaryCondition::Velocity(velocity.clone())),
                ("sides_f".into(), BoundaryCondition::Velocity(velocity.clone())),
                ("sides_s".into(), BoundaryCondition::Velocity(velocity)),
            ],
        })
    }
}

impl ExactSolution for PolynomialCase {
    fn velocity(&self, p: Point, t: f64) -> [f64; 2] {
        let r = Self::rigid(p);
        let u = self.shape(p);
        [self.q(t) * r[0] + self.l(t) * u[0], self.q(t) * r[1] + self.l(t) * u[1]]
    }

    fn stress(&self, sub: Subdomain, p: Point, t: f64) -> SymTensor {
        match sub {
            Subdomain::Fluid => self.elastic(self.materials.fluid(), p).map(|v| self.l(t) * v),
            Subdomain::Solid => self.elastic(self.materials.solid(), p).map(|v| self.big_l(t) * v),
        }
    }

    fn pressure(&self, p: Point, t: f64) -> f64 {
        let g = self.shape_gradient(p);
        -self.materials.lambda_f * self.l(t) * (g[0][0] + g[1][1])
    }

    fn displacement(&self, p: Point, t: f64) -> [f64; 2] {
        let r = Self::rigid(p);
        let u = self.shape(p);
        [
            self.big_q(t) * r[0] + self.big_l(t) * u[0],
            self.big_q(t) * r[1] + self.big_l(t) * u[1],
        ]
    }
}

/// Raised-cosine inflow pressure pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub p_max: f64,
    pub t_max: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            p_max: 1.333e4,
            t_max: 0.003,
        }
    }
}

impl PulseSpec {
    pub fn eval(&self, t: f64) -> f64 {
        if (0.0..=self.t_max).contains(&t) {
            0.5 * self.p_max * (1.0 - (2.0 * PI * t / self.t_max).cos())
        } else {
            0.0
        }
    }
}

/// Channel flow driven by an inflow pressure pulse, with an elastic wall
/// attached to the channel by a spring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example2 {
    pub materials: MaterialSet,
    pub pulse: PulseSpec,
}

pub const EXAMPLE2_FLUID_HEIGHT: f64 = 0.5;
pub const EXAMPLE2_HEIGHT: f64 = 0.6;
pub const EXAMPLE2_LENGTH: f64 = 6.0;

impl Example2 {
    pub fn new(lambda_f: f64) -> Self {
        Example2 {
            materials: MaterialSet {
                rho_s: 1.1,
                mu_s: 0.575e6,
                lambda_s: 1.7e6,
                beta_s: 4e6,
                rho_f: 1.0,
                mu_f: 1.0,
                lambda_f,
            },
            pulse: PulseSpec::default(),
        }
    }

    /// Structured mesh with `h = 0.1 / refine`.
    pub fn mesh(refine: usize) -> Result<Mesh> {
        let r = refine.max(1);
        let (l, hf, h) = (EXAMPLE2_LENGTH, EXAMPLE2_FLUID_HEIGHT, EXAMPLE2_HEIGHT);
        let eps = 1e-9;
        generate_structured(Rect::new(0.0, l, 0.0, h), 60 * r, 6 * r, Some(hf))?.classify_facets(&[
            ("gamma_f_in", &|p: Point| p[0] < eps && p[1] < hf),
            ("gamma_f_out", &|p: Point| p[0] > l - eps && p[1] < hf),
            ("gamma_f_bot", &|p: Point| p[1] < eps),
            ("gamma_s_in", &|p: Point| p[0] < eps && p[1] > hf),
            ("gamma_s_out", &|p: Point| p[0] > l - eps && p[1] > hf),
            ("gamma_s_top", &|p: Point| p[1] > h - eps),
        ])
    }

    pub fn problem(&self, refine: usize) -> Result<Problem> {
        let pulse = self.pulse;
        let zero = || SpaceTimeField::<1>::Zero;
        let inflow = if pulse.p_max == 0.0 {
            zero()
        } else {
            SpaceTimeField::separable(move |t| -pulse.eval(t), |_| [1.0])
        };
        Ok(Problem {
            mesh: Arc::new(Self::mesh(refine)?),
            materials: self.materials,
            source_fluid: SpaceTimeField::Zero,
            source_solid: SpaceTimeField::Zero,
            interface: SpaceTimeField::Zero,
            bcs: vec![
                (
                    "gamma_f_in".into(),
                    BoundaryCondition::NormalStress {
                        stress: inflow,
                        tangential_velocity: zero(),
                    },
                ),
                (
                    "gamma_f_out".into(),
                    BoundaryCondition::NormalStress {
                        stress: zero(),
                        tangential_velocity: zero(),
                    },
                ),
                (
                    "gamma_f_bot".into(),
                    BoundaryCondition::NormalVelocity {
                        velocity: zero(),
                        tangential_stress: zero(),
                    },
                ),
                ("gamma_s_in".into(), BoundaryCondition::homogeneous_velocity()),
                ("gamma_s_out".into(), BoundaryCondition::homogeneous_velocity()),
                (
                    "gamma_s_top".into(),
                    BoundaryCondition::NormalStress {
                        stress: zero(),
                        tangential_velocity: zero(),
                    },
                ),
            ],
        })
    }
}
