//! Kinetic laws, potentials, perturbations and the Hamiltonian
//! `H_ε(t, x, p) = G(|p − A_ε(t,x)|) − V(|x|) − U_ε(t,x)` they assemble.
//!
//! Phase-space vectors are packed as `(x, p)`: `(x₁, x₂, p₁, p₂)` in the
//! plane and `(x₁, x₂, x₃, p₁, p₂, p₃)` in space.

mod kinetic;
mod perturbation;
mod potential;

pub use kinetic::KineticLaw;
pub use perturbation::{Fields, Mat3, Perturbation, PerturbationFamily, TimeProfile};
pub use potential::{Potential, TabulatedPotential};

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::{cross, Vec3};

/// Largest packed phase-space dimension.
pub const MAX_N: usize = 6;

pub type Packed = [f64; MAX_N];
pub type PackedMatrix = [[f64; MAX_N]; MAX_N];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Planar,
    Spatial,
}

impl Dim {
    /// Spatial dimension `d`.
    pub fn d(self) -> usize {
        match self {
            Dim::Planar => 2,
            Dim::Spatial => 3,
        }
    }

    /// Phase-space dimension `2d`.
    pub fn n(self) -> usize {
        2 * self.d()
    }
}

/// Point `(x, p)` in phase space. Planar states keep `x₃ = p₃ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub x: Vec3,
    pub p: Vec3,
}

impl PhaseState {
    pub fn planar(x: [f64; 2], p: [f64; 2]) -> Self {
        PhaseState { x: [x[0], x[1], 0.0], p: [p[0], p[1], 0.0] }
    }

    pub fn spatial(x: Vec3, p: Vec3) -> Self {
        PhaseState { x, p }
    }

    pub fn pack(&self, dim: Dim) -> Packed {
        let mut out = [0.0; MAX_N];
        let d = dim.d();
        out[..d].copy_from_slice(&self.x[..d]);
        out[d..2 * d].copy_from_slice(&self.p[..d]);
        out
    }

    pub fn unpack(dim: Dim, y: &[f64]) -> Self {
        let d = dim.d();
        let mut s = PhaseState { x: [0.0; 3], p: [0.0; 3] };
        s.x[..d].copy_from_slice(&y[..d]);
        s.p[..d].copy_from_slice(&y[d..2 * d]);
        s
    }

    pub fn radius(&self) -> f64 {
        crate::math::norm(&self.x)
    }

    pub fn distance(&self, other: &PhaseState) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            s += (self.x[i] - other.x[i]).powi(2) + (self.p[i] - other.p[i]).powi(2);
        }
        s.sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.distance(&PhaseState { x: [0.0; 3], p: [0.0; 3] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularMomentum {
    /// `x₁p₂ − x₂p₁`
    Planar(f64),
    /// `x ∧ p`
    Spatial(Vec3),
}

impl AngularMomentum {
    pub fn magnitude(&self) -> f64 {
        match self {
            AngularMomentum::Planar(l) => l.abs(),
            AngularMomentum::Spatial(v) => crate::math::norm(v),
        }
    }

    pub fn components(&self) -> Vec3 {
        match *self {
            AngularMomentum::Planar(l) => [0.0, 0.0, l],
            AngularMomentum::Spatial(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstIntegrals {
    pub energy: f64,
    pub angular_momentum: AngularMomentum,
}

/// A (possibly perturbed) central force problem in Hamiltonian form.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem {
    pub law: KineticLaw,
    pub potential: Potential,
    pub perturbation: Perturbation,
    pub dim: Dim,
}

impl HamiltonianSystem {
    pub fn new(law: KineticLaw, potential: Potential, perturbation: Perturbation, dim: Dim) -> Result<Self> {
        perturbation.check_dim(dim)?;
        Ok(HamiltonianSystem { law, potential, perturbation, dim })
    }

    pub fn unperturbed(law: KineticLaw, potential: Potential, dim: Dim) -> Self {
        HamiltonianSystem { law, potential, perturbation: Perturbation::zero(), dim }
    }

    pub fn with_perturbation(&self, perturbation: Perturbation) -> Result<Self> {
        Self::new(self.law, self.potential.clone(), perturbation, self.dim)
    }

    pub fn with_dim(&self, dim: Dim) -> Result<Self> {
        Self::new(self.law, self.potential.clone(), self.perturbation, dim)
    }

    pub fn n(&self) -> usize {
        self.dim.n()
    }

    pub fn is_autonomous(&self) -> bool {
        self.perturbation.is_autonomous()
    }

    /// `w = p − A_ε(t,x)` restricted to the active dimensions.
    fn kinetic_momentum(&self, t: f64, z: &PhaseState) -> Vec3 {
        let a = self.perturbation.a(t, &z.x);
        let d = self.dim.d();
        let mut w = [0.0; 3];
        for i in 0..d {
            w[i] = z.p[i] - a[i];
        }
        w
    }

    fn check_position(&self, z: &PhaseState) -> Result<f64> {
        let r = z.radius();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain("|x| must be positive"));
        }
        Ok(r)
    }

    pub fn hamiltonian(&self, t: f64, z: &PhaseState) -> Result<f64> {
        let r = self.check_position(z)?;
        let w = self.kinetic_momentum(t, z);
        let s = crate::math::norm(&w);
        if !(s < self.law.momentum_radius()) {
            return Err(Error::Domain("kinetic momentum outside the momentum domain"));
        }
        Ok(self.law.g(s) - self.potential.v(r) - self.perturbation.u(t, &z.x))
    }

    /// Hamilton's equations `ẋ = ∇ₚH_ε`, `ṗ = −∇ₓH_ε`.
    pub fn vector_field(&self, t: f64, z: &PhaseState) -> Result<PhaseState> {
        let r = self.check_position(z)?;
        let d = self.dim.d();
        let w = self.kinetic_momentum(t, z);
        let s = crate::math::norm(&w);
        if !(s < self.law.momentum_radius()) {
            return Err(Error::Domain("kinetic momentum outside the momentum domain"));
        }
        let k = self.law.f_inv_over_s(s);
        let mut v = [0.0; 3];
        for i in 0..d {
            v[i] = k * w[i];
        }
        let radial = self.potential.dv(r) / r;
        let gu = self.perturbation.grad_u(t, &z.x);
        let da = self.perturbation.da(t, &z.x);
        let mut pdot = [0.0; 3];
        for j in 0..d {
            let mut acc = radial * z.x[j] + gu[j];
            for i in 0..d {
                acc += da[i][j] * v[i];
            }
            pdot[j] = acc;
        }
        Ok(PhaseState { x: v, p: pdot })
    }

    /// Vector field on packed coordinates.
    pub fn vector_field_packed(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let z = PhaseState::unpack(self.dim, y);
        let f = self.vector_field(t, &z)?;
        let d = self.dim.d();
        dy[..d].copy_from_slice(&f.x[..d]);
        dy[d..2 * d].copy_from_slice(&f.p[..d]);
        Ok(())
    }

    /// `∇H_ε` on packed coordinates (`(∇ₓH, ∇ₚH)`).
    pub fn gradient_packed(&self, t: f64, y: &[f64]) -> Result<Packed> {
        let mut f = [0.0; MAX_N];
        self.vector_field_packed(t, y, &mut f)?;
        let d = self.dim.d();
        let mut g = [0.0; MAX_N];
        for i in 0..d {
            g[i] = -f[d + i];
            g[d + i] = f[i];
        }
        Ok(g)
    }

    /// Hessian `∇²_z H_ε` into a packed buffer (upper-left `2d × 2d` block).
    pub fn hessian_packed(&self, t: f64, y: &[f64], out: &mut PackedMatrix) -> Result<()> {
        let z = PhaseState::unpack(self.dim, y);
        let r = self.check_position(&z)?;
        let d = self.dim.d();
        let w = self.kinetic_momentum(t, &z);
        let s = crate::math::norm(&w);
        if s == 0.0 {
            return Err(Error::DegenerateMomentum);
        }
        if !(s < self.law.momentum_radius()) {
            return Err(Error::Domain("kinetic momentum outside the momentum domain"));
        }
        // ∇²G(w) = G''(s) ŵŵᵀ + (G'(s)/s)(I − ŵŵᵀ)
        let a = self.law.f_inv_prime(s);
        let b = self.law.f_inv_over_s(s);
        let mut kin = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                let wij = w[i] * w[j] / (s * s);
                kin[i][j] = (a - b) * wij + if i == j { b } else { 0.0 };
            }
        }
        // ∇²V(|x|) = V'' x̂x̂ᵀ + (V'/r)(I − x̂x̂ᵀ)
        let v1 = self.potential.dv(r);
        let v2 = self.potential.d2v(r);
        let da = self.perturbation.da(t, &z.x);
        let hu = self.perturbation.hess_u(t, &z.x);
        // K·DA
        let mut k_da = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                k_da[i][j] = (0..d).map(|l| kin[i][l] * da[l][j]).sum();
            }
        }
        for row in out.iter_mut() {
            row.fill(0.0);
        }
        for i in 0..d {
            for j in 0..d {
                let xij = z.x[i] * z.x[j] / (r * r);
                let hv = (v2 - v1 / r) * xij + if i == j { v1 / r } else { 0.0 };
                let da_k_da: f64 = (0..d).map(|l| da[l][i] * k_da[l][j]).sum();
                out[i][j] = da_k_da - hv - hu[i][j];
                // H_xp = −DAᵀ K, H_px = −K DA
                out[i][d + j] = -k_da[j][i];
                out[d + i][j] = -k_da[i][j];
                out[d + i][d + j] = kin[i][j];
            }
        }
        Ok(())
    }

    pub fn hessian(&self, t: f64, z: &PhaseState) -> Result<DMatrix<f64>> {
        let mut h = [[0.0; MAX_N]; MAX_N];
        self.hessian_packed(t, &z.pack(self.dim), &mut h)?;
        let n = self.n();
        Ok(DMatrix::from_fn(n, n, |i, j| h[i][j]))
    }

    pub fn angular_momentum(&self, z: &PhaseState) -> AngularMomentum {
        match self.dim {
            Dim::Planar => AngularMomentum::Planar(z.x[0] * z.p[1] - z.x[1] * z.p[0]),
            Dim::Spatial => AngularMomentum::Spatial(cross(&z.x, &z.p)),
        }
    }

    pub fn first_integrals(&self, t: f64, z: &PhaseState) -> Result<FirstIntegrals> {
        Ok(FirstIntegrals { energy: self.hamiltonian(t, z)?, angular_momentum: self.angular_momentum(z) })
    }

    pub fn fields(&self, t: f64, x: &Vec3) -> Result<Fields> {
        self.perturbation.fields(t, x, self.dim)
    }
}

/// Standard symplectic matrix `J = [[0, −I], [I, 0]]` of size `n`.
pub fn symplectic_j(n: usize) -> DMatrix<f64> {
    let d = n / 2;
    DMatrix::from_fn(n, n, |i, j| {
        if i < d && j == i + d {
            -1.0
        } else if i >= d && j + d == i {
            1.0
        } else {
            0.0
        }
    })
}
