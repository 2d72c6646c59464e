#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::PI;

use super::Dim;
use crate::error::{Error, Result};
use crate::math::{cross, Vec3};

/// Time profile of a uniform electric forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeProfile {
    Constant,
    /// `cos(2π t / T_forcing)`
    Cosine,
}

/// Closed catalogue of perturbations with electrostatic potential `U_ε`
/// and magnetic vector potential `A_ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationFamily {
    Zero,
    /// `U_ε = ε ⟨e, x⟩ g(t)`, `A_ε = 0`.
    UniformElectric { direction: Vec3, profile: TimeProfile },
    /// `A_ε = (ε/2) B₀ ∧ x`, `U_ε = 0`.
    UniformMagnetic { b0: Vec3 },
    /// Planar only: `A_ε = ε (x₂, 0)`.
    RotatingFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub family: PerturbationFamily,
    pub eps: f64,
    pub forcing_period: f64,
}

/// Electric field and (pseudo-vector) magnetic field. In the plane the
/// magnetic field is reported as `(0, 0, ∂₁A₂ − ∂₂A₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fields {
    pub e: Vec3,
    pub b: Vec3,
}

pub type Mat3 = [[f64; 3]; 3];

impl Perturbation {
    pub fn zero() -> Self {
        Perturbation { family: PerturbationFamily::Zero, eps: 0.0, forcing_period: 1.0 }
    }

    pub fn new(family: PerturbationFamily, eps: f64, forcing_period: f64) -> Result<Self> {
        if !eps.is_finite() {
            return Err(Error::InvalidParameter { name: "eps", reason: "must be finite" });
        }
        if !(forcing_period.is_finite() && forcing_period > 0.0) {
            return Err(Error::InvalidParameter { name: "forcing_period", reason: "must be positive" });
        }
        Ok(Perturbation { family, eps, forcing_period })
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Perturbation { eps, ..*self }
    }

    /// True when neither `U_ε` nor `A_ε` depends on time.
    pub fn is_autonomous(&self) -> bool {
        match self.family {
            PerturbationFamily::UniformElectric { profile: TimeProfile::Cosine, .. } => self.eps == 0.0,
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eps == 0.0 || matches!(self.family, PerturbationFamily::Zero)
    }

    pub(crate) fn check_dim(&self, dim: Dim) -> Result<()> {
        match (self.family, dim) {
            (PerturbationFamily::RotatingFrame, Dim::Spatial) => {
                Err(Error::Unsupported("rotating-frame perturbation is planar only"))
            }
            (PerturbationFamily::UniformMagnetic { b0 }, Dim::Planar) if b0[0] != 0.0 || b0[1] != 0.0 => {
                Err(Error::Unsupported("planar magnetic field must be normal to the plane"))
            }
            (PerturbationFamily::UniformElectric { direction, .. }, Dim::Planar) if direction[2] != 0.0 => {
                Err(Error::Unsupported("planar electric field must lie in the plane"))
            }
            _ => Ok(()),
        }
    }

    fn profile(&self, t: f64) -> f64 {
        match self.family {
            PerturbationFamily::UniformElectric { profile: TimeProfile::Cosine, .. } => {
                (2.0 * PI * t / self.forcing_period).cos()
            }
            _ => 1.0,
        }
    }

    pub fn u(&self, t: f64, x: &Vec3) -> f64 {
        match self.family {
            PerturbationFamily::UniformElectric { direction, .. } => {
                self.eps * self.profile(t) * (direction[0] * x[0] + direction[1] * x[1] + direction[2] * x[2])
            }
            _ => 0.0,
        }
    }

    pub fn grad_u(&self, t: f64, _x: &Vec3) -> Vec3 {
        match self.family {
            PerturbationFamily::UniformElectric { direction, .. } => {
                let s = self.eps * self.profile(t);
                [s * direction[0], s * direction[1], s * direction[2]]
            }
            _ => [0.0; 3],
        }
    }

    /// `∇²U_ε`; identically zero for the catalogue, kept for the Hessian assembly.
    pub fn hess_u(&self, _t: f64, _x: &Vec3) -> Mat3 {
        [[0.0; 3]; 3]
    }

    pub fn a(&self, _t: f64, x: &Vec3) -> Vec3 {
        match self.family {
            PerturbationFamily::UniformMagnetic { b0 } => {
                let c = cross(&b0, x);
                [0.5 * self.eps * c[0], 0.5 * self.eps * c[1], 0.5 * self.eps * c[2]]
            }
            PerturbationFamily::RotatingFrame => [self.eps * x[1], 0.0, 0.0],
            _ => [0.0; 3],
        }
    }

    /// Jacobian `DₓA_ε` with entries `∂A_i/∂x_j`. Every family has `A_ε` affine in `x`.
    pub fn da(&self, _t: f64, _x: &Vec3) -> Mat3 {
        match self.family {
            PerturbationFamily::UniformMagnetic { b0 } => {
                let h = 0.5 * self.eps;
                [
                    [0.0, -h * b0[2], h * b0[1]],
                    [h * b0[2], 0.0, -h * b0[0]],
                    [-h * b0[1], h * b0[0], 0.0],
                ]
            }
            PerturbationFamily::RotatingFrame => [[0.0, self.eps, 0.0], [0.0; 3], [0.0; 3]],
            _ => [[0.0; 3]; 3],
        }
    }

    pub fn dt_a(&self, _t: f64, _x: &Vec3) -> Vec3 {
        [0.0; 3]
    }

    /// `E = ∇U − ∂ₜA`, `B = curl A`.
    pub fn fields(&self, t: f64, x: &Vec3, dim: Dim) -> Result<Fields> {
        self.check_dim(dim)?;
        if x.iter().all(|&c| c == 0.0) {
            return Err(Error::Domain("fields requested at x = 0"));
        }
        let gu = self.grad_u(t, x);
        let at = self.dt_a(t, x);
        let e = [gu[0] - at[0], gu[1] - at[1], gu[2] - at[2]];
        let d = self.da(t, x);
        let b = match dim {
            Dim::Spatial => [d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]],
            Dim::Planar => [0.0, 0.0, d[1][0] - d[0][1]],
        };
        Ok(Fields { e, b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnetic_curl_is_eps_b0() {
        let p = Perturbation::new(PerturbationFamily::UniformMagnetic { b0: [0.0, 0.0, 1.0] }, 0.1, 1.0).unwrap();
        let f = p.fields(0.3, &[1.0, 2.0, 3.0], Dim::Spatial).unwrap();
        assert_eq!(f.b, [0.0, 0.0, 0.1]);
        assert_eq!(f.e, [0.0; 3]);
    }

    #[test]
    fn zero_eps_gives_zero_fields() {
        let p = Perturbation::new(
            PerturbationFamily::UniformElectric { direction: [1.0, 0.0, 0.0], profile: TimeProfile::Cosine },
            0.0,
            2.0,
        )
        .unwrap();
        let f = p.fields(0.7, &[1.0, 0.0, 0.0], Dim::Spatial).unwrap();
        assert_eq!(f.e, [0.0; 3]);
        assert_eq!(f.b, [0.0; 3]);
        assert!(p.is_autonomous());
    }

    #[test]
    fn cosine_electric_at_t0() {
        let p = Perturbation::new(
            PerturbationFamily::UniformElectric { direction: [1.0, 0.0, 0.0], profile: TimeProfile::Cosine },
            0.01,
            5.0,
        )
        .unwrap();
        let f = p.fields(0.0, &[0.5, 0.5, 0.0], Dim::Spatial).unwrap();
        assert!((f.e[0] - 0.01).abs() < 1e-16 && f.e[1] == 0.0 && f.e[2] == 0.0);
        let g = p.fields(5.0, &[0.5, 0.5, 0.0], Dim::Spatial).unwrap();
        assert!((g.e[0] - 0.01).abs() < 1e-15);
        assert!(!p.is_autonomous());
    }

    #[test]
    fn rotating_frame_is_planar_only() {
        let p = Perturbation::new(PerturbationFamily::RotatingFrame, 0.1, 1.0).unwrap();
        assert_eq!(p.fields(0.0, &[1.0, 0.0, 0.0], Dim::Spatial).unwrap_err().code(), "UNSUPPORTED");
        let f = p.fields(0.0, &[1.0, 1.0, 0.0], Dim::Planar).unwrap();
        assert_eq!(f.b, [0.0, 0.0, -0.1]);
    }
}
