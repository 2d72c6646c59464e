
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};

/// Radial profile of the momentum–velocity homeomorphism `p = f(|v|) v/|v|`.
///
/// Both built-in laws have an unbounded momentum domain, so only the
/// velocity domain differs (`a = c` for the relativistic law).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KineticLaw {
    Classical { m: f64 },
    Relativistic { m: f64, c: f64 },
}

impl KineticLaw {
    pub fn classical(m: f64) -> Result<Self> {
        check_positive("m", m)?;
        Ok(KineticLaw::Classical { m })
    }

    pub fn relativistic(m: f64, c: f64) -> Result<Self> {
        check_positive("m", m)?;
        check_positive("c", c)?;
        Ok(KineticLaw::Relativistic { m, c })
    }

    pub fn mass(&self) -> f64 {
        match *self {
            KineticLaw::Classical { m } | KineticLaw::Relativistic { m, .. } => m,
        }
    }

    pub fn is_relativistic(&self) -> bool {
        matches!(self, KineticLaw::Relativistic { .. })
    }

    /// Radius `a` of the velocity domain.
    pub fn velocity_radius(&self) -> f64 {
        match *self {
            KineticLaw::Classical { .. } => f64::INFINITY,
            KineticLaw::Relativistic { c, .. } => c,
        }
    }

    /// Radius `b` of the momentum domain.
    pub fn momentum_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// Momentum magnitude for speed `s`.
    pub fn f(&self, s: f64) -> f64 {
        match *self {
            KineticLaw::Classical { m } => m * s,
            KineticLaw::Relativistic { m, c } => m * s / (1.0 - (s / c).powi(2)).sqrt(),
        }
    }

    /// Speed for momentum magnitude `s`; equals `G'(s)`.
    pub fn f_inv(&self, s: f64) -> f64 {
        match *self {
            KineticLaw::Classical { m } => s / m,
            KineticLaw::Relativistic { m, c } => s / (m * (1.0 + (s / (m * c)).powi(2)).sqrt()),
        }
    }

    /// `G''(s) = (f⁻¹)'(s)`.
    pub fn f_inv_prime(&self, s: f64) -> f64 {
        match *self {
            KineticLaw::Classical { m } => 1.0 / m,
            KineticLaw::Relativistic { m, c } => {
                let q = 1.0 + (s / (m * c)).powi(2);
                1.0 / (m * q * q.sqrt())
            }
        }
    }

    /// `f⁻¹(s)/s`, finite at `s = 0` for both laws.
    pub fn f_inv_over_s(&self, s: f64) -> f64 {
        match *self {
            KineticLaw::Classical { m } => 1.0 / m,
            KineticLaw::Relativistic { m, c } => 1.0 / (m * (1.0 + (s / (m * c)).powi(2)).sqrt()),
        }
    }

    /// Lagrangian kinetic term `F(s) = ∫₀ˢ f`.
    pub fn big_f(&self, s: f64) -> f64 {
        match *self {
            KineticLaw::Classical { m } => 0.5 * m * s * s,
            KineticLaw::Relativistic { m, c } => {
                let v = (s / c).powi(2);
                m * s * s / (1.0 + (1.0 - v).sqrt())
            }
        }
    }

    /// Hamiltonian kinetic term `G(s) = ∫₀ˢ f⁻¹`.
    pub fn g(&self, s: f64) -> f64 {
        match *self {
            KineticLaw::Classical { m } => 0.5 * s * s / m,
            KineticLaw::Relativistic { m, c } => {
                let u = (s / (m * c)).powi(2);
                s * s / (m * ((1.0 + u).sqrt() + 1.0))
            }
        }
    }

    /// Inverse of `G` on `[0, ∞)`; negative arguments map to zero momentum.
    pub fn g_inv(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        match *self {
            KineticLaw::Classical { m } => (2.0 * m * e).sqrt(),
            KineticLaw::Relativistic { m, c } => (e * e / (c * c) + 2.0 * m * e).sqrt(),
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: "must be finite and positive" })
    }
}
