//! Action variables of the planar problem and the non-degeneracy
//! determinants of `K₀`, computed through the `(h, L) ↦ (I₁, I₂)` chart.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{KineticLaw, Potential};
use crate::orbit::{radial_action, radial_profile, RadialProfile};

/// Default relative threshold on the normalized determinants.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Default relative finite-difference step in `(h, L)`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Action coordinates and frequencies of one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionPoint {
    pub profile: RadialProfile,
    pub h: f64,
    pub l: f64,
    pub i1: f64,
    /// `I₂ = L`.
    pub i2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// `(ω₁, ω₂) = (2π/τ, 2Φ/τ)`.
pub fn frequencies(profile: &RadialProfile) -> (f64, f64) {
    (2.0 * PI / profile.tau, 2.0 * profile.phi / profile.tau)
}

pub fn action_point(law: &KineticLaw, pot: &Potential, h: f64, l: f64) -> Result<ActionPoint> {
    let profile = radial_profile(law, pot, h, l)?;
    let i1 = radial_action(law, pot, &profile)?;
    let (omega1, omega2) = frequencies(&profile);
    Ok(ActionPoint { profile, h, l, i1, i2: l, omega1, omega2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Nondegenerate,
    Degenerate,
}

impl Verdict {
    pub fn is_nondegenerate(self) -> bool {
        self == Verdict::Nondegenerate
    }
}

/// `∇²K₀`, `∇K₀` and both non-degeneracy determinants at one action point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NondegReport {
    pub point: ActionPoint,
    pub hessian: [[f64; 2]; 2],
    /// `(ω₁, ω₂)`
    pub gradient: [f64; 2],
    pub di1_dh: f64,
    pub di1_dl: f64,
    pub det_fixed_period: f64,
    /// Determinant of `[[∇²K₀, ∇K₀ᵀ], [∇K₀, 0]]`.
    pub det_fixed_energy: f64,
    pub hessian_norm: f64,
    /// `det / ‖∇²K₀‖_F²`, zero when the Hessian vanishes numerically.
    pub normalized_fixed_period: f64,
    /// `det / (‖∇²K₀‖_F |∇K₀|²)`, zero when the Hessian vanishes numerically.
    pub normalized_fixed_energy: f64,
    /// `|H₁₂ − H₂₁|`
    pub symmetry_defect: f64,
    /// `|∂I₁/∂h − τ/2π|`
    pub chart_defect: f64,
    /// Hessian norms below this are treated as zero.
    pub zero_hessian_level: f64,
    pub fd_step: f64,
}

impl NondegReport {
    pub fn hessian_is_zero(&self) -> bool {
        self.hessian_norm <= self.zero_hessian_level
    }
}

/// Central-difference `∇²K₀ = D_{(h,L)}ω · (D_{(h,L)}I)⁻¹` with the relative
/// step `fd_step`.
pub fn k0_hessian(law: &KineticLaw, pot: &Potential, h: f64, l: f64, fd_step: f64) -> Result<NondegReport> {
    if !(fd_step > 0.0 && fd_step < 0.1) {
        return Err(Error::InvalidParameter { name: "fd_step", reason: "must lie in (0, 0.1)" });
    }
    let center = action_point(law, pot, h, l)?;
    let dh = fd_step * h.abs().max(l.abs() * center.omega2);
    let dl = fd_step * l.abs();
    let hp = action_point(law, pot, h + dh, l)?;
    let hm = action_point(law, pot, h - dh, l)?;
    let lp = action_point(law, pot, h, l + dl)?;
    let lm = action_point(law, pot, h, l - dl)?;

    let dw1_dh = (hp.omega1 - hm.omega1) / (2.0 * dh);
    let dw2_dh = (hp.omega2 - hm.omega2) / (2.0 * dh);
    let dw1_dl = (lp.omega1 - lm.omega1) / (2.0 * dl);
    let dw2_dl = (lp.omega2 - lm.omega2) / (2.0 * dl);
    let di1_dh = (hp.i1 - hm.i1) / (2.0 * dh);
    let di1_dl = (lp.i1 - lm.i1) / (2.0 * dl);

    // D I = [[a, b], [0, 1]]  ⇒  (D I)⁻¹ = [[1/a, −b/a], [0, 1]]
    if di1_dh.abs() < 1e-12 {
        return Err(Error::ChartSingular);
    }
    let inv = [[1.0 / di1_dh, -di1_dl / di1_dh], [0.0, 1.0]];
    let dw = [[dw1_dh, dw1_dl], [dw2_dh, dw2_dl]];
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = dw[i][0] * inv[0][j] + dw[i][1] * inv[1][j];
        }
    }
    let gradient = [center.omega1, center.omega2];
    let grad_norm = (gradient[0] * gradient[0] + gradient[1] * gradient[1]).sqrt();
    if grad_norm < 1e-12 {
        return Err(Error::ZeroGradient);
    }
    let norm = hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    // expansion of the bordered determinant along the last row
    let (w1, w2) = (gradient[0], gradient[1]);
    let bordered = -(w1 * w1 * hess[1][1] - w1 * w2 * (hess[0][1] + hess[1][0]) + w2 * w2 * hess[0][0]);
    let zero_level = 1e-6 * grad_norm / center.i1.abs().max(f64::MIN_POSITIVE);
    let zero = norm <= zero_level;
    Ok(NondegReport {
        point: center,
        hessian: hess,
        gradient,
        di1_dh,
        di1_dl,
        det_fixed_period: det,
        det_fixed_energy: bordered,
        hessian_norm: norm,
        normalized_fixed_period: if zero { 0.0 } else { det / (norm * norm) },
        normalized_fixed_energy: if zero { 0.0 } else { bordered / (norm * grad_norm * grad_norm) },
        symmetry_defect: (hess[0][1] - hess[1][0]).abs(),
        chart_defect: (di1_dh - center.profile.tau / (2.0 * PI)).abs(),
        zero_hessian_level: zero_level,
        fd_step,
    })
}

/// Non-degenerate iff `|det ∇²K₀| / ‖∇²K₀‖_F² > threshold`.
pub fn nondeg_fixed_period(report: &NondegReport, threshold: f64) -> (Verdict, f64) {
    verdict(report.normalized_fixed_period, threshold)
}

/// Non-degenerate iff the normalized bordered determinant exceeds `threshold` in magnitude.
pub fn nondeg_fixed_energy(report: &NondegReport, threshold: f64) -> (Verdict, f64) {
    verdict(report.normalized_fixed_energy, threshold)
}

fn verdict(value: f64, threshold: f64) -> (Verdict, f64) {
    let v = if value.abs() > threshold { Verdict::Nondegenerate } else { Verdict::Degenerate };
    (v, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kepler_frequencies_coincide() {
        let law = KineticLaw::classical(1.0).unwrap();
        let p = action_point(&law, &Potential::kepler(1.0).unwrap(), -0.375, 1.0).unwrap();
        assert!((p.omega1 - p.omega2).abs() < 1e-12);
        assert!((p.omega1 - 2.0 * PI / 9.673596609249161).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_step() {
        let law = KineticLaw::classical(1.0).unwrap();
        assert!(k0_hessian(&law, &Potential::kepler(1.0).unwrap(), -0.375, 1.0, 0.0).is_err());
    }
}
