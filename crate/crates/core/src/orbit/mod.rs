//! Radial reduction of the planar unperturbed problem and closed orbits.

mod manifold;
mod radial;

pub use manifold::{manifold_samples, so3_samples, Group, ManifoldElement, ManifoldSample};
pub use radial::{
    apsidal_angle, circular_angular_momentum, radial_action, radial_period, radial_profile, turning_points,
    PhiScan, RadialProfile, MIN_ANGULAR_MOMENTUM,
};
#[allow(unused_imports)]
pub(crate) use radial::{radial_quadrature, Radial};

#[allow(unused_imports)]
use num_traits::{Euclid, Float};
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flow::{integrate, IntegratorOptions, Trajectory};
use crate::math::brent;
use crate::model::{Dim, HamiltonianSystem, KineticLaw, PhaseState, Potential};

/// Minimal relative gap `(r_max − r_min)/r_max` of a non-circular orbit.
pub const MIN_ECCENTRICITY_GAP: f64 = 1e-4;

/// Parameter varied while targeting a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Search {
    /// Fixed energy, vary `L`.
    VaryL,
    /// Fixed `L`, vary energy.
    VaryH,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedOrbitOptions {
    pub search: Search,
    /// Number of scan points along the varied parameter.
    pub scan_points: usize,
    /// Stop when `|Φ − kπ/n|` falls below this.
    pub phi_tol: f64,
    pub integrator: IntegratorOptions,
}

impl Default for ClosedOrbitOptions {
    fn default() -> Self {
        ClosedOrbitOptions { search: Search::VaryL, scan_points: 48, phi_tol: 1e-11, integrator: IntegratorOptions::default() }
    }
}

/// Closed non-circular orbit of the planar unperturbed problem.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub law: KineticLaw,
    pub potential: Potential,
    pub profile: RadialProfile,
    pub k: u32,
    pub n: u32,
    /// Full period `n·τ`.
    pub period: f64,
    /// Apogee on the positive `x₁`-axis.
    pub z0: PhaseState,
    pub trajectory: Trajectory,
    pub dim: Dim,
    /// `|z(T) − z(0)|`.
    pub closure_residual: f64,
}

impl PeriodicOrbit {
    /// Unperturbed system in the orbit's dimension.
    pub fn system(&self) -> HamiltonianSystem {
        HamiltonianSystem::unperturbed(self.law, self.potential.clone(), self.dim)
    }

    pub fn initial_state_in(&self, _dim: Dim) -> PhaseState {
        self.z0
    }

    /// Same orbit regarded as a solution of the spatial problem in `x₃ = 0`.
    pub fn embed_spatial(&self) -> PeriodicOrbit {
        PeriodicOrbit { dim: Dim::Spatial, trajectory: self.trajectory.embed_spatial(), ..self.clone() }
    }

    /// State at time `t`, wrapped into `[0, T)`.
    pub fn state_at(&self, t: f64) -> PhaseState {
        let s = Euclid::rem_euclid(&t, &self.period);
        self.trajectory
            .state_at(s.min(self.trajectory.t1))
            .expect("wrapped time lies in the stored span")
    }

    pub fn closure_tolerance(&self) -> f64 {
        1e-8 * (1.0 + self.z0.norm())
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Closes the orbit through `profile`, assuming `Φ = kπ/n`.
pub fn orbit_from_profile(
    law: &KineticLaw,
    pot: &Potential,
    profile: RadialProfile,
    k: u32,
    n: u32,
    opts: &IntegratorOptions,
) -> Result<PeriodicOrbit> {
    if (profile.r_max - profile.r_min) / profile.r_max < MIN_ECCENTRICITY_GAP {
        return Err(Error::CircularDegenerate { h: profile.h, l: profile.l });
    }
    let sys = HamiltonianSystem::unperturbed(*law, pot.clone(), Dim::Planar);
    let z0 = PhaseState::planar([profile.r_max, 0.0], [0.0, profile.l / profile.r_max]);
    let period = n as f64 * profile.tau;
    let trajectory = integrate(&sys, &z0, 0.0, period, opts)?;
    let residual = trajectory.final_state().distance(&z0);
    let tolerance = 1e-8 * (1.0 + z0.norm());
    if !(residual <= tolerance) {
        return Err(Error::ClosureFailed { residual, tolerance });
    }
    Ok(PeriodicOrbit {
        law: *law,
        potential: pot.clone(),
        profile,
        k,
        n,
        period,
        z0,
        trajectory,
        dim: Dim::Planar,
        closure_residual: residual,
    })
}

/// Admissible interval of the varied parameter, excluding the circular end.
fn parameter_range(law: &KineticLaw, pot: &Potential, h: f64, l: f64, search: Search) -> Result<(f64, f64)> {
    match search {
        Search::VaryL => {
            let (lc, _) = circular_angular_momentum(law, pot, h)?;
            Ok((0.02 * lc, 0.998 * lc))
        }
        Search::VaryH => {
            // lowest energy at this L: circular orbit, where h ↦ L_circ(h) crosses L
            let lcirc = |e: f64| circular_angular_momentum(law, pot, e).map(|v| v.0).unwrap_or(0.0);
            let mut lo = h;
            let mut span = h.abs().max(1.0);
            while lcirc(lo) >= l.abs() {
                lo -= span;
                span *= 2.0;
                if span > 1e12 {
                    return Err(Error::NoBoundOrbit { h, l });
                }
            }
            let mut hi = h;
            span = h.abs().max(1.0);
            while lcirc(hi) < l.abs() {
                hi += span;
                span *= 2.0;
                if span > 1e12 {
                    return Err(Error::NoBoundOrbit { h, l });
                }
            }
            let h_circ = brent(|e| lcirc(e) - l.abs(), lo, hi, 0.0, 200).ok_or(Error::RootStagnation { iterations: 200 })?;
            let top = match pot.value_at_infinity() {
                Some(v) => -v,
                None => h_circ + 50.0 * (h - h_circ).abs().max(1.0),
            };
            let width = top - h_circ;
            Ok((h_circ + 0.002 * width, h_circ + 0.98 * width))
        }
    }
}

/// Apsidal angle as a function of the varied parameter.
pub fn scan_apsidal_angle(
    law: &KineticLaw,
    pot: &Potential,
    h: f64,
    l: f64,
    search: Search,
    points: usize,
) -> Result<PhiScan> {
    let (lo, hi) = parameter_range(law, pot, h, l, search)?;
    let mut scan = PhiScan { parameter: Vec::new(), phi: Vec::new() };
    for i in 0..points.max(2) {
        let s = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
        let (hh, ll) = match search {
            Search::VaryL => (h, s),
            Search::VaryH => (s, l),
        };
        if let Ok(p) = radial_profile(law, pot, hh, ll) {
            scan.parameter.push(s);
            scan.phi.push(p.phi);
        }
    }
    if scan.phi.is_empty() {
        return Err(Error::NoBoundOrbit { h, l });
    }
    Ok(scan)
}

/// Finds a `k:n` resonant orbit (`Φ = kπ/n`) near the seed `(h, L)`.
pub fn find_closed_orbit(
    law: &KineticLaw,
    pot: &Potential,
    k: u32,
    n: u32,
    h: f64,
    l: f64,
    opts: &ClosedOrbitOptions,
) -> Result<PeriodicOrbit> {
    if k == 0 || n == 0 || gcd(k, n) != 1 {
        return Err(Error::InvalidParameter { name: "k:n", reason: "must be coprime positive integers" });
    }
    let target = k as f64 * PI / n as f64;
    let profile_at = |s: f64| match opts.search {
        Search::VaryL => radial_profile(law, pot, h, s),
        Search::VaryH => radial_profile(law, pot, s, l),
    };
    let seed = match opts.search {
        Search::VaryL => l,
        Search::VaryH => h,
    };
    if let Ok(p) = profile_at(seed) {
        if (p.phi - target).abs() <= opts.phi_tol {
            return orbit_from_profile(law, pot, p, k, n, &opts.integrator);
        }
    }
    let scan = scan_apsidal_angle(law, pot, h, l, opts.search, opts.scan_points)?;
    let (lo, hi) = scan.range();
    let mut best: Option<(f64, f64)> = None;
    for i in 1..scan.phi.len() {
        let (a, b) = (scan.phi[i - 1] - target, scan.phi[i] - target);
        if (a > 0.0) != (b > 0.0) || a == 0.0 {
            let (pa, pb) = (scan.parameter[i - 1], scan.parameter[i]);
            let dist = (0.5 * (pa + pb) - seed).abs();
            if best.is_none_or(|(x, y)| dist < (0.5 * (x + y) - seed).abs()) {
                best = Some((pa, pb));
            }
        }
    }
    let (a, b) = best.ok_or(Error::TargetOutOfRange { target, lo, hi })?;
    let root = brent(
        |s| profile_at(s).map(|p| p.phi - target).unwrap_or(f64::NAN),
        a,
        b,
        opts.phi_tol,
        200,
    )
    .ok_or(Error::RootStagnation { iterations: 200 })?;
    let profile = profile_at(root)?;
    if !((profile.phi - target).abs() <= opts.phi_tol) {
        return Err(Error::RootStagnation { iterations: 200 });
    }
    orbit_from_profile(law, pot, profile, k, n, &opts.integrator)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coprimality_enforced() {
        let law = KineticLaw::classical(1.0).unwrap();
        let pot = Potential::kepler(1.0).unwrap();
        let err = find_closed_orbit(&law, &pot, 2, 2, -0.375, 1.0, &ClosedOrbitOptions::default()).unwrap_err();
        assert_eq!(err.code(), "INVALID_PARAMETER");
    }

    #[test]
    fn kepler_closes_at_seed() {
        let law = KineticLaw::classical(1.0).unwrap();
        let pot = Potential::kepler(1.0).unwrap();
        let orbit = find_closed_orbit(&law, &pot, 1, 1, -0.375, 1.0, &ClosedOrbitOptions::default()).unwrap();
        assert_eq!(orbit.profile.l, 1.0);
        assert!((orbit.period - orbit.profile.tau).abs() < 1e-15);
        assert!(orbit.closure_residual < 1e-9);
        let z = orbit.state_at(orbit.period + 0.25);
        assert!(z.distance(&orbit.state_at(0.25)) < 1e-8);
    }
}
