#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{bisect, golden_max};
use crate::model::{KineticLaw, Potential};

/// Smallest `|L|` accepted as non-rectilinear.
pub const MIN_ANGULAR_MOMENTUM: f64 = 1e-6;

const SCAN_POINTS: usize = 2400;
const QUAD_START: usize = 32;
const QUAD_MAX: usize = 1 << 16;
const QUAD_RTOL: f64 = 1e-13;
const QUAD_ACCEPT: f64 = 1e-9;

/// Reduced one-degree-of-freedom problem at fixed energy `h` and angular momentum `L`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Radial<'a> {
    pub law: &'a KineticLaw,
    pub pot: &'a Potential,
    pub h: f64,
}

impl Radial<'_> {
    /// `|p|(r) = G⁻¹(h + V(r))`.
    pub fn p_abs(&self, r: f64) -> f64 {
        self.law.g_inv(self.h + self.pot.v(r))
    }

    pub fn pr2(&self, r: f64, l: f64) -> f64 {
        let p = self.p_abs(r);
        let q = l / r;
        (p - q) * (p + q)
    }

    /// Maximum of `r |p|(r)` over the potential's domain and its location.
    ///
    /// The maximum is the largest angular momentum admitting motion at
    /// energy `h`, attained on the circular orbit.
    pub fn circular(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.pot.domain();
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (SCAN_POINTS - 1) as f64;
        let g = |u: f64| {
            let r = u.exp();
            r * self.p_abs(r)
        };
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..SCAN_POINTS {
            let v = g(a + step * i as f64);
            if v > best.1 {
                best = (i, v);
            }
        }
        if !(best.1 > 0.0) {
            return Err(Error::NoBoundOrbit { h: self.h, l: 0.0 });
        }
        let u0 = a + step * best.0.saturating_sub(1) as f64;
        let u1 = (a + step * (best.0 + 1) as f64).min(b);
        let (u, v) = golden_max(g, u0, u1, 1e-15);
        let (u, v) = if v >= best.1 { (u, v) } else { (a + step * best.0 as f64, best.1) };
        Ok((u.exp(), v))
    }
}

/// Radial data of a bound planar orbit at energy `h` and angular momentum `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub h: f64,
    pub l: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Minimal period of `|x(t)|`.
    pub tau: f64,
    /// Angle swept from `r_min` to `r_max`.
    pub phi: f64,
}

impl RadialProfile {
    pub fn eccentricity(&self) -> f64 {
        (self.r_max - self.r_min) / (self.r_max + self.r_min)
    }
}

/// Largest angular momentum at energy `h` and the circular radius where it is attained.
pub fn circular_angular_momentum(law: &KineticLaw, pot: &Potential, h: f64) -> Result<(f64, f64)> {
    let (r, l) = Radial { law, pot, h }.circular()?;
    Ok((l, r))
}

/// Inner and outer turning radii: the roots of `p_r²(r)`.
pub fn turning_points(law: &KineticLaw, pot: &Potential, h: f64, l: f64) -> Result<(f64, f64)> {
    let l = l.abs();
    if !(l >= MIN_ANGULAR_MOMENTUM) {
        return Err(Error::InvalidParameter { name: "L", reason: "rectilinear motion (|L| below 1e-6) is not supported" });
    }
    if !h.is_finite() {
        return Err(Error::InvalidParameter { name: "h", reason: "must be finite" });
    }
    let rad = Radial { law, pot, h };
    let (r_c, l_c) = rad.circular().map_err(|_| Error::NoBoundOrbit { h, l })?;
    if (l_c - l).abs() <= 1e-12 * l_c {
        return Err(Error::CircularDegenerate { h, l });
    }
    if l > l_c {
        return Err(Error::NoBoundOrbit { h, l });
    }
    // `r|p|(r) − L` has the sign of p_r².
    let g = |r: f64| r * rad.p_abs(r) - l;
    let (lo, hi) = pot.domain();
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);

    let mut inner = r_c;
    let r_min = loop {
        let next = (inner / ratio).max(lo);
        if g(next) <= 0.0 {
            break bisect(g, next, inner);
        }
        if next <= lo {
            return Err(Error::NoBoundOrbit { h, l });
        }
        inner = next;
    };
    let mut outer = r_c;
    let r_max = loop {
        let next = (outer * ratio).min(hi);
        if g(next) <= 0.0 {
            break bisect(g, outer, next);
        }
        if next >= hi {
            return Err(Error::NoBoundOrbit { h, l });
        }
        outer = next;
    };
    if r_max - r_min <= 1e-10 * r_max {
        return Err(Error::CircularDegenerate { h, l });
    }
    Ok((r_min, r_max))
}

/// `∫_{r_min}^{r_max} w(r, p_r(r)) / p_r(r) dr`.
///
/// With `r = mid + half·sin u` the integrand becomes a smooth `2π`-periodic
/// function of `u`, so the trapezoidal rule over the full circle converges
/// geometrically. The node count doubles until two estimates agree or
/// rounding stops further improvement.
pub(crate) fn radial_quadrature<W: Fn(f64, f64) -> f64>(
    rad: &Radial<'_>,
    l: f64,
    r_min: f64,
    r_max: f64,
    weight: W,
) -> Result<f64> {
    let mid = 0.5 * (r_min + r_max);
    let half = 0.5 * (r_max - r_min);
    let eval = |n: usize| -> f64 {
        let step = 2.0 * PI / n as f64;
        let mut acc = 0.0;
        for j in 0..n {
            let u = -PI + (j as f64 + 0.5) * step;
            let (s, c) = u.sin_cos();
            let r = mid + half * s;
            let pr = rad.pr2(r, l).max(0.0).sqrt();
            if pr > 0.0 {
                acc += weight(r, pr) * half * c.abs() / pr;
            }
        }
        0.5 * step * acc
    };
    let mut n = QUAD_START;
    let mut prev = eval(n);
    let mut best = (f64::INFINITY, prev);
    while n < QUAD_MAX {
        n *= 2;
        let cur = eval(n);
        let change = (cur - prev).abs() / cur.abs().max(f64::MIN_POSITIVE);
        prev = cur;
        if change <= QUAD_RTOL {
            return Ok(cur);
        }
        if change < best.0 {
            best = (change, cur);
        }
        // nodes crowding the turning points amplify rounding in p_r²; past
        // that floor successive estimates drift apart again
        if best.0 <= QUAD_ACCEPT && change > 10.0 * best.0 {
            return Ok(best.1);
        }
    }
    if best.0 <= QUAD_ACCEPT {
        Ok(best.1)
    } else {
        Err(Error::Quadrature { change: best.0 })
    }
}

fn radial_of<'a>(law: &'a KineticLaw, pot: &'a Potential, h: f64) -> Radial<'a> {
    Radial { law, pot, h }
}

/// `τ = 2∫ |p| / (G′(|p|) p_r) dr`.
pub fn radial_period(law: &KineticLaw, pot: &Potential, profile: &RadialProfile) -> Result<f64> {
    let rad = radial_of(law, pot, profile.h);
    let tau = radial_quadrature(&rad, profile.l.abs(), profile.r_min, profile.r_max, |r, _| {
        1.0 / law.f_inv_over_s(rad.p_abs(r))
    })?;
    Ok(2.0 * tau)
}

/// `Φ = ∫ L / (r² p_r) dr`.
pub fn apsidal_angle(law: &KineticLaw, pot: &Potential, profile: &RadialProfile) -> Result<f64> {
    let rad = radial_of(law, pot, profile.h);
    let l = profile.l.abs();
    radial_quadrature(&rad, l, profile.r_min, profile.r_max, |r, _| l / (r * r))
}

/// `I₁ = (1/π) ∫ p_r dr`.
pub fn radial_action(law: &KineticLaw, pot: &Potential, profile: &RadialProfile) -> Result<f64> {
    let rad = radial_of(law, pot, profile.h);
    let v = radial_quadrature(&rad, profile.l.abs(), profile.r_min, profile.r_max, |_, pr| pr * pr)?;
    Ok(v / PI)
}

/// Turning points, radial period and apsidal angle at `(h, L)`.
pub fn radial_profile(law: &KineticLaw, pot: &Potential, h: f64, l: f64) -> Result<RadialProfile> {
    let (r_min, r_max) = turning_points(law, pot, h, l)?;
    let mut profile = RadialProfile { h, l, r_min, r_max, tau: 0.0, phi: 0.0 };
    profile.tau = radial_period(law, pot, &profile)?;
    profile.phi = apsidal_angle(law, pot, &profile)?;
    Ok(profile)
}

/// Apsidal angles sampled along a one-parameter family of profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiScan {
    pub parameter: Vec<f64>,
    pub phi: Vec<f64>,
}

impl PhiScan {
    pub fn range(&self) -> (f64, f64) {
        self.phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classical() -> KineticLaw {
        KineticLaw::classical(1.0).unwrap()
    }

    #[test]
    fn kepler_turning_points() {
        let (a, b) = turning_points(&classical(), &Potential::kepler(1.0).unwrap(), -0.375, 1.0).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn circular_limit_is_flagged() {
        let pot = Potential::kepler(1.0).unwrap();
        let (lc, rc) = circular_angular_momentum(&classical(), &pot, -0.5).unwrap();
        assert!((lc - 1.0).abs() < 1e-12 && (rc - 1.0).abs() < 1e-6);
        let err = turning_points(&classical(), &pot, -0.5, lc).unwrap_err();
        assert_eq!(err.code(), "CIRCULAR_DEGENERATE");
        assert_eq!(turning_points(&classical(), &pot, -0.5, 1.1).unwrap_err().code(), "NO_BOUND_ORBIT");
        assert_eq!(turning_points(&classical(), &pot, 0.1, 1.0).unwrap_err().code(), "NO_BOUND_ORBIT");
    }

    #[test]
    fn quadrature_rejects_nothing_on_smooth_profile() {
        let pot = Potential::homogeneous(1.0, 0.5).unwrap();
        let p = radial_profile(&classical(), &pot, -1.5, 0.5).unwrap();
        assert!(p.tau > 0.0 && p.phi > 0.0 && p.phi < PI);
    }
}
