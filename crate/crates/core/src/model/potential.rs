#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Radial potential `V(r)`. The force on the particle is `V'(|x|) x/|x|`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `V(r) = κ / (α r^α)`, attractive for every admissible `α`.
    Homogeneous { kappa: f64, alpha: f64 },
    /// `V(r) = κ/r + λ/r²`.
    LeviCivita { kappa: f64, lambda: f64 },
    Tabulated(TabulatedPotential),
}

impl Potential {
    pub fn homogeneous(kappa: f64, alpha: f64) -> Result<Self> {
        positive("kappa", kappa)?;
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(Error::InvalidParameter { name: "alpha", reason: "must be finite and nonzero" });
        }
        if alpha >= 2.0 {
            return Err(Error::NoNonCircularOrbits { alpha });
        }
        Ok(Potential::Homogeneous { kappa, alpha })
    }

    pub fn kepler(kappa: f64) -> Result<Self> {
        Self::homogeneous(kappa, 1.0)
    }

    /// Isotropic harmonic oscillator, `α = −2`.
    pub fn harmonic(kappa: f64) -> Result<Self> {
        Self::homogeneous(kappa, -2.0)
    }

    pub fn levi_civita(kappa: f64, lambda: f64) -> Result<Self> {
        positive("kappa", kappa)?;
        positive("lambda", lambda)?;
        Ok(Potential::LeviCivita { kappa, lambda })
    }

    pub fn v(&self, r: f64) -> f64 {
        match self {
            Potential::Homogeneous { kappa, alpha } => kappa / (alpha * r.powf(*alpha)),
            Potential::LeviCivita { kappa, lambda } => kappa / r + lambda / (r * r),
            Potential::Tabulated(t) => t.eval(r).0,
        }
    }

    pub fn dv(&self, r: f64) -> f64 {
        match self {
            Potential::Homogeneous { kappa, alpha } => -kappa * r.powf(-alpha - 1.0),
            Potential::LeviCivita { kappa, lambda } => -kappa / (r * r) - 2.0 * lambda / (r * r * r),
            Potential::Tabulated(t) => t.eval(r).1,
        }
    }

    pub fn d2v(&self, r: f64) -> f64 {
        match self {
            Potential::Homogeneous { kappa, alpha } => kappa * (alpha + 1.0) * r.powf(-alpha - 2.0),
            Potential::LeviCivita { kappa, lambda } => 2.0 * kappa / (r * r * r) + 6.0 * lambda / (r * r * r * r),
            Potential::Tabulated(t) => t.eval(r).2,
        }
    }

    /// Radii on which the potential is defined and searched for turning points.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Potential::Tabulated(t) => (t.r[0], t.r[t.r.len() - 1]),
            _ => (1e-6, 1e6),
        }
    }

    /// `lim V(r)` as `r → ∞` when finite.
    pub fn value_at_infinity(&self) -> Option<f64> {
        match self {
            Potential::Homogeneous { alpha, .. } if *alpha > 0.0 => Some(0.0),
            Potential::Homogeneous { .. } => None,
            Potential::LeviCivita { .. } => Some(0.0),
            Potential::Tabulated(_) => None,
        }
    }
}

/// Tabulated potential with analytic first and second derivative columns.
///
/// Each interval is a quintic Hermite interpolant matching `V`, `V'` and
/// `V''` at both nodes, so the interpolant is C² and its derivatives are
/// mutually consistent. Outside the table the end intervals are extended.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    r: Vec<f64>,
    v: Vec<f64>,
    dv: Vec<f64>,
    d2v: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(r: Vec<f64>, v: Vec<f64>, dv: Vec<f64>, d2v: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if n < 2 || v.len() != n || dv.len() != n || d2v.len() != n {
            return Err(Error::InvalidParameter { name: "table", reason: "needs at least two rows with four columns" });
        }
        if r[0] <= 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter { name: "table", reason: "radii must be positive and strictly increasing" });
        }
        if r.iter().chain(&v).chain(&dv).chain(&d2v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter { name: "table", reason: "entries must be finite" });
        }
        Ok(Self { r, v, dv, d2v })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.r.len();
        let i = match self.r.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (y0, d0, s0) = (self.v[i], self.dv[i] * h, self.d2v[i] * h * h);
        let (y1, d1, s1) = (self.v[i + 1], self.dv[i + 1] * h, self.d2v[i + 1] * h * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let basis = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
            0.5 * (t3 - 2.0 * t4 + t5),
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        ];
        let first = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
            0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        ];
        let second = [
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
            0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
            0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
        ];
        let coef = [y0, d0, s0, s1, d1, y1];
        let comb = |b: &[f64; 6]| coef.iter().zip(b).map(|(c, b)| c * b).sum::<f64>();
        (comb(&basis), comb(&first) / h, comb(&second) / (h * h))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: "must be finite and positive" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn homogeneous_closed_forms() {
        let p = Potential::homogeneous(2.0, 0.5).unwrap();
        let r: f64 = 1.7;
        assert!((p.v(r) - 2.0 / (0.5 * r.sqrt())).abs() < 1e-14);
        assert!((p.dv(r) + 2.0 * r.powf(-1.5)).abs() < 1e-14);
        assert!(p.dv(r) < 0.0);
    }

    #[test]
    fn levi_civita_force() {
        let p = Potential::levi_civita(1.0, 1.0).unwrap();
        assert!((p.dv(2.0) - (-0.25 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn derivatives_pass_second_order_difference_check() {
        let pots = [
            Potential::kepler(1.0).unwrap(),
            Potential::harmonic(1.0).unwrap(),
            Potential::homogeneous(1.0, -1.0).unwrap(),
            Potential::homogeneous(1.0, 1.5).unwrap(),
            Potential::levi_civita(1.0, 0.5).unwrap(),
        ];
        for p in &pots {
            for &r in &[0.5, 1.0, 2.3] {
                let e = |h: f64| ((p.v(r + h) - p.v(r - h)) / (2.0 * h) - p.dv(r)).abs();
                let e2 = |h: f64| ((p.dv(r + h) - p.dv(r - h)) / (2.0 * h) - p.d2v(r)).abs();
                let second_order = |e: &dyn Fn(f64) -> f64| e(1e-3) < 1e-10 || e(1e-3) / e(5e-4) > 3.0;
                assert!(e(1e-3) < 1e-4 && second_order(&e), "{p:?} r={r}");
                assert!(e2(1e-3) < 1e-3 && second_order(&e2), "{p:?} r={r}");
            }
        }
    }

    #[test]
    fn rejects_alpha_two_and_above() {
        assert_eq!(Potential::homogeneous(1.0, 2.5).unwrap_err().code(), "ORBIT_RANGE");
        assert!(Potential::homogeneous(1.0, 0.0).is_err());
        assert!(Potential::levi_civita(1.0, 0.0).is_err());
    }

    #[test]
    fn tabulated_reproduces_kepler() {
        let exact = Potential::kepler(1.0).unwrap();
        let r: Vec<f64> = (0..400).map(|i| 0.3 + i as f64 * 0.01).collect();
        let tab = TabulatedPotential::new(
            r.clone(),
            r.iter().map(|&x| exact.v(x)).collect(),
            r.iter().map(|&x| exact.dv(x)).collect(),
            r.iter().map(|&x| exact.d2v(x)).collect(),
        )
        .unwrap();
        let p = Potential::Tabulated(tab);
        for &x in &[0.3, 0.4567, 1.0, 2.6, 4.29] {
            assert!((p.v(x) - exact.v(x)).abs() < 1e-11);
            assert!((p.dv(x) - exact.dv(x)).abs() < 1e-8);
            assert!((p.d2v(x) - exact.d2v(x)).abs() < 1e-5);
        }
        // interpolant derivatives are consistent with each other
        let x = 1.234;
        let h = 1e-5;
        assert!(((p.v(x + h) - p.v(x - h)) / (2.0 * h) - p.dv(x)).abs() < 1e-8);
        assert_eq!(p.domain(), (0.3, r[399]));
    }

    #[test]
    fn tabulated_rejects_bad_input() {
        assert!(TabulatedPotential::new(vec![1.0], vec![1.0], vec![1.0], vec![1.0]).is_err());
        assert!(TabulatedPotential::new(vec![1.0, 1.0], vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]).is_err());
    }
}
