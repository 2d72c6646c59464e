//! Adaptive explicit Runge–Kutta driver with dense output.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use super::tableau::{A, A_DENSE, B_DENSE, B_HIGH, B_LOW, C, C_DENSE, DENSE_STAGES, STAGES};
use crate::error::{Error, Result};

/// Right-hand side `y' = f(t, y)` of a first-order system.
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    /// Upper bound on |h|.
    pub max_step: f64,
    pub max_steps: usize,
}

/// Stage data of one accepted step, enough to evaluate the interpolant.
pub struct AcceptedStep<'a> {
    pub t: f64,
    pub h: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    /// `DENSE_STAGES` slices of length `len`.
    pub k: &'a [Vec<f64>],
}

/// Interpolation weights at fraction `s ∈ [0, 1]` of a step.
///
/// The last coefficient of each stage is nudged so that `s = 1` reproduces
/// the propagated solution exactly (the published weights are rounded).
pub fn dense_weights(s: f64) -> [f64; DENSE_STAGES] {
    let mut w = [0.0; DENSE_STAGES];
    for (i, row) in B_DENSE.iter().enumerate() {
        let mut acc = 0.0;
        let mut sum = 0.0;
        for j in (0..6).rev() {
            acc = acc * s + row[j];
            sum += row[j];
        }
        let target = if i < STAGES { B_HIGH[i] } else { 0.0 };
        w[i] = acc * s + (target - sum) * s.powi(6);
    }
    w
}

/// Integrates from `t0` to `t1` (either direction), calling `on_step` after
/// every accepted step. Returns the final state.
pub fn integrate<S: OdeSystem, F: FnMut(&AcceptedStep<'_>)>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    ctl: &StepControl,
    mut on_step: F,
) -> Result<Vec<f64>> {
    let n = sys.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    if t1 == t0 {
        return Ok(y);
    }
    let mut k: Vec<Vec<f64>> = (0..DENSE_STAGES).map(|_| vec![0.0; n]).collect();
    let mut stage = vec![0.0; n];
    let mut y_high = vec![0.0; n];
    sys.rhs(t, &y, &mut k[0])?;

    let span = (t1 - t0).abs();
    let mut h = initial_step(sys, t, &y, &k[0], ctl, span)?.min(ctl.max_step).min(span);
    let mut steps = 0;
    let mut last_rejected = false;
    loop {
        if steps >= ctl.max_steps {
            return Err(Error::TooManySteps { max_steps: ctl.max_steps });
        }
        steps += 1;
        let remaining = (t1 - t).abs();
        let mut final_step = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            final_step = true;
        }
        let hs = dir * h;
        if t + hs == t {
            return Err(Error::StepSizeUnderflow { t });
        }
        for i in 1..STAGES {
            // written against k₀ so that rounded row sums do not enter
            for c in 0..n {
                let k0 = k[0][c];
                let mut acc = C[i] * k0;
                for j in 1..i {
                    let a = A[i][j];
                    if a != 0.0 {
                        acc += a * (k[j][c] - k0);
                    }
                }
                stage[c] = y[c] + hs * acc;
            }
            let (head, tail) = k.split_at_mut(i);
            let _ = head;
            sys.rhs(t + C[i] * hs, &stage, &mut tail[0])?;
        }
        let mut err: f64 = 0.0;
        for c in 0..n {
            let k0 = k[0][c];
            let mut hi = k0;
            let mut lo = k0;
            for i in 1..STAGES {
                hi += B_HIGH[i] * (k[i][c] - k0);
                lo += B_LOW[i] * (k[i][c] - k0);
            }
            y_high[c] = y[c] + hs * hi;
            let scale = ctl.tol * (1.0 + y[c].abs().max(y_high[c].abs()));
            err = err.max((hs * (hi - lo)).abs() / scale);
        }
        if !err.is_finite() {
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            // k[8] was evaluated at (t + h, y_high); the midpoint stage
            // completes the interpolant.
            for c in 0..n {
                let k0 = k[0][c];
                let mut acc = C_DENSE * k0;
                for j in 1..STAGES {
                    let a = A_DENSE[j];
                    if a != 0.0 {
                        acc += a * (k[j][c] - k0);
                    }
                }
                stage[c] = y[c] + hs * acc;
            }
            {
                let (head, tail) = k.split_at_mut(STAGES);
                let _ = head;
                sys.rhs(t + C_DENSE * hs, &stage, &mut tail[0])?;
            }
            let t_new = if final_step { t1 } else { t + hs };
            on_step(&AcceptedStep { t, h: t_new - t, y0: &y, y1: &y_high, k: &k });
            t = t_new;
            core::mem::swap(&mut y, &mut y_high);
            let last = k[STAGES - 1].clone();
            k[0].copy_from_slice(&last);
            if final_step {
                return Ok(y);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / 6.0)).clamp(0.2, 5.0) };
            let factor = if last_rejected { factor.min(1.0) } else { factor };
            h = (h * factor).min(ctl.max_step);
            last_rejected = false;
        } else {
            h *= (0.9 * err.powf(-1.0 / 6.0)).clamp(0.1, 0.9);
            last_rejected = true;
        }
    }
}

fn initial_step<S: OdeSystem>(sys: &S, t: f64, y: &[f64], f0: &[f64], ctl: &StepControl, span: f64) -> Result<f64> {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| ctl.tol * (1.0 + v.abs())).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    let h_guess = match sys.rhs(t + h0, &y1, &mut f1) {
        Ok(()) => {
            let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
            let d2 = rms(&diff) / h0;
            let m = d1.max(d2);
            if m <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / m).powf(1.0 / 6.0)
            }
        }
        Err(_) => h0 * 1e-2,
    };
    Ok((100.0 * h0).min(h_guess).max(1e-12 * span))
}
