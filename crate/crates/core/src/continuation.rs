//! Continuation of unperturbed periodic orbits into the perturbed problem
//! by damped Gauss–Newton shooting.

#[allow(unused_imports)]
use num_traits::{Euclid, Float};
use alloc::vec;
use core::f64::consts::PI;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flow::{integrate, invariant_drift, propagate, propagate_with_variational, IntegratorOptions, Trajectory};
use crate::math::{golden_max, nelder_mead};
use crate::model::{symplectic_j, HamiltonianSystem, Mat3, PerturbationFamily, PhaseState, MAX_N};
use crate::orbit::{ManifoldElement, ManifoldSample, PeriodicOrbit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// `T`-periodic solutions of the (possibly time-dependent) problem.
    FixedPeriod { period: f64 },
    /// Solutions on the energy level `h` with unknown period.
    FixedEnergy { h: f64 },
}

/// Boundary value problem for one seed.
#[derive(Debug, Clone)]
pub struct ShootingProblem {
    /// Perturbed system; the perturbation's `eps` is replaced along the path.
    pub sys: HamiltonianSystem,
    pub mode: Mode,
    pub seed: PhaseState,
    /// Initial period guess (ignored for fixed period).
    pub seed_period: f64,
    /// Reference state `z*₀` of the fixed-energy phase condition.
    pub phase_anchor: PhaseState,
}

impl ShootingProblem {
    pub fn fixed_period(sys: HamiltonianSystem, period: f64, seed: PhaseState) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter { name: "period", reason: "must be positive" });
        }
        if !sys.perturbation.with_eps(1.0).is_autonomous() {
            let ratio = period / sys.perturbation.forcing_period;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(Error::InvalidParameter {
                    name: "forcing_period",
                    reason: "must divide the orbit period for a fixed-period problem",
                });
            }
        }
        Ok(ShootingProblem { sys, mode: Mode::FixedPeriod { period }, seed, seed_period: period, phase_anchor: seed })
    }

    pub fn fixed_energy(sys: HamiltonianSystem, h: f64, seed: PhaseState, seed_period: f64) -> Result<Self> {
        if !sys.perturbation.with_eps(1.0).is_autonomous() {
            return Err(Error::InvalidParameter {
                name: "perturbation",
                reason: "fixed-energy continuation needs a time-independent perturbation",
            });
        }
        if !(seed_period > 0.0 && seed_period.is_finite()) {
            return Err(Error::InvalidParameter { name: "seed_period", reason: "must be positive" });
        }
        Ok(ShootingProblem { sys, mode: Mode::FixedEnergy { h }, seed, seed_period, phase_anchor: seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// First `ε` of the path.
    pub eps_start: f64,
    pub max_newton: usize,
    /// Accept when `‖Φ_T(z₀) − z₀‖ ≤ residual_tol·(1 + |z₀|)`.
    pub residual_tol: f64,
    pub energy_tol: f64,
    /// Damping after the first fallback, relative to `σ_max(J)²`.
    pub initial_damping: f64,
    /// Damping above this aborts the solve.
    pub max_damping: f64,
    pub integrator: IntegratorOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            eps_start: 1e-4,
            max_newton: 40,
            residual_tol: 1e-9,
            energy_tol: 1e-10,
            initial_damping: 1e-6,
            max_damping: 1e8,
            integrator: IntegratorOptions::with_tol(1e-13),
        }
    }
}

/// `ε` values from `eps_start` to `target`: the start, then successive
/// halvings of the target that exceed it, in increasing order.
pub fn eps_path(eps_start: f64, target: f64) -> Vec<f64> {
    if target <= eps_start {
        return vec![target];
    }
    let mut path = vec![target];
    let mut e = target * 0.5;
    while e > eps_start * 1.000_001 {
        path.push(e);
        e *= 0.5;
    }
    path.push(eps_start);
    path.reverse();
    path
}

/// One accepted perturbed periodic solution.
#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub eps: f64,
    pub z0: PhaseState,
    pub period: f64,
    /// `‖Φ_T(z₀) − z₀‖`
    pub residual: f64,
    /// `|H_ε(z₀) − h|` (fixed energy only).
    pub energy_residual: Option<f64>,
    /// Phase-condition residual (fixed energy only).
    pub phase_residual: Option<f64>,
    /// Maximal `|H_ε − H_ε(z₀)|` along the orbit (autonomous problems only).
    pub energy_drift: Option<f64>,
    pub newton_iters: usize,
    pub trajectory: Trajectory,
    pub distance: Option<ManifoldDistance>,
    pub seed_id: usize,
}

struct Solve {
    z: PhaseState,
    period: f64,
    iters: usize,
}

fn pack(sys: &HamiltonianSystem, z: &PhaseState) -> DVector<f64> {
    DVector::from_column_slice(&z.pack(sys.dim)[..sys.n()])
}

fn unpack(sys: &HamiltonianSystem, v: &[f64]) -> PhaseState {
    PhaseState::unpack(sys.dim, v)
}

/// Residual vector and Jacobian at `(z, T)`.
fn evaluate(
    sys: &HamiltonianSystem,
    mode: &Mode,
    anchor: &(DVector<f64>, DVector<f64>),
    z: &PhaseState,
    period: f64,
    opts: &IntegratorOptions,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = sys.n();
    let (zt, w) = propagate_with_variational(sys, z, 0.0, period, opts)?;
    let zv = pack(sys, z);
    let shoot = pack(sys, &zt) - &zv;
    let jm = w.value - DMatrix::<f64>::identity(n, n);
    match mode {
        Mode::FixedPeriod { .. } => Ok((shoot, jm)),
        Mode::FixedEnergy { h } => {
            let mut f = [0.0; MAX_N];
            sys.vector_field_packed(period, &zt.pack(sys.dim)[..n], &mut f[..n])?;
            let grad = sys.gradient_packed(0.0, &zv.as_slice()[..n])?;
            let (z_star, phase_dir) = anchor;
            let mut r = DVector::<f64>::zeros(n + 2);
            r.rows_mut(0, n).copy_from(&shoot);
            r[n] = sys.hamiltonian(0.0, z)? - h;
            r[n + 1] = phase_dir.dot(&(&zv - z_star));
            let mut j = DMatrix::<f64>::zeros(n + 2, n + 1);
            j.view_mut((0, 0), (n, n)).copy_from(&jm);
            for i in 0..n {
                j[(i, n)] = f[i];
                j[(n, i)] = grad[i];
                j[(n + 1, i)] = phase_dir[i];
            }
            Ok((r, j))
        }
    }
}

/// Damped least-squares step `−(JᵀJ + μI)⁻¹JᵀR` through the SVD of `J`;
/// with `μ = 0` this is the pseudo-inverse step truncated below `rcond·σ_max`.
fn lm_step(j: &DMatrix<f64>, r: &DVector<f64>, mu: f64, rcond: f64) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let cut = rcond * svd.singular_values.max();
    let mut step = DVector::<f64>::zeros(j.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cut && mu == 0.0 {
            continue;
        }
        let coef = s / (s * s + mu) * u.column(i).dot(r);
        step -= vt.row(i).transpose() * coef;
    }
    step
}

/// Singular values of the shooting Jacobian below this multiple of the
/// integrator tolerance are treated as exact zeros.
const PINV_TOL_FACTOR: f64 = 100.0;
/// Trial points farther than this from the seed, relative to `1 + |seed|`, are rejected.
const MAX_EXCURSION: f64 = 2.0;
/// Growth of the residual over the best iterate tolerated on an undamped step.
const WATCHDOG_GROWTH: f64 = 1e4;
/// Consecutive non-improving steps before falling back to the best iterate.
const WATCHDOG_STEPS: usize = 6;

struct Iterate {
    z: PhaseState,
    period: f64,
    r: DVector<f64>,
    j: DMatrix<f64>,
}

fn solve(problem: &ShootingProblem, sys: &HamiltonianSystem, z_start: PhaseState, t_start: f64, opts: &ContinuationOptions) -> Result<Solve> {
    let n = sys.n();
    let anchor = {
        let z_star = pack(sys, &problem.phase_anchor);
        let grad = sys.gradient_packed(0.0, z_star.as_slice())?;
        let dir = symplectic_j(n) * DVector::from_column_slice(&grad[..n]);
        let norm = dir.norm();
        (z_star, if norm > 0.0 { dir / norm } else { dir })
    };
    let fixed_energy = matches!(problem.mode, Mode::FixedEnergy { .. });
    let period = match problem.mode {
        Mode::FixedPeriod { period } => period,
        Mode::FixedEnergy { .. } => t_start,
    };
    let (r, j) = evaluate(sys, &problem.mode, &anchor, &z_start, period, &opts.integrator)?;
    let mut cur = Iterate { z: z_start, period, r, j };
    let mut best = (cur.z, cur.period, cur.r.clone(), cur.j.clone());
    let excursion = MAX_EXCURSION * (1.0 + problem.seed.norm());
    let mut lambda = 0.0;
    let mut stale = 0;
    let mut iters = 0;
    loop {
        if converged(sys, &problem.mode, &cur.r, &cur.z, opts) {
            return Ok(Solve { z: cur.z, period: cur.period, iters });
        }
        if iters >= opts.max_newton {
            return Err(Error::NewtonStagnation { residual: best.2.norm(), iterations: iters });
        }
        iters += 1;
        let smax = cur.j.singular_values().max();
        let rcond = (PINV_TOL_FACTOR * opts.integrator.tol).max(1e-14);
        let step = lm_step(&cur.j, &cur.r, lambda * smax * smax, rcond);
        let mut zv = pack(sys, &cur.z);
        for i in 0..n {
            zv[i] += step[i];
        }
        let trial_z = unpack(sys, zv.as_slice());
        let trial_t = if fixed_energy { cur.period + step[n] } else { cur.period };
        let trial = if trial_t > 0.0 && trial_z.distance(&problem.seed) <= excursion {
            evaluate(sys, &problem.mode, &anchor, &trial_z, trial_t, &opts.integrator).ok()
        } else {
            None
        };
        let best_norm = best.2.norm();
        match trial {
            Some((tr, tj)) if tr.norm() < WATCHDOG_GROWTH * best_norm || tr.norm() < cur.r.norm() => {
                let improved = tr.norm() < best_norm;
                cur = Iterate { z: trial_z, period: trial_t, r: tr, j: tj };
                if improved {
                    best = (cur.z, cur.period, cur.r.clone(), cur.j.clone());
                    stale = 0;
                    lambda = if lambda < 1e-12 { 0.0 } else { lambda * 0.1 };
                    continue;
                }
                stale += 1;
                if stale < WATCHDOG_STEPS {
                    continue;
                }
            }
            _ => {}
        }
        // fall back to the best iterate with more damping
        cur = Iterate { z: best.0, period: best.1, r: best.2.clone(), j: best.3.clone() };
        stale = 0;
        lambda = if lambda == 0.0 { opts.initial_damping } else { lambda * 10.0 };
        if lambda > opts.max_damping {
            if fixed_energy && best.2[n].abs() > opts.energy_tol {
                return Err(Error::EnergyInfeasible { residual: best.2[n].abs() });
            }
            return Err(Error::DampingFloor);
        }
    }
}

fn converged(sys: &HamiltonianSystem, mode: &Mode, r: &DVector<f64>, z: &PhaseState, opts: &ContinuationOptions) -> bool {
    let n = sys.n();
    let shoot = r.rows(0, n).norm();
    let ok = shoot <= opts.residual_tol * (1.0 + z.norm());
    match mode {
        Mode::FixedPeriod { .. } => ok,
        Mode::FixedEnergy { .. } => ok && r[n].abs() <= opts.energy_tol && r[n + 1].abs() <= opts.residual_tol * (1.0 + z.norm()),
    }
}

fn finish(problem: &ShootingProblem, sys: &HamiltonianSystem, eps: f64, s: Solve, seed_id: usize, opts: &ContinuationOptions) -> Result<ContinuationResult> {
    let trajectory = integrate(sys, &s.z, 0.0, s.period, &opts.integrator)?;
    let residual = trajectory.final_state().distance(&s.z);
    let (energy_residual, phase_residual) = match problem.mode {
        Mode::FixedPeriod { .. } => (None, None),
        Mode::FixedEnergy { h } => {
            let n = sys.n();
            let z_star = pack(sys, &problem.phase_anchor);
            let grad = sys.gradient_packed(0.0, z_star.as_slice())?;
            let dir = symplectic_j(n) * DVector::from_column_slice(&grad[..n]);
            let phase = dir.dot(&(pack(sys, &s.z) - z_star)) / dir.norm();
            (Some((sys.hamiltonian(0.0, &s.z)? - h).abs()), Some(phase.abs()))
        }
    };
    let energy_drift = if sys.is_autonomous() { Some(invariant_drift(sys, &trajectory)?.energy.max_abs) } else { None };
    Ok(ContinuationResult {
        eps,
        z0: s.z,
        period: s.period,
        residual,
        energy_residual,
        phase_residual,
        energy_drift,
        newton_iters: s.iters,
        trajectory,
        distance: None,
        seed_id,
    })
}

fn run_path(problem: &ShootingProblem, path: &[f64], seed_id: usize, opts: &ContinuationOptions) -> Result<Vec<ContinuationResult>> {
    if path.contains(&0.0) {
        return Err(Error::SingularAtZero);
    }
    if path.windows(2).any(|w| w[1] < w[0]) || path.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter { name: "eps_path", reason: "must be finite and increasing" });
    }
    let mut z = problem.seed;
    let mut period = problem.seed_period;
    let mut previous = None;
    let mut out = Vec::with_capacity(path.len());
    for &eps in path {
        let s = advance(problem, z, period, previous, eps, opts, 0)?;
        let sys = problem.sys.with_perturbation(problem.sys.perturbation.with_eps(eps))?;
        z = s.z;
        period = s.period;
        previous = Some(eps);
        out.push(finish(problem, &sys, eps, s, seed_id, opts)?);
    }
    Ok(out)
}

/// Bisection depth for an `ε` step whose corrector fails.
const MAX_STEP_BISECTIONS: usize = 2;

/// Corrects from the solution at `from` to `eps`, halving the step on failure.
fn advance(
    problem: &ShootingProblem,
    z: PhaseState,
    period: f64,
    from: Option<f64>,
    eps: f64,
    opts: &ContinuationOptions,
    depth: usize,
) -> Result<Solve> {
    let sys = problem.sys.with_perturbation(problem.sys.perturbation.with_eps(eps))?;
    match (solve(problem, &sys, z, period, opts), from) {
        (Err(Error::NewtonStagnation { .. } | Error::DampingFloor), Some(from)) if depth < MAX_STEP_BISECTIONS => {
            let mid = 0.5 * (from + eps);
            let half = advance(problem, z, period, Some(from), mid, opts, depth + 1)?;
            let mut s = advance(problem, half.z, half.period, Some(mid), eps, opts, depth + 1)?;
            s.iters += half.iters;
            Ok(s)
        }
        (r, _) => r,
    }
}

/// Fixed-period continuation along `path`, one result per `ε`.
pub fn continue_fixed_period(problem: &ShootingProblem, path: &[f64], seed_id: usize, opts: &ContinuationOptions) -> Result<Vec<ContinuationResult>> {
    if !matches!(problem.mode, Mode::FixedPeriod { .. }) {
        return Err(Error::InvalidParameter { name: "mode", reason: "expected a fixed-period problem" });
    }
    run_path(problem, path, seed_id, opts)
}

/// Fixed-energy continuation along `path`, one result per `ε`.
pub fn continue_fixed_energy(problem: &ShootingProblem, path: &[f64], seed_id: usize, opts: &ContinuationOptions) -> Result<Vec<ContinuationResult>> {
    if !matches!(problem.mode, Mode::FixedEnergy { .. }) {
        return Err(Error::InvalidParameter { name: "mode", reason: "expected a fixed-energy problem" });
    }
    run_path(problem, path, seed_id, opts)
}

/// Closest manifold element `(M, θ)` and the attained sup-distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldDistance {
    pub distance: f64,
    pub element: ManifoldElement,
    /// Distance at the best grid element, before refinement.
    pub coarse: f64,
}

const DISTANCE_SAMPLES: usize = 512;

fn sup_distance(positions: &[(f64, [f64; 3])], base: &PeriodicOrbit, m: &Mat3, shift: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for (t, x) in positions {
        let y = base.state_at(t - shift).x;
        let mut d = 0.0;
        for i in 0..3 {
            let mi = m[i][0] * y[0] + m[i][1] * y[1] + m[i][2] * y[2];
            d += (x[i] - mi) * (x[i] - mi);
        }
        sup = sup.max(d);
    }
    sup.sqrt()
}

/// Rodrigues formula for the rotation vector `w`.
fn rotation_from_vector(w: &[f64]) -> Mat3 {
    let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let k = [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]];
    let (a, b) = if theta < 1e-8 { (1.0, 0.5) } else { (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta)) };
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k2: f64 = (0..3).map(|l| k[i][l] * k[l][j]).sum();
            r[i][j] = if i == j { 1.0 } else { 0.0 } + a * k[i][j] + b * k2;
        }
    }
    r
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    c
}

/// `inf_{(M,θ)} sup_t |x(t) − M x*(t − θ)|` over the sample grid, optionally
/// refined by a derivative-free search over three rotation parameters and the shift.
pub fn distance_to_manifold(
    trajectory: &Trajectory,
    period: f64,
    samples: &ManifoldSample,
    refine: bool,
    hints: &[ManifoldElement],
) -> Result<ManifoldDistance> {
    let positions: Vec<(f64, [f64; 3])> = (0..DISTANCE_SAMPLES)
        .map(|i| {
            let t = period * i as f64 / DISTANCE_SAMPLES as f64;
            trajectory.state_at(t).map(|z| (t, z.x))
        })
        .collect::<Result<_>>()?;
    let base = &samples.base;
    let mut best = (f64::INFINITY, ManifoldElement::identity());
    for e in samples.elements.iter().chain(hints) {
        let d = sup_distance(&positions, base, &e.rotation, e.shift);
        if d < best.0 {
            best = (d, *e);
        }
    }
    let coarse = best.0;
    if !refine {
        return Ok(ManifoldDistance { distance: coarse, element: best.1, coarse });
    }
    let start = best.1;
    let tau = base.profile.tau;
    let objective = |v: &[f64]| {
        let m = mat_mul(&start.rotation, &rotation_from_vector(&v[..3]));
        sup_distance(&positions, base, &m, start.shift + v[3])
    };
    let mut point = vec![0.0; 4];
    let mut value = coarse;
    let mut step = vec![0.05, 0.05, 0.05, 0.01 * tau];
    for _ in 0..4 {
        let (p, v) = nelder_mead(objective, &point, &step, 600, 1e-12);
        if v < value {
            point = p;
            value = v;
        }
        step.iter_mut().for_each(|s| *s *= 0.2);
    }
    let m = mat_mul(&start.rotation, &rotation_from_vector(&point[..3]));
    let shift = Euclid::rem_euclid(&(start.shift + point[3]), &base.period);
    Ok(ManifoldDistance { distance: value, element: ManifoldElement { rotation: m, angle: None, shift }, coarse })
}

/// Continuous symmetries identified when comparing two solutions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Equivalence {
    /// Time translates (autonomous problems).
    pub shift: bool,
    /// Rotations about this axis.
    pub axis: Option<[f64; 3]>,
}

/// Axis of the rotations that commute with the perturbation, if any.
pub fn symmetry_axis(family: &PerturbationFamily) -> Option<[f64; 3]> {
    let v = match *family {
        PerturbationFamily::UniformElectric { direction, .. } => direction,
        PerturbationFamily::UniformMagnetic { b0 } => b0,
        PerturbationFamily::Zero | PerturbationFamily::RotatingFrame => return None,
    };
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

const COMPARE_SAMPLES: usize = 256;
const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// `sup_t |x_a(t) − x_b(t + s)|`, minimized over the shift `s` when
/// `modulo_shift` (autonomous problems identify time translates).
pub fn solution_distance(a: &ContinuationResult, b: &ContinuationResult, modulo_shift: bool) -> Result<f64> {
    solution_distance_modulo(a, b, Equivalence { shift: modulo_shift, axis: None })
}

/// `sup_t |x_a(t) − R x_b(t + s)|` minimized over the symmetries in `eq`.
pub fn solution_distance_modulo(a: &ContinuationResult, b: &ContinuationResult, eq: Equivalence) -> Result<f64> {
    let pa: Vec<[f64; 3]> = (0..COMPARE_SAMPLES)
        .map(|i| a.trajectory.state_at(a.period * i as f64 / COMPARE_SAMPLES as f64).map(|z| z.x))
        .collect::<Result<_>>()?;
    let at = |psi: f64, s: f64| -> f64 {
        let r = match eq.axis {
            Some(w) => rotation_from_vector(&[psi * w[0], psi * w[1], psi * w[2]]),
            None => IDENTITY,
        };
        let mut sup: f64 = 0.0;
        for (i, x) in pa.iter().enumerate() {
            let t = Euclid::rem_euclid(&(a.period * i as f64 / COMPARE_SAMPLES as f64 + s), &b.period);
            let y = b.trajectory.state_at(t.min(b.trajectory.t1)).map(|z| z.x).unwrap_or([f64::INFINITY; 3]);
            let d: f64 = (0..3)
                .map(|k| {
                    let ry = r[k][0] * y[0] + r[k][1] * y[1] + r[k][2] * y[2];
                    (x[k] - ry) * (x[k] - ry)
                })
                .sum();
            sup = sup.max(d);
        }
        sup.sqrt()
    };
    let shifts = if eq.shift { 128 } else { 1 };
    let angles = if eq.axis.is_some() { 48 } else { 1 };
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..angles {
        let psi = 2.0 * PI * i as f64 / angles as f64;
        for j in 0..shifts {
            let s = b.period * j as f64 / shifts as f64;
            let d = at(psi, s);
            if d < best.2 {
                best = (psi, s, d);
            }
        }
    }
    let dt = b.period / shifts as f64;
    let dpsi = 2.0 * PI / angles as f64;
    let refined = match (eq.axis.is_some(), eq.shift) {
        (false, false) => best.2,
        (false, true) => -golden_max(|s| -at(0.0, s), best.1 - dt, best.1 + dt, 1e-12).1,
        (true, false) => -golden_max(|psi| -at(psi, 0.0), best.0 - dpsi, best.0 + dpsi, 1e-12).1,
        (true, true) => nelder_mead(|v| at(v[0], v[1]), &[best.0, best.1], &[0.5 * dpsi, 0.5 * dt], 400, 1e-14).1,
    };
    Ok(best.2.min(refined))
}

/// Indices of pairwise distinct results (first occurrence kept, input order).
pub fn distinct_solutions(results: &[ContinuationResult], modulo_shift: bool, tol: f64) -> Result<Vec<usize>> {
    distinct_solutions_modulo(results, Equivalence { shift: modulo_shift, axis: None }, tol)
}

/// As [`distinct_solutions`], identifying results related by the symmetries in `eq`.
pub fn distinct_solutions_modulo(results: &[ContinuationResult], eq: Equivalence, tol: f64) -> Result<Vec<usize>> {
    let mut keep: Vec<usize> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let mut fresh = true;
        for &k in &keep {
            if solution_distance_modulo(r, &results[k], eq)? <= tol {
                fresh = false;
                break;
            }
        }
        if fresh {
            keep.push(i);
        }
    }
    Ok(keep)
}

/// Seeds `(z₀, T)` from manifold samples of an unperturbed orbit.
pub fn seeds(samples: &ManifoldSample) -> Vec<PhaseState> {
    samples.initial_states()
}

const AVERAGE_SAMPLES: usize = 256;

/// `∂_ε H_ε` at `ε = 0`, by a central difference in `ε`.
fn first_order_term(sys: &HamiltonianSystem, t: f64, z: &PhaseState) -> Result<f64> {
    let d = 1e-4;
    let plus = sys.with_perturbation(sys.perturbation.with_eps(d))?;
    let minus = sys.with_perturbation(sys.perturbation.with_eps(-d))?;
    Ok((plus.hamiltonian(t, z)? - minus.hamiltonian(t, z)?) / (2.0 * d))
}

/// Time average of the first-order perturbation along `M z*(t − θ)` over
/// one period. Its critical points on the manifold locate the orbits that
/// persist for small `ε`.
pub fn averaged_perturbation(sys: &HamiltonianSystem, base: &PeriodicOrbit, element: &ManifoldElement) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..AVERAGE_SAMPLES {
        let t = base.period * i as f64 / AVERAGE_SAMPLES as f64;
        acc += first_order_term(sys, t, &element.state_at(base, t))?;
    }
    Ok(acc / AVERAGE_SAMPLES as f64)
}

/// Moves `element` to a local extremum of the averaged perturbation
/// (a minimum, or a maximum when `maximize`).
pub fn polish_seed(sys: &HamiltonianSystem, base: &PeriodicOrbit, element: &ManifoldElement, maximize: bool) -> ManifoldElement {
    let sign = if maximize { -1.0 } else { 1.0 };
    let at = |v: &[f64]| ManifoldElement {
        rotation: mat_mul(&element.rotation, &rotation_from_vector(&v[..3])),
        angle: None,
        shift: element.shift + v[3],
    };
    let objective = |v: &[f64]| averaged_perturbation(sys, base, &at(v)).map_or(f64::INFINITY, |g| sign * g);
    let step = [0.3, 0.3, 0.3, 0.05 * base.profile.tau];
    let (v, _) = nelder_mead(objective, &[0.0; 4], &step, 800, 1e-14);
    at(&v)
}

/// Which boundary value problem a seed is continued in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    FixedPeriod,
    FixedEnergy,
}

/// Outcome of continuing one manifold sample.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed_id: usize,
    /// Element the accepted (or last attempted) path started from.
    pub element: ManifoldElement,
    pub polished: bool,
    pub result: Result<Vec<ContinuationResult>>,
}

/// Continues `base` moved by `element` along `path` in the perturbed system
/// `sys`. With `polish`, the element is first moved to an extremum of the
/// averaged perturbation (minimum for even seeds, maximum for odd ones); if
/// that path fails the raw element is tried.
pub fn continue_seed(
    sys: &HamiltonianSystem,
    base: &PeriodicOrbit,
    kind: ProblemKind,
    element: &ManifoldElement,
    seed_id: usize,
    path: &[f64],
    polish: bool,
    opts: &ContinuationOptions,
) -> SeedOutcome {
    let attempt = |e: &ManifoldElement| -> Result<Vec<ContinuationResult>> {
        let z = e.initial_state(base);
        match kind {
            ProblemKind::FixedPeriod => {
                let problem = ShootingProblem::fixed_period(sys.clone(), base.period, z)?;
                continue_fixed_period(&problem, path, seed_id, opts)
            }
            ProblemKind::FixedEnergy => {
                let problem = ShootingProblem::fixed_energy(sys.clone(), base.profile.h, z, base.period)?;
                continue_fixed_energy(&problem, path, seed_id, opts)
            }
        }
    };
    if polish {
        let polished = polish_seed(sys, base, element, seed_id % 2 == 1);
        let result = attempt(&polished);
        if result.is_ok() {
            return SeedOutcome { seed_id, element: polished, polished: true, result };
        }
    }
    SeedOutcome { seed_id, element: *element, polished: false, result: attempt(element) }
}

/// Separation below which two accepted solutions count as the same.
pub fn distinct_tolerance(results: &[ContinuationResult]) -> f64 {
    let scale = results.iter().map(|r| r.residual).fold(0.0, f64::max);
    (10.0 * scale).max(1e-6)
}

/// Unperturbed residual at `z₀` over one period.
pub fn unperturbed_residual(orbit: &PeriodicOrbit, z0: &PhaseState, opts: &IntegratorOptions) -> Result<f64> {
    let sys = orbit.system();
    Ok(propagate(&sys, z0, 0.0, orbit.period, opts)?.distance(z0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_path_contains_halvings() {
        let p = eps_path(1e-4, 1e-3);
        assert_eq!(p, vec![1e-4, 1.25e-4, 2.5e-4, 5e-4, 1e-3]);
        assert_eq!(eps_path(1e-4, 5e-5), vec![5e-5]);
    }

    #[test]
    fn rodrigues_small_and_large() {
        let r = rotation_from_vector(&[0.0, 0.0, core::f64::consts::FRAC_PI_2]);
        assert!((r[0][1] + 1.0).abs() < 1e-15 && (r[1][0] - 1.0).abs() < 1e-15);
        let i = rotation_from_vector(&[0.0; 3]);
        assert_eq!(i[0][0], 1.0);
    }
}
