//! Time integration of the Hamiltonian flow and its linearization.

mod rk;
mod tableau;

pub use rk::{dense_weights, integrate as integrate_ode, AcceptedStep, OdeSystem, StepControl};

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{symplectic_j, Dim, HamiltonianSystem, Packed, PhaseState, MAX_N};
use crate::orbit::PeriodicOrbit;
use tableau::DENSE_STAGES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Integration stops with a collision error when `|x|` drops below this.
    pub collision_floor: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { tol: 1e-12, max_step: f64::INFINITY, max_steps: 2_000_000, collision_floor: 1e-8 }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions { tol, ..Default::default() }
    }

    fn control(&self) -> Result<StepControl> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter { name: "tol", reason: "must be positive" });
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter { name: "max_step", reason: "must be positive" });
        }
        Ok(StepControl { tol: self.tol, max_step: self.max_step, max_steps: self.max_steps })
    }
}

struct StateFlow<'a> {
    sys: &'a HamiltonianSystem,
    floor: f64,
}

impl StateFlow<'_> {
    fn guard(&self, t: f64, y: &[f64]) -> Result<()> {
        let d = self.sys.dim.d();
        let r = y[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(r >= self.floor) {
            return Err(Error::Collision { t, radius: r });
        }
        Ok(())
    }
}

impl OdeSystem for StateFlow<'_> {
    fn len(&self) -> usize {
        self.sys.n()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.guard(t, y)?;
        self.sys.vector_field_packed(t, y, dy)
    }
}

/// State plus column-major `W`, with `W' = J⁻¹∇²H W`.
struct VariationalFlow<'a>(StateFlow<'a>);

impl OdeSystem for VariationalFlow<'_> {
    fn len(&self) -> usize {
        let n = self.0.sys.n();
        n + n * n
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let sys = self.0.sys;
        let n = sys.n();
        let d = n / 2;
        self.0.guard(t, y)?;
        sys.vector_field_packed(t, &y[..n], &mut dy[..n])?;
        let mut h = [[0.0; MAX_N]; MAX_N];
        sys.hessian_packed(t, &y[..n], &mut h)?;
        for col in 0..n {
            let w = &y[n + col * n..n + (col + 1) * n];
            let out = &mut dy[n + col * n..n + (col + 1) * n];
            for i in 0..d {
                let mut hp = 0.0;
                let mut hx = 0.0;
                for k in 0..n {
                    hp += h[d + i][k] * w[k];
                    hx += h[i][k] * w[k];
                }
                out[i] = hp;
                out[d + i] = -hx;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Segment {
    t: f64,
    h: f64,
    y0: Packed,
    k: [Packed; DENSE_STAGES],
}

impl Segment {
    fn lo(&self) -> f64 {
        self.t.min(self.t + self.h)
    }

    fn eval(&self, t: f64, n: usize) -> Packed {
        let s = (t - self.t) / self.h;
        let w = dense_weights(s);
        let mut y = self.y0;
        for c in 0..n {
            let acc: f64 = (0..DENSE_STAGES).map(|i| w[i] * self.k[i][c]).sum();
            y[c] += self.h * acc;
        }
        y
    }
}

/// Accepted integration samples with a dense interpolant between them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dim: Dim,
    /// Strictly increasing sample times.
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub t0: f64,
    pub t1: f64,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> PhaseState {
        let i = if self.t1 >= self.t0 { self.states.len() - 1 } else { 0 };
        self.states[i]
    }

    /// Dense evaluation; exact at the stored sample times.
    pub fn state_at(&self, t: f64) -> Result<PhaseState> {
        let lo = self.times[0];
        let hi = self.times[self.times.len() - 1];
        if !(t >= lo && t <= hi) {
            return Err(Error::Domain("time outside the trajectory span"));
        }
        if let Ok(i) = self.times.binary_search_by(|p| p.total_cmp(&t)) {
            return Ok(self.states[i]);
        }
        if self.segments.is_empty() {
            return Ok(self.states[0]);
        }
        let idx = self.segments.partition_point(|s| s.lo() <= t).saturating_sub(1);
        let y = self.segments[idx].eval(t, self.dim.n());
        Ok(PhaseState::unpack(self.dim, &y))
    }

    /// Planar trajectory re-expressed in spatial coordinates with `x₃ = p₃ = 0`.
    pub fn embed_spatial(&self) -> Trajectory {
        if self.dim == Dim::Spatial {
            return self.clone();
        }
        let lift = |y: &Packed| [y[0], y[1], 0.0, y[2], y[3], 0.0];
        let segments = self
            .segments
            .iter()
            .map(|s| Segment { t: s.t, h: s.h, y0: lift(&s.y0), k: s.k.map(|k| lift(&k)) })
            .collect();
        Trajectory { dim: Dim::Spatial, segments, ..self.clone() }
    }
}

/// Solution `W(t1)` of the variational equation with `W(t0) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub value: DMatrix<f64>,
    /// Frobenius condition estimate `‖W‖·‖W⁻¹‖`, using `W⁻¹ = −JWᵀJ`.
    pub condition: f64,
}

impl FundamentalMatrix {
    fn from_columns(n: usize, flat: &[f64]) -> Self {
        let value = DMatrix::from_column_slice(n, n, flat);
        let j = symplectic_j(n);
        let inv = -(&j * value.transpose() * &j);
        let condition = value.norm() * inv.norm();
        FundamentalMatrix { value, condition }
    }

    /// `‖WᵀJW − J‖` (Frobenius).
    pub fn symplectic_residual(&self) -> f64 {
        let j = symplectic_j(self.value.nrows());
        (self.value.transpose() * &j * &self.value - j).norm()
    }

    pub fn determinant(&self) -> f64 {
        self.value.determinant()
    }
}

fn record(traj_segments: &mut Vec<Segment>, times: &mut Vec<f64>, states: &mut Vec<PhaseState>, dim: Dim, st: &AcceptedStep<'_>) {
    let n = dim.n();
    let mut seg = Segment { t: st.t, h: st.h, y0: [0.0; MAX_N], k: [[0.0; MAX_N]; DENSE_STAGES] };
    seg.y0[..n].copy_from_slice(&st.y0[..n]);
    for (dst, src) in seg.k.iter_mut().zip(st.k) {
        dst[..n].copy_from_slice(&src[..n]);
    }
    traj_segments.push(seg);
    times.push(st.t + st.h);
    states.push(PhaseState::unpack(dim, &st.y1[..n]));
}

fn finish(dim: Dim, t0: f64, t1: f64, mut times: Vec<f64>, mut states: Vec<PhaseState>, mut segments: Vec<Segment>) -> Trajectory {
    if t1 < t0 {
        times.reverse();
        states.reverse();
        segments.reverse();
    }
    Trajectory { dim, times, states, t0, t1, segments }
}

fn check_start(sys: &HamiltonianSystem, t0: f64, z0: &PhaseState) -> Result<()> {
    sys.hamiltonian(t0, z0).map(|_| ())
}

/// Integrates the flow from `t0` to `t1` and records a dense trajectory.
pub fn integrate(sys: &HamiltonianSystem, z0: &PhaseState, t0: f64, t1: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    check_start(sys, t0, z0)?;
    let ctl = opts.control()?;
    let flow = StateFlow { sys, floor: opts.collision_floor };
    let y0 = z0.pack(sys.dim);
    let mut times = vec![t0];
    let mut states = vec![PhaseState::unpack(sys.dim, &y0)];
    let mut segments = Vec::new();
    integrate_ode(&flow, t0, &y0[..sys.n()], t1, &ctl, |st| {
        record(&mut segments, &mut times, &mut states, sys.dim, st)
    })?;
    Ok(finish(sys.dim, t0, t1, times, states, segments))
}

/// Final state only, without recording a trajectory.
pub fn propagate(sys: &HamiltonianSystem, z0: &PhaseState, t0: f64, t1: f64, opts: &IntegratorOptions) -> Result<PhaseState> {
    check_start(sys, t0, z0)?;
    let ctl = opts.control()?;
    let flow = StateFlow { sys, floor: opts.collision_floor };
    let y = integrate_ode(&flow, t0, &z0.pack(sys.dim)[..sys.n()], t1, &ctl, |_| {})?;
    Ok(PhaseState::unpack(sys.dim, &y))
}

fn variational_start(sys: &HamiltonianSystem, z0: &PhaseState) -> Vec<f64> {
    let n = sys.n();
    let mut y = vec![0.0; n + n * n];
    y[..n].copy_from_slice(&z0.pack(sys.dim)[..n]);
    for i in 0..n {
        y[n + i * n + i] = 1.0;
    }
    y
}

/// Joint integration of the state and the fundamental matrix.
pub fn integrate_with_variational(
    sys: &HamiltonianSystem,
    z0: &PhaseState,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<(Trajectory, FundamentalMatrix)> {
    check_start(sys, t0, z0)?;
    let ctl = opts.control()?;
    let n = sys.n();
    let flow = VariationalFlow(StateFlow { sys, floor: opts.collision_floor });
    let y0 = variational_start(sys, z0);
    let mut times = vec![t0];
    let mut states = vec![*z0];
    let mut segments = Vec::new();
    let y = integrate_ode(&flow, t0, &y0, t1, &ctl, |st| {
        record(&mut segments, &mut times, &mut states, sys.dim, st)
    })?;
    Ok((finish(sys.dim, t0, t1, times, states, segments), FundamentalMatrix::from_columns(n, &y[n..])))
}

/// Final state and fundamental matrix, without recording a trajectory.
pub fn propagate_with_variational(
    sys: &HamiltonianSystem,
    z0: &PhaseState,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<(PhaseState, FundamentalMatrix)> {
    check_start(sys, t0, z0)?;
    let ctl = opts.control()?;
    let n = sys.n();
    let flow = VariationalFlow(StateFlow { sys, floor: opts.collision_floor });
    let y = integrate_ode(&flow, t0, &variational_start(sys, z0), t1, &ctl, |_| {})?;
    Ok((PhaseState::unpack(sys.dim, &y[..n]), FundamentalMatrix::from_columns(n, &y[n..])))
}

/// Monodromy `W(T)` along a periodic orbit, starting from its stored seed.
pub fn monodromy(sys: &HamiltonianSystem, orbit: &PeriodicOrbit, opts: &IntegratorOptions) -> Result<FundamentalMatrix> {
    let z0 = orbit.initial_state_in(sys.dim);
    propagate_with_variational(sys, &z0, 0.0, orbit.period, opts).map(|(_, w)| w)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift {
    pub max_abs: f64,
    pub max_rel: f64,
}

impl Drift {
    fn push(&mut self, reference: f64, value: f64) {
        let d = (value - reference).abs();
        self.max_abs = self.max_abs.max(d);
        self.max_rel = self.max_rel.max(d / reference.abs().max(f64::MIN_POSITIVE));
    }
}

/// Maximal deviation of the first integrals from their initial values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub energy: Drift,
    /// Components of `x ∧ p` (only the third one in the plane).
    pub angular_momentum: [Drift; 3],
    pub samples: usize,
}

pub fn invariant_drift(sys: &HamiltonianSystem, traj: &Trajectory) -> Result<DriftReport> {
    let mut report = DriftReport { energy: Drift::default(), angular_momentum: [Drift::default(); 3], samples: traj.len() };
    let h0 = sys.hamiltonian(traj.times[0], &traj.states[0])?;
    let l0 = sys.angular_momentum(&traj.states[0]).components();
    for (t, z) in traj.times.iter().zip(&traj.states) {
        report.energy.push(h0, sys.hamiltonian(*t, z)?);
        let l = sys.angular_momentum(z).components();
        for i in 0..3 {
            report.angular_momentum[i].push(l0[i], l[i]);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KineticLaw, Potential};
    use core::f64::consts::PI;

    fn kepler(dim: Dim) -> HamiltonianSystem {
        HamiltonianSystem::unperturbed(KineticLaw::classical(1.0).unwrap(), Potential::kepler(1.0).unwrap(), dim)
    }

    #[test]
    fn circular_orbit_stays_on_unit_circle() {
        let sys = kepler(Dim::Planar);
        let traj = integrate(&sys, &PhaseState::planar([1.0, 0.0], [0.0, 1.0]), 0.0, 2.0 * PI, &IntegratorOptions::default()).unwrap();
        for z in &traj.states {
            assert!((z.radius() - 1.0).abs() < 1e-9);
        }
        for i in 0..50 {
            let z = traj.state_at(2.0 * PI * i as f64 / 50.0).unwrap();
            assert!((z.radius() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_output_hits_samples_and_interpolates() {
        let sys = kepler(Dim::Planar);
        let z0 = PhaseState::planar([1.5, 0.0], [0.0, 0.6]);
        let traj = integrate(&sys, &z0, 0.0, 5.0, &IntegratorOptions::with_tol(1e-12)).unwrap();
        for (t, z) in traj.times.iter().zip(&traj.states) {
            assert_eq!(traj.state_at(*t).unwrap(), *z);
        }
        let t = 0.5 * (traj.times[3] + traj.times[4]);
        let direct = propagate(&sys, &z0, 0.0, t, &IntegratorOptions::with_tol(1e-13)).unwrap();
        assert!(traj.state_at(t).unwrap().distance(&direct) < 1e-9);
        assert!(traj.state_at(5.1).is_err());
    }

    #[test]
    fn backward_trajectory_is_sorted() {
        let sys = kepler(Dim::Planar);
        let z0 = PhaseState::planar([1.0, 0.0], [0.1, 1.1]);
        let traj = integrate(&sys, &z0, 2.0, 0.0, &IntegratorOptions::default()).unwrap();
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.times[traj.len() - 1], 2.0);
        assert_eq!(traj.states[traj.len() - 1], z0);
        assert_eq!(traj.final_state(), traj.states[0]);
    }

    #[test]
    fn variational_identity_for_zero_span() {
        let sys = kepler(Dim::Planar);
        let z0 = PhaseState::planar([1.0, 0.0], [0.1, 1.1]);
        let (_, w) = propagate_with_variational(&sys, &z0, 0.0, 1e-9, &IntegratorOptions::default()).unwrap();
        assert!((w.value - DMatrix::<f64>::identity(4, 4)).norm() < 1e-8);
    }

    #[test]
    fn collision_is_reported() {
        let sys = kepler(Dim::Planar);
        let z0 = PhaseState::planar([1.0, 0.0], [-0.5, 0.0]);
        let err = propagate(&sys, &z0, 0.0, 10.0, &IntegratorOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Collision { .. } | Error::StepSizeUnderflow { .. }), "{err:?}");
    }
}
