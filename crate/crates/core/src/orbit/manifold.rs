#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::PeriodicOrbit;
use crate::model::{Mat3, PhaseState};

/// Symmetry group acting on the base orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    /// Rotations about the `x₃`-axis.
    Planar,
    SO3,
    /// `SO(3)` together with its reflection coset `−SO(3)`.
    O3,
}

/// One point `(M, θ)` of the orbit manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldElement {
    pub rotation: Mat3,
    /// Rotation angle for planar samples.
    pub angle: Option<f64>,
    pub shift: f64,
}

impl ManifoldElement {
    pub fn identity() -> Self {
        ManifoldElement { rotation: IDENTITY, angle: None, shift: 0.0 }
    }

    pub fn apply(&self, z: &PhaseState) -> PhaseState {
        PhaseState { x: mat_vec(&self.rotation, &z.x), p: mat_vec(&self.rotation, &z.p) }
    }

    /// `M z*(t − θ)`.
    pub fn state_at(&self, base: &PeriodicOrbit, t: f64) -> PhaseState {
        self.apply(&base.state_at(t - self.shift))
    }

    pub fn initial_state(&self, base: &PeriodicOrbit) -> PhaseState {
        self.state_at(base, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldSample {
    pub elements: Vec<ManifoldElement>,
    pub base: PeriodicOrbit,
}

impl ManifoldSample {
    pub fn initial_states(&self) -> Vec<PhaseState> {
        self.elements.iter().map(|e| e.initial_state(&self.base)).collect()
    }
}

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub(crate) fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub(crate) fn rotation_z(phi: f64) -> Mat3 {
    let (s, c) = phi.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation matrix of the unit quaternion `(w, x, y, z)`.
pub(crate) fn quaternion_matrix(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Deterministic low-discrepancy rotations, identity first.
///
/// A rank-1 lattice in the unit cube (golden-type increments) is mapped
/// to unit quaternions with Shoemake's uniform parametrization.
pub fn so3_samples(count: usize) -> Vec<Mat3> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(IDENTITY);
    let rest = count - 1;
    // plastic-number increments give a well spread 2-D sequence
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    for i in 0..rest {
        let u1 = (i as f64 + 0.5) / rest as f64;
        let u2 = (0.5 + a1 * i as f64).fract();
        let u3 = (0.5 + a2 * i as f64).fract();
        let (s1, s2) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (t2, t3) = (2.0 * PI * u2, 2.0 * PI * u3);
        out.push(quaternion_matrix([s2 * t3.cos(), s1 * t2.sin(), s1 * t2.cos(), s2 * t3.sin()]));
    }
    out
}

/// `count_rot × count_shift` points of the orbit manifold, shifts uniform in `[0, τ)`.
pub fn manifold_samples(orbit: &PeriodicOrbit, count_rot: usize, count_shift: usize, group: Group) -> ManifoldSample {
    let count_rot = count_rot.max(1);
    let count_shift = count_shift.max(1);
    let tau = orbit.profile.tau;
    let rotations: Vec<(Mat3, Option<f64>)> = match group {
        Group::Planar => (0..count_rot)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / count_rot as f64;
                (rotation_z(phi), Some(phi))
            })
            .collect(),
        Group::SO3 => so3_samples(count_rot).into_iter().map(|m| (m, None)).collect(),
        Group::O3 => {
            let base = so3_samples(count_rot);
            let mut all: Vec<(Mat3, Option<f64>)> = base.iter().map(|m| (*m, None)).collect();
            all.extend(base.iter().map(|m| (m.map(|row| row.map(|v| -v)), None)));
            all
        }
    };
    let mut elements = Vec::with_capacity(rotations.len() * count_shift);
    for (rotation, angle) in rotations {
        for j in 0..count_shift {
            elements.push(ManifoldElement { rotation, angle, shift: tau * j as f64 / count_shift as f64 });
        }
    }
    ManifoldSample { elements, base: orbit.clone() }
}
