use apsis_core::flow::{
    integrate, integrate_with_variational, invariant_drift, propagate, propagate_with_variational, IntegratorOptions,
};
use apsis_core::model::{Perturbation, PerturbationFamily, TimeProfile};
use apsis_core::orbit::{find_closed_orbit, ClosedOrbitOptions};
use apsis_core::{Dim, HamiltonianSystem, KineticLaw, PhaseState, Potential};
use core::f64::consts::PI;
use proptest::prelude::*;

fn system(law: KineticLaw, alpha: f64, dim: Dim) -> HamiltonianSystem {
    HamiltonianSystem::unperturbed(law, Potential::homogeneous(1.0, alpha).unwrap(), dim)
}

#[test]
fn first_integrals_drift_below_1e10_over_ten_periods() {
    let cases = [
        (KineticLaw::classical(1.0).unwrap(), 1.0, -0.375, 1.0, 1, 1),
        (KineticLaw::classical(1.0).unwrap(), 0.5, -1.5, 0.276, 3, 4),
        (KineticLaw::classical(1.0).unwrap(), -1.0, 1.0, 0.27, 5, 9),
        (KineticLaw::classical(1.0).unwrap(), 1.5, -1.0, 0.45, 3, 2),
        (KineticLaw::relativistic(1.0, 1.0).unwrap(), 1.0, -0.2, 1.3, 3, 2),
    ];
    for (law, alpha, h, l, k, n) in cases {
        let pot = Potential::homogeneous(1.0, alpha).unwrap();
        let orbit = find_closed_orbit(&law, &pot, k, n, h, l, &ClosedOrbitOptions::default()).unwrap();
        let sys = orbit.system();
        let traj = integrate(&sys, &orbit.z0, 0.0, 10.0 * orbit.period, &IntegratorOptions::with_tol(1e-13)).unwrap();
        let drift = invariant_drift(&sys, &traj).unwrap();
        assert!(drift.energy.max_abs <= 1e-10, "alpha {alpha}: energy drift {:e}", drift.energy.max_abs);
        assert!(drift.angular_momentum[2].max_abs <= 1e-10, "alpha {alpha}: L drift {:e}", drift.angular_momentum[2].max_abs);
    }
}

#[test]
fn forward_then_backward_returns_to_start() {
    let sys = system(KineticLaw::relativistic(1.0, 2.0).unwrap(), 1.0, Dim::Spatial);
    let z0 = PhaseState::spatial([1.0, 0.2, -0.1], [0.1, 0.9, 0.2]);
    let opts = IntegratorOptions::with_tol(1e-13);
    let z1 = propagate(&sys, &z0, 0.0, 7.3, &opts).unwrap();
    let back = propagate(&sys, &z1, 7.3, 0.0, &opts).unwrap();
    assert!(back.distance(&z0) < 1e-10, "{:e}", back.distance(&z0));
}

#[test]
fn variational_matrix_matches_flow_differences() {
    let pert = Perturbation::new(
        PerturbationFamily::UniformElectric { direction: [0.6, 0.0, 0.8], profile: TimeProfile::Cosine },
        0.05,
        3.0,
    )
    .unwrap();
    let sys = HamiltonianSystem::new(KineticLaw::classical(1.0).unwrap(), Potential::kepler(1.0).unwrap(), pert, Dim::Spatial)
        .unwrap();
    let z0 = PhaseState::spatial([1.2, 0.0, 0.1], [0.0, 0.8, 0.1]);
    let opts = IntegratorOptions::with_tol(1e-13);
    let t1 = 4.0;
    let (_, w) = propagate_with_variational(&sys, &z0, 0.0, t1, &opts).unwrap();
    let y0 = z0.pack(Dim::Spatial);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for j in 0..6 {
        let (mut yp, mut ym) = (y0, y0);
        yp[j] += h;
        ym[j] -= h;
        let zp = propagate(&sys, &PhaseState::unpack(Dim::Spatial, &yp), 0.0, t1, &opts).unwrap().pack(Dim::Spatial);
        let zm = propagate(&sys, &PhaseState::unpack(Dim::Spatial, &ym), 0.0, t1, &opts).unwrap().pack(Dim::Spatial);
        for i in 0..6 {
            worst = worst.max(((zp[i] - zm[i]) / (2.0 * h) - w.value[(i, j)]).abs());
        }
    }
    assert!(worst <= 1e-4, "{worst:e}");
}

#[test]
fn fundamental_matrix_is_symplectic() {
    let pert = Perturbation::new(PerturbationFamily::UniformMagnetic { b0: [0.1, 0.2, 1.0] }, 0.1, 1.0).unwrap();
    let sys = HamiltonianSystem::new(KineticLaw::relativistic(1.0, 3.0).unwrap(), Potential::homogeneous(1.0, 0.5).unwrap(), pert, Dim::Spatial)
        .unwrap();
    let z0 = PhaseState::spatial([1.0, 0.0, 0.2], [0.0, 0.7, 0.1]);
    let (_, w) = propagate_with_variational(&sys, &z0, 0.0, 12.0, &IntegratorOptions::with_tol(1e-13)).unwrap();
    assert!(w.symplectic_residual() <= 1e-8, "{:e}", w.symplectic_residual());
    assert!((w.determinant() - 1.0).abs() <= 1e-8);
}

#[test]
fn plane_is_invariant_in_the_spatial_problem() {
    let sys = system(KineticLaw::classical(1.0).unwrap(), 1.5, Dim::Spatial);
    let z0 = PhaseState::spatial([1.0, 0.0, 0.0], [0.0, 0.6, 0.0]);
    let (traj, _) = integrate_with_variational(&sys, &z0, 0.0, 15.0, &IntegratorOptions::default()).unwrap();
    let off: f64 = traj.states.iter().map(|z| z.x[2].abs().max(z.p[2].abs())).fold(0.0, f64::max);
    assert!(off <= 1e-12);
}

#[test]
fn circular_kepler_period_matches_closed_form() {
    // r = 1, |p| = 1 is circular with period 2π
    let sys = system(KineticLaw::classical(1.0).unwrap(), 1.0, Dim::Planar);
    let z0 = PhaseState::planar([1.0, 0.0], [0.0, 1.0]);
    let z1 = propagate(&sys, &z0, 0.0, 2.0 * PI, &IntegratorOptions::with_tol(1e-13)).unwrap();
    assert!(z1.distance(&z0) < 1e-10);
}

#[test]
fn integration_error_has_high_order() {
    let sys = system(KineticLaw::classical(1.0).unwrap(), -2.0, Dim::Planar);
    let z0 = PhaseState::planar([1.0, 0.0], [0.0, 0.5]);
    // exact solution of the isotropic oscillator with unit frequency
    let t1: f64 = 3.0;
    let exact = PhaseState::planar([t1.cos(), 0.5 * t1.sin()], [-t1.sin(), 0.5 * t1.cos()]);
    let err = |max_step: f64| {
        let opts = IntegratorOptions { tol: 1e-3, max_step, ..IntegratorOptions::default() };
        propagate(&sys, &z0, 0.0, t1, &opts).unwrap().distance(&exact)
    };
    let (e1, e2) = (err(0.3), err(0.15));
    assert!(e1 / e2 > 16.0, "ratio {}", e1 / e2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unperturbed_energy_is_conserved(x in 0.5f64..2.0, px in -0.3f64..0.3, py in 0.4f64..1.0, alpha in prop_oneof![Just(-1.0), Just(0.5), Just(1.0)]) {
        let sys = system(KineticLaw::classical(1.0).unwrap(), alpha, Dim::Planar);
        let z0 = PhaseState::planar([x, 0.0], [px, py]);
        let traj = integrate(&sys, &z0, 0.0, 10.0, &IntegratorOptions::default()).unwrap();
        let drift = invariant_drift(&sys, &traj).unwrap();
        prop_assert!(drift.energy.max_abs <= 1e-9);
        prop_assert!(drift.angular_momentum[2].max_abs <= 1e-9);
    }
}
