use apsis_core::actions::Verdict;
use apsis_core::flow::{propagate, IntegratorOptions};
use apsis_core::nondeg::{
    check_fixed_energy, check_planar_fixed_period, check_spatial_fixed_period, cross_check, kernel_dimension,
    NondegOptions,
};
use apsis_core::orbit::{find_closed_orbit, manifold_samples, ClosedOrbitOptions, Group, PeriodicOrbit};
use apsis_core::{Dim, KineticLaw, Potential};
use nalgebra::DMatrix;

fn orbit(law: KineticLaw, pot: Potential, k: u32, n: u32, h: f64, l: f64) -> PeriodicOrbit {
    find_closed_orbit(&law, &pot, k, n, h, l, &ClosedOrbitOptions::default()).unwrap()
}

fn classical(alpha: f64, k: u32, n: u32, h: f64, l: f64) -> PeriodicOrbit {
    orbit(KineticLaw::classical(1.0).unwrap(), Potential::homogeneous(1.0, alpha).unwrap(), k, n, h, l)
}

struct Case {
    name: &'static str,
    orbit: PeriodicOrbit,
    planar: usize,
    spatial: usize,
}

fn cases() -> Vec<Case> {
    vec![
        Case { name: "harmonic", orbit: classical(-2.0, 1, 2, 1.25, 1.0), planar: 4, spatial: 6 },
        Case { name: "alpha -1", orbit: classical(-1.0, 5, 9, 1.0, 0.27), planar: 2, spatial: 4 },
        Case { name: "alpha 0.5", orbit: classical(0.5, 3, 4, -1.5, 0.276), planar: 2, spatial: 4 },
        Case { name: "kepler", orbit: classical(1.0, 1, 1, -0.375, 1.0), planar: 3, spatial: 5 },
        Case { name: "alpha 1.5", orbit: classical(1.5, 3, 2, -1.0, 0.45), planar: 2, spatial: 4 },
        Case {
            name: "relativistic kepler",
            orbit: orbit(KineticLaw::relativistic(1.0, 1.0).unwrap(), Potential::kepler(1.0).unwrap(), 3, 2, -0.2, 1.3),
            planar: 2,
            spatial: 4,
        },
    ]
}

#[test]
fn kernel_dimensions_and_route_agreement() {
    let opts = NondegOptions::default();
    for c in cases() {
        let cc = cross_check(&c.orbit, 2, &opts).unwrap();
        assert_eq!(cc.planar.kernel.dim, c.planar, "{}: planar kernel", c.name);
        assert!(cc.planar.reliable, "{}: gap {:e}", c.name, cc.planar.kernel.gap);
        assert!(cc.kernel_is_constant(), "{}: {:?}", c.name, cc.sample_kernel_dims);
        assert!(cc.planar.symplectic_residual <= 1e-8, "{}", c.name);
        assert!(cc.fixed_period_agrees() && cc.fixed_energy_agrees(), "{}", c.name);
        cc.require_agreement().unwrap();
        let expected = if c.planar == 2 { Verdict::Nondegenerate } else { Verdict::Degenerate };
        assert_eq!(cc.fixed_period_monodromy, expected, "{}", c.name);
        assert_eq!(cc.fixed_energy_monodromy, expected, "{}", c.name);

        let (_, spatial) = check_spatial_fixed_period(&c.orbit, &opts).unwrap();
        assert_eq!(spatial.kernel.dim, c.spatial, "{}: spatial kernel", c.name);
        assert!(spatial.symplectic_residual <= 1e-8);
    }
}

#[test]
fn flow_direction_lies_in_the_kernel() {
    let opts = NondegOptions::default();
    for c in cases() {
        let (_, r) = check_planar_fixed_period(&c.orbit, &opts).unwrap();
        assert!(r.flow_residual <= 1e-8, "{}: {:e}", c.name, r.flow_residual);
        assert!(r.unit_multipliers(1e-3) >= 2, "{}", c.name);
    }
}

#[test]
fn spatial_monodromy_contains_the_planar_block() {
    let o = classical(0.5, 3, 4, -1.5, 0.276);
    let opts = NondegOptions::default();
    let (_, planar) = check_planar_fixed_period(&o, &opts).unwrap();
    let (_, spatial) = check_spatial_fixed_period(&o, &opts).unwrap();
    // packed order (x₁, x₂, [x₃], p₁, p₂, [p₃])
    let map = [0usize, 1, 3, 4];
    for i in 0..4 {
        for j in 0..4 {
            let d = (planar.p[(i, j)] - spatial.p[(map[i], map[j])]).abs();
            assert!(d <= 1e-9 * planar.p.amax(), "({i}, {j}): {d:e}");
        }
    }
    // out-of-plane block decouples
    for &i in &map {
        assert!(spatial.p[(i, 2)].abs() <= 1e-10 && spatial.p[(2, i)].abs() <= 1e-10);
    }
}

#[test]
fn fixed_energy_spaces_match_dimension() {
    let opts = NondegOptions::default();
    let o = classical(-1.0, 5, 9, 1.0, 0.27);
    let (v, r) = check_fixed_energy(&o, Dim::Planar, &opts).unwrap();
    assert_eq!((v, r.dim_f), (Verdict::Nondegenerate, 2));
    let (v, r) = check_fixed_energy(&o, Dim::Spatial, &opts).unwrap();
    assert_eq!((v, r.dim_f), (Verdict::Nondegenerate, 4));
    let kepler = classical(1.0, 1, 1, -0.375, 1.0);
    let (v, r) = check_fixed_energy(&kepler, Dim::Planar, &opts).unwrap();
    assert_eq!((v, r.dim_f), (Verdict::Degenerate, 3));
}

#[test]
fn manifold_samples_are_periodic_orbits_on_the_energy_level() {
    let o = classical(1.5, 3, 2, -1.0, 0.45).embed_spatial();
    let sys = o.system();
    let samples = manifold_samples(&o, 6, 3, Group::O3);
    assert_eq!(samples.elements.len(), 36);
    let opts = IntegratorOptions::with_tol(1e-13);
    for z in samples.initial_states() {
        let h = sys.hamiltonian(0.0, &z).unwrap();
        assert!((h - o.profile.h).abs() <= 1e-10, "{h}");
        let z1 = propagate(&sys, &z, 0.0, o.period, &opts).unwrap();
        assert!(z1.distance(&z) <= 1e-8, "{:e}", z1.distance(&z));
    }
}

#[test]
fn kernel_dimension_counts_small_singular_values() {
    let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1e-9, 0.0, 0.0, 0.0, 0.5]);
    let k = kernel_dimension(&m, 1e-6);
    assert_eq!(k.dim, 1);
    assert!(k.gap > 1e8);
}
