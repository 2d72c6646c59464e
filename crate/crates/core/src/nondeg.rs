//! Non-degeneracy through the monodromy of the linearized flow: kernel
//! dimensions of `I − P` and of the fixed-energy augmented matrix.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use nalgebra::{DMatrix, Schur};

use crate::actions::{k0_hessian, nondeg_fixed_energy, nondeg_fixed_period, NondegReport, Verdict};
use crate::error::{Error, Result};
use crate::flow::{propagate_with_variational, IntegratorOptions};
use crate::model::{symplectic_j, Dim, HamiltonianSystem, PhaseState};
use crate::orbit::{manifold_samples, Group, PeriodicOrbit};

/// Monodromy matrices with a larger symplectic residual are rejected.
pub const SYMPLECTIC_REJECT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NondegOptions {
    /// Relative singular-value threshold for rank decisions.
    pub rank_tol: f64,
    /// Spectral gaps below this flag a verdict as unreliable.
    pub min_gap: f64,
    pub integrator: IntegratorOptions,
    /// Threshold on the normalized determinants of the actions route.
    pub det_threshold: f64,
    pub fd_step: f64,
}

impl Default for NondegOptions {
    fn default() -> Self {
        NondegOptions {
            rank_tol: 1e-6,
            min_gap: 10.0,
            integrator: IntegratorOptions::with_tol(1e-13),
            det_threshold: crate::actions::DEFAULT_THRESHOLD,
            fd_step: crate::actions::DEFAULT_FD_STEP,
        }
    }
}

/// Numerical kernel dimension from an SVD.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDimension {
    pub dim: usize,
    /// Decreasing.
    pub singular_values: Vec<f64>,
    /// Reference magnitude the threshold is relative to.
    pub scale: f64,
    /// Smallest uncounted over largest counted singular value, with the
    /// threshold standing in for an empty side.
    pub gap: f64,
}

impl KernelDimension {
    pub fn threshold(&self, rank_tol: f64) -> f64 {
        rank_tol * self.scale
    }

    pub fn is_reliable(&self, min_gap: f64) -> bool {
        self.gap >= min_gap
    }
}

/// Singular values of `m` below `rank_tol · σ_max(m)`.
pub fn kernel_dimension(m: &DMatrix<f64>, rank_tol: f64) -> KernelDimension {
    kernel_dimension_scaled(m, rank_tol, None)
}

/// As [`kernel_dimension`], with the threshold relative to `scale` when given.
pub fn kernel_dimension_scaled(m: &DMatrix<f64>, rank_tol: f64, scale: Option<f64>) -> KernelDimension {
    let sv: Vec<f64> = m.singular_values().iter().copied().collect();
    let scale = scale.unwrap_or_else(|| sv.first().copied().unwrap_or(0.0));
    let threshold = rank_tol * scale;
    let dim = sv.iter().filter(|&&s| s <= threshold).count();
    let counted = sv.iter().copied().filter(|&s| s <= threshold).fold(f64::NAN, f64::max);
    let uncounted = sv.iter().copied().filter(|&s| s > threshold).fold(f64::NAN, f64::min);
    let counted = if counted.is_nan() { threshold } else { counted };
    let uncounted = if uncounted.is_nan() { threshold } else { uncounted };
    let gap = if counted == 0.0 { f64::INFINITY } else { uncounted / counted };
    KernelDimension { dim, singular_values: sv, scale, gap }
}

/// Monodromy `P = W(T)` of a periodic orbit and the kernel of `I − P`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyReport {
    pub dim: Dim,
    pub p: DMatrix<f64>,
    pub kernel: KernelDimension,
    /// Floquet multipliers `(re, im)`.
    pub eigenvalues: Vec<(f64, f64)>,
    pub symplectic_residual: f64,
    /// `‖(I − P) ż(0)‖ / ‖ż(0)‖`
    pub flow_residual: f64,
    pub reliable: bool,
}

impl MonodromyReport {
    pub fn kernel_dim(&self) -> usize {
        self.kernel.dim
    }

    /// Multipliers within `tol` of 1.
    pub fn unit_multipliers(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|(re, im)| ((re - 1.0).powi(2) + im * im).sqrt() <= tol).count()
    }
}

/// Kernel of the augmented matrix `[[I − P, −J∇H(z₀)], [∇H(z₀)ᵀ, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEnergyKernelReport {
    pub dim: Dim,
    pub augmented_matrix: DMatrix<f64>,
    pub kernel: KernelDimension,
    /// Dimension of the fixed-energy space (the `w`-projection is injective).
    pub dim_f: usize,
    pub reliable: bool,
    pub symplectic_residual: f64,
}

fn eigenvalues(p: &DMatrix<f64>) -> Vec<(f64, f64)> {
    match Schur::try_new(p.clone(), f64::EPSILON, 10_000) {
        Some(s) => s.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect(),
        None => Vec::new(),
    }
}

fn system_for(orbit: &PeriodicOrbit, dim: Dim) -> HamiltonianSystem {
    HamiltonianSystem::unperturbed(orbit.law, orbit.potential.clone(), dim)
}

/// Monodromy along `orbit` in dimension `dim`, starting from `z0`.
fn monodromy_from(
    orbit: &PeriodicOrbit,
    dim: Dim,
    z0: &PhaseState,
    opts: &NondegOptions,
) -> Result<(HamiltonianSystem, DMatrix<f64>, f64)> {
    let sys = system_for(orbit, dim);
    let (_, w) = propagate_with_variational(&sys, z0, 0.0, orbit.period, &opts.integrator)?;
    let residual = w.symplectic_residual();
    if !(residual <= SYMPLECTIC_REJECT) {
        return Err(Error::SymplecticResidual { residual, limit: SYMPLECTIC_REJECT });
    }
    Ok((sys, w.value, residual))
}

fn monodromy_report(orbit: &PeriodicOrbit, dim: Dim, z0: &PhaseState, opts: &NondegOptions) -> Result<MonodromyReport> {
    let (sys, p, residual) = monodromy_from(orbit, dim, z0, opts)?;
    let n = dim.n();
    let i_minus_p = DMatrix::<f64>::identity(n, n) - &p;
    // σ_max(I − P) vanishes for isochronous potentials; ‖P‖ ≥ 1 keeps the threshold meaningful.
    let p_norm = p.singular_values()[0];
    let scale = i_minus_p.singular_values()[0].max(p_norm);
    let kernel = kernel_dimension_scaled(&i_minus_p, opts.rank_tol, Some(scale));
    let mut zdot = [0.0; 6];
    sys.vector_field_packed(0.0, &z0.pack(dim)[..n], &mut zdot[..n])?;
    let v = nalgebra::DVector::from_column_slice(&zdot[..n]);
    let flow_residual = (&i_minus_p * &v).norm() / v.norm();
    let reliable = kernel.is_reliable(opts.min_gap);
    Ok(MonodromyReport {
        dim,
        eigenvalues: eigenvalues(&p),
        p,
        kernel,
        symplectic_residual: residual,
        flow_residual,
        reliable,
    })
}

/// Planar check: non-degenerate iff `dim ker(I − P₄) = 2`.
pub fn check_planar_fixed_period(orbit: &PeriodicOrbit, opts: &NondegOptions) -> Result<(Verdict, MonodromyReport)> {
    let report = monodromy_report(orbit, Dim::Planar, &orbit.z0, opts)?;
    Ok((if report.kernel.dim == 2 { Verdict::Nondegenerate } else { Verdict::Degenerate }, report))
}

/// Spatial check on the embedded orbit: non-degenerate iff `dim ker(I − P₆) = 4`.
pub fn check_spatial_fixed_period(orbit: &PeriodicOrbit, opts: &NondegOptions) -> Result<(Verdict, MonodromyReport)> {
    let report = monodromy_report(orbit, Dim::Spatial, &orbit.z0, opts)?;
    Ok((if report.kernel.dim == 4 { Verdict::Nondegenerate } else { Verdict::Degenerate }, report))
}

/// Fixed-energy check: non-degenerate iff the fixed-energy space has dimension 2 (plane) or 4 (space).
pub fn check_fixed_energy(orbit: &PeriodicOrbit, dim: Dim, opts: &NondegOptions) -> Result<(Verdict, FixedEnergyKernelReport)> {
    let (sys, p, residual) = monodromy_from(orbit, dim, &orbit.z0, opts)?;
    let n = dim.n();
    let grad = sys.gradient_packed(0.0, &orbit.z0.pack(dim)[..n])?;
    let g = nalgebra::DVector::from_column_slice(&grad[..n]);
    let gn = g.norm();
    if gn == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let g = g / gn;
    let jg = symplectic_j(n) * &g;
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(DMatrix::<f64>::identity(n, n) - &p));
    for i in 0..n {
        m[(i, n)] = -jg[i];
        m[(n, i)] = g[i];
    }
    let scale = m.singular_values()[0].max(p.singular_values()[0]);
    let kernel = kernel_dimension_scaled(&m, opts.rank_tol, Some(scale));
    let dim_f = kernel.dim;
    let target = match dim {
        Dim::Planar => 2,
        Dim::Spatial => 4,
    };
    let reliable = kernel.is_reliable(opts.min_gap);
    let verdict = if dim_f == target { Verdict::Nondegenerate } else { Verdict::Degenerate };
    Ok((verdict, FixedEnergyKernelReport { dim, augmented_matrix: m, kernel, dim_f, reliable, symplectic_residual: residual }))
}

/// Both routes side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub actions: NondegReport,
    pub fixed_period_actions: Verdict,
    pub fixed_energy_actions: Verdict,
    pub planar: MonodromyReport,
    pub fixed_period_monodromy: Verdict,
    pub fixed_energy: FixedEnergyKernelReport,
    pub fixed_energy_monodromy: Verdict,
    /// Planar kernel dimensions at additional points of the orbit manifold.
    pub sample_kernel_dims: Vec<usize>,
}

impl CrossCheck {
    pub fn fixed_period_agrees(&self) -> bool {
        self.fixed_period_actions == self.fixed_period_monodromy
    }

    pub fn fixed_energy_agrees(&self) -> bool {
        self.fixed_energy_actions == self.fixed_energy_monodromy
    }

    pub fn kernel_is_constant(&self) -> bool {
        self.sample_kernel_dims.iter().all(|&d| d == self.planar.kernel.dim)
    }

    pub fn require_agreement(&self) -> Result<()> {
        if !self.fixed_period_agrees() {
            return Err(Error::RouteDisagreement { problem: "fixed-period" });
        }
        if !self.fixed_energy_agrees() {
            return Err(Error::RouteDisagreement { problem: "fixed-energy" });
        }
        Ok(())
    }
}

/// Runs the actions route and the planar monodromy route on one orbit,
/// and re-evaluates the planar kernel at `extra_samples` manifold points.
pub fn cross_check(orbit: &PeriodicOrbit, extra_samples: usize, opts: &NondegOptions) -> Result<CrossCheck> {
    let prof = &orbit.profile;
    let actions = k0_hessian(&orbit.law, &orbit.potential, prof.h, prof.l, opts.fd_step)?;
    let (fp_a, _) = nondeg_fixed_period(&actions, opts.det_threshold);
    let (fe_a, _) = nondeg_fixed_energy(&actions, opts.det_threshold);
    let (fp_m, planar) = check_planar_fixed_period(orbit, opts)?;
    let (fe_m, fixed_energy) = check_fixed_energy(orbit, Dim::Planar, opts)?;
    let mut sample_kernel_dims = Vec::new();
    if extra_samples > 0 {
        // rotations and shifts away from the identity element
        let samples = manifold_samples(orbit, extra_samples + 1, 3, Group::Planar);
        for e in samples.elements.iter().filter(|e| e.angle != Some(0.0)).step_by(2).take(extra_samples) {
            let z = e.initial_state(orbit);
            sample_kernel_dims.push(monodromy_report(orbit, Dim::Planar, &z, opts)?.kernel.dim);
        }
    }
    Ok(CrossCheck {
        actions,
        fixed_period_actions: fp_a,
        fixed_energy_actions: fe_a,
        planar,
        fixed_period_monodromy: fp_m,
        fixed_energy,
        fixed_energy_monodromy: fe_m,
        sample_kernel_dims,
    })
}
