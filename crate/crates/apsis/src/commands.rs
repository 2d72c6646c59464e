//! The four experiment commands.

use std::path::PathBuf;

use apsis_core::actions::{action_point, k0_hessian, NondegReport, Verdict};
use apsis_core::continuation::{
    continue_seed, distance_to_manifold, distinct_solutions, distinct_solutions_modulo, distinct_tolerance, eps_path,
    symmetry_axis, ContinuationResult, Equivalence, ProblemKind, SeedOutcome,
};
use apsis_core::nondeg::{check_fixed_energy, check_planar_fixed_period, check_spatial_fixed_period, cross_check};
use apsis_core::orbit::{find_closed_orbit, manifold_samples, ManifoldElement, PeriodicOrbit};
use apsis_core::{Dim, HamiltonianSystem, KineticLaw};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, LawConfig, OrbitConfig, PotentialConfig, ProblemConfig, Tolerances};
use crate::error::RunError;
use crate::output::{fmt, state_fields, state_header, trajectory_rows, Header, Report};

/// A validated configuration with its resolved tolerances.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub tolerances: Tolerances,
    pub config_hash: String,
    /// Directory relative table paths resolve against.
    pub base_dir: PathBuf,
}

impl Context {
    pub fn new(config: ExperimentConfig, tol_scale: f64, base_dir: PathBuf) -> Result<Self, RunError> {
        let tolerances = Tolerances::resolve(&config.tolerances, tol_scale)?;
        let config_hash = config.hash();
        Ok(Context { config, tolerances, config_hash, base_dir })
    }

    fn header(&self, command: &'static str) -> Header {
        Header::new(command, &self.config_hash, self.tolerances)
    }

    fn build_orbit(&self, law: &LawConfig, pot: &PotentialConfig, orbit: &OrbitConfig) -> Result<PeriodicOrbit, RunError> {
        let law = law.build()?;
        let pot = pot.build(&self.base_dir)?;
        let opts = self.tolerances.orbit_options(orbit.search);
        Ok(find_closed_orbit(&law, &pot, orbit.k, orbit.n, orbit.h, orbit.l, &opts)?)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrbitSummary {
    pub h: f64,
    pub l: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub tau: f64,
    pub phi: f64,
    pub k: u32,
    pub n: u32,
    pub period: f64,
    pub eccentricity: f64,
    pub closure_residual: f64,
    pub closure_tolerance: f64,
}

impl OrbitSummary {
    pub fn of(o: &PeriodicOrbit) -> Self {
        let p = &o.profile;
        OrbitSummary {
            h: p.h,
            l: p.l,
            r_min: p.r_min,
            r_max: p.r_max,
            tau: p.tau,
            phi: p.phi,
            k: o.k,
            n: o.n,
            period: o.period,
            eccentricity: p.eccentricity(),
            closure_residual: o.closure_residual,
            closure_tolerance: o.closure_tolerance(),
        }
    }
}

fn dim_name(dim: Dim) -> &'static str {
    match dim {
        Dim::Planar => "planar",
        Dim::Spatial => "spatial",
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Nondegenerate => "nondegenerate",
        Verdict::Degenerate => "degenerate",
    }
}

#[derive(Serialize)]
struct OrbitDocument {
    #[serde(flatten)]
    header: Header,
    dim: &'static str,
    summary: OrbitSummary,
    trajectory_file: &'static str,
}

pub fn cmd_orbit(ctx: &Context) -> Result<Report, RunError> {
    let mut report = Report::default();
    let cfg = &ctx.config;
    let orbit = report.time("orbit_find", || ctx.build_orbit(&cfg.law, &cfg.potential, &cfg.orbit))?;
    let dim = cfg.orbit.dim.dim();
    let orbit = if dim == Dim::Spatial { orbit.embed_spatial() } else { orbit };
    let doc = OrbitDocument {
        header: ctx.header("orbit"),
        dim: dim_name(dim),
        summary: OrbitSummary::of(&orbit),
        trajectory_file: "trajectory.csv",
    };
    report.json("orbit.json", &doc);
    let mut header = vec!["t"];
    header.extend(state_header(dim));
    let rows: Vec<Vec<String>> = trajectory_rows(&orbit.trajectory, cfg.output.trajectory_samples)?
        .into_iter()
        .map(|(t, z)| {
            let mut row = vec![fmt(t)];
            row.extend(state_fields(&z, dim));
            row
        })
        .collect();
    report.csv("trajectory.csv", &header, &rows);
    Ok(report)
}

/// One line of the verdict table.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictRow {
    pub label: String,
    pub problem: &'static str,
    pub route: &'static str,
    pub dim: &'static str,
    /// `normalized_det`, `kernel_dim` or `fixed_energy_dim`.
    pub metric: &'static str,
    pub value: f64,
    pub verdict: &'static str,
    pub gap: Option<f64>,
    pub symplectic_residual: Option<f64>,
    pub reliable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionsSummary {
    pub i1: f64,
    pub hessian: [[f64; 2]; 2],
    pub gradient: [f64; 2],
    pub det_fixed_period: f64,
    pub det_fixed_energy: f64,
    pub normalized_fixed_period: f64,
    pub normalized_fixed_energy: f64,
    pub hessian_is_zero: bool,
    pub chart_defect: f64,
    pub symmetry_defect: f64,
}

impl ActionsSummary {
    fn of(r: &NondegReport) -> Self {
        ActionsSummary {
            i1: r.point.i1,
            hessian: r.hessian,
            gradient: r.gradient,
            det_fixed_period: r.det_fixed_period,
            det_fixed_energy: r.det_fixed_energy,
            normalized_fixed_period: r.normalized_fixed_period,
            normalized_fixed_energy: r.normalized_fixed_energy,
            hessian_is_zero: r.hessian_is_zero(),
            chart_defect: r.chart_defect,
            symmetry_defect: r.symmetry_defect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigurationResult {
    pub label: String,
    pub law: LawConfig,
    pub potential: PotentialConfig,
    pub orbit: OrbitSummary,
    pub actions: ActionsSummary,
    pub planar_singular_values: Vec<f64>,
    pub floquet_multipliers: Vec<[f64; 2]>,
    pub sample_kernel_dims: Vec<usize>,
    pub kernel_constant: bool,
    pub fixed_period_agrees: bool,
    pub fixed_energy_agrees: bool,
    pub rows: Vec<VerdictRow>,
}

#[derive(Serialize)]
struct NondegDocument<'a> {
    #[serde(flatten)]
    header: Header,
    configurations: &'a [ConfigurationResult],
    all_routes_agree: bool,
    table_file: &'static str,
}

/// Verdicts of both routes for one configuration.
pub fn evaluate_configuration(
    ctx: &Context,
    label: &str,
    law: &LawConfig,
    pot: &PotentialConfig,
    orbit_cfg: &OrbitConfig,
) -> Result<(ConfigurationResult, Vec<String>), RunError> {
    let checks = ctx.config.checks;
    let opts = ctx.tolerances.nondeg_options();
    let orbit = ctx.build_orbit(law, pot, orbit_cfg)?;
    let cc = cross_check(&orbit, checks.extra_samples, &opts)?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let a = &cc.actions;
    let row = |problem, route, dim, metric, value, verdict: Verdict, gap, symp, reliable| VerdictRow {
        label: label.into(),
        problem,
        route,
        dim,
        metric,
        value,
        verdict: verdict_name(verdict),
        gap,
        symplectic_residual: symp,
        reliable,
    };
    if checks.actions_route {
        if checks.fixed_period {
            rows.push(row("fixed_period", "actions", "planar", "normalized_det", a.normalized_fixed_period, cc.fixed_period_actions, None, None, true));
        }
        if checks.fixed_energy {
            rows.push(row("fixed_energy", "actions", "planar", "normalized_det", a.normalized_fixed_energy, cc.fixed_energy_actions, None, None, true));
        }
        if a.hessian_is_zero() {
            warnings.push(format!("{label}: Hessian of K0 vanishes numerically; both action verdicts are degenerate"));
        }
    }
    if checks.monodromy_route {
        let p = &cc.planar;
        let fe = &cc.fixed_energy;
        if checks.fixed_period {
            rows.push(row("fixed_period", "monodromy", "planar", "kernel_dim", p.kernel.dim as f64, cc.fixed_period_monodromy, Some(p.kernel.gap), Some(p.symplectic_residual), p.reliable));
        }
        if checks.fixed_energy {
            rows.push(row("fixed_energy", "monodromy", "planar", "fixed_energy_dim", fe.dim_f as f64, cc.fixed_energy_monodromy, Some(fe.kernel.gap), Some(fe.symplectic_residual), fe.reliable));
        }
        if checks.spatial {
            if checks.fixed_period {
                let (v, s) = check_spatial_fixed_period(&orbit, &opts)?;
                rows.push(row("fixed_period", "monodromy", "spatial", "kernel_dim", s.kernel.dim as f64, v, Some(s.kernel.gap), Some(s.symplectic_residual), s.reliable));
            }
            if checks.fixed_energy {
                let (v, s) = check_fixed_energy(&orbit, Dim::Spatial, &opts)?;
                rows.push(row("fixed_energy", "monodromy", "spatial", "fixed_energy_dim", s.dim_f as f64, v, Some(s.kernel.gap), Some(s.symplectic_residual), s.reliable));
            }
        }
        for r in rows.iter().filter(|r| r.route == "monodromy" && !r.reliable) {
            warnings.push(format!(
                "{label}: unreliable {} {} verdict, spectral gap {:.3e} below {}",
                r.dim,
                r.problem,
                r.gap.unwrap_or(f64::NAN),
                opts.min_gap
            ));
        }
        if !cc.kernel_is_constant() {
            warnings.push(format!(
                "{label}: planar kernel dimension varies over the manifold ({} at the orbit, {:?} at samples)",
                p.kernel.dim, cc.sample_kernel_dims
            ));
        }
    }
    let both = checks.actions_route && checks.monodromy_route;
    let result = ConfigurationResult {
        label: label.into(),
        law: *law,
        potential: pot.clone(),
        orbit: OrbitSummary::of(&orbit),
        actions: ActionsSummary::of(a),
        planar_singular_values: cc.planar.kernel.singular_values.clone(),
        floquet_multipliers: cc.planar.eigenvalues.iter().map(|&(re, im)| [re, im]).collect(),
        sample_kernel_dims: cc.sample_kernel_dims.clone(),
        kernel_constant: cc.kernel_is_constant(),
        fixed_period_agrees: !both || !checks.fixed_period || cc.fixed_period_agrees(),
        fixed_energy_agrees: !both || !checks.fixed_energy || cc.fixed_energy_agrees(),
        rows,
    };
    Ok((result, warnings))
}

pub fn cmd_nondeg(ctx: &Context) -> Result<Report, RunError> {
    let mut report = Report::default();
    let configs = ctx.config.configurations();
    let start = std::time::Instant::now();
    let evaluated: Vec<Result<(ConfigurationResult, Vec<String>), RunError>> = configs
        .par_iter()
        .map(|(label, law, pot, orbit)| evaluate_configuration(ctx, label, law, pot, orbit))
        .collect();
    report.timings.push(crate::output::Timing { operation: "nondeg".into(), seconds: start.elapsed().as_secs_f64() });
    let mut results = Vec::with_capacity(evaluated.len());
    for e in evaluated {
        let (r, w) = e?;
        report.warnings.extend(w);
        results.push(r);
    }
    let disagreements: Vec<String> = results
        .iter()
        .flat_map(|r| {
            let mut v = Vec::new();
            if !r.fixed_period_agrees {
                v.push(format!("{}: fixed-period", r.label));
            }
            if !r.fixed_energy_agrees {
                v.push(format!("{}: fixed-energy", r.label));
            }
            v
        })
        .collect();
    let doc = NondegDocument {
        header: ctx.header("nondeg"),
        configurations: &results,
        all_routes_agree: disagreements.is_empty(),
        table_file: "nondeg.csv",
    };
    report.json("nondeg.json", &doc);
    let header = ["label", "problem", "route", "dim", "metric", "value", "verdict", "gap", "symplectic_residual", "reliable"];
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let rows: Vec<Vec<String>> = results
        .iter()
        .flat_map(|r| r.rows.iter())
        .map(|r| {
            vec![
                r.label.clone(),
                r.problem.into(),
                r.route.into(),
                r.dim.into(),
                r.metric.into(),
                fmt(r.value),
                r.verdict.into(),
                opt(r.gap),
                opt(r.symplectic_residual),
                r.reliable.to_string(),
            ]
        })
        .collect();
    report.csv("nondeg.csv", &header, &rows);
    if !disagreements.is_empty() {
        report.status = Some(RunError::Disagreement(format!("routes disagree: {}", disagreements.join(", "))));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub eps: f64,
    pub z0: Vec<f64>,
    pub period: f64,
    /// `|T − T*|`, fixed energy only.
    pub period_error: Option<f64>,
    pub residual: f64,
    pub energy_residual: Option<f64>,
    pub phase_residual: Option<f64>,
    pub energy_drift: Option<f64>,
    pub newton_iters: usize,
    pub distance: Option<f64>,
    pub distance_coarse: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub seed_id: usize,
    pub polished: bool,
    pub rotation: [[f64; 3]; 3],
    pub shift: f64,
    pub status: String,
    pub message: Option<String>,
    pub steps: Vec<StepReport>,
    /// Distance at the final `ε` over the distance at the previous one.
    pub halving_ratio: Option<f64>,
}

#[derive(Serialize)]
struct ContinueDocument<'a> {
    #[serde(flatten)]
    header: Header,
    problem: ProblemConfig,
    dim: &'static str,
    orbit: OrbitSummary,
    unperturbed_verdict: &'static str,
    eps_path: &'a [f64],
    forcing_period: f64,
    seed_count: usize,
    accepted: usize,
    distinct_count: usize,
    distinct_tolerance: f64,
    distinct_seed_ids: Vec<usize>,
    /// Rotations about this axis map solutions to solutions.
    symmetry_axis: Option<[f64; 3]>,
    distinct_count_modulo_symmetry: usize,
    distinct_seed_ids_modulo_symmetry: Vec<usize>,
    /// Lower bound on the number of solutions from the topology of the manifold.
    category_lower_bound: usize,
    seeds: &'a [SeedReport],
    results_file: &'static str,
    trajectories_file: &'static str,
}

fn step_report(r: &ContinuationResult, dim: Dim, t_star: Option<f64>, distance: Option<(f64, f64)>) -> StepReport {
    let y = r.z0.pack(dim);
    StepReport {
        eps: r.eps,
        z0: y[..dim.n()].to_vec(),
        period: r.period,
        period_error: t_star.map(|t| (r.period - t).abs()),
        residual: r.residual,
        energy_residual: r.energy_residual,
        phase_residual: r.phase_residual,
        energy_drift: r.energy_drift,
        newton_iters: r.newton_iters,
        distance: distance.map(|d| d.0),
        distance_coarse: distance.map(|d| d.1),
    }
}

/// Continued solutions of every seed, with distance certificates at the last two `ε`.
pub struct ContinuationRun {
    pub orbit: PeriodicOrbit,
    pub dim: Dim,
    pub path: Vec<f64>,
    pub forcing_period: f64,
    pub unperturbed_verdict: Verdict,
    pub outcomes: Vec<SeedOutcome>,
    pub seeds: Vec<SeedReport>,
}

impl ContinuationRun {
    /// Final-`ε` solutions of the accepted seeds.
    pub fn accepted(&self) -> Vec<ContinuationResult> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().and_then(|rs| rs.last().cloned()))
            .collect()
    }
}

pub fn run_continuation(ctx: &Context, report: &mut Report) -> Result<ContinuationRun, RunError> {
    let cfg = &ctx.config;
    let cont = cfg.continuation;
    let pert_cfg = cfg
        .perturbation
        .as_ref()
        .ok_or_else(|| RunError::Validation("continue needs a `perturbation` section".into()))?;
    let planar = report.time("orbit_find", || ctx.build_orbit(&cfg.law, &cfg.potential, &cfg.orbit))?;
    let dim = cont.dim.dim();
    let opts = ctx.tolerances.nondeg_options();
    let verdict = report.time("unperturbed_verdict", || -> Result<Verdict, RunError> {
        Ok(match (cont.problem, dim) {
            (ProblemConfig::FixedPeriod, Dim::Planar) => check_planar_fixed_period(&planar, &opts)?.0,
            (ProblemConfig::FixedPeriod, Dim::Spatial) => check_spatial_fixed_period(&planar, &opts)?.0,
            (ProblemConfig::FixedEnergy, d) => check_fixed_energy(&planar, d, &opts)?.0,
        })
    })?;
    if verdict == Verdict::Degenerate {
        let msg = "degenerate unperturbed manifold: continuation from it is not covered by the existence theory";
        report.warn(msg);
        if !cont.proceed_if_degenerate {
            return Err(RunError::Validation(format!(
                "{msg}; set continuation.proceed_if_degenerate to attempt it anyway"
            )));
        }
    }
    let orbit = if dim == Dim::Spatial { planar.embed_spatial() } else { planar };
    let pert = pert_cfg.build(orbit.period)?;
    let law: KineticLaw = cfg.law.build()?;
    let sys = HamiltonianSystem::new(law, orbit.potential.clone(), pert, dim)?;
    let copts = ctx.tolerances.continuation_options();
    let path = match &pert_cfg.schedule {
        Some(s) => {
            if s.last() != Some(&pert_cfg.eps) {
                return Err(RunError::Validation("perturbation.schedule must end at perturbation.eps".into()));
            }
            s.clone()
        }
        None => eps_path(copts.eps_start, pert_cfg.eps),
    };
    let group = cont.group.group();
    let seeds = manifold_samples(&orbit, cont.seeds.rotations, cont.seeds.shifts, group);
    let grid = manifold_samples(&orbit, cont.grid.rotations, cont.grid.shifts, group);
    let kind = match cont.problem {
        ProblemConfig::FixedPeriod => ProblemKind::FixedPeriod,
        ProblemConfig::FixedEnergy => ProblemKind::FixedEnergy,
    };
    let t_star = (kind == ProblemKind::FixedEnergy).then_some(orbit.period);
    let start = std::time::Instant::now();
    let per_seed: Vec<(SeedOutcome, SeedReport)> = seeds
        .elements
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let outcome = continue_seed(&sys, &orbit, kind, e, i, &path, cont.polish, &copts);
            let seed_report = describe_seed(&outcome, &grid, dim, t_star);
            (outcome, seed_report)
        })
        .collect();
    report.timings.push(crate::output::Timing { operation: "continuation".into(), seconds: start.elapsed().as_secs_f64() });
    let (outcomes, seed_reports) = per_seed.into_iter().unzip();
    Ok(ContinuationRun {
        orbit,
        dim,
        path,
        forcing_period: pert.forcing_period,
        unperturbed_verdict: verdict,
        outcomes,
        seeds: seed_reports,
    })
}

fn describe_seed(
    outcome: &SeedOutcome,
    grid: &apsis_core::orbit::ManifoldSample,
    dim: Dim,
    t_star: Option<f64>,
) -> SeedReport {
    let e: &ManifoldElement = &outcome.element;
    let mut rep = SeedReport {
        seed_id: outcome.seed_id,
        polished: outcome.polished,
        rotation: e.rotation,
        shift: e.shift,
        status: "accepted".into(),
        message: None,
        steps: Vec::new(),
        halving_ratio: None,
    };
    match &outcome.result {
        Err(err) => {
            rep.status = err.code().into();
            rep.message = Some(err.to_string());
        }
        Ok(rs) => {
            let n = rs.len();
            for (j, r) in rs.iter().enumerate() {
                let distance = if j + 2 >= n {
                    match distance_to_manifold(&r.trajectory, r.period, grid, true, &[*e]) {
                        Ok(d) => Some((d.distance, d.coarse)),
                        Err(err) => {
                            rep.message = Some(format!("distance at eps {}: {err}", r.eps));
                            None
                        }
                    }
                } else {
                    None
                };
                rep.steps.push(step_report(r, dim, t_star, distance));
            }
            if n >= 2 {
                if let (Some(a), Some(b)) = (rep.steps[n - 1].distance, rep.steps[n - 2].distance) {
                    rep.halving_ratio = Some(a / b);
                }
            }
        }
    }
    rep
}

pub fn cmd_continue(ctx: &Context) -> Result<Report, RunError> {
    let mut report = Report::default();
    let run = run_continuation(ctx, &mut report)?;
    let cfg = &ctx.config;
    let accepted = run.accepted();
    let modulo_shift = cfg.continuation.problem == ProblemConfig::FixedEnergy;
    let tol = distinct_tolerance(&accepted);
    let keep = distinct_solutions(&accepted, modulo_shift, tol)?;
    let distinct_seed_ids: Vec<usize> = keep.iter().map(|&i| accepted[i].seed_id).collect();
    let axis = cfg.perturbation.as_ref().and_then(|p| symmetry_axis(&p.family.family()));
    let reduced = report.time("distinct_modulo_symmetry", || {
        distinct_solutions_modulo(&accepted, Equivalence { shift: modulo_shift, axis }, tol)
    })?;
    let doc = ContinueDocument {
        header: ctx.header("continue"),
        problem: cfg.continuation.problem,
        dim: dim_name(run.dim),
        orbit: OrbitSummary::of(&run.orbit),
        unperturbed_verdict: verdict_name(run.unperturbed_verdict),
        eps_path: &run.path,
        forcing_period: run.forcing_period,
        seed_count: run.seeds.len(),
        accepted: accepted.len(),
        distinct_count: keep.len(),
        distinct_tolerance: tol,
        distinct_seed_ids,
        symmetry_axis: axis,
        distinct_count_modulo_symmetry: reduced.len(),
        distinct_seed_ids_modulo_symmetry: reduced.iter().map(|&i| accepted[i].seed_id).collect(),
        category_lower_bound: if run.dim == Dim::Spatial { 5 } else { 3 },
        seeds: &run.seeds,
        results_file: "results.csv",
        trajectories_file: "trajectories.csv",
    };
    report.json("continue.json", &doc);

    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let header = [
        "seed_id", "status", "eps", "period", "period_error", "residual", "energy_residual", "phase_residual",
        "energy_drift", "newton_iters", "distance",
    ];
    let mut rows = Vec::new();
    for s in &run.seeds {
        if s.steps.is_empty() {
            let mut row = vec![s.seed_id.to_string(), s.status.clone()];
            row.extend(std::iter::repeat_n(String::new(), header.len() - 2));
            rows.push(row);
        }
        for st in &s.steps {
            rows.push(vec![
                s.seed_id.to_string(),
                s.status.clone(),
                fmt(st.eps),
                fmt(st.period),
                opt(st.period_error),
                fmt(st.residual),
                opt(st.energy_residual),
                opt(st.phase_residual),
                opt(st.energy_drift),
                st.newton_iters.to_string(),
                opt(st.distance),
            ]);
        }
    }
    report.csv("results.csv", &header, &rows);

    let mut header = vec!["seed_id", "t"];
    header.extend(state_header(run.dim));
    let mut rows = Vec::new();
    for r in &accepted {
        for (t, z) in trajectory_rows(&r.trajectory, cfg.output.trajectory_samples)? {
            let mut row = vec![r.seed_id.to_string(), fmt(t)];
            row.extend(state_fields(&z, run.dim));
            rows.push(row);
        }
    }
    report.csv("trajectories.csv", &header, &rows);
    if accepted.is_empty() {
        report.status = Some(RunError::Numerical {
            code: "NO_ACCEPTED_SOLUTION",
            message: "no seed produced an accepted solution".into(),
        });
    }
    Ok(report)
}

/// Observables of one kinetic law at fixed `(h, L)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Observables {
    pub tau: f64,
    pub phi: f64,
    pub normalized_fixed_period: f64,
    pub normalized_fixed_energy: f64,
}

impl Observables {
    fn values(&self) -> [f64; 4] {
        [self.tau, self.phi, self.normalized_fixed_period, self.normalized_fixed_energy]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub c: f64,
    pub observables: Observables,
    /// Distance to the classical value, in the order tau, phi, fixed-period det, fixed-energy det.
    pub errors: [f64; 4],
    /// Empirical order in `1/c` against the previous row.
    pub orders: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitTable {
    pub h: f64,
    pub l: f64,
    pub classical: Observables,
    pub rows: Vec<LimitRow>,
}

fn observables(law: &KineticLaw, pot: &apsis_core::Potential, h: f64, l: f64, fd_step: f64) -> Result<Observables, RunError> {
    let p = action_point(law, pot, h, l)?;
    let r = k0_hessian(law, pot, h, l, fd_step)?;
    Ok(Observables {
        tau: p.profile.tau,
        phi: p.profile.phi,
        normalized_fixed_period: r.normalized_fixed_period,
        normalized_fixed_energy: r.normalized_fixed_energy,
    })
}

/// Relativistic observables at each `c` against the classical law of the same mass.
pub fn limit_table(ctx: &Context) -> Result<LimitTable, RunError> {
    let cfg = &ctx.config;
    let m = match cfg.law {
        LawConfig::Relativistic { m, .. } => m,
        LawConfig::Classical { .. } => {
            return Err(RunError::Validation("limit-classical needs a relativistic law".into()));
        }
    };
    let cs = &cfg.limit.c_values;
    if cs.len() < 2 || cs.iter().any(|c| !(c.is_finite() && *c > 0.0)) || cs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RunError::Validation("limit.c_values must hold at least two increasing positive values".into()));
    }
    let pot = cfg.potential.build(&ctx.base_dir)?;
    let (h, l) = (cfg.orbit.h, cfg.orbit.l);
    let fd = ctx.tolerances.fd_step;
    let classical = observables(&KineticLaw::classical(m)?, &pot, h, l, fd)?;
    let reference = classical.values();
    let mut rows: Vec<LimitRow> = Vec::new();
    for &c in cs {
        let obs = observables(&KineticLaw::relativistic(m, c)?, &pot, h, l, fd)?;
        let v = obs.values();
        let errors: [f64; 4] = core::array::from_fn(|i| (v[i] - reference[i]).abs());
        let orders = rows.last().map(|prev| {
            core::array::from_fn(|i| (prev.errors[i] / errors[i]).ln() / (c / prev.c).ln())
        });
        rows.push(LimitRow { c, observables: obs, errors, orders });
    }
    Ok(LimitTable { h, l, classical, rows })
}

#[derive(Serialize)]
struct LimitDocument<'a> {
    #[serde(flatten)]
    header: Header,
    table: &'a LimitTable,
    table_file: &'static str,
}

pub fn cmd_limit_classical(ctx: &Context) -> Result<Report, RunError> {
    let mut report = Report::default();
    let table = report.time("limit_table", || limit_table(ctx))?;
    report.json("limit.json", &LimitDocument { header: ctx.header("limit-classical"), table: &table, table_file: "limit.csv" });
    let header = [
        "c", "tau", "phi", "det_fixed_period", "det_fixed_energy", "err_tau", "err_phi", "err_det_fixed_period",
        "err_det_fixed_energy", "order_tau", "order_phi", "order_det_fixed_period", "order_det_fixed_energy",
    ];
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![fmt(r.c)];
            row.extend(r.observables.values().iter().map(|&v| fmt(v)));
            row.extend(r.errors.iter().map(|&v| fmt(v)));
            match r.orders {
                Some(o) => row.extend(o.iter().map(|&v| fmt(v))),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            row
        })
        .collect();
    report.csv("limit.csv", &header, &rows);
    Ok(report)
}
