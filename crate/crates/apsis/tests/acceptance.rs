//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use apsis::commands::{cmd_continue, evaluate_configuration, limit_table, ConfigurationResult, VerdictRow};
use apsis::{Context, ExperimentConfig};
use apsis_core::actions::action_point;
use apsis_core::flow::{integrate, invariant_drift, propagate, propagate_with_variational, IntegratorOptions};
use apsis_core::model::{Perturbation, PerturbationFamily, TimeProfile};
use apsis_core::orbit::{find_closed_orbit, radial_profile, ClosedOrbitOptions};
use apsis_core::{Dim, HamiltonianSystem, KineticLaw, PhaseState, Potential};
use serde_json::Value;

const DEGENERATE_MAX: f64 = 1e-4;
const NONDEGENERATE_MIN: f64 = 1e-3;
const GAP_MIN: f64 = 1e2;
const SWEEP_SECONDS: f64 = 60.0;

struct Outcome {
    pass: bool,
    details: String,
}

impl Outcome {
    fn new(failures: Vec<String>, summary: String) -> Self {
        if failures.is_empty() {
            Outcome { pass: true, details: summary }
        } else {
            Outcome { pass: false, details: format!("{summary}; {}", failures.join("; ")) }
        }
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn context(name: &str) -> Context {
    let path = configs_dir().join(name);
    let config = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
    Context::new(config, 1.0, configs_dir()).unwrap()
}

fn evaluate_all(ctx: &Context) -> Result<Vec<ConfigurationResult>, String> {
    ctx.config
        .configurations()
        .iter()
        .map(|(label, law, pot, orbit)| {
            evaluate_configuration(ctx, label, law, pot, orbit).map(|(r, _)| r).map_err(|e| format!("{label}: {e}"))
        })
        .collect()
}

fn rows<'a>(c: &'a ConfigurationResult, problem: &str, route: &str, dim: &str) -> Option<&'a VerdictRow> {
    c.rows.iter().find(|r| r.problem == problem && r.route == route && r.dim == dim)
}

/// Verdict and metric checks shared by the classical table and the relativistic case.
fn check_verdicts(c: &ConfigurationResult, degenerate: bool, failures: &mut Vec<String>) {
    let want = if degenerate { "degenerate" } else { "nondegenerate" };
    for problem in ["fixed_period", "fixed_energy"] {
        for (route, dim) in [("actions", "planar"), ("monodromy", "planar"), ("monodromy", "spatial")] {
            match rows(c, problem, route, dim) {
                Some(r) if r.verdict == want => {}
                Some(r) => failures.push(format!("{}: {problem} {route} {dim} says {}", c.label, r.verdict)),
                None => failures.push(format!("{}: missing {problem} {route} {dim} row", c.label)),
            }
        }
        if let Some(r) = rows(c, problem, "actions", "planar") {
            let ok = if degenerate { r.value.abs() <= DEGENERATE_MAX } else { r.value.abs() >= NONDEGENERATE_MIN };
            if !ok {
                failures.push(format!("{}: {problem} normalized det {:.3e}", c.label, r.value));
            }
        }
    }
}

fn check_kernels(c: &ConfigurationResult, planar: usize, spatial: usize, failures: &mut Vec<String>) -> String {
    let mut dims = Vec::new();
    for (dim, want) in [("planar", planar), ("spatial", spatial)] {
        match rows(c, "fixed_period", "monodromy", dim) {
            Some(r) => {
                dims.push(format!("{}", r.value));
                if r.value != want as f64 {
                    failures.push(format!("{}: {dim} kernel {} != {want}", c.label, r.value));
                }
                let gap = r.gap.unwrap_or(0.0);
                if gap < GAP_MIN {
                    failures.push(format!("{}: {dim} gap {gap:.3e}", c.label));
                }
            }
            None => failures.push(format!("{}: missing {dim} kernel row", c.label)),
        }
    }
    dims.join("/")
}

struct Tables {
    sweep: Result<Vec<ConfigurationResult>, String>,
    sweep_seconds: f64,
    relativistic: Result<Vec<ConfigurationResult>, String>,
}

const SWEEP_EXPECTED: [(&str, bool, usize, usize); 5] = [
    ("alpha=-2", true, 4, 6),
    ("alpha=-1", false, 2, 4),
    ("alpha=0.5", false, 2, 4),
    ("alpha=1", true, 3, 5),
    ("alpha=1.5", false, 2, 4),
];

fn criterion_1(t: &Tables) -> Outcome {
    let sweep = match &t.sweep {
        Ok(s) => s,
        Err(e) => return Outcome::new(vec![e.clone()], "sweep failed".into()),
    };
    let mut failures = Vec::new();
    let mut dets = Vec::new();
    if sweep.len() != SWEEP_EXPECTED.len() {
        failures.push(format!("{} configurations", sweep.len()));
    }
    for (c, &(label, degenerate, _, _)) in sweep.iter().zip(&SWEEP_EXPECTED) {
        if c.label != label {
            failures.push(format!("unexpected label {}", c.label));
        }
        check_verdicts(c, degenerate, &mut failures);
        dets.push(format!("{}: {:.1e}/{:.1e}", c.label, c.actions.normalized_fixed_period, c.actions.normalized_fixed_energy));
    }
    if t.sweep_seconds > SWEEP_SECONDS {
        failures.push(format!("runtime {:.1} s", t.sweep_seconds));
    }
    Outcome::new(failures, format!("normalized dets {}; {:.1} s", dets.join(", "), t.sweep_seconds))
}

fn criterion_2(t: &Tables) -> Outcome {
    let sweep = match &t.sweep {
        Ok(s) => s,
        Err(e) => return Outcome::new(vec![e.clone()], "sweep failed".into()),
    };
    let mut failures = Vec::new();
    let mut dims = Vec::new();
    for (c, &(_, _, planar, spatial)) in sweep.iter().zip(&SWEEP_EXPECTED) {
        dims.push(check_kernels(c, planar, spatial, &mut failures));
    }
    let min_gap = sweep
        .iter()
        .flat_map(|c| c.rows.iter().filter(|r| r.metric == "kernel_dim").filter_map(|r| r.gap))
        .fold(f64::INFINITY, f64::min);
    Outcome::new(failures, format!("planar/spatial kernels {}; smallest gap {min_gap:.2e}", dims.join(", ")))
}

fn criterion_3(t: &Tables) -> Outcome {
    let rel = match &t.relativistic {
        Ok(s) => s,
        Err(e) => return Outcome::new(vec![e.clone()], "relativistic case failed".into()),
    };
    let mut failures = Vec::new();
    let mut dims = String::new();
    for c in rel {
        check_verdicts(c, false, &mut failures);
        dims = check_kernels(c, 2, 4, &mut failures);
    }
    let c = &rel[0];
    Outcome::new(
        failures,
        format!(
            "L = {:.6}, normalized dets {:.2e}/{:.2e}, kernels {dims}",
            c.orbit.l, c.actions.normalized_fixed_period, c.actions.normalized_fixed_energy
        ),
    )
}

fn criterion_4() -> Outcome {
    let law = KineticLaw::classical(1.0).unwrap();
    let kepler = Potential::kepler(1.0).unwrap();
    let harmonic = Potential::harmonic(1.0).unwrap();
    let mut failures = Vec::new();
    let (mut phi_k, mut tau_k, mut i1_k, mut phi_h) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for h in [-1.5f64, -0.75, -0.375, -0.1] {
        let lc = 1.0 / (-2.0 * h).sqrt();
        for frac in [0.1, 0.4, 0.7, 0.95] {
            let l = frac * lc;
            match action_point(&law, &kepler, h, l) {
                Ok(a) => {
                    let tau = 2.0 * PI * (-2.0 * h).powf(-1.5);
                    phi_k = phi_k.max((a.profile.phi - PI).abs());
                    tau_k = tau_k.max((a.profile.tau - tau).abs() / tau);
                    i1_k = i1_k.max((a.i1 - ((-2.0 * h).powf(-0.5) - l)).abs());
                }
                Err(e) => failures.push(format!("kepler h {h} L {l}: {e}")),
            }
        }
    }
    let mut taus = Vec::new();
    for i in 0..5 {
        let h = 0.5 + 0.6 * i as f64;
        for j in 0..5 {
            let l = h * (0.1 + 0.2 * j as f64);
            match radial_profile(&law, &harmonic, h, l) {
                Ok(p) => {
                    phi_h = phi_h.max((p.phi - PI / 2.0).abs());
                    taus.push(p.tau);
                }
                Err(e) => failures.push(format!("harmonic h {h} L {l}: {e}")),
            }
        }
    }
    let spread = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - taus.iter().cloned().fold(f64::INFINITY, f64::min);
    for (name, value, tol) in [
        ("kepler phi", phi_k, 1e-7),
        ("harmonic phi", phi_h, 1e-7),
        ("kepler tau (relative)", tau_k, 1e-6),
        ("kepler I1", i1_k, 1e-8),
        ("harmonic tau spread", spread, 1e-8),
    ] {
        if !(value <= tol) {
            failures.push(format!("{name} error {value:.2e} > {tol:e}"));
        }
    }
    Outcome::new(
        failures,
        format!(
            "errors: kepler phi {phi_k:.1e}, harmonic phi {phi_h:.1e}, kepler tau {tau_k:.1e}, kepler I1 {i1_k:.1e}, isochrony spread {spread:.1e}"
        ),
    )
}

fn hygiene_drift(failures: &mut Vec<String>) -> f64 {
    let cases = [
        (KineticLaw::classical(1.0).unwrap(), 1.0, -0.375, 1.0, 1, 1),
        (KineticLaw::classical(1.0).unwrap(), 0.5, -1.5, 0.276, 3, 4),
        (KineticLaw::classical(1.0).unwrap(), -1.0, 1.0, 0.27, 5, 9),
        (KineticLaw::classical(1.0).unwrap(), 1.5, -1.0, 0.45, 3, 2),
        (KineticLaw::relativistic(1.0, 1.0).unwrap(), 1.0, -0.2, 1.3, 3, 2),
    ];
    let mut worst = 0.0f64;
    for (law, alpha, h, l, k, n) in cases {
        let pot = Potential::homogeneous(1.0, alpha).unwrap();
        let result = find_closed_orbit(&law, &pot, k, n, h, l, &ClosedOrbitOptions::default())
            .map(|o| o.embed_spatial())
            .and_then(|o| {
                let sys = o.system();
                let traj = integrate(&sys, &o.z0, 0.0, 10.0 * o.period, &IntegratorOptions::with_tol(1e-13))?;
                invariant_drift(&sys, &traj)
            });
        match result {
            Ok(d) => {
                let m = d.angular_momentum.iter().map(|s| s.max_abs).fold(d.energy.max_abs, f64::max);
                worst = worst.max(m);
            }
            Err(e) => failures.push(format!("drift alpha {alpha}: {e}")),
        }
    }
    if worst > 1e-10 {
        failures.push(format!("invariant drift {worst:.2e}"));
    }
    worst
}

fn hygiene_variational(failures: &mut Vec<String>) -> f64 {
    let pert = Perturbation::new(
        PerturbationFamily::UniformElectric { direction: [0.6, 0.0, 0.8], profile: TimeProfile::Cosine },
        0.05,
        3.0,
    )
    .unwrap();
    let sys =
        HamiltonianSystem::new(KineticLaw::relativistic(1.0, 3.0).unwrap(), Potential::kepler(1.0).unwrap(), pert, Dim::Spatial)
            .unwrap();
    let z0 = PhaseState::spatial([1.2, 0.0, 0.1], [0.0, 0.8, 0.1]);
    let opts = IntegratorOptions::with_tol(1e-13);
    let t1 = 4.0;
    let w = match propagate_with_variational(&sys, &z0, 0.0, t1, &opts) {
        Ok((_, w)) => w,
        Err(e) => {
            failures.push(format!("variational: {e}"));
            return f64::NAN;
        }
    };
    let y0 = z0.pack(Dim::Spatial);
    let h = 1e-6;
    let mut worst = 0.0f64;
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
    if !(worst <= 1e-4) {
        failures.push(format!("variational vs differences {worst:.2e}"));
    }
    worst
}

fn hygiene_vector_field(failures: &mut Vec<String>) -> f64 {
    let pert = Perturbation::new(PerturbationFamily::UniformMagnetic { b0: [0.3, -0.2, 1.0] }, 0.2, 1.0).unwrap();
    let law = KineticLaw::relativistic(1.0, 2.0).unwrap();
    let sys = HamiltonianSystem::new(law, Potential::homogeneous(1.0, 0.5).unwrap(), pert, Dim::Spatial).unwrap();
    let z = PhaseState::spatial([0.8, -0.4, 0.3], [0.2, 1.1, -0.5]);
    let f = sys.vector_field(0.0, &z).unwrap();
    let exact = [-f.p[0], -f.p[1], -f.p[2], f.x[0], f.x[1], f.x[2]];
    let y = z.pack(Dim::Spatial);
    let err = |h: f64| -> f64 {
        (0..6)
            .map(|j| {
                let (mut yp, mut ym) = (y, y);
                yp[j] += h;
                ym[j] -= h;
                let hp = sys.hamiltonian(0.0, &PhaseState::unpack(Dim::Spatial, &yp)).unwrap();
                let hm = sys.hamiltonian(0.0, &PhaseState::unpack(Dim::Spatial, &ym)).unwrap();
                ((hp - hm) / (2.0 * h) - exact[j]).abs()
            })
            .fold(0.0, f64::max)
    };
    let orders: Vec<f64> = [1e-2, 5e-3, 2.5e-3].windows(2).map(|w| (err(w[0]) / err(w[1])).log2()).collect();
    let worst = orders.iter().map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
    if worst > 0.3 {
        failures.push(format!("vector field orders {orders:?}"));
    }
    orders.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn hygiene_field_identity(failures: &mut Vec<String>) -> f64 {
    let mut worst = 0.0f64;
    let points = [[0.5, -1.0, 2.0], [1.3, 0.2, -0.7], [-2.0, 1.5, 0.1], [0.01, 0.02, -0.03]];
    for (k, b0) in [[0.0, 0.0, 1.0], [0.3, -1.2, 0.5], [-2.0, 0.7, 1.9]].into_iter().enumerate() {
        let p = Perturbation::new(PerturbationFamily::UniformMagnetic { b0 }, 0.3 + 0.2 * k as f64, 1.0).unwrap();
        for x in points {
            let da = p.da(0.0, &x);
            let b = p.fields(0.0, &x, Dim::Spatial).unwrap().b;
            for y in points {
                let yb = [y[1] * b[2] - y[2] * b[1], y[2] * b[0] - y[0] * b[2], y[0] * b[1] - y[1] * b[0]];
                for j in 0..3 {
                    let lhs: f64 = (0..3).map(|i| da[i][j] * y[i] - da[j][i] * y[i]).sum();
                    worst = worst.max((lhs - yb[j]).abs());
                }
            }
        }
    }
    if worst > 1e-10 {
        failures.push(format!("field identity {worst:.2e}"));
    }
    worst
}

fn criterion_5(t: &Tables) -> Outcome {
    let mut failures = Vec::new();
    let mut symplectic = 0.0f64;
    let mut monodromies = 0;
    for set in [&t.sweep, &t.relativistic] {
        match set {
            Ok(cs) => {
                for r in cs.iter().flat_map(|c| &c.rows) {
                    if let Some(s) = r.symplectic_residual {
                        symplectic = symplectic.max(s);
                        monodromies += 1;
                    }
                }
            }
            Err(e) => failures.push(e.clone()),
        }
    }
    if symplectic > 1e-8 {
        failures.push(format!("symplectic residual {symplectic:.2e}"));
    }
    let drift = hygiene_drift(&mut failures);
    let variational = hygiene_variational(&mut failures);
    let order = hygiene_vector_field(&mut failures);
    let identity = hygiene_field_identity(&mut failures);
    Outcome::new(
        failures,
        format!(
            "symplectic {symplectic:.1e} over {monodromies} monodromies, drift {drift:.1e}, variational {variational:.1e}, \
             vector field order {order:.2}, field identity {identity:.1e}"
        ),
    )
}

fn continuation_run(name: &str, fixed_energy: bool, failures: &mut Vec<String>) -> String {
    let ctx = context(name);
    let report = match cmd_continue(&ctx) {
        Ok(r) => r,
        Err(e) => {
            failures.push(format!("{name}: {e}"));
            return format!("{name}: failed");
        }
    };
    let doc: Value = serde_json::from_slice(&report.file("continue.json").unwrap().bytes).unwrap();
    let t_star = doc["orbit"]["period"].as_f64().unwrap();
    let mut qualifying = 0;
    let mut best: Option<(f64, f64, f64)> = None;
    for seed in doc["seeds"].as_array().unwrap() {
        if seed["status"] != "accepted" {
            continue;
        }
        let steps = seed["steps"].as_array().unwrap();
        let last = &steps[steps.len() - 1];
        let f = |k: &str| last[k].as_f64();
        let residual = f("residual").unwrap();
        let distance = f("distance").unwrap_or(f64::INFINITY);
        let ratio = seed["halving_ratio"].as_f64().unwrap_or(f64::NAN);
        let mut ok = residual <= 1e-9 && distance <= 0.1 && (1.5..=3.0).contains(&ratio);
        if fixed_energy {
            let dt = (f("period").unwrap() - t_star).abs();
            ok &= dt <= 0.05 * t_star && f("energy_residual").unwrap_or(f64::INFINITY) <= 1e-9;
        }
        if ok {
            qualifying += 1;
            if best.is_none_or(|b| distance < b.1) {
                best = Some((residual, distance, ratio));
            }
        }
    }
    if qualifying == 0 {
        failures.push(format!("{name}: no accepted seed meets every bound"));
    }
    let (res, dist, ratio) = best.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    format!(
        "{}: {}/{} accepted, {qualifying} within bounds (residual {res:.1e}, distance {dist:.1e}, halving ratio {ratio:.2}), \
         distinct {} raw / {} modulo symmetry vs {}",
        name.trim_end_matches(".json"),
        doc["accepted"],
        doc["seed_count"],
        doc["distinct_count"],
        doc["distinct_count_modulo_symmetry"],
        doc["category_lower_bound"]
    )
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let lines = [
        continuation_run("continue_cosine_electric.json", false, &mut failures),
        continuation_run("continue_static_electric.json", true, &mut failures),
        continuation_run("continue_magnetic.json", true, &mut failures),
    ];
    Outcome::new(failures, lines.join(" | "))
}

fn criterion_7() -> Outcome {
    let ctx = context("limit_classical.json");
    let table = match limit_table(&ctx) {
        Ok(t) => t,
        Err(e) => return Outcome::new(vec![e.to_string()], "limit table failed".into()),
    };
    let mut failures = Vec::new();
    let names = ["tau", "phi", "fixed-period det", "fixed-energy det"];
    let mut summary = Vec::new();
    for row in &table.rows {
        if let Some(orders) = row.orders {
            for (name, o) in names.iter().zip(orders) {
                if !((o - 2.0).abs() <= 0.3) {
                    failures.push(format!("{name} order {o:.3} at c = {}", row.c));
                }
            }
            summary.push(format!("c={}: {:.3}", row.c, orders.iter().cloned().fold(f64::NAN, f64::max)));
        }
    }
    let min = table.rows.iter().filter_map(|r| r.orders).flatten().fold(f64::INFINITY, f64::min);
    Outcome::new(failures, format!("orders in 1/c from {min:.3} up to {}", summary.join(", ")))
}

fn criterion_8(t: &Tables) -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    for set in [&t.sweep, &t.relativistic] {
        match set {
            Ok(cs) => {
                for c in cs {
                    count += 1;
                    for problem in ["fixed_period", "fixed_energy"] {
                        let verdicts: Vec<&str> =
                            c.rows.iter().filter(|r| r.problem == problem).map(|r| r.verdict).collect();
                        if verdicts.len() < 3 || verdicts.iter().any(|v| *v != verdicts[0]) {
                            failures.push(format!("{}: {problem} verdicts {verdicts:?}", c.label));
                        }
                    }
                    if !(c.fixed_period_agrees && c.fixed_energy_agrees) {
                        failures.push(format!("{}: cross-check disagreement", c.label));
                    }
                }
            }
            Err(e) => failures.push(e.clone()),
        }
    }
    Outcome::new(failures, format!("{count} configurations, actions and monodromy verdicts compared per problem"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let sweep_ctx = context("alpha_sweep.json");
    let t0 = Instant::now();
    let sweep = evaluate_all(&sweep_ctx);
    let sweep_seconds = t0.elapsed().as_secs_f64();
    let relativistic = evaluate_all(&context("relativistic_kepler.json"));
    let tables = Tables { sweep, sweep_seconds, relativistic };

    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 8] = [
        ("degeneracy table", Box::new(|| criterion_1(&tables))),
        ("kernel dimensions", Box::new(|| criterion_2(&tables))),
        ("relativistic Kepler", Box::new(|| criterion_3(&tables))),
        ("closed-form anchors", Box::new(criterion_4)),
        ("numerics hygiene", Box::new(|| criterion_5(&tables))),
        ("continuation", Box::new(criterion_6)),
        ("non-relativistic limit", Box::new(criterion_7)),
        ("route equivalence", Box::new(|| criterion_8(&tables))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({}) [{:.1} s]", i + 1, o.details, t.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 8 passed in {:.1} s", 8 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
