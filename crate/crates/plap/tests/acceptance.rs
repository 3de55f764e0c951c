//! Acceptance criteria, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use plap::{load_config, run_command, Command, Job};
use plap_core::construct::{escalate_blowup, escalate_mixed, EscalationTrace};
use plap_core::entire::ball_exhaustion;
use plap_core::grid::{build_grid, DomainSpec, Grid, GridFunction};
use plap_core::nonlinearity::{keller_osserman_check, ClassFFunction, PhiTransform};
use plap_core::plap::{
    apply_p_laplacian, discrete_energy, solve_dirichlet_scalar, solve_dirichlet_system, verify_subsolution,
    ExprCoupling, Side, SolveOptions, SystemSpec,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = (bool, String);

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str, command: Command) -> plap::RunConfig {
    load_config(&configs().join(name), command).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn power(c: f64, gamma: f64) -> ClassFFunction {
    ClassFFunction::power(c, gamma).unwrap()
}

fn coupled() -> SystemSpec {
    SystemSpec::new(
        Arc::new(ExprCoupling::new(&["u1*u2^2", "u1^2*u2"], Some("(u1*u2)^2/2")).unwrap()),
        vec![power(1.0, 3.0); 2],
        power(1.0, 3.0),
    )
    .unwrap()
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn c1_keller_osserman() -> Outcome {
    let t = Instant::now();
    let mut wrong = Vec::new();
    let mut borderline = 0;
    for p in [1.5, 2.0, 3.0] {
        for gamma in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let v = keller_osserman_check(&power(1.0, gamma), p).unwrap();
            let expected = gamma > p - 1.0;
            if gamma == p - 1.0 {
                borderline += 1;
            }
            if v.converges != expected {
                wrong.push(format!("(gamma {gamma}, p {p})"));
            }
        }
    }
    let elapsed = secs(t);
    (
        wrong.is_empty() && borderline == 2 && elapsed < 5.0,
        format!(
            "15 cases, {} wrong {:?}, {borderline} borderline cases divergent, {elapsed:.2} s (limit 5 s)",
            wrong.len(),
            wrong
        ),
    )
}

fn c2_closed_form_integral() -> Outcome {
    let v = keller_osserman_check(&power(1.0, 2.0), 2.0).unwrap();
    let exact = 2.0 * 3f64.sqrt();
    let rel = (v.total() - exact).abs() / exact;
    (
        v.converges && rel <= 0.01,
        format!("total {} vs 2*sqrt(3) = {exact}, relative error {rel:.2e} (limit 1e-2)", v.total()),
    )
}

fn linear_error(nodes: usize) -> f64 {
    let grid = build_grid(&DomainSpec::interval(0.0, 1.0, nodes)).unwrap();
    let bc = GridFunction::constant(&grid, 1.0);
    let r = solve_dirichlet_scalar(&grid, &power(1.0, 1.0), &bc, 2.0, &SolveOptions::default()).unwrap();
    assert!(r.converged);
    (0..grid.len())
        .map(|k| {
            let x = grid.node(k)[0];
            (r.solution[0][k] - (x - 0.5).cosh() / 0.5f64.cosh()).abs()
        })
        .fold(0.0, f64::max)
}

fn c3_linear_benchmark() -> Outcome {
    let t = Instant::now();
    let errors: Vec<f64> = [100, 200, 400].iter().map(|&n| linear_error(n)).collect();
    let elapsed = secs(t);
    let h = |n: f64| 1.0 / (n - 1.0);
    let orders = [
        (errors[0] / errors[1]).ln() / (h(100.0) / h(200.0)).ln(),
        (errors[1] / errors[2]).ln() / (h(200.0) / h(400.0)).ln(),
    ];
    let order = orders[0].min(orders[1]);
    (
        errors[2] <= 1e-4 && order >= 1.9 && elapsed < 2.0,
        format!(
            "max error at 400 nodes {:.3e} (limit 1e-4), orders {:.3} {:.3} (min 1.9), {elapsed:.2} s (limit 2 s)",
            errors[2], orders[0], orders[1]
        ),
    )
}

fn c4_variational_consistency() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let eps = 1e-8;
    let grid = build_grid(&DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 13)).unwrap();
    let g = power(1.0, 3.0);
    let sys = SystemSpec::scalar(g.clone());
    let mut worst = 0f64;
    for p in [1.5, 2.0, 3.0] {
        for _ in 0..50 {
            // Gradients stay away from zero, where the p < 2 energy has a kink.
            let sign = |r: &mut StdRng| if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            let a = rng.gen_range(2.0..3.0);
            let b = sign(&mut rng) * rng.gen_range(0.5..1.5);
            let c = sign(&mut rng) * rng.gen_range(0.5..1.5);
            let k = rng.gen_range(1.0..3.0);
            let u = GridFunction::from_fn(&grid, |x| a + b * x[0] + c * x[1] + 0.1 * (k * (x[0] + x[1])).sin()).unwrap();
            let v: Vec<f64> = (0..grid.len())
                .map(|k| if grid.is_boundary(k) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let lap = apply_p_laplacian(&grid, &u, p, eps);
            let analytic: f64 = (0..grid.len())
                .filter(|&k| !grid.is_boundary(k))
                .map(|k| grid.cell_measures()[k] * (-lap[k] + g.h(u[k])) * v[k])
                .sum();
            let energy = |t: f64| {
                let w: Vec<f64> = u.values().iter().zip(&v).map(|(x, d)| x + t * d).collect();
                discrete_energy(&grid, &[GridFunction::new(&grid, w).unwrap()], &sys, p).unwrap()
            };
            // Stay inside the region where every edge energy is smooth.
            let (min_du, max_dv) = grid.edges().iter().fold((f64::INFINITY, 0f64), |(m, x), e| {
                (m.min((u[e.b] - u[e.a]).abs()), x.max((v[e.b] - v[e.a]).abs()))
            });
            let s = 1e-2 * (min_du / max_dv).min(1.0);
            let fd = (8.0 * (energy(s) - energy(-s)) - (energy(2.0 * s) - energy(-2.0 * s))) / (12.0 * s);
            let e = (fd - analytic).abs() / analytic.abs().max(1e-12);
            worst = worst.max(e);
        }
    }
    (
        worst <= 1e-6,
        format!("150 random fields and directions over p in {{1.5, 2, 3}}, eps 1e-8, worst relative mismatch {worst:.2e} (limit 1e-6)"),
    )
}

fn c5_comparison_ordering() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let g = power(1.0, 3.0);
    let interval = build_grid(&DomainSpec::interval(-1.0, 1.0, 201)).unwrap();
    let square = build_grid(&DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 17)).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut unconverged = 0;
    for trial in 0..20 {
        let grid = if trial % 2 == 0 { &interval } else { &square };
        let lo = rng.gen_range(0.1..5.0);
        let hi = lo + rng.gen_range(0.01..5.0);
        let solve = |b: f64| {
            solve_dirichlet_scalar(grid, &g, &GridFunction::constant(grid, b), 2.0, &SolveOptions::default()).unwrap()
        };
        let (u, v) = (solve(lo), solve(hi));
        unconverged += usize::from(!u.converged) + usize::from(!v.converged);
        for k in 0..grid.len() {
            worst = worst.max(u.solution[0][k] - v.solution[0][k]);
        }
    }
    (
        worst <= 1e-8 && unconverged == 0,
        format!("20 ordered pairs, worst u - v = {worst:.3e} (limit 1e-8), {unconverged} unconverged solves"),
    )
}

fn c6_sandwich() -> Outcome {
    let cfg = load("solve_coupled.toml", Command::Solve);
    let Job::Solve { grid, sys, boundary, opts } = &cfg.job else {
        panic!("not a solve config")
    };
    assert_eq!(boundary, &vec![1.0, 1.0]);
    let bc: Vec<GridFunction> = boundary.iter().map(|&b| GridFunction::constant(grid, b)).collect();
    let r = solve_dirichlet_system(grid, sys, &bc, cfg.p, opts).unwrap();
    let psi = solve_dirichlet_scalar(grid, sys.upper_bound(), &GridFunction::constant(grid, 1.0), cfg.p, opts).unwrap();
    let upper = 1.0;
    let mut below = f64::INFINITY;
    let mut above = f64::NEG_INFINITY;
    for u in &r.solution {
        for k in 0..grid.len() {
            below = below.min(u[k] - psi.solution[0][k]);
            above = above.max(u[k] - upper);
        }
    }
    (
        r.converged && psi.converged && below >= -1e-6 && above <= 1e-6,
        format!(
            "coupled (u1 u2)^2/2, boundary (1, 1): min(u - psi) = {below:.3e}, max(u - M) = {above:.3e} (limit 1e-6)"
        ),
    )
}

struct Escalation {
    name: &'static str,
    grid: Grid,
    trace: EscalationTrace,
    p: f64,
    gamma: Option<f64>,
    seconds: f64,
}

fn escalations() -> Vec<Escalation> {
    let mut out = Vec::new();
    for (name, gamma) in [
        ("blowup_p2.toml", Some(3.0)),
        ("blowup_p3.toml", Some(4.0)),
        ("blowup_p1_5.toml", Some(2.0)),
        ("mixed.toml", None),
    ] {
        let command = if gamma.is_some() { Command::Blowup } else { Command::Mixed };
        let cfg = load(name, command);
        let t = Instant::now();
        let (grid, trace) = match cfg.job {
            Job::Blowup { grid, sys, schedule, opts } => {
                let trace = escalate_blowup(&grid, &sys, cfg.p, &schedule, &opts).unwrap();
                (grid, trace)
            }
            Job::Mixed {
                grid,
                sys,
                schedule,
                opts,
                blowup_set,
                fixed,
            } => {
                let trace = escalate_mixed(&grid, &sys, cfg.p, &blowup_set, &fixed, &schedule, &opts).unwrap();
                (grid, trace)
            }
            other => panic!("{other:?}"),
        };
        out.push(Escalation {
            name,
            grid,
            trace,
            p: cfg.p,
            gamma,
            seconds: secs(t),
        });
    }
    out
}

fn c7_monotonicity(runs: &[Escalation]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in runs {
        let escalated = run.trace.escalated();
        let mut worst = f64::NEG_INFINITY;
        let mut held_drop = 0f64;
        for w in run.trace.levels.windows(2) {
            for (i, (lo, hi)) in w[0].report.solution.iter().zip(&w[1].report.solution).enumerate() {
                for k in 0..run.grid.len() {
                    let drop = lo[k] - hi[k];
                    if escalated.contains(&i) {
                        worst = worst.max(drop);
                    } else {
                        held_drop = held_drop.max(drop);
                    }
                }
            }
        }
        ok &= worst <= 1e-8 && run.trace.levels.len() >= 3;
        let held = if escalated.len() < run.trace.limit_fields.len() {
            format!(", held components fall by up to {held_drop:.3e}")
        } else {
            String::new()
        };
        parts.push(format!(
            "{}: {} levels, worst drop {worst:.2e}{held}",
            run.name,
            run.trace.levels.len()
        ));
    }
    (ok, format!("escalated components, limit 1e-8; {}", parts.join("; ")))
}

/// Half-line solution `A d^{-β}` of `(|u'|^{p-2}u')' = u^γ`.
fn rate_oracle(p: f64, gamma: f64) -> (f64, f64) {
    let beta = p / (gamma - p + 1.0);
    let a = (beta.powf(p - 1.0) * (beta + 1.0) * (p - 1.0)).powf(1.0 / (gamma - p + 1.0));
    (a, beta)
}

/// Residual of the oracle in the half-line equation, by central differences.
fn oracle_ode_residual(p: f64, gamma: f64) -> f64 {
    let (a, beta) = rate_oracle(p, gamma);
    let u = |d: f64| a * d.powf(-beta);
    let flux = |d: f64| {
        let h = 1e-5 * d;
        let du = (u(d + h) - u(d - h)) / (2.0 * h);
        du.abs().powf(p - 2.0) * du
    };
    [0.05, 0.2, 1.0]
        .iter()
        .map(|&d| {
            let h = 1e-3 * d;
            let lhs = (flux(d + h) - flux(d - h)) / (2.0 * h);
            (lhs - u(d).powf(gamma)).abs() / u(d).powf(gamma)
        })
        .fold(0.0, f64::max)
}

fn c8_rate_oracle(runs: &[Escalation]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in runs {
        let Some(gamma) = run.gamma else { continue };
        let (a, beta) = rate_oracle(run.p, gamma);
        let ode = oracle_ode_residual(run.p, gamma);
        let fit = run.trace.rate_fits[0].expect("rate fit");
        let tol = if run.p == 2.0 { 0.02 } else { 0.05 };
        let ea = (fit.a - a).abs() / a;
        let eb = (fit.beta - beta).abs() / beta;
        let nodes = run.grid.len();
        let good = ea <= tol
            && eb <= tol
            && ode <= 1e-5
            && run.trace.levels.len() == 8
            && nodes >= 800
            && run.seconds < 60.0;
        ok &= good;
        parts.push(format!(
            "p {} gamma {gamma}: A {:.5} vs {a:.5} ({ea:.1e}), beta {:.5} vs {beta:.5} ({eb:.1e}), tol {tol}, oracle ODE residual {ode:.1e}, {} levels, {:.1} s",
            run.p,
            fit.a,
            fit.beta,
            run.trace.levels.len(),
            run.seconds
        ));
    }
    (ok, parts.join("; "))
}

fn c9_barrier(runs: &[Escalation]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in runs {
        let Some(gamma) = run.gamma else { continue };
        let (a, beta) = rate_oracle(run.p, gamma);
        let (lo, hi) = run.trace.fit_window;
        let mut worst = 0f64;
        for level in &run.trace.levels {
            for k in 0..run.grid.len() {
                let d = run.grid.boundary_distance(k);
                if d >= lo && d <= hi {
                    worst = worst.max(level.report.solution[0][k] / (a * d.powf(-beta)));
                }
            }
        }
        let library = run.trace.barrier.ratios.iter().filter_map(|r| r[0]).fold(0.0, f64::max);
        ok &= worst <= 1.05 && library <= 1.05 && run.trace.barrier.passed;
        parts.push(format!(
            "{}: max u/mu {library:.5} (barrier_mu), {worst:.5} (closed-form half-line barrier)",
            run.name
        ));
    }
    (ok, format!("limit 1.05; {}", parts.join("; ")))
}

fn c10_mixed(runs: &[Escalation]) -> Outcome {
    let run = runs.iter().find(|r| r.gamma.is_none()).unwrap();
    let alpha = 1.0;
    let mut excess = f64::NEG_INFINITY;
    for level in &run.trace.levels {
        for k in 0..run.grid.len() {
            excess = excess.max(level.report.solution[1][k] - alpha);
        }
    }
    let last = &run.trace.levels.last().unwrap().report.solution[1];
    let ring = run.grid.boundary_ring();
    let deviation = ring.iter().map(|&k| (last[k] - alpha).abs()).fold(0.0, f64::max);
    (
        excess <= 1e-8 && deviation <= 1e-3 && run.trace.escalated() == vec![0],
        format!(
            "{} levels, max(u2 - alpha2) = {excess:.3e} (limit 1e-8), final ring deviation {deviation:.3e} over {} nodes (limit 1e-3)",
            run.trace.levels.len(),
            ring.len()
        ),
    )
}

struct EntireRun {
    trace: plap_core::entire::EntireTrace,
    sys: SystemSpec,
    p: f64,
    seconds: f64,
}

fn entire_run() -> EntireRun {
    let cfg = load("entire.toml", Command::Entire);
    let Job::Entire {
        sys,
        dim,
        ball_radii,
        resolution,
        opts,
        ..
    } = cfg.job
    else {
        panic!("not an entire config")
    };
    assert_eq!((dim, ball_radii.as_slice()), (3, &[2.0, 4.0, 8.0][..]));
    let t = Instant::now();
    let trace = ball_exhaustion(&sys, sys.upper_bound(), cfg.p, dim, &ball_radii, resolution, &opts).unwrap();
    EntireRun {
        trace,
        sys,
        p: cfg.p,
        seconds: secs(t),
    }
}

fn c11_entire(run: &EntireRun) -> Outcome {
    let tr = &run.trace;
    let z_err = tr
        .z_profile
        .radii
        .iter()
        .zip(&tr.z_profile.values)
        .filter(|(r, _)| **r <= 8.0)
        .map(|(r, z)| (z - 1.0 / (1.0 + r * r).sqrt()).abs())
        .fold(0.0, f64::max);
    let w_err = tr
        .w_profile
        .radii
        .iter()
        .zip(&tr.w_profile.values)
        .map(|(r, w)| (w - (1.0 + r * r).sqrt()).abs())
        .fold(0.0, f64::max);
    let phi = PhiTransform::new(&power(1.0, 2.0), 2.0).unwrap();
    let round_trip = tr
        .w_profile
        .radii
        .iter()
        .zip(&tr.w_profile.values)
        .map(|(r, &w)| (phi.eval(w).unwrap() - tr.z_profile.at(*r)).abs())
        .fold(0.0, f64::max);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for ball in &tr.per_ball {
        for k in 0..ball.grid.len() {
            let u = ball.report.solution[0][k];
            lower = lower.min(u - ball.w[k]);
            upper = upper.max(u - ball.boundary_value);
        }
    }
    let deltas = &tr.nested_core_deltas[0];
    let decreasing = deltas.windows(2).all(|d| d[1] < d[0]);
    let converged = tr.per_ball.iter().all(|b| b.report.converged);
    let pass = z_err <= 1e-4
        && w_err <= 1e-4
        && round_trip <= 1e-7
        && lower >= -1e-7
        && upper <= 1e-7
        && decreasing
        && converged
        && run.seconds < 30.0;
    (
        pass,
        format!(
            "z error {z_err:.2e}, w error {w_err:.2e} (limit 1e-4), |Phi(w) - z| {round_trip:.2e} (limit 1e-7), min(u - w) {lower:.2e}, max(u - w_n) {upper:.2e} (limit 1e-7), B_2 changes {:?} decreasing = {decreasing}, {:.1} s (limit 30 s)",
            deltas.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            run.seconds
        ),
    )
}

fn c12_subsolutions(run: &EntireRun) -> Outcome {
    let grid = build_grid(&DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 33)).unwrap();
    let sys = coupled();
    let psi = solve_dirichlet_scalar(&grid, sys.upper_bound(), &GridFunction::constant(&grid, 1.0), 2.0, &SolveOptions::default())
        .unwrap()
        .solution
        .remove(0);
    let psi_check = verify_subsolution(&grid, &[psi.clone(), psi], &sys, 2.0, Side::Sub, 1e-6).unwrap();

    let w_tol = 1e-3;
    let mut w_ok = true;
    let mut w_worst = f64::NEG_INFINITY;
    let mut scaled_fail = true;
    let mut scaled_worst = f64::INFINITY;
    for ball in &run.trace.per_ball {
        let w = verify_subsolution(&ball.grid, std::slice::from_ref(&ball.w), &run.sys, run.p, Side::Sub, w_tol).unwrap();
        w_ok &= w.passed();
        w_worst = w_worst.max(w.components[0].worst);
        let ten = GridFunction::new(&ball.grid, ball.w.values().iter().map(|v| 10.0 * v).collect()).unwrap();
        let bad = verify_subsolution(&ball.grid, &[ten], &run.sys, run.p, Side::Sub, w_tol).unwrap();
        scaled_fail &= !bad.passed();
        scaled_worst = scaled_worst.min(bad.components[0].worst);
    }
    (
        psi_check.passed() && w_ok && scaled_fail,
        format!(
            "(psi, psi) worst shortfall {:.2e} (tol 1e-6); w on balls worst shortfall {w_worst:.2e} (tol {w_tol:e}); 10 w rejected on every ball = {scaled_fail} (smallest shortfall {scaled_worst:.3})",
            psi_check.components.iter().map(|c| c.worst).fold(f64::NEG_INFINITY, f64::max)
        ),
    )
}

fn c13_determinism() -> Outcome {
    let mut entries = Vec::new();
    let mut mismatched = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    for path in &paths {
        let text = std::fs::read_to_string(path).unwrap();
        let table: toml::Table = toml::from_str(&text).unwrap();
        let command = match table["command"].as_str().unwrap() {
            "ko-check" => Command::KoCheck,
            "solve" => Command::Solve,
            "blowup" => Command::Blowup,
            "mixed" => Command::Mixed,
            "entire" => Command::Entire,
            "verify" => Command::Verify,
            other => panic!("{other}"),
        };
        let manifests: Vec<String> = (0..2)
            .map(|_| {
                let cfg = load_config(path, command).unwrap();
                let dir = tempfile::tempdir().unwrap();
                run_command(&cfg, dir.path()).unwrap();
                std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap()
            })
            .collect();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if manifests[0] != manifests[1] {
            mismatched.push(name.clone());
        }
        entries.push(name);
    }
    (
        mismatched.is_empty() && !entries.is_empty(),
        format!("{} configs run twice, mismatched manifests: {:?}", entries.len(), mismatched),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        (false, format!("panicked: {msg}"))
    })
}

fn main() {
    let started = Instant::now();
    let runs = catch_unwind(escalations).ok();
    let entire = catch_unwind(entire_run).ok();
    let with_runs = |f: fn(&[Escalation]) -> Outcome| match &runs {
        Some(r) => guarded(|| f(r)),
        None => (false, "escalation benchmarks failed to run".to_string()),
    };
    let with_entire = |f: fn(&EntireRun) -> Outcome| match &entire {
        Some(r) => guarded(|| f(r)),
        None => (false, "entire benchmark failed to run".to_string()),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("Keller-Osserman boundary", guarded(c1_keller_osserman)),
        ("closed-form integral", guarded(c2_closed_form_integral)),
        ("linear benchmark", guarded(c3_linear_benchmark)),
        ("variational consistency", guarded(c4_variational_consistency)),
        ("comparison ordering", guarded(c5_comparison_ordering)),
        ("sandwich", guarded(c6_sandwich)),
        ("escalation monotonicity", with_runs(c7_monotonicity)),
        ("blow-up rate oracle", with_runs(c8_rate_oracle)),
        ("barrier domination", with_runs(c9_barrier)),
        ("mixed regime", with_runs(c10_mixed)),
        ("entire closed-form benchmark", with_entire(c11_entire)),
        ("sub-solution verification", with_entire(c12_subsolutions)),
        ("determinism", guarded(c13_determinism)),
    ];

    let mut failed = 0;
    for (i, (name, (pass, detail))) in results.iter().enumerate() {
        println!("criterion {:2} {} {name}: {detail}", i + 1, if *pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.1} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
