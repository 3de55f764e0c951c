//! Command dispatch and report assembly.

use std::fmt::Write as _;
use std::path::Path;

use plap_core::construct::{escalate_blowup, escalate_mixed, fit_boundary_rate, EscalationTrace};
use plap_core::entire::{ball_exhaustion, verify_large_at_infinity, EntireTrace};
use plap_core::grid::{Grid, GridFunction};
use plap_core::nonlinearity::{class_f_validate, keller_osserman_check_with};
use plap_core::plap::{
    solve_dirichlet_system, verify_comparison_with, verify_subsolution, Side, SolveOptions, SolveReport, SystemSpec,
};

use crate::config::{Job, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{cell, field_csv, join, num, Manifest, OutputSet, Summary};

/// Largest accepted outermost-ring deviation of a held component.
pub const RING_TOL: f64 = 1e-3;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Error = 1,
    /// Well-formed run whose outcome is not a full success.
    Incomplete = 2,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Success
        } else {
            Status::Incomplete
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    /// One-line verdict for the terminal.
    pub headline: String,
    pub outputs: OutputSet,
}

/// Runs the pipeline and writes its outputs to `dir`.
pub fn run_command(cfg: &RunConfig, dir: &Path) -> CliResult<(Outcome, Manifest)> {
    let outcome = execute(cfg)?;
    let manifest = outcome.outputs.write(dir)?;
    Ok((outcome, manifest))
}

/// Runs the pipeline without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    let mut out = OutputSet::new();
    out.add("config.toml", cfg.source.clone());
    let p = cfg.p;
    let (status, headline, summary) = match &cfg.job {
        Job::KoCheck { f, opts, samples } => {
            let verdict = keller_osserman_check_with(f, p, *opts).map_err(CliError::core("nonlinearity", "keller_osserman_check"))?;
            let diag = class_f_validate(f, p, *samples);
            let mut s = Summary::new("ko-check");
            s.kv("nonlinearity", f.label()).kv("p", p);
            s.section("keller_osserman");
            s.kv("converges", verdict.converges)
                .kv("tail_exponent", verdict.tail_exponent)
                .kv("integral_estimate", verdict.integral_estimate)
                .kv("tail_bound", verdict.tail_bound)
                .kv("total", verdict.total())
                .kv("t_max", verdict.t_max)
                .kv("boundary_case", verdict.boundary_case);
            s.section("class_f");
            for (name, c) in [
                ("zero_at_origin", diag.zero_at_origin),
                ("positivity", diag.positivity),
                ("monotonicity", diag.monotonicity),
                ("derivative_consistency", diag.derivative_consistency),
            ] {
                s.kv(name, c.passed);
                if let Some(w) = c.witness {
                    s.kv(&format!("{name}_witness"), w);
                }
            }
            let ok = verdict.converges && diag.structural_passed();
            let headline = if verdict.converges {
                format!("{}: Keller-Osserman converges, integral ~ {}", f.label(), num(verdict.total()))
            } else {
                format!(
                    "{}: Keller-Osserman diverges (tail exponent {})",
                    f.label(),
                    num(verdict.tail_exponent)
                )
            };
            (Status::from_ok(ok), headline, s)
        }
        Job::Solve {
            grid,
            sys,
            boundary,
            opts,
        } => {
            let report = solve(grid, sys, boundary, p, opts)?;
            let mut s = Summary::new("solve");
            s.kv("p", p).kv("components", sys.dim()).kv("nodes", grid.len());
            solve_summary(&mut s, &report);
            add_solution(&mut out, grid, &report.solution, "solution");
            out.add("energy_trace.csv", energy_csv(&report));
            let sandwich_ok = report.sandwich.as_ref().is_none_or(|w| !w.violated);
            let ok = report.converged && sandwich_ok;
            let headline = format!(
                "solve: converged = {}, residual = {}, sandwich = {}",
                report.converged,
                num(report.residual_sup),
                if sandwich_ok { "ok" } else { "violated" }
            );
            (Status::from_ok(ok), headline, s)
        }
        Job::Blowup {
            grid,
            sys,
            schedule,
            opts,
        } => {
            let trace = escalate_blowup(grid, sys, p, schedule, opts).map_err(CliError::core("construct", "escalate_blowup"))?;
            escalation_outputs(&mut out, grid, &trace, "blowup", p)
        }
        Job::Mixed {
            grid,
            sys,
            schedule,
            opts,
            blowup_set,
            fixed,
        } => {
            let trace = escalate_mixed(grid, sys, p, blowup_set, fixed, schedule, opts)
                .map_err(CliError::core("construct", "escalate_mixed"))?;
            escalation_outputs(&mut out, grid, &trace, "mixed", p)
        }
        Job::Entire {
            sys,
            dim,
            ball_radii,
            resolution,
            threshold,
            opts,
        } => {
            let g = sys.upper_bound();
            let trace = ball_exhaustion(sys, g, p, *dim, ball_radii, *resolution, opts)
                .map_err(CliError::core("entire", "ball_exhaustion"))?;
            let large = verify_large_at_infinity(&trace, g, p, *threshold);
            entire_outputs(&mut out, sys, &trace, p, *dim, &large)
        }
        Job::Verify {
            grid,
            sys,
            boundary,
            comparison,
            tol,
            opts,
        } => verify_outputs(&mut out, grid, sys, boundary, comparison.as_deref(), *tol, p, opts)?,
    };
    let mut summary = summary;
    summary.section("outcome");
    summary.kv("exit_status", status.code()).kv("verdict", &headline);
    out.add("summary.txt", summary.finish());
    Ok(Outcome {
        status,
        headline,
        outputs: out,
    })
}

fn solve(grid: &Grid, sys: &SystemSpec, boundary: &[f64], p: f64, opts: &SolveOptions) -> CliResult<SolveReport> {
    let bc: Vec<GridFunction> = boundary.iter().map(|&b| GridFunction::constant(grid, b)).collect();
    solve_dirichlet_system(grid, sys, &bc, p, opts).map_err(CliError::core("plap", "solve_dirichlet_system"))
}

fn solve_summary(s: &mut Summary, r: &SolveReport) {
    s.section("solver");
    s.kv("converged", r.converged)
        .kv("iterations", r.iterations)
        .kv("gradient_steps", r.gradient_steps)
        .kv("merit", format!("{:?}", r.merit))
        .kv("residual_sup", r.residual_sup)
        .kv("residual_abs_sup", r.residual_abs_sup)
        .kv("tol", r.tol)
        .kv("regularization_eps", r.regularization_eps)
        .kv("eps_sensitivity", cell(r.eps_sensitivity))
        .kv("merit_nonincreasing", r.energy_nonincreasing());
    if let Some(reason) = &r.stop_reason {
        s.kv("stop_reason", reason);
    }
    if let Some(w) = &r.sandwich {
        s.section("sandwich");
        s.kv("lower_boundary", w.lower_boundary)
            .kv("upper", w.upper)
            .kv("min_above_lower", w.min_above_lower)
            .kv("max_above_upper", w.max_above_upper)
            .kv("violated", w.violated);
        if let Some((c, n)) = w.witness {
            s.kv("witness", format!("component {} node {n}", c + 1));
        }
    }
}

fn add_solution(out: &mut OutputSet, grid: &Grid, u: &[GridFunction], prefix: &str) {
    for (i, f) in u.iter().enumerate() {
        out.add(format!("{prefix}_{}.csv", i + 1), field_csv(grid, f));
    }
}

fn energy_csv(r: &SolveReport) -> String {
    let mut s = String::from("iteration,merit\n");
    for (k, e) in r.energy_trace.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", num(*e));
    }
    s
}

fn escalation_outputs(
    out: &mut OutputSet,
    grid: &Grid,
    trace: &EscalationTrace,
    name: &str,
    p: f64,
) -> (Status, String, Summary) {
    let d = trace.limit_fields.len();
    let escalated = trace.escalated();
    let mut csv = String::from("level,boundary_value,core_delta,residual_sup,converged");
    for i in 1..=d {
        let _ = write!(csv, ",A_{i},beta_{i}");
    }
    for i in 1..=d {
        let _ = write!(csv, ",ring_min_{i}");
    }
    csv.push('\n');
    for (k, level) in trace.levels.iter().enumerate() {
        let _ = write!(
            csv,
            "{},{},{},{},{}",
            k + 1,
            num(level.boundary_value),
            cell(trace.core_deltas[k]),
            num(level.report.residual_sup),
            level.report.converged
        );
        for (i, u) in level.report.solution.iter().enumerate() {
            let fit = escalated
                .contains(&i)
                .then(|| fit_boundary_rate(grid, u, trace.fit_window).ok())
                .flatten();
            let _ = write!(csv, ",{},{}", cell(fit.map(|f| f.a)), cell(fit.map(|f| f.beta)));
        }
        for m in &trace.ring_minima[k] {
            let _ = write!(csv, ",{}", num(*m));
        }
        csv.push('\n');
        add_solution(out, grid, &level.report.solution, &format!("level_{}_u", k + 1));
    }
    out.add("escalation_summary.csv", csv);

    let mut barrier = String::from("level,component,worst_ratio\n");
    for (k, per) in trace.barrier.ratios.iter().enumerate() {
        for (i, r) in per.iter().enumerate() {
            let _ = writeln!(barrier, "{},{},{}", k + 1, i + 1, cell(*r));
        }
    }
    out.add("barrier_ratios.csv", barrier);

    let mut s = Summary::new(name);
    s.kv("p", p)
        .kv("components", d)
        .kv("nodes", grid.len())
        .kv("levels", trace.levels.len())
        .kv("escalated", join(escalated.iter().map(|i| i + 1)))
        .kv("fit_window", format!("[{}, {}]", num(trace.fit_window.0), num(trace.fit_window.1)))
        .kv("core_nodes", trace.core_nodes.len());
    s.section("trace");
    s.kv("stabilized", trace.stabilized)
        .kv("monotone", trace.monotone())
        .kv("worst_decrease", trace.worst_decrease)
        .kv("barrier_passed", trace.barrier.passed)
        .kv("truncated", trace.truncated.as_deref().unwrap_or("no"));
    s.section("rates");
    for (i, fit) in trace.rate_fits.iter().enumerate() {
        if let Some(f) = fit {
            s.kv(&format!("A_{}", i + 1), f.a)
                .kv(&format!("beta_{}", i + 1), f.beta)
                .kv(&format!("fit_residual_{}", i + 1), f.residual)
                .kv(&format!("fit_nodes_{}", i + 1), f.nodes);
        }
        if let Some((a, b)) = trace.rate_oracle.get(i).copied().flatten() {
            s.kv(&format!("oracle_A_{}", i + 1), a)
                .kv(&format!("oracle_beta_{}", i + 1), b);
        }
    }
    if let Some(m) = &trace.mixed {
        s.section("mixed");
        s.kv("blowup_set", join(m.blowup_set.iter().map(|i| i + 1)));
        for (i, alpha) in &m.held {
            s.kv(&format!("alpha_{}", i + 1), alpha);
        }
        s.kv("max_excess", join(m.max_excess.iter()))
            .kv("excess_ok", m.excess_ok)
            .kv("ring_deviation", m.ring_deviation);
    }
    s.section("verdict");
    s.kv("core_stabilized", trace.verdict.core_stabilized)
        .kv("ring_growth", trace.verdict.ring_growth)
        .kv(
            "rate_agreement",
            trace.verdict.rate_agreement.map_or("n/a".to_string(), |b| b.to_string()),
        );

    let mixed_ok = trace
        .mixed
        .as_ref()
        .is_none_or(|m| m.excess_ok && m.ring_deviation <= RING_TOL);
    let ok = trace.truncated.is_none() && trace.stabilized && trace.monotone() && trace.barrier.passed && mixed_ok;
    let headline = format!(
        "{name}: {} levels, stabilized = {}, monotone = {}, barrier = {}{}",
        trace.levels.len(),
        trace.stabilized,
        trace.monotone(),
        trace.barrier.passed,
        trace.truncated.as_ref().map_or(String::new(), |t| format!(", truncated: {t}"))
    );
    (Status::from_ok(ok), headline, s)
}

fn entire_outputs(
    out: &mut OutputSet,
    sys: &SystemSpec,
    trace: &EntireTrace,
    p: f64,
    dim: u32,
    large: &plap_core::entire::LargeAtInfinityReport,
) -> (Status, String, Summary) {
    let d = sys.dim();
    let mut profile = String::from("r,z,w\n");
    for (k, r) in trace.z_profile.radii.iter().enumerate() {
        let _ = writeln!(
            profile,
            "{},{},{}",
            num(*r),
            num(trace.z_profile.values[k]),
            num(trace.w_profile.at(*r))
        );
    }
    out.add("profiles.csv", profile);

    let mut summary_csv = String::from("ball_radius,w_n,lower_margin,upper_excess,core_delta,converged,residual_sup\n");
    for (n, ball) in trace.per_ball.iter().enumerate() {
        let mut csv = String::from("r,z,w");
        for i in 1..=d {
            let _ = write!(csv, ",u_{i}");
        }
        csv.push('\n');
        for k in 0..ball.grid.len() {
            let r = ball.grid.point(k).r;
            let _ = write!(csv, "{},{},{}", num(r), num(trace.z_profile.at(r)), num(ball.w[k]));
            for u in &ball.report.solution {
                let _ = write!(csv, ",{}", num(u[k]));
            }
            csv.push('\n');
        }
        out.add(format!("ball_{}.csv", n + 1), csv);
        let delta = (n > 0).then(|| trace.nested_core_deltas[0].get(n - 1).copied()).flatten();
        let _ = writeln!(
            summary_csv,
            "{},{},{},{},{},{},{}",
            num(ball.radius),
            num(ball.boundary_value),
            num(ball.lower_margin),
            num(ball.upper_excess),
            cell(delta),
            ball.report.converged,
            num(ball.report.residual_sup)
        );
    }
    out.add("exhaustion_summary.csv", summary_csv);

    let mut s = Summary::new("entire");
    s.kv("p", p)
        .kv("ambient_dim", dim)
        .kv("components", d)
        .kv("ball_radii", join(trace.ball_radii.iter()));
    s.section("profiles");
    s.kv("z_decay_verified", trace.z_profile.decay_verified)
        .kv("z_at_0", trace.z_profile.at(0.0))
        .kv("w_at_0", trace.w_profile.at(0.0));
    s.section("sandwich");
    s.kv("lower_bound_ok", trace.lower_bound_ok)
        .kv("upper_bound_ok", trace.upper_bound_ok)
        .kv("accepted", trace.accepted())
        .kv("truncated", trace.truncated.as_deref().unwrap_or("no"));
    s.section("nested_core_deltas");
    for (j, row) in trace.nested_core_deltas.iter().enumerate() {
        s.kv(&format!("B_{}", num(trace.ball_radii[j])), join(row.iter()));
    }
    s.section("large_at_infinity");
    s.kv("radius", large.radius)
        .kv("u_min", large.u_min)
        .kv("w", large.w)
        .kv("threshold", large.threshold)
        .kv("w_unbounded", large.w_unbounded)
        .kv("evidence", large.evidence.map_or("n/a".to_string(), |b| b.to_string()));

    let ok = trace.accepted() && trace.upper_bound_ok && large.evidence == Some(true);
    let headline = format!(
        "entire: {} balls, sandwich lower = {}, upper = {}, large at infinity = {}",
        trace.per_ball.len(),
        trace.lower_bound_ok,
        trace.upper_bound_ok,
        large.evidence.map_or("n/a".to_string(), |b| b.to_string())
    );
    (Status::from_ok(ok), headline, s)
}

#[allow(clippy::too_many_arguments)]
fn verify_outputs(
    out: &mut OutputSet,
    grid: &Grid,
    sys: &SystemSpec,
    boundary: &[f64],
    comparison: Option<&[f64]>,
    tol: f64,
    p: f64,
    opts: &SolveOptions,
) -> CliResult<(Status, String, Summary)> {
    let d = sys.dim();
    let u = solve(grid, sys, boundary, p, opts)?;
    add_solution(out, grid, &u.solution, "solution");
    let mut s = Summary::new("verify");
    s.kv("p", p).kv("components", d).kv("nodes", grid.len()).kv("tol", tol);
    solve_summary(&mut s, &u);
    let mut ok = u.converged;

    if let Some(w) = &u.sandwich {
        let psi = vec![w.subsolution.clone(); d];
        out.add("psi.csv", field_csv(grid, &w.subsolution));
        let sub = verify_subsolution(grid, &psi, sys, p, Side::Sub, tol)
            .map_err(CliError::core("plap", "verify_subsolution"))?;
        s.section("psi_subsolution");
        s.kv("passed", sub.passed());
        for (i, c) in sub.components.iter().enumerate() {
            s.kv(&format!("worst_{}", i + 1), c.worst)
                .kv(&format!("node_{}", i + 1), c.node.map_or("-".into(), |n| n.to_string()));
        }
        ok &= sub.passed();
    }

    if let Some(upper) = comparison {
        let v = solve(grid, sys, upper, p, opts)?;
        add_solution(out, grid, &v.solution, "comparison");
        s.section("comparison");
        s.kv("boundary", join(upper.iter())).kv("converged", v.converged);
        ok &= v.converged;
        let g = (d == 1 && sys.weights().is_none()).then(|| sys.upper_bound());
        for i in 0..d {
            let r = verify_comparison_with(grid, &u.solution[i], &v.solution[i], p, g, tol)
                .map_err(CliError::core("plap", "verify_comparison"))?;
            s.kv(&format!("hypothesis_{}", i + 1), r.hypothesis_met())
                .kv(&format!("ordered_{}", i + 1), r.conclusion_holds())
                .kv(&format!("worst_excess_{}", i + 1), r.conclusion.worst);
            ok &= r.conclusion_holds();
        }
    }
    let headline = format!("verify: {}", if ok { "all checks passed" } else { "a check failed" });
    Ok((Status::from_ok(ok), headline, s))
}

