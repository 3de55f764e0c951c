//! Run configuration: a strict TOML schema resolved into core types.
//!
//! ```toml
//! p = 2.0
//! output_dir = "out/blowup"        # optional, `--out` overrides
//!
//! [nonlinearity]                   # ko-check
//! spec = "power(1, 2)"
//! t_max = 1e8                      # optional
//! samples = 64                     # optional, class validation sample count
//!
//! [system]                         # solve, blowup, mixed, entire, verify
//! d = 2
//! g = "power(1, 3)"
//! f = ["power(1, 3)", "power(1, 3)"]   # optional, defaults to g
//! grad_f = ["u1*u2^2", "u1^2*u2"]      # optional, defaults to g(u_i)
//! potential = "(u1*u2)^2/2"            # optional
//! weights = ["3*(1+r^2)^(-5/2)"]       # optional, expressions in x, y, r
//!
//! [domain]                         # kind = "interval" | "rectangle" | "ball"
//! kind = "interval"
//! a = -1.0
//! b = 1.0
//! resolution = 801
//! refine_ratio = 0.85              # optional
//!
//! [solver]                         # all optional
//! tol = 1e-9
//! max_iters = 10000
//! eps = 1e-8
//! line_search_beta = 0.5
//! newton_fallback = true
//! eps_recheck = true
//!
//! [boundary]                       # solve, verify
//! values = [1.0, 1.0]
//!
//! [schedule]                       # blowup, mixed
//! base = 10.0
//! growth = "geometric"             # or "arithmetic" with `step`
//! ratio = 10.0
//! max_levels = 8
//! core_margin = 0.5
//! stall_tol = 1e-12
//! fit_window = [0.01, 0.1]         # optional
//!
//! [mixed]
//! blowup_set = [1]                 # 1-based component indices
//! fixed = [1.0]                    # boundary values of the other components
//!
//! [entire]
//! dim = 3
//! ball_radii = [2.0, 4.0, 8.0]
//! resolution = 801
//! growth_threshold = 5.0           # optional
//!
//! [verify]
//! tol = 1e-6                       # optional
//! comparison = [2.0, 2.0]          # optional second boundary, componentwise above the first
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use plap_core::expr::Expr;
use plap_core::construct::{EscalationSchedule, Growth};
use plap_core::grid::{build_grid, DomainSpec, Grid};
use plap_core::nonlinearity::{keller_osserman_check, ClassFFunction, KoOptions, PhiTransform};
use plap_core::plap::{Coupling, ExprCoupling, SeparableCoupling, SolveOptions, SystemSpec, Weight};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    KoCheck,
    Solve,
    Blowup,
    Mixed,
    Entire,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KoCheck => "ko-check",
            Command::Solve => "solve",
            Command::Blowup => "blowup",
            Command::Mixed => "mixed",
            Command::Entire => "entire",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<String>,
    p: Option<f64>,
    output_dir: Option<PathBuf>,
    nonlinearity: Option<RawNonlinearity>,
    system: Option<RawSystem>,
    domain: Option<RawDomain>,
    solver: Option<RawSolver>,
    boundary: Option<RawBoundary>,
    schedule: Option<RawSchedule>,
    mixed: Option<RawMixed>,
    entire: Option<RawEntire>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinearity {
    spec: String,
    t_max: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    d: usize,
    g: String,
    f: Option<Vec<String>>,
    grad_f: Option<Vec<String>>,
    potential: Option<String>,
    weights: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: String,
    a: Option<f64>,
    b: Option<f64>,
    x: Option<[f64; 2]>,
    y: Option<[f64; 2]>,
    radius: Option<f64>,
    dim: Option<u32>,
    resolution: usize,
    refine_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iters: Option<usize>,
    eps: Option<f64>,
    line_search_beta: Option<f64>,
    newton_fallback: Option<bool>,
    eps_recheck: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    base: f64,
    growth: String,
    ratio: Option<f64>,
    step: Option<f64>,
    max_levels: usize,
    core_margin: f64,
    stall_tol: f64,
    fit_window: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixed {
    blowup_set: Vec<usize>,
    fixed: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntire {
    dim: u32,
    ball_radii: Vec<f64>,
    resolution: usize,
    growth_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    tol: Option<f64>,
    comparison: Option<Vec<f64>>,
}

/// A validated, fully resolved run.
#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
    pub path: PathBuf,
    /// Raw configuration text, copied verbatim into the outputs.
    pub source: String,
    pub output_dir: Option<PathBuf>,
    pub p: f64,
    pub job: Job,
}

#[derive(Debug)]
pub enum Job {
    KoCheck {
        f: ClassFFunction,
        opts: KoOptions,
        samples: usize,
    },
    Solve {
        grid: Grid,
        sys: SystemSpec,
        boundary: Vec<f64>,
        opts: SolveOptions,
    },
    Blowup {
        grid: Grid,
        sys: SystemSpec,
        schedule: EscalationSchedule,
        opts: SolveOptions,
    },
    Mixed {
        grid: Grid,
        sys: SystemSpec,
        schedule: EscalationSchedule,
        opts: SolveOptions,
        /// 0-based.
        blowup_set: Vec<usize>,
        fixed: Vec<f64>,
    },
    Entire {
        sys: SystemSpec,
        dim: u32,
        ball_radii: Vec<f64>,
        resolution: usize,
        threshold: f64,
        opts: SolveOptions,
    },
    Verify {
        grid: Grid,
        sys: SystemSpec,
        boundary: Vec<f64>,
        comparison: Option<Vec<f64>>,
        tol: f64,
        opts: SolveOptions,
    },
}

/// Source text with a locator for `section.key` lines.
struct Located<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Located<'_> {
    fn line_of(&self, field: &str) -> Option<usize> {
        let (section, key) = match field.split_once('.') {
            Some((s, k)) => (Some(s), k),
            None => (None, field),
        };
        let key = key.split('[').next().unwrap_or(key);
        let mut current: Option<&str> = None;
        let mut section_line = None;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim();
            if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                current = Some(name.trim());
                if current == section {
                    section_line = Some(i + 1);
                }
                continue;
            }
            let k = t.split('=').next().unwrap_or("").trim();
            if current == section && k == key && t.contains('=') {
                return Some(i + 1);
            }
        }
        section_line
    }

    fn invalid(&self, field: &str, message: impl Into<String>) -> CliError {
        CliError::Invalid {
            path: self.path.to_path_buf(),
            field: field.into(),
            line: self.line_of(field),
            message: message.into(),
        }
    }

    fn core(&self, field: &str, e: plap_core::Error) -> CliError {
        self.invalid(field, e.to_string())
    }

    fn missing(&self, field: &str, command: Command) -> CliError {
        CliError::Invalid {
            path: self.path.to_path_buf(),
            field: field.into(),
            line: None,
            message: format!("required by `{}`", command.name()),
        }
    }
}

pub fn load_config(path: &Path, command: Command) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path, command)
}

pub fn parse_config(text: &str, path: &Path, command: Command) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Syntax {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let loc = Located { path, text };
    if let Some(declared) = &raw.command {
        if declared != command.name() {
            return Err(loc.invalid(
                "command",
                format!("config declares `{declared}` but `{}` was invoked", command.name()),
            ));
        }
    }
    let p = raw.p.ok_or_else(|| loc.missing("p", command))?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(loc.invalid("p", format!("must be a finite number above 1, got {p}")));
    }
    let unused = |present: bool, field: &str| -> CliResult<()> {
        if present {
            Err(loc.invalid(field, format!("section not used by `{}`", command.name())))
        } else {
            Ok(())
        }
    };
    unused(raw.nonlinearity.is_some() && command != Command::KoCheck, "nonlinearity")?;
    unused(
        raw.boundary.is_some() && !matches!(command, Command::Solve | Command::Verify),
        "boundary",
    )?;
    unused(
        raw.schedule.is_some() && !matches!(command, Command::Blowup | Command::Mixed),
        "schedule",
    )?;
    unused(raw.mixed.is_some() && command != Command::Mixed, "mixed")?;
    unused(raw.entire.is_some() && command != Command::Entire, "entire")?;
    unused(raw.verify.is_some() && command != Command::Verify, "verify")?;
    unused(
        raw.domain.is_some() && matches!(command, Command::KoCheck | Command::Entire),
        "domain",
    )?;
    unused(raw.system.is_some() && command == Command::KoCheck, "system")?;
    unused(raw.solver.is_some() && command == Command::KoCheck, "solver")?;

    let job = match command {
        Command::KoCheck => {
            let n = raw.nonlinearity.ok_or_else(|| loc.missing("nonlinearity", command))?;
            let f = ClassFFunction::parse(&n.spec).map_err(|e| loc.core("nonlinearity.spec", e))?;
            let mut opts = KoOptions::default();
            if let Some(t) = n.t_max {
                if !(t > 10.0) || !t.is_finite() {
                    return Err(loc.invalid("nonlinearity.t_max", format!("must exceed 10, got {t}")));
                }
                opts.t_max = t;
            }
            let samples = n.samples.unwrap_or(64);
            if samples < 2 {
                return Err(loc.invalid("nonlinearity.samples", "need at least 2 samples"));
            }
            Job::KoCheck { f, opts, samples }
        }
        Command::Solve | Command::Verify => {
            let sys = system(&loc, raw.system, command)?;
            let grid = domain(&loc, raw.domain, command)?;
            let opts = solver(&loc, raw.solver.unwrap_or_default())?;
            let b = raw.boundary.ok_or_else(|| loc.missing("boundary", command))?;
            let boundary = positive_values(&loc, "boundary.values", &b.values, sys.dim())?;
            hypotheses(&loc, &sys, &grid)?;
            if command == Command::Solve {
                Job::Solve {
                    grid,
                    sys,
                    boundary,
                    opts,
                }
            } else {
                let v = raw.verify.unwrap_or(RawVerify {
                    tol: None,
                    comparison: None,
                });
                let tol = v.tol.unwrap_or(1e-6);
                if !(tol > 0.0) {
                    return Err(loc.invalid("verify.tol", format!("must be positive, got {tol}")));
                }
                let comparison = match v.comparison {
                    None => None,
                    Some(c) => {
                        let c = positive_values(&loc, "verify.comparison", &c, sys.dim())?;
                        if c.iter().zip(&boundary).any(|(hi, lo)| hi < lo) {
                            return Err(loc.invalid(
                                "verify.comparison",
                                "must be componentwise at least boundary.values",
                            ));
                        }
                        Some(c)
                    }
                };
                Job::Verify {
                    grid,
                    sys,
                    boundary,
                    comparison,
                    tol,
                    opts,
                }
            }
        }
        Command::Blowup | Command::Mixed => {
            let sys = system(&loc, raw.system, command)?;
            let grid = domain(&loc, raw.domain, command)?;
            let opts = solver(&loc, raw.solver.unwrap_or_default())?;
            let s = raw.schedule.ok_or_else(|| loc.missing("schedule", command))?;
            let schedule = schedule(&loc, s, &grid)?;
            hypotheses(&loc, &sys, &grid)?;
            let (blowup_set, fixed) = if command == Command::Mixed {
                let m = raw.mixed.ok_or_else(|| loc.missing("mixed", command))?;
                let d = sys.dim();
                let mut set = Vec::new();
                for &i in &m.blowup_set {
                    if i == 0 || i > d {
                        return Err(loc.invalid("mixed.blowup_set", format!("component {i} outside 1..={d}")));
                    }
                    if set.contains(&(i - 1)) {
                        return Err(loc.invalid("mixed.blowup_set", format!("component {i} listed twice")));
                    }
                    set.push(i - 1);
                }
                set.sort_unstable();
                if set.is_empty() || set.len() == d {
                    return Err(loc.invalid(
                        "mixed.blowup_set",
                        "must be a nonempty proper subset of the components (use `blowup` for all)",
                    ));
                }
                let fixed = positive_values(&loc, "mixed.fixed", &m.fixed, d - set.len())?;
                (set, fixed)
            } else {
                ((0..sys.dim()).collect(), Vec::new())
            };
            for &c in &blowup_set {
                let f = &sys.lower_bounds()[c];
                let field = if command == Command::Mixed || sys.dim() > 1 { "system.f" } else { "system.g" };
                match keller_osserman_check(f, p) {
                    Ok(v) if v.converges => {}
                    Ok(v) => {
                        return Err(loc.invalid(
                            field,
                            format!(
                                "Keller-Osserman condition fails for {} at p = {p} (tail exponent {:.4}); no blow-up solution exists",
                                f.label(),
                                v.tail_exponent
                            ),
                        ))
                    }
                    Err(e) => return Err(loc.core(field, e)),
                }
            }
            if command == Command::Mixed {
                Job::Mixed {
                    grid,
                    sys,
                    schedule,
                    opts,
                    blowup_set,
                    fixed,
                }
            } else {
                Job::Blowup {
                    grid,
                    sys,
                    schedule,
                    opts,
                }
            }
        }
        Command::Entire => {
            let sys = system(&loc, raw.system, command)?;
            let opts = solver(&loc, raw.solver.unwrap_or_default())?;
            let e = raw.entire.ok_or_else(|| loc.missing("entire", command))?;
            if e.dim < 2 {
                return Err(loc.invalid("entire.dim", format!("must be at least 2, got {}", e.dim)));
            }
            if e.ball_radii.is_empty()
                || e.ball_radii.iter().any(|&r| !(r > 0.0) || !r.is_finite())
                || e.ball_radii.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(loc.invalid("entire.ball_radii", "must be positive and strictly increasing"));
            }
            if e.resolution < 3 {
                return Err(loc.invalid("entire.resolution", "must be at least 3"));
            }
            let threshold = e.growth_threshold.unwrap_or(1.0);
            if !threshold.is_finite() {
                return Err(loc.invalid("entire.growth_threshold", "must be finite"));
            }
            if sys.weights().is_none() {
                return Err(loc.invalid(
                    "system.weights",
                    "the entire-solution pipeline needs decaying radial weights",
                ));
            }
            PhiTransform::new(sys.upper_bound(), p).map_err(|e| loc.core("system.g", e))?;
            let radial: Vec<_> = (0..=64)
                .map(|i| {
                    let r = e.ball_radii.last().unwrap() * i as f64 / 64.0;
                    plap_core::grid::Point { x: r, y: 0.0, r }
                })
                .collect();
            check_hypotheses(&loc, &sys, &radial)?;
            Job::Entire {
                sys,
                dim: e.dim,
                ball_radii: e.ball_radii,
                resolution: e.resolution,
                threshold,
                opts,
            }
        }
    };
    Ok(RunConfig {
        command,
        path: path.to_path_buf(),
        source: text.to_string(),
        output_dir: raw.output_dir,
        p,
        job,
    })
}

fn positive_values(loc: &Located, field: &str, values: &[f64], expected: usize) -> CliResult<Vec<f64>> {
    if values.len() != expected {
        return Err(loc.invalid(field, format!("expected {expected} values, got {}", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(loc.invalid(field, format!("values must be positive and finite, got {v}")));
    }
    Ok(values.to_vec())
}

fn system(loc: &Located, raw: Option<RawSystem>, command: Command) -> CliResult<SystemSpec> {
    let raw = raw.ok_or_else(|| loc.missing("system", command))?;
    let d = raw.d;
    if d == 0 {
        return Err(loc.invalid("system.d", "must be at least 1"));
    }
    let g = ClassFFunction::parse(&raw.g).map_err(|e| loc.core("system.g", e))?;
    let lower = match raw.f {
        None => vec![g.clone(); d],
        Some(specs) => {
            if specs.len() != d {
                return Err(loc.invalid("system.f", format!("expected {d} entries, got {}", specs.len())));
            }
            specs
                .iter()
                .map(|s| ClassFFunction::parse(s).map_err(|e| loc.core("system.f", e)))
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let coupling: Arc<dyn Coupling> = match raw.grad_f {
        None => {
            if raw.potential.is_some() {
                return Err(loc.invalid("system.potential", "given without system.grad_f"));
            }
            Arc::new(SeparableCoupling(vec![g.clone(); d]))
        }
        Some(exprs) => {
            if exprs.len() != d {
                return Err(loc.invalid("system.grad_f", format!("expected {d} entries, got {}", exprs.len())));
            }
            let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
            let names = variables(d);
            let vars: Vec<&str> = names.iter().map(String::as_str).collect();
            for (i, src) in refs.iter().enumerate() {
                Expr::parse(src, &vars).map_err(|e| loc.core(&format!("system.grad_f[{i}]"), e))?;
            }
            if let Some(src) = &raw.potential {
                Expr::parse(src, &vars).map_err(|e| loc.core("system.potential", e))?;
            }
            let c = ExprCoupling::new(&refs, raw.potential.as_deref()).map_err(|e| loc.core("system.grad_f", e))?;
            Arc::new(c)
        }
    };
    let mut sys = SystemSpec::new(coupling, lower, g).map_err(|e| loc.core("system", e))?;
    if let Some(ws) = raw.weights {
        if ws.len() != d {
            return Err(loc.invalid("system.weights", format!("expected {d} entries, got {}", ws.len())));
        }
        let ws = ws
            .iter()
            .map(|s| Weight::parse(s).map_err(|e| loc.core("system.weights", e)))
            .collect::<CliResult<Vec<_>>>()?;
        sys = sys.with_weights(ws).map_err(|e| loc.core("system.weights", e))?;
    }
    Ok(sys)
}

fn variables(d: usize) -> Vec<String> {
    let mut v: Vec<String> = ["x", "y", "r"].iter().map(|s| s.to_string()).collect();
    v.extend((1..=d).map(|i| format!("u{i}")));
    if d == 1 {
        v.push("u".into());
    }
    v
}

fn domain(loc: &Located, raw: Option<RawDomain>, command: Command) -> CliResult<Grid> {
    let raw = raw.ok_or_else(|| loc.missing("domain", command))?;
    let extra = |present: bool, key: &str| -> CliResult<()> {
        if present {
            Err(loc.invalid(&format!("domain.{key}"), format!("not used by kind `{}`", raw.kind)))
        } else {
            Ok(())
        }
    };
    let need = |v: Option<f64>, key: &str| -> CliResult<f64> {
        v.ok_or_else(|| loc.invalid(&format!("domain.{key}"), format!("required by kind `{}`", raw.kind)))
    };
    let spec = match raw.kind.as_str() {
        "interval" => {
            extra(raw.x.is_some(), "x")?;
            extra(raw.y.is_some(), "y")?;
            extra(raw.radius.is_some(), "radius")?;
            extra(raw.dim.is_some(), "dim")?;
            DomainSpec::interval(need(raw.a, "a")?, need(raw.b, "b")?, raw.resolution)
        }
        "rectangle" => {
            extra(raw.a.is_some(), "a")?;
            extra(raw.b.is_some(), "b")?;
            extra(raw.radius.is_some(), "radius")?;
            extra(raw.dim.is_some(), "dim")?;
            let x = raw.x.ok_or_else(|| loc.invalid("domain.x", "required by kind `rectangle`"))?;
            let y = raw.y.ok_or_else(|| loc.invalid("domain.y", "required by kind `rectangle`"))?;
            DomainSpec::rectangle(x[0], x[1], y[0], y[1], raw.resolution)
        }
        "ball" => {
            extra(raw.a.is_some(), "a")?;
            extra(raw.b.is_some(), "b")?;
            extra(raw.x.is_some(), "x")?;
            extra(raw.y.is_some(), "y")?;
            let dim = raw.dim.ok_or_else(|| loc.invalid("domain.dim", "required by kind `ball`"))?;
            DomainSpec::radial_ball(need(raw.radius, "radius")?, dim, raw.resolution)
        }
        other => {
            return Err(loc.invalid(
                "domain.kind",
                format!("unknown kind `{other}` (expected interval, rectangle or ball)"),
            ))
        }
    };
    let spec = match raw.refine_ratio {
        Some(r) => spec.refined(r),
        None => spec,
    };
    spec.validate().map_err(|e| loc.core("domain", e))?;
    build_grid(&spec).map_err(|e| loc.core("domain", e))
}

fn solver(loc: &Located, raw: RawSolver) -> CliResult<SolveOptions> {
    let d = SolveOptions::default();
    let opts = SolveOptions {
        tol: raw.tol.or(d.tol),
        max_iters: raw.max_iters.unwrap_or(d.max_iters),
        eps: raw.eps.unwrap_or(d.eps),
        line_search_beta: raw.line_search_beta.unwrap_or(d.line_search_beta),
        newton_fallback: raw.newton_fallback.unwrap_or(d.newton_fallback),
        eps_recheck: raw.eps_recheck.unwrap_or(d.eps_recheck),
    };
    opts.validate().map_err(|e| {
        let msg = e.to_string();
        let key = ["line_search_beta", "max_iters", "tol", "eps"]
            .into_iter()
            .find(|k| msg.contains(k))
            .unwrap_or("tol");
        loc.invalid(&format!("solver.{key}"), msg)
    })?;
    Ok(opts)
}

fn schedule(loc: &Located, raw: RawSchedule, grid: &Grid) -> CliResult<EscalationSchedule> {
    let growth = match raw.growth.as_str() {
        "geometric" => {
            if raw.step.is_some() {
                return Err(loc.invalid("schedule.step", "not used by geometric growth"));
            }
            Growth::Geometric(raw.ratio.ok_or_else(|| loc.invalid("schedule.ratio", "required by geometric growth"))?)
        }
        "arithmetic" => {
            if raw.ratio.is_some() {
                return Err(loc.invalid("schedule.ratio", "not used by arithmetic growth"));
            }
            Growth::Arithmetic(raw.step.ok_or_else(|| loc.invalid("schedule.step", "required by arithmetic growth"))?)
        }
        other => {
            return Err(loc.invalid(
                "schedule.growth",
                format!("unknown growth `{other}` (expected geometric or arithmetic)"),
            ))
        }
    };
    let s = EscalationSchedule {
        base: raw.base,
        growth,
        max_levels: raw.max_levels,
        core_margin: raw.core_margin,
        stall_tol: raw.stall_tol,
        fit_window: raw.fit_window.map(|w| (w[0], w[1])),
    };
    s.validate(grid).map_err(|e| {
        let msg = e.to_string();
        let field = if msg.contains("max_levels") {
            "schedule.max_levels"
        } else if msg.contains("core margin") {
            "schedule.core_margin"
        } else if msg.contains("fit window") {
            "schedule.fit_window"
        } else if msg.contains("stall_tol") {
            "schedule.stall_tol"
        } else if msg.contains("base") {
            "schedule.base"
        } else if msg.contains("ratio") {
            "schedule.ratio"
        } else {
            "schedule.step"
        };
        loc.invalid(field, msg)
    })?;
    Ok(s)
}

fn hypotheses(loc: &Located, sys: &SystemSpec, grid: &Grid) -> CliResult<()> {
    let stride = (grid.len() / 64).max(1);
    let points: Vec<_> = (0..grid.len()).step_by(stride).map(|k| grid.point(k)).collect();
    check_hypotheses(loc, sys, &points)
}

fn check_hypotheses(loc: &Located, sys: &SystemSpec, points: &[plap_core::grid::Point]) -> CliResult<()> {
    let report = sys.validate_hypotheses(points);
    match report.first_failure() {
        None => Ok(()),
        Some(msg) => Err(loc.invalid("system", msg)),
    }
}
