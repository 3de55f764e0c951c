//! Boundary escalation towards large solutions, boundary-rate fits and the
//! one-dimensional barrier.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::nonlinearity::{keller_osserman_check, ClassFFunction};
use crate::plap::{solve_dirichlet_system, solve_dirichlet_system_from, SolveOptions, SolveReport, SystemSpec};
use crate::tail::{MonotoneTransform, TransformBuildError, UpperLimit};

/// Largest pointwise decrease between consecutive levels still counted as monotone.
pub const MONOTONE_TOL: f64 = 1e-8;
/// Decrease beyond which escalation aborts.
pub const MONOTONE_BREAK: f64 = 1e-6;
/// Allowed excess of a held component over its boundary value.
pub const FIXED_EXCESS_TOL: f64 = 1e-8;
/// Relative slack in the barrier comparison.
pub const BARRIER_SLACK: f64 = 0.05;
/// Default cap value of the barrier ODE.
pub const BARRIER_CAP: f64 = 1e10;
const BARRIER_FLOOR: f64 = 1e-12;
const MIN_FIT_NODES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `b_k = b₀ + k·step`.
    Arithmetic(f64),
    /// `b_k = b₀·ratio^k`.
    Geometric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscalationSchedule {
    pub base: f64,
    pub growth: Growth,
    pub max_levels: usize,
    pub core_margin: f64,
    pub stall_tol: f64,
    /// Distance window for rate fits and barrier checks; defaults to
    /// `[0.01, 0.1]·inradius`.
    pub fit_window: Option<(f64, f64)>,
}

impl EscalationSchedule {
    pub fn geometric(base: f64, ratio: f64, max_levels: usize, core_margin: f64, stall_tol: f64) -> Self {
        Self {
            base,
            growth: Growth::Geometric(ratio),
            max_levels,
            core_margin,
            stall_tol,
            fit_window: None,
        }
    }

    pub fn with_fit_window(mut self, lo: f64, hi: f64) -> Self {
        self.fit_window = Some((lo, hi));
        self
    }

    pub fn boundary_value(&self, level: usize) -> f64 {
        match self.growth {
            Growth::Arithmetic(step) => self.base + step * level as f64,
            Growth::Geometric(ratio) => self.base * ratio.powi(level as i32),
        }
    }

    pub fn window(&self, grid: &Grid) -> (f64, f64) {
        self.fit_window.unwrap_or_else(|| {
            let rho = grid.inradius();
            (0.01 * rho, 0.1 * rho)
        })
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.base > 0.0) || !self.base.is_finite() {
            return Err(Error::Precondition(format!("base boundary value must be positive, got {}", self.base)));
        }
        match self.growth {
            Growth::Arithmetic(step) if !(step > 0.0) => {
                return Err(Error::Precondition(format!("arithmetic step must be positive, got {step}")))
            }
            Growth::Geometric(ratio) if !(ratio > 1.0) => {
                return Err(Error::Precondition(format!("geometric ratio must exceed 1, got {ratio}")))
            }
            _ => {}
        }
        if self.max_levels < 3 {
            return Err(Error::Precondition(format!("max_levels must be at least 3, got {}", self.max_levels)));
        }
        if !(self.stall_tol > 0.0) {
            return Err(Error::Precondition(format!("stall_tol must be positive, got {}", self.stall_tol)));
        }
        let rho = grid.inradius();
        if !(self.core_margin > 0.0) || self.core_margin >= rho {
            return Err(Error::MarginTooLarge {
                margin: self.core_margin,
                inradius: rho,
            });
        }
        let (lo, hi) = self.window(grid);
        if !(lo > 0.0 && lo < hi && hi < rho) {
            return Err(Error::Precondition(format!("fit window [{lo}, {hi}] must lie in (0, {rho})")));
        }
        Ok(())
    }
}

/// `u ≈ A·d^{−β}` over a distance window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub a: f64,
    pub beta: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub nodes: usize,
}

/// Least-squares fit of `log u` against `log d(x)` over nodes with
/// `d(x) ∈ [lo, hi]`.
pub fn fit_boundary_rate(grid: &Grid, field: &GridFunction, window: (f64, f64)) -> Result<RateFit> {
    if !field.lives_on(grid) {
        return Err(Error::Precondition("field does not live on this grid".into()));
    }
    let (lo, hi) = window;
    let rho = grid.inradius();
    if !(lo > 0.0 && lo < hi && hi <= rho) {
        return Err(Error::Domain(format!("fit window [{lo}, {hi}] must lie in (0, {rho}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..grid.len() {
        let d = grid.boundary_distance(k);
        if d >= lo && d <= hi && field[k] > 0.0 {
            xs.push(d.ln());
            ys.push(field[k].ln());
        }
    }
    let n = xs.len();
    if n < MIN_FIT_NODES {
        return Err(Error::InsufficientData {
            found: n,
            needed: MIN_FIT_NODES,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData {
            found: 1,
            needed: MIN_FIT_NODES,
        });
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    Ok(RateFit {
        a: icpt.exp(),
        beta: -slope,
        residual: (ss / nf).sqrt(),
        nodes: n,
    })
}

/// `(A, β)` of `u ≈ A·d^{−β}` for `Δₚu = c·t^γ` in one dimension.
pub fn power_rate_oracle(c: f64, gamma: f64, p: f64) -> Option<(f64, f64)> {
    let e = gamma - p + 1.0;
    if !(e > 0.0 && c > 0.0) {
        return None;
    }
    let beta = p / e;
    let a = (beta.powf(p - 1.0) * (beta + 1.0) * (p - 1.0) / c).powf(1.0 / e);
    Some((a, beta))
}

/// The half-line large solution `μ` of `(|u'|^{p−2}u')' = s·f(u)`, from the
/// first integral `u' = −(p′ s H(u))^{1/p}` started at a cap value.
#[derive(Debug)]
pub struct Barrier {
    p: f64,
    depth: MonotoneTransform,
}

impl Barrier {
    pub fn new(f: &ClassFFunction, p: f64) -> Result<Self> {
        Self::scaled(f, p, 1.0, BARRIER_CAP)
    }

    /// Barrier for `scale·f` with cap value `cap`.
    pub fn scaled(f: &ClassFFunction, p: f64, scale: f64, cap: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        if !(scale > 0.0) || !(cap > BARRIER_FLOOR) {
            return Err(Error::Domain(format!("scale {scale} and cap {cap} must be positive")));
        }
        let undefined = || Error::BarrierUndefined { label: f.label().into() };
        match keller_osserman_check(f, p) {
            Ok(v) if v.converges => {}
            _ => return Err(undefined()),
        }
        let g = f.clone();
        let q = p / (p - 1.0);
        let kernel = Box::new(move |s: f64| {
            let h = g.antiderivative(s).unwrap_or(f64::NAN);
            (q * scale * h).powf(-1.0 / p)
        });
        let depth = MonotoneTransform::new(kernel, UpperLimit::Finite(cap), BARRIER_FLOOR, cap).map_err(|e| match e {
            TransformBuildError::Divergent(_) => undefined(),
            TransformBuildError::Numeric(e) => e,
        })?;
        Ok(Self { p, depth })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Distance from the cap at which the barrier reaches `u`.
    pub fn depth(&self, u: f64) -> Result<f64> {
        self.depth.eval(u)
    }

    /// `μ(δ)`, truncated at 0 beyond the depth of the floor value.
    pub fn mu(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("distance must be positive, got {delta}")));
        }
        if delta >= self.depth.eval(BARRIER_FLOOR)? {
            return Ok(0.0);
        }
        self.depth.invert(delta)
    }
}

/// `μ(δ)` for `f` with the default cap.
pub fn barrier_mu(f: &ClassFFunction, p: f64, delta: f64) -> Result<f64> {
    Barrier::new(f, p)?.mu(delta)
}

#[derive(Debug, Clone)]
pub struct Level {
    pub boundary_value: f64,
    pub report: SolveReport,
}

/// Worst `u/μ(d)` over the fit window, per component and level.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCheck {
    /// `None` where no barrier exists for the component.
    pub ratios: Vec<Vec<Option<f64>>>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedCheck {
    pub blowup_set: Vec<usize>,
    pub held: Vec<(usize, f64)>,
    /// Per level: worst `u_j − α_j` over held components and all nodes.
    pub max_excess: Vec<f64>,
    pub excess_ok: bool,
    /// Worst `|u_j − α_j|` on the boundary ring at the final level.
    pub ring_deviation: f64,
}

/// The three-part numerical blow-up verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupVerdict {
    pub core_stabilized: bool,
    /// Boundary-ring minima increase strictly across levels for every escalated component.
    pub ring_growth: bool,
    /// Fitted rates agree with the power-law oracle within 5%; `None` without an oracle.
    pub rate_agreement: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct EscalationTrace {
    pub levels: Vec<Level>,
    /// `core_deltas[k]` compares level `k` with level `k − 1` (`None` for level 0).
    pub core_deltas: Vec<Option<f64>>,
    pub stabilized: bool,
    pub limit_fields: Vec<GridFunction>,
    pub core_nodes: Vec<usize>,
    pub fit_window: (f64, f64),
    pub rate_fits: Vec<Option<RateFit>>,
    /// Oracle `(A, β)` per component when `fᵢ` is a power.
    pub rate_oracle: Vec<Option<(f64, f64)>>,
    /// Per level and component: minimum over the boundary ring.
    pub ring_minima: Vec<Vec<f64>>,
    /// Largest pointwise decrease of an escalated component between
    /// consecutive levels.
    pub worst_decrease: f64,
    pub barrier: BarrierCheck,
    pub mixed: Option<MixedCheck>,
    pub verdict: BlowupVerdict,
    pub truncated: Option<String>,
}

impl EscalationTrace {
    pub fn monotone(&self) -> bool {
        self.worst_decrease <= MONOTONE_TOL
    }

    pub fn escalated(&self) -> Vec<usize> {
        match &self.mixed {
            Some(m) => m.blowup_set.clone(),
            None => (0..self.limit_fields.len()).collect(),
        }
    }
}

/// Escalates the boundary data of every component through `sched`.
pub fn escalate_blowup(
    grid: &Grid,
    sys: &SystemSpec,
    p: f64,
    sched: &EscalationSchedule,
    opts: &SolveOptions,
) -> Result<EscalationTrace> {
    let all: Vec<usize> = (0..sys.dim()).collect();
    escalate(grid, sys, p, sched, opts, &all, &[])
}

/// Escalates components in `blowup_set` (0-based) while holding the others
/// at `fixed_boundary` (in increasing component order).
pub fn escalate_mixed(
    grid: &Grid,
    sys: &SystemSpec,
    p: f64,
    blowup_set: &[usize],
    fixed_boundary: &[f64],
    sched: &EscalationSchedule,
    opts: &SolveOptions,
) -> Result<EscalationTrace> {
    let d = sys.dim();
    let mut set = blowup_set.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() || set.len() >= d || set.iter().any(|&i| i >= d) {
        return Err(Error::Precondition(format!(
            "blow-up set must be a nonempty proper subset of the {d} components; use escalate_blowup for all"
        )));
    }
    let held: Vec<usize> = (0..d).filter(|i| !set.contains(i)).collect();
    if fixed_boundary.len() != held.len() {
        return Err(Error::Precondition(format!(
            "{} fixed boundary values for {} held components",
            fixed_boundary.len(),
            held.len()
        )));
    }
    if fixed_boundary.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::Precondition("fixed boundary values must be positive".into()));
    }
    let pairs: Vec<(usize, f64)> = held.into_iter().zip(fixed_boundary.iter().copied()).collect();
    escalate(grid, sys, p, sched, opts, &set, &pairs)
}

fn escalate(
    grid: &Grid,
    sys: &SystemSpec,
    p: f64,
    sched: &EscalationSchedule,
    opts: &SolveOptions,
    up: &[usize],
    held: &[(usize, f64)],
) -> Result<EscalationTrace> {
    sched.validate(grid)?;
    opts.validate()?;
    let d = sys.dim();
    let core = grid.restrict_to_core(sched.core_margin)?;
    let ring = grid.boundary_ring();
    let window = sched.window(grid);
    let window_nodes: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let dist = grid.boundary_distance(k);
            dist >= window.0 && dist <= window.1
        })
        .collect();
    let mus = barrier_values(grid, sys, p, up, &window_nodes);

    let mut levels: Vec<Level> = Vec::new();
    let mut core_deltas = Vec::new();
    let mut ring_minima = Vec::new();
    let mut ratios = Vec::new();
    let mut max_excess = Vec::new();
    let mut worst_decrease = f64::NEG_INFINITY;
    let mut stabilized = false;
    let mut truncated = None;

    for k in 0..sched.max_levels {
        let b = sched.boundary_value(k);
        let data: Vec<GridFunction> = (0..d)
            .map(|c| {
                let v = held.iter().find(|h| h.0 == c).map_or(b, |h| h.1);
                GridFunction::constant(grid, v)
            })
            .collect();
        let report = match levels.last() {
            None => solve_dirichlet_system(grid, sys, &data, p, opts)?,
            Some(prev) => solve_dirichlet_system_from(grid, sys, &data, p, opts, &prev.report.solution)?,
        };
        if !report.converged {
            truncated = Some(format!(
                "level {k} (boundary value {b:e}) did not converge: scaled residual {:.3e} after {} iterations",
                report.residual_sup, report.iterations
            ));
            levels.push(Level {
                boundary_value: b,
                report,
            });
            break;
        }
        let u = &report.solution;
        let delta = match levels.last() {
            None => None,
            Some(prev) => {
                let prev = &prev.report.solution;
                let mut delta = 0.0f64;
                for &c in up {
                    for node in 0..grid.len() {
                        let drop = prev[c][node] - u[c][node];
                        if drop > MONOTONE_BREAK {
                            return Err(Error::MonotonicityBroken { level: k, node, drop });
                        }
                        worst_decrease = worst_decrease.max(drop);
                    }
                }
                for c in 0..d {
                    for &node in &core {
                        delta = delta.max((u[c][node] - prev[c][node]).abs());
                    }
                }
                Some(delta)
            }
        };
        ring_minima.push(
            (0..d)
                .map(|c| ring.iter().map(|&n| u[c][n]).fold(f64::INFINITY, f64::min))
                .collect::<Vec<_>>(),
        );
        ratios.push(
            (0..d)
                .map(|c| {
                    let mu = mus[c].as_ref()?;
                    Some(
                        window_nodes
                            .iter()
                            .zip(mu)
                            .map(|(&n, &m)| if m > 0.0 { u[c][n] / m } else { f64::INFINITY })
                            .fold(f64::NEG_INFINITY, f64::max),
                    )
                })
                .collect::<Vec<_>>(),
        );
        max_excess.push(
            held.iter()
                .flat_map(|&(c, a)| u[c].values().iter().map(move |v| v - a))
                .fold(f64::NEG_INFINITY, f64::max),
        );
        core_deltas.push(delta);
        levels.push(Level {
            boundary_value: b,
            report,
        });
        if delta.is_some_and(|x| x <= sched.stall_tol) {
            stabilized = true;
            break;
        }
    }

    let converged: Vec<&Level> = levels.iter().filter(|l| l.report.converged).collect();
    let limit_fields = converged
        .last()
        .map(|l| l.report.solution.clone())
        .unwrap_or_default();
    let rate_fits: Vec<Option<RateFit>> = (0..d)
        .map(|c| {
            if !up.contains(&c) || limit_fields.is_empty() {
                return None;
            }
            fit_boundary_rate(grid, &limit_fields[c], window).ok()
        })
        .collect();
    let rate_oracle: Vec<Option<(f64, f64)>> = (0..d)
        .map(|c| {
            if !up.contains(&c) || sys.weights().is_some() {
                return None;
            }
            let (coef, gamma) = sys.lower_bounds()[c].power_params()?;
            (grid.spec().is_one_dimensional()).then_some(())?;
            power_rate_oracle(coef, gamma, p)
        })
        .collect();
    let ring_growth = ring_minima.len() >= 2
        && up.iter().all(|&c| ring_minima.windows(2).all(|w| w[1][c] > w[0][c]));
    let rate_agreement = if up.iter().all(|&c| rate_oracle[c].is_some()) {
        Some(up.iter().all(|&c| match (rate_fits[c], rate_oracle[c]) {
            (Some(fit), Some((a, beta))) => {
                (fit.beta / beta - 1.0).abs() <= 0.05 && (fit.a / a - 1.0).abs() <= 0.05
            }
            _ => false,
        }))
    } else {
        None
    };
    let barrier_passed = ratios
        .iter()
        .all(|level| level.iter().all(|r| r.is_none_or(|r| r <= 1.0 + BARRIER_SLACK)));
    let fields = &limit_fields;
    let ring = &ring;
    let mixed = (!held.is_empty()).then(|| {
        let ring_deviation = fields.first().map_or(f64::INFINITY, |_| {
            held.iter()
                .flat_map(|&(c, a)| ring.iter().map(move |&n| (fields[c][n] - a).abs()))
                .fold(0.0, f64::max)
        });
        MixedCheck {
            blowup_set: up.to_vec(),
            held: held.to_vec(),
            excess_ok: max_excess.iter().all(|&e| e <= FIXED_EXCESS_TOL),
            max_excess,
            ring_deviation,
        }
    });

    Ok(EscalationTrace {
        verdict: BlowupVerdict {
            core_stabilized: stabilized,
            ring_growth,
            rate_agreement,
        },
        levels,
        core_deltas,
        stabilized,
        limit_fields,
        core_nodes: core,
        fit_window: window,
        rate_fits,
        rate_oracle,
        ring_minima,
        worst_decrease: worst_decrease.max(0.0),
        barrier: BarrierCheck {
            ratios,
            passed: barrier_passed,
        },
        mixed,
        truncated,
    })
}

/// `μᵢ(d(x))` at the window nodes for each escalated component, built from
/// `fᵢ` scaled by the smallest nodal weight.
fn barrier_values(grid: &Grid, sys: &SystemSpec, p: f64, up: &[usize], nodes: &[usize]) -> Vec<Option<Vec<f64>>> {
    (0..sys.dim())
        .map(|c| {
            if !up.contains(&c) {
                return None;
            }
            let scale = (0..grid.len())
                .map(|k| sys.weight(c, grid.point(k)))
                .fold(f64::INFINITY, f64::min);
            let barrier = Barrier::scaled(&sys.lower_bounds()[c], p, scale, BARRIER_CAP).ok()?;
            nodes
                .iter()
                .map(|&n| barrier.mu(grid.boundary_distance(n)))
                .collect::<Result<Vec<_>>>()
                .ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainSpec};
    use crate::plap::{ExprCoupling, SystemSpec};
    use alloc::sync::Arc;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn cube() -> ClassFFunction {
        ClassFFunction::power(1.0, 3.0).unwrap()
    }

    #[test]
    fn oracle_algebra() {
        // Substituting u = A d^{-β} into ((p−1)|u'|^{p−2}u'') = c u^γ term by term.
        for &(p, gamma, c) in &[(2.0, 3.0, 1.0), (3.0, 4.0, 1.0), (1.5, 2.0, 1.0), (2.0, 5.0, 2.0)] {
            let (a, beta) = power_rate_oracle(c, gamma, p).unwrap();
            let lhs = (p - 1.0) * (a * beta).powf(p - 2.0) * a * beta * (beta + 1.0);
            let rhs = c * a.powf(gamma);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            assert_relative_eq!(beta * (p - 1.0) + p, beta * gamma, max_relative = 1e-12);
        }
        assert_relative_eq!(power_rate_oracle(1.0, 3.0, 2.0).unwrap().0, 2f64.sqrt(), max_relative = 1e-14);
        assert!(power_rate_oracle(1.0, 1.0, 2.0).is_none());
    }

    #[test]
    fn barrier_for_cubic_is_inverse_distance() {
        let b = Barrier::new(&cube(), 2.0).unwrap();
        for &delta in &[1e-6, 1e-3, 0.05, 0.5, 3.0] {
            // The cap shifts the origin by √2/cap.
            let exact = 2f64.sqrt() / (delta + 2f64.sqrt() / BARRIER_CAP);
            assert_relative_eq!(b.mu(delta).unwrap(), exact, max_relative = 1e-8);
        }
        assert_relative_eq!(barrier_mu(&cube(), 2.0, 0.01).unwrap(), 100.0 * 2f64.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn barrier_is_decreasing_and_truncated() {
        let f = ClassFFunction::parse("expm1(1)").unwrap();
        let b = Barrier::new(&f, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let delta = 1e-4 * 1.5f64.powi(k);
            let m = b.mu(delta).unwrap();
            assert!(m <= prev);
            prev = m;
        }
        assert_eq!(b.mu(1e6).unwrap(), 0.0);
    }

    #[test]
    fn barrier_requires_keller_osserman() {
        let lin = ClassFFunction::power(1.0, 1.0).unwrap();
        assert!(matches!(Barrier::new(&lin, 2.0), Err(Error::BarrierUndefined { .. })));
    }

    #[test]
    fn rate_fit_examples() {
        let g = build_grid(&DomainSpec::interval(-1.0, 1.0, 201)).unwrap();
        let c = GridFunction::constant(&g, 2.5);
        let fit = fit_boundary_rate(&g, &c, (0.05, 0.5)).unwrap();
        assert!(fit.beta.abs() < 1e-12);
        assert_relative_eq!(fit.a, 2.5, max_relative = 1e-12);
        let pw = GridFunction::from_fn(&g, |x| 3.0 * (1.0 - x[0].abs()).max(1e-3).powf(-0.7)).unwrap();
        let fit = fit_boundary_rate(&g, &pw, (0.05, 0.5)).unwrap();
        assert_relative_eq!(fit.beta, 0.7, max_relative = 1e-10);
        assert_relative_eq!(fit.a, 3.0, max_relative = 1e-10);
        assert!(fit.residual < 1e-10);
        assert!(matches!(
            fit_boundary_rate(&g, &c, (0.1, 0.12)),
            Err(Error::InsufficientData { found: 4, needed: 6 })
        ));
    }

    fn small_schedule(levels: usize) -> EscalationSchedule {
        EscalationSchedule::geometric(10.0, 10.0, levels, 0.5, 1e-14).with_fit_window(0.02, 0.1)
    }

    #[test]
    fn schedule_validation() {
        let g = build_grid(&DomainSpec::interval(-1.0, 1.0, 21)).unwrap();
        assert!(small_schedule(3).validate(&g).is_ok());
        assert!(small_schedule(2).validate(&g).is_err());
        let mut s = small_schedule(3);
        s.core_margin = 1.5;
        assert!(matches!(s.validate(&g), Err(Error::MarginTooLarge { .. })));
        s = small_schedule(3);
        s.growth = Growth::Geometric(1.0);
        assert!(s.validate(&g).is_err());
        s.growth = Growth::Arithmetic(1.0);
        assert!(s.validate(&g).is_ok());
        assert_eq!(s.boundary_value(4), 14.0);
    }

    #[test]
    fn three_levels_without_stabilizing() {
        let g = build_grid(&DomainSpec::interval(-1.0, 1.0, 161).refined(0.7)).unwrap();
        let sys = SystemSpec::scalar(cube());
        let t = escalate_blowup(&g, &sys, 2.0, &small_schedule(3), &SolveOptions::default()).unwrap();
        assert_eq!(t.levels.len(), 3);
        assert!(!t.stabilized);
        assert!(t.truncated.is_none());
        assert!(t.monotone());
        assert!(t.verdict.ring_growth);
        assert!(t.barrier.passed, "{:?}", t.barrier.ratios);
        let deltas: Vec<f64> = t.core_deltas.iter().flatten().copied().collect();
        assert!(deltas[1] < deltas[0]);
    }

    #[test]
    fn stabilizes_with_loose_tolerance() {
        let g = build_grid(&DomainSpec::interval(-1.0, 1.0, 161).refined(0.7)).unwrap();
        let sys = SystemSpec::scalar(cube());
        let mut s = small_schedule(8);
        s.stall_tol = 1e-3;
        let t = escalate_blowup(&g, &sys, 2.0, &s, &SolveOptions::default()).unwrap();
        assert!(t.stabilized, "{:?}", t.core_deltas);
        assert!(t.levels.len() < 8);
        assert!(t.core_deltas.last().unwrap().unwrap() <= 1e-3);
    }

    #[test]
    fn decoupled_components_agree() {
        let g = build_grid(&DomainSpec::interval(-1.0, 1.0, 81).refined(0.7)).unwrap();
        let t = escalate_blowup(&g, &SystemSpec::decoupled(cube(), 2), 2.0, &small_schedule(3), &SolveOptions::default())
            .unwrap();
        let [a, b] = &t.limit_fields[..] else { panic!() };
        for k in 0..g.len() {
            assert_relative_eq!(a[k], b[k], max_relative = 1e-10);
        }
    }

    #[test]
    fn mixed_rejects_full_set_and_holds_component() {
        let g = build_grid(&DomainSpec::interval(-1.0, 1.0, 81).refined(0.7)).unwrap();
        let sys = SystemSpec::new(
            Arc::new(ExprCoupling::new(&["u1*u2^2", "u1^2*u2"], Some("(u1*u2)^2/2")).unwrap()),
            vec![ClassFFunction::power(1.0, 1.0).unwrap(); 2],
            ClassFFunction::power(1.0, 3.0).unwrap(),
        )
        .unwrap();
        let s = EscalationSchedule::geometric(1.0, 2.0, 3, 0.5, 1e-14).with_fit_window(0.02, 0.1);
        let opts = SolveOptions::default();
        assert!(escalate_mixed(&g, &sys, 2.0, &[0, 1], &[], &s, &opts).is_err());
        assert!(escalate_mixed(&g, &sys, 2.0, &[], &[1.0, 1.0], &s, &opts).is_err());
        let t = escalate_mixed(&g, &sys, 2.0, &[0], &[1.0], &s, &opts).unwrap();
        let m = t.mixed.as_ref().unwrap();
        assert!(m.excess_ok, "{:?}", m.max_excess);
        assert_eq!(t.escalated(), vec![0]);
        assert!(t.rate_fits[1].is_none());
        assert!(t.verdict.ring_growth);
    }
}
