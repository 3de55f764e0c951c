use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use super::operator::{energy_density, flux, flux_derivative};
use super::system::{Coupling, ScalarCoupling, SystemSpec};
use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Point};
use crate::nonlinearity::ClassFFunction;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Relative slack on merit increases accepted by the line search.
pub const LINE_SEARCH_SLACK: f64 = 1e-12;
/// Slack of the post-hoc sandwich check.
pub const SANDWICH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Residual tolerance; `None` picks 1e-9 for `p = 2` and 1e-7 otherwise.
    pub tol: Option<f64>,
    pub max_iters: usize,
    /// Flux regularization `ε`.
    pub eps: f64,
    pub line_search_beta: f64,
    /// Fall back to gradient steps when Newton directions fail.
    pub newton_fallback: bool,
    /// For `p ≠ 2`, re-solve with `ε/2` and report the change.
    pub eps_recheck: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_iters: 10_000,
            eps: 1e-8,
            line_search_beta: 0.5,
            newton_fallback: true,
            eps_recheck: true,
        }
    }
}

impl SolveOptions {
    pub fn tolerance(&self, p: f64) -> f64 {
        self.tol.unwrap_or(if p == 2.0 { 1e-9 } else { 1e-7 })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("tol must be positive, got {t}")));
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be finite and nonnegative, got {}", self.eps)));
        }
        if !(self.line_search_beta > 0.0 && self.line_search_beta < 1.0) {
            return Err(Error::Domain(format!(
                "line_search_beta must lie in (0, 1), got {}",
                self.line_search_beta
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// What the line search decreases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Merit {
    /// The discrete energy (variational problems).
    Energy,
    /// `½ Σ G²/cell` of the nodal residual `G` (no joint potential, or
    /// weights differing between components).
    ResidualNorm,
}

/// `ψ ≤ uᵢ ≤ M` check for constant boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    /// `m = min αᵢ`, the boundary value of the sub-solution.
    pub lower_boundary: f64,
    /// `M = max αᵢ`.
    pub upper: f64,
    pub subsolution: GridFunction,
    /// `min (uᵢ − ψ)` over nodes and components.
    pub min_above_lower: f64,
    /// `max (uᵢ − M)` over nodes and components.
    pub max_above_upper: f64,
    pub violated: bool,
    /// `(component, node)` of the worst violation.
    pub witness: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<GridFunction>,
    /// Sup over interior nodes of `|R|/(1 + S)`, where `R = Δₚu − aF` and `S`
    /// is the magnitude of the terms making up `R`.
    pub residual_sup: f64,
    /// Sup of the unscaled residual `|Δₚu − aF|`.
    pub residual_abs_sup: f64,
    /// Merit per iterate: total energy, or the residual norm.
    pub energy_trace: Vec<f64>,
    pub merit: Merit,
    pub iterations: usize,
    pub gradient_steps: usize,
    pub converged: bool,
    pub tol: f64,
    pub regularization_eps: f64,
    /// `max |u_ε − u_{ε/2}|/(1 + |u_ε|)` when rechecked.
    pub eps_sensitivity: Option<f64>,
    pub sandwich: Option<SandwichReport>,
    /// Why the iteration stopped early, if it did.
    pub stop_reason: Option<String>,
}

impl SolveReport {
    pub fn energy_nonincreasing(&self) -> bool {
        self.energy_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + LINE_SEARCH_SLACK * w[0].abs().max(1e-300))
    }
}

#[derive(Debug)]
struct Zero;

impl Coupling for Zero {
    fn dim(&self) -> usize {
        1
    }
    fn grad(&self, _: Point, _: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn jacobian(&self, _: Point, _: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn potential(&self, _: Point, _: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn has_potential(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        "0".into()
    }
}

const NONE: usize = usize::MAX;

/// The discrete system on one grid, flattened node-major (`k·d + c`).
struct Gradient {
    g: Vec<f64>,
    scale: Vec<f64>,
    noise: Vec<f64>,
}

/// Multiple of machine epsilon times the evaluated magnitudes treated as
/// indistinguishable from zero residual.
const NOISE_FACTOR: f64 = 8.0;

struct Setup<'a> {
    grid: &'a Grid,
    coupling: &'a dyn Coupling,
    d: usize,
    p: f64,
    eps: f64,
    weights: Vec<f64>,
    points: Vec<Point>,
    pos: Vec<usize>,
    half_band: usize,
    variational: bool,
}

impl<'a> Setup<'a> {
    fn new(grid: &'a Grid, coupling: &'a dyn Coupling, weights: Vec<f64>, p: f64, eps: f64) -> Self {
        let d = coupling.dim();
        let mut pos = alloc::vec![NONE; grid.len()];
        for (j, &k) in grid.interior().iter().enumerate() {
            pos[k] = j;
        }
        let mut span = 0;
        for e in grid.edges() {
            if pos[e.a] != NONE && pos[e.b] != NONE {
                span = span.max(pos[e.a].abs_diff(pos[e.b]));
            }
        }
        let uniform = (0..grid.len()).all(|k| (1..d).all(|c| weights[k * d + c] == weights[k * d]));
        Self {
            grid,
            coupling,
            d,
            p,
            eps,
            points: (0..grid.len()).map(|k| grid.point(k)).collect(),
            weights,
            half_band: span * d + d - 1,
            variational: coupling.has_potential() && uniform,
            pos,
        }
    }

    fn unknowns(&self) -> usize {
        self.grid.interior().len() * self.d
    }

    /// Energy gradient over unknowns, plus per-unknown term magnitudes and
    /// rounding-noise estimates.
    fn gradient(&self, u: &[f64]) -> Option<Gradient> {
        let d = self.d;
        let n = self.unknowns();
        let mut g = alloc::vec![0.0; n];
        let mut scale = alloc::vec![0.0; n];
        let mut noise = alloc::vec![0.0; n];
        for e in self.grid.edges() {
            let (pa, pb) = (self.pos[e.a], self.pos[e.b]);
            for c in 0..d {
                let (ua, ub) = (u[e.a * d + c], u[e.b * d + c]);
                let s = (ub - ua) / e.length;
                let f = e.measure * flux(s, self.p, self.eps);
                let slope = flux_derivative(s, self.p, self.eps);
                let fuzz = f.abs()
                    + if slope.is_finite() {
                        e.measure * slope * (ua.abs() + ub.abs()) / e.length
                    } else {
                        0.0
                    };
                if pa != NONE {
                    g[pa * d + c] -= f;
                    scale[pa * d + c] += f.abs();
                    noise[pa * d + c] += fuzz;
                }
                if pb != NONE {
                    g[pb * d + c] += f;
                    scale[pb * d + c] += f.abs();
                    noise[pb * d + c] += fuzz;
                }
            }
        }
        let mut buf = alloc::vec![0.0; d];
        for (j, &k) in self.grid.interior().iter().enumerate() {
            self.coupling.grad(self.points[k], &u[k * d..k * d + d], &mut buf);
            let m = self.grid.cell_measures()[k];
            for c in 0..d {
                let t = m * self.weights[k * d + c] * buf[c];
                g[j * d + c] += t;
                scale[j * d + c] += t.abs();
                noise[j * d + c] += t.abs();
            }
        }
        for v in &mut noise {
            *v *= NOISE_FACTOR * f64::EPSILON;
        }
        if g.iter().all(|v| v.is_finite()) {
            Some(Gradient { g, scale, noise })
        } else {
            None
        }
    }

    /// `(scaled sup, absolute sup)` of the nodal residual. The scaled value
    /// counts only the part of `|G|` above the rounding-noise estimate.
    fn residuals(&self, grad: &Gradient) -> (f64, f64) {
        let mut scaled: f64 = 0.0;
        let mut abs: f64 = 0.0;
        for (j, &k) in self.grid.interior().iter().enumerate() {
            let m = self.grid.cell_measures()[k];
            for c in 0..self.d {
                let i = j * self.d + c;
                let g = grad.g[i].abs();
                abs = abs.max(g / m);
                scaled = scaled.max((g - grad.noise[i]).max(0.0) / (m + grad.scale[i]));
            }
        }
        (scaled, abs)
    }

    fn dirichlet(&self, u: &[f64]) -> f64 {
        let d = self.d;
        let mut total = 0.0;
        for e in self.grid.edges() {
            for c in 0..d {
                let s = (u[e.b * d + c] - u[e.a * d + c]) / e.length;
                total += e.measure * e.length * energy_density(s, self.p, self.eps);
            }
        }
        total
    }

    fn potential_sum(&self, u: &[f64], nodes: &[usize]) -> f64 {
        let d = self.d;
        let mut total = 0.0;
        for &k in nodes {
            match self.coupling.potential(self.points[k], &u[k * d..k * d + d]) {
                Some(f) => total += self.grid.cell_measures()[k] * self.weights[k * d] * f,
                None => return f64::NAN,
            }
        }
        total
    }

    /// Energy without the (constant) boundary-node potential.
    fn interior_energy(&self, u: &[f64]) -> f64 {
        self.dirichlet(u) + self.potential_sum(u, self.grid.interior())
    }

    fn merit(&self, u: &[f64]) -> f64 {
        let v = if self.variational {
            self.interior_energy(u)
        } else {
            match self.gradient(u) {
                Some(grad) => self.residual_norm(&grad.g),
                None => f64::INFINITY,
            }
        };
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn residual_norm(&self, g: &[f64]) -> f64 {
        let mut total = 0.0;
        for (j, &k) in self.grid.interior().iter().enumerate() {
            let m = self.grid.cell_measures()[k];
            for c in 0..self.d {
                total += 0.5 * g[j * self.d + c].powi(2) / m;
            }
        }
        total
    }

    fn jacobian(&self, u: &[f64]) -> BandMatrix {
        let d = self.d;
        let mut jac = BandMatrix::zeros(self.unknowns(), self.half_band, self.half_band);
        for e in self.grid.edges() {
            let (pa, pb) = (self.pos[e.a], self.pos[e.b]);
            for c in 0..d {
                let s = (u[e.b * d + c] - u[e.a * d + c]) / e.length;
                let k = e.measure * flux_derivative(s, self.p, self.eps) / e.length;
                if pa != NONE {
                    jac.add(pa * d + c, pa * d + c, k);
                }
                if pb != NONE {
                    jac.add(pb * d + c, pb * d + c, k);
                }
                if pa != NONE && pb != NONE {
                    jac.add(pa * d + c, pb * d + c, -k);
                    jac.add(pb * d + c, pa * d + c, -k);
                }
            }
        }
        let mut block = alloc::vec![0.0; d * d];
        for (j, &k) in self.grid.interior().iter().enumerate() {
            self.coupling.jacobian(self.points[k], &u[k * d..k * d + d], &mut block);
            let m = self.grid.cell_measures()[k];
            for c in 0..d {
                for l in 0..d {
                    let v = m * self.weights[k * d + c] * block[c * d + l];
                    if v != 0.0 {
                        jac.add(j * d + c, j * d + l, v);
                    }
                }
            }
        }
        jac
    }

    fn cell_of(&self, i: usize) -> f64 {
        self.grid.cell_measures()[self.grid.interior()[i / self.d]]
    }

    fn step(&self, u: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
        let mut out = u.to_vec();
        for (j, &k) in self.grid.interior().iter().enumerate() {
            for c in 0..self.d {
                out[k * self.d + c] += t * dir[j * self.d + c];
            }
        }
        out
    }
}

struct Outcome {
    u: Vec<f64>,
    residual_sup: f64,
    residual_abs_sup: f64,
    trace: Vec<f64>,
    iterations: usize,
    gradient_steps: usize,
    converged: bool,
    stop_reason: Option<String>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn newton(setup: &Setup, mut u: Vec<f64>, opts: &SolveOptions, tol: f64) -> Result<Outcome> {
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut gradient_steps = 0;
    let boundary = setup.grid.boundary();
    let boundary_energy = if setup.variational {
        setup.potential_sum(&u, boundary)
    } else {
        0.0
    };
    loop {
        let grad = setup.gradient(&u).ok_or(Error::Divergence { iteration: iterations })?;
        let (res, res_abs) = setup.residuals(&grad);
        let g = grad.g;
        let m0 = if setup.variational {
            setup.interior_energy(&u)
        } else {
            setup.residual_norm(&g)
        };
        if !m0.is_finite() {
            return Err(Error::Divergence { iteration: iterations });
        }
        trace.push(if setup.variational { m0 + boundary_energy } else { m0 });
        let finish = |u: Vec<f64>, trace, converged, reason, iterations, gradient_steps| Outcome {
            u,
            residual_sup: res,
            residual_abs_sup: res_abs,
            trace,
            iterations,
            gradient_steps,
            converged,
            stop_reason: reason,
        };
        if res <= tol {
            return Ok(finish(u, trace, true, None, iterations, gradient_steps));
        }
        if iterations >= opts.max_iters {
            let why = format!("iteration cap {} reached", opts.max_iters);
            return Ok(finish(u, trace, false, Some(why), iterations, gradient_steps));
        }
        iterations += 1;

        let jac = setup.jacobian(&u);
        let n = g.len();
        let weighted: Vec<f64> = (0..n).map(|i| g[i] / setup.cell_of(i)).collect();
        // Gradient of the merit function over unknowns.
        let merit_grad = if setup.variational {
            g.clone()
        } else {
            jac.mul_transpose_vec(&weighted)
        };
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let diag_ref = (0..n)
            .map(|i| jac.get(i, i).abs() / setup.cell_of(i))
            .fold(0.0f64, f64::max)
            .max(1e-300);

        let mut accepted = false;
        let mut attempt = 0;
        while !accepted {
            let (dir, is_gradient) = match attempt {
                0 => (jac.clone().solve(&neg).ok(), false),
                1..=3 => {
                    let lambda = diag_ref * [1e-6, 1e-3, 1.0][attempt - 1];
                    let mut shifted = jac.clone();
                    for i in 0..n {
                        shifted.add(i, i, lambda * setup.cell_of(i));
                    }
                    (shifted.solve(&neg).ok(), false)
                }
                4 if opts.newton_fallback => {
                    let dir = if setup.variational {
                        weighted.iter().map(|v| -v).collect()
                    } else {
                        merit_grad.iter().map(|v| -v).collect()
                    };
                    (Some(dir), true)
                }
                _ => break,
            };
            attempt += 1;
            let Some(dir) = dir else { continue };
            let slope = dot(&merit_grad, &dir);
            if !(slope < 0.0) || !dir.iter().all(|v| v.is_finite()) {
                continue;
            }
            let mut t = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let trial = setup.step(&u, &dir, t);
                let mt = setup.merit(&trial);
                if mt <= m0 + ARMIJO * t * slope + LINE_SEARCH_SLACK * m0.abs() {
                    u = trial;
                    accepted = true;
                    if is_gradient {
                        gradient_steps += 1;
                    }
                    break;
                }
                t *= opts.line_search_beta;
            }
        }
        if !accepted {
            let why = String::from("line search found no decrease along Newton or gradient directions");
            return Ok(finish(u, trace, false, Some(why), iterations, gradient_steps));
        }
    }
}

fn flatten(fields: &[&[f64]], n: usize) -> Vec<f64> {
    let d = fields.len();
    let mut out = alloc::vec![0.0; n * d];
    for (c, f) in fields.iter().enumerate() {
        for k in 0..n {
            out[k * d + c] = f[k];
        }
    }
    out
}

fn unflatten(grid: &Grid, u: &[f64], d: usize) -> Vec<GridFunction> {
    (0..d)
        .map(|c| GridFunction::from_raw(grid.id(), (0..grid.len()).map(|k| u[k * d + c]).collect()))
        .collect()
}

/// Discrete harmonic (`p = 2`, zero right-hand side) extension of the
/// boundary values of `boundary`.
pub fn harmonic_extension(grid: &Grid, boundary: &GridFunction) -> Result<GridFunction> {
    let zero = Zero;
    let setup = Setup::new(grid, &zero, alloc::vec![1.0; grid.len()], 2.0, 0.0);
    let mut u = boundary.values().to_vec();
    for &k in grid.interior() {
        u[k] = 0.0;
    }
    let g = setup.gradient(&u).ok_or(Error::Divergence { iteration: 0 })?.g;
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let dir = setup.jacobian(&u).solve(&neg)?;
    let u = setup.step(&u, &dir, 1.0);
    Ok(GridFunction::from_raw(grid.id(), u))
}

fn check_boundary(grid: &Grid, fields: &[GridFunction], positive: bool) -> Result<()> {
    for (c, f) in fields.iter().enumerate() {
        if !f.lives_on(grid) {
            return Err(Error::Precondition(format!(
                "boundary field {} does not live on this grid",
                c + 1
            )));
        }
        for &k in grid.boundary() {
            let v = f[k];
            if !v.is_finite() || (positive && !(v > 0.0)) {
                let need = if positive { "positive and finite" } else { "finite" };
                return Err(Error::Precondition(format!(
                    "boundary value of component {} at node {k} is {v}; must be {need}",
                    c + 1
                )));
            }
        }
    }
    Ok(())
}

fn nodal_weights(grid: &Grid, sys: &SystemSpec) -> Result<Vec<f64>> {
    let d = sys.dim();
    let mut w = alloc::vec![0.0; grid.len() * d];
    for k in 0..grid.len() {
        let x = grid.point(k);
        for c in 0..d {
            let a = sys.weight(c, x);
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Precondition(format!(
                    "weight a_{} is {a} at node {k}; weights must be positive",
                    c + 1
                )));
            }
            w[k * d + c] = a;
        }
    }
    Ok(w)
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("p must exceed 1, got {p}")))
    }
}

/// Solves with optional ε-halving recheck, starting from `initial` (flat,
/// boundary entries already set).
fn run(
    grid: &Grid,
    coupling: &dyn Coupling,
    weights: Vec<f64>,
    initial: Vec<f64>,
    p: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let tol = opts.tolerance(p);
    let d = coupling.dim();
    let setup = Setup::new(grid, coupling, weights.clone(), p, opts.eps);
    let out = newton(&setup, initial, opts, tol)?;
    let mut eps_sensitivity = None;
    if opts.eps_recheck && p != 2.0 && out.converged && opts.eps > 0.0 {
        let half = Setup::new(grid, coupling, weights, p, 0.5 * opts.eps);
        let again = newton(&half, out.u.clone(), opts, tol)?;
        if again.converged {
            let change = out
                .u
                .iter()
                .zip(&again.u)
                .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
                .fold(0.0, f64::max);
            eps_sensitivity = Some(change);
        } else {
            eps_sensitivity = Some(f64::INFINITY);
        }
    }
    Ok(SolveReport {
        solution: unflatten(grid, &out.u, d),
        residual_sup: out.residual_sup,
        residual_abs_sup: out.residual_abs_sup,
        energy_trace: out.trace,
        merit: if setup.variational { Merit::Energy } else { Merit::ResidualNorm },
        iterations: out.iterations,
        gradient_steps: out.gradient_steps,
        converged: out.converged,
        tol,
        regularization_eps: opts.eps,
        eps_sensitivity,
        sandwich: None,
        stop_reason: out.stop_reason,
    })
}

/// Solves `Δₚu = g(u)` with `u = boundary` on `∂Ω`, starting from the
/// harmonic extension of the boundary data.
pub fn solve_dirichlet_scalar(
    grid: &Grid,
    g: &ClassFFunction,
    boundary: &GridFunction,
    p: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    check_p(p)?;
    check_boundary(grid, core::slice::from_ref(boundary), false)?;
    let start = harmonic_extension(grid, boundary)?;
    let coupling = ScalarCoupling(g.clone());
    run(grid, &coupling, alloc::vec![1.0; grid.len()], start.into_values(), p, opts)
}

/// Boundary value if the field is constant on `∂Ω`.
fn constant_on_boundary(grid: &Grid, f: &GridFunction) -> Option<f64> {
    let b = grid.boundary();
    let v = f[b[0]];
    b.iter().all(|&k| f[k] == v).then_some(v)
}

/// Solves the system with boundary data `αᵢ`. Constant data start from the
/// sub-solution `(ψ, …, ψ)` and get a sandwich report; other data start
/// from harmonic extensions.
pub fn solve_dirichlet_system(
    grid: &Grid,
    sys: &SystemSpec,
    boundary: &[GridFunction],
    p: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    check_p(p)?;
    let d = sys.dim();
    if boundary.len() != d {
        return Err(Error::Precondition(format!("{} boundary fields for {d} components", boundary.len())));
    }
    check_boundary(grid, boundary, true)?;
    let weights = nodal_weights(grid, sys)?;
    let constants: Option<Vec<f64>> = boundary.iter().map(|f| constant_on_boundary(grid, f)).collect();

    let Some(alphas) = constants else {
        let starts = boundary
            .iter()
            .map(|b| harmonic_extension(grid, b))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<&[f64]> = starts.iter().map(|f| f.values()).collect();
        return run(grid, sys.coupling(), weights, flatten(&views, grid.len()), p, opts);
    };

    let m = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let psi = subsolution_psi(grid, sys.upper_bound(), &weights, d, m, p, opts)?;
    let mut start = alloc::vec![0.0; grid.len() * d];
    for k in 0..grid.len() {
        for c in 0..d {
            start[k * d + c] = if grid.is_boundary(k) { alphas[c] } else { psi[k] };
        }
    }
    let mut report = run(grid, sys.coupling(), weights, start, p, opts)?;
    report.sandwich = Some(sandwich(&report.solution, psi, m, big_m));
    Ok(report)
}

/// `ψ` solving `Δₚψ = ā(x) g(ψ)`, `ψ = m` on `∂Ω`, with `ā = maxᵢ aᵢ`.
fn subsolution_psi(
    grid: &Grid,
    g: &ClassFFunction,
    weights: &[f64],
    d: usize,
    m: f64,
    p: f64,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    let a_max: Vec<f64> = (0..grid.len())
        .map(|k| weights[k * d..k * d + d].iter().copied().fold(0.0, f64::max))
        .collect();
    let coupling = ScalarCoupling(g.clone());
    let psi_opts = SolveOptions {
        eps_recheck: false,
        ..*opts
    };
    let r = run(grid, &coupling, a_max, alloc::vec![m; grid.len()], p, &psi_opts)?;
    if !r.converged {
        return Err(Error::Precondition(format!(
            "sub-solution solve did not converge (residual {:.3e})",
            r.residual_sup
        )));
    }
    Ok(r.solution.into_iter().next().unwrap())
}

fn sandwich(u: &[GridFunction], psi: GridFunction, m: f64, big_m: f64) -> SandwichReport {
    let mut min_above_lower = f64::INFINITY;
    let mut max_above_upper = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    let mut witness = None;
    for (c, f) in u.iter().enumerate() {
        for (k, &v) in f.values().iter().enumerate() {
            let below = psi[k] - v;
            let above = v - big_m;
            min_above_lower = min_above_lower.min(-below);
            max_above_upper = max_above_upper.max(above);
            let bad = below.max(above);
            if bad > SANDWICH_TOL && bad > worst {
                worst = bad;
                witness = Some((c, k));
            }
        }
    }
    SandwichReport {
        lower_boundary: m,
        upper: big_m,
        subsolution: psi,
        min_above_lower,
        max_above_upper,
        violated: witness.is_some(),
        witness,
    }
}

/// As [`solve_dirichlet_system`], warm-started from `initial` (interior
/// values kept, boundary values replaced by the data).
pub fn solve_dirichlet_system_from(
    grid: &Grid,
    sys: &SystemSpec,
    boundary: &[GridFunction],
    p: f64,
    opts: &SolveOptions,
    initial: &[GridFunction],
) -> Result<SolveReport> {
    check_p(p)?;
    let d = sys.dim();
    if boundary.len() != d || initial.len() != d {
        return Err(Error::Precondition(format!(
            "{} boundary and {} initial fields for {d} components",
            boundary.len(),
            initial.len()
        )));
    }
    check_boundary(grid, boundary, true)?;
    check_boundary(grid, initial, false)?;
    let weights = nodal_weights(grid, sys)?;
    let mut start = alloc::vec![0.0; grid.len() * d];
    for k in 0..grid.len() {
        for c in 0..d {
            start[k * d + c] = if grid.is_boundary(k) { boundary[c][k] } else { initial[c][k] };
        }
    }
    run(grid, sys.coupling(), weights, start, p, opts)
}

/// Interior residual `Δₚuᵢ − aᵢF_{uᵢ}(x, u)` per component (zero on `∂Ω`).
pub fn system_residual(grid: &Grid, sys: &SystemSpec, u: &[GridFunction], p: f64, eps: f64) -> Result<Vec<Vec<f64>>> {
    let d = sys.dim();
    if u.len() != d {
        return Err(Error::Precondition(format!("{} fields for {d} components", u.len())));
    }
    let weights = nodal_weights(grid, sys)?;
    let setup = Setup::new(grid, sys.coupling(), weights, p, eps);
    let views: Vec<&[f64]> = u.iter().map(|f| f.values()).collect();
    let flat = flatten(&views, grid.len());
    let g = setup.gradient(&flat).ok_or(Error::Evaluation { abscissa: f64::NAN })?.g;
    let mut out = alloc::vec![alloc::vec![0.0; grid.len()]; d];
    for (j, &k) in grid.interior().iter().enumerate() {
        let m = grid.cell_measures()[k];
        for c in 0..d {
            out[c][k] = -g[j * d + c] / m;
        }
    }
    Ok(out)
}
