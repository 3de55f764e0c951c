use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Debug;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::Point;
use crate::nonlinearity::ClassFFunction;
use crate::quad::{integrate, Tolerance};

/// The gradient `(F_{u₁}, …, F_{u_d})` of a coupling potential `F(x, u)`.
pub trait Coupling: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `F_{uᵢ}(x, u)` into `out[i]`.
    fn grad(&self, x: Point, u: &[f64], out: &mut [f64]);

    /// Writes `∂F_{uᵢ}/∂u_j` into `out[i·d + j]`; central differences by default.
    fn jacobian(&self, x: Point, u: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut plus = alloc::vec![0.0; d];
        let mut minus = alloc::vec![0.0; d];
        let mut w = u.to_vec();
        for j in 0..d {
            let step = 1e-6 * u[j].abs().max(1.0);
            w[j] = u[j] + step;
            self.grad(x, &w, &mut plus);
            w[j] = u[j] - step;
            self.grad(x, &w, &mut minus);
            w[j] = u[j];
            for i in 0..d {
                out[i * d + j] = (plus[i] - minus[i]) / (2.0 * step);
            }
        }
    }

    /// `F(x, u)`, when a potential is available.
    fn potential(&self, x: Point, u: &[f64]) -> Option<f64>;

    fn has_potential(&self) -> bool;

    fn describe(&self) -> String;
}

/// `d = 1`, `F_u = h(u)`, `F = H(u)`.
#[derive(Debug, Clone)]
pub struct ScalarCoupling(pub ClassFFunction);

impl Coupling for ScalarCoupling {
    fn dim(&self) -> usize {
        1
    }

    fn grad(&self, _: Point, u: &[f64], out: &mut [f64]) {
        out[0] = self.0.h(u[0]);
    }

    fn jacobian(&self, _: Point, u: &[f64], out: &mut [f64]) {
        out[0] = self.0.h_prime(u[0]);
    }

    fn potential(&self, _: Point, u: &[f64]) -> Option<f64> {
        self.0.antiderivative(u[0]).ok()
    }

    fn has_potential(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        self.0.label().to_string()
    }
}

/// Decoupled components: `F_{uᵢ} = hᵢ(uᵢ)`, `F = Σ Hᵢ(uᵢ)`.
#[derive(Debug, Clone)]
pub struct SeparableCoupling(pub Vec<ClassFFunction>);

impl Coupling for SeparableCoupling {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn grad(&self, _: Point, u: &[f64], out: &mut [f64]) {
        for (i, h) in self.0.iter().enumerate() {
            out[i] = h.h(u[i]);
        }
    }

    fn jacobian(&self, _: Point, u: &[f64], out: &mut [f64]) {
        let d = self.0.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, h) in self.0.iter().enumerate() {
            out[i * d + i] = h.h_prime(u[i]);
        }
    }

    fn potential(&self, _: Point, u: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for (h, &v) in self.0.iter().zip(u) {
            total += h.antiderivative(v).ok()?;
        }
        Some(total)
    }

    fn has_potential(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        let labels: Vec<&str> = self.0.iter().map(|h| h.label()).collect();
        format!("separable[{}]", labels.join(", "))
    }
}

/// Gradient components and an optional potential given as expressions in
/// `x, y, r, u1, …, ud` (and `u` when `d = 1`).
#[derive(Debug, Clone)]
pub struct ExprCoupling {
    grads: Vec<Expr>,
    potential: Option<Expr>,
}

fn coupling_vars(d: usize) -> Vec<String> {
    let mut vars: Vec<String> = ["x", "y", "r"].iter().map(|s| s.to_string()).collect();
    vars.extend((1..=d).map(|i| format!("u{i}")));
    if d == 1 {
        vars.push("u".to_string());
    }
    vars
}

impl ExprCoupling {
    pub fn new(grads: &[&str], potential: Option<&str>) -> Result<Self> {
        let d = grads.len();
        if d == 0 {
            return Err(Error::Precondition("a system needs at least one component".into()));
        }
        let owned = coupling_vars(d);
        let vars: Vec<&str> = owned.iter().map(|s| s.as_str()).collect();
        let grads = grads
            .iter()
            .map(|src| Expr::parse(src, &vars))
            .collect::<Result<Vec<_>>>()?;
        let potential = potential.map(|src| Expr::parse(src, &vars)).transpose()?;
        Ok(Self { grads, potential })
    }

    pub fn grad_sources(&self) -> Vec<&str> {
        self.grads.iter().map(|e| e.source()).collect()
    }

    fn args(&self, x: Point, u: &[f64]) -> Vec<f64> {
        let mut a = Vec::with_capacity(4 + u.len());
        a.extend_from_slice(&[x.x, x.y, x.r]);
        a.extend_from_slice(u);
        if u.len() == 1 {
            a.push(u[0]);
        }
        a
    }
}

impl Coupling for ExprCoupling {
    fn dim(&self) -> usize {
        self.grads.len()
    }

    fn grad(&self, x: Point, u: &[f64], out: &mut [f64]) {
        let a = self.args(x, u);
        for (o, e) in out.iter_mut().zip(&self.grads) {
            *o = e.eval(&a);
        }
    }

    fn potential(&self, x: Point, u: &[f64]) -> Option<f64> {
        if let Some(f) = &self.potential {
            return Some(f.eval(&self.args(x, u)));
        }
        if self.grads.len() != 1 {
            return None;
        }
        let g = &self.grads[0];
        let q = integrate(|s| g.eval(&[x.x, x.y, x.r, s, s]), 0.0, u[0], Tolerance::new(1e-12, 1e-12)).ok()?;
        Some(q.value)
    }

    fn has_potential(&self) -> bool {
        self.potential.is_some() || self.grads.len() == 1
    }

    fn describe(&self) -> String {
        format!("[{}]", self.grad_sources().join(", "))
    }
}

/// A positive weight field `a(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Constant(f64),
    /// Expression in `x, y, r`.
    Expr(Expr),
}

impl Weight {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Weight::Expr(Expr::parse(src, &["x", "y", "r"])?))
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Expr(e) => e.eval(&[x.x, x.y, x.r]),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::Constant(c) => format!("{c}"),
            Weight::Expr(e) => e.source().to_string(),
        }
    }
}

/// The system `Δₚuᵢ = aᵢ(x)·F_{uᵢ}(x, u)` with its comparison functions
/// `fᵢ ≤ F_{uᵢ}` (on the diagonal) and `F_{uᵢ} ≤ g`.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    coupling: Arc<dyn Coupling>,
    lower_bounds: Vec<ClassFFunction>,
    upper_bound: ClassFFunction,
    weights: Option<Vec<Weight>>,
}

impl SystemSpec {
    pub fn new(
        coupling: Arc<dyn Coupling>,
        lower_bounds: Vec<ClassFFunction>,
        upper_bound: ClassFFunction,
    ) -> Result<Self> {
        let d = coupling.dim();
        if d == 0 {
            return Err(Error::Precondition("a system needs at least one component".into()));
        }
        if lower_bounds.len() != d {
            return Err(Error::Precondition(format!(
                "{} lower bounds given for {d} components",
                lower_bounds.len()
            )));
        }
        Ok(Self {
            coupling,
            lower_bounds,
            upper_bound,
            weights: None,
        })
    }

    /// `Δₚu = g(u)`, with `g` as both comparison functions.
    pub fn scalar(g: ClassFFunction) -> Self {
        Self {
            coupling: Arc::new(ScalarCoupling(g.clone())),
            lower_bounds: alloc::vec![g.clone()],
            upper_bound: g,
            weights: None,
        }
    }

    /// `d` independent copies of `Δₚuᵢ = g(uᵢ)`.
    pub fn decoupled(g: ClassFFunction, d: usize) -> Self {
        Self {
            coupling: Arc::new(SeparableCoupling(alloc::vec![g.clone(); d])),
            lower_bounds: alloc::vec![g.clone(); d],
            upper_bound: g,
            weights: None,
        }
    }

    pub fn with_weights(mut self, weights: Vec<Weight>) -> Result<Self> {
        if weights.len() != self.dim() {
            return Err(Error::Precondition(format!(
                "{} weights given for {} components",
                weights.len(),
                self.dim()
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coupling.dim()
    }

    pub fn coupling(&self) -> &dyn Coupling {
        &*self.coupling
    }

    pub fn lower_bounds(&self) -> &[ClassFFunction] {
        &self.lower_bounds
    }

    pub fn upper_bound(&self) -> &ClassFFunction {
        &self.upper_bound
    }

    pub fn weights(&self) -> Option<&[Weight]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, component: usize, x: Point) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[component].eval(x))
    }

    /// Samples the structural hypotheses at the given points.
    pub fn validate_hypotheses(&self, points: &[Point]) -> HypothesisReport {
        let d = self.dim();
        let fallback = [Point { x: 0.0, y: 0.0, r: 0.0 }];
        let points = if points.is_empty() { &fallback[..] } else { points };
        let ts: Vec<f64> = (0..41).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 40.0)).collect();
        let close = |a: f64, b: f64| 1e-9 * a.abs().max(b.abs()).max(1.0);
        let mut lower = alloc::vec![SampledCheck::default(); d];
        let mut upper = alloc::vec![SampledCheck::default(); d];
        let mut weights_positive = SampledCheck::default();
        let mut buf = alloc::vec![0.0; d];
        for (pi, &x) in points.iter().enumerate() {
            for c in 0..d {
                let a = self.weight(c, x);
                weights_positive.record(if a.is_finite() { a } else { f64::NEG_INFINITY }, pi, 0.0, 0.0);
            }
            for &t in &ts {
                let u = alloc::vec![t; d];
                self.coupling.grad(x, &u, &mut buf);
                let g = self.upper_bound.h(t);
                for c in 0..d {
                    let f = self.lower_bounds[c].h(t);
                    let v = buf[c];
                    let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
                    lower[c].record(v - f, pi, t, close(v, f));
                    upper[c].record(g - v, pi, t, close(v, g));
                }
            }
        }
        let potential = if self.coupling.has_potential() && d > 1 {
            let mut check = SampledCheck::default();
            let samples = [0.3, 1.0, 2.5];
            let mut combos: Vec<Vec<f64>> = Vec::new();
            for &a in &samples {
                for &b in &samples {
                    let mut u = alloc::vec![a; d];
                    u[0] = b;
                    combos.push(u);
                }
            }
            for (pi, &x) in points.iter().enumerate().take(16) {
                for u in &combos {
                    self.coupling.grad(x, u, &mut buf);
                    for c in 0..d {
                        let step = 1e-5 * u[c].abs().max(1.0);
                        let mut w = u.clone();
                        w[c] += step;
                        let fp = self.coupling.potential(x, &w).unwrap_or(f64::NAN);
                        w[c] -= 2.0 * step;
                        let fm = self.coupling.potential(x, &w).unwrap_or(f64::NAN);
                        let fd = (fp - fm) / (2.0 * step);
                        let rel = (fd - buf[c]).abs() / (buf[c].abs() + 1e-6);
                        let margin = if rel.is_nan() { f64::NEG_INFINITY } else { 1e-4 - rel };
                        check.record(margin, pi, u[c], 0.0);
                    }
                }
            }
            Some(check)
        } else {
            None
        };
        HypothesisReport {
            lower,
            upper,
            potential,
            weights_positive,
        }
    }
}

/// Smallest sampled margin of an inequality `lhs ≥ rhs`, with its location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledCheck {
    pub passed: bool,
    pub worst_margin: f64,
    /// `(point index, t)` of the worst sample.
    pub witness: Option<(usize, f64)>,
}

impl Default for SampledCheck {
    fn default() -> Self {
        Self {
            passed: true,
            worst_margin: f64::INFINITY,
            witness: None,
        }
    }
}

impl SampledCheck {
    fn record(&mut self, margin: f64, point: usize, t: f64, slack: f64) {
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.witness = Some((point, t));
        }
        if !(margin >= -slack) {
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `F_{uᵢ}(x, t, …, t) ≥ fᵢ(t)` per component.
    pub lower: Vec<SampledCheck>,
    /// `g(t) ≥ F_{uᵢ}(x, t, …, t)` per component.
    pub upper: Vec<SampledCheck>,
    /// Central differences of `F` against the gradient, for `d > 1` potentials.
    pub potential: Option<SampledCheck>,
    pub weights_positive: SampledCheck,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.lower.iter().all(|c| c.passed)
            && self.upper.iter().all(|c| c.passed)
            && self.potential.is_none_or(|c| c.passed)
            && self.weights_positive.passed
            && self.weights_positive.worst_margin > 0.0
    }

    /// First failing hypothesis, for error messages.
    pub fn first_failure(&self) -> Option<String> {
        for (i, c) in self.lower.iter().enumerate() {
            if !c.passed {
                let t = c.witness.map_or(f64::NAN, |w| w.1);
                return Some(format!("lower bound f_{} exceeds F_u{} at t = {t:e}", i + 1, i + 1));
            }
        }
        for (i, c) in self.upper.iter().enumerate() {
            if !c.passed {
                let t = c.witness.map_or(f64::NAN, |w| w.1);
                return Some(format!("F_u{} exceeds upper bound g at t = {t:e}", i + 1));
            }
        }
        if let Some(c) = self.potential {
            if !c.passed {
                return Some("potential F does not reproduce the gradient components".into());
            }
        }
        if !(self.weights_positive.passed && self.weights_positive.worst_margin > 0.0) {
            return Some(format!(
                "weights must be positive (minimum {})",
                self.weights_positive.worst_margin
            ));
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn origin() -> Point {
        Point { x: 0.0, y: 0.0, r: 0.0 }
    }

    #[test]
    fn expression_coupling_evaluates_and_differentiates() {
        let c = ExprCoupling::new(&["u1*u2^2", "u1^2*u2"], Some("(u1*u2)^2/2")).unwrap();
        let mut g = [0.0; 2];
        c.grad(origin(), &[2.0, 3.0], &mut g);
        assert_eq!(g, [18.0, 12.0]);
        let mut j = [0.0; 4];
        c.jacobian(origin(), &[2.0, 3.0], &mut j);
        assert_relative_eq!(j[0], 9.0, epsilon = 1e-6);
        assert_relative_eq!(j[1], 12.0, epsilon = 1e-6);
        assert_relative_eq!(j[3], 4.0, epsilon = 1e-6);
        assert_eq!(c.potential(origin(), &[2.0, 3.0]), Some(18.0));
    }

    #[test]
    fn scalar_expression_potential_by_quadrature() {
        let c = ExprCoupling::new(&["u^3"], None).unwrap();
        assert!(c.has_potential());
        assert_relative_eq!(c.potential(origin(), &[2.0]).unwrap(), 4.0, epsilon = 1e-12);
        let c = ExprCoupling::new(&["u1", "u2"], None).unwrap();
        assert!(!c.has_potential());
    }

    #[test]
    fn hypotheses_hold_for_coupled_example() {
        let sq = ClassFFunction::power(1.0, 3.0).unwrap();
        let sys = SystemSpec::new(
            Arc::new(ExprCoupling::new(&["u1*u2^2", "u1^2*u2"], Some("(u1*u2)^2/2")).unwrap()),
            alloc::vec![sq.clone(), sq.clone()],
            sq,
        )
        .unwrap();
        let r = sys.validate_hypotheses(&[origin()]);
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn hypotheses_flag_violations() {
        let cube = ClassFFunction::power(1.0, 3.0).unwrap();
        let sq = ClassFFunction::power(1.0, 2.0).unwrap();
        // F_u = u³ exceeds g = t² for t > 1.
        let sys = SystemSpec::new(Arc::new(ScalarCoupling(cube.clone())), alloc::vec![cube], sq).unwrap();
        let r = sys.validate_hypotheses(&[origin()]);
        assert!(r.lower[0].passed);
        assert!(!r.upper[0].passed);
        assert!(r.first_failure().unwrap().contains("upper bound"));

        let bad_f = SystemSpec::new(
            Arc::new(ExprCoupling::new(&["u1*u2^2", "u1^2*u2"], Some("u1*u2")).unwrap()),
            alloc::vec![ClassFFunction::power(1.0, 3.0).unwrap(); 2],
            ClassFFunction::power(1.0, 3.0).unwrap(),
        )
        .unwrap();
        assert!(!bad_f.validate_hypotheses(&[origin()]).potential.unwrap().passed);
    }

    #[test]
    fn weights_must_be_positive() {
        let g = ClassFFunction::power(1.0, 2.0).unwrap();
        let sys = SystemSpec::scalar(g).with_weights(alloc::vec![Weight::parse("r - 1").unwrap()]).unwrap();
        let p = Point { x: 0.5, y: 0.0, r: 0.5 };
        assert!(!sys.validate_hypotheses(&[p]).passed());
    }
}
