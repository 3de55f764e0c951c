//! Candidate class-𝓕 nonlinearities, the Keller–Osserman test, and the
//! implicit transform `Φ(w) = ∫_w^∞ g(t)^{-1/(p-1)} dt` with its inverse.
//!
//! A class-𝓕 function `h` is C¹ on `[0, ∞)` with `h(0) = 0`, `h' ≥ 0`,
//! `h > 0` on `(0, ∞)`, and satisfies `∫_1^∞ H(t)^{-1/p} dt < ∞` where `H`
//! is the primitive of `h`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{integrate, integrate_log, Tolerance};
use crate::tail::{fit_tail, MonotoneTransform, TransformBuildError, UpperLimit, CONVERGENCE_MARGIN};

/// Built-in parametric families plus free-form expressions in `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `c·t^γ`, extended oddly to negative arguments.
    Power { c: f64, gamma: f64 },
    /// `c·(eᵗ − 1)`.
    Expm1 { c: f64 },
    Sum(Box<Family>, Box<Family>),
    /// Arbitrary arithmetic in `t`; derivatives by central differences.
    Expr(Expr),
}

impl Family {
    fn h(&self, t: f64) -> f64 {
        match self {
            Family::Power { c, gamma } => c * t.signum() * t.abs().powf(*gamma),
            Family::Expm1 { c } => c * t.exp_m1(),
            Family::Sum(a, b) => a.h(t) + b.h(t),
            Family::Expr(e) => e.eval(&[t]),
        }
    }

    fn h_prime(&self, t: f64) -> f64 {
        match self {
            Family::Power { c, gamma } => {
                if t == 0.0 {
                    if *gamma > 1.0 {
                        0.0
                    } else if *gamma == 1.0 {
                        *c
                    } else {
                        f64::INFINITY
                    }
                } else {
                    c * gamma * t.abs().powf(gamma - 1.0)
                }
            }
            Family::Expm1 { c } => c * t.exp(),
            Family::Sum(a, b) => a.h_prime(t) + b.h_prime(t),
            Family::Expr(e) => {
                let step = 1e-6 * t.abs().max(1.0);
                (e.eval(&[t + step]) - e.eval(&[t - step])) / (2.0 * step)
            }
        }
    }

    /// Closed-form primitive where the family has one.
    fn primitive_exact(&self, t: f64) -> Option<f64> {
        match self {
            Family::Power { c, gamma } => Some(c * t.abs().powf(gamma + 1.0) / (gamma + 1.0)),
            Family::Expm1 { c } => {
                // eᵗ − 1 − t, with the cancellation near 0 handled by series.
                let v = if t.abs() < 1e-3 {
                    let t2 = t * t;
                    t2 * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)))
                } else {
                    t.exp_m1() - t
                };
                Some(c * v)
            }
            Family::Sum(a, b) => Some(a.primitive_exact(t)? + b.primitive_exact(t)?),
            Family::Expr(_) => None,
        }
    }

    fn spec(&self) -> String {
        match self {
            Family::Power { c, gamma } => format!("power({c},{gamma})"),
            Family::Expm1 { c } => format!("expm1({c})"),
            Family::Sum(a, b) => format!("sum({},{})", a.spec(), b.spec()),
            Family::Expr(e) => format!("expr(\"{}\")", e.source()),
        }
    }
}

/// A scalar nonlinearity `h: [0, ∞) → [0, ∞)`, candidate member of class 𝓕.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFFunction {
    family: Family,
    label: String,
}

impl ClassFFunction {
    pub fn power(c: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "power(c, gamma) needs c > 0 and gamma > 0, got c = {c}, gamma = {gamma}"
            )));
        }
        Ok(Self::from_family(Family::Power { c, gamma }))
    }

    pub fn expm1(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("expm1(c) needs c > 0, got {c}")));
        }
        Ok(Self::from_family(Family::Expm1 { c }))
    }

    pub fn sum(a: ClassFFunction, b: ClassFFunction) -> Self {
        Self::from_family(Family::Sum(Box::new(a.family), Box::new(b.family)))
    }

    pub fn expression(source: &str) -> Result<Self> {
        Ok(Self::from_family(Family::Expr(Expr::parse(source, &["t"])?)))
    }

    /// Parses `power(c,gamma)`, `expm1(c)`, `sum(spec,spec)` or `expr("...")`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut p = SpecParser { src: spec, pos: 0 };
        let f = p.family()?;
        p.skip_ws();
        if p.pos != spec.len() {
            return Err(p.error("trailing input after nonlinearity"));
        }
        Ok(f)
    }

    fn from_family(family: Family) -> Self {
        let label = family.spec();
        Self { family, label }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Canonical grammar form, independent of any custom label.
    pub fn spec(&self) -> String {
        self.family.spec()
    }

    /// Named parameters of a pure power or exponential family.
    pub fn family_params(&self) -> Vec<(&'static str, f64)> {
        match &self.family {
            Family::Power { c, gamma } => alloc::vec![("c", *c), ("gamma", *gamma)],
            Family::Expm1 { c } => alloc::vec![("c", *c)],
            _ => Vec::new(),
        }
    }

    /// `(c, γ)` when this is a pure power `c·t^γ`.
    pub fn power_params(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Power { c, gamma } => Some((c, gamma)),
            _ => None,
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        self.family.h(t)
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        self.family.h_prime(t)
    }

    /// `H(t) = ∫_0^t h`, in closed form for the built-in families and by
    /// adaptive quadrature for expressions.
    pub fn antiderivative(&self, t: f64) -> Result<f64> {
        match self.family.primitive_exact(t) {
            Some(v) => Ok(v),
            None => Ok(integrate(|s| self.h(s), 0.0, t, Tolerance::new(1e-12, 1e-13))?.value),
        }
    }
}

struct SpecParser<'a> {
    src: &'a str,
    pos: usize,
}

impl SpecParser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..]
            .starts_with(|c: char| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        {
            self.pos += 1;
        }
        self.src[start..self.pos].parse().map_err(|_| Error::Parse {
            position: start,
            message: format!("malformed number '{}'", &self.src[start..self.pos]),
        })
    }

    fn family(&mut self) -> Result<ClassFFunction> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let name = self.ident().to_string();
        let with_pos = |e: Error| match e {
            Error::Domain(m) => Error::Parse {
                position: start,
                message: m,
            },
            e => e,
        };
        match name.as_str() {
            "power" => {
                self.eat('(')?;
                let c = self.number()?;
                self.eat(',')?;
                let gamma = self.number()?;
                self.eat(')')?;
                ClassFFunction::power(c, gamma).map_err(with_pos)
            }
            "expm1" => {
                self.eat('(')?;
                let c = self.number()?;
                self.eat(')')?;
                ClassFFunction::expm1(c).map_err(with_pos)
            }
            "sum" => {
                self.eat('(')?;
                let a = self.family()?;
                self.eat(',')?;
                let b = self.family()?;
                self.eat(')')?;
                Ok(ClassFFunction::sum(a, b))
            }
            "expr" => {
                self.eat('(')?;
                self.eat('"')?;
                let body_start = self.pos;
                let Some(len) = self.src[self.pos..].find('"') else {
                    return Err(self.error("unterminated expression string"));
                };
                let body = &self.src[body_start..body_start + len];
                self.pos = body_start + len + 1;
                self.eat(')')?;
                ClassFFunction::expression(body).map_err(|e| match e {
                    Error::Parse { position, message } => Error::Parse {
                        position: body_start + position,
                        message,
                    },
                    e => e,
                })
            }
            "" => Err(self.error("expected nonlinearity name")),
            other => Err(Error::Parse {
                position: start,
                message: format!("unknown nonlinearity family '{other}' (expected power, expm1, sum, expr)"),
            }),
        }
    }
}

/// `H(t) = ∫_0^t h(s) ds` by adaptive quadrature (absolute tolerance
/// `1e-10`, relaxed to relative `1e-14` when `H` is large).
pub fn primitive_h(f: &ClassFFunction, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("primitive needs finite t >= 0, got {t}")));
    }
    Ok(integrate(|s| f.h(s), 0.0, t, Tolerance::new(1e-10, 1e-14))?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KellerOssermanVerdict {
    pub converges: bool,
    /// Local exponent `q` of `H(t)^{-1/p} ~ t^{-q}` at the truncation point.
    pub tail_exponent: f64,
    /// `∫_1^T H(t)^{-1/p} dt`.
    pub integral_estimate: f64,
    /// Remainder bound `H(T)^{-1/p}·T/(q−1)`; infinite when divergent.
    pub tail_bound: f64,
    /// Truncation point used (below the requested one if `H` overflows).
    pub t_max: f64,
    /// `|q − 1| ≤ margin`: reported divergent, flagged as a boundary case.
    pub boundary_case: bool,
}

impl KellerOssermanVerdict {
    pub fn total(&self) -> f64 {
        self.integral_estimate + self.tail_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoOptions {
    pub t_max: f64,
    pub tol: f64,
}

impl Default for KoOptions {
    fn default() -> Self {
        Self { t_max: 1e8, tol: 1e-8 }
    }
}

pub fn keller_osserman_check(f: &ClassFFunction, p: f64) -> Result<KellerOssermanVerdict> {
    keller_osserman_check_with(f, p, KoOptions::default())
}

pub fn keller_osserman_check_with(f: &ClassFFunction, p: f64, opts: KoOptions) -> Result<KellerOssermanVerdict> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    if !(opts.t_max > 10.0) {
        return Err(Error::Domain(format!("T_max must exceed 10, got {}", opts.t_max)));
    }
    // H is nondecreasing for admissible h; probe each decade for H > 0.
    let mut t = 1.0;
    while t <= opts.t_max {
        let h_val = f.antiderivative(t)?;
        if h_val.is_nan() {
            return Err(Error::Evaluation { abscissa: t });
        }
        if !(h_val > 0.0) {
            return Err(Error::Domain(format!("H({t}) = {h_val} is not positive for {}", f.label())));
        }
        t *= 10.0;
    }
    let kernel = |t: f64| match f.antiderivative(t) {
        Ok(v) => v.powf(-1.0 / p),
        Err(_) => f64::NAN,
    };
    let fit = fit_tail(kernel, opts.t_max)?;
    let integral = integrate_log(kernel, 1.0, fit.t_end, Tolerance::absolute(opts.tol))?;
    let converges = fit.converges();
    Ok(KellerOssermanVerdict {
        converges,
        tail_exponent: fit.exponent,
        integral_estimate: integral.value,
        tail_bound: if converges { fit.remainder } else { f64::INFINITY },
        t_max: fit.t_end,
        boundary_case: (fit.exponent - 1.0).abs() <= CONVERGENCE_MARGIN,
    })
}

/// Default lower cutoff of the domain searched by [`PhiTransform::invert`].
pub const PHI_W_MIN: f64 = 1e-8;
/// Default upper cutoff of the domain searched by [`PhiTransform::invert`].
pub const PHI_W_MAX: f64 = 1e12;
const PHI_ANCHOR: f64 = 1e16;

/// `Φ(w) = ∫_w^∞ g(t)^{-1/(p-1)} dt`, tabulated once and inverted on demand.
#[derive(Debug)]
pub struct PhiTransform {
    g: ClassFFunction,
    p: f64,
    inner: MonotoneTransform,
}

impl PhiTransform {
    pub fn new(g: &ClassFFunction, p: f64) -> Result<Self> {
        Self::with_cutoffs(g, p, PHI_W_MIN, PHI_W_MAX)
    }

    pub fn with_cutoffs(g: &ClassFFunction, p: f64, w_min: f64, w_max: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        let gc = g.clone();
        let exponent = -1.0 / (p - 1.0);
        let kernel = Box::new(move |t: f64| gc.h(t).powf(exponent));
        let inner = MonotoneTransform::new(kernel, UpperLimit::Infinite { anchor: PHI_ANCHOR }, w_min, w_max)
            .map_err(|e| match e {
                TransformBuildError::Divergent(fit) => Error::TransformUndefined {
                    label: g.label().to_string(),
                    p,
                    exponent: fit.exponent,
                },
                TransformBuildError::Numeric(e) => e,
            })?;
        Ok(Self {
            g: g.clone(),
            p,
            inner,
        })
    }

    pub fn g(&self) -> &ClassFFunction {
        &self.g
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Fitted decay exponent of the kernel `g^{-1/(p-1)}`.
    pub fn tail_exponent(&self) -> f64 {
        self.inner.tail().map_or(f64::NAN, |t| t.exponent)
    }

    pub fn eval(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::Domain(format!("Phi needs w > 0, got {w}")));
        }
        self.inner.eval(w)
    }

    /// `Φ'(w) = −g(w)^{-1/(p-1)}`.
    pub fn derivative(&self, w: f64) -> f64 {
        -self.inner.kernel(w)
    }

    /// `(Φ(w_max), Φ(w_min))`, the open interval of attainable values.
    pub fn range(&self) -> Result<(f64, f64)> {
        Ok((
            self.inner.eval(self.inner.upper_cutoff())?,
            self.inner.eval(self.inner.lower_cutoff())?,
        ))
    }

    pub fn invert(&self, z: f64) -> Result<f64> {
        self.inner.invert(z)
    }
}

pub fn phi_transform(g: &ClassFFunction, p: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("Phi needs w > 0, got {w}")));
    }
    PhiTransform::new(g, p)?.eval(w)
}

pub fn phi_invert(g: &ClassFFunction, p: f64, z: f64) -> Result<f64> {
    PhiTransform::new(g, p)?.invert(z)
}

/// Pass/fail for one structural property, with the worst sampled point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyCheck {
    pub passed: bool,
    /// Abscissa of the worst sample when the check failed.
    pub witness: Option<f64>,
    /// The worst value observed (meaning depends on the property).
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassFDiagnostics {
    pub label: String,
    pub zero_at_origin: PropertyCheck,
    pub positivity: PropertyCheck,
    pub monotonicity: PropertyCheck,
    pub derivative_consistency: PropertyCheck,
    pub keller_osserman: core::result::Result<KellerOssermanVerdict, Error>,
}

impl ClassFDiagnostics {
    pub fn keller_osserman_passed(&self) -> bool {
        matches!(self.keller_osserman, Ok(v) if v.converges)
    }

    pub fn structural_passed(&self) -> bool {
        self.zero_at_origin.passed
            && self.positivity.passed
            && self.monotonicity.passed
            && self.derivative_consistency.passed
    }

    pub fn all_passed(&self) -> bool {
        self.structural_passed() && self.keller_osserman_passed()
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()) {
            break;
        }
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Checks the structural class-𝓕 properties on a log-spaced sample of
/// `(0, 1e6]` and runs the Keller–Osserman test. Failures are data.
pub fn class_f_validate(f: &ClassFFunction, p: f64, sample_count: usize) -> ClassFDiagnostics {
    let n = sample_count.max(16);
    let samples: Vec<f64> = (0..n)
        .map(|i| 1e-6 * 1e12f64.powf(i as f64 / (n - 1) as f64))
        .collect();

    let h0 = f.h(0.0);
    let zero_at_origin = PropertyCheck {
        passed: h0.abs() <= 1e-12,
        witness: if h0.abs() <= 1e-12 { None } else { Some(0.0) },
        worst: h0.abs(),
    };

    let mut worst_i = 0;
    let mut worst = f64::INFINITY;
    for (i, &t) in samples.iter().enumerate() {
        let v = f.h(t);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v < worst {
            worst = v;
            worst_i = i;
        }
    }
    let positivity = if worst > 0.0 {
        PropertyCheck {
            passed: true,
            witness: None,
            worst,
        }
    } else {
        let lo = if worst_i == 0 { samples[0] * 0.5 } else { samples[worst_i - 1] };
        let hi = samples.get(worst_i + 1).copied().unwrap_or(samples[worst_i]);
        let t = if worst.is_finite() {
            golden_min(|t| f.h(t), lo, hi)
        } else {
            samples[worst_i]
        };
        PropertyCheck {
            passed: false,
            witness: Some(t),
            worst: f.h(t).min(worst),
        }
    };

    let mut mono_worst = f64::INFINITY;
    let mut mono_witness = 0.0;
    for w in samples.windows(2) {
        let d = f.h_prime(w[0]);
        if d.is_finite() && d < mono_worst {
            mono_worst = d;
            mono_witness = w[0];
        }
        let (a, b) = (f.h(w[0]), f.h(w[1]));
        if a.is_finite() && b.is_finite() && b < a {
            let slope = (b - a) / (w[1] - w[0]);
            if slope < mono_worst {
                mono_worst = slope;
                mono_witness = w[0];
            }
        }
    }
    let monotonicity = PropertyCheck {
        passed: mono_worst >= -1e-10,
        witness: (mono_worst < -1e-10).then_some(mono_witness),
        worst: mono_worst,
    };

    let mut deriv_worst = 0.0f64;
    let mut deriv_witness = None;
    for &t in samples.iter().filter(|&&t| t >= 1e-3) {
        let step = 1e-5 * t;
        let (a, b, d) = (f.h(t + step), f.h(t - step), f.h_prime(t));
        if !(a.is_finite() && b.is_finite() && d.is_finite()) {
            continue;
        }
        let fd = (a - b) / (2.0 * step);
        let scale = d.abs().max(fd.abs()).max(1e-300);
        let rel = (fd - d).abs() / scale;
        if rel > deriv_worst {
            deriv_worst = rel;
            deriv_witness = Some(t);
        }
    }
    let derivative_consistency = PropertyCheck {
        passed: deriv_worst <= 1e-4,
        witness: if deriv_worst <= 1e-4 { None } else { deriv_witness },
        worst: deriv_worst,
    };

    ClassFDiagnostics {
        label: f.label().to_string(),
        zero_at_origin,
        positivity,
        monotonicity,
        derivative_consistency,
        keller_osserman: keller_osserman_check(f, p),
    }
}
