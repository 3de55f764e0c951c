//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Stopping rule: the estimated error must fall below `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    fn bound(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |f: &mut F, x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { abscissa: x })
        }
    };
    let fc = eval(f, center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let s = eval(f, center - dx)? + eval(f, center + dx)?;
        kronrod += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Panel { a, b, value, error })
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
            converged: true,
        });
    }
    if b < a {
        let q = integrate(f, b, a, tol)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    let first = gk15(&mut f, a, b)?;
    let mut panels: Vec<Panel> = alloc::vec![first];
    let mut value = first.value;
    let mut error = first.error;
    while error > tol.bound(value) {
        if panels.len() >= MAX_INTERVALS {
            return Ok(finish(&panels, false));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 4.0 * f64::EPSILON * mid.abs() {
            return Ok(finish(&panels, false));
        }
        let left = gk15(&mut f, p.a, mid)?;
        let right = gk15(&mut f, mid, p.b)?;
        panels[worst] = left;
        panels.push(right);
        value += left.value + right.value - p.value;
        error += left.error + right.error - p.error;
        if panels.len().is_multiple_of(64) {
            value = panels.iter().map(|p| p.value).sum();
            error = panels.iter().map(|p| p.error).sum();
        }
    }
    Ok(finish(&panels, true))
}

fn finish(panels: &[Panel], converged: bool) -> Quadrature {
    // Re-sum in abscissa order so the result does not depend on the
    // refinement history.
    let mut sorted: Vec<Panel> = panels.to_vec();
    sorted.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(core::cmp::Ordering::Equal));
    Quadrature {
        value: sorted.iter().map(|p| p.value).sum(),
        error: sorted.iter().map(|p| p.error).sum(),
        intervals: sorted.len(),
        converged,
    }
}

/// Integrates over `[a, b] ⊂ (0, ∞)` after the substitution `t = e^s`,
/// which resolves integrands varying on every scale between `a` and `b`.
pub fn integrate_log<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "log-substituted quadrature needs positive bounds, got [{a}, {b}]"
        )));
    }
    integrate(
        |s| {
            let t = s.exp();
            f(t) * t
        },
        a.ln(),
        b.ln(),
        tol,
    )
}
