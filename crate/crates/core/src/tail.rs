//! Improper integrals of positive, eventually power-like kernels.
//!
//! Tails are certified by fitting the local decay exponent `q` of the kernel
//! over the last decade before a truncation point `T`; when `q > 1` the
//! remainder is bounded by `k(T)·T/(q−1)`.  [`MonotoneTransform`] builds
//! `K(w) = ∫_w^U k(t) dt` on a cached knot table and inverts it.

use alloc::boxed::Box;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad::{integrate_log, Tolerance};

/// Tail exponents must exceed `1 + CONVERGENCE_MARGIN` to certify convergence.
pub const CONVERGENCE_MARGIN: f64 = 0.01;

const FIT_POINTS: usize = 11;
const OSCILLATION_SPREAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Truncation point actually used (smaller than requested if the kernel
    /// underflows or overflows first).
    pub t_end: f64,
    /// Local decay exponent `q` of `k(t) ~ t^{-q}` at `t_end`.
    pub exponent: f64,
    pub kernel_at_end: f64,
    /// `max q − min q` across the fitted decade.
    pub spread: f64,
    /// `k(T)·T/(q−1)` when `q > 1`, otherwise infinite.
    pub remainder: f64,
}

impl TailFit {
    pub fn converges(&self) -> bool {
        self.exponent > 1.0 + CONVERGENCE_MARGIN
    }
}

fn usable(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Fits the decay exponent of `kernel` over `[T/10, T]`.
pub fn fit_tail<K: Fn(f64) -> f64>(kernel: K, t_target: f64) -> Result<TailFit> {
    let mut t_end = t_target;
    let v = kernel(t_end);
    if v.is_nan() {
        return Err(Error::Evaluation { abscissa: t_end });
    }
    if !usable(v) {
        // Over/underflow: walk down by decades, then bisect in log t for the
        // last usable point.
        let mut lo = t_end;
        loop {
            lo /= 10.0;
            if lo < 1e-300 {
                return Err(Error::Evaluation { abscissa: t_target });
            }
            let v = kernel(lo);
            if v.is_nan() {
                return Err(Error::Evaluation { abscissa: lo });
            }
            if usable(v) {
                break;
            }
        }
        let mut hi = lo * 10.0;
        for _ in 0..60 {
            let mid = (lo * hi).sqrt();
            if usable(kernel(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        t_end = lo;
    }
    let mut log_k = [0.0; FIT_POINTS];
    let mut log_t = [0.0; FIT_POINTS];
    for i in 0..FIT_POINTS {
        let t = t_end * 10f64.powf(-1.0 + i as f64 / (FIT_POINTS - 1) as f64);
        let v = kernel(t);
        if !usable(v) {
            return Err(Error::Evaluation { abscissa: t });
        }
        log_t[i] = t.ln();
        log_k[i] = v.ln();
    }
    let mut q = [0.0; FIT_POINTS - 1];
    for i in 0..FIT_POINTS - 1 {
        q[i] = -(log_k[i + 1] - log_k[i]) / (log_t[i + 1] - log_t[i]);
    }
    let (mut qmin, mut qmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in &q {
        qmin = qmin.min(x);
        qmax = qmax.max(x);
    }
    let spread = qmax - qmin;
    let exponent = q[FIT_POINTS - 2];
    let mut sign_changes = 0;
    let mut last_sign = 0i8;
    for w in q.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= 1e-3 * (1.0 + exponent.abs()) {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if last_sign != 0 && s != last_sign {
            sign_changes += 1;
        }
        last_sign = s;
    }
    if sign_changes >= 2 && spread > OSCILLATION_SPREAD {
        return Err(Error::Indeterminate { t_max: t_end, spread });
    }
    let kernel_at_end = log_k[FIT_POINTS - 1].exp();
    let remainder = if exponent > 1.0 {
        kernel_at_end * t_end / (exponent - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(TailFit {
        t_end,
        exponent,
        kernel_at_end,
        spread,
        remainder,
    })
}

/// Upper end of a [`MonotoneTransform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperLimit {
    /// Integrate to `anchor`, then add the certified power-law remainder.
    Infinite { anchor: f64 },
    Finite(f64),
}

const KNOTS_PER_DECADE: f64 = 8.0;
const SEGMENT_TOL: Tolerance = Tolerance::new(1e-13, 1e-13);

/// `K(w) = ∫_w^U k(t) dt` for a positive kernel `k`, strictly decreasing in `w`.
pub struct MonotoneTransform {
    kernel: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    tail: Option<TailFit>,
    upper: f64,
    w_min: f64,
    w_max: f64,
}

impl core::fmt::Debug for MonotoneTransform {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MonotoneTransform")
            .field("w_min", &self.w_min)
            .field("w_max", &self.w_max)
            .field("upper", &self.upper)
            .field("tail", &self.tail)
            .finish()
    }
}

impl MonotoneTransform {
    /// Tabulates `K` on log-spaced knots over `[w_min, U]`.
    ///
    /// For an infinite upper limit the tail must certify convergence; the
    /// caller maps the returned `TailFit` into its own error when it does not.
    pub fn new(
        kernel: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        upper: UpperLimit,
        w_min: f64,
        w_max: f64,
    ) -> core::result::Result<Self, TransformBuildError> {
        let (top, tail) = match upper {
            UpperLimit::Infinite { anchor } => {
                let fit = fit_tail(&kernel, anchor).map_err(TransformBuildError::Numeric)?;
                if !fit.converges() {
                    return Err(TransformBuildError::Divergent(fit));
                }
                (fit.t_end, Some(fit))
            }
            UpperLimit::Finite(u) => (u, None),
        };
        if !(w_min > 0.0 && w_min < top) {
            return Err(TransformBuildError::Numeric(Error::Domain(alloc::format!(
                "lower cutoff {w_min} must lie in (0, {top})"
            ))));
        }
        let decades = (top / w_min).log10();
        let count = ((decades * KNOTS_PER_DECADE).ceil() as usize).max(1);
        let mut knots = Vec::with_capacity(count + 1);
        for i in 0..=count {
            knots.push(w_min * (top / w_min).powf(i as f64 / count as f64));
        }
        knots[count] = top;
        let mut cumulative = alloc::vec![0.0; count + 1];
        cumulative[count] = tail.map_or(0.0, |t| t.remainder);
        for i in (0..count).rev() {
            let seg = integrate_log(&kernel, knots[i], knots[i + 1], SEGMENT_TOL)
                .map_err(TransformBuildError::Numeric)?;
            cumulative[i] = cumulative[i + 1] + seg.value;
        }
        Ok(Self {
            kernel,
            knots,
            cumulative,
            tail,
            upper: top,
            w_min,
            w_max,
        })
    }

    pub fn kernel(&self, t: f64) -> f64 {
        (self.kernel)(t)
    }

    pub fn tail(&self) -> Option<&TailFit> {
        self.tail.as_ref()
    }

    pub fn lower_cutoff(&self) -> f64 {
        self.w_min
    }

    pub fn upper_cutoff(&self) -> f64 {
        self.w_max
    }

    /// `K(w)` for `w > 0`.
    pub fn eval(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Domain(alloc::format!("argument must be positive, got {w}")));
        }
        if w >= self.upper {
            return Ok(match self.tail {
                // Continue the fitted power law beyond the anchor.
                Some(t) => {
                    let k = self.kernel(w);
                    if usable(k) {
                        k * w / (t.exponent - 1.0)
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            });
        }
        let j = match self.knots.binary_search_by(|k| k.partial_cmp(&w).unwrap()) {
            Ok(j) => return Ok(self.cumulative[j]),
            Err(j) => j,
        };
        if j == 0 {
            let seg = integrate_log(&self.kernel, w, self.knots[0], SEGMENT_TOL)?;
            return Ok(self.cumulative[0] + seg.value);
        }
        let seg = integrate_log(&self.kernel, w, self.knots[j], SEGMENT_TOL)?;
        Ok(self.cumulative[j] + seg.value)
    }

    /// Solves `K(w) = z` on `[w_min, w_max]`: bracket expansion from `w = 1`
    /// by doubling/halving, then bisection-safeguarded Newton steps
    /// (`K'(w) = −k(w)`) until the bracket's relative width is `1e-12`.
    pub fn invert(&self, z: f64) -> Result<f64> {
        let at_min = self.eval(self.w_min)?;
        let at_max = self.eval(self.w_max)?;
        if !(z < at_min && z > at_max) {
            return Err(Error::Range { z, at_min, at_max });
        }
        let mut w = 1.0f64.clamp(self.w_min, self.w_max);
        let mut kw = self.eval(w)?;
        let (mut lo, mut hi);
        if kw > z {
            lo = w;
            loop {
                hi = (lo * 2.0).min(self.w_max);
                let kh = self.eval(hi)?;
                if kh <= z {
                    w = hi;
                    kw = kh;
                    break;
                }
                lo = hi;
            }
        } else {
            hi = w;
            loop {
                lo = (hi * 0.5).max(self.w_min);
                let kl = self.eval(lo)?;
                if kl >= z {
                    w = lo;
                    kw = kl;
                    break;
                }
                hi = lo;
            }
        }
        // Invariant: K(lo) >= z >= K(hi).
        for _ in 0..400 {
            if kw == z {
                return Ok(w);
            }
            let slope = -self.kernel(w);
            let mut next = if usable(-slope) { w - (kw - z) / slope } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let knext = self.eval(next)?;
            if knext > z {
                lo = next;
            } else {
                hi = next;
            }
            let step = (next - w).abs();
            w = next;
            kw = knext;
            if (hi - lo) <= 1e-12 * hi || step <= 1e-15 * w {
                break;
            }
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformBuildError {
    /// The fitted tail does not certify convergence.
    Divergent(TailFit),
    Numeric(Error),
}
