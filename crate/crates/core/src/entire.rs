//! Entire large solutions on ℝᴺ: the radial upper solution `z`, the
//! sub-solution `w = Φ⁻¹∘z`, and exhaustion by balls.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{build_grid, DomainSpec, Grid, GridFunction, Point};
use crate::nonlinearity::{ClassFFunction, PhiTransform};
use crate::plap::{solve_dirichlet_system, SolveOptions, SolveReport, SystemSpec, Weight};
use crate::quad::{integrate, Tolerance};
use crate::tail::{MonotoneTransform, TransformBuildError, UpperLimit};

/// Radial weight `r ↦ A(r)`.
pub type RadialWeight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Allowed violation of the ball sandwich `w ≤ uᵢ ≤ w_n`.
pub const SANDWICH_SLACK: f64 = 1e-7;
/// `z(R_max) ≤ DECAY_FRACTION·z(0)` marks a profile as decayed.
pub const DECAY_FRACTION: f64 = 1e-3;

const INNER_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);
const HEAD: f64 = 1e-6;
const FAR_FACTOR: f64 = 1e6;
const KNOTS_PER_DECADE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub ambient_dim: u32,
    /// For `z`-profiles: `z(R_max) ≤ 1e-3·z(0)`.
    pub decay_verified: bool,
}

impl RadialProfile {
    /// Linear interpolation, clamped to the sampled range.
    pub fn at(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let j = self.radii.partition_point(|&x| x <= r);
        let (r0, r1) = (self.radii[j - 1], self.radii[j]);
        let t = (r - r0) / (r1 - r0);
        self.values[j - 1] * (1.0 - t) + self.values[j] * t
    }
}

/// `M(s) = ∫₀^s t^{N−1}A(t) dt`, tabulated on log-spaced knots.
struct Mass {
    a: RadialWeight,
    dim: u32,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Mass {
    fn new(a: RadialWeight, dim: u32, far: f64) -> Result<Self> {
        let decades = (far / HEAD).log10();
        let count = (decades * KNOTS_PER_DECADE).ceil() as usize;
        let mut knots = alloc::vec![0.0];
        for i in 0..=count {
            knots.push(HEAD * (far / HEAD).powf(i as f64 / count as f64));
        }
        let mut mass = Self {
            a,
            dim,
            knots,
            cumulative: Vec::new(),
        };
        let mut cumulative = alloc::vec![0.0];
        for w in mass.knots.windows(2) {
            let seg = integrate(|t| mass.density(t), w[0], w[1], INNER_TOL)?;
            cumulative.push(cumulative.last().unwrap() + seg.value);
        }
        mass.cumulative = cumulative;
        Ok(mass)
    }

    fn density(&self, t: f64) -> f64 {
        t.powi(self.dim as i32 - 1) * (self.a)(t)
    }

    fn at(&self, s: f64) -> f64 {
        let j = self.knots.partition_point(|&k| k <= s).max(1) - 1;
        let rest = integrate(|t| self.density(t), self.knots[j], s, INNER_TOL).map_or(f64::NAN, |q| q.value);
        self.cumulative[j] + rest
    }
}

/// `z(r) = ∫_r^∞ [s^{1−N} M(s)]^{1/(p−1)} ds`.
pub struct RadialUpper {
    p: f64,
    dim: u32,
    mass: Arc<Mass>,
    outer: MonotoneTransform,
}

impl core::fmt::Debug for RadialUpper {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RadialUpper")
            .field("p", &self.p)
            .field("dim", &self.dim)
            .field("outer", &self.outer)
            .finish()
    }
}

impl RadialUpper {
    /// Builds `z` for weight `a`; `scale` sets where the far tail is fitted
    /// (`max(scale, 1)·10⁶`).
    pub fn new(a: RadialWeight, p: f64, dim: u32, scale: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        if dim < 2 {
            return Err(Error::Domain(format!("ambient dimension must be at least 2, got {dim}")));
        }
        let far = scale.max(1.0) * FAR_FACTOR;
        let mass = Arc::new(Mass::new(a, dim, far)?);
        let m = mass.clone();
        let kernel = Box::new(move |s: f64| outer_kernel(&m, s, p));
        let outer = MonotoneTransform::new(kernel, UpperLimit::Infinite { anchor: far }, HEAD, far).map_err(|e| match e {
            TransformBuildError::Divergent(fit) => Error::NoUpperSolution { exponent: fit.exponent },
            TransformBuildError::Numeric(e) => e,
        })?;
        Ok(Self { p, dim, mass, outer })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Fitted decay exponent of the outer integrand.
    pub fn tail_exponent(&self) -> f64 {
        self.outer.tail().map_or(f64::NAN, |t| t.exponent)
    }

    pub fn z(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        if r >= HEAD {
            return self.outer.eval(r);
        }
        let head = integrate(|s| outer_kernel(&self.mass, s, self.p), r, HEAD, INNER_TOL)?;
        Ok(self.outer.eval(HEAD)? + head.value)
    }

    /// `M(r) = ∫₀^r t^{N−1}A(t) dt`.
    pub fn mass(&self, r: f64) -> f64 {
        self.mass.at(r)
    }

    /// `z` sampled at `resolution` equispaced radii on `[0, r_max]`.
    pub fn profile(&self, r_max: f64, resolution: usize) -> Result<RadialProfile> {
        if !(r_max > 0.0) || resolution < 2 {
            return Err(Error::Domain(format!(
                "profile needs r_max > 0 and at least 2 radii, got {r_max} and {resolution}"
            )));
        }
        let radii: Vec<f64> = (0..resolution)
            .map(|i| r_max * i as f64 / (resolution - 1) as f64)
            .collect();
        let values = radii.iter().map(|&r| self.z(r)).collect::<Result<Vec<_>>>()?;
        let decay_verified = values[resolution - 1] <= DECAY_FRACTION * values[0];
        Ok(RadialProfile {
            radii,
            values,
            ambient_dim: self.dim,
            decay_verified,
        })
    }

    /// Worst relative residual of the once-integrated radial equation
    /// `−r^{N−1}|z'|^{p−2}z' = ∫₀^r t^{N−1}A`, with `z'` from Richardson-
    /// extrapolated central differences and the right side from a fresh
    /// quadrature, over radii in `[r_min, r_max]`.
    pub fn radial_residual(&self, r_min: f64, r_max: f64, samples: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..samples.max(2) {
            let r = r_min + (r_max - r_min) * i as f64 / (samples.max(2) - 1) as f64;
            let h = 1e-2 * r.min(1.0);
            let diff = |h: f64| -> Result<f64> { Ok((self.z(r + h)? - self.z(r - h)?) / (2.0 * h)) };
            let slope = (4.0 * diff(0.5 * h)? - diff(h)?) / 3.0;
            let lhs = r.powi(self.dim as i32 - 1) * slope.abs().powf(self.p - 1.0);
            let rhs = integrate(|t| self.mass.density(t), 0.0, r, INNER_TOL)?.value;
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
        }
        Ok(worst)
    }
}

fn outer_kernel(mass: &Mass, s: f64, p: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    (mass.at(s) / s.powi(mass.dim as i32 - 1)).powf(1.0 / (p - 1.0))
}

/// `z` on `[0, r_max]` for weight `a`; a divergent outer integral is a
/// no-upper-solution error.
pub fn radial_upper_solution(a: RadialWeight, p: f64, dim: u32, r_max: f64, resolution: usize) -> Result<RadialProfile> {
    for i in 0..=64 {
        let r = r_max * i as f64 / 64.0;
        let v = a(r);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Precondition(format!("weight must be positive and finite, A({r}) = {v}")));
        }
    }
    RadialUpper::new(a, p, dim, r_max)?.profile(r_max, resolution)
}

/// `w = Φ⁻¹(z)` pointwise.
pub fn build_subsolution_w(z: &RadialProfile, g: &ClassFFunction, p: f64) -> Result<RadialProfile> {
    let phi = PhiTransform::new(g, p)?;
    Ok(RadialProfile {
        radii: z.radii.clone(),
        values: invert_all(&phi, &z.values)?,
        ambient_dim: z.ambient_dim,
        decay_verified: false,
    })
}

/// `w = Φ⁻¹(z)` on a grid.
pub fn subsolution_field(grid: &Grid, z: &GridFunction, phi: &PhiTransform) -> Result<GridFunction> {
    GridFunction::new(grid, invert_all(phi, z.values())?)
}

fn invert_all(phi: &PhiTransform, z: &[f64]) -> Result<Vec<f64>> {
    z.iter()
        .enumerate()
        .map(|(node, &v)| {
            phi.invert(v).map_err(|e| Error::AtNode {
                node,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `r ↦ Σᵢ aᵢ(r)`.
pub fn summed_weight(sys: &SystemSpec) -> RadialWeight {
    let d = sys.dim() as f64;
    match sys.weights() {
        None => Arc::new(move |_| d),
        Some(ws) => {
            let ws: Vec<Weight> = ws.to_vec();
            Arc::new(move |r| ws.iter().map(|w| w.eval(Point { x: r, y: 0.0, r })).sum())
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallSolve {
    pub radius: f64,
    pub grid: Grid,
    /// `w_n = w(radius)`.
    pub boundary_value: f64,
    /// `w` at the grid nodes.
    pub w: GridFunction,
    pub report: SolveReport,
    /// `minᵢ minₓ (uᵢ − w)`.
    pub lower_margin: f64,
    /// `maxᵢ maxₓ (uᵢ − w_n)`.
    pub upper_excess: f64,
    /// `(component, node)` of the worst sandwich violation.
    pub witness: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct EntireTrace {
    pub ball_radii: Vec<f64>,
    pub per_ball: Vec<BallSolve>,
    pub z_profile: RadialProfile,
    pub w_profile: RadialProfile,
    /// `w ≤ uᵢ` within `1e-7` on every ball.
    pub lower_bound_ok: bool,
    /// `uᵢ ≤ w_n` within `1e-7` on every ball.
    pub upper_bound_ok: bool,
    /// `nested_core_deltas[j][k]`: sup change on `B_{radii[j]}` from ball
    /// `j + k` to ball `j + k + 1`.
    pub nested_core_deltas: Vec<Vec<f64>>,
    pub truncated: Option<String>,
}

impl EntireTrace {
    pub fn accepted(&self) -> bool {
        self.truncated.is_none() && self.per_ball.iter().all(|b| b.report.converged) && self.lower_bound_ok
    }
}

/// Solves the weighted system on balls of the given radii with boundary
/// data `w(radius)`. Balls share the spacing of the largest ball, which has
/// `resolution` nodes.
pub fn ball_exhaustion(
    sys: &SystemSpec,
    g: &ClassFFunction,
    p: f64,
    dim: u32,
    ball_radii: &[f64],
    resolution: usize,
    opts: &SolveOptions,
) -> Result<EntireTrace> {
    if ball_radii.is_empty() || ball_radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Precondition("ball radii must be positive and finite".into()));
    }
    if ball_radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("ball radii must be strictly increasing".into()));
    }
    if resolution < 3 {
        return Err(Error::Precondition(format!("resolution must be at least 3, got {resolution}")));
    }
    let largest = *ball_radii.last().unwrap();
    let upper = RadialUpper::new(summed_weight(sys), p, dim, largest)?;
    let phi = PhiTransform::new(g, p)?;
    let z_profile = upper.profile(largest, resolution)?;
    let w_profile = RadialProfile {
        radii: z_profile.radii.clone(),
        values: invert_all(&phi, &z_profile.values)?,
        ambient_dim: dim,
        decay_verified: false,
    };
    let spacing = largest / (resolution - 1) as f64;
    let d = sys.dim();

    let mut per_ball: Vec<BallSolve> = Vec::new();
    let mut truncated = None;
    for &radius in ball_radii {
        let nodes = ((radius / spacing).round() as usize + 1).max(3);
        let grid = build_grid(&DomainSpec::radial_ball(radius, dim, nodes))?;
        let z = GridFunction::from_fn(&grid, |x| upper.z(x[0]).unwrap_or(f64::NAN))?;
        let w = subsolution_field(&grid, &z, &phi)?;
        let boundary_value = phi.invert(upper.z(radius)?)?;
        let data = alloc::vec![GridFunction::constant(&grid, boundary_value); d];
        let report = solve_dirichlet_system(&grid, sys, &data, p, opts)?;
        let mut lower_margin = f64::INFINITY;
        let mut upper_excess = f64::NEG_INFINITY;
        let mut worst = 0.0;
        let mut witness = None;
        for (c, u) in report.solution.iter().enumerate() {
            for k in 0..grid.len() {
                let below = w[k] - u[k];
                let above = u[k] - boundary_value;
                lower_margin = lower_margin.min(-below);
                upper_excess = upper_excess.max(above);
                let bad = below.max(above);
                if bad > SANDWICH_SLACK && bad > worst {
                    worst = bad;
                    witness = Some((c, k));
                }
            }
        }
        let converged = report.converged;
        let residual = report.residual_sup;
        per_ball.push(BallSolve {
            radius,
            grid,
            boundary_value,
            w,
            report,
            lower_margin,
            upper_excess,
            witness,
        });
        if !converged {
            truncated = Some(format!("ball of radius {radius} did not converge: scaled residual {residual:.3e}"));
            break;
        }
    }

    let nested_core_deltas = (0..per_ball.len())
        .map(|j| {
            let inner = ball_radii[j];
            per_ball[j..]
                .windows(2)
                .map(|pair| core_change(&pair[0], &pair[1], inner))
                .collect()
        })
        .collect();
    Ok(EntireTrace {
        ball_radii: ball_radii.to_vec(),
        lower_bound_ok: per_ball.iter().all(|b| b.lower_margin >= -SANDWICH_SLACK),
        upper_bound_ok: per_ball.iter().all(|b| b.upper_excess <= SANDWICH_SLACK),
        per_ball,
        z_profile,
        w_profile,
        nested_core_deltas,
        truncated,
    })
}

/// Sup over components and nodes of `a` within `inner` of `|u_b − u_a|`,
/// with `u_b` interpolated linearly in `r`.
fn core_change(a: &BallSolve, b: &BallSolve, inner: f64) -> f64 {
    let slack = 1e-12 * inner;
    let mut worst = 0.0f64;
    for (ua, ub) in a.report.solution.iter().zip(&b.report.solution) {
        let profile = RadialProfile {
            radii: b.grid.nodes().iter().map(|x| x[0]).collect(),
            values: ub.values().to_vec(),
            ambient_dim: 0,
            decay_verified: false,
        };
        for k in 0..a.grid.len() {
            let r = a.grid.node(k)[0];
            if r <= inner + slack {
                worst = worst.max((profile.at(r) - ua[k]).abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeAtInfinityReport {
    pub radius: f64,
    /// `minᵢ uᵢ` at the outermost sampled radius of the largest ball.
    pub u_min: f64,
    pub w: f64,
    pub threshold: f64,
    /// `w` grows without bound because `Φ(t) → 0` as `t → ∞` (certified tail).
    pub w_unbounded: bool,
    /// `None` when the trace is not accepted.
    pub evidence: Option<bool>,
}

/// Large-solution evidence: `minᵢ uᵢ` and `w` at the outermost radius both
/// exceed `threshold`, and `Φ⁻¹` diverges as `z → 0`.
pub fn verify_large_at_infinity(trace: &EntireTrace, g: &ClassFFunction, p: f64, threshold: f64) -> LargeAtInfinityReport {
    let last = trace.per_ball.last();
    let (radius, u_min, w) = match last {
        Some(b) => {
            let k = b.grid.len() - 1;
            let u_min = b.report.solution.iter().map(|u| u[k]).fold(f64::INFINITY, f64::min);
            (b.radius, u_min, b.w[k])
        }
        None => (0.0, f64::NAN, f64::NAN),
    };
    let w_unbounded = PhiTransform::new(g, p).is_ok_and(|phi| phi.tail_exponent() > 1.0);
    let evidence = trace
        .accepted()
        .then_some(w_unbounded && u_min > threshold && w > threshold);
    LargeAtInfinityReport {
        radius,
        u_min,
        w,
        threshold,
        w_unbounded,
        evidence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plap::{verify_subsolution, Side};
    use approx::assert_relative_eq;

    fn bump() -> RadialWeight {
        Arc::new(|r: f64| 3.0 * (1.0 + r * r).powf(-2.5))
    }

    #[test]
    fn closed_form_z() {
        let z = radial_upper_solution(bump(), 2.0, 3, 8.0, 81).unwrap();
        for (r, v) in z.radii.iter().zip(&z.values) {
            assert_relative_eq!(*v, (1.0 + r * r).powf(-0.5), epsilon = 1e-8);
        }
        assert_relative_eq!(z.values[10], 0.5f64.sqrt(), epsilon = 1e-8);
        assert!(!z.decay_verified);
    }

    #[test]
    fn radial_equation_residual_is_small() {
        let up = RadialUpper::new(bump(), 2.0, 3, 8.0).unwrap();
        assert!(up.radial_residual(0.1, 8.0, 40).unwrap() < 1e-6);
        let up = RadialUpper::new(bump(), 3.0, 4, 8.0).unwrap();
        assert!(up.radial_residual(0.1, 8.0, 40).unwrap() < 1e-6);
    }

    #[test]
    fn linear_scaling_at_p_two() {
        let z1 = radial_upper_solution(bump(), 2.0, 3, 4.0, 21).unwrap();
        let z2 = radial_upper_solution(Arc::new(|r: f64| 6.0 * (1.0 + r * r).powf(-2.5)), 2.0, 3, 4.0, 21).unwrap();
        for (a, b) in z1.values.iter().zip(&z2.values) {
            assert_relative_eq!(2.0 * a, *b, max_relative = 1e-9);
        }
    }

    #[test]
    fn constant_weight_has_no_upper_solution() {
        let r = radial_upper_solution(Arc::new(|_| 1.0), 2.0, 3, 4.0, 21);
        assert!(matches!(r, Err(Error::NoUpperSolution { .. })), "{r:?}");
    }

    #[test]
    fn z_positive_and_nonincreasing() {
        let z = radial_upper_solution(Arc::new(|r: f64| (-r).exp()), 3.0, 4, 6.0, 61).unwrap();
        assert!(z.values.iter().all(|&v| v > 0.0));
        assert!(z.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn closed_form_w() {
        let z = radial_upper_solution(bump(), 2.0, 3, 8.0, 81).unwrap();
        let g = ClassFFunction::power(1.0, 2.0).unwrap();
        let w = build_subsolution_w(&z, &g, 2.0).unwrap();
        for (r, v) in w.radii.iter().zip(&w.values) {
            assert_relative_eq!(*v, (1.0 + r * r).sqrt(), max_relative = 1e-7);
        }
        assert!(w.values.windows(2).all(|x| x[1] >= x[0]));
    }

    #[test]
    fn exhaustion_closed_form() {
        let g = ClassFFunction::power(1.0, 2.0).unwrap();
        let sys = SystemSpec::scalar(g.clone())
            .with_weights(alloc::vec![Weight::parse("3*(1+r^2)^(-5/2)").unwrap()])
            .unwrap();
        let t = ball_exhaustion(&sys, &g, 2.0, 3, &[2.0, 4.0, 8.0], 161, &SolveOptions::default()).unwrap();
        assert!(t.accepted(), "{:?}", t.truncated);
        assert!(t.lower_bound_ok && t.upper_bound_ok);
        let on_b2 = &t.nested_core_deltas[0];
        assert_eq!(on_b2.len(), 2);
        // Comparison bounds each change by the jump in boundary data.
        for (k, delta) in on_b2.iter().enumerate() {
            let jump = t.per_ball[k + 1].boundary_value - t.per_ball[k].boundary_value;
            assert!(*delta > 0.0 && *delta <= jump + 1e-7, "{on_b2:?}");
        }
        let jumps: Vec<f64> = t.per_ball.windows(2).map(|b| b[1].boundary_value - b[0].boundary_value).collect();
        assert!(on_b2[1] / jumps[1] < on_b2[0] / jumps[0]);
        let last = t.per_ball.last().unwrap();
        assert_relative_eq!(last.boundary_value, 65f64.sqrt(), max_relative = 1e-7);
        let report = verify_large_at_infinity(&t, &g, 2.0, 5.0);
        assert_eq!(report.evidence, Some(true));
        let b = &t.per_ball[1];
        let sub = verify_subsolution(&b.grid, core::slice::from_ref(&b.w), &sys, 2.0, Side::Sub, 1e-2).unwrap();
        assert!(sub.passed(), "{:?}", sub.components);
    }
}
