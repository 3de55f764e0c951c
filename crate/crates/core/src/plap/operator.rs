use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use super::system::SystemSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// `Φ_{p,ε}(s) = (s² + ε²)^{(p−2)/2} s`.
#[inline]
pub fn flux(s: f64, p: f64, eps: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return s;
    }
    (s * s + eps * eps).powf(0.5 * (p - 2.0)) * s
}

/// `Φ'_{p,ε}(s) = (s² + ε²)^{(p−4)/2} ((p−1)s² + ε²)`.
#[inline]
pub fn flux_derivative(s: f64, p: f64, eps: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    let q = s * s + eps * eps;
    if q == 0.0 {
        return if p > 2.0 { 0.0 } else { f64::INFINITY };
    }
    q.powf(0.5 * (p - 4.0)) * ((p - 1.0) * s * s + eps * eps)
}

/// Edge energy density `((s² + ε²)^{p/2} − ε^p)/p`, whose derivative is the flux.
#[inline]
pub fn energy_density(s: f64, p: f64, eps: f64) -> f64 {
    if p == 2.0 {
        return 0.5 * s * s;
    }
    if eps == 0.0 {
        return s.abs().powf(p) / p;
    }
    ((s * s + eps * eps).powf(0.5 * p) - eps.powf(p)) / p
}

/// `Σ_e m_e ℓ_e ρ(δ_e u/ℓ_e)` for one field.
pub(crate) fn dirichlet_energy(grid: &Grid, u: &[f64], p: f64, eps: f64) -> f64 {
    grid.edges()
        .iter()
        .map(|e| {
            let s = (u[e.b] - u[e.a]) / e.length;
            e.measure * e.length * energy_density(s, p, eps)
        })
        .sum()
}

fn check_fields(grid: &Grid, u: &[GridFunction]) -> Result<()> {
    for (i, f) in u.iter().enumerate() {
        if !f.lives_on(grid) {
            return Err(Error::Precondition(format!("component {} does not live on this grid", i + 1)));
        }
    }
    Ok(())
}

/// The discrete energy `Σ_i Σ_e m_e ℓ_e (1/p)|δ_e uᵢ/ℓ_e|^p + Σ_x cell·a·F(x, u)`.
///
/// Weights must agree across components for the potential term to exist.
pub fn discrete_energy(grid: &Grid, u: &[GridFunction], sys: &SystemSpec, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    let d = sys.dim();
    if u.len() != d {
        return Err(Error::Precondition(format!("{} fields given for {d} components", u.len())));
    }
    check_fields(grid, u)?;
    let coupling = sys.coupling();
    if !coupling.has_potential() {
        return Err(Error::EnergyUnavailable);
    }
    let mut total: f64 = u.iter().map(|f| dirichlet_energy(grid, f.values(), p, 0.0)).sum();
    let mut at = alloc::vec![0.0; d];
    for (k, &m) in grid.cell_measures().iter().enumerate() {
        let x = grid.point(k);
        let a = sys.weight(0, x);
        if (1..d).any(|c| sys.weight(c, x) != a) {
            return Err(Error::EnergyUnavailable);
        }
        for c in 0..d {
            at[c] = u[c][k];
        }
        let f = coupling.potential(x, &at).ok_or(Error::EnergyUnavailable)?;
        total += m * a * f;
    }
    Ok(total)
}

/// The discrete `Δₚu`: minus the gradient of the Dirichlet energy divided by
/// cell measures, zero on boundary nodes.
pub fn apply_p_laplacian(grid: &Grid, u: &GridFunction, p: f64, eps: f64) -> GridFunction {
    let values = p_laplacian_values(grid, u.values(), p, eps);
    GridFunction::from_raw(grid.id(), values)
}

pub(crate) fn p_laplacian_values(grid: &Grid, u: &[f64], p: f64, eps: f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; grid.len()];
    for e in grid.edges() {
        let f = e.measure * flux((u[e.b] - u[e.a]) / e.length, p, eps);
        out[e.a] += f;
        out[e.b] -= f;
    }
    for (k, v) in out.iter_mut().enumerate() {
        *v = if grid.is_boundary(k) { 0.0 } else { *v / grid.cell_measures()[k] };
    }
    out
}
