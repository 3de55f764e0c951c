use alloc::format;
use alloc::vec::Vec;

use super::operator::p_laplacian_values;
use super::solve::system_residual;
use super::system::SystemSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::nonlinearity::ClassFFunction;

/// Worst violation of a nodewise inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCheck {
    pub passed: bool,
    /// Largest amount by which the inequality fails (≤ 0 when it holds).
    pub worst: f64,
    pub node: Option<usize>,
}

impl NodeCheck {
    fn new() -> Self {
        Self {
            passed: true,
            worst: f64::NEG_INFINITY,
            node: None,
        }
    }

    fn record(&mut self, excess: f64, node: usize, tol: f64) {
        let excess = if excess.is_nan() { f64::INFINITY } else { excess };
        if excess > self.worst {
            self.worst = excess;
            self.node = Some(node);
        }
        if excess > tol {
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `(−Δₚu + g(u)) ≤ (−Δₚv + g(v)) + tol` at interior nodes.
    pub interior_hypothesis: NodeCheck,
    /// `u ≤ v + tol` on boundary nodes.
    pub boundary_hypothesis: NodeCheck,
    /// `u ≤ v + tol` at every node.
    pub conclusion: NodeCheck,
}

impl ComparisonReport {
    pub fn hypothesis_met(&self) -> bool {
        self.interior_hypothesis.passed && self.boundary_hypothesis.passed
    }

    pub fn conclusion_holds(&self) -> bool {
        self.conclusion.passed
    }
}

/// Checks the discrete comparison principle for `u` against `v`.
pub fn verify_comparison(grid: &Grid, u: &GridFunction, v: &GridFunction, p: f64, tol: f64) -> Result<ComparisonReport> {
    verify_comparison_with(grid, u, v, p, None, tol)
}

/// As [`verify_comparison`], with a zeroth-order term `g` added to both
/// operators (`−Δₚw + g(w)`).
pub fn verify_comparison_with(
    grid: &Grid,
    u: &GridFunction,
    v: &GridFunction,
    p: f64,
    g: Option<&ClassFFunction>,
    tol: f64,
) -> Result<ComparisonReport> {
    if !u.lives_on(grid) || !v.lives_on(grid) {
        return Err(Error::Precondition("fields do not live on this grid".into()));
    }
    let lu = p_laplacian_values(grid, u.values(), p, 0.0);
    let lv = p_laplacian_values(grid, v.values(), p, 0.0);
    let zeroth = |w: f64| g.map_or(0.0, |g| g.h(w));
    let mut interior = NodeCheck::new();
    let mut boundary = NodeCheck::new();
    let mut conclusion = NodeCheck::new();
    for k in 0..grid.len() {
        if grid.is_boundary(k) {
            boundary.record(u[k] - v[k], k, tol);
        } else {
            let a = -lu[k] + zeroth(u[k]);
            let b = -lv[k] + zeroth(v[k]);
            interior.record(a - b, k, tol);
        }
        conclusion.record(u[k] - v[k], k, tol);
    }
    Ok(ComparisonReport {
        interior_hypothesis: interior,
        boundary_hypothesis: boundary,
        conclusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Sub,
    Super,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionReport {
    pub side: Side,
    /// Per component: worst shortfall of `Δₚuᵢ − aᵢF_{uᵢ} ≥ 0` (or `≤ 0`).
    pub components: Vec<NodeCheck>,
}

impl SubsolutionReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(|c| c.passed)
    }
}

/// Checks `Δₚuᵢ − aᵢF_{uᵢ}(x, u) ≥ −tol` (sub) or `≤ tol` (super) at every
/// interior node.
pub fn verify_subsolution(
    grid: &Grid,
    u: &[GridFunction],
    sys: &SystemSpec,
    p: f64,
    side: Side,
    tol: f64,
) -> Result<SubsolutionReport> {
    if u.len() != sys.dim() {
        return Err(Error::Precondition(format!("{} fields for {} components", u.len(), sys.dim())));
    }
    for f in u {
        if !f.lives_on(grid) {
            return Err(Error::Precondition("fields do not live on this grid".into()));
        }
    }
    let res = system_residual(grid, sys, u, p, 0.0)?;
    let components = res
        .iter()
        .map(|r| {
            let mut check = NodeCheck::new();
            for &k in grid.interior() {
                let excess = match side {
                    Side::Sub => -r[k],
                    Side::Super => r[k],
                };
                check.record(excess, k, tol);
            }
            check
        })
        .collect();
    Ok(SubsolutionReport { side, components })
}
