//! Interval, rectangle and radial-ball grids with edge-based geometry.
//!
//! Every grid carries, per node, a cell measure (the dual-cell volume, with
//! the `r^{N-1}` weight folded in for radial grids) and, per edge, a length
//! and a transversal measure. The discrete Dirichlet energy
//! `Σ_e m_e ℓ_e (1/p)|δ_e u/ℓ_e|^p` is built from these alone.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Geometric zones of this many cells each make up a refined half-axis.
const CELLS_PER_ZONE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Interval { a: f64, b: f64 },
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
    /// Radially symmetric ball `|x| < radius` in `ℝ^dim`, discretized in `r`.
    RadialBall { radius: f64, dim: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Cell widths shrink geometrically by `ratio` towards the boundary.
    BoundaryRefined { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Nodes per axis.
    pub resolution: usize,
    pub grading: Grading,
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, resolution: usize) -> Self {
        Self {
            kind: DomainKind::Interval { a, b },
            resolution,
            grading: Grading::Uniform,
        }
    }

    pub fn rectangle(ax: f64, bx: f64, ay: f64, by: f64, resolution: usize) -> Self {
        Self {
            kind: DomainKind::Rectangle { ax, bx, ay, by },
            resolution,
            grading: Grading::Uniform,
        }
    }

    pub fn radial_ball(radius: f64, dim: u32, resolution: usize) -> Self {
        Self {
            kind: DomainKind::RadialBall { radius, dim },
            resolution,
            grading: Grading::Uniform,
        }
    }

    pub fn refined(mut self, ratio: f64) -> Self {
        self.grading = Grading::BoundaryRefined { ratio };
        self
    }

    pub fn is_one_dimensional(&self) -> bool {
        matches!(self.kind, DomainKind::Interval { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let axis = |lo: f64, hi: f64, name: &str| -> Result<()> {
            if lo.is_finite() && hi.is_finite() && lo < hi {
                Ok(())
            } else {
                Err(Error::Grid(format!("{name}-axis needs finite lo < hi, got [{lo}, {hi}]")))
            }
        };
        match self.kind {
            DomainKind::Interval { a, b } => axis(a, b, "x")?,
            DomainKind::Rectangle { ax, bx, ay, by } => {
                axis(ax, bx, "x")?;
                axis(ay, by, "y")?;
            }
            DomainKind::RadialBall { radius, dim } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Grid(format!("ball radius must be positive, got {radius}")));
                }
                if dim < 2 {
                    return Err(Error::Grid(format!("radial ball needs ambient dimension >= 2, got {dim}")));
                }
            }
        }
        if let Grading::BoundaryRefined { ratio } = self.grading {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::Grid(format!("refinement ratio must lie in (0, 1), got {ratio}")));
            }
        }
        let min_nodes = match self.kind {
            DomainKind::RadialBall { .. } => 2,
            _ => 3,
        };
        if self.resolution < min_nodes {
            return Err(Error::Grid(format!(
                "resolution {} leaves no interior node (need at least {min_nodes})",
                self.resolution
            )));
        }
        Ok(())
    }
}

/// A node location as seen by user expressions: cartesian `x`, `y` and the
/// radius `r` (on radial grids `x = r` and `y = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

/// Identity of a grid, derived from its spec and coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    /// Dual-face measure across the edge (face length, or `r^{N-1}` at the
    /// edge midpoint on radial grids).
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: DomainSpec,
    id: GridId,
    nodes: Vec<[f64; 2]>,
    is_boundary: Vec<bool>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    cell_measures: Vec<f64>,
    edges: Vec<Edge>,
    /// Edge indices incident to each node.
    incidence: Vec<Vec<usize>>,
    bandwidth: usize,
}

/// Distances from one end of a half-axis of length `len`, split into `m`
/// cells, clustered towards distance 0 when refined.
fn half_axis(len: f64, m: usize, grading: Grading) -> Vec<f64> {
    let ratio = match grading {
        Grading::BoundaryRefined { ratio } if m >= 2 * CELLS_PER_ZONE => ratio,
        _ => return (0..=m).map(|k| len * k as f64 / m as f64).collect(),
    };
    // Zones [L r^{k+1}, L r^k] for k < zones, then a uniform segment
    // [0, L r^zones] against the boundary; leftover cells go to zone 0.
    let zones = m / CELLS_PER_ZONE - 1;
    let extra = m - CELLS_PER_ZONE * (zones + 1);
    let mut d = Vec::with_capacity(m + 1);
    let inner = len * ratio.powi(zones as i32);
    for j in 0..CELLS_PER_ZONE {
        d.push(inner * j as f64 / CELLS_PER_ZONE as f64);
    }
    for k in (0..zones).rev() {
        let lo = len * ratio.powi(k as i32 + 1);
        let hi = len * ratio.powi(k as i32);
        let cells = CELLS_PER_ZONE + if k == 0 { extra } else { 0 };
        for j in 0..cells {
            d.push(lo + (hi - lo) * j as f64 / cells as f64);
        }
    }
    d.push(len);
    d
}

/// Node coordinates on `[lo, hi]`, refined towards each flagged end.
fn axis_coords(lo: f64, hi: f64, n: usize, grading: Grading, refine_lo: bool, refine_hi: bool) -> Vec<f64> {
    let cells = n - 1;
    let g = |refine: bool| if refine { grading } else { Grading::Uniform };
    if matches!(grading, Grading::Uniform) {
        let mut x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
        x[cells] = hi;
        x
    } else if refine_lo && refine_hi {
        let m_lo = cells / 2;
        let m_hi = cells - m_lo;
        let mid = 0.5 * (lo + hi);
        let left = half_axis(mid - lo, m_lo, grading);
        let right = half_axis(hi - mid, m_hi, grading);
        let mut x: Vec<f64> = left.iter().map(|d| lo + d).collect();
        x.pop();
        x.push(mid);
        x.extend(right.iter().rev().skip(1).map(|d| hi - d));
        *x.last_mut().unwrap() = hi;
        x
    } else if refine_hi {
        let d = half_axis(hi - lo, cells, g(true));
        let mut x: Vec<f64> = d.iter().rev().map(|d| hi - d).collect();
        x[0] = lo;
        x
    } else {
        let d = half_axis(hi - lo, cells, g(refine_lo));
        let mut x: Vec<f64> = d.iter().map(|d| lo + d).collect();
        x[cells] = hi;
        x
    }
}

/// Dual-cell widths of a 1D node sequence.
fn dual_widths(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { 0.5 * (x[i] - x[i - 1]) } else { 0.0 };
            let right = if i + 1 < n { 0.5 * (x[i + 1] - x[i]) } else { 0.0 };
            left + right
        })
        .collect()
}

fn fnv(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= u64::from(b);
        *hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
}

/// Builds the grid described by `spec`.
pub fn build_grid(spec: &DomainSpec) -> Result<Grid> {
    spec.validate()?;
    let n = spec.resolution;
    let mut nodes = Vec::new();
    let mut is_boundary = Vec::new();
    let mut cell_measures = Vec::new();
    let mut edges = Vec::new();
    match spec.kind {
        DomainKind::Interval { a, b } => {
            let x = axis_coords(a, b, n, spec.grading, true, true);
            cell_measures = dual_widths(&x);
            for (i, &xi) in x.iter().enumerate() {
                nodes.push([xi, 0.0]);
                is_boundary.push(i == 0 || i == n - 1);
            }
            for i in 0..n - 1 {
                edges.push(Edge {
                    a: i,
                    b: i + 1,
                    length: x[i + 1] - x[i],
                    measure: 1.0,
                });
            }
        }
        DomainKind::Rectangle { ax, bx, ay, by } => {
            let x = axis_coords(ax, bx, n, spec.grading, true, true);
            let y = axis_coords(ay, by, n, spec.grading, true, true);
            let (wx, wy) = (dual_widths(&x), dual_widths(&y));
            let at = |i: usize, j: usize| j * n + i;
            for j in 0..n {
                for i in 0..n {
                    nodes.push([x[i], y[j]]);
                    is_boundary.push(i == 0 || j == 0 || i == n - 1 || j == n - 1);
                    cell_measures.push(wx[i] * wy[j]);
                }
            }
            for j in 0..n {
                for i in 0..n {
                    if i + 1 < n {
                        edges.push(Edge {
                            a: at(i, j),
                            b: at(i + 1, j),
                            length: x[i + 1] - x[i],
                            measure: wy[j],
                        });
                    }
                    if j + 1 < n {
                        edges.push(Edge {
                            a: at(i, j),
                            b: at(i, j + 1),
                            length: y[j + 1] - y[j],
                            measure: wx[i],
                        });
                    }
                }
            }
        }
        DomainKind::RadialBall { radius, dim } => {
            let r = axis_coords(0.0, radius, n, spec.grading, false, true);
            let nd = dim as i32;
            let face = |s: f64| s.powi(nd - 1);
            let ball = |s: f64| s.powi(nd) / f64::from(dim);
            for i in 0..n {
                nodes.push([r[i], 0.0]);
                is_boundary.push(i == n - 1);
                let lo = if i == 0 { 0.0 } else { 0.5 * (r[i - 1] + r[i]) };
                let hi = if i == n - 1 { radius } else { 0.5 * (r[i] + r[i + 1]) };
                cell_measures.push(ball(hi) - ball(lo));
            }
            for i in 0..n - 1 {
                edges.push(Edge {
                    a: i,
                    b: i + 1,
                    length: r[i + 1] - r[i],
                    measure: face(0.5 * (r[i] + r[i + 1])),
                });
            }
        }
    }
    if let Some(e) = edges.iter().find(|e| !(e.length > 0.0)) {
        return Err(Error::Grid(format!(
            "degenerate edge {}-{} (length {}); lower the resolution or relax the grading",
            e.a, e.b, e.length
        )));
    }
    if let Some(i) = cell_measures.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::Grid(format!("node {i} has non-positive cell measure")));
    }
    let mut incidence = alloc::vec![Vec::new(); nodes.len()];
    for (k, e) in edges.iter().enumerate() {
        incidence[e.a].push(k);
        incidence[e.b].push(k);
    }
    let bandwidth = edges.iter().map(|e| e.b.abs_diff(e.a)).max().unwrap_or(0);
    let interior = (0..nodes.len()).filter(|&i| !is_boundary[i]).collect();
    let boundary = (0..nodes.len()).filter(|&i| is_boundary[i]).collect();

    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let tag: u8 = match spec.kind {
        DomainKind::Interval { .. } => 1,
        DomainKind::Rectangle { .. } => 2,
        DomainKind::RadialBall { dim, .. } => 3 + dim as u8,
    };
    fnv(&mut hash, &[tag]);
    fnv(&mut hash, &(nodes.len() as u64).to_le_bytes());
    for p in &nodes {
        fnv(&mut hash, &p[0].to_bits().to_le_bytes());
        fnv(&mut hash, &p[1].to_bits().to_le_bytes());
    }

    Ok(Grid {
        spec: *spec,
        id: GridId(hash),
        nodes,
        is_boundary,
        interior,
        boundary,
        cell_measures,
        edges,
        incidence,
        bandwidth,
    })
}

impl Grid {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn id(&self) -> GridId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node coordinates; the second entry is 0 except on rectangles.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn point(&self, i: usize) -> Point {
        let [x, y] = self.nodes[i];
        let r = match self.spec.kind {
            DomainKind::RadialBall { .. } => x,
            _ => (x * x + y * y).sqrt(),
        };
        Point { x, y, r }
    }

    /// Coordinate column names: `x`, `x, y` or `r`.
    pub fn coordinate_names(&self) -> &'static [&'static str] {
        match self.spec.kind {
            DomainKind::Interval { .. } => &["x"],
            DomainKind::Rectangle { .. } => &["x", "y"],
            DomainKind::RadialBall { .. } => &["r"],
        }
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_measures
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`Grid::edges`] of the edges touching node `i`.
    pub fn incident_edges(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    /// Largest index distance between the endpoints of an edge.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Exact Euclidean distance from node `i` to the domain boundary.
    pub fn boundary_distance(&self, i: usize) -> f64 {
        if self.is_boundary[i] {
            return 0.0;
        }
        let [x, y] = self.nodes[i];
        match self.spec.kind {
            DomainKind::Interval { a, b } => (x - a).min(b - x),
            DomainKind::Rectangle { ax, bx, ay, by } => (x - ax).min(bx - x).min(y - ay).min(by - y),
            DomainKind::RadialBall { radius, .. } => radius - x,
        }
    }

    /// Largest boundary distance attained in the domain.
    pub fn inradius(&self) -> f64 {
        match self.spec.kind {
            DomainKind::Interval { a, b } => 0.5 * (b - a),
            DomainKind::Rectangle { ax, bx, ay, by } => 0.5 * (bx - ax).min(by - ay),
            DomainKind::RadialBall { radius, .. } => radius,
        }
    }

    /// Length, area, or `R^N/N` (the ball volume without the sphere-area factor).
    pub fn domain_measure(&self) -> f64 {
        match self.spec.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Rectangle { ax, bx, ay, by } => (bx - ax) * (by - ay),
            DomainKind::RadialBall { radius, dim } => radius.powi(dim as i32) / f64::from(dim),
        }
    }

    /// Nodes at boundary distance at least `margin`.
    pub fn restrict_to_core(&self, margin: f64) -> Result<Vec<usize>> {
        if !(margin >= 0.0) {
            return Err(Error::Domain(format!("core margin must be nonnegative, got {margin}")));
        }
        if margin == 0.0 {
            return Ok((0..self.len()).collect());
        }
        let slack = 1e-12 * self.inradius();
        let core: Vec<usize> = (0..self.len())
            .filter(|&i| self.boundary_distance(i) >= margin - slack)
            .collect();
        if core.is_empty() {
            return Err(Error::MarginTooLarge {
                margin,
                inradius: self.inradius(),
            });
        }
        Ok(core)
    }

    /// Interior nodes sharing an edge with a boundary node.
    pub fn boundary_ring(&self) -> Vec<usize> {
        self.interior
            .iter()
            .copied()
            .filter(|&i| {
                self.incidence[i].iter().any(|&k| {
                    let e = &self.edges[k];
                    self.is_boundary[e.a] || self.is_boundary[e.b]
                })
            })
            .collect()
    }

    /// `Σ cell_measure · v`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_measures.iter().zip(values).map(|(m, v)| m * v).sum()
    }
}

/// Nodal values attached to a specific grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid_id: GridId,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("field value at node {i} is not finite")));
        }
        Ok(Self {
            grid_id: grid.id(),
            values,
        })
    }

    pub(crate) fn from_raw(grid_id: GridId, values: Vec<f64>) -> Self {
        Self { grid_id, values }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            grid_id: grid.id(),
            values: alloc::vec![value; grid.len()],
        }
    }

    pub fn from_fn<F: FnMut([f64; 2]) -> f64>(grid: &Grid, mut f: F) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&p| f(p)).collect())
    }

    pub fn grid_id(&self) -> GridId {
        self.grid_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lives_on(&self, grid: &Grid) -> bool {
        self.grid_id == grid.id() && self.values.len() == grid.len()
    }
}

impl core::ops::Index<usize> for GridFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}
