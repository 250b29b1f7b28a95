//! Voronoi-cell losses between a fitted and a true mixing measure.
//!
//! All three losses partition the fitted atoms into the Voronoi cells of a
//! reference measure. Cells holding a single atom are charged linearly in the
//! atom's distance to its generator; cells holding several atoms are charged
//! with a higher power, reflecting the slower rate at which redundant atoms
//! converge. Every loss adds the discrepancy between cell masses and
//! reference weights.

mod polynomial;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measure::{voronoi_cells_with, AtomDistance, MetricKind, MixingMeasure};
use crate::transport::{solve_ot, CostKind, CostMatrix};

pub use polynomial::{
    polynomial_system_residuals, verify_polynomial_system_solution, PolynomialSystemCandidate,
    RESIDUAL_TOLERANCE,
};

/// Exponents `r̄(k')` for Voronoi cells holding `k' >= 2` atoms in
/// location-scale Gaussian mixtures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RBarTable {
    entries: BTreeMap<usize, u32>,
}

impl Default for RBarTable {
    /// The known values `r̄(2) = 4`, `r̄(3) = 6`.
    fn default() -> Self {
        Self {
            entries: BTreeMap::from([(2, 4), (3, 6)]),
        }
    }
}

impl RBarTable {
    /// Adds or replaces the exponent for cells of size `cell_order`.
    pub fn with_override(mut self, cell_order: usize, exponent: u32) -> Result<Self> {
        if cell_order < 2 {
            return Err(Error::InvalidConfig(format!(
                "r-bar is defined for cell sizes >= 2, got {cell_order}"
            )));
        }
        if exponent < 4 || !exponent.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "r-bar exponent must be an even integer >= 4, got {exponent}"
            )));
        }
        self.entries.insert(cell_order, exponent);
        Ok(self)
    }

    pub fn get(&self, cell_order: usize) -> Option<u32> {
        self.entries.get(&cell_order).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }
}

/// `r̄(k')` lookup.
pub fn rbar(cell_order: usize, table: &RBarTable) -> Result<u32> {
    if cell_order < 2 {
        return Err(Error::InvalidConfig(format!(
            "r-bar is defined for cell sizes >= 2, got {cell_order}"
        )));
    }
    table
        .get(cell_order)
        .ok_or(Error::UnsupportedCellOrder(cell_order))
}

fn require_location_only(g: &MixingMeasure, what: &str) -> Result<()> {
    if g.has_atom_covariances() {
        return Err(Error::MetricMismatch(format!(
            "{what} carries atom covariances but the loss compares means only"
        )));
    }
    Ok(())
}

fn mass_discrepancy(g: &MixingMeasure, g0: &MixingMeasure, cells: &[Vec<usize>]) -> f64 {
    cells
        .iter()
        .zip(g0.weights())
        .map(|(cell, p0)| (cell.iter().map(|&i| g.weights()[i]).sum::<f64>() - p0).abs())
        .sum()
}

/// `D(G, G₀)` for strongly identifiable families, over mean-only Voronoi
/// cells generated by `g0`:
///
/// ```text
/// Σ_{|A_j|>1} Σ_{i∈A_j} p_i ‖θ_i − θ_j⁰‖² + Σ_{|A_j|=1} Σ_{i∈A_j} p_i ‖θ_i − θ_j⁰‖
///   + Σ_j |Σ_{i∈A_j} p_i − p_j⁰|
/// ```
pub fn loss_d(g: &MixingMeasure, g0: &MixingMeasure) -> Result<f64> {
    loss_d_with(g, g0, &MetricKind::MeanOnly)
}

/// [`loss_d`] with a caller-supplied mean-only metric (used to count
/// distance evaluations).
pub fn loss_d_with<M: AtomDistance + ?Sized>(
    g: &MixingMeasure,
    g0: &MixingMeasure,
    metric: &M,
) -> Result<f64> {
    if metric.kind() != MetricKind::MeanOnly {
        return Err(Error::MetricMismatch("D uses the mean-only metric".into()));
    }
    require_location_only(g, "the measure")?;
    require_location_only(g0, "the reference measure")?;
    let partition = voronoi_cells_with(g, g0, metric)?;
    let mut atom_terms = 0.0;
    for cell in partition.cells() {
        let squared = cell.len() > 1;
        for &i in cell {
            let dist = partition.generator_distance(i).0;
            atom_terms += g.weights()[i] * if squared { dist * dist } else { dist };
        }
    }
    Ok(atom_terms + mass_discrepancy(g, g0, partition.cells()))
}

/// `D̄(G, G₀)` for location-scale Gaussian mixtures, over composite-metric
/// Voronoi cells. Singletons contribute `p_i (‖Δμ‖ + ‖ΔΣ‖_F)`; a cell of
/// size `s >= 2` contributes `p_i (‖Δμ‖^{r̄(s)} + ‖ΔΣ‖_F^{r̄(s)/2})`.
pub fn loss_dbar(g: &MixingMeasure, g0: &MixingMeasure, table: &RBarTable) -> Result<f64> {
    loss_dbar_with(g, g0, table, &MetricKind::Composite)
}

pub fn loss_dbar_with<M: AtomDistance + ?Sized>(
    g: &MixingMeasure,
    g0: &MixingMeasure,
    table: &RBarTable,
    metric: &M,
) -> Result<f64> {
    if metric.kind() != MetricKind::Composite {
        return Err(Error::MetricMismatch(
            "D-bar uses the composite metric".into(),
        ));
    }
    let partition = voronoi_cells_with(g, g0, metric)?;
    let mut atom_terms = 0.0;
    for cell in partition.cells() {
        let exponent = match cell.len() {
            0 | 1 => None,
            s => Some(rbar(s, table)? as i32),
        };
        for &i in cell {
            let (mean, cov) = partition.generator_distance(i);
            let term = match exponent {
                None => mean + cov,
                Some(r) => mean.powi(r) + cov.powi(r / 2),
            };
            atom_terms += g.weights()[i] * term;
        }
    }
    Ok(atom_terms + mass_discrepancy(g, g0, partition.cells()))
}

/// Cell-dependent ground cost of `W̃`: for atoms `i` of `g` and `j` of `g2`
/// in the same cell `l` of `g_star`, `|θ_i − θ'_j|^{|A_l(G)| + |A_l(G')| − 1}`;
/// across cells, 1.
pub fn wtilde_cost(
    g: &MixingMeasure,
    g2: &MixingMeasure,
    g_star: &MixingMeasure,
) -> Result<CostMatrix> {
    for m in [g, g2, g_star] {
        if m.dim() != 1 {
            return Err(Error::DimensionUnsupported(m.dim()));
        }
        require_location_only(m, "a W-tilde argument")?;
    }
    let cells_g = voronoi_cells_with(g, g_star, &MetricKind::MeanOnly)?;
    let cells_g2 = voronoi_cells_with(g2, g_star, &MetricKind::MeanOnly)?;
    CostMatrix::from_fn(g.order(), g2.order(), CostKind::CellDependent, |i, j| {
        let l = cells_g.generator_of(i);
        if l != cells_g2.generator_of(j) {
            return 1.0;
        }
        let exponent = cells_g.cell(l).len() + cells_g2.cell(l).len() - 1;
        let gap = (g.atom(i).mean()[0] - g2.atom(j).mean()[0]).abs();
        gap.powi(exponent as i32)
    })
}

/// `W̃(G, G')`: optimal transport cost under [`wtilde_cost`], with Voronoi
/// cells generated by `g_star`. Defined for one-dimensional parameters only.
pub fn loss_wtilde(g: &MixingMeasure, g2: &MixingMeasure, g_star: &MixingMeasure) -> Result<f64> {
    let cost = wtilde_cost(g, g2, g_star)?;
    Ok(solve_ot(g.weights(), g2.weights(), &cost)?.value.max(0.0))
}

/// Which loss a model is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    D,
    DBar,
    WTilde,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::D => "D",
            LossKind::DBar => "Dbar",
            LossKind::WTilde => "Wtilde",
        }
    }
}
