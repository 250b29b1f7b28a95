//! Exact optimal transport between finitely supported measures.

mod simplex;

use crate::error::{Error, Result};
use crate::measure::check_metric;
use crate::measure::{AtomDistance, MetricKind, MixingMeasure};

/// Largest support handled by [`solve_ot`] on either side.
pub const MAX_SUPPORT: usize = 64;

/// Marginal tolerance of returned couplings.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Weight sums further apart than this are infeasible.
pub const MASS_MISMATCH_TOLERANCE: f64 = 1e-6;

/// Where a cost matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    PowerOfDistance,
    CellDependent,
    Custom,
}

/// Non-negative `rows × cols` ground cost, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    kind: CostKind,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, kind: CostKind) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} cost entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "cost entry ({}, {}) = {} must be finite and non-negative",
                k / cols,
                k % cols,
                data[k]
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            kind,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        kind: CostKind,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self::new(rows, cols, data, kind)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Joint probability mass function with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    source: Vec<f64>,
    target: Vec<f64>,
}

impl Coupling {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.plan.iter().sum()
    }

    /// Largest violation of the marginal constraints.
    pub fn marginal_error(&self) -> f64 {
        let (rows, cols) = (self.row_sums(), self.col_sums());
        let row_err = rows.iter().zip(&self.source).map(|(a, b)| (a - b).abs());
        let col_err = cols.iter().zip(&self.target).map(|(a, b)| (a - b).abs());
        row_err.chain(col_err).fold(0.0, f64::max)
    }

    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.plan
            .iter()
            .zip(cost.as_slice())
            .map(|(q, c)| q * c)
            .sum()
    }
}

/// Optimal value and an optimal plan.
#[derive(Debug, Clone, PartialEq)]
pub struct OtSolution {
    pub value: f64,
    pub plan: Coupling,
}

/// Exact discrete optimal transport: `min_q Σ q_ij c_ij` over couplings of
/// `source` and `target`.
///
/// Weight vectors must each sum to one within 1e-9 (sums further apart than
/// 1e-6 report [`Error::InfeasibleMarginals`]). Zero weights are allowed.
pub fn solve_ot(source: &[f64], target: &[f64], cost: &CostMatrix) -> Result<OtSolution> {
    let (m, n) = (source.len(), target.len());
    if m == 0 || n == 0 || cost.rows != m || cost.cols != n {
        return Err(Error::DimensionMismatch(format!(
            "weights {m}x{n} against cost {}x{}",
            cost.rows, cost.cols
        )));
    }
    if m > MAX_SUPPORT || n > MAX_SUPPORT {
        return Err(Error::SupportTooLarge {
            rows: m,
            cols: n,
            limit: MAX_SUPPORT,
        });
    }
    if let Some(w) = source
        .iter()
        .chain(target)
        .find(|w| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::InvalidMeasure(format!(
            "transport weight {w} is invalid"
        )));
    }
    let source_mass: f64 = source.iter().sum();
    let target_mass: f64 = target.iter().sum();
    if (source_mass - target_mass).abs() > MASS_MISMATCH_TOLERANCE
        || (source_mass - 1.0).abs() > MASS_MISMATCH_TOLERANCE
    {
        return Err(Error::InfeasibleMarginals {
            source_mass,
            target_mass,
        });
    }
    // Balance exactly so the simplex sees equal totals.
    let demand: Vec<f64> = target
        .iter()
        .map(|w| w * source_mass / target_mass)
        .collect();
    let solution = simplex::solve(source, &demand, cost.as_slice());
    let plan = Coupling {
        rows: m,
        cols: n,
        plan: solution.flow,
        source: source.to_vec(),
        target: target.to_vec(),
    };
    Ok(OtSolution {
        value: plan.cost(cost),
        plan,
    })
}

/// Ground cost `D(θ_i, θ'_j)^r` between the atoms of two measures.
pub fn distance_cost<M: AtomDistance + ?Sized>(
    g: &MixingMeasure,
    g2: &MixingMeasure,
    r: f64,
    metric: &M,
) -> Result<CostMatrix> {
    CostMatrix::from_fn(g.order(), g2.order(), CostKind::PowerOfDistance, |i, j| {
        let (mean, cov) = metric.components(g.atom(i), g2.atom(j));
        (mean + cov).powf(r)
    })
}

/// `W_r(G, G') = (min_q Σ q_ij D^r(θ_i, θ'_j))^{1/r}`.
pub fn wasserstein(
    g: &MixingMeasure,
    g2: &MixingMeasure,
    r: f64,
    metric: MetricKind,
) -> Result<f64> {
    wasserstein_pow(g, g2, r, metric).map(|v| v.powf(1.0 / r))
}

/// `W_r^r(G, G')`, without the final root.
pub fn wasserstein_pow(
    g: &MixingMeasure,
    g2: &MixingMeasure,
    r: f64,
    metric: MetricKind,
) -> Result<f64> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "Wasserstein order r = {r} must be >= 1"
        )));
    }
    if g.dim() != g2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measures have dimensions {} and {}",
            g.dim(),
            g2.dim()
        )));
    }
    check_metric(g, metric, "the first measure")?;
    check_metric(g2, metric, "the second measure")?;
    let cost = distance_cost(g, g2, r, &metric)?;
    Ok(solve_ot(g.weights(), g2.weights(), &cost)?.value.max(0.0))
}
