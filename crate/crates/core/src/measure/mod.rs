//! Mixing measures on a compact parameter space.
//!
//! A [`MixingMeasure`] is a finitely supported probability measure whose atoms
//! are Gaussian component parameters. Location-only measures keep a single
//! shared covariance on the mixture; location-scale measures carry one
//! covariance per atom.

mod gaussian;
mod sample;
mod voronoi;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use gaussian::{density, log_density, log_sum_exp, GaussianKernel};
pub use sample::{sample, sample_with_rng};
pub(crate) use voronoi::check_metric;
pub use voronoi::{voronoi_cells, voronoi_cells_with, AtomDistance, VoronoiPartition};

/// Weights below this are treated as zero and their atoms dropped.
pub const WEIGHT_EPSILON: f64 = 1e-12;

/// Tolerance on `|sum(weights) - 1|` accepted by [`MixingMeasure::new`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Whether covariances are known and shared or estimated per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    Fixed,
    Free,
}

/// Atom metric used for Voronoi cells and transport costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// `‖μ - μ'‖`
    MeanOnly,
    /// `‖μ - μ'‖ + ‖Σ - Σ'‖_F`
    Composite,
}

impl MetricKind {
    pub fn requires_covariance(self) -> bool {
        matches!(self, MetricKind::Composite)
    }
}

/// Compact parameter space: a box for the means and, in free mode, an
/// eigenvalue interval for the covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    eigen_min: f64,
    eigen_max: f64,
    scale_mode: ScaleMode,
}

impl ParameterSpace {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        eigen_min: f64,
        eigen_max: f64,
        scale_mode: ScaleMode,
    ) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidSpace(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpace(format!(
                    "coordinate {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        if !(eigen_min > 0.0 && eigen_min < eigen_max && eigen_max.is_finite()) {
            return Err(Error::InvalidSpace(format!(
                "eigenvalue interval [{eigen_min}, {eigen_max}] must satisfy 0 < lower < upper < inf"
            )));
        }
        Ok(Self {
            lower,
            upper,
            eigen_min,
            eigen_max,
            scale_mode,
        })
    }

    /// `[0, 1]^d` with a nominal eigenvalue interval.
    pub fn unit_box(d: usize, scale_mode: ScaleMode) -> Result<Self> {
        Self::new(vec![0.0; d], vec![1.0; d], 1e-6, 1.0, scale_mode)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    pub fn eigen_interval(&self) -> (f64, f64) {
        (self.eigen_min, self.eigen_max)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Diameter under the atom metric of the space's scale mode.
    ///
    /// The mean part is the box diagonal. In free mode the covariance part is
    /// the largest Frobenius distance between two SPD matrices with spectra in
    /// the eigenvalue interval, `(λ_max - λ_min)·√d`.
    pub fn diameter(&self) -> f64 {
        let box_diag = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt();
        match self.scale_mode {
            ScaleMode::Fixed => box_diag,
            ScaleMode::Free => {
                box_diag + (self.eigen_max - self.eigen_min) * (self.dim() as f64).sqrt()
            }
        }
    }

    /// `Δ = 1 ∨ diam(Θ)`.
    pub fn delta(&self) -> f64 {
        self.diameter().max(1.0)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        if atom.dim() != self.dim() {
            return false;
        }
        let in_box = atom
            .mean
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi);
        if !in_box {
            return false;
        }
        match (&atom.covariance, self.scale_mode) {
            (None, ScaleMode::Fixed) => true,
            (Some(cov), ScaleMode::Free) => {
                let eig = cov.clone().symmetric_eigen().eigenvalues;
                eig.iter()
                    .all(|&l| self.eigen_min <= l && l <= self.eigen_max)
            }
            _ => false,
        }
    }
}

/// One support point: a mean, and in location-scale models a covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    mean: DVector<f64>,
    covariance: Option<DMatrix<f64>>,
}

impl Atom {
    pub fn location(mean: impl Into<Vec<f64>>) -> Self {
        Self {
            mean: DVector::from_vec(mean.into()),
            covariance: None,
        }
    }

    pub fn scalar(mean: f64) -> Self {
        Self::location(vec![mean])
    }

    /// Location-scale atom; `covariance` is given row-major.
    pub fn location_scale(mean: impl Into<Vec<f64>>, covariance: &[f64]) -> Result<Self> {
        let mean = DVector::from_vec(mean.into());
        let d = mean.len();
        if covariance.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "covariance has {} entries, expected {}",
                covariance.len(),
                d * d
            )));
        }
        let cov = DMatrix::from_row_slice(d, d, covariance);
        Self::with_covariance(mean, cov)
    }

    pub fn with_covariance(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        validate_covariance(&covariance, mean.len())?;
        Ok(Self {
            mean,
            covariance: Some(covariance),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    /// `‖μ - μ'‖`
    pub fn mean_distance(&self, other: &Atom) -> f64 {
        (&self.mean - &other.mean).norm()
    }

    /// `‖Σ - Σ'‖_F`, `None` unless both atoms carry covariances.
    pub fn covariance_distance(&self, other: &Atom) -> Option<f64> {
        match (&self.covariance, &other.covariance) {
            (Some(a), Some(b)) => Some((a - b).norm()),
            _ => None,
        }
    }

    fn is_finite(&self) -> bool {
        self.mean.iter().all(|x| x.is_finite())
            && self
                .covariance
                .as_ref()
                .is_none_or(|c| c.iter().all(|x| x.is_finite()))
    }
}

fn validate_covariance(cov: &DMatrix<f64>, d: usize) -> Result<()> {
    if cov.nrows() != d || cov.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, expected {d}x{d}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let scale = cov.amax().max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::InvalidMeasure(format!(
                    "covariance not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if cov.clone().cholesky().is_none() {
        return Err(Error::InvalidMeasure(
            "covariance is not positive definite".into(),
        ));
    }
    Ok(())
}

/// Finitely supported probability measure `Σ_j p_j δ_{θ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMeasure {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
    shared_covariance: Option<DMatrix<f64>>,
}

impl MixingMeasure {
    /// Builds a measure from weights that already sum to one (within
    /// [`WEIGHT_SUM_TOLERANCE`]). Atoms with weight below [`WEIGHT_EPSILON`]
    /// are dropped and the rest renormalized.
    pub fn new(atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&atoms, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Self::normalized(atoms, weights)
    }

    /// Like [`MixingMeasure::new`] but rescales arbitrary positive weights.
    pub fn from_unnormalized(atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&atoms, &weights)?;
        Self::normalized(atoms, weights)
    }

    /// Equal weights on every atom.
    pub fn uniform(atoms: Vec<Atom>) -> Result<Self> {
        let k = atoms.len();
        Self::from_unnormalized(atoms, vec![1.0; k])
    }

    pub fn dirac(atom: Atom) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
            shared_covariance: None,
        }
    }

    fn normalized(atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let (atoms, mut weights): (Vec<_>, Vec<_>) = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| w / total >= WEIGHT_EPSILON)
            .unzip();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atom has positive weight".into()));
        }
        let kept: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= kept);
        Ok(Self {
            atoms,
            weights,
            shared_covariance: None,
        })
    }

    /// Attaches the covariance shared by every component of a location-only
    /// measure.
    pub fn with_shared_covariance(mut self, covariance: DMatrix<f64>) -> Result<Self> {
        if self.has_atom_covariances() {
            return Err(Error::InvalidMeasure(
                "atoms already carry their own covariances".into(),
            ));
        }
        validate_covariance(&covariance, self.dim())?;
        self.shared_covariance = Some(covariance);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.atoms.len()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, j: usize) -> &Atom {
        &self.atoms[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Atom)> {
        self.weights.iter().copied().zip(&self.atoms)
    }

    pub fn shared_covariance(&self) -> Option<&DMatrix<f64>> {
        self.shared_covariance.as_ref()
    }

    /// True when the atoms carry their own covariances (location-scale).
    pub fn has_atom_covariances(&self) -> bool {
        self.atoms[0].covariance.is_some()
    }

    pub fn scale_mode(&self) -> ScaleMode {
        if self.has_atom_covariances() {
            ScaleMode::Free
        } else {
            ScaleMode::Fixed
        }
    }

    /// Covariance of component `j` used by the density: the atom's own, or
    /// the shared one.
    pub fn component_covariance(&self, j: usize) -> Option<&DMatrix<f64>> {
        self.atoms[j]
            .covariance
            .as_ref()
            .or(self.shared_covariance.as_ref())
    }

    /// First pair of coincident atoms, if any.
    pub fn coincident_pair(&self) -> Option<(usize, usize)> {
        for i in 0..self.order() {
            for j in 0..i {
                let a = &self.atoms[i];
                let b = &self.atoms[j];
                let dist = a.mean_distance(b) + a.covariance_distance(b).unwrap_or(0.0);
                if dist == 0.0 {
                    return Some((j, i));
                }
            }
        }
        None
    }

    /// Distinct atoms with positive weights.
    pub fn is_exact_order(&self) -> bool {
        self.coincident_pair().is_none()
    }

    pub(crate) fn require_exact_order(&self) -> Result<()> {
        match self.coincident_pair() {
            Some((i, j)) => Err(Error::NotExactOrder(i, j)),
            None => Ok(()),
        }
    }

    /// Same measure with atoms (and weights) listed in the order `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.order()];
        if perm.len() != self.order() || perm.iter().any(|&p| p >= seen.len()) {
            return Err(Error::DimensionMismatch(
                "permutation does not match order".into(),
            ));
        }
        for &p in perm {
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::DimensionMismatch(format!("index {p} repeated")));
            }
        }
        Ok(Self {
            atoms: perm.iter().map(|&p| self.atoms[p].clone()).collect(),
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
            shared_covariance: self.shared_covariance.clone(),
        })
    }

    pub fn check_in(&self, space: &ParameterSpace) -> Result<()> {
        match self.atoms.iter().position(|a| !space.contains(a)) {
            Some(j) => Err(Error::InvalidMeasure(format!(
                "atom {j} lies outside the parameter space"
            ))),
            None => Ok(()),
        }
    }
}

fn check_weights(atoms: &[Atom], weights: &[f64]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidMeasure(
            "a mixing measure needs at least one atom".into(),
        ));
    }
    if atoms.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} atoms but {} weights",
            atoms.len(),
            weights.len()
        )));
    }
    let d = atoms[0].dim();
    if d == 0 {
        return Err(Error::InvalidMeasure(
            "atoms must have dimension >= 1".into(),
        ));
    }
    let with_cov = atoms[0].covariance.is_some();
    for (j, atom) in atoms.iter().enumerate() {
        if atom.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "atom {j} has dimension {}, expected {d}",
                atom.dim()
            )));
        }
        if atom.covariance.is_some() != with_cov {
            return Err(Error::InvalidMeasure(
                "either every atom carries a covariance or none does".into(),
            ));
        }
        if !atom.is_finite() {
            return Err(Error::InvalidMeasure(format!(
                "atom {j} has non-finite entries"
            )));
        }
    }
    if let Some(j) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidMeasure(format!(
            "weight {j} = {} is invalid",
            weights[j]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_weights_are_dropped_and_renormalized() {
        let g = MixingMeasure::new(
            vec![Atom::scalar(0.0), Atom::scalar(1.0), Atom::scalar(2.0)],
            vec![0.5, 1e-13, 0.5 - 1e-13],
        )
        .unwrap();
        assert_eq!(g.order(), 2);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = MixingMeasure::new(vec![Atom::scalar(0.0), Atom::scalar(1.0)], vec![0.5, 0.4]);
        assert!(matches!(err, Err(Error::InvalidMeasure(_))));
        let g = MixingMeasure::from_unnormalized(
            vec![Atom::scalar(0.0), Atom::scalar(1.0)],
            vec![1.0, 3.0],
        )
        .unwrap();
        assert_eq!(g.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn mixed_covariance_presence_is_rejected() {
        let a = Atom::location_scale(vec![0.0], &[1.0]).unwrap();
        let err = MixingMeasure::uniform(vec![a, Atom::scalar(1.0)]);
        assert!(matches!(err, Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn covariance_must_be_symmetric_positive_definite() {
        assert!(Atom::location_scale(vec![0.0, 0.0], &[1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(Atom::location_scale(vec![0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(Atom::location_scale(vec![0.0, 0.0], &[1.0, 0.5, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn exact_order_detects_duplicates() {
        let g = MixingMeasure::uniform(vec![Atom::scalar(0.0), Atom::scalar(0.0)]).unwrap();
        assert!(!g.is_exact_order());
        assert!(matches!(
            g.require_exact_order(),
            Err(Error::NotExactOrder(0, 1))
        ));
        let h = MixingMeasure::uniform(vec![Atom::scalar(0.0), Atom::scalar(0.1)]).unwrap();
        assert!(h.is_exact_order());
    }

    #[test]
    fn space_diameter_and_delta() {
        let unit = ParameterSpace::unit_box(2, ScaleMode::Fixed).unwrap();
        assert!((unit.diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert!((unit.delta() - 2f64.sqrt()).abs() < 1e-15);
        let small = ParameterSpace::new(vec![0.0], vec![0.5], 0.1, 1.0, ScaleMode::Fixed).unwrap();
        assert_eq!(small.delta(), 1.0);
        let free =
            ParameterSpace::new(vec![0.0; 2], vec![1.0; 2], 0.5, 1.5, ScaleMode::Free).unwrap();
        assert!((free.diameter() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn space_rejects_bad_bounds() {
        assert!(ParameterSpace::new(vec![1.0], vec![0.0], 0.1, 1.0, ScaleMode::Fixed).is_err());
        assert!(ParameterSpace::new(vec![0.0], vec![1.0], 0.0, 1.0, ScaleMode::Fixed).is_err());
        assert!(ParameterSpace::new(vec![0.0], vec![1.0], 2.0, 1.0, ScaleMode::Fixed).is_err());
        assert!(ParameterSpace::new(vec![], vec![], 0.1, 1.0, ScaleMode::Fixed).is_err());
    }

    #[test]
    fn space_membership() {
        let space = ParameterSpace::new(vec![-1.0], vec![1.0], 0.5, 2.0, ScaleMode::Free).unwrap();
        assert!(space.contains(&Atom::location_scale(vec![0.5], &[1.0]).unwrap()));
        assert!(!space.contains(&Atom::location_scale(vec![0.5], &[3.0]).unwrap()));
        assert!(!space.contains(&Atom::location_scale(vec![1.5], &[1.0]).unwrap()));
        assert!(!space.contains(&Atom::scalar(0.0)));
    }
}
