use super::{Atom, MetricKind, MixingMeasure};
use crate::error::{Error, Result};

/// Atom metric, split into its mean and covariance parts.
///
/// Losses only ever call [`AtomDistance::components`], once per
/// (atom, generator) pair, so a wrapping implementation can count evaluations.
pub trait AtomDistance {
    fn kind(&self) -> MetricKind;

    /// `(‖μ_a - μ_b‖, ‖Σ_a - Σ_b‖_F)`; the second part is 0 for mean-only.
    fn components(&self, a: &Atom, b: &Atom) -> (f64, f64);
}

impl AtomDistance for MetricKind {
    fn kind(&self) -> MetricKind {
        *self
    }

    fn components(&self, a: &Atom, b: &Atom) -> (f64, f64) {
        let mean = a.mean_distance(b);
        match self {
            MetricKind::MeanOnly => (mean, 0.0),
            MetricKind::Composite => (mean, a.covariance_distance(b).unwrap_or(0.0)),
        }
    }
}

/// Assignment of a measure's atoms to the Voronoi cells generated by the
/// atoms of a reference measure. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiPartition {
    cells: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    /// Per atom: (mean part, covariance part) of the distance to its generator.
    generator_distance: Vec<(f64, f64)>,
    metric: MetricKind,
}

impl VoronoiPartition {
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, j: usize) -> &[usize] {
        &self.cells[j]
    }

    /// Index of the reference atom whose cell contains atom `i`.
    pub fn generator_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Mean and covariance parts of the distance from atom `i` to its generator.
    pub fn generator_distance(&self, i: usize) -> (f64, f64) {
        self.generator_distance[i]
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
}

pub(crate) fn check_metric(g: &MixingMeasure, metric: MetricKind, what: &str) -> Result<()> {
    if metric.requires_covariance() && !g.has_atom_covariances() {
        return Err(Error::MetricMismatch(format!(
            "composite metric needs atom covariances, {what} has none"
        )));
    }
    Ok(())
}

/// Voronoi cells of `g`'s atoms generated by `reference`'s atoms. Ties go to
/// the smallest reference index so the cells partition `g`'s atoms.
pub fn voronoi_cells(
    g: &MixingMeasure,
    reference: &MixingMeasure,
    metric: MetricKind,
) -> Result<VoronoiPartition> {
    voronoi_cells_with(g, reference, &metric)
}

/// [`voronoi_cells`] with a caller-supplied metric; performs exactly
/// `g.order() * reference.order()` distance evaluations.
pub fn voronoi_cells_with<M: AtomDistance + ?Sized>(
    g: &MixingMeasure,
    reference: &MixingMeasure,
    metric: &M,
) -> Result<VoronoiPartition> {
    if g.dim() != reference.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measures have dimensions {} and {}",
            g.dim(),
            reference.dim()
        )));
    }
    let kind = metric.kind();
    check_metric(g, kind, "the measure")?;
    check_metric(reference, kind, "the reference measure")?;
    reference.require_exact_order()?;

    let mut cells = vec![Vec::new(); reference.order()];
    let mut assignment = Vec::with_capacity(g.order());
    let mut generator_distance = Vec::with_capacity(g.order());
    for (i, atom) in g.atoms().iter().enumerate() {
        let mut best = (0, f64::INFINITY, (0.0, 0.0));
        for (j, generator) in reference.atoms().iter().enumerate() {
            let parts = metric.components(atom, generator);
            let dist = parts.0 + parts.1;
            if dist < best.1 {
                best = (j, dist, parts);
            }
        }
        cells[best.0].push(i);
        assignment.push(best.0);
        generator_distance.push(best.2);
    }
    Ok(VoronoiPartition {
        cells,
        assignment,
        generator_distance,
        metric: kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn line(points: &[f64]) -> MixingMeasure {
        MixingMeasure::uniform(points.iter().map(|&x| Atom::scalar(x)).collect()).unwrap()
    }

    #[test]
    fn nearest_atom_assignment() {
        let p = voronoi_cells(
            &line(&[0.01, 0.19, 0.25]),
            &line(&[0.0, 0.2]),
            MetricKind::MeanOnly,
        )
        .unwrap();
        assert_eq!(p.cells(), &[vec![0], vec![1, 2]]);
        assert_eq!(p.assignment(), &[0, 1, 1]);
    }

    #[test]
    fn identity_case() {
        let g = line(&[0.0, 0.2, 0.7]);
        let p = voronoi_cells(&g, &g, MetricKind::MeanOnly).unwrap();
        assert_eq!(p.cells(), &[vec![0], vec![1], vec![2]]);
        assert!((0..3).all(|i| p.generator_distance(i) == (0.0, 0.0)));
    }

    #[test]
    fn equidistant_atom_goes_to_smallest_index() {
        let p = voronoi_cells(&line(&[0.1]), &line(&[0.0, 0.2]), MetricKind::MeanOnly).unwrap();
        assert_eq!(p.cells(), &[vec![0], vec![]]);
    }

    #[test]
    fn composite_metric_needs_covariances() {
        let err = voronoi_cells(&line(&[0.1]), &line(&[0.0, 0.2]), MetricKind::Composite);
        assert!(matches!(err, Err(Error::MetricMismatch(_))));
    }

    #[test]
    fn composite_metric_uses_covariance_gap() {
        let reference = MixingMeasure::uniform(vec![
            Atom::location_scale(vec![0.0], &[1.0]).unwrap(),
            Atom::location_scale(vec![0.1], &[3.0]).unwrap(),
        ])
        .unwrap();
        let g = MixingMeasure::dirac(Atom::location_scale(vec![0.09], &[1.1]).unwrap());
        let mean_only = voronoi_cells(&g, &reference, MetricKind::MeanOnly).unwrap();
        let composite = voronoi_cells(&g, &reference, MetricKind::Composite).unwrap();
        assert_eq!(mean_only.generator_of(0), 1);
        assert_eq!(composite.generator_of(0), 0);
        let (m, c) = composite.generator_distance(0);
        assert!((m - 0.09).abs() < 1e-15 && (c - 0.1).abs() < 1e-15);
    }

    #[test]
    fn reference_must_have_exact_order() {
        let err = voronoi_cells(&line(&[0.1]), &line(&[0.0, 0.0]), MetricKind::MeanOnly);
        assert!(matches!(err, Err(Error::NotExactOrder(0, 1))));
    }
}
