//! How the Voronoi losses and the generalized transport cost react when two
//! fitted atoms collapse onto one true atom, compared with `W_1` and `W_2`.

use mixrates::losses::{loss_d, loss_dbar, loss_wtilde, RBarTable};
use mixrates::measure::{Atom, MetricKind, MixingMeasure};
use mixrates::transport::wasserstein;

/// Drops the covariances, keeping means and weights.
fn locations(m: &MixingMeasure) -> mixrates::Result<MixingMeasure> {
    let atoms = m
        .atoms()
        .iter()
        .map(|a| Atom::location(a.mean().as_slice().to_vec()))
        .collect();
    MixingMeasure::new(atoms, m.weights().to_vec())
}

fn main() -> mixrates::Result<()> {
    let cov = |v: f64| Atom::location_scale(vec![0.0], &[v]);
    let g0 = MixingMeasure::new(
        vec![cov(1.0)?, Atom::location_scale(vec![2.0], &[1.0])?],
        vec![0.5, 0.5],
    )?;
    let table = RBarTable::default();

    println!(
        "{:>8} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "t", "D", "Dbar", "Wtilde", "W1", "W2"
    );
    for t in [0.1, 0.03, 0.01, 0.003] {
        // the first true atom splits into two, symmetric about it
        let g = MixingMeasure::new(
            vec![
                Atom::location_scale(vec![-t], &[1.0 + t])?,
                Atom::location_scale(vec![t], &[1.0 - t])?,
                Atom::location_scale(vec![2.0], &[1.0])?,
            ],
            vec![0.25, 0.25, 0.5],
        )?;
        println!(
            "{t:>8} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            loss_d(&locations(&g)?, &locations(&g0)?)?,
            loss_dbar(&g, &g0, &table)?,
            loss_wtilde(&locations(&g)?, &locations(&g0)?, &locations(&g0)?)?,
            wasserstein(&g, &g0, 1.0, MetricKind::Composite)?,
            wasserstein(&g, &g0, 2.0, MetricKind::Composite)?,
        );
    }
    Ok(())
}
