//! Wasserstein distances between two mixing measures and the optimal plan.

use mixrates::measure::{Atom, MetricKind, MixingMeasure};
use mixrates::transport::{distance_cost, solve_ot, wasserstein};

fn main() -> mixrates::Result<()> {
    let g = MixingMeasure::new(
        vec![Atom::scalar(0.0), Atom::scalar(0.4), Atom::scalar(1.0)],
        vec![0.2, 0.3, 0.5],
    )?;
    let h = MixingMeasure::new(vec![Atom::scalar(0.1), Atom::scalar(0.9)], vec![0.6, 0.4])?;

    for r in [1.0, 2.0, 3.0] {
        println!(
            "W_{r} = {:.6}",
            wasserstein(&g, &h, r, MetricKind::MeanOnly)?
        );
    }

    let cost = distance_cost(&g, &h, 1.0, &MetricKind::MeanOnly)?;
    let sol = solve_ot(g.weights(), h.weights(), &cost)?;
    println!("plan for r = 1 (rows: G, columns: H)");
    for i in 0..g.order() {
        let row: Vec<String> = (0..h.order())
            .map(|j| format!("{:.2}", sol.plan.get(i, j)))
            .collect();
        println!("  {}", row.join("  "));
    }
    Ok(())
}
