//! Assign the atoms of an over-fitted measure to the closest true atom.

use mixrates::measure::{voronoi_cells, Atom, MetricKind, MixingMeasure};

fn main() -> mixrates::Result<()> {
    let g0 = MixingMeasure::uniform(vec![
        Atom::location(vec![0.0, 0.0]),
        Atom::location(vec![1.0, 0.0]),
    ])?;
    let g = MixingMeasure::new(
        vec![
            Atom::location(vec![0.1, 0.0]),
            Atom::location(vec![-0.05, 0.1]),
            Atom::location(vec![0.9, -0.1]),
            // equidistant: ties go to the first generator
            Atom::location(vec![0.5, 0.0]),
        ],
        vec![0.3, 0.2, 0.4, 0.1],
    )?;

    let cells = voronoi_cells(&g, &g0, MetricKind::MeanOnly)?;
    for (j, cell) in cells.cells().iter().enumerate() {
        let mass: f64 = cell.iter().map(|&i| g.weights()[i]).sum();
        println!("cell {j}: atoms {cell:?}, mass {mass:.2}");
    }
    Ok(())
}
