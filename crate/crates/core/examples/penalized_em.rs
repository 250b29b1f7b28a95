//! Fit an over-specified mixture with the penalized EM algorithm and watch
//! the objective climb.

use mixrates::em::{fit, EmConfig, InitStrategy};
use mixrates::losses::{loss_dbar, RBarTable};
use mixrates::measure::{sample, Atom, MixingMeasure, ScaleMode};

fn main() -> mixrates::Result<()> {
    let truth = MixingMeasure::new(
        vec![
            Atom::location_scale(vec![-1.0], &[0.25])?,
            Atom::location_scale(vec![1.5], &[0.25])?,
        ],
        vec![0.4, 0.6],
    )?;
    let data = sample(&truth, 2000, 17)?;

    let cfg = EmConfig::new(3, InitStrategy::RandomBox).with_scale_mode(ScaleMode::Free);
    let res = fit(&data, &cfg, 17)?;

    for (i, obj) in res
        .objective_trace
        .iter()
        .enumerate()
        .filter(|(i, _)| i.is_power_of_two())
    {
        println!("step {i:>5}: objective {obj:.6}");
    }
    println!("{} steps, converged = {}", res.iterations, res.converged);
    for (j, (w, atom)) in res.measure.iter().enumerate() {
        let var = res
            .measure
            .component_covariance(j)
            .map_or(f64::NAN, |c| c[(0, 0)]);
        println!(
            "weight {w:.3}  mean {:+.3}  variance {var:.3}",
            atom.mean()[0]
        );
    }
    println!(
        "Dbar(G_n, G_0) = {:.4e}",
        loss_dbar(&res.measure, &truth, &RBarTable::default())?
    );
    Ok(())
}
