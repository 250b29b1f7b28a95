use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::gaussian::kernels;
use super::MixingMeasure;
use crate::error::Result;

/// Draws `n` i.i.d. points from `p_G` as an `n × d` matrix.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)` (counter-based, platform
/// independent). Each row draws one uniform for the component label and `d`
/// standard normals via the ziggurat sampler of `rand_distr`, then maps them
/// through the component's Cholesky factor.
pub fn sample(g: &MixingMeasure, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(g, n, &mut rng)
}

pub fn sample_with_rng<R: Rng + ?Sized>(
    g: &MixingMeasure,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let kernels = kernels(g)?;
    let d = g.dim();
    let cumulative: Vec<f64> = g
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let last = cumulative.len() - 1;

    let mut out = DMatrix::zeros(n, d);
    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    for i in 0..n {
        let u: f64 = rng.random();
        let label = cumulative.iter().position(|&c| u < c).unwrap_or(last);
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        kernels[label].transform(&z, &mut x);
        for (j, xj) in x.iter().enumerate() {
            out[(i, j)] = *xj;
        }
    }
    Ok(out)
}
