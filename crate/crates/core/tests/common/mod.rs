//! Reference implementations shared by the integration tests. Nothing here
//! calls into the transport, loss or EM code of the crate.

#![allow(dead_code)]

use mixrates::measure::{Atom, MixingMeasure};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Flat Dirichlet draw via normalized Gamma(1, 1) variables.
pub fn dirichlet<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let gamma = Gamma::<f64>::new(1.0, 1.0).unwrap();
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng).max(1e-6)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|g| g / total).collect()
}

/// Random location measure with `k` atoms uniform in `[0, 1]^d`.
pub fn random_measure<R: Rng>(rng: &mut R, k: usize, d: usize) -> MixingMeasure {
    let atoms = (0..k)
        .map(|_| Atom::location((0..d).map(|_| rng.random::<f64>()).collect::<Vec<_>>()))
        .collect();
    MixingMeasure::new(atoms, dirichlet(rng, k)).unwrap()
}

/// Random measure whose atoms are small perturbations of `center`'s atoms
/// (each center atom gets at least one).
pub fn perturbed_measure<R: Rng>(
    rng: &mut R,
    center: &MixingMeasure,
    k: usize,
    scale: f64,
) -> MixingMeasure {
    let k0 = center.order();
    let atoms = (0..k)
        .map(|i| {
            let base = if i < k0 { i } else { rng.random_range(0..k0) };
            let mean: Vec<f64> = center
                .atom(base)
                .mean()
                .iter()
                .map(|m| (m + scale * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0))
                .collect();
            Atom::location(mean)
        })
        .collect();
    MixingMeasure::new(atoms, dirichlet(rng, k)).unwrap()
}

/// `W_r^r` between two measures on the real line through the monotone
/// (sorted quantile) coupling.
pub fn quantile_wasserstein_pow(a: &[(f64, f64)], b: &[(f64, f64)], r: f64) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let cost = (a[i].0 - b[j].0).abs().powf(r);
        if ra < rb {
            total += ra * cost;
            rb -= ra;
            i += 1;
            ra = a.get(i).map_or(0.0, |p| p.1);
        } else if rb < ra {
            total += rb * cost;
            ra -= rb;
            j += 1;
            rb = b.get(j).map_or(0.0, |p| p.1);
        } else {
            total += ra * cost;
            i += 1;
            j += 1;
            ra = a.get(i).map_or(0.0, |p| p.1);
            rb = b.get(j).map_or(0.0, |p| p.1);
        }
    }
    total
}

/// `(location, weight)` pairs of a one-dimensional measure.
pub fn line_points(g: &MixingMeasure) -> Vec<(f64, f64)> {
    g.iter().map(|(w, a)| (a.mean()[0], w)).collect()
}

/// Gaussian density by explicit inverse and determinant, `d <= 2`.
pub fn normal_pdf(x: &[f64], mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = mean.len();
    let diff: Vec<f64> = (0..d).map(|a| x[a] - mean[a]).collect();
    let (det, quad) = match d {
        1 => (cov[(0, 0)], diff[0] * diff[0] / cov[(0, 0)]),
        2 => {
            let (a, b, c) = (cov[(0, 0)], cov[(0, 1)], cov[(1, 1)]);
            let det = a * c - b * b;
            let q =
                (c * diff[0] * diff[0] - 2.0 * b * diff[0] * diff[1] + a * diff[1] * diff[1]) / det;
            (det, q)
        }
        _ => panic!("reference density handles d <= 2"),
    };
    (-0.5 * quad).exp() / ((2.0 * std::f64::consts::PI).powi(d as i32) * det).sqrt()
}

/// Component parameters `(weight, mean, covariance)`.
pub type Components = Vec<(f64, DVector<f64>, DMatrix<f64>)>;

pub fn components(g: &MixingMeasure) -> Components {
    (0..g.order())
        .map(|j| {
            (
                g.weights()[j],
                g.atom(j).mean().clone(),
                g.component_covariance(j).expect("covariance").clone(),
            )
        })
        .collect()
}

/// One step of textbook maximum-likelihood EM (no penalty), computed with
/// plain densities. `free` selects whether covariances are re-estimated.
pub fn textbook_em_step(params: &Components, data: &DMatrix<f64>, free: bool) -> Components {
    let (n, d) = data.shape();
    let k = params.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| data.row(i).iter().copied().collect())
        .collect();
    let mut resp = vec![vec![0.0; k]; n];
    for (i, x) in rows.iter().enumerate() {
        let dens: Vec<f64> = params
            .iter()
            .map(|(w, m, c)| w * normal_pdf(x, m, c))
            .collect();
        let total: f64 = dens.iter().sum();
        for j in 0..k {
            resp[i][j] = dens[j] / total;
        }
    }
    (0..k)
        .map(|j| {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            let mut mean = DVector::zeros(d);
            for (i, x) in rows.iter().enumerate() {
                for a in 0..d {
                    mean[a] += resp[i][j] * x[a];
                }
            }
            mean /= nj;
            let cov = if free {
                let mut s = DMatrix::zeros(d, d);
                for (i, x) in rows.iter().enumerate() {
                    for a in 0..d {
                        for b in 0..d {
                            s[(a, b)] += resp[i][j] * (x[a] - mean[a]) * (x[b] - mean[b]);
                        }
                    }
                }
                s / nj
            } else {
                params[j].2.clone()
            };
            (nj / n as f64, mean, cov)
        })
        .collect()
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (m * (m * m - 1.0))
}
