use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::MixingMeasure;
use crate::error::{Error, Result};

/// Multivariate normal density with a precomputed Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    mean: Vec<f64>,
    /// Lower Cholesky factor, row-major.
    chol: Vec<f64>,
    log_norm: f64,
}

impl GaussianKernel {
    /// `None` when `covariance` is not positive definite.
    pub fn new(mean: &DVector<f64>, covariance: &DMatrix<f64>) -> Option<Self> {
        let d = mean.len();
        let l = covariance.clone().cholesky()?.unpack();
        let mut chol = vec![0.0; d * d];
        let mut log_det_half = 0.0;
        for i in 0..d {
            for j in 0..=i {
                chol[i * d + j] = l[(i, j)];
            }
            log_det_half += l[(i, i)].ln();
        }
        Some(Self {
            mean: mean.as_slice().to_vec(),
            chol,
            log_norm: -0.5 * d as f64 * (2.0 * PI).ln() - log_det_half,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `log N(x; μ, Σ)`. `scratch` must have length `d`.
    pub fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        let mut quad = 0.0;
        for i in 0..d {
            let row = &self.chol[i * d..i * d + i];
            let mut acc = x[i] - self.mean[i];
            for (l, z) in row.iter().zip(scratch.iter()) {
                acc -= l * z;
            }
            let z = acc / self.chol[i * d + i];
            scratch[i] = z;
            quad += z * z;
        }
        self.log_norm - 0.5 * quad
    }

    /// `μ + L z`, written into `out`.
    pub(crate) fn transform(&self, z: &[f64], out: &mut [f64]) {
        let d = self.mean.len();
        for i in 0..d {
            let row = &self.chol[i * d..=i * d + i];
            out[i] = self.mean[i] + row.iter().zip(z).map(|(l, z)| l * z).sum::<f64>();
        }
    }
}

/// `log Σ exp(v_i)`, stable for large magnitudes; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn kernels(g: &MixingMeasure) -> Result<Vec<GaussianKernel>> {
    (0..g.order())
        .map(|j| {
            let cov = g.component_covariance(j).ok_or_else(|| {
                Error::InvalidMeasure("density needs a covariance for every component".into())
            })?;
            GaussianKernel::new(g.atom(j).mean(), cov).ok_or(Error::SingularCovariance(j))
        })
        .collect()
}

/// `log p_G(x)`, accumulated in log space.
pub fn log_density(g: &MixingMeasure, x: &[f64]) -> Result<f64> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, measure has dimension {}",
            x.len(),
            g.dim()
        )));
    }
    let kernels = kernels(g)?;
    let mut scratch = vec![0.0; x.len()];
    let terms: Vec<f64> = kernels
        .iter()
        .zip(g.weights())
        .map(|(k, w)| w.ln() + k.log_density(x, &mut scratch))
        .collect();
    Ok(log_sum_exp(&terms))
}

/// `p_G(x) = Σ_j p_j N(x; μ_j, Σ_j)`.
pub fn density(g: &MixingMeasure, x: &[f64]) -> Result<f64> {
    log_density(g, x).map(f64::exp)
}
