//! Penalized maximum likelihood for Gaussian mixtures via a modified EM.
//!
//! The objective is `ℓ_n(G) + ξ Σ_j log p_j`. The penalty only touches the
//! mixing weights, so the E-step is the usual one and the M-step differs from
//! textbook EM in the weight update
//!
//! ```text
//! π_j ← (Σ_i w_ij + ξ) / (n + kξ)
//! ```
//!
//! which keeps every weight at least `ξ / (n + kξ)`. With `ξ = 0` this is
//! plain maximum likelihood.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measure::{log_sum_exp, Atom, GaussianKernel, MixingMeasure, ScaleMode};

/// Penalty weight `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Xi {
    /// `ξ = log n`
    LogN,
    Value(f64),
}

impl Xi {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Xi::LogN => (n as f64).ln(),
            Xi::Value(v) => v,
        }
    }
}

/// Starting point of the EM iterations.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Randomly split the `k` fitted components into `truth.order()`
    /// non-empty groups and start each component at its group's true
    /// parameters plus Gaussian jitter of standard deviation `jitter_scale`.
    /// Weights start uniform.
    Favorable {
        truth: MixingMeasure,
        jitter_scale: f64,
    },
    /// Means uniform in the bounding box of the data; free covariances start
    /// at the sample covariance. Weights start uniform.
    RandomBox,
    /// Start exactly at the given measure, which must have order `k`.
    FromMeasure(MixingMeasure),
}

/// Center used in the covariance M-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceCenter {
    /// The freshly updated mean (standard EM; preserves ascent).
    UpdatedMean,
    /// The mean from the previous iterate, as literally displayed in some
    /// statements of the algorithm. Kept for comparison only.
    PreviousMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Fitted order.
    pub k: usize,
    pub xi: Xi,
    /// Maximum number of EM steps `T`.
    pub max_iters: usize,
    /// Stop once the Euclidean norm of the parameter change is at most this.
    pub tol: f64,
    pub scale_mode: ScaleMode,
    /// Known covariance in fixed mode. When `None`, the covariances of the
    /// initial measure are held fixed.
    pub fixed_covariance: Option<DMatrix<f64>>,
    /// Eigenvalue floor applied to estimated covariances.
    pub cov_floor: f64,
    pub init: InitStrategy,
    pub covariance_center: CovarianceCenter,
    pub keep_responsibilities: bool,
}

impl EmConfig {
    /// Defaults: `ξ = log n`, `T = 2000`, `ε = 1e-8`, free covariances,
    /// eigenvalue floor `1e-6`.
    pub fn new(k: usize, init: InitStrategy) -> Self {
        Self {
            k,
            xi: Xi::LogN,
            max_iters: 2000,
            tol: 1e-8,
            scale_mode: ScaleMode::Free,
            fixed_covariance: None,
            cov_floor: 1e-6,
            init,
            covariance_center: CovarianceCenter::UpdatedMean,
            keep_responsibilities: false,
        }
    }

    pub fn with_xi(mut self, xi: Xi) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_scale_mode(mut self, scale_mode: ScaleMode) -> Self {
        self.scale_mode = scale_mode;
        self
    }

    pub fn with_fixed_covariance(mut self, covariance: DMatrix<f64>) -> Self {
        self.scale_mode = ScaleMode::Fixed;
        self.fixed_covariance = Some(covariance);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if let Xi::Value(v) = self.xi {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("xi = {v} must be finite and non-negative"));
            }
        }
        if !(self.cov_floor > 0.0) {
            return bad(format!("cov_floor = {} must be positive", self.cov_floor));
        }
        if let InitStrategy::Favorable {
            truth,
            jitter_scale,
        } = &self.init
        {
            if !(*jitter_scale > 0.0) {
                return bad(format!("jitter_scale = {jitter_scale} must be positive"));
            }
            if truth.order() > self.k {
                return bad(format!(
                    "favorable init needs k >= true order ({} > {})",
                    truth.order(),
                    self.k
                ));
            }
        }
        Ok(())
    }
}

/// Output of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub measure: MixingMeasure,
    /// Number of EM steps applied.
    pub iterations: usize,
    /// Penalized objective at the initial point and after every step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Final `n × k` responsibilities, when requested.
    pub responsibilities: Option<DMatrix<f64>>,
}

/// Row-major copy of an `n × d` data matrix.
struct Rows {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Rows {
    fn new(data: &DMatrix<f64>) -> Self {
        let (n, d) = data.shape();
        let mut values = Vec::with_capacity(n * d);
        for row in data.row_iter() {
            values.extend(row.iter());
        }
        Self { n, d, values }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<DMatrix<f64>>,
}

impl Params {
    fn k(&self) -> usize {
        self.weights.len()
    }

    fn from_measure(g: &MixingMeasure, fixed: Option<&DMatrix<f64>>) -> Result<Self> {
        let covs = (0..g.order())
            .map(|j| {
                fixed.or(g.component_covariance(j)).cloned().ok_or_else(|| {
                    Error::InvalidConfig("no covariance for the initial measure".into())
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            weights: g.weights().to_vec(),
            means: g
                .atoms()
                .iter()
                .map(|a| a.mean().as_slice().to_vec())
                .collect(),
            covs,
        })
    }

    fn to_measure(&self, scale_mode: ScaleMode) -> Result<MixingMeasure> {
        let shared = self.covs.iter().all(|c| c == &self.covs[0]);
        if scale_mode == ScaleMode::Fixed && shared {
            let atoms = self
                .means
                .iter()
                .map(|m| Atom::location(m.clone()))
                .collect();
            MixingMeasure::new(atoms, self.weights.clone())?
                .with_shared_covariance(self.covs[0].clone())
        } else {
            let atoms = self
                .means
                .iter()
                .zip(&self.covs)
                .map(|(m, c)| Atom::with_covariance(DVector::from_vec(m.clone()), c.clone()))
                .collect::<Result<_>>()?;
            MixingMeasure::new(atoms, self.weights.clone())
        }
    }

    fn kernels(&self) -> Result<Vec<GaussianKernel>> {
        self.means
            .iter()
            .zip(&self.covs)
            .enumerate()
            .map(|(j, (m, c))| {
                GaussianKernel::new(&DVector::from_column_slice(m), c)
                    .ok_or(Error::SingularCovariance(j))
            })
            .collect()
    }

    /// Euclidean norm of the change over (weights, means, covariances).
    fn distance(&self, other: &Params) -> f64 {
        let w: f64 = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let m: f64 = self
            .means
            .iter()
            .flatten()
            .zip(other.means.iter().flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let c: f64 = self
            .covs
            .iter()
            .zip(&other.covs)
            .map(|(a, b)| (a - b).norm_squared())
            .sum();
        (w + m + c).sqrt()
    }

    fn log_penalty(&self) -> f64 {
        self.weights.iter().map(|w| w.ln()).sum()
    }
}

/// E-step: fills the row-major `n × k` responsibilities and returns `ℓ_n`.
fn e_step(params: &Params, rows: &Rows, resp: &mut [f64]) -> Result<f64> {
    let kernels = params.kernels()?;
    let log_w: Vec<f64> = params.weights.iter().map(|w| w.ln()).collect();
    let k = params.k();
    let mut scratch = vec![0.0; rows.d];
    let mut loglik = 0.0;
    for i in 0..rows.n {
        let x = rows.row(i);
        let terms = &mut resp[i * k..(i + 1) * k];
        for (j, kernel) in kernels.iter().enumerate() {
            terms[j] = log_w[j] + kernel.log_density(x, &mut scratch);
        }
        let lse = log_sum_exp(terms);
        for t in terms.iter_mut() {
            *t = (*t - lse).exp();
        }
        loglik += lse;
    }
    Ok(loglik)
}

fn floor_eigenvalues(cov: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    (&out + out.transpose()) * 0.5
}

struct StepSettings {
    xi: f64,
    scale_mode: ScaleMode,
    cov_floor: f64,
    center: CovarianceCenter,
}

/// M-step from the responsibilities of the E-step at `params`.
fn m_step(params: &Params, rows: &Rows, resp: &[f64], s: &StepSettings) -> Params {
    let (n, d, k) = (rows.n, rows.d, params.k());
    let mut mass = vec![0.0; k];
    let mut sums = vec![vec![0.0; d]; k];
    for i in 0..n {
        let x = rows.row(i);
        for j in 0..k {
            let w = resp[i * k + j];
            mass[j] += w;
            for (acc, xv) in sums[j].iter_mut().zip(x) {
                *acc += w * xv;
            }
        }
    }

    let denom = n as f64 + k as f64 * s.xi;
    let weights = mass.iter().map(|m| (m + s.xi) / denom).collect();

    let mut means = params.means.clone();
    let mut covs = params.covs.clone();
    for j in 0..k {
        // A component with no responsibility at all keeps its parameters.
        if mass[j] < f64::MIN_POSITIVE {
            continue;
        }
        means[j] = sums[j].iter().map(|v| v / mass[j]).collect();
        if s.scale_mode == ScaleMode::Free {
            let center = match s.center {
                CovarianceCenter::UpdatedMean => &means[j],
                CovarianceCenter::PreviousMean => &params.means[j],
            };
            let mut scatter = DMatrix::zeros(d, d);
            for i in 0..n {
                let w = resp[i * k + j];
                let x = rows.row(i);
                for a in 0..d {
                    let da = x[a] - center[a];
                    for b in 0..=a {
                        scatter[(a, b)] += w * da * (x[b] - center[b]);
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    scatter[(b, a)] = scatter[(a, b)];
                }
            }
            covs[j] = floor_eigenvalues(&(scatter / mass[j]), s.cov_floor);
        }
    }
    Params {
        weights,
        means,
        covs,
    }
}

fn check_data(data: &DMatrix<f64>, k: usize) -> Result<()> {
    if data.nrows() < k || data.nrows() == 0 {
        return Err(Error::DegenerateData { n: data.nrows(), k });
    }
    if data.ncols() == 0 {
        return Err(Error::DimensionMismatch("data has no columns".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig(
            "data contains non-finite values".into(),
        ));
    }
    Ok(())
}

fn settings(cfg: &EmConfig, n: usize) -> StepSettings {
    StepSettings {
        xi: cfg.xi.resolve(n),
        scale_mode: cfg.scale_mode,
        cov_floor: cfg.cov_floor,
        center: cfg.covariance_center,
    }
}

/// `ℓ_n(G) + ξ Σ_j log p_j`, with the log-likelihood accumulated in log
/// space.
pub fn penalized_objective(g: &MixingMeasure, data: &DMatrix<f64>, xi: f64) -> Result<f64> {
    if let Some(j) = g.weights().iter().position(|&w| w <= 0.0) {
        return Err(Error::NonpositiveWeight(j));
    }
    if data.ncols() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, measure has dimension {}",
            data.ncols(),
            g.dim()
        )));
    }
    let params = Params::from_measure(g, None)?;
    let rows = Rows::new(data);
    let mut resp = vec![0.0; rows.n * params.k()];
    let loglik = e_step(&params, &rows, &mut resp)?;
    Ok(loglik + xi * params.log_penalty())
}

/// Posterior component probabilities `w_ij` as an `n × k` matrix.
pub fn responsibilities(g: &MixingMeasure, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if data.ncols() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, measure has dimension {}",
            data.ncols(),
            g.dim()
        )));
    }
    let params = Params::from_measure(g, None)?;
    let rows = Rows::new(data);
    let mut resp = vec![0.0; rows.n * params.k()];
    e_step(&params, &rows, &mut resp)?;
    Ok(DMatrix::from_row_slice(rows.n, params.k(), &resp))
}

/// One modified-EM step from `current`.
pub fn em_step(
    current: &MixingMeasure,
    data: &DMatrix<f64>,
    cfg: &EmConfig,
) -> Result<MixingMeasure> {
    cfg.validate()?;
    check_data(data, cfg.k)?;
    if current.order() != cfg.k {
        return Err(Error::InvalidConfig(format!(
            "measure has order {}, config expects k = {}",
            current.order(),
            cfg.k
        )));
    }
    if current.dim() != data.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, measure has dimension {}",
            data.ncols(),
            current.dim()
        )));
    }
    let fixed = match cfg.scale_mode {
        ScaleMode::Fixed => cfg.fixed_covariance.as_ref(),
        ScaleMode::Free => None,
    };
    let params = Params::from_measure(current, fixed)?;
    let rows = Rows::new(data);
    let mut resp = vec![0.0; rows.n * cfg.k];
    e_step(&params, &rows, &mut resp)?;
    let next = m_step(&params, &rows, &resp, &settings(cfg, rows.n));
    next.to_measure(cfg.scale_mode)
}

fn initial_params(cfg: &EmConfig, rows: &Rows, rng: &mut ChaCha8Rng) -> Result<Params> {
    let fixed = match cfg.scale_mode {
        ScaleMode::Fixed => cfg.fixed_covariance.as_ref(),
        ScaleMode::Free => None,
    };
    let k = cfg.k;
    let params = match &cfg.init {
        InitStrategy::FromMeasure(g) => {
            if g.order() != k {
                return Err(Error::InvalidConfig(format!(
                    "initial measure has order {}, expected {k}",
                    g.order()
                )));
            }
            Params::from_measure(g, fixed)?
        }
        InitStrategy::Favorable {
            truth,
            jitter_scale,
        } => {
            let k0 = truth.order();
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(rng);
            let mut group = vec![0; k];
            for (pos, &j) in order.iter().enumerate() {
                group[j] = if pos < k0 {
                    pos
                } else {
                    rng.random_range(0..k0)
                };
            }
            let base = Params::from_measure(truth, fixed)?;
            let jitter = |rng: &mut ChaCha8Rng| -> f64 {
                jitter_scale * rng.sample::<f64, _>(StandardNormal)
            };
            let mut means = Vec::with_capacity(k);
            let mut covs = Vec::with_capacity(k);
            for &l in &group {
                means.push(base.means[l].iter().map(|m| m + jitter(rng)).collect());
                let cov = match cfg.scale_mode {
                    ScaleMode::Fixed => base.covs[l].clone(),
                    ScaleMode::Free => {
                        let d = rows.d;
                        let e = DMatrix::from_fn(d, d, |_, _| jitter(rng));
                        floor_eigenvalues(
                            &(&base.covs[l] + (&e + e.transpose()) * 0.5),
                            cfg.cov_floor,
                        )
                    }
                };
                covs.push(cov);
            }
            Params {
                weights: vec![1.0 / k as f64; k],
                means,
                covs,
            }
        }
        InitStrategy::RandomBox => {
            let d = rows.d;
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for i in 0..rows.n {
                for (a, x) in rows.row(i).iter().enumerate() {
                    lo[a] = lo[a].min(*x);
                    hi[a] = hi[a].max(*x);
                }
            }
            let means = (0..k)
                .map(|_| {
                    (0..d)
                        .map(|a| lo[a] + (hi[a] - lo[a]) * rng.random::<f64>())
                        .collect()
                })
                .collect();
            let cov = match fixed {
                Some(c) => c.clone(),
                None if cfg.scale_mode == ScaleMode::Fixed => {
                    return Err(Error::InvalidConfig(
                        "fixed scale mode with random init needs a fixed covariance".into(),
                    ))
                }
                None => floor_eigenvalues(&sample_covariance(rows), cfg.cov_floor),
            };
            Params {
                weights: vec![1.0 / k as f64; k],
                means,
                covs: vec![cov; k],
            }
        }
    };
    if params.means.iter().any(|m| m.len() != rows.d) {
        return Err(Error::DimensionMismatch(format!(
            "initial measure dimension differs from data dimension {}",
            rows.d
        )));
    }
    Ok(params)
}

fn sample_covariance(rows: &Rows) -> DMatrix<f64> {
    let (n, d) = (rows.n, rows.d);
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(rows.row(i)) {
            *m += x / n as f64;
        }
    }
    DMatrix::from_fn(d, d, |a, b| {
        (0..n)
            .map(|i| (rows.row(i)[a] - mean[a]) * (rows.row(i)[b] - mean[b]))
            .sum::<f64>()
            / n as f64
    })
}

/// Runs modified EM until the parameter change is at most `cfg.tol` or
/// `cfg.max_iters` steps have been taken. `seed` drives the random parts of
/// the initialization only.
pub fn fit(data: &DMatrix<f64>, cfg: &EmConfig, seed: u64) -> Result<FitResult> {
    cfg.validate()?;
    check_data(data, cfg.k)?;
    let rows = Rows::new(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut params = initial_params(cfg, &rows, &mut rng)?;
    let step = settings(cfg, rows.n);

    let mut resp = vec![0.0; rows.n * cfg.k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let loglik = e_step(&params, &rows, &mut resp)?;
        trace.push(loglik + step.xi * params.log_penalty());
        let next = m_step(&params, &rows, &resp, &step);
        let change = next.distance(&params);
        params = next;
        iterations += 1;
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }
    let loglik = e_step(&params, &rows, &mut resp)?;
    trace.push(loglik + step.xi * params.log_penalty());

    Ok(FitResult {
        measure: params.to_measure(cfg.scale_mode)?,
        iterations,
        objective_trace: trace,
        converged,
        responsibilities: cfg
            .keep_responsibilities
            .then(|| DMatrix::from_row_slice(rows.n, cfg.k, &resp)),
    })
}
