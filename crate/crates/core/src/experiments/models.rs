use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::em::{EmConfig, InitStrategy};
use crate::error::{Error, Result};
use crate::losses::{loss_d, loss_dbar, loss_wtilde, LossKind, RBarTable};
use crate::measure::{Atom, MixingMeasure, ParameterSpace, ScaleMode};

/// Known component variance of Models A and C.
pub const KNOWN_VARIANCE: f64 = 0.01;

/// Smallest covariance eigenvalue admitted by Model B's parameter space. The
/// smallest true eigenvalue is about `6.99e-4`. EM floors fitted eigenvalues
/// here.
pub const MODEL_B_EIGEN_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelName {
    A,
    B,
    C,
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelName::A => "A",
            ModelName::B => "B",
            ModelName::C => "C",
        })
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ModelName::A),
            "B" | "b" => Ok(ModelName::B),
            "C" | "c" => Ok(ModelName::C),
            other => Err(Error::UnsupportedModel(format!("unknown model {other:?}"))),
        }
    }
}

/// How Model C spreads mass over its atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelCWeights {
    /// Half the mass on the atom at 0, the other half split evenly over the
    /// atoms that merge into 0.2, so `G_0^n → G_*` as `n` grows.
    CellBalanced,
    /// Equal weight on every atom.
    Uniform,
}

/// One of the three simulation models together with the fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: ModelName,
    pub k0: usize,
    pub k: usize,
    pub d: usize,
    pub scale_mode: ScaleMode,
    pub loss: LossKind,
    /// Limit measure generating the `W̃` cells (Model C only).
    pub g_star: Option<MixingMeasure>,
    pub space: ParameterSpace,
    pub c_weights: ModelCWeights,
}

/// `ε_n = n^{-1/(4k₀-6)}`
pub fn epsilon_n(n: usize, k0: usize) -> f64 {
    (n as f64).powf(-1.0 / (4.0 * k0 as f64 - 6.0))
}

fn isotropic(d: usize, variance: f64) -> DMatrix<f64> {
    DMatrix::identity(d, d) * variance
}

impl ModelSpec {
    /// Validates the `(name, k0, k)` combination. `k0` defaults to 2 for A,
    /// 3 for B and `k` for C. Supported fitted orders: A `k ∈ {3, 4}`, B `k ∈ {4, 5}`,
    /// C `k = k0 ∈ {3, 4}`.
    pub fn new(name: ModelName, k0: Option<usize>, k: usize) -> Result<Self> {
        let unsupported = |msg: String| Err(Error::UnsupportedModel(msg));
        let (k0, d, scale_mode, loss, ks, space) = match name {
            ModelName::A => (
                k0.unwrap_or(2),
                2,
                ScaleMode::Fixed,
                LossKind::D,
                vec![3, 4],
                ParameterSpace::new(vec![-1.0; 2], vec![1.0; 2], 1e-4, 1.0, ScaleMode::Fixed)?,
            ),
            ModelName::B => (
                k0.unwrap_or(3),
                2,
                ScaleMode::Free,
                LossKind::DBar,
                vec![4, 5],
                ParameterSpace::new(
                    vec![-1.0; 2],
                    vec![1.0; 2],
                    MODEL_B_EIGEN_MIN,
                    1.0,
                    ScaleMode::Free,
                )?,
            ),
            ModelName::C => {
                let k0 = k0.unwrap_or(k);
                (
                    k0,
                    1,
                    ScaleMode::Fixed,
                    LossKind::WTilde,
                    vec![k0],
                    ParameterSpace::new(vec![-3.0], vec![3.0], 1e-4, 1.0, ScaleMode::Fixed)?,
                )
            }
        };
        let k0_ok = match name {
            ModelName::A => k0 == 2,
            ModelName::B => k0 == 3,
            ModelName::C => k0 == 3 || k0 == 4,
        };
        if !k0_ok {
            return unsupported(format!("model {name} does not define k0 = {k0}"));
        }
        if !ks.contains(&k) {
            return unsupported(format!(
                "model {name} with k0 = {k0} supports k in {ks:?}, got {k}"
            ));
        }
        let g_star = match name {
            ModelName::C => Some(
                MixingMeasure::new(vec![Atom::scalar(0.0), Atom::scalar(0.2)], vec![0.5, 0.5])?
                    .with_shared_covariance(isotropic(1, KNOWN_VARIANCE))?,
            ),
            _ => None,
        };
        Ok(Self {
            name,
            k0,
            k,
            d,
            scale_mode,
            loss,
            g_star,
            space,
            c_weights: ModelCWeights::CellBalanced,
        })
    }

    pub fn with_c_weights(mut self, weights: ModelCWeights) -> Self {
        self.c_weights = weights;
        self
    }

    /// Whether the true measure changes with the sample size.
    pub fn depends_on_n(&self) -> bool {
        self.name == ModelName::C
    }

    /// True mixing measure for sample size `n` (only Model C uses `n`).
    pub fn true_measure(&self, n: usize) -> Result<MixingMeasure> {
        match self.name {
            ModelName::A => MixingMeasure::new(
                vec![
                    Atom::location(vec![0.0, 0.0]),
                    Atom::location(vec![0.2, 0.2]),
                ],
                vec![0.5, 0.5],
            )?
            .with_shared_covariance(isotropic(2, KNOWN_VARIANCE)),
            ModelName::B => {
                let atoms = vec![
                    Atom::location_scale(
                        vec![0.0, 0.3],
                        &[0.042824, 0.017324, 0.017324, 0.081759],
                    )?,
                    Atom::location_scale(vec![0.1, -0.4], &[0.0175, -0.0125, -0.0125, 0.0175])?,
                    Atom::location_scale(vec![0.5, 0.2], &[0.01, -0.0125, -0.0125, 0.0175])?,
                ];
                // printed weights 1/3, 1/4, 1/3 sum to 11/12
                MixingMeasure::from_unnormalized(atoms, vec![1.0 / 3.0, 1.0 / 4.0, 1.0 / 3.0])
            }
            ModelName::C => {
                if n == 0 {
                    return Err(Error::InvalidConfig("Model C needs n >= 1".into()));
                }
                let eps = epsilon_n(n, self.k0);
                let mut means = vec![0.0, 0.2 + eps, 0.2 + 4.0 * eps];
                if self.k0 == 4 {
                    means.push(0.2 - 1.5 * eps);
                }
                let weights = match self.c_weights {
                    ModelCWeights::Uniform => vec![1.0 / self.k0 as f64; self.k0],
                    ModelCWeights::CellBalanced => {
                        let rest = 0.5 / (self.k0 - 1) as f64;
                        std::iter::once(0.5)
                            .chain(std::iter::repeat_n(rest, self.k0 - 1))
                            .collect()
                    }
                };
                MixingMeasure::new(means.into_iter().map(Atom::scalar).collect(), weights)?
                    .with_shared_covariance(isotropic(1, KNOWN_VARIANCE))
            }
        }
    }

    /// Favorable-start EM configuration used by the experiments.
    pub fn em_config(&self, truth: &MixingMeasure, jitter_scale: f64) -> EmConfig {
        let init = InitStrategy::Favorable {
            truth: truth.clone(),
            jitter_scale,
        };
        let cfg = EmConfig::new(self.k, init);
        match self.scale_mode {
            ScaleMode::Fixed => cfg.with_fixed_covariance(isotropic(self.d, KNOWN_VARIANCE)),
            ScaleMode::Free => {
                let mut cfg = cfg.with_scale_mode(ScaleMode::Free);
                cfg.cov_floor = self.space.eigen_interval().0;
                cfg
            }
        }
    }

    /// The model's loss between a fitted and the true measure.
    pub fn loss(&self, fitted: &MixingMeasure, truth: &MixingMeasure) -> Result<f64> {
        match self.loss {
            LossKind::D => loss_d(fitted, truth),
            LossKind::DBar => loss_dbar(fitted, truth, &RBarTable::default()),
            LossKind::WTilde => {
                let g_star = self.g_star.as_ref().expect("Model C carries G_*");
                loss_wtilde(fitted, truth, g_star)
            }
        }
    }
}

/// True measure and model description for `(name, k0, k)` at sample size `n`.
pub fn build_model(
    name: ModelName,
    k0: Option<usize>,
    k: usize,
    n: usize,
) -> Result<(MixingMeasure, ModelSpec)> {
    let spec = ModelSpec::new(name, k0, k)?;
    Ok((spec.true_measure(n)?, spec))
}
