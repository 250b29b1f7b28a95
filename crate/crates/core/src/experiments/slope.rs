use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

use super::runner::ExperimentRecord;

/// Which records enter the per-`n` means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeFilter {
    /// Every record with a finite loss, including EM runs stopped at the
    /// iteration cap.
    #[default]
    Finite,
    /// Only records that met the EM tolerance.
    ConvergedOnly,
}

impl SlopeFilter {
    fn accepts(self, rec: &ExperimentRecord) -> bool {
        rec.loss_value.is_finite()
            && match self {
                SlopeFilter::Finite => true,
                SlopeFilter::ConvergedOnly => rec.converged,
            }
    }
}

/// Loss statistics at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopePoint {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (`count - 1` denominator; 0 for one record).
    pub std: f64,
    /// Two standard deviations.
    pub error_bar: f64,
    pub count: usize,
    /// Used records that stopped at the iteration cap.
    pub not_converged: usize,
    /// Records at this `n` rejected by the filter.
    pub excluded: usize,
}

/// Least-squares line through `(ln n, ln mean loss)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 0 when only two sizes are available.
    pub slope_se: f64,
    pub points: Vec<SlopePoint>,
}

/// Slope, intercept and slope standard error of the OLS fit of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / m;
    let ybar = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - xbar).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xbar) * (b - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let se = if x.len() > 2 {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

/// [`fit_slope_with`] using [`SlopeFilter::Finite`].
pub fn fit_slope(records: &[ExperimentRecord]) -> Result<SlopeFit> {
    fit_slope_with(records, SlopeFilter::Finite)
}

/// Groups records by `n`, averages the accepted losses and regresses
/// `ln mean` on `ln n`. Sizes with no accepted record are reported with
/// `count = 0` and left out of the regression.
pub fn fit_slope_with(records: &[ExperimentRecord], filter: SlopeFilter) -> Result<SlopeFit> {
    #[derive(Default)]
    struct Group {
        losses: Vec<f64>,
        not_converged: usize,
        excluded: usize,
    }
    let mut groups: BTreeMap<usize, Group> = BTreeMap::new();
    for rec in records {
        let g = groups.entry(rec.n).or_default();
        if filter.accepts(rec) {
            g.losses.push(rec.loss_value);
            g.not_converged += usize::from(!rec.converged);
        } else {
            g.excluded += 1;
        }
    }
    if !records.is_empty() && groups.values().all(|g| g.losses.is_empty()) {
        let what = match filter {
            SlopeFilter::Finite => "no records with a finite loss",
            SlopeFilter::ConvergedOnly => "no converged records",
        };
        return Err(Error::InsufficientData(what.into()));
    }
    let points: Vec<SlopePoint> = groups
        .into_iter()
        .map(
            |(
                n,
                Group {
                    losses,
                    not_converged,
                    excluded,
                },
            )| {
                let count = losses.len();
                let mean = losses.iter().sum::<f64>() / count as f64;
                let std = if count > 1 {
                    (losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (count - 1) as f64)
                        .sqrt()
                } else {
                    0.0
                };
                SlopePoint {
                    n,
                    mean,
                    std,
                    error_bar: 2.0 * std,
                    count,
                    not_converged,
                    excluded,
                }
            },
        )
        .collect();
    let usable: Vec<&SlopePoint> = points.iter().filter(|p| p.count > 0).collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 sizes with usable records, got {}",
            usable.len()
        )));
    }
    if let Some(p) = usable.iter().find(|p| !(p.mean > 0.0)) {
        return Err(Error::InsufficientData(format!(
            "mean loss at n = {} is {}, cannot take log",
            p.n, p.mean
        )));
    }
    let x: Vec<f64> = usable.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.mean.ln()).collect();
    let (slope, intercept, slope_se) = ols(&x, &y);
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, loss: f64, converged: bool) -> ExperimentRecord {
        ExperimentRecord {
            model: "A".into(),
            k: 3,
            k0: 2,
            n,
            replicate: 0,
            seed: 0,
            loss_name: "D".into(),
            loss_value: loss,
            em_iters: 10,
            converged,
            wall_ms: 0,
        }
    }

    #[test]
    fn two_points_give_difference_quotient() {
        let recs = [rec(100, 0.3, true), rec(1000, 0.05, true)];
        let fit = fit_slope(&recs).unwrap();
        let want = (0.05f64.ln() - 0.3f64.ln()) / (1000f64.ln() - 100f64.ln());
        assert!((fit.slope - want).abs() < 1e-14);
        assert_eq!(fit.slope_se, 0.0);
    }

    #[test]
    fn per_n_statistics() {
        let recs = [
            rec(100, 1.0, true),
            rec(100, 3.0, true),
            rec(100, 9.0, false),
            rec(200, 1.0, true),
        ];
        let fit = fit_slope_with(&recs, SlopeFilter::ConvergedOnly).unwrap();
        let p = &fit.points[0];
        assert_eq!((p.count, p.not_converged, p.excluded), (2, 0, 1));
        assert_eq!(p.mean, 2.0);
        assert!((p.std - 2f64.sqrt()).abs() < 1e-15);
        assert!((p.error_bar - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn capped_runs_count_by_default() {
        let recs = [
            rec(100, 1.0, true),
            rec(100, 3.0, false),
            rec(100, f64::NAN, false),
            rec(200, 1.0, true),
        ];
        let p = &fit_slope(&recs).unwrap().points[0];
        assert_eq!((p.count, p.not_converged, p.excluded), (2, 1, 1));
        assert_eq!(p.mean, 2.0);
    }

    #[test]
    fn insufficient_data() {
        assert!(matches!(
            fit_slope(&[rec(100, 0.1, true)]),
            Err(Error::InsufficientData(_))
        ));
        let capped = [rec(100, 0.1, false), rec(200, 0.1, false)];
        let err = fit_slope_with(&capped, SlopeFilter::ConvergedOnly).unwrap_err();
        assert!(err.to_string().contains("no converged records"));
        assert!(fit_slope(&capped).is_ok());
        let failed = [rec(100, f64::NAN, false), rec(200, f64::NAN, false)];
        assert!(fit_slope(&failed).is_err());
        assert!(fit_slope_with(
            &[rec(100, 0.1, true), rec(200, 0.1, false)],
            SlopeFilter::ConvergedOnly
        )
        .is_err());
    }
}
