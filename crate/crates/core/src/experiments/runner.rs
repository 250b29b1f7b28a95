use std::io::{Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, Xi};
use crate::error::{Error, Result};
use crate::measure::sample;

use super::models::ModelSpec;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "MIXRATES_THREADS";

/// CSV header of experiment records.
pub const CSV_HEADER: &str =
    "model,k,k0,n,replicate,seed,loss_name,loss_value,em_iters,converged,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 10 log-spaced sizes in `[10², 10⁴]`, 10 replicates.
    Desk,
    /// 100 log-spaced sizes in `[10², 10⁵]`, 20 replicates.
    Paper,
}

impl Scale {
    pub fn n_grid(self) -> Vec<usize> {
        match self {
            Scale::Desk => log_spaced_grid(100, 10_000, 10),
            Scale::Paper => log_spaced_grid(100, 100_000, 100),
        }
    }

    pub fn replicates(self) -> usize {
        match self {
            Scale::Desk => 10,
            Scale::Paper => 20,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::InvalidConfig(format!("unknown scale {other:?}"))),
        }
    }
}

/// `count` sizes spaced evenly in `log n` between `lo` and `hi` (inclusive),
/// rounded to the nearest integer and deduplicated.
pub fn log_spaced_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Overrides of the EM settings used by every replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmOverrides {
    pub xi: Xi,
    pub max_iters: usize,
    pub tol: f64,
    pub jitter_scale: f64,
}

impl Default for EmOverrides {
    fn default() -> Self {
        Self {
            xi: Xi::LogN,
            max_iters: 2000,
            tol: 1e-8,
            jitter_scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub em: EmOverrides,
    /// Worker pool size. `None` reads [`THREADS_ENV`], then falls back to the
    /// number of logical cores.
    pub threads: Option<usize>,
    /// Record wall time. Off by default so output is byte-reproducible.
    pub timing: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, n_grid: Vec<usize>, replicates: usize, base_seed: u64) -> Self {
        Self {
            model,
            n_grid,
            replicates,
            base_seed,
            em: EmOverrides::default(),
            threads: None,
            timing: false,
            output: None,
        }
    }

    pub fn at_scale(model: ModelSpec, scale: Scale, base_seed: u64) -> Self {
        Self::new(model, scale.n_grid(), scale.replicates(), base_seed)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "n_grid must be strictly increasing: {:?}",
                self.n_grid
            ));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    /// Seed of replicate `r` at grid position `i`.
    pub fn seed_for(&self, i: usize, r: usize) -> u64 {
        self.base_seed
            .wrapping_add((i * self.replicates + r) as u64)
    }
}

/// One `(n, replicate)` outcome; a row of the experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub model: String,
    pub k: usize,
    pub k0: usize,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub loss_name: String,
    /// `NaN` when the replicate failed.
    pub loss_value: f64,
    pub em_iters: usize,
    pub converged: bool,
    pub wall_ms: u64,
}

/// Runs one replicate. Errors from sampling, fitting or the loss are caught
/// and turn into a record with `converged = false` and a `NaN` loss.
pub fn run_replicate(
    spec: &ModelSpec,
    em: &EmOverrides,
    n: usize,
    replicate: usize,
    seed: u64,
    timing: bool,
) -> ExperimentRecord {
    let start = Instant::now();
    let outcome = (|| -> Result<(f64, usize, bool)> {
        let truth = spec.true_measure(n)?;
        let data = sample(&truth, n, seed)?;
        let cfg = spec
            .em_config(&truth, em.jitter_scale)
            .with_xi(em.xi)
            .with_max_iters(em.max_iters)
            .with_tol(em.tol);
        let res = fit(&data, &cfg, seed)?;
        let loss = spec.loss(&res.measure, &truth)?;
        Ok((loss, res.iterations, res.converged))
    })();
    let (loss_value, em_iters, converged) = outcome.unwrap_or((f64::NAN, 0, false));
    ExperimentRecord {
        model: spec.name.to_string(),
        k: spec.k,
        k0: spec.k0,
        n,
        replicate,
        seed,
        loss_name: spec.loss.name().to_string(),
        loss_value,
        em_iters,
        converged,
        wall_ms: if timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    }
}

fn pool_size(cfg: &ExperimentConfig) -> usize {
    cfg.threads
        .or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()?
                .trim()
                .parse()
                .ok()
                .filter(|&t| t > 0)
        })
        .unwrap_or(0)
}

/// Runs every `(n, replicate)` pair and returns the records sorted by
/// `(n, replicate)`. If `cfg.output` is set the CSV is also written there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, u64)> = cfg
        .n_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| (0..cfg.replicates).map(move |r| (i, n, r)))
        .map(|(i, n, r)| (n, r, cfg.seed_for(i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(pool_size(cfg))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let records: Vec<ExperimentRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, r, seed)| run_replicate(&cfg.model, &cfg.em, n, r, seed, cfg.timing))
            .collect()
    });
    if let Some(path) = &cfg.output {
        let file = std::fs::File::create(path)?;
        write_records_csv(std::io::BufWriter::new(file), &records)?;
    }
    Ok(records)
}

/// Writes the header and one row per record, LF-terminated.
pub fn write_records_csv<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for rec in records {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!(
            "unexpected CSV header {:?}",
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ModelName;

    #[test]
    fn desk_grid_endpoints() {
        let g = Scale::Desk.n_grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 100);
        assert_eq!(g[9], 10_000);
        assert_eq!(g[1], 167);
        assert_eq!(Scale::Paper.n_grid().len(), 100);
        assert_eq!(*Scale::Paper.n_grid().last().unwrap(), 100_000);
    }

    #[test]
    fn seeds_are_distinct_per_task() {
        let spec = ModelSpec::new(ModelName::A, None, 3).unwrap();
        let cfg = ExperimentConfig::new(spec, vec![100, 200], 3, 40);
        let seeds: Vec<u64> = (0..2)
            .flat_map(|i| (0..3).map(move |r| (i, r)))
            .map(|(i, r)| cfg.seed_for(i, r))
            .collect();
        assert_eq!(seeds, vec![40, 41, 42, 43, 44, 45]);
    }

    #[test]
    fn invalid_configs() {
        let spec = ModelSpec::new(ModelName::A, None, 3).unwrap();
        assert!(ExperimentConfig::new(spec.clone(), vec![200, 100], 1, 0)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(spec.clone(), vec![100, 100], 1, 0)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(spec.clone(), vec![100], 0, 0)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(spec, vec![], 1, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn single_record_is_finite() {
        let spec = ModelSpec::new(ModelName::A, None, 3).unwrap();
        let cfg = ExperimentConfig::new(spec, vec![100], 1, 7).with_threads(1);
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].loss_value.is_finite() && recs[0].loss_value >= 0.0);
        assert_eq!(recs[0].loss_name, "D");
        assert_eq!(recs[0].wall_ms, 0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rec = ExperimentRecord {
            model: "B".into(),
            k: 4,
            k0: 3,
            n: 167,
            replicate: 2,
            seed: 9,
            loss_name: "Dbar".into(),
            loss_value: 0.1 + 0.2,
            em_iters: 1999,
            converged: false,
            wall_ms: 12,
        };
        let mut buf = Vec::new();
        write_records_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(!text.contains('\r'));
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![rec]);
    }

    #[test]
    fn nan_loss_round_trips() {
        let rec = ExperimentRecord {
            model: "A".into(),
            k: 3,
            k0: 2,
            n: 100,
            replicate: 0,
            seed: 0,
            loss_name: "D".into(),
            loss_value: f64::NAN,
            em_iters: 0,
            converged: false,
            wall_ms: 0,
        };
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[rec]).unwrap();
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert!(back[0].loss_value.is_nan());
    }

    #[test]
    fn empty_record_list_still_has_header() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }
}
