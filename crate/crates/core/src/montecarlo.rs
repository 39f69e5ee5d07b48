//! Paired-sampling outage estimation.
//!
//! Each trial draws one channel realization and evaluates every scheme,
//! partition and SNR point on it. Trials are split into fixed-size chunks
//! that workers process in any order; per-chunk integer counts are summed,
//! so the result depends only on the seed and the trial count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::analysis::{
    enumerate_selection_sets, selection_set_probability, SelectionSet, SetProbabilityMode,
};
use crate::channel::{draw_realization, Partition, TrialRng};
use crate::combining::{check_power, check_rate, RelayGains};
use crate::error::{Error, Result};
use crate::scheme::Scheme;

/// Trials per work unit. Fixed so the work split never depends on the
/// number of workers.
const CHUNK: u64 = 4096;

/// Two-sided 95% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Event count above which an estimate is flagged reliable.
pub const RELIABLE_EVENTS: u64 = 30;

/// True iff `snr` cannot support rate `rate` over two half-duplex slots,
/// i.e. `snr < 2^(2R) - 1`.
pub fn outage_event(snr: f64, rate: f64) -> bool {
    snr < crate::combining::decode_threshold(rate)
}

/// 95% Wilson score interval for `count` successes out of `trials`.
pub fn confidence_interval(count: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if count == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let high = if count >= trials {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    (low, high)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub outages: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// At least [`RELIABLE_EVENTS`] outages were observed.
    pub reliable: bool,
}

impl OutageEstimate {
    pub fn from_counts(outages: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = confidence_interval(outages, trials);
        Self {
            outages,
            trials,
            p_hat: if trials == 0 {
                0.0
            } else {
                outages as f64 / trials as f64
            },
            ci_low,
            ci_high,
            reliable: outages >= RELIABLE_EVENTS,
        }
    }

    /// Binomial standard error of `p_hat`.
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub partitions: Vec<Partition>,
    /// Linear SNR values.
    pub eta_grid: Vec<f64>,
    /// Target rate in bits/s/Hz.
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Arc<dyn Scheme>>,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    /// Checks the invariants and returns the common antenna count.
    pub fn validate(&self) -> Result<usize> {
        let first = self
            .partitions
            .first()
            .ok_or_else(|| Error::InvalidConfig("no partitions".into()))?;
        let n = first.antennas();
        for p in &self.partitions[1..] {
            if p.antennas() != n {
                return Err(Error::AntennaMismatch {
                    expected: n,
                    actual: p.antennas(),
                });
            }
        }
        if self.eta_grid.is_empty() {
            return Err(Error::InvalidConfig("empty SNR grid".into()));
        }
        if let Some(&eta) = self.eta_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::NonPositivePower(eta));
        }
        check_rate(self.rate)?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(n)
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(job()),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }

    fn chunks(&self) -> impl ParallelIterator<Item = std::ops::Range<u64>> + '_ {
        let trials = self.trials;
        (0..trials.div_ceil(CHUNK))
            .into_par_iter()
            .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(trials))
    }
}

/// Estimates keyed by (scheme, partition, SNR point), in configuration order.
#[derive(Debug, Clone)]
pub struct OutageTable {
    pub schemes: Vec<&'static str>,
    pub partitions: Vec<Partition>,
    pub eta_grid: Vec<f64>,
    estimates: Vec<OutageEstimate>,
}

impl OutageTable {
    fn index(&self, scheme: usize, partition: usize, eta: usize) -> usize {
        (scheme * self.partitions.len() + partition) * self.eta_grid.len() + eta
    }

    pub fn get(&self, scheme: usize, partition: usize, eta: usize) -> &OutageEstimate {
        &self.estimates[self.index(scheme, partition, eta)]
    }

    /// Estimates across the SNR grid for a named scheme and a partition.
    pub fn curve(&self, scheme: &str, partition: &Partition) -> Option<&[OutageEstimate]> {
        let s = self.schemes.iter().position(|&n| n == scheme)?;
        let p = self.partitions.iter().position(|q| q == partition)?;
        let start = self.index(s, p, 0);
        Some(&self.estimates[start..start + self.eta_grid.len()])
    }

    pub fn estimates(&self) -> &[OutageEstimate] {
        &self.estimates
    }
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

pub fn estimate_outage(cfg: &SimConfig) -> Result<OutageTable> {
    let n = cfg.validate()?;
    let threshold = check_rate(cfg.rate)?;
    let cells = cfg.schemes.len() * cfg.partitions.len() * cfg.eta_grid.len();

    let counts = cfg.run(|| {
        cfg.chunks()
            .map(|range| {
                let mut counts = vec![0u64; cells];
                for trial in range {
                    let real = draw_realization(&mut TrialRng::new(cfg.seed, trial), n)
                        .expect("antenna count validated");
                    let gains: Vec<RelayGains> = cfg
                        .partitions
                        .iter()
                        .map(|p| RelayGains::new(&real, p).expect("partition sizes validated"))
                        .collect();
                    let mut cell = 0;
                    for scheme in &cfg.schemes {
                        for g in &gains {
                            for &eta in &cfg.eta_grid {
                                if scheme.destination_snr(g, eta, threshold) < threshold {
                                    counts[cell] += 1;
                                }
                                cell += 1;
                            }
                        }
                    }
                }
                counts
            })
            .reduce(|| vec![0u64; cells], add_counts)
    })?;

    Ok(OutageTable {
        schemes: cfg.schemes.iter().map(|s| s.name()).collect(),
        partitions: cfg.partitions.clone(),
        eta_grid: cfg.eta_grid.clone(),
        estimates: counts
            .into_iter()
            .map(|c| OutageEstimate::from_counts(c, cfg.trials))
            .collect(),
    })
}

/// Trials that landed in one decoding set.
#[derive(Debug, Clone, PartialEq)]
pub struct SetStratum {
    pub set: SelectionSet,
    pub trials: u64,
    pub outages: u64,
    pub exact_probability: f64,
    pub high_snr_probability: f64,
}

impl SetStratum {
    pub fn frequency(&self, total: u64) -> f64 {
        self.trials as f64 / total as f64
    }

    /// Empirical outage probability given this set decoded.
    pub fn conditional_outage(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.outages as f64 / self.trials as f64)
    }

    /// Deviation of the empirical set frequency from the exact probability
    /// in binomial standard deviations. Zero when both agree on an
    /// impossible set.
    pub fn z_score(&self, total: u64) -> f64 {
        let p = self.exact_probability;
        let sigma = (p * (1.0 - p) / total as f64).sqrt();
        let diff = self.frequency(total) - p;
        if sigma == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / sigma
        }
    }
}

/// Selection-beamforming outage counted directly and per decoding set.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedReport {
    pub partition: Partition,
    pub eta: f64,
    pub trials: u64,
    pub direct_outages: u64,
    pub strata: Vec<SetStratum>,
}

impl StratifiedReport {
    pub fn stratified_outages(&self) -> u64 {
        self.strata.iter().map(|s| s.outages).sum()
    }

    pub fn direct_estimate(&self) -> f64 {
        self.direct_outages as f64 / self.trials as f64
    }

    /// `sum over sets of frequency * conditional outage`.
    pub fn stratified_estimate(&self) -> f64 {
        self.strata
            .iter()
            .filter_map(|s| Some(s.frequency(self.trials) * s.conditional_outage()?))
            .sum()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.strata
            .iter()
            .map(|s| s.z_score(self.trials).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs `cfg.trials` selection-beamforming trials at one operating point and
/// splits them by which relays decoded. Uses `cfg.seed`, `cfg.rate`,
/// `cfg.trials` and `cfg.workers`; the scheme and grid lists are ignored.
pub fn stratified_consistency_check(
    cfg: &SimConfig,
    partition: &Partition,
    eta: f64,
) -> Result<StratifiedReport> {
    check_power(eta)?;
    if eta == 0.0 {
        return Err(Error::NonPositivePower(eta));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let threshold = check_rate(cfg.rate)?;
    let sets = enumerate_selection_sets(partition)?;
    let n = partition.antennas();
    let slots = sets.len();

    // [set trials..., set outages..., direct outages]
    let counts = cfg.run(|| {
        cfg.chunks()
            .map(|range| {
                let mut counts = vec![0u64; 2 * slots + 1];
                for trial in range {
                    let real = draw_realization(&mut TrialRng::new(cfg.seed, trial), n)
                        .expect("antenna count is positive");
                    let gains = RelayGains::new(&real, partition).expect("sizes match");
                    let mask = gains.decoding_mask(eta, threshold) as usize;
                    counts[mask] += 1;
                    if gains.selection_tb(eta, threshold) < threshold {
                        counts[slots + mask] += 1;
                        counts[2 * slots] += 1;
                    }
                }
                counts
            })
            .reduce(|| vec![0u64; 2 * slots + 1], add_counts)
    })?;

    let strata = sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            Ok(SetStratum {
                set: *set,
                trials: counts[i],
                outages: counts[slots + i],
                exact_probability: selection_set_probability(
                    partition,
                    set,
                    cfg.rate,
                    eta,
                    SetProbabilityMode::Exact,
                )?,
                high_snr_probability: selection_set_probability(
                    partition,
                    set,
                    cfg.rate,
                    eta,
                    SetProbabilityMode::HighSnr,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(StratifiedReport {
        partition: partition.clone(),
        eta,
        trials: cfg.trials,
        direct_outages: counts[2 * slots],
        strata,
    })
}
