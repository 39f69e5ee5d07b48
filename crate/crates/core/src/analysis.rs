//! Closed-form outage machinery.
//!
//! With Rayleigh fading, `sum |h_i|^2` over `m` antennas is Erlang(m, 1)
//! distributed, and at high SNR `P(sum <= eps) ~ eps^m / m!`. Everything in
//! this module builds on those two facts: the all-relays-decode bounds, the
//! probability of each decoding set, and the selection-decoding bounds
//! obtained by summing over decoding sets.
//!
//! Bounds are high-SNR approximations. They can exceed 1 at low SNR; they are
//! reported unclamped and [`BoundSet::is_probability`] tells the caller.

use crate::channel::Partition;
use crate::combining::check_rate;
use crate::error::{Error, Result};

/// Largest relay count accepted by [`enumerate_selection_sets`].
pub const MAX_ENUMERATED_RELAYS: usize = 30;

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn check_shape(m: usize, x: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::ZeroShape);
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::NegativeArgument(x));
    }
    Ok(())
}

/// `e^-x * sum_{j<m} x^j / j!`
fn head_series(m: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..m {
        term *= x / j as f64;
        sum += term;
    }
    (-x).exp() * sum
}

/// `e^-x * sum_{j>=m} x^j / j!`, convergent and free of cancellation
/// for small `x`.
fn tail_series(m: usize, x: f64) -> f64 {
    let mut term = (-x).exp();
    for j in 1..=m {
        term *= x / j as f64;
    }
    let mut sum = 0.0;
    let mut j = m;
    while term > sum * f64::EPSILON * 0.25 {
        sum += term;
        j += 1;
        term *= x / j as f64;
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// CDF of a sum of `m` i.i.d. unit-mean exponentials,
/// `1 - e^-x * sum_{j<m} x^j / j!`.
pub fn erlang_cdf(m: usize, x: f64) -> Result<f64> {
    check_shape(m, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    // The complement loses all relative precision once the CDF is tiny,
    // so below the mean sum the tail terms directly.
    if x < m as f64 {
        Ok(tail_series(m, x))
    } else {
        Ok(1.0 - head_series(m, x))
    }
}

/// Survival function `1 - erlang_cdf(m, x)`.
pub fn erlang_sf(m: usize, x: f64) -> Result<f64> {
    check_shape(m, x)?;
    if x < m as f64 {
        Ok(1.0 - tail_series(m, x))
    } else {
        Ok(head_series(m, x))
    }
}

/// Small-argument approximation `eps^n / n!` of `erlang_cdf(n, eps)`.
pub fn chi_tail_approx(n: usize, eps: f64) -> Result<f64> {
    check_shape(n, eps)?;
    Ok(eps.powi(n as i32) / factorial(n))
}

/// Which premise a bound assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundFamily {
    /// Every relay decodes; only the second hop can fail.
    AllDecode,
    /// Only relays that decode forward.
    Selection,
}

/// High-SNR outage envelope at one operating point. `lower` is the
/// co-located beamforming end, `upper` the space-time coding end.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub lower: f64,
    pub upper: f64,
    pub family: BoundFamily,
    pub antennas: usize,
    pub eta: f64,
    pub rate: f64,
}

impl BoundSet {
    /// Both bounds are valid probabilities. False in the low-SNR regime the
    /// approximations were not made for.
    pub fn is_probability(&self) -> bool {
        self.upper <= 1.0 && self.lower >= 0.0
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::NonPositivePower(eta));
    }
    Ok(())
}

/// Outage envelope when all relays decode:
/// `(theta/eta)^N / N!` for beamforming on one relay and
/// `(N theta/eta)^N / N!` for space-time coding with any grouping, where
/// `theta = 2^(2R) - 1`. Their ratio is exactly `N^N`.
pub fn genie_outage_bounds(n: usize, rate: f64, eta: f64) -> Result<BoundSet> {
    if n == 0 {
        return Err(Error::NoAntennas);
    }
    check_eta(eta)?;
    let theta = check_rate(rate)?;
    let eps = theta / eta;
    let lower = chi_tail_approx(n, eps)?;
    Ok(BoundSet {
        lower,
        upper: lower * (n as f64).powi(n as i32),
        family: BoundFamily::AllDecode,
        antennas: n,
        eta,
        rate,
    })
}

/// A set of relays that decoded, as a bitmask over relay indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectionSet {
    pub mask: u64,
    /// Total antennas on the selected relays.
    pub antennas: usize,
}

impl SelectionSet {
    pub fn contains(&self, k: usize) -> bool {
        k < 64 && self.mask >> k & 1 == 1
    }

    pub fn relay_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Zero-based indices of the selected relays.
    pub fn relays(&self) -> Vec<usize> {
        (0..64).filter(|&k| self.contains(k)).collect()
    }
}

/// All `2^K` relay subsets, by ascending bitmask.
pub fn enumerate_selection_sets(p: &Partition) -> Result<Vec<SelectionSet>> {
    let k = p.relays();
    if k > MAX_ENUMERATED_RELAYS {
        return Err(Error::TooManyRelays {
            relays: k,
            max: MAX_ENUMERATED_RELAYS,
        });
    }
    let sizes = p.sizes();
    Ok((0..1u64 << k)
        .map(|mask| SelectionSet {
            mask,
            antennas: (0..k)
                .filter(|&r| mask >> r & 1 == 1)
                .map(|r| sizes[r])
                .sum(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetProbabilityMode {
    /// Product of exact per-relay Erlang probabilities.
    Exact,
    /// `(theta/eta)^(N - N~) * prod_{r not in set} 1/m_r!`
    HighSnr,
}

/// Probability that exactly the relays in `set` decode.
pub fn selection_set_probability(
    p: &Partition,
    set: &SelectionSet,
    rate: f64,
    eta: f64,
    mode: SetProbabilityMode,
) -> Result<f64> {
    check_eta(eta)?;
    let eps = check_rate(rate)? / eta;
    let sizes = p.sizes();
    let k = sizes.len();
    if k < 64 && set.mask >> k != 0 {
        return Err(Error::RelayIndex {
            index: 63 - set.mask.leading_zeros() as usize,
            relays: k,
        });
    }
    match mode {
        SetProbabilityMode::Exact => sizes.iter().enumerate().try_fold(1.0, |acc, (k, &m)| {
            let factor = if set.contains(k) {
                erlang_sf(m, eps)?
            } else {
                erlang_cdf(m, eps)?
            };
            Ok(acc * factor)
        }),
        SetProbabilityMode::HighSnr => Ok(sizes
            .iter()
            .enumerate()
            .filter(|(k, _)| !set.contains(*k))
            .map(|(_, &m)| chi_tail_approx(m, eps))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .product()),
    }
}

/// Outage envelope under selection decoding, summed over decoding sets:
/// `(theta/eta)^N * sum_sets c(N~) * prod_{r not in set} 1/m_r!` with
/// `c = 1/N~!` for the lower and `N~^N~ / N~!` for the upper bound. The
/// empty set contributes `c = 1` to both (certain outage).
pub fn selection_outage_bounds(p: &Partition, rate: f64, eta: f64) -> Result<BoundSet> {
    check_eta(eta)?;
    let theta = check_rate(rate)?;
    let (lower_sum, upper_sum) = selection_bound_coefficients(p)?;
    let scale = (theta / eta).powi(p.antennas() as i32);
    Ok(BoundSet {
        lower: scale * lower_sum,
        upper: scale * upper_sum,
        family: BoundFamily::Selection,
        antennas: p.antennas(),
        eta,
        rate,
    })
}

/// The `eta`-independent sums multiplying `(theta/eta)^N` in
/// [`selection_outage_bounds`], as `(lower, upper)`.
pub fn selection_bound_coefficients(p: &Partition) -> Result<(f64, f64)> {
    let sizes = p.sizes();
    let mut lower = 0.0;
    let mut upper = 0.0;
    for set in enumerate_selection_sets(p)? {
        let missing: f64 = sizes
            .iter()
            .enumerate()
            .filter(|(k, _)| !set.contains(*k))
            .map(|(_, &m)| 1.0 / factorial(m))
            .product();
        let n = set.antennas;
        let inv_fact = 1.0 / factorial(n);
        // 0^0 = 1 for the empty set
        let power = (n as f64).powi(n as i32);
        lower += inv_fact * missing;
        upper += power * inv_fact * missing;
    }
    Ok((lower, upper))
}

/// Diversity order estimate: magnitude of the least-squares slope of
/// `log10(p)` against `snr_db / 10` over the given `(snr_db, p)` points.
pub fn diversity_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if let Some(&(_, p)) = points.iter().find(|(_, p)| p.is_nan() || *p <= 0.0) {
        return Err(Error::NonPositiveProbability(p));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(db, _)| db / 10.0).collect();
    let ys: Vec<f64> = points.iter().map(|(_, p)| p.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints(1));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok((sxy / sxx).abs())
}

/// Points whose probability lies in `[lo, hi]`.
pub fn window(points: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|&(_, p)| p >= lo && p <= hi)
        .collect()
}
