//! Channel draws and antenna-to-relay partitions.
//!
//! A trial draws `N` backward (source to antenna) and `N` forward (antenna to
//! destination) coefficients once. Every partition of the antennas into relays
//! is a view over that same draw, so schemes and partitions can be compared on
//! identical fading.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Antenna counts per relay. Relay `k` owns the contiguous global antenna
/// indices `[m_0 + .. + m_{k-1}, m_0 + .. + m_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    sizes: Vec<usize>,
}

impl Partition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition("no relays".into()));
        }
        if let Some(k) = sizes.iter().position(|&m| m == 0) {
            return Err(Error::InvalidPartition(format!(
                "relay {} has zero antennas",
                k + 1
            )));
        }
        Ok(Self { sizes })
    }

    /// All `n` antennas on a single relay.
    pub fn co_located(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// One antenna per relay.
    pub fn singletons(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoAntennas);
        }
        Self::new(vec![1; n])
    }

    /// Every integer partition of `n`, parts in non-increasing order,
    /// listed from `[n]` down to `[1, .., 1]`.
    pub fn all_of(n: usize) -> Vec<Partition> {
        fn rec(remaining: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if remaining == 0 {
                out.push(Partition {
                    sizes: prefix.clone(),
                });
                return;
            }
            for part in (1..=remaining.min(max)).rev() {
                prefix.push(part);
                rec(remaining - part, part, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(n, n, &mut Vec::new(), &mut out);
        }
        out
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of relays `K`.
    pub fn relays(&self) -> usize {
        self.sizes.len()
    }

    /// Total antenna count `N`.
    pub fn antennas(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Global antenna index range owned by each relay, in relay order.
    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.sizes.iter().scan(0, |start, &m| {
            let range = *start..*start + m;
            *start += m;
            Some(range)
        })
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.sizes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses comma-separated antenna counts, e.g. `"2,1,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(',')
            .map(|part| {
                part.trim().parse::<usize>().map_err(|_| {
                    Error::InvalidPartition(format!("`{s}`: bad antenna count `{part}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

/// Per-trial random stream.
///
/// ChaCha8 keyed by the run seed with the trial index as the stream id, so
/// the draws of a trial depend only on `(seed, trial_index)` and never on
/// which worker runs it or in what order.
#[derive(Debug, Clone)]
pub struct TrialRng {
    seed: u64,
    trial_index: u64,
    inner: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(trial_index);
        Self {
            seed,
            trial_index,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial_index(&self) -> u64 {
        self.trial_index
    }

    /// Zero-mean circular complex Gaussian with unit total variance
    /// (variance 1/2 per component).
    pub fn complex_gaussian(&mut self) -> Complex64 {
        complex_gaussian(self)
    }
}

impl RngCore for TrialRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn derive_trial_rng(seed: u64, trial_index: u64) -> TrialRng {
    TrialRng::new(seed, trial_index)
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// One draw of backward coefficients `h` and forward coefficients `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: Vec<Complex64>,
    g: Vec<Complex64>,
}

/// The part of a realization owned by one relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayView<'a> {
    pub h: &'a [Complex64],
    pub g: &'a [Complex64],
}

impl RelayView<'_> {
    pub fn antennas(&self) -> usize {
        self.h.len()
    }
}

impl ChannelRealization {
    pub fn new(h: Vec<Complex64>, g: Vec<Complex64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::NoAntennas);
        }
        if h.len() != g.len() {
            return Err(Error::AntennaMismatch {
                expected: h.len(),
                actual: g.len(),
            });
        }
        Ok(Self { h, g })
    }

    /// Realization for trial `trial_index` of a run seeded with `seed`.
    pub fn for_trial(seed: u64, trial_index: u64, n: usize) -> Result<Self> {
        draw_realization(&mut TrialRng::new(seed, trial_index), n)
    }

    pub fn antennas(&self) -> usize {
        self.h.len()
    }

    pub fn backward(&self) -> &[Complex64] {
        &self.h
    }

    pub fn forward(&self) -> &[Complex64] {
        &self.g
    }

    /// Splits the coefficients into per-relay slices following `p`.
    pub fn partition_view<'a>(&'a self, p: &Partition) -> Result<Vec<RelayView<'a>>> {
        self.check_partition(p)?;
        Ok(p.ranges()
            .map(|r| RelayView {
                h: &self.h[r.clone()],
                g: &self.g[r],
            })
            .collect())
    }

    pub(crate) fn check_partition(&self, p: &Partition) -> Result<()> {
        if p.antennas() != self.antennas() {
            return Err(Error::AntennaMismatch {
                expected: self.antennas(),
                actual: p.antennas(),
            });
        }
        Ok(())
    }
}

/// Draws `n` backward coefficients then `n` forward coefficients, each i.i.d.
/// zero-mean unit-variance circular complex Gaussian.
pub fn draw_realization<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<ChannelRealization> {
    if n == 0 {
        return Err(Error::NoAntennas);
    }
    let h = (0..n).map(|_| complex_gaussian(rng)).collect();
    let g = (0..n).map(|_| complex_gaussian(rng)).collect();
    Ok(ChannelRealization { h, g })
}
