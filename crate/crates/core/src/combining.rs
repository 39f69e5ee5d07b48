//! Per-trial SNR computations.
//!
//! All SNRs are linear power ratios with unit noise power. `eta` is the source
//! transmit power, which is also the total power shared by the relays.
//!
//! The closed forms only need per-relay channel energies, so the hot Monte
//! Carlo path works on [`RelayGains`] computed once per trial and partition.
//! [`signal_level_oracle`] checks the closed forms by pushing symbols and
//! noise through the actual MRC and beamforming vectors.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, ChannelRealization, Partition, TrialRng};
use crate::error::{Error, Result};

/// Decoding threshold `2^(2R) - 1` for rate `R` over two half-duplex slots.
pub fn decode_threshold(rate: f64) -> f64 {
    (2.0 * rate).exp2() - 1.0
}

pub(crate) fn check_rate(rate: f64) -> Result<f64> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidRate(rate));
    }
    Ok(decode_threshold(rate))
}

pub(crate) fn check_power(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidPower(eta));
    }
    Ok(())
}

fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Channel energy seen by one relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayGain {
    pub antennas: usize,
    /// `sum |h_i|^2` over the relay's antennas.
    pub backward: f64,
    /// `sum |g_i|^2` over the relay's antennas.
    pub forward: f64,
    /// `sqrt(m_k * forward)`, the relay's coherent amplitude contribution
    /// up to the common power factor.
    pub amplitude: f64,
}

/// Per-relay energies of one realization under one partition. Independent
/// of `eta`, so a trial computes it once for the whole SNR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayGains {
    relays: Vec<RelayGain>,
    antennas: usize,
}

impl RelayGains {
    pub fn new(real: &ChannelRealization, p: &Partition) -> Result<Self> {
        let views = real.partition_view(p)?;
        let relays = views
            .iter()
            .map(|v| {
                let forward = energy(v.g);
                RelayGain {
                    antennas: v.antennas(),
                    backward: energy(v.h),
                    forward,
                    amplitude: (v.antennas() as f64 * forward).sqrt(),
                }
            })
            .collect();
        Ok(Self {
            relays,
            antennas: p.antennas(),
        })
    }

    pub fn relays(&self) -> &[RelayGain] {
        &self.relays
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Relay decodes iff `eta * backward >= threshold`.
    #[inline]
    pub fn decodes(&self, k: usize, eta: f64, threshold: f64) -> bool {
        eta * self.relays[k].backward >= threshold
    }

    /// Beamforming SNR when every relay forwards.
    #[inline]
    pub fn genie_tb(&self, eta: f64) -> f64 {
        let amp: f64 = self.relays.iter().map(|r| r.amplitude).sum();
        eta / self.antennas as f64 * amp * amp
    }

    /// Space-time coding SNR when every relay forwards.
    #[inline]
    pub fn genie_stc(&self, eta: f64) -> f64 {
        let forward: f64 = self.relays.iter().map(|r| r.forward).sum();
        eta / self.antennas as f64 * forward
    }

    /// Beamforming SNR with only decoding relays forwarding; total power
    /// `eta` is spread over the decoding antennas.
    #[inline]
    pub fn selection_tb(&self, eta: f64, threshold: f64) -> f64 {
        let (mut antennas, mut amp) = (0usize, 0.0);
        for r in &self.relays {
            if eta * r.backward >= threshold {
                antennas += r.antennas;
                amp += r.amplitude;
            }
        }
        if antennas == 0 {
            0.0
        } else {
            eta / antennas as f64 * amp * amp
        }
    }

    #[inline]
    pub fn selection_stc(&self, eta: f64, threshold: f64) -> f64 {
        let (mut antennas, mut forward) = (0usize, 0.0);
        for r in &self.relays {
            if eta * r.backward >= threshold {
                antennas += r.antennas;
                forward += r.forward;
            }
        }
        if antennas == 0 {
            0.0
        } else {
            eta / antennas as f64 * forward
        }
    }

    /// Bitmask of decoding relays (relay `k` is bit `k`). Only meaningful
    /// for partitions with at most 64 relays.
    pub fn decoding_mask(&self, eta: f64, threshold: f64) -> u64 {
        self.relays
            .iter()
            .enumerate()
            .filter(|(_, r)| eta * r.backward >= threshold)
            .fold(0, |mask, (k, _)| mask | (1 << k))
    }
}

/// MRC output SNR at a relay: `eta * sum |h_i|^2`.
pub fn mrc_relay_snr(h_k: &[Complex64], eta: f64) -> Result<f64> {
    check_power(eta)?;
    Ok(eta * energy(h_k))
}

/// Destination SNR with distributed transmit beamforming when all relays
/// forward: `(sum_k sqrt(eta m_k / N * sum |g_k|^2))^2`.
pub fn tb_destination_snr(real: &ChannelRealization, p: &Partition, eta: f64) -> Result<f64> {
    check_power(eta)?;
    Ok(RelayGains::new(real, p)?.genie_tb(eta))
}

/// Destination SNR of the space-time coding baseline: `eta / N * sum |g|^2`.
/// Does not depend on how antennas are grouped.
pub fn stc_destination_snr(real: &ChannelRealization, p: &Partition, eta: f64) -> Result<f64> {
    check_power(eta)?;
    Ok(RelayGains::new(real, p)?.genie_stc(eta))
}

/// Zero-based indices of the relays whose SNR reaches `2^(2R) - 1`.
/// Equality counts as a successful decode.
pub fn select_decoding_set(relay_snrs: &[f64], rate: f64) -> Result<Vec<usize>> {
    let threshold = check_rate(rate)?;
    Ok(relay_snrs
        .iter()
        .enumerate()
        .filter(|(_, &snr)| snr >= threshold)
        .map(|(k, _)| k)
        .collect())
}

fn selected_sums(
    real: &ChannelRealization,
    p: &Partition,
    selected: &[usize],
) -> Result<(usize, RelayGains)> {
    let gains = RelayGains::new(real, p)?;
    let mut antennas = 0;
    for &k in selected {
        let relay = gains.relays.get(k).ok_or(Error::RelayIndex {
            index: k,
            relays: p.relays(),
        })?;
        antennas += relay.antennas;
    }
    Ok((antennas, gains))
}

/// Beamforming SNR when only `selected` relays forward, with the total power
/// `eta` spread over their `N~` antennas. Empty selection gives 0.
pub fn selection_tb_snr(
    real: &ChannelRealization,
    p: &Partition,
    selected: &[usize],
    eta: f64,
) -> Result<f64> {
    check_power(eta)?;
    let (antennas, gains) = selected_sums(real, p, selected)?;
    if antennas == 0 {
        return Ok(0.0);
    }
    let amp: f64 = selected.iter().map(|&k| gains.relays[k].amplitude).sum();
    Ok(eta / antennas as f64 * amp * amp)
}

/// Space-time coding SNR over the selected relays only. Empty selection gives 0.
pub fn selection_stc_snr(
    real: &ChannelRealization,
    p: &Partition,
    selected: &[usize],
    eta: f64,
) -> Result<f64> {
    check_power(eta)?;
    let (antennas, gains) = selected_sums(real, p, selected)?;
    if antennas == 0 {
        return Ok(0.0);
    }
    let forward: f64 = selected.iter().map(|&k| gains.relays[k].forward).sum();
    Ok(eta / antennas as f64 * forward)
}

/// Every per-trial SNR for one realization, partition and power.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport {
    pub relay_snr: Vec<f64>,
    pub genie_tb: f64,
    pub genie_stc: f64,
    pub selection_tb: f64,
    pub selection_stc: f64,
    /// Zero-based indices of decoding relays.
    pub selected: Vec<usize>,
}

pub fn snr_report(
    real: &ChannelRealization,
    p: &Partition,
    eta: f64,
    rate: f64,
) -> Result<SnrReport> {
    check_power(eta)?;
    let views = real.partition_view(p)?;
    let relay_snr = views
        .iter()
        .map(|v| mrc_relay_snr(v.h, eta))
        .collect::<Result<Vec<_>>>()?;
    let selected = select_decoding_set(&relay_snr, rate)?;
    Ok(SnrReport {
        genie_tb: tb_destination_snr(real, p, eta)?,
        genie_stc: stc_destination_snr(real, p, eta)?,
        selection_tb: selection_tb_snr(real, p, &selected, eta)?,
        selection_stc: selection_stc_snr(real, p, &selected, eta)?,
        relay_snr,
        selected,
    })
}

/// Beamformed transmit amplitudes of one relay.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitVector {
    pub d: Vec<Complex64>,
}

impl TransmitVector {
    /// Squared Frobenius norm.
    pub fn power(&self) -> f64 {
        energy(&self.d)
    }

    /// Noiseless contribution `g^T d` at the destination.
    pub fn received(&self, g_k: &[Complex64]) -> Complex64 {
        g_k.iter().zip(&self.d).map(|(g, d)| g * d).sum()
    }
}

/// `d = sqrt(eta m_k / n) * conj(g_k) / ||g_k|| * t_k`.
///
/// A zero forward vector has no beam direction; the relay then radiates
/// nothing.
pub fn tb_transmit_vector(
    g_k: &[Complex64],
    m_k: usize,
    n: usize,
    eta: f64,
    t_k: Complex64,
) -> Result<TransmitVector> {
    check_power(eta)?;
    if n == 0 {
        return Err(Error::NoAntennas);
    }
    if g_k.len() != m_k {
        return Err(Error::AntennaMismatch {
            expected: m_k,
            actual: g_k.len(),
        });
    }
    let norm = energy(g_k).sqrt();
    if norm == 0.0 {
        return Ok(TransmitVector {
            d: vec![Complex64::new(0.0, 0.0); m_k],
        });
    }
    let scale = (eta * m_k as f64 / n as f64).sqrt() / norm;
    Ok(TransmitVector {
        d: g_k.iter().map(|g| g.conj() * scale * t_k).collect(),
    })
}

/// Empirical SNRs measured by the signal-level simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub relay_snr: Vec<f64>,
    pub destination_snr: f64,
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(
        if rng.random::<bool>() { s } else { -s },
        if rng.random::<bool>() { s } else { -s },
    )
}

/// Simulates `n_trials` unit-power symbols over a fixed realization.
///
/// First hop: `r_k = sqrt(eta) h_k s + n_k` combined with `h_k^H / ||h_k||`.
/// Second hop: every relay beamforms the correctly decoded symbol and the
/// destination adds unit-variance noise. Signal and noise are pushed through
/// the same combiner separately, and each SNR is the ratio of their average
/// powers.
pub fn signal_level_oracle(
    real: &ChannelRealization,
    p: &Partition,
    eta: f64,
    n_trials: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    check_power(eta)?;
    if n_trials == 0 {
        return Err(Error::InvalidConfig(
            "oracle needs at least one trial".into(),
        ));
    }
    let views = real.partition_view(p)?;
    let n = p.antennas();
    let mut rng = TrialRng::new(seed, 0);

    let weights: Vec<Vec<Complex64>> = views
        .iter()
        .map(|v| {
            let norm = energy(v.h).sqrt();
            if norm == 0.0 {
                vec![Complex64::new(0.0, 0.0); v.h.len()]
            } else {
                v.h.iter().map(|h| h.conj() / norm).collect()
            }
        })
        .collect();

    let mut relay_signal = vec![0.0; views.len()];
    let mut relay_noise = vec![0.0; views.len()];
    let (mut dest_signal, mut dest_noise) = (0.0, 0.0);
    let amp = eta.sqrt();

    for _ in 0..n_trials {
        let s = qpsk(&mut rng);
        for (k, v) in views.iter().enumerate() {
            let (mut sig, mut noise) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (w, h) in weights[k].iter().zip(v.h) {
                sig += w * (h * amp * s);
                noise += w * complex_gaussian(&mut rng);
            }
            relay_signal[k] += sig.norm_sqr();
            relay_noise[k] += noise.norm_sqr();
        }

        let mut y = Complex64::new(0.0, 0.0);
        for v in &views {
            let d = tb_transmit_vector(v.g, v.antennas(), n, eta, s)?;
            y += d.received(v.g);
        }
        dest_signal += y.norm_sqr();
        dest_noise += complex_gaussian(&mut rng).norm_sqr();
    }

    Ok(OracleEstimate {
        relay_snr: relay_signal
            .iter()
            .zip(&relay_noise)
            .map(|(s, n)| s / n)
            .collect(),
        destination_snr: dest_signal / dest_noise,
    })
}
