//! Rayleigh FIR multipath fading, AWGN, and the frequency-domain correlation
//! model used by the LMMSE estimator.
//!
//! A channel realization is `L` independent complex Gaussian taps
//! `h_l = sqrt(p_l / 2) * (g_re + j g_im)`, `g ~ N(0, 1)`, with the power
//! delay profile normalized to `sum_l p_l = 1` so `E|H[k]|^2 = 1` on every
//! subcarrier. Block fading: taps are redrawn per slot and held constant
//! within it. The correlation between subcarriers `delta` bins apart is
//!
//! ```text
//! r(delta) = sum_l p_l exp(-j 2 pi delta l / n_fft)
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ofdm::fft_forward;

/// One block-fading draw of an FIR channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub taps: Vec<Complex64>,
    /// Power delay profile the taps were drawn from.
    pub pdp: Vec<f64>,
}

/// Uniform power delay profile with `l` taps of power `1/l` each.
pub fn uniform_pdp(l: usize) -> Vec<f64> {
    vec![1.0 / l as f64; l.max(1)]
}

fn validate_pdp(pdp: &[f64]) -> Result<()> {
    if pdp.is_empty() {
        return Err(Error::Config("power delay profile must be non-empty".into()));
    }
    if pdp.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Config("power delay profile entries must be >= 0".into()));
    }
    let total: f64 = pdp.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "power delay profile sums to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Draws one Rayleigh-fading realization from a normalized delay profile.
pub fn draw_channel<R: Rng>(pdp: &[f64], rng: &mut R) -> Result<ChannelRealization> {
    validate_pdp(pdp)?;
    let taps = pdp
        .iter()
        .map(|&p| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * (p / 2.0).sqrt()
        })
        .collect();
    Ok(ChannelRealization {
        taps,
        pdp: pdp.to_vec(),
    })
}

/// Full linear convolution of a sample stream with the channel taps; output
/// length is `stream.len() + taps.len() - 1`, so the tail spills past the
/// input. Callers decide what to do with the tail.
pub fn apply_channel(stream: &[Complex64], h: &ChannelRealization) -> Vec<Complex64> {
    if stream.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); stream.len() + h.taps.len() - 1];
    for (delay, &tap) in h.taps.iter().enumerate() {
        for (n, &x) in stream.iter().enumerate() {
            out[n + delay] += tap * x;
        }
    }
    out
}

/// Additive complex white Gaussian noise at a given per-subcarrier SNR.
///
/// With unit-average-energy constellations and the unitary OFDM transforms,
/// adding noise of per-sample variance `10^(-snr_db/10)` in the time domain
/// yields exactly that variance per subcarrier after demodulation, so the
/// per-subcarrier SNR equals the configured value.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    /// Complex noise variance per sample (both domains).
    pub variance: f64,
    pub snr_db: f64,
}

impl NoiseModel {
    pub fn from_snr_db(snr_db: f64) -> NoiseModel {
        NoiseModel {
            variance: 10f64.powf(-snr_db / 10.0),
            snr_db,
        }
    }

    pub fn from_variance(variance: f64) -> NoiseModel {
        NoiseModel {
            variance,
            snr_db: -10.0 * variance.log10(),
        }
    }
}

/// Adds circularly-symmetric complex Gaussian noise, `variance / 2` per
/// quadrature component. Zero variance returns the input exactly, without
/// touching the generator.
pub fn add_awgn<R: Rng>(stream: &[Complex64], noise: &NoiseModel, rng: &mut R) -> Result<Vec<Complex64>> {
    if noise.variance < 0.0 || noise.variance.is_nan() {
        return Err(Error::Config(format!(
            "noise variance must be >= 0, got {}",
            noise.variance
        )));
    }
    if noise.variance == 0.0 {
        return Ok(stream.to_vec());
    }
    let sigma = (noise.variance / 2.0).sqrt();
    Ok(stream
        .iter()
        .map(|&x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + Complex64::new(re, im) * sigma
        })
        .collect())
}

/// DFT of the tap vector over `n_fft` bins: `H[k] = sum_l h_l
/// exp(-j 2 pi k l / n_fft)`.
pub fn freq_response(h: &ChannelRealization, n_fft: usize) -> Result<Vec<Complex64>> {
    if h.taps.len() > n_fft {
        return Err(Error::Config(format!(
            "channel with {} taps does not fit an FFT of size {n_fft}",
            h.taps.len()
        )));
    }
    if n_fft == 0 {
        return Err(Error::Config("freq_response needs n_fft >= 1".into()));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..h.taps.len()].copy_from_slice(&h.taps);
    fft_forward(&mut buf);
    Ok(buf)
}

/// Analytic correlation `r(delta)` between subcarriers `delta` bins apart.
pub fn freq_correlation(pdp: &[f64], n_fft: usize, delta: isize) -> Complex64 {
    let w = -2.0 * std::f64::consts::PI * delta as f64 / n_fft as f64;
    pdp.iter()
        .enumerate()
        .map(|(l, &p)| Complex64::from_polar(p, w * l as f64))
        .sum()
}

/// Correlation matrices linking the pilot subcarriers to themselves and to
/// the full estimated band.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    /// `all_idx.len() x pilot_idx.len()`, entry (k, m) = r(all[k] - pilot[m]).
    pub r_hhp: DMatrix<Complex64>,
    /// `pilot_idx.len()` square, Hermitian, unit diagonal.
    pub r_hphp: DMatrix<Complex64>,
    pub pilot_idx: Vec<usize>,
}

/// Builds both correlation matrices for one pilot lattice. Indices are in
/// subcarrier units on a contiguous band, so index differences are bin
/// differences.
pub fn build_correlation(
    pdp: &[f64],
    n_fft: usize,
    pilot_idx: &[usize],
    all_idx: &[usize],
) -> Result<CorrelationSet> {
    validate_pdp(pdp)?;
    if pilot_idx.is_empty() || all_idx.is_empty() {
        return Err(Error::Usage("correlation needs non-empty index sets".into()));
    }
    for &i in pilot_idx.iter().chain(all_idx) {
        if i >= n_fft {
            return Err(Error::Config(format!(
                "subcarrier index {i} out of range for n_fft {n_fft}"
            )));
        }
    }
    // Every needed lag is a difference of two indices; tabulate once.
    let max_lag = {
        let hi = *pilot_idx.iter().chain(all_idx).max().unwrap() as isize;
        let lo = *pilot_idx.iter().chain(all_idx).min().unwrap() as isize;
        hi - lo
    };
    let table: Vec<Complex64> = (-max_lag..=max_lag)
        .map(|d| freq_correlation(pdp, n_fft, d))
        .collect();
    let r = |a: usize, b: usize| table[(a as isize - b as isize + max_lag) as usize];

    let r_hhp = DMatrix::from_fn(all_idx.len(), pilot_idx.len(), |k, m| {
        r(all_idx[k], pilot_idx[m])
    });
    let r_hphp = DMatrix::from_fn(pilot_idx.len(), pilot_idx.len(), |k, m| {
        r(pilot_idx[k], pilot_idx[m])
    });
    Ok(CorrelationSet {
        r_hhp,
        r_hphp,
        pilot_idx: pilot_idx.to_vec(),
    })
}
