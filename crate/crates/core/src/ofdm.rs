//! Bit-to-symbol mapping and the OFDM modulate/demodulate transforms.
//!
//! Both transforms are unitary, with a 1/sqrt(n_fft) factor in each direction:
//!
//! ```text
//! x[n] = 1/sqrt(N) * sum_k X[k] exp(+j 2 pi k n / N)      (modulate)
//! X[k] = 1/sqrt(N) * sum_n x[n] exp(-j 2 pi k n / N)      (demodulate)
//! ```
//!
//! so signal energy is identical in the time and frequency domains. The cyclic
//! prefix copies the last `cp_len` time samples in front of the symbol.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Constellation family carried on the data subcarriers. Both constellations
/// have unit average energy and Gray bit labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    /// Constellation scaling factor `E|c|^2 * E|1/c|^2` used by the
    /// simplified LMMSE estimator: 1 for QPSK, 17/9 for 16-QAM.
    pub fn beta(self) -> f64 {
        match self {
            Modulation::Qpsk => 1.0,
            Modulation::Qam16 => 17.0 / 9.0,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
        }
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qpsk" => Ok(Modulation::Qpsk),
            "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::Config(format!(
                "unknown modulation {other:?}, expected qpsk or qam16"
            ))),
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

const QPSK_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// 1/sqrt(10), normalizing the {-3,-1,1,3} 16-QAM lattice to unit energy.
const QAM16_SCALE: f64 = 0.316_227_766_016_837_94;

fn level(b: bool) -> f64 {
    if b {
        -1.0
    } else {
        1.0
    }
}

/// Maps bits to constellation symbols. QPSK sends (b0, b1) to
/// `((1-2*b0) + j(1-2*b1))/sqrt(2)`; 16-QAM uses the standard LTE Gray
/// labeling on the `{+-1, +-3}/sqrt(10)` lattice.
pub fn map_bits(bits: &[bool], modulation: Modulation) -> Result<Vec<Complex64>> {
    let bps = modulation.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::Framing(format!(
            "bit count {} is not divisible by {} bits per symbol",
            bits.len(),
            bps
        )));
    }
    let symbols = match modulation {
        Modulation::Qpsk => bits
            .chunks_exact(2)
            .map(|b| Complex64::new(level(b[0]), level(b[1])) * QPSK_SCALE)
            .collect(),
        Modulation::Qam16 => bits
            .chunks_exact(4)
            .map(|b| {
                let re = level(b[0]) * (2.0 - level(b[2]));
                let im = level(b[1]) * (2.0 - level(b[3]));
                Complex64::new(re, im) * QAM16_SCALE
            })
            .collect(),
    };
    Ok(symbols)
}

/// Hard-decision demapping to the nearest constellation point. The Gray
/// labelings are separable, so per-axis slicing is exact minimum-distance
/// detection; an input of exactly zero decides to the all-zeros label.
pub fn demap_symbols(symbols: &[Complex64], modulation: Modulation) -> Vec<bool> {
    let mut bits = Vec::with_capacity(symbols.len() * modulation.bits_per_symbol());
    match modulation {
        Modulation::Qpsk => {
            for s in symbols {
                bits.push(s.re < 0.0);
                bits.push(s.im < 0.0);
            }
        }
        Modulation::Qam16 => {
            let threshold = 2.0 * QAM16_SCALE;
            for s in symbols {
                bits.push(s.re < 0.0);
                bits.push(s.im < 0.0);
                bits.push(s.re.abs() > threshold);
                bits.push(s.im.abs() > threshold);
            }
        }
    }
    bits
}

/// One CP-prefixed OFDM symbol in the time domain.
#[derive(Debug, Clone)]
pub struct TimeSignal {
    /// `cp_len + n_fft` samples: cyclic prefix followed by the IDFT output.
    pub samples: Vec<Complex64>,
    pub cp_len: usize,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT, in place.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Unitary IDFT of a full `n_fft`-bin vector plus cyclic-prefix insertion.
pub fn ofdm_modulate(freq_cells: &[Complex64], cp_len: usize) -> Result<TimeSignal> {
    let n_fft = freq_cells.len();
    if n_fft == 0 {
        return Err(Error::Config("ofdm_modulate needs a non-empty spectrum".into()));
    }
    if cp_len > n_fft {
        return Err(Error::Config(format!(
            "cyclic prefix length {cp_len} exceeds FFT size {n_fft}"
        )));
    }
    let mut buf = freq_cells.to_vec();
    fft_inverse(&mut buf);
    let scale = 1.0 / (n_fft as f64).sqrt();
    for v in &mut buf {
        *v *= scale;
    }
    let mut samples = Vec::with_capacity(n_fft + cp_len);
    samples.extend_from_slice(&buf[n_fft - cp_len..]);
    samples.extend_from_slice(&buf);
    Ok(TimeSignal { samples, cp_len })
}

/// Cyclic-prefix removal plus unitary DFT. Only the first `cp_len + n_fft`
/// samples of `samples` are consumed, so the input may be a longer stream.
pub fn ofdm_demodulate(samples: &[Complex64], cp_len: usize, n_fft: usize) -> Result<Vec<Complex64>> {
    if samples.len() < cp_len + n_fft {
        return Err(Error::Framing(format!(
            "need at least {} samples to demodulate, got {}",
            cp_len + n_fft,
            samples.len()
        )));
    }
    let mut buf = samples[cp_len..cp_len + n_fft].to_vec();
    fft_forward(&mut buf);
    let scale = 1.0 / (n_fft as f64).sqrt();
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}

/// FFT bin carrying used subcarrier `u` when `n_used` subcarriers are mapped
/// contiguously around DC (bin 0). Subcarrier `n_used/2` lands on DC itself;
/// there is no DC gap.
pub fn used_bin(u: usize, n_used: usize, n_fft: usize) -> usize {
    debug_assert!(u < n_used && n_used <= n_fft);
    let offset = u as isize - (n_used / 2) as isize;
    offset.rem_euclid(n_fft as isize) as usize
}

/// Scatters `n_used` occupied cells into an `n_fft`-bin spectrum, leaving the
/// guard bins at exactly zero.
pub fn used_to_fft(used: &[Complex64], n_fft: usize) -> Result<Vec<Complex64>> {
    let n_used = used.len();
    if n_used > n_fft {
        return Err(Error::Sizing(format!(
            "{n_used} used subcarriers do not fit in an FFT of size {n_fft}"
        )));
    }
    let mut cells = vec![Complex64::new(0.0, 0.0); n_fft];
    for (u, &v) in used.iter().enumerate() {
        cells[used_bin(u, n_used, n_fft)] = v;
    }
    Ok(cells)
}

/// Gathers the `n_used` occupied bins back out of a full spectrum.
pub fn fft_to_used(fft_cells: &[Complex64], n_used: usize) -> Result<Vec<Complex64>> {
    let n_fft = fft_cells.len();
    if n_used > n_fft {
        return Err(Error::Sizing(format!(
            "cannot extract {n_used} used subcarriers from an FFT of size {n_fft}"
        )));
    }
    Ok((0..n_used)
        .map(|u| fft_cells[used_bin(u, n_used, n_fft)])
        .collect())
}
