//! Per-subcarrier zero-forcing detection and the MSE/BER bookkeeping.
//!
//! Equalization happens independently on every subcarrier. A subcarrier whose
//! channel estimate is effectively singular is erased: the equalizer returns
//! no symbol and the demapper's zero input decides to a fixed bit pattern, so
//! erased cells count as ordinary (usually wrong) decisions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Channel magnitudes at or below this are erased rather than inverted.
pub const ERASURE_THRESHOLD: f64 = 1e-9;
/// Condition-number estimate above this erases the subcarrier.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Single-stream zero forcing: `x = y / h_hat`, or `None` when the estimate
/// is too small to invert.
pub fn zf_equalize_siso(y: Complex64, h_hat: Complex64) -> Option<Complex64> {
    if h_hat.norm_sqr() <= ERASURE_THRESHOLD * ERASURE_THRESHOLD {
        None
    } else {
        Some(y / h_hat)
    }
}

/// Multi-stream zero forcing on one subcarrier: least-squares solve of
/// `h_hat * x = y` with `h_hat` given row-major as `n_rx x n_tx` (entry
/// `[r * n_tx + t]` is the path from transmit stream `t` to receive antenna
/// `r`). Supports one or two streams and any `n_rx >= n_tx`; returns `None`
/// (erasure) when the estimated matrix is too ill-conditioned to invert.
pub fn zf_equalize_mimo(
    y: &[Complex64],
    h_hat: &[Complex64],
    n_tx: usize,
) -> Result<Option<Vec<Complex64>>> {
    let n_rx = y.len();
    if n_tx == 0 || n_tx > 2 {
        return Err(Error::Usage(format!(
            "zero-forcing detection supports 1 or 2 streams, got {n_tx}"
        )));
    }
    if n_rx < n_tx {
        return Err(Error::Usage(format!(
            "need at least as many receive antennas as streams, got {n_rx} < {n_tx}"
        )));
    }
    if h_hat.len() != n_rx * n_tx {
        return Err(Error::Usage(format!(
            "channel matrix has {} entries, expected {}",
            h_hat.len(),
            n_rx * n_tx
        )));
    }

    if n_tx == 1 {
        // Maximum-ratio combining solve of the tall system.
        let g: f64 = h_hat.iter().map(|h| h.norm_sqr()).sum();
        if g <= ERASURE_THRESHOLD * ERASURE_THRESHOLD {
            return Ok(None);
        }
        let num: Complex64 = h_hat.iter().zip(y).map(|(h, y)| h.conj() * y).sum();
        return Ok(Some(vec![num / g]));
    }

    // Normal equations of the n_rx x 2 system: G = H^H H, b = H^H y.
    let col = |t: usize| h_hat.iter().skip(t).step_by(n_tx);
    let g00: f64 = col(0).map(|h| h.norm_sqr()).sum();
    let g11: f64 = col(1).map(|h| h.norm_sqr()).sum();
    let g01: Complex64 = col(0).zip(col(1)).map(|(a, b)| a.conj() * b).sum();
    let b0: Complex64 = col(0).zip(y).map(|(h, y)| h.conj() * y).sum();
    let b1: Complex64 = col(1).zip(y).map(|(h, y)| h.conj() * y).sum();

    // Eigenvalues of the 2x2 Gram matrix give the squared singular values.
    let trace = g00 + g11;
    let disc = ((g00 - g11) * (g00 - g11) + 4.0 * g01.norm_sqr()).sqrt();
    let lam_max = 0.5 * (trace + disc);
    let lam_min = 0.5 * (trace - disc);
    if lam_min <= 0.0 || lam_max > lam_min * CONDITION_LIMIT * CONDITION_LIMIT {
        return Ok(None);
    }

    let det = g00 * g11 - g01.norm_sqr();
    let x0 = (b0 * g11 - g01 * b1) / det;
    let x1 = (b1 * g00 - g01.conj() * b0) / det;
    Ok(Some(vec![x0, x1]))
}

/// Hard decisions for one stream over some set of cells, compared against the
/// transmitted reference bits.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// The decided bits.
    pub bits: Vec<bool>,
    pub symbol_errors: usize,
    pub bit_errors: usize,
    pub bits_total: usize,
}

impl DetectionResult {
    pub fn new(bits: Vec<bool>, reference: &[bool], bits_per_symbol: usize) -> Result<DetectionResult> {
        if bits.len() != reference.len() {
            return Err(Error::Usage(format!(
                "decided {} bits against {} reference bits",
                bits.len(),
                reference.len()
            )));
        }
        if bits_per_symbol == 0 || bits.len() % bits_per_symbol != 0 {
            return Err(Error::Framing(format!(
                "{} bits do not frame into {bits_per_symbol}-bit symbols",
                bits.len()
            )));
        }
        let bit_errors = bits.iter().zip(reference).filter(|(a, b)| a != b).count();
        let symbol_errors = bits
            .chunks_exact(bits_per_symbol)
            .zip(reference.chunks_exact(bits_per_symbol))
            .filter(|(a, b)| a != b)
            .count();
        let bits_total = bits.len();
        Ok(DetectionResult {
            bits,
            symbol_errors,
            bit_errors,
            bits_total,
        })
    }

    pub fn ber(&self) -> f64 {
        if self.bits_total == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits_total as f64
        }
    }
}

/// Running squared-error and bit-error totals for one (SNR, channel length,
/// estimator) sweep point. Merging accumulators adds their fields, nothing
/// else, so trials may be accumulated in any grouping as long as the final
/// merge order is fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricAccumulator {
    pub sum_sq_err: f64,
    pub count_h: u64,
    pub bit_errors: u64,
    pub bits_total: u64,
}

impl MetricAccumulator {
    /// Folds one batch of per-subcarrier estimates and/or detected bits into
    /// the totals. Either pair may be empty.
    pub fn accumulate(
        &mut self,
        h_hat: &[Complex64],
        h_true: &[Complex64],
        tx_bits: &[bool],
        rx_bits: &[bool],
    ) -> Result<()> {
        if h_hat.len() != h_true.len() {
            return Err(Error::Usage(format!(
                "estimate covers {} subcarriers, truth covers {}",
                h_hat.len(),
                h_true.len()
            )));
        }
        if tx_bits.len() != rx_bits.len() {
            return Err(Error::Usage(format!(
                "{} transmitted bits against {} received bits",
                tx_bits.len(),
                rx_bits.len()
            )));
        }
        self.sum_sq_err += h_hat
            .iter()
            .zip(h_true)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
        self.count_h += h_hat.len() as u64;
        self.bit_errors += tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count() as u64;
        self.bits_total += tx_bits.len() as u64;
        Ok(())
    }

    pub fn merge(&mut self, other: &MetricAccumulator) {
        self.sum_sq_err += other.sum_sq_err;
        self.count_h += other.count_h;
        self.bit_errors += other.bit_errors;
        self.bits_total += other.bits_total;
    }

    pub fn mse(&self) -> f64 {
        if self.count_h == 0 {
            0.0
        } else {
            self.sum_sq_err / self.count_h as f64
        }
    }

    pub fn ber(&self) -> f64 {
        if self.bits_total == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits_total as f64
        }
    }
}
