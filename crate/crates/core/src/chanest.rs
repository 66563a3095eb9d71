//! Pilot-based channel estimation.
//!
//! Least squares divides each received pilot by its known transmitted value:
//!
//! ```text
//! h_ls[i] = y_p[i] / x_p[i]
//! ```
//!
//! The LMMSE estimators smooth that raw estimate with the channel's frequency
//! correlation and extend it to the full band:
//!
//! ```text
//! full:        h = R_hhp (R_hphp + noise_var * diag(1/|x_p|^2))^-1 h_ls
//! simplified:  h = R_hhp (R_hphp + (beta / snr) I)^-1 h_ls
//! ```
//!
//! where `beta = E|c|^2 E|1/c|^2` of the data constellation (1 for QPSK,
//! 17/9 for 16-QAM). With unit-modulus pilots and `beta = 1` the two forms
//! coincide. The inner system is Hermitian positive definite for any positive
//! loading and is solved by Cholesky factorization; if factorization fails,
//! one retry with `1e-12` diagonal loading is attempted before giving up.
//! The LS estimate is extended to the full band by linear interpolation
//! instead, held constant beyond the outermost pilots.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::CorrelationSet;
use crate::error::{Error, Result};

/// Received and transmitted pilot values on one pilot lattice.
#[derive(Debug, Clone)]
pub struct PilotObservation {
    pub y_p: Vec<Complex64>,
    pub x_p: Vec<Complex64>,
    /// Subcarrier index of each pilot, strictly ascending.
    pub pilot_idx: Vec<usize>,
}

impl PilotObservation {
    fn validate(&self) -> Result<()> {
        if self.y_p.len() != self.x_p.len() || self.y_p.len() != self.pilot_idx.len() {
            return Err(Error::Usage(format!(
                "pilot observation fields disagree in length: {} received, {} transmitted, {} indices",
                self.y_p.len(),
                self.x_p.len(),
                self.pilot_idx.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    Ls,
    LmmseFull,
    LmmseSimplified,
}

/// A per-subcarrier channel estimate for one pilot symbol, or for a whole
/// slot after combining.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// Estimate at the pilot positions (raw for LS, smoothed for LMMSE).
    pub h_pilot: Vec<Complex64>,
    /// Estimate over the full band.
    pub h_full: Vec<Complex64>,
    pub pilot_idx: Vec<usize>,
    pub method: EstimationMethod,
}

impl ChannelEstimate {
    /// Builds an estimate from its full-band values; the pilot-position view
    /// is the restriction of `h_full` to `pilot_idx`.
    pub fn from_full(h_full: Vec<Complex64>, pilot_idx: Vec<usize>, method: EstimationMethod) -> Self {
        let h_pilot = pilot_idx.iter().map(|&k| h_full[k]).collect();
        ChannelEstimate {
            h_pilot,
            h_full,
            pilot_idx,
            method,
        }
    }
}

/// Statistical inputs of the LMMSE estimators for one sweep point.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorParams<'a> {
    /// Constellation factor `E|c|^2 E|1/c|^2`.
    pub beta: f64,
    /// Linear (not dB) per-subcarrier SNR.
    pub snr_linear: f64,
    /// Noise variance at the pilot cells.
    pub noise_var: f64,
    pub correlation: &'a CorrelationSet,
}

/// Raw least-squares estimate at the pilot positions.
pub fn ls_estimate(obs: &PilotObservation) -> Result<Vec<Complex64>> {
    obs.validate()?;
    obs.y_p
        .iter()
        .zip(&obs.x_p)
        .enumerate()
        .map(|(i, (&y, &x))| {
            if x.norm_sqr() == 0.0 {
                Err(Error::SingularPilot(i))
            } else {
                Ok(y / x)
            }
        })
        .collect()
}

/// Cholesky solve of `(a + diag(load)) z = rhs` with one `1e-12` loading
/// retry on factorization failure.
fn solve_loaded(
    a: &DMatrix<Complex64>,
    load: &[f64],
    rhs: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let p = a.nrows();
    let mut m = a.clone();
    for i in 0..p {
        m[(i, i)] += Complex64::new(load[i], 0.0);
    }
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    for i in 0..p {
        m[(i, i)] += Complex64::new(1e-12, 0.0);
    }
    match m.cholesky() {
        Some(chol) => Ok(chol.solve(rhs)),
        None => Err(Error::SingularMatrix),
    }
}

fn check_correlation_shape(corr: &CorrelationSet, p: usize) -> Result<()> {
    if corr.r_hphp.nrows() != p || corr.r_hhp.ncols() != p || corr.pilot_idx.len() != p {
        return Err(Error::Usage(format!(
            "correlation set sized for {} pilots, observation has {p}",
            corr.r_hphp.nrows()
        )));
    }
    Ok(())
}

fn smooth(
    corr: &CorrelationSet,
    load: &[f64],
    h_ls: &[Complex64],
) -> Result<Vec<Complex64>> {
    let rhs = DMatrix::from_column_slice(h_ls.len(), 1, h_ls);
    let z = solve_loaded(&corr.r_hphp, load, &rhs)?;
    Ok((&corr.r_hhp * z).column(0).iter().copied().collect())
}

/// Full LMMSE estimate over the whole band, weighting each pilot by its
/// actual transmitted power. The filtering matrix is formed per call.
pub fn lmmse_full(obs: &PilotObservation, params: &EstimatorParams) -> Result<Vec<Complex64>> {
    obs.validate()?;
    let p = obs.y_p.len();
    check_correlation_shape(params.correlation, p)?;
    if params.noise_var < 0.0 || params.noise_var.is_nan() {
        return Err(Error::Config(format!(
            "noise variance must be >= 0, got {}",
            params.noise_var
        )));
    }
    let h_ls = ls_estimate(obs)?;
    let load: Vec<f64> = obs.x_p.iter().map(|x| params.noise_var / x.norm_sqr()).collect();
    smooth(params.correlation, &load, &h_ls)
}

/// Simplified LMMSE estimate: the per-pilot weighting collapses to the single
/// scalar `beta / snr`.
pub fn lmmse_simplified(h_ls: &[Complex64], params: &EstimatorParams) -> Result<Vec<Complex64>> {
    check_correlation_shape(params.correlation, h_ls.len())?;
    if !(params.snr_linear > 0.0) {
        return Err(Error::Config(format!(
            "snr_linear must be positive, got {}",
            params.snr_linear
        )));
    }
    if !(params.beta > 0.0) {
        return Err(Error::Config(format!(
            "beta must be positive, got {}",
            params.beta
        )));
    }
    let load = vec![params.beta / params.snr_linear; h_ls.len()];
    smooth(params.correlation, &load, h_ls)
}

/// Precomputed simplified-LMMSE smoothing matrix for one pilot lattice and one
/// (SNR, channel length) sweep point. Immutable, safe to share across worker
/// threads.
#[derive(Debug, Clone)]
pub struct LmmseFilter {
    w: DMatrix<Complex64>,
    pub pilot_idx: Vec<usize>,
}

impl LmmseFilter {
    pub fn new(params: &EstimatorParams) -> Result<LmmseFilter> {
        if !(params.snr_linear > 0.0) || !(params.beta > 0.0) {
            return Err(Error::Config(
                "LMMSE filter needs positive beta and snr_linear".into(),
            ));
        }
        let corr = params.correlation;
        let p = corr.r_hphp.nrows();
        let load = vec![params.beta / params.snr_linear; p];
        // W = R_hhp A^-1 with A Hermitian: solve A W^H = R_hhp^H.
        let w_adj = solve_loaded(&corr.r_hphp, &load, &corr.r_hhp.adjoint())?;
        Ok(LmmseFilter {
            w: w_adj.adjoint(),
            pilot_idx: corr.pilot_idx.clone(),
        })
    }

    /// Applies the filter to a raw LS pilot estimate.
    pub fn apply(&self, h_ls: &[Complex64]) -> Result<Vec<Complex64>> {
        if h_ls.len() != self.w.ncols() {
            return Err(Error::Usage(format!(
                "filter built for {} pilots, got {}",
                self.w.ncols(),
                h_ls.len()
            )));
        }
        let v = DVector::from_column_slice(h_ls);
        Ok((&self.w * v).iter().copied().collect())
    }
}

/// Extends a pilot-position LS estimate to `all_idx` by linear interpolation
/// in subcarrier index, constant beyond the first and last pilots.
pub fn ls_interpolate(
    h_pilot: &[Complex64],
    pilot_idx: &[usize],
    all_idx: &[usize],
) -> Result<Vec<Complex64>> {
    if h_pilot.len() != pilot_idx.len() {
        return Err(Error::Usage(format!(
            "{} pilot values against {} pilot indices",
            h_pilot.len(),
            pilot_idx.len()
        )));
    }
    if pilot_idx.len() < 2 {
        return Err(Error::InsufficientPilots(pilot_idx.len()));
    }
    if pilot_idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("pilot indices must be strictly ascending".into()));
    }
    let first = pilot_idx[0];
    let last = *pilot_idx.last().unwrap();
    let mut out = Vec::with_capacity(all_idx.len());
    // Walks `all_idx` with a sliding pilot segment; `all_idx` need not be
    // sorted, so rewind when it steps backwards.
    let mut seg = 0usize;
    for &k in all_idx {
        if k <= first {
            out.push(h_pilot[0]);
            continue;
        }
        if k >= last {
            out.push(*h_pilot.last().unwrap());
            continue;
        }
        if pilot_idx[seg] > k {
            seg = 0;
        }
        while pilot_idx[seg + 1] < k {
            seg += 1;
        }
        let (k0, k1) = (pilot_idx[seg], pilot_idx[seg + 1]);
        let t = (k - k0) as f64 / (k1 - k0) as f64;
        out.push(h_pilot[seg] * (1.0 - t) + h_pilot[seg + 1] * t);
    }
    Ok(out)
}

/// Per-subcarrier average of a slot's two pilot-symbol estimates; the result
/// applies to every OFDM symbol of the slot under block fading.
pub fn combine_slot_estimates(a: &ChannelEstimate, b: &ChannelEstimate) -> Result<ChannelEstimate> {
    if a.method != b.method {
        return Err(Error::Usage(format!(
            "cannot combine {:?} with {:?} estimates",
            a.method, b.method
        )));
    }
    if a.h_full.len() != b.h_full.len() {
        return Err(Error::Usage(format!(
            "cannot combine estimates over {} and {} subcarriers",
            a.h_full.len(),
            b.h_full.len()
        )));
    }
    let h_full: Vec<Complex64> = a
        .h_full
        .iter()
        .zip(&b.h_full)
        .map(|(x, y)| (x + y) * 0.5)
        .collect();
    let mut pilot_idx: Vec<usize> = a.pilot_idx.iter().chain(&b.pilot_idx).copied().collect();
    pilot_idx.sort_unstable();
    pilot_idx.dedup();
    Ok(ChannelEstimate::from_full(h_full, pilot_idx, a.method))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_correlation, draw_channel, freq_correlation, uniform_pdp};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-10;

    fn approx_eq_c(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qpsk_pilot(rng: &mut impl Rng) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        c(
            if rng.gen() { s } else { -s },
            if rng.gen() { s } else { -s },
        )
    }

    #[test]
    fn ls_divides_by_known_pilot() {
        let obs = PilotObservation {
            y_p: vec![c(2.0, 1.0)],
            x_p: vec![c(1.0, 0.0)],
            pilot_idx: vec![0],
        };
        assert_eq!(ls_estimate(&obs).unwrap(), vec![c(2.0, 1.0)]);
    }

    #[test]
    fn ls_inverts_noiseless_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h: Vec<Complex64> = (0..8).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let x: Vec<Complex64> = (0..8).map(|_| qpsk_pilot(&mut rng)).collect();
        let obs = PilotObservation {
            y_p: h.iter().zip(&x).map(|(h, x)| h * x).collect(),
            x_p: x,
            pilot_idx: (0..8).collect(),
        };
        let est = ls_estimate(&obs).unwrap();
        for (e, t) in est.iter().zip(&h) {
            assert!(approx_eq_c(*e, *t, EPS));
        }
    }

    #[test]
    fn ls_error_variance_tracks_noise_floor() {
        // At 10 dB with unit-modulus pilots the LS error is exactly the
        // noise: E|h_ls - h|^2 = 0.1.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sigma = (0.1f64 / 2.0).sqrt();
        let n = 50_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let h = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let x = qpsk_pilot(&mut rng);
            let noise = c(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal)) * sigma;
            let obs = PilotObservation {
                y_p: vec![h * x + noise],
                x_p: vec![x],
                pilot_idx: vec![0],
            };
            acc += (ls_estimate(&obs).unwrap()[0] - h).norm_sqr();
        }
        let mse = acc / n as f64;
        assert!((mse - 0.1).abs() / 0.1 < 0.1, "mse {mse}");
    }

    #[test]
    fn ls_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = c(0.6, -0.3);
        let x = qpsk_pilot(&mut rng);
        let sigma = (0.2f64 / 2.0).sqrt();
        let n = 20_000;
        let mut mean = c(0.0, 0.0);
        for _ in 0..n {
            let noise = c(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal)) * sigma;
            let obs = PilotObservation {
                y_p: vec![h * x + noise],
                x_p: vec![x],
                pilot_idx: vec![0],
            };
            mean += ls_estimate(&obs).unwrap()[0];
        }
        mean /= n as f64;
        // 3 standard errors of the sample mean.
        let tol = 3.0 * (0.2f64 / n as f64).sqrt();
        assert!((mean - h).norm() < tol, "bias {}", (mean - h).norm());
    }

    #[test]
    fn ls_rejects_zero_pilot() {
        let obs = PilotObservation {
            y_p: vec![c(1.0, 0.0), c(1.0, 0.0)],
            x_p: vec![c(1.0, 0.0), c(0.0, 0.0)],
            pilot_idx: vec![0, 6],
        };
        assert!(matches!(ls_estimate(&obs), Err(Error::SingularPilot(1))));
    }

    #[test]
    fn lmmse_full_reduces_to_ls_when_noiseless_and_fully_piloted() {
        // Pilots on every subcarrier with a channel order equal to the pilot
        // count make R_hphp nonsingular, so with zero noise the filter is
        // R R^-1 = I.
        let p = 8;
        let pdp = uniform_pdp(p);
        let idx: Vec<usize> = (0..p).collect();
        let corr = build_correlation(&pdp, 64, &idx, &idx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = draw_channel(&pdp, &mut rng).unwrap();
        let h_true = crate::channel::freq_response(&h, 64).unwrap()[..p].to_vec();
        let x: Vec<Complex64> = (0..p).map(|_| qpsk_pilot(&mut rng)).collect();
        let obs = PilotObservation {
            y_p: h_true.iter().zip(&x).map(|(h, x)| h * x).collect(),
            x_p: x,
            pilot_idx: idx,
        };
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: f64::INFINITY,
            noise_var: 0.0,
            correlation: &corr,
        };
        let est = lmmse_full(&obs, &params).unwrap();
        let ls = ls_estimate(&obs).unwrap();
        for (a, b) in est.iter().zip(&ls) {
            assert!(approx_eq_c(*a, *b, 1e-8));
        }
    }

    #[test]
    fn lmmse_full_matches_hand_built_two_pilot_filter() {
        // Flat channel (L = 1): all correlations are 1. With unit pilots and
        // noise variance s, the system matrix is [[1+s, 1], [1, 1+s]] whose
        // inverse is known in closed form.
        let corr = build_correlation(&[1.0], 64, &[0, 6], &[0, 1, 2]).unwrap();
        let s = 0.25;
        let h_ls = [c(1.2, 0.4), c(0.8, -0.2)];
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        let obs = PilotObservation {
            y_p: vec![h_ls[0] * x[0], h_ls[1] * x[1]],
            x_p: x.to_vec(),
            pilot_idx: vec![0, 6],
        };
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: 1.0 / s,
            noise_var: s,
            correlation: &corr,
        };
        let est = lmmse_full(&obs, &params).unwrap();
        // Hand inversion: det = (1+s)^2 - 1, A^-1 = [[1+s, -1], [-1, 1+s]]/det.
        let det = (1.0 + s) * (1.0 + s) - 1.0;
        let z0 = (h_ls[0] * (1.0 + s) - h_ls[1]) / det;
        let z1 = (h_ls[1] * (1.0 + s) - h_ls[0]) / det;
        let expect = z0 + z1; // each output row of R_hhp is [1, 1]
        for v in est {
            assert!(approx_eq_c(v, expect, 1e-12));
        }
    }

    #[test]
    fn simplified_two_pilot_flat_channel_gives_two_thirds() {
        // L = 1, beta = 1, snr = 1, h_ls = [1, 1]: (J + I) z = h_ls gives
        // z = [1/3, 1/3] and every full-band entry is 2/3.
        let corr = build_correlation(&[1.0], 64, &[0, 6], &[0, 3, 6]).unwrap();
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: 1.0,
            noise_var: 1.0,
            correlation: &corr,
        };
        let est = lmmse_simplified(&[c(1.0, 0.0), c(1.0, 0.0)], &params).unwrap();
        for v in est {
            assert!(approx_eq_c(v, c(2.0 / 3.0, 0.0), 1e-12));
        }
    }

    fn random_instance(
        seed: u64,
    ) -> (PilotObservation, CorrelationSet, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_fft = 256;
        let l = rng.gen_range(1..=12);
        let p = rng.gen_range(2..=64);
        let n_used = rng.gen_range(p..=120usize.max(p));
        let pdp = uniform_pdp(l);
        let mut pilot_idx: Vec<usize> = (0..n_used).collect();
        // random distinct subset of size p
        for i in 0..p {
            let j = rng.gen_range(i..n_used);
            pilot_idx.swap(i, j);
        }
        pilot_idx.truncate(p);
        pilot_idx.sort_unstable();
        let all_idx: Vec<usize> = (0..n_used).collect();
        let corr = build_correlation(&pdp, n_fft, &pilot_idx, &all_idx).unwrap();
        let snr = 10f64.powf(rng.gen_range(-1.0..3.0));
        let y_p: Vec<Complex64> = (0..p)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let x_p: Vec<Complex64> = (0..p).map(|_| qpsk_pilot(&mut rng)).collect();
        let obs = PilotObservation {
            y_p,
            x_p,
            pilot_idx,
        };
        (obs, corr, snr)
    }

    #[test]
    fn full_and_simplified_agree_for_unit_pilots() {
        // With |x_p| = 1 and noise_var = beta/snr the two estimators are the
        // same formula.
        for seed in 0..10 {
            let (obs, corr, snr) = random_instance(seed);
            let params = EstimatorParams {
                beta: 1.0,
                snr_linear: snr,
                noise_var: 1.0 / snr,
                correlation: &corr,
            };
            let full = lmmse_full(&obs, &params).unwrap();
            let simple = lmmse_simplified(&ls_estimate(&obs).unwrap(), &params).unwrap();
            for (a, b) in full.iter().zip(&simple) {
                assert!(approx_eq_c(*a, *b, 1e-10));
            }
        }
    }

    #[test]
    fn precomputed_filter_matches_direct_solve() {
        let (obs, corr, snr) = random_instance(99);
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: snr,
            noise_var: 1.0 / snr,
            correlation: &corr,
        };
        let h_ls = ls_estimate(&obs).unwrap();
        let direct = lmmse_simplified(&h_ls, &params).unwrap();
        let filter = LmmseFilter::new(&params).unwrap();
        let via_filter = filter.apply(&h_ls).unwrap();
        for (a, b) in direct.iter().zip(&via_filter) {
            assert!(approx_eq_c(*a, *b, 1e-9));
        }
    }

    #[test]
    fn smoothing_is_linear_in_the_observation() {
        let (obs, corr, snr) = random_instance(7);
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: snr,
            noise_var: 1.0 / snr,
            correlation: &corr,
        };
        let p = obs.y_p.len();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u: Vec<Complex64> = (0..p).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let v: Vec<Complex64> = (0..p).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let a = c(1.7, -0.4);
        let combo: Vec<Complex64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let fu = lmmse_simplified(&u, &params).unwrap();
        let fv = lmmse_simplified(&v, &params).unwrap();
        let fc = lmmse_simplified(&combo, &params).unwrap();
        for i in 0..fc.len() {
            assert!(approx_eq_c(fc[i], a * fu[i] + fv[i], 1e-12));
        }
    }

    #[test]
    fn high_snr_limit_approaches_ls_on_orthogonal_pilot_grid() {
        // Stride-8 pilots with 8 uniform taps on a 64-bin grid: the pilot
        // autocorrelation r(8*d) is exactly the Kronecker delta, so the
        // smoother degenerates to a 1/(1 + beta/snr) scaling of LS.
        let pdp = uniform_pdp(8);
        let idx: Vec<usize> = (0..64).step_by(8).collect();
        let corr = build_correlation(&pdp, 64, &idx, &idx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h_ls: Vec<Complex64> = (0..idx.len())
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: 1e9,
            noise_var: 1e-9,
            correlation: &corr,
        };
        let est = lmmse_simplified(&h_ls, &params).unwrap();
        for (a, b) in est.iter().zip(&h_ls) {
            assert!(approx_eq_c(*a, *b, 1e-5));
        }
    }

    #[test]
    fn low_snr_limit_shrinks_to_zero() {
        let (obs, corr, _) = random_instance(5);
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: 1e-12,
            noise_var: 1e12,
            correlation: &corr,
        };
        let est = lmmse_simplified(&ls_estimate(&obs).unwrap(), &params).unwrap();
        for v in est {
            assert!(v.norm() < 1e-9);
        }
    }

    #[test]
    fn lmmse_rejects_nonpositive_snr_and_mismatched_sizes() {
        let corr = build_correlation(&[1.0], 64, &[0, 6], &[0, 1]).unwrap();
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: 0.0,
            noise_var: 1.0,
            correlation: &corr,
        };
        assert!(lmmse_simplified(&[c(1.0, 0.0), c(1.0, 0.0)], &params).is_err());
        let params = EstimatorParams {
            beta: 1.0,
            snr_linear: 1.0,
            noise_var: 1.0,
            correlation: &corr,
        };
        assert!(lmmse_simplified(&[c(1.0, 0.0)], &params).is_err());
    }

    #[test]
    fn interpolation_matches_hand_values() {
        let h = [c(1.0, 0.0), c(3.0, 2.0)];
        let idx = [2usize, 6];
        let all: Vec<usize> = (0..10).collect();
        let out = ls_interpolate(&h, &idx, &all).unwrap();
        // Constant hold below the first pilot and above the last.
        assert_eq!(out[0], h[0]);
        assert_eq!(out[1], h[0]);
        assert_eq!(out[8], h[1]);
        assert_eq!(out[9], h[1]);
        // Midpoint of the segment.
        assert!(approx_eq_c(out[4], c(2.0, 1.0), EPS));
        // Exact at the knots.
        assert_eq!(out[2], h[0]);
        assert_eq!(out[6], h[1]);
    }

    #[test]
    fn interpolation_needs_two_sorted_pilots() {
        let all: Vec<usize> = (0..4).collect();
        assert!(matches!(
            ls_interpolate(&[c(1.0, 0.0)], &[0], &all),
            Err(Error::InsufficientPilots(1))
        ));
        assert!(ls_interpolate(&[c(1.0, 0.0), c(2.0, 0.0)], &[3, 1], &all).is_err());
        assert!(ls_interpolate(&[c(1.0, 0.0)], &[0, 1], &all).is_err());
    }

    #[test]
    fn combining_identical_estimates_is_identity() {
        let est = ChannelEstimate::from_full(
            vec![c(1.0, 1.0), c(2.0, -1.0), c(0.5, 0.0)],
            vec![0, 2],
            EstimationMethod::Ls,
        );
        let combined = combine_slot_estimates(&est, &est).unwrap();
        assert_eq!(combined.h_full, est.h_full);
        assert_eq!(combined.pilot_idx, est.pilot_idx);
    }

    #[test]
    fn combining_opposite_estimates_cancels() {
        let a = ChannelEstimate::from_full(vec![c(1.0, 2.0); 4], vec![0, 3], EstimationMethod::Ls);
        let b = ChannelEstimate::from_full(vec![c(-1.0, -2.0); 4], vec![1, 3], EstimationMethod::Ls);
        let combined = combine_slot_estimates(&a, &b).unwrap();
        assert!(combined.h_full.iter().all(|v| v.norm() == 0.0));
        assert_eq!(combined.pilot_idx, vec![0, 1, 3]);
    }

    #[test]
    fn combining_halves_independent_noise_variance() {
        // Two estimates of the same constant channel with independent noise:
        // the average has half the error variance of a single estimate.
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let h = c(1.0, -0.5);
        let n = 20_000;
        let sigma = (0.3f64 / 2.0).sqrt();
        let (mut var_single, mut var_combined) = (0.0, 0.0);
        for _ in 0..n {
            let mut noisy = || {
                ChannelEstimate::from_full(
                    vec![
                        h + c(
                            rng.sample::<f64, _>(rand_distr::StandardNormal),
                            rng.sample::<f64, _>(rand_distr::StandardNormal),
                        ) * sigma,
                    ],
                    vec![0],
                    EstimationMethod::LmmseSimplified,
                )
            };
            let a = noisy();
            let b = noisy();
            let combined = combine_slot_estimates(&a, &b).unwrap();
            var_single += (a.h_full[0] - h).norm_sqr();
            var_combined += (combined.h_full[0] - h).norm_sqr();
        }
        let ratio = var_combined / var_single;
        assert!((ratio - 0.5).abs() < 0.05, "variance ratio {ratio}");
    }

    #[test]
    fn combining_mismatched_estimates_errors() {
        let a = ChannelEstimate::from_full(vec![c(1.0, 0.0); 4], vec![0, 3], EstimationMethod::Ls);
        let b = ChannelEstimate::from_full(
            vec![c(1.0, 0.0); 4],
            vec![0, 3],
            EstimationMethod::LmmseSimplified,
        );
        assert!(combine_slot_estimates(&a, &b).is_err());
        let short = ChannelEstimate::from_full(vec![c(1.0, 0.0); 3], vec![0, 2], EstimationMethod::Ls);
        assert!(combine_slot_estimates(&a, &short).is_err());
    }

    #[test]
    fn pilot_domain_lmmse_beats_ls_for_short_channels() {
        // Direct synthetic check in the pilot domain, away from the OFDM
        // chain: at every SNR from 0 to 30 dB the smoothed estimate has lower
        // MSE than raw LS when the channel fits well inside the band.
        let n_fft = 512;
        let l = 6;
        let pdp = uniform_pdp(l);
        let pilot_idx: Vec<usize> = (0..50).map(|i| 6 * i).collect();
        let corr = build_correlation(&pdp, n_fft, &pilot_idx, &pilot_idx.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for snr_db in [0.0f64, 10.0, 20.0, 30.0] {
            let snr = 10f64.powf(snr_db / 10.0);
            let sigma = (1.0 / snr / 2.0).sqrt();
            let params = EstimatorParams {
                beta: 1.0,
                snr_linear: snr,
                noise_var: 1.0 / snr,
                correlation: &corr,
            };
            let filter = LmmseFilter::new(&params).unwrap();
            let trials = 500; // 25k pilot observations per SNR point
            let (mut mse_ls, mut mse_lmmse) = (0.0, 0.0);
            for _ in 0..trials {
                let h = draw_channel(&pdp, &mut rng).unwrap();
                let resp = crate::channel::freq_response(&h, n_fft).unwrap();
                let h_p: Vec<Complex64> = pilot_idx.iter().map(|&k| resp[k]).collect();
                let h_ls: Vec<Complex64> = h_p
                    .iter()
                    .map(|&v| {
                        v + c(
                            rng.sample::<f64, _>(rand_distr::StandardNormal),
                            rng.sample::<f64, _>(rand_distr::StandardNormal),
                        ) * sigma
                    })
                    .collect();
                let smoothed = filter.apply(&h_ls).unwrap();
                for i in 0..h_p.len() {
                    mse_ls += (h_ls[i] - h_p[i]).norm_sqr();
                    mse_lmmse += (smoothed[i] - h_p[i]).norm_sqr();
                }
            }
            assert!(
                mse_lmmse < mse_ls,
                "snr {snr_db} dB: lmmse {mse_lmmse} vs ls {mse_ls}"
            );
        }
    }

    #[test]
    fn correlation_correlates_with_monte_carlo() {
        // Spot check: empirical E[H[k] conj(H[m])] approaches r(k - m).
        let n_fft = 256;
        let pdp = uniform_pdp(4);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let (k, m) = (12usize, 30usize);
        let n = 20_000;
        let mut acc = c(0.0, 0.0);
        for _ in 0..n {
            let h = draw_channel(&pdp, &mut rng).unwrap();
            let resp = crate::channel::freq_response(&h, n_fft).unwrap();
            acc += resp[k] * resp[m].conj();
        }
        acc /= n as f64;
        let expect = freq_correlation(&pdp, n_fft, k as isize - m as isize);
        assert!((acc - expect).norm() < 0.05);
    }
}
