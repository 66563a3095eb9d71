//! Deterministic Monte Carlo driver.
//!
//! A trial is one slot simulated end to end: grid fill, OFDM modulation, FIR
//! fading applied by linear convolution over the whole slot stream (so a
//! channel longer than the cyclic prefix produces genuine inter-symbol
//! interference), AWGN, demodulation, channel estimation, zero-forcing
//! detection. All randomness of a slot derives from a single 64-bit slot seed
//! through fixed, purpose-tagged substreams; the estimator choice never
//! enters the seeding, so every estimator sees identical channel, noise, and
//! data realizations (paired comparison). Trials run in parallel across
//! slots and are merged in slot order, making results byte-reproducible.

use std::fmt;
use std::io::Write as _;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chanest::{
    combine_slot_estimates, lmmse_full, ls_estimate, ls_interpolate, ChannelEstimate,
    EstimationMethod, EstimatorParams, LmmseFilter, PilotObservation,
};
use crate::channel::{
    add_awgn, apply_channel, build_correlation, draw_channel, freq_response, uniform_pdp,
    ChannelRealization, CorrelationSet, NoiseModel,
};
use crate::error::{Error, Result};
use crate::grid::{
    build_layout, fill_grid, pilot_indices, pilot_sequence, CellRole, CpMode, GridLayout,
    LinkConfig, SLOTS_PER_FRAME,
};
use crate::ofdm::{demap_symbols, fft_to_used, map_bits, ofdm_demodulate, ofdm_modulate, used_to_fft};
use crate::receiver::{zf_equalize_mimo, zf_equalize_siso, DetectionResult, MetricAccumulator};

/// Channel estimator under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Estimator {
    Ls,
    LmmseSimplified,
    LmmseFull,
    /// Genie bound: the detector is handed the true channel.
    PerfectCsi,
}

impl Estimator {
    pub fn token(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::LmmseSimplified => "lmmse",
            Estimator::LmmseFull => "lmmse_full",
            Estimator::PerfectCsi => "perfect",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" => Ok(Estimator::Ls),
            "lmmse" => Ok(Estimator::LmmseSimplified),
            "lmmse_full" => Ok(Estimator::LmmseFull),
            "perfect" => Ok(Estimator::PerfectCsi),
            other => Err(Error::Config(format!(
                "unknown estimator {other:?}, expected ls, lmmse, lmmse_full or perfect"
            ))),
        }
    }
}

/// Full description of one sweep. `frames` and `seed` here drive the run;
/// the corresponding fields of `base` are ignored.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: LinkConfig,
    pub cp_mode: CpMode,
    /// SNR grid in dB, strictly increasing.
    pub snr_grid_db: Vec<f64>,
    pub channel_lengths: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub frames: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("SNR grid must be non-empty".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("SNR grid must be strictly increasing".into()));
        }
        if self.channel_lengths.is_empty() {
            return Err(Error::Config("channel length list must be non-empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("estimator list must be non-empty".into()));
        }
        if self.frames == 0 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        for &l in &self.channel_lengths {
            let mut cfg = self.base.clone();
            cfg.channel_len = l;
            cfg.validate()?;
        }
        Ok(())
    }
}

impl Default for SweepSpec {
    /// The reference sweep: 5 MHz profile, SNR 0..30 dB in 5 dB steps,
    /// channels of 6, 20 and 40 taps, LS against simplified LMMSE.
    fn default() -> Self {
        SweepSpec {
            base: LinkConfig::default(),
            cp_mode: CpMode::Normal,
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            channel_lengths: vec![6, 20, 40],
            estimators: vec![Estimator::Ls, Estimator::LmmseSimplified],
            frames: 20,
            seed: 1,
        }
    }
}

/// One (SNR, channel length, estimator) result.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub snr_db: f64,
    pub channel_len: usize,
    pub estimator: Estimator,
    pub mse: f64,
    pub ber: f64,
    pub bits_total: u64,
    /// Slots simulated for this row.
    pub trials: u64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Sorted by (channel_len, estimator, snr_db).
    pub rows: Vec<SweepRow>,
    pub runtime_s: f64,
    pub spec_echo: SweepSpec,
}

/// Mixes a slot coordinate into the base seed (splitmix64 finalizer), giving
/// every slot its own well-separated 64-bit seed.
pub fn derive_slot_seed(seed: u64, frame: usize, slot: usize) -> u64 {
    let mut z = seed ^ mix64(((frame as u64) << 32) | slot as u64);
    z = mix64(z);
    z
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent randomness purposes inside one slot. Each (purpose, link)
/// pair maps to its own counter-mode stream of the slot's generator, so
/// draws never alias and adding estimators cannot shift any stream.
#[derive(Clone, Copy)]
enum Stream {
    Data { port: usize },
    Pilot { port: usize },
    Channel { tx: usize, rx: usize },
    Noise { rx: usize },
}

fn stream_rng(slot_seed: u64, stream: Stream) -> ChaCha8Rng {
    let id = match stream {
        Stream::Data { port } => (1u64 << 32) | port as u64,
        Stream::Pilot { port } => (2u64 << 32) | port as u64,
        Stream::Channel { tx, rx } => (3u64 << 32) | ((tx as u64) << 16) | rx as u64,
        Stream::Noise { rx } => (4u64 << 32) | rx as u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(slot_seed);
    rng.set_stream(id);
    rng
}

/// One pilot lattice (all pilots of some port in one pilot symbol share a
/// subcarrier offset) with its precomputed statistics.
#[derive(Debug, Clone)]
struct Lattice {
    shift: usize,
    pilot_idx: Vec<usize>,
    correlation: CorrelationSet,
    filter: LmmseFilter,
}

/// Everything shareable across the trials of one sweep point: layout-derived
/// index sets and the LMMSE filter matrices. Immutable once built.
#[derive(Debug, Clone)]
pub struct TrialContext {
    cfg: LinkConfig,
    layout: GridLayout,
    /// Pilot resource elements per port, sorted (symbol, subcarrier).
    pilot_positions: Vec<Vec<(usize, usize)>>,
    /// Data cell count per port.
    data_cells: Vec<usize>,
    /// Lattice index per port and pilot-symbol slot.
    lattice_of: Vec<Vec<usize>>,
    lattices: Vec<Lattice>,
    all_idx: Vec<usize>,
    snr_linear: f64,
    noise: NoiseModel,
}

impl TrialContext {
    pub fn new(cfg: &LinkConfig, cp_mode: CpMode) -> Result<TrialContext> {
        let layout = build_layout(cfg, cp_mode)?;
        TrialContext::from_parts(cfg.clone(), layout)
    }

    pub fn from_parts(cfg: LinkConfig, layout: GridLayout) -> Result<TrialContext> {
        cfg.validate()?;
        if layout.n_used != cfg.n_used {
            return Err(Error::Usage(format!(
                "layout built for {} subcarriers, config has {}",
                layout.n_used, cfg.n_used
            )));
        }
        let n_used = cfg.n_used;
        let all_idx: Vec<usize> = (0..n_used).collect();
        let total = layout.symbols_per_slot * n_used;
        let snr_linear = 10f64.powf(cfg.snr_db / 10.0);
        let pdp = uniform_pdp(cfg.channel_len);

        let mut pilot_positions = Vec::with_capacity(cfg.n_tx);
        let mut data_cells = Vec::with_capacity(cfg.n_tx);
        let mut lattice_of = vec![Vec::new(); cfg.n_tx];
        let mut lattices: Vec<Lattice> = Vec::new();
        for port in 0..cfg.n_tx {
            let positions = pilot_indices(&layout, port, n_used)?;
            let nulls = layout.null_positions_per_port[port].len();
            data_cells.push(total - positions.len() - nulls);
            pilot_positions.push(positions);

            let offset = layout.pilot_subcarrier_offset_per_port[port];
            let stride = layout.pilot_subcarrier_stride;
            for i in 0..layout.pilot_symbol_indices.len() {
                let shift = (offset + (stride / 2) * i) % stride;
                let idx = match lattices.iter().position(|l| l.shift == shift) {
                    Some(idx) => idx,
                    None => {
                        let pilot_idx: Vec<usize> =
                            (shift..n_used).step_by(stride).collect();
                        if pilot_idx.len() < 2 {
                            return Err(Error::InsufficientPilots(pilot_idx.len()));
                        }
                        let correlation =
                            build_correlation(&pdp, cfg.n_fft, &pilot_idx, &all_idx)?;
                        let params = EstimatorParams {
                            beta: cfg.modulation.beta(),
                            snr_linear,
                            noise_var: 1.0 / snr_linear,
                            correlation: &correlation,
                        };
                        let filter = LmmseFilter::new(&params)?;
                        lattices.push(Lattice {
                            shift,
                            pilot_idx,
                            correlation,
                            filter,
                        });
                        lattices.len() - 1
                    }
                };
                lattice_of[port].push(idx);
            }
        }

        Ok(TrialContext {
            noise: NoiseModel::from_snr_db(cfg.snr_db),
            snr_linear,
            cfg,
            layout,
            pilot_positions,
            data_cells,
            lattice_of,
            lattices,
            all_idx,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }
}

/// The channel realizations `run_trial_with` will draw for a slot seed, in
/// (tx, rx) row-major order. Exposed so reproductions and tests can inspect
/// the exact taps behind a trial; estimator choice plays no part in them.
pub fn trial_channels(ctx: &TrialContext, slot_seed: u64) -> Result<Vec<ChannelRealization>> {
    let pdp = uniform_pdp(ctx.cfg.channel_len);
    let mut channels = Vec::with_capacity(ctx.cfg.n_tx * ctx.cfg.n_rx);
    for tx in 0..ctx.cfg.n_tx {
        for rx in 0..ctx.cfg.n_rx {
            let mut rng = stream_rng(slot_seed, Stream::Channel { tx, rx });
            channels.push(draw_channel(&pdp, &mut rng)?);
        }
    }
    Ok(channels)
}

/// Runs one slot end to end with a freshly built context. For sweeps, build
/// the context once per point and use [`run_trial_with`].
pub fn run_trial(
    cfg: &LinkConfig,
    layout: &GridLayout,
    estimator: Estimator,
    slot_seed: u64,
) -> Result<MetricAccumulator> {
    let ctx = TrialContext::from_parts(cfg.clone(), layout.clone())?;
    run_trial_with(&ctx, estimator, slot_seed)
}

/// Runs one slot end to end against a prebuilt context.
pub fn run_trial_with(
    ctx: &TrialContext,
    estimator: Estimator,
    slot_seed: u64,
) -> Result<MetricAccumulator> {
    let cfg = &ctx.cfg;
    let layout = &ctx.layout;
    let (n_fft, n_used, cp) = (cfg.n_fft, cfg.n_used, cfg.cp_len);
    let symbols = layout.symbols_per_slot;
    let slot_len = symbols * (n_fft + cp);
    let bps = cfg.modulation.bits_per_symbol();

    // Transmit side: bits, grids, CP-OFDM sample streams per port.
    let mut tx_bits = Vec::with_capacity(cfg.n_tx);
    let mut grids = Vec::with_capacity(cfg.n_tx);
    let mut streams = Vec::with_capacity(cfg.n_tx);
    for port in 0..cfg.n_tx {
        let mut data_rng = stream_rng(slot_seed, Stream::Data { port });
        let bits: Vec<bool> = (0..ctx.data_cells[port] * bps)
            .map(|_| rand::Rng::gen(&mut data_rng))
            .collect();
        let data = map_bits(&bits, cfg.modulation)?;
        let mut pilot_rng = stream_rng(slot_seed, Stream::Pilot { port });
        let pilots = pilot_sequence(ctx.pilot_positions[port].len(), &mut pilot_rng);
        let grid = fill_grid(layout, port, &data, &pilots)?;
        let mut stream = Vec::with_capacity(slot_len);
        for s in 0..symbols {
            let spectrum = used_to_fft(grid.symbol(s), n_fft)?;
            stream.extend(ofdm_modulate(&spectrum, cp)?.samples);
        }
        tx_bits.push(bits);
        grids.push(grid);
        streams.push(stream);
    }

    // Channel and noise; convolution tails beyond the slot are dropped.
    let channels = trial_channels(ctx, slot_seed)?;
    let channel = |tx: usize, rx: usize| &channels[tx * cfg.n_rx + rx];
    let mut y_grid = vec![Vec::with_capacity(symbols); cfg.n_rx];
    for rx in 0..cfg.n_rx {
        let mut received = vec![Complex64::new(0.0, 0.0); slot_len];
        for tx in 0..cfg.n_tx {
            let faded = apply_channel(&streams[tx], channel(tx, rx));
            for (acc, v) in received.iter_mut().zip(&faded) {
                *acc += v;
            }
        }
        let mut noise_rng = stream_rng(slot_seed, Stream::Noise { rx });
        let received = add_awgn(&received, &ctx.noise, &mut noise_rng)?;
        for s in 0..symbols {
            let spectrum = ofdm_demodulate(&received[s * (n_fft + cp)..], cp, n_fft)?;
            y_grid[rx].push(fft_to_used(&spectrum, n_used)?);
        }
    }

    // True responses at the occupied subcarriers, per (tx, rx) link.
    let mut h_true = vec![vec![Vec::new(); cfg.n_rx]; cfg.n_tx];
    for tx in 0..cfg.n_tx {
        for rx in 0..cfg.n_rx {
            h_true[tx][rx] = fft_to_used(&freq_response(channel(tx, rx), n_fft)?, n_used)?;
        }
    }

    // Estimation per link; the slot's two pilot-symbol estimates are averaged.
    let mut acc = MetricAccumulator::default();
    let mut h_hat = vec![vec![Vec::new(); cfg.n_rx]; cfg.n_tx];
    for tx in 0..cfg.n_tx {
        for rx in 0..cfg.n_rx {
            let estimate = match estimator {
                Estimator::PerfectCsi => h_true[tx][rx].clone(),
                _ => {
                    let mut parts: Vec<ChannelEstimate> = Vec::with_capacity(2);
                    for (i, &sym) in layout.pilot_symbol_indices.iter().enumerate() {
                        let lattice = &ctx.lattices[ctx.lattice_of[tx][i]];
                        let obs = PilotObservation {
                            y_p: lattice.pilot_idx.iter().map(|&k| y_grid[rx][sym][k]).collect(),
                            x_p: lattice.pilot_idx.iter().map(|&k| grids[tx].cell(sym, k)).collect(),
                            pilot_idx: lattice.pilot_idx.clone(),
                        };
                        let part = match estimator {
                            Estimator::Ls => {
                                let h_p = ls_estimate(&obs)?;
                                let h_full =
                                    ls_interpolate(&h_p, &lattice.pilot_idx, &ctx.all_idx)?;
                                ChannelEstimate::from_full(
                                    h_full,
                                    lattice.pilot_idx.clone(),
                                    EstimationMethod::Ls,
                                )
                            }
                            Estimator::LmmseSimplified => {
                                let h_full = lattice.filter.apply(&ls_estimate(&obs)?)?;
                                ChannelEstimate::from_full(
                                    h_full,
                                    lattice.pilot_idx.clone(),
                                    EstimationMethod::LmmseSimplified,
                                )
                            }
                            Estimator::LmmseFull => {
                                let params = EstimatorParams {
                                    beta: cfg.modulation.beta(),
                                    snr_linear: ctx.snr_linear,
                                    noise_var: ctx.noise.variance,
                                    correlation: &lattice.correlation,
                                };
                                ChannelEstimate::from_full(
                                    lmmse_full(&obs, &params)?,
                                    lattice.pilot_idx.clone(),
                                    EstimationMethod::LmmseFull,
                                )
                            }
                            Estimator::PerfectCsi => unreachable!("handled above"),
                        };
                        parts.push(part);
                    }
                    let mut combined = parts.pop().expect("at least one pilot symbol");
                    for part in parts.iter().rev() {
                        combined = combine_slot_estimates(part, &combined)?;
                    }
                    combined.h_full
                }
            };
            acc.accumulate(&estimate, &h_true[tx][rx], &[], &[])?;
            h_hat[tx][rx] = estimate;
        }
    }

    // Zero-forcing detection on the data cells; pilot and null cells carry
    // no data on any port and are skipped.
    let mut rx_bits: Vec<Vec<bool>> = (0..cfg.n_tx)
        .map(|p| Vec::with_capacity(tx_bits[p].len()))
        .collect();
    let mut y_cell = vec![Complex64::new(0.0, 0.0); cfg.n_rx];
    let mut h_cell = vec![Complex64::new(0.0, 0.0); cfg.n_rx * cfg.n_tx];
    let erased = vec![Complex64::new(0.0, 0.0); cfg.n_tx];
    for s in 0..symbols {
        for k in 0..n_used {
            if grids[0].role(s, k) != CellRole::Data {
                continue;
            }
            for rx in 0..cfg.n_rx {
                y_cell[rx] = y_grid[rx][s][k];
                for tx in 0..cfg.n_tx {
                    h_cell[rx * cfg.n_tx + tx] = h_hat[tx][rx][k];
                }
            }
            let detected = if cfg.n_tx == 1 && cfg.n_rx == 1 {
                zf_equalize_siso(y_cell[0], h_cell[0]).map(|v| vec![v])
            } else {
                zf_equalize_mimo(&y_cell, &h_cell, cfg.n_tx)?
            };
            let symbols_hat = detected.as_ref().unwrap_or(&erased);
            for (port, &v) in symbols_hat.iter().enumerate() {
                rx_bits[port].extend(demap_symbols(&[v], cfg.modulation));
            }
        }
    }
    for port in 0..cfg.n_tx {
        let det = DetectionResult::new(std::mem::take(&mut rx_bits[port]), &tx_bits[port], bps)?;
        acc.accumulate(&[], &[], &tx_bits[port], &det.bits)?;
    }

    Ok(acc)
}

/// Runs the whole sweep. Rows come back sorted by (channel length, estimator,
/// SNR); for a fixed (SNR, L) point all estimators see identical channel,
/// noise, and data draws.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let started = Instant::now();
    let slots = spec.frames * SLOTS_PER_FRAME;
    let mut rows = Vec::new();
    for &channel_len in &spec.channel_lengths {
        for &snr_db in &spec.snr_grid_db {
            let mut cfg = spec.base.clone();
            cfg.channel_len = channel_len;
            cfg.snr_db = snr_db;
            cfg.frames = spec.frames;
            cfg.seed = spec.seed;
            let ctx = TrialContext::new(&cfg, spec.cp_mode)?;
            for &estimator in &spec.estimators {
                let partials: Vec<Result<MetricAccumulator>> = (0..slots)
                    .into_par_iter()
                    .map(|gs| {
                        let seed = derive_slot_seed(
                            spec.seed,
                            gs / SLOTS_PER_FRAME,
                            gs % SLOTS_PER_FRAME,
                        );
                        run_trial_with(&ctx, estimator, seed)
                    })
                    .collect();
                // Merge in slot order: float accumulation order is fixed.
                let mut total = MetricAccumulator::default();
                for partial in partials {
                    total.merge(&partial?);
                }
                rows.push(SweepRow {
                    snr_db,
                    channel_len,
                    estimator,
                    mse: total.mse(),
                    ber: total.ber(),
                    bits_total: total.bits_total,
                    trials: slots as u64,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.channel_len
            .cmp(&b.channel_len)
            .then(a.estimator.cmp(&b.estimator))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    Ok(SweepResult {
        rows,
        runtime_s: started.elapsed().as_secs_f64(),
        spec_echo: spec.clone(),
    })
}

pub const CSV_HEADER: &str = "snr_db,channel_len,estimator,mse,ber,bits_total,trials";

/// The CSV text for a sweep result: header plus one row per sweep point,
/// seven significant digits on the floating-point columns. A byte-identical
/// function of the rows.
pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{:.6e},{:.6e},{},{}\n",
            row.snr_db,
            row.channel_len,
            row.estimator,
            row.mse,
            row.ber,
            row.bits_total,
            row.trials
        ));
    }
    out
}

/// Writes the sweep CSV to a file.
pub fn write_csv(result: &SweepResult, path: &std::path::Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(render_csv(result).as_bytes()).map_err(io_err)?;
    Ok(())
}
