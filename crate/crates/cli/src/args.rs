//! Argument parsing and conversion to a sweep description.

use anyhow::{bail, Context, Result};
use clap::Parser;

use ltesim::grid::{table1_config, CpMode};
use ltesim::ofdm::Modulation;
use ltesim::sim::{Estimator, SweepSpec};

/// Link-level OFDM channel-estimation sweep: LS and LMMSE estimators over
/// a grid of SNRs and channel lengths, with BER and estimate-MSE per point.
#[derive(Debug, Parser)]
#[command(name = "ltesim", version, about)]
pub struct Args {
    /// System bandwidth in MHz (1.25, 2.5, 5, 10, 15 or 20).
    #[arg(long, default_value_t = 5.0)]
    pub bandwidth_mhz: f64,

    /// Occupied subcarriers; defaults to 300 at 5 MHz, else the bandwidth
    /// preset value.
    #[arg(long)]
    pub n_used: Option<usize>,

    /// Cyclic prefix length in samples; defaults to n_fft/32.
    #[arg(long)]
    pub cp_len: Option<usize>,

    /// Pilot pattern: normal (7 symbols/slot) or extended (6).
    #[arg(long, default_value = "normal")]
    pub cp_mode: String,

    /// Data modulation: qpsk or 16qam.
    #[arg(long, default_value = "qpsk")]
    pub modulation: String,

    /// Channel lengths in taps, comma separated.
    #[arg(long, default_value = "6,20,40")]
    pub channel_len: String,

    /// SNR grid in dB: "start:step:stop" or a comma-separated list.
    #[arg(long, default_value = "0:5:30")]
    pub snr_db: String,

    /// Estimators, comma separated from ls, lmmse, lmmse_full, perfect.
    #[arg(long, default_value = "ls,lmmse")]
    pub estimators: String,

    /// Frames per sweep point (20 slots each).
    #[arg(long, default_value_t = 20)]
    pub frames: usize,

    /// Antenna setup: 1x1 or 2x2.
    #[arg(long, default_value = "2x2")]
    pub antennas: String,

    /// Base seed; identical invocations produce identical CSV bytes.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output CSV path.
    #[arg(long, default_value = "sweep.csv")]
    pub out: std::path::PathBuf,

    /// Also render an SVG plot of the sweep to this path.
    #[arg(long)]
    pub emit_plot: Option<std::path::PathBuf>,
}

/// "start:step:stop" (inclusive stop, positive step) or "a,b,c".
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let parse = |tok: &str| -> Result<f64> {
        tok.trim()
            .parse::<f64>()
            .with_context(|| format!("bad SNR value {tok:?}"))
    };
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            bail!("SNR range must be start:step:stop, got {text:?}");
        }
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) {
            bail!("SNR range step must be positive, got {step}");
        }
        if stop < start {
            bail!("SNR range stop {stop} is below start {start}");
        }
        let count = ((stop - start) / step).round() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        text.split(',').map(parse).collect::<Result<Vec<f64>>>()?
    };
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        bail!("SNR grid must be strictly increasing: {grid:?}");
    }
    Ok(grid)
}

pub fn parse_channel_lengths(text: &str) -> Result<Vec<usize>> {
    let lens = text
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .with_context(|| format!("bad channel length {tok:?}"))
        })
        .collect::<Result<Vec<usize>>>()?;
    if lens.is_empty() || lens.contains(&0) {
        bail!("channel lengths must be positive: {text:?}");
    }
    Ok(lens)
}

pub fn parse_estimators(text: &str) -> Result<Vec<Estimator>> {
    text.split(',')
        .map(|tok| tok.trim().parse::<Estimator>().map_err(anyhow::Error::from))
        .collect()
}

pub fn parse_antennas(text: &str) -> Result<(usize, usize)> {
    match text {
        "1x1" => Ok((1, 1)),
        "2x2" => Ok((2, 2)),
        other => bail!("antenna setup must be 1x1 or 2x2, got {other:?}"),
    }
}

impl Args {
    pub fn to_spec(&self) -> Result<SweepSpec> {
        let mut base = table1_config(self.bandwidth_mhz)?;
        if let Some(n_used) = self.n_used {
            base.n_used = n_used;
        } else if self.bandwidth_mhz == 5.0 {
            base.n_used = 300;
        }
        if let Some(cp) = self.cp_len {
            base.cp_len = cp;
        }
        base.modulation = self.modulation.parse::<Modulation>()?;
        let (n_tx, n_rx) = parse_antennas(&self.antennas)?;
        base.n_tx = n_tx;
        base.n_rx = n_rx;
        base.frames = self.frames;
        base.seed = self.seed;
        let spec = SweepSpec {
            base,
            cp_mode: self.cp_mode.parse::<CpMode>()?,
            snr_grid_db: parse_snr_grid(&self.snr_db)?,
            channel_lengths: parse_channel_lengths(&self.channel_len)?,
            estimators: parse_estimators(&self.estimators)?,
            frames: self.frames,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
