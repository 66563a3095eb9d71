//! LTE downlink time-frequency grid: slot structure, standard bandwidth
//! presets, and cell-specific reference-signal (pilot) placement.
//!
//! One radio frame is 10 ms: 10 subframes of two slots each. A slot carries 7
//! OFDM symbols with the normal cyclic prefix or 6 with the extended one, and
//! a physical resource block spans 12 subcarriers, so a PRB holds 84 or 72
//! resource elements. Pilots sit in two symbols per slot on every sixth
//! subcarrier; the second pilot symbol is staggered by three subcarriers and
//! antenna port 1 is offset by three subcarriers from port 0. Each port is
//! silent (exact zeros) on the other port's pilot positions.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ofdm::{map_bits, Modulation};

pub const SUBCARRIER_SPACING_HZ: f64 = 15_000.0;
pub const SUBCARRIERS_PER_PRB: usize = 12;
pub const SLOTS_PER_FRAME: usize = 20;

/// Cyclic-prefix flavor; selects the slot format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpMode {
    Normal,
    Extended,
}

impl std::str::FromStr for CpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(CpMode::Normal),
            "extended" => Ok(CpMode::Extended),
            other => Err(Error::Config(format!(
                "unknown cp mode {other:?}, expected normal or extended"
            ))),
        }
    }
}

/// Complete parameterization of one simulated link.
#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub n_fft: usize,
    /// Occupied subcarriers, mapped contiguously around DC.
    pub n_used: usize,
    /// Cyclic-prefix length in samples.
    pub cp_len: usize,
    pub subcarrier_spacing_hz: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub modulation: Modulation,
    /// Number of channel taps.
    pub channel_len: usize,
    /// Per-subcarrier SNR in dB; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Frames per Monte Carlo run (20 slots each).
    pub frames: usize,
    pub seed: u64,
}

impl LinkConfig {
    pub fn sampling_frequency_hz(&self) -> f64 {
        self.n_fft as f64 * self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.n_used == 0 {
            return Err(Error::Config("n_fft and n_used must be positive".into()));
        }
        if self.n_used > self.n_fft {
            return Err(Error::Config(format!(
                "n_used {} exceeds n_fft {}",
                self.n_used, self.n_fft
            )));
        }
        if self.cp_len > self.n_fft {
            return Err(Error::Config(format!(
                "cp_len {} exceeds n_fft {}",
                self.cp_len, self.n_fft
            )));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::Config("subcarrier spacing must be positive".into()));
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if self.n_rx < self.n_tx {
            return Err(Error::Config(format!(
                "zero-forcing detection needs n_rx >= n_tx, got {}x{}",
                self.n_tx, self.n_rx
            )));
        }
        if self.channel_len == 0 {
            return Err(Error::Config("channel_len must be at least 1".into()));
        }
        if self.channel_len > self.n_fft {
            return Err(Error::Config(format!(
                "channel_len {} exceeds n_fft {}",
                self.channel_len, self.n_fft
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("snr_db must not be NaN".into()));
        }
        if self.frames == 0 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for LinkConfig {
    /// The 5 MHz reference profile used throughout the integration tests:
    /// 512-point FFT, 300 occupied subcarriers, 16-sample CP, QPSK over a
    /// 2x2 link with a 6-tap channel.
    fn default() -> Self {
        LinkConfig {
            n_fft: 512,
            n_used: 300,
            cp_len: 16,
            subcarrier_spacing_hz: SUBCARRIER_SPACING_HZ,
            n_tx: 2,
            n_rx: 2,
            modulation: Modulation::Qpsk,
            channel_len: 6,
            snr_db: 10.0,
            frames: 20,
            seed: 1,
        }
    }
}

/// Standard LTE bandwidth presets: FFT size and occupied-subcarrier count per
/// channel bandwidth. The remaining fields take the defaults of
/// [`LinkConfig::default`], with `cp_len` scaled as `n_fft / 32`.
pub fn table1_config(bandwidth_mhz: f64) -> Result<LinkConfig> {
    let (n_fft, n_used) = if bandwidth_mhz == 1.25 {
        (128, 76)
    } else if bandwidth_mhz == 2.5 {
        (256, 151)
    } else if bandwidth_mhz == 5.0 {
        (512, 301)
    } else if bandwidth_mhz == 10.0 {
        (1024, 601)
    } else if bandwidth_mhz == 15.0 {
        (1536, 901)
    } else if bandwidth_mhz == 20.0 {
        (2048, 1201)
    } else {
        return Err(Error::Config(format!(
            "unsupported bandwidth {bandwidth_mhz} MHz, valid values: 1.25, 2.5, 5, 10, 15, 20"
        )));
    };
    Ok(LinkConfig {
        n_fft,
        n_used,
        cp_len: n_fft / 32,
        ..LinkConfig::default()
    })
}

/// Pilot pattern and slot format for one cyclic-prefix mode.
#[derive(Debug, Clone)]
pub struct GridLayout {
    pub symbols_per_slot: usize,
    /// OFDM symbols carrying pilots, exactly two per slot.
    pub pilot_symbol_indices: Vec<usize>,
    pub pilot_subcarrier_stride: usize,
    /// First-pilot-symbol subcarrier offset per antenna port.
    pub pilot_subcarrier_offset_per_port: Vec<usize>,
    /// Positions each port must leave empty: the other ports' pilots.
    pub null_positions_per_port: Vec<BTreeSet<(usize, usize)>>,
    pub n_used: usize,
}

impl GridLayout {
    pub fn resource_elements_per_prb(&self) -> usize {
        SUBCARRIERS_PER_PRB * self.symbols_per_slot
    }

    /// Subcarrier offset of `port`'s pilots in its `i`-th pilot symbol; the
    /// second pilot symbol is staggered by half the stride.
    fn pilot_shift(&self, port_offset: usize, i: usize) -> usize {
        let stride = self.pilot_subcarrier_stride;
        (port_offset + (stride / 2) * i) % stride
    }
}

/// Builds the slot layout for a configuration. Port 0 pilots start at
/// subcarrier offset 0, port 1 at offset 3; the stride-6 pattern only has room
/// for two disjoint ports.
pub fn build_layout(cfg: &LinkConfig, cp_mode: CpMode) -> Result<GridLayout> {
    cfg.validate()?;
    if cfg.n_tx > 2 {
        return Err(Error::Config(format!(
            "pilot pattern supports at most 2 antenna ports, got {}",
            cfg.n_tx
        )));
    }
    let (symbols_per_slot, pilot_symbol_indices) = match cp_mode {
        CpMode::Normal => (7, vec![0, 4]),
        CpMode::Extended => (6, vec![0, 3]),
    };
    let mut layout = GridLayout {
        symbols_per_slot,
        pilot_symbol_indices,
        pilot_subcarrier_stride: 6,
        pilot_subcarrier_offset_per_port: (0..cfg.n_tx).map(|p| 3 * p).collect(),
        null_positions_per_port: vec![BTreeSet::new(); cfg.n_tx],
        n_used: cfg.n_used,
    };
    for port in 0..cfg.n_tx {
        let positions = pilot_indices(&layout, port, cfg.n_used)?;
        for other in 0..cfg.n_tx {
            if other != port {
                layout.null_positions_per_port[other].extend(positions.iter().copied());
            }
        }
    }
    Ok(layout)
}

/// Pilot resource elements of one antenna port, sorted by (symbol,
/// subcarrier), without duplicates.
pub fn pilot_indices(
    layout: &GridLayout,
    port: usize,
    n_used: usize,
) -> Result<Vec<(usize, usize)>> {
    let offset = *layout
        .pilot_subcarrier_offset_per_port
        .get(port)
        .ok_or_else(|| Error::Usage(format!("antenna port {port} out of range")))?;
    let stride = layout.pilot_subcarrier_stride;
    let mut positions = Vec::new();
    for (i, &sym) in layout.pilot_symbol_indices.iter().enumerate() {
        let mut k = layout.pilot_shift(offset, i);
        while k < n_used {
            positions.push((sym, k));
            k += stride;
        }
    }
    positions.sort_unstable();
    positions.dedup();
    Ok(positions)
}

/// Role of one resource element from the point of view of a single port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    Data,
    Pilot,
    Null,
}

/// One port's transmit grid for one slot: `symbols_per_slot` rows of `n_used`
/// complex cells, stored row-major.
#[derive(Debug, Clone)]
pub struct ResourceGrid {
    pub slot_index: usize,
    n_used: usize,
    symbols: usize,
    cells: Vec<Complex64>,
    roles: Vec<CellRole>,
}

impl ResourceGrid {
    pub fn n_used(&self) -> usize {
        self.n_used
    }

    pub fn symbols_per_slot(&self) -> usize {
        self.symbols
    }

    pub fn cell(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.cells[symbol * self.n_used + subcarrier]
    }

    pub fn role(&self, symbol: usize, subcarrier: usize) -> CellRole {
        self.roles[symbol * self.n_used + subcarrier]
    }

    /// All cells of one OFDM symbol, in subcarrier order.
    pub fn symbol(&self, symbol: usize) -> &[Complex64] {
        &self.cells[symbol * self.n_used..(symbol + 1) * self.n_used]
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn with_slot_index(mut self, slot_index: usize) -> Self {
        self.slot_index = slot_index;
        self
    }
}

/// Assembles one port's slot grid from its data symbols and pilot sequence.
/// Data fills the Data cells in (symbol, subcarrier) order; pilots fill the
/// port's pilot positions in the same order. Pilots must be unit-modulus and
/// both inputs must match the layout's cell counts exactly.
pub fn fill_grid(
    layout: &GridLayout,
    port: usize,
    data_symbols: &[Complex64],
    pilot_seq: &[Complex64],
) -> Result<ResourceGrid> {
    let n_used = layout.n_used;
    let total = layout.symbols_per_slot * n_used;
    let pilots = pilot_indices(layout, port, n_used)?;
    let nulls = layout
        .null_positions_per_port
        .get(port)
        .ok_or_else(|| Error::Usage(format!("antenna port {port} out of range")))?;

    let mut roles = vec![CellRole::Data; total];
    for &(s, k) in nulls {
        roles[s * n_used + k] = CellRole::Null;
    }
    for &(s, k) in &pilots {
        roles[s * n_used + k] = CellRole::Pilot;
    }

    let n_data = total - pilots.len() - nulls.len();
    if data_symbols.len() != n_data {
        return Err(Error::Sizing(format!(
            "layout has {} data cells for port {port}, got {} data symbols",
            n_data,
            data_symbols.len()
        )));
    }
    if pilot_seq.len() != pilots.len() {
        return Err(Error::Sizing(format!(
            "layout has {} pilot cells for port {port}, got {} pilot symbols",
            pilots.len(),
            pilot_seq.len()
        )));
    }
    for (i, p) in pilot_seq.iter().enumerate() {
        if (p.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "pilot symbol {i} has modulus {}, pilots must be unit-modulus",
                p.norm()
            )));
        }
    }

    let mut cells = vec![Complex64::new(0.0, 0.0); total];
    let mut data_iter = data_symbols.iter();
    for (idx, role) in roles.iter().enumerate() {
        if *role == CellRole::Data {
            cells[idx] = *data_iter.next().expect("data count checked above");
        }
    }
    for (&(s, k), &p) in pilots.iter().zip(pilot_seq) {
        cells[s * n_used + k] = p;
    }

    Ok(ResourceGrid {
        slot_index: 0,
        n_used,
        symbols: layout.symbols_per_slot,
        cells,
        roles,
    })
}

/// Unit-modulus QPSK pilot sequence of the given length. The values are known
/// to the receiver by regenerating the same stream.
pub fn pilot_sequence<R: Rng>(count: usize, rng: &mut R) -> Vec<Complex64> {
    let bits: Vec<bool> = (0..2 * count).map(|_| rng.gen()).collect();
    map_bits(&bits, Modulation::Qpsk).expect("even bit count")
}
