//! Link-level simulator for the LTE downlink, focused on pilot-based channel
//! estimation. The crate models one slot at a time: resource-grid construction
//! with cell-specific reference signals, unitary OFDM modulation with cyclic
//! prefix, Rayleigh FIR multipath fading, AWGN, least-squares and LMMSE channel
//! estimation, and zero-forcing detection. A deterministic Monte Carlo driver
//! sweeps SNR, channel length, and estimator, and reports MSE/BER as CSV.

pub mod chanest;
pub mod channel;
pub mod error;
pub mod grid;
pub mod ofdm;
pub mod plot;
pub mod receiver;
pub mod sim;

pub use error::{Error, Result};
