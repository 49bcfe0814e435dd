//! LoRa time-on-air arithmetic.
//!
//! All durations are in seconds. The payload symbol count is computed on
//! exact integers so the ceiling never suffers from a floating quotient that
//! lands a hair above an integer.

use crate::error::{Error, Result};

pub const MIN_SF: u8 = 6;
pub const MAX_SF: u8 = 12;

/// Symbols in the fixed part of the preamble (8 programmable + 4.25 sync).
const PREAMBLE_BASE_SYMBOLS: f64 = 4.25;

/// Mandatory symbols at the start of the payload section.
const PAYLOAD_BASE_SYMBOLS: u32 = 8;

/// Which part of the packet the gateway needs to lock on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockWindow {
    /// The preamble only.
    Preamble,
    /// The preamble plus the 8 mandatory payload-start symbols.
    PreambleAndHeader,
}

/// Lock phase used throughout the model.
pub const LOCK_WINDOW: LockWindow = LockWindow::Preamble;

/// LoRa PHY parameters governing airtime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    /// Programmable preamble symbols on top of the 4.25 fixed ones.
    pub n_preamble_extra: u32,
    pub payload_bytes: u32,
    /// 0 = explicit header present, 1 = implicit (no header).
    pub header_flag: u8,
    /// Low data rate optimization (0 or 1).
    pub low_rate_opt: u8,
    /// Coding-rate code: 1 ↔ 4/5, 2 ↔ 4/6, 3 ↔ 4/7, 4 ↔ 4/8.
    pub cr_code: u8,
}

impl Default for RadioConfig {
    /// 125 kHz, 6 extra preamble symbols, 20 byte payload, explicit header,
    /// no low-rate optimization, CR 4/5.
    fn default() -> Self {
        RadioConfig {
            bandwidth_hz: 125_000.0,
            n_preamble_extra: 6,
            payload_bytes: 20,
            header_flag: 0,
            low_rate_opt: 0,
            cr_code: 1,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::invalid(
                "bandwidth_hz",
                format!("must be positive, got {}", self.bandwidth_hz),
            ));
        }
        if !(1..=4).contains(&self.cr_code) {
            return Err(Error::invalid(
                "cr_code",
                format!("must be in 1..=4, got {}", self.cr_code),
            ));
        }
        if self.header_flag > 1 {
            return Err(Error::invalid("header_flag", "must be 0 or 1"));
        }
        if self.low_rate_opt > 1 {
            return Err(Error::invalid("low_rate_opt", "must be 0 or 1"));
        }
        Ok(())
    }
}

/// Airtime breakdown of one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirTime {
    pub symbol_s: f64,
    pub preamble_s: f64,
    pub payload_s: f64,
    pub total_s: f64,
    pub lock_window_s: f64,
    /// Span of interferer start times that destroy the packet: total + lock.
    pub vulnerability_s: f64,
    pub payload_symbols: u32,
}

fn check_sf(sf: u8) -> Result<()> {
    if !(MIN_SF..=MAX_SF).contains(&sf) {
        return Err(Error::invalid(
            "sf",
            format!("must be in {MIN_SF}..={MAX_SF}, got {sf}"),
        ));
    }
    Ok(())
}

/// `2^sf / bandwidth_hz`.
pub fn symbol_time(sf: u8, bandwidth_hz: f64) -> Result<f64> {
    check_sf(sf)?;
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(Error::invalid(
            "bandwidth_hz",
            format!("must be positive, got {bandwidth_hz}"),
        ));
    }
    Ok(f64::from(1u32 << sf) / bandwidth_hz)
}

/// Number of payload symbols, including the 8 mandatory ones.
pub fn payload_symbols(sf: u8, radio: &RadioConfig) -> Result<u32> {
    check_sf(sf)?;
    radio.validate()?;
    let sf = i64::from(sf);
    let denom = 4 * (sf - 2 * i64::from(radio.low_rate_opt));
    if denom <= 0 {
        return Err(Error::invalid("low_rate_opt", "SF - 2*DE must be positive"));
    }
    let numer =
        8 * i64::from(radio.payload_bytes) - 4 * sf + 28 + 16 - 20 * i64::from(radio.header_flag);
    let blocks = ceil_div(numer, denom);
    let extra = (blocks * (i64::from(radio.cr_code) + 4)).max(0);
    Ok(PAYLOAD_BASE_SYMBOLS + extra as u32)
}

fn ceil_div(numer: i64, denom: i64) -> i64 {
    debug_assert!(denom > 0);
    let q = numer.div_euclid(denom);
    if numer.rem_euclid(denom) == 0 {
        q
    } else {
        q + 1
    }
}

pub fn packet_airtime(sf: u8, radio: &RadioConfig) -> Result<AirTime> {
    let symbol_s = symbol_time(sf, radio.bandwidth_hz)?;
    let payload_symbols = payload_symbols(sf, radio)?;
    // Symbol counts times chips per symbol are exact in binary, so dividing
    // once by the bandwidth gives correctly rounded durations.
    let chips = f64::from(1u32 << sf);
    let duration = |symbols: f64| symbols * chips / radio.bandwidth_hz;
    let preamble_sym = PREAMBLE_BASE_SYMBOLS + f64::from(radio.n_preamble_extra);
    let payload_sym = f64::from(payload_symbols);
    let lock_sym = match LOCK_WINDOW {
        LockWindow::Preamble => preamble_sym,
        LockWindow::PreambleAndHeader => preamble_sym + f64::from(PAYLOAD_BASE_SYMBOLS),
    };
    Ok(AirTime {
        symbol_s,
        preamble_s: duration(preamble_sym),
        payload_s: duration(payload_sym),
        total_s: duration(preamble_sym + payload_sym),
        lock_window_s: duration(lock_sym),
        vulnerability_s: duration(preamble_sym + payload_sym + lock_sym),
        payload_symbols,
    })
}

/// Length of the interval of interferer start times whose on-air span meets
/// the lock phase of a tagged packet, i.e. `B + Δ`.
pub fn vulnerability_window(sf: u8, radio: &RadioConfig) -> Result<f64> {
    Ok(packet_airtime(sf, radio)?.vulnerability_s)
}
