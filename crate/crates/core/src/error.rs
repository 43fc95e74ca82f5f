//! Crate-wide error type.

use thiserror::Error;

/// Unified error for every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric input is outside its mathematical or physical domain.
    #[error("invalid {field}: {reason}")]
    InvalidParameter {
        /// Name of the offending field, matching its config/flag spelling.
        field: &'static str,
        reason: String,
    },

    /// Spreading factor / bandwidth pair has no table entry.
    #[error("unsupported radio configuration: SF{spreading_factor} at {bandwidth_hz} Hz")]
    UnsupportedRadioConfig {
        spreading_factor: u8,
        bandwidth_hz: u32,
    },

    /// Payload cannot fit a single radio frame.
    #[error("payload of {len} bytes exceeds the {max}-byte single-frame limit")]
    PayloadTooLarge { len: usize, max: usize },

    /// No positive distance satisfies the requested link margin.
    #[error("link never closes: no positive distance meets the margin threshold")]
    LinkNeverCloses,

    /// A counter-mode nonce would repeat within the session.
    #[error("nonce reuse: seq {seq} was already consumed in this session")]
    NonceReuse { seq: u16 },

    /// Frame check sequence did not match the received bytes.
    #[error("crc mismatch: computed {computed:#06x}, packet carries {stored:#06x}")]
    CrcMismatch { computed: u16, stored: u16 },

    /// Structural framing error: buffer too short or length field inconsistent.
    #[error("length malformed: {reason}")]
    LengthMalformed { reason: String },

    /// Packet carries a wire-format version this implementation does not speak.
    #[error("unsupported packet version {version}")]
    UnsupportedVersion { version: u8 },

    /// Key material is not a valid 128-bit hex string.
    #[error("invalid session key: {reason}")]
    InvalidKey { reason: String },

    /// Scenario failed validation before execution started.
    #[error("invalid scenario: {reason}")]
    InvalidScenario { reason: String },

    /// An aggregate was requested over an empty data set.
    #[error("no data: {reason}")]
    NoData { reason: String },
}

/// Convenience alias used across all modules.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error describes bad configuration rather than a runtime
    /// failure; the CLI maps this distinction onto exit codes 2 and 1.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnsupportedRadioConfig { .. }
                | Error::InvalidScenario { .. }
                | Error::InvalidKey { .. }
        )
    }
}
