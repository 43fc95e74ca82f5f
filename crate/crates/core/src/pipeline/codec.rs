//! Codec bitrate model: fixed-duration frames of deterministic pseudo-voice
//! bytes at a configured bitrate. Models the size/latency behaviour of a low
//! bitrate vocoder without implementing one; content is pseudo-random so that
//! corruption anywhere in the chain is detectable.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Codec and per-stage processing-delay settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecProfile {
    /// Compressed bitrate, bps.
    pub bitrate_bps: u32,
    /// Frame duration, ms.
    pub frame_ms: u32,
    /// Encoder processing delay charged per frame, ms.
    pub encode_delay_ms: f64,
    /// Decoder processing delay charged per frame, ms.
    pub decode_delay_ms: f64,
    /// Cipher processing delay charged per packet in each direction, ms.
    pub crypto_delay_ms: f64,
}

impl Default for CodecProfile {
    /// 2400 bps in 40 ms frames (12-byte payloads) with 25/15 ms codec
    /// delays and 2 ms per crypto pass.
    fn default() -> Self {
        CodecProfile {
            bitrate_bps: 2400,
            frame_ms: 40,
            encode_delay_ms: 25.0,
            decode_delay_ms: 15.0,
            crypto_delay_ms: 2.0,
        }
    }
}

impl CodecProfile {
    /// Checks positivity of rates, durations, and delays.
    pub fn validate(&self) -> Result<()> {
        if self.bitrate_bps == 0 {
            return Err(Error::InvalidParameter {
                field: "codec.bitrate_bps",
                reason: "must be > 0".into(),
            });
        }
        if self.frame_ms == 0 {
            return Err(Error::InvalidParameter {
                field: "codec.frame_ms",
                reason: "must be > 0".into(),
            });
        }
        for (field, v) in [
            ("codec.encode_delay_ms", self.encode_delay_ms),
            ("codec.decode_delay_ms", self.decode_delay_ms),
            ("codec.crypto_delay_ms", self.crypto_delay_ms),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Compressed frame size: `ceil(bitrate * duration / 8000)` bytes.
    pub fn frame_bytes(&self) -> usize {
        frame_bytes(self.bitrate_bps, self.frame_ms)
    }
}

fn frame_bytes(bitrate_bps: u32, duration_ms: u32) -> usize {
    let bits = bitrate_bps as u64 * duration_ms as u64;
    (bits.div_ceil(8000)) as usize
}

/// One compressed voice frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioFrame {
    /// Monotone frame counter, also the packet sequence number.
    pub seq: u16,
    /// Capture duration, ms.
    pub duration_ms: u32,
    /// Peak of the amplitude envelope over the capture window, in [0, 1].
    pub pcm_energy: f64,
    /// Compressed payload bytes.
    pub payload: Vec<u8>,
}

impl AudioFrame {
    /// Payload size in bits, always a whole number of bytes.
    pub fn payload_bits(&self) -> u32 {
        self.payload.len() as u32 * 8
    }
}

/// Compresses one envelope window into a frame of
/// `ceil(bitrate * duration / 8000)` deterministic pseudo-voice bytes.
///
/// Content is seeded by `(seq, window hash)`, so identical captures encode
/// identically and any byte corruption downstream changes the decode result.
pub fn encode_frame(seq: u16, window: &[f64], bitrate_bps: u32, duration_ms: u32) -> AudioFrame {
    let pcm_energy = window.iter().copied().fold(0.0f64, f64::max).clamp(0.0, 1.0);
    let mut payload = vec![0u8; frame_bytes(bitrate_bps, duration_ms)];
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(seq, window));
    rng.fill_bytes(&mut payload);
    AudioFrame {
        seq,
        duration_ms,
        pcm_energy,
        payload,
    }
}

/// Reconstructs the frame a receiver hands to playback. The wire carries no
/// envelope, so `pcm_energy` comes back as 0.0; `duration_ms` comes from the
/// receiver's codec profile.
pub fn decode_frame(seq: u16, payload: Vec<u8>, codec: &CodecProfile) -> AudioFrame {
    AudioFrame {
        seq,
        duration_ms: codec.frame_ms,
        pcm_energy: 0.0,
        payload,
    }
}

/// FNV-1a over the window samples' bit patterns, mixed with the sequence
/// number.
fn frame_seed(seq: u16, window: &[f64]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    for sample in window {
        for byte in sample.to_bits().to_be_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h ^ seq as u64
}

// ==== Tests ====

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_sizes_match_exact_arithmetic() {
        assert_eq!(frame_bytes(2400, 40), 12);
        assert_eq!(frame_bytes(2400, 20), 6);
        assert_eq!(frame_bytes(3200, 25), 10);
        // Non-multiples round up to the next whole byte.
        assert_eq!(frame_bytes(2400, 41), 13);
        assert_eq!(frame_bytes(1, 1), 1);
    }

    #[test]
    fn payload_bits_is_rounded_up_byte_count() {
        let f = encode_frame(0, &[0.4], 2400, 40);
        assert_eq!(f.payload.len(), 12);
        assert_eq!(f.payload_bits(), 96);
        assert_eq!(
            f.payload_bits(),
            ((2400u32 * 40).div_ceil(8000) * 8),
            "payload_bits must equal bitrate*duration/1000 rounded up to bytes"
        );
    }

    #[test]
    fn encoding_is_deterministic_in_seq_and_window() {
        let a = encode_frame(3, &[0.2, 0.9], 2400, 40);
        let b = encode_frame(3, &[0.2, 0.9], 2400, 40);
        assert_eq!(a, b);
        let different_seq = encode_frame(4, &[0.2, 0.9], 2400, 40);
        assert_ne!(a.payload, different_seq.payload);
        let different_window = encode_frame(3, &[0.2, 0.8], 2400, 40);
        assert_ne!(a.payload, different_window.payload);
    }

    #[test]
    fn pcm_energy_is_window_peak_clamped() {
        assert_eq!(encode_frame(0, &[0.1, 0.7, 0.3], 2400, 40).pcm_energy, 0.7);
        assert_eq!(encode_frame(0, &[], 2400, 40).pcm_energy, 0.0);
        assert_eq!(encode_frame(0, &[1.8], 2400, 40).pcm_energy, 1.0);
    }

    #[test]
    fn default_profile_is_valid_and_twelve_bytes() {
        let codec = CodecProfile::default();
        codec.validate().unwrap();
        assert_eq!(codec.frame_bytes(), 12);
    }

    #[test]
    fn validate_rejects_zero_rates_and_negative_delays() {
        let base = CodecProfile::default();
        let zero_rate = CodecProfile {
            bitrate_bps: 0,
            ..base.clone()
        };
        assert!(zero_rate.validate().is_err());
        let zero_frame = CodecProfile {
            frame_ms: 0,
            ..base.clone()
        };
        assert!(zero_frame.validate().is_err());
        let negative_delay = CodecProfile {
            encode_delay_ms: -1.0,
            ..base
        };
        assert!(negative_delay.validate().is_err());
    }
}
