//! Wire format of the voice packet. Big-endian, fixed 18-byte overhead:
//!
//! ```text
//! offset  size  field
//! 0       1     version (high nibble) | flags (low nibble)
//! 1       1     ciphertext length
//! 2       2     sequence number
//! 4       12    nonce (session salt || seq zero-extended to 32 bits)
//! 16      n     ciphertext
//! 16+n    2     CRC-16/CCITT-FALSE over bytes [0, 16+n)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::crc::crc16;

/// Wire-format version spoken by this implementation (4-bit field).
pub const WIRE_VERSION: u8 = 1;

/// Flag bit: payload is encrypted.
pub const FLAG_ENCRYPTED: u8 = 0b0001;
/// Flag bit: packet carries voice (unset would mean control traffic).
pub const FLAG_VOICE: u8 = 0b0010;

/// Fixed serialization overhead: version/flags + length + seq + nonce + CRC.
pub const PACKET_OVERHEAD_BYTES: usize = 2 + 2 + 12 + 2;

/// One framed, encrypted voice payload as it travels on the air.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoicePacket {
    /// Wire-format version (4-bit).
    pub version: u8,
    /// Flag nibble; see [`FLAG_ENCRYPTED`] and [`FLAG_VOICE`].
    pub flags: u8,
    /// Sequence number, also the low 32 bits of the nonce.
    pub seq: u16,
    /// 96-bit counter-mode nonce.
    pub nonce: [u8; 12],
    /// Encrypted payload, same length as the plaintext frame.
    pub ciphertext: Vec<u8>,
    /// Frame check sequence over all preceding serialized bytes.
    pub crc16: u16,
}

/// Encodes a packet into its wire bytes.
///
/// Fails only when the ciphertext cannot fit the one-byte length field.
pub fn serialize(pkt: &VoicePacket) -> Result<Vec<u8>> {
    if pkt.ciphertext.len() > u8::MAX as usize {
        return Err(Error::PayloadTooLarge {
            len: pkt.ciphertext.len(),
            max: u8::MAX as usize,
        });
    }
    let mut out = Vec::with_capacity(PACKET_OVERHEAD_BYTES + pkt.ciphertext.len());
    out.push((pkt.version << 4) | (pkt.flags & 0x0F));
    out.push(pkt.ciphertext.len() as u8);
    out.extend_from_slice(&pkt.seq.to_be_bytes());
    out.extend_from_slice(&pkt.nonce);
    out.extend_from_slice(&pkt.ciphertext);
    out.extend_from_slice(&pkt.crc16.to_be_bytes());
    Ok(out)
}

/// Decodes wire bytes into a packet, checking structure only.
///
/// Version and length consistency are verified here; CRC verification is the
/// decrypt step's job, so corrupted-but-well-formed packets parse cleanly
/// and fail later with a CRC error rather than a framing error.
pub fn parse(bytes: &[u8]) -> Result<VoicePacket> {
    if bytes.len() < PACKET_OVERHEAD_BYTES {
        return Err(Error::LengthMalformed {
            reason: format!(
                "buffer of {} bytes is shorter than the {}-byte minimum",
                bytes.len(),
                PACKET_OVERHEAD_BYTES
            ),
        });
    }
    let version = bytes[0] >> 4;
    if version != WIRE_VERSION {
        return Err(Error::UnsupportedVersion { version });
    }
    let declared_len = bytes[1] as usize;
    let actual_len = bytes.len() - PACKET_OVERHEAD_BYTES;
    if declared_len != actual_len {
        return Err(Error::LengthMalformed {
            reason: format!("length field says {declared_len} ciphertext bytes, buffer carries {actual_len}"),
        });
    }
    let flags = bytes[0] & 0x0F;
    let seq = u16::from_be_bytes([bytes[2], bytes[3]]);
    let mut nonce = [0u8; 12];
    nonce.copy_from_slice(&bytes[4..16]);
    let ciphertext = bytes[16..16 + declared_len].to_vec();
    let crc = u16::from_be_bytes([bytes[16 + declared_len], bytes[17 + declared_len]]);
    Ok(VoicePacket {
        version,
        flags,
        seq,
        nonce,
        ciphertext,
        crc16: crc,
    })
}

/// CRC over a packet's serialized bytes excluding the trailing CRC field
/// itself; shared by the encrypt and decrypt paths.
pub(crate) fn header_and_ciphertext_crc(pkt: &VoicePacket) -> u16 {
    let mut covered = Vec::with_capacity(16 + pkt.ciphertext.len());
    covered.push((pkt.version << 4) | (pkt.flags & 0x0F));
    covered.push(pkt.ciphertext.len() as u8);
    covered.extend_from_slice(&pkt.seq.to_be_bytes());
    covered.extend_from_slice(&pkt.nonce);
    covered.extend_from_slice(&pkt.ciphertext);
    crc16(&covered)
}

// ==== Tests ====

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_packet(ciphertext: Vec<u8>) -> VoicePacket {
        let mut pkt = VoicePacket {
            version: WIRE_VERSION,
            flags: FLAG_ENCRYPTED | FLAG_VOICE,
            seq: 0x0102,
            nonce: [9; 12],
            ciphertext,
            crc16: 0,
        };
        pkt.crc16 = header_and_ciphertext_crc(&pkt);
        pkt
    }

    #[test]
    fn empty_ciphertext_serializes_to_eighteen_bytes() {
        let bytes = serialize(&sample_packet(Vec::new())).unwrap();
        assert_eq!(bytes.len(), 18);
    }

    #[test]
    fn layout_is_big_endian_and_positional() {
        let pkt = sample_packet(vec![0xAA, 0xBB]);
        let bytes = serialize(&pkt).unwrap();
        assert_eq!(bytes[0], (WIRE_VERSION << 4) | 0b0011);
        assert_eq!(bytes[1], 2, "length byte");
        assert_eq!(&bytes[2..4], &[0x01, 0x02], "seq big-endian");
        assert_eq!(&bytes[4..16], &[9u8; 12], "nonce");
        assert_eq!(&bytes[16..18], &[0xAA, 0xBB]);
        assert_eq!(
            u16::from_be_bytes([bytes[18], bytes[19]]),
            pkt.crc16,
            "trailing crc big-endian"
        );
    }

    #[test]
    fn parse_round_trips_serialize() {
        for len in [0usize, 1, 12, 255] {
            let pkt = sample_packet((0..len).map(|i| i as u8).collect());
            let reparsed = parse(&serialize(&pkt).unwrap()).unwrap();
            assert_eq!(reparsed, pkt, "round trip at ciphertext length {len}");
        }
    }

    #[test]
    fn parse_rejects_short_buffers() {
        for len in 0..18usize {
            let err = parse(&vec![0x10; len]).unwrap_err();
            assert!(
                matches!(err, Error::LengthMalformed { .. }),
                "length {len} must be a framing error, got {err:?}"
            );
        }
    }

    #[test]
    fn parse_rejects_wrong_version() {
        let mut bytes = serialize(&sample_packet(Vec::new())).unwrap();
        bytes[0] = (2 << 4) | (bytes[0] & 0x0F);
        assert!(matches!(
            parse(&bytes),
            Err(Error::UnsupportedVersion { version: 2 })
        ));
    }

    #[test]
    fn parse_rejects_inconsistent_length_field() {
        let mut bytes = serialize(&sample_packet(vec![1, 2, 3])).unwrap();
        bytes[1] = 5;
        assert!(matches!(parse(&bytes), Err(Error::LengthMalformed { .. })));
        // Truncating the buffer breaks the declared/actual agreement too.
        let full = serialize(&sample_packet(vec![1, 2, 3, 4])).unwrap();
        assert!(matches!(
            parse(&full[..full.len() - 2]),
            Err(Error::LengthMalformed { .. })
        ));
    }

    #[test]
    fn serialize_rejects_oversized_ciphertext() {
        let mut pkt = sample_packet(Vec::new());
        pkt.ciphertext = vec![0; 256];
        assert!(matches!(
            serialize(&pkt),
            Err(Error::PayloadTooLarge { len: 256, max: 255 })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_over_randomized_packets(
            flags in 0u8..16,
            seq in any::<u16>(),
            nonce in any::<[u8; 12]>(),
            ciphertext in proptest::collection::vec(any::<u8>(), 0..=255),
        ) {
            let mut pkt = VoicePacket {
                version: WIRE_VERSION,
                flags,
                seq,
                nonce,
                ciphertext,
                crc16: 0,
            };
            pkt.crc16 = header_and_ciphertext_crc(&pkt);
            let bytes = serialize(&pkt).unwrap();
            prop_assert_eq!(bytes.len(), pkt.ciphertext.len() + PACKET_OVERHEAD_BYTES);
            prop_assert_eq!(parse(&bytes).unwrap(), pkt);
        }
    }
}
