//! AES-128 packet encryption in counter mode.
//!
//! The block primitive comes from the `aes` crate; the stream layer here is
//! deliberately explicit: keystream block `i` is `AES-128(key, nonce || i)`
//! with the 96-bit nonce `session_salt (64-bit BE) || seq zero-extended to
//! 32-bit BE` and `i` a big-endian 32-bit block counter starting at 0.
//! Ciphertext length therefore equals plaintext length, which keeps airtime
//! accounting honest.
//!
//! Counter mode provides confidentiality only. Integrity rides on the
//! packet's CRC-16, which detects corruption but is not cryptographic: a
//! deliberate attacker can forge it. Swap in an AEAD before trusting this
//! framing against active adversaries.

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::codec::{decode_frame, AudioFrame, CodecProfile};
use crate::pipeline::wire::{
    header_and_ciphertext_crc, VoicePacket, FLAG_ENCRYPTED, FLAG_VOICE, WIRE_VERSION,
};

/// Pre-shared 128-bit key plus the per-session nonce salt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionKey {
    /// AES-128 key.
    pub key: [u8; 16],
    /// 64-bit salt forming the high half of every nonce in the session.
    pub session_salt: u64,
}

impl SessionKey {
    /// Parses key material from 32 hex characters.
    pub fn from_hex(hex_key: &str, session_salt: u64) -> Result<Self> {
        let cleaned = hex_key.trim();
        if cleaned.len() != 32 {
            return Err(Error::InvalidKey {
                reason: format!("need exactly 32 hex chars, got {}", cleaned.len()),
            });
        }
        let mut key = [0u8; 16];
        for (i, chunk) in cleaned.as_bytes().chunks(2).enumerate() {
            let s = std::str::from_utf8(chunk).map_err(|_| Error::InvalidKey {
                reason: "non-ASCII characters in key".into(),
            })?;
            key[i] = u8::from_str_radix(s, 16).map_err(|_| Error::InvalidKey {
                reason: format!("invalid hex pair {s:?}"),
            })?;
        }
        Ok(SessionKey { key, session_salt })
    }

    /// The nonce for a sequence number under this session's salt.
    pub fn nonce_for(&self, seq: u16) -> [u8; 12] {
        let mut nonce = [0u8; 12];
        nonce[..8].copy_from_slice(&self.session_salt.to_be_bytes());
        nonce[8..].copy_from_slice(&(seq as u32).to_be_bytes());
        nonce
    }
}

/// Raw AES-128 single-block encryption, exposed so known-answer tests can
/// pin the primitive independently of the stream construction.
pub fn aes128_encrypt_block(key: &[u8; 16], block: &[u8; 16]) -> [u8; 16] {
    let cipher = Aes128::new(GenericArray::from_slice(key));
    let mut buf = GenericArray::clone_from_slice(block);
    cipher.encrypt_block(&mut buf);
    buf.into()
}

/// XORs the counter-mode keystream for `nonce` into `data` in place.
/// Symmetric: applying it twice restores the input.
fn ctr_xor(key: &[u8; 16], nonce: &[u8; 12], data: &mut [u8]) {
    let cipher = Aes128::new(GenericArray::from_slice(key));
    let mut counter_block = [0u8; 16];
    counter_block[..12].copy_from_slice(nonce);
    for (block_index, chunk) in data.chunks_mut(16).enumerate() {
        counter_block[12..].copy_from_slice(&(block_index as u32).to_be_bytes());
        let mut keystream = GenericArray::clone_from_slice(&counter_block);
        cipher.encrypt_block(&mut keystream);
        for (byte, ks) in chunk.iter_mut().zip(keystream.iter()) {
            *byte ^= ks;
        }
    }
}

/// Encrypts one frame into a wire packet.
///
/// Nonce uniqueness is the caller's contract here: this function derives the
/// nonce from `frame.seq` and cannot see session history. Route traffic
/// through a [`PacketSession`] to get reuse detection.
pub fn encrypt_packet(frame: &AudioFrame, key: &SessionKey) -> Result<VoicePacket> {
    if frame.payload.len() > u8::MAX as usize {
        return Err(Error::PayloadTooLarge {
            len: frame.payload.len(),
            max: u8::MAX as usize,
        });
    }
    let nonce = key.nonce_for(frame.seq);
    let mut ciphertext = frame.payload.clone();
    ctr_xor(&key.key, &nonce, &mut ciphertext);
    let mut pkt = VoicePacket {
        version: WIRE_VERSION,
        flags: FLAG_ENCRYPTED | FLAG_VOICE,
        seq: frame.seq,
        nonce,
        ciphertext,
        crc16: 0,
    };
    pkt.crc16 = header_and_ciphertext_crc(&pkt);
    Ok(pkt)
}

/// Verifies a packet's CRC, then decrypts it back into an audio frame.
///
/// CRC runs first so corruption surfaces as [`Error::CrcMismatch`] before
/// any keystream work; the codec profile supplies the frame duration, which
/// the wire does not carry.
pub fn decrypt_packet(
    pkt: &VoicePacket,
    key: &SessionKey,
    codec: &CodecProfile,
) -> Result<AudioFrame> {
    let computed = header_and_ciphertext_crc(pkt);
    if computed != pkt.crc16 {
        return Err(Error::CrcMismatch {
            computed,
            stored: pkt.crc16,
        });
    }
    let mut payload = pkt.ciphertext.clone();
    ctr_xor(&key.key, &pkt.nonce, &mut payload);
    Ok(decode_frame(pkt.seq, payload, codec))
}

/// Single-writer sending session: owns the key and refuses to let a sequence
/// number be encrypted twice.
///
/// Sequence numbers must be fed in non-decreasing order of first use (the
/// natural order a frame source produces). Once all 2^16 values are
/// consumed, every further frame fails with [`Error::NonceReuse`] — the
/// session is exhausted and a new salt must be negotiated.
#[derive(Debug, Clone)]
pub struct PacketSession {
    key: SessionKey,
    /// Lowest sequence number not yet consumed; 2^16 means exhausted.
    next_seq: u32,
}

impl PacketSession {
    /// Opens a session at sequence number 0.
    pub fn new(key: SessionKey) -> Self {
        PacketSession { key, next_seq: 0 }
    }

    /// Key material this session encrypts under.
    pub fn key(&self) -> &SessionKey {
        &self.key
    }

    /// Number of sequence values consumed so far.
    pub fn consumed(&self) -> u32 {
        self.next_seq
    }

    /// Encrypts a frame, enforcing nonce uniqueness across the session.
    pub fn encrypt_frame(&mut self, frame: &AudioFrame) -> Result<VoicePacket> {
        if (frame.seq as u32) < self.next_seq {
            return Err(Error::NonceReuse { seq: frame.seq });
        }
        let pkt = encrypt_packet(frame, &self.key)?;
        self.next_seq = frame.seq as u32 + 1;
        Ok(pkt)
    }
}

// ==== Tests ====
