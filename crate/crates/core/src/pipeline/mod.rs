//! The voice signal chain as pure data transformations: VOX gating of a
//! synthetic speech-activity envelope, a codec bitrate model, CRC-16 framing,
//! and AES-128-CTR packet encryption.
//!
//! Submodules are re-exported flat; callers address everything as
//! `pipeline::vox_gate`, `pipeline::crc16`, and so on.

mod codec;
mod crc;
mod crypto;
mod vox;
mod wire;

pub use codec::{decode_frame, encode_frame, AudioFrame, CodecProfile};
pub use crc::crc16;
pub use crypto::{
    aes128_encrypt_block, decrypt_packet, encrypt_packet, PacketSession, SessionKey,
};
pub use vox::{vox_gate, VoxConfig};
pub use wire::{
    parse, serialize, VoicePacket, FLAG_ENCRYPTED, FLAG_VOICE, PACKET_OVERHEAD_BYTES,
    WIRE_VERSION,
};

// ==== Tests ====
