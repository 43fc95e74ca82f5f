//! CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF, no input or
//! output reflection, no final XOR. Table-driven, table built at compile
//! time.

const POLY: u16 = 0x1021;
const INIT: u16 = 0xFFFF;

const fn build_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ POLY
            } else {
                crc << 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static TABLE: [u16; 256] = build_table();

/// Frame check sequence over `data`.
pub fn crc16(data: &[u8]) -> u16 {
    let mut crc = INIT;
    for &byte in data {
        crc = (crc << 8) ^ TABLE[((crc >> 8) ^ byte as u16) as usize];
    }
    crc
}

// ==== Tests ====

#[cfg(test)]
mod tests {
    use super::*;

    /// Bit-at-a-time long division, independent of the table path. The
    /// frozen vectors below were produced by this construction in a separate
    /// language before the module was written.
    fn crc16_bitwise(data: &[u8]) -> u16 {
        let mut crc = INIT;
        for &byte in data {
            crc ^= (byte as u16) << 8;
            for _ in 0..8 {
                crc = if crc & 0x8000 != 0 {
                    (crc << 1) ^ POLY
                } else {
                    crc << 1
                };
            }
        }
        crc
    }

    #[test]
    fn frozen_vectors() {
        assert_eq!(crc16(b"123456789"), 0x29B1, "standard check value");
        assert_eq!(crc16(b""), 0xFFFF, "empty input leaves the init value");
        assert_eq!(crc16(b"A"), 0xB915);
        assert_eq!(crc16(&[0u8; 4]), 0x84C0);
        let ascending: Vec<u8> = (0..16).collect();
        assert_eq!(crc16(&ascending), 0x3B37);
    }

    #[test]
    fn table_path_matches_bitwise_oracle() {
        let mut data = Vec::new();
        for len in 0..128usize {
            data.push((len as u8).wrapping_mul(37).wrapping_add(11));
            assert_eq!(
                crc16(&data),
                crc16_bitwise(&data),
                "table and bitwise paths diverged at length {}",
                len + 1
            );
        }
    }

    #[test]
    fn detects_every_single_bit_flip_in_four_byte_inputs() {
        // Brute force over a spread of 4-byte inputs and all 32 flips each.
        for word in (0u32..=u32::MAX).step_by(65_537) {
            let base = word.to_be_bytes();
            let reference = crc16(&base);
            for bit in 0..32 {
                let mut corrupted = base;
                corrupted[bit / 8] ^= 1 << (bit % 8);
                assert_ne!(
                    crc16(&corrupted),
                    reference,
                    "undetected single-bit flip in {base:02x?} at bit {bit}"
                );
            }
        }
    }
}
