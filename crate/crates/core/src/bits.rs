//! Bit-word helpers over F2.
//!
//! A word of length `len` is stored in the low `len` bits of a `u64` with
//! component 0 in the most significant position, so integer order on words
//! equals lexicographic order on bit sequences.

use crate::error::{Error, Result};

pub const MAX_WORD_LEN: usize = 64;

#[inline]
pub fn parity(x: u64) -> u64 {
    (x.count_ones() & 1) as u64
}

#[inline]
pub fn weight(x: u64) -> u32 {
    x.count_ones()
}

#[inline]
pub fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Component `i` of a length-`len` word.
#[inline]
pub fn bit(word: u64, len: usize, i: usize) -> u64 {
    (word >> (len - 1 - i)) & 1
}

pub fn word_to_bits(word: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| bit(word, len, i) == 1).collect()
}

pub fn bits_to_word(bits: &[bool]) -> Result<u64> {
    if bits.len() > MAX_WORD_LEN {
        return Err(Error::TooLarge(format!("{} bits exceed a 64-bit word", bits.len())));
    }
    Ok(bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
}

/// Word components as 0/1 symbols, component 0 first.
pub fn word_to_symbols(word: u64, len: usize) -> Vec<usize> {
    (0..len).map(|i| bit(word, len, i) as usize).collect()
}

/// Packs bits MSB-first into bytes; the final byte is zero-padded on the right.
pub fn pack_msb_first(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (j, &b)| acc | ((b as u8) << (7 - j)))
        })
        .collect()
}

pub fn unpack_msb_first(bytes: &[u8], len: usize) -> Result<Vec<bool>> {
    if bytes.len() * 8 < len {
        return Err(Error::Spec(format!(
            "{} bytes cannot hold {} bits",
            bytes.len(),
            len
        )));
    }
    Ok((0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect())
}

pub fn bits_to_hex(bits: &[bool]) -> String {
    hex::encode(pack_msb_first(bits))
}

pub fn hex_to_bits(s: &str, len: usize) -> Result<Vec<bool>> {
    let bytes = hex::decode(s.trim_start_matches("0x"))
        .map_err(|e| Error::Spec(format!("bad hex {s:?}: {e}")))?;
    let bits = unpack_msb_first(&bytes, len)?;
    // padding bits must be zero so the encoding is canonical
    if bytes.len() != len.div_ceil(8) || pack_msb_first(&bits) != bytes {
        return Err(Error::Spec(format!(
            "hex {s:?} is not a canonical {len}-bit MSB-first encoding"
        )));
    }
    Ok(bits)
}

pub fn word_to_hex(word: u64, len: usize) -> String {
    bits_to_hex(&word_to_bits(word, len))
}

pub fn hex_to_word(s: &str, len: usize) -> Result<u64> {
    bits_to_word(&hex_to_bits(s, len)?)
}

/// Parses a 64-bit seed written as hex, with or without a `0x` prefix.
pub fn parse_seed_hex(s: &str) -> Result<u64> {
    let t = s.trim().trim_start_matches("0x");
    if t.is_empty() || t.len() > 16 {
        return Err(Error::Spec(format!("seed {s:?} is not a 64-bit hex value")));
    }
    u64::from_str_radix(t, 16).map_err(|e| Error::Spec(format!("seed {s:?}: {e}")))
}

pub fn seed_to_hex(seed: u64) -> String {
    format!("{seed:016x}")
}

/// Rank over F2 of a set of row words.
pub fn rank(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &row in rows {
        let reduced = basis.iter().fold(row, |r, &b| r.min(r ^ b));
        if reduced != 0 {
            basis.push(reduced);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Product of a row vector of `rows.len()` bits (MSB-first) with the matrix
/// whose rows are `rows`.
pub fn row_combination(coeffs: u64, rows: &[u64]) -> u64 {
    let k = rows.len();
    rows.iter()
        .enumerate()
        .filter(|&(i, _)| bit(coeffs, k, i) == 1)
        .fold(0, |acc, (_, &r)| acc ^ r)
}

/// Matrix-vector product: component `i` of the result is `<rows[i], x>`.
pub fn mat_vec(rows: &[u64], x: u64) -> u64 {
    rows.iter().fold(0, |acc, &r| (acc << 1) | parity(r & x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_products() {
        assert_eq!(rank(&[0b110, 0b011, 0b101]), 2);
        assert_eq!(rank(&[0b100, 0b010, 0b001]), 3);
        assert_eq!(rank(&[0, 0]), 0);
        assert_eq!(rank(&[0b1000110, 0b0100101, 0b0010011, 0b0001111]), 4);
        assert_eq!(row_combination(0b10, &[0b110, 0b011]), 0b110);
        assert_eq!(row_combination(0b11, &[0b110, 0b011]), 0b101);
        assert_eq!(mat_vec(&[0b110, 0b011], 0b100), 0b10);
    }

    #[test]
    fn msb_first_order_matches_lexicographic() {
        let w = bits_to_word(&[true, false, true]).unwrap();
        assert_eq!(w, 0b101);
        assert_eq!(bit(w, 3, 0), 1);
        assert_eq!(bit(w, 3, 1), 0);
        assert_eq!(word_to_symbols(0b110, 3), vec![1, 1, 0]);
    }

    #[test]
    fn hex_packing() {
        let bits = word_to_bits(0b1000110, 7);
        assert_eq!(bits_to_hex(&bits), "8c");
        assert_eq!(hex_to_word("8c", 7).unwrap(), 0b1000110);
        assert!(hex_to_word("8d", 7).is_err());
        assert!(hex_to_word("8c00", 7).is_err());
        assert_eq!(bits_to_hex(&[]), "");
        assert_eq!(hex_to_bits("", 0).unwrap(), Vec::<bool>::new());
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seed_hex("0xdeadbeef").unwrap(), 0xdead_beef);
        assert_eq!(seed_to_hex(1), "0000000000000001");
        assert!(parse_seed_hex("").is_err());
        assert!(parse_seed_hex("11112222333344445").is_err());
    }
}
