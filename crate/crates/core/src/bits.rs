//! Bitstrings stored as little-endian `u64` words: bit `j` of `x` is
//! `floor(x / 2^j) mod 2`, i.e. bit `j % 64` of word `j / 64`.

use crate::error::{Error, Result};

pub fn words_for(n_bits: usize) -> usize {
    n_bits.div_ceil(64).max(1)
}

#[inline]
pub fn bit(x: &[u64], j: usize) -> bool {
    x[j / 64] >> (j % 64) & 1 == 1
}

/// Number of set bits among bits `0..n`.
pub fn popcount_prefix(x: &[u64], n: usize) -> usize {
    let full = n / 64;
    let mut count: u32 = x[..full].iter().map(|w| w.count_ones()).sum();
    let rem = n % 64;
    if rem > 0 {
        count += (x[full] & ((1u64 << rem) - 1)).count_ones();
    }
    count as usize
}

/// Number of differing bits, one XOR + POPCNT per word.
#[inline]
pub fn hamming(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// True when no bit at position `>= n_bits` is set.
pub fn fits(x: &[u64], n_bits: usize) -> bool {
    let full = n_bits / 64;
    let rem = n_bits % 64;
    x.iter().enumerate().all(|(i, &w)| {
        if i < full {
            true
        } else if i == full && rem > 0 {
            w >> rem == 0
        } else {
            w == 0
        }
    })
}

/// Lowercase hexadecimal of the integer, without leading zeros.
pub fn to_hex(x: &[u64]) -> String {
    let mut s = String::new();
    for (i, w) in x.iter().enumerate().rev() {
        if s.is_empty() {
            if *w != 0 || i == 0 {
                s = format!("{w:x}");
            }
        } else {
            s.push_str(&format!("{w:016x}"));
        }
    }
    s
}

/// Parses hexadecimal into `words` little-endian words.
pub fn from_hex(s: &str, words: usize) -> Result<Vec<u64>> {
    let s = s.trim_start_matches("0x");
    if s.is_empty() {
        return Err(Error::Parse("empty hex string".into()));
    }
    let digits: Vec<u8> = s
        .bytes()
        .map(|c| {
            (c as char)
                .to_digit(16)
                .map(|d| d as u8)
                .ok_or_else(|| Error::Parse(format!("invalid hex `{s}`")))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0u64; words];
    for (pos, &d) in digits.iter().rev().enumerate() {
        let word = pos / 16;
        if word >= words {
            if d != 0 {
                return Err(Error::Parse(format!("hex `{s}` exceeds {words} words")));
            }
            continue;
        }
        out[word] |= (d as u64) << (4 * (pos % 16));
    }
    Ok(out)
}
