//! Bit-vector helpers shared across the pipeline.
//!
//! Convention: a bit vector is `Vec<bool>` with index 0 the most significant
//! position, so the string form reads left to right ("101" = `[1,0,1]`) and
//! counting order equals lexicographic order on vectors.

/// Parse a "0"/"1" string into a bit vector. Any other character is rejected.
pub fn parse_bits(s: &str) -> Result<Vec<bool>, char> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(other),
        })
        .collect()
}

/// Render a bit vector as a "0"/"1" string, index 0 first.
pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// The `index`-th bit vector of width `n` in lexicographic order
/// (index 0 ↦ all zeros, index 2^n − 1 ↦ all ones).
pub fn index_to_bits(n: usize, index: u64) -> Vec<bool> {
    (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect()
}

/// Inverse of [`index_to_bits`].
pub fn bits_to_index(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_bits("101").unwrap(), vec![true, false, true]);
        assert_eq!(format_bits(&[true, false, true]), "101");
        assert_eq!(parse_bits("10x"), Err('x'));
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..16 {
            let bits = index_to_bits(4, idx);
            assert_eq!(bits_to_index(&bits), idx);
        }
        assert_eq!(index_to_bits(3, 5), vec![true, false, true]);
    }
}
