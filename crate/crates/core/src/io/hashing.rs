//! Signed feature hashing of categorical `(name, value)` tokens.
//!
//! Each token is hashed as the UTF-8 bytes of `name`, a single `0x1F` (unit
//! separator) byte, then `value`, using 64-bit FNV-1a followed by the
//! SplitMix64 finaliser. The bucket is the mixed hash modulo `width`; bit 63
//! of the mixed hash picks the sign (set = −1). Only byte-level integer
//! arithmetic is involved, so the output is identical on every platform.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Default output width for hashed property features.
pub const DEFAULT_HASH_WIDTH: usize = 50;

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes
        .into_iter()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of one token.
pub fn token_hash(name: &str, value: &str) -> u64 {
    let bytes = name
        .bytes()
        .chain(std::iter::once(0x1f))
        .chain(value.bytes());
    splitmix_finalize(fnv1a(bytes))
}

/// Bucket index and sign of one token.
pub fn token_slot(name: &str, value: &str, width: usize) -> (usize, f64) {
    let h = token_hash(name, value);
    let bucket = (h % width as u64) as usize;
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    (bucket, sign)
}

/// Sums the signed indicator of every token into a `width`-long vector.
///
/// # Panics
///
/// Panics if `width` is zero.
pub fn hash_features<N, V>(tokens: &[(N, V)], width: usize) -> Vec<f64>
where
    N: AsRef<str>,
    V: AsRef<str>,
{
    assert!(width >= 1, "hash width must be >= 1");
    let mut out = vec![0.0; width];
    for (name, value) in tokens {
        let (bucket, sign) = token_slot(name.as_ref(), value.as_ref(), width);
        out[bucket] += sign;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tokens_give_zero_vector() {
        let v = hash_features::<&str, &str>(&[], 8);
        assert_eq!(v, vec![0.0; 8]);
    }

    #[test]
    fn order_does_not_matter() {
        let a = [("color", "red"), ("size", "M"), ("fabric", "cotton")];
        let b = [("fabric", "cotton"), ("color", "red"), ("size", "M")];
        assert_eq!(hash_features(&a, 50), hash_features(&b, 50));
    }

    #[test]
    fn known_hash_values_are_stable() {
        // FNV-1a of the empty input is the offset basis
        assert_eq!(fnv1a(std::iter::empty()), FNV_OFFSET);
        // FNV-1a("a") from the reference tables
        assert_eq!(fnv1a(*b"a"), 0xaf63_dc4c_8601_ec8c);
        let h = token_hash("color", "red");
        assert_eq!(h, token_hash("color", "red"));
        assert_ne!(h, token_hash("colo", "rred"));
    }

    #[test]
    fn each_token_contributes_unit_mass() {
        let tokens: Vec<(String, String)> =
            (0..100).map(|i| ("p".to_string(), i.to_string())).collect();
        let v = hash_features(&tokens, 7);
        let mass: f64 = v.iter().map(|x| x.abs()).sum();
        assert!(mass <= 100.0);
        assert_eq!(mass as i64 % 2, 0); // parity of ±1 sums
    }
}
