//! Stable seed derivation. FNV-1a is used instead of `DefaultHasher` so
//! derived seeds never depend on the standard library's hasher internals:
//! checkpoints, OOV embeddings, and dropout masks must reload bit-identically.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Folds an ordered list of byte strings into one seed. Parts are
/// length-prefixed so ("ab","c") and ("a","bc") differ.
pub fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in (part.len() as u64).to_le_bytes().iter() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}
