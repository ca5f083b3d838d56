use sha2::{Digest, Sha256};

/// Derives an independent 64-bit seed for a named stage from a root seed.
///
/// `sha256(root_le_bytes || label)`, first 8 bytes little-endian.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
