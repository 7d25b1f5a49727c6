use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stable per-stage seed: SHA-256 over the user seed, the stage name, the
/// sorted package ids and the segment index, truncated to 64 bits.
pub fn stage_seed(user_seed: u64, stage: &str, package_ids: &[&str], segment: usize) -> u64 {
    let mut ids: Vec<&str> = package_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut h = Sha256::new();
    h.update(user_seed.to_le_bytes());
    for part in std::iter::once(stage).chain(ids) {
        h.update((part.len() as u32).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update((segment as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
