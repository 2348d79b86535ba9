use rand::RngCore;
use verifi_core::ledger::{merkle_root, Hash256};

use crate::support::{rng, sha256};
use crate::Outcome;

const MAX_LEN: usize = 16;
const SETS: usize = 100;

/// Top-down recursion over power-of-two leaf ranges. A right subtree that
/// starts past the last leaf is a copy of its left sibling, which is how a
/// duplicated odd tail looks from above.
fn oracle(hashes: &[[u8; 32]]) -> [u8; 32] {
    fn node(hashes: &[[u8; 32]], lo: usize, width: usize) -> [u8; 32] {
        if width == 1 {
            return sha256(&[&[0x00], &hashes[lo]]);
        }
        let half = width / 2;
        let left = node(hashes, lo, half);
        let right = if lo + half >= hashes.len() {
            left
        } else {
            node(hashes, lo + half, half)
        };
        sha256(&[&[0x01], &left, &right])
    }
    if hashes.is_empty() {
        return [0; 32];
    }
    node(hashes, 0, hashes.len().next_power_of_two())
}

pub fn run() -> Outcome {
    let mut rng = rng(4);
    let mut agree = 0;
    let mut mismatched = Vec::new();
    for len in 0..=MAX_LEN {
        for _ in 0..SETS {
            let raw: Vec<[u8; 32]> = (0..len)
                .map(|_| {
                    let mut h = [0u8; 32];
                    rng.fill_bytes(&mut h);
                    h
                })
                .collect();
            let hashes: Vec<Hash256> = raw.iter().copied().map(Hash256).collect();
            if merkle_root(&hashes).0 == oracle(&raw) {
                agree += 1;
            } else if !mismatched.contains(&len) {
                mismatched.push(len);
            }
        }
    }
    let total = (MAX_LEN + 1) * SETS;
    Outcome::new(
        agree == total,
        format!("{agree}/{total} roots agree for lengths 0..={MAX_LEN} x {SETS} sets{}", if mismatched.is_empty() { String::new() } else { format!("; mismatched lengths {mismatched:?}") }),
    )
}
