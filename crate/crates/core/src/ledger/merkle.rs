//! Domain-separated binary Merkle tree over transaction hashes.
//!
//! `leaf = H(0x00 || tx_hash)`, `node = H(0x01 || left || right)`. A level with
//! an odd number of entries duplicates its last entry. The root of an empty
//! list is 32 zero bytes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Hash256;

pub fn leaf_hash(tx_hash: &Hash256) -> Hash256 {
    let mut h = Sha256::new();
    h.update([0x00]);
    h.update(tx_hash.as_bytes());
    Hash256(h.finalize().into())
}

pub fn node_hash(left: &Hash256, right: &Hash256) -> Hash256 {
    let mut h = Sha256::new();
    h.update([0x01]);
    h.update(left.as_bytes());
    h.update(right.as_bytes());
    Hash256(h.finalize().into())
}

pub fn merkle_root(tx_hashes: &[Hash256]) -> Hash256 {
    if tx_hashes.is_empty() {
        return Hash256::ZERO;
    }
    let mut level: Vec<Hash256> = tx_hashes.iter().map(leaf_hash).collect();
    while level.len() > 1 {
        level = next_level(&level);
    }
    level[0]
}

fn next_level(level: &[Hash256]) -> Vec<Hash256> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => node_hash(l, r),
            [last] => node_hash(last, last),
            _ => unreachable!(),
        })
        .collect()
}

/// Which side of the running hash a sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub sibling: Hash256,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    pub height: u64,
    pub index: usize,
    pub path: Vec<ProofStep>,
}

/// Sibling path from leaf `index` to the root. `None` if out of range.
pub fn merkle_path(tx_hashes: &[Hash256], index: usize) -> Option<Vec<ProofStep>> {
    if index >= tx_hashes.len() {
        return None;
    }
    let mut level: Vec<Hash256> = tx_hashes.iter().map(leaf_hash).collect();
    let mut idx = index;
    let mut path = Vec::new();
    while level.len() > 1 {
        let step = if idx.is_multiple_of(2) {
            // A missing right sibling is the duplicated node itself.
            let sibling = level.get(idx + 1).unwrap_or(&level[idx]);
            ProofStep {
                sibling: *sibling,
                side: Side::Right,
            }
        } else {
            ProofStep {
                sibling: level[idx - 1],
                side: Side::Left,
            }
        };
        path.push(step);
        level = next_level(&level);
        idx /= 2;
    }
    Some(path)
}

/// Fold `path` up from `tx_hash` and compare with `root`.
pub fn verify_inclusion(tx_hash: &Hash256, path: &[ProofStep], root: &Hash256) -> bool {
    let acc = path.iter().fold(leaf_hash(tx_hash), |acc, step| match step.side {
        Side::Left => node_hash(&step.sibling, &acc),
        Side::Right => node_hash(&acc, &step.sibling),
    });
    acc == *root
}
