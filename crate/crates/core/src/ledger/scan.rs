//! Full-chain tamper scan over the raw persisted bytes.
//!
//! Structural checks run block by block and stop at the first violation.
//! Validator signatures are then batch-verified only for the blocks below
//! that point; a failed batch is re-checked one block at a time so the
//! lowest offending height is the one reported.

use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::block::{header_hash, BlockHeader, RawBlock, BLOCK_VERSION};
use super::{merkle, Hash256, ValidatorSet};
use crate::crypto;

/// Blocks per signature batch.
const SIG_BATCH_BLOCKS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TamperKind {
    /// The record framing or block layout cannot be decoded.
    RecordCorrupt,
    /// Header fields disagree with the block's position, or genesis differs
    /// from the fixed genesis header.
    HeaderHashMismatch,
    PrevLinkBroken,
    MerkleMismatch,
    TxHashMismatch,
    QuorumInvalid,
}

impl fmt::Display for TamperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub height: u64,
    pub kind: TamperKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TamperReport {
    /// Blocks that passed structural checks before the scan stopped.
    pub blocks_scanned: u64,
    pub violation: Option<Violation>,
}

impl TamperReport {
    pub fn is_clean(&self) -> bool {
        self.violation.is_none()
    }
}

/// Byte span `[start, end)` of each length-prefixed record, including its
/// 4-byte prefix. Stops at the first frame that does not fit.
pub fn frame_spans(data: &[u8]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut offset = 0;
    while data.len() - offset >= 4 {
        let len = u32::from_be_bytes(data[offset..offset + 4].try_into().expect("4 bytes")) as usize;
        let end = offset + 4 + len;
        if end > data.len() {
            break;
        }
        spans.push((offset, end));
        offset = end;
    }
    spans
}

struct Signed<'a> {
    height: u64,
    hash: Hash256,
    signatures: Vec<(&'a [u8; 32], &'a [u8; 64])>,
}

/// Re-derive every hash, link and quorum in a persisted chain.
pub fn scan_chain_bytes(data: &[u8], validators: &ValidatorSet) -> TamperReport {
    let mut offset = 0usize;
    let mut height = 0u64;
    let mut prev: Option<Hash256> = None;
    let mut signed = Vec::new();
    let mut violation = None;

    while offset < data.len() {
        let at = |kind| Some(Violation { height, kind });
        if data.len() - offset < 4 {
            violation = at(TamperKind::RecordCorrupt);
            break;
        }
        let len = u32::from_be_bytes(data[offset..offset + 4].try_into().expect("4 bytes")) as usize;
        offset += 4;
        if len > data.len() - offset {
            violation = at(TamperKind::RecordCorrupt);
            break;
        }
        let record = &data[offset..offset + len];
        offset += len;

        match check_block(record, height, prev.as_ref(), validators) {
            Ok(entry) => {
                prev = Some(entry.hash);
                if height > 0 {
                    signed.push(entry);
                }
            }
            Err(kind) => {
                violation = at(kind);
                break;
            }
        }
        height += 1;
    }
    if height == 0 && violation.is_none() {
        // No genesis record at all.
        violation = Some(Violation {
            height: 0,
            kind: TamperKind::RecordCorrupt,
        });
    }

    if let Some(h) = first_bad_signature(&signed) {
        violation = Some(Violation {
            height: h,
            kind: TamperKind::QuorumInvalid,
        });
    }

    TamperReport {
        blocks_scanned: height,
        violation,
    }
}

fn check_block<'a>(
    record: &'a [u8],
    height: u64,
    prev: Option<&Hash256>,
    validators: &ValidatorSet,
) -> Result<Signed<'a>, TamperKind> {
    let raw = RawBlock::parse(record).ok_or(TamperKind::RecordCorrupt)?;
    let hash = header_hash(raw.header);

    let Some(prev) = prev else {
        let genesis = BlockHeader::genesis().encode();
        if raw.header != &genesis || !raw.txs.is_empty() || !raw.signatures.is_empty() {
            return Err(TamperKind::HeaderHashMismatch);
        }
        return Ok(Signed {
            height,
            hash,
            signatures: Vec::new(),
        });
    };

    let header = BlockHeader::decode(raw.header);
    if header.version != BLOCK_VERSION || header.height != height {
        return Err(TamperKind::HeaderHashMismatch);
    }
    if header.prev_hash != *prev {
        return Err(TamperKind::PrevLinkBroken);
    }
    let mut tx_hashes = Vec::with_capacity(raw.txs.len());
    for tx in &raw.txs {
        let computed: [u8; 32] = Sha256::digest(tx.bytes).into();
        if &computed != tx.hash {
            return Err(TamperKind::TxHashMismatch);
        }
        tx_hashes.push(Hash256(computed));
    }
    if merkle::merkle_root(&tx_hashes) != header.merkle_root {
        return Err(TamperKind::MerkleMismatch);
    }
    if !validators.has_quorum_of_members(raw.signatures.iter().map(|(pk, _)| *pk)) {
        return Err(TamperKind::QuorumInvalid);
    }
    Ok(Signed {
        height,
        hash,
        signatures: raw.signatures,
    })
}

fn batch_ok(blocks: &[Signed<'_>]) -> bool {
    let items: Vec<([u8; 32], &[u8], [u8; 64])> = blocks
        .iter()
        .flat_map(|b| {
            b.signatures
                .iter()
                .map(move |(pk, sig)| (**pk, b.hash.as_bytes().as_slice(), **sig))
        })
        .collect();
    crypto::verify_batch(&items)
}

fn first_bad_signature(blocks: &[Signed<'_>]) -> Option<u64> {
    for chunk in blocks.chunks(SIG_BATCH_BLOCKS) {
        if batch_ok(chunk) {
            continue;
        }
        for block in chunk {
            let ok = block.signatures.iter().all(|(pk, sig)| {
                crypto::verify_sig(*pk, block.hash.as_bytes(), *sig).unwrap_or(false)
            });
            if !ok {
                return Some(block.height);
            }
        }
    }
    None
}
