//! Block layout.
//!
//! ```text
//! header    = version[1] || u64be(height) || prev_hash[32] || merkle_root[32]
//!             || u64be(timestamp) || proposer_pubkey[32]            (113 bytes)
//! block     = header || u32be(n_tx) || (tx_hash[32] || u32be(len) || tx_bytes)*
//!             || u32be(n_sig) || (validator_pubkey[32] || signature[64])*
//! ```
//!
//! Validators sign the header hash, `SHA-256(header)`.

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{merkle, AnchorTx, Hash256, LedgerError};

pub const BLOCK_VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 1 + 8 + 32 + 32 + 8 + 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockHeader {
    pub version: u8,
    pub height: u64,
    pub prev_hash: Hash256,
    pub merkle_root: Hash256,
    pub timestamp: u64,
    #[serde(with = "hex::serde")]
    pub proposer_pubkey: [u8; 32],
}

impl BlockHeader {
    pub fn genesis() -> Self {
        Self {
            version: BLOCK_VERSION,
            height: 0,
            prev_hash: Hash256::ZERO,
            merkle_root: Hash256::ZERO,
            timestamp: 0,
            proposer_pubkey: [0; 32],
        }
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0] = self.version;
        out[1..9].copy_from_slice(&self.height.to_be_bytes());
        out[9..41].copy_from_slice(self.prev_hash.as_bytes());
        out[41..73].copy_from_slice(self.merkle_root.as_bytes());
        out[73..81].copy_from_slice(&self.timestamp.to_be_bytes());
        out[81..113].copy_from_slice(&self.proposer_pubkey);
        out
    }

    pub fn decode(bytes: &[u8; HEADER_LEN]) -> Self {
        let arr32 = |r: std::ops::Range<usize>| -> [u8; 32] { bytes[r].try_into().expect("32 bytes") };
        let u64be = |r: std::ops::Range<usize>| u64::from_be_bytes(bytes[r].try_into().expect("8 bytes"));
        Self {
            version: bytes[0],
            height: u64be(1..9),
            prev_hash: Hash256(arr32(9..41)),
            merkle_root: Hash256(arr32(41..73)),
            timestamp: u64be(73..81),
            proposer_pubkey: arr32(81..113),
        }
    }

    pub fn hash(&self) -> Hash256 {
        header_hash(&self.encode())
    }
}

pub fn header_hash(encoded: &[u8]) -> Hash256 {
    Hash256(Sha256::digest(encoded).into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidatorSignature {
    #[serde(with = "hex::serde")]
    pub validator_pubkey: [u8; 32],
    #[serde(with = "hex::serde")]
    pub signature: [u8; 64],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub txs: Vec<AnchorTx>,
    pub validator_signatures: Vec<ValidatorSignature>,
}

impl Block {
    pub fn genesis() -> Self {
        Self {
            header: BlockHeader::genesis(),
            txs: Vec::new(),
            validator_signatures: Vec::new(),
        }
    }

    pub fn hash(&self) -> Hash256 {
        self.header.hash()
    }

    pub fn tx_hashes(&self) -> Vec<Hash256> {
        self.txs.iter().map(AnchorTx::tx_hash).collect()
    }

    pub fn computed_merkle_root(&self) -> Hash256 {
        merkle::merkle_root(&self.tx_hashes())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 + self.txs.len() * 512);
        out.extend_from_slice(&self.header.encode());
        out.extend_from_slice(&(self.txs.len() as u32).to_be_bytes());
        for tx in &self.txs {
            let bytes = tx.canonical_bytes();
            out.extend_from_slice(tx.tx_hash().as_bytes());
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out.extend_from_slice(&(self.validator_signatures.len() as u32).to_be_bytes());
        for sig in &self.validator_signatures {
            out.extend_from_slice(&sig.validator_pubkey);
            out.extend_from_slice(&sig.signature);
        }
        out
    }

    /// Decode a block record, parsing every transaction and checking each
    /// stored transaction hash.
    pub fn decode(bytes: &[u8]) -> Result<Self, LedgerError> {
        let raw = RawBlock::parse(bytes).ok_or(LedgerError::Decode("block layout"))?;
        let mut txs = Vec::with_capacity(raw.txs.len());
        for rt in &raw.txs {
            let tx = AnchorTx::from_canonical_bytes(rt.bytes)?;
            if tx.tx_hash().as_bytes() != rt.hash {
                return Err(LedgerError::Decode("stored tx hash mismatch"));
            }
            txs.push(tx);
        }
        Ok(Self {
            header: BlockHeader::decode(raw.header),
            txs,
            validator_signatures: raw
                .signatures
                .iter()
                .map(|(pk, sig)| ValidatorSignature {
                    validator_pubkey: **pk,
                    signature: **sig,
                })
                .collect(),
        })
    }
}

/// Borrowed view over an encoded block, used by the tamper scan so that it
/// never has to allocate or parse transaction text.
pub struct RawBlock<'a> {
    pub header: &'a [u8; HEADER_LEN],
    pub txs: Vec<RawTx<'a>>,
    pub signatures: Vec<(&'a [u8; 32], &'a [u8; 64])>,
}

pub struct RawTx<'a> {
    pub hash: &'a [u8; 32],
    pub bytes: &'a [u8],
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Some(head)
    }

    fn array<const N: usize>(&mut self) -> Option<&'a [u8; N]> {
        self.take(N).map(|s| s.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Option<usize> {
        self.array::<4>().map(|b| u32::from_be_bytes(*b) as usize)
    }
}

impl<'a> RawBlock<'a> {
    /// Split an encoded block into its sections. `None` unless the layout
    /// consumes the input exactly.
    pub fn parse(bytes: &'a [u8]) -> Option<Self> {
        let mut cur = Cursor { buf: bytes };
        let header = cur.array::<HEADER_LEN>()?;
        let n_tx = cur.u32()?;
        // Each tx needs at least 36 bytes; reject absurd counts before allocating.
        if n_tx > cur.buf.len() / 36 {
            return None;
        }
        let mut txs = Vec::with_capacity(n_tx);
        for _ in 0..n_tx {
            let hash = cur.array::<32>()?;
            let len = cur.u32()?;
            let bytes = cur.take(len)?;
            txs.push(RawTx { hash, bytes });
        }
        let n_sig = cur.u32()?;
        if n_sig > cur.buf.len() / 96 {
            return None;
        }
        let mut signatures = Vec::with_capacity(n_sig);
        for _ in 0..n_sig {
            signatures.push((cur.array::<32>()?, cur.array::<64>()?));
        }
        cur.buf.is_empty().then_some(Self {
            header,
            txs,
            signatures,
        })
    }
}
