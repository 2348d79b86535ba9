use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::{Hash256, LedgerError};
use crate::canonical;
use crate::crypto::{self, Ciphertext, KeyPair, NONCE_LEN, TAG_LEN};

pub const TX_TYPE_ANCHOR: &str = "anchor";

/// Flat fee plus a per-byte charge on the encrypted CID body.
pub const BASE_FEE: u64 = 21_000;
pub const FEE_PER_BYTE: u64 = 16;

pub fn fee_for(body_len: usize) -> u64 {
    BASE_FEE + FEE_PER_BYTE * body_len as u64
}

const FIELDS: [&str; 9] = [
    "applicant_id",
    "certificate_id",
    "encrypted_cid_body",
    "encrypted_cid_nonce",
    "fee_units",
    "issuer_pubkey",
    "issuer_signature",
    "timestamp",
    "tx_type",
];

/// Ledger record binding an encrypted CID to an applicant's certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorTx {
    pub applicant_id: String,
    pub certificate_id: String,
    pub encrypted_cid_nonce: [u8; NONCE_LEN],
    pub encrypted_cid_body: Vec<u8>,
    pub issuer_pubkey: [u8; 32],
    pub fee_units: u64,
    pub timestamp: u64,
    pub issuer_signature: [u8; 64],
}

impl AnchorTx {
    /// Build and sign an anchor with the standard fee.
    pub fn new_signed(
        applicant_id: &str,
        certificate_id: &str,
        encrypted_cid: &Ciphertext,
        issuer: &KeyPair,
        timestamp: u64,
    ) -> Self {
        let mut tx = Self {
            applicant_id: applicant_id.to_owned(),
            certificate_id: certificate_id.to_owned(),
            encrypted_cid_nonce: encrypted_cid.nonce,
            encrypted_cid_body: encrypted_cid.body.clone(),
            issuer_pubkey: issuer.public_key(),
            fee_units: fee_for(encrypted_cid.body.len()),
            timestamp,
            issuer_signature: [0; 64],
        };
        tx.issuer_signature = issuer.sign(&tx.signing_bytes());
        tx
    }

    pub fn encrypted_cid(&self) -> Ciphertext {
        Ciphertext {
            nonce: self.encrypted_cid_nonce,
            body: self.encrypted_cid_body.clone(),
        }
    }

    fn fields(&self, with_signature: bool) -> Value {
        let mut v = json!({
            "applicant_id": self.applicant_id,
            "certificate_id": self.certificate_id,
            "encrypted_cid_body": hex::encode(&self.encrypted_cid_body),
            "encrypted_cid_nonce": hex::encode(self.encrypted_cid_nonce),
            "fee_units": self.fee_units,
            "issuer_pubkey": hex::encode(self.issuer_pubkey),
            "timestamp": self.timestamp,
            "tx_type": TX_TYPE_ANCHOR,
        });
        if with_signature {
            v["issuer_signature"] = Value::String(hex::encode(self.issuer_signature));
        }
        v
    }

    /// Bytes covered by the issuer signature (every field but the signature).
    pub fn signing_bytes(&self) -> Vec<u8> {
        canonical::value_to_text(&self.fields(false)).into_bytes()
    }

    /// Canonical bytes including the signature; the input to [`AnchorTx::tx_hash`].
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::value_to_text(&self.fields(true)).into_bytes()
    }

    pub fn to_json(&self) -> Value {
        self.fields(true)
    }

    pub fn tx_hash(&self) -> Hash256 {
        Hash256(Sha256::digest(self.canonical_bytes()).into())
    }

    pub fn verify_signature(&self) -> bool {
        crypto::verify_sig(&self.issuer_pubkey, &self.signing_bytes(), &self.issuer_signature)
            .unwrap_or(false)
    }

    /// Field-domain checks beyond what the types already guarantee.
    pub fn validate(&self) -> Result<(), LedgerError> {
        if self.applicant_id.is_empty() || self.certificate_id.is_empty() {
            return Err(LedgerError::InvalidTx("empty identifier"));
        }
        if self.encrypted_cid_body.len() < TAG_LEN {
            return Err(LedgerError::InvalidTx("encrypted CID shorter than its tag"));
        }
        if self.fee_units != fee_for(self.encrypted_cid_body.len()) {
            return Err(LedgerError::InvalidTx("fee does not match the fee schedule"));
        }
        Ok(())
    }

    /// Parse canonical bytes. Anything that does not re-encode to exactly the
    /// same bytes is rejected.
    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, LedgerError> {
        let value: Value =
            serde_json::from_slice(bytes).map_err(|_| LedgerError::InvalidTx("not JSON"))?;
        let map = value
            .as_object()
            .ok_or(LedgerError::InvalidTx("not an object"))?;
        if map.len() != FIELDS.len() || FIELDS.iter().any(|f| !map.contains_key(*f)) {
            return Err(LedgerError::InvalidTx("unexpected field set"));
        }
        if map["tx_type"] != TX_TYPE_ANCHOR {
            return Err(LedgerError::InvalidTx("unknown tx_type"));
        }
        let tx = Self {
            applicant_id: text(map, "applicant_id")?.to_owned(),
            certificate_id: text(map, "certificate_id")?.to_owned(),
            encrypted_cid_nonce: fixed(map, "encrypted_cid_nonce")?,
            encrypted_cid_body: hex::decode(text(map, "encrypted_cid_body")?)
                .map_err(|_| LedgerError::InvalidTx("encrypted_cid_body"))?,
            issuer_pubkey: fixed(map, "issuer_pubkey")?,
            fee_units: int(map, "fee_units")?,
            timestamp: int(map, "timestamp")?,
            issuer_signature: fixed(map, "issuer_signature")?,
        };
        if tx.canonical_bytes() != bytes {
            return Err(LedgerError::InvalidTx("non-canonical encoding"));
        }
        Ok(tx)
    }
}

fn text<'a>(map: &'a Map<String, Value>, key: &'static str) -> Result<&'a str, LedgerError> {
    map[key].as_str().ok_or(LedgerError::InvalidTx(key))
}

fn int(map: &Map<String, Value>, key: &'static str) -> Result<u64, LedgerError> {
    map[key].as_u64().ok_or(LedgerError::InvalidTx(key))
}

fn fixed<const N: usize>(map: &Map<String, Value>, key: &'static str) -> Result<[u8; N], LedgerError> {
    crypto::decode_fixed(text(map, key)?).ok_or(LedgerError::InvalidTx(key))
}
