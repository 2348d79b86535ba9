//! Signatures, CID encryption, bearer tokens and password hashing.
//!
//! Ed25519 signs anchor transactions and block headers, AES-256-GCM seals
//! content identifiers before they go on-chain, and HMAC-SHA-256 authenticates
//! bearer tokens of the form `b64url(header).b64url(payload).b64url(mac)`.

use std::fmt;
use std::str::FromStr;

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use hmac::{Hmac, Mac};
use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::canonical;
use crate::cas::Cid;

pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

/// Default bearer-token lifetime in seconds.
pub const DEFAULT_TOKEN_TTL: u64 = 3600;

pub const PASSWORD_ITERATIONS: u32 = 100_000;
const PASSWORD_SALT_LEN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("malformed key or signature: {0}")]
    Malformed(&'static str),
    #[error("authentication failed")]
    AuthFailure,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("malformed token")]
    Malformed,
    #[error("bad token signature")]
    BadSignature,
    #[error("token expired")]
    Expired,
}

/// Ed25519 key pair. The secret half is the 32-byte seed.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self {
            signing: SigningKey::generate(rng),
        }
    }

    pub fn from_seed(seed: &[u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(seed),
        }
    }

    pub fn from_seed_hex(hex_seed: &str) -> Result<Self, CryptoError> {
        let seed: [u8; 32] = decode_fixed(hex_seed).ok_or(CryptoError::Malformed("seed"))?;
        Ok(Self::from_seed(&seed))
    }

    pub fn public_key(&self) -> [u8; PUBLIC_KEY_LEN] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn secret_seed(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> [u8; SIGNATURE_LEN] {
        self.signing.sign(message).to_bytes()
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public_key", &hex::encode(self.public_key()))
            .finish_non_exhaustive()
    }
}

/// Verify an Ed25519 signature. Wrong lengths or an invalid public key
/// are errors; a well-formed signature that does not verify is `Ok(false)`.
pub fn verify_sig(public_key: &[u8], message: &[u8], signature: &[u8]) -> Result<bool, CryptoError> {
    let pk: &[u8; PUBLIC_KEY_LEN] = public_key
        .try_into()
        .map_err(|_| CryptoError::Malformed("public key length"))?;
    let sig: &[u8; SIGNATURE_LEN] = signature
        .try_into()
        .map_err(|_| CryptoError::Malformed("signature length"))?;
    let key = VerifyingKey::from_bytes(pk).map_err(|_| CryptoError::Malformed("public key"))?;
    let sig = ed25519_dalek::Signature::from_bytes(sig);
    Ok(key.verify(message, &sig).is_ok())
}

/// Verify many `(public_key, message, signature)` triples at once.
///
/// Returns `false` if any triple is invalid, including malformed keys; the
/// caller can re-check individually to find which.
pub fn verify_batch(items: &[([u8; 32], &[u8], [u8; 64])]) -> bool {
    if items.is_empty() {
        return true;
    }
    let mut keys = Vec::with_capacity(items.len());
    let mut sigs = Vec::with_capacity(items.len());
    let mut msgs = Vec::with_capacity(items.len());
    for (pk, msg, sig) in items {
        let Ok(key) = VerifyingKey::from_bytes(pk) else {
            return false;
        };
        keys.push(key);
        sigs.push(ed25519_dalek::Signature::from_bytes(sig));
        msgs.push(*msg);
    }
    ed25519_dalek::verify_batch(&msgs, &sigs, &keys).is_ok()
}

/// AES-256-GCM key. Never written to the ledger or the object store.
#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; 32]);

impl SymmetricKey {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self(key)
    }

    pub fn from_bytes(key: [u8; 32]) -> Self {
        Self(key)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        decode_fixed(s)
            .map(Self)
            .ok_or(CryptoError::Malformed("symmetric key"))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    fn cipher(&self) -> Aes256Gcm {
        Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&self.0))
    }

    /// Encrypt under an explicit nonce. Output is ciphertext followed by the tag.
    pub fn seal(&self, nonce: &[u8; NONCE_LEN], plaintext: &[u8]) -> Vec<u8> {
        self.seal_with_aad(nonce, plaintext, &[])
    }

    pub fn open(&self, nonce: &[u8; NONCE_LEN], body: &[u8]) -> Result<Vec<u8>, CryptoError> {
        self.open_with_aad(nonce, body, &[])
    }

    pub fn seal_with_aad(&self, nonce: &[u8; NONCE_LEN], plaintext: &[u8], aad: &[u8]) -> Vec<u8> {
        self.cipher()
            .encrypt(Nonce::from_slice(nonce), Payload { msg: plaintext, aad })
            .expect("AES-GCM encryption of a bounded buffer cannot fail")
    }

    pub fn open_with_aad(&self, nonce: &[u8; NONCE_LEN], body: &[u8], aad: &[u8]) -> Result<Vec<u8>, CryptoError> {
        self.cipher()
            .decrypt(Nonce::from_slice(nonce), Payload { msg: body, aad })
            .map_err(|_| CryptoError::AuthFailure)
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub nonce: [u8; NONCE_LEN],
    /// Ciphertext followed by the 16-byte tag.
    pub body: Vec<u8>,
}

pub fn encrypt_cid(key: &SymmetricKey, cid: &Cid) -> Ciphertext {
    encrypt_cid_with(key, cid, &mut OsRng)
}

/// Like [`encrypt_cid`] with a caller-supplied randomness source for the nonce.
pub fn encrypt_cid_with<R: RngCore + CryptoRng>(key: &SymmetricKey, cid: &Cid, rng: &mut R) -> Ciphertext {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let body = key.seal(&nonce, cid.digest());
    Ciphertext { nonce, body }
}

pub fn decrypt_cid(key: &SymmetricKey, ct: &Ciphertext) -> Result<Cid, CryptoError> {
    let plain = key.open(&ct.nonce, &ct.body)?;
    let digest: [u8; 32] = plain.try_into().map_err(|_| CryptoError::AuthFailure)?;
    Ok(Cid::from_digest(digest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Applicant,
    Company,
    Admin,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Applicant, Role::Company, Role::Admin];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Applicant => "applicant",
            Role::Company => "company",
            Role::Admin => "admin",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "applicant" => Ok(Role::Applicant),
            "company" => Ok(Role::Company),
            "admin" => Ok(Role::Admin),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenClaims {
    pub sub: String,
    pub role: Role,
    pub exp: u64,
}

#[derive(Serialize, Deserialize)]
struct TokenHeader {
    alg: String,
    typ: String,
}

/// Bearer token together with its wire form.
#[derive(Debug, Clone)]
pub struct AuthToken {
    pub claims: TokenClaims,
    pub wire: String,
}

type HmacSha256 = Hmac<Sha256>;

fn token_mac(secret: &[u8]) -> HmacSha256 {
    <HmacSha256 as Mac>::new_from_slice(secret).expect("HMAC accepts keys of any length")
}

pub fn issue_token(secret: &[u8], sub: &str, role: Role, ttl_seconds: u64, now: u64) -> AuthToken {
    assert!(ttl_seconds > 0, "token ttl must be positive");
    let header = TokenHeader {
        alg: "HS256".into(),
        typ: "JWT".into(),
    };
    let claims = TokenClaims {
        sub: sub.to_owned(),
        role,
        exp: now.saturating_add(ttl_seconds),
    };
    let header = canonical::to_text(&header).expect("header serializes");
    let payload = canonical::to_text(&claims).expect("claims serialize");
    let signing_input = format!(
        "{}.{}",
        URL_SAFE_NO_PAD.encode(header),
        URL_SAFE_NO_PAD.encode(payload)
    );
    let mut mac = token_mac(secret);
    mac.update(signing_input.as_bytes());
    let tag = mac.finalize().into_bytes();
    AuthToken {
        claims,
        wire: format!("{signing_input}.{}", URL_SAFE_NO_PAD.encode(tag)),
    }
}

/// Check a token's MAC over the transmitted header and payload, then its expiry.
/// A token is valid strictly before `exp`.
pub fn verify_token(secret: &[u8], wire: &str, now: u64) -> Result<TokenClaims, TokenError> {
    let mut parts = wire.split('.');
    let (Some(h), Some(p), Some(m), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(TokenError::Malformed);
    };
    let header_bytes = URL_SAFE_NO_PAD.decode(h).map_err(|_| TokenError::Malformed)?;
    let payload_bytes = URL_SAFE_NO_PAD.decode(p).map_err(|_| TokenError::Malformed)?;
    let tag = URL_SAFE_NO_PAD.decode(m).map_err(|_| TokenError::Malformed)?;
    let header: TokenHeader = serde_json::from_slice(&header_bytes).map_err(|_| TokenError::Malformed)?;
    if header.alg != "HS256" {
        return Err(TokenError::Malformed);
    }

    let mut mac = token_mac(secret);
    mac.update(h.as_bytes());
    mac.update(b".");
    mac.update(p.as_bytes());
    mac.verify_slice(&tag).map_err(|_| TokenError::BadSignature)?;

    let claims: TokenClaims = serde_json::from_slice(&payload_bytes).map_err(|_| TokenError::Malformed)?;
    if now >= claims.exp {
        return Err(TokenError::Expired);
    }
    Ok(claims)
}

/// Salted, iterated password hash (PBKDF2-HMAC-SHA-256).
/// Text form: `pbkdf2-sha256$<iterations>$<salt hex>$<hash hex>`.
#[derive(Clone, PartialEq, Eq)]
pub struct PasswordHash {
    iterations: u32,
    salt: [u8; PASSWORD_SALT_LEN],
    hash: [u8; 32],
}

impl PasswordHash {
    pub fn new(password: &str) -> Self {
        let mut salt = [0u8; PASSWORD_SALT_LEN];
        OsRng.fill_bytes(&mut salt);
        Self::with_salt(password, salt, PASSWORD_ITERATIONS)
    }

    pub fn with_salt(password: &str, salt: [u8; PASSWORD_SALT_LEN], iterations: u32) -> Self {
        let mut hash = [0u8; 32];
        pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), &salt, iterations, &mut hash);
        Self {
            iterations,
            salt,
            hash,
        }
    }

    pub fn verify(&self, password: &str) -> bool {
        let candidate = Self::with_salt(password, self.salt, self.iterations);
        // Constant-time comparison via the MAC verifier.
        let mut mac = token_mac(&self.salt);
        mac.update(&self.hash);
        let expected = mac.finalize().into_bytes();
        let mut mac = token_mac(&self.salt);
        mac.update(&candidate.hash);
        mac.verify_slice(&expected).is_ok()
    }

    pub fn to_text(&self) -> String {
        format!(
            "pbkdf2-sha256${}${}${}",
            self.iterations,
            hex::encode(self.salt),
            hex::encode(self.hash)
        )
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.split('$');
        if parts.next()? != "pbkdf2-sha256" {
            return None;
        }
        let iterations = parts.next()?.parse().ok()?;
        let salt = decode_fixed(parts.next()?)?;
        let hash = decode_fixed(parts.next()?)?;
        if parts.next().is_some() {
            return None;
        }
        Some(Self {
            iterations,
            salt,
            hash,
        })
    }
}

impl fmt::Debug for PasswordHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PasswordHash(..)")
    }
}

/// Decode lowercase hex into a fixed-size array.
pub fn decode_fixed<const N: usize>(s: &str) -> Option<[u8; N]> {
    if s.len() != 2 * N || s.bytes().any(|b| b.is_ascii_uppercase()) {
        return None;
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).ok()?;
    Some(out)
}
