use serde::{Deserialize, Serialize};

use crate::cas::Cid;
use crate::crypto::{KeyPair, PasswordHash, Role, SymmetricKey};
use crate::ledger::{BlockHeader, Hash256, InclusionProof, ValidatorSignature};

/// Authenticated principal behind a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caller {
    pub user_id: String,
    pub role: Role,
}

#[derive(Debug, Clone)]
pub struct UserAccount {
    pub user_id: String,
    pub role: Role,
    pub display_name: String,
    pub password_hash: PasswordHash,
    /// Applicants and admins only.
    pub keypair: Option<KeyPair>,
    /// Applicants only: encrypts the CID before it is anchored.
    pub vault_key: Option<SymmetricKey>,
    pub created_at: u64,
}

/// What other parties may see of an account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserView {
    pub user_id: String,
    pub role: Role,
    pub display_name: String,
    pub public_key: Option<String>,
}

impl UserAccount {
    pub fn view(&self) -> UserView {
        UserView {
            user_id: self.user_id.clone(),
            role: self.role,
            display_name: self.display_name.clone(),
            public_key: self.keypair.as_ref().map(|k| hex::encode(k.public_key())),
        }
    }
}

/// Persisted form of [`UserAccount`], secrets included.
#[derive(Serialize, Deserialize)]
pub(crate) struct UserRecord {
    pub user_id: String,
    pub role: Role,
    pub display_name: String,
    pub password_hash: String,
    pub keypair_seed: Option<String>,
    pub vault_key: Option<String>,
    pub created_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CertificateState {
    PendingVerification,
    UnderReview,
    Verified,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub certificate_id: String,
    pub applicant_id: String,
    pub title: String,
    pub issuer_name: String,
    pub state: CertificateState,
    /// Present only while awaiting a decision. Stored apart from the record log.
    #[serde(skip)]
    pub pending_bytes: Option<Vec<u8>>,
    pub cid: Option<Cid>,
    pub anchor_tx_hash: Option<Hash256>,
    /// Equal to `anchor_tx_hash`; what the applicant hands to companies.
    pub share_code: Option<Hash256>,
    pub anchored_at: Option<u64>,
    pub upload_receipt_id: String,
    pub decision_note: Option<String>,
    pub reviewed_by: Option<String>,
    /// The admin's explicit approval of the anchoring fee.
    pub fee_approved: Option<bool>,
    pub created_at: u64,
    pub updated_at: u64,
}

/// Certificate metadata as shown to its applicant and to admins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateView {
    pub certificate_id: String,
    pub applicant_id: String,
    pub title: String,
    pub issuer_name: String,
    pub state: CertificateState,
    pub share_code: Option<Hash256>,
    pub anchored_at: Option<u64>,
    pub upload_receipt_id: String,
    pub decision_note: Option<String>,
    pub size_bytes: Option<usize>,
    pub created_at: u64,
}

impl CertificateRecord {
    pub fn view(&self) -> CertificateView {
        CertificateView {
            certificate_id: self.certificate_id.clone(),
            applicant_id: self.applicant_id.clone(),
            title: self.title.clone(),
            issuer_name: self.issuer_name.clone(),
            state: self.state,
            share_code: self.share_code,
            anchored_at: self.anchored_at,
            upload_receipt_id: self.upload_receipt_id.clone(),
            decision_note: self.decision_note.clone(),
            size_bytes: self.pending_bytes.as_ref().map(Vec::len),
            created_at: self.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UploadReceipt {
    pub certificate_id: String,
    pub upload_receipt_id: String,
    pub state: CertificateState,
}

/// Public result of a share-code search: metadata only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchSummary {
    pub applicant_display_name: String,
    pub title: String,
    pub issuer_name: String,
    pub state: CertificateState,
    pub anchored_at_height: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessDecision {
    Grant,
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessState {
    Pending,
    Granted,
    Denied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    pub request_id: String,
    pub company_id: String,
    pub applicant_id: String,
    pub certificate_id: String,
    pub state: AccessState,
    pub created_at: u64,
    pub decided_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NotificationKind {
    VerificationRequested,
    /// An admin claimed the certificate for review.
    ReviewStarted,
    VerificationDecided,
    AccessRequested,
    AccessDecided,
    TamperAlert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub notification_id: String,
    pub recipient_id: String,
    pub kind: NotificationKind,
    pub payload: String,
    pub created_at: u64,
    pub read: bool,
    /// Insertion order; newest-first listings sort on it.
    pub seq: u64,
}

/// Everything a company needs to check an anchor independently.
#[derive(Debug, Clone, Serialize)]
pub struct ProofBundle {
    pub anchor_tx: serde_json::Value,
    pub tx_hash: Hash256,
    pub block_height: u64,
    pub block_hash: Hash256,
    pub block_header: BlockHeader,
    pub inclusion_proof: InclusionProof,
    pub quorum: usize,
    pub quorum_signatures: Vec<ValidatorSignature>,
    pub verified: bool,
}

#[derive(Debug, Clone)]
pub struct CertificateContent {
    pub file_bytes: Vec<u8>,
    pub title: String,
    pub proof: ProofBundle,
}
