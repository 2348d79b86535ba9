//! Role-based certificate workflow.
//!
//! An applicant uploads a certificate, which waits in a pending store until an
//! admin claims and decides it. Approval puts the bytes in the object store,
//! encrypts the resulting CID under the applicant's vault key and anchors it
//! on the ledger; the anchor transaction hash becomes the certificate's share
//! code. Companies look certificates up by share code, request access, and
//! once the applicant grants it can view the bytes together with a proof
//! bundle that is re-verified on every view.
//!
//! [`Platform`] owns all state. Callers serialize mutations through it (the
//! REST service holds it behind a mutex), which also makes the approve
//! pipeline atomic as seen from outside.

pub mod demo;
mod model;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::PathBuf;

use rand::rngs::OsRng;
use rand::RngCore;
use thiserror::Error;

pub use model::*;
use store::{Db, Entity};

use crate::cas::{CasError, ObjectStore};
use crate::crypto::{self, AuthToken, KeyPair, PasswordHash, Role, SymmetricKey, TokenError, DEFAULT_TOKEN_TTL};
use crate::ledger::{self, merkle, AnchorTx, Hash256, Ledger, LedgerError, TamperReport, INITIAL_ISSUER_BALANCE};
use crate::unix_now;

/// Largest accepted certificate upload.
pub const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;
const MIN_PASSWORD_LEN: usize = 8;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("authentication required: {0}")]
    Unauthenticated(String),
    #[error("bad credentials")]
    BadCredentials,
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("user {0} already exists")]
    DuplicateUser(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("wrong state: {0}")]
    WrongState(String),
    #[error("an access request is already pending")]
    DuplicatePending,
    #[error("file is empty")]
    EmptyFile,
    #[error("file exceeds {MAX_UPLOAD_BYTES} bytes")]
    TooLarge,
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("anchoring failed: {0}")]
    AnchorFailed(LedgerError),
    #[error("tamper detected: {0}")]
    TamperDetected(String),
    #[error("data directory already initialized")]
    AlreadyInitialized,
    #[error("data directory not initialized")]
    NotInitialized,
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
}

type Result<T> = std::result::Result<T, WorkflowError>;

/// Layout of a data directory.
#[derive(Debug, Clone)]
pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn cas(&self) -> PathBuf {
        self.root.join("cas")
    }

    pub fn ledger(&self) -> PathBuf {
        self.root.join("ledger")
    }

    pub fn db(&self) -> PathBuf {
        self.root.join("db")
    }

    pub fn token_secret(&self) -> PathBuf {
        self.root.join("token_secret")
    }

    pub fn is_initialized(&self) -> bool {
        self.ledger().join(ledger::CHAIN_FILE).exists()
    }

    /// Hex-encoded token secret written by `init`.
    pub fn read_token_secret(&self) -> Result<Vec<u8>> {
        let text = fs::read_to_string(self.token_secret())?;
        hex::decode(text.trim()).map_err(|_| WorkflowError::Validation("token secret is not hex".into()))
    }
}

#[derive(Debug, Clone)]
pub struct Platform {
    db: Db,
    cas: ObjectStore,
    ledger: Ledger,
    users: BTreeMap<String, UserAccount>,
    certificates: BTreeMap<String, CertificateRecord>,
    by_share_code: HashMap<Hash256, String>,
    requests: BTreeMap<String, AccessRequest>,
    notifications: Vec<Notification>,
    next_seq: u64,
    token_secret: Vec<u8>,
    token_ttl: u64,
}

impl Platform {
    fn assemble(db: Db, cas: ObjectStore, ledger: Ledger, token_secret: Vec<u8>) -> Self {
        Self {
            db,
            cas,
            ledger,
            users: BTreeMap::new(),
            certificates: BTreeMap::new(),
            by_share_code: HashMap::new(),
            requests: BTreeMap::new(),
            notifications: Vec::new(),
            next_seq: 0,
            token_secret,
            token_ttl: DEFAULT_TOKEN_TTL,
        }
    }

    /// Fully in-memory platform with a `quorum`-of-`validators` ledger.
    pub fn in_memory(quorum: usize, validators: usize) -> Result<Self> {
        let mut secret = vec![0u8; 32];
        OsRng.fill_bytes(&mut secret);
        Ok(Self::assemble(
            Db::Memory,
            ObjectStore::in_memory(),
            Ledger::in_memory(quorum, validators)?,
            secret,
        ))
    }

    /// Create the data directory layout, genesis block and token secret.
    /// Returns the token secret in use.
    pub fn init(dir: &DataDir, quorum: usize, validators: usize, token_secret: Option<Vec<u8>>) -> Result<Vec<u8>> {
        if dir.is_initialized() {
            return Err(WorkflowError::AlreadyInitialized);
        }
        fs::create_dir_all(&dir.root)?;
        ObjectStore::open(dir.cas())?;
        Db::open(dir.db())?;
        Ledger::init(&dir.ledger(), quorum, validators)?;
        let secret = token_secret.unwrap_or_else(|| {
            let mut s = vec![0u8; 32];
            OsRng.fill_bytes(&mut s);
            s
        });
        if !dir.token_secret().exists() {
            fs::write(dir.token_secret(), format!("{}\n", hex::encode(&secret)))?;
        }
        Ok(secret)
    }

    /// Open an initialized data directory and replay the record logs.
    /// `token_secret` overrides the secret stored by `init`.
    pub fn open(dir: &DataDir, token_secret: Option<Vec<u8>>) -> Result<Self> {
        if !dir.is_initialized() {
            return Err(WorkflowError::NotInitialized);
        }
        let secret = match token_secret {
            Some(s) => s,
            None => dir.read_token_secret()?,
        };
        let db = Db::open(dir.db())?;
        let mut platform = Self::assemble(db, ObjectStore::open(dir.cas())?, Ledger::open(&dir.ledger())?, secret);
        platform.replay()?;
        Ok(platform)
    }

    fn replay(&mut self) -> Result<()> {
        for rec in self.db.load::<UserRecord>(Entity::Users)? {
            let account = user_from_record(rec)?;
            self.users.insert(account.user_id.clone(), account);
        }
        for mut cert in self.db.load::<CertificateRecord>(Entity::Certificates)? {
            if matches!(cert.state, CertificateState::PendingVerification | CertificateState::UnderReview) {
                cert.pending_bytes = self.db.read_pending(&cert.certificate_id)?;
            }
            if let Some(code) = cert.share_code {
                self.by_share_code.insert(code, cert.certificate_id.clone());
            }
            self.certificates.insert(cert.certificate_id.clone(), cert);
        }
        for req in self.db.load::<AccessRequest>(Entity::AccessRequests)? {
            self.requests.insert(req.request_id.clone(), req);
        }
        // Keyed by id: offline audits may append alongside a running server,
        // so sequence numbers are not guaranteed unique.
        let mut latest: HashMap<String, Notification> = HashMap::new();
        for n in self.db.load::<Notification>(Entity::Notifications)? {
            latest.insert(n.notification_id.clone(), n);
        }
        let mut notifications: Vec<Notification> = latest.into_values().collect();
        notifications.sort_by(|a, b| (a.seq, &a.notification_id).cmp(&(b.seq, &b.notification_id)));
        self.next_seq = notifications.last().map_or(0, |n| n.seq + 1);
        self.notifications = notifications;
        Ok(())
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut Ledger {
        &mut self.ledger
    }

    pub fn cas(&self) -> &ObjectStore {
        &self.cas
    }

    pub fn cas_mut(&mut self) -> &mut ObjectStore {
        &mut self.cas
    }

    pub fn set_token_ttl(&mut self, ttl_seconds: u64) {
        self.token_ttl = ttl_seconds.max(1);
    }

    pub fn user(&self, user_id: &str) -> Option<&UserAccount> {
        self.users.get(user_id)
    }

    pub fn certificate(&self, certificate_id: &str) -> Option<&CertificateRecord> {
        self.certificates.get(certificate_id)
    }

    pub fn certificates(&self) -> impl Iterator<Item = &CertificateRecord> {
        self.certificates.values()
    }

    pub fn access_requests(&self) -> impl Iterator<Item = &AccessRequest> {
        self.requests.values()
    }

    pub fn all_notifications(&self) -> &[Notification] {
        &self.notifications
    }

    /// Files currently held in the on-disk pending store.
    pub fn pending_store_files(&self) -> Result<Vec<String>> {
        Ok(self.db.pending_files()?)
    }

    // ----- accounts ---------------------------------------------------------

    /// Self-service registration for applicants and companies.
    pub fn register_user(&mut self, user_id: &str, role: Role, display_name: &str, password: &str) -> Result<UserView> {
        if role == Role::Admin {
            return Err(WorkflowError::Unauthorized("admins are created by operators".into()));
        }
        self.create_user(user_id, role, display_name, password)
    }

    /// Operator bootstrap of an admin account. Returns the one-time password.
    pub fn create_admin(&mut self, user_id: &str, display_name: &str) -> Result<(UserView, String)> {
        let mut raw = [0u8; 18];
        OsRng.fill_bytes(&mut raw);
        let password = hex::encode(raw);
        let view = self.create_user(user_id, Role::Admin, display_name, &password)?;
        Ok((view, password))
    }

    fn create_user(&mut self, user_id: &str, role: Role, display_name: &str, password: &str) -> Result<UserView> {
        validate_user_id(user_id)?;
        let display_name = display_name.trim();
        if display_name.is_empty() || display_name.len() > 128 {
            return Err(WorkflowError::Validation("display_name must be 1..=128 characters".into()));
        }
        if password.len() < MIN_PASSWORD_LEN {
            return Err(WorkflowError::Validation(format!(
                "password must be at least {MIN_PASSWORD_LEN} characters"
            )));
        }
        if self.users.contains_key(user_id) {
            return Err(WorkflowError::DuplicateUser(user_id.to_owned()));
        }
        let keypair = matches!(role, Role::Applicant | Role::Admin).then(|| KeyPair::generate(&mut OsRng));
        let vault_key = (role == Role::Applicant).then(|| SymmetricKey::generate(&mut OsRng));
        let account = UserAccount {
            user_id: user_id.to_owned(),
            role,
            display_name: display_name.to_owned(),
            password_hash: PasswordHash::new(password),
            keypair,
            vault_key,
            created_at: unix_now(),
        };
        self.db.append(Entity::Users, &user_record(&account))?;
        if role == Role::Admin {
            let pk = account.keypair.as_ref().expect("admins have keys").public_key();
            self.ledger.credit_account(pk, INITIAL_ISSUER_BALANCE)?;
        }
        let view = account.view();
        self.users.insert(user_id.to_owned(), account);
        Ok(view)
    }

    pub fn authenticate(&self, user_id: &str, password: &str) -> Result<AuthToken> {
        let user = self.users.get(user_id).ok_or(WorkflowError::BadCredentials)?;
        if !user.password_hash.verify(password) {
            return Err(WorkflowError::BadCredentials);
        }
        Ok(crypto::issue_token(&self.token_secret, user_id, user.role, self.token_ttl, unix_now()))
    }

    /// Resolve a bearer token to a caller.
    pub fn authorize(&self, token: &str) -> Result<Caller> {
        self.authorize_at(token, unix_now())
    }

    pub fn authorize_at(&self, token: &str, now: u64) -> Result<Caller> {
        let claims = crypto::verify_token(&self.token_secret, token, now).map_err(|e| {
            WorkflowError::Unauthenticated(
                match e {
                    TokenError::Malformed => "malformed token",
                    TokenError::BadSignature => "bad token signature",
                    TokenError::Expired => "token expired",
                }
                .into(),
            )
        })?;
        match self.users.get(&claims.sub) {
            Some(u) if u.role == claims.role => Ok(Caller {
                user_id: claims.sub,
                role: claims.role,
            }),
            _ => Err(WorkflowError::Unauthenticated("unknown subject".into())),
        }
    }

    // ----- certificates -----------------------------------------------------

    pub fn upload_certificate(&mut self, caller: &Caller, title: &str, issuer_name: &str, file_bytes: Vec<u8>) -> Result<UploadReceipt> {
        require(caller, Role::Applicant)?;
        if file_bytes.is_empty() {
            return Err(WorkflowError::EmptyFile);
        }
        if file_bytes.len() > MAX_UPLOAD_BYTES {
            return Err(WorkflowError::TooLarge);
        }
        let title = non_empty("title", title)?;
        let issuer_name = non_empty("issuer_name", issuer_name)?;
        let now = unix_now();
        let record = CertificateRecord {
            certificate_id: format!("cert-{}", uuid::Uuid::new_v4()),
            applicant_id: caller.user_id.clone(),
            title,
            issuer_name,
            state: CertificateState::PendingVerification,
            pending_bytes: Some(file_bytes),
            cid: None,
            anchor_tx_hash: None,
            share_code: None,
            anchored_at: None,
            upload_receipt_id: format!("rcpt-{}", uuid::Uuid::new_v4()),
            decision_note: None,
            reviewed_by: None,
            fee_approved: None,
            created_at: now,
            updated_at: now,
        };
        self.db
            .put_pending(&record.certificate_id, record.pending_bytes.as_deref().unwrap_or_default())?;
        self.db.append(Entity::Certificates, &record)?;
        let receipt = UploadReceipt {
            certificate_id: record.certificate_id.clone(),
            upload_receipt_id: record.upload_receipt_id.clone(),
            state: record.state,
        };
        let admins: Vec<String> = self.users_with_role(Role::Admin);
        let payload = format!("{} requests verification of {:?} ({})", caller.user_id, record.title, record.certificate_id);
        self.certificates.insert(record.certificate_id.clone(), record);
        for admin in admins {
            self.notify(&admin, NotificationKind::VerificationRequested, payload.clone())?;
        }
        Ok(receipt)
    }

    /// The caller's own certificates, oldest first.
    pub fn list_own_certificates(&self, caller: &Caller) -> Result<Vec<CertificateView>> {
        require(caller, Role::Applicant)?;
        Ok(self.sorted_certs(|c| c.applicant_id == caller.user_id))
    }

    /// Certificates awaiting an admin decision, oldest first.
    pub fn admin_queue(&self, caller: &Caller) -> Result<Vec<CertificateView>> {
        require(caller, Role::Admin)?;
        Ok(self.sorted_certs(|c| {
            matches!(c.state, CertificateState::PendingVerification | CertificateState::UnderReview)
        }))
    }

    fn sorted_certs(&self, keep: impl Fn(&CertificateRecord) -> bool) -> Vec<CertificateView> {
        let mut out: Vec<&CertificateRecord> = self.certificates.values().filter(|c| keep(c)).collect();
        out.sort_by(|a, b| (a.created_at, &a.certificate_id).cmp(&(b.created_at, &b.certificate_id)));
        out.into_iter().map(CertificateRecord::view).collect()
    }

    /// Pending bytes of a certificate under review, for the admin checking it.
    pub fn review_content(&self, caller: &Caller, certificate_id: &str) -> Result<Vec<u8>> {
        require(caller, Role::Admin)?;
        let cert = self.cert(certificate_id)?;
        cert.pending_bytes
            .clone()
            .ok_or_else(|| WorkflowError::WrongState("certificate has no pending content".into()))
    }

    pub fn admin_claim(&mut self, caller: &Caller, certificate_id: &str) -> Result<CertificateView> {
        require(caller, Role::Admin)?;
        let cert = self.cert(certificate_id)?;
        if cert.state != CertificateState::PendingVerification {
            return Err(WorkflowError::WrongState(format!("certificate is {:?}", cert.state)));
        }
        let mut updated = cert.clone();
        updated.state = CertificateState::UnderReview;
        updated.reviewed_by = Some(caller.user_id.clone());
        updated.updated_at = unix_now();
        let applicant = updated.applicant_id.clone();
        let payload = format!("{} is under review by {}", updated.certificate_id, caller.user_id);
        let view = self.store_cert(updated)?;
        self.notify(&applicant, NotificationKind::ReviewStarted, payload)?;
        Ok(view)
    }

    /// Approve or reject a claimed certificate. Approval runs the anchoring
    /// pipeline; `fee_approved` is the admin's explicit acceptance of the fee.
    pub fn admin_decide(
        &mut self,
        caller: &Caller,
        certificate_id: &str,
        decision: Decision,
        note: &str,
        fee_approved: bool,
    ) -> Result<CertificateView> {
        require(caller, Role::Admin)?;
        let cert = self.cert(certificate_id)?.clone();
        if cert.state != CertificateState::UnderReview {
            return Err(WorkflowError::WrongState(format!("certificate is {:?}", cert.state)));
        }
        let mut updated = cert.clone();
        updated.pending_bytes = None;
        updated.decision_note = Some(note.trim().to_owned()).filter(|n| !n.is_empty());
        updated.reviewed_by = Some(caller.user_id.clone());
        updated.updated_at = unix_now();

        match decision {
            Decision::Reject => {
                updated.state = CertificateState::Rejected;
            }
            Decision::Approve => {
                let bytes = cert
                    .pending_bytes
                    .as_deref()
                    .ok_or_else(|| WorkflowError::WrongState("pending content missing".into()))?;
                let (cid, tx_hash, height) = self.anchor(&cert, caller, bytes, fee_approved)?;
                updated.state = CertificateState::Verified;
                updated.cid = Some(cid);
                updated.anchor_tx_hash = Some(tx_hash);
                updated.share_code = Some(tx_hash);
                updated.anchored_at = Some(height);
                updated.fee_approved = Some(fee_approved);
                self.by_share_code.insert(tx_hash, cert.certificate_id.clone());
            }
        }
        let applicant = updated.applicant_id.clone();
        let payload = match updated.state {
            CertificateState::Verified => format!(
                "{} verified; share code {}",
                updated.certificate_id,
                updated.share_code.expect("verified has share code")
            ),
            _ => format!("{} rejected", updated.certificate_id),
        };
        let view = self.store_cert(updated)?;
        self.db.erase_pending(certificate_id)?;
        self.notify(&applicant, NotificationKind::VerificationDecided, payload)?;
        Ok(view)
    }

    /// Steps 1-5 of approval: store, encrypt, sign, submit, commit. Leaves the
    /// ledger's pending pool as it found it on failure.
    fn anchor(&mut self, cert: &CertificateRecord, admin: &Caller, bytes: &[u8], fee_approved: bool) -> Result<(crate::Cid, Hash256, u64)> {
        let applicant = self
            .users
            .get(&cert.applicant_id)
            .ok_or_else(|| WorkflowError::NotFound(format!("applicant {}", cert.applicant_id)))?;
        let vault_key = applicant
            .vault_key
            .clone()
            .ok_or_else(|| WorkflowError::Validation("applicant has no vault key".into()))?;
        let issuer = self
            .users
            .get(&admin.user_id)
            .and_then(|u| u.keypair.clone())
            .ok_or_else(|| WorkflowError::Validation("admin has no signing key".into()))?;

        let cid = self.cas.put(bytes)?;
        let encrypted = crypto::encrypt_cid(&vault_key, &cid);
        let tx = AnchorTx::new_signed(&cert.applicant_id, &cert.certificate_id, &encrypted, &issuer, unix_now());
        let receipt = self
            .ledger
            .submit_tx(tx, fee_approved)
            .map_err(WorkflowError::AnchorFailed)?;
        match self.ledger.propose_and_commit_block() {
            Ok(block) => Ok((cid, receipt.tx_hash, block.header.height)),
            Err(e) => {
                self.ledger.cancel_pending(&receipt.tx_hash);
                Err(WorkflowError::AnchorFailed(e))
            }
        }
    }

    // ----- company access ---------------------------------------------------

    fn cert_by_share_code(&self, share_code: &str) -> Result<&CertificateRecord> {
        let not_found = || WorkflowError::NotFound("share code".into());
        let code: Hash256 = share_code.parse().map_err(|_| not_found())?;
        let id = self.by_share_code.get(&code).ok_or_else(not_found)?;
        let cert = self.cert(id)?;
        if cert.state != CertificateState::Verified {
            return Err(not_found());
        }
        Ok(cert)
    }

    pub fn search_by_share_code(&self, caller: &Caller, share_code: &str) -> Result<SearchSummary> {
        require(caller, Role::Company)?;
        let cert = self.cert_by_share_code(share_code)?;
        let applicant = self
            .users
            .get(&cert.applicant_id)
            .map(|u| u.display_name.clone())
            .unwrap_or_default();
        Ok(SearchSummary {
            applicant_display_name: applicant,
            title: cert.title.clone(),
            issuer_name: cert.issuer_name.clone(),
            state: cert.state,
            anchored_at_height: cert.anchored_at.expect("verified certificates are anchored"),
        })
    }

    pub fn request_access(&mut self, caller: &Caller, share_code: &str) -> Result<AccessRequest> {
        require(caller, Role::Company)?;
        let cert = self.cert_by_share_code(share_code)?;
        let (certificate_id, applicant_id) = (cert.certificate_id.clone(), cert.applicant_id.clone());
        let existing = self
            .requests
            .values()
            .filter(|r| r.company_id == caller.user_id && r.certificate_id == certificate_id);
        for r in existing {
            match r.state {
                AccessState::Pending => return Err(WorkflowError::DuplicatePending),
                AccessState::Granted => return Err(WorkflowError::WrongState("access already granted".into())),
                AccessState::Denied => {}
            }
        }
        let request = AccessRequest {
            request_id: format!("req-{}", uuid::Uuid::new_v4()),
            company_id: caller.user_id.clone(),
            applicant_id: applicant_id.clone(),
            certificate_id,
            state: AccessState::Pending,
            created_at: unix_now(),
            decided_at: None,
        };
        self.db.append(Entity::AccessRequests, &request)?;
        self.requests.insert(request.request_id.clone(), request.clone());
        let payload = format!("{} requests access to {} ({})", caller.user_id, request.certificate_id, request.request_id);
        self.notify(&applicant_id, NotificationKind::AccessRequested, payload)?;
        Ok(request)
    }

    /// Requests the caller is party to: made by a company, or addressed to an applicant.
    pub fn list_access_requests(&self, caller: &Caller) -> Result<Vec<AccessRequest>> {
        let mine: Box<dyn Fn(&AccessRequest) -> bool> = match caller.role {
            Role::Company => Box::new(|r| r.company_id == caller.user_id),
            Role::Applicant => Box::new(|r| r.applicant_id == caller.user_id),
            Role::Admin => return Err(WorkflowError::Unauthorized("admins have no access requests".into())),
        };
        let mut out: Vec<AccessRequest> = self.requests.values().filter(|r| mine(r)).cloned().collect();
        out.sort_by(|a, b| (a.created_at, &a.request_id).cmp(&(b.created_at, &b.request_id)));
        Ok(out)
    }

    pub fn decide_access(&mut self, caller: &Caller, request_id: &str, decision: AccessDecision) -> Result<AccessRequest> {
        require(caller, Role::Applicant)?;
        let request = self
            .requests
            .get(request_id)
            .ok_or_else(|| WorkflowError::NotFound(format!("access request {request_id}")))?;
        if request.applicant_id != caller.user_id {
            return Err(WorkflowError::Unauthorized("not your certificate".into()));
        }
        if request.state != AccessState::Pending {
            return Err(WorkflowError::WrongState(format!("request is {:?}", request.state)));
        }
        let mut updated = request.clone();
        updated.state = match decision {
            AccessDecision::Grant => AccessState::Granted,
            AccessDecision::Deny => AccessState::Denied,
        };
        updated.decided_at = Some(unix_now());
        self.db.append(Entity::AccessRequests, &updated)?;
        self.requests.insert(updated.request_id.clone(), updated.clone());
        let payload = format!("{} {:?} for {}", updated.request_id, updated.state, updated.certificate_id);
        self.notify(&updated.company_id, NotificationKind::AccessDecided, payload)?;
        Ok(updated)
    }

    /// Granted company view: the original bytes plus a freshly verified proof.
    /// Any verification failure raises a tamper alert to every admin.
    pub fn view_certificate(&mut self, caller: &Caller, share_code: &str) -> Result<CertificateContent> {
        require(caller, Role::Company)?;
        let cert = self.cert_by_share_code(share_code)?.clone();
        let granted = self.requests.values().any(|r| {
            r.company_id == caller.user_id && r.certificate_id == cert.certificate_id && r.state == AccessState::Granted
        });
        if !granted {
            return Err(WorkflowError::Forbidden("no granted access request".into()));
        }
        match self.verified_content(&cert) {
            Ok(content) => Ok(content),
            Err(detail) => {
                let payload = format!("certificate {} failed verification: {detail}", cert.certificate_id);
                self.alert_admins(&payload)?;
                Err(WorkflowError::TamperDetected(detail))
            }
        }
    }

    fn verified_content(&self, cert: &CertificateRecord) -> std::result::Result<CertificateContent, String> {
        let tx_hash = cert.anchor_tx_hash.ok_or("certificate has no anchor")?;
        let loc = self.ledger.find_tx(&tx_hash).ok_or("anchor transaction not on chain")?;
        let block = self
            .ledger
            .read_block(loc.height)
            .map_err(|e| format!("block {} unreadable: {e}", loc.height))?;
        let block_hash = block.hash();
        if Some(block_hash) != self.ledger.block_hash(loc.height) {
            return Err(format!("block {} header changed", loc.height));
        }
        let prev = self.ledger.block_hash(loc.height - 1);
        if Some(block.header.prev_hash) != prev {
            return Err(format!("block {} prev link broken", loc.height));
        }
        let tx = block.txs.get(loc.index).ok_or("anchor missing from block")?;
        if tx.tx_hash() != tx_hash || tx.certificate_id != cert.certificate_id || tx.applicant_id != cert.applicant_id {
            return Err("anchor transaction does not match certificate".into());
        }
        if !tx.verify_signature() {
            return Err("issuer signature invalid".into());
        }
        let hashes = block.tx_hashes();
        let path = merkle::merkle_path(&hashes, loc.index).ok_or("anchor index out of range")?;
        if !merkle::verify_inclusion(&tx_hash, &path, &block.header.merkle_root) {
            return Err("inclusion proof does not reach merkle root".into());
        }
        let validators = self.ledger.validators();
        if !validators.check_quorum(&block_hash, &block.validator_signatures) {
            return Err("validator quorum invalid".into());
        }

        let vault_key = self
            .users
            .get(&cert.applicant_id)
            .and_then(|u| u.vault_key.as_ref())
            .ok_or("applicant vault key missing")?;
        let cid = crypto::decrypt_cid(vault_key, &tx.encrypted_cid()).map_err(|_| "encrypted CID does not open")?;
        if Some(cid) != cert.cid {
            return Err("anchored CID differs from recorded CID".into());
        }
        let file_bytes = self.cas.get(&cid).map_err(|e| match e {
            CasError::CorruptObject(c) => format!("object {c} corrupt"),
            CasError::NotFound(c) => format!("object {c} missing"),
            other => other.to_string(),
        })?;

        Ok(CertificateContent {
            file_bytes,
            title: cert.title.clone(),
            proof: ProofBundle {
                anchor_tx: tx.to_json(),
                tx_hash,
                block_height: loc.height,
                block_hash,
                block_header: block.header.clone(),
                inclusion_proof: ledger::InclusionProof {
                    height: loc.height,
                    index: loc.index,
                    path,
                },
                quorum: validators.quorum(),
                quorum_signatures: block.validator_signatures.clone(),
                verified: true,
            },
        })
    }

    // ----- notifications ----------------------------------------------------

    pub fn list_notifications(&self, caller: &Caller) -> Vec<Notification> {
        let mut out: Vec<Notification> = self
            .notifications
            .iter()
            .filter(|n| n.recipient_id == caller.user_id)
            .cloned()
            .collect();
        out.sort_by(|a, b| (b.seq, &b.notification_id).cmp(&(a.seq, &a.notification_id)));
        out
    }

    pub fn mark_read(&mut self, caller: &Caller, notification_id: &str) -> Result<Notification> {
        let n = self
            .notifications
            .iter_mut()
            .find(|n| n.notification_id == notification_id && n.recipient_id == caller.user_id)
            .ok_or_else(|| WorkflowError::NotFound(format!("notification {notification_id}")))?;
        if !n.read {
            let mut updated = n.clone();
            updated.read = true;
            self.db.append(Entity::Notifications, &updated)?;
            *n = updated;
        }
        Ok(n.clone())
    }

    fn notify(&mut self, recipient: &str, kind: NotificationKind, payload: String) -> Result<()> {
        let n = Notification {
            notification_id: format!("ntf-{}", uuid::Uuid::new_v4()),
            recipient_id: recipient.to_owned(),
            kind,
            payload,
            created_at: unix_now(),
            read: false,
            seq: self.next_seq,
        };
        self.db.append(Entity::Notifications, &n)?;
        self.next_seq += 1;
        self.notifications.push(n);
        Ok(())
    }

    fn alert_admins(&mut self, payload: &str) -> Result<()> {
        for admin in self.users_with_role(Role::Admin) {
            self.notify(&admin, NotificationKind::TamperAlert, payload.to_owned())?;
        }
        Ok(())
    }

    /// Run the ledger tamper scan; a non-empty report alerts every admin.
    pub fn scan_ledger(&mut self) -> Result<TamperReport> {
        let report = self.ledger.scan()?;
        if let Some(v) = report.violation {
            self.alert_admins(&format!("ledger tamper scan: {:?} at height {}", v.kind, v.height))?;
        }
        Ok(report)
    }

    // ----- helpers ----------------------------------------------------------

    fn users_with_role(&self, role: Role) -> Vec<String> {
        self.users
            .values()
            .filter(|u| u.role == role)
            .map(|u| u.user_id.clone())
            .collect()
    }

    fn cert(&self, certificate_id: &str) -> Result<&CertificateRecord> {
        self.certificates
            .get(certificate_id)
            .ok_or_else(|| WorkflowError::NotFound(format!("certificate {certificate_id}")))
    }

    fn store_cert(&mut self, record: CertificateRecord) -> Result<CertificateView> {
        self.db.append(Entity::Certificates, &record)?;
        let view = record.view();
        self.certificates.insert(record.certificate_id.clone(), record);
        Ok(view)
    }
}

/// Append a tamper alert for every admin of a data directory without
/// loading the ledger. Used by offline audits.
pub fn record_offline_alert(dir: &DataDir, payload: &str) -> Result<usize> {
    let db = Db::open(dir.db())?;
    let users = db.load::<UserRecord>(Entity::Users)?;
    let mut admins: Vec<String> = users
        .into_iter()
        .filter(|u| u.role == Role::Admin)
        .map(|u| u.user_id)
        .collect();
    admins.sort();
    admins.dedup();
    let next_seq = db
        .load::<Notification>(Entity::Notifications)?
        .iter()
        .map(|n| n.seq + 1)
        .max()
        .unwrap_or(0);
    for (i, admin) in admins.iter().enumerate() {
        db.append(
            Entity::Notifications,
            &Notification {
                notification_id: format!("ntf-{}", uuid::Uuid::new_v4()),
                recipient_id: admin.clone(),
                kind: NotificationKind::TamperAlert,
                payload: payload.to_owned(),
                created_at: unix_now(),
                read: false,
                seq: next_seq + i as u64,
            },
        )?;
    }
    Ok(admins.len())
}

fn require(caller: &Caller, role: Role) -> Result<()> {
    if caller.role == role {
        Ok(())
    } else {
        Err(WorkflowError::Unauthorized(format!("requires role {role}")))
    }
}

fn non_empty(field: &str, value: &str) -> Result<String> {
    let v = value.trim();
    if v.is_empty() || v.len() > 256 {
        return Err(WorkflowError::Validation(format!("{field} must be 1..=256 characters")));
    }
    Ok(v.to_owned())
}

fn validate_user_id(user_id: &str) -> Result<()> {
    let ok = (1..=64).contains(&user_id.len())
        && user_id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(WorkflowError::Validation(
            "user_id must be 1..=64 characters of [A-Za-z0-9._-]".into(),
        ))
    }
}

fn user_record(u: &UserAccount) -> UserRecord {
    UserRecord {
        user_id: u.user_id.clone(),
        role: u.role,
        display_name: u.display_name.clone(),
        password_hash: u.password_hash.to_text(),
        keypair_seed: u.keypair.as_ref().map(|k| hex::encode(k.secret_seed())),
        vault_key: u.vault_key.as_ref().map(SymmetricKey::to_hex),
        created_at: u.created_at,
    }
}

fn user_from_record(r: UserRecord) -> Result<UserAccount> {
    let bad = |what: &str| WorkflowError::Validation(format!("corrupt user record {}: {what}", r.user_id));
    Ok(UserAccount {
        password_hash: PasswordHash::parse(&r.password_hash).ok_or_else(|| bad("password hash"))?,
        keypair: r
            .keypair_seed
            .as_deref()
            .map(KeyPair::from_seed_hex)
            .transpose()
            .map_err(|_| bad("keypair"))?,
        vault_key: r
            .vault_key
            .as_deref()
            .map(SymmetricKey::from_hex)
            .transpose()
            .map_err(|_| bad("vault key"))?,
        user_id: r.user_id,
        role: r.role,
        display_name: r.display_name,
        created_at: r.created_at,
    })
}
