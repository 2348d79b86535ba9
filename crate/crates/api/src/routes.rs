use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::routing::{get, post};
use axum::Router;
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use verifi_core::crypto::Role;
use verifi_core::ledger::{block_json, Hash256};
use verifi_core::workflow::{AccessDecision, Decision};
use verifi_core::Caller;

use crate::{ApiError, AppState, Reply};

type Result<T> = std::result::Result<T, ApiError>;
type Params = Query<HashMap<String, String>>;

const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 100;

pub(crate) fn api_routes() -> Router<AppState> {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/certificates", post(upload).get(own_certificates))
        .route("/certificates/{share_code}/content", get(view_content))
        .route("/admin/queue", get(admin_queue))
        .route("/admin/queue/{certificate_id}/claim", post(admin_claim))
        .route("/admin/queue/{certificate_id}/decision", post(admin_decide))
        .route("/admin/queue/{certificate_id}/content", get(review_content))
        .route("/search/{share_code}", get(search))
        .route("/access-requests", post(request_access).get(list_access_requests))
        .route("/access-requests/{request_id}/decision", post(decide_access))
        .route("/notifications", get(notifications))
        .route("/notifications/{notification_id}/read", post(mark_read))
        .route("/ledger/blocks", get(ledger_blocks))
        .route("/ledger/tx/{tx_hash}", get(ledger_tx))
        .route("/ledger/scan", get(ledger_scan))
}

/// Authenticated caller from the bearer token.
struct Auth(Caller);

impl Auth {
    fn require(&self, roles: &[Role]) -> Result<&Caller> {
        if roles.contains(&self.0.role) {
            Ok(&self.0)
        } else {
            Err(ApiError::unauthorized(format!("role {} may not use this endpoint", self.0.role)))
        }
    }
}

impl FromRequestParts<AppState> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .ok_or_else(|| ApiError::unauthenticated("missing bearer token"))?;
        let token = header
            .to_str()
            .ok()
            .and_then(|h| h.strip_prefix("Bearer "))
            .ok_or_else(|| ApiError::unauthenticated("expected 'Bearer <token>'"))?;
        Ok(Auth(state.platform().authorize(token.trim())?))
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::validation(format!("malformed body: {e}")))
}

#[derive(Serialize)]
struct Page<T> {
    items: Vec<T>,
    total: usize,
    offset: usize,
    limit: usize,
}

fn param(params: &HashMap<String, String>, name: &str) -> Result<Option<u64>> {
    params
        .get(name)
        .map(|v| v.parse::<u64>().map_err(|_| ApiError::validation(format!("{name} must be a non-negative integer"))))
        .transpose()
}

fn paginate<T: Serialize>(params: &HashMap<String, String>, items: Vec<T>) -> Result<Reply> {
    let offset = param(params, "offset")?.unwrap_or(0) as usize;
    let limit = param(params, "limit")?.unwrap_or(DEFAULT_PAGE as u64) as usize;
    if !(1..=MAX_PAGE).contains(&limit) {
        return Err(ApiError::validation(format!("limit must be 1..={MAX_PAGE}")));
    }
    let total = items.len();
    let items = items.into_iter().skip(offset).take(limit).collect();
    Ok(Reply::ok(&Page {
        items,
        total,
        offset,
        limit,
    }))
}

async fn healthz(State(state): State<AppState>) -> Reply {
    let height = state.platform().ledger().height();
    Reply::ok(&json!({ "status": "ok", "chain_height": height }))
}

// ----- auth -----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    user_id: String,
    role: Role,
    display_name: String,
    password: String,
}

async fn register(State(state): State<AppState>, body: Bytes) -> Result<Reply> {
    let b: RegisterBody = parse_body(&body)?;
    let view = state.platform().register_user(&b.user_id, b.role, &b.display_name, &b.password)?;
    Ok(Reply::created(&view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginBody {
    user_id: String,
    password: String,
}

async fn login(State(state): State<AppState>, body: Bytes) -> Result<Reply> {
    let b: LoginBody = parse_body(&body)?;
    let token = state.platform().authenticate(&b.user_id, &b.password)?;
    Ok(Reply::ok(&json!({
        "token": token.wire,
        "user_id": token.claims.sub,
        "role": token.claims.role,
        "expires_at": token.claims.exp,
    })))
}

// ----- certificates ---------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadBody {
    title: String,
    issuer_name: String,
    /// Standard base64.
    file_bytes: String,
}

async fn upload(State(state): State<AppState>, auth: Auth, body: Bytes) -> Result<Reply> {
    let caller = auth.require(&[Role::Applicant])?;
    let b: UploadBody = parse_body(&body)?;
    let bytes = STANDARD
        .decode(b.file_bytes.as_bytes())
        .map_err(|_| ApiError::validation("file_bytes is not valid base64"))?;
    let receipt = state.platform().upload_certificate(caller, &b.title, &b.issuer_name, bytes)?;
    Ok(Reply::created(&receipt))
}

async fn own_certificates(State(state): State<AppState>, auth: Auth, Query(params): Params) -> Result<Reply> {
    let caller = auth.require(&[Role::Applicant])?;
    let list = state.platform().list_own_certificates(caller)?;
    paginate(&params, list)
}

async fn view_content(State(state): State<AppState>, auth: Auth, Path(share_code): Path<String>) -> Result<Reply> {
    let caller = auth.require(&[Role::Company])?;
    let content = state.platform().view_certificate(caller, &share_code)?;
    Ok(Reply::ok(&json!({
        "title": content.title,
        "file_bytes": STANDARD.encode(&content.file_bytes),
        "proof": content.proof,
    })))
}

// ----- admin ----------------------------------------------------------------

async fn admin_queue(State(state): State<AppState>, auth: Auth, Query(params): Params) -> Result<Reply> {
    let caller = auth.require(&[Role::Admin])?;
    let queue = state.platform().admin_queue(caller)?;
    paginate(&params, queue)
}

async fn admin_claim(State(state): State<AppState>, auth: Auth, Path(id): Path<String>) -> Result<Reply> {
    let caller = auth.require(&[Role::Admin])?;
    let view = state.platform().admin_claim(caller, &id)?;
    Ok(Reply::ok(&view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    decision: Decision,
    #[serde(default)]
    note: String,
    /// Explicit acceptance of the anchoring fee; required to approve.
    #[serde(default)]
    fee_approved: bool,
}

async fn admin_decide(State(state): State<AppState>, auth: Auth, Path(id): Path<String>, body: Bytes) -> Result<Reply> {
    let caller = auth.require(&[Role::Admin])?;
    let b: DecisionBody = parse_body(&body)?;
    let view = state.platform().admin_decide(caller, &id, b.decision, &b.note, b.fee_approved)?;
    Ok(Reply::ok(&view))
}

async fn review_content(State(state): State<AppState>, auth: Auth, Path(id): Path<String>) -> Result<Reply> {
    let caller = auth.require(&[Role::Admin])?;
    let bytes = state.platform().review_content(caller, &id)?;
    Ok(Reply::ok(&json!({ "certificate_id": id, "file_bytes": STANDARD.encode(bytes) })))
}

// ----- company access -------------------------------------------------------

async fn search(State(state): State<AppState>, auth: Auth, Path(share_code): Path<String>) -> Result<Reply> {
    let caller = auth.require(&[Role::Company])?;
    let summary = state.platform().search_by_share_code(caller, &share_code)?;
    Ok(Reply::ok(&summary))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AccessBody {
    share_code: String,
}

async fn request_access(State(state): State<AppState>, auth: Auth, body: Bytes) -> Result<Reply> {
    let caller = auth.require(&[Role::Company])?;
    let b: AccessBody = parse_body(&body)?;
    let request = state.platform().request_access(caller, &b.share_code)?;
    Ok(Reply::created(&request))
}

async fn list_access_requests(State(state): State<AppState>, auth: Auth, Query(params): Params) -> Result<Reply> {
    let caller = auth.require(&[Role::Company, Role::Applicant])?;
    let list = state.platform().list_access_requests(caller)?;
    paginate(&params, list)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AccessDecisionBody {
    decision: AccessDecision,
}

async fn decide_access(State(state): State<AppState>, auth: Auth, Path(id): Path<String>, body: Bytes) -> Result<Reply> {
    let caller = auth.require(&[Role::Applicant])?;
    let b: AccessDecisionBody = parse_body(&body)?;
    let request = state.platform().decide_access(caller, &id, b.decision)?;
    Ok(Reply::ok(&request))
}

// ----- notifications --------------------------------------------------------

async fn notifications(State(state): State<AppState>, Auth(caller): Auth, Query(params): Params) -> Result<Reply> {
    let list = state.platform().list_notifications(&caller);
    paginate(&params, list)
}

async fn mark_read(State(state): State<AppState>, Auth(caller): Auth, Path(id): Path<String>) -> Result<Reply> {
    let n = state.platform().mark_read(&caller, &id)?;
    Ok(Reply::ok(&n))
}

// ----- ledger (public) ------------------------------------------------------

async fn ledger_blocks(State(state): State<AppState>, Query(params): Params) -> Result<Reply> {
    let platform = state.platform();
    let ledger = platform.ledger();
    let height = ledger.height();
    let from = param(&params, "from")?.unwrap_or(0);
    let to = match param(&params, "to")? {
        Some(to) => to,
        None => height.min(from.saturating_add(DEFAULT_PAGE as u64 - 1)),
    };
    if from > to {
        return Err(ApiError::validation("from must not exceed to"));
    }
    if to - from >= MAX_PAGE as u64 {
        return Err(ApiError::validation(format!("at most {MAX_PAGE} blocks per request")));
    }
    let blocks: Vec<_> = (from..=to.min(height))
        .filter_map(|h| ledger.block(h))
        .map(block_json)
        .collect();
    Ok(Reply::ok(&json!({ "height": height, "blocks": blocks })))
}

async fn ledger_tx(State(state): State<AppState>, Path(tx_hash): Path<String>) -> Result<Reply> {
    let hash: Hash256 = tx_hash
        .parse()
        .map_err(|_| ApiError::validation("tx hash must be 64 lowercase hex characters"))?;
    let platform = state.platform();
    let ledger = platform.ledger();
    let (tx, loc) = ledger
        .tx(&hash)
        .ok_or_else(|| ApiError::not_found(format!("transaction {hash}")))?;
    let proof = ledger.inclusion_proof(&hash, loc.height)?;
    Ok(Reply::ok(&json!({
        "tx_hash": hash,
        "tx": tx.to_json(),
        "block_height": loc.height,
        "block_hash": ledger.block_hash(loc.height),
        "inclusion_proof": proof,
    })))
}

async fn ledger_scan(State(state): State<AppState>) -> Result<Reply> {
    let report = state.platform().scan_ledger()?;
    Ok(Reply::ok(&json!({
        "tampered": !report.is_clean(),
        "blocks_scanned": report.blocks_scanned,
        "violation": report.violation,
    })))
}
