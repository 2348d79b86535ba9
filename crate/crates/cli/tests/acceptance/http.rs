//! HTTP criteria, driven against a `verifi serve` child process.

use std::collections::BTreeSet;
use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use rand::RngCore;
use reqwest::blocking::Client;
use reqwest::Method;
use serde_json::{json, Value};
use verifi_core::crypto::verify_sig;

use crate::support::{field, rng, sha256, stdout, verifi, VERIFI};
use crate::Outcome;

// ----- server harness -------------------------------------------------------

struct Server {
    child: Child,
    base: String,
    data: PathBuf,
    _tmp: tempfile::TempDir,
    admin_password: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn start_server() -> Server {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(verifi(&data, &["init"]).status.code(), Some(0), "init");
    let out = verifi(&data, &["admin", "create", "admin", "--display-name", "Platform Admin"]);
    assert_eq!(out.status.code(), Some(0), "admin create");
    let admin_password = field(&stdout(&out), "one_time_password").expect("one-time password");

    let port = free_port();
    let child = Command::new(VERIFI)
        .arg("--data-dir")
        .arg(&data)
        .args(["serve", "--bind", &format!("127.0.0.1:{port}")])
        .env_remove("VERIFI_TOKEN_SECRET")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn server");
    let server = Server {
        child,
        base: format!("http://127.0.0.1:{port}"),
        data,
        _tmp: tmp,
        admin_password,
    };
    let client = Client::new();
    let deadline = Instant::now() + Duration::from_secs(20);
    while Instant::now() < deadline {
        if client.get(format!("{}/healthz", server.base)).send().is_ok() {
            return server;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    panic!("server did not come up");
}

// ----- role-gate table ------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Who {
    Applicant,
    Company,
    Admin,
    Anonymous,
}

const EVERYONE: [Who; 4] = [Who::Applicant, Who::Company, Who::Admin, Who::Anonymous];

#[derive(Debug, Clone, Copy)]
enum Access {
    Public,
    Roles(&'static [Who]),
}

const AUTHENTICATED: &[Who] = &[Who::Applicant, Who::Company, Who::Admin];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Health,
    Register,
    Login,
    Upload,
    OwnCertificates,
    Content,
    Queue,
    Claim,
    Decide,
    Review,
    Search,
    RequestAccess,
    ListRequests,
    DecideAccess,
    Notifications,
    MarkRead,
    Blocks,
    Tx,
    Scan,
}

const ROUTES: [Route; 19] = [
    Route::Health,
    Route::Register,
    Route::Login,
    Route::Upload,
    Route::OwnCertificates,
    Route::Content,
    Route::Queue,
    Route::Claim,
    Route::Decide,
    Route::Review,
    Route::Search,
    Route::RequestAccess,
    Route::ListRequests,
    Route::DecideAccess,
    Route::Notifications,
    Route::MarkRead,
    Route::Blocks,
    Route::Tx,
    Route::Scan,
];

impl Route {
    fn access(self) -> Access {
        use Access::*;
        match self {
            Route::Health | Route::Register | Route::Login | Route::Blocks | Route::Tx | Route::Scan => Public,
            Route::Upload | Route::OwnCertificates | Route::DecideAccess => Roles(&[Who::Applicant]),
            Route::Content | Route::Search | Route::RequestAccess => Roles(&[Who::Company]),
            Route::Queue | Route::Claim | Route::Decide | Route::Review => Roles(&[Who::Admin]),
            Route::ListRequests => Roles(&[Who::Company, Who::Applicant]),
            Route::Notifications | Route::MarkRead => Roles(AUTHENTICATED),
        }
    }

    fn method(self) -> Method {
        match self {
            Route::Register
            | Route::Login
            | Route::Upload
            | Route::Claim
            | Route::Decide
            | Route::RequestAccess
            | Route::DecideAccess
            | Route::MarkRead => Method::POST,
            _ => Method::GET,
        }
    }

    /// Expected status class: 200 for any 2xx, else 401 or 403.
    fn class_for(self, who: Who) -> u16 {
        match self.access() {
            Access::Public => 200,
            Access::Roles(_) if who == Who::Anonymous => 401,
            Access::Roles(roles) if roles.contains(&who) => 200,
            Access::Roles(_) => 403,
        }
    }
}

fn class_of(status: u16) -> u16 {
    if (200..300).contains(&status) {
        200
    } else {
        status
    }
}

// ----- client ---------------------------------------------------------------

struct Api {
    client: Client,
    base: String,
    tokens: [(Who, String); 3],
    /// Every response body seen, for the secret-leak scan.
    bodies: Vec<String>,
    /// Disagreements between observed statuses and expectations.
    mismatches: Vec<String>,
}

impl Api {
    fn token(&self, who: Who) -> Option<&str> {
        self.tokens.iter().find(|(w, _)| *w == who).map(|(_, t)| t.as_str())
    }

    fn send(&mut self, method: Method, path: &str, who: Who, body: Option<&Value>) -> (u16, Value) {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(t) = self.token(who) {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.header("content-type", "application/json").body(b.to_string());
        }
        let resp = req.send().expect("request");
        let status = resp.status().as_u16();
        let text = resp.text().unwrap_or_default();
        let value = serde_json::from_str(&text).unwrap_or(Value::Null);
        self.bodies.push(text);
        (status, value)
    }

    /// Call a route and check the status against both the scenario's
    /// expectation and the role-gate table.
    fn expect(&mut self, route: Route, path: &str, who: Who, body: Option<Value>, expected: u16) -> Value {
        let (status, value) = self.send(route.method(), path, who, body.as_ref());
        if status != expected {
            self.mismatches
                .push(format!("{route:?} {path} as {who:?}: expected {expected}, got {status} {value}"));
        }
        let class = route.class_for(who);
        // An allowed caller may still be refused by a business rule, but only
        // where the scenario says so.
        let consistent = match class {
            200 => !matches!(status, 401 | 403) || status == expected,
            _ => status == class,
        };
        if !consistent {
            self.mismatches
                .push(format!("{route:?} {path} as {who:?}: status {status} contradicts role-gate class {class}"));
        }
        value
    }
}

fn login(client: &Client, base: &str, user: &str, password: &str) -> String {
    let resp: Value = client
        .post(format!("{base}/auth/login"))
        .json(&json!({ "user_id": user, "password": password }))
        .send()
        .expect("login")
        .json()
        .expect("login body");
    resp["token"].as_str().expect("token").to_owned()
}

fn register(client: &Client, base: &str, user: &str, role: &str, name: &str) -> u16 {
    client
        .post(format!("{base}/auth/register"))
        .json(&json!({ "user_id": user, "role": role, "display_name": name, "password": "correct horse" }))
        .send()
        .expect("register")
        .status()
        .as_u16()
}

fn connect(server: &Server) -> Api {
    let client = Client::builder().timeout(Duration::from_secs(60)).build().unwrap();
    let base = server.base.clone();
    register(&client, &base, "alice", "applicant", "Alice Applicant");
    register(&client, &base, "acme", "company", "Acme Hiring");
    let tokens = [
        (Who::Applicant, login(&client, &base, "alice", "correct horse")),
        (Who::Company, login(&client, &base, "acme", "correct horse")),
        (Who::Admin, login(&client, &base, "admin", &server.admin_password)),
    ];
    Api {
        client,
        base,
        tokens,
        bodies: Vec::new(),
        mismatches: Vec::new(),
    }
}

// ----- independent proof check ----------------------------------------------

fn hex32(v: &Value) -> [u8; 32] {
    hex::decode(v.as_str().expect("hex string")).unwrap().try_into().unwrap()
}

/// Re-derive every link of a proof bundle from its JSON alone, plus the
/// validator list on disk. Returns a description of the first failure.
fn check_proof(proof: &Value, validators_file: &Path) -> Result<(), String> {
    let tx = &proof["anchor_tx"];
    let tx_hash = sha256(&[serde_json::to_string(tx).unwrap().as_bytes()]);
    if hex::encode(tx_hash) != proof["tx_hash"] {
        return Err("tx hash does not match anchor bytes".into());
    }
    let mut unsigned = tx.clone();
    let sig = hex::decode(unsigned.as_object_mut().unwrap().remove("issuer_signature").unwrap().as_str().unwrap()).unwrap();
    let issuer = hex::decode(tx["issuer_pubkey"].as_str().unwrap()).unwrap();
    if verify_sig(&issuer, serde_json::to_string(&unsigned).unwrap().as_bytes(), &sig) != Ok(true) {
        return Err("issuer signature".into());
    }

    let mut acc = sha256(&[&[0x00], &tx_hash]);
    for step in proof["inclusion_proof"]["path"].as_array().unwrap() {
        let sibling = hex32(&step["sibling"]);
        acc = match step["side"].as_str().unwrap() {
            "left" => sha256(&[&[0x01], &sibling, &acc]),
            "right" => sha256(&[&[0x01], &acc, &sibling]),
            other => return Err(format!("side {other}")),
        };
    }
    let h = &proof["block_header"];
    if acc != hex32(&h["merkle_root"]) {
        return Err("inclusion proof does not reach merkle root".into());
    }

    let mut header = vec![h["version"].as_u64().unwrap() as u8];
    header.extend_from_slice(&h["height"].as_u64().unwrap().to_be_bytes());
    header.extend_from_slice(&hex32(&h["prev_hash"]));
    header.extend_from_slice(&hex32(&h["merkle_root"]));
    header.extend_from_slice(&h["timestamp"].as_u64().unwrap().to_be_bytes());
    header.extend_from_slice(&hex32(&h["proposer_pubkey"]));
    let block_hash = sha256(&[&header]);
    if hex::encode(block_hash) != proof["block_hash"] {
        return Err("header hash".into());
    }

    let validators: Value = serde_json::from_str(&fs::read_to_string(validators_file).unwrap()).unwrap();
    let members: BTreeSet<&str> = validators["validators"].as_array().unwrap().iter().filter_map(Value::as_str).collect();
    let mut signers = BTreeSet::new();
    for s in proof["quorum_signatures"].as_array().unwrap() {
        let pk = s["validator_pubkey"].as_str().unwrap();
        let sig = hex::decode(s["signature"].as_str().unwrap()).unwrap();
        if members.contains(pk) && verify_sig(&hex::decode(pk).unwrap(), &block_hash, &sig) == Ok(true) {
            signers.insert(pk.to_owned());
        }
    }
    if (signers.len() as u64) < validators["quorum"].as_u64().unwrap() {
        return Err(format!("{} valid validator signatures", signers.len()));
    }
    Ok(())
}

// ----- end-to-end scenario --------------------------------------------------

fn find_leaf(cas_dir: &Path, payload: &[u8]) -> Option<PathBuf> {
    for a in fs::read_dir(cas_dir).ok()?.flatten() {
        for b in fs::read_dir(a.path()).ok()?.flatten() {
            for f in fs::read_dir(b.path()).ok()?.flatten() {
                if fs::read(f.path()).ok()?.ends_with(payload) {
                    return Some(f.path());
                }
            }
        }
    }
    None
}

/// Secrets held on disk that must never appear in a response.
fn disk_secrets(data: &Path) -> Vec<String> {
    let mut out = vec![fs::read_to_string(data.join("token_secret")).unwrap().trim().to_owned()];
    for line in fs::read_to_string(data.join("db/users.log")).unwrap().lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        for key in ["password_hash", "keypair_seed", "vault_key"] {
            if let Some(s) = rec[key].as_str() {
                out.push(s.to_owned());
                if let Some(hash) = s.rsplit('$').next() {
                    out.push(hash.to_owned());
                }
            }
        }
    }
    let keys: Value = serde_json::from_str(&fs::read_to_string(data.join("ledger/keys.json")).unwrap()).unwrap();
    out.push(keys["proposer"].as_str().unwrap().to_owned());
    out.extend(keys["validators"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_owned()));
    out
}

fn string_values(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Array(a) => a.iter().for_each(|x| string_values(x, out)),
        Value::Object(o) => o.values().for_each(|x| string_values(x, out)),
        _ => {}
    }
}

pub fn end_to_end() -> Outcome {
    let server = start_server();
    let mut api = connect(&server);
    let mut steps = Vec::new();
    let mut fail = |what: String| steps.push(what);

    let mut file = vec![0u8; 5000];
    rng(6).fill_bytes(&mut file);
    api.expect(
        Route::Register,
        "/auth/register",
        Who::Anonymous,
        Some(json!({"user_id":"mallory","role":"admin","display_name":"M","password":"password123"})),
        403,
    );
    api.expect(Route::Login, "/auth/login", Who::Anonymous, Some(json!({"user_id":"alice","password":"wrong password"})), 401);

    let height0 = api.expect(Route::Health, "/healthz", Who::Anonymous, None, 200)["chain_height"].as_u64().unwrap();
    let upload = json!({"title":"B.Sc. Physics","issuer_name":"Example University","file_bytes":STANDARD.encode(&file)});
    api.expect(Route::Upload, "/certificates", Who::Company, Some(upload.clone()), 403);
    api.expect(Route::Upload, "/certificates", Who::Anonymous, Some(upload.clone()), 401);
    let receipt = api.expect(Route::Upload, "/certificates", Who::Applicant, Some(upload), 201);
    let cert = receipt["certificate_id"].as_str().unwrap_or_default().to_owned();

    let admin_inbox = api.expect(Route::Notifications, "/notifications", Who::Admin, None, 200);
    if !admin_inbox["items"].as_array().is_some_and(|a| a.iter().any(|n| n["kind"] == "VerificationRequested")) {
        fail("admin not notified of upload".into());
    }
    api.expect(Route::Queue, "/admin/queue", Who::Applicant, None, 403);
    let queue = api.expect(Route::Queue, "/admin/queue", Who::Admin, None, 200);
    if queue["total"] != 1 {
        fail(format!("queue total {}", queue["total"]));
    }
    api.expect(Route::Claim, &format!("/admin/queue/{cert}/claim"), Who::Admin, None, 200);
    let decision = format!("/admin/queue/{cert}/decision");
    let refused = api.expect(Route::Decide, &decision, Who::Admin, Some(json!({"decision":"approve","note":"registrar confirmed"})), 409);
    if refused["code"] != "FEE_NOT_APPROVED" {
        fail(format!("fee refusal code {}", refused["code"]));
    }
    api.expect(Route::Decide, &decision, Who::Company, Some(json!({"decision":"approve","fee_approved":true})), 403);
    let verified = api.expect(
        Route::Decide,
        &decision,
        Who::Admin,
        Some(json!({"decision":"approve","note":"registrar confirmed","fee_approved":true})),
        200,
    );
    if verified["state"] != "Verified" {
        fail(format!("state after approve {}", verified["state"]));
    }
    let share = verified["share_code"].as_str().unwrap_or_default().to_owned();
    let height1 = api.expect(Route::Health, "/healthz", Who::Anonymous, None, 200)["chain_height"].as_u64().unwrap();
    if height1 != height0 + 1 {
        fail(format!("chain height {height0} -> {height1}"));
    }
    api.expect(Route::Tx, &format!("/ledger/tx/{share}"), Who::Anonymous, None, 200);
    if fs::read_dir(server.data.join("db/pending")).unwrap().count() != 0 {
        fail("pending store not erased after decision".into());
    }

    api.expect(Route::Search, &format!("/search/{share}"), Who::Applicant, None, 403);
    let summary = api.expect(Route::Search, &format!("/search/{share}"), Who::Company, None, 200);
    if summary["state"] != "Verified" || summary["title"] != "B.Sc. Physics" {
        fail(format!("search summary {summary}"));
    }
    api.expect(Route::Search, &format!("/search/{}", "ab".repeat(32)), Who::Company, None, 404);

    let content_path = format!("/certificates/{share}/content");
    let denied = api.expect(Route::Content, &content_path, Who::Company, None, 403);
    if denied["code"] != "FORBIDDEN" {
        fail(format!("pre-grant view code {}", denied["code"]));
    }
    let request = api.expect(Route::RequestAccess, "/access-requests", Who::Company, Some(json!({"share_code": share})), 201);
    api.expect(Route::RequestAccess, "/access-requests", Who::Company, Some(json!({"share_code": share})), 409);
    let req_id = request["request_id"].as_str().unwrap_or_default().to_owned();
    let mine = api.expect(Route::ListRequests, "/access-requests", Who::Applicant, None, 200);
    if mine["total"] != 1 {
        fail(format!("applicant sees {} requests", mine["total"]));
    }
    let grant = format!("/access-requests/{req_id}/decision");
    api.expect(Route::DecideAccess, &grant, Who::Company, Some(json!({"decision":"grant"})), 403);
    let granted = api.expect(Route::DecideAccess, &grant, Who::Applicant, Some(json!({"decision":"grant"})), 200);
    if granted["state"] != "Granted" {
        fail(format!("request state {}", granted["state"]));
    }

    let content = api.expect(Route::Content, &content_path, Who::Company, None, 200);
    let bytes = content["file_bytes"].as_str().and_then(|b| STANDARD.decode(b).ok());
    if bytes.as_deref() != Some(&file[..]) {
        fail("viewed bytes differ from upload".into());
    }
    if let Err(e) = check_proof(&content["proof"], &server.data.join("ledger/validators.json")) {
        fail(format!("proof bundle: {e}"));
    }

    // Search output must reveal nothing about content.
    let leaf = find_leaf(&server.data.join("cas"), &file);
    let cid_hex = leaf
        .as_ref()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut fields = Vec::new();
    string_values(&summary, &mut fields);
    let enc_cid = content["proof"]["anchor_tx"]["encrypted_cid_body"].as_str().unwrap_or("-").to_owned();
    for v in &fields {
        let leaks = file.windows(v.len().max(1)).any(|w| w == v.as_bytes()) || *v == cid_hex || *v == enc_cid;
        if leaks {
            fail(format!("search field {v:?} leaks content"));
        }
    }

    // Corrupt the stored object: view must refuse and alert admins.
    match leaf {
        Some(path) => {
            let mut raw = fs::read(&path).unwrap();
            let last = raw.len() - 1;
            raw[last] ^= 0x40;
            fs::write(&path, raw).unwrap();
        }
        None => fail("object for uploaded file not found in store".into()),
    }
    let tampered = api.expect(Route::Content, &content_path, Who::Company, None, 500);
    if tampered["code"] != "TAMPER_DETECTED" {
        fail(format!("tampered view code {}", tampered["code"]));
    }
    let alerts = api.expect(Route::Notifications, "/notifications", Who::Admin, None, 200)["items"]
        .as_array()
        .map_or(0, |a| a.iter().filter(|n| n["kind"] == "TamperAlert").count());
    if alerts == 0 {
        fail("no TamperAlert delivered to admin".into());
    }
    let scan = api.expect(Route::Scan, "/ledger/scan", Who::Anonymous, None, 200);
    if scan["tampered"] != false {
        fail(format!("chain scan {scan}"));
    }

    let secrets = disk_secrets(&server.data);
    let leaked = api
        .bodies
        .iter()
        .filter(|b| secrets.iter().any(|s| s.len() >= 16 && b.contains(s.as_str())))
        .count();
    if leaked > 0 {
        fail(format!("{leaked} responses contain stored secrets"));
    }

    let calls = api.bodies.len();
    let mut problems = api.mismatches.clone();
    problems.extend(steps);
    let mut detail = format!("{calls} requests, {} problems across status codes, view bytes, proof bundle, tamper alert, secret leak and search field checks", problems.len());
    for p in problems.iter().take(4) {
        detail.push_str("; ");
        detail.push_str(p);
    }
    Outcome::new(problems.is_empty(), detail)
}

// ----- role-gate matrix -----------------------------------------------------

/// Fresh fixtures created through the API as their rightful owners.
struct Fixtures<'a> {
    api: &'a mut Api,
    counter: u32,
}

impl Fixtures<'_> {
    fn ok(&mut self, method: Method, path: &str, who: Who, body: Option<Value>) -> Value {
        let (status, value) = self.api.send(method, path, who, body.as_ref());
        assert!((200..300).contains(&status), "fixture {path} as {who:?}: {status} {value}");
        value
    }

    fn pending(&mut self) -> String {
        self.counter += 1;
        let body = json!({"title": format!("Cert {}", self.counter), "issuer_name": "Uni", "file_bytes": STANDARD.encode(format!("file {}", self.counter))});
        self.ok(Method::POST, "/certificates", Who::Applicant, Some(body))["certificate_id"]
            .as_str()
            .unwrap()
            .to_owned()
    }

    fn claimed(&mut self) -> String {
        let id = self.pending();
        self.ok(Method::POST, &format!("/admin/queue/{id}/claim"), Who::Admin, None);
        id
    }

    fn verified(&mut self) -> String {
        let id = self.claimed();
        let v = self.ok(
            Method::POST,
            &format!("/admin/queue/{id}/decision"),
            Who::Admin,
            Some(json!({"decision":"approve","fee_approved":true})),
        );
        v["share_code"].as_str().unwrap().to_owned()
    }

    fn pending_request(&mut self) -> String {
        let share = self.verified();
        let r = self.ok(Method::POST, "/access-requests", Who::Company, Some(json!({"share_code": share})));
        r["request_id"].as_str().unwrap().to_owned()
    }

    fn granted(&mut self) -> String {
        let share = self.verified();
        let r = self.ok(Method::POST, "/access-requests", Who::Company, Some(json!({"share_code": share})));
        let id = r["request_id"].as_str().unwrap().to_owned();
        self.ok(Method::POST, &format!("/access-requests/{id}/decision"), Who::Applicant, Some(json!({"decision":"grant"})));
        share
    }

    fn own_notification(&mut self, who: Who) -> String {
        let as_who = if who == Who::Anonymous { Who::Applicant } else { who };
        let list = self.ok(Method::GET, "/notifications", as_who, None);
        list["items"][0]["notification_id"].as_str().expect("fixture notification").to_owned()
    }

    /// Path and body for one cell, set up so that an allowed caller succeeds.
    fn cell(&mut self, route: Route, who: Who) -> (String, Option<Value>) {
        self.counter += 1;
        let n = self.counter;
        match route {
            Route::Health => ("/healthz".into(), None),
            Route::Register => (
                "/auth/register".into(),
                Some(json!({"user_id": format!("user{n}"), "role": "applicant", "display_name": "U", "password": "password123"})),
            ),
            Route::Login => ("/auth/login".into(), Some(json!({"user_id":"alice","password":"correct horse"}))),
            Route::Upload => (
                "/certificates".into(),
                Some(json!({"title":"T","issuer_name":"I","file_bytes":STANDARD.encode(format!("upload {n}"))})),
            ),
            Route::OwnCertificates => ("/certificates".into(), None),
            Route::Content => (format!("/certificates/{}/content", self.granted()), None),
            Route::Queue => ("/admin/queue".into(), None),
            Route::Claim => (format!("/admin/queue/{}/claim", self.pending()), None),
            Route::Decide => (
                format!("/admin/queue/{}/decision", self.claimed()),
                Some(json!({"decision":"approve","fee_approved":true})),
            ),
            Route::Review => (format!("/admin/queue/{}/content", self.pending()), None),
            Route::Search => (format!("/search/{}", self.verified()), None),
            Route::RequestAccess => ("/access-requests".into(), Some(json!({"share_code": self.verified()}))),
            Route::ListRequests => ("/access-requests".into(), None),
            Route::DecideAccess => (
                format!("/access-requests/{}/decision", self.pending_request()),
                Some(json!({"decision":"grant"})),
            ),
            Route::Notifications => ("/notifications".into(), None),
            Route::MarkRead => (format!("/notifications/{}/read", self.own_notification(who)), None),
            Route::Blocks => ("/ledger/blocks?from=0&to=5".into(), None),
            Route::Tx => (format!("/ledger/tx/{}", self.verified()), None),
            Route::Scan => ("/ledger/scan".into(), None),
        }
    }
}

pub fn role_gate_matrix() -> Outcome {
    let server = start_server();
    let mut api = connect(&server);
    // Give every role at least one notification of its own.
    {
        let mut fx = Fixtures { api: &mut api, counter: 0 };
        fx.granted();
    }
    let mut fx = Fixtures { api: &mut api, counter: 1000 };
    let mut cells = 0;
    let mut wrong = Vec::new();
    for route in ROUTES {
        for who in EVERYONE {
            let (path, body) = fx.cell(route, who);
            let (status, value) = fx.api.send(route.method(), &path, who, body.as_ref());
            cells += 1;
            let expected = route.class_for(who);
            if class_of(status) != expected {
                wrong.push(format!("{route:?} as {who:?}: expected {expected}, got {status} {value}"));
            }
        }
    }
    let mut detail = format!("{}/{cells} cells match ({} routes x 4 callers)", cells - wrong.len(), ROUTES.len());
    for w in wrong.iter().take(4) {
        detail.push_str("; ");
        detail.push_str(w);
    }
    Outcome::new(wrong.is_empty(), detail)
}
