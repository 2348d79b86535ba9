//! `verifi`: operator command line.
//!
//! Exit status is 0 on success, 1 on error and 2 when an audit finds
//! tampering or corruption.

use std::fs::{self, File, OpenOptions};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use verifi_api::{ApiConfig, DEFAULT_BIND};
use verifi_core::canonical;
use verifi_core::cas::ObjectStore;
use verifi_core::ledger::{self, parse_quorum_spec, Hash256, Ledger};
use verifi_core::workflow::{self, demo, DataDir};
use verifi_core::{Cid, Platform};

#[derive(Parser)]
#[command(name = "verifi", version, about = "Credential verification platform")]
struct Cli {
    /// Data directory.
    #[arg(long, global = true, env = "VERIFI_DATA_DIR", default_value = "./verifi-data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create the data directory layout, genesis block and token secret.
    Init {
        /// Validator quorum as `<k>of<n>`.
        #[arg(long, env = "VERIFI_QUORUM", default_value = "2of3")]
        quorum: String,
    },
    /// Run the REST service.
    Serve {
        #[arg(long, env = "VERIFI_BIND", default_value = DEFAULT_BIND)]
        bind: SocketAddr,
        /// Static web UI assets to serve at `/`.
        #[arg(long, env = "VERIFI_WEBUI_DIR")]
        webui_dir: Option<PathBuf>,
    },
    /// Account administration.
    Admin {
        #[command(subcommand)]
        command: AdminCommand,
    },
    /// Ledger audit and inspection.
    Ledger {
        #[command(subcommand)]
        command: LedgerCommand,
    },
    /// Object store tools.
    Cas {
        #[command(subcommand)]
        command: CasCommand,
    },
    /// Demo data.
    Demo {
        #[command(subcommand)]
        command: DemoCommand,
    },
}

#[derive(Subcommand)]
enum AdminCommand {
    /// Create an admin account and print its one-time password.
    Create {
        user_id: String,
        #[arg(long)]
        display_name: Option<String>,
    },
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Full tamper scan of the persisted chain.
    Verify,
    /// Print a block (by height) or transaction (by hash).
    Show { target: String },
}

#[derive(Subcommand)]
enum CasCommand {
    /// Store a file and print its CID.
    Add { file: PathBuf },
    /// Write the content under a CID to a file.
    Get { cid: String, out: PathBuf },
    /// Re-hash every stored object.
    Verify,
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Create demo accounts and certificates.
    Seed,
}

type CmdResult = Result<ExitCode, String>;

const TAMPERED: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let dir = DataDir::new(&cli.data_dir);
    match cli.command {
        Command::Init { quorum } => init(&dir, &quorum),
        Command::Serve { bind, webui_dir } => serve(&dir, bind, webui_dir),
        Command::Admin {
            command: AdminCommand::Create { user_id, display_name },
        } => admin_create(&dir, &user_id, display_name),
        Command::Ledger {
            command: LedgerCommand::Verify,
        } => ledger_verify(&dir),
        Command::Ledger {
            command: LedgerCommand::Show { target },
        } => ledger_show(&dir, &target),
        Command::Cas {
            command: CasCommand::Add { file },
        } => cas_add(&dir, &file),
        Command::Cas {
            command: CasCommand::Get { cid, out },
        } => cas_get(&dir, &cid, &out),
        Command::Cas {
            command: CasCommand::Verify,
        } => cas_verify(&dir),
        Command::Demo {
            command: DemoCommand::Seed,
        } => demo_seed(&dir),
    }
}

/// Exclusive advisory lock on the data directory, held until dropped.
fn lock(dir: &DataDir) -> Result<File, String> {
    require_initialized(dir)?;
    let path = dir.root.join(".lock");
    let file = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    file.try_lock()
        .map_err(|_| format!("{} is in use by another verifi process", dir.root.display()))?;
    Ok(file)
}

fn require_initialized(dir: &DataDir) -> Result<(), String> {
    if dir.is_initialized() {
        Ok(())
    } else {
        Err(format!("{} is not initialized; run `verifi init`", dir.root.display()))
    }
}

fn env_token_secret() -> Result<Option<Vec<u8>>, String> {
    match std::env::var("VERIFI_TOKEN_SECRET") {
        Ok(hex_secret) if !hex_secret.trim().is_empty() => hex::decode(hex_secret.trim())
            .map(Some)
            .map_err(|_| "VERIFI_TOKEN_SECRET must be hex".to_string()),
        _ => Ok(None),
    }
}

fn init(dir: &DataDir, quorum: &str) -> CmdResult {
    let (k, n) = parse_quorum_spec(quorum).map_err(|e| e.to_string())?;
    if dir.is_initialized() {
        return Err(format!("{} already initialized", dir.root.display()));
    }
    Platform::init(dir, k, n, env_token_secret()?).map_err(|e| e.to_string())?;
    println!("initialized: {}", dir.root.display());
    println!("quorum: {k}of{n}");
    Ok(ExitCode::SUCCESS)
}

fn serve(dir: &DataDir, bind: SocketAddr, webui_dir: Option<PathBuf>) -> CmdResult {
    let _lock = lock(dir)?;
    let config = ApiConfig {
        data_dir: dir.root.clone(),
        bind,
        token_secret: env_token_secret()?,
        webui_dir,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(verifi_api::serve(config)).map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn open_platform(dir: &DataDir) -> Result<Platform, String> {
    Platform::open(dir, env_token_secret()?).map_err(|e| e.to_string())
}

fn admin_create(dir: &DataDir, user_id: &str, display_name: Option<String>) -> CmdResult {
    let _lock = lock(dir)?;
    let mut platform = open_platform(dir)?;
    let name = display_name.unwrap_or_else(|| user_id.to_owned());
    let (view, password) = platform.create_admin(user_id, &name).map_err(|e| e.to_string())?;
    println!("user_id: {}", view.user_id);
    println!("role: admin");
    println!("one_time_password: {password}");
    Ok(ExitCode::SUCCESS)
}

fn ledger_verify(dir: &DataDir) -> CmdResult {
    require_initialized(dir)?;
    let report = ledger::scan_dir(&dir.ledger()).map_err(|e| e.to_string())?;
    println!("blocks_scanned: {}", report.blocks_scanned);
    match report.violation {
        None => {
            println!("status: clean");
            Ok(ExitCode::SUCCESS)
        }
        Some(v) => {
            println!("status: tampered");
            println!("violation: height={} kind={}", v.height, v.kind);
            let payload = format!("ledger verify: {} at height {}", v.kind, v.height);
            if let Err(e) = workflow::record_offline_alert(dir, &payload) {
                eprintln!("warning: could not record tamper alert: {e}");
            }
            Ok(ExitCode::from(TAMPERED))
        }
    }
}

fn ledger_show(dir: &DataDir, target: &str) -> CmdResult {
    require_initialized(dir)?;
    let ledger = Ledger::open(&dir.ledger()).map_err(|e| e.to_string())?;
    let value = if let Ok(height) = target.parse::<u64>() {
        ledger
            .block_summary(height)
            .ok_or_else(|| format!("no block at height {height}"))?
    } else {
        let hash: Hash256 = target
            .parse()
            .map_err(|_| format!("{target:?} is neither a height nor a 64-hex transaction hash"))?;
        let (tx, loc) = ledger.tx(&hash).ok_or_else(|| format!("unknown transaction {hash}"))?;
        serde_json::json!({
            "tx_hash": hash,
            "tx": tx.to_json(),
            "block_height": loc.height,
            "index": loc.index,
        })
    };
    println!("{}", canonical::value_to_text(&value));
    Ok(ExitCode::SUCCESS)
}

fn open_cas(dir: &DataDir) -> Result<ObjectStore, String> {
    require_initialized(dir)?;
    ObjectStore::open(dir.cas()).map_err(|e| e.to_string())
}

fn cas_add(dir: &DataDir, file: &Path) -> CmdResult {
    let _lock = lock(dir)?;
    let data = fs::read(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let cid = open_cas(dir)?.put(&data).map_err(|e| e.to_string())?;
    println!("{cid}");
    Ok(ExitCode::SUCCESS)
}

fn cas_get(dir: &DataDir, cid: &str, out: &Path) -> CmdResult {
    let _lock = lock(dir)?;
    let cid: Cid = cid.parse().map_err(|e: verifi_core::cas::CasError| e.to_string())?;
    let store = open_cas(dir)?;
    match store.get(&cid) {
        Ok(data) => {
            fs::write(out, data).map_err(|e| format!("{}: {e}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ verifi_core::cas::CasError::CorruptObject(_)) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(TAMPERED))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cas_verify(dir: &DataDir) -> CmdResult {
    let store = open_cas(dir)?;
    let count = store.object_count().map_err(|e| e.to_string())?;
    let report = store.verify().map_err(|e| e.to_string())?;
    println!("objects: {count}");
    for cid in &report.corrupt {
        println!("corrupt: {cid}");
    }
    for cid in &report.missing {
        println!("missing: {cid}");
    }
    if report.is_clean() {
        println!("status: clean");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("status: corrupt");
        Ok(ExitCode::from(TAMPERED))
    }
}

fn demo_seed(dir: &DataDir) -> CmdResult {
    let _lock = lock(dir)?;
    let mut platform = open_platform(dir)?;
    let seed = demo::seed_demo(&mut platform).map_err(|e| e.to_string())?;
    println!("admin: {} {}", seed.admin_id, seed.admin_password);
    for id in &seed.applicant_ids {
        println!("applicant: {id} {}", seed.password);
    }
    println!("company: {} {}", seed.company_id, seed.password);
    for c in &seed.certificates {
        println!("certificate: {} {} {}", c.certificate_id, c.applicant_id, c.share_code);
    }
    println!("granted_share_code: {}", seed.granted_share_code);
    Ok(ExitCode::SUCCESS)
}
