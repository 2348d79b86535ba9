//! Tamper-detection latency: a 10,000-block chain of 10 transactions each,
//! one random byte of the persisted chain mutated per trial, and the
//! `ledger verify` command timed end to end as a separate process.

use std::fs::{self, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use verifi_core::crypto::{Ciphertext, KeyPair};
use verifi_core::ledger::{scan::frame_spans, AnchorTx, Ledger, CHAIN_FILE};
use verifi_core::workflow::DataDir;
use verifi_core::Platform;

use crate::support::{field, rng, stdout, verifi};
use crate::Outcome;

const BLOCKS: u64 = 10_000;
const TXS_PER_BLOCK: usize = 10;
const TRIALS: usize = 100;
const LIMIT: Duration = Duration::from_secs(1);

/// Build a `blocks`-block chain (plus genesis) with `txs` anchors per block.
pub fn build_chain(dir: &DataDir, blocks: u64, txs: usize) {
    Platform::init(dir, 2, 3, None).expect("init");
    let mut ledger = Ledger::open(&dir.ledger()).expect("open ledger");
    ledger.set_durable(false);
    let issuer = KeyPair::from_seed(&[7; 32]);
    let total_fee = blocks * txs as u64 * 22_000;
    ledger.credit_account(issuer.public_key(), total_fee).expect("credit");
    let mut n = 0u64;
    for _ in 0..blocks {
        for _ in 0..txs {
            let mut nonce = [0u8; 12];
            nonce[4..].copy_from_slice(&n.to_be_bytes());
            let ct = Ciphertext {
                nonce,
                body: n.to_be_bytes().repeat(6),
            };
            let tx = AnchorTx::new_signed(
                &format!("applicant-{}", n % 97),
                &format!("cert-{n:08}"),
                &ct,
                &issuer,
                1_700_000_000 + n,
            );
            ledger.submit_tx(tx, true).expect("submit");
            n += 1;
        }
        ledger.propose_and_commit_block().expect("commit");
    }
}

fn write_byte(path: &Path, offset: usize, value: u8) {
    let mut f = OpenOptions::new().write(true).open(path).expect("open chain");
    f.seek(SeekFrom::Start(offset as u64)).unwrap();
    f.write_all(&[value]).unwrap();
    f.sync_data().unwrap();
}

pub fn run() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = DataDir::new(tmp.path().join("data"));
    let built = Instant::now();
    build_chain(&dir, BLOCKS, TXS_PER_BLOCK);
    let build_secs = built.elapsed().as_secs_f64();

    let chain_path = dir.ledger().join(CHAIN_FILE);
    let original = fs::read(&chain_path).unwrap();
    let spans = frame_spans(&original);
    assert_eq!(spans.len() as u64, BLOCKS + 1, "frame count");

    let clean = verifi(&dir.root, &["ledger", "verify"]);
    if clean.status.code() != Some(0) {
        return Outcome::new(false, format!("honest chain not clean: {}", stdout(&clean)));
    }

    let mut rng = rng(1);
    let mut correct = 0;
    let mut max = Duration::ZERO;
    let mut total = Duration::ZERO;
    let mut failures = Vec::new();
    for trial in 0..TRIALS {
        let offset = rng.gen_range(0..original.len());
        let expected = spans.partition_point(|&(_, end)| end <= offset) as u64;
        let flip: u8 = rng.gen_range(1..=255);
        write_byte(&chain_path, offset, original[offset] ^ flip);

        let start = Instant::now();
        let out = verifi(&dir.root, &["ledger", "verify"]);
        let elapsed = start.elapsed();
        write_byte(&chain_path, offset, original[offset]);

        max = max.max(elapsed);
        total += elapsed;
        let text = stdout(&out);
        let reported = field(&text, "violation").and_then(|v| {
            v.split_whitespace()
                .find_map(|kv| kv.strip_prefix("height="))
                .and_then(|h| h.parse::<u64>().ok())
        });
        if out.status.code() == Some(2) && reported == Some(expected) && elapsed < LIMIT {
            correct += 1;
        } else if failures.len() < 3 {
            failures.push(format!(
                "trial {trial}: offset {offset} expected height {expected}, got {reported:?} exit {:?} in {:.3}s",
                out.status.code(),
                elapsed.as_secs_f64()
            ));
        }
    }
    assert_eq!(fs::read(&chain_path).unwrap(), original, "chain restored");

    let mut detail = format!(
        "{correct}/{TRIALS} localized under {:.1}s; max {:.3}s mean {:.3}s; {} bytes, build {:.0}s",
        LIMIT.as_secs_f64(),
        max.as_secs_f64(),
        total.as_secs_f64() / TRIALS as f64,
        original.len(),
        build_secs
    );
    for f in failures {
        detail.push_str("; ");
        detail.push_str(&f);
    }
    Outcome::new(correct == TRIALS, detail)
}
