//! Hash-chained, quorum-signed ledger of certificate anchors.
//!
//! A single proposer drains the pending pool into blocks of at most
//! [`BLOCK_CAPACITY`] transactions. In-process validators re-validate each
//! candidate block and sign its header hash; a block is appended only with
//! signatures from at least `quorum` distinct members of the [`ValidatorSet`].
//!
//! Persisted layout under the ledger directory:
//!
//! - `chain.log`: records framed as `u32be(len) || block bytes`
//! - `validators.json`: validator public keys and quorum
//! - `keys.json`: proposer and validator seeds for the simulated validators
//! - `accounts.log`: fee account credits, one canonical record per line

mod block;
pub mod merkle;
pub mod scan;
mod tx;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::rngs::OsRng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;
use thiserror::Error;

pub use block::{header_hash, Block, BlockHeader, RawBlock, ValidatorSignature, BLOCK_VERSION, HEADER_LEN};
pub use merkle::{merkle_root, verify_inclusion, InclusionProof, ProofStep, Side};
pub use scan::{scan_chain_bytes, TamperKind, TamperReport, Violation};
pub use tx::{fee_for, AnchorTx, BASE_FEE, FEE_PER_BYTE, TX_TYPE_ANCHOR};

use crate::canonical;
use crate::crypto::{self, KeyPair};

pub const BLOCK_CAPACITY: usize = 100;
/// Units credited to an issuer's fee account when it is opened.
pub const INITIAL_ISSUER_BALANCE: u64 = 10_000_000;

pub const CHAIN_FILE: &str = "chain.log";
const VALIDATORS_FILE: &str = "validators.json";
const KEYS_FILE: &str = "keys.json";
const ACCOUNTS_FILE: &str = "accounts.log";

/// 32-byte SHA-256 output, rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hash256(pub [u8; 32]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", self.to_hex())
    }
}

impl FromStr for Hash256 {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crypto::decode_fixed(s)
            .map(Hash256)
            .ok_or(LedgerError::Decode("hash must be 64 lowercase hex characters"))
    }
}

impl Serialize for Hash256 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash256 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("fee not approved by the issuer")]
    FeeNotApproved,
    #[error("insufficient balance: need {needed}, have {available}")]
    InsufficientBalance { needed: u64, available: u64 },
    #[error("issuer signature does not verify")]
    BadSignature,
    #[error("transaction {0} already pending or included")]
    DuplicateTx(Hash256),
    #[error("invalid transaction: {0}")]
    InvalidTx(&'static str),
    #[error("no pending transactions")]
    EmptyPool,
    #[error("quorum not reached: {0}")]
    QuorumNotReached(String),
    #[error("block rejected: {0}")]
    InvalidBlock(String),
    #[error("unknown transaction {0}")]
    UnknownTx(Hash256),
    #[error("unknown block height {0}")]
    UnknownBlock(u64),
    #[error("decode error: {0}")]
    Decode(&'static str),
    #[error("ledger already initialized")]
    AlreadyInitialized,
    #[error("ledger not initialized")]
    NotInitialized,
    #[error("ledger configuration: {0}")]
    Config(String),
    #[error("ledger i/o: {0}")]
    Io(#[from] io::Error),
}

/// Validator public keys and the number of distinct signatures a block needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorSet {
    validators: Vec<[u8; 32]>,
    quorum: usize,
}

impl ValidatorSet {
    pub fn new(validators: Vec<[u8; 32]>, quorum: usize) -> Result<Self, LedgerError> {
        let distinct: HashSet<_> = validators.iter().collect();
        if distinct.len() != validators.len() {
            return Err(LedgerError::Config("validator keys must be distinct".into()));
        }
        if quorum == 0 || quorum > validators.len() {
            return Err(LedgerError::Config(format!(
                "quorum {quorum} out of range for {} validators",
                validators.len()
            )));
        }
        Ok(Self { validators, quorum })
    }

    pub fn validators(&self) -> &[[u8; 32]] {
        &self.validators
    }

    pub fn quorum(&self) -> usize {
        self.quorum
    }

    pub fn is_member(&self, key: &[u8; 32]) -> bool {
        self.validators.contains(key)
    }

    /// At least `quorum` signers, all distinct members. Says nothing about
    /// whether the signatures verify.
    pub fn has_quorum_of_members<'a>(&self, signers: impl Iterator<Item = &'a [u8; 32]>) -> bool {
        let mut seen = HashSet::new();
        for key in signers {
            if !self.is_member(key) || !seen.insert(*key) {
                return false;
            }
        }
        seen.len() >= self.quorum
    }

    /// Membership check plus verification of every signature over `header_hash`.
    pub fn check_quorum(&self, header_hash: &Hash256, signatures: &[ValidatorSignature]) -> bool {
        self.has_quorum_of_members(signatures.iter().map(|s| &s.validator_pubkey))
            && signatures.iter().all(|s| {
                crypto::verify_sig(&s.validator_pubkey, header_hash.as_bytes(), &s.signature)
                    .unwrap_or(false)
            })
    }

    /// Read `validators.json` from a ledger directory.
    pub fn load(ledger_dir: &Path) -> Result<Self, LedgerError> {
        let path = ledger_dir.join(VALIDATORS_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(LedgerError::NotInitialized),
            Err(e) => return Err(e.into()),
        };
        let file: ValidatorsFile =
            serde_json::from_str(&text).map_err(|e| LedgerError::Config(e.to_string()))?;
        let keys = file
            .validators
            .iter()
            .map(|h| crypto::decode_fixed(h).ok_or_else(|| LedgerError::Config("validator key".into())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(keys, file.quorum)
    }
}

/// Parse a quorum spec such as `2of3` into `(quorum, validators)`.
pub fn parse_quorum_spec(spec: &str) -> Result<(usize, usize), LedgerError> {
    let bad = || LedgerError::Config(format!("quorum spec {spec:?} is not of the form <k>of<n>"));
    let (k, n) = spec.split_once("of").ok_or_else(bad)?;
    let k: usize = k.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if k == 0 || k > n {
        return Err(bad());
    }
    Ok((k, n))
}

#[derive(Serialize, Deserialize)]
struct ValidatorsFile {
    quorum: usize,
    validators: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct KeysFile {
    proposer: String,
    validators: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct AccountCredit {
    owner: String,
    units: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TxReceipt {
    pub tx_hash: Hash256,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxLocation {
    pub height: u64,
    pub index: usize,
}

/// Deliberate proposer misbehaviour, for exercising validator re-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalFault {
    CorruptMerkleRoot,
    WrongPrevHash,
}

#[derive(Debug, Clone)]
enum ChainStorage {
    Disk { dir: PathBuf, durable: bool },
    Memory(Vec<u8>),
}

impl ChainStorage {
    fn append(&mut self, frame: &[u8]) -> io::Result<()> {
        match self {
            ChainStorage::Memory(buf) => {
                buf.extend_from_slice(frame);
                Ok(())
            }
            ChainStorage::Disk { dir, durable } => {
                let mut file = OpenOptions::new().append(true).open(dir.join(CHAIN_FILE))?;
                file.write_all(frame)?;
                if *durable {
                    file.sync_data()?;
                }
                Ok(())
            }
        }
    }

    fn read_all(&self) -> io::Result<Vec<u8>> {
        match self {
            ChainStorage::Memory(buf) => Ok(buf.clone()),
            ChainStorage::Disk { dir, .. } => fs::read(dir.join(CHAIN_FILE)),
        }
    }

    fn read_at(&self, offset: u64, len: usize) -> io::Result<Vec<u8>> {
        match self {
            ChainStorage::Memory(buf) => buf
                .get(offset as usize..offset as usize + len)
                .map(<[u8]>::to_vec)
                .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "record past end")),
            ChainStorage::Disk { dir, .. } => {
                let mut file = fs::File::open(dir.join(CHAIN_FILE))?;
                file.seek(SeekFrom::Start(offset))?;
                let mut out = vec![0u8; len];
                file.read_exact(&mut out)?;
                Ok(out)
            }
        }
    }

    /// Mutable access to the in-memory chain bytes, for fault injection.
    fn memory_mut(&mut self) -> Option<&mut Vec<u8>> {
        match self {
            ChainStorage::Memory(buf) => Some(buf),
            ChainStorage::Disk { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ledger {
    storage: ChainStorage,
    blocks: Vec<Block>,
    block_hashes: Vec<Hash256>,
    /// Offset and length of each block's record (excluding its length prefix).
    records: Vec<(u64, usize)>,
    end_offset: u64,
    tx_index: HashMap<Hash256, TxLocation>,
    pending: VecDeque<AnchorTx>,
    pending_hashes: HashSet<Hash256>,
    validators: ValidatorSet,
    validator_keys: Vec<KeyPair>,
    proposer: KeyPair,
    credits: BTreeMap<[u8; 32], u64>,
    debits: BTreeMap<[u8; 32], u64>,
}

impl Ledger {
    fn fresh(storage: ChainStorage, validator_keys: Vec<KeyPair>, quorum: usize, proposer: KeyPair) -> Result<Self, LedgerError> {
        let validators = ValidatorSet::new(validator_keys.iter().map(KeyPair::public_key).collect(), quorum)?;
        Ok(Self {
            storage,
            blocks: Vec::new(),
            block_hashes: Vec::new(),
            records: Vec::new(),
            end_offset: 0,
            tx_index: HashMap::new(),
            pending: VecDeque::new(),
            pending_hashes: HashSet::new(),
            validators,
            validator_keys,
            proposer,
            credits: BTreeMap::new(),
            debits: BTreeMap::new(),
        })
    }

    /// In-memory ledger with `n` fresh validators and the genesis block.
    pub fn in_memory(quorum: usize, n: usize) -> Result<Self, LedgerError> {
        let keys = (0..n).map(|_| KeyPair::generate(&mut OsRng)).collect();
        let mut ledger = Self::fresh(ChainStorage::Memory(Vec::new()), keys, quorum, KeyPair::generate(&mut OsRng))?;
        ledger.write_genesis()?;
        Ok(ledger)
    }

    /// Create a new ledger directory: keys, validator set and genesis block.
    pub fn init(dir: &Path, quorum: usize, n: usize) -> Result<Self, LedgerError> {
        if dir.join(CHAIN_FILE).exists() {
            return Err(LedgerError::AlreadyInitialized);
        }
        fs::create_dir_all(dir)?;
        let keys: Vec<KeyPair> = (0..n).map(|_| KeyPair::generate(&mut OsRng)).collect();
        let proposer = KeyPair::generate(&mut OsRng);
        let mut ledger = Self::fresh(
            ChainStorage::Disk {
                dir: dir.to_path_buf(),
                durable: true,
            },
            keys,
            quorum,
            proposer,
        )?;

        let validators = ValidatorsFile {
            quorum,
            validators: ledger.validators.validators.iter().map(hex::encode).collect(),
        };
        write_new(&dir.join(VALIDATORS_FILE), canonical::to_text(&validators).expect("serializable"))?;
        let keys_file = KeysFile {
            proposer: hex::encode(ledger.proposer.secret_seed()),
            validators: ledger
                .validator_keys
                .iter()
                .map(|k| hex::encode(k.secret_seed()))
                .collect(),
        };
        write_new(&dir.join(KEYS_FILE), canonical::to_text(&keys_file).expect("serializable"))?;
        fs::File::create(dir.join(ACCOUNTS_FILE))?;
        fs::File::create(dir.join(CHAIN_FILE))?;
        ledger.write_genesis()?;
        Ok(ledger)
    }

    /// Load an existing ledger directory, decoding every block.
    pub fn open(dir: &Path) -> Result<Self, LedgerError> {
        if !dir.join(CHAIN_FILE).exists() {
            return Err(LedgerError::NotInitialized);
        }
        let validators = ValidatorSet::load(dir)?;
        let keys: KeysFile = serde_json::from_str(&fs::read_to_string(dir.join(KEYS_FILE))?)
            .map_err(|e| LedgerError::Config(e.to_string()))?;
        let validator_keys = keys
            .validators
            .iter()
            .map(|s| KeyPair::from_seed_hex(s).map_err(|e| LedgerError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let proposer = KeyPair::from_seed_hex(&keys.proposer).map_err(|e| LedgerError::Config(e.to_string()))?;
        let mut ledger = Self::fresh(
            ChainStorage::Disk {
                dir: dir.to_path_buf(),
                durable: true,
            },
            validator_keys,
            validators.quorum,
            proposer,
        )?;
        if ledger.validators != validators {
            return Err(LedgerError::Config("validator keys do not match validators.json".into()));
        }

        for line in fs::read_to_string(dir.join(ACCOUNTS_FILE))?.lines() {
            let credit: AccountCredit =
                serde_json::from_str(line).map_err(|e| LedgerError::Config(e.to_string()))?;
            let owner = crypto::decode_fixed(&credit.owner).ok_or_else(|| LedgerError::Config("account owner".into()))?;
            *ledger.credits.entry(owner).or_default() += credit.units;
        }

        let data = ledger.storage.read_all()?;
        let spans = scan::frame_spans(&data);
        let framed_end = spans.last().map_or(0, |s| s.1);
        if framed_end != data.len() {
            return Err(LedgerError::Decode("chain file has a truncated record"));
        }
        for (start, end) in spans {
            let block = Block::decode(&data[start + 4..end])?;
            ledger.index_block(block, (start + 4) as u64, end - start - 4);
        }
        ledger.end_offset = data.len() as u64;
        if ledger.blocks.first().map(|b| b.header.clone()) != Some(BlockHeader::genesis()) {
            return Err(LedgerError::Decode("chain does not start with the genesis block"));
        }
        Ok(ledger)
    }

    /// Skip `fsync` on commit. For bulk generation in tests and benchmarks.
    pub fn set_durable(&mut self, on: bool) {
        if let ChainStorage::Disk { durable, .. } = &mut self.storage {
            *durable = on;
        }
    }

    fn write_genesis(&mut self) -> Result<(), LedgerError> {
        self.persist(Block::genesis())
    }

    fn persist(&mut self, block: Block) -> Result<(), LedgerError> {
        let record = block.encode();
        let mut frame = Vec::with_capacity(4 + record.len());
        frame.extend_from_slice(&(record.len() as u32).to_be_bytes());
        frame.extend_from_slice(&record);
        self.storage.append(&frame)?;
        let offset = self.end_offset + 4;
        self.end_offset += frame.len() as u64;
        self.index_block(block, offset, record.len());
        Ok(())
    }

    fn index_block(&mut self, block: Block, offset: u64, len: usize) {
        let height = block.header.height;
        for (index, tx) in block.txs.iter().enumerate() {
            self.tx_index.insert(tx.tx_hash(), TxLocation { height, index });
            *self.debits.entry(tx.issuer_pubkey).or_default() += tx.fee_units;
        }
        self.block_hashes.push(block.hash());
        self.records.push((offset, len));
        self.blocks.push(block);
    }

    pub fn validators(&self) -> &ValidatorSet {
        &self.validators
    }

    pub fn proposer_pubkey(&self) -> [u8; 32] {
        self.proposer.public_key()
    }

    /// Height of the tip block (genesis is 0).
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip_hash(&self) -> Hash256 {
        *self.block_hashes.last().expect("genesis always present")
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(height as usize)
    }

    pub fn block_hash(&self, height: u64) -> Option<Hash256> {
        self.block_hashes.get(height as usize).copied()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn find_tx(&self, tx_hash: &Hash256) -> Option<TxLocation> {
        self.tx_index.get(tx_hash).copied()
    }

    pub fn tx(&self, tx_hash: &Hash256) -> Option<(&AnchorTx, TxLocation)> {
        let loc = self.find_tx(tx_hash)?;
        Some((&self.blocks[loc.height as usize].txs[loc.index], loc))
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Credit an issuer's fee account.
    pub fn credit_account(&mut self, owner: [u8; 32], units: u64) -> Result<(), LedgerError> {
        if let ChainStorage::Disk { dir, .. } = &self.storage {
            let line = canonical::to_text(&AccountCredit {
                owner: hex::encode(owner),
                units,
            })
            .expect("serializable");
            let mut file = OpenOptions::new().append(true).create(true).open(dir.join(ACCOUNTS_FILE))?;
            file.write_all(format!("{line}\n").as_bytes())?;
        }
        *self.credits.entry(owner).or_default() += units;
        Ok(())
    }

    /// Committed balance: credits minus fees of included transactions.
    pub fn balance(&self, owner: &[u8; 32]) -> u64 {
        let credit = self.credits.get(owner).copied().unwrap_or(0);
        credit.saturating_sub(self.debits.get(owner).copied().unwrap_or(0))
    }

    /// Sum of fees debited for included transactions, across all accounts.
    pub fn total_debited(&self) -> u64 {
        self.debits.values().sum()
    }

    fn pending_fees(&self, owner: &[u8; 32]) -> u64 {
        self.pending
            .iter()
            .filter(|t| &t.issuer_pubkey == owner)
            .map(|t| t.fee_units)
            .sum()
    }

    /// Admit a signed anchor into the pending pool.
    pub fn submit_tx(&mut self, tx: AnchorTx, fee_approved: bool) -> Result<TxReceipt, LedgerError> {
        if !fee_approved {
            return Err(LedgerError::FeeNotApproved);
        }
        tx.validate()?;
        if !tx.verify_signature() {
            return Err(LedgerError::BadSignature);
        }
        let tx_hash = tx.tx_hash();
        if self.pending_hashes.contains(&tx_hash) || self.tx_index.contains_key(&tx_hash) {
            return Err(LedgerError::DuplicateTx(tx_hash));
        }
        let available = self
            .balance(&tx.issuer_pubkey)
            .saturating_sub(self.pending_fees(&tx.issuer_pubkey));
        if available < tx.fee_units {
            return Err(LedgerError::InsufficientBalance {
                needed: tx.fee_units,
                available,
            });
        }
        self.pending_hashes.insert(tx_hash);
        self.pending.push_back(tx);
        Ok(TxReceipt { tx_hash })
    }

    /// Drop a transaction from the pending pool. Returns whether it was there.
    pub fn cancel_pending(&mut self, tx_hash: &Hash256) -> bool {
        if !self.pending_hashes.remove(tx_hash) {
            return false;
        }
        self.pending.retain(|t| t.tx_hash() != *tx_hash);
        true
    }

    pub fn propose_and_commit_block(&mut self) -> Result<Block, LedgerError> {
        self.commit_with_fault(None)
    }

    /// Propose the next block, optionally corrupted, and commit it if the
    /// validators reach quorum.
    pub fn commit_with_fault(&mut self, fault: Option<ProposalFault>) -> Result<Block, LedgerError> {
        if self.pending.is_empty() {
            return Err(LedgerError::EmptyPool);
        }
        let take = self.pending.len().min(BLOCK_CAPACITY);
        let txs: Vec<AnchorTx> = self.pending.iter().take(take).cloned().collect();
        let tip = &self.blocks[self.blocks.len() - 1].header;
        let mut header = BlockHeader {
            version: BLOCK_VERSION,
            height: tip.height + 1,
            prev_hash: self.tip_hash(),
            merkle_root: merkle_root(&txs.iter().map(AnchorTx::tx_hash).collect::<Vec<_>>()),
            timestamp: crate::unix_now().max(tip.timestamp),
            proposer_pubkey: self.proposer.public_key(),
        };
        match fault {
            Some(ProposalFault::CorruptMerkleRoot) => header.merkle_root.0[0] ^= 0xff,
            Some(ProposalFault::WrongPrevHash) => header.prev_hash.0[31] ^= 0x01,
            None => {}
        }
        let mut block = Block {
            header,
            txs,
            validator_signatures: Vec::new(),
        };

        let hash = block.hash();
        for validator in &self.validator_keys {
            if block.validator_signatures.len() >= self.validators.quorum {
                break;
            }
            // Each validator re-derives the block independently before signing.
            self.validate_contents(&block)
                .map_err(|reason| LedgerError::QuorumNotReached(format!(
                    "validator {} refused: {reason}",
                    &hex::encode(validator.public_key())[..16]
                )))?;
            block.validator_signatures.push(ValidatorSignature {
                validator_pubkey: validator.public_key(),
                signature: validator.sign(hash.as_bytes()),
            });
        }

        self.append_block(block.clone())?;
        for tx in self.pending.drain(..take) {
            self.pending_hashes.remove(&tx.tx_hash());
        }
        Ok(block)
    }

    /// Everything about a candidate block except its signatures.
    fn validate_contents(&self, block: &Block) -> Result<(), String> {
        let header = &block.header;
        if header.version != BLOCK_VERSION {
            return Err("unknown block version".into());
        }
        if header.height != self.height() + 1 {
            return Err(format!("height {} does not extend tip {}", header.height, self.height()));
        }
        if header.prev_hash != self.tip_hash() {
            return Err("prev_hash does not match tip".into());
        }
        if block.txs.is_empty() || block.txs.len() > BLOCK_CAPACITY {
            return Err(format!("block carries {} transactions", block.txs.len()));
        }
        let hashes = block.tx_hashes();
        if merkle_root(&hashes) != header.merkle_root {
            return Err("merkle root mismatch".into());
        }
        let mut seen = HashSet::new();
        for h in &hashes {
            if !seen.insert(*h) || self.tx_index.contains_key(h) {
                return Err(format!("duplicate transaction {h}"));
            }
        }
        let mut fees: BTreeMap<[u8; 32], u64> = BTreeMap::new();
        for tx in &block.txs {
            tx.validate().map_err(|e| e.to_string())?;
            *fees.entry(tx.issuer_pubkey).or_default() += tx.fee_units;
        }
        for (owner, fee) in fees {
            if self.balance(&owner) < fee {
                return Err("issuer balance cannot cover fees".into());
            }
        }
        let signing: Vec<Vec<u8>> = block.txs.iter().map(AnchorTx::signing_bytes).collect();
        let items: Vec<_> = block
            .txs
            .iter()
            .zip(&signing)
            .map(|(tx, msg)| (tx.issuer_pubkey, msg.as_slice(), tx.issuer_signature))
            .collect();
        if !crypto::verify_batch(&items) {
            return Err("issuer signature invalid".into());
        }
        Ok(())
    }

    /// Append a fully signed block after re-validating it and its quorum.
    pub fn append_block(&mut self, block: Block) -> Result<(), LedgerError> {
        self.validate_contents(&block).map_err(LedgerError::InvalidBlock)?;
        if !self.validators.check_quorum(&block.hash(), &block.validator_signatures) {
            return Err(LedgerError::InvalidBlock("validator quorum not satisfied".into()));
        }
        self.persist(block)
    }

    /// Re-read a block from storage rather than from the in-memory index.
    pub fn read_block(&self, height: u64) -> Result<Block, LedgerError> {
        let (offset, len) = *self
            .records
            .get(height as usize)
            .ok_or(LedgerError::UnknownBlock(height))?;
        let bytes = self.storage.read_at(offset, len)?;
        Block::decode(&bytes)
    }

    pub fn inclusion_proof(&self, tx_hash: &Hash256, height: u64) -> Result<InclusionProof, LedgerError> {
        let block = self.block(height).ok_or(LedgerError::UnknownBlock(height))?;
        let hashes = block.tx_hashes();
        let index = hashes
            .iter()
            .position(|h| h == tx_hash)
            .ok_or(LedgerError::UnknownTx(*tx_hash))?;
        let path = merkle::merkle_path(&hashes, index).expect("index in range");
        Ok(InclusionProof { height, index, path })
    }

    /// Tamper scan of the persisted chain.
    pub fn scan(&self) -> Result<TamperReport, LedgerError> {
        Ok(scan_chain_bytes(&self.storage.read_all()?, &self.validators))
    }

    /// Raw persisted chain bytes.
    pub fn raw_chain(&self) -> Result<Vec<u8>, LedgerError> {
        Ok(self.storage.read_all()?)
    }

    /// Overwrite one byte of an in-memory chain. Returns `false` for disk
    /// ledgers or out-of-range offsets.
    pub fn tamper_memory_byte(&mut self, offset: usize, value: u8) -> bool {
        match self.storage.memory_mut().and_then(|b| b.get_mut(offset)) {
            Some(b) => {
                *b = value;
                true
            }
            None => false,
        }
    }

    /// JSON summary of a block header and its signatures.
    pub fn block_summary(&self, height: u64) -> Option<serde_json::Value> {
        let block = self.block(height)?;
        Some(block_json(block))
    }
}

pub fn block_json(block: &Block) -> serde_json::Value {
    json!({
        "hash": block.hash(),
        "header": block.header,
        "tx_hashes": block.tx_hashes(),
        "validator_signatures": block.validator_signatures,
    })
}

/// Scan a ledger directory without loading it: reads only the validator set
/// and the raw chain file.
pub fn scan_dir(dir: &Path) -> Result<TamperReport, LedgerError> {
    let validators = ValidatorSet::load(dir)?;
    let data = fs::read(dir.join(CHAIN_FILE))?;
    Ok(scan_chain_bytes(&data, &validators))
}

fn write_new(path: &Path, contents: String) -> io::Result<()> {
    let mut file = OpenOptions::new().write(true).create_new(true).open(path)?;
    file.write_all(contents.as_bytes())?;
    file.write_all(b"\n")?;
    file.sync_all()
}
