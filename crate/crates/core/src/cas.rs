//! Content-addressed object store.
//!
//! Files are split into fixed-size leaves and assembled bottom-up into a
//! balanced Merkle DAG. Every node is stored under the SHA-256 of its
//! canonical encoding, so a node's name doubles as its integrity check:
//!
//! ```text
//! Leaf     = 0x00 || u32be(len)   || payload
//! Internal = 0x01 || u32be(count) || (digest[32] || u64be(subtree_size)) * count
//! ```
//!
//! On disk an object lives at `<root>/<hex[0..2]>/<hex[2..4]>/<hex>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Leaf payload size used by [`ObjectStore::put`].
pub const CHUNK_SIZE: usize = 262_144;
/// Maximum number of children of an internal node.
pub const FANOUT: usize = 32;
const MIN_CHILDREN: usize = 2;

const TAG_LEAF: u8 = 0x00;
const TAG_INTERNAL: u8 = 0x01;
const LINK_LEN: usize = 32 + 8;

/// Text prefix of a rendered [`Cid`].
pub const CID_PREFIX: &str = "vc1:";

#[derive(Debug, Error)]
pub enum CasError {
    #[error("object {0} not found")]
    NotFound(Cid),
    #[error("object {0} is corrupt")]
    CorruptObject(Cid),
    #[error("invalid node: {0}")]
    InvalidNode(&'static str),
    #[error("invalid content identifier: {0}")]
    InvalidCid(String),
    #[error("object store i/o: {0}")]
    Io(#[from] io::Error),
}

/// Content identifier: SHA-256 of exactly one canonical node encoding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cid([u8; 32]);

impl Cid {
    pub const fn from_digest(digest: [u8; 32]) -> Self {
        Self(digest)
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.0
    }

    /// Bare 64-character lowercase hex, without the `vc1:` prefix.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CasError> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(CasError::InvalidCid(s.to_owned()));
        }
        let mut digest = [0u8; 32];
        hex::decode_to_slice(s, &mut digest).map_err(|_| CasError::InvalidCid(s.to_owned()))?;
        Ok(Self(digest))
    }

    fn of_encoding(encoding: &[u8]) -> Self {
        Self(Sha256::digest(encoding).into())
    }
}

impl fmt::Display for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{CID_PREFIX}{}", self.to_hex())
    }
}

impl fmt::Debug for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cid({})", self.to_hex())
    }
}

impl FromStr for Cid {
    type Err = CasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s
            .strip_prefix(CID_PREFIX)
            .ok_or_else(|| CasError::InvalidCid(s.to_owned()))?;
        Self::from_hex(hex)
    }
}

impl serde::Serialize for Cid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Cid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Reference from an internal node to a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub cid: Cid,
    /// Number of file bytes under the child.
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DagNode {
    Leaf(Vec<u8>),
    Internal(Vec<Link>),
}

impl DagNode {
    /// Canonical encoding. Rejects nodes outside the size and arity limits.
    pub fn encode(&self) -> Result<Vec<u8>, CasError> {
        match self {
            DagNode::Leaf(payload) => {
                if payload.len() > CHUNK_SIZE {
                    return Err(CasError::InvalidNode("leaf payload exceeds chunk size"));
                }
                let mut out = Vec::with_capacity(5 + payload.len());
                out.push(TAG_LEAF);
                out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
                out.extend_from_slice(payload);
                Ok(out)
            }
            DagNode::Internal(links) => {
                if !(MIN_CHILDREN..=FANOUT).contains(&links.len()) {
                    return Err(CasError::InvalidNode("internal node needs 2..=32 children"));
                }
                let mut out = Vec::with_capacity(5 + links.len() * LINK_LEN);
                out.push(TAG_INTERNAL);
                out.extend_from_slice(&(links.len() as u32).to_be_bytes());
                for link in links {
                    out.extend_from_slice(link.cid.digest());
                    out.extend_from_slice(&link.size.to_be_bytes());
                }
                Ok(out)
            }
        }
    }

    /// Inverse of [`DagNode::encode`]; accepts only canonical encodings.
    pub fn decode(bytes: &[u8]) -> Result<Self, CasError> {
        let (&tag, rest) = bytes
            .split_first()
            .ok_or(CasError::InvalidNode("empty encoding"))?;
        if rest.len() < 4 {
            return Err(CasError::InvalidNode("truncated length"));
        }
        let (len_bytes, body) = rest.split_at(4);
        let n = u32::from_be_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
        match tag {
            TAG_LEAF => {
                if n > CHUNK_SIZE || body.len() != n {
                    return Err(CasError::InvalidNode("leaf length mismatch"));
                }
                Ok(DagNode::Leaf(body.to_vec()))
            }
            TAG_INTERNAL => {
                if !(MIN_CHILDREN..=FANOUT).contains(&n) || body.len() != n * LINK_LEN {
                    return Err(CasError::InvalidNode("internal length mismatch"));
                }
                let links = body
                    .chunks_exact(LINK_LEN)
                    .map(|c| Link {
                        cid: Cid::from_digest(c[..32].try_into().expect("32 bytes")),
                        size: u64::from_be_bytes(c[32..].try_into().expect("8 bytes")),
                    })
                    .collect();
                Ok(DagNode::Internal(links))
            }
            _ => Err(CasError::InvalidNode("unknown node tag")),
        }
    }

    /// File bytes covered by this node.
    pub fn subtree_size(&self) -> u64 {
        match self {
            DagNode::Leaf(p) => p.len() as u64,
            DagNode::Internal(links) => links.iter().map(|l| l.size).sum(),
        }
    }
}

pub fn cid_of(node: &DagNode) -> Result<Cid, CasError> {
    Ok(Cid::of_encoding(&node.encode()?))
}

/// Split `data` into leaves of `chunk_size` bytes; the last may be shorter.
/// Empty input yields a single empty leaf.
///
/// # Panics
/// If `chunk_size` is zero.
pub fn chunk_bytes(data: &[u8], chunk_size: usize) -> Vec<DagNode> {
    assert!(chunk_size >= 1, "chunk_size must be positive");
    if data.is_empty() {
        return vec![DagNode::Leaf(Vec::new())];
    }
    data.chunks(chunk_size)
        .map(|c| DagNode::Leaf(c.to_vec()))
        .collect()
}

/// Group one DAG level into the next: runs of up to [`FANOUT`] links become
/// internal nodes, and a trailing lone link is carried up unchanged (an
/// internal node needs at least two children).
pub fn build_level(level: &[Link]) -> Vec<Result<DagNode, Link>> {
    level
        .chunks(FANOUT)
        .map(|group| match group {
            [single] => Err(*single),
            many => Ok(DagNode::Internal(many.to_vec())),
        })
        .collect()
}

/// Result of an exhaustive store check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntegrityReport {
    /// Objects whose content no longer hashes to their name.
    pub corrupt: Vec<Cid>,
    /// Children referenced by intact internal nodes but absent from the store.
    pub missing: Vec<Cid>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.corrupt.is_empty() && self.missing.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Disk(PathBuf),
    Memory(BTreeMap<Cid, Vec<u8>>),
}

/// Object store keyed by [`Cid`], either on disk or in memory.
#[derive(Debug, Clone)]
pub struct ObjectStore {
    backend: Backend,
}

impl ObjectStore {
    /// Open (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CasError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            backend: Backend::Disk(root),
        })
    }

    pub fn in_memory() -> Self {
        Self {
            backend: Backend::Memory(BTreeMap::new()),
        }
    }

    /// Filesystem path of an object, for disk-backed stores.
    pub fn object_path(&self, cid: &Cid) -> Option<PathBuf> {
        match &self.backend {
            Backend::Disk(root) => Some(object_path(root, cid)),
            Backend::Memory(_) => None,
        }
    }

    /// Store `data` and return the root [`Cid`]. Identical data always maps to
    /// the same root and writes nothing new.
    pub fn put(&mut self, data: &[u8]) -> Result<Cid, CasError> {
        let mut level = Vec::new();
        for leaf in chunk_bytes(data, CHUNK_SIZE) {
            let size = leaf.subtree_size();
            let cid = self.put_node(&leaf)?;
            level.push(Link { cid, size });
        }
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(FANOUT));
            for entry in build_level(&level) {
                match entry {
                    Ok(node) => {
                        let size = node.subtree_size();
                        let cid = self.put_node(&node)?;
                        next.push(Link { cid, size });
                    }
                    Err(carried) => next.push(carried),
                }
            }
            level = next;
        }
        Ok(level[0].cid)
    }

    /// Persist a single node and return its identifier.
    pub fn put_node(&mut self, node: &DagNode) -> Result<Cid, CasError> {
        let encoding = node.encode()?;
        let cid = Cid::of_encoding(&encoding);
        self.write_object(&cid, &encoding)?;
        Ok(cid)
    }

    /// Reassemble the file under `cid`, re-hashing every node on the way down.
    pub fn get(&self, cid: &Cid) -> Result<Vec<u8>, CasError> {
        let mut out = Vec::new();
        self.collect(cid, &mut out)?;
        Ok(out)
    }

    fn collect(&self, cid: &Cid, out: &mut Vec<u8>) -> Result<(), CasError> {
        let node = self.get_node(cid)?;
        match node {
            DagNode::Leaf(payload) => out.extend_from_slice(&payload),
            DagNode::Internal(links) => {
                for link in links {
                    let before = out.len();
                    self.collect(&link.cid, out)?;
                    if (out.len() - before) as u64 != link.size {
                        return Err(CasError::CorruptObject(*cid));
                    }
                }
            }
        }
        Ok(())
    }

    /// Fetch and verify a single node.
    pub fn get_node(&self, cid: &Cid) -> Result<DagNode, CasError> {
        let bytes = self.read_object(cid)?.ok_or(CasError::NotFound(*cid))?;
        if Cid::of_encoding(&bytes) != *cid {
            return Err(CasError::CorruptObject(*cid));
        }
        DagNode::decode(&bytes).map_err(|_| CasError::CorruptObject(*cid))
    }

    pub fn contains(&self, cid: &Cid) -> Result<bool, CasError> {
        Ok(self.read_object(cid)?.is_some())
    }

    /// Names of every stored object, sorted.
    pub fn list(&self) -> Result<Vec<Cid>, CasError> {
        match &self.backend {
            Backend::Memory(map) => Ok(map.keys().copied().collect()),
            Backend::Disk(root) => {
                let mut out = Vec::new();
                for a in read_dir_sorted(root)? {
                    if !a.is_dir() {
                        continue;
                    }
                    for b in read_dir_sorted(&a)? {
                        if !b.is_dir() {
                            continue;
                        }
                        for file in read_dir_sorted(&b)? {
                            let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
                            if let Ok(cid) = Cid::from_hex(name) {
                                out.push(cid);
                            }
                        }
                    }
                }
                out.sort();
                Ok(out)
            }
        }
    }

    pub fn object_count(&self) -> Result<usize, CasError> {
        Ok(self.list()?.len())
    }

    /// Re-hash every object and look for dangling child references.
    pub fn verify(&self) -> Result<IntegrityReport, CasError> {
        let names = self.list()?;
        let present: BTreeSet<Cid> = names.iter().copied().collect();
        let mut report = IntegrityReport::default();
        let mut missing = BTreeSet::new();
        for cid in &names {
            let Some(bytes) = self.read_object(cid)? else {
                continue;
            };
            if Cid::of_encoding(&bytes) != *cid {
                report.corrupt.push(*cid);
                continue;
            }
            if let Ok(DagNode::Internal(links)) = DagNode::decode(&bytes) {
                missing.extend(
                    links
                        .iter()
                        .map(|l| l.cid)
                        .filter(|c| !present.contains(c)),
                );
            }
        }
        report.missing = missing.into_iter().collect();
        Ok(report)
    }

    /// Replace an object's stored bytes without re-hashing them. Fault
    /// injection for integrity tests.
    pub fn overwrite_raw(&mut self, cid: &Cid, bytes: &[u8]) -> Result<(), CasError> {
        match &mut self.backend {
            Backend::Memory(map) => {
                map.insert(*cid, bytes.to_vec());
                Ok(())
            }
            Backend::Disk(root) => Ok(fs::write(object_path(root, cid), bytes)?),
        }
    }

    fn read_object(&self, cid: &Cid) -> Result<Option<Vec<u8>>, CasError> {
        match &self.backend {
            Backend::Memory(map) => Ok(map.get(cid).cloned()),
            Backend::Disk(root) => match fs::read(object_path(root, cid)) {
                Ok(bytes) => Ok(Some(bytes)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(e.into()),
            },
        }
    }

    fn write_object(&mut self, cid: &Cid, bytes: &[u8]) -> Result<(), CasError> {
        match &mut self.backend {
            Backend::Memory(map) => {
                map.entry(*cid).or_insert_with(|| bytes.to_vec());
                Ok(())
            }
            Backend::Disk(root) => {
                let path = object_path(root, cid);
                if path.exists() {
                    return Ok(());
                }
                let dir = path.parent().expect("object path has a parent");
                fs::create_dir_all(dir)?;
                // Readers must never see a partial object: write aside, then rename.
                let tmp = dir.join(format!(".tmp-{}-{}", cid.to_hex(), uuid::Uuid::new_v4()));
                let mut file = fs::File::create(&tmp)?;
                file.write_all(bytes)?;
                file.sync_all()?;
                drop(file);
                fs::rename(&tmp, &path)?;
                Ok(())
            }
        }
    }
}

fn object_path(root: &Path, cid: &Cid) -> PathBuf {
    let hex = cid.to_hex();
    root.join(&hex[0..2]).join(&hex[2..4]).join(hex)
}

fn read_dir_sorted(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}
