//! Append-only record logs under `<data_dir>/db/`.
//!
//! One log per entity type, one canonical sorted-key record per line. Every
//! change appends the entity's full new state; replay keeps the last record
//! per id. Pending certificate bytes live in `db/pending/<certificate_id>`
//! so that erasing them after a decision leaves no copy in any log.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::canonical;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Entity {
    Users,
    Certificates,
    AccessRequests,
    Notifications,
}

impl Entity {
    fn file_name(self) -> &'static str {
        match self {
            Entity::Users => "users.log",
            Entity::Certificates => "certificates.log",
            Entity::AccessRequests => "access_requests.log",
            Entity::Notifications => "notifications.log",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Db {
    Disk(PathBuf),
    Memory,
}

impl Db {
    pub fn open(dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(dir.join("pending"))?;
        Ok(Db::Disk(dir))
    }

    pub fn append<T: Serialize>(&self, entity: Entity, record: &T) -> io::Result<()> {
        let Db::Disk(dir) = self else { return Ok(()) };
        let mut line = canonical::to_text(record).map_err(io::Error::other)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .append(true)
            .create(true)
            .open(dir.join(entity.file_name()))?;
        // One write per record so concurrent appenders never interleave lines.
        file.write_all(line.as_bytes())?;
        file.sync_data()
    }

    pub fn load<T: DeserializeOwned>(&self, entity: Entity) -> io::Result<Vec<T>> {
        let Db::Disk(dir) = self else { return Ok(Vec::new()) };
        let text = match fs::read_to_string(dir.join(entity.file_name())) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        // A final line without its newline is a torn append; skip it.
        let complete = match text.rfind('\n') {
            Some(end) => &text[..end],
            None => "",
        };
        complete
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_str(l).map_err(io::Error::other))
            .collect()
    }

    fn pending_path(&self, certificate_id: &str) -> Option<PathBuf> {
        match self {
            Db::Disk(dir) => Some(dir.join("pending").join(certificate_id)),
            Db::Memory => None,
        }
    }

    pub fn put_pending(&self, certificate_id: &str, bytes: &[u8]) -> io::Result<()> {
        let Some(path) = self.pending_path(certificate_id) else { return Ok(()) };
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, path)
    }

    pub fn read_pending(&self, certificate_id: &str) -> io::Result<Option<Vec<u8>>> {
        let Some(path) = self.pending_path(certificate_id) else { return Ok(None) };
        match fs::read(path) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn erase_pending(&self, certificate_id: &str) -> io::Result<()> {
        let Some(path) = self.pending_path(certificate_id) else { return Ok(()) };
        match fs::remove_file(path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
            _ => Ok(()),
        }
    }

    /// Names of files currently in the pending store.
    pub fn pending_files(&self) -> io::Result<Vec<String>> {
        let Db::Disk(dir) = self else { return Ok(Vec::new()) };
        let mut names = Vec::new();
        for entry in fs::read_dir(dir.join("pending"))? {
            names.push(entry?.file_name().to_string_lossy().into_owned());
        }
        names.sort();
        Ok(names)
    }
}
