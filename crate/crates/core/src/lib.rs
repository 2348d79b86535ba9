//! Core of the verifi credential platform.
//!
//! Certificate files live in a content-addressed object store ([`cas`]). Once an
//! admin verifies a certificate, its content identifier is encrypted under the
//! applicant's vault key ([`crypto`]) and anchored in a hash-chained,
//! quorum-signed ledger ([`ledger`]). The role-based workflow that moves a
//! certificate from upload to a company's granted view is in [`workflow`].
#![forbid(unsafe_code)]

pub mod canonical;
pub mod cas;
pub mod crypto;
pub mod ledger;
pub mod workflow;

pub use cas::{Cid, ObjectStore};
pub use crypto::{KeyPair, Role, SymmetricKey};
pub use ledger::{AnchorTx, Block, Hash256, Ledger, ValidatorSet};
pub use workflow::{Caller, Platform, WorkflowError};

/// Current wall-clock time as unix seconds.
pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
