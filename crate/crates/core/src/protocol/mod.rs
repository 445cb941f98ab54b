//! The three-round protocol: users share, commit, prove and encrypt; holders
//! verify and answer the identity tests; the server excludes offenders,
//! re-executes round 2 as needed and decodes the robust aggregate.

mod config;
mod context;
pub mod messages;
mod iteration;
mod server;
mod user;

pub use config::{BeaverSource, ConfigError, ProtocolConfig};
pub use context::{deal_for_prover, deal_iteration, Context, HolderTriples, PublicSetup, Setup};
pub use iteration::{run_iteration, IterationOutcome, LiveUsers, RunOptions, Timings};
pub use messages::{Envelope, MsgKind, SERVER};
pub use server::{
    run_server, ByteCounts, Exclusion, IterationReport, NoRecord, Participants, Reason, Recorder, Residuals,
    Verdict,
};
pub use user::{Behavior, User};

use crate::field::FieldError;
use crate::lcc::LccError;
use crate::snip::SnipError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("setup: {0}")]
    Setup(String),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lcc(#[from] LccError),
    #[error(transparent)]
    Snip(#[from] SnipError),
}
