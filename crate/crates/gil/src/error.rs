use crate::model::DocumentId;
use thiserror::Error;

/// Every way a domain operation can refuse to proceed.
///
/// Nothing in here is recoverable-by-retry: each variant reports either a
/// caller mistake (unknown id, key already bound) or data corruption
/// (payload conflict, malformed container built from raw or merged triples).
#[derive(Debug, Error)]
pub enum GilError {
    #[error("birth time 0 is reserved for bootstrap constants")]
    ReservedEpoch,

    #[error("malformed id {0:?}: expected 16 hex digits, '-', 32 hex digits")]
    MalformedId(String),

    #[error("payload {0:?} is not valid for its kind")]
    InvalidPayload(String),

    #[error("constant label {0:?} must be non-empty and contain no line breaks")]
    InvalidLabel(String),

    #[error("id {id} already carries a different payload")]
    PayloadConflict { id: DocumentId },

    #[error("triple endpoint {id} is neither stored nor a bootstrap constant")]
    DanglingReference { id: DocumentId },

    #[error("document {id} does not exist in this domain")]
    UnknownDocument { id: DocumentId },

    #[error("actor {id} is not registered in this domain")]
    UnknownActor { id: DocumentId },

    #[error("observation {id} is not registered in this domain")]
    UnknownObservation { id: DocumentId },

    #[error("document {owner} already has a {existing} anchor; {requested} cannot coexist with it")]
    ForbiddenCombination {
        owner: DocumentId,
        existing: &'static str,
        requested: &'static str,
    },

    #[error("key {key} is already bound on {owner}; rebinding requires a revision")]
    KeyAlreadyBound { owner: DocumentId, key: DocumentId },

    #[error("key {key} is not bound on {owner}")]
    KeyNotBound { owner: DocumentId, key: DocumentId },

    #[error("malformed container on {subject}: {reason}")]
    MalformedContainer { subject: DocumentId, reason: String },

    #[error("a relation needs at least one argument")]
    EmptyRelation,

    #[error("malformed revision data at {id}: {reason}")]
    MalformedRevision { id: DocumentId, reason: String },

    #[error("unknown validation check {0:?}")]
    UnknownCheck(String),

    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("cannot bind {endpoint}: {source}")]
    BindFailure {
        endpoint: String,
        source: std::io::Error,
    },

    #[error("connection to {endpoint} failed: {source}")]
    ConnectionError {
        endpoint: String,
        source: std::io::Error,
    },

    #[error("protocol violation: {0}")]
    ProtocolError(String),

    #[error("transfer incomplete: {missing} requested records never arrived")]
    IncompleteTransfer { missing: usize },

    #[error("domain file is locked by another process ({path})")]
    DomainLocked { path: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GilError {
    pub(crate) fn malformed_container(subject: DocumentId, reason: impl Into<String>) -> Self {
        GilError::MalformedContainer {
            subject,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        GilError::ParseError {
            line,
            message: message.into(),
        }
    }

    /// Triple parse helper used by interchange and the wire protocol.
    pub(crate) fn protocol(message: impl Into<String>) -> Self {
        GilError::ProtocolError(message.into())
    }
}

pub type Result<T> = std::result::Result<T, GilError>;
