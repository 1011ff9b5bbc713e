//! gil — an append-only, immutable knowledge-graph store.
//!
//! Documents are permanent: identified forever by the millisecond they were
//! born and a 128-bit space coordinate, never mutated, never implicitly
//! deleted. All structure — dictionaries, lists, sets, n-ary relations —
//! is encoded over a single universal triple relation (marker, first,
//! second), so the store stays one uniform graph no matter what it holds.
//! Edits never touch existing documents; they mint revisions that branch
//! from the originals, and independently grown domains merge without
//! conflict.
//!
//! Module map:
//! - [`model`]: ids, payloads, triples, and their canonical renderings.
//! - [`constants`]: well-known documents derived from labels by hashing.
//! - [`store`]: the [`Domain`] — documents, triples, indexes, audit log,
//!   actor and observation registries.
//! - [`structure`]: dictionaries, lists, sets, and n-ary relations over the
//!   universal relation, plus structural reconstruction.
//! - [`revision`]: branching edits and revision-chain traversal.
//! - [`gc`]: observation-rooted liveness and explicit collection.
//! - [`interchange`]: canonical text serialization, merge, digests.
//! - [`sync`]: a line-protocol replication service and pull client.
//! - [`micromodel`]: self-describing validation models stored in the graph.
//! - [`cli`]: the `gil` command-line surface over all of the above.
//!
//! Runnable walkthroughs live in `examples/`; start with
//! `cargo run --example basic_documents`.

pub mod constants;
pub mod error;
pub mod model;
pub mod store;

pub mod cli;
pub mod gc;
pub mod interchange;
pub mod micromodel;
pub mod revision;
pub mod structure;
pub mod sync;

pub use error::{GilError, Result};
pub use model::{fresh_id, Document, DocumentId, Payload, PayloadKind, Triple};
pub use store::{ActorRecord, AuditEntry, AuditKind, Domain, ObservationRecord};

pub use gc::CollectReport;
pub use interchange::{document_line, triple_line, DomainDigest};
pub use micromodel::{MicroModel, ValidationReport, Violation, BUILTIN_CHECKS};
pub use revision::{RevisionContext, RevisionResult};
pub use structure::{ContainerKind, Subgraph};
pub use sync::{pull, serve, ServerHandle, SyncReport};
