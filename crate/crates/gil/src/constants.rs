//! Bootstrap constants: the ids every conforming domain agrees on without
//! coordination.
//!
//! A constant id has birth time 0 and a space coordinate derived from its
//! label, so two machines that have never exchanged a byte still address
//! `Unit` or `int:3` identically. The derived table doubles as the
//! "bootstrap manifest" a reader needs to decode a domain from scratch.

use crate::error::{GilError, Result};
use crate::model::DocumentId;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

pub const DICTIONARY_ANCHOR: &str = "IsADictionaryAnchorOf";
pub const LIST_ANCHOR: &str = "IsAListAnchorOf";
pub const SET_ANCHOR: &str = "IsASetAnchorOf";
pub const ELEMENT_OF: &str = "IsAnElementOf";
pub const REVISION_OF: &str = "IsARevisionOf";
pub const REVISION_CONTEXT: &str = "HasRevisionContext";
pub const UNIT: &str = "Unit";
pub const ACTOR_KEY: &str = "ActorKey";
pub const TIME_KEY: &str = "TimeKey";
pub const PLACE_KEY: &str = "PlaceKey";
pub const MICROMODEL_REGISTRY: &str = "MicroModelRegistry";

/// Labels every fresh domain materializes up front. Integer keys `int:k`
/// are derived on demand and are deliberately not enumerated here.
pub const NAMED_LABELS: [&str; 11] = [
    DICTIONARY_ANCHOR,
    LIST_ANCHOR,
    SET_ANCHOR,
    ELEMENT_OF,
    REVISION_OF,
    REVISION_CONTEXT,
    UNIT,
    ACTOR_KEY,
    TIME_KEY,
    PLACE_KEY,
    MICROMODEL_REGISTRY,
];

/// Deterministically derive the id of the constant with the given label.
///
/// birth_time = 0, space_coord = first 16 bytes of SHA-256 of
/// `"gil:const:" + label`. Pure: identical across processes and machines.
pub fn constant_id(label: &str) -> DocumentId {
    assert!(!label.is_empty(), "constant labels must be non-empty");
    let mut hasher = Sha256::new();
    hasher.update(b"gil:const:");
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut coord = [0u8; 16];
    coord.copy_from_slice(&digest[..16]);
    DocumentId::raw(0, u128::from_be_bytes(coord))
}

/// Id of the list-index / relation-position constant `int:k`.
pub fn int_key(k: usize) -> DocumentId {
    constant_id(&int_label(k))
}

pub fn int_label(k: usize) -> String {
    format!("int:{k}")
}

/// The labels a domain has materialized so far, with their derived ids.
///
/// Purely a naming aid: graph content refers to constants by id alone, and
/// any id with birth time 0 is a constant whether or not its label is known
/// here. The table is what `constants` prints and what the `#CONST` section
/// of an export carries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstantTable {
    entries: BTreeMap<String, DocumentId>,
}

impl ConstantTable {
    pub fn new() -> Self {
        ConstantTable::default()
    }

    /// Record a label. Labels must be line-safe because exports are
    /// line-oriented.
    pub fn record(&mut self, label: &str) -> Result<DocumentId> {
        if label.is_empty() || label.contains('\n') || label.contains('\r') {
            return Err(GilError::InvalidLabel(label.to_string()));
        }
        let id = constant_id(label);
        self.entries.insert(label.to_string(), id);
        Ok(id)
    }

    pub fn get(&self, label: &str) -> Option<DocumentId> {
        self.entries.get(label).copied()
    }

    pub fn label_of(&self, id: DocumentId) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, v)| **v == id)
            .map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, DocumentId)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Union with another table. Cannot conflict: both sides derive ids from
    /// labels with the same pure function.
    pub fn absorb(&mut self, other: &ConstantTable) {
        for (label, id) in &other.entries {
            self.entries.insert(label.clone(), *id);
        }
    }
}
