//! Identities, payloads, and the universal ternary relation.
//!
//! A [`DocumentId`] is a point in informational space-time: the millisecond
//! a document came into being plus a 128-bit pseudo-space coordinate. Ids
//! are never reused and never freed; "editing" a document always means
//! minting a new id (see the `revision` module).

use crate::error::{GilError, Result};
use num_bigint::BigInt;
use std::fmt;
use std::str::FromStr;

/// Permanent identity of a document: (birth time, pseudo-space coordinate).
///
/// Ordered lexicographically, which coincides with the order of the rendered
/// form because both halves render as fixed-width lowercase hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocumentId {
    birth_time: u64,
    space_coord: u128,
}

impl DocumentId {
    /// Construct without the reserved-epoch check. Internal: bootstrap
    /// constants are the only birth_time=0 ids and are made in `constants`.
    pub(crate) const fn raw(birth_time: u64, space_coord: u128) -> Self {
        DocumentId {
            birth_time,
            space_coord,
        }
    }

    pub fn birth_time(&self) -> u64 {
        self.birth_time
    }

    pub fn space_coord(&self) -> u128 {
        self.space_coord
    }

    /// Bootstrap constants are exactly the ids with birth time 0.
    pub fn is_constant(&self) -> bool {
        self.birth_time == 0
    }
}

/// Mint an id for a new document.
///
/// The caller supplies the clock reading and 128 bits of entropy from a
/// cryptographically strong source; uniqueness rests on that entropy.
pub fn fresh_id(clock_ms: u64, entropy: u128) -> Result<DocumentId> {
    if clock_ms == 0 {
        return Err(GilError::ReservedEpoch);
    }
    Ok(DocumentId::raw(clock_ms, entropy))
}

impl fmt::Display for DocumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}-{:032x}", self.birth_time, self.space_coord)
    }
}

impl FromStr for DocumentId {
    type Err = GilError;

    fn from_str(s: &str) -> Result<DocumentId> {
        let bad = || GilError::MalformedId(s.to_string());
        if s.len() != 49 || s.as_bytes()[16] != b'-' {
            return Err(bad());
        }
        let (time_part, rest) = s.split_at(16);
        let coord_part = &rest[1..];
        let lower_hex = |p: &str| p.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !lower_hex(time_part) || !lower_hex(coord_part) {
            return Err(bad());
        }
        let birth_time = u64::from_str_radix(time_part, 16).map_err(|_| bad())?;
        let space_coord = u128::from_str_radix(coord_part, 16).map_err(|_| bad())?;
        Ok(DocumentId::raw(birth_time, space_coord))
    }
}

/// The elementary value a document may carry.
///
/// Real and Complex hold their decimal strings verbatim so that canonical
/// serialization round-trips bit for bit; no float parsing ever happens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payload {
    Empty,
    Integer(BigInt),
    Real(String),
    Complex(String, String),
    Text(String),
    Blob(Vec<u8>),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Empty => PayloadKind::Empty,
            Payload::Integer(_) => PayloadKind::Integer,
            Payload::Real(_) => PayloadKind::Real,
            Payload::Complex(_, _) => PayloadKind::Complex,
            Payload::Text(_) => PayloadKind::Text,
            Payload::Blob(_) => PayloadKind::Blob,
        }
    }

    /// Real/Complex must hold parseable decimal strings; everything else is
    /// valid by construction. Enforced on insert so exports are always
    /// well-formed.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Payload::Real(s) => is_decimal(s),
            Payload::Complex(re, im) => is_decimal(re) && is_decimal(im),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Empty,
    Integer,
    Real,
    Complex,
    Text,
    Blob,
}

impl PayloadKind {
    /// One-letter tag used by the canonical text format.
    pub fn tag(&self) -> char {
        match self {
            PayloadKind::Empty => 'E',
            PayloadKind::Integer => 'I',
            PayloadKind::Real => 'R',
            PayloadKind::Complex => 'C',
            PayloadKind::Text => 'T',
            PayloadKind::Blob => 'B',
        }
    }
}

/// Decimal grammar shared by Real and Complex components:
/// `-?digits(.digits)?([eE][+-]?digits)?`. Stored strings are kept verbatim;
/// this only gates what may enter a domain.
pub(crate) fn is_decimal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if b.first() == Some(&b'-') {
        i += 1;
    }
    let start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i == start {
        return false;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return false;
        }
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return false;
        }
    }
    i == b.len()
}

/// A document: permanent identity plus immutable payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: DocumentId,
    pub payload: Payload,
}

/// One instance of the universal ternary relation.
///
/// Value-identified: two triples with the same three ids are the same
/// triple. The derived order (marker, first, second) is the canonical order
/// used by queries and serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub marker: DocumentId,
    pub first: DocumentId,
    pub second: DocumentId,
}

impl Triple {
    pub fn new(marker: DocumentId, first: DocumentId, second: DocumentId) -> Self {
        Triple {
            marker,
            first,
            second,
        }
    }

    pub fn endpoints(&self) -> [DocumentId; 3] {
        [self.marker, self.first, self.second]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.marker, self.first, self.second)
    }
}
