//! Canonical text interchange (GILT v1) and conflict-free domain merge.
//!
//! The format is line-oriented UTF-8 with LF endings, deterministic down to
//! the byte: equal domains export identically, so exports can be diffed,
//! digested, and printed on paper. Layout:
//!
//! ```text
//! GILT 1
//! #CONST                 (omitted when no labels are known)
//! C <label> <id>         sorted by label
//! D <id> <kind> <value>  sorted ascending by rendered id
//! T <marker> <first> <second>   sorted lexicographically
//! #ACTORS                (omitted when empty)
//! A <id> <k>=<v> ...     keys/values base64; sorted by id
//! #OBS                   (omitted when empty)
//! O <obs> <actor> <target> <created-ms>
//! #AUDIT                 (omitted when empty)
//! L <seq> D <id> | L <seq> T <m> <f> <s> | L <seq> C <docs> <triples>
//! ```
//!
//! Document kinds: E empty, I integer (decimal), R real (decimal string,
//! kept verbatim), C complex (two decimals comma-joined), T text (base64 of
//! UTF-8), B blob (base64). Actor attributes use URL-safe unpadded base64
//! so `=` stays free as the key/value separator. The digest below covers
//! exactly the D and T lines, so it identifies graph content and nothing
//! else.

use crate::error::{GilError, Result};
use crate::model::{is_decimal, DocumentId, Payload, Triple};
use crate::store::{AuditEntry, AuditKind, Domain, ObservationRecord};
use base64::engine::general_purpose::{STANDARD as B64, URL_SAFE_NO_PAD as B64_ATTR};
use base64::Engine;
use num_bigint::BigInt;
use sha2::{Digest as _, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub const HEADER: &str = "GILT 1";

/// SHA-256 over the canonical document+triple sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainDigest(pub [u8; 32]);

impl fmt::Display for DomainDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// The canonical `D ...` line for one document, without trailing newline.
pub fn document_line(id: DocumentId, payload: &Payload) -> String {
    let tag = payload.kind().tag();
    let value = match payload {
        Payload::Empty => String::new(),
        Payload::Integer(i) => i.to_string(),
        Payload::Real(s) => s.clone(),
        Payload::Complex(re, im) => format!("{re},{im}"),
        Payload::Text(s) => B64.encode(s.as_bytes()),
        Payload::Blob(b) => B64.encode(b),
    };
    if value.is_empty() {
        format!("D {id} {tag}")
    } else {
        format!("D {id} {tag} {value}")
    }
}

/// The canonical `T ...` line for one triple, without trailing newline.
/// These exact bytes are also what the sync protocol hashes.
pub fn triple_line(t: &Triple) -> String {
    format!("T {} {} {}", t.marker, t.first, t.second)
}

pub(crate) fn parse_document_line(line: &str, lineno: usize) -> Result<(DocumentId, Payload)> {
    let mut parts = line.splitn(4, ' ');
    let tag = parts.next();
    debug_assert_eq!(tag, Some("D"));
    let id: DocumentId = parts
        .next()
        .ok_or_else(|| GilError::parse(lineno, "missing document id"))?
        .parse()
        .map_err(|_| GilError::parse(lineno, "malformed document id"))?;
    let kind = parts
        .next()
        .ok_or_else(|| GilError::parse(lineno, "missing payload kind"))?;
    let value = parts.next().unwrap_or("");
    let payload = match kind {
        "E" => {
            if !value.is_empty() {
                return Err(GilError::parse(lineno, "empty payload carries no value"));
            }
            Payload::Empty
        }
        "I" => Payload::Integer(
            BigInt::from_str(value).map_err(|_| GilError::parse(lineno, "bad integer"))?,
        ),
        "R" => {
            if !is_decimal(value) {
                return Err(GilError::parse(lineno, "bad decimal"));
            }
            Payload::Real(value.to_string())
        }
        "C" => {
            let (re, im) = value
                .split_once(',')
                .ok_or_else(|| GilError::parse(lineno, "complex needs two decimals"))?;
            if !is_decimal(re) || !is_decimal(im) {
                return Err(GilError::parse(lineno, "bad decimal in complex"));
            }
            Payload::Complex(re.to_string(), im.to_string())
        }
        "T" => {
            let bytes = B64
                .decode(value)
                .map_err(|_| GilError::parse(lineno, "bad base64"))?;
            Payload::Text(
                String::from_utf8(bytes).map_err(|_| GilError::parse(lineno, "text not UTF-8"))?,
            )
        }
        "B" => Payload::Blob(
            B64.decode(value)
                .map_err(|_| GilError::parse(lineno, "bad base64"))?,
        ),
        other => return Err(GilError::parse(lineno, format!("unknown kind {other:?}"))),
    };
    Ok((id, payload))
}

pub(crate) fn parse_triple_line(line: &str, lineno: usize) -> Result<Triple> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != 4 || parts[0] != "T" {
        return Err(GilError::parse(lineno, "triple line needs three ids"));
    }
    let parse = |s: &str| {
        s.parse::<DocumentId>()
            .map_err(|_| GilError::parse(lineno, "malformed id in triple"))
    };
    Ok(Triple::new(
        parse(parts[1])?,
        parse(parts[2])?,
        parse(parts[3])?,
    ))
}

fn audit_line(entry: &AuditEntry) -> String {
    match &entry.kind {
        AuditKind::DocInsert(id) => format!("L {:016} D {id}", entry.sequence),
        AuditKind::TripleInsert(t) => {
            format!("L {:016} T {} {} {}", entry.sequence, t.marker, t.first, t.second)
        }
        AuditKind::Collect { documents, triples } => {
            format!("L {:016} C {documents} {triples}", entry.sequence)
        }
    }
}

fn parse_audit_line(line: &str, lineno: usize) -> Result<AuditEntry> {
    let parts: Vec<&str> = line.split(' ').collect();
    let bad = |msg: &str| GilError::parse(lineno, msg);
    if parts.len() < 3 || parts[0] != "L" {
        return Err(bad("malformed audit line"));
    }
    let sequence: u64 = parts[1].parse().map_err(|_| bad("bad sequence"))?;
    let kind = match (parts[2], parts.len()) {
        ("D", 4) => AuditKind::DocInsert(
            parts[3]
                .parse()
                .map_err(|_| bad("malformed id in audit line"))?,
        ),
        ("T", 6) => {
            let parse = |s: &str| {
                s.parse::<DocumentId>()
                    .map_err(|_| bad("malformed id in audit line"))
            };
            AuditKind::TripleInsert(Triple::new(
                parse(parts[3])?,
                parse(parts[4])?,
                parse(parts[5])?,
            ))
        }
        ("C", 5) => AuditKind::Collect {
            documents: parts[3].parse().map_err(|_| bad("bad collect count"))?,
            triples: parts[4].parse().map_err(|_| bad("bad collect count"))?,
        },
        _ => return Err(bad("unknown audit entry")),
    };
    Ok(AuditEntry { sequence, kind })
}

impl Domain {
    /// The D and T sections only: the bytes the digest covers.
    fn graph_section(&self) -> String {
        let mut out = String::new();
        for (id, payload) in self.documents() {
            out.push_str(&document_line(id, payload));
            out.push('\n');
        }
        for t in self.triples() {
            out.push_str(&triple_line(t));
            out.push('\n');
        }
        out
    }

    /// Serialize the whole domain canonically. Deterministic: equal domains
    /// produce byte-identical exports.
    pub fn export_canonical(&self) -> Vec<u8> {
        let mut out = String::from(HEADER);
        out.push('\n');

        if !self.constant_table().is_empty() {
            out.push_str("#CONST\n");
            for (label, id) in self.constant_table().iter() {
                out.push_str(&format!("C {label} {id}\n"));
            }
        }

        out.push_str(&self.graph_section());

        let actors: Vec<_> = self.actors().collect();
        if !actors.is_empty() {
            out.push_str("#ACTORS\n");
            for rec in actors {
                out.push_str(&format!("A {}", rec.actor_id));
                for (k, v) in &rec.attributes {
                    out.push_str(&format!(
                        " {}={}",
                        B64_ATTR.encode(k.as_bytes()),
                        B64_ATTR.encode(v.as_bytes())
                    ));
                }
                out.push('\n');
            }
        }

        if self.observations().next().is_some() {
            out.push_str("#OBS\n");
            for (_, o) in self.observation_map() {
                out.push_str(&format!(
                    "O {} {} {} {}\n",
                    o.observation_id, o.actor, o.target, o.created
                ));
            }
        }

        if !self.audit().is_empty() {
            out.push_str("#AUDIT\n");
            for entry in self.audit() {
                out.push_str(&audit_line(entry));
                out.push('\n');
            }
        }

        out.into_bytes()
    }

    /// Parse a canonical export back into a domain.
    ///
    /// Lenient about line order within sections but strict about content:
    /// self-contradicting documents are PayloadConflict, unresolvable triple
    /// endpoints and malformed lines are ParseError with the line number.
    pub fn import_canonical(bytes: &[u8]) -> Result<Domain> {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| GilError::parse(0, "input is not UTF-8"))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, HEADER)) => {}
            Some((_, other)) => {
                return Err(GilError::parse(1, format!("expected {HEADER:?}, got {other:?}")))
            }
            None => return Err(GilError::parse(1, "empty input")),
        }

        let mut consts: Vec<(usize, String, DocumentId)> = Vec::new();
        let mut docs: Vec<(usize, DocumentId, Payload)> = Vec::new();
        let mut triples: Vec<(usize, Triple)> = Vec::new();
        let mut actor_lines: Vec<(usize, DocumentId, BTreeMap<String, String>)> = Vec::new();
        let mut observations: Vec<(usize, ObservationRecord)> = Vec::new();
        let mut audit: Vec<AuditEntry> = Vec::new();

        for (idx, line) in lines {
            let lineno = idx + 1;
            match line.split(' ').next().unwrap_or("") {
                "#CONST" | "#ACTORS" | "#OBS" | "#AUDIT" if line.starts_with('#') => {}
                "C" => {
                    let rest = &line[2..];
                    let (label, id_str) = rest
                        .rsplit_once(' ')
                        .ok_or_else(|| GilError::parse(lineno, "constant line needs label and id"))?;
                    let id: DocumentId = id_str
                        .parse()
                        .map_err(|_| GilError::parse(lineno, "malformed constant id"))?;
                    if crate::constants::constant_id(label) != id {
                        return Err(GilError::parse(
                            lineno,
                            format!("constant id does not derive from label {label:?}"),
                        ));
                    }
                    consts.push((lineno, label.to_string(), id));
                }
                "D" => {
                    let (id, payload) = parse_document_line(line, lineno)?;
                    docs.push((lineno, id, payload));
                }
                "T" => triples.push((lineno, parse_triple_line(line, lineno)?)),
                "A" => {
                    let mut parts = line.split(' ');
                    parts.next();
                    let id: DocumentId = parts
                        .next()
                        .ok_or_else(|| GilError::parse(lineno, "actor line needs an id"))?
                        .parse()
                        .map_err(|_| GilError::parse(lineno, "malformed actor id"))?;
                    let mut attributes = BTreeMap::new();
                    for pair in parts {
                        let (k, v) = pair
                            .split_once('=')
                            .ok_or_else(|| GilError::parse(lineno, "attribute needs k=v"))?;
                        let decode = |s: &str| -> Result<String> {
                            let raw = B64_ATTR
                                .decode(s)
                                .map_err(|_| GilError::parse(lineno, "bad base64 attribute"))?;
                            String::from_utf8(raw)
                                .map_err(|_| GilError::parse(lineno, "attribute not UTF-8"))
                        };
                        attributes.insert(decode(k)?, decode(v)?);
                    }
                    actor_lines.push((lineno, id, attributes));
                }
                "O" => {
                    let parts: Vec<&str> = line.split(' ').collect();
                    if parts.len() != 5 {
                        return Err(GilError::parse(lineno, "observation line needs 4 fields"));
                    }
                    let parse = |s: &str| {
                        s.parse::<DocumentId>()
                            .map_err(|_| GilError::parse(lineno, "malformed id in observation"))
                    };
                    observations.push((
                        lineno,
                        ObservationRecord {
                            observation_id: parse(parts[1])?,
                            actor: parse(parts[2])?,
                            target: parse(parts[3])?,
                            created: parts[4]
                                .parse()
                                .map_err(|_| GilError::parse(lineno, "bad timestamp"))?,
                        },
                    ));
                }
                "L" => audit.push(parse_audit_line(line, lineno)?),
                "" => return Err(GilError::parse(lineno, "blank line")),
                other => return Err(GilError::parse(lineno, format!("unknown line tag {other:?}"))),
            }
        }

        let mut domain = Domain::new();
        for (lineno, id, payload) in docs {
            match domain.payload(id) {
                Some(existing) if *existing == payload => {}
                Some(_) => return Err(GilError::PayloadConflict { id }),
                None => {
                    if !payload.is_well_formed() {
                        return Err(GilError::parse(lineno, "malformed payload"));
                    }
                    domain.raw_insert_document(id, payload);
                }
            }
        }
        for (lineno, t) in triples {
            for id in t.endpoints() {
                if !domain.contains_document(id) {
                    if id.is_constant() {
                        domain.raw_insert_document(id, Payload::Empty);
                    } else {
                        return Err(GilError::parse(
                            lineno,
                            format!("triple endpoint {id} has no document"),
                        ));
                    }
                }
            }
            domain.raw_insert_triple(t);
        }
        for (lineno, label, _) in consts {
            if !domain.contains_document(crate::constants::constant_id(&label)) {
                domain.raw_insert_document(crate::constants::constant_id(&label), Payload::Empty);
            }
            domain
                .constants_mut()
                .record(&label)
                .map_err(|_| GilError::parse(lineno, "bad constant label"))?;
        }
        for (lineno, id, attributes) in actor_lines {
            if !domain.contains_document(id) {
                return Err(GilError::parse(lineno, format!("actor {id} has no document")));
            }
            domain.raw_set_actor(id, attributes);
        }
        for (lineno, record) in observations {
            if !domain.contains_document(record.target) {
                return Err(GilError::parse(lineno, "observation target missing"));
            }
            if !domain.contains_document(record.actor) {
                return Err(GilError::parse(lineno, "observation actor missing"));
            }
            domain.raw_set_observation(record);
        }
        domain.raw_set_audit(audit);
        Ok(domain)
    }

    /// Union of two domains. Permanence makes this conflict-free: the only
    /// possible clash is one id carrying two payloads, which is corruption,
    /// not a mergeable state.
    pub fn merge(&self, other: &Domain) -> Result<Domain> {
        let mut out = self.clone();
        for (id, payload) in other.documents() {
            match out.payload(id) {
                Some(existing) if existing == payload => {}
                Some(_) => return Err(GilError::PayloadConflict { id }),
                None => out.raw_insert_document(id, payload.clone()),
            }
        }
        for t in other.triples() {
            out.raw_insert_triple(*t);
        }
        out.constants_mut().absorb(other.constant_table());

        for rec in other.actors() {
            match out.actor(rec.actor_id) {
                None => out.raw_set_actor(rec.actor_id, rec.attributes),
                Some(mine) => {
                    // Symmetric attribute union: larger value wins per key,
                    // so merge stays commutative on the registries too.
                    let mut merged = mine.attributes;
                    for (k, v) in rec.attributes {
                        merged
                            .entry(k)
                            .and_modify(|cur| {
                                if v > *cur {
                                    *cur = v.clone();
                                }
                            })
                            .or_insert(v);
                    }
                    out.raw_set_actor(rec.actor_id, merged);
                }
            }
        }
        for obs in other.observations() {
            if !out.observation_map().contains_key(&obs.observation_id) {
                out.raw_set_observation(obs.clone());
            }
        }
        // Audit logs concatenate; no cross-domain ordering is asserted.
        for entry in other.audit() {
            out.raw_append_audit(entry.kind.clone());
        }
        Ok(out)
    }

    /// SHA-256 over the canonical document and triple lines: equal digests
    /// iff equal graph content.
    pub fn digest(&self) -> DomainDigest {
        let mut hasher = Sha256::new();
        hasher.update(self.graph_section().as_bytes());
        DomainDigest(hasher.finalize().into())
    }
}
