//! Containers and n-ary relations over the ternary core.
//!
//! A document owns containers through anchor documents: the triple
//! (IsA⟨Kind⟩AnchorOf, anchor, owner) attaches an anchor, and bindings hang
//! off the anchor as further triples. Everything here reduces to patterns
//! over the one stored relation, so the file format and the wire protocol
//! need no container-specific encoding at all.
//!
//! Binding shapes, per anchor kind:
//!   dictionary: (key, value, anchor)     one triple per key, write-once
//!   list:       (int:n, value, anchor)   indexes contiguous from 0
//!   set:        (IsAnElementOf, member, anchor)

use crate::constants::{
    self, constant_id, DICTIONARY_ANCHOR, ELEMENT_OF, LIST_ANCHOR, SET_ANCHOR, UNIT,
};
use crate::error::{GilError, Result};
use crate::model::{DocumentId, Payload, Triple};
use crate::store::Domain;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerKind {
    Dictionary,
    List,
    Set,
}

impl ContainerKind {
    pub fn anchor_label(&self) -> &'static str {
        match self {
            ContainerKind::Dictionary => DICTIONARY_ANCHOR,
            ContainerKind::List => LIST_ANCHOR,
            ContainerKind::Set => SET_ANCHOR,
        }
    }

    pub fn anchor_marker(&self) -> DocumentId {
        constant_id(self.anchor_label())
    }

    fn name(&self) -> &'static str {
        match self {
            ContainerKind::Dictionary => "Dictionary",
            ContainerKind::List => "List",
            ContainerKind::Set => "Set",
        }
    }

    pub const ALL: [ContainerKind; 3] = [
        ContainerKind::Dictionary,
        ContainerKind::List,
        ContainerKind::Set,
    ];
}

/// The (documents, triples) closure that makes a document self-contained.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subgraph {
    pub documents: BTreeMap<DocumentId, Payload>,
    pub triples: BTreeSet<Triple>,
}

impl Subgraph {
    /// Canonical byte rendering (the document/triple line format of the
    /// interchange module). Two equal subgraphs render identically, so this
    /// is what "byte-identical before and after collect" is checked against.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        for (id, payload) in &self.documents {
            out.push_str(&crate::interchange::document_line(*id, payload));
            out.push('\n');
        }
        for t in &self.triples {
            out.push_str(&crate::interchange::triple_line(t));
            out.push('\n');
        }
        out.into_bytes()
    }
}

impl Domain {
    /// The owner's anchor of the given kind, if any. Errors if raw or merged
    /// data left the owner with several anchors of one kind.
    pub fn anchor_of(&self, owner: DocumentId, kind: ContainerKind) -> Result<Option<DocumentId>> {
        let found = self.query(Some(kind.anchor_marker()), None, Some(owner));
        match found.len() {
            0 => Ok(None),
            1 => Ok(Some(found[0].first)),
            n => Err(GilError::malformed_container(
                owner,
                format!("{n} {} anchors", kind.name()),
            )),
        }
    }

    /// Return the owner's anchor of this kind, creating it if absent.
    ///
    /// Every owner may carry a dictionary; additionally at most one of
    /// List/Set — the two sequence containers never coexist.
    pub fn ensure_anchor(&mut self, owner: DocumentId, kind: ContainerKind) -> Result<DocumentId> {
        if let Some(a) = self.anchor_of(owner, kind)? {
            return Ok(a);
        }
        let rival = match kind {
            ContainerKind::List => Some(ContainerKind::Set),
            ContainerKind::Set => Some(ContainerKind::List),
            ContainerKind::Dictionary => None,
        };
        if let Some(r) = rival {
            if self.anchor_of(owner, r)?.is_some() {
                return Err(GilError::ForbiddenCombination {
                    owner,
                    existing: r.name(),
                    requested: kind.name(),
                });
            }
        }
        if !self.contains_document(owner) {
            return Err(GilError::UnknownDocument { id: owner });
        }
        let anchor = self.mint_id();
        self.insert_document(anchor, Payload::Empty)?;
        let marker = self.constant(kind.anchor_label())?;
        self.insert_triple(Triple::new(marker, anchor, owner))?;
        Ok(anchor)
    }

    // ------------------------------------------------------------------
    // Dictionary

    /// Bind key→value on the owner's dictionary. Write-once: rebinding a key
    /// is an edit and therefore a revision, never an overwrite.
    pub fn dict_put(
        &mut self,
        owner: DocumentId,
        key: DocumentId,
        value: DocumentId,
    ) -> Result<()> {
        let anchor = self.ensure_anchor(owner, ContainerKind::Dictionary)?;
        if !self.query(Some(key), None, Some(anchor)).is_empty() {
            return Err(GilError::KeyAlreadyBound { owner, key });
        }
        self.insert_triple(Triple::new(key, value, anchor))
    }

    /// The unique value bound to key, or None without an anchor or binding.
    pub fn dict_get(&self, owner: DocumentId, key: DocumentId) -> Result<Option<DocumentId>> {
        let Some(anchor) = self.anchor_of(owner, ContainerKind::Dictionary)? else {
            return Ok(None);
        };
        let found = self.query(Some(key), None, Some(anchor));
        match found.len() {
            0 => Ok(None),
            1 => Ok(Some(found[0].first)),
            n => Err(GilError::malformed_container(
                owner,
                format!("key {key} carries {n} values"),
            )),
        }
    }

    /// All (key, value) bindings on the owner's dictionary, in key id order.
    pub fn dict_entries(&self, owner: DocumentId) -> Result<Vec<(DocumentId, DocumentId)>> {
        let Some(anchor) = self.anchor_of(owner, ContainerKind::Dictionary)? else {
            return Ok(Vec::new());
        };
        Ok(self
            .query(None, None, Some(anchor))
            .into_iter()
            .map(|t| (t.marker, t.first))
            .collect())
    }

    // ------------------------------------------------------------------
    // List

    /// Append value at the next free index; returns that index.
    pub fn list_append(&mut self, owner: DocumentId, value: DocumentId) -> Result<usize> {
        let anchor = self.ensure_anchor(owner, ContainerKind::List)?;
        let n = decode_list(self, owner, anchor)?.len();
        let index_key = self.int_key(n);
        self.insert_triple(Triple::new(index_key, value, anchor))?;
        Ok(n)
    }

    /// Values in index order 0..len-1. Gaps or duplicate indexes (possible
    /// only from raw or merged data) are malformed.
    pub fn list_items(&self, owner: DocumentId) -> Result<Vec<DocumentId>> {
        match self.anchor_of(owner, ContainerKind::List)? {
            None => Ok(Vec::new()),
            Some(anchor) => decode_list(self, owner, anchor),
        }
    }

    // ------------------------------------------------------------------
    // Set

    /// Add a member; duplicates are no-ops by triple set semantics.
    pub fn set_add(&mut self, owner: DocumentId, member: DocumentId) -> Result<()> {
        let anchor = self.ensure_anchor(owner, ContainerKind::Set)?;
        let marker = self.constant(ELEMENT_OF)?;
        self.insert_triple(Triple::new(marker, member, anchor))
    }

    /// Members in canonical id order.
    pub fn set_members(&self, owner: DocumentId) -> Result<Vec<DocumentId>> {
        let Some(anchor) = self.anchor_of(owner, ContainerKind::Set)? else {
            return Ok(Vec::new());
        };
        Ok(self
            .query(Some(constant_id(ELEMENT_OF)), None, Some(anchor))
            .into_iter()
            .map(|t| t.first)
            .collect())
    }

    // ------------------------------------------------------------------
    // N-ary relations

    /// Assert one instance of the relation named by `marker`.
    ///
    /// Arity 2 is the native triple; arity 1 pads the second position with
    /// the Unit constant; arity ≥ 3 reduces to a fresh instance document
    /// whose dictionary maps int:0 to the marker and int:k to argument k-1.
    /// Returns the instance document, or Unit for the native arities.
    pub fn assert_relation(
        &mut self,
        marker: DocumentId,
        args: &[DocumentId],
    ) -> Result<DocumentId> {
        match args {
            [] => Err(GilError::EmptyRelation),
            [a] => {
                let unit = self.constant(UNIT)?;
                self.insert_triple(Triple::new(marker, *a, unit))?;
                Ok(unit)
            }
            [a, b] => {
                let unit = self.constant(UNIT)?;
                self.insert_triple(Triple::new(marker, *a, *b))?;
                Ok(unit)
            }
            _ => {
                let instance = self.mint_id();
                self.insert_document(instance, Payload::Empty)?;
                let k0 = self.int_key(0);
                self.dict_put(instance, k0, marker)?;
                for (i, arg) in args.iter().enumerate() {
                    let key = self.int_key(i + 1);
                    self.dict_put(instance, key, *arg)?;
                }
                Ok(instance)
            }
        }
    }

    /// Every instance of the relation named by `marker`, native and reduced,
    /// as full argument tuples sorted lexicographically.
    ///
    /// A native triple (marker, x, Unit) decodes as the unary tuple (x):
    /// unary assertions pad with Unit, so a binary assertion with Unit as
    /// its literal second argument is indistinguishable by construction.
    pub fn relation_instances(&self, marker: DocumentId) -> Result<Vec<Vec<DocumentId>>> {
        let unit = constant_id(UNIT);
        let mut tuples = Vec::new();
        for t in self.query(Some(marker), None, None) {
            if t.second == unit {
                tuples.push(vec![t.first]);
            } else {
                tuples.push(vec![t.first, t.second]);
            }
        }

        // Reduced instances: anchors whose int:0 binding is this marker.
        let k0 = constant_id(&constants::int_label(0));
        let dict_marker = ContainerKind::Dictionary.anchor_marker();
        for binding in self.query(Some(k0), Some(marker), None) {
            let anchor = binding.second;
            for anchor_triple in self.query(Some(dict_marker), Some(anchor), None) {
                let instance = anchor_triple.second;
                let mut args = Vec::new();
                let mut k = 1;
                while let Some(v) = self.dict_get(instance, constant_id(&constants::int_label(k)))? {
                    args.push(v);
                    k += 1;
                }
                tuples.push(args);
            }
        }
        tuples.sort();
        Ok(tuples)
    }

    // ------------------------------------------------------------------
    // Hierarchy and reconstruction

    /// Direct children: dictionary values and keys, list elements, set
    /// members. Anchors are structural, not children. Sorted, deduplicated.
    pub fn children(&self, d: DocumentId) -> Result<Vec<DocumentId>> {
        let mut out = BTreeSet::new();
        for kind in ContainerKind::ALL {
            for anchor_triple in self.query(Some(kind.anchor_marker()), None, Some(d)) {
                let anchor = anchor_triple.first;
                for binding in self.query(None, None, Some(anchor)) {
                    out.insert(binding.first);
                    if kind == ContainerKind::Dictionary {
                        out.insert(binding.marker);
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// The self-contained subgraph of d: the least closure of d under
    /// children, plus every anchor document, anchor triple, and binding
    /// triple along the way. Terminates on cycles via the visited set.
    pub fn reconstruct(&self, d: DocumentId) -> Result<Subgraph> {
        let mut sub = Subgraph::default();
        let mut queue = VecDeque::from([d]);
        let mut visited = BTreeSet::new();
        while let Some(doc) = queue.pop_front() {
            if !visited.insert(doc) {
                continue;
            }
            if let Some(p) = self.payload(doc) {
                sub.documents.insert(doc, p.clone());
            }
            for kind in ContainerKind::ALL {
                for anchor_triple in self.query(Some(kind.anchor_marker()), None, Some(doc)) {
                    let anchor = anchor_triple.first;
                    if let Some(p) = self.payload(anchor) {
                        sub.documents.insert(anchor, p.clone());
                    }
                    sub.triples.insert(anchor_triple);
                    for binding in self.query(None, None, Some(anchor)) {
                        sub.triples.insert(binding);
                        queue.push_back(binding.first);
                        if kind == ContainerKind::Dictionary {
                            // Keys carry meaning and count as descendants;
                            // list/set binding markers are constants any
                            // reader can re-derive, so they stay out.
                            queue.push_back(binding.marker);
                        }
                    }
                }
            }
        }
        Ok(sub)
    }
}

/// Decode list bindings into index order without any label table: the
/// int-key ids for indexes 0..n-1 are recomputed and matched. A marker that
/// is not one of them, a duplicate index, or a gap is malformed. Anchor
/// triples landing on the anchor (the anchor owning containers of its own)
/// are not bindings and are ignored.
fn decode_list(domain: &Domain, owner: DocumentId, anchor: DocumentId) -> Result<Vec<DocumentId>> {
    let anchor_markers: [DocumentId; 3] =
        ContainerKind::ALL.map(|k| k.anchor_marker());
    let bindings: Vec<Triple> = domain
        .query(None, None, Some(anchor))
        .into_iter()
        .filter(|t| !anchor_markers.contains(&t.marker))
        .collect();
    let n = bindings.len();
    let index_of: BTreeMap<DocumentId, usize> =
        (0..n).map(|k| (constants::int_key(k), k)).collect();
    let mut items: Vec<Option<DocumentId>> = vec![None; n];
    for b in &bindings {
        let Some(&k) = index_of.get(&b.marker) else {
            return Err(GilError::malformed_container(
                owner,
                format!("list binding with non-contiguous or foreign key {}", b.marker),
            ));
        };
        if items[k].replace(b.first).is_some() {
            return Err(GilError::malformed_container(
                owner,
                format!("duplicate list index {k}"),
            ));
        }
    }
    // n bindings over n slots with no duplicate: all present.
    Ok(items.into_iter().map(|v| v.unwrap()).collect())
}
