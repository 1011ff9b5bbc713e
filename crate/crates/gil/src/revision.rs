//! The document life cycle: edits mint new documents for the target and
//! every ancestor, linked by IsARevisionOf into per-document revision
//! chains. Nothing is ever altered in place; the before-domain is always a
//! subset of the after-domain.

use crate::constants::{constant_id, ACTOR_KEY, PLACE_KEY, REVISION_CONTEXT, REVISION_OF, TIME_KEY};
use crate::error::{GilError, Result};
use crate::model::{DocumentId, Payload, Triple};
use crate::store::Domain;
use crate::structure::ContainerKind;
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Who edited, when, and where. The actor must be registered in the domain;
/// the clock is the caller's own (domains never agree on time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionContext {
    pub actor: DocumentId,
    pub time: u64,
    pub place: String,
}

/// What a revision produced: old→new id mapping over the target and exactly
/// its ancestor closure, plus the revision record document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionResult {
    pub mapping: BTreeMap<DocumentId, DocumentId>,
    pub record: DocumentId,
}

enum Edit {
    Payload(Payload),
    Rebind { key: DocumentId, value: DocumentId },
}

impl Domain {
    /// Direct parents of c: owners binding c as a dictionary value, list
    /// element, or set member. Keys do not make their binder a parent.
    pub fn parents(&self, c: DocumentId) -> Vec<DocumentId> {
        let mut out = BTreeSet::new();
        // c in first position covers exactly value/element/member bindings;
        // key usage puts c in marker position and is skipped by design.
        for t in self.query(None, Some(c), None) {
            let holder = t.second;
            for kind in ContainerKind::ALL {
                for anchor_triple in self.query(Some(kind.anchor_marker()), Some(holder), None) {
                    out.insert(anchor_triple.second);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Least closure of d under parent edges, excluding d itself.
    pub fn ancestors(&self, d: DocumentId) -> BTreeSet<DocumentId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<DocumentId> = self.parents(d).into();
        while let Some(p) = queue.pop_front() {
            if seen.insert(p) {
                queue.extend(self.parents(p));
            }
        }
        seen.remove(&d);
        seen
    }

    /// Replace the target's payload by minting a revised document, and
    /// propagate: every ancestor gets a revised version whose containers are
    /// rewired copies pointing at revised children where one exists.
    pub fn revise_payload(
        &mut self,
        target: DocumentId,
        new_payload: Payload,
        ctx: &RevisionContext,
    ) -> Result<RevisionResult> {
        if !self.contains_document(target) {
            return Err(GilError::UnknownDocument { id: target });
        }
        self.revise(target, Edit::Payload(new_payload), ctx)
    }

    /// Rebind one dictionary key on the owner; the owner's payload and all
    /// other bindings carry over. Propagates to ancestors identically.
    pub fn revise_attribute(
        &mut self,
        owner: DocumentId,
        key: DocumentId,
        new_value: DocumentId,
        ctx: &RevisionContext,
    ) -> Result<RevisionResult> {
        if !self.contains_document(owner) {
            return Err(GilError::UnknownDocument { id: owner });
        }
        if !self.contains_document(new_value) {
            return Err(GilError::UnknownDocument { id: new_value });
        }
        if self.dict_get(owner, key)?.is_none() {
            return Err(GilError::KeyNotBound { owner, key });
        }
        self.revise(owner, Edit::Rebind { key, value: new_value }, ctx)
    }

    fn revise(
        &mut self,
        target: DocumentId,
        edit: Edit,
        ctx: &RevisionContext,
    ) -> Result<RevisionResult> {
        if !self.is_actor(ctx.actor) {
            return Err(GilError::UnknownActor { id: ctx.actor });
        }

        let mut mapping = BTreeMap::new();
        mapping.insert(target, self.mint_id());
        for a in self.ancestors(target) {
            mapping.insert(a, self.mint_id());
        }

        // New versions: the target takes the edited payload, ancestors keep
        // their own.
        for (&old, &new) in &mapping {
            let payload = match (&edit, old == target) {
                (Edit::Payload(p), true) => p.clone(),
                _ => self.payload(old).cloned().expect("mapped ids exist"),
            };
            self.insert_document(new, payload)?;
        }

        // Rewired container copies: fresh anchors, bindings mapped through
        // the revision where they point at a revised document.
        for (&old, &new) in &mapping {
            for kind in ContainerKind::ALL {
                for anchor_triple in self.query(Some(kind.anchor_marker()), None, Some(old)) {
                    let old_anchor = anchor_triple.first;
                    let new_anchor = self.mint_id();
                    self.insert_document(new_anchor, Payload::Empty)?;
                    self.insert_triple(Triple::new(anchor_triple.marker, new_anchor, new))?;
                    for binding in self.query(None, None, Some(old_anchor)) {
                        let mut value = mapping.get(&binding.first).copied().unwrap_or(binding.first);
                        if old == target {
                            if let Edit::Rebind { key, value: v } = &edit {
                                if kind == ContainerKind::Dictionary && binding.marker == *key {
                                    value = *v;
                                }
                            }
                        }
                        self.insert_triple(Triple::new(binding.marker, value, new_anchor))?;
                    }
                }
            }
        }

        // The revision record: an ordinary document carrying actor, time,
        // and place as dictionary attributes, so it merges and serializes
        // with no special cases.
        let record = self.mint_id();
        self.insert_document(record, Payload::Empty)?;
        let time_doc = self.mint_id();
        self.insert_document(time_doc, Payload::Integer(BigInt::from(ctx.time)))?;
        let place_doc = self.mint_id();
        self.insert_document(place_doc, Payload::Text(ctx.place.clone()))?;
        let actor_key = self.constant(ACTOR_KEY)?;
        let time_key = self.constant(TIME_KEY)?;
        let place_key = self.constant(PLACE_KEY)?;
        self.dict_put(record, actor_key, ctx.actor)?;
        self.dict_put(record, time_key, time_doc)?;
        self.dict_put(record, place_key, place_doc)?;

        let revision_of = self.constant(REVISION_OF)?;
        let has_context = self.constant(REVISION_CONTEXT)?;
        for (&old, &new) in &mapping {
            self.insert_triple(Triple::new(revision_of, new, old))?;
            self.insert_triple(Triple::new(has_context, new, record))?;
        }

        Ok(RevisionResult { mapping, record })
    }

    /// The revision chain of d, oldest first, obtained by walking
    /// IsARevisionOf predecessors back to the original. The spatial name for
    /// the same idea is exposed by the CLI as `curve`.
    pub fn revision_chain(&self, d: DocumentId) -> Result<Vec<DocumentId>> {
        if !self.contains_document(d) {
            return Err(GilError::UnknownDocument { id: d });
        }
        let marker = constant_id(REVISION_OF);
        let mut chain = vec![d];
        let mut seen = BTreeSet::from([d]);
        let mut current = d;
        loop {
            let preds = self.query(Some(marker), Some(current), None);
            match preds.len() {
                0 => break,
                1 => {
                    let prev = preds[0].second;
                    if !seen.insert(prev) {
                        return Err(GilError::MalformedRevision {
                            id: prev,
                            reason: "predecessor cycle".into(),
                        });
                    }
                    chain.push(prev);
                    current = prev;
                }
                n => {
                    return Err(GilError::MalformedRevision {
                        id: current,
                        reason: format!("{n} predecessors"),
                    })
                }
            }
        }
        chain.reverse();
        Ok(chain)
    }

    /// Direct successors of d: every e with (IsARevisionOf, e, d). One step
    /// only; branching is unbounded.
    pub fn successors(&self, d: DocumentId) -> BTreeSet<DocumentId> {
        self.query(Some(constant_id(REVISION_OF)), None, Some(d))
            .into_iter()
            .map(|t| t.first)
            .collect()
    }
}
