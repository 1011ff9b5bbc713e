//! Observation-rooted garbage collection.
//!
//! A document is erased only when nobody knows it: not observed, not part of
//! an observed document's structural closure, not a bootstrap constant, not
//! a registered actor. Revision predecessors are deliberately NOT retained
//! by their successors — an unobserved chain tail is exactly the knowledge
//! nobody holds anymore. Callers who want history pinned observe the whole
//! chain (the CLI exposes `observe --curve` for this).

use crate::error::{GilError, Result};
use crate::model::DocumentId;
use crate::store::{Domain, ObservationRecord};
use crate::structure::ContainerKind;
use std::collections::{BTreeSet, VecDeque};

/// What one collection removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectReport {
    pub documents_removed: u64,
    pub triples_removed: u64,
}

impl Domain {
    /// Pin target on behalf of actor. Idempotent per (actor, target): a
    /// second observe returns the existing record.
    pub fn observe(&mut self, actor: DocumentId, target: DocumentId) -> Result<ObservationRecord> {
        if !self.contains_document(target) {
            return Err(GilError::UnknownDocument { id: target });
        }
        if !self.contains_document(actor) {
            return Err(GilError::UnknownDocument { id: actor });
        }
        if let Some(existing) = self
            .observations()
            .find(|o| o.actor == actor && o.target == target)
        {
            return Ok(existing.clone());
        }
        let record = ObservationRecord {
            observation_id: self.mint_id(),
            actor,
            target,
            created: self.now_ms(),
        };
        self.raw_set_observation(record.clone());
        Ok(record)
    }

    /// Drop one observation by id.
    pub fn release(&mut self, observation_id: DocumentId) -> Result<()> {
        match self.observations_mut().remove(&observation_id) {
            Some(_) => Ok(()),
            None => Err(GilError::UnknownObservation { id: observation_id }),
        }
    }

    /// The least fixed point of "known": observed targets, bootstrap
    /// constants, and registered actors are roots; any live document keeps
    /// its anchors, and every binding on a live anchor keeps its key and its
    /// value/member. Relation instances never resurrect anything.
    pub fn live_set(&self) -> BTreeSet<DocumentId> {
        let mut live = BTreeSet::new();
        let mut queue: VecDeque<DocumentId> = VecDeque::new();

        for (id, _) in self.documents() {
            if id.is_constant() {
                queue.push_back(id);
            }
        }
        for obs in self.observations() {
            queue.push_back(obs.target);
        }
        for actor in self.actors() {
            queue.push_back(actor.actor_id);
        }

        while let Some(d) = queue.pop_front() {
            if !live.insert(d) {
                continue;
            }
            for kind in ContainerKind::ALL {
                for anchor_triple in self.query(Some(kind.anchor_marker()), None, Some(d)) {
                    let anchor = anchor_triple.first;
                    live.insert(anchor);
                    for binding in self.query(None, None, Some(anchor)) {
                        queue.push_back(binding.first);
                        queue.push_back(binding.marker);
                    }
                }
            }
        }
        live.retain(|id| self.contains_document(*id));
        live
    }

    /// Remove everything outside the live set, plus every triple touching a
    /// removed document. Appends one Collect entry to the audit log.
    /// Idempotent: a second collect removes nothing.
    pub fn collect(&mut self) -> CollectReport {
        let live = self.live_set();
        let dead: Vec<DocumentId> = self
            .documents()
            .map(|(id, _)| id)
            .filter(|id| !live.contains(id))
            .collect();
        let dead_set: BTreeSet<DocumentId> = dead.iter().copied().collect();
        let doomed_triples: Vec<_> = self
            .triples()
            .filter(|t| t.endpoints().iter().any(|e| dead_set.contains(e)))
            .copied()
            .collect();

        for t in &doomed_triples {
            self.raw_remove_triple(t);
        }
        for id in &dead {
            self.raw_remove_document(*id);
        }
        let report = CollectReport {
            documents_removed: dead.len() as u64,
            triples_removed: doomed_triples.len() as u64,
        };
        self.push_collect_entry(report.documents_removed, report.triples_removed);
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Payload;
    use std::collections::BTreeMap;

    fn doc(d: &mut Domain) -> DocumentId {
        let id = d.mint_id();
        d.insert_document(id, Payload::Empty).unwrap();
        id
    }

    fn actor(d: &mut Domain) -> DocumentId {
        d.register_actor(BTreeMap::new()).unwrap().actor_id
    }

    #[test]
    fn observe_is_idempotent_and_release_unpins() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let t = doc(&mut d);
        let o1 = d.observe(a, t).unwrap();
        let o2 = d.observe(a, t).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(d.observations().count(), 1);

        d.release(o1.observation_id).unwrap();
        assert_eq!(d.observations().count(), 0);
        assert!(matches!(
            d.release(o1.observation_id),
            Err(GilError::UnknownObservation { .. })
        ));
    }

    #[test]
    fn observe_requires_both_endpoints() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let ghost = DocumentId::raw(5, 5);
        assert!(matches!(
            d.observe(a, ghost),
            Err(GilError::UnknownDocument { .. })
        ));
        let t = doc(&mut d);
        assert!(matches!(
            d.observe(ghost, t),
            Err(GilError::UnknownDocument { .. })
        ));
    }

    #[test]
    fn observed_child_closure_is_live() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let (root, k, child) = (doc(&mut d), doc(&mut d), doc(&mut d));
        d.dict_put(root, k, child).unwrap();
        d.observe(a, root).unwrap();

        let live = d.live_set();
        assert!(live.contains(&root));
        assert!(live.contains(&child));
        assert!(live.contains(&k));
        let anchor = d
            .anchor_of(root, ContainerKind::Dictionary)
            .unwrap()
            .unwrap();
        assert!(live.contains(&anchor));

        let isolated = doc(&mut d);
        assert!(!d.live_set().contains(&isolated));
    }

    #[test]
    fn unobserved_predecessor_is_not_retained() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let old = doc(&mut d);
        let ctx = crate::revision::RevisionContext {
            actor: a,
            time: 5,
            place: String::new(),
        };
        let new = d
            .revise_payload(old, Payload::Text("v2".into()), &ctx)
            .unwrap()
            .mapping[&old];
        d.observe(a, new).unwrap();
        let live = d.live_set();
        assert!(live.contains(&new));
        assert!(!live.contains(&old));
    }

    #[test]
    fn collect_reports_and_is_idempotent() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let keep = doc(&mut d);
        d.observe(a, keep).unwrap();

        let _garbage = doc(&mut d);
        let report = d.collect();
        assert_eq!(report.documents_removed, 1);
        assert_eq!(report.triples_removed, 0);

        let again = d.collect();
        assert_eq!(again.documents_removed, 0);
        assert_eq!(again.triples_removed, 0);
    }

    #[test]
    fn garbage_subtree_goes_away_with_its_triples() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let keep = doc(&mut d);
        d.observe(a, keep).unwrap();

        // Unobserved root with two dict children and one list element:
        // 5 documents in the subtree plus 2 anchors.
        let root = doc(&mut d);
        let (k1, c1, c2, el) = (doc(&mut d), doc(&mut d), doc(&mut d), doc(&mut d));
        let k2 = doc(&mut d);
        d.dict_put(root, k1, c1).unwrap();
        d.dict_put(root, k2, c2).unwrap();
        d.list_append(root, el).unwrap();

        let docs_before = d.document_count();
        let triples_before = d.triple_count();
        let report = d.collect();
        assert_eq!(report.documents_removed as usize, 8); // root,k1,k2,c1,c2,el,2 anchors
        assert_eq!(report.triples_removed as usize, 5); // 2 anchor triples + 3 bindings
        assert_eq!(d.document_count(), docs_before - 8);
        assert_eq!(d.triple_count(), triples_before - 5);
        assert!(d.contains_document(keep));
    }

    #[test]
    fn all_observed_means_nothing_to_collect() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        for _ in 0..5 {
            let t = doc(&mut d);
            d.observe(a, t).unwrap();
        }
        let report = d.collect();
        assert_eq!((report.documents_removed, report.triples_removed), (0, 0));
    }

    #[test]
    fn reconstruct_is_byte_identical_across_collect() {
        let mut d = Domain::seeded(3);
        let a = actor(&mut d);
        let root = doc(&mut d);
        let (k, v, el) = (doc(&mut d), doc(&mut d), doc(&mut d));
        d.dict_put(root, k, v).unwrap();
        d.list_append(v, el).unwrap();
        d.observe(a, root).unwrap();
        let _garbage = doc(&mut d);

        let before = d.reconstruct(root).unwrap().canonical_bytes();
        d.collect();
        let after = d.reconstruct(root).unwrap().canonical_bytes();
        assert_eq!(before, after);
    }

    #[test]
    fn release_then_collect_removes_the_released_closure() {
        let mut d = Domain::seeded(1);
        let a = actor(&mut d);
        let t = doc(&mut d);
        let obs = d.observe(a, t).unwrap();
        assert_eq!(d.collect().documents_removed, 0);
        d.release(obs.observation_id).unwrap();
        assert_eq!(d.collect().documents_removed, 1);
    }

    #[test]
    fn collect_audits_one_entry() {
        let mut d = Domain::seeded(1);
        let _garbage = doc(&mut d);
        d.collect();
        let collects: Vec<_> = d
            .audit()
            .iter()
            .filter(|e| matches!(e.kind, crate::store::AuditKind::Collect { .. }))
            .collect();
        assert_eq!(collects.len(), 1);
        assert!(matches!(
            collects[0].kind,
            crate::store::AuditKind::Collect {
                documents: 1,
                triples: 0
            }
        ));
    }
}
