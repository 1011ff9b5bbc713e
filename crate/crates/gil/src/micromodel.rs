//! Micro-models: named bundles of validation rules, registered as documents
//! so that the rules a domain lives by travel with the domain itself.
//!
//! The registry is a Set container on the MicroModelRegistry constant; each
//! model is a Text document (the label) carrying a List of Text documents
//! naming built-in checks. Registration is therefore ordinary graph content:
//! it survives export, merge, and sync like everything else.
//!
//! Violations are data, not errors — a malformed domain still validates,
//! it just reports what is wrong and where.

use crate::constants::{constant_id, MICROMODEL_REGISTRY, REVISION_CONTEXT, REVISION_OF};
use crate::error::{GilError, Result};
use crate::model::DocumentId;
use crate::model::Payload;
use crate::store::{AuditKind, Domain};
use crate::structure::ContainerKind;
use std::collections::{BTreeMap, BTreeSet};

pub const CHECK_CONTAINERS: &str = "containers-wf";
pub const CHECK_HIERARCHY: &str = "hierarchy-acyclic";
pub const CHECK_REVISION: &str = "revision-wf";
pub const CHECK_GROWTH: &str = "growth-monotone";

/// Every built-in check, in report order.
pub const BUILTIN_CHECKS: [&str; 4] = [
    CHECK_CONTAINERS,
    CHECK_HIERARCHY,
    CHECK_REVISION,
    CHECK_GROWTH,
];

/// A registered micro-model: its document and the checks it activates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroModel {
    pub model_doc: DocumentId,
    pub label: String,
    pub check_ids: Vec<String>,
}

/// One broken rule: which check, where, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub check: &'static str,
    pub subjects: Vec<DocumentId>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.check)?;
        for s in &self.subjects {
            write!(f, " {s}")?;
        }
        write!(f, " {}", self.message)
    }
}

/// The outcome of running a set of checks over one domain snapshot.
/// Deterministic: same snapshot, same report.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn known_check(label: &str) -> Result<&'static str> {
    BUILTIN_CHECKS
        .into_iter()
        .find(|c| *c == label)
        .ok_or_else(|| GilError::UnknownCheck(label.to_string()))
}

impl Domain {
    /// Register the model named `label` activating the given built-in
    /// checks. Idempotent per label: re-registering returns the existing
    /// model untouched.
    pub fn register_micromodel(&mut self, label: &str, check_ids: &[&str]) -> Result<MicroModel> {
        for c in check_ids {
            known_check(c)?;
        }
        if let Some(existing) = self
            .registered_micromodels()?
            .into_iter()
            .find(|m| m.label == label)
        {
            return Ok(existing);
        }
        let registry = self.constant(MICROMODEL_REGISTRY)?;
        let model_doc = self.mint_id();
        self.insert_document(model_doc, Payload::Text(label.to_string()))?;
        for c in check_ids {
            let check_doc = self.mint_id();
            self.insert_document(check_doc, Payload::Text((*c).to_string()))?;
            self.list_append(model_doc, check_doc)?;
        }
        self.set_add(registry, model_doc)?;
        Ok(MicroModel {
            model_doc,
            label: label.to_string(),
            check_ids: check_ids.iter().map(|c| c.to_string()).collect(),
        })
    }

    /// Every model in the registry set, sorted by model document id.
    /// Non-Text members and non-Text check entries are skipped: they are
    /// somebody else's data, not models.
    pub fn registered_micromodels(&self) -> Result<Vec<MicroModel>> {
        let registry = constant_id(MICROMODEL_REGISTRY);
        if !self.contains_document(registry) {
            return Ok(Vec::new());
        }
        let mut models = Vec::new();
        for member in self.set_members(registry)? {
            let Some(Payload::Text(label)) = self.payload(member) else {
                continue;
            };
            let mut check_ids = Vec::new();
            for item in self.list_items(member)? {
                if let Some(Payload::Text(check)) = self.payload(item) {
                    check_ids.push(check.clone());
                }
            }
            models.push(MicroModel {
                model_doc: member,
                label: label.clone(),
                check_ids,
            });
        }
        Ok(models)
    }

    /// Run exactly the checks activated by registered micro-models (each
    /// check at most once). No models registered means nothing to violate.
    pub fn validate(&self) -> ValidationReport {
        let mut active: BTreeSet<&'static str> = BTreeSet::new();
        if let Ok(models) = self.registered_micromodels() {
            for m in &models {
                for c in &m.check_ids {
                    if let Ok(known) = known_check(c) {
                        active.insert(known);
                    }
                }
            }
        }
        let labels: Vec<&str> = BUILTIN_CHECKS
            .into_iter()
            .filter(|c| active.contains(c))
            .collect();
        self.run_checks(&labels).expect("labels are pre-validated")
    }

    /// Run the named built-in checks directly, registry or not.
    pub fn run_checks(&self, labels: &[&str]) -> Result<ValidationReport> {
        let mut report = ValidationReport::default();
        for label in labels {
            match known_check(label)? {
                CHECK_CONTAINERS => check_containers(self, &mut report),
                CHECK_HIERARCHY => check_hierarchy(self, &mut report),
                CHECK_REVISION => check_revision(self, &mut report),
                CHECK_GROWTH => check_growth(self, &mut report),
                _ => unreachable!("known_check covers all labels"),
            }
        }
        Ok(report)
    }
}

fn violation(
    report: &mut ValidationReport,
    check: &'static str,
    subjects: Vec<DocumentId>,
    message: impl Into<String>,
) {
    report.violations.push(Violation {
        check,
        subjects,
        message: message.into(),
    });
}

/// Anchor uniqueness per (owner, kind); List/Set exclusion; dictionary key
/// single-valuedness; list index contiguity from 0.
fn check_containers(d: &Domain, report: &mut ValidationReport) {
    let anchor_markers: [DocumentId; 3] = ContainerKind::ALL.map(|k| k.anchor_marker());
    let mut anchors_by_owner: BTreeMap<DocumentId, BTreeMap<usize, Vec<DocumentId>>> =
        BTreeMap::new();
    for (i, kind) in ContainerKind::ALL.iter().enumerate() {
        for t in d.query(Some(kind.anchor_marker()), None, None) {
            anchors_by_owner
                .entry(t.second)
                .or_default()
                .entry(i)
                .or_default()
                .push(t.first);
        }
    }

    for (owner, by_kind) in &anchors_by_owner {
        for (i, anchors) in by_kind {
            if anchors.len() > 1 {
                let mut subjects = vec![*owner];
                subjects.extend(anchors);
                violation(
                    report,
                    CHECK_CONTAINERS,
                    subjects,
                    format!(
                        "{} {:?} anchors on one owner",
                        anchors.len(),
                        ContainerKind::ALL[*i].anchor_label()
                    ),
                );
            }
        }
        if by_kind.contains_key(&1) && by_kind.contains_key(&2) {
            violation(
                report,
                CHECK_CONTAINERS,
                vec![*owner],
                "owner carries both a List and a Set".to_string(),
            );
        }
    }

    // Dictionary: at most one value per key on each anchor. Sub-anchor
    // triples on the anchor are containers of the anchor document itself,
    // not bindings, and multiples of those are reported above.
    for t in d.query(Some(ContainerKind::Dictionary.anchor_marker()), None, None) {
        let (anchor, owner) = (t.first, t.second);
        let mut by_key: BTreeMap<DocumentId, Vec<DocumentId>> = BTreeMap::new();
        for b in d.query(None, None, Some(anchor)) {
            if !anchor_markers.contains(&b.marker) {
                by_key.entry(b.marker).or_default().push(b.first);
            }
        }
        for (key, values) in by_key {
            if values.len() > 1 {
                let mut subjects = vec![owner, key];
                subjects.extend(values.iter());
                violation(
                    report,
                    CHECK_CONTAINERS,
                    subjects,
                    format!("dictionary key bound to {} values", values.len()),
                );
            }
        }
    }

    // List: decoding enforces contiguity from 0 with unique indexes.
    for t in d.query(Some(ContainerKind::List.anchor_marker()), None, None) {
        if let Err(e) = d.list_items(t.second) {
            violation(report, CHECK_CONTAINERS, vec![t.second], e.to_string());
        }
    }
}

/// No document reaches itself by following parent edges.
fn check_hierarchy(d: &Domain, report: &mut ValidationReport) {
    // Iterative DFS with the usual three colors; every distinct cycle is
    // reported once (from its first entry point).
    let mut done: BTreeSet<DocumentId> = BTreeSet::new();
    let mut reported: BTreeSet<Vec<DocumentId>> = BTreeSet::new();
    for (start, _) in d.documents() {
        if done.contains(&start) {
            continue;
        }
        let mut stack: Vec<(DocumentId, Vec<DocumentId>)> = vec![(start, d.parents(start))];
        let mut path: Vec<DocumentId> = vec![start];
        let mut on_path: BTreeSet<DocumentId> = BTreeSet::from([start]);
        while let Some((node, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(parent) if on_path.contains(&parent) => {
                    let pos = path.iter().position(|x| *x == parent).expect("on path");
                    let mut cycle: Vec<DocumentId> = path[pos..].to_vec();
                    cycle.sort();
                    if reported.insert(cycle.clone()) {
                        violation(
                            report,
                            CHECK_HIERARCHY,
                            cycle,
                            "document is its own ancestor".to_string(),
                        );
                    }
                }
                Some(parent) if !done.contains(&parent) => {
                    path.push(parent);
                    on_path.insert(parent);
                    let parents = d.parents(parent);
                    stack.push((parent, parents));
                }
                Some(_) => {}
                None => {
                    done.insert(*node);
                    on_path.remove(node);
                    path.pop();
                    stack.pop();
                }
            }
        }
    }
}

/// At most one predecessor per document; revision edges acyclic; every
/// revised document carries a context link.
fn check_revision(d: &Domain, report: &mut ValidationReport) {
    let rev = constant_id(REVISION_OF);
    let ctx = constant_id(REVISION_CONTEXT);
    let edges: Vec<_> = d.query(Some(rev), None, None);

    let mut preds: BTreeMap<DocumentId, Vec<DocumentId>> = BTreeMap::new();
    for t in &edges {
        preds.entry(t.first).or_default().push(t.second);
    }
    for (doc, ps) in &preds {
        if ps.len() > 1 {
            let mut subjects = vec![*doc];
            subjects.extend(ps.iter());
            violation(
                report,
                CHECK_REVISION,
                subjects,
                format!("{} revision predecessors", ps.len()),
            );
        }
        if d.query(Some(ctx), Some(*doc), None).is_empty() {
            violation(
                report,
                CHECK_REVISION,
                vec![*doc],
                "revised document has no revision context".to_string(),
            );
        }
    }

    // Cycle scan over new→old edges; the graph is tiny relative to the
    // domain (one edge per revision), so a fresh walk per node is fine.
    let mut done: BTreeSet<DocumentId> = BTreeSet::new();
    let mut reported: BTreeSet<Vec<DocumentId>> = BTreeSet::new();
    for start in preds.keys().copied() {
        if done.contains(&start) {
            continue;
        }
        let mut path = vec![start];
        let mut on_path = BTreeSet::from([start]);
        loop {
            let cur = *path.last().expect("path never empty");
            let next = preds.get(&cur).and_then(|ps| ps.first()).copied();
            match next {
                Some(n) if on_path.contains(&n) => {
                    let pos = path.iter().position(|x| *x == n).expect("on path");
                    let mut cycle: Vec<DocumentId> = path[pos..].to_vec();
                    cycle.sort();
                    if reported.insert(cycle.clone()) {
                        violation(
                            report,
                            CHECK_REVISION,
                            cycle,
                            "revision relation forms a cycle".to_string(),
                        );
                    }
                    break;
                }
                Some(n) if !done.contains(&n) => {
                    path.push(n);
                    on_path.insert(n);
                }
                _ => break,
            }
        }
        done.extend(path);
    }
}

/// Replaying the audit log never shrinks the store except at Collect
/// entries: every insert after the last Collect must still be present, and
/// sequences must strictly increase.
fn check_growth(d: &Domain, report: &mut ValidationReport) {
    let audit = d.audit();
    for pair in audit.windows(2) {
        if pair[1].sequence <= pair[0].sequence {
            let mut subjects: Vec<DocumentId> = Vec::new();
            for e in pair {
                match &e.kind {
                    AuditKind::DocInsert(id) => subjects.push(*id),
                    AuditKind::TripleInsert(t) => subjects.extend(t.endpoints()),
                    AuditKind::Collect { .. } => {}
                }
            }
            subjects.sort();
            subjects.dedup();
            violation(
                report,
                CHECK_GROWTH,
                subjects,
                format!(
                    "audit sequence regresses: {} then {}",
                    pair[0].sequence, pair[1].sequence
                ),
            );
        }
    }

    let last_collect = audit
        .iter()
        .rposition(|e| matches!(e.kind, AuditKind::Collect { .. }));
    let live_tail = match last_collect {
        Some(i) => &audit[i + 1..],
        None => audit,
    };
    for e in live_tail {
        match &e.kind {
            AuditKind::DocInsert(id) => {
                if !d.contains_document(*id) {
                    violation(
                        report,
                        CHECK_GROWTH,
                        vec![*id],
                        format!(
                            "document inserted at sequence {} vanished without a collect",
                            e.sequence
                        ),
                    );
                }
            }
            AuditKind::TripleInsert(t) => {
                if !d.contains_triple(t) {
                    violation(
                        report,
                        CHECK_GROWTH,
                        t.endpoints().to_vec(),
                        format!(
                            "triple inserted at sequence {} vanished without a collect",
                            e.sequence
                        ),
                    );
                }
            }
            AuditKind::Collect { .. } => {}
        }
    }
}
