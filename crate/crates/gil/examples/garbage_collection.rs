//! Permanence with an escape hatch: documents are erased only by an explicit
//! collection pass, and only when no observation pins them. Liveness is the
//! closure of observed documents under container structure, plus bootstrap
//! constants and registered actors.
//!
//! Run with: cargo run --example garbage_collection

use gil::{Domain, Payload};
use std::collections::BTreeMap;

fn doc(d: &mut Domain, text: &str) -> gil::Result<gil::DocumentId> {
    let id = d.mint_id();
    d.insert_document(id, Payload::Text(text.into()))?;
    Ok(id)
}

fn main() -> gil::Result<()> {
    let mut domain = Domain::seeded(5);
    let librarian = domain.register_actor(BTreeMap::new())?.actor_id;

    // An observed tree: root -> {key: child}, child holds one list element.
    let root = doc(&mut domain, "shelf")?;
    let key = doc(&mut domain, "catalog")?;
    let child = doc(&mut domain, "catalog 1984")?;
    let entry = doc(&mut domain, "entry")?;
    domain.dict_put(root, key, child)?;
    domain.list_append(child, entry)?;
    let pin = domain.observe(librarian, root)?;
    println!("observation {} pins {}", pin.observation_id, root);

    // Scratch data nobody observes.
    let scratch = doc(&mut domain, "scratch")?;
    let scrap = doc(&mut domain, "scrap")?;
    domain.set_add(scratch, scrap)?;

    // The live set is the structural closure of the roots: the whole shelf
    // tree survives through one observation at its top.
    let live = domain.live_set();
    for (id, label) in [(root, "root"), (key, "key"), (child, "child"), (entry, "entry")] {
        assert!(live.contains(&id), "{label} must be live");
    }
    assert!(!live.contains(&scratch));

    // Erasure is explicit, audited, and idempotent.
    let snapshot_before = domain.reconstruct(root)?.canonical_bytes();
    let report = domain.collect();
    println!(
        "collect removed {} documents, {} triples",
        report.documents_removed, report.triples_removed
    );
    assert!(!domain.contains_document(scratch));
    assert_eq!(domain.collect().documents_removed, 0);

    // What survived is bit-for-bit what was there before the pass.
    assert_eq!(domain.reconstruct(root)?.canonical_bytes(), snapshot_before);
    println!("observed tree reconstructs identically after collection");

    // Release the pin and the whole closure becomes collectable.
    domain.release(pin.observation_id)?;
    let report = domain.collect();
    println!(
        "after release: removed {} documents, {} triples",
        report.documents_removed, report.triples_removed
    );
    assert!(!domain.contains_document(root));

    // Constants and actors never go away; the audit log kept every pass.
    assert!(domain.contains_document(librarian));
    let collects = domain
        .audit()
        .iter()
        .filter(|e| matches!(e.kind, gil::AuditKind::Collect { .. }))
        .count();
    println!("audit log records {collects} collection passes");
    Ok(())
}
