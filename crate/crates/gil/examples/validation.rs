//! Self-describing validation: the rules a domain must satisfy live inside
//! the domain itself, as ordinary documents. Registering a model activates
//! checks; violations name concrete documents, never just "something is
//! wrong".
//!
//! Run with: cargo run --example validation

use gil::{ContainerKind, Domain, Payload, Triple, BUILTIN_CHECKS};

fn doc(d: &mut Domain, text: &str) -> gil::Result<gil::DocumentId> {
    let id = d.mint_id();
    d.insert_document(id, Payload::Text(text.into()))?;
    Ok(id)
}

fn main() -> gil::Result<()> {
    let mut domain = Domain::seeded(8);

    // With no model registered, validate() has nothing to enforce.
    assert!(domain.validate().ok());
    println!("no model registered: validation is vacuous");

    // Register a model activating every built-in check. The model is stored
    // as documents in the graph, so it exports, merges, and syncs like any
    // other data.
    let model = domain.register_micromodel("core-wellformedness", &BUILTIN_CHECKS)?;
    println!(
        "registered {:?} as document {} with checks {:?}",
        model.label, model.model_doc, model.check_ids
    );

    // Anything built through the public API stays clean.
    let outer = doc(&mut domain, "outer")?;
    let key = doc(&mut domain, "key")?;
    let inner = doc(&mut domain, "inner")?;
    let item = doc(&mut domain, "item")?;
    domain.dict_put(outer, key, inner)?;
    domain.list_append(inner, item)?;
    assert!(domain.validate().ok());
    println!("API-built structure passes all checks");

    // Raw triples can express states the API would refuse. Binding `outer`
    // into `inner`'s list closes a containment cycle: outer holds inner
    // holds outer.
    let inner_list_anchor = domain.anchor_of(inner, ContainerKind::List)?.unwrap();
    domain.insert_triple(Triple::new(key, outer, inner_list_anchor))?;

    let report = domain.validate();
    println!("\nafter hand-writing a cycle triple:");
    for v in &report.violations {
        println!("  {v}");
    }
    let cycle = report
        .violations
        .iter()
        .find(|v| v.check == "hierarchy-acyclic")
        .expect("cycle reported");
    assert!(cycle.subjects.contains(&outer) && cycle.subjects.contains(&inner));

    // Checks can also be run directly, without registering anything.
    let fresh = Domain::seeded(9);
    assert!(fresh.run_checks(&["containers-wf"])?.ok());
    match fresh.run_checks(&["no-such-check"]) {
        Err(gil::GilError::UnknownCheck(_)) => println!("\nunknown check names are refused"),
        other => panic!("expected UnknownCheck, got {other:?}"),
    }
    Ok(())
}
