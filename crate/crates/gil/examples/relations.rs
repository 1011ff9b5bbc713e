//! N-ary relations over the single ternary store.
//!
//! Arity 1 pads with the Unit constant, arity 2 is a plain triple, and arity
//! three or more gets a fresh instance document whose argument slots are
//! integer-keyed bindings.
//!
//! Run with: cargo run --example relations

use gil::{Domain, Payload};

fn doc(d: &mut Domain, text: &str) -> gil::Result<gil::DocumentId> {
    let id = d.mint_id();
    d.insert_document(id, Payload::Text(text.into()))?;
    Ok(id)
}

fn main() -> gil::Result<()> {
    let mut domain = Domain::seeded(3);

    let is_archived = doc(&mut domain, "IsArchived")?;
    let cites = doc(&mut domain, "Cites")?;
    let transfer = doc(&mut domain, "Transfer")?;

    let report = doc(&mut domain, "report")?;
    let ledger = doc(&mut domain, "ledger")?;
    let alice = doc(&mut domain, "alice")?;
    let bob = doc(&mut domain, "bob")?;
    let amount = {
        let id = domain.mint_id();
        domain.insert_document(id, Payload::Integer(250.into()))?;
        id
    };

    // Arity 1: a property. Stored as (marker, subject, Unit).
    domain.assert_relation(is_archived, &[report])?;
    // Arity 2: a plain edge.
    domain.assert_relation(cites, &[report, ledger])?;
    // Arity 4: instance document with slots 1..=4.
    let instance = domain.assert_relation(transfer, &[alice, bob, amount, report])?;
    println!("transfer instance: {instance}");

    for (marker, label) in [(is_archived, "IsArchived"), (cites, "Cites"), (transfer, "Transfer")] {
        let tuples = domain.relation_instances(marker)?;
        println!("{label}: {} tuple(s)", tuples.len());
        for tuple in &tuples {
            let rendered: Vec<String> = tuple
                .iter()
                .map(|id| match domain.payload(*id) {
                    Some(Payload::Text(t)) => t.clone(),
                    Some(Payload::Integer(n)) => n.to_string(),
                    _ => id.to_string(),
                })
                .collect();
            println!("  ({})", rendered.join(", "));
        }
    }

    // Same query, answered straight off the raw triples, agrees by
    // construction — the relation layer adds no hidden state.
    let direct = domain.query(Some(cites), None, None);
    println!("raw scan of Cites edges: {} triple(s)", direct.len());
    Ok(())
}
