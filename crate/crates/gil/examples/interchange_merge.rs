//! Canonical text interchange and conflict-free merging.
//!
//! A domain serializes to a deterministic line format — same content, same
//! bytes, no matter how it was built — and two domains that grew apart merge
//! by union, in either order, to the same digest.
//!
//! Run with: cargo run --example interchange_merge

use gil::{Domain, Payload};

fn doc(d: &mut Domain, text: &str) -> gil::Result<gil::DocumentId> {
    let id = d.mint_id();
    d.insert_document(id, Payload::Text(text.into()))?;
    Ok(id)
}

fn main() -> gil::Result<()> {
    // A shared starting point, then two replicas that evolve independently.
    // Reseeding gives each replica its own id entropy, as distinct machines
    // would have.
    let mut base = Domain::seeded(6);
    let shared = doc(&mut base, "shared root")?;

    let mut north = base.clone();
    let mut south = base.clone();
    north.reseed(61);
    south.reseed(62);

    let n_key = doc(&mut north, "north-key")?;
    let n_val = doc(&mut north, "made in the north")?;
    north.dict_put(shared, n_key, n_val)?;

    let s_member = doc(&mut south, "made in the south")?;
    south.set_add(shared, s_member)?;

    // Export is canonical: byte-identical across round trips.
    let bytes = north.export_canonical();
    println!("north exports {} bytes; first line: {:?}", bytes.len(), {
        let text = String::from_utf8(bytes.clone()).unwrap();
        text.lines().next().unwrap().to_string()
    });
    let reloaded = Domain::import_canonical(&bytes)?;
    assert_eq!(reloaded.export_canonical(), bytes);
    assert_eq!(reloaded.digest(), north.digest());
    println!("round trip preserves the digest: {}", reloaded.digest());

    // Merge is a union and commutes: north+south == south+north, digest-wise.
    let ns = north.merge(&south)?;
    let sn = south.merge(&north)?;
    assert_eq!(ns.digest(), sn.digest());
    println!("\nmerged digest (either order): {}", ns.digest());

    // Both contributions landed on the one shared document.
    assert_eq!(ns.dict_get(shared, n_key)?, Some(n_val));
    assert!(ns.set_members(shared)?.contains(&s_member));
    println!(
        "merged domain holds {} documents ({} in north, {} in south)",
        ns.document_count(),
        north.document_count(),
        south.document_count()
    );

    // Merging is idempotent, and merging with an empty domain changes nothing.
    assert_eq!(ns.merge(&south)?.digest(), ns.digest());
    assert_eq!(ns.merge(&Domain::new())?.digest(), ns.digest());
    println!("merge is idempotent and has the empty domain as identity");

    // The one thing that cannot merge: the same id carrying two different
    // payloads. Documents are immutable, so that is corruption, not conflict
    // resolution.
    let mut tampered = north.clone();
    tampered.reseed(63);
    let mut forged = Domain::new();
    forged.insert_document(shared, Payload::Text("impostor".into()))?;
    match tampered.merge(&forged) {
        Err(gil::GilError::PayloadConflict { id, .. }) => {
            println!("\nmerge refused: document {id} exists with a different payload")
        }
        other => panic!("expected PayloadConflict, got {other:?}"),
    }
    Ok(())
}
