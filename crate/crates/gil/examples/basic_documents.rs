//! Documents are permanent: born once, identified forever, never changed.
//!
//! Run with: cargo run --example basic_documents

use gil::{Domain, GilError, Payload};
use num_bigint::BigInt;

fn main() -> gil::Result<()> {
    // Seeded domains mint deterministic ids, so this example prints the
    // same thing on every machine. Domain::new() uses the real clock.
    let mut domain = Domain::seeded(1);

    // An id is a point in informational space-time: the millisecond of
    // birth and a 128-bit coordinate. Both are fixed at mint time.
    let note = domain.mint_id();
    println!("minted         {note}");
    println!("born at ms     {}", note.birth_time());

    domain.insert_document(note, Payload::Text("first note".into()))?;

    // Every payload kind. Real numbers are decimal strings, kept verbatim:
    // 3.140 stays 3.140, no float rounding, printable on paper.
    for payload in [
        Payload::Empty,
        Payload::Integer(BigInt::parse_bytes(b"-340282366920938463463374607431768211456", 10).unwrap()),
        Payload::Real("3.140".into()),
        Payload::Complex("1.5".into(), "-2.25".into()),
        Payload::Blob(vec![0xde, 0xad, 0xbe, 0xef]),
    ] {
        let id = domain.mint_id();
        domain.insert_document(id, payload.clone())?;
        println!("stored         {id} {payload:?}");
    }

    // Inserting the same document again is a harmless no-op...
    domain.insert_document(note, Payload::Text("first note".into()))?;

    // ...but the same id with different content is corruption, not an edit.
    match domain.insert_document(note, Payload::Text("second thoughts".into())) {
        Err(GilError::PayloadConflict { id }) => {
            println!("conflict       rejected new payload for {id}")
        }
        other => panic!("expected a payload conflict, got {other:?}"),
    }

    // The store only grows; the audit log is the proof.
    println!("documents      {}", domain.document_count());
    println!("audit entries  {}", domain.audit().len());
    Ok(())
}
