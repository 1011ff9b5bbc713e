//! The bootstrap manifest: well-known documents whose ids derive from their
//! labels by hashing, so any reader can reconstruct them from nothing.
//!
//! Run with: cargo run --example bootstrap_constants

use gil::constants::{constant_id, int_label, NAMED_LABELS, UNIT};
use gil::Domain;

fn main() -> gil::Result<()> {
    // No domain required: the manifest is pure computation. Birth time 0 is
    // reserved for exactly these documents.
    println!("the named constants:");
    for label in NAMED_LABELS {
        println!("  {label:<24} {}", constant_id(label));
    }

    // Integer keys (list indexes, relation argument slots) come from the
    // same scheme, one label per integer.
    println!("\ninteger keys on demand:");
    for k in 0..4 {
        println!("  {:<24} {}", int_label(k), constant_id(&int_label(k)));
    }

    // Materializing a constant stores its Empty document and records the
    // label for the export manifest; doing it twice changes nothing.
    let mut domain = Domain::seeded(7);
    let unit = domain.constant(UNIT)?;
    let again = domain.constant(UNIT)?;
    assert_eq!(unit, again);
    assert!(unit.is_constant());

    // Two domains that have never met agree on every constant — that is
    // what makes their graphs mergeable without negotiation.
    let mut other = Domain::seeded(999);
    assert_eq!(other.constant(UNIT)?, unit);
    println!("\nUnit in two unrelated domains: same id, {unit}");
    Ok(())
}
