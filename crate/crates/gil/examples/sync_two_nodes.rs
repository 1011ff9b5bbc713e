//! Two nodes converging over a real TCP socket.
//!
//! Each node serves a read-only snapshot of its domain and pulls what it is
//! missing from the other. After one pull in each direction the digests
//! agree, and further pulls transfer nothing.
//!
//! Run with: cargo run --example sync_two_nodes

use gil::{pull, serve, ContainerKind, Domain, Payload};

fn doc(d: &mut Domain, text: &str) -> gil::Result<gil::DocumentId> {
    let id = d.mint_id();
    d.insert_document(id, Payload::Text(text.into()))?;
    Ok(id)
}

fn main() -> gil::Result<()> {
    // Two replicas of a common origin, each grown independently. The origin
    // creates the ledger's set anchor BEFORE the split: concurrent additions
    // to one shared set merge cleanly, whereas two replicas each inventing a
    // container for the same owner would leave it with two anchors (a state
    // the containers-wf check reports). Sets are the coordination-free
    // container; lists sequence their elements and need an owner.
    let mut origin = Domain::seeded(7);
    let ledger = doc(&mut origin, "ledger")?;
    origin.ensure_anchor(ledger, ContainerKind::Set)?;

    let mut alpha = origin.clone();
    let mut beta = origin.clone();
    alpha.reseed(71);
    beta.reseed(72);

    let a_note = doc(&mut alpha, "recorded on alpha")?;
    alpha.set_add(ledger, a_note)?;
    let b_note = doc(&mut beta, "recorded on beta")?;
    beta.set_add(ledger, b_note)?;
    println!("alpha digest: {}", alpha.digest());
    println!("beta digest:  {}", beta.digest());

    // Port 0 lets the OS pick a free port; local_addr() reports it.
    let alpha_server = serve(alpha.clone(), "127.0.0.1:0")?;
    let alpha_addr = alpha_server.local_addr().to_string();
    let beta_server = serve(beta.clone(), "127.0.0.1:0")?;
    let beta_addr = beta_server.local_addr().to_string();
    println!("\nalpha serving on {alpha_addr}, beta on {beta_addr}");

    // beta pulls alpha's additions. Not converged yet: beta has documents
    // alpha has never seen, and a pull only moves data toward the puller.
    let report = pull(&alpha_addr, &mut beta)?;
    println!(
        "\nbeta <- alpha: {} documents, {} triples, converged: {}",
        report.documents_received, report.triples_received, report.converged
    );
    assert!(!report.converged);

    // beta now has everything; publish its new snapshot and let alpha pull.
    beta_server.replace_snapshot(beta.clone());
    let report = pull(&beta_addr, &mut alpha)?;
    println!(
        "alpha <- beta: {} documents, {} triples, converged: {}",
        report.documents_received, report.triples_received, report.converged
    );
    assert!(report.converged);
    assert_eq!(alpha.digest(), beta.digest());

    // Both ledgers carry both notes now, and the merged graph is still
    // well-formed.
    let members = alpha.set_members(ledger)?;
    assert!(members.contains(&a_note) && members.contains(&b_note));
    assert!(alpha.run_checks(&["containers-wf"])?.ok());
    println!("\nshared digest: {}", alpha.digest());

    // Convergence is stable: another pull moves nothing.
    alpha_server.replace_snapshot(alpha.clone());
    let report = pull(&alpha_addr, &mut beta)?;
    assert_eq!(report.documents_received, 0);
    assert_eq!(report.triples_received, 0);
    assert!(report.converged);
    println!("second pull transferred nothing");

    alpha_server.shutdown();
    beta_server.shutdown();
    Ok(())
}
