//! Edits never overwrite: they mint a successor document, rewire every
//! container on the path above it, and leave a revision record naming who,
//! when, and where. The domain before the edit is a subset of the domain
//! after it.
//!
//! Run with: cargo run --example revisions

use gil::constants::{constant_id, ACTOR_KEY, REVISION_CONTEXT};
use gil::{Domain, DocumentId, Payload, RevisionContext};

/// Newest document on the revision chain that starts at `origin`.
fn tip(domain: &Domain, origin: DocumentId) -> DocumentId {
    let mut cur = origin;
    while let Some(&next) = domain.successors(cur).first() {
        cur = next;
    }
    cur
}

fn main() -> gil::Result<()> {
    let mut domain = Domain::seeded(4);
    let editor = domain
        .register_actor([("name".to_string(), "ada".to_string())].into())?
        .actor_id;
    let ctx = RevisionContext { actor: editor, time: 1_700_000_000_000, place: "desk".into() };

    let notebook = domain.mint_id();
    domain.insert_document(notebook, Payload::Text("notebook".into()))?;
    let page_key = domain.mint_id();
    domain.insert_document(page_key, Payload::Text("page".into()))?;

    let draft = domain.mint_id();
    domain.insert_document(draft, Payload::Text("first draft".into()))?;
    domain.dict_put(notebook, page_key, draft)?;

    // Three successive edits. Each mints a successor for the draft and a
    // rewired copy of the notebook that binds it.
    let mut current = draft;
    for text in ["second draft", "third draft", "final"] {
        let result = domain.revise_payload(current, Payload::Text(text.into()), &ctx)?;
        println!(
            "revised {} -> {}  ({} documents replaced)",
            current,
            result.mapping[&current],
            result.mapping.len()
        );
        current = result.mapping[&current];
    }

    // The newest notebook copy resolves the key to the newest draft, while
    // the original notebook still holds the original draft, untouched.
    let newest_notebook = tip(&domain, notebook);
    assert_eq!(domain.dict_get(newest_notebook, page_key)?, Some(current));
    assert_eq!(domain.dict_get(notebook, page_key)?, Some(draft));

    let chain = domain.revision_chain(current)?;
    println!("\nhistory, oldest first:");
    for id in &chain {
        let Some(Payload::Text(t)) = domain.payload(*id) else { unreachable!() };
        println!("  {id}  {t:?}");
    }
    assert_eq!(chain.first(), Some(&draft));
    assert_eq!(chain.len(), 4);

    // Every revised document points at a record carrying actor, time, place.
    let record = domain
        .query(Some(constant_id(REVISION_CONTEXT)), Some(chain[1]), None)[0]
        .second;
    let actor = domain.dict_get(record, constant_id(ACTOR_KEY))?.unwrap();
    println!("\nfirst edit was made by actor {actor}");
    assert_eq!(actor, editor);

    // Branching is allowed: a second revision of the same original just
    // forks the chain.
    let fork = domain.revise_payload(draft, Payload::Text("alternate".into()), &ctx)?;
    println!(
        "draft now has {} direct successors",
        domain.successors(draft).len()
    );
    assert!(domain.successors(draft).contains(&fork.mapping[&draft]));
    Ok(())
}
