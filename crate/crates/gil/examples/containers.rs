//! Dictionaries, lists, and sets — all encoded over the one stored ternary
//! relation, nothing container-shaped in the engine itself.
//!
//! Run with: cargo run --example containers

use gil::{ContainerKind, Domain, GilError, Payload};

fn doc(d: &mut Domain, text: &str) -> gil::Result<gil::DocumentId> {
    let id = d.mint_id();
    d.insert_document(id, Payload::Text(text.into()))?;
    Ok(id)
}

fn main() -> gil::Result<()> {
    let mut domain = Domain::seeded(2);

    let article = doc(&mut domain, "article")?;
    let title_key = doc(&mut domain, "title")?;
    let title_val = doc(&mut domain, "On Permanence")?;
    let body = doc(&mut domain, "body")?;

    // Dictionary: write-once bindings. Changing a value later is an edit,
    // and edits are revisions (see the revisions example), never overwrites.
    domain.dict_put(article, title_key, title_val)?;
    match domain.dict_put(article, title_key, body) {
        Err(GilError::KeyAlreadyBound { .. }) => println!("rebind refused: keys are write-once"),
        other => panic!("expected KeyAlreadyBound, got {other:?}"),
    }
    println!("title -> {:?}", domain.dict_get(article, title_key)?);

    // List: contiguous indexes from 0, one triple per element.
    let (p1, p2) = (doc(&mut domain, "paragraph 1")?, doc(&mut domain, "paragraph 2")?);
    domain.list_append(body, p1)?;
    domain.list_append(body, p2)?;
    println!("body holds {} paragraphs in order", domain.list_items(body)?.len());

    // Set: membership only, duplicates vanish.
    let tags = doc(&mut domain, "tags")?;
    let tag = doc(&mut domain, "storage")?;
    domain.set_add(tags, tag)?;
    domain.set_add(tags, tag)?;
    println!("tags after double add: {}", domain.set_members(tags)?.len());

    // A document may carry a dictionary alongside a list or a set, but
    // list and set never coexist on one owner.
    match domain.ensure_anchor(body, ContainerKind::Set) {
        Err(GilError::ForbiddenCombination { .. }) => {
            println!("body already a list; set refused")
        }
        other => panic!("expected ForbiddenCombination, got {other:?}"),
    }

    // Underneath it is all triples: (anchor-marker, anchor, owner) plus one
    // binding triple per entry, hanging off the anchor.
    println!("\nraw triples of the article graph:");
    for t in domain.triples() {
        println!("  {t}");
    }

    // reconstruct() gathers the closure that makes a document portable.
    let sub = domain.reconstruct(article)?;
    println!(
        "\nreconstruct(article): {} documents, {} triples",
        sub.documents.len(),
        sub.triples.len()
    );
    Ok(())
}
