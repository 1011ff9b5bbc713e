//! Shared helpers for the integration suites: a deterministic random-domain
//! generator driving only the public API.
//!
//! Growth rules that keep generated domains well-formed by construction:
//! - Only documents minted by the current `grow` call own containers, so
//!   growing two clones of one base never invents an anchor for the same
//!   owner (the shape hazard unions cannot resolve).
//! - A container binding always binds an older document (smaller id) under
//!   a newer owner; seeded mints have strictly increasing ids, so
//!   containment stays acyclic. Revision rewiring preserves that order.
//! - Dictionary keys are always freshly minted, so write-once is never hit.

#![allow(dead_code)]

use gil::{Domain, DocumentId, Payload, RevisionContext};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Documents random growth may safely reuse, and how.
#[derive(Debug, Clone, Default)]
pub struct Pool {
    /// Usable as values, members, relation args/markers, revision targets.
    /// Never contains anchors, revision records, or constants.
    pub operands: Vec<DocumentId>,
    pub actors: Vec<DocumentId>,
    /// (owner, key) dictionary entries made by `grow`, for revise_attribute.
    pub bindings: Vec<(DocumentId, DocumentId)>,
}

fn mint_text(d: &mut Domain, rng: &mut ChaCha8Rng) -> DocumentId {
    let id = d.mint_id();
    let payload = match rng.gen_range(0..6) {
        0 => Payload::Empty,
        1 => Payload::Integer(rng.gen::<i64>().into()),
        2 => Payload::Real(format!("{}.{:03}", rng.gen_range(-999..1000), rng.gen_range(0..1000))),
        3 => Payload::Complex("0.5".into(), format!("-{}", rng.gen_range(1..99))),
        4 => Payload::Blob(vec![rng.gen(), rng.gen(), rng.gen()]),
        _ => Payload::Text(format!("w{}", rng.gen::<u32>())),
    };
    d.insert_document(id, payload).unwrap();
    id
}

fn pick(rng: &mut ChaCha8Rng, xs: &[DocumentId]) -> DocumentId {
    xs[rng.gen_range(0..xs.len())]
}

/// A random operand strictly older (smaller id) than `owner`, if any.
fn pick_older(rng: &mut ChaCha8Rng, pool: &Pool, owner: DocumentId) -> Option<DocumentId> {
    let older: Vec<DocumentId> = pool.operands.iter().copied().filter(|v| *v < owner).collect();
    if older.is_empty() {
        None
    } else {
        Some(older[rng.gen_range(0..older.len())])
    }
}

/// Apply `steps` random structure/revision operations through the public API.
pub fn grow(d: &mut Domain, pool: &mut Pool, seed: u64, steps: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Owner-eligible documents: minted by this call only.
    let mut fresh: Vec<DocumentId> = Vec::new();

    if pool.actors.is_empty() {
        pool.actors.push(d.register_actor(BTreeMap::new()).unwrap().actor_id);
    }
    for _ in 0..2 {
        let id = mint_text(d, &mut rng);
        fresh.push(id);
        pool.operands.push(id);
    }

    for _ in 0..steps {
        match rng.gen_range(0..100) {
            0..=29 => {
                let id = mint_text(d, &mut rng);
                fresh.push(id);
                pool.operands.push(id);
            }
            30..=44 => {
                let owner = pick(&mut rng, &fresh);
                let Some(value) = pick_older(&mut rng, pool, owner) else { continue };
                let key = mint_text(d, &mut rng);
                d.dict_put(owner, key, value).unwrap();
                pool.bindings.push((owner, key));
                fresh.push(key);
                pool.operands.push(key);
            }
            45..=56 => {
                let owner = pick(&mut rng, &fresh);
                let Some(value) = pick_older(&mut rng, pool, owner) else { continue };
                match d.list_append(owner, value) {
                    Ok(_) => {}
                    Err(gil::GilError::ForbiddenCombination { .. }) => {} // owner is a set
                    Err(e) => panic!("list_append: {e}"),
                }
            }
            57..=68 => {
                let owner = pick(&mut rng, &fresh);
                let Some(member) = pick_older(&mut rng, pool, owner) else { continue };
                match d.set_add(owner, member) {
                    Ok(()) => {}
                    Err(gil::GilError::ForbiddenCombination { .. }) => {} // owner is a list
                    Err(e) => panic!("set_add: {e}"),
                }
            }
            69..=78 => {
                let marker = pick(&mut rng, &pool.operands);
                let arity = rng.gen_range(1..=6);
                let args: Vec<DocumentId> =
                    (0..arity).map(|_| pick(&mut rng, &pool.operands)).collect();
                let instance = d.assert_relation(marker, &args).unwrap();
                if !instance.is_constant() {
                    fresh.push(instance);
                    pool.operands.push(instance);
                }
            }
            79..=90 => {
                let target = pick(&mut rng, &pool.operands);
                let result = d
                    .revise_payload(target, Payload::Text(format!("r{}", rng.gen::<u32>())), &ctx(&mut rng, pool))
                    .unwrap();
                // Mapping iterates in old-id order, which keeps the pool a
                // linear extension of containment among the successors.
                for (_, new) in &result.mapping {
                    fresh.push(*new);
                    pool.operands.push(*new);
                }
            }
            91..=95 => {
                if pool.bindings.is_empty() {
                    continue;
                }
                let (owner, key) = pool.bindings[rng.gen_range(0..pool.bindings.len())];
                let new_value = pick(&mut rng, &pool.operands);
                let result = d.revise_attribute(owner, key, new_value, &ctx(&mut rng, pool)).unwrap();
                for (_, new) in &result.mapping {
                    fresh.push(*new);
                    pool.operands.push(*new);
                }
            }
            _ => {
                pool.actors
                    .push(d.register_actor(BTreeMap::new()).unwrap().actor_id);
            }
        }
    }
}

fn ctx(rng: &mut ChaCha8Rng, pool: &Pool) -> RevisionContext {
    RevisionContext {
        actor: pool.actors[rng.gen_range(0..pool.actors.len())],
        time: rng.gen_range(1_000_000_000_000..2_000_000_000_000),
        place: format!("p{}", rng.gen_range(0..16)),
    }
}

/// A fresh deterministic random domain.
pub fn random_domain(seed: u64, steps: usize) -> (Domain, Pool) {
    let mut d = Domain::seeded(seed);
    let mut pool = Pool::default();
    grow(&mut d, &mut pool, seed ^ 0x5bd1_e995, steps);
    (d, pool)
}

/// An independent replica of `base`, grown further on its own entropy.
pub fn fork(base: &Domain, pool: &Pool, seed: u64, steps: usize) -> (Domain, Pool) {
    let mut d = base.clone();
    let mut p = pool.clone();
    d.reseed(seed);
    grow(&mut d, &mut p, seed ^ 0x9e37_79b9, steps);
    (d, p)
}
