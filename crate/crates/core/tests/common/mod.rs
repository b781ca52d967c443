//! Synthetic knowledge graphs shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use mkge_core::{KgDataset, Triple, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vocab(num_entities: usize, num_relations: usize) -> Vocabulary {
    Vocabulary::from_names(
        (0..num_entities).map(|e| format!("e{e}")).collect(),
        (0..num_relations).map(|r| format!("r{r}")).collect(),
    )
}

/// Distinct uniformly random triples, split into train and test.
pub fn random_kg(
    num_entities: usize,
    num_relations: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> KgDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut all = Vec::new();
    while all.len() < n_train + n_test {
        let t = Triple::new(
            rng.random_range(0..num_entities),
            rng.random_range(0..num_entities),
            rng.random_range(0..num_relations),
        );
        if seen.insert(t) {
            all.push(t);
        }
    }
    let test = all.split_off(n_train);
    KgDataset::from_encoded(vocab(num_entities, num_relations), all, Vec::new(), test).unwrap()
}

/// Directed pairs `(a, b)` of one relation with `a` before `b` in a random
/// total order. No pair appears in both directions.
pub fn antisymmetric_kg(num_entities: usize, n_pairs: usize, seed: u64) -> KgDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..num_entities).collect();
    order.shuffle(&mut rng);
    let mut pos = vec![0; num_entities];
    for (p, &e) in order.iter().enumerate() {
        pos[e] = p;
    }
    let mut seen = HashSet::new();
    let mut train = Vec::new();
    while train.len() < n_pairs {
        let a = rng.random_range(0..num_entities);
        let b = rng.random_range(0..num_entities);
        if a == b {
            continue;
        }
        let (a, b) = if pos[a] < pos[b] { (a, b) } else { (b, a) };
        if seen.insert((a, b)) {
            train.push(Triple::new(a, b, 0));
        }
    }
    KgDataset::from_encoded(vocab(num_entities, 1), train, Vec::new(), Vec::new()).unwrap()
}

/// Block-structured KG with two base relations and their inverses
/// (relations 2 and 3 invert 0 and 1).
///
/// Entities fall into `clusters` groups; base relation `r` links cluster `c`
/// to cluster `c + r + 1`. `n_facts` distinct base facts are drawn and each
/// yields a forward and an inverse triple. For `n_test` of them one
/// direction goes to test and the other to train; the rest go to train in
/// both directions. Test triples are therefore only recoverable from their
/// inverse.
pub fn block_kg(
    num_entities: usize,
    clusters: usize,
    n_facts: usize,
    n_test: usize,
    seed: u64,
) -> KgDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..num_entities).collect();
    ids.shuffle(&mut rng);
    let members: Vec<Vec<usize>> = (0..clusters)
        .map(|c| ids.iter().copied().skip(c).step_by(clusters).collect())
        .collect();

    let mut seen = HashSet::new();
    let mut facts = Vec::new();
    while facts.len() < n_facts {
        let r = rng.random_range(0..2);
        let c = rng.random_range(0..clusters);
        let src = &members[c];
        let dst = &members[(c + r + 1) % clusters];
        let t = Triple::new(
            src[rng.random_range(0..src.len())],
            dst[rng.random_range(0..dst.len())],
            r,
        );
        if seen.insert(t) {
            facts.push(t);
        }
    }

    let inverse = |t: Triple| Triple::new(t.tail, t.head, t.relation + 2);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (n, &f) in facts.iter().enumerate() {
        if n < n_test {
            let (seen_dir, held_out) = if rng.random_bool(0.5) {
                (f, inverse(f))
            } else {
                (inverse(f), f)
            };
            train.push(seen_dir);
            test.push(held_out);
        } else {
            train.push(f);
            train.push(inverse(f));
        }
    }
    train.shuffle(&mut rng);
    KgDataset::from_encoded(vocab(num_entities, 4), train, Vec::new(), test).unwrap()
}
