use rand::Rng;

use crate::kg_store::Triple;
use crate::scoring::Side;

/// Replaces the head or the tail (each with probability 1/2) by a uniformly
/// drawn different entity. Returns the corrupted triple and the side.
pub fn sample_negative_with_side<R: Rng + ?Sized>(
    t: &Triple,
    num_entities: usize,
    rng: &mut R,
) -> (Triple, Side) {
    assert!(num_entities >= 2, "negative sampling needs at least two entities");
    let side = if rng.random_bool(0.5) { Side::Head } else { Side::Tail };
    let original = match side {
        Side::Head => t.head,
        Side::Tail => t.tail,
    };
    let mut e = rng.random_range(0..num_entities - 1);
    if e >= original {
        e += 1;
    }
    let corrupted = match side {
        Side::Head => t.with_head(e),
        Side::Tail => t.with_tail(e),
    };
    (corrupted, side)
}

pub fn sample_negative<R: Rng + ?Sized>(t: &Triple, num_entities: usize, rng: &mut R) -> Triple {
    sample_negative_with_side(t, num_entities, rng).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_entities_force_the_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = Triple::new(0, 1, 3);
        for _ in 0..100 {
            let (c, side) = sample_negative_with_side(&t, 2, &mut rng);
            match side {
                Side::Head => assert_eq!(c, Triple::new(1, 1, 3)),
                Side::Tail => assert_eq!(c, Triple::new(0, 0, 3)),
            }
        }
    }

    #[test]
    fn corrupted_side_differs_and_relation_kept() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Triple::new(4, 9, 2);
        for _ in 0..2000 {
            let (c, side) = sample_negative_with_side(&t, 12, &mut rng);
            assert_eq!(c.relation, 2);
            assert!(c.head < 12 && c.tail < 12);
            match side {
                Side::Head => assert!(c.head != 4 && c.tail == 9),
                Side::Tail => assert!(c.tail != 9 && c.head == 4),
            }
        }
    }

    #[test]
    fn sides_are_balanced_and_candidates_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Triple::new(3, 5, 0);
        let mut heads = 0;
        let mut counts = [0usize; 8];
        let n = 10_000;
        for _ in 0..n {
            let (c, side) = sample_negative_with_side(&t, 8, &mut rng);
            if side == Side::Head {
                heads += 1;
                counts[c.head] += 1;
            }
        }
        let frac = heads as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
        assert_eq!(counts[3], 0);
        // 7 candidates, ~714 each
        for (e, &c) in counts.iter().enumerate().filter(|(e, _)| *e != 3) {
            assert!((c as f64 - heads as f64 / 7.0).abs() < 150.0, "entity {e}: {c}");
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let t = Triple::new(0, 1, 0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| sample_negative(&t, 50, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }
}
