//! Multi-embedding interaction scoring.
//!
//! A triple `(h, t, r)` is scored as
//!
//! ```text
//! S = Σ_{i,j,k} ω(i,j,k) · Σ_d h⁽ⁱ⁾_d · t⁽ʲ⁾_d · r⁽ᵏ⁾_d
//! ```
//!
//! Terms with a zero weight are skipped. The partial derivatives of `S`
//! with respect to each block double as the query vectors for scoring one
//! side against every entity.

mod table;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use table::MultiEmbeddingTable;
pub use weights::{
    preset_weight_vector, LearnableWeights, Preset, WeightVector, LEARNABLE_INIT_STD, PRESET_NAMES,
};

use crate::error::{Error, Result};
use crate::kg_store::Triple;

/// Side of a triple that is replaced by candidate entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Head,
    Tail,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Head => "head",
            Side::Tail => "tail",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head" => Ok(Side::Head),
            "tail" => Ok(Side::Tail),
            _ => Err(Error::UnknownName {
                what: "side",
                name: s.to_string(),
                valid: "head, tail",
            }),
        }
    }
}

/// Shape and weighting of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_e: usize,
    pub n_r: usize,
    pub dim: usize,
    pub preset: Preset,
    pub seed: u64,
}

impl ModelConfig {
    /// Uses the preset's default embedding counts.
    pub fn new(preset: Preset, dim: usize, seed: u64) -> Self {
        let (n_e, n_r) = preset.default_shape();
        Self {
            n_e,
            n_r,
            dim,
            preset,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        self.preset.check_shape(self.n_e, self.n_r)
    }
}

/// Embedding table together with its weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KgeModel {
    pub config: ModelConfig,
    pub table: MultiEmbeddingTable,
    pub weights: WeightVector,
}

impl KgeModel {
    /// Validates `config` and draws initial parameters from its seed.
    pub fn new(config: ModelConfig, num_entities: usize, num_relations: usize) -> Result<Self> {
        config.validate()?;
        if num_entities == 0 || num_relations == 0 {
            return Err(Error::Config(
                "model needs at least one entity and one relation".into(),
            ));
        }
        let table = init_embeddings(&config, num_entities, num_relations, config.seed);
        let weights = config
            .preset
            .weight_vector(config.n_e, config.n_r, config.seed.wrapping_add(1))?;
        Ok(Self {
            config,
            table,
            weights,
        })
    }

    pub fn from_parts(
        config: ModelConfig,
        table: MultiEmbeddingTable,
        weights: WeightVector,
    ) -> Result<Self> {
        config.validate()?;
        if table.n_e() != config.n_e || table.n_r() != config.n_r || table.dim() != config.dim {
            return Err(Error::Config(format!(
                "table shape (n_e={}, n_r={}, dim={}) does not match config (n_e={}, n_r={}, dim={})",
                table.n_e(),
                table.n_r(),
                table.dim(),
                config.n_e,
                config.n_r,
                config.dim
            )));
        }
        if weights.n_e() != config.n_e || weights.n_r() != config.n_r {
            return Err(Error::Config("weight vector shape does not match config".into()));
        }
        Ok(Self {
            config,
            table,
            weights,
        })
    }

    pub fn score(&self, t: &Triple) -> Result<f64> {
        score_triple(&self.table, &self.weights, t)
    }

    pub fn score_against_all(&self, fixed: &Triple, side: Side) -> Result<Vec<f64>> {
        score_against_all(&self.table, &self.weights, fixed, side)
    }
}

/// Draws a table for `config` from `N(0, 1/dim)` and normalizes entity
/// vectors.
pub fn init_embeddings(
    config: &ModelConfig,
    num_entities: usize,
    num_relations: usize,
    seed: u64,
) -> MultiEmbeddingTable {
    MultiEmbeddingTable::random(
        num_entities,
        num_relations,
        config.n_e,
        config.n_r,
        config.dim,
        seed,
    )
}

fn check_compatible(table: &MultiEmbeddingTable, w: &WeightVector) -> Result<()> {
    if table.n_e() != w.n_e() || table.n_r() != w.n_r() {
        return Err(Error::Config(format!(
            "weight vector shape (n_e={}, n_r={}) does not match table (n_e={}, n_r={})",
            w.n_e(),
            w.n_r(),
            table.n_e(),
            table.n_r()
        )));
    }
    Ok(())
}

pub(crate) fn check_triple(table: &MultiEmbeddingTable, t: &Triple) -> Result<()> {
    for e in [t.head, t.tail] {
        if e >= table.num_entities() {
            return Err(Error::IndexOutOfRange {
                kind: "entity",
                index: e,
                len: table.num_entities(),
            });
        }
    }
    if t.relation >= table.num_relations() {
        return Err(Error::IndexOutOfRange {
            kind: "relation",
            index: t.relation,
            len: table.num_relations(),
        });
    }
    Ok(())
}

fn trilinear(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

/// Score of one triple.
pub fn score_triple(table: &MultiEmbeddingTable, w: &WeightVector, t: &Triple) -> Result<f64> {
    check_compatible(table, w)?;
    check_triple(table, t)?;
    Ok(score_blocks(
        w,
        table.entity_block(t.head),
        table.entity_block(t.tail),
        table.relation_block(t.relation),
        table.dim(),
    ))
}

/// Score from raw `[embedding][dimension]` blocks.
pub fn score_blocks(w: &WeightVector, h: &[f64], t: &[f64], r: &[f64], dim: usize) -> f64 {
    w.terms()
        .iter()
        .map(|term| {
            term.w
                * trilinear(
                    &h[term.i * dim..][..dim],
                    &t[term.j * dim..][..dim],
                    &r[term.k * dim..][..dim],
                )
        })
        .sum()
}

/// `∂S/∂h`, laid out like an entity block.
pub fn head_partial(w: &WeightVector, t: &[f64], r: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; w.n_e() * dim];
    for term in w.terms() {
        let (tv, rv) = (&t[term.j * dim..][..dim], &r[term.k * dim..][..dim]);
        let dst = &mut out[term.i * dim..][..dim];
        for d in 0..dim {
            dst[d] += term.w * tv[d] * rv[d];
        }
    }
    out
}

/// `∂S/∂t`, laid out like an entity block.
pub fn tail_partial(w: &WeightVector, h: &[f64], r: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; w.n_e() * dim];
    for term in w.terms() {
        let (hv, rv) = (&h[term.i * dim..][..dim], &r[term.k * dim..][..dim]);
        let dst = &mut out[term.j * dim..][..dim];
        for d in 0..dim {
            dst[d] += term.w * hv[d] * rv[d];
        }
    }
    out
}

/// `∂S/∂r`, laid out like a relation block.
pub fn relation_partial(w: &WeightVector, h: &[f64], t: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; w.n_r() * dim];
    for term in w.terms() {
        let (hv, tv) = (&h[term.i * dim..][..dim], &t[term.j * dim..][..dim]);
        let dst = &mut out[term.k * dim..][..dim];
        for d in 0..dim {
            dst[d] += term.w * hv[d] * tv[d];
        }
    }
    out
}

/// Every `⟨h⁽ⁱ⁾, t⁽ʲ⁾, r⁽ᵏ⁾⟩` in ω order, i.e. `∂S/∂ω`.
pub fn interaction_terms(
    h: &[f64],
    t: &[f64],
    r: &[f64],
    n_e: usize,
    n_r: usize,
    dim: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_e * n_e * n_r);
    for i in 0..n_e {
        for j in 0..n_e {
            for k in 0..n_r {
                out.push(trilinear(
                    &h[i * dim..][..dim],
                    &t[j * dim..][..dim],
                    &r[k * dim..][..dim],
                ));
            }
        }
    }
    out
}

/// Scores `fixed` with its `side` replaced by every entity in turn.
///
/// The score is linear in the replaced block, so it reduces to one dot
/// product per entity against the partial derivative of that side.
pub fn score_against_all(
    table: &MultiEmbeddingTable,
    w: &WeightVector,
    fixed: &Triple,
    side: Side,
) -> Result<Vec<f64>> {
    check_compatible(table, w)?;
    check_triple(table, fixed)?;
    let dim = table.dim();
    let r = table.relation_block(fixed.relation);
    let query = match side {
        Side::Head => head_partial(w, table.entity_block(fixed.tail), r, dim),
        Side::Tail => tail_partial(w, table.entity_block(fixed.head), r, dim),
    };
    Ok(table
        .entity_data()
        .chunks_exact(query.len())
        .map(|block| block.iter().zip(&query).map(|(a, b)| a * b).sum())
        .collect())
}

/// Concatenated `e⁽¹⁾ ∥ … ∥ e⁽ⁿ⁾` vectors per entity and per relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenatedEmbeddings {
    pub entities: Vec<Vec<f64>>,
    pub relations: Vec<Vec<f64>>,
}

pub fn export_concatenated(table: &MultiEmbeddingTable) -> ConcatenatedEmbeddings {
    ConcatenatedEmbeddings {
        entities: (0..table.num_entities())
            .map(|e| table.entity_block(e).to_vec())
            .collect(),
        relations: (0..table.num_relations())
            .map(|r| table.relation_block(r).to_vec())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_with(
        n_e: usize,
        n_r: usize,
        dim: usize,
        entities: &[&[f64]],
        relations: &[&[f64]],
    ) -> MultiEmbeddingTable {
        MultiEmbeddingTable::from_data(
            entities.len(),
            relations.len(),
            n_e,
            n_r,
            dim,
            entities.concat(),
            relations.concat(),
        )
        .unwrap()
    }

    fn random_table(rng: &mut ChaCha8Rng, ne: usize, nr: usize, n_e: usize, n_r: usize, dim: usize) -> MultiEmbeddingTable {
        let ent = (0..ne * n_e * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rel = (0..nr * n_r * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        MultiEmbeddingTable::from_data(ne, nr, n_e, n_r, dim, ent, rel).unwrap()
    }

    #[test]
    fn distmult_direct_evaluation() {
        let table = table_with(1, 1, 2, &[&[1., 2.], &[3., 4.]], &[&[5., 6.]]);
        let w = Preset::DistMult.weight_vector(1, 1, 0).unwrap();
        assert_eq!(score_triple(&table, &w, &Triple::new(0, 1, 0)).unwrap(), 63.0);
    }

    #[test]
    fn complex_small_example() {
        // Re((1+2i)·conj(3+4i)·(5+6i)) = 43
        let table = table_with(2, 2, 1, &[&[1., 2.], &[3., 4.]], &[&[5., 6.]]);
        let w = preset_weight_vector("complex").unwrap();
        assert_eq!(score_triple(&table, &w, &Triple::new(0, 1, 0)).unwrap(), 43.0);
    }

    #[test]
    fn zero_embeddings_score_zero() {
        let table = MultiEmbeddingTable::zeros(3, 2, 4, 4, 5);
        let w = preset_weight_vector("quaternion").unwrap();
        assert_eq!(score_triple(&table, &w, &Triple::new(0, 2, 1)).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_triples_error() {
        let table = MultiEmbeddingTable::zeros(3, 2, 2, 2, 5);
        let w = preset_weight_vector("complex").unwrap();
        assert!(matches!(
            score_triple(&table, &w, &Triple::new(3, 0, 0)),
            Err(Error::IndexOutOfRange { kind: "entity", .. })
        ));
        assert!(matches!(
            score_triple(&table, &w, &Triple::new(0, 0, 2)),
            Err(Error::IndexOutOfRange { kind: "relation", .. })
        ));
        assert!(score_against_all(&table, &w, &Triple::new(0, 9, 0), Side::Head).is_err());
    }

    #[test]
    fn mismatched_weight_shape_errors() {
        let table = MultiEmbeddingTable::zeros(3, 2, 2, 2, 5);
        let w = preset_weight_vector("quaternion").unwrap();
        assert!(score_triple(&table, &w, &Triple::new(0, 1, 0)).is_err());
    }

    #[test]
    fn against_all_single_entity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let table = random_table(&mut rng, 1, 1, 2, 2, 4);
        let w = preset_weight_vector("complex").unwrap();
        let t = Triple::new(0, 0, 0);
        for side in [Side::Head, Side::Tail] {
            let all = score_against_all(&table, &w, &t, side).unwrap();
            assert_eq!(all.len(), 1);
            let s = score_triple(&table, &w, &t).unwrap();
            assert!((all[0] - s).abs() <= 1e-12 * s.abs().max(1.0));
        }
    }

    #[test]
    fn against_all_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in PRESET_NAMES {
            let w = preset_weight_vector(name).unwrap();
            let table = random_table(&mut rng, 10, 3, w.n_e(), w.n_r(), 6);
            let t = Triple::new(4, 7, 2);
            for side in [Side::Head, Side::Tail] {
                let all = score_against_all(&table, &w, &t, side).unwrap();
                for (e, got) in all.iter().enumerate() {
                    let c = match side {
                        Side::Head => t.with_head(e),
                        Side::Tail => t.with_tail(e),
                    };
                    let want = score_triple(&table, &w, &c).unwrap();
                    assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-12), "{name} {side} {e}");
                }
            }
        }
    }

    #[test]
    fn export_preserves_vector_order() {
        let table = table_with(2, 2, 1, &[&[1., 2.]], &[&[3., 4.]]);
        let out = export_concatenated(&table);
        assert_eq!(out.entities, vec![vec![1., 2.]]);
        assert_eq!(out.relations, vec![vec![3., 4.]]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = random_table(&mut rng, 3, 2, 4, 4, 2);
        let out = export_concatenated(&table);
        for e in 0..3 {
            assert_eq!(out.entities[e].len(), 8);
            for i in 0..4 {
                assert_eq!(&out.entities[e][i * 2..i * 2 + 2], table.entity_vec(e, i));
            }
        }
        let single = random_table(&mut rng, 2, 1, 1, 1, 3);
        assert_eq!(export_concatenated(&single).entities[1], single.entity_vec(1, 0));
    }

    #[test]
    fn init_is_seeded_and_normalized() {
        let cfg = ModelConfig::new(Preset::ComplEx, 16, 0);
        let a = init_embeddings(&cfg, 20, 3, 42);
        let b = init_embeddings(&cfg, 20, 3, 42);
        let c = init_embeddings(&cfg, 20, 3, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for e in 0..20 {
            for i in 0..2 {
                let n: f64 = a.entity_vec(e, i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn model_rejects_inconsistent_config() {
        let mut cfg = ModelConfig::new(Preset::ComplEx, 8, 0);
        cfg.n_e = 4;
        assert!(KgeModel::new(cfg, 5, 2).is_err());
        assert!(KgeModel::new(ModelConfig::new(Preset::Quaternion, 0, 0), 5, 2).is_err());
    }

    #[test]
    fn generic_scorer_handles_unequal_counts() {
        // n_e = 1, n_r = 2: S = ⟨h, t, r1⟩ - 2⟨h, t, r2⟩
        let w = WeightVector::fixed(1, 2, vec![1.0, -2.0]).unwrap();
        let table = table_with(1, 2, 2, &[&[1., 2.], &[3., 1.]], &[&[1., 1., 2., 0.]]);
        let s = score_triple(&table, &w, &Triple::new(0, 1, 0)).unwrap();
        assert_eq!(s, (3. + 2.) - 2.0 * 6.0);
    }

    proptest! {
        #[test]
        fn distmult_is_symmetric(vals in proptest::collection::vec(-2.0..2.0f64, 2 * 8 + 8), two in any::<bool>()) {
            let n = if two { 2 } else { 1 };
            let w = Preset::DistMult.weight_vector(n, n, 0).unwrap();
            let dim = 8 / n;
            let table = MultiEmbeddingTable::from_data(2, 1, n, n, dim, vals[..16].to_vec(), vals[16..].to_vec()).unwrap();
            let a = score_triple(&table, &w, &Triple::new(0, 1, 0)).unwrap();
            let b = score_triple(&table, &w, &Triple::new(1, 0, 0)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn score_is_linear_in_each_block(seed in any::<u64>(), c in -3.0..3.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = preset_weight_vector("quaternion").unwrap();
            let table = random_table(&mut rng, 2, 1, 4, 4, 3);
            let t = Triple::new(0, 1, 0);
            let base = score_triple(&table, &w, &t).unwrap();
            let mut scaled = table.clone();
            scaled.entity_block_mut(0).iter_mut().for_each(|x| *x *= c);
            let s = score_triple(&scaled, &w, &t).unwrap();
            prop_assert!((s - c * base).abs() <= 1e-12 * (1.0 + base.abs()));
            // ∂S/∂h does not depend on h
            let p1 = head_partial(&w, table.entity_block(1), table.relation_block(0), 3);
            let p2 = head_partial(&w, scaled.entity_block(1), scaled.relation_block(0), 3);
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn partials_reconstruct_score(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = preset_weight_vector("complex").unwrap();
            let table = random_table(&mut rng, 2, 1, 2, 2, 4);
            let (h, t, r) = (table.entity_block(0), table.entity_block(1), table.relation_block(0));
            let s = score_blocks(&w, h, t, r, 4);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            prop_assert!((dot(h, &head_partial(&w, t, r, 4)) - s).abs() < 1e-12);
            prop_assert!((dot(t, &tail_partial(&w, h, r, 4)) - s).abs() < 1e-12);
            prop_assert!((dot(r, &relation_partial(&w, h, t, 4)) - s).abs() < 1e-12);
            let terms = interaction_terms(h, t, r, 2, 2, 4);
            prop_assert!((dot(w.omega(), &terms) - s).abs() < 1e-12);
        }
    }
}
