use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Entity and relation embeddings, `n_e` (resp. `n_r`) vectors of length
/// `dim` per item, stored row-major as `[item][embedding][dimension]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiEmbeddingTable {
    num_entities: usize,
    num_relations: usize,
    n_e: usize,
    n_r: usize,
    dim: usize,
    entity: Vec<f64>,
    relation: Vec<f64>,
}

impl MultiEmbeddingTable {
    pub fn zeros(
        num_entities: usize,
        num_relations: usize,
        n_e: usize,
        n_r: usize,
        dim: usize,
    ) -> Self {
        Self {
            num_entities,
            num_relations,
            n_e,
            n_r,
            dim,
            entity: vec![0.0; num_entities * n_e * dim],
            relation: vec![0.0; num_relations * n_r * dim],
        }
    }

    /// Wraps existing buffers laid out as `[item][embedding][dimension]`.
    pub fn from_data(
        num_entities: usize,
        num_relations: usize,
        n_e: usize,
        n_r: usize,
        dim: usize,
        entity: Vec<f64>,
        relation: Vec<f64>,
    ) -> Result<Self> {
        if entity.len() != num_entities * n_e * dim {
            return Err(Error::LengthMismatch {
                left: "entity buffer",
                left_len: entity.len(),
                right: "num_entities·n_e·dim",
                right_len: num_entities * n_e * dim,
            });
        }
        if relation.len() != num_relations * n_r * dim {
            return Err(Error::LengthMismatch {
                left: "relation buffer",
                left_len: relation.len(),
                right: "num_relations·n_r·dim",
                right_len: num_relations * n_r * dim,
            });
        }
        Ok(Self {
            num_entities,
            num_relations,
            n_e,
            n_r,
            dim,
            entity,
            relation,
        })
    }

    /// Gaussian `N(0, 1/dim)` entries, then every entity vector projected
    /// to unit L2 norm. Deterministic in `seed`.
    pub fn random(
        num_entities: usize,
        num_relations: usize,
        n_e: usize,
        n_r: usize,
        dim: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("dim > 0");
        let mut table = Self::zeros(num_entities, num_relations, n_e, n_r, dim);
        for x in table.entity.iter_mut().chain(table.relation.iter_mut()) {
            *x = normal.sample(&mut rng);
        }
        table.project_entities_unit_norm();
        table
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All `n_e` vectors of entity `e`, concatenated.
    pub fn entity_block(&self, e: usize) -> &[f64] {
        let w = self.n_e * self.dim;
        &self.entity[e * w..(e + 1) * w]
    }

    pub fn entity_block_mut(&mut self, e: usize) -> &mut [f64] {
        let w = self.n_e * self.dim;
        &mut self.entity[e * w..(e + 1) * w]
    }

    pub fn relation_block(&self, r: usize) -> &[f64] {
        let w = self.n_r * self.dim;
        &self.relation[r * w..(r + 1) * w]
    }

    pub fn relation_block_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.n_r * self.dim;
        &mut self.relation[r * w..(r + 1) * w]
    }

    /// Embedding vector `i` of entity `e`.
    pub fn entity_vec(&self, e: usize, i: usize) -> &[f64] {
        let start = (e * self.n_e + i) * self.dim;
        &self.entity[start..start + self.dim]
    }

    pub fn entity_vec_mut(&mut self, e: usize, i: usize) -> &mut [f64] {
        let start = (e * self.n_e + i) * self.dim;
        &mut self.entity[start..start + self.dim]
    }

    pub fn relation_vec(&self, r: usize, k: usize) -> &[f64] {
        let start = (r * self.n_r + k) * self.dim;
        &self.relation[start..start + self.dim]
    }

    pub fn relation_vec_mut(&mut self, r: usize, k: usize) -> &mut [f64] {
        let start = (r * self.n_r + k) * self.dim;
        &mut self.relation[start..start + self.dim]
    }

    pub fn entity_data(&self) -> &[f64] {
        &self.entity
    }

    pub fn entity_data_mut(&mut self) -> &mut [f64] {
        &mut self.entity
    }

    pub fn relation_data(&self) -> &[f64] {
        &self.relation
    }

    pub fn relation_data_mut(&mut self) -> &mut [f64] {
        &mut self.relation
    }

    pub fn is_finite(&self) -> bool {
        self.entity.iter().chain(&self.relation).all(|x| x.is_finite())
    }

    /// Rescales every entity vector to unit L2 norm. A zero vector becomes
    /// the first basis vector. Relations are untouched.
    pub fn project_entities_unit_norm(&mut self) {
        if self.dim == 0 {
            return;
        }
        for v in self.entity.chunks_exact_mut(self.dim) {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            } else {
                v.fill(0.0);
                v[0] = 1.0;
            }
        }
    }
}
