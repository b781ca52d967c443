//! Multi-embedding interaction models for knowledge graph link prediction.
//!
//! Every entity and relation owns several embedding vectors. A triple is
//! scored by a weighted sum of trilinear products over all combinations of
//! its vectors; the weight vector decides which model you get. DistMult,
//! ComplEx, CP, CP with inverse-triple augmentation, and a quaternion-based
//! four-embedding model are all presets of the same scorer, and the weights
//! can also be learned.
//!
//! ```
//! use mkge_core::{KgeModel, ModelConfig, Preset, Triple};
//!
//! let model = KgeModel::new(ModelConfig::new(Preset::ComplEx, 8, 42), 10, 2).unwrap();
//! let s = model.score(&Triple::new(0, 3, 1)).unwrap();
//! assert!(s.is_finite());
//! ```

pub mod checkpoint;
pub mod error;
pub mod evaluator;
pub mod kg_store;
pub mod quaternion;
pub mod scoring;
pub mod trainer;
pub mod weight_learning;

pub use error::{Error, Result};
pub use evaluator::{evaluate, evaluate_triples, filtered_rank, EvalReport, RankRecord};
pub use kg_store::{
    build_dataset, parse_triples, ColumnOrder, FilterIndex, KgDataset, RawTriple, Split, Triple,
    Vocabulary,
};
pub use quaternion::{hamilton_product, quat_trilinear_score, Quaternion};
pub use scoring::{
    export_concatenated, init_embeddings, preset_weight_vector, score_against_all, score_blocks,
    score_triple,
    KgeModel, ModelConfig, MultiEmbeddingTable, Preset, Side, WeightVector,
};
pub use trainer::{train, LossForm, TrainConfig, TrainOutcome};
pub use weight_learning::{dirichlet_reg, restrict, DirichletRegConfig, RestrictionKind};
