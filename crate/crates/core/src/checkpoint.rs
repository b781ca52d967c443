//! Checkpoints: a JSON metadata file plus a flat binary file of
//! little-endian `f32` values (entity block, then relation block, each
//! row-major `[item][embedding][dimension]`).
//!
//! A checkpoint at stem `out/best` is stored as `out/best.json` and
//! `out/best.bin`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::scoring::{KgeModel, ModelConfig, MultiEmbeddingTable, Preset, WeightVector};
use crate::weight_learning::RestrictionKind;

pub const FORMAT: &str = "mkge-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub num_entities: usize,
    pub num_relations: usize,
    pub n_e: usize,
    pub n_r: usize,
    pub dim: usize,
    /// Display name, e.g. `complex` or `learnable_softmax_sparse`.
    pub preset_name: String,
    pub preset: Preset,
    /// Effective ω in lexicographic `(i, j, k)` order.
    pub omega: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<RestrictionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_params: Option<Vec<f64>>,
    pub seed: u64,
    pub epoch: usize,
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(stem.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

/// Accepts `out/best`, `out/best.json` or `out/best.bin`.
pub fn normalize_stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("bin") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

pub fn meta_path(stem: &Path) -> PathBuf {
    with_suffix(&normalize_stem(stem), ".json")
}

pub fn data_path(stem: &Path) -> PathBuf {
    with_suffix(&normalize_stem(stem), ".bin")
}

pub fn metadata(model: &KgeModel, epoch: usize) -> CheckpointMeta {
    let learn = model.weights.learnable_params();
    CheckpointMeta {
        format: FORMAT.to_string(),
        num_entities: model.table.num_entities(),
        num_relations: model.table.num_relations(),
        n_e: model.config.n_e,
        n_r: model.config.n_r,
        dim: model.config.dim,
        preset_name: model.config.preset.to_string(),
        preset: model.config.preset.clone(),
        omega: model.weights.omega().to_vec(),
        restriction: learn.map(|l| l.restriction),
        raw_params: learn.map(|l| l.raw.clone()),
        seed: model.config.seed,
        epoch,
    }
}

pub fn save(model: &KgeModel, stem: &Path, epoch: usize) -> Result<()> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let meta = metadata(model, epoch);
    let meta_file = meta_path(stem);
    let json = serde_json::to_string_pretty(&meta).map_err(|source| Error::Metadata {
        path: meta_file.clone(),
        source,
    })?;
    fs::write(&meta_file, json + "\n").map_err(io_err(&meta_file))?;

    let data_file = data_path(stem);
    let table = &model.table;
    let mut bytes = Vec::with_capacity(4 * (table.entity_data().len() + table.relation_data().len()));
    for x in table.entity_data().iter().chain(table.relation_data()) {
        bytes.extend_from_slice(&(*x as f32).to_le_bytes());
    }
    let mut f = fs::File::create(&data_file).map_err(io_err(&data_file))?;
    f.write_all(&bytes).map_err(io_err(&data_file))?;
    Ok(())
}

pub fn load_meta(stem: &Path) -> Result<CheckpointMeta> {
    let meta_file = meta_path(stem);
    let text = fs::read_to_string(&meta_file).map_err(io_err(&meta_file))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|source| Error::Metadata {
        path: meta_file.clone(),
        source,
    })?;
    if meta.format != FORMAT {
        return Err(Error::CorruptCheckpoint {
            path: meta_file,
            reason: format!("unsupported format {:?}", meta.format),
        });
    }
    Ok(meta)
}

/// Loads a checkpoint; embeddings come back as `f64` widened from `f32`.
pub fn load(stem: &Path) -> Result<(KgeModel, CheckpointMeta)> {
    let meta = load_meta(stem)?;
    let data_file = data_path(stem);
    let bytes = fs::read(&data_file).map_err(io_err(&data_file))?;
    let n_ent = meta.num_entities * meta.n_e * meta.dim;
    let n_rel = meta.num_relations * meta.n_r * meta.dim;
    if bytes.len() != 4 * (n_ent + n_rel) {
        return Err(Error::CorruptCheckpoint {
            path: data_file,
            reason: format!(
                "expected {} bytes for the declared shape, found {}",
                4 * (n_ent + n_rel),
                bytes.len()
            ),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let (ent, rel) = values.split_at(n_ent);
    let table = MultiEmbeddingTable::from_data(
        meta.num_entities,
        meta.num_relations,
        meta.n_e,
        meta.n_r,
        meta.dim,
        ent.to_vec(),
        rel.to_vec(),
    )?;
    let weights = match (&meta.restriction, &meta.raw_params) {
        (Some(kind), Some(raw)) => WeightVector::learnable(meta.n_e, meta.n_r, *kind, raw.clone())?,
        _ => WeightVector::fixed(meta.n_e, meta.n_r, meta.omega.clone())?,
    };
    let config = ModelConfig {
        n_e: meta.n_e,
        n_r: meta.n_r,
        dim: meta.dim,
        preset: meta.preset.clone(),
        seed: meta.seed,
    };
    let model = KgeModel::from_parts(config, table, weights)?;
    Ok((model, meta))
}

/// Fails unless the checkpoint was trained on a dataset of this size.
pub fn check_counts(meta: &CheckpointMeta, num_entities: usize, num_relations: usize) -> Result<()> {
    if meta.num_entities != num_entities {
        return Err(Error::CheckpointMismatch {
            what: "entity count",
            checkpoint: meta.num_entities,
            dataset: num_entities,
        });
    }
    if meta.num_relations != num_relations {
        return Err(Error::CheckpointMismatch {
            what: "relation count",
            checkpoint: meta.num_relations,
            dataset: num_relations,
        });
    }
    Ok(())
}
