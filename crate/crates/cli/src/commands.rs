use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use mkge_core::checkpoint::{self, CheckpointMeta};
use mkge_core::trainer::{self, TrainConfig};
use mkge_core::{
    build_dataset, evaluate, export_concatenated, parse_triples, DirichletRegConfig, KgDataset,
    KgeModel, ModelConfig, Preset, RawTriple,
};

use crate::{EvalArgs, ExportArgs, InspectArgs, PrepareArgs, ScoreArgs, TrainArgs, WeightMode};

fn read_split(path: Option<&Path>, args: &PrepareArgs) -> anyhow::Result<Vec<RawTriple>> {
    match path {
        Some(p) => Ok(parse_triples(p, args.columns)?),
        None => Ok(Vec::new()),
    }
}

pub fn prepare(args: &PrepareArgs) -> anyhow::Result<()> {
    let train = read_split(Some(&args.train), args)?;
    if train.is_empty() {
        bail!("no training triples in {}", args.train.display());
    }
    let valid = read_split(args.valid.as_deref(), args)?;
    let test = read_split(args.test.as_deref(), args)?;
    let ds = build_dataset(&train, &valid, &test);
    ds.save(&args.out)?;
    println!("entities\t{}", ds.num_entities());
    println!("relations\t{}", ds.num_relations());
    println!("train\t{}", ds.train.len());
    println!("valid\t{}", ds.valid.len());
    println!("test\t{}", ds.test.len());
    Ok(())
}

fn load_dataset(dir: &Path) -> anyhow::Result<KgDataset> {
    KgDataset::load(dir).with_context(|| format!("loading prepared dataset from {}", dir.display()))
}

/// Model shape and weighting from the training flags. Fails on any
/// inconsistency before data is touched.
pub fn model_config(args: &TrainArgs) -> anyhow::Result<ModelConfig> {
    if args.omega.is_some() && args.weights != WeightMode::Custom {
        bail!("--omega is only used with --weights custom");
    }
    let preset = match args.weights {
        WeightMode::Preset => args.preset.parse()?,
        WeightMode::Custom => {
            let Some(omega) = args.omega.clone() else {
                bail!("--weights custom needs --omega");
            };
            Preset::Custom { omega }
        }
        WeightMode::Learnable => Preset::Learnable {
            restriction: args.restriction,
            sparse: args.sparse,
        },
    };
    let (n_e, n_r) = preset.default_shape();
    let n_e = args.n_e.unwrap_or(n_e);
    let n_r = args.n_r.unwrap_or(n_r);
    ensure!(n_e > 0 && n_r > 0, "--n-e and --n-r must be positive");
    let dim = args.dim.unwrap_or((400 / n_e).max(1));
    let config = ModelConfig {
        n_e,
        n_r,
        dim,
        preset,
        seed: args.seed,
    };
    config.validate()?;
    Ok(config)
}

pub fn train_config(args: &TrainArgs) -> anyhow::Result<TrainConfig> {
    let dirichlet = if args.sparse {
        ensure!(args.weights == WeightMode::Learnable, "--sparse needs --weights learnable");
        DirichletRegConfig::new(args.dirichlet_alpha, args.dirichlet_lambda)?
    } else {
        DirichletRegConfig::default()
    };
    let cfg = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch_size,
        l2_lambda: args.l2,
        negatives_per_positive: args.negatives,
        max_epochs: args.max_epochs,
        eval_every: args.eval_every,
        patience_epochs: args.patience,
        loss_form: args.loss,
        seed: args.seed,
        dirichlet,
        l1_lambda: args.l1_lambda,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> anyhow::Result<()> {
    let model_cfg = model_config(args)?;
    let train_cfg = train_config(args)?;
    let ds = load_dataset(&args.data)?;
    if ds.train.is_empty() {
        bail!("no training triples in {}", args.data.display());
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let run = serde_json::json!({ "model": model_cfg, "train": train_cfg });
    fs::write(args.out.join("run_config.json"), serde_json::to_string_pretty(&run)? + "\n")?;

    log::info!(
        "training {} (n_e={}, n_r={}, dim={}) on {} triples",
        model_cfg.preset,
        model_cfg.n_e,
        model_cfg.n_r,
        model_cfg.dim,
        ds.train.len()
    );
    let model = KgeModel::new(model_cfg, ds.num_entities(), ds.num_relations())?;
    let out = trainer::train_with(&ds, model, &train_cfg, |rec| {
        if let Some(mrr) = rec.valid_mrr {
            log::info!("epoch {}: loss {:.6}, valid MRR {:.4}", rec.epoch, rec.train_loss, mrr);
        }
    })?;

    checkpoint::save(&out.best, &args.out.join("best"), out.best_epoch)?;
    checkpoint::save(&out.final_model, &args.out.join("final"), out.final_epoch)?;
    trainer::write_log(&args.out.join("train_log.tsv"), &out.log)?;
    match out.best_valid_mrr {
        Some(mrr) => println!("best validation MRR {mrr:.6} at epoch {}", out.best_epoch),
        None => println!("no validation split; best checkpoint is the final one (epoch {})", out.final_epoch),
    }
    Ok(())
}

/// Loads a checkpoint and checks it against the dataset sizes.
fn load_model(ds: &KgDataset, ckpt: &Path) -> anyhow::Result<(KgeModel, CheckpointMeta)> {
    let meta = checkpoint::load_meta(ckpt)?;
    checkpoint::check_counts(&meta, ds.num_entities(), ds.num_relations())?;
    Ok(checkpoint::load(ckpt)?)
}

pub fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&args.data)?;
    let (model, _) = load_model(&ds, &args.checkpoint)?;
    let triples = ds.split(args.split);
    if triples.is_empty() {
        bail!("split {} is empty", args.split);
    }
    let report = evaluate(&model, &ds, args.split)?;
    let out_dir: PathBuf = match &args.out {
        Some(d) => d.clone(),
        None => checkpoint::meta_path(&args.checkpoint)
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    if !out_dir.as_os_str().is_empty() {
        fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    }
    fs::write(out_dir.join(format!("eval_{}.tsv", args.split)), report.to_tsv())?;
    fs::write(
        out_dir.join(format!("eval_{}.json", args.split)),
        serde_json::to_string_pretty(&report.to_json())? + "\n",
    )?;
    if let Some(p) = &args.dump_ranks {
        report.write_ranks(p, Some(&ds.vocab))?;
    }
    println!("split\t{}", args.split);
    print!("{}", report.to_tsv().split_once('\n').map_or("", |(_, rest)| rest));
    Ok(())
}

pub fn score(args: &ScoreArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&args.data)?;
    let (model, _) = load_model(&ds, &args.checkpoint)?;
    let raw = RawTriple::new(&args.head, &args.relation, &args.tail);
    let t = ds.vocab.encode(&raw).with_context(|| {
        let unknown: Vec<&str> = [
            (ds.vocab.entity_id(&args.head).is_none(), args.head.as_str()),
            (ds.vocab.relation_id(&args.relation).is_none(), args.relation.as_str()),
            (ds.vocab.entity_id(&args.tail).is_none(), args.tail.as_str()),
        ]
        .into_iter()
        .filter_map(|(missing, name)| missing.then_some(name))
        .collect();
        format!("unknown name(s): {}", unknown.join(", "))
    })?;
    println!("{}", model.score(&t)?);
    Ok(())
}

fn write_vectors(path: &Path, names: &[String], rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for (name, row) in names.iter().zip(rows) {
        write!(w, "{name}")?;
        for x in row {
            write!(w, "\t{}", *x as f32)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export(args: &ExportArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&args.data)?;
    let (model, _) = load_model(&ds, &args.checkpoint)?;
    let emb = export_concatenated(&model.table);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_vectors(&args.out.join("entities.tsv"), ds.vocab.entity_names(), &emb.entities)?;
    write_vectors(&args.out.join("relations.tsv"), ds.vocab.relation_names(), &emb.relations)?;
    println!(
        "{} entity and {} relation vectors of length {} and {}",
        emb.entities.len(),
        emb.relations.len(),
        model.table.n_e() * model.table.dim(),
        model.table.n_r() * model.table.dim()
    );
    Ok(())
}

pub fn inspect_weights(args: &InspectArgs) -> anyhow::Result<()> {
    let meta = checkpoint::load_meta(&args.checkpoint)?;
    let mut out = BufWriter::new(std::io::stdout().lock());
    writeln!(out, "# preset {} n_e={} n_r={} dim={} epoch={}", meta.preset_name, meta.n_e, meta.n_r, meta.dim, meta.epoch)?;
    if let Some(r) = meta.restriction {
        writeln!(out, "# restriction {r}")?;
    }
    let raw = meta.raw_params.as_deref();
    writeln!(out, "i\tj\tk\tomega{}", if raw.is_some() { "\traw" } else { "" })?;
    for i in 0..meta.n_e {
        for j in 0..meta.n_e {
            for k in 0..meta.n_r {
                let idx = (i * meta.n_e + j) * meta.n_r + k;
                let w = meta.omega[idx];
                if args.nonzero && w == 0.0 {
                    continue;
                }
                // 1-based indices, matching h⁽ⁱ⁾ t⁽ʲ⁾ r⁽ᵏ⁾ notation
                write!(out, "{}\t{}\t{}\t{w}", i + 1, j + 1, k + 1)?;
                match raw {
                    Some(r) => writeln!(out, "\t{}", r[idx])?,
                    None => writeln!(out)?,
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}
