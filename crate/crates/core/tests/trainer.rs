mod common;

use std::collections::HashMap;

use mkge_core::checkpoint;
use mkge_core::trainer::{
    adam_step, batch_loss, epoch_batches, grad_batch, AdamState, Label, LabeledTriple, TrainConfig,
};
use mkge_core::*;

fn model(ds: &KgDataset, preset: Preset, dim: usize, seed: u64) -> KgeModel {
    KgeModel::new(ModelConfig::new(preset, dim, seed), ds.num_entities(), ds.num_relations()).unwrap()
}

fn quick_cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        batch_size: 64,
        max_epochs: epochs,
        eval_every: 5,
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn zero_epochs_returns_initial_model() {
    let ds = common::random_kg(10, 2, 30, 0, 1);
    let m = model(&ds, Preset::ComplEx, 4, 5);
    let out = train(&ds, m.clone(), &quick_cfg(0)).unwrap();
    assert!(out.log.is_empty());
    assert_eq!(out.best, m);
    assert_eq!(out.final_model, m);
}

#[test]
fn same_seed_same_checkpoint() {
    let ds = common::random_kg(20, 3, 80, 10, 2);
    let run = || train(&ds, model(&ds, Preset::Quaternion, 3, 7), &quick_cfg(4)).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.final_model, b.final_model);
    assert_eq!(a.log, b.log);

    let dir = tempfile::tempdir().unwrap();
    checkpoint::save(&a.final_model, &dir.path().join("a"), a.final_epoch).unwrap();
    checkpoint::save(&b.final_model, &dir.path().join("b"), b.final_epoch).unwrap();
    for ext in ["a.bin", "a.json"] {
        let other = ext.replacen('a', "b", 1);
        assert_eq!(
            std::fs::read(dir.path().join(ext)).unwrap(),
            std::fs::read(dir.path().join(other)).unwrap()
        );
    }
}

#[test]
fn different_seed_different_run() {
    let ds = common::random_kg(20, 3, 80, 0, 2);
    let m = model(&ds, Preset::ComplEx, 4, 7);
    let a = train(&ds, m.clone(), &quick_cfg(2)).unwrap();
    let b = train(&ds, m, &TrainConfig { seed: 10, ..quick_cfg(2) }).unwrap();
    assert_ne!(a.final_model.table, b.final_model.table);
}

#[test]
fn entities_unit_norm_after_training() {
    let ds = common::random_kg(15, 2, 40, 0, 3);
    for preset in [Preset::DistMult, Preset::Cp, Preset::Quaternion] {
        let out = train(&ds, model(&ds, preset, 6, 1), &quick_cfg(3)).unwrap();
        let t = &out.final_model.table;
        for e in 0..t.num_entities() {
            for i in 0..t.n_e() {
                let n: f64 = t.entity_vec(e, i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-6, "entity {e} vector {i} has norm {n}");
            }
        }
    }
}

#[test]
fn adam_lowers_fixed_batch_loss() {
    // Seeds fixed once; not a theorem.
    for seed in [1u64, 2, 3] {
        let ds = common::random_kg(12, 2, 16, 0, seed);
        let mut m = model(&ds, Preset::ComplEx, 5, seed);
        let batch: Vec<LabeledTriple> = ds
            .train
            .iter()
            .enumerate()
            .map(|(n, &t)| if n % 2 == 0 { LabeledTriple::positive(t) } else { LabeledTriple::negative(t) })
            .collect();
        let obj = TrainConfig::default().objective();
        let mut ent = AdamState::new(m.table.entity_data().len());
        let mut rel = AdamState::new(m.table.relation_data().len());
        let mut prev = batch_loss(&m.table, &m.weights, &batch, &obj).unwrap();
        for step in 0..10 {
            let g = grad_batch(&m.table, &m.weights, &batch, &obj).unwrap();
            let mut ge = vec![0.0; m.table.entity_data().len()];
            let mut gr = vec![0.0; m.table.relation_data().len()];
            let (we, wr) = (m.table.n_e() * m.table.dim(), m.table.n_r() * m.table.dim());
            for (&e, v) in &g.entity {
                ge[e * we..(e + 1) * we].copy_from_slice(v);
            }
            for (&r, v) in &g.relation {
                gr[r * wr..(r + 1) * wr].copy_from_slice(v);
            }
            adam_step(m.table.entity_data_mut(), &ge, &mut ent, 1e-3);
            adam_step(m.table.relation_data_mut(), &gr, &mut rel, 1e-3);
            let now = batch_loss(&m.table, &m.weights, &batch, &obj).unwrap();
            assert!(now < prev, "seed {seed} step {step}: {now} >= {prev}");
            prev = now;
        }
        assert_eq!(ent.step(), 10);
    }
}

#[test]
fn epoch_covers_each_positive_once() {
    let ds = common::random_kg(30, 3, 101, 0, 4);
    for k in [1usize, 3] {
        let cfg = TrainConfig { batch_size: 16, negatives_per_positive: k, ..Default::default() };
        let mut order = Vec::new();
        let batches = epoch_batches(&ds.train, ds.num_entities(), &cfg, 1, &mut order);
        assert_eq!(batches.len(), 101usize.div_ceil(16));
        let mut positives: HashMap<Triple, usize> = HashMap::new();
        let mut negatives = 0;
        for batch in &batches {
            let mut last_pos = None;
            for lt in batch {
                match lt.label {
                    Label::Positive => {
                        *positives.entry(lt.triple).or_default() += 1;
                        last_pos = Some(lt.triple);
                    }
                    Label::Negative => {
                        let p = last_pos.unwrap();
                        let t = lt.triple;
                        assert_eq!(t.relation, p.relation);
                        assert!((t.head == p.head) != (t.tail == p.tail));
                        negatives += 1;
                    }
                }
            }
        }
        assert_eq!(positives.len(), ds.train.len());
        assert!(positives.values().all(|&c| c == 1));
        assert_eq!(negatives, k * ds.train.len());
    }
}

#[test]
fn epochs_use_different_streams() {
    let ds = common::random_kg(30, 3, 50, 0, 4);
    let cfg = TrainConfig { batch_size: 8, ..Default::default() };
    let mut order = Vec::new();
    let a = epoch_batches(&ds.train, ds.num_entities(), &cfg, 1, &mut order);
    let a2 = epoch_batches(&ds.train, ds.num_entities(), &cfg, 1, &mut order);
    let b = epoch_batches(&ds.train, ds.num_entities(), &cfg, 2, &mut order);
    assert_eq!(a, a2);
    assert_ne!(a, b);
}

#[test]
fn non_finite_loss_names_the_batch() {
    let ds = common::random_kg(10, 2, 20, 0, 5);
    let mut m = model(&ds, Preset::DistMult, 2, 1);
    m.table.relation_block_mut(1)[0] = f64::NAN;
    let err = train(&ds, m, &quick_cfg(3)).unwrap_err();
    assert!(matches!(err, Error::NonFiniteLoss { epoch: 1, .. }), "{err}");
    assert!(err.to_string().contains("batch"));
}

#[test]
fn empty_training_set_is_rejected() {
    let mut ds = common::random_kg(10, 2, 5, 0, 5);
    let m = model(&ds, Preset::DistMult, 2, 1);
    ds = KgDataset::from_encoded(ds.vocab.clone(), Vec::new(), Vec::new(), ds.train.clone()).unwrap();
    assert!(matches!(train(&ds, m, &quick_cfg(1)), Err(Error::EmptyTrainingSet)));
}

#[test]
fn count_mismatch_is_rejected() {
    let ds = common::random_kg(10, 2, 5, 0, 5);
    let m = KgeModel::new(ModelConfig::new(Preset::Cp, 2, 0), 11, 2).unwrap();
    assert!(matches!(train(&ds, m, &quick_cfg(1)), Err(Error::CheckpointMismatch { .. })));
}

#[test]
fn log_has_validation_every_few_epochs() {
    let ds = common::random_kg(20, 2, 60, 0, 6);
    let ds = KgDataset::from_encoded(ds.vocab.clone(), ds.train[..50].to_vec(), ds.train[50..].to_vec(), Vec::new()).unwrap();
    let cfg = TrainConfig { eval_every: 3, max_epochs: 7, patience_epochs: 100, ..quick_cfg(7) };
    let mut seen = Vec::new();
    let out = trainer::train_with(&ds, model(&ds, Preset::ComplEx, 4, 2), &cfg, |r| seen.push(r.epoch)).unwrap();
    assert_eq!(seen, (1..=7).collect::<Vec<_>>());
    let evaluated: Vec<usize> = out.log.iter().filter(|r| r.valid_mrr.is_some()).map(|r| r.epoch).collect();
    assert_eq!(evaluated, vec![3, 6, 7]);
    let best = out.log.iter().filter_map(|r| r.valid_mrr).fold(f64::MIN, f64::max);
    assert_eq!(out.best_valid_mrr, Some(best));
    let again = evaluate(&out.best, &ds, Split::Valid).unwrap().mrr;
    assert_eq!(again, best);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.tsv");
    trainer::write_log(&path, &out.log).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().nth(1).unwrap().ends_with("\t-"));
}

#[test]
fn patience_stops_early() {
    let ds = common::random_kg(20, 2, 60, 0, 6);
    let ds = KgDataset::from_encoded(ds.vocab.clone(), ds.train[..50].to_vec(), ds.train[50..].to_vec(), Vec::new()).unwrap();
    // Zero patience stops at the first check that fails to improve.
    let cfg = TrainConfig { eval_every: 1, max_epochs: 50, patience_epochs: 0, ..quick_cfg(50) };
    let out = train(&ds, model(&ds, Preset::ComplEx, 4, 2), &cfg).unwrap();
    assert_eq!(out.final_epoch, 1);
    let cfg = TrainConfig { eval_every: 1, max_epochs: 400, patience_epochs: 5, learning_rate: 0.1, ..quick_cfg(400) };
    let out = train(&ds, model(&ds, Preset::ComplEx, 4, 2), &cfg).unwrap();
    assert!(out.final_epoch < 400);
    assert_eq!(out.final_epoch - out.best_epoch, 5);
}

#[test]
fn cp_memorizes_toy_graph() {
    let ds = common::random_kg(50, 4, 500, 0, 11);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 100,
        max_epochs: 1000,
        seed: 3,
        ..Default::default()
    };
    let out = train(&ds, model(&ds, Preset::Cp, 25, 1), &cfg).unwrap();
    let mrr = evaluate(&out.best, &ds, Split::Train).unwrap().mrr;
    assert!(mrr >= 0.95, "train MRR {mrr}");
}

#[test]
fn learnable_weights_move_and_stay_restricted() {
    let ds = common::random_kg(15, 2, 40, 0, 8);
    let preset = Preset::Learnable { restriction: RestrictionKind::Softmax, sparse: true };
    let m = model(&ds, preset, 4, 3);
    let before = m.weights.omega().to_vec();
    let cfg = TrainConfig { dirichlet: DirichletRegConfig::new(1.0 / 16.0, 1e-2).unwrap(), ..quick_cfg(3) };
    let out = train(&ds, m, &cfg).unwrap();
    let after = out.final_model.weights.omega();
    assert_ne!(before, after);
    assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let raw = &out.final_model.weights.learnable_params().unwrap().raw;
    assert_eq!(restrict(raw, RestrictionKind::Softmax), after);
}
