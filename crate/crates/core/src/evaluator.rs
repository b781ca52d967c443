//! Filtered link-prediction evaluation.
//!
//! Each evaluated triple yields two ranks, one with the head replaced by
//! every entity and one with the tail replaced. Candidates forming a known
//! triple (train, valid or test) are dropped before ranking. Ties use the
//! mid-rank: `1 + #greater + #equal / 2`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};
use crate::kg_store::{FilterIndex, KgDataset, Split, Triple, Vocabulary};
use crate::scoring::{KgeModel, Side};

pub const HIT_LEVELS: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub triple: Triple,
    pub side: Side,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub records: Vec<RankRecord>,
}

impl EvalReport {
    /// Aggregates MRR and Hit@{1,3,10} in record order.
    pub fn from_records(records: Vec<RankRecord>) -> Self {
        let n = records.len() as f64;
        if records.is_empty() {
            return Self {
                mrr: 0.0,
                hits1: 0.0,
                hits3: 0.0,
                hits10: 0.0,
                records,
            };
        }
        let mut rr = 0.0;
        let mut hits = [0usize; 3];
        for rec in &records {
            rr += 1.0 / rec.rank;
            for (h, k) in hits.iter_mut().zip(HIT_LEVELS) {
                if rec.rank <= k as f64 {
                    *h += 1;
                }
            }
        }
        Self {
            mrr: rr / n,
            hits1: hits[0] as f64 / n,
            hits3: hits[1] as f64 / n,
            hits10: hits[2] as f64 / n,
            records,
        }
    }

    pub fn hits(&self, k: usize) -> Option<f64> {
        match k {
            1 => Some(self.hits1),
            3 => Some(self.hits3),
            10 => Some(self.hits10),
            _ => None,
        }
    }

    pub fn num_records(&self) -> usize {
        self.records.len()
    }

    /// `metric\tvalue` lines.
    pub fn to_tsv(&self) -> String {
        format!(
            "metric\tvalue\nmrr\t{}\nhits1\t{}\nhits3\t{}\nhits10\t{}\nnum_records\t{}\n",
            self.mrr,
            self.hits1,
            self.hits3,
            self.hits10,
            self.records.len()
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mrr": self.mrr,
            "hits1": self.hits1,
            "hits3": self.hits3,
            "hits10": self.hits10,
            "num_records": self.records.len(),
        })
    }

    /// One line per record: `head\trelation\ttail\tside\trank`, using names
    /// when a vocabulary is given.
    pub fn write_ranks(&self, path: &Path, vocab: Option<&Vocabulary>) -> Result<()> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        for rec in &self.records {
            let t = rec.triple;
            let decoded = vocab.and_then(|v| v.decode(&t));
            match decoded {
                Some(raw) => writeln!(w, "{}\t{}\t{}\t{}\t{}", raw.head, raw.relation, raw.tail, rec.side, rec.rank),
                None => writeln!(w, "{}\t{}\t{}\t{}\t{}", t.head, t.relation, t.tail, rec.side, rec.rank),
            }
            .map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))
    }
}

/// Mid-rank of `scores[truth]` among candidates accepted by `keep`.
pub fn mid_rank(scores: &[f64], truth: usize, mut keep: impl FnMut(usize) -> bool) -> f64 {
    let target = scores[truth];
    let mut greater = 0usize;
    let mut equal = 0usize;
    for (e, &s) in scores.iter().enumerate() {
        if e == truth || !keep(e) {
            continue;
        }
        if s > target {
            greater += 1;
        } else if s == target {
            equal += 1;
        }
    }
    1.0 + greater as f64 + equal as f64 / 2.0
}

fn corrupt(t: &Triple, side: Side, e: usize) -> Triple {
    match side {
        Side::Head => t.with_head(e),
        Side::Tail => t.with_tail(e),
    }
}

fn truth_of(t: &Triple, side: Side) -> usize {
    match side {
        Side::Head => t.head,
        Side::Tail => t.tail,
    }
}

/// Rank of `t` against every corruption of `side` that is not a known triple.
pub fn filtered_rank(model: &KgeModel, filter: &FilterIndex, t: &Triple, side: Side) -> Result<f64> {
    let scores = model.score_against_all(t, side)?;
    Ok(mid_rank(&scores, truth_of(t, side), |e| {
        !filter.contains(&corrupt(t, side, e))
    }))
}

/// Rank of `t` against every corruption of `side`, without filtering.
pub fn raw_rank(model: &KgeModel, t: &Triple, side: Side) -> Result<f64> {
    let scores = model.score_against_all(t, side)?;
    Ok(mid_rank(&scores, truth_of(t, side), |_| true))
}

/// Evaluates arbitrary triples against `filter`. Parallel over triples;
/// the result does not depend on the thread count.
pub fn evaluate_triples(model: &KgeModel, filter: &FilterIndex, triples: &[Triple]) -> Result<EvalReport> {
    let per_triple: Vec<Result<[RankRecord; 2]>> = triples
        .par_iter()
        .map(|t| {
            let head = filtered_rank(model, filter, t, Side::Head)?;
            let tail = filtered_rank(model, filter, t, Side::Tail)?;
            Ok([
                RankRecord { triple: *t, side: Side::Head, rank: head },
                RankRecord { triple: *t, side: Side::Tail, rank: tail },
            ])
        })
        .collect();
    let mut records = Vec::with_capacity(2 * triples.len());
    for pair in per_triple {
        records.extend(pair?);
    }
    Ok(EvalReport::from_records(records))
}

pub fn evaluate(model: &KgeModel, dataset: &KgDataset, split: Split) -> Result<EvalReport> {
    evaluate_triples(model, dataset.filter_index(), dataset.split(split))
}
