//! Batch loss and its analytic gradient.
//!
//! Per labeled triple the objective is
//!
//! ```text
//! ℓ(Y·S) + λ/(n_e·D)·(‖h‖² + ‖t‖²) + λ/(n_r·D)·‖r‖²
//! ```
//!
//! where `h`, `t`, `r` are all embedding vectors of that triple. With a
//! learnable weight vector the batch additionally pays the Dirichlet (and
//! optional L1) penalty on the restricted ω, once per batch.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::kg_store::Triple;
use crate::scoring::{
    check_triple, head_partial, interaction_terms, relation_partial, score_blocks, score_triple,
    tail_partial, MultiEmbeddingTable, WeightVector,
};
use crate::trainer::loss::{loss_derivative, loss_triple, Label, LossForm};
use crate::weight_learning::{dirichlet_reg, l1_reg, restrict_backward, DirichletRegConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledTriple {
    pub triple: Triple,
    pub label: Label,
}

impl LabeledTriple {
    pub fn positive(triple: Triple) -> Self {
        Self {
            triple,
            label: Label::Positive,
        }
    }

    pub fn negative(triple: Triple) -> Self {
        Self {
            triple,
            label: Label::Negative,
        }
    }
}

/// Loss terms of the training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub loss_form: LossForm,
    pub l2_lambda: f64,
    /// Only used with learnable weights.
    pub dirichlet: DirichletRegConfig,
    /// Only used with learnable weights.
    pub l1_lambda: f64,
}

impl Default for Objective {
    fn default() -> Self {
        Self {
            loss_form: LossForm::Softplus,
            l2_lambda: 0.0,
            dirichlet: DirichletRegConfig::default(),
            l1_lambda: 0.0,
        }
    }
}

/// Sparse gradients of one batch. Entity and relation entries are full
/// blocks (`n·dim`) keyed by item id; `raw_weights` is the gradient with
/// respect to the raw parameters of a learnable ω.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub entity: BTreeMap<usize, Vec<f64>>,
    pub relation: BTreeMap<usize, Vec<f64>>,
    pub raw_weights: Option<Vec<f64>>,
}

fn accumulate(map: &mut BTreeMap<usize, Vec<f64>>, key: usize, g: &[f64]) {
    let slot = map.entry(key).or_insert_with(|| vec![0.0; g.len()]);
    slot.iter_mut().zip(g).for_each(|(s, x)| *s += x);
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn weight_penalty(omega: &[f64], obj: &Objective) -> Result<(f64, Vec<f64>)> {
    let mut loss = 0.0;
    let mut grad = vec![0.0; omega.len()];
    if obj.dirichlet.enabled {
        let (l, g) = dirichlet_reg(omega, &obj.dirichlet)?;
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    if obj.l1_lambda > 0.0 {
        let (l, g) = l1_reg(omega, obj.l1_lambda);
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((loss, grad))
}

/// Total objective of a batch, evaluated directly from scores.
pub fn batch_loss(
    table: &MultiEmbeddingTable,
    w: &WeightVector,
    batch: &[LabeledTriple],
    obj: &Objective,
) -> Result<f64> {
    let dim = table.dim() as f64;
    let ent_reg = obj.l2_lambda / (table.n_e() as f64 * dim);
    let rel_reg = obj.l2_lambda / (table.n_r() as f64 * dim);
    let mut total = 0.0;
    for lt in batch {
        let t = &lt.triple;
        let s = score_triple(table, w, t)?;
        total += loss_triple(s, lt.label, obj.loss_form);
        total += ent_reg * (sq_norm(table.entity_block(t.head)) + sq_norm(table.entity_block(t.tail)));
        total += rel_reg * sq_norm(table.relation_block(t.relation));
    }
    if w.is_learnable() {
        total += weight_penalty(w.omega(), obj)?.0;
    }
    Ok(total)
}

/// Loss and analytic gradient of a batch. Gradients of parameters that
/// occur several times in the batch are summed, in batch order.
pub fn grad_batch(
    table: &MultiEmbeddingTable,
    w: &WeightVector,
    batch: &[LabeledTriple],
    obj: &Objective,
) -> Result<Gradients> {
    let d = table.dim();
    let ent_reg = obj.l2_lambda / (table.n_e() as f64 * d as f64);
    let rel_reg = obj.l2_lambda / (table.n_r() as f64 * d as f64);
    let mut out = Gradients::default();
    let mut grad_omega = w.is_learnable().then(|| vec![0.0; w.len()]);

    for lt in batch {
        let t = &lt.triple;
        check_triple(table, t)?;
        let h = table.entity_block(t.head);
        let tl = table.entity_block(t.tail);
        let r = table.relation_block(t.relation);

        let s = score_blocks(w, h, tl, r, d);
        let g = loss_derivative(s, lt.label, obj.loss_form);
        out.loss += loss_triple(s, lt.label, obj.loss_form)
            + ent_reg * (sq_norm(h) + sq_norm(tl))
            + rel_reg * sq_norm(r);

        let mut gh = head_partial(w, tl, r, d);
        gh.iter_mut().zip(h).for_each(|(x, p)| *x = g * *x + 2.0 * ent_reg * p);
        let mut gt = tail_partial(w, h, r, d);
        gt.iter_mut().zip(tl).for_each(|(x, p)| *x = g * *x + 2.0 * ent_reg * p);
        let mut gr = relation_partial(w, h, tl, d);
        gr.iter_mut().zip(r).for_each(|(x, p)| *x = g * *x + 2.0 * rel_reg * p);

        accumulate(&mut out.entity, t.head, &gh);
        accumulate(&mut out.entity, t.tail, &gt);
        accumulate(&mut out.relation, t.relation, &gr);

        if let Some(go) = grad_omega.as_mut() {
            let terms = interaction_terms(h, tl, r, w.n_e(), w.n_r(), d);
            go.iter_mut().zip(&terms).for_each(|(a, x)| *a += g * x);
        }
    }

    if let (Some(mut go), Some(params)) = (grad_omega, w.learnable_params()) {
        let (penalty, pg) = weight_penalty(w.omega(), obj)?;
        out.loss += penalty;
        go.iter_mut().zip(&pg).for_each(|(a, b)| *a += b);
        out.raw_weights = Some(restrict_backward(w.omega(), &go, params.restriction));
    }
    Ok(out)
}
