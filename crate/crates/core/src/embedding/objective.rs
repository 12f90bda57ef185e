//! Translation-based correlation scores and the negative-sampling
//! log-likelihood with its analytic gradient.

use std::collections::HashMap;

use super::store::{translate_unchecked, VectorLookup};
use crate::error::{Error, Result};
use crate::kg::{Anchor, EdgeId, GeneralizedLocalKg, ObjectId, VertexId};

/// Correlation between an arbitrary vertex `v_prime` and the GL-KG of a
/// vertex: the attention-weighted mean of squared translation residuals,
/// negated. `v_prime` takes the owner's place in every triple.
pub fn f1<L: VectorLookup + ?Sized>(vecs: &L, v_prime: VertexId, g: &GeneralizedLocalKg) -> f64 {
    let x = vecs.vector(v_prime.into());
    let mut total = 0.0;
    let mut norm = 0.0;
    for t in &g.triples {
        let a = g.weight(t);
        let e = vecs.vector(t.edge.into());
        let r = match t.anchor {
            Anchor::Head => translate_unchecked(x, e, vecs.vector(t.tail.into())),
            Anchor::Tail => translate_unchecked(vecs.vector(t.head.into()), e, x),
            Anchor::Edge => unreachable!("vertex GL-KG holds no edge-anchored triple"),
        };
        total += a * r;
        norm += a;
    }
    -total / norm
}

/// Correlation between an arbitrary edge `e_prime` and the GL-KG of an edge.
pub fn f2<L: VectorLookup + ?Sized>(vecs: &L, e_prime: EdgeId, g: &GeneralizedLocalKg) -> f64 {
    let x = vecs.vector(e_prime.into());
    let mut total = 0.0;
    let mut norm = 0.0;
    for t in &g.triples {
        let a = g.weight(t);
        total += a * translate_unchecked(vecs.vector(t.head.into()), x, vecs.vector(t.tail.into()));
        norm += a;
    }
    -total / norm
}

/// `f1` or `f2`, chosen by the owner of `g`. `candidate` must be of the same
/// sort as the owner.
pub fn correlation<L: VectorLookup + ?Sized>(vecs: &L, candidate: ObjectId, g: &GeneralizedLocalKg) -> Result<f64> {
    match (g.owner, candidate) {
        (ObjectId::Vertex(_), ObjectId::Vertex(v)) => Ok(f1(vecs, v, g)),
        (ObjectId::Edge(_), ObjectId::Edge(e)) => Ok(f2(vecs, e, g)),
        _ => Err(Error::InvalidConfig(format!(
            "candidate {candidate:?} is not of the same sort as owner {:?}",
            g.owner
        ))),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Negative-sampling log-likelihood of the owner given its GL-KG:
/// `log σ(f(owner)) + Σ log σ(−f(neg))`.
pub fn log_prob<L: VectorLookup + ?Sized>(vecs: &L, g: &GeneralizedLocalKg, negatives: &[ObjectId]) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::EmptyLocalKg(g.owner));
    }
    let mut lp = log_sigmoid(correlation(vecs, g.owner, g)?);
    for &n in negatives {
        lp += log_sigmoid(-correlation(vecs, n, g)?);
    }
    Ok(lp)
}

/// Gradient accumulator keyed by object.
#[derive(Debug, Default)]
pub struct Gradients {
    dim: usize,
    grads: HashMap<ObjectId, Vec<f64>>,
}

impl Gradients {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            grads: HashMap::new(),
        }
    }

    pub fn clear(&mut self) {
        self.grads.clear();
    }

    pub fn get(&self, id: ObjectId) -> Option<&[f64]> {
        self.grads.get(&id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, &[f64])> {
        self.grads.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    fn add_scaled(&mut self, id: ObjectId, coeff: f64, r: &[f64]) {
        let dim = self.dim;
        let g = self.grads.entry(id).or_insert_with(|| vec![0.0; dim]);
        for (gi, ri) in g.iter_mut().zip(r) {
            *gi += coeff * ri;
        }
    }
}

/// Adds `scale · ∇ log_prob` to `grads` and returns `log_prob`.
///
/// With weight `w = a / A` and residual `r`, a term `−w‖r‖²` of `f`
/// contributes `∓2w·r` to each vector entering `r` with sign `±`.
pub fn log_prob_grad<L: VectorLookup + ?Sized>(
    vecs: &L,
    g: &GeneralizedLocalKg,
    negatives: &[ObjectId],
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::EmptyLocalKg(g.owner));
    }
    let dim = vecs.dim();
    let weights = g.weights();
    let norm: f64 = weights.iter().sum();
    let mut residual = vec![0.0; dim];
    let mut lp = 0.0;

    let candidates = std::iter::once((g.owner, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (cand, positive) in candidates {
        let f = correlation(vecs, cand, g)?;
        // d/df log σ(f) = σ(−f); d/df log σ(−f) = −σ(f).
        let (term, df) = if positive {
            (log_sigmoid(f), sigmoid(-f))
        } else {
            (log_sigmoid(-f), -sigmoid(f))
        };
        lp += term;
        let x = vecs.vector(cand);
        for (t, a) in g.triples.iter().zip(&weights) {
            let c = scale * df * 2.0 * a / norm;
            let e = vecs.vector(t.edge.into());
            match t.anchor {
                Anchor::Head => {
                    // r = x + e − tail
                    let tail = vecs.vector(t.tail.into());
                    for i in 0..dim {
                        residual[i] = x[i] + e[i] - tail[i];
                    }
                    grads.add_scaled(cand, -c, &residual);
                    grads.add_scaled(t.edge.into(), -c, &residual);
                    grads.add_scaled(t.tail.into(), c, &residual);
                }
                Anchor::Tail => {
                    // r = head + e − x
                    let head = vecs.vector(t.head.into());
                    for i in 0..dim {
                        residual[i] = head[i] + e[i] - x[i];
                    }
                    grads.add_scaled(t.head.into(), -c, &residual);
                    grads.add_scaled(t.edge.into(), -c, &residual);
                    grads.add_scaled(cand, c, &residual);
                }
                Anchor::Edge => {
                    // r = head + x − tail
                    let head = vecs.vector(t.head.into());
                    let tail = vecs.vector(t.tail.into());
                    for i in 0..dim {
                        residual[i] = head[i] + x[i] - tail[i];
                    }
                    grads.add_scaled(t.head.into(), -c, &residual);
                    grads.add_scaled(cand, -c, &residual);
                    grads.add_scaled(t.tail.into(), c, &residual);
                }
            }
        }
    }
    Ok(lp)
}
