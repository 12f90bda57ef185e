use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{log_prob_grad, Gradients};
use super::sampler::NegativeSampler;
use super::store::{EmbeddingStore, VectorLookup};
use crate::error::{Error, Result};
use crate::kg::{GeneralizedLocalKg, KnowledgeGraph, ObjectId};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub lambda_v: f64,
    pub lambda_e: f64,
    /// Negatives drawn per training example.
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// 1 trains deterministically; more workers update shared vectors
    /// without synchronization.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            lambda_v: 0.5,
            lambda_e: 0.5,
            negatives: 5,
            learning_rate: 0.01,
            epochs: 100,
            seed: 42,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if !(self.lambda_v >= 0.0 && self.lambda_e >= 0.0) {
            return bad("lambda_v and lambda_e must be non-negative");
        }
        if self.lambda_v == 0.0 && self.lambda_e == 0.0 {
            return bad("lambda_v and lambda_e cannot both be zero");
        }
        if self.negatives == 0 {
            return bad("at least one negative sample is required");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.workers == 0 {
            return bad("at least one worker is required");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Negated weighted objective, summed over owners, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    pub trained_vertices: usize,
    pub trained_edges: usize,
    /// Objects with an empty GL-KG; their vectors keep their initial values.
    pub frozen: Vec<ObjectId>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

pub fn train(kg: &KnowledgeGraph, config: &TrainConfig) -> Result<(EmbeddingStore, TrainReport)> {
    train_with(kg, &kg.generalize_all(), config)
}

/// Trains from precomputed GL-KGs, one per object of `kg`.
pub fn train_with(
    kg: &KnowledgeGraph,
    gl_kgs: &[GeneralizedLocalKg],
    config: &TrainConfig,
) -> Result<(EmbeddingStore, TrainReport)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = initial_store(kg, config.dim, &mut rng);

    let mut by_owner: Vec<Option<&GeneralizedLocalKg>> = vec![None; kg.vertex_count() + kg.edge_count()];
    for g in gl_kgs {
        kg.check(g.owner)?;
        by_owner[slot(kg, g.owner)] = Some(g);
    }
    let mut report = TrainReport::default();
    let mut owners: Vec<(&GeneralizedLocalKg, f64)> = Vec::new();
    for o in kg.objects() {
        let g = by_owner[slot(kg, o)].ok_or(Error::UnknownObject(o))?;
        if g.is_empty() {
            report.frozen.push(o);
            continue;
        }
        let lambda = match o {
            ObjectId::Vertex(_) => config.lambda_v,
            ObjectId::Edge(_) => config.lambda_e,
        };
        if lambda > 0.0 {
            match o {
                ObjectId::Vertex(_) => report.trained_vertices += 1,
                ObjectId::Edge(_) => report.trained_edges += 1,
            }
            owners.push((g, lambda));
        }
    }
    let sampler = NegativeSampler::new(kg.vertex_count(), kg.edge_count(), gl_kgs);
    let params = Params::from_store(&store);

    for epoch in 0..config.epochs {
        owners.shuffle(&mut rng);
        let loss = if config.workers == 1 {
            run_chunk(&params, &sampler, &owners, config, epoch, &mut rng)?
        } else {
            let chunk = owners.len().div_ceil(config.workers).max(1);
            let seeds: Vec<u64> = (0..config.workers).map(|_| rng.gen()).collect();
            std::thread::scope(|s| {
                let handles: Vec<_> = owners
                    .chunks(chunk)
                    .zip(&seeds)
                    .map(|(part, &seed)| {
                        let (params, sampler) = (&params, &sampler);
                        s.spawn(move || {
                            run_chunk(params, sampler, part, config, epoch, &mut ChaCha8Rng::seed_from_u64(seed))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .sum::<Result<f64>>()
            })?
        };
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                owner: None,
                loss,
            });
        }
        report.epoch_losses.push(loss);
    }
    params.write_to(&mut store);
    Ok((store, report))
}

fn slot(kg: &KnowledgeGraph, id: ObjectId) -> usize {
    match id {
        ObjectId::Vertex(v) => v.index(),
        ObjectId::Edge(e) => kg.vertex_count() + e.index(),
    }
}

/// Uniform components in `[-6/√d, 6/√d]`; vertex vectors then normalized.
fn initial_store(kg: &KnowledgeGraph, dim: usize, rng: &mut ChaCha8Rng) -> EmbeddingStore {
    let mut store = EmbeddingStore::zeros(kg, dim);
    let bound = 6.0 / (dim as f64).sqrt();
    for o in kg.objects() {
        let v = store.vector_mut(o);
        for x in v.iter_mut() {
            *x = rng.gen_range(-bound..=bound);
        }
        if matches!(o, ObjectId::Vertex(_)) {
            normalize(v);
        }
    }
    store
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn run_chunk(
    params: &Params,
    sampler: &NegativeSampler,
    owners: &[(&GeneralizedLocalKg, f64)],
    config: &TrainConfig,
    epoch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut scratch = Scratch::new(params.dim);
    let mut grads = Gradients::new(params.dim);
    let mut loss = 0.0;
    for &(g, lambda) in owners {
        let negatives = sampler.sample(g.owner, config.negatives, rng)?;
        scratch.load(params, g, &negatives);
        grads.clear();
        let lp = log_prob_grad(&scratch, g, &negatives, lambda, &mut grads)?;
        if !lp.is_finite() {
            return Err(Error::Diverged {
                epoch,
                owner: Some(g.owner),
                loss: -lambda * lp,
            });
        }
        loss -= lambda * lp;
        for (id, grad) in grads.iter() {
            params.step(id, config.learning_rate, grad);
        }
    }
    Ok(loss)
}

/// Shared parameter table. Components are `f64` bit patterns so workers can
/// read and write them without locks; concurrent updates may be lost.
struct Params {
    dim: usize,
    vertex_count: usize,
    data: Vec<AtomicU64>,
}

impl Params {
    fn from_store(store: &EmbeddingStore) -> Self {
        let data = store
            .vertex_buffer()
            .iter()
            .chain(store.edge_buffer())
            .map(|x| AtomicU64::new(x.to_bits()))
            .collect();
        Self {
            dim: store.dim(),
            vertex_count: store.vertex_count(),
            data,
        }
    }

    fn cells(&self, id: ObjectId) -> &[AtomicU64] {
        let i = match id {
            ObjectId::Vertex(v) => v.index(),
            ObjectId::Edge(e) => self.vertex_count + e.index(),
        };
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn read(&self, id: ObjectId, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.cells(id).iter().map(|c| f64::from_bits(c.load(Ordering::Relaxed))));
    }

    /// Gradient ascent step, then unit-norm projection for vertices.
    fn step(&self, id: ObjectId, lr: f64, grad: &[f64]) {
        let cells = self.cells(id);
        let mut v: Vec<f64> = cells
            .iter()
            .zip(grad)
            .map(|(c, g)| f64::from_bits(c.load(Ordering::Relaxed)) + lr * g)
            .collect();
        if matches!(id, ObjectId::Vertex(_)) {
            normalize(&mut v);
        }
        for (c, x) in cells.iter().zip(v) {
            c.store(x.to_bits(), Ordering::Relaxed);
        }
    }

    fn write_to(&self, store: &mut EmbeddingStore) {
        let mut buf = Vec::with_capacity(self.dim);
        for i in 0..self.data.len() / self.dim {
            let id = if i < self.vertex_count {
                ObjectId::Vertex(crate::kg::VertexId(i as u32))
            } else {
                ObjectId::Edge(crate::kg::EdgeId((i - self.vertex_count) as u32))
            };
            self.read(id, &mut buf);
            store.vector_mut(id).copy_from_slice(&buf);
        }
    }
}

/// Private copy of the vectors one training example touches.
struct Scratch {
    dim: usize,
    vecs: HashMap<ObjectId, Vec<f64>>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            vecs: HashMap::new(),
        }
    }

    fn load(&mut self, params: &Params, g: &GeneralizedLocalKg, negatives: &[ObjectId]) {
        self.vecs.clear();
        let ids = g
            .triples
            .iter()
            .flat_map(|t| [t.head.into(), t.edge.into(), t.tail.into()])
            .chain(std::iter::once(g.owner))
            .chain(negatives.iter().copied());
        for id in ids {
            if !self.vecs.contains_key(&id) {
                let mut v = Vec::with_capacity(self.dim);
                params.read(id, &mut v);
                self.vecs.insert(id, v);
            }
        }
    }
}

impl VectorLookup for Scratch {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, id: ObjectId) -> &[f64] {
        &self.vecs[&id]
    }
}
