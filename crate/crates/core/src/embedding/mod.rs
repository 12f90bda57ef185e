//! Translation embeddings learned from generalized local knowledge graphs.

mod attention;
mod objective;
mod sampler;
mod store;
mod train;

pub use attention::{attention_edge, attention_vertex};
pub use objective::{correlation, f1, f2, log_prob, log_prob_grad, log_sigmoid, sigmoid, Gradients};
pub use sampler::{NegativeSampler, MAX_ATTEMPTS};
pub(crate) use store::translate_unchecked;
pub use store::{squared_distance, translate_score, EmbeddingStore, VectorLookup};
pub use train::{train, train_with, TrainConfig, TrainReport};

use rand::Rng;

use crate::error::Result;
use crate::kg::GeneralizedLocalKg;

/// Log-likelihood of `g`'s owner with `n` freshly sampled negatives.
pub fn log_prob_sampled<L: VectorLookup + ?Sized, R: Rng + ?Sized>(
    vecs: &L,
    g: &GeneralizedLocalKg,
    sampler: &NegativeSampler,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let negatives = sampler.sample(g.owner, n, rng)?;
    log_prob(vecs, g, &negatives)
}
