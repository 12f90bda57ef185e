//! Question phrases and their ranked candidate vertices and edges.

mod lexicon;
mod mapping;

pub use lexicon::{tokenize, ImpliedRule, LexEntry, Lexicon};
pub use mapping::{
    connection_features, disambiguate, extract_phrases, prune, retrieve_candidates, Candidate, CandidateSet,
    Features, PhraseKind, PhraseMatch, Weights,
};
