//! The three online stages wired together, with per-stage timing.

use std::fmt;
use std::time::{Duration, Instant};

use crate::embedding::EmbeddingStore;
use crate::error::Error;
use crate::kg::{KnowledgeGraph, Value};
use crate::phrase::{
    connection_features, disambiguate, extract_phrases, retrieve_candidates, CandidateSet, Lexicon, PhraseMatch,
    Weights,
};
use crate::query::{
    best_representations, enumerate_representations, execute_with_fallback, serialize_query, to_graph_query,
    GraphQuery, Outcome, QueryRepresentation, DEFAULT_MAX_REPRESENTATIONS, DEFAULT_RETRY_CAP,
};
use crate::structure::{solve_tables, CostTables, Solution};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub t_s: f64,
    pub max_hops: u32,
    pub weights: Weights,
    pub max_representations: u128,
    pub retry_cap: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            t_s: 15.0,
            max_hops: 4,
            weights: Weights::default(),
            max_representations: DEFAULT_MAX_REPRESENTATIONS,
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageName {
    PhraseMapping,
    StructureComputing,
    QueryGeneration,
}

impl StageName {
    pub const ALL: [StageName; 3] = [StageName::PhraseMapping, StageName::StructureComputing, StageName::QueryGeneration];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::PhraseMapping => "phrase-mapping",
            StageName::StructureComputing => "structure-computing",
            StageName::QueryGeneration => "query-generation",
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: StageName,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage.as_str(), self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub phrase_mapping: Duration,
    pub structure: Duration,
    pub query: Duration,
}

impl Timings {
    pub fn get(&self, stage: StageName) -> Duration {
        match stage {
            StageName::PhraseMapping => self.phrase_mapping,
            StageName::StructureComputing => self.structure,
            StageName::QueryGeneration => self.query,
        }
    }

    pub fn total(&self) -> Duration {
        self.phrase_mapping + self.structure + self.query
    }
}

#[derive(Clone, Debug)]
pub struct Answer {
    pub phrases: Vec<PhraseMatch>,
    /// Pruned candidate sets, in phrase order.
    pub sets: Vec<CandidateSet>,
    pub tables: CostTables,
    pub solution: Solution,
    /// Lowest-scoring representations, ascending.
    pub ranked: Vec<(QueryRepresentation, f64)>,
    /// Query of the best representation.
    pub query: Option<GraphQuery>,
    pub outcome: Outcome,
    pub timings: Timings,
}

impl Answer {
    /// The query that answered, else the query of the best representation.
    pub fn final_query(&self) -> Option<&GraphQuery> {
        self.outcome.query.as_ref().or(self.query.as_ref())
    }

    pub fn query_text(&self, kg: &KnowledgeGraph) -> Option<String> {
        self.final_query().map(|q| serialize_query(q, kg))
    }

    pub fn answer_labels(&self, kg: &KnowledgeGraph) -> Vec<String> {
        let mut out: Vec<String> = self
            .outcome
            .answers
            .iter()
            .map(|a| match a {
                Value::Vertex(v) => kg.vertex_label(*v).to_string(),
                Value::Edge(e) => kg.edge_label(*e).to_string(),
            })
            .collect();
        out.sort();
        out
    }
}

pub struct Pipeline<'a> {
    pub kg: &'a KnowledgeGraph,
    pub lexicon: &'a Lexicon,
    pub store: &'a EmbeddingStore,
    pub options: PipelineOptions,
}

impl<'a> Pipeline<'a> {
    /// `store` must be aligned to `kg`.
    pub fn new(kg: &'a KnowledgeGraph, lexicon: &'a Lexicon, store: &'a EmbeddingStore, options: PipelineOptions) -> Self {
        Self {
            kg,
            lexicon,
            store,
            options,
        }
    }

    pub fn map_phrases(&self, nlq: &str) -> crate::Result<(Vec<PhraseMatch>, Vec<CandidateSet>)> {
        let phrases = extract_phrases(nlq, self.lexicon)?;
        let sets = phrases
            .iter()
            .map(|p| retrieve_candidates(p, self.lexicon, self.kg))
            .collect::<crate::Result<Vec<_>>>()?;
        let features = connection_features(&sets, self.kg, self.options.max_hops)?;
        let sets = disambiguate(&sets, &features, self.options.weights, self.options.t_s, self.kg);
        Ok((phrases, sets))
    }

    pub fn run(&self, nlq: &str) -> Result<Answer, StageError> {
        let at = |stage| move |error| StageError { stage, error };

        let t0 = Instant::now();
        let (phrases, sets) = self.map_phrases(nlq).map_err(at(StageName::PhraseMapping))?;
        let phrase_mapping = t0.elapsed();

        let t1 = Instant::now();
        let (tables, solution) = CostTables::from_sets(&sets, self.store)
            .and_then(|t| solve_tables(&t).map(|s| (t, s)))
            .map_err(at(StageName::StructureComputing))?;
        let structure = t1.elapsed();

        let t2 = Instant::now();
        let reps = enumerate_representations(&sets, &solution.matrix, self.options.max_representations)
            .map_err(at(StageName::QueryGeneration))?;
        let ranked = best_representations(reps, self.store, self.options.retry_cap.max(1))
            .map_err(at(StageName::QueryGeneration))?;
        let query = ranked.first().and_then(|(r, _)| to_graph_query(r, &sets, self.kg).ok());
        let outcome = execute_with_fallback(&ranked, &sets, self.kg, self.options.retry_cap);
        let query_time = t2.elapsed();

        Ok(Answer {
            phrases,
            sets,
            tables,
            solution,
            ranked,
            query,
            outcome,
            timings: Timings {
                phrase_mapping,
                structure,
                query: query_time,
            },
        })
    }
}
