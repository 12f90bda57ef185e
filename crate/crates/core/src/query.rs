//! Candidate query representations over a solved structure, their ranking,
//! conversion into typed graph queries, and execution with fallback.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::embedding::{translate_score, EmbeddingStore};
use crate::error::{Error, Result};
use crate::kg::{match_patterns, EdgeId, KnowledgeGraph, ObjectId, Term, Triple, TriplePattern, Value, VertexId};
use crate::phrase::{CandidateSet, PhraseKind};
use crate::structure::StructureMatrix;

pub const DEFAULT_MAX_REPRESENTATIONS: u128 = 1_000_000;
pub const DEFAULT_RETRY_CAP: usize = 5;

/// One candidate chosen per set, laid out by a structure matrix.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryRepresentation {
    /// Chosen vertex per vertex set, in set order.
    pub vertices: Vec<VertexId>,
    /// Chosen edge per edge set, in label order.
    pub edges: Vec<EdgeId>,
    /// Cell `(i, j)` of each edge set.
    pub placement: Vec<(usize, usize)>,
}

impl QueryRepresentation {
    pub fn triples(&self) -> Vec<Triple> {
        self.edges
            .iter()
            .zip(&self.placement)
            .map(|(&edge, &(i, j))| Triple {
                head: self.vertices[i],
                edge,
                tail: self.vertices[j],
            })
            .collect()
    }
}

/// Entity-phrase sets and relation-phrase sets, each in question order.
pub fn split_sets(sets: &[CandidateSet]) -> (Vec<&CandidateSet>, Vec<&CandidateSet>) {
    sets.iter().partition(|s| s.phrase.kind == PhraseKind::Entity)
}

/// Lazy cartesian product over per-set choices. The last edge set varies
/// fastest, so earlier items prefer higher-ranked candidates.
#[derive(Clone, Debug)]
pub struct Representations {
    vertex_choices: Vec<Vec<VertexId>>,
    edge_choices: Vec<Vec<EdgeId>>,
    placement: Vec<(usize, usize)>,
    odometer: Vec<usize>,
    count: u128,
    done: bool,
}

impl Representations {
    pub fn total(&self) -> u128 {
        self.count
    }
}

impl Iterator for Representations {
    type Item = QueryRepresentation;

    fn next(&mut self) -> Option<QueryRepresentation> {
        if self.done {
            return None;
        }
        let nv = self.vertex_choices.len();
        let item = QueryRepresentation {
            vertices: (0..nv).map(|i| self.vertex_choices[i][self.odometer[i]]).collect(),
            edges: (0..self.edge_choices.len())
                .map(|k| self.edge_choices[k][self.odometer[nv + k]])
                .collect(),
            placement: self.placement.clone(),
        };
        let sizes = self
            .vertex_choices
            .iter()
            .map(Vec::len)
            .chain(self.edge_choices.iter().map(Vec::len));
        let sizes: Vec<usize> = sizes.collect();
        self.done = true;
        for p in (0..self.odometer.len()).rev() {
            self.odometer[p] += 1;
            if self.odometer[p] < sizes[p] {
                self.done = false;
                break;
            }
            self.odometer[p] = 0;
        }
        Some(item)
    }
}

/// All representations of `sets` under `matrix`; errors when their number
/// exceeds `cap`.
pub fn enumerate_representations(
    sets: &[CandidateSet],
    matrix: &StructureMatrix,
    cap: u128,
) -> Result<Representations> {
    let (vs, es) = split_sets(sets);
    if vs.len() != matrix.n() || es.len() != matrix.m() {
        return Err(Error::InvalidQuery(format!(
            "matrix is {}x{} with {} edge sets, but there are {} vertex sets and {} edge sets",
            matrix.n(),
            matrix.n(),
            matrix.m(),
            vs.len(),
            es.len()
        )));
    }
    if !matrix.is_valid() {
        return Err(Error::NoValidStructure);
    }
    let vertex_choices: Vec<Vec<VertexId>> = vs
        .iter()
        .map(|s| {
            s.ids()
                .map(|id| match id {
                    ObjectId::Vertex(v) => Ok(v),
                    ObjectId::Edge(_) => Err(Error::InvalidQuery("edge candidate in an entity set".into())),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let edge_choices: Vec<Vec<EdgeId>> = es
        .iter()
        .map(|s| {
            s.ids()
                .map(|id| match id {
                    ObjectId::Edge(e) => Ok(e),
                    ObjectId::Vertex(_) => Err(Error::InvalidQuery("vertex candidate in a relation set".into())),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let count = vertex_choices
        .iter()
        .map(Vec::len)
        .chain(edge_choices.iter().map(Vec::len))
        .fold(1u128, |acc, l| acc.saturating_mul(l as u128));
    if count > cap {
        return Err(Error::TooManyRepresentations { count, cap });
    }
    let placement = matrix.placements().into_iter().map(|(_, i, j)| (i, j)).collect();
    Ok(Representations {
        odometer: vec![0; vertex_choices.len() + edge_choices.len()],
        done: count == 0,
        vertex_choices,
        edge_choices,
        placement,
        count,
    })
}

/// Sum of translation residuals of the representation's triples.
pub fn score_representation(q: &QueryRepresentation, store: &EmbeddingStore) -> Result<f64> {
    let get = |id: ObjectId| store.get(id).ok_or_else(|| Error::MissingEmbedding(format!("{id:?}")));
    q.triples()
        .iter()
        .map(|t| translate_score(get(t.head.into())?, get(t.edge.into())?, get(t.tail.into())?))
        .sum()
}

/// The `k` lowest-scoring representations, ascending; equal scores keep
/// enumeration order.
pub fn best_representations(
    reps: impl Iterator<Item = QueryRepresentation>,
    store: &EmbeddingStore,
    k: usize,
) -> Result<Vec<(QueryRepresentation, f64)>> {
    let mut best: Vec<(QueryRepresentation, f64)> = Vec::with_capacity(k + 1);
    for q in reps {
        let s = score_representation(&q, store)?;
        let pos = best.partition_point(|(_, b)| *b <= s);
        if pos < k {
            best.insert(pos, (q, s));
            best.truncate(k);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphQuery {
    /// Sorted.
    pub patterns: Vec<TriplePattern>,
    /// `(variable, class)` pairs, sorted.
    pub type_constraints: Vec<(String, VertexId)>,
    pub answer_variable: String,
}

impl GraphQuery {
    pub fn new(
        mut patterns: Vec<TriplePattern>,
        mut type_constraints: Vec<(String, VertexId)>,
        answer_variable: impl Into<String>,
    ) -> Self {
        patterns.sort();
        patterns.dedup();
        type_constraints.sort();
        type_constraints.dedup();
        Self {
            patterns,
            type_constraints,
            answer_variable: answer_variable.into(),
        }
    }

    /// The same query without type constraints.
    pub fn relaxed(&self) -> Self {
        Self {
            type_constraints: Vec::new(),
            ..self.clone()
        }
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.patterns.iter().flat_map(|p| p.variables()).collect()
    }
}

fn variable_name(phrase: &str, taken: &BTreeSet<String>) -> String {
    let mut base: String = phrase
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    if base.is_empty() || base.starts_with(|c: char| c.is_ascii_digit()) {
        base.insert(0, 'x');
    }
    let mut name = base.clone();
    let mut n = 2;
    while taken.contains(&name) {
        name = format!("{base}{n}");
        n += 1;
    }
    name
}

/// Class vertices become variables named after their phrase, constrained
/// to the class; entity vertices stay constant.
pub fn to_graph_query(q: &QueryRepresentation, sets: &[CandidateSet], kg: &KnowledgeGraph) -> Result<GraphQuery> {
    let (vs, _) = split_sets(sets);
    if vs.len() != q.vertices.len() {
        return Err(Error::InvalidQuery("representation does not match the vertex sets".into()));
    }
    let mut taken = BTreeSet::new();
    let mut terms = Vec::with_capacity(vs.len());
    let mut constraints = Vec::new();
    let mut answer = None;
    let mut first = None;
    for (set, &v) in vs.iter().zip(&q.vertices) {
        kg.check(v.into())?;
        if kg.is_class(v) {
            let name = variable_name(&set.phrase.text, &taken);
            taken.insert(name.clone());
            constraints.push((name.clone(), v));
            if set.phrase.wh && answer.is_none() {
                answer = Some(name.clone());
            }
            first.get_or_insert_with(|| name.clone());
            terms.push(Term::Var(name));
        } else {
            terms.push(Term::Const(v));
        }
    }
    let answer = answer.or(first).ok_or(Error::FullyGrounded)?;
    let patterns = q
        .edges
        .iter()
        .zip(&q.placement)
        .map(|(&e, &(i, j))| TriplePattern::new(terms[i].clone(), Term::Const(e), terms[j].clone()))
        .collect();
    Ok(GraphQuery::new(patterns, constraints, answer))
}

fn term_text<T: Copy>(t: &Term<T>, label: impl Fn(T) -> String) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Const(c) => label(*c),
    }
}

/// One `head edge tail` line per pattern: relation patterns first, then
/// type constraints, each block sorted.
pub fn serialize_query(gq: &GraphQuery, kg: &KnowledgeGraph) -> String {
    let mut main: Vec<String> = gq
        .patterns
        .iter()
        .map(|p| {
            format!(
                "{} {} {}",
                term_text(&p.head, |v| kg.vertex_label(v).to_string()),
                term_text(&p.edge, |e| kg.edge_label(e).to_string()),
                term_text(&p.tail, |v| kg.vertex_label(v).to_string()),
            )
        })
        .collect();
    let mut types: Vec<String> = gq
        .type_constraints
        .iter()
        .map(|(var, c)| format!("?{var} {} {}", kg.edge_label(kg.type_edge()), kg.vertex_label(*c)))
        .collect();
    main.sort();
    types.sort();
    let mut out = String::new();
    for line in main.iter().chain(&types) {
        let _ = writeln!(out, "{line}");
    }
    out
}

/// Inverse of [`serialize_query`]. A `?x type C` line with a constant class
/// is read as a type constraint.
pub fn parse_query(text: &str, answer_variable: &str, kg: &KnowledgeGraph) -> Result<GraphQuery> {
    let mut patterns = Vec::new();
    let mut constraints = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [h, e, t] = parts[..] else {
            return Err(Error::InvalidQuery(format!("`{line}` is not `head edge tail`")));
        };
        let vertex = |s: &str| -> Result<Term<VertexId>> {
            match s.strip_prefix('?') {
                Some(v) => Ok(Term::var(v)),
                None => kg.vertex(s).map(Term::Const).ok_or_else(|| Error::UnknownLabel(s.into())),
            }
        };
        let edge = match e.strip_prefix('?') {
            Some(v) => Term::var(v),
            None => Term::Const(kg.edge(e).ok_or_else(|| Error::UnknownLabel(e.into()))?),
        };
        let (head, tail) = (vertex(h)?, vertex(t)?);
        match (&head, edge.as_const(), tail.as_const()) {
            (Term::Var(v), Some(e), Some(c)) if e == kg.type_edge() => constraints.push((v.clone(), c)),
            _ => patterns.push(TriplePattern::new(head, edge, tail)),
        }
    }
    Ok(GraphQuery::new(patterns, constraints, answer_variable))
}

/// Distinct values of the answer variable. Constraints on the universal
/// class hold for every vertex and are skipped.
pub fn execute(gq: &GraphQuery, kg: &KnowledgeGraph) -> Result<Vec<Value>> {
    let mut patterns = gq.patterns.clone();
    for (var, class) in &gq.type_constraints {
        if *class != kg.thing() {
            patterns.push(TriplePattern::new(Term::var(var.as_str()), Term::Const(kg.type_edge()), Term::Const(*class)));
        }
    }
    if !gq.variables().contains(gq.answer_variable.as_str()) {
        return Err(Error::InvalidQuery(format!(
            "answer variable ?{} does not occur in a pattern",
            gq.answer_variable
        )));
    }
    let answers: BTreeSet<Value> = match_patterns(kg, &patterns)?
        .into_iter()
        .filter_map(|b| b.get(&gq.answer_variable).copied())
        .collect();
    Ok(answers.into_iter().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Exact,
    Relaxed,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Exact => "exact",
            Stage::Relaxed => "relaxed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attempt {
    /// Position of the representation in the ranking.
    pub rank: usize,
    pub score: f64,
    pub query: Option<GraphQuery>,
    pub exact: usize,
    /// `None` when there was nothing to relax.
    pub relaxed: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub answers: Vec<Value>,
    /// Query that produced the answers, relaxed if that stage succeeded.
    pub query: Option<GraphQuery>,
    pub stage: Option<(usize, Stage)>,
    pub trail: Vec<Attempt>,
}

/// Runs the ranked representations in order, at most `retry_cap` of them:
/// first the exact query, then the query without type constraints. Stops at
/// the first non-empty answer set.
pub fn execute_with_fallback(
    ranked: &[(QueryRepresentation, f64)],
    sets: &[CandidateSet],
    kg: &KnowledgeGraph,
    retry_cap: usize,
) -> Outcome {
    let mut trail = Vec::new();
    for (rank, (rep, score)) in ranked.iter().take(retry_cap).enumerate() {
        let mut attempt = Attempt {
            rank,
            score: *score,
            query: None,
            exact: 0,
            relaxed: None,
            error: None,
        };
        let gq = match to_graph_query(rep, sets, kg) {
            Ok(gq) => gq,
            Err(e) => {
                attempt.error = Some(e.to_string());
                trail.push(attempt);
                continue;
            }
        };
        attempt.query = Some(gq.clone());
        let mut found = None;
        match execute(&gq, kg) {
            Ok(a) if !a.is_empty() => {
                attempt.exact = a.len();
                found = Some((a, gq, Stage::Exact));
            }
            Ok(_) if !gq.type_constraints.is_empty() => {
                let relaxed = gq.relaxed();
                match execute(&relaxed, kg) {
                    Ok(a) => {
                        attempt.relaxed = Some(a.len());
                        if !a.is_empty() {
                            found = Some((a, relaxed, Stage::Relaxed));
                        }
                    }
                    Err(e) => attempt.error = Some(e.to_string()),
                }
            }
            Ok(_) => {}
            Err(e) => attempt.error = Some(e.to_string()),
        }
        trail.push(attempt);
        if let Some((answers, query, stage)) = found {
            return Outcome {
                answers,
                query: Some(query),
                stage: Some((rank, stage)),
                trail,
            };
        }
    }
    Outcome {
        answers: Vec::new(),
        query: None,
        stage: None,
        trail,
    }
}
