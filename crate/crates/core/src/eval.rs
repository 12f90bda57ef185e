//! Question-answering metrics and link-prediction ranking.

use std::collections::BTreeSet;
use std::io::Read;

use crate::embedding::{translate_unchecked, EmbeddingStore};
use crate::error::{Error, Result};
use crate::kg::{read_tsv_rows, EdgeId, KnowledgeGraph, VertexId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QaRecord {
    pub nlq: String,
    pub gold: BTreeSet<String>,
}

/// `nlq<TAB>gold1|gold2|...` rows.
pub fn read_qa<R: Read>(reader: R) -> Result<Vec<QaRecord>> {
    read_tsv_rows::<_, 2>(reader)?
        .into_iter()
        .map(|(line, [nlq, gold])| {
            let gold: BTreeSet<String> = gold
                .split('|')
                .map(str::trim)
                .filter(|g| !g.is_empty())
                .map(str::to_string)
                .collect();
            if gold.is_empty() {
                return Err(Error::parse(line, "no gold answers"));
            }
            Ok(QaRecord { nlq, gold })
        })
        .collect()
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn score_answers(gold: &BTreeSet<String>, returned: &BTreeSet<String>) -> Scores {
    let hit = gold.intersection(returned).count() as f64;
    let precision = if returned.is_empty() { 0.0 } else { hit / returned.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { hit / gold.len() as f64 };
    Scores {
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionResult {
    pub nlq: String,
    /// Whether the pipeline produced a query for the question.
    pub processed: bool,
    pub scores: Scores,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub processed: usize,
    pub total: usize,
    /// Macro averages over processed questions.
    pub precision: f64,
    pub recall: f64,
    /// F-1 of the averages, scaled by the processed fraction.
    pub f1: f64,
}

pub fn aggregate(results: &[QuestionResult]) -> Aggregate {
    let processed: Vec<&QuestionResult> = results.iter().filter(|r| r.processed).collect();
    let total = results.len();
    let np = processed.len();
    if np == 0 {
        return Aggregate {
            processed: 0,
            total,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let precision = processed.iter().map(|r| r.scores.precision).sum::<f64>() / np as f64;
    let recall = processed.iter().map(|r| r.scores.recall).sum::<f64>() / np as f64;
    Aggregate {
        processed: np,
        total,
        precision,
        recall,
        f1: f1(precision, recall) * np as f64 / total as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkPrediction {
    pub mean_rank: f64,
    pub hits_at_10: f64,
    /// Head and tail rankings performed, two per test triple.
    pub rankings: usize,
    pub skipped: usize,
}

/// Raw-setting ranks of the true head and tail among all vertices.
/// A vertex outranks the truth only with a strictly lower cost.
pub fn link_prediction(store: &EmbeddingStore, test: &[(VertexId, EdgeId, VertexId)], skipped: usize) -> LinkPrediction {
    let nv = store.vertex_count();
    let mut rank_sum = 0u64;
    let mut hits = 0usize;
    let mut rankings = 0usize;
    for &(h, e, t) in test {
        let (hv, ev, tv) = (store.vertex(h), store.edge(e), store.vertex(t));
        let truth = translate_unchecked(hv, ev, tv);
        let mut tail_rank = 1;
        let mut head_rank = 1;
        for v in (0..nv).map(|i| VertexId(i as u32)) {
            if translate_unchecked(hv, ev, store.vertex(v)) < truth {
                tail_rank += 1;
            }
            if translate_unchecked(store.vertex(v), ev, tv) < truth {
                head_rank += 1;
            }
        }
        for r in [head_rank, tail_rank] {
            rank_sum += r as u64;
            hits += (r <= 10) as usize;
            rankings += 1;
        }
    }
    LinkPrediction {
        mean_rank: if rankings == 0 { 0.0 } else { rank_sum as f64 / rankings as f64 },
        hits_at_10: if rankings == 0 { 0.0 } else { hits as f64 / rankings as f64 },
        rankings,
        skipped,
    }
}

/// Resolves labelled test triples against `kg`, counting those that name
/// unknown vertices or edges.
pub fn resolve_triples(kg: &KnowledgeGraph, rows: &[[String; 3]]) -> (Vec<(VertexId, EdgeId, VertexId)>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for [h, e, t] in rows {
        match (kg.vertex(h), kg.edge(e), kg.vertex(t)) {
            (Some(h), Some(e), Some(t)) => out.push((h, e, t)),
            _ => skipped += 1,
        }
    }
    (out, skipped)
}
