use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::lexicon::{tokenize_with_case, Lexicon};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, ObjectId, SubdivisionGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhraseKind {
    Entity,
    Relation,
}

impl PhraseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhraseKind::Entity => "entity",
            PhraseKind::Relation => "relation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhraseMatch {
    /// Question text of the phrase, original casing.
    pub text: String,
    /// Lowercased lexicon key.
    pub key: String,
    pub kind: PhraseKind,
    /// Token range `[start, end)`; empty for implied phrases.
    pub span: (usize, usize),
    pub wh: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub id: ObjectId,
    pub base_similarity: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub phrase: PhraseMatch,
    /// Descending by score.
    pub candidates: Vec<Candidate>,
    pub pruned: bool,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.candidates.iter().map(|c| c.id)
    }
}

/// Greedy left-to-right longest match of question tokens against lexicon
/// surface forms and wh-words.
pub fn extract_phrases(nlq: &str, lexicon: &Lexicon) -> Result<Vec<PhraseMatch>> {
    let tokens = tokenize_with_case(nlq);
    let lower: Vec<String> = tokens.iter().map(|(l, _)| l.clone()).collect();
    let mut out = Vec::new();
    let mut implied_done = vec![false; lexicon.implied_rules().len()];
    let mut i = 0;
    while i < lower.len() {
        for (r, rule) in lexicon.implied_rules().iter().enumerate() {
            if !implied_done[r] && lower[i..].starts_with(&rule.trigger) {
                implied_done[r] = true;
                out.push(PhraseMatch {
                    text: rule.wh_word.clone(),
                    key: rule.wh_word.clone(),
                    kind: PhraseKind::Entity,
                    span: (i, i),
                    wh: true,
                });
            }
        }
        let longest = (1..=lexicon.max_phrase_len().min(lower.len() - i)).rev().find_map(|len| {
            let window = &lower[i..i + len];
            if lexicon.is_wh(window) {
                Some((len, PhraseKind::Entity, true))
            } else {
                lexicon.lookup(window).map(|entries| {
                    let top = entries
                        .iter()
                        .max_by(|a, b| a.similarity.total_cmp(&b.similarity).then(Ordering::Greater))
                        .expect("lexicon entries are never empty");
                    let kind = match top.target {
                        ObjectId::Vertex(_) => PhraseKind::Entity,
                        ObjectId::Edge(_) => PhraseKind::Relation,
                    };
                    (len, kind, false)
                })
            }
        });
        match longest {
            Some((len, kind, wh)) => {
                out.push(PhraseMatch {
                    text: tokens[i..i + len].iter().map(|(_, t)| t.as_str()).collect::<Vec<_>>().join(" "),
                    key: lower[i..i + len].join(" "),
                    kind,
                    span: (i, i + len),
                    wh,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    if out.is_empty() {
        return Err(Error::Unmappable);
    }
    Ok(out)
}

/// Lexicon candidates of one phrase, restricted to its kind and sorted by
/// base similarity.
pub fn retrieve_candidates(phrase: &PhraseMatch, lexicon: &Lexicon, kg: &KnowledgeGraph) -> Result<CandidateSet> {
    let raw: Vec<(ObjectId, f64)> = if phrase.wh {
        lexicon
            .wh_classes(&phrase.key)
            .unwrap_or_default()
            .iter()
            .map(|&(v, s)| (v.into(), s))
            .collect()
    } else {
        let key: Vec<String> = phrase.key.split(' ').map(str::to_string).collect();
        lexicon
            .lookup(&key)
            .unwrap_or_default()
            .iter()
            .filter(|e| match phrase.kind {
                PhraseKind::Entity => matches!(e.target, ObjectId::Vertex(_)),
                PhraseKind::Relation => matches!(e.target, ObjectId::Edge(_)),
            })
            .map(|e| (e.target, e.similarity))
            .collect()
    };
    // One entry per object, keeping its best similarity.
    let mut best: HashMap<ObjectId, f64> = HashMap::new();
    for (id, s) in raw {
        kg.check(id)?;
        let e = best.entry(id).or_insert(s);
        *e = e.max(s);
    }
    if best.is_empty() {
        return Err(Error::NoCandidates {
            phrase: phrase.text.clone(),
            kind: phrase.kind.as_str(),
        });
    }
    let mut candidates: Vec<Candidate> = best
        .into_iter()
        .map(|(id, s)| Candidate {
            id,
            base_similarity: s,
            score: s,
        })
        .collect();
    sort_candidates(&mut candidates, kg);
    Ok(CandidateSet {
        phrase: phrase.clone(),
        candidates,
        pruned: false,
    })
}

/// Descending score, then descending base similarity, then label.
fn sort_candidates(c: &mut [Candidate], kg: &KnowledgeGraph) {
    c.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.base_similarity.total_cmp(&a.base_similarity))
            .then_with(|| kg.label(a.id).cmp(kg.label(b.id)))
    });
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Features {
    /// Candidates of other phrases within `max_hops`.
    pub connection_count: usize,
    /// Mean distance to those candidates; `max_hops + 1` when there are none.
    pub hop_count: f64,
}

/// Connection density of every candidate against the candidates of all
/// other phrases, indexed like `sets`.
pub fn connection_features(sets: &[CandidateSet], kg: &KnowledgeGraph, max_hops: u32) -> Result<Vec<Vec<Features>>> {
    let sub = SubdivisionGraph::new(kg);
    let mut out = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let mut feats = Vec::with_capacity(set.len());
        for c in &set.candidates {
            let dist = sub.distances_from(c.id, max_hops)?;
            let mut count = 0usize;
            let mut total = 0u64;
            for other in sets.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, s)| s.ids()) {
                if let Some(d) = dist.to(other) {
                    count += 1;
                    total += d as u64;
                }
            }
            feats.push(Features {
                connection_count: count,
                hop_count: if count == 0 {
                    (max_hops + 1) as f64
                } else {
                    total as f64 / count as f64
                },
            });
        }
        out.push(feats);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub sim: f64,
    pub conn: f64,
    pub hop: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            sim: 0.4,
            conn: 0.4,
            hop: 0.2,
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.sim, self.conn, self.hop)
    }
}

impl FromStr for Weights {
    type Err = Error;

    /// `sim,conn,hop`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidConfig(format!("weights `{s}` are not numbers")))?;
        match parts[..] {
            [sim, conn, hop] if parts.iter().all(|w| w.is_finite() && *w >= 0.0) && sim + conn + hop > 0.0 => {
                Ok(Self { sim, conn, hop })
            }
            _ => Err(Error::InvalidConfig(format!(
                "weights `{s}` must be three non-negative numbers, not all zero"
            ))),
        }
    }
}

/// Rescores every set with the linear feature model, normalizes scores so
/// the best candidate of each set scores 1, re-sorts and prunes with `t_s`.
pub fn disambiguate(
    sets: &[CandidateSet],
    features: &[Vec<Features>],
    weights: Weights,
    t_s: f64,
    kg: &KnowledgeGraph,
) -> Vec<CandidateSet> {
    sets.iter()
        .zip(features)
        .map(|(set, feats)| {
            let max_conn = feats.iter().map(|f| f.connection_count).max().unwrap_or(0);
            let raw: Vec<f64> = set
                .candidates
                .iter()
                .zip(feats)
                .map(|(c, f)| {
                    let conn = if max_conn == 0 {
                        0.0
                    } else {
                        f.connection_count as f64 / max_conn as f64
                    };
                    weights.sim * c.base_similarity + weights.conn * conn + weights.hop / (1.0 + f.hop_count)
                })
                .collect();
            let top = raw.iter().copied().fold(0.0, f64::max);
            let mut candidates: Vec<Candidate> = set
                .candidates
                .iter()
                .zip(&raw)
                .map(|(c, &r)| Candidate {
                    score: if top > 0.0 { r / top } else { 1.0 },
                    ..*c
                })
                .collect();
            sort_candidates(&mut candidates, kg);
            let mut out = CandidateSet {
                phrase: set.phrase.clone(),
                candidates,
                pruned: false,
            };
            prune(&mut out, t_s);
            out
        })
        .collect()
}

/// Drops candidates scoring below `top / t_s`. The set must be sorted.
pub fn prune(set: &mut CandidateSet, t_s: f64) {
    let Some(top) = set.candidates.first().map(|c| c.score) else {
        return;
    };
    let threshold = top / t_s;
    set.candidates.retain(|c| c.score >= threshold);
    set.pruned = true;
    assert!(!set.candidates.is_empty(), "pruning removed the top candidate");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KgOptions;

    fn kg() -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            [
                ("Batman", "director", "Tim_Burton"),
                ("Batman", "starring", "Michael_Keaton"),
                ("Batman", "type", "Film"),
                ("Michael_Keaton", "type", "Actor"),
                ("Tim_Burton", "type", "Person"),
                ("Tim_Burton_Productions", "type", "Company"),
                ("Berlin", "mayor", "Kai_Wegner"),
                ("Kai_Wegner", "type", "Person"),
                ("Person", "type", "Agent"),
                ("Company", "type", "Agent"),
            ],
            &KgOptions::default(),
        )
        .unwrap()
    }

    fn lexicon(kg: &KnowledgeGraph) -> Lexicon {
        let text = "\
actor\tvertex\tActor\t1
movies\tvertex\tFilm\t0.9
tim burton\tvertex\tTim_Burton\t1
tim burton\tvertex\tTim_Burton_Productions\t0.05
starred in\tedge\tstarring\t0.9
directed by\tedge\tdirector\t0.9
directed\tvertex\tFilm\t0.1
mayor of\tedge\tmayor\t1
mayor\tvertex\tPerson\t0.2
berlin\tvertex\tBerlin\t1
who\twh\tPerson\t1
who\twh\tAgent\t0.8
";
        Lexicon::from_reader(text.as_bytes(), kg).unwrap()
    }

    fn texts(p: &[PhraseMatch], kind: PhraseKind) -> Vec<&str> {
        p.iter().filter(|p| p.kind == kind).map(|p| p.text.as_str()).collect()
    }

    #[test]
    fn running_example_phrases() {
        let g = kg();
        let p = extract_phrases("which actor starred in the movies directed by Tim Burton", &lexicon(&g)).unwrap();
        assert_eq!(texts(&p, PhraseKind::Entity), ["actor", "movies", "Tim Burton"]);
        assert_eq!(texts(&p, PhraseKind::Relation), ["starred in", "directed by"]);
        assert!(p.windows(2).all(|w| w[0].span.1 <= w[1].span.0));
    }

    #[test]
    fn wh_word_is_an_entity_phrase() {
        let g = kg();
        let p = extract_phrases("Who is the mayor of Berlin?", &lexicon(&g)).unwrap();
        assert_eq!(texts(&p, PhraseKind::Entity), ["Who", "Berlin"]);
        assert_eq!(texts(&p, PhraseKind::Relation), ["mayor of"]);
        assert!(p[0].wh);
        let set = retrieve_candidates(&p[0], &lexicon(&g), &g).unwrap();
        let labels: Vec<&str> = set.ids().map(|id| g.label(id)).collect();
        assert_eq!(labels, ["Person", "Agent"]);
    }

    #[test]
    fn no_hits_is_unmappable() {
        let g = kg();
        assert!(matches!(extract_phrases("how tall is it", &lexicon(&g)), Err(Error::Unmappable)));
        assert!(matches!(extract_phrases("", &lexicon(&g)), Err(Error::Unmappable)));
    }

    #[test]
    fn implied_rule_inserts_wh_phrase() {
        let g = kg();
        let mut lex = lexicon(&g);
        lex.add_implied("mayor of", "who").unwrap();
        let p = extract_phrases("the mayor of Berlin", &lex).unwrap();
        assert_eq!(p[0].span, (1, 1));
        assert!(p[0].wh);
        assert_eq!(p[1].text, "mayor of");
    }

    #[test]
    fn kind_filter_empties_relation() {
        let g = kg();
        let lex = lexicon(&g);
        let phrase = PhraseMatch {
            text: "directed".into(),
            key: "directed".into(),
            kind: PhraseKind::Relation,
            span: (0, 1),
            wh: false,
        };
        assert!(matches!(retrieve_candidates(&phrase, &lex, &g), Err(Error::NoCandidates { .. })));
    }

    #[test]
    fn features_and_pruning() {
        let g = kg();
        let lex = lexicon(&g);
        let phrases = extract_phrases("which actor starred in the movies directed by Tim Burton", &lex).unwrap();
        let sets: Vec<CandidateSet> = phrases.iter().map(|p| retrieve_candidates(p, &lex, &g).unwrap()).collect();
        let feats = connection_features(&sets, &g, 4).unwrap();
        let tb = sets.iter().position(|s| s.phrase.key == "tim burton").unwrap();
        let (real, prod) = (feats[tb][0], feats[tb][1]);
        assert!(real.connection_count > prod.connection_count);
        assert_eq!(prod, Features { connection_count: 0, hop_count: 5.0 });
        let out = disambiguate(&sets, &feats, Weights::default(), 15.0, &g);
        assert_eq!(out[tb].len(), 1);
        assert_eq!(g.label(out[tb].candidates[0].id), "Tim_Burton");
        assert!(out.iter().all(|s| s.pruned && s.candidates[0].score == 1.0));
    }

    #[test]
    fn single_reachable_candidate() {
        let g = kg();
        let set = |id: ObjectId| CandidateSet {
            phrase: PhraseMatch {
                text: String::new(),
                key: String::new(),
                kind: PhraseKind::Entity,
                span: (0, 0),
                wh: false,
            },
            candidates: vec![Candidate { id, base_similarity: 1.0, score: 1.0 }],
            pruned: false,
        };
        let sets = [
            set(g.vertex("Batman").unwrap().into()),
            set(g.vertex("Tim_Burton").unwrap().into()),
        ];
        let f = connection_features(&sets, &g, 4).unwrap();
        assert_eq!(f[0][0], Features { connection_count: 1, hop_count: 2.0 });
    }

    #[test]
    fn threshold_arithmetic() {
        let g = kg();
        let ids: Vec<ObjectId> = g.vertices().take(4).map(Into::into).collect();
        let mut set = CandidateSet {
            phrase: PhraseMatch {
                text: String::new(),
                key: String::new(),
                kind: PhraseKind::Entity,
                span: (0, 0),
                wh: false,
            },
            candidates: [0.9, 0.07, 0.0601, 0.0599]
                .iter()
                .zip(&ids)
                .map(|(&s, &id)| Candidate { id, base_similarity: s, score: s })
                .collect(),
            pruned: false,
        };
        prune(&mut set, 15.0);
        assert_eq!(set.len(), 3);
    }

    #[test]
    fn equal_features_keep_similarity_order() {
        let g = kg();
        let lex = lexicon(&g);
        let phrase = extract_phrases("who", &lex).unwrap().remove(0);
        let sets = [retrieve_candidates(&phrase, &lex, &g).unwrap()];
        let flat = Features { connection_count: 2, hop_count: 3.0 };
        let out = disambiguate(&sets, &[vec![flat, flat]], Weights::default(), 15.0, &g);
        let labels: Vec<&str> = out[0].ids().map(|id| g.label(id)).collect();
        assert_eq!(labels, ["Person", "Agent"]);
        assert!(out[0].candidates[0].score > out[0].candidates[1].score);
    }

    #[test]
    fn weights_parse() {
        assert_eq!("0.4,0.4,0.2".parse::<Weights>().unwrap(), Weights::default());
        assert!("1,2".parse::<Weights>().is_err());
        assert!("0,0,0".parse::<Weights>().is_err());
        assert!("a,b,c".parse::<Weights>().is_err());
        assert!("1,-1,1".parse::<Weights>().is_err());
    }
}
