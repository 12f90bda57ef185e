use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{read_tsv_rows, KnowledgeGraph, ObjectId, VertexId, VertexKind};

/// One lexicon hit: a graph object and how closely its label matches the
/// surface form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LexEntry {
    pub target: ObjectId,
    pub similarity: f64,
}

/// A surface pattern that implies an unstated entity, inserted as a
/// zero-width wh-phrase where the pattern starts.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpliedRule {
    pub trigger: Vec<String>,
    pub wh_word: String,
}

/// Surface forms mapped to candidate vertices and edges, plus the classes
/// each wh-word stands for.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<Vec<String>, Vec<LexEntry>>,
    wh: BTreeMap<String, Vec<(VertexId, f64)>>,
    implied: Vec<ImpliedRule>,
    max_len: usize,
}

/// Lowercased word tokens; punctuation other than `_`, `-` and `'` splits.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_case(text).into_iter().map(|(lower, _)| lower).collect()
}

pub(crate) fn tokenize_with_case(text: &str) -> Vec<(String, String)> {
    text.split(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '\'')))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '-'))
        .filter(|t| !t.is_empty())
        .map(|t| (t.to_lowercase(), t.to_string()))
        .collect()
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f), kg)
    }

    /// Parses `surface<TAB>kind<TAB>label<TAB>similarity` rows, kind one of
    /// `vertex`, `edge`, `wh` or `implied`.
    pub fn from_reader<R: Read>(reader: R, kg: &KnowledgeGraph) -> Result<Self> {
        let mut lex = Self::new();
        for (line, [surface, kind, label, sim]) in read_tsv_rows::<_, 4>(reader)? {
            let similarity: f64 = sim
                .parse()
                .map_err(|_| Error::parse(line, format!("similarity `{sim}` is not a number")))?;
            let vertex = |l: &str| kg.vertex(l).ok_or_else(|| Error::parse(line, format!("unknown vertex `{l}`")));
            match kind.as_str() {
                "vertex" => lex.add(&surface, vertex(&label)?.into(), similarity),
                "edge" => {
                    let e = kg
                        .edge(&label)
                        .ok_or_else(|| Error::parse(line, format!("unknown edge `{label}`")))?;
                    lex.add(&surface, e.into(), similarity)
                }
                "wh" => {
                    let v = vertex(&label)?;
                    if kg.kind(v) != VertexKind::Class {
                        return Err(Error::parse(line, format!("wh target `{label}` is not a class")));
                    }
                    lex.add_wh(&surface, v, similarity)
                }
                "implied" => lex.add_implied(&surface, &label),
                other => return Err(Error::parse(line, format!("unknown lexicon kind `{other}`"))),
            }
            .map_err(|e| match e {
                Error::InvalidConfig(m) => Error::parse(line, m),
                e => e,
            })?;
        }
        Ok(lex)
    }

    fn key(surface: &str) -> Result<Vec<String>> {
        let key = tokenize(surface);
        if key.is_empty() {
            return Err(Error::InvalidConfig(format!("surface form `{surface}` has no tokens")));
        }
        Ok(key)
    }

    fn check_similarity(similarity: f64) -> Result<()> {
        if similarity > 0.0 && similarity <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("similarity {similarity} outside (0, 1]")))
        }
    }

    pub fn add(&mut self, surface: &str, target: ObjectId, similarity: f64) -> Result<()> {
        Self::check_similarity(similarity)?;
        let key = Self::key(surface)?;
        self.max_len = self.max_len.max(key.len());
        self.entries.entry(key).or_default().push(LexEntry { target, similarity });
        Ok(())
    }

    /// The caller guarantees `class` is a class vertex.
    pub fn add_wh(&mut self, word: &str, class: VertexId, similarity: f64) -> Result<()> {
        Self::check_similarity(similarity)?;
        let key = Self::key(word)?;
        self.max_len = self.max_len.max(key.len());
        self.wh.entry(key.join(" ")).or_default().push((class, similarity));
        Ok(())
    }

    pub fn add_implied(&mut self, trigger: &str, wh_word: &str) -> Result<()> {
        let wh_word = Self::key(wh_word)?.join(" ");
        if !self.wh.contains_key(&wh_word) {
            return Err(Error::InvalidConfig(format!(
                "implied rule names `{wh_word}`, which is not a wh-word"
            )));
        }
        self.implied.push(ImpliedRule {
            trigger: Self::key(trigger)?,
            wh_word,
        });
        Ok(())
    }

    pub fn lookup(&self, tokens: &[String]) -> Option<&[LexEntry]> {
        self.entries.get(tokens).map(Vec::as_slice)
    }

    pub fn wh_classes(&self, word: &str) -> Option<&[(VertexId, f64)]> {
        self.wh.get(word).map(Vec::as_slice)
    }

    pub fn is_wh(&self, tokens: &[String]) -> bool {
        self.wh.contains_key(&tokens.join(" "))
    }

    pub fn implied_rules(&self) -> &[ImpliedRule] {
        &self.implied
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KgOptions;

    fn kg() -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            [
                ("Batman", "director", "Tim_Burton"),
                ("Tim_Burton", "type", "Person"),
                ("Person", "type", "Agent"),
            ],
            &KgOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("Who is the mayor of Berlin?"), ["who", "is", "the", "mayor", "of", "berlin"]);
        assert_eq!(tokenize("  Tim   Burton's, films "), ["tim", "burton's", "films"]);
        assert!(tokenize("?!").is_empty());
    }

    #[test]
    fn parses_all_kinds() {
        let g = kg();
        let text = "# comment\nTim Burton\tvertex\tTim_Burton\t1.0\ndirected by\tedge\tdirector\t0.9\nwho\twh\tPerson\t1\nwho\twh\tAgent\t0.5\nborn in\timplied\twho\t1\n";
        let lex = Lexicon::from_reader(text.as_bytes(), &g).unwrap();
        let hits = lex.lookup(&tokenize("tim burton")).unwrap();
        assert_eq!(hits[0].target, g.vertex("Tim_Burton").unwrap().into());
        assert_eq!(lex.lookup(&tokenize("Directed By")).unwrap()[0].target, g.edge("director").unwrap().into());
        assert_eq!(lex.wh_classes("who").unwrap().len(), 2);
        assert_eq!(lex.implied_rules()[0].trigger, ["born", "in"]);
        assert_eq!(lex.max_phrase_len(), 2);
    }

    #[test]
    fn rejects_bad_rows() {
        let g = kg();
        for (text, line) in [
            ("x\tvertex\tNobody\t1\n", 1),
            ("x\tedge\tTim_Burton\t1\n", 1),
            ("ok\tvertex\tBatman\t1\nwho\twh\tBatman\t1\n", 2),
            ("x\tvertex\tBatman\t0\n", 1),
            ("x\tvertex\tBatman\t1.5\n", 1),
            ("x\tvertex\tBatman\tabc\n", 1),
            ("x\tnoun\tBatman\t1\n", 1),
            ("x\timplied\twhat\t1\n", 1),
            ("x\tvertex\tBatman\n", 1),
        ] {
            match Lexicon::from_reader(text.as_bytes(), &g) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
