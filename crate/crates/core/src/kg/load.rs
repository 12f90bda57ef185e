use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::KnowledgeGraph;
use crate::error::{Error, Result};

pub const DEFAULT_TYPE_LABEL: &str = "type";
pub const DEFAULT_THING_LABEL: &str = "Thing";

#[derive(Clone, Debug)]
pub struct KgOptions {
    /// Edge label whose triples declare vertex classes.
    pub type_label: String,
    /// Universal base class assigned to entities without a declared class.
    pub thing_label: String,
}

impl Default for KgOptions {
    fn default() -> Self {
        Self {
            type_label: DEFAULT_TYPE_LABEL.to_string(),
            thing_label: DEFAULT_THING_LABEL.to_string(),
        }
    }
}

impl KgOptions {
    pub fn with_type_label(type_label: impl Into<String>) -> Self {
        Self {
            type_label: type_label.into(),
            ..Self::default()
        }
    }
}

/// Loads a `head<TAB>edge<TAB>tail` file. Blank lines and lines starting with
/// `#` are skipped.
pub fn load_kg(path: impl AsRef<Path>, type_edge_label: &str) -> Result<KnowledgeGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    KnowledgeGraph::from_reader(file, &KgOptions::with_type_label(type_edge_label))
        .map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
}

impl KnowledgeGraph {
    pub fn from_reader<R: Read>(reader: R, options: &KgOptions) -> Result<Self> {
        let rows = read_triple_rows(reader)?;
        Self::from_triples(
            rows.iter()
                .map(|(_, r)| (r[0].as_str(), r[1].as_str(), r[2].as_str())),
            options,
        )
    }

    pub fn load(path: impl AsRef<Path>, options: &KgOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, options)
    }
}

/// Reads three-column TSV rows, returning each row with its 1-based line
/// number.
pub fn read_triple_rows<R: Read>(reader: R) -> Result<Vec<(usize, [String; 3])>> {
    read_tsv_rows(reader)
}

/// Non-blank, non-comment lines of exactly `N` non-empty tab-separated
/// fields, with their 1-based line numbers.
pub fn read_tsv_rows<R: Read, const N: usize>(reader: R) -> Result<Vec<(usize, [String; N])>> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != N {
            return Err(Error::parse(
                lineno,
                format!("expected {N} tab-separated fields, found {}", fields.len()),
            ));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(lineno, "empty field"));
        }
        rows.push((lineno, std::array::from_fn(|k| fields[k].to_string())));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::VertexKind;

    fn parse(text: &str) -> Result<KnowledgeGraph> {
        KnowledgeGraph::from_reader(text.as_bytes(), &KgOptions::default())
    }

    #[test]
    fn running_example_loads() {
        let g = parse(
            "Batman\tdirector\tTim_Burton\n\
             Batman\tstarring\tMichael_Keaton\n\
             Batman\ttype\tFilm\n\
             Michael_Keaton\ttype\tActor\n\
             Tim_Burton\ttype\tPerson\n",
        )
        .unwrap();
        assert_eq!(g.triples().len(), 5);
        assert_eq!(g.kind(g.vertex("Film").unwrap()), VertexKind::Class);
        assert_eq!(g.kind(g.vertex("Batman").unwrap()), VertexKind::Entity);
    }

    #[test]
    fn arity_violation_reports_line() {
        let err = parse("# header\na\tb\tc\na\tb\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyGraph)));
        assert!(matches!(parse("# only a comment\n\n"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn crlf_and_comments() {
        let g = parse("# c\r\na\tr\tb\r\n").unwrap();
        assert_eq!(g.triples().len(), 1);
        assert!(g.vertex("b").is_some());
    }

    #[test]
    fn custom_type_label() {
        let g = KnowledgeGraph::from_reader(
            "a\tisA\tC\n".as_bytes(),
            &KgOptions::with_type_label("isA"),
        )
        .unwrap();
        assert!(g.is_class(g.vertex("C").unwrap()));
    }
}
