//! On-disk GL-KG cache.
//!
//! ```text
//! gl-kg <count>
//! O <V|E> <owner> <denominator> <triples>
//! G <H|T|E> <head> <edge> <tail> <support>
//! ```
//!
//! Fields are tab-separated; one `O` line per object in id order, followed
//! by its `G` lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{Anchor, GeneralizedLocalKg, GeneralizedTriple, KnowledgeGraph, ObjectId};

pub fn write_cache<W: Write>(w: &mut W, kg: &KnowledgeGraph, gl_kgs: &[GeneralizedLocalKg]) -> std::io::Result<()> {
    writeln!(w, "gl-kg\t{}", gl_kgs.len())?;
    for g in gl_kgs {
        let sort = match g.owner {
            ObjectId::Vertex(_) => "V",
            ObjectId::Edge(_) => "E",
        };
        writeln!(w, "O\t{sort}\t{}\t{}\t{}", kg.label(g.owner), g.denominator, g.triples.len())?;
        for t in &g.triples {
            writeln!(
                w,
                "G\t{}\t{}\t{}\t{}\t{}",
                t.anchor.as_str(),
                kg.vertex_label(t.head),
                kg.edge_label(t.edge),
                kg.vertex_label(t.tail),
                t.support
            )?;
        }
    }
    Ok(())
}

pub fn save_cache(path: impl AsRef<Path>, kg: &KnowledgeGraph, gl_kgs: &[GeneralizedLocalKg]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_cache(&mut w, kg, gl_kgs)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_cache(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<Vec<GeneralizedLocalKg>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cache(f, kg)
}

pub fn read_cache<R: Read>(reader: R, kg: &KnowledgeGraph) -> Result<Vec<GeneralizedLocalKg>> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut next = || -> Result<Option<(usize, Vec<String>)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, l)) => {
                let l = l.map_err(|e| Error::io("<cache>", e))?;
                Ok(Some((i + 1, l.split('\t').map(str::to_string).collect())))
            }
        }
    };
    let count: usize = match next()? {
        Some((_, f)) if f.len() == 2 && f[0] == "gl-kg" => {
            f[1].parse().map_err(|_| Error::parse(1, "bad object count"))?
        }
        _ => return Err(Error::parse(1, "missing `gl-kg` header")),
    };
    let vertex = |line, l: &str| kg.vertex(l).ok_or_else(|| Error::parse(line, format!("unknown vertex `{l}`")));
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, f) = next()?.ok_or_else(|| Error::parse(0, "truncated cache"))?;
        if f.len() != 5 || f[0] != "O" {
            return Err(Error::parse(line, "expected an `O` line"));
        }
        let owner: ObjectId = match f[1].as_str() {
            "V" => vertex(line, &f[2])?.into(),
            "E" => kg
                .edge(&f[2])
                .ok_or_else(|| Error::parse(line, format!("unknown edge `{}`", f[2])))?
                .into(),
            s => return Err(Error::parse(line, format!("unknown object sort `{s}`"))),
        };
        let denominator: u32 = f[3].parse().map_err(|_| Error::parse(line, "bad denominator"))?;
        let n: usize = f[4].parse().map_err(|_| Error::parse(line, "bad triple count"))?;
        let mut triples = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, f) = next()?.ok_or_else(|| Error::parse(0, "truncated cache"))?;
            if f.len() != 6 || f[0] != "G" {
                return Err(Error::parse(line, "expected a `G` line"));
            }
            triples.push(GeneralizedTriple {
                anchor: Anchor::parse(&f[1]).ok_or_else(|| Error::parse(line, "bad anchor"))?,
                head: vertex(line, &f[2])?,
                edge: kg
                    .edge(&f[3])
                    .ok_or_else(|| Error::parse(line, format!("unknown edge `{}`", f[3])))?,
                tail: vertex(line, &f[4])?,
                support: f[5].parse().map_err(|_| Error::parse(line, "bad support"))?,
            });
        }
        out.push(GeneralizedLocalKg {
            owner,
            triples,
            denominator,
        });
    }
    if let Some((line, _)) = next()? {
        return Err(Error::parse(line, "trailing data after last object"));
    }
    Ok(out)
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
            ],
            &KgOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let g = kg();
        let all = g.generalize_all();
        let mut buf = Vec::new();
        write_cache(&mut buf, &g, &all).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("O\tV\tTim_Burton\t1\t1\nG\tT\tFilm\tdirector\tTim_Burton\t1\n"));
        assert_eq!(read_cache(&buf[..], &g).unwrap(), all);
    }

    #[test]
    fn corrupt_inputs() {
        let g = kg();
        let mut buf = Vec::new();
        write_cache(&mut buf, &g, &g.generalize_all()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(read_cache(truncated.as_bytes(), &g).is_err());
        assert!(read_cache(format!("{text}extra\n").as_bytes(), &g).is_err());
        assert!(read_cache("nope\n".as_bytes(), &g).is_err());
        assert!(read_cache(text.replace("Tim_Burton", "Nobody").as_bytes(), &g).is_err());
    }
}
