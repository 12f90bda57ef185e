use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{EdgeId, KnowledgeGraph, ObjectId, VertexId};

/// Read access to embedding vectors, shared by the store and by the
/// trainer's scratch buffers.
pub trait VectorLookup {
    fn dim(&self) -> usize;
    fn vector(&self, id: ObjectId) -> &[f64];
}

/// Dense vectors for every vertex and edge, indexed by id. Labels are kept
/// so the store can be written out and re-aligned to a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vertex_labels: Vec<String>,
    edge_labels: Vec<String>,
    vertex_vecs: Vec<f64>,
    edge_vecs: Vec<f64>,
}

impl VectorLookup for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, id: ObjectId) -> &[f64] {
        match id {
            ObjectId::Vertex(v) => self.vertex(v),
            ObjectId::Edge(e) => self.edge(e),
        }
    }
}

impl EmbeddingStore {
    /// Zero vectors for every object of `kg`.
    pub fn zeros(kg: &KnowledgeGraph, dim: usize) -> Self {
        Self {
            dim,
            vertex_labels: kg.vertices().map(|v| kg.vertex_label(v).to_string()).collect(),
            edge_labels: kg.edges().map(|e| kg.edge_label(e).to_string()).collect(),
            vertex_vecs: vec![0.0; dim * kg.vertex_count()],
            edge_vecs: vec![0.0; dim * kg.edge_count()],
        }
    }

    pub fn from_parts(
        dim: usize,
        vertex_labels: Vec<String>,
        vertex_vecs: Vec<f64>,
        edge_labels: Vec<String>,
        edge_vecs: Vec<f64>,
    ) -> Result<Self> {
        if vertex_vecs.len() != dim * vertex_labels.len() || edge_vecs.len() != dim * edge_labels.len() {
            return Err(Error::EmbeddingFormat("vector buffer does not match label count".into()));
        }
        Ok(Self {
            dim,
            vertex_labels,
            edge_labels,
            vertex_vecs,
            edge_vecs,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_labels.len()
    }

    pub fn vertex(&self, v: VertexId) -> &[f64] {
        let i = v.index() * self.dim;
        &self.vertex_vecs[i..i + self.dim]
    }

    pub fn edge(&self, e: EdgeId) -> &[f64] {
        let i = e.index() * self.dim;
        &self.edge_vecs[i..i + self.dim]
    }

    pub fn vector_mut(&mut self, id: ObjectId) -> &mut [f64] {
        let dim = self.dim;
        let (buf, i) = match id {
            ObjectId::Vertex(v) => (&mut self.vertex_vecs, v.index()),
            ObjectId::Edge(e) => (&mut self.edge_vecs, e.index()),
        };
        &mut buf[i * dim..(i + 1) * dim]
    }

    pub fn get(&self, id: ObjectId) -> Option<&[f64]> {
        let present = match id {
            ObjectId::Vertex(v) => v.index() < self.vertex_count(),
            ObjectId::Edge(e) => e.index() < self.edge_count(),
        };
        present.then(|| self.vector(id))
    }

    pub(crate) fn vertex_buffer(&self) -> &[f64] {
        &self.vertex_vecs
    }

    pub(crate) fn edge_buffer(&self) -> &[f64] {
        &self.edge_vecs
    }

    /// Reorders the store to match the ids of `kg`; every object of the
    /// graph must have a vector.
    pub fn align_to(&self, kg: &KnowledgeGraph) -> Result<Self> {
        let vidx: std::collections::HashMap<&str, usize> = self
            .vertex_labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let eidx: std::collections::HashMap<&str, usize> = self
            .edge_labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut out = Self::zeros(kg, self.dim);
        for v in kg.vertices() {
            let label = kg.vertex_label(v);
            let &i = vidx
                .get(label)
                .ok_or_else(|| Error::MissingEmbedding(label.to_string()))?;
            out.vector_mut(v.into())
                .copy_from_slice(&self.vertex_vecs[i * self.dim..(i + 1) * self.dim]);
        }
        for e in kg.edges() {
            let label = kg.edge_label(e);
            let &i = eidx
                .get(label)
                .ok_or_else(|| Error::MissingEmbedding(label.to_string()))?;
            out.vector_mut(e.into())
                .copy_from_slice(&self.edge_vecs[i * self.dim..(i + 1) * self.dim]);
        }
        Ok(out)
    }

    /// The `k` objects of the same sort (vertex or edge) nearest to `id` by
    /// Euclidean distance, excluding `id`. Ties go to the lower id.
    pub fn nearest_neighbors(&self, id: ObjectId, k: usize) -> Result<Vec<(ObjectId, f64)>> {
        let query = self.get(id).ok_or(Error::UnknownObject(id))?;
        let others: Vec<ObjectId> = match id {
            ObjectId::Vertex(_) => (0..self.vertex_count() as u32)
                .map(|i| ObjectId::Vertex(VertexId(i)))
                .collect(),
            ObjectId::Edge(_) => (0..self.edge_count() as u32)
                .map(|i| ObjectId::Edge(EdgeId(i)))
                .collect(),
        };
        let mut scored: Vec<(ObjectId, f64)> = others
            .into_iter()
            .filter(|&o| o != id)
            .map(|o| (o, squared_distance(query, self.vector(o)).sqrt()))
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Text format: a `dim <d> vertices <nv> edges <ne>` header, then one
    /// `V|E<TAB>label<TAB>c1 c2 ... cd` line per object. Floats use the
    /// shortest representation that parses back to the same bits.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "dim {} vertices {} edges {}",
            self.dim,
            self.vertex_count(),
            self.edge_count()
        )?;
        let rows = self
            .vertex_labels
            .iter()
            .zip(self.vertex_vecs.chunks(self.dim.max(1)))
            .map(|(l, v)| ('V', l, v))
            .chain(
                self.edge_labels
                    .iter()
                    .zip(self.edge_vecs.chunks(self.dim.max(1)))
                    .map(|(l, v)| ('E', l, v)),
            );
        for (tag, label, vec) in rows {
            write!(w, "{tag}\t{label}\t")?;
            for (i, x) in vec.iter().enumerate() {
                if i > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{x:?}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file)
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmbeddingFormat("missing header".into()))?
            .map_err(|e| Error::io("<reader>", e))?;
        let (dim, nv, ne) = parse_header(&header)?;
        let mut vertex_labels = Vec::with_capacity(nv);
        let mut edge_labels = Vec::with_capacity(ne);
        let mut vertex_vecs = Vec::with_capacity(nv * dim);
        let mut edge_vecs = Vec::with_capacity(ne * dim);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io("<reader>", e))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(tag), Some(label), Some(values)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(lineno, "expected tag, label and components"));
            };
            let before = vertex_vecs.len() + edge_vecs.len();
            let (labels, buf, limit) = match tag {
                "V" => (&mut vertex_labels, &mut vertex_vecs, nv),
                "E" => (&mut edge_labels, &mut edge_vecs, ne),
                other => return Err(Error::parse(lineno, format!("unknown tag `{other}`"))),
            };
            if labels.len() == limit {
                return Err(Error::EmbeddingFormat(format!(
                    "more {tag} rows than the header declares"
                )));
            }
            labels.push(label.to_string());
            for tok in values.split(' ').filter(|t| !t.is_empty()) {
                let x: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad float `{tok}`")))?;
                buf.push(x);
            }
            let found = vertex_vecs.len() + edge_vecs.len() - before;
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
        }
        if vertex_labels.len() != nv || edge_labels.len() != ne {
            return Err(Error::EmbeddingFormat(format!(
                "truncated: header declares {nv} vertices and {ne} edges, found {} and {}",
                vertex_labels.len(),
                edge_labels.len()
            )));
        }
        Self::from_parts(dim, vertex_labels, vertex_vecs, edge_labels, edge_vecs)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize, usize)> {
    let toks: Vec<&str> = header.split_whitespace().collect();
    let bad = || Error::EmbeddingFormat(format!("bad header `{header}`"));
    if toks.len() != 6 || toks[0] != "dim" || toks[2] != "vertices" || toks[4] != "edges" {
        return Err(bad());
    }
    let n = |s: &str| s.parse::<usize>().map_err(|_| bad());
    Ok((n(toks[1])?, n(toks[3])?, n(toks[5])?))
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `‖h + e − t‖²`.
pub fn translate_score(h: &[f64], e: &[f64], t: &[f64]) -> Result<f64> {
    if e.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: e.len(),
        });
    }
    if t.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: t.len(),
        });
    }
    Ok(translate_unchecked(h, e, t))
}

#[inline]
pub(crate) fn translate_unchecked(h: &[f64], e: &[f64], t: &[f64]) -> f64 {
    h.iter()
        .zip(e)
        .zip(t)
        .map(|((h, e), t)| {
            let r = h + e - t;
            r * r
        })
        .sum()
}
