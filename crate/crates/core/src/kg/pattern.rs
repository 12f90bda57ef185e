use std::collections::{BTreeMap, BTreeSet};

use super::{EdgeId, KnowledgeGraph, ObjectId, Triple, VertexId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term<T> {
    Var(String),
    Const(T),
}

impl<T: Copy> Term<T> {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn as_const(&self) -> Option<T> {
        match self {
            Term::Const(c) => Some(*c),
            Term::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub head: Term<VertexId>,
    pub edge: Term<EdgeId>,
    pub tail: Term<VertexId>,
}

impl TriplePattern {
    pub fn new(head: Term<VertexId>, edge: Term<EdgeId>, tail: Term<VertexId>) -> Self {
        Self { head, edge, tail }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.head
            .as_var()
            .into_iter()
            .chain(self.edge.as_var())
            .chain(self.tail.as_var())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Vertex(VertexId),
    Edge(EdgeId),
}

pub type Bindings = BTreeMap<String, Value>;

/// Conjunctive basic-graph-pattern evaluation: every binding of the
/// patterns' variables under which each pattern is a triple of `kg`.
pub fn match_patterns(kg: &KnowledgeGraph, patterns: &[TriplePattern]) -> Result<Vec<Bindings>> {
    for p in patterns {
        for c in [p.head.as_const(), p.tail.as_const()].into_iter().flatten() {
            kg.check(ObjectId::Vertex(c))?;
        }
        if let Some(e) = p.edge.as_const() {
            kg.check(ObjectId::Edge(e))?;
        }
        let mut seen = BTreeMap::new();
        for (pos, name) in [
            (0, p.head.as_var()),
            (1, p.edge.as_var()),
            (2, p.tail.as_var()),
        ] {
            if let Some(name) = name {
                let is_edge = pos == 1;
                if let Some(prev) = seen.insert(name, is_edge) {
                    if prev != is_edge {
                        return Err(Error::InvalidQuery(format!(
                            "variable ?{name} used as both vertex and edge"
                        )));
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut done = vec![false; patterns.len()];
    search(kg, patterns, &mut done, &mut Bindings::new(), &mut out);
    Ok(out.into_iter().collect())
}

fn resolve_vertex(t: &Term<VertexId>, b: &Bindings) -> Option<VertexId> {
    match t {
        Term::Const(v) => Some(*v),
        Term::Var(name) => match b.get(name) {
            Some(Value::Vertex(v)) => Some(*v),
            _ => None,
        },
    }
}

fn resolve_edge(t: &Term<EdgeId>, b: &Bindings) -> Option<EdgeId> {
    match t {
        Term::Const(e) => Some(*e),
        Term::Var(name) => match b.get(name) {
            Some(Value::Edge(e)) => Some(*e),
            _ => None,
        },
    }
}

fn candidates<'k>(kg: &'k KnowledgeGraph, p: &TriplePattern, b: &Bindings) -> Box<dyn Iterator<Item = &'k Triple> + 'k> {
    let head = resolve_vertex(&p.head, b);
    let tail = resolve_vertex(&p.tail, b);
    let edge = resolve_edge(&p.edge, b);
    let sizes = [
        head.map(|h| kg.head_index(h).len()),
        tail.map(|t| kg.tail_index(t).len()),
        edge.map(|e| kg.edge_index_of(e).len()),
    ];
    let best = sizes
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (s, i)))
        .min();
    match best {
        Some((_, 0)) => Box::new(kg.triples_with_head(head.unwrap())),
        Some((_, 1)) => Box::new(kg.triples_with_tail(tail.unwrap())),
        Some(_) => Box::new(kg.triples_with_edge(edge.unwrap())),
        None => Box::new(kg.triples().iter()),
    }
}

fn bound_count(p: &TriplePattern, b: &Bindings) -> usize {
    resolve_vertex(&p.head, b).is_some() as usize
        + resolve_edge(&p.edge, b).is_some() as usize
        + resolve_vertex(&p.tail, b).is_some() as usize
}

fn search(
    kg: &KnowledgeGraph,
    patterns: &[TriplePattern],
    done: &mut [bool],
    bindings: &mut Bindings,
    out: &mut BTreeSet<Bindings>,
) {
    // Most-bound pattern first.
    let next = (0..patterns.len())
        .filter(|&i| !done[i])
        .max_by_key(|&i| (bound_count(&patterns[i], bindings), std::cmp::Reverse(i)));
    let Some(i) = next else {
        out.insert(bindings.clone());
        return;
    };
    done[i] = true;
    let p = &patterns[i];
    for t in candidates(kg, p, bindings) {
        let mut added = Vec::new();
        let ok = unify(&p.head, Value::Vertex(t.head), bindings, &mut added)
            && unify(&p.edge, Value::Edge(t.edge), bindings, &mut added)
            && unify(&p.tail, Value::Vertex(t.tail), bindings, &mut added);
        if ok {
            search(kg, patterns, done, bindings, out);
        }
        for name in added {
            bindings.remove(&name);
        }
    }
    done[i] = false;
}

fn unify<T>(term: &Term<T>, value: Value, bindings: &mut Bindings, added: &mut Vec<String>) -> bool
where
    T: Copy + Into<Value>,
{
    match term {
        Term::Const(c) => (*c).into() == value,
        Term::Var(name) => match bindings.get(name) {
            Some(v) => *v == value,
            None => {
                bindings.insert(name.clone(), value);
                added.push(name.clone());
                true
            }
        },
    }
}

impl From<VertexId> for Value {
    fn from(v: VertexId) -> Self {
        Value::Vertex(v)
    }
}

impl From<EdgeId> for Value {
    fn from(e: EdgeId) -> Self {
        Value::Edge(e)
    }
}
