//! Optimal structure of candidate sets in embedding space.
//!
//! A structure matrix places every candidate edge set `k` (1-based) on an
//! ordered pair `(i, j)` of candidate vertex sets, meaning "set `i` is
//! linked to set `j` by set `k`". Placements are scored by how well the
//! mean vectors satisfy `Cᵥⁱ + Cₑᵏ ≈ Cᵥʲ`.

use std::fmt::{self, Write as _};

use crate::embedding::{translate_score, EmbeddingStore, VectorLookup};
use crate::error::{Error, Result};
use crate::phrase::{CandidateSet, PhraseKind};

/// Upper bound on `n^(2m)` for the exhaustive solver.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Componentwise mean of the vectors of a candidate set.
pub fn mean_vector(set: &CandidateSet, store: &EmbeddingStore) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::NoCandidates {
            phrase: set.phrase.text.clone(),
            kind: set.phrase.kind.as_str(),
        });
    }
    let mut mean = vec![0.0; store.dim()];
    for id in set.ids() {
        let v = store
            .get(id)
            .ok_or_else(|| Error::MissingEmbedding(format!("{id:?}")))?;
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    let n = set.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StructureMatrix {
    n: usize,
    m: usize,
    cells: Vec<usize>,
}

impl StructureMatrix {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            cells: vec![0; n * n],
        }
    }

    /// Square rows whose cells lie in `0..=m`.
    pub fn from_rows(rows: &[Vec<usize>], m: usize) -> Result<Self> {
        let n = rows.len();
        let mut out = Self::new(n, m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidConfig(format!("row {i} has {} cells, expected {n}", row.len())));
            }
            for (j, &c) in row.iter().enumerate() {
                if c > m {
                    return Err(Error::InvalidConfig(format!("cell ({i}, {j}) = {c} exceeds m = {m}")));
                }
                out.cells[i * n + j] = c;
            }
        }
        Ok(out)
    }

    /// Matrix for a placement of edge sets `1..=m`; `None` when two edge
    /// sets share a cell, which the matrix cannot represent.
    pub fn from_placement(n: usize, placement: &[(usize, usize)]) -> Option<Self> {
        let mut out = Self::new(n, placement.len());
        for (k, &(i, j)) in placement.iter().enumerate() {
            let c = &mut out.cells[i * n + j];
            if *c != 0 {
                return None;
            }
            *c = k + 1;
        }
        Some(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize) {
        assert!(k <= self.m, "edge label {k} exceeds m = {}", self.m);
        self.cells[i * self.n + j] = k;
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.cells.chunks(self.n.max(1)).take(self.n).map(<[usize]>::to_vec).collect()
    }

    /// Nonzero cells as `(k, i, j)`, ordered by `k` then position.
    pub fn placements(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<_> = (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .filter_map(|(i, j)| match self.get(i, j) {
                0 => None,
                k => Some((k, i, j)),
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Indices (1 to 5) of the violated constraints: zero diagonal,
    /// antisymmetric support, exactly `m` nonzero cells, connected
    /// underlying graph, every edge label present.
    pub fn violations(&self) -> Vec<u8> {
        let n = self.n;
        let mut out = Vec::new();
        if (0..n).any(|i| self.get(i, i) != 0) {
            out.push(1);
        }
        if (0..n).any(|i| (0..n).any(|j| i != j && self.get(i, j) != 0 && self.get(j, i) != 0)) {
            out.push(2);
        }
        if self.cells.iter().filter(|&&c| c != 0).count() != self.m {
            out.push(3);
        }
        if !self.connected() {
            out.push(4);
        }
        let mut seen = vec![false; self.m + 1];
        for &c in &self.cells {
            seen[c] = true;
        }
        if !seen[1..].iter().all(|&s| s) {
            out.push(5);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    fn connected(&self) -> bool {
        let n = self.n;
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && (self.get(i, j) != 0 || self.get(j, i) != 0) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

impl fmt::Display for StructureMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// `Cost_k[i][j] = ‖Cᵥⁱ + Cₑᵏ − Cᵥʲ‖²`, `+∞` on the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTables {
    n: usize,
    m: usize,
    costs: Vec<f64>,
}

impl CostTables {
    pub fn from_means(vertex_means: &[Vec<f64>], edge_means: &[Vec<f64>]) -> Result<Self> {
        let (n, m) = (vertex_means.len(), edge_means.len());
        let mut costs = vec![f64::INFINITY; m * n * n];
        for (k, e) in edge_means.iter().enumerate() {
            for (i, vi) in vertex_means.iter().enumerate() {
                for (j, vj) in vertex_means.iter().enumerate() {
                    if i != j {
                        costs[(k * n + i) * n + j] = translate_score(vi, e, vj)?;
                    }
                }
            }
        }
        Ok(Self { n, m, costs })
    }

    /// Tables from raw values indexed `[k][i][j]`; the diagonal is reset to `+∞`.
    pub fn from_values(n: usize, m: usize, mut costs: Vec<f64>) -> Result<Self> {
        if costs.len() != m * n * n {
            return Err(Error::InvalidConfig(format!("expected {} costs, got {}", m * n * n, costs.len())));
        }
        for k in 0..m {
            for i in 0..n {
                costs[(k * n + i) * n + i] = f64::INFINITY;
            }
        }
        Ok(Self { n, m, costs })
    }

    /// Vertex sets are the entity phrases in question order, edge sets the
    /// relation phrases.
    pub fn from_sets(sets: &[CandidateSet], store: &EmbeddingStore) -> Result<Self> {
        let means = |kind| -> Result<Vec<Vec<f64>>> {
            sets.iter()
                .filter(|s| s.phrase.kind == kind)
                .map(|s| mean_vector(s, store))
                .collect()
        };
        Self::from_means(&means(PhraseKind::Entity)?, &means(PhraseKind::Relation)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Cost of edge set `k` (0-based) on cell `(i, j)`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.costs[(k * self.n + i) * self.n + j]
    }

    /// Lowest-cost off-diagonal cell of edge set `k`, ties to the smaller cell.
    pub fn argmin(&self, k: usize) -> (usize, usize) {
        let mut best = (0, 1);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.get(k, i, j) < self.get(k, best.0, best.1) {
                    best = (i, j);
                }
            }
        }
        best
    }

    /// TSV dump: one block per edge set, then `matrix` if given.
    pub fn to_tsv(&self, matrix: Option<&StructureMatrix>) -> String {
        let mut out = String::new();
        for k in 0..self.m {
            let _ = writeln!(out, "# cost\t{}", k + 1);
            for i in 0..self.n {
                let row: Vec<String> = (0..self.n).map(|j| format!("{:.6}", self.get(k, i, j))).collect();
                let _ = writeln!(out, "{}", row.join("\t"));
            }
        }
        if let Some(mx) = matrix {
            out.push_str("# matrix\n");
            out.push_str(&mx.to_string());
        }
        out
    }
}

/// Sum of the costs of the nonzero cells, accumulated in edge-label order.
pub fn cost_score(matrix: &StructureMatrix, tables: &CostTables) -> f64 {
    matrix
        .placements()
        .into_iter()
        .map(|(k, i, j)| tables.get(k - 1, i, j))
        .sum()
}

fn placement_cost(placement: &[(usize, usize)], tables: &CostTables) -> f64 {
    placement
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| tables.get(k, i, j))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub matrix: StructureMatrix,
    pub cost: f64,
    /// Cell of each edge set, in label order.
    pub placement: Vec<(usize, usize)>,
    /// Per-edge optimum placement, valid or not.
    pub ideal: Vec<(usize, usize)>,
    /// Number of re-placed edge sets at which the answer was found; 0 when
    /// the ideal matrix was already valid.
    pub replaced: usize,
}

fn check_shape(n: usize, m: usize) -> Result<()> {
    if n < 2 || m < 1 {
        return Err(Error::InsufficientPhrases { n, m });
    }
    Ok(())
}

/// Strictly lower cost wins; equal costs go to the lexicographically
/// smaller placement.
fn improves(cost: f64, placement: &[(usize, usize)], best: &Option<(f64, Vec<(usize, usize)>)>) -> bool {
    match best {
        None => true,
        Some((c, p)) => cost < *c || (cost == *c && placement < p.as_slice()),
    }
}

/// Places every edge set at its cheapest cell; if that matrix is invalid,
/// re-places subsets of 1, 2, ... edge sets over all cells, keeping the
/// others at their ideal cells, and returns the cheapest valid matrix of
/// the first subset size that yields one.
pub fn solve_tables(tables: &CostTables) -> Result<Solution> {
    let (n, m) = (tables.n, tables.m);
    check_shape(n, m)?;
    let ideal: Vec<(usize, usize)> = (0..m).map(|k| tables.argmin(k)).collect();
    if let Some(matrix) = StructureMatrix::from_placement(n, &ideal) {
        if matrix.is_valid() {
            return Ok(Solution {
                cost: placement_cost(&ideal, tables),
                matrix,
                placement: ideal.clone(),
                ideal,
                replaced: 0,
            });
        }
    }
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    for num in 1..=m {
        let mut best = None;
        let mut subset: Vec<usize> = (0..num).collect();
        loop {
            let mut free = vec![false; m];
            for &k in &subset {
                free[k] = true;
            }
            let mut search = Search {
                tables,
                ideal: &ideal,
                free: &free,
                cells: &cells,
                used: vec![false; n * n],
                placement: Vec::with_capacity(m),
                best: &mut best,
            };
            search.run(0, 0.0);
            if !next_combination(&mut subset, m) {
                break;
            }
        }
        if let Some((cost, placement)) = best {
            let matrix = StructureMatrix::from_placement(n, &placement).expect("search never collides");
            debug_assert!(matrix.is_valid());
            return Ok(Solution {
                matrix,
                cost,
                placement,
                ideal,
                replaced: num,
            });
        }
    }
    Err(Error::NoValidStructure)
}

/// Depth-first assignment of edge sets in label order.
struct Search<'a> {
    tables: &'a CostTables,
    ideal: &'a [(usize, usize)],
    free: &'a [bool],
    cells: &'a [(usize, usize)],
    used: Vec<bool>,
    placement: Vec<(usize, usize)>,
    best: &'a mut Option<(f64, Vec<(usize, usize)>)>,
}

impl Search<'_> {
    fn run(&mut self, k: usize, partial: f64) {
        let n = self.tables.n;
        if let Some((c, _)) = self.best {
            // Remaining costs are non-negative.
            if partial > *c {
                return;
            }
        }
        if k == self.ideal.len() {
            let matrix = StructureMatrix::from_placement(n, &self.placement).expect("cells are distinct");
            if matrix.connected() && improves(partial, &self.placement, self.best) {
                *self.best = Some((partial, self.placement.clone()));
            }
            return;
        }
        let options: &[(usize, usize)] = if self.free[k] {
            self.cells
        } else {
            std::slice::from_ref(&self.ideal[k])
        };
        for &(i, j) in options {
            if self.used[i * n + j] || self.used[j * n + i] {
                continue;
            }
            self.used[i * n + j] = true;
            self.placement.push((i, j));
            self.run(k + 1, partial + self.tables.get(k, i, j));
            self.placement.pop();
            self.used[i * n + j] = false;
        }
    }
}

/// Advances `c` to the next `c.len()`-subset of `0..m` in lexicographic order.
fn next_combination(c: &mut [usize], m: usize) -> bool {
    let r = c.len();
    let Some(pos) = (0..r).rev().find(|&p| c[p] < m - r + p) else {
        return false;
    };
    c[pos] += 1;
    for q in pos + 1..r {
        c[q] = c[q - 1] + 1;
    }
    true
}

/// Exhaustive reference: every placement of the `m` edge sets on
/// off-diagonal cells, checked with [`StructureMatrix::is_valid`].
pub fn brute_force_tables(tables: &CostTables) -> Result<Solution> {
    let (n, m) = (tables.n, tables.m);
    check_shape(n, m)?;
    let size = (n as u128).checked_pow(2 * m as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge { size });
    }
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let total = cells.len().pow(m as u32);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let mut placement = vec![(0, 0); m];
    for mut code in 0..total {
        for slot in placement.iter_mut() {
            *slot = cells[code % cells.len()];
            code /= cells.len();
        }
        let Some(matrix) = StructureMatrix::from_placement(n, &placement) else {
            continue;
        };
        if !matrix.is_valid() {
            continue;
        }
        let cost = cost_score(&matrix, tables);
        if improves(cost, &placement, &best) {
            best = Some((cost, placement.clone()));
        }
    }
    let (cost, placement) = best.ok_or(Error::NoValidStructure)?;
    Ok(Solution {
        matrix: StructureMatrix::from_placement(n, &placement).expect("valid placement"),
        cost,
        placement,
        ideal: (0..m).map(|k| tables.argmin(k)).collect(),
        replaced: 0,
    })
}

pub fn solve(sets: &[CandidateSet], store: &EmbeddingStore) -> Result<Solution> {
    solve_tables(&CostTables::from_sets(sets, store)?)
}

pub fn brute_force_solve(sets: &[CandidateSet], store: &EmbeddingStore) -> Result<Solution> {
    brute_force_tables(&CostTables::from_sets(sets, store)?)
}
