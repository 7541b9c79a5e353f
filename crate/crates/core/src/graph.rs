//! Sparse bipartite code graphs: construction, alist file I/O,
//! syndrome checking, and random regular test-code generation.
//!
//! Messages live in flat per-edge arrays, so the graph's main job is
//! edge indexing. Edge ids are assigned in column-major order (all
//! edges of variable 0, then variable 1, and so on, each sorted by
//! check index), which makes every variable's edges a contiguous id
//! range and gives the check side a compact gather list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Errors from graph construction and generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// No variables, no checks, or no edges.
    Empty,
    /// A node with no edges; such graphs are rejected outright.
    IsolatedNode { side: &'static str, index: usize },
    /// The same (check, variable) pair listed twice.
    DuplicateEdge { check: usize, var: usize },
    /// An endpoint index at or past the declared node count.
    EdgeOutOfRange { check: usize, var: usize },
    /// Regularity parameters that cannot produce a graph: n dv must be
    /// divisible by dc and dv must be at least 2.
    BadRegularity { n: usize, dv: usize, dc: usize },
    /// Girth floors above 6 are not supported; rejection only covers
    /// duplicate edges and 4-cycles.
    UnsupportedGirthFloor { girth_floor: usize },
    /// The generator exhausted its retry budget without a clean graph.
    ConstructionFailed { attempts: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Empty => write!(f, "graph has no nodes or no edges"),
            GraphError::IsolatedNode { side, index } => {
                write!(f, "{side} node {index} has no edges")
            }
            GraphError::DuplicateEdge { check, var } => {
                write!(f, "duplicate edge between check {check} and variable {var}")
            }
            GraphError::EdgeOutOfRange { check, var } => {
                write!(f, "edge ({check}, {var}) has an endpoint out of range")
            }
            GraphError::BadRegularity { n, dv, dc } => {
                write!(f, "no ({dv},{dc})-regular graph on {n} variables: need dc | n*dv and dv >= 2")
            }
            GraphError::UnsupportedGirthFloor { girth_floor } => {
                write!(f, "girth floor {girth_floor} unsupported; only 4-cycle rejection is implemented")
            }
            GraphError::ConstructionFailed { attempts } => {
                write!(f, "no clean matching found in {attempts} attempts")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// Errors from alist parsing, each carrying the 1-based line where the
/// problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlistError {
    UnexpectedEnd { line: usize },
    InvalidToken { line: usize, token: String },
    BadDimensions { line: usize },
    DegreeOutOfRange { line: usize, degree: usize, max: usize },
    RowTooLong { line: usize, tokens: usize, max: usize },
    NeighborOutOfRange { line: usize, index: usize, max: usize },
    DuplicateNeighbor { line: usize, index: usize },
    DegreeMismatch { line: usize, declared: usize, found: usize },
    /// The column and row sections disagree about this edge.
    SectionDisagreement { line: usize, check: usize, var: usize },
}

impl fmt::Display for AlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlistError::UnexpectedEnd { line } => {
                write!(f, "line {line}: file ends before the section is complete")
            }
            AlistError::InvalidToken { line, token } => {
                write!(f, "line {line}: expected a non-negative integer, got {token:?}")
            }
            AlistError::BadDimensions { line } => {
                write!(f, "line {line}: dimensions must be positive")
            }
            AlistError::DegreeOutOfRange { line, degree, max } => {
                write!(f, "line {line}: degree {degree} outside 1..={max}")
            }
            AlistError::RowTooLong { line, tokens, max } => {
                write!(f, "line {line}: {tokens} entries but the declared maximum degree is {max}")
            }
            AlistError::NeighborOutOfRange { line, index, max } => {
                write!(f, "line {line}: index {index} outside 1..={max}")
            }
            AlistError::DuplicateNeighbor { line, index } => {
                write!(f, "line {line}: index {index} listed twice")
            }
            AlistError::DegreeMismatch { line, declared, found } => {
                write!(f, "line {line}: declared degree {declared} but {found} entries")
            }
            AlistError::SectionDisagreement { line, check, var } => {
                write!(
                    f,
                    "line {line}: row section disagrees with the column section about \
                     check {check} / variable {var} (1-based)"
                )
            }
        }
    }
}

impl std::error::Error for AlistError {}

/// Immutable bipartite code graph with stable column-major edge ids.
///
/// Edge `e` connects `edge_var(e)` to `edge_check(e)`. The edges of
/// variable `v` are the contiguous ids `var_edges(v)`; the edges of
/// check `c` are listed (sorted by variable) in `check_edges(c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n_vars: usize,
    n_checks: usize,
    var_offsets: Vec<usize>,
    check_offsets: Vec<usize>,
    edge_check: Vec<u32>,
    edge_var: Vec<u32>,
    check_edge_ids: Vec<u32>,
}

impl TannerGraph {
    /// Builds a graph from (check, variable) pairs, in any order.
    pub fn from_edges(
        n_vars: usize,
        n_checks: usize,
        edges: &[(u32, u32)],
    ) -> Result<TannerGraph, GraphError> {
        if n_vars == 0 || n_checks == 0 || edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut sorted: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(c, v) in edges {
            if (c as usize) >= n_checks || (v as usize) >= n_vars {
                return Err(GraphError::EdgeOutOfRange { check: c as usize, var: v as usize });
            }
            sorted.push((v, c));
        }
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge {
                    check: w[0].1 as usize,
                    var: w[0].0 as usize,
                });
            }
        }

        let mut var_offsets = vec![0usize; n_vars + 1];
        let mut check_degree = vec![0usize; n_checks];
        for &(v, c) in &sorted {
            var_offsets[v as usize + 1] += 1;
            check_degree[c as usize] += 1;
        }
        for v in 0..n_vars {
            if var_offsets[v + 1] == 0 {
                return Err(GraphError::IsolatedNode { side: "variable", index: v });
            }
            var_offsets[v + 1] += var_offsets[v];
        }
        let mut check_offsets = vec![0usize; n_checks + 1];
        for c in 0..n_checks {
            if check_degree[c] == 0 {
                return Err(GraphError::IsolatedNode { side: "check", index: c });
            }
            check_offsets[c + 1] = check_offsets[c] + check_degree[c];
        }

        let edge_var: Vec<u32> = sorted.iter().map(|&(v, _)| v).collect();
        let edge_check: Vec<u32> = sorted.iter().map(|&(_, c)| c).collect();
        let mut check_edge_ids = vec![0u32; sorted.len()];
        let mut cursor = check_offsets.clone();
        for (e, &(_, c)) in sorted.iter().enumerate() {
            check_edge_ids[cursor[c as usize]] = e as u32;
            cursor[c as usize] += 1;
        }

        Ok(TannerGraph {
            n_vars,
            n_checks,
            var_offsets,
            check_offsets,
            edge_check,
            edge_var,
            check_edge_ids,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Design rate (n - m) / n; the true rate is at least this and
    /// higher when checks are linearly dependent.
    pub fn design_rate(&self) -> f64 {
        (self.n_vars as f64 - self.n_checks as f64) / self.n_vars as f64
    }

    /// Edge ids of variable `v`: a contiguous range.
    pub fn var_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.var_offsets[v]..self.var_offsets[v + 1]
    }

    /// Edge ids of check `c`, sorted by variable index.
    pub fn check_edges(&self, c: usize) -> &[u32] {
        &self.check_edge_ids[self.check_offsets[c]..self.check_offsets[c + 1]]
    }

    pub fn var_degree(&self, v: usize) -> usize {
        self.var_offsets[v + 1] - self.var_offsets[v]
    }

    pub fn check_degree(&self, c: usize) -> usize {
        self.check_offsets[c + 1] - self.check_offsets[c]
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e] as usize
    }

    pub fn edge_check(&self, e: usize) -> usize {
        self.edge_check[e] as usize
    }

    pub fn max_var_degree(&self) -> usize {
        (0..self.n_vars).map(|v| self.var_degree(v)).max().unwrap_or(0)
    }

    pub fn max_check_degree(&self) -> usize {
        (0..self.n_checks).map(|c| self.check_degree(c)).max().unwrap_or(0)
    }

    /// True iff every check's adjacent bits XOR to zero.
    ///
    /// # Panics
    /// If `bits` does not have one entry per variable.
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        assert_eq!(bits.len(), self.n_vars, "one hard decision per variable");
        for c in 0..self.n_checks {
            let mut parity = 0u8;
            for &e in self.check_edges(c) {
                parity ^= bits[self.edge_var[e as usize] as usize] & 1;
            }
            if parity != 0 {
                return false;
            }
        }
        true
    }

    /// Canonical alist text: sorted indices, no zero padding, 1-based.
    pub fn to_alist(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.n_vars, self.n_checks));
        out.push_str(&format!("{} {}\n", self.max_var_degree(), self.max_check_degree()));
        let degrees: Vec<String> = (0..self.n_vars).map(|v| self.var_degree(v).to_string()).collect();
        out.push_str(&degrees.join(" "));
        out.push('\n');
        let degrees: Vec<String> =
            (0..self.n_checks).map(|c| self.check_degree(c).to_string()).collect();
        out.push_str(&degrees.join(" "));
        out.push('\n');
        for v in 0..self.n_vars {
            let row: Vec<String> =
                self.var_edges(v).map(|e| (self.edge_check[e] + 1).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for c in 0..self.n_checks {
            let row: Vec<String> = self
                .check_edges(c)
                .iter()
                .map(|&e| (self.edge_var[e as usize] + 1).to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_row(&mut self) -> Result<(usize, Vec<usize>), AlistError> {
        loop {
            let text = self.iter.next().ok_or(AlistError::UnexpectedEnd { line: self.line + 1 })?;
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for token in text.split_whitespace() {
                let value: usize = token.parse().map_err(|_| AlistError::InvalidToken {
                    line: self.line,
                    token: token.to_string(),
                })?;
                row.push(value);
            }
            return Ok((self.line, row));
        }
    }
}

fn parse_neighbor_row(
    lines: &mut Lines<'_>,
    declared_degree: usize,
    max_degree: usize,
    index_max: usize,
) -> Result<(usize, Vec<usize>), AlistError> {
    let (line, row) = lines.next_row()?;
    if row.len() > max_degree.max(declared_degree) {
        return Err(AlistError::RowTooLong { line, tokens: row.len(), max: max_degree });
    }
    let mut neighbors = Vec::with_capacity(declared_degree);
    for &value in &row {
        if value == 0 {
            continue; // zero padding, tolerated and ignored
        }
        if value > index_max {
            return Err(AlistError::NeighborOutOfRange { line, index: value, max: index_max });
        }
        if neighbors.contains(&(value - 1)) {
            return Err(AlistError::DuplicateNeighbor { line, index: value });
        }
        neighbors.push(value - 1);
    }
    if neighbors.len() != declared_degree {
        return Err(AlistError::DegreeMismatch {
            line,
            declared: declared_degree,
            found: neighbors.len(),
        });
    }
    Ok((line, neighbors))
}

/// Parses the community-standard alist text format. Zero padding in
/// the index rows is tolerated; the column and row sections are
/// cross-validated against each other.
pub fn parse_alist(text: &str) -> Result<TannerGraph, AlistError> {
    let mut lines = Lines { iter: text.lines(), line: 0 };

    let (line, dims) = lines.next_row()?;
    if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
        return Err(AlistError::BadDimensions { line });
    }
    let (n_vars, n_checks) = (dims[0], dims[1]);

    let (line, maxes) = lines.next_row()?;
    if maxes.len() != 2 || maxes[0] == 0 || maxes[1] == 0 {
        return Err(AlistError::BadDimensions { line });
    }
    let (max_var_deg, max_check_deg) = (maxes[0], maxes[1]);

    let (line, var_degrees) = lines.next_row()?;
    if var_degrees.len() != n_vars {
        return Err(AlistError::DegreeMismatch { line, declared: n_vars, found: var_degrees.len() });
    }
    for &d in &var_degrees {
        if d == 0 || d > max_var_deg {
            return Err(AlistError::DegreeOutOfRange { line, degree: d, max: max_var_deg });
        }
    }
    let (line, check_degrees) = lines.next_row()?;
    if check_degrees.len() != n_checks {
        return Err(AlistError::DegreeMismatch {
            line,
            declared: n_checks,
            found: check_degrees.len(),
        });
    }
    for &d in &check_degrees {
        if d == 0 || d > max_check_deg {
            return Err(AlistError::DegreeOutOfRange { line, degree: d, max: max_check_deg });
        }
    }

    // Column section: authoritative edge set.
    let mut var_neighbors: Vec<Vec<usize>> = Vec::with_capacity(n_vars);
    for v in 0..n_vars {
        let (_, neighbors) =
            parse_neighbor_row(&mut lines, var_degrees[v], max_var_deg, n_checks)?;
        var_neighbors.push(neighbors);
    }

    // Row section: must describe exactly the same edges.
    let mut edge_pairs: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    for (v, neighbors) in var_neighbors.iter().enumerate() {
        for &c in neighbors {
            edge_pairs.insert((c, v));
        }
    }
    for c in 0..n_checks {
        let (line, neighbors) =
            parse_neighbor_row(&mut lines, check_degrees[c], max_check_deg, n_vars)?;
        for &v in &neighbors {
            if !edge_pairs.remove(&(c, v)) {
                return Err(AlistError::SectionDisagreement { line, check: c + 1, var: v + 1 });
            }
        }
    }
    if let Some(&(c, v)) = edge_pairs.iter().next() {
        return Err(AlistError::SectionDisagreement {
            line: lines.line,
            check: c + 1,
            var: v + 1,
        });
    }

    let edges: Vec<(u32, u32)> = var_neighbors
        .iter()
        .enumerate()
        .flat_map(|(v, ns)| ns.iter().map(move |&c| (c as u32, v as u32)))
        .collect();
    Ok(TannerGraph::from_edges(n_vars, n_checks, &edges)
        .expect("validated sections produce a constructible graph"))
}

const GENERATOR_ATTEMPTS: usize = 500;
const SOCKET_TRIES: usize = 200;

/// Random (dv, dc)-regular graph by permutation matching with
/// rejection: candidate pairings that would create a duplicate edge, or
/// a 4-cycle when `girth_floor >= 6`, are redrawn, and a matching that
/// gets stuck is restarted. Deterministic for a given seed.
pub fn generate_regular(
    n: usize,
    dv: usize,
    dc: usize,
    seed: u64,
    girth_floor: usize,
) -> Result<TannerGraph, GraphError> {
    if n == 0 || dv < 2 || dc == 0 || (n * dv) % dc != 0 {
        return Err(GraphError::BadRegularity { n, dv, dc });
    }
    if girth_floor > 6 {
        return Err(GraphError::UnsupportedGirthFloor { girth_floor });
    }
    let reject_4cycles = girth_floor >= 6;
    let m = n * dv / dc;

    for attempt in 0..GENERATOR_ATTEMPTS {
        // One stream per attempt keeps restarts deterministic without
        // replaying the failed prefix.
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(attempt as u64));
        if let Some(graph) = try_matching(n, dv, dc, m, reject_4cycles, &mut rng) {
            return Ok(graph);
        }
    }
    Err(GraphError::ConstructionFailed { attempts: GENERATOR_ATTEMPTS })
}

fn try_matching(
    n: usize,
    dv: usize,
    dc: usize,
    m: usize,
    reject_4cycles: bool,
    rng: &mut ChaCha8Rng,
) -> Option<TannerGraph> {
    // Pool of check sockets; each check appears dc times.
    let mut pool: Vec<u32> = (0..m as u32).flat_map(|c| std::iter::repeat(c).take(dc)).collect();
    let mut var_checks: Vec<Vec<u32>> = vec![Vec::with_capacity(dv); n];
    let mut check_vars: Vec<Vec<u32>> = vec![Vec::with_capacity(dc); m];

    for v in 0..n as u32 {
        for _ in 0..dv {
            let mut placed = false;
            for _ in 0..SOCKET_TRIES {
                let k = rng.random_range(0..pool.len());
                let c = pool[k];
                if var_checks[v as usize].contains(&c) {
                    continue;
                }
                if reject_4cycles && creates_4cycle(v, c, &var_checks, &check_vars) {
                    continue;
                }
                pool.swap_remove(k);
                var_checks[v as usize].push(c);
                check_vars[c as usize].push(v);
                placed = true;
                break;
            }
            if !placed {
                return None;
            }
        }
    }

    let edges: Vec<(u32, u32)> = var_checks
        .iter()
        .enumerate()
        .flat_map(|(v, cs)| cs.iter().map(move |&c| (c, v as u32)))
        .collect();
    Some(TannerGraph::from_edges(n, m, &edges).expect("matching respects all constraints"))
}

// Adding edge (v, c) closes a 4-cycle iff some other variable already
// touches both c and one of v's current checks.
fn creates_4cycle(v: u32, c: u32, var_checks: &[Vec<u32>], check_vars: &[Vec<u32>]) -> bool {
    for &other in &check_vars[c as usize] {
        if other == v {
            continue;
        }
        for &c2 in &var_checks[other as usize] {
            if c2 != c && var_checks[v as usize].contains(&c2) {
                return true;
            }
        }
    }
    false
}
