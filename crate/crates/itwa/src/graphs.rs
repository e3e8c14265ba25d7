//! Random regular interaction graphs, their text format, and the classical
//! energetics of spin assignments on them.
//!
//! The file format is a plain edge list: a header line `N M`, followed by `M`
//! lines `i j` with `0 <= i < j < N`. Lines starting with `#` are comments.
//! Serialization always writes the edges in sorted order.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

const MAX_RESTARTS: usize = 100_000;

/// A simple graph in which every node has the same degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    degree: usize,
    edges: Vec<(usize, usize)>,
    // node i's neighbors live in neighbors[i * degree..(i + 1) * degree]
    neighbors: Vec<usize>,
}

impl RegularGraph {
    /// Validates and canonicalizes an edge list. Edges may be given in any
    /// order and orientation.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one node"));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) references a node outside 0..{n}")));
            }
            if a == b {
                return Err(invalid(format!("self-loop at node {a}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        let mut deg = vec![0usize; n];
        for &(a, b) in &canon {
            deg[a] += 1;
            deg[b] += 1;
        }
        let degree = deg[0];
        if let Some(i) = deg.iter().position(|&d| d != degree) {
            return Err(invalid(format!(
                "graph is not regular: node 0 has degree {degree}, node {i} has degree {}",
                deg[i]
            )));
        }
        let mut neighbors = vec![0usize; n * degree];
        let mut fill = vec![0usize; n];
        for &(a, b) in &canon {
            neighbors[a * degree + fill[a]] = b;
            fill[a] += 1;
            neighbors[b * degree + fill[b]] = a;
            fill[b] += 1;
        }
        Ok(Self { n, degree, edges: canon, neighbors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.degree..(i + 1) * self.degree]
    }

    pub(crate) fn neighbor_table(&self) -> &[usize] {
        &self.neighbors
    }

    /// The complete graph on four nodes, the only 3-regular graph with N = 4.
    pub fn k4() -> Self {
        Self::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).expect("K4 is regular")
    }

    /// Number of triangles; zero for bipartite graphs.
    pub fn triangle_count(&self) -> usize {
        let mut count = 0;
        for &(a, b) in &self.edges {
            for &c in self.neighbors(a) {
                if c > b && self.neighbors(b).contains(&c) {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Samples a random `k`-regular graph on `n` nodes with the configuration
/// (pairing) model, restarting from scratch whenever a pairing produces a
/// self-loop or a repeated edge.
pub fn generate_random_regular(n: usize, k: usize, seed: u64) -> Result<RegularGraph> {
    if !(n * k).is_multiple_of(2) {
        return Err(invalid(format!(
            "no {k}-regular graph on {n} nodes exists: n*k = {} is odd (handshake lemma)",
            n * k
        )));
    }
    if n <= k {
        return Err(invalid(format!("a {k}-regular graph needs more than {k} nodes (got {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, k)).collect();
    let mut edges = Vec::with_capacity(n * k / 2);
    'restart: for _ in 0..MAX_RESTARTS {
        stubs.shuffle(&mut rng);
        edges.clear();
        for pair in stubs.chunks_exact(2) {
            if pair[0] == pair[1] {
                continue 'restart;
            }
            edges.push((pair[0].min(pair[1]), pair[0].max(pair[1])));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return RegularGraph::from_edges(n, &edges);
    }
    Err(Error::NoConvergence(MAX_RESTARTS))
}

pub fn parse_graph(text: &str) -> Result<RegularGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line, msg: String| Error::Parse { line, msg };
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header line \"N M\"".into()))?;
    let (n, m) = parse_pair(header).map_err(|msg| parse_err(hline, format!("header: {msg}")))?;
    if n == 0 {
        return Err(parse_err(hline, "node count must be positive".into()));
    }
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut deg = vec![0usize; n];
    let mut last_line = hline;
    for (line, text) in lines {
        last_line = line;
        let (i, j) = parse_pair(text).map_err(|msg| parse_err(line, msg))?;
        if i >= n || j >= n {
            return Err(parse_err(line, format!("node index out of range 0..{n} in edge ({i}, {j})")));
        }
        if i == j {
            return Err(parse_err(line, format!("self-loop at node {i}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(parse_err(line, format!("duplicate edge ({i}, {j})")));
        }
        deg[i] += 1;
        deg[j] += 1;
        if edges.len() == m {
            return Err(parse_err(line, format!("more edges than the {m} declared in the header")));
        }
        edges.push((i, j));
    }
    if edges.len() != m {
        return Err(parse_err(last_line, format!("header declares {m} edges, found {}", edges.len())));
    }
    if let Some(i) = deg.iter().position(|&d| d != deg[0]) {
        return Err(parse_err(
            last_line,
            format!("degree violation: node 0 has degree {}, node {i} has degree {}", deg[0], deg[i]),
        ));
    }
    RegularGraph::from_edges(n, &edges)
}

fn parse_pair(text: &str) -> std::result::Result<(usize, usize), String> {
    let mut it = text.split_whitespace();
    let mut next = || -> std::result::Result<usize, String> {
        let tok = it.next().ok_or_else(|| format!("expected two integers, got {text:?}"))?;
        tok.parse().map_err(|_| format!("not a non-negative integer: {tok:?}"))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(format!("expected two integers, got {text:?}"));
    }
    Ok(pair)
}

pub fn serialize_graph(g: &RegularGraph) -> String {
    let mut out = String::with_capacity(8 * (g.edges.len() + 1));
    writeln!(out, "{} {}", g.n, g.edges.len()).unwrap();
    for &(i, j) in &g.edges {
        writeln!(out, "{i} {j}").unwrap();
    }
    out
}

/// A classical configuration of σ^z eigenvalues, one `±1` per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinAssignment(Vec<i8>);

impl SpinAssignment {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(invalid("spin assignment entries must be +1 or -1"));
        }
        Ok(Self(spins))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Little-endian bit encoding: bit `i` of `code` is spin `i`, with a
    /// clear bit meaning `+1` and a set bit meaning `-1`.
    pub fn from_code(code: u64, n: usize) -> Self {
        Self((0..n).map(|i| if (code >> i) & 1 == 0 { 1 } else { -1 }).collect())
    }

    /// Same encoding over a multi-word bit vector, for more than 64 spins.
    pub fn from_code_vec(words: &[u64], n: usize) -> Self {
        Self((0..n).map(|i| if (words[i / 64] >> (i % 64)) & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn code(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

/// Number of edges joining opposite spins.
pub fn cut_size(g: &RegularGraph, s: &SpinAssignment) -> Result<usize> {
    if s.len() != g.n {
        return Err(Error::SizeMismatch { expected: g.n, found: s.len() });
    }
    Ok(g.edges.iter().filter(|&&(i, j)| s.0[i] != s.0[j]).count())
}

/// Eigenvalue of the antiferromagnetic Ising Hamiltonian with coupling `j`
/// per edge: `J (|E| - 2 cut)`.
pub fn config_energy(g: &RegularGraph, s: &SpinAssignment, j: f64) -> Result<f64> {
    let cut = cut_size(g, s)?;
    Ok(j * (g.edges.len() as f64 - 2.0 * cut as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_nodes_always_give_k4() {
        for seed in 0..50 {
            assert_eq!(generate_random_regular(4, 3, seed).unwrap(), RegularGraph::k4());
        }
    }

    #[test]
    fn parity_and_size_preconditions() {
        let err = generate_random_regular(5, 3, 0).unwrap_err();
        assert!(err.to_string().contains("odd"), "{err}");
        assert!(generate_random_regular(3, 3, 0).is_err());
    }

    #[test]
    fn hundred_nodes() {
        let g = generate_random_regular(100, 3, 1).unwrap();
        assert_eq!(g.edges().len(), 150);
        assert!((0..100).all(|i| g.neighbors(i).len() == 3));
        assert_eq!(g, generate_random_regular(100, 3, 1).unwrap());
    }

    #[test]
    fn degree_invariant_across_seeds() {
        for seed in 0..1000 {
            let n = 4 + 2 * (seed as usize % 20);
            let g = generate_random_regular(n, 3, seed).unwrap();
            let mut deg = vec![0; n];
            for &(a, b) in g.edges() {
                assert!(a < b);
                deg[a] += 1;
                deg[b] += 1;
            }
            assert!(deg.iter().all(|&d| d == 3));
            assert_eq!(g.edges().len(), 3 * n / 2);
        }
    }

    #[test]
    fn six_node_generator_hits_both_classes() {
        let (mut bipartite, mut prism) = (0, 0);
        for seed in 0..1000 {
            match generate_random_regular(6, 3, seed).unwrap().triangle_count() {
                0 => bipartite += 1,
                2 => prism += 1,
                t => panic!("unexpected triangle count {t}"),
            }
        }
        assert!(bipartite > 0 && prism > 0, "K33: {bipartite}, prism: {prism}");
    }

    #[test]
    fn parse_k4() {
        let g = parse_graph("4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3").unwrap();
        assert_eq!(g, RegularGraph::k4());
        let with_comments = "# K4\n4 6\n0 1\n0 2\n# middle\n0 3\n1 2\n\n1 3\n2 3\n";
        assert_eq!(parse_graph(with_comments).unwrap(), g);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("4 1\n0 0", 2, "self-loop"),
            ("4 6\n0 1\n0 2\n0 x\n", 4, "integer"),
            ("4 1\n0 9", 2, "out of range"),
            ("4 2\n0 1\n1 0", 3, "duplicate"),
            ("4 3\n0 1\n2 3\n", 3, "header"),
            ("4 2\n0 1\n1 2\n", 3, "degree"),
            ("", 1, "header"),
        ];
        for (text, line, needle) in cases {
            match parse_graph(text) {
                Err(Error::Parse { line: l, msg }) => {
                    assert_eq!(l, line, "{text:?}: {msg}");
                    assert!(msg.contains(needle), "{text:?}: {msg}");
                }
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn k4_cuts_and_energies() {
        let g = RegularGraph::k4();
        let s = SpinAssignment::new(vec![1, 1, -1, -1]).unwrap();
        assert_eq!(cut_size(&g, &s).unwrap(), 4);
        assert_eq!(config_energy(&g, &s, 1.0).unwrap(), -2.0);
        assert_eq!(config_energy(&g, &SpinAssignment::uniform(4), 1.5).unwrap(), 9.0);
        assert!(cut_size(&g, &SpinAssignment::uniform(3)).is_err());
    }

    #[test]
    fn k4_energy_minimum_by_enumeration() {
        let g = RegularGraph::k4();
        let energies: Vec<f64> =
            (0..16).map(|c| config_energy(&g, &SpinAssignment::from_code(c, 4), 1.0).unwrap()).collect();
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, -2.0);
        assert_eq!(energies.iter().filter(|&&e| e == min).count(), 6);
    }

    #[test]
    fn code_round_trip() {
        let s = SpinAssignment::from_code(0b1010, 4);
        assert_eq!(s.spins(), &[1, -1, 1, -1]);
        assert_eq!(s.code(), 0b1010);
        assert!(SpinAssignment::new(vec![1, 0]).is_err());
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(half_n in 2usize..30, seed in any::<u64>()) {
            let g = generate_random_regular(2 * half_n, 3, seed).unwrap();
            prop_assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
        }

        #[test]
        fn energy_cut_duality(half_n in 2usize..30, seed in any::<u64>(), code in any::<u64>()) {
            let n = 2 * half_n;
            let g = generate_random_regular(n, 3, seed).unwrap();
            let s = SpinAssignment::from_code(code, n);
            let cut = cut_size(&g, &s).unwrap();
            let e = config_energy(&g, &s, 1.0).unwrap();
            prop_assert_eq!(e, 1.5 * n as f64 - 2.0 * cut as f64);
            // E/J has the parity of 3N/2
            prop_assert_eq!((e as i64 - (3 * n / 2) as i64).rem_euclid(2), 0);
            prop_assert_eq!(cut_size(&g, &s.flipped()).unwrap(), cut);
            prop_assert_eq!(cut_size(&g, &SpinAssignment::uniform(n)).unwrap(), 0);
        }
    }
}
