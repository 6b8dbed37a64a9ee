use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected simple graph on nodes `0..n` with exactly one connected
/// component.
///
/// Edges are stored canonically (`u < v`, sorted lexicographically), which is
/// also the order they are written to disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    neighbors: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[u32; 2]>,
}

impl Graph {
    /// Validates and canonicalises an edge list.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let g = Self::build(n, edges)?;
        let components = g.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    fn build(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        if n == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one node".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} nodes is too many")));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            list.push((a as u32, b as u32));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &list {
            neighbors[u as usize].push(v);
            neighbors[v as usize].push(u);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Graph { n, edges: list, neighbors })
    }

    pub fn complete(n: usize) -> Graph {
        Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).expect("complete graph")
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3, "a cycle needs at least three nodes");
        Graph::new(n, (0..n).map(|u| (u, (u + 1) % n))).expect("cycle")
    }

    pub fn path(n: usize) -> Graph {
        Graph::new(n, (1..n).map(|u| (u - 1, u))).expect("path")
    }

    pub fn star(n: usize) -> Graph {
        Graph::new(n, (1..n).map(|u| (0, u))).expect("star")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&(v as u32)).is_ok()
    }

    /// Dense symmetric 0/1 adjacency matrix, row-major.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n]; self.n];
        for &(u, v) in &self.edges {
            a[u as usize][v as usize] = 1;
            a[v as usize][u as usize] = 1;
        }
        a
    }

    /// Neighbourhood of each node as a bitmask; only valid for `n <= 64`.
    pub fn neighbor_masks(&self) -> Vec<u64> {
        assert!(self.n <= 64, "bitmask neighbourhoods need n <= 64");
        self.neighbors
            .iter()
            .map(|nb| nb.iter().fold(0u64, |m, &v| m | (1 << v)))
            .collect()
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 1.0;
        }
        self.edges.len() as f64 / max_edges(self.n) as f64
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = Vec::new();
        let mut components = 0;
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            components += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v as usize);
                    }
                }
            }
        }
        components
    }

    /// 64-bit FNV-1a hash of the canonical edge list, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.n as u64);
        for &(u, v) in &self.edges {
            eat(((u as u64) << 32) | v as u64);
        }
        format!("{h:016x}")
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile { n: self.n, edges: self.edges.iter().map(|&(u, v)| [u, v]).collect() };
        serde_json::to_string(&file).expect("graph serialisation")
    }

    pub fn from_json(text: &str) -> Result<Graph> {
        let file: GraphFile = serde_json::from_str(text)?;
        Graph::new(file.n, file.edges.into_iter().map(|[u, v]| (u as usize, v as usize)))
    }

    /// Whitespace-separated `u v` pairs, one per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Parses an edge list. The node count is `n` if given, otherwise one more
    /// than the largest id. Blank lines and `#` comments are skipped.
    pub fn from_edge_list(text: &str, n: Option<usize>) -> Result<Graph> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(Error::Parse(format!("line {}: expected `u v`", lineno + 1))),
            }
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(1));
        Graph::new(n, edges)
    }

    /// Loads a graph, choosing the format from the extension (`.json` or
    /// anything else for an edge list).
    pub fn load(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Graph::from_json(&text)
        } else {
            Graph::from_edge_list(&text, None)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e == "json") {
            self.to_json()
        } else {
            self.to_edge_list()
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub fn max_edges(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Union-find connectivity test on a raw edge list.
pub(crate) fn is_connected(n: usize, edges: &[(u32, u32)]) -> bool {
    if edges.len() + 1 < n {
        return false;
    }
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let mut merged = 0;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a as usize] = b;
            merged += 1;
            if merged + 1 == n {
                return true;
            }
        }
    }
    merged + 1 == n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(Graph::new(3, [(0, 0), (0, 1), (1, 2)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(3, [(0, 1), (1, 0), (1, 2)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(3, [(0, 3)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(4, [(0, 1), (2, 3)]), Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn canonical_order() {
        let g = Graph::new(4, [(3, 2), (1, 0), (2, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (2, 3)]);
        assert_eq!(g.to_json(), r#"{"n":4,"edges":[[0,1],[0,2],[2,3]]}"#);
        assert_eq!(g.to_edge_list(), "0 1\n0 2\n2 3\n");
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::from_edge_list("# header\n0 1\n\n1 2  # trailing\n", None).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.n_edges(), 2);
        assert!(Graph::from_edge_list("0 1 2\n", None).is_err());
        assert!(Graph::from_edge_list("0 x\n", None).is_err());
    }

    #[test]
    fn union_find_agrees_with_traversal() {
        assert!(is_connected(1, &[]));
        assert!(is_connected(3, &[(0, 1), (1, 2)]));
        assert!(!is_connected(4, &[(0, 1), (2, 3), (0, 3 - 2)]));
    }

    #[test]
    fn fingerprint_depends_on_edges() {
        assert_eq!(Graph::cycle(5).fingerprint(), Graph::cycle(5).fingerprint());
        assert_ne!(Graph::cycle(5).fingerprint(), Graph::path(5).fingerprint());
    }
}
