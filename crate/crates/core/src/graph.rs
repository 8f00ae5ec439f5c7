//! Undirected communication graphs.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_TRIES: usize = 1000;

/// Undirected simple graph on nodes `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Self-loops are rejected and
    /// duplicate pairs (in either orientation) collapse to one edge.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut edges = BTreeSet::new();
        for (i, j) in pairs {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, len: n });
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop on node {i}")));
            }
            edges.insert((i.min(j), i.max(j)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { n, edges, adj })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::from_edges(n, pairs)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let mut pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            pairs.push((n - 1, 0));
        }
        Self::from_edges(n, pairs)
    }

    /// G(n, p) sample, resampled until connected.
    ///
    /// Every unordered pair is included independently with probability `p`.
    /// The RNG stream is consumed across retries, so the returned graph is a
    /// deterministic function of `(n, p, seed)`.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64, max_tries: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..max_tries.max(1) {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(p) {
                        pairs.push((i, j));
                    }
                }
            }
            let g = Self::from_edges(n, pairs)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::NotConnectedAfterRetries { n, p, tries: max_tries })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.adj
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange { index: i, len: self.n })
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n]; self.n];
        for &(i, j) in &self.edges {
            a[i][j] = 1;
            a[j][i] = 1;
        }
        a
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n
    }

    /// Edge-list text: a `# nodes: n` header followed by one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes: {}\n", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    /// Parses the edge-list form. Blank lines and `#` comments are ignored;
    /// without a `# nodes:` header the node count is one past the largest index.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut declared = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(count) = comment.trim().strip_prefix("nodes:") {
                    let n = count.trim().parse::<usize>().map_err(|e| Error::EdgeListParse {
                        line: idx + 1,
                        msg: e.to_string(),
                    })?;
                    declared = Some(n);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::EdgeListParse { line: idx + 1, msg: "expected two node indices".into() })?
                    .parse::<usize>()
                    .map_err(|e| Error::EdgeListParse { line: idx + 1, msg: e.to_string() })
            };
            let i = next()?;
            let j = next()?;
            if it.next().is_some() {
                return Err(Error::EdgeListParse { line: idx + 1, msg: "trailing tokens".into() });
            }
            pairs.push((i, j));
        }
        let inferred = pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(1);
        let n = declared.unwrap_or(inferred);
        Self::from_edges(n, pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_er_is_trivially_connected() {
        let g = Graph::erdos_renyi(1, 0.0, 3, 10).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.is_connected());
    }

    #[test]
    fn two_nodes_full_probability() {
        let g = Graph::erdos_renyi(2, 1.0, 0, 1).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn twenty_node_er_is_connected_and_symmetric() {
        let g = Graph::erdos_renyi(20, 0.2, 42, DEFAULT_MAX_TRIES).unwrap();
        assert!(g.is_connected());
        let a = g.adjacency();
        for i in 0..20 {
            assert_eq!(a[i][i], 0);
            for j in 0..20 {
                assert_eq!(a[i][j], a[j][i]);
            }
        }
        assert_eq!(g, Graph::erdos_renyi(20, 0.2, 42, DEFAULT_MAX_TRIES).unwrap());
    }

    #[test]
    fn er_exhausts_retries() {
        let err = Graph::erdos_renyi(10, 0.0, 1, 5).unwrap_err();
        assert!(matches!(err, Error::NotConnectedAfterRetries { tries: 5, .. }));
        assert!(Graph::erdos_renyi(3, 1.5, 1, 5).is_err());
    }

    #[test]
    fn neighbor_lists() {
        let p = Graph::path(3).unwrap();
        assert_eq!(p.neighbors(1).unwrap(), &[0, 2]);
        assert_eq!(p.neighbors(0).unwrap(), &[1]);
        let k = Graph::complete(4).unwrap();
        assert_eq!(k.neighbors(2).unwrap(), &[0, 1, 3]);
        assert!(matches!(p.neighbors(3), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn connectivity() {
        assert!(Graph::from_edges(1, []).unwrap().is_connected());
        assert!(!Graph::from_edges(2, []).unwrap().is_connected());
        assert!(Graph::cycle(5).unwrap().is_connected());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::erdos_renyi(12, 0.3, 9, DEFAULT_MAX_TRIES).unwrap();
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, back);
        let bare = Graph::from_edge_list("0 1\n1 2\n\n# comment\n").unwrap();
        assert_eq!(bare.node_count(), 3);
        assert!(matches!(
            Graph::from_edge_list("0 x"),
            Err(Error::EdgeListParse { line: 1, .. })
        ));
        assert!(Graph::from_edge_list("0 0").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn er_graphs_are_symmetric_and_connected(n in 1usize..15, p in 0.3f64..1.0, seed in any::<u64>()) {
                let g = Graph::erdos_renyi(n, p, seed, 5000).unwrap();
                prop_assert!(g.is_connected());
                for i in 0..n {
                    for &j in g.neighbors(i).unwrap() {
                        prop_assert!(g.neighbors(j).unwrap().contains(&i));
                        prop_assert!(i != j);
                    }
                }
            }
        }
    }
}
