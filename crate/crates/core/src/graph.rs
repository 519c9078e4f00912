//! Communication topology.
//!
//! An edge `(i, j)` means agent `j` is a neighbor of agent `i`: agent `i`
//! receives `j`'s belief. Undirected graphs are stored as symmetric pairs so
//! the engine only ever sees one adjacency abstraction.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::error::{param, Error, Result};
use crate::rng::StreamRng;

pub type AgentId = usize;

/// Attempts made by [`generate_k_regular`] before giving up.
pub const DEFAULT_ATTEMPT_BUDGET: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n_agents: usize,
    neighbors: Vec<Vec<AgentId>>,
}

impl Network {
    /// Build a network from directed pairs `(i, j)`, "j is a neighbor of i".
    ///
    /// Duplicate pairs collapse; self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(n_agents: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (AgentId, AgentId)>,
    {
        if n_agents == 0 {
            return param("a network needs at least one agent");
        }
        let mut sets = vec![BTreeSet::new(); n_agents];
        for (i, j) in edges {
            if i >= n_agents || j >= n_agents {
                return param(format!("edge ({i}, {j}) out of range for {n_agents} agents"));
            }
            if i == j {
                return param(format!("self-loop on agent {i}"));
            }
            sets[i].insert(j);
        }
        Ok(Self { n_agents, neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect() })
    }

    /// Like [`Network::from_edges`] but inserts both directions of each pair.
    pub fn undirected<I>(n_agents: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (AgentId, AgentId)>,
    {
        let pairs: Vec<_> = edges.into_iter().flat_map(|(i, j)| [(i, j), (j, i)]).collect();
        Self::from_edges(n_agents, pairs)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Sorted neighbor list `N_i`.
    pub fn neighbors(&self, i: AgentId) -> Result<&[AgentId]> {
        match self.neighbors.get(i) {
            Some(n) => Ok(n),
            None => param(format!("agent {i} out of range for {} agents", self.n_agents)),
        }
    }

    pub(crate) fn neighbors_unchecked(&self, i: AgentId) -> &[AgentId] {
        &self.neighbors[i]
    }

    /// All edges in ascending `(i, j)` order.
    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, ns)| ns.iter().map(move |&j| (i, j)))
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    pub fn out_degree(&self, i: AgentId) -> usize {
        self.neighbors[i].len()
    }

    pub fn in_degree(&self, j: AgentId) -> usize {
        self.neighbors.iter().filter(|ns| ns.binary_search(&j).is_ok()).count()
    }

    /// True when every edge is present in both directions.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(i, j)| self.neighbors[j].binary_search(&i).is_ok())
    }

    /// True iff every agent reaches every other agent along directed edges.
    pub fn is_strongly_connected(&self) -> bool {
        let forward = self.reach_from(0, false);
        let backward = self.reach_from(0, true);
        forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
    }

    /// Ordered pairs `(a, b)` such that `b` is not reachable from `a`.
    pub fn unreachable_pairs(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for a in 0..self.n_agents {
            let reach = self.reach_from(a, false);
            out.extend(reach.iter().enumerate().filter(|(_, &r)| !r).map(|(b, _)| (a, b)));
        }
        out
    }

    fn reach_from(&self, start: AgentId, reverse: bool) -> Vec<bool> {
        let mut rev = Vec::new();
        if reverse {
            rev = vec![Vec::new(); self.n_agents];
            for (i, j) in self.edges() {
                rev[j].push(i);
            }
        }
        let adj = if reverse { &rev } else { &self.neighbors };
        let mut seen = vec![false; self.n_agents];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Serialize as an edge list, one directed `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# {} agents\n", self.n_agents);
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }
}

/// Parse an edge-list text: `i j` per line, 0-indexed, `#` comments and blank
/// lines ignored. When `n_agents` is `None` it is inferred as max id + 1.
pub fn parse_edge_list(text: &str, n_agents: Option<usize>, undirected: bool) -> Result<Network> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: String| Error::Parse { line: lineno + 1, message };
        if fields.len() != 2 {
            return Err(bad(format!("expected two agent ids, got {line:?}")));
        }
        let parse = |f: &str| f.parse::<usize>().map_err(|e| bad(format!("{f:?}: {e}")));
        pairs.push((parse(fields[0])?, parse(fields[1])?));
    }
    let inferred = pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    let n = n_agents.unwrap_or(inferred);
    if undirected {
        Network::undirected(n, pairs)
    } else {
        Network::from_edges(n, pairs)
    }
}

pub fn read_edge_list(path: &Path, n_agents: Option<usize>, undirected: bool) -> Result<Network> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text, n_agents, undirected)
}

/// Random undirected `k`-regular strongly connected graph.
pub fn generate_k_regular(n: usize, k: usize, seed: u64) -> Result<Network> {
    generate_k_regular_with_budget(n, k, seed, DEFAULT_ATTEMPT_BUDGET)
}

/// Stub pairing with rejection: shuffle `n * k` half-edges, pair them up, and
/// retry on self-loops, multi-edges or a disconnected result.
pub fn generate_k_regular_with_budget(n: usize, k: usize, seed: u64, budget: usize) -> Result<Network> {
    if k == 0 || n <= k {
        return param(format!("k-regular graph needs n > k >= 1, got n={n}, k={k}"));
    }
    if !(n * k).is_multiple_of(2) {
        return param(format!("no {k}-regular graph on {n} vertices: n*k must be even"));
    }
    let mut rng = StreamRng::seed_from_u64(seed);
    let mut stubs: Vec<AgentId> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    let mut rejected_disconnected = 0usize;
    for _ in 0..budget {
        stubs.shuffle(&mut rng);
        let mut adj = vec![BTreeSet::new(); n];
        let simple = stubs.chunks_exact(2).all(|pair| {
            let (u, v) = (pair[0], pair[1]);
            u != v && adj[u].insert(v) && adj[v].insert(u)
        });
        if !simple {
            continue;
        }
        let g = Network { n_agents: n, neighbors: adj.into_iter().map(|s| s.into_iter().collect()).collect() };
        if g.is_strongly_connected() {
            return Ok(g);
        }
        rejected_disconnected += 1;
    }
    Err(Error::GenerationFailure {
        attempts: budget,
        reason: format!(
            "no simple connected {k}-regular graph on {n} vertices \
             ({rejected_disconnected} simple candidates were disconnected)"
        ),
    })
}

/// Ring lattice: each agent linked to its `k/2` nearest agents on each side,
/// plus the antipodal agent when `k` is odd.
pub fn circulant(n: usize, k: usize) -> Result<Network> {
    if k == 0 || n <= k {
        return param(format!("circulant graph needs n > k >= 1, got n={n}, k={k}"));
    }
    if k % 2 == 1 && n % 2 == 1 {
        return param(format!("odd-degree circulant needs an even n, got n={n}, k={k}"));
    }
    let mut pairs = Vec::with_capacity(n * k);
    for i in 0..n {
        for d in 1..=k / 2 {
            pairs.push((i, (i + d) % n));
        }
        if k % 2 == 1 {
            pairs.push((i, (i + n / 2) % n));
        }
    }
    Network::undirected(n, pairs)
}
