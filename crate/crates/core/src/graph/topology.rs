use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_RESAMPLES: usize = 10_000;

/// Undirected communication graph over K agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    k: usize,
    /// Sorted, deduplicated, each stored as `(s, k)` with `s < k`.
    edges: Vec<(usize, usize)>,
    /// Closed neighborhoods: `N_k` includes `k`, sorted.
    neighbors: Vec<Vec<usize>>,
}

/// On-disk form: `{"K": int, "edges": [[s, k], ...]}`, 0-indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub edges: Vec<[usize; 2]>,
}

impl Topology {
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput(
                "topology needs at least one agent".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (s, t) in edges {
            if s >= k || t >= k {
                return Err(Error::InvalidInput(format!(
                    "edge ({s}, {t}) out of range for K = {k}"
                )));
            }
            if s == t {
                return Err(Error::InvalidInput(format!("self-loop at agent {s}")));
            }
            set.insert((s.min(t), s.max(t)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
        for &(s, t) in &edges {
            neighbors[s].push(t);
            neighbors[t].push(s);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Self {
            k,
            edges,
            neighbors,
        })
    }

    pub fn complete(k: usize) -> Result<Self> {
        Self::new(k, (0..k).flat_map(|s| ((s + 1)..k).map(move |t| (s, t))))
    }

    pub fn path(k: usize) -> Result<Self> {
        Self::new(k, (1..k).map(|t| (t - 1, t)))
    }

    pub fn ring(k: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..k).map(|t| (t - 1, t)).collect();
        if k > 2 {
            edges.push((k - 1, 0));
        }
        Self::new(k, edges)
    }

    /// Erdős–Rényi graph `G(k, p)`, resampled from the same seeded stream
    /// until connected.
    pub fn erdos_renyi(k: usize, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "edge probability must lie in (0, 1], got {p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_RESAMPLES {
            let mut edges = Vec::new();
            for s in 0..k {
                for t in (s + 1)..k {
                    if rng.random_bool(p) {
                        edges.push((s, t));
                    }
                }
            }
            let topo = Self::new(k, edges)?;
            if topo.is_connected() {
                return Ok(topo);
            }
        }
        Err(Error::Disconnected)
    }

    pub fn num_agents(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `N_k`, including `k` itself.
    pub fn neighborhood(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.neighbors[k].len() - 1
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.k];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.k
    }

    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            k: self.k,
            edges: self.edges.iter().map(|&(s, t)| [s, t]).collect(),
        }
    }

    pub fn from_file(file: &TopologyFile) -> Result<Self> {
        Self::new(file.k, file.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(&serde_json::from_str(&text)?)
    }
}
