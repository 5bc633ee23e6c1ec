//! Interaction networks and the spectral-free constants derived from them.
//!
//! Vertices are numbered `1..=n` at every public boundary (constructors,
//! edge-list files, reports). Internally adjacency is stored 0-based.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the complement `V x V \ E` is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementConvention {
    /// Diagonal pairs `(i, i)` belong to the complement: `N^2 - |E|`.
    #[default]
    WithDiagonal,
    /// Only distinct pairs are counted: `N^2 - N - |E|`.
    OffDiagonal,
}

impl ComplementConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            ComplementConvention::WithDiagonal => "with_diagonal",
            ComplementConvention::OffDiagonal => "off_diagonal",
        }
    }
}

impl fmt::Display for ComplementConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComplementConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "with_diagonal" => Ok(ComplementConvention::WithDiagonal),
            "off_diagonal" => Ok(ComplementConvention::OffDiagonal),
            other => Err(Error::Parse(format!(
                "unknown complement convention `{other}` (expected with_diagonal or off_diagonal)"
            ))),
        }
    }
}

/// The network families used in the numerical experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Complete graph.
    G0,
    /// Path plus three hubs `1, floor(N/2), N` joined to everyone.
    G1,
    /// Path `|i - j| = 1`.
    G2,
    /// Circulant cycle with a single parity-dependent offset.
    G3,
    /// Ring plus hubs at every `i = 1 (mod 10)`.
    G4,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::G0, Family::G1, Family::G2, Family::G3, Family::G4];

    pub fn min_vertices(self) -> usize {
        match self {
            Family::G3 => 5,
            _ => 2,
        }
    }

    /// Closed-form ordered edge count, when one is tabulated for `n`.
    pub fn expected_edge_count(self, n: usize) -> Option<usize> {
        match self {
            Family::G0 => Some(n * (n - 1)),
            Family::G1 if n <= 5 => Some(n * (n - 1)),
            Family::G1 => Some(8 * n - 22),
            Family::G2 => Some(2 * (n - 1)),
            Family::G3 => Some(2 * n),
            Family::G4 => {
                let h = n.div_ceil(10);
                let base = 2 * n * h + 2 * n - h * h - 5 * h;
                Some(if n % 10 == 1 { base + 2 } else { base })
            }
        }
    }

    /// Closed-form diameter, when one is tabulated for `n`.
    pub fn expected_diameter(self, n: usize) -> Option<usize> {
        match self {
            Family::G0 => Some(1),
            Family::G1 if n <= 5 => Some(1),
            Family::G1 => Some(2),
            Family::G2 => Some(n - 1),
            Family::G3 => Some(n / 2),
            Family::G4 if n >= 4 => Some(2),
            Family::G4 => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::G0 => "G0",
            Family::G1 => "G1",
            Family::G2 => "G2",
            Family::G3 => "G3",
            Family::G4 => "G4",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "G0" | "g0" => Ok(Family::G0),
            "G1" | "g1" => Ok(Family::G1),
            "G2" | "g2" => Ok(Family::G2),
            "G3" | "g3" => Ok(Family::G3),
            "G4" | "g4" => Ok(Family::G4),
            other => Err(Error::InvalidFamily(other.to_string())),
        }
    }
}

/// Offset used by the circulant family on `n` vertices.
pub fn circulant_offset(n: usize) -> usize {
    if n % 2 == 1 {
        2
    } else if n % 4 == 0 {
        n / 2 - 1
    } else {
        n / 2 - 2
    }
}

/// Undirected graph stored as a symmetric set of ordered arcs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    arcs: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 1-based ordered pairs. Duplicates are merged;
    /// self-loops and out-of-range vertices are rejected. Symmetry is not
    /// enforced here (see [`Graph::validate`]).
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (i, j) in arcs {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::InvalidGraph(format!("arc ({i}, {j}) outside vertex range 1..={n}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            set.insert((i - 1, j - 1));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &set {
            neighbors[i].push(j);
        }
        Ok(Graph { n, neighbors, arcs: set.into_iter().collect() })
    }

    /// Builds a graph from unordered 1-based pairs, inserting both directions.
    pub fn from_undirected<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Graph::from_arcs(n, pairs.into_iter().flat_map(|(i, j)| [(i, j), (j, i)]))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Graph::from_arcs(n, (1..=n).flat_map(|i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j))))
    }

    pub fn family(family: Family, n: usize) -> Result<Self> {
        if n < family.min_vertices() {
            return Err(Error::InvalidGraph(format!(
                "family {family} needs at least {} vertices, got {n}",
                family.min_vertices()
            )));
        }
        let path = (1..n).map(|i| (i, i + 1));
        match family {
            Family::G0 => Graph::complete(n),
            Family::G1 if n <= 5 => Graph::complete(n),
            Family::G1 => {
                let hubs = [1, n / 2, n];
                let spokes = hubs.into_iter().flat_map(|h| (1..=n).filter(move |&j| j != h).map(move |j| (h, j)));
                Graph::from_undirected(n, path.chain(spokes))
            }
            Family::G2 => Graph::from_undirected(n, path),
            Family::G3 => {
                let offset = circulant_offset(n);
                Graph::from_undirected(n, (0..n).map(|i| (i + 1, (i + offset) % n + 1)))
            }
            Family::G4 => {
                let ring = path.chain(std::iter::once((n, 1)));
                let spokes =
                    (1..=n).filter(|h| h % 10 == 1).flat_map(|h| (1..=n).filter(move |&j| j != h).map(move |j| (h, j)));
                Graph::from_undirected(n, ring.chain(spokes))
            }
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// Number of ordered arcs (each undirected edge counted twice).
    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Ordered arcs, 0-based, sorted lexicographically.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Out-neighbours of a 0-based vertex, sorted.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn validate(&self) -> Validation {
        Validation { symmetric: self.is_symmetric(), connected: self.is_connected() }
    }

    pub fn is_symmetric(&self) -> bool {
        self.arcs.iter().all(|&(i, j)| self.has_arc(j, i))
    }

    /// Connectivity of the underlying relation, by breadth-first search from
    /// vertex 1 along out-arcs.
    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(Option::is_some)
    }

    fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or_default();
            for &w in &self.neighbors[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Largest shortest-path length over all distinct vertex pairs.
    pub fn diameter(&self) -> Result<usize> {
        let mut diameter = 0;
        for s in 0..self.n {
            for d in self.bfs(s) {
                match d {
                    Some(d) => diameter = diameter.max(d),
                    None => return Err(Error::Disconnected),
                }
            }
        }
        Ok(diameter)
    }

    pub fn complement_size(&self, convention: ComplementConvention) -> usize {
        let n2 = self.n * self.n;
        match convention {
            ComplementConvention::WithDiagonal => n2 - self.arcs.len(),
            ComplementConvention::OffDiagonal => n2 - self.n - self.arcs.len(),
        }
    }

    pub fn connectivity_constant(&self, convention: ComplementConvention) -> Result<ConnectivityConstant> {
        let d = self.diameter()? as u64;
        let c = self.complement_size(convention) as u64;
        Ok(ConnectivityConstant { denominator: 1 + d * c })
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn metrics(&self, convention: ComplementConvention) -> GraphMetrics {
        let validation = self.validate();
        let diameter = self.diameter().ok();
        let complement_size = self.complement_size(convention);
        GraphMetrics {
            n_vertices: self.n,
            n_arcs: self.n_arcs(),
            diameter,
            complement_size,
            connectivity_constant: diameter
                .map(|d| ConnectivityConstant { denominator: 1 + (d * complement_size) as u64 }),
            max_degree: self.max_degree(),
            symmetric: validation.symmetric,
            connected: validation.connected,
            convention,
        }
    }

    /// Reads the edge-list format: first line `N`, then `i j` per line.
    /// Blank lines and `#` comments are ignored.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut n = None;
        let mut arcs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("edge list line {}: bad integer `{s}`", lineno + 1)))
            };
            match (n, fields.as_slice()) {
                (None, [count]) => n = Some(parse(count)?),
                (Some(_), [i, j]) => arcs.push((parse(i)?, parse(j)?)),
                _ => {
                    return Err(Error::Parse(format!(
                        "edge list line {}: expected {}",
                        lineno + 1,
                        if n.is_none() { "vertex count" } else { "`i j`" }
                    )))
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse("edge list is empty".into()))?;
        Graph::from_arcs(n, arcs)
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.n)?;
        for &(i, j) in &self.arcs {
            writeln!(out, "{} {}", i + 1, j + 1)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub symmetric: bool,
    pub connected: bool,
}

/// `L = 1 / (1 + d(G) |E^c|)`, stored exactly through its denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConnectivityConstant {
    pub denominator: u64,
}

impl ConnectivityConstant {
    pub fn value(self) -> f64 {
        1.0 / self.denominator as f64
    }
}

impl fmt::Display for ConnectivityConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator == 1 {
            f.write_str("1")
        } else {
            write!(f, "1/{}", self.denominator)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphMetrics {
    pub n_vertices: usize,
    pub n_arcs: usize,
    /// `None` when the graph is disconnected.
    pub diameter: Option<usize>,
    pub complement_size: usize,
    pub connectivity_constant: Option<ConnectivityConstant>,
    pub max_degree: usize,
    pub symmetric: bool,
    pub connected: bool,
    pub convention: ComplementConvention,
}
