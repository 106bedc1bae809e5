use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Arc sign: cooperative (`+1`) or antagonistic (`-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn from_i8(s: i8) -> Option<Self> {
        match s {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// Arc `from -> to`: the state of `from` enters the dynamics of `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub sign: Sign,
}

/// Directed graph on nodes `0..n` with signed arcs.
///
/// Node indices are zero-based in the API. The JSON form uses one-based labels
/// `{"n": 3, "arcs": [[1, 2, 1], [2, 3, -1]]}` where each arc is `[from, to, sign]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedDigraph {
    n: usize,
    allow_self_loops: bool,
    arcs: BTreeMap<(usize, usize), Sign>,
    // in_neighbors[i] = sorted list of (j, sign) with j -> i
    in_neighbors: Vec<Vec<(usize, Sign)>>,
}

impl SignedDigraph {
    pub fn new(n: usize, arcs: impl IntoIterator<Item = Arc>) -> Result<Self> {
        Self::build(n, arcs, false)
    }

    /// Graph where `i -> i` arcs are permitted (the Vicsek neighbor convention).
    pub fn with_self_loops(n: usize, arcs: impl IntoIterator<Item = Arc>) -> Result<Self> {
        Self::build(n, arcs, true)
    }

    fn build(n: usize, arcs: impl IntoIterator<Item = Arc>, allow_self_loops: bool) -> Result<Self> {
        if n == 0 {
            return domain("graph must have at least one node");
        }
        let mut map = BTreeMap::new();
        for a in arcs {
            if a.from >= n || a.to >= n {
                return domain(format!(
                    "arc ({}, {}) references a node outside 1..={n}",
                    a.from + 1,
                    a.to + 1
                ));
            }
            if a.from == a.to && !allow_self_loops {
                return domain(format!("self-loop on node {} not allowed", a.from + 1));
            }
            if let Some(prev) = map.insert((a.from, a.to), a.sign) {
                if prev != a.sign {
                    return domain(format!(
                        "arc ({}, {}) listed with conflicting signs",
                        a.from + 1,
                        a.to + 1
                    ));
                }
            }
        }
        let mut in_neighbors = vec![Vec::new(); n];
        for (&(j, i), &s) in &map {
            in_neighbors[i].push((j, s));
        }
        Ok(Self {
            n,
            allow_self_loops,
            arcs: map,
            in_neighbors,
        })
    }

    /// Unsigned convenience constructor from `(from, to)` pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            n,
            pairs.iter().map(|&(from, to)| Arc {
                from,
                to,
                sign: Sign::Positive,
            }),
        )
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    /// Directed ring `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn ring(n: usize) -> Result<Self> {
        let pairs: Vec<_> = if n > 1 { (0..n).map(|i| (i, (i + 1) % n)).collect() } else { vec![] };
        Self::from_pairs(n, &pairs)
    }

    /// Directed chain `0 -> 1 -> ... -> n-1`.
    pub fn chain(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_pairs(n, &pairs)
    }

    /// Star with `center` influencing every other node.
    pub fn star(n: usize, center: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..n).filter(|&i| i != center).map(|i| (center, i)).collect();
        Self::from_pairs(n, &pairs)
    }

    /// All ordered pairs of distinct nodes.
    pub fn complete(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (j, i)))
            .collect();
        Self::from_pairs(n, &pairs)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn allows_self_loops(&self) -> bool {
        self.allow_self_loops
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        self.arcs.iter().map(|(&(from, to), &sign)| Arc { from, to, sign })
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arcs.contains_key(&(from, to))
    }

    pub fn sign(&self, from: usize, to: usize) -> Option<Sign> {
        self.arcs.get(&(from, to)).copied()
    }

    /// `N_i`: nodes with an arc into `i`, with the arc sign.
    pub fn in_neighbors(&self, i: usize) -> &[(usize, Sign)] {
        &self.in_neighbors[i]
    }

    /// True when every arc is positive.
    pub fn is_cooperative(&self) -> bool {
        self.arcs.values().all(|s| *s == Sign::Positive)
    }

    fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for &(j, i) in self.arcs.keys() {
            if i != j {
                out[j].push(i);
            }
        }
        out
    }

    /// Nodes reachable from `root` along directed paths (including `root`).
    pub fn reachable_from(&self, root: usize) -> Vec<bool> {
        bfs(&self.out_adjacency(), root)
    }

    /// Some node reaches every other node. Signs are ignored.
    pub fn is_quasi_strongly_connected(&self) -> bool {
        let out = self.out_adjacency();
        (0..self.n).any(|r| bfs(&out, r).iter().all(|&b| b))
    }

    /// Every node reaches every other node. Signs are ignored.
    pub fn is_strongly_connected(&self) -> bool {
        let out = self.out_adjacency();
        if !bfs(&out, 0).iter().all(|&b| b) {
            return false;
        }
        let mut rev = vec![Vec::new(); self.n];
        for (j, targets) in out.iter().enumerate() {
            for &i in targets {
                rev[i].push(j);
            }
        }
        bfs(&rev, 0).iter().all(|&b| b)
    }

    /// Union of arc sets with signs dropped (every arc becomes positive).
    pub fn unsigned_union<'a>(n: usize, graphs: impl IntoIterator<Item = &'a SignedDigraph>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut self_loops = false;
        for g in graphs {
            if g.n != n {
                return domain(format!("graph has {} nodes but union expects {n}", g.n));
            }
            self_loops |= g.allow_self_loops;
            pairs.extend(g.arcs.keys().copied());
        }
        Self::build(
            n,
            pairs.into_iter().map(|(from, to)| Arc {
                from,
                to,
                sign: Sign::Positive,
            }),
            self_loops,
        )
    }
}

fn bfs(adj: &[Vec<usize>], root: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
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

pub fn is_quasi_strongly_connected(g: &SignedDigraph) -> bool {
    g.is_quasi_strongly_connected()
}

pub fn is_strongly_connected(g: &SignedDigraph) -> bool {
    g.is_strongly_connected()
}

#[derive(Serialize, Deserialize)]
struct DigraphWire {
    n: usize,
    arcs: Vec<(i64, i64, i8)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    allow_self_loops: bool,
}

impl Serialize for SignedDigraph {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        DigraphWire {
            n: self.n,
            arcs: self
                .arcs()
                .map(|a| (a.from as i64 + 1, a.to as i64 + 1, a.sign.as_i8()))
                .collect(),
            allow_self_loops: self.allow_self_loops,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignedDigraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = DigraphWire::deserialize(d)?;
        let mut arcs = Vec::with_capacity(wire.arcs.len());
        for (j, i, s) in wire.arcs {
            if j < 1 || i < 1 {
                return Err(D::Error::custom(format!("node labels are 1-based, got arc [{j}, {i}]")));
            }
            let sign = Sign::from_i8(s)
                .ok_or_else(|| D::Error::custom(format!("arc sign must be 1 or -1, got {s}")))?;
            arcs.push(Arc {
                from: (j - 1) as usize,
                to: (i - 1) as usize,
                sign,
            });
        }
        SignedDigraph::build(wire.n, arcs, wire.allow_self_loops).map_err(D::Error::custom)
    }
}
