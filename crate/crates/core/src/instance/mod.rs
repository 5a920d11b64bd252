//! Pooling networks: data model, text format, validation and the random
//! Haverly-copy generator.

mod fixtures;
mod format;
mod generator;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use fixtures::{bental4, fixture, haverly, FIXTURE_NAMES};
pub use format::{parse_instance, write_instance};
pub use generator::{generate_random, GeneratorConfig, HaverlyData, HAVERLY};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Pool,
    Output,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Input => "input",
            NodeKind::Pool => "pool",
            NodeKind::Output => "output",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
    pub capacity: Option<f64>,
}

/// Directed pooling network. Nodes and arcs are addressed by their index in
/// `nodes` and `arcs`; attribute data is keyed by `(attribute, node)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolingInstance {
    pub name: String,
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    pub attributes: Vec<String>,
    /// λ_ki for inputs i.
    pub input_quality: BTreeMap<(usize, usize), f64>,
    /// μ_kj for outputs j.
    pub output_upper: BTreeMap<(usize, usize), f64>,
}

impl PoolingInstance {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    fn of_kind(&self, kind: NodeKind) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].kind == kind).collect()
    }

    pub fn inputs(&self) -> Vec<usize> {
        self.of_kind(NodeKind::Input)
    }

    pub fn pools(&self) -> Vec<usize> {
        self.of_kind(NodeKind::Pool)
    }

    pub fn outputs(&self) -> Vec<usize> {
        self.of_kind(NodeKind::Output)
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.nodes[node].kind
    }

    /// Map from `(from, to)` to arc index.
    pub fn arc_map(&self) -> HashMap<(usize, usize), usize> {
        self.arcs.iter().enumerate().map(|(a, arc)| ((arc.from, arc.to), a)).collect()
    }

    pub fn in_arcs(&self, node: usize) -> Vec<usize> {
        (0..self.arcs.len()).filter(|&a| self.arcs[a].to == node).collect()
    }

    pub fn out_arcs(&self, node: usize) -> Vec<usize> {
        (0..self.arcs.len()).filter(|&a| self.arcs[a].from == node).collect()
    }

    /// Tightest capacity implied for an arc: its own bound and the
    /// capacities of both endpoints.
    pub fn arc_bound(&self, arc: usize) -> f64 {
        let a = &self.arcs[arc];
        let ends = self.nodes[a.from].capacity.min(self.nodes[a.to].capacity);
        a.capacity.map_or(ends, |c| c.min(ends))
    }

    /// Excess γ_kij = λ_ki − μ_kj.
    pub fn gamma(&self, attribute: usize, input: usize, output: usize) -> f64 {
        self.input_quality[&(attribute, input)] - self.output_upper[&(attribute, output)]
    }

    /// Returns one description per violated invariant; empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashMap::new();
        for (n, node) in self.nodes.iter().enumerate() {
            if let Some(prev) = seen.insert(node.id.as_str(), n) {
                out.push(format!("node '{}' defined twice (#{prev} and #{n})", node.id));
            }
            if !(node.capacity >= 0.0) || node.capacity.is_infinite() {
                out.push(format!("node '{}' has invalid capacity {}", node.id, node.capacity));
            }
        }
        let mut pairs = HashMap::new();
        for (a, arc) in self.arcs.iter().enumerate() {
            if arc.from >= self.nodes.len() || arc.to >= self.nodes.len() {
                out.push(format!("arc #{a} references a missing node"));
                continue;
            }
            let (f, t) = (&self.nodes[arc.from], &self.nodes[arc.to]);
            let admissible = matches!(
                (f.kind, t.kind),
                (NodeKind::Input, NodeKind::Pool) | (NodeKind::Pool, NodeKind::Output) | (NodeKind::Input, NodeKind::Output)
            );
            if !admissible {
                let what = if f.kind == NodeKind::Pool && t.kind == NodeKind::Pool {
                    "pool-to-pool arc"
                } else {
                    "arc of inadmissible class"
                };
                out.push(format!("{what} {} -> {} ({} -> {})", f.id, t.id, f.kind, t.kind));
            }
            if pairs.insert((arc.from, arc.to), a).is_some() {
                out.push(format!("duplicate arc {} -> {}", f.id, t.id));
            }
            if let Some(c) = arc.capacity {
                if !(c >= 0.0) || c.is_infinite() {
                    out.push(format!("arc {} -> {} has invalid capacity {c}", f.id, t.id));
                }
            }
            if !arc.cost.is_finite() {
                out.push(format!("arc {} -> {} has non-finite cost", f.id, t.id));
            }
        }
        for p in self.pools() {
            let id = &self.nodes[p].id;
            if self.in_arcs(p).is_empty() {
                out.push(format!("pool '{id}' has no incoming arc"));
            }
            if self.out_arcs(p).is_empty() {
                out.push(format!("pool '{id}' has no outgoing arc"));
            }
        }
        for (k, attr) in self.attributes.iter().enumerate() {
            for i in self.inputs() {
                if !self.input_quality.contains_key(&(k, i)) {
                    out.push(format!("missing quality ({attr}, {})", self.nodes[i].id));
                }
            }
            for j in self.outputs() {
                if !self.output_upper.contains_key(&(k, j)) {
                    out.push(format!("missing bound ({attr}, {})", self.nodes[j].id));
                }
            }
        }
        for (&(k, n), v) in &self.input_quality {
            if k >= self.attributes.len() || n >= self.nodes.len() || self.nodes[n].kind != NodeKind::Input {
                out.push(format!("quality entry ({k}, #{n}) is not on an input"));
            } else if !v.is_finite() {
                out.push(format!("quality ({}, {}) is not finite", self.attributes[k], self.nodes[n].id));
            }
        }
        for (&(k, n), v) in &self.output_upper {
            if k >= self.attributes.len() || n >= self.nodes.len() || self.nodes[n].kind != NodeKind::Output {
                out.push(format!("bound entry ({k}, #{n}) is not on an output"));
            } else if !v.is_finite() {
                out.push(format!("bound ({}, {}) is not finite", self.attributes[k], self.nodes[n].id));
            }
        }
        out
    }

    /// Number of connected components of the underlying undirected graph.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for a in &self.arcs {
            uf.union(a.from, a.to);
        }
        (0..self.nodes.len()).filter(|&n| uf.find(n) == n).count()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
