//! Random instances built from disjoint Haverly copies joined by extra arcs.
//!
//! The random stream is ChaCha8 seeded with `seed_from_u64(seed)`. Per copy,
//! in order: the variant (uniform over 1..=3), then φ (uniform over
//! `phi_range`). Then each added arc draws one index into the current
//! candidate list, which is kept in lexicographic `(from, to)` node order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Arc, Node, NodeKind, PoolingInstance, UnionFind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub copies: usize,
    pub added_edges: usize,
    pub seed: u64,
    pub phi_range: (f64, f64),
}

impl GeneratorConfig {
    pub fn new(copies: usize, added_edges: usize, seed: u64) -> Self {
        Self {
            copies,
            added_edges,
            seed,
            phi_range: (0.5, 2.0),
        }
    }
}

/// Raw data of one Haverly variant.
#[derive(Clone, Copy, Debug)]
pub struct HaverlyData {
    /// `(id, material cost, sulfur)`
    pub inputs: [(&'static str, f64, f64); 3],
    /// `(id, price, sulfur bound, capacity)`
    pub outputs: [(&'static str, f64, f64, f64); 2],
    pub input_capacity: f64,
    pub pool_capacity: f64,
}

const fn variant(b_cost: f64, x_capacity: f64) -> HaverlyData {
    HaverlyData {
        inputs: [("A", 6.0, 3.0), ("B", b_cost, 1.0), ("C", 10.0, 2.0)],
        outputs: [("X", 9.0, 2.5, x_capacity), ("Y", 15.0, 1.5, 200.0)],
        input_capacity: 600.0,
        pool_capacity: 600.0,
    }
}

pub const HAVERLY: [HaverlyData; 3] = [variant(16.0, 100.0), variant(16.0, 600.0), variant(13.0, 100.0)];

/// Arcs of one copy, as `(input index | pool, output index | pool)` in
/// local numbering: inputs 0..3, pool 3, outputs 4..6.
const COPY_ARCS: [(usize, usize); 6] = [(0, 3), (1, 3), (3, 4), (3, 5), (2, 4), (2, 5)];

pub fn generate_random(config: &GeneratorConfig) -> Result<PoolingInstance> {
    if config.copies == 0 {
        return Err(Error::Generator("copies must be positive".into()));
    }
    let (lo, hi) = config.phi_range;
    if !(lo <= hi) || lo <= 0.0 {
        return Err(Error::Generator(format!("invalid phi range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut inst = PoolingInstance {
        name: format!("rand_c{}_e{}_s{}", config.copies, config.added_edges, config.seed),
        attributes: vec!["sulfur".into()],
        ..Default::default()
    };
    // material cost of inputs, price of outputs; zero elsewhere
    let mut material = Vec::new();
    let mut price = Vec::new();

    for c in 0..config.copies {
        let v = rng.gen_range(0..3);
        let phi = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        let data = &HAVERLY[v];
        let base = inst.nodes.len();
        for &(id, cost, sulfur) in &data.inputs {
            inst.input_quality.insert((0, inst.nodes.len()), sulfur * phi);
            push_node(&mut inst, c, id, NodeKind::Input, data.input_capacity);
            material.push(cost);
            price.push(0.0);
        }
        push_node(&mut inst, c, "P", NodeKind::Pool, data.pool_capacity);
        material.push(0.0);
        price.push(0.0);
        for &(id, p, bound, cap) in &data.outputs {
            inst.output_upper.insert((0, inst.nodes.len()), bound * phi);
            push_node(&mut inst, c, id, NodeKind::Output, cap);
            material.push(0.0);
            price.push(p);
        }
        for &(f, t) in &COPY_ARCS {
            let (from, to) = (base + f, base + t);
            inst.arcs.push(Arc {
                from,
                to,
                cost: material[from] - price[to],
                capacity: None,
            });
        }
    }

    let n = inst.nodes.len();
    let mut present = vec![false; n * n];
    for a in &inst.arcs {
        present[a.from * n + a.to] = true;
    }
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for from in 0..n {
        for to in 0..n {
            let ok = matches!(
                (inst.nodes[from].kind, inst.nodes[to].kind),
                (NodeKind::Input, NodeKind::Pool) | (NodeKind::Pool, NodeKind::Output) | (NodeKind::Input, NodeKind::Output)
            );
            if ok && !present[from * n + to] {
                candidates.push((from, to));
            }
        }
    }
    if config.added_edges > candidates.len() {
        return Err(Error::Generator(format!(
            "{} arcs requested but only {} admissible arcs are absent",
            config.added_edges,
            candidates.len()
        )));
    }

    let mut uf = UnionFind::new(n);
    for a in &inst.arcs {
        uf.union(a.from, a.to);
    }
    let mut components = config.copies;
    for _ in 0..config.added_edges {
        let pick = if components > 1 {
            let joining: Vec<usize> = (0..candidates.len())
                .filter(|&c| {
                    let (f, t) = candidates[c];
                    uf.find(f) != uf.find(t)
                })
                .collect();
            joining[rng.gen_range(0..joining.len())]
        } else {
            rng.gen_range(0..candidates.len())
        };
        let (from, to) = candidates.remove(pick);
        if uf.union(from, to) {
            components -= 1;
        }
        inst.arcs.push(Arc {
            from,
            to,
            cost: material[from] - price[to],
            capacity: None,
        });
    }
    debug_assert!(inst.validate().is_empty());
    Ok(inst)
}

fn push_node(inst: &mut PoolingInstance, copy: usize, id: &str, kind: NodeKind, capacity: f64) {
    inst.nodes.push(Node {
        id: format!("c{copy:02}_{id}"),
        kind,
        capacity,
    });
}
