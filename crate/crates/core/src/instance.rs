//! Partitioning instances: nodes with demographic and vote weights on a graph.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::InstanceError;

/// Deviation fractions are stored with this many parts per unit.
pub const TAU_DENOM: i128 = 1_000_000_000;

pub type Rational = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Pop,
    Vap,
    Bvap,
    Hvap,
    Dv16,
    Tv16,
    Dv20,
    Tv20,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub pop: u64,
    pub vap: u64,
    pub bvap: u64,
    pub hvap: u64,
    pub dv16: u64,
    pub tv16: u64,
    pub dv20: u64,
    pub tv20: u64,
}

impl Node {
    pub fn get(&self, f: Field) -> u64 {
        match f {
            Field::Pop => self.pop,
            Field::Vap => self.vap,
            Field::Bvap => self.bvap,
            Field::Hvap => self.hvap,
            Field::Dv16 => self.dv16,
            Field::Tv16 => self.tv16,
            Field::Dv20 => self.dv20,
            Field::Tv20 => self.tv20,
        }
    }

    fn check(&self, label: &ExternalId) -> Result<(), InstanceError> {
        let fail = |msg: &str| {
            Err(InstanceError::Validation {
                field: format!("node {label}"),
                msg: msg.to_string(),
            })
        };
        if self.bvap > self.vap {
            return fail("bvap exceeds vap");
        }
        if self.hvap > self.vap {
            return fail("hvap exceeds vap");
        }
        if self.vap > self.pop {
            return fail("vap exceeds pop");
        }
        if self.dv16 > self.tv16 {
            return fail("dv16 exceeds tv16");
        }
        if self.dv20 > self.tv20 {
            return fail("dv20 exceeds tv20");
        }
        Ok(())
    }
}

/// Node key as written in the source file.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExternalId {
    Int(i64),
    Str(String),
}

impl fmt::Display for ExternalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExternalId::Int(i) => write!(f, "{i}"),
            ExternalId::Str(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
    pub k: usize,
    tau: Rational,
    /// `external_ids[i]` is the file key of node `i`.
    pub external_ids: Vec<ExternalId>,
    /// All vote fields were present in the source.
    pub has_votes: bool,
    adj: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    id: ExternalId,
    pop: u64,
    #[serde(default)]
    vap: u64,
    #[serde(default)]
    bvap: u64,
    #[serde(default)]
    hvap: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dv16: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tv16: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dv20: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tv20: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    k: usize,
    tau: f64,
    nodes: Vec<RawNode>,
    edges: Vec<(ExternalId, ExternalId)>,
}

fn tau_from_f64(tau: f64) -> Result<Rational, InstanceError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(InstanceError::Validation {
            field: "tau".into(),
            msg: format!("{tau} is outside [0, 1]"),
        });
    }
    Ok(Rational::new((tau * TAU_DENOM as f64).round() as i128, TAU_DENOM))
}

impl Instance {
    /// Builds and validates an instance with dense ids.
    pub fn new(nodes: Vec<Node>, edges: Vec<(usize, usize)>, k: usize, tau: f64) -> Result<Self, InstanceError> {
        let ids = (0..nodes.len()).map(|i| ExternalId::Int(i as i64)).collect();
        Self::assemble(nodes, edges, k, tau_from_f64(tau)?, ids, true)
    }

    fn assemble(
        mut nodes: Vec<Node>,
        edges: Vec<(usize, usize)>,
        k: usize,
        tau: Rational,
        external_ids: Vec<ExternalId>,
        has_votes: bool,
    ) -> Result<Self, InstanceError> {
        let n = nodes.len();
        if n == 0 {
            return Err(InstanceError::Validation {
                field: "nodes".into(),
                msg: "instance has no nodes".into(),
            });
        }
        if k == 0 || k > n {
            return Err(InstanceError::Validation {
                field: "k".into(),
                msg: format!("k = {k} must lie in [1, {n}]"),
            });
        }
        for (i, node) in nodes.iter_mut().enumerate() {
            node.id = i;
            node.check(&external_ids[i])?;
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        let mut norm_edges = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(InstanceError::Validation {
                    field: "edges".into(),
                    msg: format!("edge ({u}, {v}) references a missing node"),
                });
            }
            if u == v {
                return Err(InstanceError::Validation {
                    field: "edges".into(),
                    msg: format!("self-loop at node {}", external_ids[u]),
                });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(InstanceError::Validation {
                    field: "edges".into(),
                    msg: format!("duplicate edge ({}, {})", external_ids[u], external_ids[v]),
                });
            }
            adj[u].push(v);
            adj[v].push(u);
            norm_edges.push(key);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let inst = Self {
            nodes,
            edges: norm_edges,
            k,
            tau,
            external_ids,
            has_votes,
            adj,
        };
        if !inst.is_connected() {
            return Err(InstanceError::Validation {
                field: "edges".into(),
                msg: "graph is not connected".into(),
            });
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn tau(&self) -> Rational {
        self.tau
    }

    pub fn tau_f64(&self) -> f64 {
        *self.tau.numer() as f64 / *self.tau.denom() as f64
    }

    pub fn total(&self, f: Field) -> u64 {
        self.nodes.iter().map(|n| n.get(f)).sum()
    }

    /// Average district population `p̃ = Σpop / k`.
    pub fn ideal_pop(&self) -> Rational {
        Rational::new(self.total(Field::Pop) as i128, self.k as i128)
    }

    /// Exact population range `[(1−τ)p̃, (1+τ)p̃]`.
    pub fn pop_bounds(&self) -> (Rational, Rational) {
        let p = self.ideal_pop();
        let one = Rational::from_integer(1);
        ((one - self.tau) * p, (one + self.tau) * p)
    }

    /// Integer population range: districts hold integer populations, so the
    /// rational bounds round inward.
    pub fn pop_bounds_int(&self) -> (u64, u64) {
        let (lo, hi) = self.pop_bounds();
        (lo.ceil().to_integer().max(0) as u64, hi.floor().to_integer().max(0) as u64)
    }

    pub fn pop_feasible(&self, pop: u64) -> bool {
        let (lo, hi) = self.pop_bounds();
        let p = Rational::from_integer(pop as i128);
        lo <= p && p <= hi
    }

    /// `(1+τ)p̃` as a float, the population-scale big-M.
    pub fn pop_upper_f64(&self) -> f64 {
        let (_, hi) = self.pop_bounds();
        *hi.numer() as f64 / *hi.denom() as f64
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n()
    }

    /// True when `members` induces a connected subgraph (empty sets are not).
    pub fn is_connected_subset(&self, members: &[usize]) -> bool {
        if members.is_empty() {
            return false;
        }
        let inside: HashSet<usize> = members.iter().copied().collect();
        let mut seen = HashSet::from([members[0]]);
        let mut queue = VecDeque::from([members[0]]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if inside.contains(&v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen.len() == inside.len()
    }

    pub fn from_json_str(text: &str) -> Result<Self, InstanceError> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        let mut index = HashMap::new();
        let mut ids = Vec::with_capacity(raw.nodes.len());
        for (i, n) in raw.nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(InstanceError::Validation {
                    field: format!("node {}", n.id),
                    msg: "duplicate node id".into(),
                });
            }
            ids.push(n.id.clone());
        }
        let has_votes = raw
            .nodes
            .iter()
            .all(|n| n.dv16.is_some() && n.tv16.is_some() && n.dv20.is_some() && n.tv20.is_some());
        let nodes = raw
            .nodes
            .iter()
            .map(|n| Node {
                id: 0,
                pop: n.pop,
                vap: n.vap,
                bvap: n.bvap,
                hvap: n.hvap,
                dv16: n.dv16.unwrap_or(0),
                tv16: n.tv16.unwrap_or(0),
                dv20: n.dv20.unwrap_or(0),
                tv20: n.tv20.unwrap_or(0),
            })
            .collect();
        let mut edges = Vec::with_capacity(raw.edges.len());
        for (a, b) in &raw.edges {
            let lookup = |x: &ExternalId| {
                index.get(x).copied().ok_or_else(|| InstanceError::Validation {
                    field: "edges".into(),
                    msg: format!("unknown node id {x}"),
                })
            };
            edges.push((lookup(a)?, lookup(b)?));
        }
        Self::assemble(nodes, edges, raw.k, tau_from_f64(raw.tau)?, ids, has_votes)
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|e| InstanceError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Canonical JSON: keys in fixed order, vote fields only when present.
    pub fn to_json_string(&self) -> String {
        let raw = RawInstance {
            k: self.k,
            tau: self.tau_f64(),
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let v = |x: u64| self.has_votes.then_some(x);
                    RawNode {
                        id: self.external_ids[n.id].clone(),
                        pop: n.pop,
                        vap: n.vap,
                        bvap: n.bvap,
                        hvap: n.hvap,
                        dv16: v(n.dv16),
                        tv16: v(n.tv16),
                        dv20: v(n.dv20),
                        tv20: v(n.tv20),
                    }
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.external_ids[a].clone(), self.external_ids[b].clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json_string()).map_err(|e| InstanceError::Io(format!("{}: {e}", path.display())))
    }
}

/// Seeded grid-graph generator for desk-scale experiments.
pub fn grid_instance(rows: usize, cols: usize, k: usize, tau: f64, seed: u64) -> Result<Instance, InstanceError> {
    if rows == 0 || cols == 0 || k == 0 || rows * cols < k {
        return Err(InstanceError::InvalidDimensions(format!("{rows}x{cols} grid with k = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..rows * cols)
        .map(|id| {
            let pop = rng.gen_range(80..=120u64);
            let vap = pop;
            let bvap = rng.gen_range(0..=vap);
            let hvap = rng.gen_range(0..=vap - bvap);
            let tv16 = rng.gen_range(pop / 2..=pop);
            let dv16 = rng.gen_range(0..=tv16);
            let tv20 = rng.gen_range(pop / 2..=pop);
            let dv20 = rng.gen_range(0..=tv20);
            Node {
                id,
                pop,
                vap,
                bvap,
                hvap,
                dv16,
                tv16,
                dv20,
                tv20,
            }
        })
        .collect();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                edges.push((i, i + 1));
            }
            if r + 1 < rows {
                edges.push((i, i + cols));
            }
        }
    }
    Instance::new(nodes, edges, k, tau)
}

/// Node-to-district labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub district: Vec<usize>,
}

impl Assignment {
    pub fn new(district: Vec<usize>) -> Self {
        Self { district }
    }

    pub fn members(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); k];
        for (i, &d) in self.district.iter().enumerate() {
            out[d].push(i);
        }
        out
    }

    /// Per-district sums of a node field.
    pub fn sums(&self, inst: &Instance, f: Field) -> Vec<u64> {
        let mut out = vec![0; inst.k];
        for (node, &d) in inst.nodes.iter().zip(&self.district) {
            out[d] += node.get(f);
        }
        out
    }

    pub fn pop_feasible(&self, inst: &Instance) -> bool {
        self.district.len() == inst.n()
            && self.district.iter().all(|&d| d < inst.k)
            && self.sums(inst, Field::Pop).iter().all(|&p| inst.pop_feasible(p))
    }

    pub fn is_contiguous(&self, inst: &Instance) -> bool {
        self.members(inst.k).iter().all(|m| inst.is_connected_subset(m))
    }

    /// Relabels districts in order of first appearance.
    pub fn canonical(&self) -> Self {
        let mut map = HashMap::new();
        let district = self
            .district
            .iter()
            .map(|d| {
                let next = map.len();
                *map.entry(*d).or_insert(next)
            })
            .collect();
        Self { district }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_json() -> &'static str {
        r#"{"k": 2, "tau": 1.0, "nodes": [
            {"id": "a", "pop": 100, "vap": 100, "bvap": 60},
            {"id": "b", "pop": 100, "vap": 100, "bvap": 20}],
            "edges": [["a", "b"]]}"#
    }

    #[test]
    fn loads_minimal_file() {
        let inst = Instance::from_json_str(two_node_json()).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.edges.len(), 1);
        assert!(!inst.has_votes);
        assert_eq!(inst.external_ids[1], ExternalId::Str("b".into()));
    }

    #[test]
    fn names_offending_node() {
        let text = r#"{"k": 1, "tau": 0.1, "nodes": [
            {"id": 0, "pop": 10, "vap": 10}, {"id": 1, "pop": 10, "vap": 10},
            {"id": 2, "pop": 10, "vap": 10}, {"id": 3, "pop": 10, "vap": 5, "bvap": 6}],
            "edges": [[0,1],[1,2],[2,3]]}"#;
        let err = Instance::from_json_str(text).unwrap_err();
        assert!(err.to_string().contains("node 3"), "{err}");
    }

    #[test]
    fn grid_edge_count() {
        let inst = grid_instance(3, 3, 3, 0.1, 7).unwrap();
        assert_eq!(inst.n(), 9);
        assert_eq!(inst.edges.len(), 12);
        let back = Instance::from_json_str(&inst.to_json_string()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn grid_is_deterministic() {
        let a = grid_instance(3, 3, 3, 0.1, 7).unwrap().to_json_string();
        let b = grid_instance(3, 3, 3, 0.1, 7).unwrap().to_json_string();
        assert_eq!(a, b);
        assert!(grid_instance(1, 2, 3, 0.1, 0).is_err());
        assert_eq!(grid_instance(1, 2, 2, 1.0, 0).unwrap().edges, vec![(0, 1)]);
    }

    #[test]
    fn population_bounds_are_exact() {
        let inst = grid_instance(2, 2, 3, 0.2, 1).unwrap();
        let p = inst.total(Field::Pop) as i128;
        assert_eq!(inst.ideal_pop(), Rational::new(p, 3));
        let (lo, hi) = inst.pop_bounds();
        assert_eq!(lo, Rational::new(p * 4, 15));
        assert_eq!(hi, Rational::new(p * 6, 15));
        let (li, hi_i) = inst.pop_bounds_int();
        assert!(inst.pop_feasible(li) && inst.pop_feasible(hi_i));
        assert!(!inst.pop_feasible(hi_i + 1));
    }

    #[test]
    fn rejects_disconnected_and_bad_edges() {
        let node = Node {
            pop: 1,
            ..Default::default()
        };
        assert!(Instance::new(vec![node.clone(), node.clone()], vec![], 1, 0.0).is_err());
        assert!(Instance::new(vec![node.clone(), node.clone()], vec![(0, 0)], 1, 0.0).is_err());
        assert!(Instance::new(vec![node.clone(), node.clone()], vec![(0, 1), (1, 0)], 1, 0.0).is_err());
        assert!(Instance::new(vec![node.clone(), node], vec![(0, 1)], 1, 1.5).is_err());
    }

    #[test]
    fn canonical_relabels() {
        let a = Assignment::new(vec![2, 2, 0, 1]);
        assert_eq!(a.canonical().district, vec![0, 0, 1, 2]);
    }
}
