//! Lazy contiguity through vertex-separator inequalities
//! `x_aj + x_bj <= 1 + Σ_{c∈C} x_cj`.

use std::collections::{BTreeSet, HashSet, VecDeque};

use dbound_milp::{LazyConstraints, LinConstraint, Sense, VarId};
use log::trace;

use crate::instance::Instance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatorCut {
    pub district: usize,
    pub a: usize,
    pub b: usize,
    pub separator: Vec<usize>,
}

impl SeparatorCut {
    /// The inequality over `x[i][j]`.
    pub fn constraint(&self, x: &[Vec<VarId>]) -> LinConstraint {
        let j = self.district;
        let mut terms = vec![(x[self.a][j], 1.0), (x[self.b][j], 1.0)];
        terms.extend(self.separator.iter().map(|&c| (x[c][j], -1.0)));
        LinConstraint::new(terms, Sense::Le, 1.0, format!("sep_d{j}_{}_{}", self.a, self.b))
    }

    /// `lhs − rhs` for a labeling; positive means violated.
    pub fn violation(&self, district: &[usize]) -> i64 {
        let inside = |i: usize| i64::from(district[i] == self.district);
        inside(self.a) + inside(self.b) - 1 - self.separator.iter().map(|&c| inside(c)).sum::<i64>()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("nodes {a} and {b} are connected inside the set")]
pub struct ConnectedEndpoints {
    pub a: usize,
    pub b: usize,
}

/// Whether `a` reaches `b` in the graph with `removed` deleted.
fn reaches(inst: &Instance, a: usize, b: usize, removed: &HashSet<usize>) -> bool {
    let mut seen = vec![false; inst.n()];
    seen[a] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        if u == b {
            return true;
        }
        for &v in inst.neighbors(u) {
            if !seen[v] && !removed.contains(&v) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Connected components of the subgraph induced by `set`, each sorted, in
/// order of their smallest node.
pub fn components(inst: &Instance, set: &[usize]) -> Vec<Vec<usize>> {
    let inside: HashSet<usize> = set.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &s in &sorted {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in inst.neighbors(u) {
                if inside.contains(&v) && seen.insert(v) {
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Minimal `a,b`-separator built from the neighborhood of `a`'s component in `G[S]`.
pub fn find_separator(inst: &Instance, set: &[usize], a: usize, b: usize) -> Result<Vec<usize>, ConnectedEndpoints> {
    let comp_a = components(inst, set)
        .into_iter()
        .find(|c| c.contains(&a))
        .ok_or(ConnectedEndpoints { a, b })?;
    if comp_a.contains(&b) || !set.contains(&b) {
        return Err(ConnectedEndpoints { a, b });
    }
    let in_s: HashSet<usize> = set.iter().copied().collect();
    let c0: BTreeSet<usize> = comp_a
        .iter()
        .flat_map(|&u| inst.neighbors(u).iter().copied())
        .filter(|v| !in_s.contains(v))
        .collect();
    let mut sep: HashSet<usize> = c0.iter().copied().collect();
    for c in c0 {
        sep.remove(&c);
        if reaches(inst, a, b, &sep) {
            sep.insert(c);
        }
    }
    let mut out: Vec<usize> = sep.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// One cut per non-largest component of every disconnected district.
pub fn separate_assignment(inst: &Instance, district: &[usize], k: usize) -> Vec<SeparatorCut> {
    let mut members = vec![Vec::new(); k];
    for (i, &d) in district.iter().enumerate() {
        members[d].push(i);
    }
    let mut cuts = Vec::new();
    for (j, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let comps = components(inst, m);
        if comps.len() < 2 {
            continue;
        }
        // largest component, ties to the one holding the smallest node
        let big = comps
            .iter()
            .enumerate()
            .max_by(|(i, x), (k, y)| x.len().cmp(&y.len()).then(k.cmp(i)))
            .map(|(i, _)| i)
            .expect("nonempty");
        let a = comps[big][0];
        for (ci, comp) in comps.iter().enumerate() {
            if ci == big {
                continue;
            }
            let b = comp[0];
            let separator = find_separator(inst, m, a, b).expect("components are disconnected");
            cuts.push(SeparatorCut {
                district: j,
                a,
                b,
                separator,
            });
        }
    }
    cuts
}

/// Reads a labeling from `x[i][j]` values by taking the largest entry per node.
pub fn decode(x: &[Vec<VarId>], values: &[f64]) -> Vec<usize> {
    x.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| values[a.0].total_cmp(&values[b.0]))
                .map_or(0, |(j, _)| j)
        })
        .collect()
}

/// Lazy callback over assignment variables `x[i][j]`.
pub struct ContiguityCallback<'a> {
    inst: &'a Instance,
    x: Vec<Vec<VarId>>,
    pub emitted: Vec<SeparatorCut>,
}

impl<'a> ContiguityCallback<'a> {
    pub fn new(inst: &'a Instance, x: Vec<Vec<VarId>>) -> Self {
        Self {
            inst,
            x,
            emitted: Vec::new(),
        }
    }
}

impl LazyConstraints for ContiguityCallback<'_> {
    fn separate(&mut self, values: &[f64]) -> Vec<LinConstraint> {
        let k = self.x.first().map_or(0, Vec::len);
        let labels = decode(&self.x, values);
        let cuts = separate_assignment(self.inst, &labels, k);
        trace!("contiguity: {} cuts", cuts.len());
        let out = cuts.iter().map(|c| c.constraint(&self.x)).collect();
        self.emitted.extend(cuts);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{grid_instance, Node};

    fn graph(n: usize, edges: Vec<(usize, usize)>) -> Instance {
        let nodes = vec![
            Node {
                pop: 1,
                ..Default::default()
            };
            n
        ];
        Instance::new(nodes, edges, 1, 1.0).unwrap()
    }

    #[test]
    fn path_separator() {
        let g = graph(3, vec![(0, 1), (1, 2)]);
        assert_eq!(find_separator(&g, &[0, 2], 0, 2).unwrap(), vec![1]);
        assert!(find_separator(&g, &[0, 1, 2], 0, 2).is_err());
    }

    #[test]
    fn cycle_separator() {
        let g = graph(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(find_separator(&g, &[0, 2], 0, 2).unwrap(), vec![1, 3]);
    }

    #[test]
    fn grid_corners() {
        let g = grid_instance(3, 3, 2, 1.0, 0).unwrap();
        assert_eq!(find_separator(&g, &[0, 8], 0, 8).unwrap(), vec![1, 3]);
        let cuts = separate_assignment(&g, &[0, 1, 1, 1, 1, 1, 1, 1, 0], 2);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].violation(&[0, 1, 1, 1, 1, 1, 1, 1, 0]), 1);
    }

    #[test]
    fn three_components_two_cuts() {
        let g = grid_instance(1, 5, 2, 1.0, 0).unwrap();
        let labels = [0, 1, 0, 1, 0];
        let cuts = separate_assignment(&g, &labels, 2);
        assert_eq!(cuts.len(), 3);
        assert_eq!(cuts.iter().filter(|c| c.district == 0).count(), 2);
        assert!(separate_assignment(&g, &[0, 0, 1, 1, 1], 2).is_empty());
    }
}
