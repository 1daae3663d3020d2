//! Exhaustive enumeration of contiguous, population-feasible partitions.

use crate::error::OracleError;
use crate::instance::{Assignment, Instance};
use crate::probit::ObjectiveSpec;

pub const MAX_NODES: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationResult {
    pub value: f64,
    pub assignment: Assignment,
    pub count: usize,
}

fn guard(inst: &Instance) -> Result<(), OracleError> {
    if inst.n() > MAX_NODES {
        return Err(OracleError::TooLarge {
            n: inst.n(),
            limit: MAX_NODES,
        });
    }
    Ok(())
}

struct Grower<'a> {
    inst: &'a Instance,
    lo: u64,
    hi: u64,
    label: Vec<Option<usize>>,
    visit: &'a mut dyn FnMut(&[usize]),
}

impl Grower<'_> {
    fn open_district(&mut self, j: usize) {
        let k = self.inst.k;
        let Some(root) = self.label.iter().position(Option::is_none) else {
            if j == k {
                let labels: Vec<usize> = self.label.iter().map(|l| l.expect("all assigned")).collect();
                (self.visit)(&labels);
            }
            return;
        };
        if j == k {
            return;
        }
        let rest: u64 = self
            .label
            .iter()
            .zip(&self.inst.nodes)
            .filter(|(l, _)| l.is_none())
            .map(|(_, n)| n.pop)
            .sum();
        let left = (k - j) as u64;
        if rest < self.lo * left || rest > self.hi * left {
            return;
        }
        self.label[root] = Some(j);
        let mut ext: Vec<usize> = self.fresh_neighbors(root, &[]);
        let mut banned = vec![false; self.inst.n()];
        self.grow(j, self.inst.nodes[root].pop, &mut ext, &mut banned);
        self.label[root] = None;
    }

    fn fresh_neighbors(&self, u: usize, ext: &[usize]) -> Vec<usize> {
        self.inst
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| self.label[v].is_none() && !ext.contains(&v))
            .collect()
    }

    /// Every connected extension of district `j` by nodes from `ext`, each
    /// produced once: the first candidate is either taken or banned for good.
    fn grow(&mut self, j: usize, pop: u64, ext: &mut Vec<usize>, banned: &mut Vec<bool>) {
        let pending: Vec<usize> = ext.iter().copied().filter(|&v| !banned[v]).collect();
        let Some(&u) = pending.first() else {
            if pop >= self.lo && pop <= self.hi {
                self.open_district(j + 1);
            }
            return;
        };
        // take u
        let p = pop + self.inst.nodes[u].pop;
        if p <= self.hi {
            self.label[u] = Some(j);
            let added = self.fresh_neighbors(u, ext);
            let mut next: Vec<usize> = ext.iter().copied().filter(|&v| v != u).collect();
            next.extend(added);
            self.grow(j, p, &mut next, banned);
            self.label[u] = None;
        }
        // ban u
        banned[u] = true;
        self.grow(j, pop, ext, banned);
        banned[u] = false;
    }
}

/// Calls `visit` once per canonical contiguous feasible partition: node 0
/// opens district 0 and the lowest unassigned node opens each next district.
pub fn for_each_partition(inst: &Instance, visit: &mut dyn FnMut(&[usize])) -> Result<(), OracleError> {
    guard(inst)?;
    let (lo, hi) = inst.pop_bounds_int();
    if lo > hi {
        return Ok(());
    }
    let mut g = Grower {
        inst,
        lo,
        hi,
        label: vec![None; inst.n()],
        visit,
    };
    g.open_district(0);
    Ok(())
}

pub fn enumerate_contiguous_partitions(inst: &Instance) -> Result<Vec<Assignment>, OracleError> {
    let mut out = Vec::new();
    for_each_partition(inst, &mut |l| out.push(Assignment::new(l.to_vec())))?;
    out.sort();
    Ok(out)
}

/// Independent enumerator: all `k^n` labelings filtered to canonical,
/// feasible and contiguous ones.
pub fn enumerate_by_filtering(inst: &Instance) -> Result<Vec<Assignment>, OracleError> {
    guard(inst)?;
    let (n, k) = (inst.n(), inst.k);
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    loop {
        let a = Assignment::new(labels.clone());
        let used = labels.iter().max().map_or(0, |m| m + 1);
        if a.canonical() == a && used == k && a.pop_feasible(inst) && a.is_contiguous(inst) {
            out.push(a);
        }
        let mut i = n;
        loop {
            if i == 0 {
                out.sort();
                return Ok(out);
            }
            i -= 1;
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
        }
    }
}

/// Best true objective over all partitions; ties go to the smallest labeling.
pub fn brute_force_optimum(inst: &Instance, spec: &ObjectiveSpec) -> Result<EnumerationResult, OracleError> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut count = 0;
    let mut err = None;
    for_each_partition(inst, &mut |l| {
        count += 1;
        match spec.true_objective(inst, &Assignment::new(l.to_vec())) {
            Ok(v) => {
                let better = match &best {
                    None => true,
                    Some((bv, bl)) => v > *bv || (v == *bv && l < bl.as_slice()),
                };
                if better {
                    best = Some((v, l.to_vec()));
                }
            }
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    let (value, labels) = best.ok_or(OracleError::Infeasible)?;
    Ok(EnumerationResult {
        value,
        assignment: Assignment::new(labels),
        count,
    })
}

/// `(y, z)` images of every partition for one term, per district.
pub fn partition_images(inst: &Instance, spec: &ObjectiveSpec, term: usize) -> Result<Vec<Vec<(f64, f64)>>, OracleError> {
    let mut out = Vec::new();
    for_each_partition(inst, &mut |l| {
        let parts = spec.district_parts(inst, &Assignment::new(l.to_vec()));
        out.push(parts.iter().map(|p| p[term]).collect());
    })?;
    Ok(out)
}
