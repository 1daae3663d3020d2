//! Best-bound branch-and-bound with lazy constraint separation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use log::{debug, trace};

use crate::error::SolveError;
use crate::model::{LinConstraint, MilpModel, Sense, VarKind};
use crate::simplex::{solve_lp, LpOutcome, LpProblem, LpRow};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub int_tol: f64,
    pub feas_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            node_limit: None,
            time_limit: None,
            abs_gap: 1e-6,
            rel_gap: 1e-6,
            int_tol: 1e-6,
            feas_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    NodeLimit,
    TimeLimit,
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Proven upper bound on the optimum. `-inf` when infeasible, `+inf` when unbounded.
    pub dual_bound: f64,
    pub incumbent: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub nodes: usize,
    pub lazy_cuts: usize,
    pub elapsed: Duration,
}

impl SolveResult {
    /// Relative gap between the dual bound and the incumbent.
    pub fn gap(&self) -> Option<f64> {
        let obj = self.objective?;
        Some((self.dual_bound - obj).abs() / obj.abs().max(1e-9))
    }
}

/// Callback queried at every integral LP solution.
pub trait LazyConstraints {
    /// Returns constraints violated by `values`; an empty list accepts the point.
    fn separate(&mut self, values: &[f64]) -> Vec<LinConstraint>;
}

pub struct NoLazy;

impl LazyConstraints for NoLazy {
    fn separate(&mut self, _values: &[f64]) -> Vec<LinConstraint> {
        Vec::new()
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn row_of(c: &LinConstraint) -> LpRow {
    let (lo, hi) = match c.sense {
        Sense::Le => (f64::NEG_INFINITY, c.rhs),
        Sense::Ge => (c.rhs, f64::INFINITY),
        Sense::Eq => (c.rhs, c.rhs),
    };
    LpRow {
        terms: c.terms.iter().map(|(v, a)| (v.0, *a)).collect(),
        lo,
        hi,
    }
}

fn cut_key(c: &LinConstraint) -> String {
    let mut s = format!("{:?}{:.9e}", c.sense, c.rhs);
    for (v, a) in &c.terms {
        s.push_str(&format!("|{}:{:.9e}", v.0, a));
    }
    s
}

fn lp_of(model: &MilpModel) -> LpProblem {
    let n = model.vars.len();
    let mut lp = LpProblem {
        num_vars: n,
        objective: vec![0.0; n],
        lower: model.vars.iter().map(|v| v.lower).collect(),
        upper: model.vars.iter().map(|v| v.upper).collect(),
        rows: model.constraints.iter().map(row_of).collect(),
    };
    for (v, c) in &model.objective {
        lp.objective[v.0] += c;
    }
    lp
}

/// Solves the LP relaxation, with every binary relaxed to `[0, 1]`.
pub fn solve_relaxation(model: &MilpModel) -> Result<LpOutcome, SolveError> {
    model.validate()?;
    Ok(solve_lp(&lp_of(model)))
}

pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    solve_with_lazy(model, opts, &mut NoLazy)
}

pub fn solve_with_lazy(
    model: &MilpModel,
    opts: &SolveOptions,
    lazy: &mut dyn LazyConstraints,
) -> Result<SolveResult, SolveError> {
    model.validate()?;
    let start = Instant::now();
    let mut base = lp_of(model);
    let binaries: Vec<usize> = model
        .vars
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.id.0)
        .collect();

    let mut seen_cuts: HashSet<String> = HashSet::new();
    let mut lazy_cuts = 0usize;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::INFINITY,
        depth: 0,
        seq,
        fixings: Vec::new(),
    });
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0usize;
    let mut reported_bound = f64::INFINITY;
    let mut hit_limit: Option<SolveStatus> = None;
    let mut pruned_bound = f64::NEG_INFINITY;

    let gap_ok = |bound: f64, inc: f64| bound <= inc + opts.abs_gap.max(opts.rel_gap * inc.abs());

    while let Some(node) = heap.peek() {
        if let Some((_, inc)) = &incumbent {
            if gap_ok(node.bound, *inc) {
                break;
            }
        }
        if opts.node_limit.is_some_and(|l| nodes >= l) {
            hit_limit = Some(SolveStatus::NodeLimit);
            break;
        }
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            hit_limit = Some(SolveStatus::TimeLimit);
            break;
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;
        let mut lp = base.clone();
        for &(j, v) in &node.fixings {
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        loop {
            let outcome = solve_lp(&lp);
            let (x, obj) = match outcome {
                LpOutcome::Optimal { x, objective, .. } => (x, objective),
                LpOutcome::Infeasible => break,
                LpOutcome::Unbounded => {
                    if binaries.iter().all(|&j| lp.lower[j] == lp.upper[j]) || node.depth == 0 {
                        return Ok(SolveResult {
                            status: SolveStatus::Unbounded,
                            dual_bound: f64::INFINITY,
                            incumbent: None,
                            objective: None,
                            nodes,
                            lazy_cuts,
                            elapsed: start.elapsed(),
                        });
                    }
                    return Err(SolveError::Numerical {
                        node: nodes,
                        reason: "unbounded relaxation below the root".into(),
                    });
                }
                LpOutcome::Failed(reason) => return Err(SolveError::Numerical { node: nodes, reason }),
            };
            if let Some((_, inc)) = &incumbent {
                if gap_ok(obj, *inc) {
                    pruned_bound = pruned_bound.max(obj);
                    break;
                }
            }
            // most fractional binary, highest priority first
            let mut pick: Option<(usize, i32, f64)> = None;
            for &j in &binaries {
                let f = x[j] - x[j].floor();
                let frac = f.min(1.0 - f);
                if frac <= opts.int_tol {
                    continue;
                }
                let pr = model.vars[j].priority;
                let better = match pick {
                    None => true,
                    Some((_, bp, bf)) => pr > bp || (pr == bp && frac > bf + 1e-12),
                };
                if better {
                    pick = Some((j, pr, frac));
                }
            }
            if let Some((j, _, _)) = pick {
                trace!("node {nodes}: branch on {} at {:.4}, bound {obj:.6}", model.vars[j].name, x[j]);
                let (first, second) = if x[j] >= 0.5 { (1.0, 0.0) } else { (0.0, 1.0) };
                for v in [first, second] {
                    seq += 1;
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        seq,
                        fixings,
                    });
                }
                break;
            }
            let mut vals = x;
            for &j in &binaries {
                vals[j] = vals[j].round();
            }
            if model.max_violation(&vals) > opts.feas_tol {
                let mut fixed = lp.clone();
                for &j in &binaries {
                    fixed.lower[j] = vals[j];
                    fixed.upper[j] = vals[j];
                }
                match solve_lp(&fixed) {
                    LpOutcome::Optimal { x, .. } => vals = x,
                    _ => break,
                }
            }
            let cuts: Vec<LinConstraint> = lazy
                .separate(&vals)
                .into_iter()
                .map(LinConstraint::normalized)
                .filter(|c| c.violation(&vals) > opts.feas_tol)
                .filter(|c| seen_cuts.insert(cut_key(c)))
                .collect();
            if cuts.is_empty() {
                let value = model.objective_value(&vals);
                if incumbent.as_ref().is_none_or(|(_, inc)| value > *inc) {
                    debug!("node {nodes}: incumbent {value:.6}");
                    incumbent = Some((vals, value));
                }
                break;
            }
            lazy_cuts += cuts.len();
            for c in &cuts {
                let r = row_of(c);
                base.rows.push(r.clone());
                lp.rows.push(r);
            }
        }
        let open = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
        let inc = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(_, v)| *v);
        reported_bound = reported_bound.min(open.max(inc).max(pruned_bound));
    }

    let open = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
    let inc = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(_, v)| *v);
    let dual_bound = reported_bound.min(open.max(inc).max(pruned_bound));
    let status = match (hit_limit, &incumbent) {
        (Some(s), _) => s,
        (None, Some(_)) => SolveStatus::Optimal,
        (None, None) => SolveStatus::Infeasible,
    };
    let dual_bound = if status == SolveStatus::Infeasible {
        f64::NEG_INFINITY
    } else {
        dual_bound
    };
    let objective = incumbent.as_ref().map(|(_, v)| *v);
    Ok(SolveResult {
        status,
        dual_bound,
        incumbent: incumbent.map(|(x, _)| x),
        objective,
        nodes,
        lazy_cuts,
        elapsed: start.elapsed(),
    })
}
