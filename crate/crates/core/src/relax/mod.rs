//! MILP relaxations of `max Σ_j φ(ratio_j)` over contiguous districtings.
//!
//! Step and LogE families give certified upper bounds. BN bounds rest on a
//! sampled supremum per slice. The PWL families are restrictions whose
//! optimum is reported as a MIP objective only.

mod bn;
mod loge;
mod pwl;
mod step;

use std::fmt;

use dbound_milp::{solve_relaxation, solve_with_lazy, LpOutcome, MilpModel, Sense, SolveError, SolveOptions, SolveResult, VarId};
use serde::{Deserialize, Serialize};

use crate::breakpoints::{BreakpointSet, MultiRatioGrid, Scheme};
use crate::contiguity::{decode, ContiguityCallback};
use crate::error::RelaxError;
use crate::instance::{Assignment, Instance};
use crate::prebounds::{DistrictBounds, GradientCut};
use crate::probit::{ObjectiveSpec, ProbitCurve};

pub use bn::{bn_slice_values, BnGeometry};
pub use loge::clip_polygon;
pub use pwl::pwl_interpolant;
pub use step::{dominating_rhs, per_step_rhs};

/// Branching priority of assignment variables; auxiliaries stay at 0 or 1.
pub const X_PRIORITY: i32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    StepMax,
    StepExp,
    Pwl,
    VaPwl,
    Loge,
    Bn,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::StepMax,
        Family::StepExp,
        Family::Pwl,
        Family::VaPwl,
        Family::Loge,
        Family::Bn,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::StepMax => "step-max",
            Family::StepExp => "step-exp",
            Family::Pwl => "pwl",
            Family::VaPwl => "va-pwl",
            Family::Loge => "loge",
            Family::Bn => "bn",
        }
    }

    /// Whether the optimum of the model bounds the true optimum from above.
    pub fn gives_bound(self) -> bool {
        !matches!(self, Family::Pwl | Family::VaPwl)
    }

    pub fn scheme(self) -> Scheme {
        match self {
            Family::StepExp => Scheme::StepExp,
            _ => Scheme::StepMax,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxOptions {
    pub ell: usize,
    pub nu: usize,
    /// Aggregated f-bound in place of the per-breakpoint rows.
    pub dominating: bool,
    /// Order districts by numerator and bound each `f_j` by its ratio range.
    pub symmetry: bool,
    /// Grid resolution of the discretized PWL.
    pub resolution: usize,
    /// Per-term ratio domain; defaults to the range of node ratios.
    pub domain: Option<Vec<(f64, f64)>>,
    pub bounds: Option<DistrictBounds>,
    pub cuts: Vec<GradientCut>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            ell: 10,
            nu: 3,
            dominating: false,
            symmetry: false,
            resolution: 1000,
            domain: None,
            bounds: None,
            cuts: Vec::new(),
        }
    }
}

impl RelaxOptions {
    /// Prebound ranges and cuts are only valid for ordered districts.
    pub fn ordered(&self) -> bool {
        self.symmetry || self.bounds.is_some() || !self.cuts.is_empty()
    }
}

/// A built relaxation and the handles needed to read its solutions.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub model: MilpModel,
    pub family: Family,
    /// `x[i][j]`: node `i` in district `j`.
    pub x: Vec<Vec<VarId>>,
    /// `y[q][j]`, `z[q][j]`: numerator and denominator of term `q` in district `j`.
    pub y: Vec<Vec<VarId>>,
    pub z: Vec<Vec<VarId>>,
    pub f: Vec<VarId>,
    /// `Σ_j Δ_j`: the bound minus this never exceeds the true optimum.
    pub error_bound: Option<f64>,
    pub breakpoints: Vec<BreakpointSet>,
}

#[derive(Clone, Debug)]
pub struct RelaxSolve {
    pub result: SolveResult,
    pub assignment: Option<Assignment>,
    pub contiguity_cuts: usize,
}

impl Relaxation {
    /// Branch-and-bound with lazy contiguity cuts.
    pub fn solve(&self, inst: &Instance, opts: &SolveOptions) -> Result<RelaxSolve, SolveError> {
        let mut cb = ContiguityCallback::new(inst, self.x.clone());
        let result = solve_with_lazy(&self.model, opts, &mut cb)?;
        let assignment = result.incumbent.as_ref().map(|v| Assignment::new(decode(&self.x, v)));
        Ok(RelaxSolve {
            result,
            assignment,
            contiguity_cuts: cb.emitted.len(),
        })
    }

    /// Optimum of the LP relaxation without contiguity; `None` if infeasible.
    pub fn lp_bound(&self) -> Result<Option<f64>, SolveError> {
        match solve_relaxation(&self.model)? {
            LpOutcome::Optimal { objective, .. } => Ok(Some(objective)),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Ok(Some(f64::INFINITY)),
            LpOutcome::Failed(reason) => Err(SolveError::Numerical { node: 0, reason }),
        }
    }
}

/// Builds the relaxation `family` for `spec`. Two-ratio objectives use the
/// multi-ratio step model for either step family.
pub fn build(inst: &Instance, spec: &ObjectiveSpec, family: Family, opts: &RelaxOptions) -> Result<Relaxation, RelaxError> {
    let mut r = build_family(inst, spec, family, opts)?;
    r.family = family;
    Ok(r)
}

/// The curve each ratio term's breakpoints are placed on. With two terms,
/// each sees `Ψ` shifted by the midpoint of the other term's domain.
pub fn term_curves(spec: &ObjectiveSpec, domains: &[(f64, f64)]) -> Vec<ProbitCurve> {
    let c = spec.curve;
    if domains.len() != 2 {
        return vec![c; domains.len()];
    }
    (0..2)
        .map(|q| {
            let (lo, hi) = domains[1 - q];
            ProbitCurve::new(c.beta, c.beta0 - c.beta * 0.5 * (lo + hi))
        })
        .collect()
}

fn build_family(inst: &Instance, spec: &ObjectiveSpec, family: Family, opts: &RelaxOptions) -> Result<Relaxation, RelaxError> {
    spec.check_instance(inst)?;
    if opts.ell == 0 {
        return Err(RelaxError::Invalid("ℓ must be at least 1".into()));
    }
    let domains = domains(inst, spec, opts)?;
    if !spec.is_single_ratio() {
        return match family {
            Family::StepMax | Family::StepExp => {
                let sets = term_curves(spec, &domains)
                    .iter()
                    .zip(&domains)
                    .map(|(c, &(lo, hi))| crate::breakpoints::build(family.scheme(), c, lo, hi, opts.ell))
                    .collect::<Result<Vec<_>, _>>()?;
                let grid = MultiRatioGrid::new(&spec.curve, sets)?;
                step::build_step_multi(inst, spec, &grid, opts)
            }
            _ => Err(RelaxError::Unsupported(format!(
                "{} handles one ratio; {} sums two",
                family,
                spec.kind.as_str()
            ))),
        };
    }
    let (lo, hi) = domains[0];
    match family {
        Family::StepMax | Family::StepExp => {
            let bs = crate::breakpoints::build(family.scheme(), &spec.curve, lo, hi, opts.ell)?;
            step::build_step_single(inst, spec, &bs, opts)
        }
        Family::Pwl => {
            let bs = crate::breakpoints::build(Scheme::StepMax, &spec.curve, lo, hi, opts.ell)?;
            pwl::build_pwl_discretized(inst, spec, &bs, opts)
        }
        Family::VaPwl => {
            let bs = crate::breakpoints::build(Scheme::StepMax, &spec.curve, lo, hi, opts.ell)?;
            pwl::build_va_pwl(inst, spec, &bs, opts)
        }
        Family::Loge => loge::build_loge_pwl(inst, spec, (lo, hi), opts),
        Family::Bn => bn::build_bn_pwl(inst, spec, (lo, hi), opts),
    }
}

fn domains(inst: &Instance, spec: &ObjectiveSpec, opts: &RelaxOptions) -> Result<Vec<(f64, f64)>, RelaxError> {
    let natural = spec.ratio_domain(inst);
    let chosen = match &opts.domain {
        Some(d) => {
            if d.len() != natural.len() {
                return Err(RelaxError::Invalid(format!("expected {} ratio domains", natural.len())));
            }
            for (q, (&(lo, hi), &(nlo, nhi))) in d.iter().zip(&natural).enumerate() {
                if lo > nlo + 1e-12 || hi < nhi - 1e-12 {
                    return Err(RelaxError::Invalid(format!(
                        "domain [{lo}, {hi}] of term {q} misses node ratios in [{nlo}, {nhi}]"
                    )));
                }
            }
            d.clone()
        }
        None => natural,
    };
    Ok(chosen
        .into_iter()
        .map(|(lo, hi)| if hi - lo < 1e-9 { (lo, lo + 1e-6) } else { (lo, hi) })
        .collect())
}

/// `[z_min, z_max]` for any population-feasible district: a ratio of sums
/// lies between the extreme node ratios `den_i / pop_i`.
pub(crate) fn den_range(inst: &Instance, spec: &ObjectiveSpec, q: usize) -> (f64, f64) {
    let t = &spec.terms[q];
    let (lo, hi) = inst.pop_bounds_int();
    let total: f64 = inst.nodes.iter().map(|n| t.denominator(n)).sum();
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0f64;
    let mut unbounded = false;
    for n in &inst.nodes {
        let d = t.denominator(n);
        if n.pop == 0 {
            if d > 0.0 {
                unbounded = true;
            }
            rmin = 0.0;
            continue;
        }
        let r = d / n.pop as f64;
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    let zmin = if rmin.is_finite() { lo as f64 * rmin } else { 0.0 };
    let zmax = if unbounded { total } else { total.min(hi as f64 * rmax) };
    (zmin.min(zmax), zmax)
}

pub(crate) struct Labeling {
    pub model: MilpModel,
    pub x: Vec<Vec<VarId>>,
    pub y: Vec<Vec<VarId>>,
    pub z: Vec<Vec<VarId>>,
}

/// Assignment, population, aggregation and symmetry rows shared by all families.
pub(crate) fn labeling(inst: &Instance, spec: &ObjectiveSpec, opts: &RelaxOptions) -> Result<Labeling, RelaxError> {
    let (n, k) = (inst.n(), inst.k);
    let ordered = opts.ordered();
    if let Some(b) = &opts.bounds {
        if b.ranges.len() != spec.terms.len() || b.ranges.iter().any(|r| r.len() != k) {
            return Err(RelaxError::Invalid("district bounds do not match the objective".into()));
        }
    }
    let mut m = MilpModel::new();
    let x: Vec<Vec<VarId>> = (0..n)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let v = m.binary(format!("x_{i}_{j}"));
                    m.set_priority(v, X_PRIORITY);
                    // canonical labels: node i lies in a district <= i
                    if !ordered && j > i {
                        m.set_bounds(v, 0.0, 0.0);
                    }
                    v
                })
                .collect()
        })
        .collect();
    for (i, row) in x.iter().enumerate() {
        m.constrain(row.iter().map(|v| (*v, 1.0)).collect(), Sense::Eq, 1.0, format!("assign_{i}"));
    }
    let (plo, phi) = inst.pop_bounds_int();
    for j in 0..k {
        let terms: Vec<(VarId, f64)> = (0..n)
            .filter(|&i| inst.nodes[i].pop > 0)
            .map(|i| (x[i][j], inst.nodes[i].pop as f64))
            .collect();
        m.constrain(terms.clone(), Sense::Ge, plo as f64, format!("pop_lo_{j}"));
        m.constrain(terms, Sense::Le, phi as f64, format!("pop_hi_{j}"));
    }
    let mut y = Vec::new();
    let mut z = Vec::new();
    for (q, term) in spec.terms.iter().enumerate() {
        let (_, zmax) = den_range(inst, spec, q);
        let ymax: f64 = inst.nodes.iter().map(|nd| term.numerator(nd)).sum();
        let mut yq = Vec::new();
        let mut zq = Vec::new();
        for j in 0..k {
            let (mut ylo, mut yhi, mut zlo, mut zhi) = (0.0, ymax, 0.0, zmax);
            if let Some(b) = &opts.bounds {
                let r = &b.ranges[q][j];
                (ylo, yhi, zlo, zhi) = (r.y.0.max(0.0), r.y.1.min(ymax), r.z.0.max(0.0), r.z.1.min(zmax));
            }
            let yv = m.continuous(format!("y_{q}_{j}"), ylo, yhi.max(ylo));
            let zv = m.continuous(format!("z_{q}_{j}"), zlo, zhi.max(zlo));
            let mut ty = vec![(yv, -1.0)];
            let mut tz = vec![(zv, -1.0)];
            for (i, node) in inst.nodes.iter().enumerate() {
                let (a, d) = (term.numerator(node), term.denominator(node));
                if a != 0.0 {
                    ty.push((x[i][j], a));
                }
                if d != 0.0 {
                    tz.push((x[i][j], d));
                }
            }
            m.constrain(ty, Sense::Eq, 0.0, format!("num_{q}_{j}"));
            m.constrain(tz, Sense::Eq, 0.0, format!("den_{q}_{j}"));
            if let Some(b) = &opts.bounds {
                let r = &b.ranges[q][j];
                if r.zy.0.is_finite() || r.zy.1.is_finite() {
                    let t = vec![(zv, 1.0), (yv, -1.0)];
                    if r.zy.0.is_finite() {
                        m.constrain(t.clone(), Sense::Ge, r.zy.0, format!("zy_lo_{q}_{j}"));
                    }
                    if r.zy.1.is_finite() {
                        m.constrain(t, Sense::Le, r.zy.1, format!("zy_hi_{q}_{j}"));
                    }
                }
            }
            yq.push(yv);
            zq.push(zv);
        }
        // a district with a zero denominator has an undefined objective
        let zero_pop: u64 = inst
            .nodes
            .iter()
            .filter(|nd| term.denominator(nd) == 0.0)
            .map(|nd| nd.pop)
            .sum();
        let has_zero = inst.nodes.iter().any(|nd| term.denominator(nd) == 0.0);
        if has_zero && zero_pop >= plo {
            return Err(RelaxError::Invalid(format!(
                "nodes without {:?} hold population {zero_pop}, enough for a district with a zero denominator",
                term.den
            )));
        }
        y.push(yq);
        z.push(zq);
    }
    if ordered {
        for j in 0..k.saturating_sub(1) {
            m.constrain(vec![(y[0][j], 1.0), (y[0][j + 1], -1.0)], Sense::Le, 0.0, format!("order_{j}"));
        }
    }
    for (ci, cut) in opts.cuts.iter().enumerate() {
        let terms: Vec<(VarId, f64)> = cut
            .terms
            .iter()
            .flat_map(|t| [(y[t.term][t.district], t.coef_y), (z[t.term][t.district], t.coef_z)])
            .collect();
        if cut.lo.is_finite() {
            m.constrain(terms.clone(), Sense::Ge, cut.lo, format!("grad_lo_{ci}"));
        }
        if cut.hi.is_finite() {
            m.constrain(terms, Sense::Le, cut.hi, format!("grad_hi_{ci}"));
        }
    }
    Ok(Labeling { model: m, x, y, z })
}

/// The objective variable of district `j`, bounded by `[φ(b_min), φ(b_max)]`
/// when ranges are known and symmetry handling is on.
pub(crate) fn objective_var(m: &mut MilpModel, spec: &ObjectiveSpec, opts: &RelaxOptions, j: usize, cap: f64) -> VarId {
    let (mut lo, mut hi) = (0.0, cap.min(1.0));
    if opts.symmetry {
        if let Some(b) = &opts.bounds {
            let (rlo, rhi) = b.ratio[j];
            lo = spec.curve.phi(rlo);
            hi = hi.min(spec.curve.phi(rhi));
        }
    }
    m.continuous(format!("f_{j}"), lo.min(hi), hi)
}
