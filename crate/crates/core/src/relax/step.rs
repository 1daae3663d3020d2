//! Threshold relaxations: ordered binaries `δ_t` switch the step bound on `f`.

use dbound_milp::{Sense, VarId};

use super::{den_range, labeling, objective_var, RelaxOptions, Relaxation};
use crate::breakpoints::{max_error, BreakpointSet, MultiRatioGrid};
use crate::error::RelaxError;
use crate::instance::Instance;
use crate::probit::{ObjectiveSpec, ProbitCurve};

const DELTA_PRIORITY: i32 = 1;

/// Right-hand sides `φ(b_t) + 1 − δ_t` for `t = 1..ℓ−1`, plus `φ(b_ℓ)`.
pub fn per_step_rhs(curve: &ProbitCurve, bs: &BreakpointSet, delta: &[f64]) -> Vec<f64> {
    let l = bs.ell();
    let mut out: Vec<f64> = (1..l).map(|t| curve.phi(bs.b[t]) + 1.0 - delta[t - 1]).collect();
    out.push(curve.phi(bs.b[l]));
    out
}

/// `φ(b_ℓ) − Σ_{t<ℓ} (φ(b_{t+1}) − φ(b_t)) δ_t`.
pub fn dominating_rhs(curve: &ProbitCurve, bs: &BreakpointSet, delta: &[f64]) -> f64 {
    let l = bs.ell();
    curve.phi(bs.b[l]) - (1..l).map(|t| (curve.phi(bs.b[t + 1]) - curve.phi(bs.b[t])) * delta[t - 1]).sum::<f64>()
}

fn check_cover(bs: &BreakpointSet, lo: f64, hi: f64) -> Result<(), RelaxError> {
    if bs.first() > lo + 1e-12 || bs.last() < hi - 1e-12 {
        return Err(RelaxError::Invalid(format!(
            "breakpoints [{}, {}] do not cover the ratio domain [{lo}, {hi}]",
            bs.first(),
            bs.last()
        )));
    }
    Ok(())
}

/// Threshold binaries for one ratio: `δ_t = 0` forces `y ≥ b_t z`, and
/// `δ_t <= δ_{t+1}`.
fn threshold_chain(
    m: &mut dbound_milp::MilpModel,
    bs: &BreakpointSet,
    y: VarId,
    z: VarId,
    big_m: f64,
    label: &str,
) -> Vec<VarId> {
    let l = bs.ell();
    let deltas: Vec<VarId> = (1..l)
        .map(|t| {
            let d = m.binary(format!("delta_{label}_{t}"));
            m.set_priority(d, DELTA_PRIORITY);
            d
        })
        .collect();
    for t in 1..l {
        let d = deltas[t - 1];
        m.constrain(
            vec![(z, bs.b[t]), (y, -1.0), (d, -big_m)],
            Sense::Le,
            0.0,
            format!("ind_{label}_{t}"),
        );
        if t + 1 < l {
            m.constrain(vec![(d, 1.0), (deltas[t], -1.0)], Sense::Le, 0.0, format!("ord_{label}_{t}"));
        }
    }
    deltas
}

pub fn build_step_single(
    inst: &Instance,
    spec: &ObjectiveSpec,
    bs: &BreakpointSet,
    opts: &RelaxOptions,
) -> Result<Relaxation, RelaxError> {
    if !spec.is_single_ratio() {
        return Err(RelaxError::Unsupported("step_single needs a single ratio".into()));
    }
    let (lo, hi) = spec.ratio_domain(inst)[0];
    check_cover(bs, lo, hi)?;
    let lab = labeling(inst, spec, opts)?;
    let mut m = lab.model;
    let curve = spec.curve;
    let l = bs.ell();
    let (_, zmax) = den_range(inst, spec, 0);
    let big_m = bs.last().max(1.0) * zmax.max(1.0);
    let mut f = Vec::with_capacity(inst.k);
    for j in 0..inst.k {
        let fj = objective_var(&mut m, spec, opts, j, curve.phi(bs.last()));
        let deltas = threshold_chain(&mut m, bs, lab.y[0][j], lab.z[0][j], big_m, &j.to_string());
        if opts.dominating {
            // f + Σ (φ(b_{t+1}) − φ(b_t)) δ_t <= φ(b_ℓ)
            let mut terms = vec![(fj, 1.0)];
            for t in 1..l {
                terms.push((deltas[t - 1], curve.phi(bs.b[t + 1]) - curve.phi(bs.b[t])));
            }
            m.constrain(terms, Sense::Le, curve.phi(bs.last()), format!("dom_{j}"));
        } else {
            for t in 1..l {
                m.constrain(
                    vec![(fj, 1.0), (deltas[t - 1], 1.0)],
                    Sense::Le,
                    curve.phi(bs.b[t]) + 1.0,
                    format!("val_{j}_{t}"),
                );
            }
        }
        f.push(fj);
    }
    m.set_objective(f.iter().map(|v| (*v, 1.0)).collect());
    Ok(Relaxation {
        model: m,
        family: super::Family::StepMax,
        x: lab.x,
        y: lab.y,
        z: lab.z,
        f,
        error_bound: Some(inst.k as f64 * max_error(&curve, bs)),
        breakpoints: vec![bs.clone()],
    })
}

/// One threshold family per ratio and `f ≤ Ψ_st + (1 − δ_s) + (1 − δ'_t)`.
pub fn build_step_multi(
    inst: &Instance,
    spec: &ObjectiveSpec,
    grid: &MultiRatioGrid,
    opts: &RelaxOptions,
) -> Result<Relaxation, RelaxError> {
    if spec.terms.len() != 2 || grid.sets.len() != 2 {
        return Err(RelaxError::Unsupported("step_multi needs exactly two ratios".into()));
    }
    for (q, (lo, hi)) in spec.ratio_domain(inst).into_iter().enumerate() {
        check_cover(&grid.sets[q], lo, hi)?;
    }
    let lab = labeling(inst, spec, opts)?;
    let mut m = lab.model;
    let (l0, l1) = (grid.sets[0].ell(), grid.sets[1].ell());
    let mut f = Vec::with_capacity(inst.k);
    for j in 0..inst.k {
        let fj = objective_var(&mut m, spec, opts, j, grid.psi[l0][l1]);
        let chains: Vec<Vec<VarId>> = (0..2)
            .map(|q| {
                let (_, zmax) = den_range(inst, spec, q);
                let big_m = grid.sets[q].last().max(1.0) * zmax.max(1.0);
                threshold_chain(&mut m, &grid.sets[q], lab.y[q][j], lab.z[q][j], big_m, &format!("{q}_{j}"))
            })
            .collect();
        for s in 1..=l0 {
            for t in 1..=l1 {
                if s == l0 && t == l1 {
                    continue;
                }
                let mut terms = vec![(fj, 1.0)];
                let mut rhs = grid.psi[s][t];
                if s < l0 {
                    terms.push((chains[0][s - 1], 1.0));
                    rhs += 1.0;
                }
                if t < l1 {
                    terms.push((chains[1][t - 1], 1.0));
                    rhs += 1.0;
                }
                m.constrain(terms, Sense::Le, rhs, format!("psi_{j}_{s}_{t}"));
            }
        }
        f.push(fj);
    }
    m.set_objective(f.iter().map(|v| (*v, 1.0)).collect());
    Ok(Relaxation {
        model: m,
        family: super::Family::StepMax,
        x: lab.x,
        y: lab.y,
        z: lab.z,
        f,
        error_bound: Some(inst.k as f64 * grid.max_error()),
        breakpoints: grid.sets.clone(),
    })
}
