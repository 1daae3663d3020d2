//! Piecewise-linear restrictions. Their optima approximate, and do not bound,
//! the true optimum.

use dbound_milp::{Sense, VarId};

use super::{den_range, labeling, RelaxOptions, Relaxation};
use crate::breakpoints::BreakpointSet;
use crate::error::RelaxError;
use crate::instance::Instance;
use crate::probit::{ObjectiveSpec, ProbitCurve};

/// Linear interpolation of `φ` on the breakpoints, constant outside them.
pub fn pwl_interpolant(curve: &ProbitCurve, bs: &BreakpointSet, r: f64) -> f64 {
    let b = &bs.b;
    if r <= b[0] {
        return curve.phi(b[0]);
    }
    if r >= bs.last() {
        return curve.phi(bs.last());
    }
    let t = b.partition_point(|&v| v <= r);
    let (x0, x1) = (b[t - 1], b[t]);
    let (f0, f1) = (curve.phi(x0), curve.phi(x1));
    f0 + (f1 - f0) * (r - x0) / (x1 - x0)
}

/// Ratio rounded down to the grid `{ρ/R}`: a chain `δ_ρ` with `δ_ρ = 0`
/// forcing `R y ≥ ρ z` and `δ_ρ = 1` forcing `R y ≤ ρ z`; `f` is the
/// interpolant at the grid point below the ratio.
pub fn build_pwl_discretized(
    inst: &Instance,
    spec: &ObjectiveSpec,
    bs: &BreakpointSet,
    opts: &RelaxOptions,
) -> Result<Relaxation, RelaxError> {
    let res = opts.resolution;
    if res < bs.ell() {
        return Err(RelaxError::Invalid(format!("resolution {res} is below ℓ = {}", bs.ell())));
    }
    let lab = labeling(inst, spec, opts)?;
    let mut m = lab.model;
    let (lo, hi) = spec.ratio_domain(inst)[0];
    let rf = res as f64;
    let rho_lo = (rf * lo).floor() as i64;
    let mut rho_hi = (rf * hi).ceil() as i64;
    if rho_hi == rho_lo {
        rho_hi += 1;
    }
    let (_, zmax) = den_range(inst, spec, 0);
    let big_m = rf * (rho_hi as f64 / rf).max(hi).max(1.0) * zmax.max(1.0);
    let value = |rho: i64| pwl_interpolant(&spec.curve, bs, rho as f64 / rf);
    let mut f = Vec::with_capacity(inst.k);
    for j in 0..inst.k {
        let (y, z) = (lab.y[0][j], lab.z[0][j]);
        let fj = m.continuous(format!("f_{j}"), 0.0, 1.0);
        let mut prev: Option<VarId> = None;
        // f = φ̂(ρ_lo/R) + Σ_ρ (φ̂(ρ/R) − φ̂((ρ−1)/R)) (1 − δ_ρ)
        let mut fterms = vec![(fj, 1.0)];
        let mut rhs = value(rho_lo);
        for rho in rho_lo + 1..=rho_hi {
            let d = m.binary(format!("cell_{j}_{rho}"));
            m.set_priority(d, 1);
            let rho_f = rho as f64;
            // ρ z − R y = z (ρ − R r) and R y − ρ z = z (R r − ρ) with r in [lo, hi]
            let m_lo = (zmax * (rho_f - rf * lo)).clamp(1e-6, big_m);
            let m_hi = (zmax * (rf * hi - rho_f)).clamp(1e-6, big_m);
            m.constrain(vec![(z, rho_f), (y, -rf), (d, -m_lo)], Sense::Le, 0.0, format!("gl_{j}_{rho}"));
            m.constrain(vec![(y, rf), (z, -rho_f), (d, m_hi)], Sense::Le, m_hi, format!("gu_{j}_{rho}"));
            if let Some(p) = prev {
                m.constrain(vec![(p, 1.0), (d, -1.0)], Sense::Le, 0.0, format!("gord_{j}_{rho}"));
            }
            let inc = value(rho) - value(rho - 1);
            rhs += inc;
            fterms.push((d, inc));
            prev = Some(d);
        }
        m.constrain(fterms, Sense::Eq, rhs, format!("pwl_{j}"));
        f.push(fj);
    }
    m.set_objective(f.iter().map(|v| (*v, 1.0)).collect());
    Ok(Relaxation {
        model: m,
        family: super::Family::Pwl,
        x: lab.x,
        y: lab.y,
        z: lab.z,
        f,
        error_bound: None,
        breakpoints: vec![bs.clone()],
    })
}

/// Denominators replaced by the average `Σ VAP / k`, which makes the ratio
/// linear in `y`; incremental PWL with order binaries over
/// `{0} ∪ b ∪ {r_cap}`.
pub fn build_va_pwl(
    inst: &Instance,
    spec: &ObjectiveSpec,
    bs: &BreakpointSet,
    opts: &RelaxOptions,
) -> Result<Relaxation, RelaxError> {
    let lab = labeling(inst, spec, opts)?;
    let mut m = lab.model;
    let term = &spec.terms[0];
    let avg = inst.nodes.iter().map(|n| term.denominator(n)).sum::<f64>() / inst.k as f64;
    if avg <= 0.0 {
        return Err(RelaxError::Invalid("average denominator is zero".into()));
    }
    let ymax: f64 = inst.nodes.iter().map(|n| term.numerator(n)).sum();
    let mut pts: Vec<f64> = Vec::new();
    if bs.first() > 0.0 {
        pts.push(0.0);
    }
    pts.extend(bs.b.iter().copied());
    let cap = ymax / avg;
    if cap > bs.last() + 1e-12 {
        pts.push(cap);
    }
    let vals: Vec<f64> = pts.iter().map(|&p| spec.curve.phi(p)).collect();
    let segs = pts.len() - 1;
    let mut f = Vec::with_capacity(inst.k);
    for j in 0..inst.k {
        let y = lab.y[0][j];
        let fj = m.continuous(format!("f_{j}"), 0.0, 1.0);
        let w: Vec<VarId> = (0..segs).map(|s| m.continuous(format!("w_{j}_{s}"), 0.0, 1.0)).collect();
        let u: Vec<VarId> = (0..segs.saturating_sub(1))
            .map(|s| {
                let v = m.binary(format!("u_{j}_{s}"));
                m.set_priority(v, 1);
                v
            })
            .collect();
        for s in 0..u.len() {
            m.constrain(vec![(w[s + 1], 1.0), (u[s], -1.0)], Sense::Le, 0.0, format!("inc_a_{j}_{s}"));
            m.constrain(vec![(u[s], 1.0), (w[s], -1.0)], Sense::Le, 0.0, format!("inc_b_{j}_{s}"));
        }
        // y / avg = p_0 + Σ w_s (p_{s+1} − p_s)
        let mut rt = vec![(y, 1.0 / avg)];
        let mut ft = vec![(fj, 1.0)];
        for s in 0..segs {
            rt.push((w[s], -(pts[s + 1] - pts[s])));
            ft.push((w[s], -(vals[s + 1] - vals[s])));
        }
        m.constrain(rt, Sense::Eq, pts[0], format!("va_r_{j}"));
        m.constrain(ft, Sense::Eq, vals[0], format!("va_f_{j}"));
        f.push(fj);
    }
    m.set_objective(f.iter().map(|v| (*v, 1.0)).collect());
    Ok(Relaxation {
        model: m,
        family: super::Family::VaPwl,
        x: lab.x,
        y: lab.y,
        z: lab.z,
        f,
        error_bound: None,
        breakpoints: vec![bs.clone()],
    })
}
