//! Logarithmic PWL over wedge slices of the `(z, y)` plane.
//!
//! Rays `y = r_t z` split the box of each district into `2^ν` convex slices.
//! Each slice carries its own convex-combination weights over its vertices,
//! and one slice is selected by `ν` binaries through its Gray code.

use dbound_milp::{Sense, VarId};

use super::{den_range, labeling, objective_var, RelaxOptions, Relaxation};
use crate::breakpoints::{max_error, step_max};
use crate::error::RelaxError;
use crate::graycode::gray;
use crate::instance::Instance;
use crate::probit::ObjectiveSpec;

/// Sutherland–Hodgman clip of a convex polygon by `a·z + b·y ≥ c`.
pub fn clip_polygon(poly: &[(f64, f64)], a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    let side = |p: (f64, f64)| a * p.0 + b * p.1 - c;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    let mut dedup: Vec<(f64, f64)> = Vec::new();
    for p in out {
        let close = |q: &(f64, f64)| (p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9;
        if !dedup.iter().any(close) {
            dedup.push(p);
        }
    }
    dedup
}

pub fn build_loge_pwl(
    inst: &Instance,
    spec: &ObjectiveSpec,
    (lo, hi): (f64, f64),
    opts: &RelaxOptions,
) -> Result<Relaxation, RelaxError> {
    if !spec.is_single_ratio() {
        return Err(RelaxError::Unsupported("LogE handles a single ratio".into()));
    }
    if opts.nu > 10 {
        return Err(RelaxError::Invalid(format!("ν = {} gives too many slices", opts.nu)));
    }
    let nu = opts.nu;
    let slices = 1usize << nu;
    let rays = step_max(&spec.curve, lo, hi, slices)?;
    let lab = labeling(inst, spec, opts)?;
    let mut m = lab.model;
    let (zmin, zmax) = den_range(inst, spec, 0);
    let codes: Vec<Vec<u8>> = (0..slices)
        .map(|i| if nu == 0 { Vec::new() } else { gray(i, nu).expect("index fits") })
        .collect();
    let mut f = Vec::with_capacity(inst.k);
    for j in 0..inst.k {
        let (y, z) = (lab.y[0][j], lab.z[0][j]);
        let (mut zl, mut zh, mut yl, mut yh) = (zmin, zmax, 0.0f64, hi * zmax);
        if let Some(b) = &opts.bounds {
            let r = &b.ranges[0][j];
            (zl, zh, yl, yh) = (zl.max(r.z.0), zh.min(r.z.1), yl.max(r.y.0), yh.min(r.y.1));
        }
        let rect = [(zl, yl), (zh, yl), (zh, yh), (zl, yh)];
        let fj = objective_var(&mut m, spec, opts, j, spec.curve.phi(hi));
        let deltas: Vec<VarId> = (0..nu)
            .map(|t| {
                let d = m.binary(format!("gbit_{j}_{t}"));
                m.set_priority(d, 1);
                d
            })
            .collect();
        let mut all = Vec::new();
        let mut zt = vec![(z, -1.0)];
        let mut yt = vec![(y, -1.0)];
        let mut ft = vec![(fj, 1.0)];
        let mut by_slice: Vec<Vec<VarId>> = Vec::with_capacity(slices);
        for i in 0..slices {
            let (ra, rb) = (rays.b[i], rays.b[i + 1]);
            // y − r_i z ≥ 0 and r_{i+1} z − y ≥ 0
            let poly = clip_polygon(&clip_polygon(&rect, -ra, 1.0, 0.0), rb, -1.0, 0.0);
            let value = spec.curve.phi(rb);
            let mut lams = Vec::with_capacity(poly.len());
            for (v, p) in poly.iter().enumerate() {
                let lam = m.continuous(format!("lam_{j}_{i}_{v}"), 0.0, 1.0);
                zt.push((lam, p.0));
                yt.push((lam, p.1));
                ft.push((lam, -value));
                all.push((lam, 1.0));
                lams.push(lam);
            }
            by_slice.push(lams);
        }
        if all.is_empty() {
            return Err(RelaxError::Invalid(format!("district {j} has an empty bound box")));
        }
        m.constrain(all, Sense::Eq, 1.0, format!("conv_{j}"));
        m.constrain(zt, Sense::Eq, 0.0, format!("lz_{j}"));
        m.constrain(yt, Sense::Eq, 0.0, format!("ly_{j}"));
        m.constrain(ft, Sense::Le, 0.0, format!("lf_{j}"));
        for (t, &d) in deltas.iter().enumerate() {
            let mut zero = vec![(d, 1.0)];
            let mut one = vec![(d, -1.0)];
            for (i, lams) in by_slice.iter().enumerate() {
                let target = if codes[i][t] == 0 { &mut zero } else { &mut one };
                target.extend(lams.iter().map(|l| (*l, 1.0)));
            }
            m.constrain(zero, Sense::Le, 1.0, format!("g0_{j}_{t}"));
            m.constrain(one, Sense::Le, 0.0, format!("g1_{j}_{t}"));
        }
        f.push(fj);
    }
    m.set_objective(f.iter().map(|v| (*v, 1.0)).collect());
    Ok(Relaxation {
        model: m,
        family: super::Family::Loge,
        x: lab.x,
        y: lab.y,
        z: lab.z,
        f,
        error_bound: Some(inst.k as f64 * max_error(&spec.curve, &rays)),
        breakpoints: vec![rays],
    })
}
