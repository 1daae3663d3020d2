//! Ben-Tal–Nemirovski folding with strengthened Gray-code slice bounds.
//!
//! `(x1, x2) = (z, y/c)` is rotated and reflected `ν` times; the reflection
//! bits spell the Gray code of the slice. The folded point is written as a
//! convex combination of a quadrilateral covering the folded sector, and
//! slice `i` bounds `f` by `a_i` on its low-ratio edge and `b_i = φ(r_high)`
//! on its high-ratio edge.

use dbound_milp::{Sense, VarId};

use super::{den_range, labeling, objective_var, RelaxOptions, Relaxation};
use crate::error::RelaxError;
use crate::graycode::{folded_zero_is_low, gray, slice_angles, slice_width, strengthened_support, theta};
use crate::instance::Instance;
use crate::probit::{ObjectiveSpec, ProbitCurve};

#[derive(Clone, Debug, PartialEq)]
pub struct BnGeometry {
    pub nu: usize,
    /// Numerator scale so that every ratio maps into the cone `x2 <= x1`.
    pub c: f64,
    pub r_in: f64,
    pub r_out: f64,
    /// `P0, P1` on the folded angle-0 ray, `P2, P3` on the angle-`w` ray
    /// (inner radius first).
    pub vertices: [(f64, f64); 4],
}

impl BnGeometry {
    /// `r_in` bounds the norm of every point from below, `n_max` from above.
    pub fn new(nu: usize, c: f64, r_in: f64, n_max: f64) -> Self {
        let w = slice_width(nu);
        let r_out = n_max / (0.5 * w).cos();
        let (s, co) = w.sin_cos();
        Self {
            nu,
            c,
            r_in,
            r_out,
            vertices: [(r_in, 0.0), (r_out, 0.0), (r_in * co, r_in * s), (r_out * co, r_out * s)],
        }
    }

    /// Ratio range `[c tan(lo), c tan(hi)]` of slice `i`.
    pub fn ratio_range(&self, i: usize) -> (f64, f64) {
        let (lo, hi) = slice_angles(i, self.nu);
        (self.c * lo.tan(), self.c * hi.tan())
    }

    /// Largest ratio of a point with weight `w` on the high-ratio edge: the
    /// low edge at the inner radius and the high edge at the outer radius.
    pub fn worst_ratio(&self, i: usize, w: f64) -> f64 {
        let width = slice_width(self.nu);
        let (lo, _) = slice_angles(i, self.nu);
        let off = (w * self.r_out * width.sin()).atan2((1.0 - w) * self.r_in + w * self.r_out * width.cos());
        self.c * (lo + off.min(width)).tan()
    }
}

/// `(a_i, b_i, zero_is_low)` for every slice. `a_i` is the smallest value on
/// the low edge that keeps `a(1−w) + b w ≥ φ(ratio)` for all weights `w`,
/// found by sampling and local refinement plus a small margin.
pub fn bn_slice_values(curve: &ProbitCurve, geo: &BnGeometry) -> Vec<(f64, f64, bool)> {
    let slices = 1usize << geo.nu;
    (0..slices)
        .map(|i| {
            let (rlo, rhi) = geo.ratio_range(i);
            let b = curve.phi(rhi);
            let need = |w: f64| (curve.phi(geo.worst_ratio(i, w)) - b * w) / (1.0 - w);
            let samples = 2000;
            let top = 1.0 - 1e-7;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for s in 0..=samples {
                let w = top * s as f64 / samples as f64;
                let v = need(w);
                if v > best.0 {
                    best = (v, w);
                }
            }
            // golden-section refinement around the best sample
            let h = top / samples as f64;
            let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(top));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if need(m1) >= need(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let sup = best.0.max(need(0.5 * (lo + hi)));
            // a = b is always valid since no point of the slice exceeds r_high
            let a = (curve.phi(rlo).max(sup) + 1e-9).min(b);
            (a, b, folded_zero_is_low(i, geo.nu))
        })
        .collect()
}

pub fn build_bn_pwl(
    inst: &Instance,
    spec: &ObjectiveSpec,
    (_lo, hi): (f64, f64),
    opts: &RelaxOptions,
) -> Result<Relaxation, RelaxError> {
    if !spec.is_single_ratio() {
        return Err(RelaxError::Unsupported("BN-PWL handles a single ratio".into()));
    }
    let nu = opts.nu;
    if nu == 0 || nu > 10 {
        return Err(RelaxError::Invalid(format!("BN-PWL needs 1 <= ν <= 10, got {nu}")));
    }
    let lab = labeling(inst, spec, opts)?;
    let mut m = lab.model;
    let c = hi.max(1.0);
    let (mut zmin, zmax) = den_range(inst, spec, 0);
    let mut n_max = zmax * (1.0 + (hi / c).powi(2)).sqrt();
    if let Some(b) = &opts.bounds {
        let mut lo_all = f64::INFINITY;
        let mut hi_all = 0.0f64;
        for r in &b.ranges[0] {
            lo_all = lo_all.min(r.z.0);
            hi_all = hi_all.max((r.z.1.powi(2) + (r.y.1 / c).powi(2)).sqrt());
        }
        zmin = zmin.max(lo_all);
        n_max = n_max.min(hi_all);
    }
    let geo = BnGeometry::new(nu, c, zmin.max(0.0), n_max);
    let values = bn_slice_values(&spec.curve, &geo);
    let big_m = 2.0 * n_max.max(1.0);
    let bound = n_max.max(1.0);
    let slices = 1usize << nu;
    let mut f = Vec::with_capacity(inst.k);
    for j in 0..inst.k {
        let (y, z) = (lab.y[0][j], lab.z[0][j]);
        let fj = objective_var(&mut m, spec, opts, j, spec.curve.phi(hi));
        // (ξ_0, η_0) = (z, y/c) as linear expressions
        let mut xi: Vec<(VarId, f64)> = vec![(z, 1.0)];
        let mut eta: Vec<(VarId, f64)> = vec![(y, 1.0 / c)];
        let mut deltas = Vec::with_capacity(nu);
        for st in 1..=nu {
            let (s, co) = theta(st).sin_cos();
            let xv = m.continuous(format!("xi_{j}_{st}"), -bound, bound);
            let et = m.continuous(format!("etat_{j}_{st}"), -bound, bound);
            let ev = m.continuous(format!("eta_{j}_{st}"), 0.0, bound);
            let d = m.binary(format!("refl_{j}_{st}"));
            m.set_priority(d, 1);
            let mut rx = vec![(xv, -1.0)];
            rx.extend(xi.iter().map(|(v, a)| (*v, co * a)));
            rx.extend(eta.iter().map(|(v, a)| (*v, s * a)));
            m.constrain(merge(rx), Sense::Eq, 0.0, format!("rotx_{j}_{st}"));
            let mut ry = vec![(et, -1.0)];
            ry.extend(xi.iter().map(|(v, a)| (*v, -s * a)));
            ry.extend(eta.iter().map(|(v, a)| (*v, co * a)));
            m.constrain(merge(ry), Sense::Eq, 0.0, format!("roty_{j}_{st}"));
            // η = |η̃|, δ = 1 exactly when η̃ < 0
            m.constrain(vec![(ev, 1.0), (et, -1.0)], Sense::Ge, 0.0, format!("abs1_{j}_{st}"));
            m.constrain(vec![(ev, 1.0), (et, 1.0)], Sense::Ge, 0.0, format!("abs2_{j}_{st}"));
            m.constrain(vec![(ev, 1.0), (et, -1.0), (d, -big_m)], Sense::Le, 0.0, format!("abs3_{j}_{st}"));
            m.constrain(vec![(ev, 1.0), (et, 1.0), (d, big_m)], Sense::Le, big_m, format!("abs4_{j}_{st}"));
            xi = vec![(xv, 1.0)];
            eta = vec![(ev, 1.0)];
            deltas.push(d);
        }
        let lam: Vec<VarId> = (0..4).map(|v| m.continuous(format!("q_{j}_{v}"), 0.0, 1.0)).collect();
        m.constrain(lam.iter().map(|l| (*l, 1.0)).collect(), Sense::Eq, 1.0, format!("qconv_{j}"));
        let mut fx = xi.clone().into_iter().map(|(v, a)| (v, -a)).collect::<Vec<_>>();
        fx.extend(lam.iter().zip(&geo.vertices).map(|(l, p)| (*l, p.0)));
        m.constrain(fx, Sense::Eq, 0.0, format!("qx_{j}"));
        let mut fy = eta.iter().map(|(v, a)| (*v, -a)).collect::<Vec<_>>();
        fy.extend(lam.iter().zip(&geo.vertices).map(|(l, p)| (*l, p.1)));
        m.constrain(fy, Sense::Eq, 0.0, format!("qy_{j}"));
        for (i, &(a, b, zero_low)) in values.iter().enumerate().take(slices) {
            let code = gray(i, nu).expect("index fits");
            let (w0, w1) = if zero_low { (a, b) } else { (b, a) };
            // f ≤ w0 (λ_0 + λ_1) + w1 (λ_2 + λ_3) + Σ_{t∈S} mismatch_t
            let mut terms = vec![(fj, 1.0), (lam[0], -w0), (lam[1], -w0), (lam[2], -w1), (lam[3], -w1)];
            let mut rhs = 0.0;
            for t in strengthened_support(&code).expect("valid code") {
                let d = deltas[t - 1];
                if code[t - 1] == 0 {
                    terms.push((d, -1.0));
                } else {
                    terms.push((d, 1.0));
                    rhs += 1.0;
                }
            }
            m.constrain(terms, Sense::Le, rhs, format!("bn_{j}_{i}"));
        }
        f.push(fj);
    }
    m.set_objective(f.iter().map(|v| (*v, 1.0)).collect());
    Ok(Relaxation {
        model: m,
        family: super::Family::Bn,
        x: lab.x,
        y: lab.y,
        z: lab.z,
        f,
        error_bound: None,
        breakpoints: Vec::new(),
    })
}

fn merge(mut terms: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += a,
            _ => out.push((v, a)),
        }
    }
    out
}
