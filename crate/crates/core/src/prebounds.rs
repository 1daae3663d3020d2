//! Root preprocessing: per-district ranges of `(y, z)` under numerator
//! ordering, and gradient cuts that shrink the projection onto `(y, z)`.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dbound_milp::{solve_relaxation, solve_with_lazy, LpOutcome, MilpModel, SolveOptions, SolveStatus, VarId};
use log::{debug, info};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contiguity::ContiguityCallback;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::probit::ObjectiveSpec;
use crate::relax::{labeling, RelaxOptions};

/// Certified ranges of one district's numerator, denominator and `z − y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub y: (f64, f64),
    pub z: (f64, f64),
    pub zy: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistrictBounds {
    /// `ranges[q][j]` for term `q` and district `j` (districts ordered by `y_0`).
    pub ranges: Vec<Vec<Range>>,
    /// `[b_min, b_max]` of the summed ratio of each district.
    pub ratio: Vec<(f64, f64)>,
    /// `[φ(b_min), φ(b_max)]`.
    pub phi: Vec<(f64, f64)>,
    /// Every range solve finished at optimality.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutTerm {
    pub term: usize,
    pub district: usize,
    pub coef_y: f64,
    pub coef_z: f64,
}

/// `lo <= Σ coef_y y + coef_z z <= hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCut {
    pub terms: Vec<CutTerm>,
    pub lo: f64,
    pub hi: f64,
}

impl GradientCut {
    pub fn value(&self, parts: &[Vec<(f64, f64)>]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let (y, z) = parts[t.district][t.term];
                t.coef_y * y + t.coef_z * z
            })
            .sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutPolytope {
    pub cuts: Vec<GradientCut>,
    /// Relaxed objective bound before each round.
    pub history: Vec<f64>,
}

/// Worker count: `DBOUND_THREADS` when set, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("DBOUND_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn ordered_opts(bounds: Option<&DistrictBounds>, cuts: &[GradientCut]) -> RelaxOptions {
    RelaxOptions {
        symmetry: true,
        bounds: bounds.cloned(),
        cuts: cuts.to_vec(),
        ..Default::default()
    }
}

/// Upper bound of `max Σ a_v v` over contiguous ordered districtings.
fn milp_max(inst: &Instance, base: &MilpModel, x: &[Vec<VarId>], obj: Vec<(VarId, f64)>, opts: &SolveOptions) -> Result<(f64, SolveStatus)> {
    let mut m = base.clone();
    m.set_objective(obj);
    let mut cb = ContiguityCallback::new(inst, x.to_vec());
    let r = solve_with_lazy(&m, opts, &mut cb)?;
    if r.status == SolveStatus::Infeasible {
        return Err(Error::Prebounds("no contiguous feasible districting exists".into()));
    }
    Ok((r.dual_bound, r.status))
}

/// Solves the `6k` range problems per ratio term (in parallel) and derives
/// ratio and φ ranges. Only dual bounds enter the ranges, so limits never
/// make them invalid.
pub fn compute_variable_ranges(inst: &Instance, spec: &ObjectiveSpec, opts: &SolveOptions) -> Result<DistrictBounds> {
    let lab = labeling(inst, spec, &ordered_opts(None, &[]))?;
    let (k, terms) = (inst.k, spec.terms.len());
    // job = (term, district, quantity, sign)
    let mut jobs = Vec::new();
    for q in 0..terms {
        for j in 0..k {
            for what in 0..3 {
                for sign in [1.0, -1.0] {
                    jobs.push((q, j, what, sign));
                }
            }
        }
    }
    let results: Mutex<Vec<Option<Result<(f64, SolveStatus)>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = thread_count().min(jobs.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(q, j, what, sign)) = jobs.get(idx) else { break };
                let (y, z) = (lab.y[q][j], lab.z[q][j]);
                let obj = match what {
                    0 => vec![(y, sign)],
                    1 => vec![(z, sign)],
                    _ => vec![(z, sign), (y, -sign)],
                };
                let r = milp_max(inst, &lab.model, &lab.x, obj, opts);
                results.lock().expect("no poisoned workers")[idx] = Some(r);
            });
        }
    });
    let results = results.into_inner().expect("no poisoned workers");
    let mut ranges = vec![
        vec![
            Range {
                y: (0.0, 0.0),
                z: (0.0, 0.0),
                zy: (0.0, 0.0)
            };
            k
        ];
        terms
    ];
    let mut exact = true;
    for (&(q, j, what, sign), r) in jobs.iter().zip(results) {
        let (bound, status) = r.expect("every job ran")?;
        exact &= status == SolveStatus::Optimal;
        let slot = match what {
            0 => &mut ranges[q][j].y,
            1 => &mut ranges[q][j].z,
            _ => &mut ranges[q][j].zy,
        };
        if sign > 0.0 {
            slot.1 = bound;
        } else {
            slot.0 = -bound;
        }
    }
    // widen by the solver tolerance so equalities at the ends stay feasible
    for r in ranges.iter_mut().flatten() {
        for p in [&mut r.y, &mut r.z, &mut r.zy] {
            p.0 -= 1e-6;
            p.1 += 1e-6;
        }
        r.y.0 = r.y.0.max(0.0);
        r.z.0 = r.z.0.max(0.0);
    }
    let domain = spec.ratio_domain(inst);
    let ratio: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for q in 0..terms {
                let r = &ranges[q][j];
                let (dlo, dhi) = domain[q];
                let bmin = if r.z.1 > 0.0 { (r.y.0 / r.z.1).max(dlo) } else { dlo };
                let bmax = if r.z.0 > 0.0 { (r.y.1 / r.z.0).min(dhi) } else { dhi };
                lo += bmin.min(bmax);
                hi += bmax;
            }
            (lo, hi)
        })
        .collect();
    let phi = ratio.iter().map(|&(lo, hi)| (spec.curve.phi(lo), spec.curve.phi(hi))).collect();
    info!("prebounds: {} range solves, exact = {exact}", jobs.len());
    Ok(DistrictBounds {
        ranges,
        ratio,
        phi,
        exact,
    })
}

#[derive(Clone, Debug)]
pub struct CutOptions {
    pub tol: f64,
    pub max_rounds: usize,
    /// Node limit of each cut solve; doubled when a round improves the
    /// relaxed bound by less than 0.1%.
    pub node_limit: usize,
    pub solve: SolveOptions,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_rounds: 20,
            node_limit: 2000,
            solve: SolveOptions::default(),
        }
    }
}

/// Largest ratio `y/z` of district `j`, term `q` over the LP relaxation, by
/// bisection on the sign of `max y − t z`. Returns `(r*, z*)`.
fn max_ratio(base: &MilpModel, y: VarId, z: VarId, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let probe = |t: f64| -> Result<Option<(f64, f64)>> {
        let mut m = base.clone();
        m.set_objective(vec![(y, 1.0), (z, -t)]);
        match solve_relaxation(&m)? {
            LpOutcome::Optimal { x, objective, .. } => Ok(Some((objective, x[z.0]))),
            LpOutcome::Infeasible => Err(Error::Prebounds("relaxed cut polytope is empty".into())),
            LpOutcome::Unbounded => Ok(None),
            LpOutcome::Failed(r) => Err(Error::Prebounds(r)),
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut zstar = probe(a)?.map_or(0.0, |p| p.1);
    for _ in 0..50 {
        let mid = 0.5 * (a + b);
        match probe(mid)? {
            Some((v, zv)) if v >= -1e-9 => {
                a = mid;
                zstar = zv;
            }
            Some(_) => b = mid,
            None => a = mid,
        }
    }
    Ok((b, zstar))
}

/// Root-node gradient cuts. Each round bounds `F` over the current cut
/// polytope by per-district ratio maxima `(r*, z*)`, then bounds the
/// gradient expression `Σ ∇F(y*, z*)·(y, z)` over contiguous districtings.
/// Since that expression vanishes at `(y*, z*)`, a one-sided interval cuts
/// the point off.
pub fn gradient_cuts(
    inst: &Instance,
    spec: &ObjectiveSpec,
    bounds: Option<&DistrictBounds>,
    f_star: f64,
    opts: &CutOptions,
) -> Result<CutPolytope> {
    let domain = spec.ratio_domain(inst);
    let mut poly = CutPolytope::default();
    let mut node_limit = opts.node_limit;
    for round in 0..opts.max_rounds {
        let lab = labeling(inst, spec, &ordered_opts(bounds, &poly.cuts))?;
        let (k, terms) = (inst.k, spec.terms.len());
        let mut star = vec![vec![(0.0, 0.0); terms]; k];
        for j in 0..k {
            for q in 0..terms {
                let (lo, hi) = match bounds {
                    Some(b) => {
                        let r = &b.ranges[q][j];
                        let lo = if r.z.1 > 0.0 { (r.y.0 / r.z.1).max(domain[q].0) } else { domain[q].0 };
                        (lo.min(domain[q].1), domain[q].1)
                    }
                    None => domain[q],
                };
                star[j][q] = max_ratio(&lab.model, lab.y[q][j], lab.z[q][j], lo, hi)?;
            }
        }
        let relaxed: f64 = star
            .iter()
            .map(|s| spec.curve.phi(s.iter().map(|p| p.0).sum()))
            .sum();
        debug!("gradient cuts round {round}: relaxed bound {relaxed:.6}");
        if let Some(&prev) = poly.history.last() {
            if prev - relaxed < 1e-3 * prev.abs() {
                node_limit *= 2;
            }
        }
        poly.history.push(relaxed);
        if relaxed <= f_star + opts.tol {
            break;
        }
        let mut cut_terms = Vec::new();
        for (j, s) in star.iter().enumerate() {
            let g = spec.curve.derivative(s.iter().map(|p| p.0).sum());
            for (q, &(r, z)) in s.iter().enumerate() {
                if z <= 0.0 {
                    continue;
                }
                cut_terms.push(CutTerm {
                    term: q,
                    district: j,
                    coef_y: g / z,
                    coef_z: -g * r / z,
                });
            }
        }
        let expr: Vec<(VarId, f64)> = cut_terms
            .iter()
            .flat_map(|t| [(lab.y[t.term][t.district], t.coef_y), (lab.z[t.term][t.district], t.coef_z)])
            .collect();
        let solve = SolveOptions {
            node_limit: Some(node_limit),
            ..opts.solve.clone()
        };
        let (hi, _) = milp_max(inst, &lab.model, &lab.x, expr.clone(), &solve)?;
        let (neg_lo, _) = milp_max(inst, &lab.model, &lab.x, expr.into_iter().map(|(v, a)| (v, -a)).collect(), &solve)?;
        let lo = -neg_lo;
        if hi > 0.0 && lo < 0.0 {
            debug!("gradient cuts: interval [{lo:.3e}, {hi:.3e}] contains 0, stopping");
            break;
        }
        // slack for the solver tolerance
        poly.cuts.push(GradientCut {
            terms: cut_terms,
            lo: lo - 1e-7,
            hi: hi + 1e-7,
        });
    }
    Ok(poly)
}

/// Bounds and cuts stored for reuse, keyed by instance and options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreboundCache {
    pub key: String,
    pub bounds: DistrictBounds,
    pub cuts: Vec<GradientCut>,
}

/// SHA-256 over the canonical instance JSON, the objective and `extra`.
pub fn cache_key(inst: &Instance, spec: &ObjectiveSpec, extra: &str) -> String {
    let mut h = Sha256::new();
    h.update(inst.to_json_string().as_bytes());
    h.update(serde_json::to_string(spec).expect("spec serializes").as_bytes());
    h.update(extra.as_bytes());
    hex::encode(h.finalize())
}

/// The cached entry when the file exists and its key matches.
pub fn load_cache(path: &Path, key: &str) -> Option<PreboundCache> {
    let text = std::fs::read_to_string(path).ok()?;
    let c: PreboundCache = serde_json::from_str(&text).ok()?;
    (c.key == key).then_some(c)
}

pub fn save_cache(path: &Path, cache: &PreboundCache) -> Result<()> {
    let text = serde_json::to_string_pretty(cache).map_err(|e| Error::Prebounds(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{grid_instance, Field};
    use crate::oracle::{brute_force_optimum, enumerate_contiguous_partitions};

    fn quick() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn single_district_is_exact() {
        let inst = grid_instance(2, 2, 1, 0.2, 3).unwrap();
        let b = compute_variable_ranges(&inst, &ObjectiveSpec::bvap(), &quick()).unwrap();
        let y = inst.total(Field::Bvap) as f64;
        assert!((b.ranges[0][0].y.0 - y).abs() < 1e-5 && (b.ranges[0][0].y.1 - y).abs() < 1e-5);
    }

    #[test]
    fn ranges_contain_every_partition() {
        let inst = grid_instance(3, 3, 2, 0.2, 7).unwrap();
        let spec = ObjectiveSpec::bvap();
        let b = compute_variable_ranges(&inst, &spec, &quick()).unwrap();
        assert!(b.ranges[0][0].y.1 <= b.ranges[0][1].y.1 + 1e-9);
        for a in enumerate_contiguous_partitions(&inst).unwrap() {
            let mut parts = spec.district_parts(&inst, &a);
            parts.sort_by(|p, q| p[0].0.total_cmp(&q[0].0));
            for (j, p) in parts.iter().enumerate() {
                let r = &b.ranges[0][j];
                let (y, z) = p[0];
                assert!(r.y.0 <= y && y <= r.y.1 && r.z.0 <= z && z <= r.z.1);
                assert!(r.zy.0 <= z - y && z - y <= r.zy.1);
                assert!(b.ratio[j].0 <= y / z + 1e-12 && y / z <= b.ratio[j].1 + 1e-12);
            }
        }
    }

    #[test]
    fn gradient_cuts_are_valid() {
        let inst = grid_instance(3, 3, 2, 0.2, 11).unwrap();
        let spec = ObjectiveSpec::bvap();
        let best = brute_force_optimum(&inst, &spec).unwrap();
        let b = compute_variable_ranges(&inst, &spec, &quick()).unwrap();
        let poly = gradient_cuts(&inst, &spec, Some(&b), best.value, &CutOptions::default()).unwrap();
        assert!(poly.history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        for a in enumerate_contiguous_partitions(&inst).unwrap() {
            let mut parts = spec.district_parts(&inst, &a);
            parts.sort_by(|p, q| p[0].0.total_cmp(&q[0].0));
            for c in &poly.cuts {
                let v = c.value(&parts);
                assert!(c.lo <= v && v <= c.hi, "{v} outside [{}, {}]", c.lo, c.hi);
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let inst = grid_instance(2, 2, 2, 0.5, 1).unwrap();
        let spec = ObjectiveSpec::bvap();
        let key = cache_key(&inst, &spec, "x");
        assert_eq!(key, cache_key(&inst, &spec, "x"));
        assert_ne!(key, cache_key(&inst, &spec, "y"));
        let b = compute_variable_ranges(&inst, &spec, &quick()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let c = PreboundCache {
            key: key.clone(),
            bounds: b,
            cuts: vec![],
        };
        save_cache(&path, &c).unwrap();
        assert_eq!(load_cache(&path, &key), Some(c));
        assert_eq!(load_cache(&path, "other"), None);
    }
}
