//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use dbound::breakpoints::{multiplicative, step_exp, step_max};
use dbound::contiguity::separate_assignment;
use dbound::graycode::{gray, gray_inverse, slice_index};
use dbound::knapsack::{KnapsackProblem, SigmoidFn};
use dbound::oracle::{brute_force_optimum, enumerate_contiguous_partitions, EnumerationResult};
use dbound::prebounds::{compute_variable_ranges, gradient_cuts, CutOptions};
use dbound::relax::{build, dominating_rhs, per_step_rhs, Family, RelaxOptions};
use dbound::{grid_instance, Assignment, Instance, ObjectiveSpec, ProbitCurve};
use dbound_milp::SolveOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn exact() -> SolveOptions {
    SolveOptions {
        abs_gap: 1e-9,
        rel_gap: 1e-9,
        ..Default::default()
    }
}

/// Seeded grids with n in {6, 8, 9} and k in {2, 3}, skipping seeds with no
/// feasible contiguous partition.
fn grid_suite(count: usize, tau: f64, offset: u64) -> Vec<(Instance, EnumerationResult)> {
    let shapes = [(2, 3), (2, 4), (3, 3)];
    let spec = ObjectiveSpec::bvap();
    let mut out = Vec::new();
    let mut seed = offset;
    while out.len() < count {
        let idx = out.len();
        let (r, c) = shapes[idx % 3];
        let k = 2 + (idx / 3) % 2;
        seed += 1;
        let inst = grid_instance(r, c, k, tau, seed).expect("valid grid");
        if let Ok(best) = brute_force_optimum(&inst, &spec) {
            out.push((inst, best));
        }
    }
    out
}

fn criteria_1_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let spec = ObjectiveSpec::bvap();
    let families = [Family::StepMax, Family::StepExp, Family::Loge, Family::Bn];
    let mut worst_dom = f64::INFINITY;
    let mut worst_sandwich = f64::NEG_INFINITY;
    let mut contiguous = true;
    let mut failures = Vec::new();
    let suite = grid_suite(50, 0.2, 0);
    for (i, (inst, best)) in suite.iter().enumerate() {
        for f in families {
            let r = match build(inst, &spec, f, &RelaxOptions::default()) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("#{i} {f}: {e}"));
                    continue;
                }
            };
            let s = match r.solve(inst, &exact()) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("#{i} {f}: {e}"));
                    continue;
                }
            };
            let bound = s.result.dual_bound;
            worst_dom = worst_dom.min(bound - best.value);
            if bound < best.value - 1e-7 {
                failures.push(format!("#{i} {f}: bound {bound} < optimum {}", best.value));
            }
            if let Some(e) = r.error_bound {
                worst_sandwich = worst_sandwich.max(bound - e - best.value);
            }
            if let Some(a) = &s.assignment {
                contiguous &= a.is_contiguous(inst) && a.pop_feasible(inst);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass1 = failures.is_empty() && secs < 600.0 && contiguous;
    let d1 = format!(
        "50 grids x 4 families, min(bound - opt) = {worst_dom:.3e}, incumbents contiguous = {contiguous}, {secs:.1}s{}",
        if failures.is_empty() { String::new() } else { format!(", failures: {}", failures.join("; ")) }
    );
    let pass2 = worst_sandwich <= 1e-7;
    let d2 = format!("max(bound - sum delta - opt) = {worst_sandwich:.3e} over step families");
    (outcome(pass1, d1), outcome(pass2, d2))
}

fn criterion_3() -> Outcome {
    let curve = ProbitCurve::BVAP;
    let se = step_exp(&curve, 0.0, 1.0, 10).expect("step-exp");
    let b1 = se.set.b[1];
    let sm = step_max(&curve, 0.0, 1.0, 10).expect("step-max");
    let inc: Vec<f64> = sm.b.windows(2).map(|w| curve.phi(w[1]) - curve.phi(w[0])).collect();
    let spread = inc.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - inc.iter().cloned().fold(f64::INFINITY, f64::min);
    let (_, gamma) = multiplicative(1.0, 11.0, 100).expect("geometric");
    let pass = (b1 - 0.1367).abs() <= 2e-3 && spread <= 1e-8 && (gamma - 0.953).abs() <= 5e-4;
    outcome(pass, format!("step-exp b1 = {b1:.5}, step-max increment spread = {spread:.2e}, gamma = {gamma:.5}"))
}

fn criterion_4() -> Outcome {
    let mut round_trip = true;
    for nu in 1..=12 {
        for i in 0..1usize << nu {
            round_trip &= gray_inverse(&gray(i, nu).unwrap()).unwrap() == i;
        }
    }
    let anchors = gray(4, 3).unwrap() == vec![1, 1, 0] && gray(6, 3).unwrap() == vec![1, 0, 1];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for s in 0..10_000 {
        let nu = 1 + s % 6;
        let ang: f64 = rng.gen_range(0.0..FRAC_PI_4);
        let rad: f64 = rng.gen_range(0.1..100.0);
        let info = slice_index(rad * ang.cos(), rad * ang.sin(), nu).unwrap();
        let w = FRAC_PI_4 / (1usize << nu) as f64;
        let expect = (((FRAC_PI_4 - ang) / w).floor() as usize).min((1 << nu) - 1);
        if info.index != expect {
            mismatches += 1;
        }
    }
    outcome(
        round_trip && anchors && mismatches == 0,
        format!("round trip nu<=12: {round_trip}, anchors: {anchors}, slice mismatches: {mismatches}/10000"),
    )
}

fn criterion_5() -> Outcome {
    let curve = ProbitCurve::BVAP;
    let mut dominates = true;
    let mut strict = false;
    for ell in 2..=12 {
        let bs = step_max(&curve, 0.0, 1.0, ell).unwrap();
        // ordered patterns: zeros up to a cut, ones after, optionally one fractional entry
        for cut in 0..ell {
            for frac in [None, Some(0.5)] {
                let mut delta: Vec<f64> = (1..ell).map(|t| if t > cut { 1.0 } else { 0.0 }).collect();
                if let (Some(v), true) = (frac, cut > 0) {
                    delta[cut - 1] = v;
                }
                let dom = dominating_rhs(&curve, &bs, &delta);
                let per = per_step_rhs(&curve, &bs, &delta).into_iter().fold(f64::INFINITY, f64::min);
                dominates &= dom <= per + 1e-12;
                strict |= dom < per - 1e-9;
            }
        }
    }
    let spec = ObjectiveSpec::bvap();
    let mut lp_ok = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    let suite = grid_suite(20, 0.2, 500);
    for (inst, _) in &suite {
        let lp = |dominating| {
            build(inst, &spec, Family::StepMax, &RelaxOptions { dominating, ..Default::default() })
                .unwrap()
                .lp_bound()
                .unwrap()
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (with, without) = (lp(true), lp(false));
        worst = worst.max(with - without);
        if with <= without + 1e-9 {
            lp_ok += 1;
        }
    }
    outcome(
        dominates && strict && lp_ok == suite.len(),
        format!(
            "row dominance (l<=12): {dominates}, strict on a fractional pattern: {strict}, LP with <= without on {lp_ok}/{} (max diff {worst:.2e})",
            suite.len()
        ),
    )
}

fn fd_dot(spec: &ObjectiveSpec, parts: &[Vec<(f64, f64)>]) -> f64 {
    let h = 1e-6;
    let mut dot = 0.0;
    for j in 0..parts.len() {
        for q in 0..parts[j].len() {
            for coord in 0..2 {
                let mut p = parts.to_vec();
                let mut m = parts.to_vec();
                let bump = |v: &mut (f64, f64), d: f64| if coord == 0 { v.0 += d } else { v.1 += d };
                bump(&mut p[j][q], h);
                bump(&mut m[j][q], -h);
                let g = (spec.value_of_parts(&p) - spec.value_of_parts(&m)) / (2.0 * h);
                let (y, z) = parts[j][q];
                dot += g * if coord == 0 { y } else { z };
            }
        }
    }
    dot
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut worst_fd = 0.0f64;
    for spec in [ObjectiveSpec::bvap(), ObjectiveSpec::cpvi()] {
        let terms = spec.terms.len();
        for _ in 0..100 {
            let k = rng.gen_range(1..=4);
            let parts: Vec<Vec<(f64, f64)>> = (0..k)
                .map(|_| {
                    (0..terms)
                        .map(|_| {
                            let z: f64 = rng.gen_range(0.5..2.0);
                            (z * rng.gen_range(0.0..0.6), z)
                        })
                        .collect()
                })
                .collect();
            let g = spec.gradient_of_parts(&parts);
            let dot: f64 = g
                .iter()
                .zip(&parts)
                .flat_map(|(gj, pj)| gj.iter().zip(pj).map(|(a, b)| a.0 * b.0 + a.1 * b.1))
                .sum();
            worst = worst.max(dot.abs());
            worst_fd = worst_fd.max(fd_dot(&spec, &parts).abs());
        }
    }
    outcome(
        worst <= 1e-8 && worst_fd <= 1e-8,
        format!("max |grad F . (y,z)| analytic = {worst:.2e}, finite difference = {worst_fd:.2e} (single and two ratios)"),
    )
}

fn criterion_7() -> Outcome {
    let spec = ObjectiveSpec::bvap();
    let suite = grid_suite(20, 0.2, 900);
    let ell = 4;
    let mut ok = 0;
    let mut best_gain = 0.0f64;
    let mut notes = Vec::new();
    for (i, (inst, best)) in suite.iter().enumerate() {
        let plain = build(inst, &spec, Family::StepMax, &RelaxOptions { ell, ..Default::default() })
            .unwrap()
            .solve(inst, &exact())
            .unwrap()
            .result
            .dual_bound;
        let bounds = compute_variable_ranges(inst, &spec, &exact()).unwrap();
        let cuts = gradient_cuts(inst, &spec, Some(&bounds), best.value, &CutOptions::default()).unwrap().cuts;
        let opts = RelaxOptions {
            ell,
            symmetry: true,
            bounds: Some(bounds),
            cuts,
            ..Default::default()
        };
        let aided = build(inst, &spec, Family::StepMax, &opts).unwrap().solve(inst, &exact()).unwrap().result.dual_bound;
        if aided <= plain + 1e-7 && aided >= best.value - 1e-7 {
            ok += 1;
        } else {
            notes.push(format!("#{i}: plain {plain:.6} aided {aided:.6} opt {:.6}", best.value));
        }
        best_gain = best_gain.max(plain - aided);
    }
    outcome(
        ok == suite.len() && best_gain > 1e-4,
        format!(
            "opt <= aided <= unaided on {ok}/{}, largest improvement {best_gain:.4}{}",
            suite.len(),
            if notes.is_empty() { String::new() } else { format!(", {}", notes.join("; ")) }
        ),
    )
}

/// Best value over a fine `(k_a, k_b)` grid, refined by golden section in `k_a`.
fn continuous_grid(p: &KnapsackProblem) -> f64 {
    let n = p.n as f64;
    let eval = |ka: f64, kb: f64| p.interior(ka, kb).map(|y| p.value(ka, kb, n - ka - kb, y));
    let steps = 400;
    let mut best = f64::NEG_INFINITY;
    for bi in 0..=steps {
        let kb = n * bi as f64 / steps as f64;
        let line = |ka: f64| eval(ka, kb).unwrap_or(f64::NEG_INFINITY);
        let mut arg = (f64::NEG_INFINITY, 0.0);
        for ai in 0..=steps {
            let ka = (n - kb) * ai as f64 / steps as f64;
            let v = line(ka);
            if v > arg.0 {
                arg = (v, ka);
            }
        }
        if !arg.0.is_finite() {
            continue;
        }
        let h = (n - kb) / steps as f64;
        let (mut lo, mut hi) = ((arg.1 - h).max(0.0), (arg.1 + h).min(n - kb));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if line(m1) >= line(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.max(arg.0).max(line(0.5 * (lo + hi)));
    }
    best
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut int_worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(1..=12);
        let m = rng.gen_range(0.0..=1.0) * n as f64;
        let f = SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0).unwrap();
        let p = KnapsackProblem::new(f, n, m).unwrap();
        let closed = p.integer_optimum().unwrap().value;
        let brute = p.enumerate().unwrap().value;
        int_worst = int_worst.max((closed - brute).abs());
    }
    let mut cont_worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(1..=12);
        let m = rng.gen_range(0.0..=1.0) * n as f64;
        let p = KnapsackProblem::new(SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0).unwrap(), n, m).unwrap();
        let closed = p.continuous_optimum().unwrap().value;
        cont_worst = cont_worst.max((closed - continuous_grid(&p)).abs());
    }
    let p = KnapsackProblem::new(SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0).unwrap(), 4, 1.0).unwrap();
    let da = p.d_a().unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        int_worst <= 1e-9 && cont_worst <= 1e-6 && (da - 0.5746).abs() <= 1e-3 && secs < 120.0,
        format!("integer vs grid {int_worst:.1e} (500), continuous vs fine grid {cont_worst:.1e}, d_a = {da:.5}, {secs:.1}s"),
    )
}

fn criterion_9() -> Outcome {
    let c = ProbitCurve::BVAP;
    let (p0, p5) = (c.phi(0.0), c.phi(0.5));
    let psi = ProbitCurve::CPVI.phi(1.0338);
    outcome(
        (p0 - 0.0023493).abs() <= 1e-6 && (p5 - 0.7210622).abs() <= 1e-6 && (psi - 0.5).abs() <= 1e-12,
        format!("phi(0) = {p0:.7}, phi(0.5) = {p5:.7}, Psi(1.0338) = {psi:.15}"),
    )
}

/// Every labeling of the nodes into `k` districts, with the districts that
/// are connected.
fn connected_districts(inst: &Instance, labels: &[usize]) -> Vec<bool> {
    let members = Assignment::new(labels.to_vec()).members(inst.k);
    members.iter().map(|m| m.is_empty() || inst.is_connected_subset(m)).collect()
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut emitted = 0;
    let mut bad = Vec::new();
    for (r, c, k) in [(2, 3, 2), (2, 4, 3), (3, 3, 2), (3, 3, 3)] {
        let inst = grid_instance(r, c, k, 0.5, 10).unwrap();
        let n = inst.n();
        let mut cuts = Vec::new();
        for _ in 0..300 {
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            for cut in separate_assignment(&inst, &labels, k) {
                if cut.violation(&labels) <= 0 {
                    bad.push(format!("cut {cut:?} not violated by its candidate"));
                }
                cuts.push(cut);
            }
        }
        emitted += cuts.len();
        // all k^n labelings; a cut on district j must hold whenever j is connected
        let total = k.pow(n as u32);
        let mut labels = vec![0usize; n];
        for code in 0..total {
            let mut v = code;
            for l in labels.iter_mut() {
                *l = v % k;
                v /= k;
            }
            let conn = connected_districts(&inst, &labels);
            for cut in &cuts {
                if conn[cut.district] && cut.violation(&labels) > 0 {
                    bad.push(format!("cut {cut:?} cuts off {labels:?}"));
                    break;
                }
            }
            if bad.len() > 3 {
                break;
            }
        }
    }
    // incumbents of callback solves
    let spec = ObjectiveSpec::bvap();
    let mut solved = 0;
    let mut all_contiguous = true;
    for seed in 0..10 {
        let inst = grid_instance(3, 3, 2 + seed as usize % 2, 0.2, 100 + seed).unwrap();
        if enumerate_contiguous_partitions(&inst).unwrap().is_empty() {
            continue;
        }
        let r = build(&inst, &spec, Family::StepMax, &RelaxOptions { ell: 6, ..Default::default() }).unwrap();
        if let Some(a) = r.solve(&inst, &exact()).unwrap().assignment {
            all_contiguous &= a.is_contiguous(&inst);
            solved += 1;
        }
    }
    outcome(
        bad.is_empty() && emitted > 0 && all_contiguous && solved > 0,
        format!(
            "{emitted} cuts violated by candidates and valid on all labelings: {}, {solved} callback solves contiguous: {all_contiguous}",
            bad.is_empty()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let (c1, c2) = criteria_1_2();
    let results = vec![
        ("1 bound dominance", c1),
        ("2 error sandwich", c2),
        ("3 breakpoint constants", criterion_3()),
        ("4 gray code", criterion_4()),
        ("5 dominating inequality", criterion_5()),
        ("6 gradient identity", criterion_6()),
        ("7 gradient cuts and prebounds", criterion_7()),
        ("8 knapsack closed form", criterion_8()),
        ("9 probit constants", criterion_9()),
        ("10 contiguity soundness", criterion_10()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
