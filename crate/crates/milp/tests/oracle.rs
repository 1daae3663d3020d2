//! Simplex and branch-and-bound checked against exact vertex enumeration.

use dbound_milp::{export_lp, parse_lp, solve, MilpModel, Sense, SolveOptions, SolveStatus, VarId};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

fn q(v: i64) -> Q {
    Q::from_integer(v.into())
}

/// A half-space `a.x <= b` with integer data.
#[derive(Clone)]
struct Half {
    a: Vec<i64>,
    b: i64,
}

/// Solves the square system exactly; None when singular.
fn gauss(mut m: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        rhs.swap(c, p);
        let inv = Q::one() / m[c][c].clone();
        for k in c..n {
            m[c][k] = m[c][k].clone() * inv.clone();
        }
        rhs[c] = rhs[c].clone() * inv;
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in c..n {
                    let v = m[c][k].clone() * f.clone();
                    m[r][k] = m[r][k].clone() - v;
                }
                let v = rhs[c].clone() * f;
                rhs[r] = rhs[r].clone() - v;
            }
        }
    }
    Some(rhs)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Exact maximum of `c.x` over a bounded polytope, or None when empty.
fn vertex_max(c: &[i64], halves: &[Half]) -> Option<Q> {
    let n = c.len();
    let mut best: Option<Q> = None;
    for combo in combinations(halves.len(), n) {
        let m: Vec<Vec<Q>> = combo.iter().map(|&i| halves[i].a.iter().map(|&v| q(v)).collect()).collect();
        let rhs: Vec<Q> = combo.iter().map(|&i| q(halves[i].b)).collect();
        let Some(x) = gauss(m, rhs) else { continue };
        let feasible = halves.iter().all(|h| {
            let act: Q = h.a.iter().zip(&x).map(|(a, xi)| q(*a) * xi.clone()).sum();
            act <= q(h.b)
        });
        if feasible {
            let val: Q = c.iter().zip(&x).map(|(a, xi)| q(*a) * xi.clone()).sum();
            if best.as_ref().is_none_or(|b| val > *b) {
                best = Some(val);
            }
        }
    }
    best
}

struct RandomLp {
    c: Vec<i64>,
    rows: Vec<(Vec<i64>, Sense, i64)>,
    lower: Vec<i64>,
    upper: Vec<i64>,
}

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RandomLp {
    let c = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
            let sense = match rng.gen_range(0..5) {
                0 => Sense::Ge,
                1 => Sense::Eq,
                _ => Sense::Le,
            };
            (a, sense, rng.gen_range(-6..=10))
        })
        .collect();
    let lower: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=0)).collect();
    let upper = lower.iter().map(|l| l + rng.gen_range(1..=6)).collect();
    RandomLp { c, rows, lower, upper }
}

fn halves_of(lp: &RandomLp, fixed: &[(usize, i64)]) -> Vec<Half> {
    let n = lp.c.len();
    let mut h = Vec::new();
    for (a, s, b) in &lp.rows {
        let neg: Vec<i64> = a.iter().map(|v| -v).collect();
        match s {
            Sense::Le => h.push(Half { a: a.clone(), b: *b }),
            Sense::Ge => h.push(Half { a: neg, b: -b }),
            Sense::Eq => {
                h.push(Half { a: a.clone(), b: *b });
                h.push(Half { a: neg, b: -b });
            }
        }
    }
    for j in 0..n {
        let (lo, hi) = fixed
            .iter()
            .find(|(k, _)| *k == j)
            .map_or((lp.lower[j], lp.upper[j]), |(_, v)| (*v, *v));
        let mut e = vec![0; n];
        e[j] = 1;
        h.push(Half { a: e.clone(), b: hi });
        e[j] = -1;
        h.push(Half { a: e, b: -lo });
    }
    h
}

/// Substitutes the leading binaries and enumerates vertices of the remaining continuous part.
fn fixed_max(lp: &RandomLp, bits: &[i64]) -> Option<Q> {
    let nb = bits.len();
    let shift = |a: &[i64]| -> i64 { a[..nb].iter().zip(bits).map(|(x, y)| x * y).sum() };
    let reduced = RandomLp {
        c: lp.c[nb..].to_vec(),
        rows: lp
            .rows
            .iter()
            .map(|(a, s, b)| (a[nb..].to_vec(), *s, b - shift(a)))
            .collect(),
        lower: lp.lower[nb..].to_vec(),
        upper: lp.upper[nb..].to_vec(),
    };
    vertex_max(&reduced.c, &halves_of(&reduced, &[])).map(|v| v + q(shift(&lp.c)))
}

fn to_model(lp: &RandomLp, binaries: usize) -> MilpModel {
    let mut m = MilpModel::new();
    let vars: Vec<VarId> = (0..lp.c.len())
        .map(|j| {
            if j < binaries {
                m.binary(format!("b{j}"))
            } else {
                m.continuous(format!("x{j}"), lp.lower[j] as f64, lp.upper[j] as f64)
            }
        })
        .collect();
    for (i, (a, s, b)) in lp.rows.iter().enumerate() {
        m.constrain(
            vars.iter().zip(a).map(|(v, c)| (*v, *c as f64)).collect(),
            *s,
            *b as f64,
            format!("r{i}"),
        );
    }
    m.set_objective(vars.iter().zip(&lp.c).map(|(v, c)| (*v, *c as f64)).collect());
    m
}

fn close(a: f64, b: &Q) -> bool {
    let b = b.to_f64().unwrap();
    (a - b).abs() <= 1e-7 * (1.0 + b.abs())
}

#[test]
fn simplex_matches_exact_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut feasible = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=5);
        let lp = random_lp(&mut rng, n, m);
        let exact = vertex_max(&lp.c, &halves_of(&lp, &[]));
        let r = solve(&to_model(&lp, 0), &SolveOptions::default()).unwrap();
        match exact {
            None => assert_eq!(r.status, SolveStatus::Infeasible),
            Some(v) => {
                feasible += 1;
                assert_eq!(r.status, SolveStatus::Optimal);
                assert!(close(r.objective.unwrap(), &v), "{:?} vs {}", r.objective, v);
            }
        }
    }
    assert!(feasible > 20);
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let nb = rng.gen_range(2..=5);
        let nc = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=4);
        let mut lp = random_lp(&mut rng, nb + nc, m);
        for j in 0..nb {
            lp.lower[j] = 0;
            lp.upper[j] = 1;
        }
        let mut best: Option<Q> = None;
        for mask in 0..(1usize << nb) {
            let bits: Vec<i64> = (0..nb).map(|j| ((mask >> j) & 1) as i64).collect();
            if let Some(v) = fixed_max(&lp, &bits) {
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
        let r = solve(&to_model(&lp, nb), &SolveOptions::default()).unwrap();
        match best {
            None => assert_eq!(r.status, SolveStatus::Infeasible),
            Some(v) => {
                assert_eq!(r.status, SolveStatus::Optimal);
                assert!(close(r.objective.unwrap(), &v));
                assert!(r.dual_bound >= v.to_f64().unwrap() - 1e-6);
            }
        }
    }
}

proptest! {
    #[test]
    fn lp_file_round_trip(
        coefs in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..6),
        rhs in prop::collection::vec(-1e3f64..1e3, 6),
        obj in prop::collection::vec(-100.0f64..100.0, 3),
        tiny in 1e-12f64..1e-5,
    ) {
        let mut m = MilpModel::new();
        let a = m.binary("a");
        let b = m.continuous("b", f64::NEG_INFINITY, f64::INFINITY);
        let c = m.continuous("c", -2.5, tiny);
        let vars = [a, b, c];
        for (i, row) in coefs.iter().enumerate() {
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][i % 3];
            m.constrain(vars.iter().zip(row).map(|(v, x)| (*v, *x)).collect(), sense, rhs[i], "");
        }
        m.set_objective(vars.iter().zip(&obj).map(|(v, x)| (*v, *x * tiny)).collect());
        let back = parse_lp(&export_lp(&m)).unwrap();
        prop_assert_eq!(back.vars.len(), 3);
        for (x, y) in back.vars.iter().zip(&m.vars) {
            prop_assert_eq!(x.kind, y.kind);
            prop_assert_eq!(x.lower, y.lower);
            prop_assert_eq!(x.upper, y.upper);
        }
        prop_assert_eq!(&back.objective, &m.objective);
        prop_assert_eq!(back.constraints.len(), m.constraints.len());
        for (x, y) in back.constraints.iter().zip(&m.constraints) {
            prop_assert_eq!(&x.terms, &y.terms);
            prop_assert_eq!(x.sense, y.sense);
            prop_assert_eq!(x.rhs, y.rhs);
        }
    }
}

