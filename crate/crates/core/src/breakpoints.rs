//! Breakpoint sequences for threshold and piecewise-linear relaxations.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::BreakpointError;
use crate::probit::ProbitCurve;

/// Strictly increasing `b_0 < b_1 < … < b_ℓ`. Only `b_1..b_ℓ` enter threshold
/// constraints; `b_0` marks the lower end of the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakpointSet {
    pub b: Vec<f64>,
}

impl BreakpointSet {
    pub fn new(b: Vec<f64>) -> Result<Self, BreakpointError> {
        if b.len() < 2 {
            return Err(BreakpointError::Invalid("need at least two breakpoints".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(BreakpointError::Invalid("non-finite breakpoint".into()));
        }
        if b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BreakpointError::Invalid("breakpoints must strictly increase".into()));
        }
        Ok(Self { b })
    }

    pub fn ell(&self) -> usize {
        self.b.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.b[0]
    }

    pub fn last(&self) -> f64 {
        self.b[self.ell()]
    }

    pub fn uniform(b0: f64, bl: f64, ell: usize) -> Result<Self, BreakpointError> {
        check_range(b0, bl, ell)?;
        let mut b: Vec<f64> = (0..=ell).map(|t| b0 + (bl - b0) * t as f64 / ell as f64).collect();
        b[ell] = bl;
        Self::new(b)
    }

    /// Inserts the midpoint of every interval.
    pub fn refined(&self) -> Self {
        let mut b = Vec::with_capacity(2 * self.b.len());
        for w in self.b.windows(2) {
            b.push(w[0]);
            b.push(0.5 * (w[0] + w[1]));
        }
        b.push(self.last());
        Self { b }
    }

    /// Smallest `t >= 1` with `r <= b_t`, i.e. the step that covers `r`.
    pub fn covering_step(&self, r: f64) -> Option<usize> {
        (1..=self.ell()).find(|&t| r <= self.b[t])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    StepMax,
    StepExp,
    Uniform,
}

fn check_range(b0: f64, bl: f64, ell: usize) -> Result<(), BreakpointError> {
    if ell == 0 {
        return Err(BreakpointError::Invalid("ℓ must be at least 1".into()));
    }
    if !(b0 < bl) || !b0.is_finite() || !bl.is_finite() {
        return Err(BreakpointError::Invalid(format!("empty range [{b0}, {bl}]")));
    }
    Ok(())
}

pub fn build(scheme: Scheme, curve: &ProbitCurve, b0: f64, bl: f64, ell: usize) -> Result<BreakpointSet, BreakpointError> {
    match scheme {
        Scheme::StepMax => step_max(curve, b0, bl, ell),
        Scheme::StepExp => {
            if ell < 2 {
                return BreakpointSet::uniform(b0, bl, ell);
            }
            Ok(step_exp(curve, b0, bl, ell)?.set)
        }
        Scheme::Uniform => BreakpointSet::uniform(b0, bl, ell),
    }
}

/// Equal φ-increments: `b_t = φ⁻¹(φ(b_0) + t ε)`, `ε = (φ(b_ℓ) − φ(b_0))/ℓ`.
///
/// Where the curve is flat to double precision the inverse is not
/// informative, and the set falls back to uniform spacing.
pub fn step_max(curve: &ProbitCurve, b0: f64, bl: f64, ell: usize) -> Result<BreakpointSet, BreakpointError> {
    check_range(b0, bl, ell)?;
    let (p0, pl) = (curve.phi(b0), curve.phi(bl));
    let eps = (pl - p0) / ell as f64;
    let mut b = vec![b0];
    for t in 1..ell {
        match curve.inverse(p0 + t as f64 * eps) {
            Ok(v) if v > *b.last().unwrap() && v < bl => b.push(v),
            _ => {
                warn!("curve is flat on [{b0}, {bl}]; using uniform breakpoints");
                return BreakpointSet::uniform(b0, bl, ell);
            }
        }
    }
    b.push(bl);
    BreakpointSet::new(b)
}

/// Result of the expected-error optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct StepExpResult {
    pub set: BreakpointSet,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// `Σ_t φ(b_t)(b_t − b_{t−1})`.
pub fn upper_sum(curve: &ProbitCurve, b: &[f64]) -> f64 {
    b.windows(2).map(|w| curve.phi(w[1]) * (w[1] - w[0])).sum()
}

fn upper_sum_gradient(curve: &ProbitCurve, b: &[f64]) -> Vec<f64> {
    let l = b.len() - 1;
    (1..l)
        .map(|t| curve.derivative(b[t]) * (b[t] - b[t - 1]) + curve.phi(b[t]) - curve.phi(b[t + 1]))
        .collect()
}

/// Sorts interior points and keeps them strictly inside `(b_0, b_ℓ)` with a minimum spacing.
fn project(b: &mut [f64]) {
    let l = b.len() - 1;
    let (lo, hi) = (b[0], b[l]);
    let gap = (hi - lo) * 1e-9;
    b[1..l].sort_by(f64::total_cmp);
    for t in 1..l {
        b[t] = b[t].clamp(lo + gap * t as f64, hi - gap * (l - t) as f64);
    }
    for t in 1..l {
        if b[t] <= b[t - 1] {
            b[t] = b[t - 1] + gap;
        }
    }
}

/// Minimizes the expected error of the step upper bound for ratios uniform
/// on `[b_0, b_ℓ]` by projected gradient descent from uniform spacing.
pub fn step_exp(curve: &ProbitCurve, b0: f64, bl: f64, ell: usize) -> Result<StepExpResult, BreakpointError> {
    check_range(b0, bl, ell)?;
    if ell < 2 {
        return Err(BreakpointError::Invalid("expected-error breakpoints need ℓ >= 2".into()));
    }
    let mut b = BreakpointSet::uniform(b0, bl, ell)?.b;
    let mut g = upper_sum_gradient(curve, &b);
    let mut val = upper_sum(curve, &b);
    let mut step = (bl - b0) / ell as f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while gnorm > 1e-8 && iterations < 10_000 {
        iterations += 1;
        // Barzilai–Borwein trial step, then Armijo backtracking
        if let Some((pb, pg)) = &prev {
            let s: Vec<f64> = (1..ell).map(|t| b[t] - pb[t]).collect();
            let y: Vec<f64> = g.iter().zip(pg).map(|(a, c)| a - c).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, c)| a * c).sum();
            let ss: f64 = s.iter().map(|a| a * a).sum();
            if sy > 0.0 {
                step = ss / sy;
            }
        }
        let mut accepted = false;
        let mut trial_step = step;
        for _ in 0..60 {
            let mut cand = b.clone();
            for t in 1..ell {
                cand[t] -= trial_step * g[t - 1];
            }
            project(&mut cand);
            let decrease: f64 = (1..ell).map(|t| g[t - 1] * (b[t] - cand[t])).sum();
            let cv = upper_sum(curve, &cand);
            if cv <= val - 1e-4 * decrease && decrease >= 0.0 {
                prev = Some((b.clone(), g.clone()));
                b = cand;
                val = cv;
                accepted = true;
                break;
            }
            trial_step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = trial_step;
        g = upper_sum_gradient(curve, &b);
        gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let converged = gnorm <= 1e-8;
    if !converged {
        warn!("expected-error breakpoints stopped with gradient norm {gnorm:.2e}");
    }
    Ok(StepExpResult {
        set: BreakpointSet::new(b)?,
        converged,
        iterations,
        grad_norm: gnorm,
    })
}

/// Largest jump `max_t φ(b_t) − φ(b_{t−1})`, the worst-case step error.
pub fn max_error(curve: &ProbitCurve, bs: &BreakpointSet) -> f64 {
    bs.b
        .windows(2)
        .map(|w| curve.phi(w[1]) - curve.phi(w[0]))
        .fold(0.0, f64::max)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Mean gap between the step upper bound and φ for a ratio uniform on the domain.
pub fn expected_error(curve: &ProbitCurve, bs: &BreakpointSet) -> f64 {
    let (a, b) = (bs.first(), bs.last());
    let area = integrate(&|r| curve.phi(r), a, b, 1e-12);
    (upper_sum(curve, &bs.b) - area) / (b - a)
}

/// Geometric breakpoints `b_i = a (b/a)^(i/ℓ)` and their ratio guarantee
/// `γ = min_i b_i² / b_{i+1}²`.
pub fn multiplicative(a: f64, b: f64, ell: usize) -> Result<(BreakpointSet, f64), BreakpointError> {
    if !(a > 0.0) {
        return Err(BreakpointError::Invalid(format!("a = {a} must be positive")));
    }
    check_range(a, b, ell)?;
    let mut pts: Vec<f64> = (0..=ell).map(|i| a * (b / a).powf(i as f64 / ell as f64)).collect();
    pts[0] = a;
    pts[ell] = b;
    let set = BreakpointSet::new(pts)?;
    Ok((set.clone(), gamma(&set)))
}

/// `min_i b_i² / b_{i+1}²` for any positive breakpoint set.
pub fn gamma(bs: &BreakpointSet) -> f64 {
    bs.b.windows(2).map(|w| (w[0] / w[1]).powi(2)).fold(f64::INFINITY, f64::min)
}

/// Breakpoints for a sum of two ratios with the table `Ψ_st = Ψ(b_s + b'_t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiRatioGrid {
    pub sets: Vec<BreakpointSet>,
    /// `psi[s][t]` for `s, t` from 0 (index 0 included for error bookkeeping).
    pub psi: Vec<Vec<f64>>,
}

impl MultiRatioGrid {
    pub fn new(curve: &ProbitCurve, sets: Vec<BreakpointSet>) -> Result<Self, BreakpointError> {
        if sets.len() != 2 {
            return Err(BreakpointError::Invalid("the grid needs exactly two ratio terms".into()));
        }
        let psi = sets[0]
            .b
            .iter()
            .map(|bs| sets[1].b.iter().map(|bt| curve.phi(bs + bt)).collect())
            .collect();
        Ok(Self { sets, psi })
    }

    /// Uniform breakpoints on each term's domain.
    pub fn uniform(curve: &ProbitCurve, domains: &[(f64, f64)], ells: &[usize]) -> Result<Self, BreakpointError> {
        let sets = domains
            .iter()
            .zip(ells)
            .map(|(&(lo, hi), &l)| BreakpointSet::uniform(lo, if hi > lo { hi } else { lo + 1e-9 }, l))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(curve, sets)
    }

    /// `Δ = max_{s,t>=1} Ψ(b_s + b'_t) − Ψ(b_{s−1} + b'_{t−1})`.
    pub fn max_error(&self) -> f64 {
        let mut d = 0.0f64;
        for s in 1..self.psi.len() {
            for t in 1..self.psi[s].len() {
                d = d.max(self.psi[s][t] - self.psi[s - 1][t - 1]);
            }
        }
        d
    }
}
