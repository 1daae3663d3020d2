//! Closed-form solutions of `max Σ f(x_i)` s.t. `Σ x_i = M`, `x ∈ [a, b]^n`
//! for a sigmoid `f` that is anti-symmetric about its center `c`.
//!
//! Optimal points take at most three values `a`, `b` and one interior `y`,
//! so they are described by counts `(k_a, k_b, k_y)` and `y`.

use serde::Serialize;

use crate::error::KnapsackError;
use crate::probit::ProbitCurve;

type Scalar = Box<dyn Fn(f64) -> f64 + Send + Sync>;

pub struct SigmoidFn {
    f: Scalar,
    df: Scalar,
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl std::fmt::Debug for SigmoidFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigmoidFn")
            .field("c", &self.c)
            .field("a", &self.a)
            .field("b", &self.b)
            .finish()
    }
}

impl SigmoidFn {
    /// Checks monotonicity and anti-symmetry about `c` on samples.
    pub fn new(f: Scalar, df: Scalar, c: f64, a: f64, b: f64) -> Result<Self, KnapsackError> {
        if !(a < c && c < b) {
            return Err(KnapsackError::Invalid(format!("center {c} is not inside ({a}, {b})")));
        }
        let s = Self { f, df, c, a, b };
        let fc = s.eval(c);
        for i in 0..=200 {
            let x = a + (b - a) * i as f64 / 200.0;
            let mirrored = 2.0 * fc - s.eval(2.0 * c - x);
            if (s.eval(x) - mirrored).abs() > 1e-10 {
                return Err(KnapsackError::Invalid(format!("f is not anti-symmetric about {c} at {x}")));
            }
            if i > 0 && s.eval(x) <= s.eval(a + (b - a) * (i - 1) as f64 / 200.0) {
                return Err(KnapsackError::Invalid(format!("f is not increasing near {x}")));
            }
        }
        Ok(s)
    }

    pub fn probit(curve: ProbitCurve, a: f64, b: f64) -> Result<Self, KnapsackError> {
        Self::new(
            Box::new(move |x| curve.phi(x)),
            Box::new(move |x| curve.derivative(x)),
            curve.center(),
            a,
            b,
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    /// Tangency point `d_r`: the root of `f(x) + (r − x) f'(x) − f(r)` on
    /// the far side of `c`, strictly between `c` and `2c − r`.
    pub fn d(&self, r: f64) -> Result<f64, KnapsackError> {
        if (r - self.c).abs() < 1e-12 {
            return Err(KnapsackError::AtCenter);
        }
        let g = |x: f64| self.eval(x) + (r - x) * self.derivative(x) - self.eval(r);
        let (mut lo, mut hi) = if r < self.c { (self.c, 2.0 * self.c - r) } else { (2.0 * self.c - r, self.c) };
        let glo = g(lo);
        for _ in 0..200 {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if (g(mid) > 0.0) == (glo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    /// Every district interior at `M/n`.
    AllInterior,
    /// `k_a` districts at `a`, the rest at `d_a`.
    LowAndTangent,
    /// Districts at `a` and `b` only, one interior remainder.
    Extremes,
    /// Integer candidates around the tangent case.
    TangentFloor,
    TangentCeil,
    /// Grid search over `(k_a, k_b)`.
    Enumerated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KSolution {
    pub k_a: f64,
    pub k_b: f64,
    pub k_y: f64,
    pub y: f64,
    pub value: f64,
    pub case: Case,
}

#[derive(Debug)]
pub struct KnapsackProblem {
    pub f: SigmoidFn,
    pub n: usize,
    pub m: f64,
}

impl KnapsackProblem {
    pub fn new(f: SigmoidFn, n: usize, m: f64) -> Result<Self, KnapsackError> {
        if n == 0 {
            return Err(KnapsackError::Invalid("n must be positive".into()));
        }
        let (lo, hi) = (f.a * n as f64, f.b * n as f64);
        if !(m >= lo - 1e-12 && m <= hi + 1e-12) {
            return Err(KnapsackError::InfeasibleMass { m, lo, hi });
        }
        Ok(Self { f, n, m: m.clamp(lo, hi) })
    }

    /// `k_a f(a) + k_b f(b) + k_y f(y)`.
    pub fn value(&self, k_a: f64, k_b: f64, k_y: f64, y: f64) -> f64 {
        k_a * self.f.eval(self.f.a) + k_b * self.f.eval(self.f.b) + if k_y > 0.0 { k_y * self.f.eval(y) } else { 0.0 }
    }

    /// The interior value that closes the mass constraint, if it lies in `[a, b]`.
    pub fn interior(&self, k_a: f64, k_b: f64) -> Option<f64> {
        let (a, b) = (self.f.a, self.f.b);
        let k_y = self.n as f64 - k_a - k_b;
        let rest = self.m - a * k_a - b * k_b;
        if k_y < -1e-12 {
            return None;
        }
        if k_y < 1e-12 {
            return (rest.abs() < 1e-9).then_some(a);
        }
        let y = rest / k_y;
        (y >= a - 1e-12 && y <= b + 1e-12).then_some(y.clamp(a, b))
    }

    fn solution(&self, k_a: f64, k_b: f64, case: Case) -> Option<KSolution> {
        let y = self.interior(k_a, k_b)?;
        let k_y = (self.n as f64 - k_a - k_b).max(0.0);
        Some(KSolution {
            k_a,
            k_b,
            k_y,
            y,
            value: self.value(k_a, k_b, k_y, y),
            case,
        })
    }

    /// The closed form needs `d_a` inside `[a, b]`, which holds when `2c − a <= b`.
    pub fn closed_form_applies(&self) -> bool {
        2.0 * self.f.c - self.f.a <= self.f.b
    }

    pub fn d_a(&self) -> Result<f64, KnapsackError> {
        self.f.d(self.f.a)
    }

    pub fn continuous_optimum(&self) -> Result<KSolution, KnapsackError> {
        if !self.closed_form_applies() {
            return Err(KnapsackError::Invalid("closed form needs 2c − a <= b".into()));
        }
        let (a, n, m) = (self.f.a, self.n as f64, self.m);
        let da = self.d_a()?;
        if m >= da * n {
            let y = m / n;
            return Ok(KSolution {
                k_a: 0.0,
                k_b: 0.0,
                k_y: n,
                y,
                value: self.value(0.0, 0.0, n, y),
                case: Case::AllInterior,
            });
        }
        let k_a = (da * n - m) / (da - a);
        let k_y = (m - a * n) / (da - a);
        Ok(KSolution {
            k_a,
            k_b: 0.0,
            k_y,
            y: da,
            value: self.value(k_a, 0.0, k_y, da),
            case: Case::LowAndTangent,
        })
    }

    /// Best of a constant number of integer candidates, or a grid search
    /// when the closed form does not apply.
    pub fn integer_optimum(&self) -> Result<KSolution, KnapsackError> {
        if !self.closed_form_applies() {
            return self.enumerate();
        }
        let (a, b, n, m) = (self.f.a, self.f.b, self.n as f64, self.m);
        let da = self.d_a()?;
        if m >= da * n {
            return Ok(self.solution(0.0, 0.0, Case::AllInterior).expect("M/n lies in [a, b]"));
        }
        let ka_ext = ((b * n - m) / (b - a) + 1e-12).floor();
        let kb_ext = ((m - a * n) / (b - a) + 1e-12).floor();
        let ka_tan = (da * n - m) / (da - a);
        let candidates = [
            self.solution(ka_ext, kb_ext, Case::Extremes),
            self.solution((ka_tan + 1e-12).floor(), 0.0, Case::TangentFloor),
            self.solution((ka_tan - 1e-12).ceil(), 0.0, Case::TangentCeil),
        ];
        let best = candidates
            .into_iter()
            .flatten()
            .max_by(|p, q| p.value.total_cmp(&q.value))
            .expect("the extreme candidate is always feasible");
        Ok(best)
    }

    /// Every integer `(k_a, k_b)` with an admissible interior value.
    pub fn enumerate(&self) -> Result<KSolution, KnapsackError> {
        let mut best: Option<KSolution> = None;
        for ka in 0..=self.n {
            for kb in 0..=self.n - ka {
                if let Some(s) = self.solution(ka as f64, kb as f64, Case::Enumerated) {
                    if best.map_or(true, |b| s.value > b.value) {
                        best = Some(s);
                    }
                }
            }
        }
        best.ok_or_else(|| KnapsackError::Invalid("no integer point satisfies the mass constraint".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bvap(n: usize, m: f64) -> KnapsackProblem {
        KnapsackProblem::new(SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0).unwrap(), n, m).unwrap()
    }

    #[test]
    fn tangency_of_bvap() {
        let p = bvap(4, 1.0);
        let da = p.d_a().unwrap();
        assert!((da - 0.5746).abs() < 1e-3, "{da}");
        let f = &p.f;
        let db = f.d(1.0).unwrap();
        assert!(db > (2.0 * f.c - 1.0).max(0.0) && db < f.c);
        for r in [0.05, 0.2, 0.3] {
            let mirrored = f.d(2.0 * f.c - r).unwrap();
            assert!((f.d(r).unwrap() + mirrored - 2.0 * f.c).abs() < 1e-9);
        }
        assert!(matches!(f.d(f.c), Err(KnapsackError::AtCenter)));
    }

    #[test]
    fn continuous_cases() {
        let s = bvap(4, 2.5).continuous_optimum().unwrap();
        assert_eq!(s.case, Case::AllInterior);
        assert!((s.y - 0.625).abs() < 1e-12);
        let p = bvap(4, 1.2);
        let s = p.continuous_optimum().unwrap();
        let ky = 1.2 / p.d_a().unwrap();
        assert!((s.k_y - ky).abs() < 1e-9 && (s.k_y - 2.0895).abs() < 1e-3, "{}", s.k_y);
        let ext = p.value((4.0 - 1.2) / 1.0, 1.2, 0.0, 0.0);
        assert!(s.value > ext);
        assert!((s.k_a + s.k_y - 4.0).abs() < 1e-12 && (s.k_y * s.y - 1.2).abs() < 1e-12);
    }

    #[test]
    fn integer_example() {
        let s = bvap(4, 1.2).integer_optimum().unwrap();
        assert_eq!((s.k_a, s.k_b, s.k_y), (2.0, 0.0, 2.0));
        assert!((s.y - 0.6).abs() < 1e-12 && (s.value - 1.800).abs() < 1e-3);
    }

    #[test]
    fn boundary_mass_agrees() {
        let p = bvap(5, 1.0);
        let da = p.d_a().unwrap();
        let q = bvap(5, da * 5.0);
        let s = q.integer_optimum().unwrap();
        let alt = q.solution(0.0, 0.0, Case::AllInterior).unwrap();
        assert!((s.value - alt.value).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let f = SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0).unwrap();
        assert!(matches!(KnapsackProblem::new(f, 3, 3.5), Err(KnapsackError::InfeasibleMass { .. })));
        let skew = SigmoidFn::new(Box::new(|x: f64| x * x * x), Box::new(|x: f64| 3.0 * x * x), 0.5, 0.0, 1.0);
        assert!(skew.is_err());
    }

    proptest! {
        #[test]
        fn integer_matches_grid(n in 1usize..=12, t in 0.0f64..=1.0) {
            let p = bvap(n, t * n as f64);
            let closed = p.integer_optimum().unwrap();
            let grid = p.enumerate().unwrap();
            prop_assert!((closed.value - grid.value).abs() < 1e-9, "{closed:?} vs {grid:?}");
            prop_assert!((closed.k_a + closed.k_b + closed.k_y - n as f64).abs() < 1e-12);
        }
    }
}
