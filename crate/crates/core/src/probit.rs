//! Probit curves `φ(r) = Φ(β r − β0)` and the district objectives built on them.

use serde::{Deserialize, Serialize};

use crate::error::ObjectiveError;
use crate::instance::{Assignment, Field, Instance, Node};

/// Standard normal CDF, `Φ(z) = erfc(−z/√2)/2`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Bvap,
    BrhRim,
    BrhDeep,
    Cpvi,
}

impl ObjectiveKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bvap" => Some(Self::Bvap),
            "brh-rim" => Some(Self::BrhRim),
            "brh-deep" => Some(Self::BrhDeep),
            "cpvi" => Some(Self::Cpvi),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bvap => "bvap",
            Self::BrhRim => "brh-rim",
            Self::BrhDeep => "brh-deep",
            Self::Cpvi => "cpvi",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbitCurve {
    pub beta: f64,
    pub beta0: f64,
}

impl ProbitCurve {
    pub const BVAP: Self = Self {
        beta: 6.826,
        beta0: 2.827,
    };
    pub const BRH_RIM: Self = Self { beta: 1.0, beta0: -4.194 };
    pub const BRH_DEEP: Self = Self { beta: 1.0, beta0: -4.729 };
    /// `Ψ(x) = Φ((50x − 51.69)/4.8)`.
    pub const CPVI: Self = Self {
        beta: 50.0 / 4.8,
        beta0: 51.69 / 4.8,
    };

    pub fn new(beta: f64, beta0: f64) -> Self {
        assert!(beta > 0.0 && beta.is_finite() && beta0.is_finite(), "probit slope must be positive");
        Self { beta, beta0 }
    }

    pub fn phi(&self, r: f64) -> f64 {
        std_normal_cdf(self.beta * r - self.beta0)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.beta * std_normal_pdf(self.beta * r - self.beta0)
    }

    /// Ratio at which the curve crosses one half.
    pub fn center(&self) -> f64 {
        self.beta0 / self.beta
    }

    /// Inverse by bisection; exact to double precision on the bracket.
    pub fn inverse(&self, p: f64) -> Result<f64, ObjectiveError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ObjectiveError::Domain(p));
        }
        let (mut lo, mut hi) = ((self.beta0 - 40.0) / self.beta, (self.beta0 + 40.0) / self.beta);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// One ratio `Σ c·num / den` aggregated over a district.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTerm {
    pub num: Vec<(Field, f64)>,
    pub den: Field,
}

impl RatioTerm {
    pub fn numerator(&self, node: &Node) -> f64 {
        self.num.iter().map(|(f, c)| c * node.get(*f) as f64).sum()
    }

    pub fn denominator(&self, node: &Node) -> f64 {
        node.get(self.den) as f64
    }

    /// Largest numerator coefficient; bounds the ratio when the fields nest under `den`.
    pub fn coef_max(&self) -> f64 {
        self.num.iter().map(|(_, c)| *c).fold(0.0, f64::max)
    }
}

/// Curve plus the ratio terms whose sum it is applied to, per district.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub curve: ProbitCurve,
    pub terms: Vec<RatioTerm>,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind) -> Self {
        let single = |num: Vec<(Field, f64)>| vec![RatioTerm { num, den: Field::Vap }];
        match kind {
            ObjectiveKind::Bvap => Self {
                kind,
                curve: ProbitCurve::BVAP,
                terms: single(vec![(Field::Bvap, 1.0)]),
            },
            ObjectiveKind::BrhRim => Self {
                kind,
                curve: ProbitCurve::BRH_RIM,
                terms: single(vec![(Field::Bvap, 0.975), (Field::Hvap, 0.3)]),
            },
            ObjectiveKind::BrhDeep => Self {
                kind,
                curve: ProbitCurve::BRH_DEEP,
                terms: single(vec![(Field::Bvap, 1.044), (Field::Hvap, 0.3)]),
            },
            ObjectiveKind::Cpvi => Self {
                kind,
                curve: ProbitCurve::CPVI,
                terms: vec![
                    RatioTerm {
                        num: vec![(Field::Dv16, 1.0)],
                        den: Field::Tv16,
                    },
                    RatioTerm {
                        num: vec![(Field::Dv20, 1.0)],
                        den: Field::Tv20,
                    },
                ],
            },
        }
    }

    pub fn bvap() -> Self {
        Self::new(ObjectiveKind::Bvap)
    }

    pub fn cpvi() -> Self {
        Self::new(ObjectiveKind::Cpvi)
    }

    pub fn with_curve(mut self, curve: ProbitCurve) -> Self {
        self.curve = curve;
        self
    }

    pub fn is_single_ratio(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn check_instance(&self, inst: &Instance) -> Result<(), ObjectiveError> {
        if self.kind == ObjectiveKind::Cpvi && !inst.has_votes {
            return Err(ObjectiveError::MissingVotes);
        }
        Ok(())
    }

    /// Per-term `[min, max]` of node ratios; every district ratio lies in this
    /// range because a ratio of sums is a weighted mean of the parts.
    pub fn ratio_domain(&self, inst: &Instance) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .map(|t| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for n in &inst.nodes {
                    let d = t.denominator(n);
                    if d > 0.0 {
                        let r = t.numerator(n) / d;
                        lo = lo.min(r);
                        hi = hi.max(r);
                    }
                }
                if lo > hi {
                    (0.0, 0.0)
                } else {
                    (lo, hi)
                }
            })
            .collect()
    }

    /// `(numerator, denominator)` per district and term.
    pub fn district_parts(&self, inst: &Instance, a: &Assignment) -> Vec<Vec<(f64, f64)>> {
        let mut out = vec![vec![(0.0, 0.0); self.terms.len()]; inst.k];
        for (node, &d) in inst.nodes.iter().zip(&a.district) {
            for (q, t) in self.terms.iter().enumerate() {
                out[d][q].0 += t.numerator(node);
                out[d][q].1 += t.denominator(node);
            }
        }
        out
    }

    /// Summed ratio per district, the argument of the curve.
    pub fn district_ratios(&self, inst: &Instance, a: &Assignment) -> Result<Vec<f64>, ObjectiveError> {
        if a.district.len() != inst.n() || a.district.iter().any(|&d| d >= inst.k) {
            return Err(ObjectiveError::BadAssignment(format!(
                "expected {} labels in [0, {})",
                inst.n(),
                inst.k
            )));
        }
        self.district_parts(inst, a)
            .into_iter()
            .enumerate()
            .map(|(j, parts)| {
                parts.iter().try_fold(0.0, |acc, (y, z)| {
                    if *z <= 0.0 {
                        Err(ObjectiveError::ZeroDenominator { district: j })
                    } else {
                        Ok(acc + y / z)
                    }
                })
            })
            .collect()
    }

    /// The original nonlinear objective of an assignment.
    pub fn true_objective(&self, inst: &Instance, a: &Assignment) -> Result<f64, ObjectiveError> {
        Ok(self.district_ratios(inst, a)?.iter().map(|r| self.curve.phi(*r)).sum())
    }

    /// `F(y, z) = Σ_j φ(Σ_q y_qj / z_qj)` for aggregated parts `parts[j][q] = (y, z)`.
    pub fn value_of_parts(&self, parts: &[Vec<(f64, f64)>]) -> f64 {
        parts
            .iter()
            .map(|p| self.curve.phi(p.iter().map(|(y, z)| y / z).sum()))
            .sum()
    }

    /// Gradient of [`value_of_parts`](Self::value_of_parts): `(∂F/∂y, ∂F/∂z)` per district and term.
    pub fn gradient_of_parts(&self, parts: &[Vec<(f64, f64)>]) -> Vec<Vec<(f64, f64)>> {
        parts
            .iter()
            .map(|p| {
                let r: f64 = p.iter().map(|(y, z)| y / z).sum();
                let d = self.curve.derivative(r);
                p.iter().map(|(y, z)| (d / z, -d * y / (z * z))).collect()
            })
            .collect()
    }

    /// True when the curve is within 1e-3 of 1 across the whole ratio domain.
    pub fn saturated(&self, inst: &Instance) -> bool {
        let lo: f64 = self.ratio_domain(inst).iter().map(|d| d.0).sum();
        self.curve.phi(lo) > 1.0 - 1e-3
    }
}
