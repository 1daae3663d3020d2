//! Solver-agnostic MILP representation.

use std::fmt;

use crate::error::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub id: VarId,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub name: String,
    /// Higher values are branched on first.
    pub priority: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinConstraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

impl LinConstraint {
    pub fn new(terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64, tag: impl Into<String>) -> Self {
        Self {
            terms,
            sense,
            rhs,
            tag: tag.into(),
        }
    }

    /// Merges duplicate variables and drops zero coefficients.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        self.terms = merged;
        self
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violates the constraint (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A maximization MILP.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Var>,
    pub constraints: Vec<LinConstraint>,
    pub objective: Vec<(VarId, f64)>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let id = VarId(self.vars.len());
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.vars.push(Var {
            id,
            kind,
            lower,
            upper,
            name: name.into(),
            priority: 0,
        });
        id
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn set_priority(&mut self, v: VarId, priority: i32) {
        self.vars[v.0].priority = priority;
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
    }

    pub fn add_constraint(&mut self, c: LinConstraint) -> usize {
        self.constraints.push(c.normalized());
        self.constraints.len() - 1
    }

    pub fn constrain(
        &mut self,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> usize {
        self.add_constraint(LinConstraint::new(terms, sense, rhs, tag))
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = LinConstraint::new(terms, Sense::Eq, 0.0, "").normalized().terms;
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, v) in self.vars.iter().enumerate() {
            if v.id.0 != i {
                return Err(ModelError::VarIdMismatch(v.name.clone()));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::BadBounds(v.name.clone()));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BadBounds(v.name.clone()));
            }
        }
        let n = self.vars.len();
        for (ci, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFinite(format!("c{ci}")));
            }
            let mut seen = std::collections::HashSet::new();
            for (v, coef) in &c.terms {
                if v.0 >= n {
                    return Err(ModelError::UnknownVar(format!("c{ci}"), v.0));
                }
                if !coef.is_finite() {
                    return Err(ModelError::NonFinite(format!("c{ci}")));
                }
                if !seen.insert(*v) {
                    return Err(ModelError::DuplicateVar(format!("c{ci}"), v.0));
                }
            }
        }
        for (v, coef) in &self.objective {
            if v.0 >= n {
                return Err(ModelError::UnknownVar("objective".into(), v.0));
            }
            if !coef.is_finite() {
                return Err(ModelError::NonFinite("objective".into()));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .map(|v| (v.lower - values[v.id.0]).max(values[v.id.0] - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }
}
