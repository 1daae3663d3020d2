//! Dense bounded-variable primal simplex.
//!
//! Every row `lo <= a.x <= hi` is turned into `a.x - s = 0` with the slack
//! `s` carrying the row bounds, so the right-hand side of the working system
//! is identically zero and basic values can always be rebuilt from the
//! nonbasic ones. Rows whose initial slack value is out of range get an
//! artificial column and a phase-one objective that drives it to zero.

const PIVOT_TOL: f64 = 1e-9;
const TINY_ALPHA: f64 = 1e-12;
const DUAL_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 60;
const REFRESH_EVERY: usize = 40;

#[derive(Clone, Debug)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub num_vars: usize,
    /// Maximized.
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64, pivots: usize },
    Infeasible,
    Unbounded,
    Failed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free nonbasic column held at zero.
    FreeZero,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols` matrix `B^-1 A`.
    t: Vec<f64>,
    /// The starting system, kept for reinversion.
    a0: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    /// Reduced costs `c_j - c_B B^-1 a_j`.
    d: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn recompute_reduced_costs(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn refresh_basic_values(&mut self) {
        for i in 0..self.m {
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            let mut v = 0.0;
            for (j, tij) in row.iter().enumerate() {
                if !matches!(self.status[j], Status::Basic(_)) && *tij != 0.0 {
                    v -= tij * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    /// Rebuilds `B^-1 A` from the starting system. Returns false and leaves
    /// the tableau alone when the basis looks singular.
    fn reinvert(&mut self) -> bool {
        let (m, nc) = (self.m, self.ncols);
        let mut b = vec![0.0; m * m];
        for i in 0..m {
            for (k, &j) in self.basis.iter().enumerate() {
                b[i * m + k] = self.a0[i * nc + j];
            }
        }
        let mut w = self.a0.clone();
        for k in 0..m {
            let (mut pr, mut pv) = (k, 0.0);
            for i in k..m {
                let v = b[i * m + k].abs();
                if v > pv {
                    pv = v;
                    pr = i;
                }
            }
            if pv < 1e-11 {
                return false;
            }
            if pr != k {
                for c in 0..m {
                    b.swap(k * m + c, pr * m + c);
                }
                for c in 0..nc {
                    w.swap(k * nc + c, pr * nc + c);
                }
            }
            let inv = 1.0 / b[k * m + k];
            for c in 0..m {
                b[k * m + c] *= inv;
            }
            for c in 0..nc {
                w[k * nc + c] *= inv;
            }
            for i in 0..m {
                let f = b[i * m + k];
                if i == k || f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    b[i * m + c] -= f * b[k * m + c];
                }
                let (wk, wi) = if i < k {
                    let (lo, hi) = w.split_at_mut(k * nc);
                    (&hi[..nc], &mut lo[i * nc..(i + 1) * nc])
                } else {
                    let (lo, hi) = w.split_at_mut(i * nc);
                    (&lo[k * nc..(k + 1) * nc], &mut hi[..nc])
                };
                for (a, v) in wi.iter_mut().zip(wk) {
                    *a -= f * v;
                }
            }
        }
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                w[i * nc + j] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.t = w;
        self.recompute_reduced_costs();
        self.refresh_basic_values();
        true
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let p = self.t[r * nc + q];
        let inv = 1.0 / p;
        for v in &mut self.t[r * nc..(r + 1) * nc] {
            *v *= inv;
        }
        self.t[r * nc + q] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for chunk in before.chunks_mut(nc).chain(after.chunks_mut(nc)) {
            let f = chunk[q];
            if f != 0.0 {
                for (a, b) in chunk.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                chunk[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (a, b) in self.d.iter_mut().zip(prow.iter()) {
                *a -= f * b;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.status[q] = Status::Basic(r);
        let lv = self.x[leaving];
        self.status[leaving] = if self.lo[leaving].is_finite()
            && (lv - self.lo[leaving]).abs() <= (lv - self.hi[leaving]).abs()
        {
            self.x[leaving] = self.lo[leaving];
            Status::AtLower
        } else if self.hi[leaving].is_finite() {
            self.x[leaving] = self.hi[leaving];
            Status::AtUpper
        } else if self.lo[leaving].is_finite() {
            self.x[leaving] = self.lo[leaving];
            Status::AtLower
        } else {
            Status::FreeZero
        };
        self.pivots += 1;
    }

    /// Runs primal simplex iterations on the current cost vector.
    fn optimize(&mut self, max_pivots: usize) -> Result<(), PhaseEnd> {
        let mut degenerate_run = 0usize;
        let mut since_refresh = 0usize;
        loop {
            if self.pivots > max_pivots {
                return Err(PhaseEnd::IterationLimit);
            }
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let Some((q, dir)) = self.choose_entering(bland) else {
                return Ok(());
            };
            // Harris ratio test: bound the step with slightly relaxed limits,
            // then take the largest pivot among rows that hit within it
            let span = self.hi[q] - self.lo[q];
            let mut relaxed = if span.is_finite() { span } else { f64::INFINITY };
            for i in 0..self.m {
                let alpha = dir * self.at(i, q);
                if alpha.abs() <= TINY_ALPHA {
                    continue;
                }
                let b = self.basis[i];
                let room = if alpha > 0.0 { self.x[b] - self.lo[b] } else { self.hi[b] - self.x[b] };
                if room.is_finite() {
                    relaxed = relaxed.min((room.max(0.0) + PRIMAL_TOL) / alpha.abs());
                }
            }
            let mut theta = if span.is_finite() && span <= relaxed { span } else { f64::INFINITY };
            let mut leave: Option<usize> = None;
            let mut best_alpha = 0.0;
            if theta.is_infinite() {
                for i in 0..self.m {
                    let alpha = dir * self.at(i, q);
                    if alpha.abs() <= TINY_ALPHA {
                        continue;
                    }
                    let b = self.basis[i];
                    let room = if alpha > 0.0 { self.x[b] - self.lo[b] } else { self.hi[b] - self.x[b] };
                    if !room.is_finite() {
                        continue;
                    }
                    let limit = room.max(0.0) / alpha.abs();
                    if limit > relaxed {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some(l) if bland => {
                            let solid = alpha.abs() > PIVOT_TOL;
                            let best_solid = best_alpha > PIVOT_TOL;
                            (solid && !best_solid) || (solid == best_solid && b < self.basis[l])
                        }
                        Some(_) => alpha.abs() > best_alpha,
                    };
                    if better {
                        theta = limit;
                        leave = Some(i);
                        best_alpha = alpha.abs();
                    }
                }
            }
            if theta.is_infinite() {
                return Err(PhaseEnd::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            // move
            if theta > 0.0 {
                for i in 0..self.m {
                    let a = self.at(i, q);
                    if a != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= theta * dir * a;
                    }
                }
                self.x[q] += theta * dir;
            }
            match leave {
                Some(r) => {
                    self.pivot(r, q);
                }
                None => {
                    // bound flip
                    if dir > 0.0 {
                        self.x[q] = self.hi[q];
                        self.status[q] = Status::AtUpper;
                    } else {
                        self.x[q] = self.lo[q];
                        self.status[q] = Status::AtLower;
                    }
                    self.pivots += 1;
                }
            }
            since_refresh += 1;
            if since_refresh >= REFRESH_EVERY {
                since_refresh = 0;
                self.refresh_basic_values();
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let dj = self.d[j];
            let dir = match self.status[j] {
                Status::Basic(_) => continue,
                Status::AtLower => {
                    if dj > DUAL_TOL && self.hi[j] > self.lo[j] {
                        1.0
                    } else {
                        continue;
                    }
                }
                Status::AtUpper => {
                    if dj < -DUAL_TOL && self.hi[j] > self.lo[j] {
                        -1.0
                    } else {
                        continue;
                    }
                }
                Status::FreeZero => {
                    if dj > DUAL_TOL {
                        1.0
                    } else if dj < -DUAL_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }
}

enum PhaseEnd {
    Unbounded,
    IterationLimit,
}

fn clamped(tab: &Tableau, p: &LpProblem) -> Vec<f64> {
    (0..p.num_vars).map(|j| tab.x[j].clamp(p.lower[j], p.upper[j].max(p.lower[j]))).collect()
}

/// Largest row violation, relative to the smaller finite row bound.
fn row_residual(p: &LpProblem, xs: &[f64]) -> f64 {
    p.rows
        .iter()
        .map(|r| {
            let act: f64 = r.terms.iter().map(|(j, a)| a * xs[*j]).sum();
            (r.lo - act).max(act - r.hi).max(0.0) / (1.0 + r.lo.abs().min(r.hi.abs()).min(1e12))
        })
        .fold(0.0, f64::max)
}

/// Solves `max c.x` subject to row ranges and variable bounds.
pub fn solve_lp(p: &LpProblem) -> LpOutcome {
    let n = p.num_vars;
    let m = p.rows.len();
    for j in 0..n {
        if p.lower[j] > p.upper[j] + PRIMAL_TOL {
            return LpOutcome::Infeasible;
        }
    }
    for r in &p.rows {
        if r.lo > r.hi + PRIMAL_TOL {
            return LpOutcome::Infeasible;
        }
    }

    // initial nonbasic values
    let mut x0 = vec![0.0; n];
    let mut st0 = vec![Status::FreeZero; n];
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j].max(p.lower[j]));
        if l.is_finite() {
            x0[j] = l;
            st0[j] = Status::AtLower;
        } else if u.is_finite() {
            x0[j] = u;
            st0[j] = Status::AtUpper;
        }
    }

    let activities: Vec<f64> = p
        .rows
        .iter()
        .map(|r| r.terms.iter().map(|(j, a)| a * x0[*j]).sum())
        .collect();

    // artificial columns for rows whose slack would start out of range
    let mut art_rows = Vec::new();
    for (i, r) in p.rows.iter().enumerate() {
        let act = activities[i];
        if act < r.lo - PRIMAL_TOL || act > r.hi + PRIMAL_TOL {
            art_rows.push(i);
        }
    }
    let na = art_rows.len();
    let ncols = n + m + na;
    let mut t = vec![0.0; m * ncols];
    let mut lo = Vec::with_capacity(ncols);
    let mut hi = Vec::with_capacity(ncols);
    lo.extend_from_slice(&p.lower);
    hi.extend(p.upper.iter().zip(&p.lower).map(|(u, l)| u.max(*l)));
    for r in &p.rows {
        lo.push(r.lo);
        hi.push(r.hi);
    }
    lo.extend(std::iter::repeat(0.0).take(na));
    hi.extend(std::iter::repeat(f64::INFINITY).take(na));

    let mut x = vec![0.0; ncols];
    x[..n].copy_from_slice(&x0);
    let mut status = vec![Status::AtLower; ncols];
    status[..n].copy_from_slice(&st0);
    let mut basis = vec![0usize; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = n + m + k;
    }

    for (i, r) in p.rows.iter().enumerate() {
        let row = &mut t[i * ncols..(i + 1) * ncols];
        for (j, a) in &r.terms {
            row[*j] += a;
        }
        row[n + i] = -1.0;
        let act = activities[i];
        let basic_coef;
        if art_of_row[i] == usize::MAX {
            basis[i] = n + i;
            status[n + i] = Status::Basic(i);
            x[n + i] = act;
            basic_coef = -1.0;
        } else {
            let s = n + i;
            let (v, st) = if act < r.lo { (r.lo, Status::AtLower) } else { (r.hi, Status::AtUpper) };
            x[s] = v;
            status[s] = st;
            let sigma = if act - v > 0.0 { 1.0 } else { -1.0 };
            let a = art_of_row[i];
            row[a] = -sigma;
            basis[i] = a;
            status[a] = Status::Basic(i);
            x[a] = (act - v).abs();
            basic_coef = -sigma;
        }
        if basic_coef != 1.0 {
            for v in row.iter_mut() {
                *v /= basic_coef;
            }
        }
    }

    let mut tab = Tableau {
        m,
        ncols,
        a0: t.clone(),
        t,
        basis,
        status,
        x,
        lo,
        hi,
        cost: vec![0.0; ncols],
        d: vec![0.0; ncols],
        pivots: 0,
    };
    let max_pivots = 200 * (m + ncols) + 1000;

    if na > 0 {
        for k in 0..na {
            tab.cost[n + m + k] = -1.0;
        }
        tab.recompute_reduced_costs();
        match tab.optimize(max_pivots) {
            Ok(()) => {}
            Err(PhaseEnd::Unbounded) => return LpOutcome::Failed("phase one unbounded".into()),
            Err(PhaseEnd::IterationLimit) => return LpOutcome::Failed("iteration limit in phase one".into()),
        }
        tab.refresh_basic_values();
        let row_scale = |i: usize| 1.0 + p.rows[i].lo.abs().min(p.rows[i].hi.abs()).min(1e12);
        let infeas = |tab: &Tableau| {
            art_rows
                .iter()
                .enumerate()
                .map(|(k, &i)| tab.x[n + m + k].max(0.0) / row_scale(i))
                .fold(0.0, f64::max)
        };
        if infeas(&tab) > 1e-9 && tab.reinvert() {
            match tab.optimize(max_pivots) {
                Ok(()) => tab.refresh_basic_values(),
                Err(_) => return LpOutcome::Failed("phase one did not recover after reinversion".into()),
            }
        }
        if infeas(&tab) > 1e-7 {
            return LpOutcome::Infeasible;
        }
        // retire artificials
        for j in n + m..ncols {
            tab.hi[j] = 0.0;
            tab.cost[j] = 0.0;
            if !matches!(tab.status[j], Status::Basic(_)) {
                tab.x[j] = 0.0;
                tab.status[j] = Status::AtLower;
            }
        }
        for r in 0..m {
            let b = tab.basis[r];
            if b >= n + m {
                let mut best = None;
                let mut best_abs = 1e-7;
                for j in 0..n + m {
                    if matches!(tab.status[j], Status::Basic(_)) {
                        continue;
                    }
                    let a = tab.at(r, j).abs();
                    if a > best_abs {
                        best_abs = a;
                        best = Some(j);
                    }
                }
                if let Some(q) = best {
                    tab.x[b] = 0.0;
                    tab.pivot(r, q);
                    tab.x[b] = 0.0;
                    tab.status[b] = Status::AtLower;
                }
            }
        }
        tab.refresh_basic_values();
    }

    for j in 0..n {
        tab.cost[j] = p.objective[j];
    }
    for j in n..ncols {
        tab.cost[j] = 0.0;
    }
    tab.recompute_reduced_costs();
    match tab.optimize(max_pivots) {
        Ok(()) => {}
        Err(PhaseEnd::Unbounded) => return LpOutcome::Unbounded,
        Err(PhaseEnd::IterationLimit) => return LpOutcome::Failed("iteration limit".into()),
    }
    tab.refresh_basic_values();

    let mut xs = clamped(&tab, p);
    let mut worst = row_residual(p, &xs);
    if worst > 1e-6 && tab.reinvert() {
        match tab.optimize(max_pivots) {
            Ok(()) => {}
            Err(PhaseEnd::Unbounded) => return LpOutcome::Unbounded,
            Err(PhaseEnd::IterationLimit) => return LpOutcome::Failed("iteration limit".into()),
        }
        tab.refresh_basic_values();
        xs = clamped(&tab, p);
        worst = row_residual(p, &xs);
    }
    if worst > 1e-6 {
        return LpOutcome::Failed(format!("row residual {worst:.3e} after optimization"));
    }
    let objective = p.objective.iter().zip(&xs).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal {
        x: xs,
        objective,
        pivots: tab.pivots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], lo: f64, hi: f64) -> LpRow {
        LpRow {
            terms: terms.to_vec(),
            lo,
            hi,
        }
    }

    #[test]
    fn small_max() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
        let p = LpProblem {
            num_vars: 2,
            objective: vec![3.0, 2.0],
            lower: vec![0.0, 0.0],
            upper: vec![3.0, f64::INFINITY],
            rows: vec![row(&[(0, 1.0), (1, 1.0)], f64::NEG_INFINITY, 4.0), row(&[(0, 1.0), (1, 3.0)], f64::NEG_INFINITY, 6.0)],
        };
        match solve_lp(&p) {
            LpOutcome::Optimal { objective, x, .. } => {
                assert!((objective - 11.0).abs() < 1e-9, "{objective} {x:?}");
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn needs_phase_one() {
        // max -x - y, x + y >= 2, x - y = 0
        let p = LpProblem {
            num_vars: 2,
            objective: vec![-1.0, -1.0],
            lower: vec![0.0, 0.0],
            upper: vec![10.0, 10.0],
            rows: vec![row(&[(0, 1.0), (1, 1.0)], 2.0, f64::INFINITY), row(&[(0, 1.0), (1, -1.0)], 0.0, 0.0)],
        };
        match solve_lp(&p) {
            LpOutcome::Optimal { objective, x, .. } => {
                assert!((objective + 2.0).abs() < 1e-9);
                assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_rows() {
        let p = LpProblem {
            num_vars: 1,
            objective: vec![1.0],
            lower: vec![0.0],
            upper: vec![1.0],
            rows: vec![row(&[(0, 1.0)], 2.0, f64::INFINITY)],
        };
        assert_eq!(solve_lp(&p), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded() {
        let p = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 0.0],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, 1.0],
            rows: vec![row(&[(0, 1.0), (1, -1.0)], f64::NEG_INFINITY, f64::INFINITY)],
        };
        assert_eq!(solve_lp(&p), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variable() {
        // max -|x - 3| style: max t, t <= x - 3, t <= 3 - x, x free, t free
        let p = LpProblem {
            num_vars: 2,
            objective: vec![0.0, 1.0],
            lower: vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY, f64::INFINITY],
            rows: vec![
                row(&[(1, 1.0), (0, -1.0)], f64::NEG_INFINITY, -3.0),
                row(&[(1, 1.0), (0, 1.0)], f64::NEG_INFINITY, 3.0),
            ],
        };
        match solve_lp(&p) {
            LpOutcome::Optimal { objective, x, .. } => {
                assert!(objective.abs() < 1e-9);
                assert!((x[0] - 3.0).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn tiny_coefficient_still_limits_step() {
        // a long move of y must respect a row where it enters with 1e-10
        let p = LpProblem {
            num_vars: 2,
            objective: vec![0.0, 1.0],
            lower: vec![0.99, 0.0],
            upper: vec![1.0, 1e9],
            rows: vec![row(&[(0, 1.0), (1, 1e-10)], f64::NEG_INFINITY, 1.0)],
        };
        match solve_lp(&p) {
            LpOutcome::Optimal { objective, x, .. } => {
                assert!((objective - 1e8).abs() < 1e-1, "{objective}");
                assert!(x[0] + 1e-10 * x[1] <= 1.0 + 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }
}
