//! Dense bounded-variable simplex on a full tableau.
//!
//! Every row `i` of the problem is written as `a_i·z + s_i = h_i` with a
//! logical (slack) column `s_i` bounded by `[0, ∞)` for inequality rows and
//! `[0, 0]` for equality rows. Structural columns carry their own bounds, so
//! box constraints never become rows. Phase 1 temporarily relaxes the bounds
//! of infeasible slacks and drives them back to zero; phase 2 is a primal
//! simplex with Dantzig pricing, falling back to Bland's rule on long
//! degenerate runs. A dual simplex re-optimizes after right-hand-side changes,
//! which is the hot path of the distributed algorithm.

use super::lu::Lu;
use super::{LpProblem, LpStatus};
use crate::scalar::Scalar;

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
    FreeZero,
}

#[derive(Debug, Clone)]
struct Relaxed<T> {
    lo: T,
    up: T,
    phase1_cost: T,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau<T> {
    m: usize,
    n: usize,
    ncols: usize,
    /// Original constraint matrix, row-major `m × n`.
    a: Vec<T>,
    rhs: Vec<T>,
    cost: Vec<T>,
    lo: Vec<T>,
    up: Vec<T>,
    /// `B⁻¹ [A | I]`, row-major `m × ncols`.
    tab: Vec<T>,
    beta: Vec<T>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    d: Vec<T>,
    feas_tol: T,
    opt_tol: T,
    piv_tol: T,
    pub(crate) pivots: usize,
    max_pivots: usize,
}

pub(crate) struct RawSolution<T> {
    pub status: LpStatus,
    pub z: Vec<T>,
    /// Reduced costs of the structural columns.
    pub reduced: Vec<T>,
    /// Reduced costs of the slack columns (row multipliers, sign-adjusted).
    pub row_duals: Vec<T>,
}

impl<T: Scalar> Tableau<T> {
    pub(crate) fn new(problem: &LpProblem<T>, tol: T) -> Self {
        let n = problem.num_vars();
        let m_ineq = problem.ineq_matrix.len();
        let m = m_ineq + problem.eq_matrix.len();
        let ncols = n + m;
        let mut a = Vec::with_capacity(m * n);
        for row in problem.ineq_matrix.iter().chain(&problem.eq_matrix) {
            a.extend_from_slice(row);
        }
        let rhs: Vec<T> = problem.ineq_rhs.iter().chain(&problem.eq_rhs).copied().collect();
        let mut cost = problem.objective.clone();
        cost.resize(ncols, T::zero());
        let mut lo = problem.lower.clone();
        let mut up = problem.upper.clone();
        for i in 0..m {
            lo.push(T::zero());
            up.push(if i < m_ineq { T::infinity() } else { T::zero() });
        }
        let scale = T::one() + super::max_abs_matrix(&a).max(super::max_abs_slice(&rhs));
        let feas_tol = tol * T::lit(0.1);
        let opt_tol = tol * T::lit(0.1);
        Self {
            m,
            n,
            ncols,
            a,
            rhs,
            cost,
            lo,
            up,
            tab: Vec::new(),
            beta: Vec::new(),
            basis: Vec::new(),
            state: Vec::new(),
            d: Vec::new(),
            feas_tol,
            opt_tol,
            piv_tol: T::pivot_tol() * scale.sqrt().max(T::one()),
            pivots: 0,
            max_pivots: 50 * (m + ncols) + 1000,
        }
    }

    fn value_of(&self, j: usize) -> T {
        match self.state[j] {
            VarState::Basic(r) => self.beta[r],
            VarState::Lower => self.lo[j],
            VarState::Upper => self.up[j],
            VarState::FreeZero => T::zero(),
        }
    }

    fn nonbasic_state(lo: T, up: T) -> VarState {
        if lo.is_finite() {
            VarState::Lower
        } else if up.is_finite() {
            VarState::Upper
        } else {
            VarState::FreeZero
        }
    }

    /// Two-phase cold solve.
    pub(crate) fn solve(&mut self) -> LpStatus {
        let (m, n, ncols) = (self.m, self.n, self.ncols);
        self.state = (0..ncols)
            .map(|j| if j < n { Self::nonbasic_state(self.lo[j], self.up[j]) } else { VarState::Basic(j - n) })
            .collect();
        self.basis = (0..m).map(|i| n + i).collect();
        self.tab = vec![T::zero(); m * ncols];
        for i in 0..m {
            self.tab[i * ncols..i * ncols + n].copy_from_slice(&self.a[i * n..(i + 1) * n]);
            self.tab[i * ncols + n + i] = T::one();
        }
        self.beta = (0..m)
            .map(|i| {
                let mut s = self.rhs[i];
                for j in 0..n {
                    let aij = self.a[i * n + j];
                    if aij != T::zero() {
                        s -= aij * self.value_of(j);
                    }
                }
                s
            })
            .collect();
        self.pivots = 0;

        // Phase 1: relax infeasible slack bounds.
        let mut relaxed: Vec<Option<Relaxed<T>>> = vec![None; ncols];
        let mut phase1_cost = vec![T::zero(); ncols];
        let mut any = false;
        for i in 0..m {
            let j = n + i;
            let s = self.beta[i];
            if s < self.lo[j] - self.feas_tol {
                relaxed[j] = Some(Relaxed { lo: self.lo[j], up: self.up[j], phase1_cost: -T::one() });
                self.up[j] = self.lo[j];
                self.lo[j] = s;
                phase1_cost[j] = -T::one();
                any = true;
            } else if s > self.up[j] + self.feas_tol {
                relaxed[j] = Some(Relaxed { lo: self.lo[j], up: self.up[j], phase1_cost: T::one() });
                self.lo[j] = self.up[j];
                self.up[j] = s;
                phase1_cost[j] = T::one();
                any = true;
            }
        }
        if any {
            self.d = self.reduced_costs(&phase1_cost);
            let status = self.primal_loop(Some((&mut relaxed, &mut phase1_cost)));
            if status != LpStatus::Solved {
                return status;
            }
            for j in 0..ncols {
                if let Some(r) = relaxed[j].take() {
                    let v = self.value_of(j);
                    if v < r.lo - self.feas_tol || v > r.up + self.feas_tol {
                        return LpStatus::Infeasible;
                    }
                    self.lo[j] = r.lo;
                    self.up[j] = r.up;
                    if !matches!(self.state[j], VarState::Basic(_)) {
                        self.state[j] = VarState::Lower;
                    }
                }
            }
        }

        self.d = self.reduced_costs(&self.cost.clone());
        self.primal_loop(None)
    }

    fn reduced_costs(&self, c: &[T]) -> Vec<T> {
        let ncols = self.ncols;
        let mut d = c.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != T::zero() {
                let row = &self.tab[r * ncols..(r + 1) * ncols];
                for (dj, &t) in d.iter_mut().zip(row) {
                    *dj -= cb * t;
                }
            }
        }
        for &b in &self.basis {
            d[b] = T::zero();
        }
        d
    }

    /// Entering column and its direction (+1 increase, −1 decrease).
    fn price(&self, bland: bool) -> Option<(usize, T)> {
        let mut best: Option<(usize, T, T)> = None;
        for j in 0..self.ncols {
            let dj = self.d[j];
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                _ if self.lo[j] == self.up[j] => continue,
                VarState::Lower if dj < -self.opt_tol => T::one(),
                VarState::Upper if dj > self.opt_tol => -T::one(),
                VarState::FreeZero if dj.abs() > self.opt_tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let p = self.tab[r * ncols + q];
        let inv = T::one() / p;
        for v in &mut self.tab[r * ncols..(r + 1) * ncols] {
            *v *= inv;
        }
        self.tab[r * ncols + q] = T::one();
        let (before, rest) = self.tab.split_at_mut(r * ncols);
        let (prow, after) = rest.split_at_mut(ncols);
        for row in before.chunks_exact_mut(ncols).chain(after.chunks_exact_mut(ncols)) {
            let f = row[q];
            if f != T::zero() {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[q] = T::zero();
            }
        }
        let f = self.d[q];
        if f != T::zero() {
            for (v, &pv) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
        }
        self.d[q] = T::zero();
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);
        debug_assert!(!matches!(self.state[leaving], VarState::Basic(_)));
        self.pivots += 1;
    }

    fn primal_loop(&mut self, mut phase1: Option<(&mut Vec<Option<Relaxed<T>>>, &mut Vec<T>)>) -> LpStatus {
        let ncols = self.ncols;
        let mut degenerate_run = 0usize;
        let mut refreshed = false;
        loop {
            if self.pivots > self.max_pivots {
                return LpStatus::NumericalFailure;
            }
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let Some((q, dir)) = self.price(bland) else {
                return LpStatus::Solved;
            };

            // Harris two-pass ratio test.
            let own_range = self.up[q] - self.lo[q];
            let mut theta_relaxed = own_range;
            for r in 0..self.m {
                let alpha = dir * self.tab[r * ncols + q];
                let b = self.basis[r];
                if alpha > self.piv_tol {
                    if self.lo[b].is_finite() {
                        theta_relaxed = theta_relaxed.min((self.beta[r] - self.lo[b] + self.feas_tol) / alpha);
                    }
                } else if alpha < -self.piv_tol && self.up[b].is_finite() {
                    theta_relaxed = theta_relaxed.min((self.up[b] - self.beta[r] + self.feas_tol) / -alpha);
                }
            }
            if theta_relaxed.is_infinite() {
                // phase 1 is bounded below, so an unblocked ray there is roundoff in d
                if !refreshed {
                    let cost = match &phase1 {
                        Some((_, c)) => c.to_vec(),
                        None => self.cost.clone(),
                    };
                    self.d = self.reduced_costs(&cost);
                    refreshed = true;
                    continue;
                }
                if phase1.is_none() {
                    return LpStatus::Unbounded;
                }
                self.d[q] = T::zero();
                continue;
            }
            let mut leave: Option<(usize, T, bool)> = None; // (row, step, hits_lower)
            let mut best_alpha = T::zero();
            for r in 0..self.m {
                let alpha = dir * self.tab[r * ncols + q];
                let b = self.basis[r];
                let (ratio, hits_lower) = if alpha > self.piv_tol && self.lo[b].is_finite() {
                    ((self.beta[r] - self.lo[b]) / alpha, true)
                } else if alpha < -self.piv_tol && self.up[b].is_finite() {
                    ((self.up[b] - self.beta[r]) / -alpha, false)
                } else {
                    continue;
                };
                if ratio > theta_relaxed {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((lr, _, _)) => {
                        if bland {
                            b < self.basis[lr]
                        } else {
                            alpha.abs() > best_alpha
                        }
                    }
                };
                if better {
                    best_alpha = alpha.abs();
                    leave = Some((r, ratio.max(T::zero()), hits_lower));
                }
            }

            let step = match leave {
                Some((_, s, _)) if s <= own_range => s,
                _ => own_range,
            };
            if step <= T::epsilon() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            let entering_value = self.value_of(q) + dir * step;
            if step != T::zero() {
                for r in 0..self.m {
                    let t = self.tab[r * ncols + q];
                    if t != T::zero() {
                        self.beta[r] -= dir * step * t;
                    }
                }
            }
            refreshed = false;
            match leave {
                Some((r, s, hits_lower)) if s <= own_range => {
                    let b = self.basis[r];
                    self.state[b] = if hits_lower { VarState::Lower } else { VarState::Upper };
                    self.pivot(r, q);
                    self.beta[r] = entering_value;
                    if let Some((relaxed, costs)) = phase1.as_mut() {
                        self.restore_if_reached(b, relaxed, costs);
                    }
                }
                _ => {
                    self.state[q] = if dir > T::zero() { VarState::Upper } else { VarState::Lower };
                    if let Some((relaxed, costs)) = phase1.as_mut() {
                        self.restore_if_reached(q, relaxed, costs);
                    }
                }
            }
            if let Some((relaxed, _)) = phase1.as_ref() {
                if relaxed.iter().all(Option::is_none) {
                    return LpStatus::Solved;
                }
            }
        }
    }

    /// A relaxed slack that became nonbasic at its original bound returns to
    /// its real bounds with zero phase-1 cost.
    fn restore_if_reached(&mut self, j: usize, relaxed: &mut [Option<Relaxed<T>>], costs: &mut [T]) {
        let Some(r) = relaxed[j].as_ref() else { return };
        let at_target = match self.state[j] {
            VarState::Upper => r.phase1_cost < T::zero(),
            VarState::Lower => r.phase1_cost > T::zero(),
            _ => false,
        };
        if at_target {
            let r = relaxed[j].take().expect("checked above");
            self.d[j] -= costs[j];
            costs[j] = T::zero();
            self.lo[j] = r.lo;
            self.up[j] = r.up;
            self.state[j] = VarState::Lower;
        }
    }

    /// Replaces the right-hand side and re-optimizes with the dual simplex,
    /// starting from the current (dual feasible) basis.
    pub(crate) fn resolve_rhs(&mut self, new_rhs: &[T]) -> LpStatus {
        let (m, n, ncols) = (self.m, self.n, self.ncols);
        debug_assert_eq!(new_rhs.len(), m);
        for i in 0..m {
            let delta = new_rhs[i] - self.rhs[i];
            if delta != T::zero() {
                let col = n + i;
                for r in 0..m {
                    let t = self.tab[r * ncols + col];
                    if t != T::zero() {
                        self.beta[r] += t * delta;
                    }
                }
            }
        }
        self.rhs.copy_from_slice(new_rhs);
        self.dual_loop()
    }

    fn dual_loop(&mut self) -> LpStatus {
        let ncols = self.ncols;
        loop {
            if self.pivots > self.max_pivots {
                return LpStatus::NumericalFailure;
            }
            let mut pick: Option<(usize, T, bool)> = None; // (row, infeasibility, below)
            for r in 0..self.m {
                let b = self.basis[r];
                let (inf, below) = if self.beta[r] < self.lo[b] - self.feas_tol {
                    (self.lo[b] - self.beta[r], true)
                } else if self.beta[r] > self.up[b] + self.feas_tol {
                    (self.beta[r] - self.up[b], false)
                } else {
                    continue;
                };
                if pick.map_or(true, |(_, best, _)| inf > best) {
                    pick = Some((r, inf, below));
                }
            }
            let Some((r, _, below)) = pick else {
                return LpStatus::Solved;
            };
            let b = self.basis[r];
            let target = if below { self.lo[b] } else { self.up[b] };
            let row = &self.tab[r * ncols..(r + 1) * ncols];
            let mut enter: Option<(usize, T, T)> = None; // (col, ratio, |alpha|)
            for j in 0..ncols {
                let alpha = row[j];
                if alpha.abs() <= self.piv_tol || self.lo[j] == self.up[j] {
                    continue;
                }
                // beta_r moves by −alpha·t; below ⇒ need −alpha·t > 0.
                let ok = match self.state[j] {
                    VarState::Basic(_) => false,
                    VarState::Lower => (alpha < T::zero()) == below,
                    VarState::Upper => (alpha > T::zero()) == below,
                    VarState::FreeZero => true,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                let better = match enter {
                    None => true,
                    Some((_, best, best_alpha)) => {
                        ratio < best - self.opt_tol * T::lit(1e-3) || (ratio <= best && alpha.abs() > best_alpha)
                    }
                };
                if better {
                    enter = Some((j, ratio, alpha.abs()));
                }
            }
            let Some((q, _, _)) = enter else {
                return LpStatus::Infeasible;
            };
            let alpha = self.tab[r * ncols + q];
            let t = (self.beta[r] - target) / alpha;
            let entering_value = self.value_of(q) + t;
            for i in 0..self.m {
                let ti = self.tab[i * ncols + q];
                if ti != T::zero() {
                    self.beta[i] -= ti * t;
                }
            }
            self.state[b] = if below { VarState::Lower } else { VarState::Upper };
            self.pivot(r, q);
            self.beta[r] = entering_value;
        }
    }

    /// Recomputes `B⁻¹ [A | I]`, basic values, and reduced costs from the
    /// original data for the current basis. Returns false if `B` is singular.
    pub(crate) fn refactor(&mut self) -> bool {
        let (m, ncols) = (self.m, self.ncols);
        let Some(lu) = self.factor_basis() else { return false };
        let mut col = vec![T::zero(); m];
        let mut tab = vec![T::zero(); m * ncols];
        for j in 0..ncols {
            self.column_into(j, &mut col);
            let x = lu.solve(&col);
            for r in 0..m {
                tab[r * ncols + j] = x[r];
            }
        }
        self.tab = tab;
        self.recompute_basic(&lu);
        true
    }

    /// Recomputes basic values and reduced costs against a fresh
    /// factorization, leaving the tableau untouched.
    pub(crate) fn polish(&mut self) -> bool {
        let Some(lu) = self.factor_basis() else { return false };
        self.recompute_basic(&lu);
        true
    }

    fn column_into(&self, j: usize, col: &mut [T]) {
        if j < self.n {
            for (r, c) in col.iter_mut().enumerate() {
                *c = self.a[r * self.n + j];
            }
        } else {
            col.fill(T::zero());
            col[j - self.n] = T::one();
        }
    }

    fn factor_basis(&self) -> Option<Lu<T>> {
        let m = self.m;
        let mut bmat = vec![T::zero(); m * m];
        let mut col = vec![T::zero(); m];
        for (k, &b) in self.basis.iter().enumerate() {
            self.column_into(b, &mut col);
            for r in 0..m {
                bmat[r * m + k] = col[r];
            }
        }
        Lu::factor(m, bmat)
    }

    fn recompute_basic(&mut self, lu: &Lu<T>) {
        let (m, n) = (self.m, self.n);
        let mut rhs = self.rhs.clone();
        for j in 0..self.ncols {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.value_of(j);
            if v == T::zero() {
                continue;
            }
            if j < n {
                for (r, h) in rhs.iter_mut().enumerate() {
                    *h -= self.a[r * n + j] * v;
                }
            } else {
                rhs[j - n] -= v;
            }
        }
        self.beta = lu.solve(&rhs);
        let cb: Vec<T> = self.basis.iter().map(|&b| self.cost[b]).collect();
        let pi = lu.solve_transpose(&cb);
        for j in 0..self.ncols {
            self.d[j] = if matches!(self.state[j], VarState::Basic(_)) {
                T::zero()
            } else if j < n {
                let mut s = self.cost[j];
                for r in 0..m {
                    s -= pi[r] * self.a[r * n + j];
                }
                s
            } else {
                self.cost[j] - pi[j - n]
            };
        }
    }

    pub(crate) fn extract(&self, status: LpStatus) -> RawSolution<T> {
        let n = self.n;
        let z = (0..n).map(|j| self.value_of(j)).collect();
        RawSolution {
            status,
            z,
            reduced: self.d[..n].to_vec(),
            row_duals: self.d[n..].to_vec(),
        }
    }
}
