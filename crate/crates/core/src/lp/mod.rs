//! Dense LP engine with dual recovery and independent KKT certification.
//!
//! Problems have the form
//!
//! ```text
//!   min  cᵀz + Σ_j q_j z_j²
//!   s.t. G z ≤ h,  Aeq z = beq,  l ≤ z ≤ u
//! ```
//!
//! with `q ⪰ 0` (separable convex quadratic, optional) and possibly infinite
//! bounds. Linear problems go straight to the bounded simplex; separable
//! quadratic objectives are handled by an outer-approximation loop on top of
//! it. Every returned solution carries KKT residuals recomputed from the
//! original data by [`check_kkt`].

mod lu;
mod simplex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use simplex::Tableau;

/// Residual tolerance accepted for the separable-quadratic path.
pub const QUADRATIC_KKT_TOL: f64 = 1e-6;
const MAX_CUT_ROUNDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Solved,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpProblem<T> {
    pub objective: Vec<T>,
    /// Diagonal of the separable quadratic term, when present.
    pub quadratic: Option<Vec<T>>,
    pub ineq_matrix: Vec<Vec<T>>,
    pub ineq_rhs: Vec<T>,
    pub eq_matrix: Vec<Vec<T>>,
    pub eq_rhs: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

/// Max-norm KKT residuals of a candidate primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals<T> {
    pub primal_feas: T,
    pub dual_feas: T,
    pub complementarity: T,
    pub stationarity: T,
}

impl<T: Scalar> KktResiduals<T> {
    pub fn max(&self) -> T {
        self.primal_feas.max(self.dual_feas).max(self.complementarity).max(self.stationarity)
    }

    fn nan() -> Self {
        let nan = T::nan();
        Self { primal_feas: nan, dual_feas: nan, complementarity: nan, stationarity: nan }
    }
}

/// Primal point and multipliers. Multipliers follow the Lagrangian
/// `cᵀz + λᵀ(Gz − h) + νᵀ(Az − b) − w_lᵀ(z − l) + w_uᵀ(z − u)`.
#[derive(Debug, Clone, Serialize)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub z: Vec<T>,
    pub objective_value: T,
    pub duals_ineq: Vec<T>,
    pub duals_eq: Vec<T>,
    pub duals_lower: Vec<T>,
    pub duals_upper: Vec<T>,
    pub kkt_residuals: KktResiduals<T>,
    pub pivots: usize,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_solved(&self) -> bool {
        self.status == LpStatus::Solved
    }
}

impl<T: Scalar> LpProblem<T> {
    /// A problem with `n` free variables and the given linear objective.
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        Self {
            objective,
            quadratic: None,
            ineq_matrix: Vec::new(),
            ineq_rhs: Vec::new(),
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            lower: vec![T::neg_infinity(); n],
            upper: vec![T::infinity(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_bounds(mut self, lower: Vec<T>, upper: Vec<T>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_quadratic(mut self, diag: Vec<T>) -> Self {
        self.quadratic = Some(diag);
        self
    }

    pub fn add_ineq(&mut self, row: Vec<T>, rhs: T) {
        self.ineq_matrix.push(row);
        self.ineq_rhs.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let n = self.num_vars();
        let dim = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Dimension(format!("{what}: expected {want}, got {got}")))
            }
        };
        dim("lower bounds", self.lower.len(), n)?;
        dim("upper bounds", self.upper.len(), n)?;
        dim("inequality rhs", self.ineq_rhs.len(), self.ineq_matrix.len())?;
        dim("equality rhs", self.eq_rhs.len(), self.eq_matrix.len())?;
        for row in self.ineq_matrix.iter().chain(&self.eq_matrix) {
            dim("constraint row", row.len(), n)?;
        }
        if let Some(q) = &self.quadratic {
            dim("quadratic diagonal", q.len(), n)?;
            if q.iter().any(|&v| v < T::zero() || !v.is_finite()) {
                return Err(Error::InvalidArgument("quadratic term must be finite and nonnegative".into()));
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == T::infinity() || self.upper[j] == T::neg_infinity() {
                return Err(Error::InvalidArgument(format!("empty bound interval on variable {j}")));
            }
        }
        Ok(())
    }

    fn has_quadratic(&self) -> bool {
        self.quadratic.as_ref().is_some_and(|q| q.iter().any(|&v| v > T::zero()))
    }

    pub fn objective_at(&self, z: &[T]) -> T {
        let mut v = crate::scalar::dot(&self.objective, z);
        if let Some(q) = &self.quadratic {
            v += q.iter().zip(z).map(|(&qj, &zj)| qj * zj * zj).sum::<T>();
        }
        v
    }

    fn stacked_rhs(&self) -> Vec<T> {
        self.ineq_rhs.iter().chain(&self.eq_rhs).copied().collect()
    }
}

pub(crate) fn max_abs_matrix<T: Scalar>(a: &[T]) -> T {
    crate::scalar::max_abs(a)
}

pub(crate) fn max_abs_slice<T: Scalar>(a: &[T]) -> T {
    a.iter().filter(|v| v.is_finite()).fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Recomputes the four KKT residuals of `candidate` from the problem data.
pub fn check_kkt<T: Scalar>(problem: &LpProblem<T>, candidate: &LpSolution<T>) -> KktResiduals<T> {
    let n = problem.num_vars();
    let z = &candidate.z;
    if z.len() != n
        || candidate.duals_ineq.len() != problem.ineq_matrix.len()
        || candidate.duals_eq.len() != problem.eq_matrix.len()
        || candidate.duals_lower.len() != n
        || candidate.duals_upper.len() != n
    {
        return KktResiduals::nan();
    }
    let zero = T::zero();
    let mut primal = zero;
    let mut dual = zero;
    let mut comp = zero;
    let mut grad: Vec<T> = problem.objective.clone();
    if let Some(q) = &problem.quadratic {
        for j in 0..n {
            grad[j] += (q[j] + q[j]) * z[j];
        }
    }
    for (k, row) in problem.ineq_matrix.iter().enumerate() {
        let lam = candidate.duals_ineq[k];
        let slack = crate::scalar::dot(row, z) - problem.ineq_rhs[k];
        primal = primal.max(slack);
        dual = dual.max(-lam);
        comp = comp.max((lam * slack).abs());
        for j in 0..n {
            grad[j] += row[j] * lam;
        }
    }
    for (k, row) in problem.eq_matrix.iter().enumerate() {
        let nu = candidate.duals_eq[k];
        primal = primal.max((crate::scalar::dot(row, z) - problem.eq_rhs[k]).abs());
        for j in 0..n {
            grad[j] += row[j] * nu;
        }
    }
    for j in 0..n {
        let (l, u) = (problem.lower[j], problem.upper[j]);
        let (wl, wu) = (candidate.duals_lower[j], candidate.duals_upper[j]);
        dual = dual.max(-wl).max(-wu);
        if l.is_finite() {
            primal = primal.max(l - z[j]);
            comp = comp.max((wl * (z[j] - l)).abs());
        } else {
            dual = dual.max(wl.abs());
        }
        if u.is_finite() {
            primal = primal.max(z[j] - u);
            comp = comp.max((wu * (u - z[j])).abs());
        } else {
            dual = dual.max(wu.abs());
        }
        grad[j] = grad[j] - wl + wu;
    }
    KktResiduals {
        primal_feas: primal,
        dual_feas: dual,
        complementarity: comp,
        stationarity: crate::scalar::max_abs(&grad),
    }
}

/// Lagrangian dual objective at the candidate multipliers.
pub fn dual_objective<T: Scalar>(problem: &LpProblem<T>, candidate: &LpSolution<T>) -> T {
    let mut v = -crate::scalar::dot(&problem.ineq_rhs, &candidate.duals_ineq)
        - crate::scalar::dot(&problem.eq_rhs, &candidate.duals_eq);
    for j in 0..problem.num_vars() {
        if problem.lower[j].is_finite() {
            v += problem.lower[j] * candidate.duals_lower[j];
        }
        if problem.upper[j].is_finite() {
            v -= problem.upper[j] * candidate.duals_upper[j];
        }
    }
    if let Some(q) = &problem.quadratic {
        v -= q.iter().zip(&candidate.z).map(|(&qj, &zj)| qj * zj * zj).sum::<T>();
    }
    v
}

fn assemble<T: Scalar>(problem: &LpProblem<T>, raw: simplex::RawSolution<T>, pivots: usize) -> LpSolution<T> {
    let m_ineq = problem.ineq_matrix.len();
    let n = problem.num_vars();
    let solved = raw.status == LpStatus::Solved;
    let pick = |v: &[T]| if solved { v.to_vec() } else { vec![T::zero(); v.len()] };
    let reduced = pick(&raw.reduced);
    let row = pick(&raw.row_duals);
    let mut sol = LpSolution {
        status: raw.status,
        objective_value: if solved { problem.objective_at(&raw.z) } else { T::nan() },
        z: raw.z,
        duals_ineq: row[..m_ineq].to_vec(),
        duals_eq: row[m_ineq..].to_vec(),
        duals_lower: (0..n).map(|j| reduced[j].max(T::zero())).collect(),
        duals_upper: (0..n).map(|j| (-reduced[j]).max(T::zero())).collect(),
        kkt_residuals: KktResiduals::nan(),
        pivots,
    };
    sol.kkt_residuals = check_kkt(problem, &sol);
    sol
}

/// Certifies a Solved candidate, polishing once against a fresh basis
/// factorization before giving up.
fn certify<T: Scalar>(problem: &LpProblem<T>, tab: &mut Tableau<T>, status: LpStatus, tol: T) -> LpSolution<T> {
    let sol = assemble(problem, tab.extract(status), tab.pivots);
    if status != LpStatus::Solved || sol.kkt_residuals.max() <= tol {
        return sol;
    }
    if tab.polish() {
        let sol = assemble(problem, tab.extract(status), tab.pivots);
        if sol.kkt_residuals.max() <= tol {
            return sol;
        }
    }
    LpSolution { status: LpStatus::NumericalFailure, ..sol }
}

/// Solves the problem to KKT tolerance `tol`.
pub fn solve<T: Scalar>(problem: &LpProblem<T>, tol: T) -> Result<LpSolution<T>> {
    problem.check_dimensions()?;
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if problem.has_quadratic() {
        return Ok(solve_separable_quadratic(problem, tol));
    }
    let mut tab = Tableau::new(problem, tol);
    let status = tab.solve();
    Ok(certify(problem, &mut tab, status, tol))
}

/// Outer approximation of `q_j z_j²` by tangent cuts on epigraph variables.
fn solve_separable_quadratic<T: Scalar>(problem: &LpProblem<T>, tol: T) -> LpSolution<T> {
    let q = problem.quadratic.as_ref().expect("quadratic present");
    let n = problem.num_vars();
    let quad_vars: Vec<usize> = (0..n).filter(|&j| q[j] > T::zero()).collect();
    let k = quad_vars.len();
    let width = n + k;
    let pad = |row: &Vec<T>| {
        let mut r = row.clone();
        r.resize(width, T::zero());
        r
    };
    let mut objective = problem.objective.clone();
    objective.resize(width, T::one());
    let mut lifted = LpProblem::new(objective);
    lifted.ineq_matrix = problem.ineq_matrix.iter().map(pad).collect();
    lifted.ineq_rhs = problem.ineq_rhs.clone();
    lifted.eq_matrix = problem.eq_matrix.iter().map(pad).collect();
    lifted.eq_rhs = problem.eq_rhs.clone();
    lifted.lower[..n].copy_from_slice(&problem.lower);
    lifted.upper[..n].copy_from_slice(&problem.upper);

    let add_cut = |lp: &mut LpProblem<T>, slot: usize, y: T| {
        let j = quad_vars[slot];
        let mut row = vec![T::zero(); width];
        row[j] = (q[j] + q[j]) * y;
        row[n + slot] = -T::one();
        lp.add_ineq(row, q[j] * y * y);
    };
    for (slot, &j) in quad_vars.iter().enumerate() {
        let (l, u) = (problem.lower[j], problem.upper[j]);
        let center = -problem.objective[j] / (q[j] + q[j]);
        let mut points = Vec::new();
        if l.is_finite() && u.is_finite() {
            points.extend([l, u, (l + u) * T::lit(0.5)]);
        } else {
            points.extend([center - T::one(), center + T::one()]);
        }
        if center >= l && center <= u {
            points.push(center);
        }
        for y in points {
            add_cut(&mut lifted, slot, y);
        }
    }

    let m_ineq = problem.ineq_matrix.len();
    let accept = tol.max(T::lit(QUADRATIC_KKT_TOL));
    let mut best: Option<LpSolution<T>> = None;
    // coarse cuts usually leave a point the active-set polish can finish
    for gap_tol in [tol, tol * tol] {
        let mut last: Option<LpSolution<T>> = None;
        for _ in 0..MAX_CUT_ROUNDS {
            let mut tab = Tableau::new(&lifted, tol);
            let status = tab.solve();
            let sol = assemble(&lifted, tab.extract(status), tab.pivots);
            if status != LpStatus::Solved {
                return project_lifted(problem, sol, m_ineq, status);
            }
            if last.as_ref().is_some_and(|prev| prev.z == sol.z) {
                break;
            }
            let mut added = false;
            for (slot, &j) in quad_vars.iter().enumerate() {
                let zj = sol.z[j];
                let gap = q[j] * zj * zj - sol.z[n + slot];
                if gap > gap_tol * (T::one() + q[j] * zj * zj) {
                    add_cut(&mut lifted, slot, zj);
                    added = true;
                }
            }
            last = Some(sol);
            if !added {
                break;
            }
        }
        let mut out = project_lifted(problem, last.expect("at least one round"), m_ineq, LpStatus::Solved);
        if let Some(polished) = polish_active_set(problem, &out) {
            if polished.kkt_residuals.max() < out.kkt_residuals.max() {
                out = polished;
            }
        }
        let done = out.kkt_residuals.max() <= accept;
        if best.as_ref().map_or(true, |b| out.kkt_residuals.max() < b.kkt_residuals.max()) {
            best = Some(out);
        }
        if done {
            break;
        }
    }
    let mut out = best.expect("at least one phase");
    if out.kkt_residuals.max() > tol.max(T::lit(QUADRATIC_KKT_TOL)) {
        out.status = LpStatus::NumericalFailure;
    }
    out
}

/// Primal active-set refinement started from an approximate solution. The
/// working set is seeded from the approximate multipliers; each iteration
/// solves the equality-constrained KKT system, steps toward it as far as
/// feasibility allows, then adds the blocking constraint or drops one with
/// a wrong-signed multiplier.
fn polish_active_set<T: Scalar>(problem: &LpProblem<T>, approx: &LpSolution<T>) -> Option<LpSolution<T>> {
    let n = problem.num_vars();
    let m = problem.ineq_matrix.len();
    let q = problem.quadratic.as_ref()?;
    let tiny = T::lit(1e-9);
    let mut z: Vec<T> = (0..n).map(|j| approx.z[j].max(problem.lower[j]).min(problem.upper[j])).collect();
    let mut fixed: Vec<Option<T>> = (0..n)
        .map(|j| {
            if approx.duals_lower[j] > tiny && problem.lower[j].is_finite() {
                Some(problem.lower[j])
            } else if approx.duals_upper[j] > tiny && problem.upper[j].is_finite() {
                Some(problem.upper[j])
            } else {
                None
            }
        })
        .collect();
    for j in 0..n {
        if let Some(v) = fixed[j] {
            z[j] = v;
        }
    }
    let mut active: Vec<usize> = (0..m).filter(|&k| approx.duals_ineq[k] > tiny).collect();
    for _ in 0..4 * (n + m) + 8 {
        let (target, duals_ineq, duals_eq) = solve_kkt_system(problem, q, &z, &fixed, &active)?;
        let d: Vec<T> = (0..n).map(|j| target[j] - z[j]).collect();
        let mut alpha = T::one();
        let mut block = None;
        for j in (0..n).filter(|&j| fixed[j].is_none()) {
            if target[j] >= problem.lower[j] - tiny && target[j] <= problem.upper[j] + tiny {
                continue;
            }
            if d[j] < T::zero() && problem.lower[j].is_finite() {
                let a = ((problem.lower[j] - z[j]) / d[j]).max(T::zero());
                if a < alpha {
                    alpha = a;
                    block = Some((Some((j, problem.lower[j])), None));
                }
            } else if d[j] > T::zero() && problem.upper[j].is_finite() {
                let a = ((problem.upper[j] - z[j]) / d[j]).max(T::zero());
                if a < alpha {
                    alpha = a;
                    block = Some((Some((j, problem.upper[j])), None));
                }
            }
        }
        for (k, row) in problem.ineq_matrix.iter().enumerate() {
            if active.contains(&k) {
                continue;
            }
            let rate = dot(row, &d);
            if rate > T::zero() && dot(row, &target) > problem.ineq_rhs[k] + tiny {
                let a = ((problem.ineq_rhs[k] - dot(row, &z)) / rate).max(T::zero());
                if a < alpha {
                    alpha = a;
                    block = Some((None, Some(k)));
                }
            }
        }
        for j in 0..n {
            z[j] += alpha * d[j];
        }
        match block {
            Some((Some((j, v)), _)) => {
                z[j] = v;
                fixed[j] = Some(v);
                continue;
            }
            Some((None, Some(k))) => {
                active.push(k);
                continue;
            }
            _ => {}
        }
        z = (0..n).map(|j| target[j].max(problem.lower[j]).min(problem.upper[j])).collect();

        let mut grad = problem.objective.clone();
        for j in 0..n {
            grad[j] += (q[j] + q[j]) * z[j];
        }
        for (k, row) in problem.ineq_matrix.iter().enumerate() {
            for j in 0..n {
                grad[j] += row[j] * duals_ineq[k];
            }
        }
        for (k, row) in problem.eq_matrix.iter().enumerate() {
            for j in 0..n {
                grad[j] += row[j] * duals_eq[k];
            }
        }
        let mut worst = -tiny;
        let mut release = None;
        for (pos, &k) in active.iter().enumerate() {
            if duals_ineq[k] < worst {
                worst = duals_ineq[k];
                release = Some((None, Some(pos)));
            }
        }
        for j in 0..n {
            let wrong = match fixed[j] {
                Some(v) if v == problem.lower[j] => grad[j],
                Some(_) => -grad[j],
                None => T::zero(),
            };
            if wrong < worst {
                worst = wrong;
                release = Some((Some(j), None));
            }
        }
        match release {
            Some((Some(j), _)) => {
                fixed[j] = None;
                continue;
            }
            Some((None, Some(pos))) => {
                active.remove(pos);
                continue;
            }
            _ => {}
        }

        let mut sol = LpSolution {
            status: LpStatus::Solved,
            objective_value: problem.objective_at(&z),
            z,
            duals_ineq,
            duals_eq,
            duals_lower: vec![T::zero(); n],
            duals_upper: vec![T::zero(); n],
            kkt_residuals: KktResiduals::nan(),
            pivots: approx.pivots,
        };
        for j in 0..n {
            if sol.z[j] == problem.lower[j] {
                sol.duals_lower[j] = grad[j].max(T::zero());
            }
            if sol.z[j] == problem.upper[j] {
                sol.duals_upper[j] = (-grad[j]).max(T::zero());
            }
        }
        sol.kkt_residuals = check_kkt(problem, &sol);
        return Some(sol);
    }
    None
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Returns `(z, inequality duals, equality duals)` for one active set.
/// Linear variables outside every active row keep their value from `start`.
fn solve_kkt_system<T: Scalar>(
    problem: &LpProblem<T>,
    q: &[T],
    start: &[T],
    fixed: &[Option<T>],
    active: &[usize],
) -> Option<(Vec<T>, Vec<T>, Vec<T>)> {
    let n = problem.num_vars();
    let rows: Vec<(&Vec<T>, T)> = active
        .iter()
        .map(|&k| (&problem.ineq_matrix[k], problem.ineq_rhs[k]))
        .chain(problem.eq_matrix.iter().zip(problem.eq_rhs.iter().copied()))
        .collect();
    let scale = problem.objective.iter().chain(q).fold(T::one(), |m, v| m.max(v.abs()));
    let linear = |j: usize| q[j] <= scale * T::epsilon() * T::lit(64.0);
    let mut z = start.to_vec();
    let mut free = Vec::new();
    for j in 0..n {
        match fixed[j] {
            Some(v) => z[j] = v,
            None if !linear(j) || rows.iter().any(|(row, _)| row[j] != T::zero()) => free.push(j),
            None => {}
        }
    }
    let mut duals_ineq = vec![T::zero(); problem.ineq_matrix.len()];
    loop {
        if let Some(x) = factor_kkt(problem, q, &z, &free, &rows) {
            let nf = free.len();
            for (a, &j) in free.iter().enumerate() {
                z[j] = x[a];
            }
            for (r, &k) in active.iter().enumerate() {
                duals_ineq[k] = x[nf + r];
            }
            return Some((z, duals_ineq, x[nf + active.len()..].to_vec()));
        }
        // dual degenerate: pin a linear variable, preferring one at a bound, and retry
        let tiny = T::lit(1e-9);
        let at_bound = |j: usize| (z[j] - problem.lower[j]).abs() <= tiny || (z[j] - problem.upper[j]).abs() <= tiny;
        let pos = free
            .iter()
            .rposition(|&j| linear(j) && at_bound(j))
            .or_else(|| free.iter().rposition(|&j| linear(j)))?;
        let j = free.remove(pos);
        if (z[j] - problem.lower[j]).abs() <= tiny {
            z[j] = problem.lower[j];
        } else if (z[j] - problem.upper[j]).abs() <= tiny {
            z[j] = problem.upper[j];
        }
    }
}

fn factor_kkt<T: Scalar>(problem: &LpProblem<T>, q: &[T], z: &[T], free: &[usize], rows: &[(&Vec<T>, T)]) -> Option<Vec<T>> {
    let n = problem.num_vars();
    let nf = free.len();
    let dim = nf + rows.len();
    if dim == 0 {
        return Some(Vec::new());
    }
    let mut kkt = vec![T::zero(); dim * dim];
    let mut rhs = vec![T::zero(); dim];
    for (a, &j) in free.iter().enumerate() {
        kkt[a * dim + a] = q[j] + q[j];
        rhs[a] = -problem.objective[j];
        for (r, (row, _)) in rows.iter().enumerate() {
            kkt[a * dim + nf + r] = row[j];
        }
    }
    for (r, (row, h)) in rows.iter().enumerate() {
        let mut pinned = *h;
        for j in 0..n {
            if !free.contains(&j) {
                pinned -= row[j] * z[j];
            }
        }
        for (a, &j) in free.iter().enumerate() {
            kkt[(nf + r) * dim + a] = row[j];
        }
        rhs[nf + r] = pinned;
    }
    Some(lu::Lu::factor(dim, kkt)?.solve(&rhs))
}

fn project_lifted<T: Scalar>(problem: &LpProblem<T>, lifted: LpSolution<T>, m_ineq: usize, status: LpStatus) -> LpSolution<T> {
    let n = problem.num_vars();
    let mut sol = LpSolution {
        status,
        objective_value: if status == LpStatus::Solved { problem.objective_at(&lifted.z[..n]) } else { T::nan() },
        z: lifted.z[..n].to_vec(),
        duals_ineq: lifted.duals_ineq[..m_ineq].to_vec(),
        duals_eq: lifted.duals_eq,
        duals_lower: lifted.duals_lower[..n].to_vec(),
        duals_upper: lifted.duals_upper[..n].to_vec(),
        kkt_residuals: KktResiduals::nan(),
        pivots: lifted.pivots,
    };
    sol.kkt_residuals = check_kkt(problem, &sol);
    sol
}

/// A solved linear program that can be re-optimized cheaply after its
/// inequality right-hand side changes.
#[derive(Debug, Clone)]
pub struct WarmStart<T> {
    problem: LpProblem<T>,
    tableau: Tableau<T>,
    tol: T,
}

impl<T: Scalar> WarmStart<T> {
    /// Cold-solves `problem`; the returned state is reusable only when the
    /// solve succeeded. Separable quadratic objectives are not supported.
    pub fn new(problem: LpProblem<T>, tol: T) -> Result<(Self, LpSolution<T>)> {
        problem.check_dimensions()?;
        if problem.has_quadratic() {
            return Err(Error::InvalidArgument("warm start supports linear objectives only".into()));
        }
        let mut tableau = Tableau::new(&problem, tol);
        let status = tableau.solve();
        let sol = certify(&problem, &mut tableau, status, tol);
        Ok((Self { problem, tableau, tol }, sol))
    }

    pub fn problem(&self) -> &LpProblem<T> {
        &self.problem
    }

    /// Replaces `h` in `G z ≤ h` and re-optimizes from the current basis,
    /// escalating to a refactorization and finally a cold solve if the
    /// warm result does not certify.
    pub fn resolve_ineq_rhs(&mut self, h: &[T]) -> Result<LpSolution<T>> {
        if h.len() != self.problem.ineq_rhs.len() {
            return Err(Error::Dimension(format!(
                "inequality rhs: expected {}, got {}",
                self.problem.ineq_rhs.len(),
                h.len()
            )));
        }
        self.problem.ineq_rhs.copy_from_slice(h);
        let rhs = self.problem.stacked_rhs();
        let start = self.tableau.pivots;
        let status = self.tableau.resolve_rhs(&rhs);
        if status == LpStatus::Solved {
            let sol = assemble(&self.problem, self.tableau.extract(status), self.tableau.pivots - start);
            if sol.kkt_residuals.max() <= self.tol {
                return Ok(sol);
            }
            if self.tableau.refactor() {
                let status = self.tableau.resolve_rhs(&rhs);
                if status == LpStatus::Solved {
                    let sol = assemble(&self.problem, self.tableau.extract(status), self.tableau.pivots - start);
                    if sol.kkt_residuals.max() <= self.tol {
                        return Ok(sol);
                    }
                }
            }
        }
        let mut tableau = Tableau::new(&self.problem, self.tol);
        let status = tableau.solve();
        let sol = certify(&self.problem, &mut tableau, status, self.tol);
        self.tableau = tableau;
        Ok(sol)
    }
}
