//! Agent-local mathematics: the epigraph subproblem each node solves per
//! round, and evaluators for the local dual function `q` and for `η`.
//!
//! The subproblem for a node with neighbor multipliers `λ` is
//!
//! ```text
//!   min_{x, ρ}  ρ
//!   s.t.        x ∈ X
//!               g_s(x_s) + Δ_s ≤ ρ,   s = 0..S
//!   Δ = Σ_{j ∈ N} (λ^{ij} − λ^{ji})
//! ```
//!
//! and `μ` is the multiplier vector of the `S` coupling rows. Stationarity
//! in the free variable `ρ` forces `1ᵀμ = 1`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, KktResiduals, LpProblem, LpSolution, LpStatus, WarmStart};
use crate::model::AgentSpec;
use crate::scalar::Scalar;

const MAX_CUT_ROUNDS: usize = 200;

/// Outgoing (`λ^{ij}`) and incoming (`λ^{ji}`) multipliers keyed by neighbor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LambdaExchange<T> {
    pub outgoing: BTreeMap<usize, Vec<T>>,
    pub incoming: BTreeMap<usize, Vec<T>>,
}

/// Primal-dual solution of one local epigraph subproblem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalPrimalDual<T> {
    pub x: Vec<T>,
    pub rho: T,
    pub mu: Vec<T>,
    pub kkt_residuals: KktResiduals<T>,
}

/// `Δ_s = Σ_j (λ^{ij} − λ^{ji})_s`.
pub fn lambda_delta<T: Scalar>(ex: &LambdaExchange<T>, horizon: usize) -> Result<Vec<T>> {
    if !ex.outgoing.keys().eq(ex.incoming.keys()) {
        return Err(Error::InvalidArgument("outgoing and incoming neighbor sets differ".into()));
    }
    let mut delta = vec![T::zero(); horizon];
    for (j, out) in &ex.outgoing {
        let inc = &ex.incoming[j];
        if out.len() != horizon || inc.len() != horizon {
            return Err(Error::Dimension(format!("multiplier for neighbor {j} has wrong length")));
        }
        for s in 0..horizon {
            delta[s] += out[s] - inc[s];
        }
    }
    Ok(delta)
}

fn check_delta<T: Scalar>(spec: &AgentSpec<T>, delta: &[T]) -> Result<()> {
    if delta.len() != spec.horizon() {
        return Err(Error::Dimension(format!("delta has length {}, horizon is {}", delta.len(), spec.horizon())));
    }
    Ok(())
}

/// Constraint rows of `X` followed by one row per coupling cut.
struct LocalLp<T> {
    lp: LpProblem<T>,
    /// Slot each coupling row belongs to, in row order after the rows of `A`.
    cut_slot: Vec<usize>,
}

impl<T: Scalar> LocalLp<T> {
    fn new(spec: &AgentSpec<T>) -> Self {
        let s = spec.horizon();
        let mut objective = vec![T::zero(); s + 1];
        objective[s] = T::one();
        let mut lower = spec.lower.clone();
        lower.push(T::neg_infinity());
        let mut upper = spec.upper.clone();
        upper.push(T::infinity());
        let mut lp = LpProblem::new(objective).with_bounds(lower, upper);
        for (row, &rhs) in spec.a.iter().zip(&spec.b) {
            let mut r = row.clone();
            r.push(T::zero());
            lp.add_ineq(r, rhs);
        }
        Self { lp, cut_slot: Vec::new() }
    }

    /// Adds `g'(y)·x_s − ρ ≤ −Δ_s − g(y) + g'(y)·y`, the tangent of the
    /// coupling row at `x_s = y` (exact for affine costs).
    fn add_cut(&mut self, spec: &AgentSpec<T>, s: usize, y: T, delta_s: T) {
        let g = spec.costs[s];
        let slope = g.derivative(y);
        let mut row = vec![T::zero(); spec.horizon() + 1];
        row[s] = slope;
        row[spec.horizon()] = -T::one();
        self.lp.add_ineq(row, slope * y - g.eval(y) - delta_s);
        self.cut_slot.push(s);
    }

    fn coupling_offset(&self) -> usize {
        self.lp.ineq_matrix.len() - self.cut_slot.len()
    }

    fn extract(&self, spec: &AgentSpec<T>, sol: &LpSolution<T>) -> LocalPrimalDual<T> {
        let s = spec.horizon();
        let off = self.coupling_offset();
        let mut mu = vec![T::zero(); s];
        for (k, &slot) in self.cut_slot.iter().enumerate() {
            mu[slot] += sol.duals_ineq[off + k];
        }
        LocalPrimalDual { x: sol.z[..s].to_vec(), rho: sol.z[s], mu, kkt_residuals: sol.kkt_residuals }
    }
}

fn status_error(status: LpStatus, context: &str) -> Error {
    Error::Solver { status, context: context.to_string() }
}

/// Solves the local epigraph subproblem for a given `Δ`.
pub fn solve_local<T: Scalar>(spec: &AgentSpec<T>, delta: &[T], tol: T) -> Result<LocalPrimalDual<T>> {
    check_delta(spec, delta)?;
    if spec.all_affine() {
        let mut local = LocalLp::new(spec);
        for s in 0..spec.horizon() {
            local.add_cut(spec, s, T::zero(), delta[s]);
        }
        let sol = lp::solve(&local.lp, tol)?;
        if sol.status != LpStatus::Solved {
            return Err(status_error(sol.status, "local epigraph subproblem"));
        }
        return Ok(local.extract(spec, &sol));
    }
    solve_local_cutting_planes(spec, delta, tol)
}

/// Quadratic coupling rows are outer-approximated by tangent cuts, refined
/// at the current iterate until every row holds to `tol²`.
fn solve_local_cutting_planes<T: Scalar>(spec: &AgentSpec<T>, delta: &[T], tol: T) -> Result<LocalPrimalDual<T>> {
    let s_len = spec.horizon();
    let mut local = LocalLp::new(spec);
    for s in 0..s_len {
        if spec.costs[s].is_affine() {
            local.add_cut(spec, s, T::zero(), delta[s]);
        } else {
            let (l, u) = (spec.lower[s], spec.upper[s]);
            for y in [l, u, (l + u) * T::lit(0.5)] {
                local.add_cut(spec, s, y, delta[s]);
            }
        }
    }
    let gap_tol = tol * tol;
    let mut prev: Option<Vec<T>> = None;
    for _ in 0..MAX_CUT_ROUNDS {
        let sol = lp::solve(&local.lp, tol)?;
        if sol.status != LpStatus::Solved {
            return Err(status_error(sol.status, "local epigraph subproblem"));
        }
        let rho = sol.z[s_len];
        let scale = T::one() + rho.abs();
        // a repeated iterate means the remaining excess is below the LP's feasibility resolution
        let stalled = prev.as_deref() == Some(&sol.z[..=s_len]);
        let mut added = false;
        for s in 0..s_len {
            let g = spec.costs[s];
            if g.is_affine() {
                continue;
            }
            let x = sol.z[s];
            let excess = g.eval(x) + delta[s] - rho;
            if stalled && excess > tol * scale {
                return Err(status_error(LpStatus::NumericalFailure, "cutting planes stalled"));
            }
            if !stalled && excess > gap_tol * scale {
                local.add_cut(spec, s, x, delta[s]);
                added = true;
            }
        }
        prev = Some(sol.z[..=s_len].to_vec());
        if !added {
            let mut out = local.extract(spec, &sol);
            let worst = (0..s_len)
                .map(|s| spec.costs[s].eval(out.x[s]) + delta[s] - out.rho)
                .fold(T::zero(), T::max);
            out.kkt_residuals.primal_feas = out.kkt_residuals.primal_feas.max(worst);
            return Ok(out);
        }
    }
    Err(status_error(LpStatus::NumericalFailure, "cutting planes did not converge"))
}

/// Warm-started local solver for repeated solves with changing `Δ`.
///
/// Only the right-hand side of the coupling rows depends on `Δ`, so the
/// previous optimal basis stays dual feasible and a few dual simplex pivots
/// re-optimize. Specs with quadratic costs fall back to [`solve_local`].
#[derive(Debug, Clone, Default)]
pub struct LocalSolver<T> {
    warm: Option<WarmStart<T>>,
}

impl<T: Scalar> LocalSolver<T> {
    pub fn new() -> Self {
        Self { warm: None }
    }

    pub fn solve(&mut self, spec: &AgentSpec<T>, delta: &[T], tol: T) -> Result<LocalPrimalDual<T>> {
        check_delta(spec, delta)?;
        if !spec.all_affine() {
            return solve_local(spec, delta, tol);
        }
        let sol = match self.warm.as_mut() {
            Some(warm) => {
                let mut h = spec.b.clone();
                h.extend(delta.iter().map(|&d| -d));
                warm.resolve_ineq_rhs(&h)?
            }
            None => {
                let mut local = LocalLp::new(spec);
                for s in 0..spec.horizon() {
                    local.add_cut(spec, s, T::zero(), delta[s]);
                }
                let (warm, sol) = WarmStart::new(local.lp, tol)?;
                if sol.status == LpStatus::Solved {
                    self.warm = Some(warm);
                }
                sol
            }
        };
        if sol.status != LpStatus::Solved {
            self.warm = None;
            return Err(status_error(sol.status, "local epigraph subproblem"));
        }
        let s = spec.horizon();
        let off = spec.a.len();
        Ok(LocalPrimalDual {
            x: sol.z[..s].to_vec(),
            rho: sol.z[s],
            mu: sol.duals_ineq[off..off + s].to_vec(),
            kkt_residuals: sol.kkt_residuals,
        })
    }
}

/// `q(μ) = min_{x ∈ X} Σ_s μ_s g_s(x_s)` for `μ ⪰ 0`.
pub fn eval_qi<T: Scalar>(spec: &AgentSpec<T>, mu: &[T], tol: T) -> Result<T> {
    if mu.len() != spec.horizon() {
        return Err(Error::Dimension(format!("mu has length {}, horizon is {}", mu.len(), spec.horizon())));
    }
    if mu.iter().any(|&m| m < T::zero()) {
        return Err(Error::InvalidArgument("mu must be componentwise nonnegative".into()));
    }
    let (linear, quad): (Vec<T>, Vec<T>) = spec
        .costs
        .iter()
        .zip(mu)
        .map(|(g, &m)| {
            let (slope, a) = g.coefficients();
            (m * slope, m * a)
        })
        .unzip();
    let mut lp = spec.lp_over_set(linear);
    if quad.iter().any(|&a| a > T::zero()) {
        lp = lp.with_quadratic(quad);
    }
    let sol = lp::solve(&lp, tol)?;
    if sol.status != LpStatus::Solved {
        return Err(status_error(sol.status, "dual function evaluation"));
    }
    Ok(sol.objective_value)
}

/// `η = max_{μ ∈ Δ} q(μ) + μᵀΔ`.
///
/// For affine costs this maximizes over `μ` directly by solving the joint
/// dual LP in `(μ, π, w_l, w_u)`, which shares no code path with
/// [`solve_local`]; quadratic specs use the local optimal value.
pub fn eval_eta_i<T: Scalar>(spec: &AgentSpec<T>, ex: &LambdaExchange<T>, tol: T) -> Result<T> {
    let delta = lambda_delta(ex, spec.horizon())?;
    if !spec.all_affine() {
        return Ok(solve_local(spec, &delta, tol)?.rho);
    }
    eta_by_dual_lp(spec, &delta, tol)
}

fn eta_by_dual_lp<T: Scalar>(spec: &AgentSpec<T>, delta: &[T], tol: T) -> Result<T> {
    let s = spec.horizon();
    let m = spec.a.len();
    // Variables: μ (s), π (m), w_l (s), w_u (s), all nonnegative.
    let width = s + m + 2 * s;
    let mut objective = vec![T::zero(); width];
    for k in 0..s {
        objective[k] = -delta[k];
        objective[s + m + k] = -spec.lower[k];
        objective[s + m + s + k] = spec.upper[k];
    }
    for r in 0..m {
        objective[s + r] = spec.b[r];
    }
    let mut lp = LpProblem::new(objective).with_bounds(vec![T::zero(); width], vec![T::infinity(); width]);
    for k in 0..s {
        let (slope, _) = spec.costs[k].coefficients();
        let mut row = vec![T::zero(); width];
        row[k] = slope;
        for r in 0..m {
            row[s + r] = spec.a[r][k];
        }
        row[s + m + k] = -T::one();
        row[s + m + s + k] = T::one();
        lp.add_eq(row, T::zero());
    }
    let mut simplex = vec![T::zero(); width];
    simplex[..s].fill(T::one());
    lp.add_eq(simplex, T::one());
    let sol = lp::solve(&lp, tol)?;
    if sol.status != LpStatus::Solved {
        return Err(status_error(sol.status, "explicit dual of the local subproblem"));
    }
    Ok(-sol.objective_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScalarCost;
    use crate::testkit;

    const TOL: f64 = 1e-9;

    /// S=2, c=1, X = {x ∈ [0,1]² : x₁ + x₂ ≥ 1}.
    fn split_agent(c: f64) -> AgentSpec<f64> {
        AgentSpec::new(vec![vec![-1.0, -1.0]], vec![-1.0], vec![0.0; 2], vec![1.0; 2], vec![ScalarCost::Affine { c }; 2]).unwrap()
    }

    fn exchange(out: &[(usize, Vec<f64>)], inc: &[(usize, Vec<f64>)]) -> LambdaExchange<f64> {
        LambdaExchange { outgoing: out.iter().cloned().collect(), incoming: inc.iter().cloned().collect() }
    }

    /// Vertex enumeration of the 3-variable local LP in (x₁, x₂, ρ).
    fn local_oracle(spec: &AgentSpec<f64>, delta: &[f64]) -> (f64, Vec<f64>) {
        use testkit::Halfspace;
        let s = spec.horizon();
        let mut hs = Vec::new();
        for (row, &b) in spec.a.iter().zip(&spec.b) {
            let mut r = row.clone();
            r.push(0.0);
            hs.push(Halfspace::new(r, b));
        }
        let mut lo = spec.lower.clone();
        lo.push(-1e3);
        let mut hi = spec.upper.clone();
        hi.push(1e3);
        hs.extend(testkit::box_halfspaces(&lo, &hi));
        for k in 0..s {
            let ScalarCost::Affine { c } = spec.costs[k] else { unreachable!() };
            let mut r = vec![0.0; s + 1];
            r[k] = c;
            r[s] = -1.0;
            hs.push(Halfspace::new(r, -delta[k]));
        }
        let mut obj = vec![0.0; s + 1];
        obj[s] = 1.0;
        testkit::vertex_min(&obj, &hs, &[]).unwrap()
    }

    #[test]
    fn lambda_delta_examples() {
        let same = exchange(&[(1, vec![1.0, 2.0])], &[(1, vec![1.0, 2.0])]);
        assert_eq!(lambda_delta(&same, 2).unwrap(), vec![0.0, 0.0]);
        let one = exchange(&[(3, vec![1.0, 0.0])], &[(3, vec![0.0, 1.0])]);
        assert_eq!(lambda_delta(&one, 2).unwrap(), vec![1.0, -1.0]);
        let two = exchange(&[(0, vec![1.0, 1.5]), (2, vec![1.0, 0.5])], &[(0, vec![0.5, 1.0]), (2, vec![0.5, 2.0])]);
        assert_eq!(lambda_delta(&two, 2).unwrap(), vec![1.0, -1.0]);
        let mismatched = exchange(&[(0, vec![0.0])], &[(1, vec![0.0])]);
        assert!(lambda_delta(&mismatched, 1).is_err());
    }

    #[test]
    fn split_agent_at_zero_delta() {
        let spec = split_agent(1.0);
        let out = solve_local(&spec, &[0.0, 0.0], TOL).unwrap();
        let (oracle, v) = local_oracle(&spec, &[0.0, 0.0]);
        assert!((oracle - 0.5).abs() < 1e-12);
        assert!((out.rho - oracle).abs() < 1e-12);
        assert!((out.x[0] - v[0]).abs() < 1e-12 && (out.x[1] - v[1]).abs() < 1e-12);
        assert!((out.mu[0] - 0.5).abs() < 1e-12 && (out.mu[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_slot_forces_unit_multiplier() {
        let spec = AgentSpec::new(vec![vec![-1.0]], vec![-0.25], vec![0.0], vec![1.0], vec![ScalarCost::Affine { c: 3.0 }]).unwrap();
        for d in [-2.0, 0.0, 5.0] {
            let out = solve_local(&spec, &[d], TOL).unwrap();
            assert_eq!(out.mu.len(), 1);
            assert!((out.mu[0] - 1.0).abs() < 1e-12);
            assert!((out.rho - (0.75 + d)).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_slot_shift() {
        let spec = split_agent(1.0);
        let delta = [10.0, 0.0];
        let out = solve_local(&spec, &delta, TOL).unwrap();
        let (oracle, _) = local_oracle(&spec, &delta);
        // Slot 0 dominates: x₁ → 0, x₂ → 1, ρ = 10 + 0.
        assert!((oracle - 10.0).abs() < 1e-12);
        assert!((out.rho - oracle).abs() < 1e-12);
        assert!((out.mu[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qi_examples() {
        let spec = split_agent(1.0);
        // unit vectors: min of x_s over X is 0
        assert!((eval_qi(&spec, &[1.0, 0.0], TOL).unwrap()).abs() < 1e-12);
        assert_eq!(eval_qi(&spec, &[0.0, 0.0], TOL).unwrap(), 0.0);
        let verts = testkit::agent_vertices(&spec.a, &spec.b, &spec.lower, &spec.upper);
        let oracle = testkit::q_affine(&verts, &[1.0, 1.0], &[0.5, 0.5]);
        assert!((oracle - 0.5).abs() < 1e-12);
        assert!((eval_qi(&spec, &[0.5, 0.5], TOL).unwrap() - oracle).abs() < 1e-12);
        assert!(eval_qi(&spec, &[-0.1, 1.0], TOL).is_err());
    }

    #[test]
    fn eta_examples() {
        let spec = split_agent(1.0);
        let zero = exchange(&[(1, vec![0.0, 0.0])], &[(1, vec![0.0, 0.0])]);
        let rho0 = solve_local(&spec, &[0.0, 0.0], TOL).unwrap().rho;
        assert!((eval_eta_i(&spec, &zero, TOL).unwrap() - rho0).abs() < 1e-9);

        let shifted = exchange(&[(1, vec![0.7, 0.7])], &[(1, vec![0.0, 0.0])]);
        assert!((eval_eta_i(&spec, &shifted, TOL).unwrap() - (rho0 + 0.7)).abs() < 1e-9);

        let asym = exchange(&[(1, vec![0.3, -0.2])], &[(1, vec![0.1, 0.4])]);
        let delta = lambda_delta(&asym, 2).unwrap();
        let verts = testkit::agent_vertices(&spec.a, &spec.b, &spec.lower, &spec.upper);
        let grid = testkit::eta_grid(&verts, &[1.0, 1.0], &delta, 10_000);
        assert!((eval_eta_i(&spec, &asym, TOL).unwrap() - grid).abs() < 1e-4);
    }

    #[test]
    fn warm_solver_tracks_cold_solver() {
        let spec = split_agent(2.0);
        let mut warm = LocalSolver::new();
        for k in 0..50 {
            let t = k as f64 * 0.61;
            let delta = [t.sin(), (2.0 * t).cos() * 0.8];
            let a = warm.solve(&spec, &delta, TOL).unwrap();
            let b = solve_local(&spec, &delta, TOL).unwrap();
            assert!((a.rho - b.rho).abs() < 1e-10);
            assert!((a.mu.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_costs_use_cutting_planes() {
        // g(x) = x² on each slot, x₁ + x₂ ≥ 1 ⇒ x = (0.5, 0.5), ρ = 0.25.
        let spec = AgentSpec::new(
            vec![vec![-1.0, -1.0]],
            vec![-1.0],
            vec![0.0; 2],
            vec![1.0; 2],
            vec![ScalarCost::Quadratic { a: 1.0, b: 0.0 }; 2],
        )
        .unwrap();
        let out = solve_local(&spec, &[0.0, 0.0], TOL).unwrap();
        assert!((out.rho - 0.25).abs() < 1e-8, "{}", out.rho);
        assert!((out.mu.iter().sum::<f64>() - 1.0).abs() < 1e-7);
        for s in 0..2 {
            assert!(spec.costs[s].eval(out.x[s]) <= out.rho + 1e-8);
        }
        // q(μ) at μ = (½, ½): min ½(x₁² + x₂²) s.t. x₁ + x₂ ≥ 1 = ¼
        assert!((eval_qi(&spec, &[0.5, 0.5], TOL).unwrap() - 0.25).abs() < 1e-8);
    }
}
