//! Brute-force reference routines used by the test suites.
//!
//! Nothing here touches the simplex engine: vertices are found by solving
//! every square subsystem of active constraints with plain Gaussian
//! elimination, so results are an independent check on [`crate::lp`].

use rand::Rng;

use crate::lp::LpProblem;
use crate::model::{AgentSpec, MinMaxProblem, ScalarCost};

/// A constraint `row·z ≤ rhs` (or `= rhs` when used as an equality).
#[derive(Debug, Clone)]
pub struct Halfspace {
    pub row: Vec<f64>,
    pub rhs: f64,
}

impl Halfspace {
    pub fn new(row: Vec<f64>, rhs: f64) -> Self {
        Self { row, rhs }
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..n {
            let f = a[r][k] / a[k][k];
            for c in k..n {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All vertices of `{z : ineqs, eqs}` in dimension `dim`.
pub fn vertices(dim: usize, ineqs: &[Halfspace], eqs: &[Halfspace], feas_tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    if eqs.len() > dim {
        return out;
    }
    let k = dim - eqs.len();
    let mut visit = |sel: &[usize]| {
        let mut a: Vec<Vec<f64>> = eqs.iter().map(|h| h.row.clone()).collect();
        let mut b: Vec<f64> = eqs.iter().map(|h| h.rhs).collect();
        for &s in sel {
            a.push(ineqs[s].row.clone());
            b.push(ineqs[s].rhs);
        }
        let Some(z) = solve_square(a, b) else { return };
        let feasible = ineqs.iter().all(|h| dot(&h.row, &z) <= h.rhs + feas_tol)
            && eqs.iter().all(|h| (dot(&h.row, &z) - h.rhs).abs() <= feas_tol);
        if feasible && !out.iter().any(|v| v.iter().zip(&z).all(|(p, q)| (p - q).abs() < 1e-9)) {
            out.push(z);
        }
    };
    combinations(ineqs.len(), k, &mut visit);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum of `cᵀz` over the vertices of the polyhedron, with a minimizer.
/// Only meaningful when the polyhedron is pointed and the minimum is finite.
pub fn vertex_min(c: &[f64], ineqs: &[Halfspace], eqs: &[Halfspace]) -> Option<(f64, Vec<f64>)> {
    vertices(c.len(), ineqs, eqs, 1e-9)
        .into_iter()
        .map(|v| (dot(c, &v), v))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Box bounds `lo ≤ z ≤ hi` as halfspaces.
pub fn box_halfspaces(lo: &[f64], hi: &[f64]) -> Vec<Halfspace> {
    let n = lo.len();
    let mut out = Vec::new();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = -1.0;
        out.push(Halfspace::new(r, -lo[j]));
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        out.push(Halfspace::new(r, hi[j]));
    }
    out
}

/// Vertices of one agent's set `{x : A x ≤ b, lo ≤ x ≤ hi}`.
pub fn agent_vertices(a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut hs: Vec<Halfspace> = a.iter().zip(b).map(|(r, &v)| Halfspace::new(r.clone(), v)).collect();
    hs.extend(box_halfspaces(lo, hi));
    vertices(lo.len(), &hs, &[], 1e-9)
}

/// Min-max optimum `max_{μ∈Δ} Σ_i min_{v∈V_i} Σ_s μ_s c^i_s v_s` for affine
/// costs, computed by enumerating the vertices of the dual LP in `(μ, τ)`.
pub fn minmax_affine_by_dual_enumeration(agent_vertices: &[Vec<Vec<f64>>], costs: &[Vec<f64>]) -> f64 {
    let n_agents = agent_vertices.len();
    let s = costs[0].len();
    let dim = s + n_agents;
    // maximize Σ τ_i  ⇔  minimize −Σ τ_i
    let mut c = vec![0.0; dim];
    for i in 0..n_agents {
        c[s + i] = -1.0;
    }
    let mut ineqs = Vec::new();
    for (i, verts) in agent_vertices.iter().enumerate() {
        for v in verts {
            // τ_i − Σ_s μ_s c_s v_s ≤ 0
            let mut row = vec![0.0; dim];
            for k in 0..s {
                row[k] = -costs[i][k] * v[k];
            }
            row[s + i] = 1.0;
            ineqs.push(Halfspace::new(row, 0.0));
        }
    }
    for k in 0..s {
        let mut row = vec![0.0; dim];
        row[k] = -1.0;
        ineqs.push(Halfspace::new(row, 0.0));
    }
    let mut simplex_row = vec![0.0; dim];
    simplex_row[..s].fill(1.0);
    let eqs = [Halfspace::new(simplex_row, 1.0)];
    let (v, _) = vertex_min(&c, &ineqs, &eqs).expect("dual polytope has a vertex");
    -v
}

/// `q(μ) = min_{v∈V} Σ_s μ_s c_s v_s` for affine costs over a vertex list.
pub fn q_affine(verts: &[Vec<f64>], costs: &[f64], mu: &[f64]) -> f64 {
    verts
        .iter()
        .map(|v| v.iter().zip(costs).zip(mu).map(|((x, c), m)| m * c * x).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Grid search of `max_{μ∈Δ} q(μ) + μᵀδ` with `steps` subdivisions per axis.
pub fn eta_grid(verts: &[Vec<f64>], costs: &[f64], delta: &[f64], steps: usize) -> f64 {
    let s = costs.len();
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; s];
    simplex_grid(s, steps, 0, steps, &mut counts, &mut |k| {
        let mu: Vec<f64> = k.iter().map(|&c| c as f64 / steps as f64).collect();
        let val = q_affine(verts, costs, &mu) + dot(&mu, delta);
        best = best.max(val);
    });
    best
}

fn simplex_grid(s: usize, steps: usize, pos: usize, left: usize, counts: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pos + 1 == s {
        counts[pos] = left;
        f(counts);
        return;
    }
    for c in 0..=left {
        counts[pos] = c;
        simplex_grid(s, steps, pos + 1, left - c, counts, f);
    }
}

/// Random bounded agent with `rows` extra inequalities that always admits
/// an interior-ish point, and affine costs in `[0.5, 3]`.
pub fn random_affine_agent(rng: &mut impl Rng, s: usize, rows: usize) -> AgentSpec<f64> {
    let upper: Vec<f64> = (0..s).map(|_| rng.gen_range(1.0..2.0)).collect();
    let x0: Vec<f64> = upper.iter().map(|&u| rng.gen_range(0.0..u)).collect();
    let mut a = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    for _ in 0..rows {
        let row: Vec<f64> = (0..s).map(|_| rng.gen_range(-4i32..=4) as f64 * 0.5).collect();
        b.push(dot(&row, &x0) + rng.gen_range(0.0..0.5));
        a.push(row);
    }
    let costs = (0..s).map(|_| ScalarCost::Affine { c: rng.gen_range(0.5..3.0) }).collect();
    AgentSpec::new(a, b, vec![0.0; s], upper, costs).expect("generated agent is well formed")
}

pub fn random_affine_problem(rng: &mut impl Rng, n: usize, s: usize) -> MinMaxProblem<f64> {
    let agents = (0..n).map(|_| {
        let rows = rng.gen_range(0..=2);
        random_affine_agent(rng, s, rows)
    });
    MinMaxProblem::new(agents.collect()).expect("generated problem is well formed")
}

/// Affine slope of every slot of an agent.
pub fn slopes(spec: &AgentSpec<f64>) -> Vec<f64> {
    spec.costs.iter().map(|g| g.coefficients().0).collect()
}

/// Brute-force optimal peak of an all-affine problem.
pub fn brute_force_p_star(problem: &MinMaxProblem<f64>) -> f64 {
    let verts: Vec<_> = problem.agents.iter().map(|a| agent_vertices(&a.a, &a.b, &a.lower, &a.upper)).collect();
    let costs: Vec<_> = problem.agents.iter().map(slopes).collect();
    minmax_affine_by_dual_enumeration(&verts, &costs)
}

/// Random bounded LP with at most 4 variables and 6 rows.
pub fn random_lp(rng: &mut impl Rng) -> LpProblem<f64> {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=6);
    let c = (0..n).map(|_| rng.gen_range(-5i32..=5) as f64).collect();
    let lower = (0..n).map(|_| rng.gen_range(-3i32..=0) as f64).collect();
    let upper = (0..n).map(|_| rng.gen_range(1i32..=3) as f64).collect();
    let mut lp = LpProblem::new(c).with_bounds(lower, upper);
    for _ in 0..m {
        let row = (0..n).map(|_| rng.gen_range(-4i32..=4) as f64 * 0.5).collect();
        lp.add_ineq(row, rng.gen_range(-3i32..=6) as f64 * 0.5);
    }
    lp
}

/// Vertex-enumeration optimum of a bounded LP, `None` when infeasible.
pub fn lp_by_enumeration(problem: &LpProblem<f64>) -> Option<(f64, Vec<f64>)> {
    let mut hs: Vec<Halfspace> =
        problem.ineq_matrix.iter().zip(&problem.ineq_rhs).map(|(r, &h)| Halfspace::new(r.clone(), h)).collect();
    hs.extend(box_halfspaces(&problem.lower, &problem.upper));
    let eqs: Vec<Halfspace> =
        problem.eq_matrix.iter().zip(&problem.eq_rhs).map(|(r, &h)| Halfspace::new(r.clone(), h)).collect();
    vertex_min(&problem.objective, &hs, &eqs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_has_four_vertices() {
        let v = vertices(2, &box_halfspaces(&[0.0, 0.0], &[1.0, 1.0]), &[], 1e-12);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn combinations_count() {
        let mut n = 0;
        combinations(6, 3, |_| n += 1);
        assert_eq!(n, 20);
        let mut n = 0;
        combinations(3, 3, |_| n += 1);
        assert_eq!(n, 1);
    }

    #[test]
    fn dual_enumeration_on_split_load() {
        // Two agents, x1 + x2 ≥ 1 on the unit square, costs c=1 and c=2.
        let a = vec![vec![-1.0, -1.0]];
        let verts = agent_vertices(&a, &[-1.0], &[0.0, 0.0], &[1.0, 1.0]);
        let p = minmax_affine_by_dual_enumeration(&[verts.clone(), verts], &[vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!((p - 1.5).abs() < 1e-12);
    }
}
