//! Centralized oracle: the full epigraph problem solved in one piece.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::local::eval_qi;
use crate::lp::{self, LpProblem, LpStatus};
use crate::model::MinMaxProblem;
use crate::scalar::Scalar;

/// Outer-approximation accuracy for quadratic cost terms.
pub const QUADRATIC_CUT_TOL: f64 = 1e-6;
const MAX_CUT_ROUNDS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult<T> {
    #[serde(rename = "P_star")]
    pub p_star: T,
    pub x_star: Vec<Vec<T>>,
    pub mu_star: Vec<T>,
}

struct Layout {
    n: usize,
    s: usize,
    /// Column of the lifted epigraph variable for each quadratic `(i, s)`.
    lifted: Vec<Vec<Option<usize>>>,
    width: usize,
}

impl Layout {
    fn x(&self, i: usize, s: usize) -> usize {
        i * self.s + s
    }

    fn p(&self) -> usize {
        self.n * self.s
    }
}

/// Solves `min P` over all agents jointly with `Σ_i g^i_s(x^i_s) ≤ P`.
///
/// Affine costs give a single LP. Quadratic terms get a lifted variable
/// `u ≥ g(x)` represented by tangent cuts, refined until every cut gap is
/// below [`QUADRATIC_CUT_TOL`].
pub fn solve_centralized<T: Scalar>(problem: &MinMaxProblem<T>, tol: T) -> Result<OracleResult<T>> {
    problem.check_structure()?;
    let n = problem.num_agents();
    let s_len = problem.horizon;
    let mut layout = Layout { n, s: s_len, lifted: vec![vec![None; s_len]; n], width: n * s_len + 1 };
    for (i, spec) in problem.agents.iter().enumerate() {
        for s in 0..s_len {
            if !spec.costs[s].is_affine() {
                layout.lifted[i][s] = Some(layout.width);
                layout.width += 1;
            }
        }
    }

    let w = layout.width;
    let mut objective = vec![T::zero(); w];
    objective[layout.p()] = T::one();
    let mut lower = vec![T::neg_infinity(); w];
    let mut upper = vec![T::infinity(); w];
    for (i, spec) in problem.agents.iter().enumerate() {
        for s in 0..s_len {
            lower[layout.x(i, s)] = spec.lower[s];
            upper[layout.x(i, s)] = spec.upper[s];
        }
    }
    let mut lp = LpProblem::new(objective).with_bounds(lower, upper);
    for (i, spec) in problem.agents.iter().enumerate() {
        for (row, &rhs) in spec.a.iter().zip(&spec.b) {
            let mut r = vec![T::zero(); w];
            r[layout.x(i, 0)..layout.x(i, 0) + s_len].copy_from_slice(row);
            lp.add_ineq(r, rhs);
        }
    }
    let coupling_start = lp.ineq_matrix.len();
    for s in 0..s_len {
        let mut r = vec![T::zero(); w];
        for (i, spec) in problem.agents.iter().enumerate() {
            match layout.lifted[i][s] {
                Some(col) => r[col] = T::one(),
                None => r[layout.x(i, s)] = spec.costs[s].coefficients().0,
            }
        }
        r[layout.p()] = -T::one();
        lp.add_ineq(r, T::zero());
    }
    let add_cut = |lp: &mut LpProblem<T>, i: usize, s: usize, y: T| {
        let g = problem.agents[i].costs[s];
        let slope = g.derivative(y);
        let mut r = vec![T::zero(); w];
        r[layout.x(i, s)] = slope;
        r[layout.lifted[i][s].expect("lifted column")] = -T::one();
        lp.add_ineq(r, slope * y - g.eval(y));
    };
    for (i, spec) in problem.agents.iter().enumerate() {
        for s in 0..s_len {
            if layout.lifted[i][s].is_some() {
                let (l, u) = (spec.lower[s], spec.upper[s]);
                for y in [l, u, (l + u) * T::lit(0.5)] {
                    add_cut(&mut lp, i, s, y);
                }
            }
        }
    }

    let cut_tol = T::lit(QUADRATIC_CUT_TOL);
    for _ in 0..MAX_CUT_ROUNDS {
        let sol = lp::solve(&lp, tol)?;
        if sol.status != LpStatus::Solved {
            return Err(Error::Solver { status: sol.status, context: "centralized epigraph problem".into() });
        }
        let mut added = false;
        for (i, spec) in problem.agents.iter().enumerate() {
            for s in 0..s_len {
                if let Some(col) = layout.lifted[i][s] {
                    let x = sol.z[layout.x(i, s)];
                    let gap = spec.costs[s].eval(x) - sol.z[col];
                    if gap > cut_tol * (T::one() + sol.z[col].abs()) {
                        add_cut(&mut lp, i, s, x);
                        added = true;
                    }
                }
            }
        }
        if !added {
            let x_star = (0..n).map(|i| sol.z[layout.x(i, 0)..layout.x(i, 0) + s_len].to_vec()).collect();
            let mu_star = sol.duals_ineq[coupling_start..coupling_start + s_len].to_vec();
            return Ok(OracleResult { p_star: sol.z[layout.p()], x_star, mu_star });
        }
    }
    Err(Error::Solver { status: LpStatus::NumericalFailure, context: "centralized cutting planes did not converge".into() })
}

/// Dual value `Σ_i q^i(μ)` at a simplex point.
pub fn dual_value<T: Scalar>(problem: &MinMaxProblem<T>, mu: &[T], tol: T) -> Result<T> {
    problem.agents.iter().map(|spec| eval_qi(spec, mu, tol)).sum()
}

/// `|Σ_i q^i(μ*) − P*| ≤ tol`, with each `q^i` evaluated independently.
pub fn strong_duality_check<T: Scalar>(problem: &MinMaxProblem<T>, result: &OracleResult<T>, tol: T) -> bool {
    let mu: Vec<T> = result.mu_star.iter().map(|&m| m.max(T::zero())).collect();
    match dual_value(problem, &mu, T::default_tol()) {
        Ok(q) => (q - result.p_star).abs() <= tol,
        Err(_) => false,
    }
}

/// Hex SHA-256 of the problem's JSON serialization.
pub fn problem_hash<T: Scalar + Serialize>(problem: &MinMaxProblem<T>) -> Result<String> {
    let text = serde_json::to_string(problem)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry<T> {
    problem_hash: String,
    #[serde(flatten)]
    result: OracleResult<T>,
}

/// Returns the cached result if the file exists and its hash matches.
pub fn load_cached<T>(path: &Path, hash: &str) -> Result<Option<OracleResult<T>>>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    let entry: CacheEntry<T> = match serde_json::from_str(&text) {
        Ok(e) => e,
        Err(_) => return Ok(None),
    };
    Ok((entry.problem_hash == hash).then_some(entry.result))
}

pub fn store_cached<T: Scalar + Serialize>(path: &Path, hash: &str, result: &OracleResult<T>) -> Result<()> {
    let entry = CacheEntry { problem_hash: hash.to_string(), result: result.clone() };
    std::fs::write(path, serde_json::to_string_pretty(&entry)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentSpec, ScalarCost};

    const TOL: f64 = 1e-9;

    fn tiny() -> MinMaxProblem<f64> {
        let agent = |c: f64| {
            AgentSpec::new(vec![vec![-1.0, -1.0]], vec![-1.0], vec![0.0; 2], vec![1.0; 2], vec![ScalarCost::Affine { c }; 2])
                .unwrap()
        };
        MinMaxProblem::new(vec![agent(1.0), agent(2.0)]).unwrap()
    }

    #[test]
    fn tiny_instance_optimum() {
        let p = tiny();
        let r = solve_centralized(&p, TOL).unwrap();
        assert!((r.p_star - 1.5).abs() < 1e-12);
        // x* is not unique here; any optimum loads both slots to exactly P*
        let (peak, profile) = p.peak(&r.x_star);
        assert!((peak - 1.5).abs() < 1e-12);
        assert!(profile.iter().all(|v| (v - 1.5).abs() < 1e-9));
        for (spec, x) in p.agents.iter().zip(&r.x_star) {
            assert!(spec.contains(x, 1e-12));
        }
        assert!((r.mu_star.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(strong_duality_check(&p, &r, 1e-7));

        let verts: Vec<_> = p.agents.iter().map(|a| crate::testkit::agent_vertices(&a.a, &a.b, &a.lower, &a.upper)).collect();
        let oracle = crate::testkit::minmax_affine_by_dual_enumeration(&verts, &[vec![1.0; 2], vec![2.0; 2]]);
        assert!((oracle - 1.5).abs() < 1e-12);
    }

    #[test]
    fn single_agent_reduces_to_local_minmax() {
        let spec = AgentSpec::new(vec![vec![-1.0, -2.0]], vec![-1.0], vec![0.0; 2], vec![1.0; 2], vec![ScalarCost::Affine { c: 1.0 }; 2]).unwrap();
        let p = MinMaxProblem::new(vec![spec]).unwrap();
        let r = solve_centralized(&p, TOL).unwrap();
        // min max(x1, x2) with x1 + 2 x2 ≥ 1 is 1/3
        assert!((r.p_star - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_costs_give_zero_peak() {
        let spec = AgentSpec::boxed(vec![0.0; 3], vec![1.0; 3], ScalarCost::Affine { c: 0.0 }).unwrap();
        let p = MinMaxProblem::new(vec![spec.clone(), spec]).unwrap();
        let r = solve_centralized(&p, TOL).unwrap();
        assert_eq!(r.p_star, 0.0);
        assert!((r.mu_star.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(strong_duality_check(&p, &r, 1e-9));
    }

    #[test]
    fn weak_duality_off_optimum() {
        let p = tiny();
        let r = solve_centralized(&p, TOL).unwrap();
        let q = dual_value(&p, &[0.9, 0.1], TOL).unwrap();
        assert!(q < r.p_star - 1e-3);
    }

    #[test]
    fn quadratic_costs_by_lifting() {
        // two agents, g = x², one slot each must carry x₁+x₂ ≥ 1
        let spec = AgentSpec::new(
            vec![vec![-1.0, -1.0]],
            vec![-1.0],
            vec![0.0; 2],
            vec![1.0; 2],
            vec![ScalarCost::Quadratic { a: 1.0, b: 0.0 }; 2],
        )
        .unwrap();
        let p = MinMaxProblem::new(vec![spec.clone(), spec]).unwrap();
        let r = solve_centralized(&p, TOL).unwrap();
        assert!((r.p_star - 0.5).abs() < 1e-5, "{}", r.p_star);
        assert!(strong_duality_check(&p, &r, 1e-5));
    }

    #[test]
    fn cache_round_trip() {
        let p = tiny();
        let r = solve_centralized(&p, TOL).unwrap();
        let h = problem_hash(&p).unwrap();
        assert_eq!(h.len(), 64);
        let dir = std::env::temp_dir().join(format!("minmax-oracle-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("oracle.json");
        store_cached(&path, &h, &r).unwrap();
        assert_eq!(load_cached::<f64>(&path, &h).unwrap(), Some(r));
        assert_eq!(load_cached::<f64>(&path, "other").unwrap(), None);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
