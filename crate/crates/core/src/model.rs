//! Min-max problem data: per-agent polyhedral sets and per-slot scalar costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus};
use crate::scalar::Scalar;

/// Convex cost of a single scalar decision component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalarCost<T> {
    /// `g(x) = c·x`
    Affine { c: T },
    /// `g(x) = a·x² + b·x`, with `a ≥ 0`
    Quadratic { a: T, b: T },
}

impl<T: Scalar> ScalarCost<T> {
    pub fn eval(&self, x: T) -> T {
        match *self {
            Self::Affine { c } => c * x,
            Self::Quadratic { a, b } => a * x * x + b * x,
        }
    }

    pub fn derivative(&self, x: T) -> T {
        match *self {
            Self::Affine { c } => c,
            Self::Quadratic { a, b } => (a + a) * x + b,
        }
    }

    pub fn is_convex(&self) -> bool {
        match *self {
            Self::Affine { c } => c.is_finite(),
            Self::Quadratic { a, b } => a >= T::zero() && a.is_finite() && b.is_finite(),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Self::Affine { .. }) || matches!(*self, Self::Quadratic { a, .. } if a == T::zero())
    }

    /// Linear coefficient and curvature `(slope, a)` such that `g(x) = a·x² + slope·x`.
    pub fn coefficients(&self) -> (T, T) {
        match *self {
            Self::Affine { c } => (c, T::zero()),
            Self::Quadratic { a, b } => (b, a),
        }
    }
}

/// One agent: `X = {x ∈ R^S : A x ≤ b, lower ≤ x ≤ upper}` and costs `g_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec<T> {
    #[serde(rename = "A")]
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub costs: Vec<ScalarCost<T>>,
}

impl<T: Scalar> AgentSpec<T> {
    /// Builds a spec after structural checks. Nonemptiness of the set is
    /// checked separately by [`validate`] or [`AgentSpec::is_feasible`].
    pub fn new(a: Vec<Vec<T>>, b: Vec<T>, lower: Vec<T>, upper: Vec<T>, costs: Vec<ScalarCost<T>>) -> Result<Self> {
        let spec = Self { a, b, lower, upper, costs };
        spec.check_structure()?;
        Ok(spec)
    }

    /// Box-only agent with the same cost in every slot.
    pub fn boxed(lower: Vec<T>, upper: Vec<T>, cost: ScalarCost<T>) -> Result<Self> {
        let s = lower.len();
        Self::new(Vec::new(), Vec::new(), lower, upper, vec![cost; s])
    }

    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn check_structure(&self) -> Result<()> {
        let s = self.horizon();
        if s == 0 {
            return Err(Error::Dimension("horizon must be at least 1".into()));
        }
        if self.lower.len() != s || self.upper.len() != s {
            return Err(Error::Dimension(format!(
                "box bounds have lengths {}/{}, horizon is {s}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.a.len() != self.b.len() {
            return Err(Error::Dimension(format!("A has {} rows but b has {}", self.a.len(), self.b.len())));
        }
        if let Some(row) = self.a.iter().find(|r| r.len() != s) {
            return Err(Error::Dimension(format!("row of A has {} columns, horizon is {s}", row.len())));
        }
        if !self.box_is_finite() {
            return Err(Error::InvalidArgument("box bounds must be finite with lower ≤ upper".into()));
        }
        if !self.costs.iter().all(ScalarCost::is_convex) {
            return Err(Error::InvalidArgument("quadratic cost with negative curvature".into()));
        }
        Ok(())
    }

    fn box_is_finite(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l.is_finite() && u.is_finite() && l <= u)
    }

    pub fn all_affine(&self) -> bool {
        self.costs.iter().all(ScalarCost::is_affine)
    }

    /// Feasibility problem for `X` with the given objective over `x`.
    pub fn lp_over_set(&self, objective: Vec<T>) -> LpProblem<T> {
        let mut lp = LpProblem::new(objective).with_bounds(self.lower.clone(), self.upper.clone());
        lp.ineq_matrix = self.a.clone();
        lp.ineq_rhs = self.b.clone();
        lp
    }

    /// Phase-1 check that `X` is nonempty.
    pub fn is_feasible(&self, tol: T) -> Result<bool> {
        let lp = self.lp_over_set(vec![T::zero(); self.horizon()]);
        Ok(lp::solve(&lp, tol)?.status == LpStatus::Solved)
    }

    /// Membership `x ∈ X` up to `tol`.
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        x.len() == self.horizon()
            && x.iter().zip(&self.lower).all(|(v, l)| *v >= *l - tol)
            && x.iter().zip(&self.upper).all(|(v, u)| *v <= *u + tol)
            && self.a.iter().zip(&self.b).all(|(row, &rhs)| crate::scalar::dot(row, x) <= rhs + tol)
    }
}

/// `g_s(x_s)` for slot `s` of an agent.
pub fn eval_cost<T: Scalar>(spec: &AgentSpec<T>, s: usize, x_s: T) -> Result<T> {
    spec.costs
        .get(s)
        .map(|g| g.eval(x_s))
        .ok_or(Error::IndexOutOfRange { index: s, len: spec.horizon() })
}

/// A full instance: `N ≥ 1` agents sharing horizon `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxProblem<T> {
    #[serde(rename = "S")]
    pub horizon: usize,
    pub agents: Vec<AgentSpec<T>>,
}

impl<T: Scalar> MinMaxProblem<T> {
    pub fn new(agents: Vec<AgentSpec<T>>) -> Result<Self> {
        let horizon = agents.first().map(AgentSpec::horizon).ok_or_else(|| Error::InvalidArgument("need at least one agent".into()))?;
        let problem = Self { horizon, agents };
        problem.check_structure()?;
        Ok(problem)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn check_structure(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidArgument("need at least one agent".into()));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            agent.check_structure().map_err(|e| Error::InvalidArgument(format!("agent {i}: {e}")))?;
            if agent.horizon() != self.horizon {
                return Err(Error::Dimension(format!(
                    "agent {i} has horizon {}, problem horizon is {}",
                    agent.horizon(),
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    /// `max_s Σ_i g^i_s(x^i_s)` together with the per-slot aggregate.
    pub fn peak(&self, xs: &[Vec<T>]) -> (T, Vec<T>) {
        let profile: Vec<T> = (0..self.horizon)
            .map(|s| self.agents.iter().zip(xs).map(|(a, x)| a.costs[s].eval(x[s])).sum())
            .collect();
        let peak = profile.iter().copied().fold(T::neg_infinity(), T::max);
        (peak, profile)
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let problem: Self = serde_json::from_str(text)?;
        problem.check_structure()?;
        Ok(problem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentCheck {
    pub agent: usize,
    pub dims_ok: bool,
    pub box_finite: bool,
    pub convex: bool,
    pub feasible: bool,
    pub message: Option<String>,
}

impl AgentCheck {
    pub fn ok(&self) -> bool {
        self.dims_ok && self.box_finite && self.convex && self.feasible
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub horizon_consistent: bool,
    pub agents: Vec<AgentCheck>,
}

impl ValidationReport {
    pub fn infeasible_agents(&self) -> Vec<usize> {
        self.agents.iter().filter(|a| !a.feasible).map(|a| a.agent).collect()
    }
}

/// Checks every standing assumption on the instance and reports per agent.
pub fn validate<T: Scalar>(problem: &MinMaxProblem<T>) -> ValidationReport {
    let tol = T::default_tol();
    let mut agents = Vec::with_capacity(problem.agents.len());
    let mut horizon_consistent = !problem.agents.is_empty();
    for (i, spec) in problem.agents.iter().enumerate() {
        let s = spec.horizon();
        if s != problem.horizon {
            horizon_consistent = false;
        }
        let dims_ok = s == problem.horizon
            && s > 0
            && spec.lower.len() == s
            && spec.upper.len() == s
            && spec.a.len() == spec.b.len()
            && spec.a.iter().all(|r| r.len() == s);
        let box_finite = dims_ok && spec.box_is_finite();
        let convex = spec.costs.iter().all(ScalarCost::is_convex);
        let (feasible, message) = if !(dims_ok && box_finite) {
            (false, Some("structural check failed".to_string()))
        } else {
            match spec.is_feasible(tol) {
                Ok(true) => (true, None),
                Ok(false) => (false, Some("feasible set is empty".to_string())),
                Err(e) => (false, Some(e.to_string())),
            }
        };
        agents.push(AgentCheck { agent: i, dims_ok, box_finite, convex, feasible, message });
    }
    let ok = horizon_consistent && agents.iter().all(AgentCheck::ok);
    ValidationReport { ok, horizon_consistent, agents }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let affine = AgentSpec::boxed(vec![0.0], vec![1.0], ScalarCost::Affine { c: 2.0 }).unwrap();
        assert_eq!(eval_cost(&affine, 0, 0.5).unwrap(), 1.0);
        let quad = AgentSpec::boxed(vec![0.0], vec![5.0], ScalarCost::Quadratic { a: 1.0, b: 0.0 }).unwrap();
        assert_eq!(eval_cost(&quad, 0, 3.0).unwrap(), 9.0);
        let zero = AgentSpec::boxed(vec![0.0], vec![1.0], ScalarCost::Affine { c: 0.0 }).unwrap();
        assert_eq!(eval_cost(&zero, 0, 123.0).unwrap(), 0.0);
        assert!(matches!(eval_cost(&zero, 1, 0.0), Err(Error::IndexOutOfRange { index: 1, len: 1 })));
    }

    #[test]
    fn validation_flags() {
        let boxed = AgentSpec::boxed(vec![0.0], vec![1.0], ScalarCost::Affine { c: 1.0 }).unwrap();
        let report = validate(&MinMaxProblem::new(vec![boxed.clone()]).unwrap());
        assert!(report.ok);

        // x ≥ 2 with upper bound 1
        let empty = AgentSpec::new(vec![vec![-1.0]], vec![-2.0], vec![0.0], vec![1.0], vec![ScalarCost::Affine { c: 1.0 }]).unwrap();
        let report = validate(&MinMaxProblem::new(vec![boxed, empty]).unwrap());
        assert!(!report.ok);
        assert_eq!(report.infeasible_agents(), vec![1]);
    }

    #[test]
    fn structural_errors() {
        assert!(AgentSpec::boxed(vec![0.0], vec![f64::INFINITY], ScalarCost::Affine { c: 1.0 }).is_err());
        assert!(AgentSpec::boxed(vec![0.0], vec![1.0], ScalarCost::Quadratic { a: -1.0, b: 0.0 }).is_err());
        let a = AgentSpec::boxed(vec![0.0], vec![1.0], ScalarCost::Affine { c: 1.0 }).unwrap();
        let b = AgentSpec::boxed(vec![0.0; 2], vec![1.0; 2], ScalarCost::Affine { c: 1.0 }).unwrap();
        assert!(matches!(MinMaxProblem::new(vec![a, b]), Err(Error::Dimension(_))));
        assert!(MinMaxProblem::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn json_schema_keys() {
        let spec = AgentSpec::new(vec![vec![-1.0, -1.0]], vec![-1.0], vec![0.0; 2], vec![1.0; 2], vec![ScalarCost::Affine { c: 1.0 }; 2]).unwrap();
        let p = MinMaxProblem::new(vec![spec]).unwrap();
        let json = p.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["S"], 2);
        assert_eq!(v["agents"][0]["A"][0][1], -1.0);
        assert_eq!(v["agents"][0]["costs"][0]["kind"], "affine");
        assert_eq!(MinMaxProblem::<f64>::from_json(&json).unwrap(), p);
        let bad = json.replace("\"S\": 2", "\"S\": 3");
        assert!(MinMaxProblem::<f64>::from_json(&bad).is_err());
    }

    proptest! {
        #[test]
        fn quadratic_midpoint_convexity(a in 0.0f64..10.0, b in -10.0f64..10.0, x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let g = ScalarCost::Quadratic { a, b };
            prop_assert!(g.eval((x + y) / 2.0) <= (g.eval(x) + g.eval(y)) / 2.0 + 1e-12 * (1.0 + g.eval(x).abs() + g.eval(y).abs()));
        }
    }
}
