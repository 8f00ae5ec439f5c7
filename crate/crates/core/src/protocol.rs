//! Per-agent state machine: two gather phases per round, the local solve,
//! and the edge multiplier update. Also step-size schedules.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::local::{LambdaExchange, LocalSolver};
use crate::model::AgentSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `γ(t) = scale · (t+1)^{−exponent}`
    PowerLaw { exponent: f64, scale: f64 },
    Constant { gamma: f64 },
    /// `γ(t) = c / (t+1)`
    Harmonic { c: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::PowerLaw { exponent: 0.8, scale: 1.0 }
    }
}

pub fn gamma(schedule: &StepSchedule, t: usize) -> f64 {
    let t1 = (t + 1) as f64;
    match *schedule {
        StepSchedule::PowerLaw { exponent, scale } => scale * t1.powf(-exponent),
        StepSchedule::Constant { gamma } => gamma,
        StepSchedule::Harmonic { c } => c / t1,
    }
}

/// True iff the schedule family is diminishing, nonsummable and square
/// summable.
pub fn validate_schedule(schedule: &StepSchedule) -> bool {
    match *schedule {
        StepSchedule::PowerLaw { exponent, scale } => scale > 0.0 && exponent > 0.5 && exponent <= 1.0,
        StepSchedule::Constant { .. } => false,
        StepSchedule::Harmonic { c } => c > 0.0,
    }
}

/// Initial values of the outgoing multipliers `λ^{ij}(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaInit {
    #[default]
    Zero,
    /// Entries uniform in `[−scale, scale]`, one ChaCha stream per agent.
    SeededRandom { seed: u64, scale: f64 },
}

impl LambdaInit {
    pub fn is_zero(&self) -> bool {
        match *self {
            LambdaInit::Zero => true,
            LambdaInit::SeededRandom { scale, .. } => scale == 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgentState<T> {
    pub id: usize,
    pub x: Vec<T>,
    pub rho: T,
    pub mu: Vec<T>,
    pub lambda_out: BTreeMap<usize, Vec<T>>,
    pub round: usize,
    pub kkt_max: T,
    solver: LocalSolver<T>,
}

pub fn init_agent<T: Scalar>(id: usize, g: &Graph, spec: &AgentSpec<T>, lambda0: &LambdaInit) -> Result<AgentState<T>> {
    let s = spec.horizon();
    let neighbors = g.neighbors(id)?;
    let mut lambda_out = BTreeMap::new();
    match *lambda0 {
        LambdaInit::Zero => {
            for &j in neighbors {
                lambda_out.insert(j, vec![T::zero(); s]);
            }
        }
        LambdaInit::SeededRandom { seed, scale } => {
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(Error::InvalidArgument(format!("lambda init scale must be finite and nonnegative, got {scale}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            for &j in neighbors {
                let v = (0..s)
                    .map(|_| if scale == 0.0 { T::zero() } else { T::lit(rng.gen_range(-scale..=scale)) })
                    .collect();
                lambda_out.insert(j, v);
            }
        }
    }
    Ok(AgentState {
        id,
        x: vec![T::zero(); s],
        rho: T::zero(),
        mu: vec![T::zero(); s],
        lambda_out,
        round: 0,
        kkt_max: T::zero(),
        solver: LocalSolver::new(),
    })
}

impl<T: Scalar> AgentState<T> {
    pub fn exchange(&self, incoming: &BTreeMap<usize, Vec<T>>) -> Result<LambdaExchange<T>> {
        if !self.lambda_out.keys().eq(incoming.keys()) {
            return Err(Error::InvalidArgument(format!("agent {} expected one message per neighbor", self.id)));
        }
        Ok(LambdaExchange { outgoing: self.lambda_out.clone(), incoming: incoming.clone() })
    }

    /// Solves the local subproblem against the gathered `λ^{ji}(t)` and
    /// stores `(x, ρ, μ)(t+1)`.
    pub fn round_phase1(
        &mut self,
        spec: &AgentSpec<T>,
        incoming: &BTreeMap<usize, Vec<T>>,
        tol: T,
    ) -> Result<()> {
        let ex = self.exchange(incoming)?;
        let delta = crate::local::lambda_delta(&ex, spec.horizon())?;
        let out = self.solver.solve(spec, &delta, tol)?;
        self.x.clone_from(&out.x);
        self.rho = out.rho;
        self.mu.clone_from(&out.mu);
        self.kkt_max = out.kkt_residuals.max();
        Ok(())
    }

    /// `λ^{ij} ← λ^{ij} − γ (μ^i − μ^j)` for every neighbor `j`.
    pub fn round_phase2(&mut self, incoming_mu: &BTreeMap<usize, Vec<T>>, gamma_t: T) -> Result<()> {
        if !self.lambda_out.keys().eq(incoming_mu.keys()) {
            return Err(Error::InvalidArgument(format!("agent {} expected one mu per neighbor", self.id)));
        }
        if gamma_t < T::zero() {
            return Err(Error::InvalidArgument("step size must be nonnegative".into()));
        }
        for (j, lam) in self.lambda_out.iter_mut() {
            let mu_j = &incoming_mu[j];
            for (s, l) in lam.iter_mut().enumerate() {
                *l -= gamma_t * (self.mu[s] - mu_j[s]);
            }
        }
        self.round += 1;
        Ok(())
    }
}
