//! Thermostatically controlled loads: discretized first-order thermal
//! dynamics turned into polyhedral input constraints.
//!
//! Each device follows
//!
//! ```text
//!   T_{s+1} = Â T_s + B̂ (Q/α · x_s + δ_s/α + T_out,s),   Â = e^{−αΔτ}, B̂ = 1 − Â
//! ```
//!
//! so the sampled trajectory is `T̄ = F (T̄_out + δ/α + (Q/α) x) + G T_0` and the
//! band `T_min ≤ T̄ ≤ T_max` becomes `A x ≤ b`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentSpec, MinMaxProblem, ScalarCost};
use crate::scalar::Scalar;

pub const PULSE_WIDTH: usize = 5;
pub const NUM_COST_VALUES: usize = 5;

/// Parameters of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TclParams {
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub dtau: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "Tmin")]
    pub tmin: f64,
    #[serde(rename = "Tmax")]
    pub tmax: f64,
    #[serde(rename = "Tout")]
    pub tout: Vec<f64>,
    pub delta: Vec<f64>,
    pub c: f64,
}

impl TclParams {
    pub fn horizon(&self) -> usize {
        self.tout.len()
    }

    pub fn check(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        pos(self.alpha, "alpha")?;
        pos(self.q, "Q")?;
        pos(self.dtau, "dtau")?;
        if !(self.tmin < self.tmax) {
            return Err(Error::InvalidArgument(format!("Tmin {} must be below Tmax {}", self.tmin, self.tmax)));
        }
        if self.tout.is_empty() || self.delta.len() != self.tout.len() {
            return Err(Error::Dimension(format!(
                "Tout has length {}, delta has length {}",
                self.tout.len(),
                self.delta.len()
            )));
        }
        Ok(())
    }

    /// `(Â, B̂)`
    pub fn coefficients(&self) -> (f64, f64) {
        let a_hat = (-self.alpha * self.dtau).exp();
        (a_hat, -(-self.alpha * self.dtau).exp_m1())
    }
}

/// One step of the sampled dynamics from slot `s` to `s + 1`.
pub fn discrete_step(params: &TclParams, t_s: f64, x_s: f64, s: usize) -> f64 {
    let (a_hat, b_hat) = params.coefficients();
    t_s * a_hat + b_hat * (params.q / params.alpha * x_s + params.delta[s] / params.alpha + params.tout[s])
}

/// Temperatures `T_1 .. T_S` under control `x`.
pub fn simulate(params: &TclParams, x: &[f64]) -> Vec<f64> {
    let mut t = params.t0;
    (0..params.horizon())
        .map(|s| {
            t = discrete_step(params, t, x[s], s);
            t
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TclAgentMatrices {
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

pub fn build_matrices(params: &TclParams) -> Result<TclAgentMatrices> {
    params.check()?;
    let s_len = params.horizon();
    let (a_hat, b_hat) = params.coefficients();
    let powers: Vec<f64> = std::iter::successors(Some(1.0), |p| Some(p * a_hat)).take(s_len + 1).collect();
    let f: Vec<Vec<f64>> = (0..s_len)
        .map(|r| (0..s_len).map(|c| if c <= r { powers[r - c] * b_hat } else { 0.0 }).collect())
        .collect();
    let g: Vec<f64> = (0..s_len).map(|r| powers[r + 1]).collect();

    let gain = params.q / params.alpha;
    let forcing: Vec<f64> = params.tout.iter().zip(&params.delta).map(|(o, d)| o + d / params.alpha).collect();
    let free: Vec<f64> = (0..s_len)
        .map(|r| g[r] * params.t0 + (0..=r).map(|c| f[r][c] * forcing[c]).sum::<f64>())
        .collect();

    let mut a = Vec::with_capacity(2 * s_len);
    let mut b = Vec::with_capacity(2 * s_len);
    for r in 0..s_len {
        a.push(f[r].iter().map(|v| gain * v).collect());
        b.push(params.tmax - free[r]);
    }
    for r in 0..s_len {
        a.push(f[r].iter().map(|v| -gain * v).collect());
        b.push(free[r] - params.tmin);
    }
    Ok(TclAgentMatrices { f, g, a, b })
}

pub fn agent_spec<T: Scalar>(params: &TclParams) -> Result<AgentSpec<T>> {
    let m = build_matrices(params)?;
    let s_len = params.horizon();
    let lit = |v: &f64| T::lit(*v);
    AgentSpec::new(
        m.a.iter().map(|r| r.iter().map(lit).collect()).collect(),
        m.b.iter().map(lit).collect(),
        vec![T::zero(); s_len],
        vec![T::one(); s_len],
        vec![ScalarCost::Affine { c: T::lit(params.c) }; s_len],
    )
}

/// Scenario-wide defaults from which per-device parameters are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TclTemplate {
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub dtau: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "Tmin")]
    pub tmin: f64,
    #[serde(rename = "Tmax")]
    pub tmax: f64,
    #[serde(rename = "Tout")]
    pub tout: f64,
    /// Pulse magnitude is drawn uniformly from this range and scaled by `alpha`.
    pub pulse_amplitude: [f64; 2],
    /// `+1` for a heat gain, `−1` for a heat loss.
    pub pulse_sign: f64,
    pub cost_range: [f64; 2],
}

impl Default for TclTemplate {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            q: 5.0,
            dtau: 0.25,
            t0: 22.0,
            tmin: 20.0,
            tmax: 24.0,
            tout: 15.0,
            pulse_amplitude: [1.0, 2.0],
            pulse_sign: -1.0,
            cost_range: [1.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TclScenario {
    pub params: Vec<TclParams>,
    pub cost_values: Vec<f64>,
    pub pulse_start: Vec<usize>,
    pub problem: MinMaxProblem<f64>,
}

/// Centers are drawn from `[S/2 − S/8, S/2 + S/8]`; the window start is
/// clamped so the whole pulse stays inside the horizon.
fn pulse_start(rng: &mut ChaCha8Rng, horizon: usize) -> usize {
    let half = horizon as f64 / 2.0;
    let spread = horizon as f64 / 8.0;
    let center = rng.gen_range(half - spread..=half + spread).floor() as i64;
    let start = center - (PULSE_WIDTH / 2) as i64;
    start.clamp(0, (horizon - PULSE_WIDTH) as i64) as usize
}

pub fn generate_scenario(n_agents: usize, horizon: usize, seed: u64, template: &TclTemplate) -> Result<TclScenario> {
    if horizon < PULSE_WIDTH {
        return Err(Error::InvalidArgument(format!("horizon must be at least {PULSE_WIDTH}, got {horizon}")));
    }
    if n_agents == 0 {
        return Err(Error::InvalidArgument("need at least one agent".into()));
    }
    let [c_lo, c_hi] = template.cost_range;
    let [p_lo, p_hi] = template.pulse_amplitude;
    if !(c_lo <= c_hi && p_lo <= p_hi) {
        return Err(Error::InvalidArgument("ranges must be ordered".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cost_values: Vec<f64> = (0..NUM_COST_VALUES).map(|_| rng.gen_range(c_lo..=c_hi)).collect();

    let mut params = Vec::with_capacity(n_agents);
    let mut starts = Vec::with_capacity(n_agents);
    let mut agents = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let c = cost_values[rng.gen_range(0..NUM_COST_VALUES)];
        let start = pulse_start(&mut rng, horizon);
        let amplitude = template.pulse_sign * rng.gen_range(p_lo..=p_hi) * template.alpha;
        let mut delta = vec![0.0; horizon];
        delta[start..start + PULSE_WIDTH].fill(amplitude);
        let p = TclParams {
            alpha: template.alpha,
            q: template.q,
            dtau: template.dtau,
            t0: template.t0,
            tmin: template.tmin,
            tmax: template.tmax,
            tout: vec![template.tout; horizon],
            delta,
            c,
        };
        let spec: AgentSpec<f64> = agent_spec(&p)?;
        if !spec.is_feasible(f64::default_tol())? {
            return Err(Error::ScenarioInfeasible { agent: i });
        }
        agents.push(spec);
        params.push(p);
        starts.push(start);
    }
    Ok(TclScenario { params, cost_values, pulse_start: starts, problem: MinMaxProblem::new(agents)? })
}

pub fn build_scenario(n_agents: usize, horizon: usize, seed: u64, template: &TclTemplate) -> Result<MinMaxProblem<f64>> {
    Ok(generate_scenario(n_agents, horizon, seed, template)?.problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, dtau: f64, s: usize) -> TclParams {
        TclParams {
            alpha,
            q: 5.0,
            dtau,
            t0: 22.0,
            tmin: 20.0,
            tmax: 24.0,
            tout: vec![15.0; s],
            delta: vec![0.0; s],
            c: 1.0,
        }
    }

    #[test]
    fn step_examples() {
        let mut p = params(0.5, 0.25, 1);
        p.tout = vec![18.0];
        assert_eq!(discrete_step(&p, 18.0, 0.0, 0), 18.0);

        let mut p = params(1.0, 50.0, 1);
        p.delta = vec![0.5];
        let steady = p.q / p.alpha * 0.3 + 0.5 / p.alpha + 15.0;
        assert!((discrete_step(&p, 100.0, 0.3, 0) - steady).abs() < 1e-12);

        let mut p = params(1.0, std::f64::consts::LN_2, 1);
        p.tout = vec![20.0];
        let (a_hat, b_hat) = p.coefficients();
        assert!((a_hat - 0.5).abs() < 1e-15 && (b_hat - 0.5).abs() < 1e-15);
        assert!((discrete_step(&p, 10.0, 0.0, 0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn single_slot_matrices() {
        let p = params(0.5, 0.25, 1);
        let m = build_matrices(&p).unwrap();
        let (a_hat, b_hat) = p.coefficients();
        assert_eq!(m.f, vec![vec![b_hat]]);
        assert_eq!(m.g, vec![a_hat]);
        assert_eq!(m.a, vec![vec![10.0 * b_hat], vec![-10.0 * b_hat]]);
    }

    #[test]
    fn lower_triangular_with_constant_diagonal() {
        let p = params(0.5, 0.25, 8);
        let m = build_matrices(&p).unwrap();
        let (_, b_hat) = p.coefficients();
        for r in 0..8 {
            assert_eq!(m.f[r][r], b_hat);
            assert!(m.f[r][r + 1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn default_scenario_shape() {
        let sc = generate_scenario(20, 60, 11, &TclTemplate::default()).unwrap();
        assert_eq!(sc.problem.num_agents(), 20);
        assert_eq!(sc.problem.horizon, 60);
        assert!(crate::model::validate(&sc.problem).ok);
        assert!(sc.cost_values.iter().all(|c| (1.0..=3.0).contains(c)));
        for p in &sc.params {
            assert!(sc.cost_values.contains(&p.c));
            let nz: Vec<usize> = (0..60).filter(|&s| p.delta[s] != 0.0).collect();
            assert_eq!(nz.len(), PULSE_WIDTH);
            assert_eq!(nz[4] - nz[0], 4);
        }
        let again = generate_scenario(20, 60, 11, &TclTemplate::default()).unwrap();
        assert_eq!(sc.problem.to_json().unwrap(), again.problem.to_json().unwrap());
    }

    #[test]
    fn minimal_horizon_pulse_covers_window() {
        let sc = generate_scenario(1, 5, 3, &TclTemplate::default()).unwrap();
        assert_eq!(sc.pulse_start, vec![0]);
        assert!(sc.params[0].delta.iter().all(|&d| d != 0.0));
        assert!(generate_scenario(1, 4, 3, &TclTemplate::default()).is_err());
    }

    #[test]
    fn infeasible_template_is_reported() {
        let hot = TclTemplate { tout: 30.0, pulse_sign: 1.0, ..TclTemplate::default() };
        assert!(matches!(generate_scenario(3, 12, 1, &hot), Err(Error::ScenarioInfeasible { agent: 0 })));
    }
}
