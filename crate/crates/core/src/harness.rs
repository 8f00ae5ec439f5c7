//! Synchronous network simulator driving all agents through the rounds.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::local::{lambda_delta, LambdaExchange};
use crate::model::MinMaxProblem;
use crate::protocol::{gamma, init_agent, AgentState, LambdaInit, StepSchedule};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    /// Relative cost error threshold.
    pub target: f64,
    /// Number of consecutive recorded rows that must meet it.
    pub consecutive: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { target: 1e-3, consecutive: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub iterations: usize,
    pub schedule: StepSchedule,
    pub seed: u64,
    pub tol: f64,
    pub record_every: usize,
    pub lambda_init: LambdaInit,
    /// Relative error used for the convergence flag.
    pub target: f64,
    pub early_stop: Option<EarlyStop>,
    pub record_rho: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            schedule: StepSchedule::default(),
            seed: 0,
            tol: 1e-9,
            record_every: 1,
            lambda_init: LambdaInit::Zero,
            target: 1e-3,
            early_stop: None,
            record_rho: false,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if let Some(es) = self.early_stop {
            if es.consecutive == 0 {
                return Err(Error::InvalidArgument("early_stop.consecutive must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow<T> {
    pub t: usize,
    pub sum_rho: T,
    #[serde(rename = "P_t")]
    pub p_t: T,
    pub cost_error: Option<T>,
    pub max_violation: T,
    pub violations: Vec<T>,
    pub rho: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunTrace<T> {
    pub rows: Vec<TraceRow<T>>,
}

/// Worst values seen over every round, recorded or not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMonitor {
    /// `max_{t,s} Σ_i g^i_s − Σ_i ρ^i`
    pub max_violation: f64,
    /// `max_t P(t) − Σ_i ρ^i(t)`
    pub max_peak_over_sum_rho: f64,
    /// `min_t P(t) − P*`
    pub min_peak_over_p_star: Option<f64>,
    pub max_simplex_error: f64,
    pub min_mu: f64,
    /// `max_t ‖Σ_i Σ_j (λ^{ij} − λ^{ji})‖_∞`
    pub max_lambda_imbalance: f64,
    pub max_kkt_residual: f64,
}

impl Default for RunMonitor {
    fn default() -> Self {
        Self {
            max_violation: f64::NEG_INFINITY,
            max_peak_over_sum_rho: f64::NEG_INFINITY,
            min_peak_over_p_star: None,
            max_simplex_error: 0.0,
            min_mu: f64::INFINITY,
            max_lambda_imbalance: 0.0,
            max_kkt_residual: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalReport<T> {
    pub x: Vec<Vec<T>>,
    pub sum_rho: T,
    #[serde(rename = "P_t")]
    pub p_t: T,
    #[serde(rename = "P_star")]
    pub p_star: Option<T>,
    pub relative_error: Option<T>,
    /// `max_s Σ_i g^i_s(x^i_s) − P*` for the final iterate.
    pub final_excess_over_p_star: Option<T>,
    pub target: f64,
    pub converged: Option<bool>,
    pub iterations: usize,
    pub early_stopped: bool,
    pub monitor: RunMonitor,
    #[serde(skip)]
    pub wall_time_s: f64,
}

pub fn relative_error<T: Scalar>(sum_rho: T, p_star: T) -> T {
    (sum_rho - p_star).abs() / p_star.abs().max(T::one())
}

/// Runs the distributed algorithm for `cfg.iterations` rounds.
pub fn run<T: Scalar>(
    problem: &MinMaxProblem<T>,
    g: &Graph,
    cfg: &RunConfig,
    oracle_value: Option<T>,
) -> Result<(RunTrace<T>, FinalReport<T>)> {
    cfg.check()?;
    problem.check_structure()?;
    let n = problem.num_agents();
    if g.node_count() != n {
        return Err(Error::Dimension(format!("graph has {} nodes, problem has {n} agents", g.node_count())));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let started = Instant::now();
    let s_len = problem.horizon;
    let tol = T::lit(cfg.tol);
    let mut agents: Vec<AgentState<T>> =
        (0..n).map(|i| init_agent(i, g, &problem.agents[i], &cfg.lambda_init)).collect::<Result<_>>()?;

    let nbrs: Vec<&[usize]> = (0..n).map(|i| g.neighbors(i)).collect::<Result<_>>()?;

    let mut trace = RunTrace::default();
    let mut monitor = RunMonitor::default();
    let mut streak = 0usize;
    let mut early_stopped = false;
    let mut rounds = 0usize;

    for t in 0..cfg.iterations {
        let incoming: Vec<BTreeMap<usize, Vec<T>>> = (0..n)
            .map(|i| nbrs[i].iter().map(|&j| (j, agents[j].lambda_out[&i].clone())).collect())
            .collect();

        let mut imbalance = vec![T::zero(); s_len];
        for (i, agent) in agents.iter_mut().enumerate() {
            let ex = LambdaExchange { outgoing: agent.lambda_out.clone(), incoming: incoming[i].clone() };
            for (acc, d) in imbalance.iter_mut().zip(lambda_delta(&ex, s_len)?) {
                *acc += d;
            }
            agent
                .round_phase1(&problem.agents[i], &incoming[i], tol)
                .map_err(|e| Error::AgentFailure { agent: i, round: t + 1, source: Box::new(e) })?;
        }
        rounds = t + 1;

        let sum_rho: T = agents.iter().map(|a| a.rho).sum();
        let xs: Vec<Vec<T>> = agents.iter().map(|a| a.x.clone()).collect();
        let (p_t, profile) = problem.peak(&xs);
        let violations: Vec<T> = profile.iter().map(|&v| v - sum_rho).collect();
        let max_violation = violations.iter().copied().fold(T::neg_infinity(), T::max);

        monitor.max_violation = monitor.max_violation.max(max_violation.to_f64_lossy());
        monitor.max_peak_over_sum_rho = monitor.max_peak_over_sum_rho.max((p_t - sum_rho).to_f64_lossy());
        if let Some(p_star) = oracle_value {
            let gap = (p_t - p_star).to_f64_lossy();
            monitor.min_peak_over_p_star = Some(monitor.min_peak_over_p_star.map_or(gap, |m| m.min(gap)));
        }
        for a in &agents {
            let total: T = a.mu.iter().copied().sum();
            monitor.max_simplex_error = monitor.max_simplex_error.max((total - T::one()).abs().to_f64_lossy());
            let lo = a.mu.iter().copied().fold(T::infinity(), T::min);
            monitor.min_mu = monitor.min_mu.min(lo.to_f64_lossy());
            monitor.max_kkt_residual = monitor.max_kkt_residual.max(a.kkt_max.to_f64_lossy());
        }
        monitor.max_lambda_imbalance =
            monitor.max_lambda_imbalance.max(crate::scalar::max_abs(&imbalance).to_f64_lossy());

        let round = t + 1;
        let record = round == 1 || round % cfg.record_every == 0 || round == cfg.iterations;
        let cost_error = oracle_value.map(|p| (sum_rho - p).abs());
        if record {
            trace.rows.push(TraceRow {
                t: round,
                sum_rho,
                p_t,
                cost_error,
                max_violation,
                violations,
                rho: cfg.record_rho.then(|| agents.iter().map(|a| a.rho).collect()),
            });
            if let (Some(es), Some(p_star)) = (cfg.early_stop, oracle_value) {
                if relative_error(sum_rho, p_star).to_f64_lossy() <= es.target {
                    streak += 1;
                } else {
                    streak = 0;
                }
                if streak >= es.consecutive {
                    early_stopped = true;
                    break;
                }
            }
        }

        let gamma_t = T::lit(gamma(&cfg.schedule, t));
        let mus: Vec<Vec<T>> = agents.iter().map(|a| a.mu.clone()).collect();
        for (i, agent) in agents.iter_mut().enumerate() {
            let inc: BTreeMap<usize, Vec<T>> = nbrs[i].iter().map(|&j| (j, mus[j].clone())).collect();
            agent.round_phase2(&inc, gamma_t)?;
        }
    }

    let last = trace.rows.last().expect("at least one round is recorded");
    let rel = oracle_value.map(|p| relative_error(last.sum_rho, p));
    let report = FinalReport {
        x: agents.iter().map(|a| a.x.clone()).collect(),
        sum_rho: last.sum_rho,
        p_t: last.p_t,
        p_star: oracle_value,
        relative_error: rel,
        final_excess_over_p_star: oracle_value.map(|p| last.p_t - p),
        target: cfg.target,
        converged: rel.map(|r| r.to_f64_lossy() <= cfg.target),
        iterations: rounds,
        early_stopped,
        monitor,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((trace, report))
}

/// Relative level below which an error is treated as exact convergence.
pub const RATE_FIT_FLOOR: f64 = 1e-12;

/// Least-squares slope of `log(envelope)` against `log(t)` over the last
/// `window` fraction of rows, where the envelope is the running minimum of
/// the cost error. Rows whose envelope has fallen to roundoff (below
/// [`RATE_FIT_FLOOR`] times the initial error) are dropped first.
pub fn rate_fit(points: &[(usize, f64)], window: f64) -> Result<f64> {
    if points.len() < 50 {
        return Err(Error::InsufficientData(format!("need at least 50 rows, got {}", points.len())));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidArgument(format!("window must lie in (0, 1], got {window}")));
    }
    let mut envelope = Vec::with_capacity(points.len());
    let mut best = f64::INFINITY;
    for &(t, e) in points {
        best = best.min(e);
        envelope.push((t, best));
    }
    let floor = envelope.first().map_or(0.0, |p| p.1) * RATE_FIT_FLOOR;
    envelope.retain(|p| p.1 > floor);
    let skip = ((1.0 - window) * envelope.len() as f64).floor() as usize;
    let tail: Vec<(f64, f64)> = envelope[skip..]
        .iter()
        .filter(|(t, e)| *t > 0 && *e > 0.0 && e.is_finite())
        .map(|&(t, e)| ((t as f64).ln(), e.ln()))
        .collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientData("fewer than two positive errors in the window".into()));
    }
    let k = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / k;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("window spans a single iteration".into()));
    }
    Ok(sxy / sxx)
}

/// `(t, cost_error)` pairs of a trace, for [`rate_fit`].
pub fn error_points<T: Scalar>(trace: &RunTrace<T>) -> Vec<(usize, f64)> {
    trace.rows.iter().filter_map(|r| r.cost_error.map(|e| (r.t, e.to_f64_lossy()))).collect()
}
