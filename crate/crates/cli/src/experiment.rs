//! validate → oracle → distributed run → output files.

use std::path::Path;

use minmax_core::harness::{self, FinalReport, RunTrace};
use minmax_core::model::{self, AgentSpec, MinMaxProblem, ScalarCost};
use minmax_core::reference::{self, OracleResult};
use minmax_core::{tcl, Graph};
use serde::Serialize;

use crate::config::{ExperimentConfig, GraphSource, ProblemSource};
use crate::error::CliError;
use crate::output::write_trace;

/// Two agents, two slots, `X = {x ∈ [0,1]² : x₁ + x₂ ≥ 1}`, costs `c = 1`
/// and `c = 2`. The optimal peak is 1.5.
pub fn builtin_tiny() -> MinMaxProblem<f64> {
    let agent = |c: f64| {
        AgentSpec::new(vec![vec![-1.0, -1.0]], vec![-1.0], vec![0.0; 2], vec![1.0; 2], vec![ScalarCost::Affine { c }; 2])
            .expect("builtin agent is well formed")
    };
    MinMaxProblem::new(vec![agent(1.0), agent(2.0)]).expect("builtin problem is well formed")
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<MinMaxProblem<f64>, CliError> {
    let problem = match &cfg.problem {
        ProblemSource::Tcl { n_agents, horizon, seed, params } => {
            tcl::build_scenario(*n_agents, *horizon, seed.unwrap_or(cfg.seed), params)?
        }
        ProblemSource::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read problem file {}: {e}", path.display())))?;
            MinMaxProblem::from_json(&text)
                .map_err(|e| CliError::Config(format!("cannot parse problem file {}: {e}", path.display())))?
        }
        ProblemSource::BuiltinTiny => builtin_tiny(),
    };
    let report = model::validate(&problem);
    if !report.ok {
        let structural: Vec<String> = report
            .agents
            .iter()
            .filter(|a| !(a.dims_ok && a.box_finite && a.convex))
            .map(|a| format!("agent {}: {}", a.agent, a.message.clone().unwrap_or_default()))
            .collect();
        if !report.horizon_consistent || !structural.is_empty() {
            return Err(CliError::Config(format!("invalid problem: {}", structural.join("; "))));
        }
        return Err(CliError::Infeasible(format!("empty feasible set for agents {:?}", report.infeasible_agents())));
    }
    Ok(problem)
}

pub fn build_graph(cfg: &ExperimentConfig, n: usize) -> Result<Graph, CliError> {
    let g = match &cfg.graph {
        GraphSource::ErdosRenyi { p, seed, max_tries } => {
            Graph::erdos_renyi(n, *p, seed.unwrap_or(cfg.seed.wrapping_add(1)), *max_tries)?
        }
        GraphSource::EdgeList { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read edge list {}: {e}", path.display())))?;
            Graph::from_edge_list(&text)?
        }
        GraphSource::Complete => Graph::complete(n)?,
    };
    if g.node_count() != n {
        return Err(CliError::Config(format!(
            "dimension mismatch: graph has {} nodes but the problem has {n} agents",
            g.node_count()
        )));
    }
    if !g.is_connected() {
        return Err(CliError::Config("graph is not connected".into()));
    }
    Ok(g)
}

/// Solves the centralized problem, reusing a cached result whose problem
/// hash matches.
pub fn oracle(problem: &MinMaxProblem<f64>, cache: Option<&Path>, tol: f64) -> Result<OracleResult<f64>, CliError> {
    let hash = reference::problem_hash(problem)?;
    if let Some(path) = cache {
        if let Some(hit) = reference::load_cached(path, &hash)? {
            return Ok(hit);
        }
    }
    let result = reference::solve_centralized(problem, tol)?;
    if let Some(path) = cache {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        reference::store_cached(path, &hash, &result)?;
    }
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub problem_hash: String,
    pub n_agents: usize,
    pub horizon: usize,
    pub graph_edges: usize,
    #[serde(flatten)]
    pub run: FinalReport<f64>,
    pub strong_duality: Option<bool>,
    pub rate_exponent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub problem: MinMaxProblem<f64>,
    pub graph: Graph,
    pub oracle: Option<OracleResult<f64>>,
    pub trace: RunTrace<f64>,
    pub report: ReportDoc,
}

/// Runs a resolved configuration and writes `trace.csv`, `report.json`,
/// `resolved_config.json` and, with the oracle enabled, `oracle.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    let out_dir = cfg.output_dir();
    let problem = build_problem(cfg)?;
    let graph = build_graph(cfg, problem.num_agents())?;
    let oracle_result = if cfg.oracle.enabled {
        Some(oracle(&problem, cfg.oracle.cache.as_deref(), cfg.run.tol)?)
    } else {
        None
    };
    let (trace, run_report) = harness::run(&problem, &graph, &cfg.run, oracle_result.as_ref().map(|o| o.p_star))?;
    let strong_duality =
        oracle_result.as_ref().map(|o| reference::strong_duality_check(&problem, o, 1e-6 * o.p_star.abs().max(1.0)));
    let rate_exponent = harness::rate_fit(&harness::error_points(&trace), cfg.rate_window).ok();
    let report = ReportDoc {
        problem_hash: reference::problem_hash(&problem)?,
        n_agents: problem.num_agents(),
        horizon: problem.horizon,
        graph_edges: graph.edge_count(),
        run: run_report,
        strong_duality,
        rate_exponent,
    };

    std::fs::create_dir_all(&out_dir)?;
    write_trace(&out_dir.join("trace.csv"), &trace)?;
    std::fs::write(out_dir.join("report.json"), to_json(&report)?)?;
    std::fs::write(out_dir.join("resolved_config.json"), to_json(cfg)?)?;
    if let Some(o) = &oracle_result {
        let path = out_dir.join("oracle.json");
        if cfg.oracle.cache.as_deref() != Some(path.as_path()) {
            reference::store_cached(&path, &report.problem_hash, o)?;
        }
    }
    Ok(ExperimentOutcome { problem, graph, oracle: oracle_result, trace, report })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}
