//! Self-contained run records and the per-path table.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_sue, EquilibriumResult, SolverConfig};
use crate::error::{EquilibriumError, ScenarioError};
use crate::metrics::MetricsReport;
use crate::netmodel::file::ScenarioDoc;
use crate::netmodel::Scenario;
use crate::optimizer::{OptimizerConfig, TraceRow};
use crate::pricing::{Priceable, PriceVector, RevenueConstraint, SchemeKind, Weights};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Solver outcome without the bulky internals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Passenger flow per path, pax/h.
    pub path_flows: Vec<f64>,
    /// Congested vehicle flow per link, veh/h.
    pub link_flows: Vec<f64>,
}

impl EquilibriumSummary {
    pub fn of(scenario: &Scenario, result: &EquilibriumResult) -> Self {
        EquilibriumSummary {
            iterations: result.iterations,
            residual: result.residual,
            converged: result.converged,
            path_flows: result.passenger_path_flows(scenario),
            link_flows: result.link_flows.clone(),
        }
    }
}

/// Everything needed to reproduce and report one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub tool_version: String,
    pub scenario_id: String,
    pub scenario: ScenarioDoc,
    pub scheme: SchemeKind,
    pub priceable: Priceable,
    pub objective: Option<String>,
    pub weights: Option<Weights>,
    pub revenue: Option<RevenueConstraint>,
    pub solver: SolverConfig,
    pub optimizer: Option<OptimizerConfig>,
    pub seed: Option<u64>,
    pub prices: PriceVector,
    pub equilibrium: EquilibriumSummary,
    pub report: MetricsReport,
    pub baseline: Option<MetricsReport>,
    pub objective_value: Option<f64>,
    pub feasible: Option<bool>,
    pub trace: Vec<TraceRow>,
    /// Unix seconds.
    pub started: u64,
    pub finished: u64,
}

impl RunRecord {
    /// Record of a plain assignment under `prices`.
    pub fn assignment(
        command: &str,
        scenario: &Scenario,
        prices: PriceVector,
        solver: SolverConfig,
        result: &EquilibriumResult,
        report: MetricsReport,
    ) -> Self {
        RunRecord {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            scenario_id: scenario.name().to_string(),
            scenario: scenario.to_doc(),
            scheme: prices.kind,
            priceable: prices.priceable,
            objective: None,
            weights: None,
            revenue: None,
            solver,
            optimizer: None,
            seed: None,
            prices,
            equilibrium: EquilibriumSummary::of(scenario, result),
            report,
            baseline: None,
            objective_value: None,
            feasible: None,
            trace: Vec::new(),
            started: 0,
            finished: 0,
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ScenarioError> {
        Scenario::from_doc(self.scenario.clone())
    }

    /// Solve again from the stored scenario, prices and solver settings.
    pub fn replay(&self) -> Result<(EquilibriumResult, MetricsReport), ReplayError> {
        let scenario = self.scenario()?;
        let result = solve_sue(&scenario, &self.prices.path_prices, &self.solver)?;
        let report = MetricsReport::compute(&scenario, &result).map_err(|e| ReplayError::Metrics(e.to_string()))?;
        Ok((result, report))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("metrics: {0}")]
    Metrics(String),
}

/// One row of the per-path table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub path: String,
    pub od: String,
    pub mode: String,
    /// pax/h.
    pub flow: f64,
    /// In-motion travel time, min.
    pub travel_time_min: f64,
    /// Path price, euro/pax.
    pub price: f64,
}

/// Flow, travel time and price of every path.
pub fn path_table(scenario: &Scenario, result: &EquilibriumResult) -> Vec<PathRow> {
    let flows = result.passenger_path_flows(scenario);
    scenario
        .paths()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let tt: f64 = p.links.iter().map(|&a| result.link_costs.travel_time[p.mode][a]).sum();
            PathRow {
                path: p.id.clone(),
                od: scenario.ods()[p.od].id.clone(),
                mode: scenario.modes()[p.mode].id.clone(),
                flow: flows[k],
                travel_time_min: 60.0 * tt,
                price: result.prices[k],
            }
        })
        .collect()
}
