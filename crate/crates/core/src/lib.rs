//! Stochastic multimodal user equilibrium and trip-based road pricing.

pub mod classical;
pub mod demand;
pub mod equilibrium;
pub mod error;
pub mod metrics;
pub mod netmodel;
pub mod optimizer;
pub mod pricing;
pub mod record;
pub mod supply;

pub use classical::{PathCost, TwoPathInstance};
pub use demand::{ChoiceModel, ChoiceProbabilities};
pub use equilibrium::{calibrate_demand, solve_sue, solve_sue_from, Calibration, Damping, EquilibriumResult, SolverConfig};
pub use error::{ClassicalError, DemandError, EquilibriumError, MetricsError, PricingError, ScenarioError, SupplyError};
pub use metrics::{MetricsReport, ObjectiveDeltas};
pub use netmodel::{builtin, load_scenario, Scenario, BUILTIN_NAMES};
pub use optimizer::{design, minimize, multi_start_agreement, Design, OptimizerConfig};
pub use pricing::{Bounds, DesignProblem, PriceVector, Priceable, RevenueConstraint, SchemeKind, Weights};
pub use record::{path_table, RunRecord};
pub use supply::LinkCosts;
