//! On-disk scenario document.
//!
//! Scenarios are TOML files with `[scenario]`, `[parameters]`, `[[modes]]`,
//! `[[links]]`, `[[paths]]`, `[[classes]]` and `[[demand]]` sections. Units
//! at the file boundary are the internal ones: km, km/h, veh/h, hours, euro
//! and pax/h.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EnergyModel, LinkCategory, LogsumForm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub scenario: Header,
    pub parameters: ParametersDoc,
    pub modes: Vec<ModeDoc>,
    pub links: Vec<LinkDoc>,
    pub paths: Vec<PathDoc>,
    pub classes: Vec<ClassDoc>,
    pub demand: Vec<DemandDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersDoc {
    pub theta_path: f64,
    pub theta_mode: f64,
    pub beta_sf: f64,
    pub alpha_sf: f64,
    #[serde(default)]
    pub logsum: LogsumForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDoc {
    pub id: String,
    pub beta_tt: f64,
    #[serde(default)]
    pub congested: bool,
    #[serde(default)]
    pub overlap_correction: bool,
    #[serde(default)]
    pub fare_per_km_tolled: f64,
    #[serde(default)]
    pub flat_fare: f64,
    pub energy: EnergyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    pub category: LinkCategory,
    #[serde(default)]
    pub bpr_alpha: f64,
    #[serde(default = "default_bpr_beta")]
    pub bpr_beta: f64,
    #[serde(default)]
    pub tolled: bool,
    pub modes: BTreeMap<String, ModeOnLinkDoc>,
}

fn default_bpr_beta() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeOnLinkDoc {
    pub speed: f64,
    #[serde(default)]
    pub waiting: f64,
    #[serde(default)]
    pub access: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub id: String,
    pub od: String,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<String>,
    /// Explicit link ids; required when parallel links make a node
    /// sequence ambiguous.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDoc {
    pub id: String,
    pub vot: f64,
    pub vowt: f64,
    pub share: f64,
    #[serde(default)]
    pub energy_price: BTreeMap<String, f64>,
    #[serde(default)]
    pub occupancy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDoc {
    pub od: String,
    pub origin: String,
    pub destination: String,
    pub demand: f64,
}
