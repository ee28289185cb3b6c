//! Multimodal network, explicit path sets, user classes and demand.
//!
//! A [`Scenario`] is built once from a [`file::ScenarioDoc`], validated, and
//! never mutated afterwards. Cross references are resolved to indices so the
//! numerical modules work on plain slices.

mod builtin;
pub mod file;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use file::{ClassDoc, DemandDoc, Header, LinkDoc, ModeDoc, ModeOnLinkDoc, ParametersDoc, PathDoc, ScenarioDoc};

pub use builtin::{builtin, BUILTIN_NAMES};

/// Tolerance on the per-OD sum of class shares.
const SHARE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkCategory {
    Highway,
    UrbanSecondary,
    UrbanLocal,
    Walk,
    Metro,
    Bike,
}

/// Specific energy consumption model of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnergyModel {
    /// Speed-dependent quadratic `c0 + c1 v + c2 v^2` in units per veh-km;
    /// `kwh_per_unit` converts the unit to kWh.
    SpeedQuadratic {
        c0: f64,
        c1: f64,
        c2: f64,
        kwh_per_unit: f64,
    },
    /// Constant kWh per pax-km.
    Constant { kwh_per_pax_km: f64 },
}

impl EnergyModel {
    /// Combustion-engine car curve in l/veh-km, 8.9 kWh per litre.
    pub const ICE: EnergyModel = EnergyModel::SpeedQuadratic {
        c0: 0.136,
        c1: -1.42e-3,
        c2: 7.04e-6,
        kwh_per_unit: 8.9,
    };
    pub const E_BIKE: EnergyModel = EnergyModel::Constant { kwh_per_pax_km: 0.10 };
    pub const METRO: EnergyModel = EnergyModel::Constant { kwh_per_pax_km: 0.08 };

    /// Whether consumption is expressed per vehicle-km (otherwise per pax-km).
    pub fn per_vehicle(&self) -> bool {
        matches!(self, EnergyModel::SpeedQuadratic { .. })
    }

    pub fn kwh_per_unit(&self) -> f64 {
        match *self {
            EnergyModel::SpeedQuadratic { kwh_per_unit, .. } => kwh_per_unit,
            EnergyModel::Constant { .. } => 1.0,
        }
    }
}

/// How a mode's utility aggregates its path utilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogsumForm {
    /// `theta * ln sum exp(V / theta)`: the expected maximum utility, equal
    /// to the single alternative's utility for a singleton set.
    #[default]
    Scaled,
    /// `(1 / theta) * ln sum exp(V / theta)`.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub id: String,
    /// Reciprocal substitution coefficient of travel time.
    pub beta_tt: f64,
    /// Vehicles of this mode load link capacity (BPR applies).
    pub congested: bool,
    /// Apply the c-logit commonality correction to this mode's paths.
    pub overlap_correction: bool,
    /// Per passenger-km fare on tolled links.
    pub fare_per_km_tolled: f64,
    /// Flat per passenger fare for every path of the mode.
    pub flat_fare: f64,
    pub energy: EnergyModel,
}

/// How a mode traverses a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOnLink {
    /// km/h
    pub speed: f64,
    /// Constant waiting time, h.
    pub waiting: f64,
    /// Walked access leg: no energy use and no monetary cost.
    pub access: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    /// km
    pub length: f64,
    /// veh/h; `None` for uncongested links.
    pub capacity: Option<f64>,
    pub category: LinkCategory,
    pub bpr_alpha: f64,
    pub bpr_beta: f64,
    pub tolled: bool,
    /// Indexed by scenario mode index; `None` if the mode may not use the link.
    pub modes: Vec<Option<ModeOnLink>>,
}

impl LinkSpec {
    pub fn allows(&self, mode: usize) -> bool {
        self.modes.get(mode).is_some_and(Option::is_some)
    }

    pub fn is_congested(&self) -> bool {
        self.capacity.is_some() && self.bpr_alpha > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub id: String,
    pub od: usize,
    pub mode: usize,
    pub nodes: Vec<String>,
    /// Ordered link indices (the path's incidence column).
    pub links: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserClass {
    pub id: String,
    /// euro/h
    pub vot: f64,
    /// euro/h
    pub vowt: f64,
    /// Share of every OD's demand.
    pub share: f64,
    /// Per mode, euro per energy unit of that mode's model.
    pub energy_price: Vec<f64>,
    /// Per mode, pax/veh.
    pub occupancy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPair {
    pub id: String,
    pub origin: String,
    pub destination: String,
    /// pax/h
    pub demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceParams {
    pub theta_path: f64,
    pub theta_mode: f64,
    pub beta_sf: f64,
    pub alpha_sf: f64,
    pub logsum: LogsumForm,
}

/// Paths of one mode on one OD pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBlock {
    pub od: usize,
    pub mode: usize,
    pub paths: Vec<usize>,
}

/// Sparse link-path incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    n_links: usize,
    columns: Vec<Vec<usize>>,
}

impl Incidence {
    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn n_paths(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, path: usize) -> &[usize] {
        &self.columns[path]
    }

    pub fn contains(&self, link: usize, path: usize) -> bool {
        self.columns[path].contains(&link)
    }

    /// Dense `links x paths` 0/1 matrix.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.columns.len()]; self.n_links];
        for (k, col) in self.columns.iter().enumerate() {
            for &a in col {
                m[a][k] = 1;
            }
        }
        m
    }

    /// `Δ h`: link flows from path flows.
    pub fn link_flows(&self, path_flows: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_links];
        self.accumulate(path_flows, &mut f);
        f
    }

    pub fn accumulate(&self, path_flows: &[f64], out: &mut [f64]) {
        for (col, &h) in self.columns.iter().zip(path_flows) {
            if h != 0.0 {
                for &a in col {
                    out[a] += h;
                }
            }
        }
    }

    /// `Δᵀ c`: path sums of a link quantity.
    pub fn path_sums(&self, link_values: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&a| link_values[a]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    params: ChoiceParams,
    modes: Vec<ModeSpec>,
    links: Vec<LinkSpec>,
    paths: Vec<PathSpec>,
    classes: Vec<UserClass>,
    ods: Vec<OdPair>,
    blocks: Vec<PathBlock>,
    incidence: Incidence,
    path_lengths: Vec<f64>,
}

/// Parse and validate a scenario document.
pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(source)?;
    Scenario::from_doc(doc)
}

impl Scenario {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        load_scenario(&std::fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn params(&self) -> &ChoiceParams {
        &self.params
    }
    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }
    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }
    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }
    pub fn classes(&self) -> &[UserClass] {
        &self.classes
    }
    pub fn ods(&self) -> &[OdPair] {
        &self.ods
    }
    /// One block per (OD, mode) with at least one path, OD-major.
    pub fn blocks(&self) -> &[PathBlock] {
        &self.blocks
    }
    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }
    pub fn path_lengths(&self) -> &[f64] {
        &self.path_lengths
    }

    pub fn mode_index(&self, id: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.id == id)
    }

    pub fn path_index(&self, id: &str) -> Option<usize> {
        self.paths.iter().position(|p| p.id == id)
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn od_index(&self, id: &str) -> Option<usize> {
        self.ods.iter().position(|o| o.id == id)
    }

    /// Length of a path in km.
    pub fn path_length(&self, path_id: &str) -> Result<f64, ScenarioError> {
        self.path_index(path_id)
            .map(|k| self.path_lengths[k])
            .ok_or_else(|| ScenarioError::UnknownPath(path_id.to_string()))
    }

    /// Blocks belonging to an OD pair.
    pub fn od_blocks(&self, od: usize) -> impl Iterator<Item = &PathBlock> {
        self.blocks.iter().filter(move |b| b.od == od)
    }

    pub fn total_demand(&self) -> f64 {
        self.ods.iter().map(|o| o.demand).sum()
    }

    /// Copy with a new per-OD demand vector.
    pub fn with_demand(&self, demand: &[f64]) -> Result<Scenario, ScenarioError> {
        if demand.len() != self.ods.len() {
            return Err(ScenarioError::invalid(
                "demand",
                format!("expected {} values, got {}", self.ods.len(), demand.len()),
            ));
        }
        let mut doc = self.to_doc();
        for (d, &v) in doc.demand.iter_mut().zip(demand) {
            d.demand = v;
        }
        Scenario::from_doc(doc)
    }

    /// Copy keeping only the paths of the named modes (and modes, links and
    /// ODs still referenced).
    pub fn restrict_to_modes(&self, name: &str, keep: &[&str]) -> Result<Scenario, ScenarioError> {
        let mut doc = self.to_doc();
        doc.scenario.name = name.to_string();
        doc.paths.retain(|p| keep.contains(&p.mode.as_str()));
        doc.modes.retain(|m| keep.contains(&m.id.as_str()));
        for class in &mut doc.classes {
            class.energy_price.retain(|m, _| keep.contains(&m.as_str()));
            class.occupancy.retain(|m, _| keep.contains(&m.as_str()));
        }
        for link in &mut doc.links {
            link.modes.retain(|m, _| keep.contains(&m.as_str()));
        }
        doc.links.retain(|l| !l.modes.is_empty());
        Scenario::from_doc(doc)
    }

    /// Canonical TOML serialization; reloading reproduces it byte for byte.
    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(&self.to_doc())?)
    }

    pub fn to_doc(&self) -> ScenarioDoc {
        let mode_id = |m: usize| self.modes[m].id.clone();
        ScenarioDoc {
            scenario: Header { name: self.name.clone() },
            parameters: ParametersDoc {
                theta_path: self.params.theta_path,
                theta_mode: self.params.theta_mode,
                beta_sf: self.params.beta_sf,
                alpha_sf: self.params.alpha_sf,
                logsum: self.params.logsum,
            },
            modes: self
                .modes
                .iter()
                .map(|m| ModeDoc {
                    id: m.id.clone(),
                    beta_tt: m.beta_tt,
                    congested: m.congested,
                    overlap_correction: m.overlap_correction,
                    fare_per_km_tolled: m.fare_per_km_tolled,
                    flat_fare: m.flat_fare,
                    energy: m.energy,
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc {
                    id: l.id.clone(),
                    from: l.from.clone(),
                    to: l.to.clone(),
                    length: l.length,
                    capacity: l.capacity,
                    category: l.category,
                    bpr_alpha: l.bpr_alpha,
                    bpr_beta: l.bpr_beta,
                    tolled: l.tolled,
                    modes: l
                        .modes
                        .iter()
                        .enumerate()
                        .filter_map(|(m, on)| {
                            on.map(|on| {
                                (
                                    mode_id(m),
                                    ModeOnLinkDoc {
                                        speed: on.speed,
                                        waiting: on.waiting,
                                        access: on.access,
                                    },
                                )
                            })
                        })
                        .collect(),
                })
                .collect(),
            paths: self
                .paths
                .iter()
                .map(|p| PathDoc {
                    id: p.id.clone(),
                    od: self.ods[p.od].id.clone(),
                    mode: mode_id(p.mode),
                    nodes: p.nodes.clone(),
                    links: p.links.iter().map(|&a| self.links[a].id.clone()).collect(),
                })
                .collect(),
            classes: self
                .classes
                .iter()
                .map(|c| ClassDoc {
                    id: c.id.clone(),
                    vot: c.vot,
                    vowt: c.vowt,
                    share: c.share,
                    energy_price: (0..self.modes.len()).map(|m| (mode_id(m), c.energy_price[m])).collect(),
                    occupancy: (0..self.modes.len()).map(|m| (mode_id(m), c.occupancy[m])).collect(),
                })
                .collect(),
            demand: self
                .ods
                .iter()
                .map(|o| DemandDoc {
                    od: o.id.clone(),
                    origin: o.origin.clone(),
                    destination: o.destination.clone(),
                    demand: o.demand,
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        let p = &doc.parameters;
        for (name, v) in [("theta_path", p.theta_path), ("theta_mode", p.theta_mode)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ScenarioError::invalid(format!("parameters.{name}"), "must be positive"));
            }
        }
        if !(p.alpha_sf.is_finite() && p.beta_sf.is_finite()) {
            return Err(ScenarioError::invalid("parameters", "commonality parameters must be finite"));
        }
        let params = ChoiceParams {
            theta_path: p.theta_path,
            theta_mode: p.theta_mode,
            beta_sf: p.beta_sf,
            alpha_sf: p.alpha_sf,
            logsum: p.logsum,
        };

        let modes = build_modes(&doc.modes)?;
        let mode_ix: HashMap<&str, usize> = modes.iter().enumerate().map(|(i, m)| (m.id.as_str(), i)).collect();

        let links = build_links(&doc.links, &mode_ix)?;
        let link_ix: HashMap<&str, usize> = links.iter().enumerate().map(|(i, l)| (l.id.as_str(), i)).collect();

        let mut ods = Vec::with_capacity(doc.demand.len());
        let mut od_ix = HashMap::new();
        for d in &doc.demand {
            if od_ix.insert(d.od.as_str(), ods.len()).is_some() {
                return Err(ScenarioError::Duplicate { kind: "OD pair", id: d.od.clone() });
            }
            if !(d.demand >= 0.0 && d.demand.is_finite()) {
                return Err(ScenarioError::invalid(format!("demand `{}`", d.od), "demand must be >= 0"));
            }
            ods.push(OdPair {
                id: d.od.clone(),
                origin: d.origin.clone(),
                destination: d.destination.clone(),
                demand: d.demand,
            });
        }

        let classes = build_classes(&doc.classes, &mode_ix)?;
        let paths = build_paths(&doc.paths, &links, &link_ix, &mode_ix, &od_ix, &ods, &modes)?;

        let mut blocks: Vec<PathBlock> = Vec::new();
        for od in 0..ods.len() {
            for mode in 0..modes.len() {
                let members: Vec<usize> = paths
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.od == od && p.mode == mode)
                    .map(|(k, _)| k)
                    .collect();
                if !members.is_empty() {
                    blocks.push(PathBlock { od, mode, paths: members });
                }
            }
            if !blocks.iter().any(|b| b.od == od) {
                return Err(ScenarioError::invalid(format!("OD `{}`", ods[od].id), "has no path"));
            }
        }

        let incidence = Incidence {
            n_links: links.len(),
            columns: paths.iter().map(|p| p.links.clone()).collect(),
        };
        let lengths: Vec<f64> = links.iter().map(|l| l.length).collect();
        let path_lengths = incidence.path_sums(&lengths);

        Ok(Scenario {
            name: doc.scenario.name,
            params,
            modes,
            links,
            paths,
            classes,
            ods,
            blocks,
            incidence,
            path_lengths,
        })
    }
}

fn build_modes(docs: &[ModeDoc]) -> Result<Vec<ModeSpec>, ScenarioError> {
    let mut seen = HashSet::new();
    let mut modes = Vec::with_capacity(docs.len());
    for m in docs {
        if !seen.insert(m.id.as_str()) {
            return Err(ScenarioError::Duplicate { kind: "mode", id: m.id.clone() });
        }
        let element = format!("mode `{}`", m.id);
        if !(m.beta_tt >= 0.0 && m.beta_tt.is_finite()) {
            return Err(ScenarioError::invalid(element, "beta_tt must be >= 0"));
        }
        if m.fare_per_km_tolled < 0.0 || m.flat_fare < 0.0 {
            return Err(ScenarioError::invalid(element, "fares must be >= 0"));
        }
        match m.energy {
            EnergyModel::SpeedQuadratic { kwh_per_unit, .. } if kwh_per_unit <= 0.0 => {
                return Err(ScenarioError::invalid(element, "kwh_per_unit must be positive"));
            }
            EnergyModel::Constant { kwh_per_pax_km } if kwh_per_pax_km < 0.0 => {
                return Err(ScenarioError::invalid(element, "energy use must be >= 0"));
            }
            _ => {}
        }
        modes.push(ModeSpec {
            id: m.id.clone(),
            beta_tt: m.beta_tt,
            congested: m.congested,
            overlap_correction: m.overlap_correction,
            fare_per_km_tolled: m.fare_per_km_tolled,
            flat_fare: m.flat_fare,
            energy: m.energy,
        });
    }
    Ok(modes)
}

fn build_links(docs: &[LinkDoc], mode_ix: &HashMap<&str, usize>) -> Result<Vec<LinkSpec>, ScenarioError> {
    let mut seen = HashSet::new();
    let mut links = Vec::with_capacity(docs.len());
    for l in docs {
        if !seen.insert(l.id.as_str()) {
            return Err(ScenarioError::Duplicate { kind: "link", id: l.id.clone() });
        }
        let element = format!("link `{}`", l.id);
        if !(l.length > 0.0 && l.length.is_finite()) {
            return Err(ScenarioError::invalid(element, "length must be positive"));
        }
        match l.capacity {
            Some(c) if !(c > 0.0 && c.is_finite()) => {
                return Err(ScenarioError::invalid(element, "capacity must be positive"));
            }
            None if l.bpr_alpha != 0.0 => {
                return Err(ScenarioError::invalid(element, "uncongested link must have bpr_alpha = 0"));
            }
            _ => {}
        }
        if l.bpr_alpha < 0.0 || l.bpr_beta < 0.0 {
            return Err(ScenarioError::invalid(element, "BPR parameters must be >= 0"));
        }
        let mut modes = vec![None; mode_ix.len()];
        for (mode, on) in &l.modes {
            let &m = mode_ix.get(mode.as_str()).ok_or_else(|| ScenarioError::Dangling {
                kind: "mode",
                id: mode.clone(),
                by: element.clone(),
            })?;
            if !(on.speed > 0.0 && on.speed.is_finite()) {
                return Err(ScenarioError::invalid(&element, format!("speed for mode `{mode}` must be positive")));
            }
            if on.waiting < 0.0 {
                return Err(ScenarioError::invalid(&element, "waiting time must be >= 0"));
            }
            modes[m] = Some(ModeOnLink {
                speed: on.speed,
                waiting: on.waiting,
                access: on.access,
            });
        }
        links.push(LinkSpec {
            id: l.id.clone(),
            from: l.from.clone(),
            to: l.to.clone(),
            length: l.length,
            capacity: l.capacity,
            category: l.category,
            bpr_alpha: l.bpr_alpha,
            bpr_beta: l.bpr_beta,
            tolled: l.tolled,
            modes,
        });
    }
    Ok(links)
}

fn build_classes(docs: &[ClassDoc], mode_ix: &HashMap<&str, usize>) -> Result<Vec<UserClass>, ScenarioError> {
    if docs.is_empty() {
        return Err(ScenarioError::invalid("classes", "at least one user class is required"));
    }
    let mut seen = HashSet::new();
    let mut classes = Vec::with_capacity(docs.len());
    for c in docs {
        if !seen.insert(c.id.as_str()) {
            return Err(ScenarioError::Duplicate { kind: "class", id: c.id.clone() });
        }
        let element = format!("class `{}`", c.id);
        if !(c.vot > 0.0 && c.vowt > 0.0) {
            return Err(ScenarioError::invalid(element, "VOT and VOWT must be positive"));
        }
        if !(0.0..=1.0).contains(&c.share) {
            return Err(ScenarioError::invalid(element, "share must lie in [0, 1]"));
        }
        let mut energy_price = vec![0.0; mode_ix.len()];
        let mut occupancy = vec![1.0; mode_ix.len()];
        for (table, target, what) in [
            (&c.energy_price, &mut energy_price, "energy price"),
            (&c.occupancy, &mut occupancy, "occupancy"),
        ] {
            for (mode, &v) in table {
                let &m = mode_ix.get(mode.as_str()).ok_or_else(|| ScenarioError::Dangling {
                    kind: "mode",
                    id: mode.clone(),
                    by: format!("{element} {what}"),
                })?;
                target[m] = v;
            }
        }
        if occupancy.iter().any(|&e| !(e > 0.0)) {
            return Err(ScenarioError::invalid(element, "occupancy must be positive"));
        }
        if energy_price.iter().any(|&z| z < 0.0) {
            return Err(ScenarioError::invalid(element, "energy price must be >= 0"));
        }
        classes.push(UserClass {
            id: c.id.clone(),
            vot: c.vot,
            vowt: c.vowt,
            share: c.share,
            energy_price,
            occupancy,
        });
    }
    let total: f64 = classes.iter().map(|c| c.share).sum();
    if (total - 1.0).abs() > SHARE_TOLERANCE {
        return Err(ScenarioError::invalid("classes", format!("shares sum to {total}, expected 1")));
    }
    Ok(classes)
}

#[allow(clippy::too_many_arguments)]
fn build_paths(
    docs: &[PathDoc],
    links: &[LinkSpec],
    link_ix: &HashMap<&str, usize>,
    mode_ix: &HashMap<&str, usize>,
    od_ix: &HashMap<&str, usize>,
    ods: &[OdPair],
    modes: &[ModeSpec],
) -> Result<Vec<PathSpec>, ScenarioError> {
    let mut by_nodes: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, l) in links.iter().enumerate() {
        by_nodes.entry((l.from.as_str(), l.to.as_str())).or_default().push(i);
    }
    let mut seen = HashSet::new();
    let mut paths = Vec::with_capacity(docs.len());
    for p in docs {
        let element = format!("path `{}`", p.id);
        if !seen.insert(p.id.as_str()) {
            return Err(ScenarioError::Duplicate { kind: "path", id: p.id.clone() });
        }
        let &mode = mode_ix.get(p.mode.as_str()).ok_or_else(|| ScenarioError::Dangling {
            kind: "mode",
            id: p.mode.clone(),
            by: element.clone(),
        })?;
        let &od = od_ix.get(p.od.as_str()).ok_or_else(|| ScenarioError::Dangling {
            kind: "OD pair",
            id: p.od.clone(),
            by: element.clone(),
        })?;

        let members: Vec<usize> = if !p.links.is_empty() {
            p.links
                .iter()
                .map(|id| {
                    link_ix.get(id.as_str()).copied().ok_or_else(|| ScenarioError::Dangling {
                        kind: "link",
                        id: id.clone(),
                        by: element.clone(),
                    })
                })
                .collect::<Result<_, _>>()?
        } else {
            if p.nodes.len() < 2 {
                return Err(ScenarioError::invalid(element, "needs at least two nodes or explicit links"));
            }
            p.nodes
                .windows(2)
                .map(|w| match by_nodes.get(&(w[0].as_str(), w[1].as_str())).map(Vec::as_slice) {
                    Some([only]) => Ok(*only),
                    Some(_) => Err(ScenarioError::invalid(
                        &element,
                        format!("parallel links {}->{}; list link ids explicitly", w[0], w[1]),
                    )),
                    None => Err(ScenarioError::Dangling {
                        kind: "link",
                        id: format!("{},{}", w[0], w[1]),
                        by: element.clone(),
                    }),
                })
                .collect::<Result<_, _>>()?
        };

        // Node sequence implied by the links; must chain and agree with `nodes` if given.
        let mut nodes = vec![links[members[0]].from.clone()];
        for &a in &members {
            if links[a].from != *nodes.last().unwrap() {
                return Err(ScenarioError::invalid(&element, format!("link `{}` does not continue the path", links[a].id)));
            }
            nodes.push(links[a].to.clone());
        }
        if !p.nodes.is_empty() && p.nodes != nodes {
            return Err(ScenarioError::invalid(&element, "node list disagrees with link list"));
        }
        let mut visited = HashSet::new();
        if !nodes.iter().all(|n| visited.insert(n.as_str())) {
            return Err(ScenarioError::invalid(&element, "path contains a loop"));
        }
        if nodes[0] != ods[od].origin || *nodes.last().unwrap() != ods[od].destination {
            return Err(ScenarioError::invalid(&element, format!("does not join the endpoints of OD `{}`", ods[od].id)));
        }
        for &a in &members {
            if !links[a].allows(mode) {
                return Err(ScenarioError::invalid(
                    &element,
                    format!("uses link `{}` which does not allow mode `{}`", links[a].id, modes[mode].id),
                ));
            }
        }
        paths.push(PathSpec {
            id: p.id.clone(),
            od,
            mode,
            nodes,
            links: members,
        });
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_link_incidence_is_identity() {
        let s = builtin("two-link").unwrap();
        assert_eq!(s.ods().len(), 1);
        assert_eq!(s.paths().len(), 2);
        assert_eq!(s.incidence().dense(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn nd_multimodal_dimensions() {
        let s = builtin("nd-multimodal").unwrap();
        assert_eq!(s.ods().len(), 4);
        assert_eq!(s.paths().len(), 29);
        assert_eq!(s.modes().len(), 3);
        assert_eq!(s.classes().len(), 2);
        for id in ["26", "27", "28", "29"] {
            assert!(s.path_index(id).is_some(), "path {id}");
        }
    }

    #[test]
    fn nd_car_only_dimensions() {
        let s = builtin("nd-car-only").unwrap();
        assert_eq!(s.paths().len(), 25);
        assert!((s.total_demand() - 8000.0).abs() < 1e-12);
        assert!(s.paths().iter().all(|p| s.modes()[p.mode].id == "car"));
    }

    #[test]
    fn path_lengths() {
        let s = builtin("nd-car-only").unwrap();
        assert_eq!(s.path_length("1").unwrap(), 5.0);
        assert_eq!(s.path_length("6").unwrap(), 9.0);
        let two = builtin("two-link").unwrap();
        assert_eq!(two.path_length("1").unwrap(), two.links()[0].length);
        assert!(matches!(s.path_length("99"), Err(ScenarioError::UnknownPath(_))));
    }

    #[test]
    fn incidence_column_and_loading() {
        let s = builtin("nd-car-only").unwrap();
        let k = s.path_index("1").unwrap();
        assert_eq!(s.incidence().column(k).len(), 5);
        let mut h = vec![0.0; s.paths().len()];
        h[k] = 1.0;
        let f = s.incidence().link_flows(&h);
        assert_eq!(f.iter().filter(|&&x| x == 1.0).count(), 5);
        assert_eq!(f.iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn metro_link_rejected_for_car() {
        let mut doc = builtin("nd-multimodal").unwrap().to_doc();
        let p = doc.paths.iter_mut().find(|p| p.id == "28").unwrap();
        p.mode = "car".into();
        let err = Scenario::from_doc(doc).unwrap_err().to_string();
        assert!(err.contains("path `28`"), "{err}");
    }

    #[test]
    fn dangling_and_duplicate_references() {
        let base = builtin("nd-car-only").unwrap().to_doc();

        let mut doc = base.clone();
        doc.paths[0].od = "ZZ".into();
        assert!(matches!(Scenario::from_doc(doc), Err(ScenarioError::Dangling { kind: "OD pair", .. })));

        let mut doc = base.clone();
        doc.paths[1].id = doc.paths[0].id.clone();
        assert!(matches!(Scenario::from_doc(doc), Err(ScenarioError::Duplicate { kind: "path", .. })));

        let mut doc = base.clone();
        doc.paths[0].nodes = vec!["A".into(), "2".into(), "9".into()];
        doc.paths[0].links.clear();
        let err = Scenario::from_doc(doc).unwrap_err();
        assert!(matches!(err, ScenarioError::Dangling { kind: "link", .. }), "{err}");
    }

    #[test]
    fn invariant_breaches_are_named() {
        let base = builtin("nd-car-only").unwrap().to_doc();

        let mut doc = base.clone();
        doc.links[0].length = 0.0;
        assert!(Scenario::from_doc(doc).unwrap_err().to_string().contains("link `B,1`"));

        let mut doc = base.clone();
        doc.classes[0].share = 0.6;
        assert!(Scenario::from_doc(doc).unwrap_err().to_string().contains("shares"));

        let mut doc = base.clone();
        doc.parameters.theta_path = 0.0;
        assert!(Scenario::from_doc(doc).is_err());

        let mut doc = base.clone();
        doc.demand[0].demand = -1.0;
        assert!(Scenario::from_doc(doc).is_err());

        let mut doc = base;
        doc.paths.retain(|p| p.od != "BC");
        assert!(Scenario::from_doc(doc).unwrap_err().to_string().contains("OD `BC`"));
    }

    #[test]
    fn parse_errors_surface() {
        assert!(matches!(load_scenario("not = [valid"), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn canonical_round_trip() {
        for name in BUILTIN_NAMES {
            let s = builtin(name).unwrap();
            let text = s.to_toml_string().unwrap();
            let again = load_scenario(&text).unwrap();
            assert_eq!(again, s);
            assert_eq!(again.to_toml_string().unwrap(), text);
        }
    }

    #[test]
    fn car_only_is_filtered_multimodal() {
        let mm = builtin("nd-multimodal").unwrap();
        let car = builtin("nd-car-only").unwrap();
        let mm_car: HashSet<(String, Vec<String>)> = mm
            .paths()
            .iter()
            .filter(|p| mm.modes()[p.mode].id == "car")
            .map(|p| (p.id.clone(), p.nodes.clone()))
            .collect();
        let car_set: HashSet<(String, Vec<String>)> = car.paths().iter().map(|p| (p.id.clone(), p.nodes.clone())).collect();
        assert_eq!(mm_car, car_set);
    }

    #[test]
    fn od_exclusive_links_conserve_path_totals() {
        // Freeway approach B,1 is used only by BD and BC paths starting on it.
        let s = builtin("nd-car-only").unwrap();
        let b1 = s.link_index("B,1").unwrap();
        let h: Vec<f64> = (0..s.paths().len()).map(|k| 10.0 + k as f64).collect();
        let f = s.incidence().link_flows(&h);
        let through: f64 = s
            .paths()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.links.contains(&b1))
            .map(|(k, _)| h[k])
            .sum();
        assert!((f[b1] - through).abs() < 1e-12);

        let two = builtin("two-link").unwrap();
        let f = two.incidence().link_flows(&[600.0, 400.0]);
        assert_eq!(f, vec![600.0, 400.0]);
    }
}
