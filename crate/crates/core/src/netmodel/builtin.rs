use std::collections::BTreeMap;

use super::file::{ClassDoc, DemandDoc, Header, LinkDoc, ModeDoc, ModeOnLinkDoc, ParametersDoc, PathDoc, ScenarioDoc};
use super::{EnergyModel, LinkCategory, LogsumForm, Scenario};
use crate::error::ScenarioError;

pub const BUILTIN_NAMES: [&str; 3] = ["two-link", "nd-car-only", "nd-multimodal"];

/// Per-OD passenger demand of the car-only Nguyen-Dupuis scenario.
const ND_OD_DEMAND: f64 = 2000.0;

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "two-link" => Scenario::from_doc(two_link()),
        "nd-multimodal" => Scenario::from_doc(nguyen_dupuis()),
        "nd-car-only" => Scenario::from_doc(nguyen_dupuis())?.restrict_to_modes("nd-car-only", &["car"]),
        other => Err(ScenarioError::UnknownBuiltin(other.to_string())),
    }
}

fn on(speed: f64) -> ModeOnLinkDoc {
    ModeOnLinkDoc {
        speed,
        waiting: 0.0,
        access: false,
    }
}

fn walk() -> ModeOnLinkDoc {
    ModeOnLinkDoc {
        speed: 5.0,
        waiting: 0.0,
        access: true,
    }
}

fn link(id: &str, length: f64, capacity: Option<f64>, category: LinkCategory, alpha: f64, modes: &[(&str, ModeOnLinkDoc)]) -> LinkDoc {
    let (from, to) = id.split_once(',').expect("link ids are `from,to`");
    LinkDoc {
        id: id.to_string(),
        from: from.to_string(),
        to: to.to_string(),
        length,
        capacity,
        category,
        bpr_alpha: alpha,
        bpr_beta: 4.0,
        tolled: category == LinkCategory::Highway,
        modes: modes.iter().map(|(m, o)| (m.to_string(), o.clone())).collect(),
    }
}

fn nguyen_dupuis() -> ScenarioDoc {
    use LinkCategory::*;
    let mut links = Vec::new();
    for (id, len) in [("B,1", 3.0), ("1,5", 5.0), ("A,6", 3.0), ("6,9", 3.0), ("9,C", 1.0)] {
        links.push(link(id, len, Some(3600.0), Highway, 0.15, &[("car", on(120.0))]));
    }
    for id in ["A,2", "2,3", "3,4", "4,5", "5,D", "4,8", "8,C"] {
        links.push(link(
            id,
            1.0,
            Some(2400.0),
            UrbanSecondary,
            2.0,
            &[("car", on(50.0)), ("e-bike", on(15.0)), ("metro", walk())],
        ));
    }
    for id in ["B,2", "1,3", "2,6", "3,7", "6,7", "7,8", "8,D"] {
        links.push(link(id, 1.0, Some(1600.0), UrbanLocal, 2.0, &[("car", on(30.0)), ("metro", walk())]));
    }
    links.push(link("2,10", 0.3, None, Walk, 0.0, &[("metro", walk())]));
    links.push(link(
        "10,11",
        4.0,
        None,
        Metro,
        0.0,
        &[(
            "metro",
            ModeOnLinkDoc {
                speed: 70.0,
                waiting: 0.067,
                access: false,
            },
        )],
    ));
    links.push(link("11,D", 0.3, None, Walk, 0.0, &[("metro", walk())]));

    let path_table: [(&str, &str, &str, &str); 29] = [
        ("1", "AD", "car", "A,2,3,4,5,D"),
        ("2", "AD", "car", "A,2,3,4,8,D"),
        ("3", "AD", "car", "A,2,3,7,8,D"),
        ("4", "AD", "car", "A,2,6,7,8,D"),
        ("5", "AD", "car", "A,6,7,8,D"),
        ("6", "BD", "car", "B,1,5,D"),
        ("7", "BD", "car", "B,1,3,4,5,D"),
        ("8", "BD", "car", "B,1,3,4,8,D"),
        ("9", "BD", "car", "B,1,3,7,8,D"),
        ("10", "BD", "car", "B,2,3,4,5,D"),
        ("11", "BD", "car", "B,2,3,4,8,D"),
        ("12", "BD", "car", "B,2,3,7,8,D"),
        ("13", "BD", "car", "B,2,6,7,8,D"),
        ("14", "AC", "car", "A,6,9,C"),
        ("15", "AC", "car", "A,6,7,8,C"),
        ("16", "AC", "car", "A,2,3,4,8,C"),
        ("17", "AC", "car", "A,2,3,7,8,C"),
        ("18", "AC", "car", "A,2,6,7,8,C"),
        ("19", "AC", "car", "A,2,6,9,C"),
        ("20", "BC", "car", "B,1,3,4,8,C"),
        ("21", "BC", "car", "B,1,3,7,8,C"),
        ("22", "BC", "car", "B,2,3,4,8,C"),
        ("23", "BC", "car", "B,2,3,7,8,C"),
        ("24", "BC", "car", "B,2,6,7,8,C"),
        ("25", "BC", "car", "B,2,6,9,C"),
        ("26", "AD", "e-bike", "A,2,3,4,5,D"),
        ("27", "AC", "e-bike", "A,2,3,4,8,C"),
        ("28", "AD", "metro", "A,2,10,11,D"),
        ("29", "BD", "metro", "B,2,10,11,D"),
    ];
    let paths = path_table
        .iter()
        .map(|&(id, od, mode, nodes)| PathDoc {
            id: id.to_string(),
            od: od.to_string(),
            mode: mode.to_string(),
            nodes: nodes.split(',').map(str::to_string).collect(),
            links: Vec::new(),
        })
        .collect();

    let per_mode = |car: f64, bike: f64, metro: f64| -> BTreeMap<String, f64> {
        [("car", car), ("e-bike", bike), ("metro", metro)]
            .into_iter()
            .map(|(m, v)| (m.to_string(), v))
            .collect()
    };
    let classes = vec![
        ClassDoc {
            id: "1".into(),
            vot: 5.0,
            vowt: 10.0,
            share: 0.7,
            energy_price: per_mode(1.60, 0.25, 0.0),
            occupancy: per_mode(1.2, 1.0, 1.0),
        },
        ClassDoc {
            id: "2".into(),
            vot: 10.0,
            vowt: 20.0,
            share: 0.3,
            energy_price: per_mode(1.60, 0.25, 0.0),
            occupancy: per_mode(1.2, 1.0, 1.0),
        },
    ];

    let demand = [("AD", "A", "D"), ("BD", "B", "D"), ("AC", "A", "C"), ("BC", "B", "C")]
        .iter()
        .map(|&(od, o, d)| DemandDoc {
            od: od.into(),
            origin: o.into(),
            destination: d.into(),
            demand: ND_OD_DEMAND,
        })
        .collect();

    ScenarioDoc {
        scenario: Header {
            name: "nd-multimodal".into(),
        },
        parameters: ParametersDoc {
            theta_path: 5.0,
            theta_mode: 1.0,
            beta_sf: 1.0,
            alpha_sf: 1.0,
            logsum: LogsumForm::AsPrinted,
        },
        modes: vec![
            ModeDoc {
                id: "car".into(),
                beta_tt: 1.0,
                congested: true,
                overlap_correction: true,
                fare_per_km_tolled: 0.08,
                flat_fare: 0.0,
                energy: EnergyModel::ICE,
            },
            ModeDoc {
                id: "e-bike".into(),
                beta_tt: 3.0,
                congested: false,
                overlap_correction: false,
                fare_per_km_tolled: 0.0,
                flat_fare: 0.0,
                energy: EnergyModel::E_BIKE,
            },
            ModeDoc {
                id: "metro".into(),
                beta_tt: 1.5,
                congested: false,
                overlap_correction: false,
                fare_per_km_tolled: 0.0,
                flat_fare: 2.0,
                energy: EnergyModel::METRO,
            },
        ],
        links,
        paths,
        classes,
        demand,
    }
}

/// Two parallel single-link paths with linear costs `10 + 0.01 f` and
/// `15 + 0.005 f` (one class with VOT 1 euro/h, no energy cost), d = 1000.
fn two_link() -> ScenarioDoc {
    let mk = |id: &str, length: f64, capacity: f64| LinkDoc {
        id: id.into(),
        from: "O".into(),
        to: "D".into(),
        length,
        capacity: Some(capacity),
        category: LinkCategory::UrbanSecondary,
        bpr_alpha: 1.0,
        bpr_beta: 1.0,
        tolled: false,
        modes: [("car".to_string(), on(1.0))].into_iter().collect(),
    };
    ScenarioDoc {
        scenario: Header { name: "two-link".into() },
        parameters: ParametersDoc {
            theta_path: 5.0,
            theta_mode: 1.0,
            beta_sf: 1.0,
            alpha_sf: 1.0,
            logsum: LogsumForm::Scaled,
        },
        modes: vec![ModeDoc {
            id: "car".into(),
            beta_tt: 1.0,
            congested: true,
            overlap_correction: true,
            fare_per_km_tolled: 0.0,
            flat_fare: 0.0,
            energy: EnergyModel::Constant { kwh_per_pax_km: 0.0 },
        }],
        links: vec![mk("a1", 10.0, 1000.0), mk("a2", 15.0, 3000.0)],
        paths: ["1", "2"]
            .iter()
            .zip(["a1", "a2"])
            .map(|(&id, l)| PathDoc {
                id: id.into(),
                od: "OD".into(),
                mode: "car".into(),
                nodes: Vec::new(),
                links: vec![l.into()],
            })
            .collect(),
        classes: vec![ClassDoc {
            id: "1".into(),
            vot: 1.0,
            vowt: 1.0,
            share: 1.0,
            energy_price: BTreeMap::new(),
            occupancy: BTreeMap::new(),
        }],
        demand: vec![DemandDoc {
            od: "OD".into(),
            origin: "O".into(),
            destination: "D".into(),
            demand: 1000.0,
        }],
    }
}
