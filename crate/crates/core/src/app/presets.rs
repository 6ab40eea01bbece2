use std::collections::BTreeMap;

use crate::frac::OustaloupSettings;
use crate::tuning::{PsoSettings, Structure};

use super::config::{
    ControllerSection, EvaluateSection, ExperimentSection, PathsSection, PlantDomain, PlantSection, ReferenceSection,
    TuneConfig,
};

pub const PRESETS: [(&str, &str); 3] = [
    ("example1-io", "third-order process, IO-PID, 80 deg / 1 rad/s reference"),
    ("example1-fo", "third-order process, FO-PID, 80 deg / 1 rad/s reference"),
    ("example2", "soft-robot model, FO-PI, 60 deg / 12 rad/s reference"),
];

const EXAMPLE1_FO_TUNED: [f64; 5] = [1.3239, 1.0370, 1.1010, 0.23253, 1.5465];
const EXAMPLE1_IO_TUNED: [f64; 3] = [0.80397, 1.2125, 0.33528];
const EXAMPLE2_TUNED: [f64; 3] = [0.88086, 3.8808, 0.47498];
const EXAMPLE2_ISO_M: [f64; 3] = [1.76, 4.7872, 0.81];

fn example1(structure: Structure) -> TuneConfig {
    let (theta0, upper, tuned) = match structure {
        Structure::IoPid => (vec![1.0, 0.0, 0.0], vec![5.0; 3], EXAMPLE1_IO_TUNED.to_vec()),
        _ => (
            vec![1.0, 0.0, 1.0, 0.0, 1.0],
            vec![5.0, 5.0, 2.0, 5.0, 2.0],
            EXAMPLE1_FO_TUNED.to_vec(),
        ),
    };
    TuneConfig {
        ts: 0.01,
        j_threshold: None,
        reference: ReferenceSection {
            phi_m: 80.0,
            omega_c: 1.0,
        },
        oustaloup: OustaloupSettings {
            order: 5,
            omega_b: 1e-4,
            omega_h: 1e4,
        },
        controller: ControllerSection {
            structure,
            lower: vec![0.0; theta0.len()],
            theta0,
            upper,
            tau: None,
        },
        pso: PsoSettings::default(),
        plant: Some(PlantSection {
            domain: PlantDomain::Continuous,
            num: vec![9.0],
            den: vec![1.0, 3.0, 11.0, 9.0],
        }),
        experiment: ExperimentSection {
            horizon: 40.0,
            amplitude: 1.0,
        },
        evaluate: EvaluateSection {
            gains: vec![0.5, 1.0, 1.5],
            baselines: BTreeMap::from([("tuned".to_string(), tuned)]),
        },
        paths: PathsSection::default(),
    }
}

fn example2() -> TuneConfig {
    TuneConfig {
        ts: 0.01,
        j_threshold: None,
        reference: ReferenceSection {
            phi_m: 60.0,
            omega_c: 12.0,
        },
        oustaloup: OustaloupSettings {
            order: 7,
            omega_b: 1e-3,
            omega_h: 1e6,
        },
        controller: ControllerSection {
            structure: Structure::FoPi,
            theta0: vec![1.0, 0.0, 1.0],
            lower: vec![0.0; 3],
            upper: vec![15.0, 15.0, 2.0],
            tau: None,
        },
        pso: PsoSettings::default(),
        plant: Some(PlantSection {
            domain: PlantDomain::Continuous,
            num: vec![6.0 * 54.893316, 6.0 * 2048.6337],
            den: vec![1.0, 67.066887, 2048.7922, 0.0],
        }),
        experiment: ExperimentSection {
            horizon: 2.0,
            amplitude: 1.0,
        },
        evaluate: EvaluateSection {
            gains: vec![0.5, 1.0, 1.5],
            baselines: BTreeMap::from([
                ("tuned".to_string(), EXAMPLE2_TUNED.to_vec()),
                ("iso_m".to_string(), EXAMPLE2_ISO_M.to_vec()),
            ]),
        },
        paths: PathsSection::default(),
    }
}

pub fn preset(name: &str) -> Option<TuneConfig> {
    match name {
        "example1-io" => Some(example1(Structure::IoPid)),
        "example1-fo" => Some(example1(Structure::FoPid)),
        "example2" => Some(example2()),
        _ => None,
    }
}
