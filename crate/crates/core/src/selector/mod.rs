//! Accelerator selection.
//!
//! Without calibration data the decision follows a fixed rule table derived
//! from measured crossovers between the three fabrics:
//!
//! | rule | condition                                   | choice |
//! |------|---------------------------------------------|--------|
//! | R1   | real-time experiment                        | DFE    |
//! | R2   | NGJ                                         | DFE    |
//! | R3   | SGJ, TYPE-I                                 | DFE if n < 480, else GPU |
//! | R4   | SGJ, TYPE-II                                | GPU    |
//! | R5   | RGJ, C = 100 %                              | TYPE-I: DFE; TYPE-II: GPU if n >= 4800, else DFE |
//! | R6   | RGJ, C < 100 %, TYPE-I                      | PHI if (C >= 75 % and n >= 960) or (50 % <= C < 75 % and n >= 864) or (C < 50 % and n >= 672), else DFE |
//! | R7   | RGJ, C < 100 %, TYPE-II                     | GPU if (C < 50 % and n >= 3840) or (C >= 50 % and n >= 4800), else PHI |
//!
//! Density is bucketed to the nearest of 0/25/50/75/100 % for rule lookup.
//! With calibration, the fabric with the smallest interpolated seconds per
//! step wins (R1 still takes precedence).

mod calibration;
mod realtime;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EvokedInputSchedule, UseCase};

pub use calibration::{Calibration, CalibrationPoint, CALIBRATION_HEADER};
pub use realtime::{rt_max_network, rt_max_network_default, REAL_TIME_STEP_SECONDS};

pub const MIN_NETWORK: usize = 96;
pub const TYPE_I_MAX: usize = 960;
pub const MAX_NETWORK: usize = 7680;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fabric {
    #[serde(rename = "DFE")]
    Dfe,
    #[serde(rename = "PHI")]
    Phi,
    #[serde(rename = "GPU")]
    Gpu,
}

impl Fabric {
    pub const ALL: [Fabric; 3] = [Fabric::Dfe, Fabric::Phi, Fabric::Gpu];

    /// Nominal thermal design power.
    pub fn tdp_watts(self) -> f64 {
        match self {
            Fabric::Dfe => 140.0,
            Fabric::Phi => 225.0,
            Fabric::Gpu => 250.0,
        }
    }
}

impl fmt::Display for Fabric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fabric::Dfe => "DFE",
            Fabric::Phi => "PHI",
            Fabric::Gpu => "GPU",
        })
    }
}

impl FromStr for Fabric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dfe" => Ok(Fabric::Dfe),
            "phi" => Ok(Fabric::Phi),
            "gpu" => Ok(Fabric::Gpu),
            other => Err(Error::Config(format!("unknown fabric {other:?} (expected dfe, phi or gpu)"))),
        }
    }
}

fn default_density() -> f64 {
    1.0
}

/// One experiment as submitted for selection or planning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub use_case: UseCase,
    pub n: usize,
    /// Ignored for NGJ.
    #[serde(default = "default_density")]
    pub density: f64,
    /// Simulated (brain) time in seconds.
    #[serde(default)]
    pub brain_seconds: f64,
    #[serde(default)]
    pub real_time: bool,
    #[serde(default)]
    pub inputs: EvokedInputSchedule,
}

impl ExperimentSpec {
    pub fn new(use_case: UseCase, n: usize, density: f64) -> Self {
        ExperimentSpec {
            use_case,
            n,
            density,
            brain_seconds: 0.0,
            real_time: false,
            inputs: EvokedInputSchedule::default(),
        }
    }

    pub fn real_time(mut self) -> Self {
        self.real_time = true;
        self
    }

    pub fn with_brain_seconds(mut self, s: f64) -> Self {
        self.brain_seconds = s;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    #[serde(rename = "TYPE_I")]
    TypeI,
    #[serde(rename = "TYPE_II")]
    TypeII,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentClass {
    pub scale: Scale,
    pub use_case: UseCase,
    pub n: usize,
    pub density: f64,
    pub real_time: bool,
}

/// TYPE-I for 96..=960 cells (960 included), TYPE-II for 961..=7680.
pub fn classify(spec: &ExperimentSpec) -> Result<ExperimentClass> {
    if !(MIN_NETWORK..=MAX_NETWORK).contains(&spec.n) {
        return Err(Error::UnsupportedSize { n: spec.n });
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(Error::Domain(format!("connectivity density {} outside [0, 1]", spec.density)));
    }
    Ok(ExperimentClass {
        scale: if spec.n <= TYPE_I_MAX { Scale::TypeI } else { Scale::TypeII },
        use_case: spec.use_case,
        n: spec.n,
        density: spec.density,
        real_time: spec.real_time,
    })
}

/// Nearest of 0, 0.25, 0.5, 0.75, 1.0 (halves round up).
pub fn density_bucket(density: f64) -> f64 {
    (density.clamp(0.0, 1.0) * 4.0).round() / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionDecision {
    pub fabric: Fabric,
    /// `rule:R<k>` or `calibration-argmin`.
    pub reason: String,
    pub predicted_sec_per_step: Option<f64>,
}

/// Rule-table decision for a classified experiment.
pub fn rule_select(class: &ExperimentClass) -> (Fabric, Rule) {
    use Fabric::*;
    use Scale::*;

    if class.real_time {
        return (Dfe, Rule::R1);
    }
    let n = class.n;
    let c = density_bucket(class.density);
    match (class.use_case, class.scale) {
        (UseCase::Ngj, _) => (Dfe, Rule::R2),
        (UseCase::Sgj, TypeI) => (if n < 480 { Dfe } else { Gpu }, Rule::R3),
        (UseCase::Sgj, TypeII) => (Gpu, Rule::R4),
        (UseCase::Rgj, TypeI) if c == 1.0 => (Dfe, Rule::R5),
        (UseCase::Rgj, TypeII) if c == 1.0 => (if n >= 4800 { Gpu } else { Dfe }, Rule::R5),
        (UseCase::Rgj, TypeI) => {
            let phi = (c >= 0.75 && n >= 960) || ((0.5..0.75).contains(&c) && n >= 864) || (c < 0.5 && n >= 672);
            (if phi { Phi } else { Dfe }, Rule::R6)
        }
        (UseCase::Rgj, TypeII) => {
            let gpu = (c < 0.5 && n >= 3840) || (c >= 0.5 && n >= 4800);
            (if gpu { Gpu } else { Phi }, Rule::R7)
        }
    }
}

/// Chooses a fabric. Real-time experiments always go to the DFE; otherwise
/// calibration (when it covers at least one fabric) decides by smallest
/// predicted step time, and the rule table decides in its absence.
pub fn select(class: &ExperimentClass, calibration: Option<&Calibration>) -> SelectionDecision {
    let rule_decision = |(fabric, rule): (Fabric, Rule)| SelectionDecision {
        fabric,
        reason: format!("rule:{rule:?}"),
        predicted_sec_per_step: calibration.and_then(|c| c.sec_per_step(fabric, class.use_case, class.density, class.n)),
    };
    if class.real_time {
        return rule_decision((Fabric::Dfe, Rule::R1));
    }
    if let Some(cal) = calibration {
        let best = Fabric::ALL
            .iter()
            .filter_map(|&f| cal.sec_per_step(f, class.use_case, class.density, class.n).map(|t| (f, t)))
            .fold(None::<(Fabric, f64)>, |best, (f, t)| match best {
                Some((_, bt)) if bt <= t => best,
                _ => Some((f, t)),
            });
        if let Some((fabric, t)) = best {
            return SelectionDecision {
                fabric,
                reason: "calibration-argmin".into(),
                predicted_sec_per_step: Some(t),
            };
        }
    }
    rule_decision(rule_select(class))
}
