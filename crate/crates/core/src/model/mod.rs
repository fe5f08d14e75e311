//! Domain types and numerical kernels of the neuron model.

pub mod cell;
pub mod gap_junction;
pub mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cell::{cell_update, CellKernel, DEFAULT_DT_MS};
pub use gap_junction::{gj_current_realistic, gj_current_simplified};
pub use state::{ConductanceSet, NeuronState, DEFAULT_CONDUCTANCES};

/// Gap-junction modelling detail of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseCase {
    /// Realistic gap junctions (nonlinear kernel).
    Rgj,
    /// Simplified gap junctions (linear accumulation).
    Sgj,
    /// No gap junctions; cells are independent.
    Ngj,
}

impl UseCase {
    pub const ALL: [UseCase; 3] = [UseCase::Rgj, UseCase::Sgj, UseCase::Ngj];

    pub fn has_connectivity(self) -> bool {
        self != UseCase::Ngj
    }
}

impl fmt::Display for UseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UseCase::Rgj => "RGJ",
            UseCase::Sgj => "SGJ",
            UseCase::Ngj => "NGJ",
        })
    }
}

impl FromStr for UseCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgj" => Ok(UseCase::Rgj),
            "sgj" => Ok(UseCase::Sgj),
            "ngj" => Ok(UseCase::Ngj),
            other => Err(Error::Config(format!("unknown use case {other:?} (expected rgj, sgj or ngj)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PulseTarget {
    #[default]
    All,
    Neurons(Vec<usize>),
}

/// Constant current applied on steps `start_step..end_step` (half-open).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start_step: u64,
    pub end_step: u64,
    /// µA/cm²
    pub amplitude: f64,
    #[serde(default)]
    pub target: PulseTarget,
}

impl Pulse {
    pub fn uniform(start_step: u64, end_step: u64, amplitude: f64) -> Self {
        Pulse {
            start_step,
            end_step,
            amplitude,
            target: PulseTarget::All,
        }
    }

    #[inline]
    pub fn active_at(&self, step: u64) -> bool {
        self.start_step <= step && step < self.end_step
    }
}

impl FromStr for Pulse {
    type Err = Error;

    /// `start:end:amplitude`, applied to every neuron.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("pulse {s:?} must be start_step:end_step:amplitude"));
        let [start, end, amp] = parts.as_slice() else {
            return Err(bad());
        };
        let pulse = Pulse::uniform(
            start.trim().parse().map_err(|_| bad())?,
            end.trim().parse().map_err(|_| bad())?,
            amp.trim().parse().map_err(|_| bad())?,
        );
        pulse.validate(None)?;
        Ok(pulse)
    }
}

impl Pulse {
    fn validate(&self, n: Option<usize>) -> Result<()> {
        if self.start_step > self.end_step {
            return Err(Error::Config(format!(
                "pulse start_step {} exceeds end_step {}",
                self.start_step, self.end_step
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Config(format!("pulse amplitude {} is not finite", self.amplitude)));
        }
        if let (Some(n), PulseTarget::Neurons(ids)) = (n, &self.target) {
            if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
                return Err(Error::Config(format!("pulse targets neuron {bad} but the network has {n} cells")));
            }
        }
        Ok(())
    }
}

/// Externally evoked input to the network.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvokedInputSchedule {
    pub pulses: Vec<Pulse>,
}

impl EvokedInputSchedule {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        EvokedInputSchedule { pulses }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.pulses.iter().try_for_each(|p| p.validate(Some(n)))
    }

    pub fn is_active(&self, step: u64) -> bool {
        self.pulses.iter().any(|p| p.active_at(step))
    }

    /// Writes the per-neuron evoked current for `step` into `out`.
    /// Overlapping pulses add, in schedule order.
    pub fn fill(&self, step: u64, out: &mut [f64]) {
        out.fill(0.0);
        for p in self.pulses.iter().filter(|p| p.active_at(step)) {
            match &p.target {
                PulseTarget::All => out.iter_mut().for_each(|x| *x += p.amplitude),
                PulseTarget::Neurons(ids) => {
                    for &i in ids {
                        out[i] += p.amplitude;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn use_case_parse_and_display() {
        assert_eq!("RGJ".parse::<UseCase>().unwrap(), UseCase::Rgj);
        assert_eq!("ngj".parse::<UseCase>().unwrap().to_string(), "NGJ");
        assert!("xyz".parse::<UseCase>().is_err());
        assert!(!UseCase::Ngj.has_connectivity());
    }

    #[test]
    fn pulse_flag_parsing() {
        let p: Pulse = "1000:1500:6.0".parse().unwrap();
        assert_eq!(p, Pulse::uniform(1000, 1500, 6.0));
        assert!(!p.active_at(999) && p.active_at(1000) && p.active_at(1499) && !p.active_at(1500));
        assert!("1500:1000:6".parse::<Pulse>().is_err());
        assert!("1:2".parse::<Pulse>().is_err());
        assert!("1:2:inf".parse::<Pulse>().is_err());
    }

    #[test]
    fn schedule_fill_targets_and_overlap() {
        let sched = EvokedInputSchedule::new(vec![
            Pulse::uniform(0, 10, 1.0),
            Pulse {
                start_step: 5,
                end_step: 6,
                amplitude: 2.5,
                target: PulseTarget::Neurons(vec![0, 2]),
            },
        ]);
        let mut out = vec![0.0; 3];
        sched.fill(5, &mut out);
        assert_eq!(out, vec![3.5, 1.0, 3.5]);
        sched.fill(10, &mut out);
        assert_eq!(out, vec![0.0; 3]);
        assert!(sched.validate(3).is_ok());
        assert!(sched.validate(2).is_err());
    }

    #[test]
    fn schedule_json_shape() {
        let sched = EvokedInputSchedule::new(vec![Pulse::uniform(1, 2, 3.0)]);
        let json = serde_json::to_string(&sched).unwrap();
        assert_eq!(json, r#"[{"start_step":1,"end_step":2,"amplitude":3.0,"target":"all"}]"#);
        let back: EvokedInputSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sched);
    }
}
