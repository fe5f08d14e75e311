//! Analytic per-step workload characterization.
//!
//! The planning constants are the profiled per-neuron figures of the
//! reference application: 859 FLOPs for the cell compartments, 12 FLOPs per
//! realistic gap junction and 4 per simplified one; 19 state, 1 evoked-input,
//! 20 conductance and 1 axon-output access per neuron plus 1 per connection.
//! They are used as-is even though the shipped surrogate kernels execute a
//! different number of operations; [`SurrogateOpTable`] documents that delta
//! and the engine's counting scalar measures it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::cell::CELL_UPDATE_OPS;
use crate::model::gap_junction::{REALISTIC_TERM_OPS, SIMPLIFIED_TERM_OPS};
use crate::model::state::{CONDUCTANCE_LEN, STATE_LEN};
use crate::model::UseCase;

pub const CELL_FLOPS: u64 = 859;
pub const RGJ_FLOPS_PER_CONNECTION: u64 = 12;
pub const SGJ_FLOPS_PER_CONNECTION: u64 = 4;

pub const EVOKED_ACCESSES: u64 = 1;
pub const AXON_OUTPUT_ACCESSES: u64 = 1;
/// Fixed accesses per neuron: states, evoked input, conductances, axon output.
pub const NEURON_ACCESSES: u64 = STATE_LEN as u64 + EVOKED_ACCESSES + CONDUCTANCE_LEN as u64 + AXON_OUTPUT_ACCESSES;

fn check_density(density: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Domain(format!("connectivity density {density} outside [0, 1]")));
    }
    Ok(())
}

/// `N^2 * C` rounded to the nearest integer (half away from zero). NGJ has
/// none.
pub fn connection_count(use_case: UseCase, n: usize, density: f64) -> Result<u64> {
    check_density(density)?;
    if !use_case.has_connectivity() {
        return Ok(0);
    }
    Ok(((n as f64) * (n as f64) * density).round() as u64)
}

pub fn gj_flops_per_connection(use_case: UseCase) -> u64 {
    match use_case {
        UseCase::Rgj => RGJ_FLOPS_PER_CONNECTION,
        UseCase::Sgj => SGJ_FLOPS_PER_CONNECTION,
        UseCase::Ngj => 0,
    }
}

/// FLOPs per step in gap-junction work.
pub fn gj_flop_count(use_case: UseCase, n: usize, density: f64) -> Result<u64> {
    Ok(gj_flops_per_connection(use_case) * connection_count(use_case, n, density)?)
}

/// FLOPs per simulation step: `859 N + k N^2 C` with `k` = 12 (RGJ), 4 (SGJ), 0 (NGJ).
pub fn flop_count(use_case: UseCase, n: usize, density: f64) -> Result<u64> {
    Ok(CELL_FLOPS * n as u64 + gj_flop_count(use_case, n, density)?)
}

/// Single-FP memory accesses per step: `41 N + N^2 C`.
pub fn memory_accesses(use_case: UseCase, n: usize, density: f64) -> Result<u64> {
    Ok(NEURON_ACCESSES * n as u64 + connection_count(use_case, n, density)?)
}

pub fn compute_memory_ratio(use_case: UseCase, n: usize, density: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("network size must be >= 1".into()));
    }
    Ok(flop_count(use_case, n, density)? as f64 / memory_accesses(use_case, n, density)? as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub use_case: UseCase,
    pub n: usize,
    pub density: f64,
    pub flops_per_step: u64,
    pub mem_accesses_per_step: u64,
    /// FLOPs per memory access.
    pub ratio: f64,
    /// Share of the FLOPs spent in gap junctions.
    pub gj_fraction: f64,
}

impl WorkloadProfile {
    pub fn new(use_case: UseCase, n: usize, density: f64) -> Result<Self> {
        let flops = flop_count(use_case, n, density)?;
        let gj = gj_flop_count(use_case, n, density)?;
        Ok(WorkloadProfile {
            use_case,
            n,
            density,
            flops_per_step: flops,
            mem_accesses_per_step: memory_accesses(use_case, n, density)?,
            ratio: compute_memory_ratio(use_case, n, density)?,
            gj_fraction: if flops == 0 { 0.0 } else { gj as f64 / flops as f64 },
        })
    }
}

/// Structural tick model of a dataflow engine that unrolls the gap-junction
/// loop `unroll_factor` times. Every potential connection costs ticks whether
/// or not it exists, so the estimate does not depend on density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfeTickModel {
    pub unroll_factor: u64,
    pub pipeline_depth: u64,
    pub clock_hz: f64,
}

impl Default for DfeTickModel {
    fn default() -> Self {
        DfeTickModel {
            unroll_factor: 8,
            pipeline_depth: 100,
            clock_hz: 100e6,
        }
    }
}

impl DfeTickModel {
    pub fn validate(&self) -> Result<()> {
        if self.unroll_factor == 0 {
            return Err(Error::Domain("unroll factor must be >= 1".into()));
        }
        if !self.clock_hz.is_finite() || self.clock_hz <= 0.0 {
            return Err(Error::Domain(format!("clock {} Hz must be finite and > 0", self.clock_hz)));
        }
        Ok(())
    }

    pub fn seconds(&self, ticks: u64) -> f64 {
        ticks as f64 / self.clock_hz
    }
}

/// Ticks per step: `n * ceil(n / U) + D` with gap junctions, `n + D` without.
pub fn estimate_dfe_ticks(use_case: UseCase, n: usize, density: f64, model: &DfeTickModel) -> Result<u64> {
    check_density(density)?;
    model.validate()?;
    let n = n as u64;
    let per_cell = if use_case.has_connectivity() {
        n.div_ceil(model.unroll_factor)
    } else {
        1
    };
    Ok(n * per_cell + model.pipeline_depth)
}

/// Operation counts of the shipped surrogate kernels, as measured with the
/// counting scalar, next to the planning constants they stand in for.
///
/// | work item                | surrogate | planning |
/// |--------------------------|-----------|----------|
/// | cell update, per neuron  | 274       | 859      |
/// | RGJ term, per connection | 11        | 12       |
/// | RGJ sign flip, per neuron| 1         | 0        |
/// | SGJ term, per connection | 3         | 4        |
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SurrogateOpTable {
    pub cell: u64,
    pub rgj_per_connection: u64,
    pub rgj_per_neuron: u64,
    pub sgj_per_connection: u64,
}

pub const SURROGATE_OPS: SurrogateOpTable = SurrogateOpTable {
    cell: CELL_UPDATE_OPS,
    rgj_per_connection: REALISTIC_TERM_OPS,
    rgj_per_neuron: 1,
    sgj_per_connection: SIMPLIFIED_TERM_OPS,
};

impl SurrogateOpTable {
    /// Operations one network step of the surrogate executes for `connections`
    /// nonzero entries.
    pub fn ops_per_step(&self, use_case: UseCase, n: usize, connections: u64) -> u64 {
        let n = n as u64;
        let gj = match use_case {
            UseCase::Rgj => self.rgj_per_connection * connections + self.rgj_per_neuron * n,
            UseCase::Sgj => self.sgj_per_connection * connections,
            UseCase::Ngj => 0,
        };
        self.cell * n + gj
    }

    /// Planning FLOPs minus surrogate ops for the same network (may be negative
    /// in principle, hence signed).
    pub fn delta(&self, use_case: UseCase, n: usize, connections: u64) -> i64 {
        let planning = CELL_FLOPS * n as u64 + gj_flops_per_connection(use_case) * connections;
        planning as i64 - self.ops_per_step(use_case, n, connections) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgj_96_all_to_all() {
        assert_eq!(flop_count(UseCase::Rgj, 96, 1.0).unwrap(), 193_056);
        assert_eq!(gj_flop_count(UseCase::Rgj, 96, 1.0).unwrap(), 110_592);
        let p = WorkloadProfile::new(UseCase::Rgj, 96, 1.0).unwrap();
        assert!((p.gj_fraction - 0.573).abs() < 0.001, "{}", p.gj_fraction);
        assert_eq!(p.mem_accesses_per_step, 13_152);
        assert!((p.ratio - 193_056.0 / 13_152.0).abs() < 1e-12);
        assert!((p.ratio - 14.68).abs() < 0.005);
    }

    #[test]
    fn ngj_is_linear() {
        assert_eq!(flop_count(UseCase::Ngj, 1000, 0.0).unwrap(), 859_000);
        assert_eq!(flop_count(UseCase::Ngj, 2000, 0.7).unwrap(), 2 * 859_000);
        assert_eq!(memory_accesses(UseCase::Ngj, 123, 1.0).unwrap(), 41 * 123);
    }

    #[test]
    fn sgj_examples() {
        assert_eq!(flop_count(UseCase::Sgj, 960, 0.5).unwrap(), 2_667_840);
        assert_eq!(memory_accesses(UseCase::Sgj, 100, 0.0).unwrap(), 4_100);
    }

    #[test]
    fn density_domain() {
        assert!(matches!(flop_count(UseCase::Rgj, 10, 1.5), Err(Error::Domain(_))));
        assert!(memory_accesses(UseCase::Sgj, 10, -0.1).is_err());
        assert!(flop_count(UseCase::Rgj, 10, f64::NAN).is_err());
    }

    #[test]
    fn ratio_ngj_constant() {
        for n in [1, 7, 96, 7680] {
            assert_eq!(compute_memory_ratio(UseCase::Ngj, n, 0.0).unwrap(), 859.0 / 41.0);
        }
    }

    proptest::proptest! {
        // (859 + a·x)/(41 + x) falls from the NGJ value toward a as x = n·C grows
        #[test]
        fn gj_ratio_falls_with_n(n1 in 96usize..7680, dn in 1usize..2000, c in 0.01f64..=1.0) {
            let n2 = (n1 + dn).min(MAX_PROFILE_N);
            for (uc, a) in [(UseCase::Rgj, 12.0), (UseCase::Sgj, 4.0)] {
                let r1 = compute_memory_ratio(uc, n1, c).unwrap();
                let r2 = compute_memory_ratio(uc, n2, c).unwrap();
                proptest::prop_assert!(r2 <= r1, "{uc} C={c}: {r1} at {n1}, {r2} at {n2}");
                proptest::prop_assert!(a < r2 && r1 < 859.0 / 41.0);
            }
        }
    }

    const MAX_PROFILE_N: usize = 7680;

    #[test]
    fn dfe_ticks() {
        let m = DfeTickModel::default();
        assert_eq!(estimate_dfe_ticks(UseCase::Rgj, 96, 0.3, &m).unwrap(), 1_252);
        assert_eq!(
            estimate_dfe_ticks(UseCase::Rgj, 500, 0.25, &m).unwrap(),
            estimate_dfe_ticks(UseCase::Rgj, 500, 1.0, &m).unwrap()
        );
        assert_eq!(estimate_dfe_ticks(UseCase::Ngj, 7680, 0.0, &m).unwrap(), 7_780);
        let bad = DfeTickModel { unroll_factor: 0, ..m };
        assert!(estimate_dfe_ticks(UseCase::Sgj, 10, 0.5, &bad).is_err());
        assert!((m.seconds(1_252) - 1.252e-5).abs() < 1e-18);
    }

    #[test]
    fn surrogate_delta_table() {
        // 96 all-to-all RGJ: (859 - 274) * 96 + (12 - 11) * 9216 - 96
        assert_eq!(SURROGATE_OPS.delta(UseCase::Rgj, 96, 9216), 585 * 96 + 9216 - 96);
        assert_eq!(SURROGATE_OPS.delta(UseCase::Ngj, 10, 0), 5850);
    }
}
