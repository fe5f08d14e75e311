//! Batch planning across fabrics: per-experiment fabric choice, total time,
//! and time/energy savings against single-fabric systems.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UseCase;
use crate::selector::{classify, select, Calibration, ExperimentSpec, Fabric, REAL_TIME_STEP_SECONDS};

/// Number of fixed 50 µs steps covering `brain_seconds` of simulated time.
pub fn steps_for(brain_seconds: f64) -> Result<u64> {
    if !brain_seconds.is_finite() || brain_seconds < 0.0 {
        return Err(Error::Config(format!("brain_seconds must be finite and >= 0, got {brain_seconds}")));
    }
    Ok((brain_seconds / REAL_TIME_STEP_SECONDS).round() as u64)
}

/// Nominal power per fabric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdpTable {
    pub dfe: f64,
    pub phi: f64,
    pub gpu: f64,
}

impl Default for TdpTable {
    fn default() -> Self {
        TdpTable {
            dfe: Fabric::Dfe.tdp_watts(),
            phi: Fabric::Phi.tdp_watts(),
            gpu: Fabric::Gpu.tdp_watts(),
        }
    }
}

impl TdpTable {
    pub fn watts(&self, f: Fabric) -> f64 {
        match f {
            Fabric::Dfe => self.dfe,
            Fabric::Phi => self.phi,
            Fabric::Gpu => self.gpu,
        }
    }

    /// `E = P * t`.
    pub fn joules(&self, f: Fabric, seconds: f64) -> f64 {
        self.watts(f) * seconds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub use_case: UseCase,
    pub n: usize,
    pub density: f64,
    pub steps: u64,
    pub fabric: Fabric,
    pub reason: String,
    /// `None` when the chosen fabric has no calibration for this experiment.
    pub predicted_seconds: Option<f64>,
    /// Predicted wall time on every covered fabric.
    pub seconds_by_fabric: BTreeMap<Fabric, f64>,
}

/// Heterogeneous plan against one single-fabric system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FabricComparison {
    pub fabric: Fabric,
    pub single_seconds: f64,
    pub savings_seconds: f64,
    pub savings_percent: f64,
    pub single_joules: f64,
    pub energy_savings_joules: f64,
    pub energy_savings_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub entries: Vec<PlanEntry>,
    /// `None` if any chosen fabric lacks a prediction.
    pub total_seconds: Option<f64>,
    pub total_joules: Option<f64>,
    /// Only fabrics with a prediction for every experiment appear here.
    pub comparisons: Vec<FabricComparison>,
}

fn percent(single: f64, best: f64) -> f64 {
    if single == 0.0 {
        0.0
    } else {
        (single - best) / single * 100.0
    }
}

/// Predicted energy per experiment (`TDP * seconds` of the chosen fabric).
pub fn energy(plan: &PlanReport, tdp: &TdpTable) -> Vec<Option<f64>> {
    plan.entries
        .iter()
        .map(|e| e.predicted_seconds.map(|s| tdp.joules(e.fabric, s)))
        .collect()
}

/// Builds the report from chosen fabrics and the per-fabric time of every
/// experiment.
pub fn assemble(entries: Vec<PlanEntry>, tdp: &TdpTable) -> PlanReport {
    let total_seconds: Option<f64> = entries.iter().map(|e| e.predicted_seconds).sum();
    let total_joules: Option<f64> = entries
        .iter()
        .map(|e| e.predicted_seconds.map(|s| tdp.joules(e.fabric, s)))
        .sum();

    let mut comparisons = Vec::new();
    if let (Some(best_s), Some(best_j)) = (total_seconds, total_joules) {
        for f in Fabric::ALL {
            let single: Option<f64> = entries.iter().map(|e| e.seconds_by_fabric.get(&f).copied()).sum();
            let Some(single_seconds) = single else { continue };
            let single_joules = tdp.joules(f, single_seconds);
            comparisons.push(FabricComparison {
                fabric: f,
                single_seconds,
                savings_seconds: single_seconds - best_s,
                savings_percent: percent(single_seconds, best_s),
                single_joules,
                energy_savings_joules: single_joules - best_j,
                energy_savings_percent: percent(single_joules, best_j),
            });
        }
    }
    PlanReport {
        entries,
        total_seconds,
        total_joules,
        comparisons,
    }
}

/// Plans from known wall times: each experiment takes its fastest fabric
/// (ties go to the earlier fabric in DFE, PHI, GPU order).
pub fn plan_from_times(times: &[BTreeMap<Fabric, f64>], tdp: &TdpTable) -> Result<PlanReport> {
    if times.is_empty() {
        return Err(Error::Config("batch is empty".into()));
    }
    let entries = times
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let (&fabric, &secs) = t
                .iter()
                .fold(None::<(&Fabric, &f64)>, |best, cand| match best {
                    Some((_, bt)) if bt <= cand.1 => best,
                    _ => Some(cand),
                })
                .ok_or_else(|| Error::Coverage(format!("experiment {k} has no fabric timing")))?;
            Ok(PlanEntry {
                use_case: UseCase::Ngj,
                n: 0,
                density: 0.0,
                steps: 0,
                fabric,
                reason: "calibration-argmin".into(),
                predicted_seconds: Some(secs),
                seconds_by_fabric: t.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(entries, tdp))
}

/// Plans a batch. Every experiment needs calibration for all three fabrics
/// unless `allow_fallback` is set, in which case uncovered experiments use
/// the rule table and single-fabric comparisons are limited to fabrics with
/// full coverage.
pub fn plan(
    batch: &[ExperimentSpec],
    calibration: Option<&Calibration>,
    allow_fallback: bool,
    tdp: &TdpTable,
) -> Result<PlanReport> {
    if batch.is_empty() {
        return Err(Error::Config("batch is empty".into()));
    }
    let empty = Calibration::default();
    let cal = calibration.unwrap_or(&empty);
    let mut entries = Vec::with_capacity(batch.len());
    for (k, spec) in batch.iter().enumerate() {
        let class = classify(spec)?;
        let steps = steps_for(spec.brain_seconds)?;
        let seconds_by_fabric: BTreeMap<Fabric, f64> = Fabric::ALL
            .iter()
            .filter_map(|&f| {
                cal.sec_per_step(f, spec.use_case, spec.density, spec.n)
                    .map(|t| (f, t * steps as f64))
            })
            .collect();
        if seconds_by_fabric.len() < Fabric::ALL.len() && !allow_fallback {
            let missing: Vec<String> = Fabric::ALL
                .iter()
                .filter(|f| !seconds_by_fabric.contains_key(f))
                .map(Fabric::to_string)
                .collect();
            return Err(Error::Coverage(format!(
                "experiment {k} ({} n={} density={}) has no calibration for {}",
                spec.use_case,
                spec.n,
                spec.density,
                missing.join(", ")
            )));
        }
        let decision = if seconds_by_fabric.len() == Fabric::ALL.len() {
            select(&class, Some(cal))
        } else {
            select(&class, None)
        };
        entries.push(PlanEntry {
            use_case: spec.use_case,
            n: spec.n,
            density: spec.density,
            steps,
            fabric: decision.fabric,
            reason: decision.reason,
            predicted_seconds: seconds_by_fabric.get(&decision.fabric).copied(),
            seconds_by_fabric,
        });
    }
    Ok(assemble(entries, tdp))
}

impl PlanReport {
    /// Plain-text summary, times in minutes.
    pub fn to_text(&self) -> String {
        let min = |s: Option<f64>| s.map_or_else(|| "-".to_string(), |s| format!("{:.1}", s / 60.0));
        let mut out = String::new();
        writeln!(out, "{:>4} {:>4} {:>6} {:>8} {:>10} {:>5} {:>12}", "#", "case", "n", "density", "steps", "fab", "time [min]").unwrap();
        for (k, e) in self.entries.iter().enumerate() {
            writeln!(
                out,
                "{:>4} {:>4} {:>6} {:>7.0}% {:>10} {:>5} {:>12}",
                k,
                e.use_case,
                e.n,
                e.density * 100.0,
                e.steps,
                e.fabric,
                min(e.predicted_seconds)
            )
            .unwrap();
        }
        writeln!(out, "total: {} min", min(self.total_seconds)).unwrap();
        if !self.comparisons.is_empty() {
            writeln!(out).unwrap();
            writeln!(out, "{:>10} {:>14} {:>22} {:>16}", "vs", "single [min]", "time saved [min] (%)", "energy saved (%)").unwrap();
            for c in &self.comparisons {
                writeln!(
                    out,
                    "{:>10} {:>14.1} {:>13.1} ({:>5.1}%) {:>15.1}%",
                    format!("{}-only", c.fabric),
                    c.single_seconds / 60.0,
                    c.savings_seconds / 60.0,
                    c.savings_percent,
                    c.energy_savings_percent
                )
                .unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::CalibrationPoint;

    fn times(pairs: &[&[(Fabric, f64)]]) -> Vec<BTreeMap<Fabric, f64>> {
        pairs.iter().map(|p| p.iter().copied().collect()).collect()
    }

    #[test]
    fn two_experiment_savings() {
        let t = times(&[&[(Fabric::Dfe, 10.0), (Fabric::Gpu, 15.0)], &[(Fabric::Dfe, 20.0), (Fabric::Gpu, 5.0)]]);
        let r = plan_from_times(&t, &TdpTable::default()).unwrap();
        assert_eq!(r.total_seconds, Some(15.0));
        let dfe = &r.comparisons[0];
        let gpu = &r.comparisons[1];
        assert_eq!((dfe.fabric, dfe.savings_percent), (Fabric::Dfe, 50.0));
        assert_eq!((gpu.fabric, gpu.savings_percent), (Fabric::Gpu, 25.0));
    }

    #[test]
    fn single_winner_saves_nothing_against_itself() {
        let t = times(&[&[(Fabric::Dfe, 1.0), (Fabric::Phi, 2.0)], &[(Fabric::Dfe, 3.0), (Fabric::Phi, 4.0)]]);
        let r = plan_from_times(&t, &TdpTable::default()).unwrap();
        assert_eq!(r.comparisons[0].savings_percent, 0.0);
        assert!(r.comparisons[1].savings_percent > 0.0);
    }

    #[test]
    fn steps_for_brain_time() {
        assert_eq!(steps_for(40.0).unwrap(), 800_000);
        assert_eq!(steps_for(6.0).unwrap(), 120_000);
        assert_eq!(steps_for(0.0).unwrap(), 0);
        assert!(steps_for(-1.0).is_err());
    }

    #[test]
    fn tdp_energy() {
        let tdp = TdpTable::default();
        assert_eq!(tdp.joules(Fabric::Dfe, 60.0), 8_400.0);
        assert_eq!(tdp.joules(Fabric::Gpu, 60.0), 15_000.0);
        assert_eq!(tdp.joules(Fabric::Phi, 0.0), 0.0);
    }

    #[test]
    fn energy_can_favour_the_slower_fabric() {
        // GPU is faster on the second experiment but the DFE draws less power
        let t = times(&[&[(Fabric::Dfe, 10.0), (Fabric::Gpu, 10.5)], &[(Fabric::Dfe, 10.0), (Fabric::Gpu, 9.0)]]);
        let r = plan_from_times(&t, &TdpTable::default()).unwrap();
        let dfe = r.comparisons.iter().find(|c| c.fabric == Fabric::Dfe).unwrap();
        assert!(dfe.savings_seconds > 0.0);
        assert!(dfe.energy_savings_joules < 0.0);
    }

    fn full_calibration(n: usize, t: [f64; 3]) -> Calibration {
        Calibration::from_points(Fabric::ALL.iter().zip(t).map(|(&fabric, sec_per_step)| CalibrationPoint {
            fabric,
            use_case: UseCase::Rgj,
            density: 1.0,
            n,
            sec_per_step,
        }))
        .unwrap()
    }

    #[test]
    fn coverage_error_without_fallback() {
        let cal = full_calibration(384, [1e-4, 2e-4, 3e-4]);
        let batch = [ExperimentSpec::new(UseCase::Rgj, 960, 1.0).with_brain_seconds(1.0)];
        let err = plan(&batch, Some(&cal), false, &TdpTable::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let r = plan(&batch, Some(&cal), true, &TdpTable::default()).unwrap();
        assert_eq!(r.entries[0].reason, "rule:R5");
        assert_eq!(r.total_seconds, None);
        assert!(r.comparisons.is_empty());
    }

    #[test]
    fn calibrated_plan_uses_steps() {
        let cal = full_calibration(384, [1e-4, 2e-4, 5e-5]);
        let batch = [ExperimentSpec::new(UseCase::Rgj, 384, 1.0).with_brain_seconds(40.0)];
        let r = plan(&batch, Some(&cal), false, &TdpTable::default()).unwrap();
        let e = &r.entries[0];
        assert_eq!((e.steps, e.fabric), (800_000, Fabric::Gpu));
        assert!((e.predicted_seconds.unwrap() - 40.0).abs() < 1e-9);
        assert!(r.to_text().contains("GPU-only"));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"comparisons\""));
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(plan(&[], None, true, &TdpTable::default()).is_err());
        assert!(plan_from_times(&[], &TdpTable::default()).is_err());
    }
}
