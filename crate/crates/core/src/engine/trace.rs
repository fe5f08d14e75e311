use serde::{Deserialize, Serialize};

/// One recorded axon voltage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub neuron: u32,
    pub vaxon_mv: f64,
}

/// Wall-clock seconds per step, measured around the step function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub steps: u64,
    pub min_s: f64,
    pub mean_s: f64,
    pub max_s: f64,
}

impl StepTiming {
    pub(crate) fn push(&mut self, secs: f64) {
        if self.steps == 0 {
            self.min_s = secs;
            self.max_s = secs;
        } else {
            self.min_s = self.min_s.min(secs);
            self.max_s = self.max_s.max(secs);
        }
        self.steps += 1;
        self.mean_s += (secs - self.mean_s) / self.steps as f64;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// SHA-256 of the numerics-relevant configuration.
    pub config_digest: String,
    pub recorded_steps: u64,
    pub recorded_neurons: usize,
    pub timing: StepTiming,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub meta: TraceMeta,
}

impl Trace {
    /// Record-level equality down to the bit pattern of every voltage.
    pub fn bitwise_eq(&self, other: &Trace) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.step == b.step && a.neuron == b.neuron && a.vaxon_mv.to_bits() == b.vaxon_mv.to_bits()
            })
    }

    /// Voltages of one neuron in step order.
    pub fn series(&self, neuron: u32) -> Vec<f64> {
        self.rows.iter().filter(|r| r.neuron == neuron).map(|r| r.vaxon_mv).collect()
    }
}

/// Destination for recorded rows.
pub trait TraceSink {
    fn record(&mut self, row: TraceRow) -> std::io::Result<()>;
}

impl TraceSink for Vec<TraceRow> {
    fn record(&mut self, row: TraceRow) -> std::io::Result<()> {
        self.push(row);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_accumulates() {
        let mut t = StepTiming::default();
        for s in [2.0, 1.0, 3.0] {
            t.push(s);
        }
        assert_eq!((t.steps, t.min_s, t.max_s, t.mean_s), (3, 1.0, 3.0, 2.0));
    }

    #[test]
    fn bitwise_eq_distinguishes_signed_zero() {
        let row = |v| TraceRow {
            step: 0,
            neuron: 0,
            vaxon_mv: v,
        };
        let a = Trace {
            rows: vec![row(0.0)],
            ..Default::default()
        };
        let b = Trace {
            rows: vec![row(-0.0)],
            ..Default::default()
        };
        assert_eq!(a, b);
        assert!(!a.bitwise_eq(&b));
        assert!(a.bitwise_eq(&a.clone()));
    }
}
