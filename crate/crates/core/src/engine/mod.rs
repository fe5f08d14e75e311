//! Step-synchronous network simulation.
//!
//! Every step reads only the `current` buffer and writes only the `next`
//! buffer; the buffers swap once all neurons are written. The partitioned
//! backend hands each worker a contiguous, disjoint slice of `next`, and the
//! step ends only after every worker returns, so it produces bitwise the same
//! trace as the sequential backend.

mod network;
mod partition;
mod trace;

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::connectivity::{generate_connectivity, ConnectivityMatrix, ConnectivitySpec};
use crate::error::{Error, Result};
use crate::model::{ConductanceSet, EvokedInputSchedule, NeuronState, UseCase, DEFAULT_DT_MS};
use crate::real::{Counted, Real};

pub use network::{step, GjTopology, Network, NetworkState};
pub use partition::partition;
pub use trace::{StepTiming, Trace, TraceMeta, TraceRow, TraceSink};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Sequential,
    Parallel { workers: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// Which steps and neurons end up in the trace. Step `t` is recorded when
/// `t % stride == 0`; `neurons = None` records every cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSpec {
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default)]
    pub neurons: Option<Vec<usize>>,
}

fn one() -> u64 {
    1
}

fn default_dt() -> f64 {
    DEFAULT_DT_MS
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec {
            stride: 1,
            neurons: None,
        }
    }
}

impl RecordSpec {
    pub fn recorded_steps(&self, duration_steps: u64) -> u64 {
        duration_steps.div_ceil(self.stride)
    }

    fn neuron_ids(&self, n: usize) -> Vec<usize> {
        self.neurons.clone().unwrap_or_else(|| (0..n).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub use_case: UseCase,
    pub n: usize,
    /// Required unless `use_case` is NGJ (or a matrix is supplied directly).
    #[serde(default)]
    pub connectivity: Option<ConnectivitySpec>,
    pub duration_steps: u64,
    /// Step size in ms.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub inputs: EvokedInputSchedule,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub record: RecordSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub conductances: ConductanceSet,
}

impl SimulationConfig {
    pub fn new(use_case: UseCase, n: usize, duration_steps: u64) -> Self {
        SimulationConfig {
            use_case,
            n,
            connectivity: None,
            duration_steps,
            dt: DEFAULT_DT_MS,
            inputs: EvokedInputSchedule::default(),
            backend: Backend::Sequential,
            record: RecordSpec::default(),
            seed: 0,
            precision: Precision::F64,
            conductances: ConductanceSet::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.duration_steps == 0 {
            return Err(Error::Config("duration_steps must be >= 1".into()));
        }
        if let Backend::Parallel { workers: 0 } = self.backend {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.record.stride == 0 {
            return Err(Error::Config("record stride must be >= 1".into()));
        }
        if let Some(bad) = self.record.neurons.iter().flatten().find(|&&i| i >= self.n) {
            return Err(Error::Config(format!("recorded neuron {bad} out of range for n = {}", self.n)));
        }
        if !self.dt.is_finite() || self.dt < 0.0 {
            return Err(Error::Config(format!("dt must be finite and >= 0, got {}", self.dt)));
        }
        if let Some(spec) = &self.connectivity {
            spec.validate()?;
        }
        self.inputs.validate(self.n)?;
        self.conductances.validate()
    }

    /// SHA-256 (hex) of the configuration with the backend normalised away:
    /// configs that must yield identical traces share a digest.
    pub fn digest(&self) -> String {
        let mut normalised = self.clone();
        normalised.backend = Backend::Sequential;
        let bytes = serde_json::to_vec(&normalised).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Builds the connectivity matrix this config describes, if any.
    pub fn resolve_connectivity(&self) -> Result<Option<ConnectivityMatrix>> {
        match (&self.connectivity, self.use_case) {
            (_, UseCase::Ngj) => Ok(None),
            (Some(spec), _) => generate_connectivity(spec, self.n).map(Some),
            (None, uc) => Err(Error::Config(format!("{uc} requires a connectivity specification"))),
        }
    }
}

/// How one step's compute phase is spread over workers.
enum Executor {
    Sequential,
    Partitioned {
        ranges: Vec<Range<usize>>,
        #[cfg(feature = "parallel")]
        pool: rayon::ThreadPool,
    },
}

impl Executor {
    fn new(backend: Backend, n: usize) -> Result<Self> {
        match backend {
            Backend::Sequential => Ok(Executor::Sequential),
            Backend::Parallel { workers } => Ok(Executor::Partitioned {
                ranges: partition(n, workers),
                #[cfg(feature = "parallel")]
                pool: rayon::ThreadPoolBuilder::new()
                    .num_threads(workers.min(n).max(1))
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?,
            }),
        }
    }

    /// Runs the compute phase; returns once every neuron of `next` is written.
    fn execute<T: Real>(&self, network: &Network<T>, current: &[NeuronState<T>], evoked: &[T], next: &mut [NeuronState<T>]) {
        match self {
            Executor::Sequential => network.update_range(0..next.len(), current, evoked, next),
            #[cfg(feature = "parallel")]
            Executor::Partitioned { ranges, pool } => {
                use rayon::prelude::*;
                let chunks = split_by_ranges(next, ranges);
                pool.install(|| {
                    chunks
                        .into_par_iter()
                        .for_each(|(range, out)| network.update_range(range, current, evoked, out))
                });
            }
            #[cfg(not(feature = "parallel"))]
            Executor::Partitioned { ranges } => {
                for (range, out) in split_by_ranges(next, ranges) {
                    network.update_range(range, current, evoked, out);
                }
            }
        }
    }
}

fn split_by_ranges<'a, S>(mut buf: &'a mut [S], ranges: &[Range<usize>]) -> Vec<(Range<usize>, &'a mut [S])> {
    let mut out = Vec::with_capacity(ranges.len());
    for r in ranges {
        let (head, tail) = std::mem::take(&mut buf).split_at_mut(r.len());
        out.push((r.clone(), head));
        buf = tail;
    }
    out
}

/// A running simulation. Not shareable across threads; one run per instance.
pub struct Simulation<T: Real> {
    config: SimulationConfig,
    network: Network<T>,
    state: NetworkState<T>,
    executor: Executor,
    evoked_f64: Vec<f64>,
    evoked: Vec<T>,
    timing: StepTiming,
}

impl<T: Real> Simulation<T> {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let matrix = config.resolve_connectivity()?;
        Self::with_matrix(config, matrix.as_ref())
    }

    /// Uses `matrix` instead of `config.connectivity`.
    pub fn with_matrix(config: SimulationConfig, matrix: Option<&ConnectivityMatrix>) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let network = Network::new(config.use_case, n, matrix, &config.conductances, config.dt)?;
        let executor = Executor::new(config.backend, n)?;
        Ok(Simulation {
            state: NetworkState::uniform(n, NeuronState::resting_default()),
            network,
            executor,
            evoked_f64: vec![0.0; n],
            evoked: vec![T::zero(); n],
            timing: StepTiming::default(),
            config,
        })
    }

    /// Replaces the initial state (only before the first step).
    pub fn set_initial_states(&mut self, states: Vec<NeuronState<T>>) -> Result<()> {
        if states.len() != self.config.n {
            return Err(Error::InputShape {
                what: "initial states",
                expected: self.config.n,
                got: states.len(),
            });
        }
        if self.state.step_index() != 0 {
            return Err(Error::Config("initial state can only be set before the first step".into()));
        }
        self.state = NetworkState::from_states(states);
        Ok(())
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn state(&self) -> &NetworkState<T> {
        &self.state
    }

    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    pub fn timing(&self) -> StepTiming {
        self.timing
    }

    /// Advances one step. Fails with the step index if any state turns
    /// non-finite.
    pub fn advance(&mut self) -> Result<()> {
        let t = self.state.step_index();
        self.config.inputs.fill(t, &mut self.evoked_f64);
        for (dst, &src) in self.evoked.iter_mut().zip(&self.evoked_f64) {
            *dst = T::from_f64(src);
        }
        let start = Instant::now();
        let (current, next) = self.state.buffers();
        self.executor.execute(&self.network, current, &self.evoked, next);
        self.timing.push(start.elapsed().as_secs_f64());
        self.state.commit()
    }

    /// Runs the remaining steps, streaming recorded rows into `sink`.
    pub fn run_into(&mut self, sink: &mut impl TraceSink) -> Result<TraceMeta> {
        let ids = self.config.record.neuron_ids(self.config.n);
        let stride = self.config.record.stride;
        while self.state.step_index() < self.config.duration_steps {
            self.advance()?;
            let t = self.state.step_index() - 1;
            if t.is_multiple_of(stride) {
                let cur = self.state.current();
                for &i in &ids {
                    sink.record(TraceRow {
                        step: t,
                        neuron: i as u32,
                        vaxon_mv: cur[i].vaxon.to_f64(),
                    })?;
                }
            }
        }
        Ok(TraceMeta {
            config_digest: self.config.digest(),
            recorded_steps: self.config.record.recorded_steps(self.config.duration_steps),
            recorded_neurons: ids.len(),
            timing: self.timing,
        })
    }

    pub fn run(&mut self) -> Result<Trace> {
        let mut rows = Vec::new();
        let meta = self.run_into(&mut rows)?;
        Ok(Trace { rows, meta })
    }
}

/// Runs `config` with the backend it names, streaming rows into `sink`.
pub fn simulate_into(
    config: &SimulationConfig,
    matrix: Option<&ConnectivityMatrix>,
    sink: &mut impl TraceSink,
) -> Result<TraceMeta> {
    config.validate()?;
    let resolved;
    let matrix = match matrix {
        Some(m) => Some(m),
        None => {
            resolved = config.resolve_connectivity()?;
            resolved.as_ref()
        }
    };
    match config.precision {
        Precision::F64 => Simulation::<f64>::with_matrix(config.clone(), matrix)?.run_into(sink),
        Precision::F32 => Simulation::<f32>::with_matrix(config.clone(), matrix)?.run_into(sink),
    }
}

/// Runs `config` with the backend it names.
pub fn simulate(config: &SimulationConfig) -> Result<Trace> {
    let mut rows = Vec::new();
    let meta = simulate_into(config, None, &mut rows)?;
    Ok(Trace { rows, meta })
}

/// Runs `config` on the partitioned backend. The config must name it.
pub fn run_parallel(config: &SimulationConfig) -> Result<Trace> {
    if !matches!(config.backend, Backend::Parallel { .. }) {
        return Err(Error::Config("run_parallel requires a Parallel backend".into()));
    }
    simulate(config)
}

/// Arithmetic operations the shipped kernels actually execute in one network
/// step of `config`, measured with the counting scalar on the sequential
/// backend from the default initial state.
pub fn measured_ops_per_step(config: &SimulationConfig, matrix: Option<&ConnectivityMatrix>) -> Result<u64> {
    let mut cfg = config.clone();
    cfg.backend = Backend::Sequential;
    cfg.duration_steps = 1;
    let resolved;
    let matrix = match matrix {
        Some(m) => Some(m),
        None => {
            resolved = cfg.resolve_connectivity()?;
            resolved.as_ref()
        }
    };
    let mut sim = Simulation::<Counted>::with_matrix(cfg, matrix)?;
    Counted::take_count();
    sim.advance()?;
    Ok(Counted::take_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pulse, PulseTarget};

    fn rgj(n: usize, steps: u64) -> SimulationConfig {
        let mut c = SimulationConfig::new(UseCase::Rgj, n, steps);
        c.connectivity = Some(ConnectivitySpec::AllToAll { weight: 0.04 });
        c
    }

    #[test]
    fn zero_duration_rejected() {
        assert!(matches!(simulate(&rgj(4, 0)), Err(Error::Config(_))));
    }

    #[test]
    fn zero_workers_rejected() {
        let mut c = rgj(4, 2);
        c.backend = Backend::Parallel { workers: 0 };
        assert!(simulate(&c).is_err());
    }

    #[test]
    fn missing_connectivity_rejected() {
        let c = SimulationConfig::new(UseCase::Sgj, 4, 2);
        assert!(matches!(simulate(&c), Err(Error::Config(_))));
        assert!(simulate(&SimulationConfig::new(UseCase::Ngj, 4, 2)).is_ok());
    }

    #[test]
    fn row_count_contract() {
        for (stride, neurons, steps) in [(1, None, 10u64), (3, Some(vec![0, 2]), 10), (7, Some(vec![1]), 7), (20, None, 10)] {
            let mut c = rgj(3, steps);
            c.record = RecordSpec { stride, neurons };
            let trace = simulate(&c).unwrap();
            assert_eq!(
                trace.rows.len() as u64,
                trace.meta.recorded_steps * trace.meta.recorded_neurons as u64
            );
            assert_eq!(trace.meta.recorded_steps, steps.div_ceil(stride));
        }
    }

    #[test]
    fn parallel_matches_sequential_with_asymmetric_input() {
        let mut c = SimulationConfig::new(UseCase::Rgj, 37, 300);
        c.connectivity = Some(ConnectivitySpec::FixedDensity {
            p: 0.6,
            seed: 11,
            weight: 0.04,
        });
        c.inputs = EvokedInputSchedule::new(vec![Pulse {
            start_step: 10,
            end_step: 200,
            amplitude: 8.0,
            target: PulseTarget::Neurons(vec![0, 5, 17]),
        }]);
        let seq = simulate(&c).unwrap();
        for workers in [1, 3, 8, 64] {
            c.backend = Backend::Parallel { workers };
            let par = run_parallel(&c).unwrap();
            assert!(par.bitwise_eq(&seq), "workers = {workers}");
            assert_eq!(par.meta.config_digest, seq.meta.config_digest);
        }
        // the input actually desynchronised the network
        assert_ne!(seq.series(0), seq.series(1));
    }

    #[test]
    fn run_parallel_requires_parallel_backend() {
        assert!(run_parallel(&rgj(3, 1)).is_err());
    }

    #[test]
    fn stiffness_guard_default_state() {
        let c = SimulationConfig::new(UseCase::Ngj, 2, 1000);
        let mut sim = Simulation::<f64>::new(c).unwrap();
        for _ in 0..1000 {
            sim.advance().unwrap();
        }
        for s in sim.state().current() {
            assert!(s.is_finite());
            assert!(s.gates.iter().all(|g| (0.0..=1.0).contains(g)));
        }
    }

    #[test]
    fn f32_precision_runs() {
        let mut c = rgj(8, 50);
        c.precision = Precision::F32;
        let t = simulate(&c).unwrap();
        assert_eq!(t.rows.len(), 400);
        assert!(t.rows.iter().all(|r| r.vaxon_mv.is_finite()));
    }

    #[test]
    fn digest_ignores_backend_only() {
        let a = rgj(5, 10);
        let mut b = a.clone();
        b.backend = Backend::Parallel { workers: 3 };
        assert_eq!(a.digest(), b.digest());
        b.duration_steps = 11;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn config_json_round_trip() {
        let mut c = rgj(5, 10);
        c.backend = Backend::Parallel { workers: 2 };
        c.inputs = EvokedInputSchedule::new(vec![Pulse::uniform(1, 3, 2.0)]);
        let json = serde_json::to_string_pretty(&c).unwrap();
        let back: SimulationConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let minimal: SimulationConfig =
            serde_json::from_str(r#"{"use_case":"ngj","n":3,"duration_steps":5}"#).unwrap();
        assert_eq!(minimal, SimulationConfig::new(UseCase::Ngj, 3, 5));
    }
}
