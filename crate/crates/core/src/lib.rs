//! Simulation of gap-junction-coupled networks of three-compartment
//! Hodgkin-Huxley cells, plus the tooling that decides where such a
//! simulation should run: an analytic workload profiler, a rule- or
//! calibration-driven backend selector and a batch planner.
//!
//! ```
//! use brainframe::engine::{simulate, SimulationConfig};
//! use brainframe::model::UseCase;
//!
//! let config = SimulationConfig::new(UseCase::Ngj, 4, 10);
//! let trace = simulate(&config).unwrap();
//! assert_eq!(trace.rows.len(), 4 * 10);
//! ```

pub mod cli;
pub mod connectivity;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod planner;
pub mod profiler;
pub mod real;
pub mod selector;

pub use connectivity::{ConnectivityMatrix, ConnectivitySpec};
pub use engine::{simulate, Backend, Simulation, SimulationConfig, Trace};
pub use error::{Error, Result};
pub use model::{ConductanceSet, NeuronState, UseCase};
pub use selector::{ExperimentSpec, Fabric};
