use brainframe::connectivity::{ConnectivityMatrix, ConnectivitySpec};
use brainframe::engine::{measured_ops_per_step, simulate, Backend, RecordSpec, Simulation, SimulationConfig};
use brainframe::io::{read_trace, write_trace};
use brainframe::model::{EvokedInputSchedule, NeuronState, Pulse, PulseTarget, UseCase};
use brainframe::profiler::{flop_count, SURROGATE_OPS};

fn config(use_case: UseCase, n: usize, density: f64, steps: u64) -> SimulationConfig {
    let mut c = SimulationConfig::new(use_case, n, steps);
    if use_case != UseCase::Ngj {
        c.connectivity = Some(ConnectivitySpec::for_density(density, 3, 0.04));
    }
    c
}

#[test]
fn measured_ops_match_surrogate_table() {
    for use_case in UseCase::ALL {
        for (n, density) in [(1, 1.0), (17, 0.4), (96, 1.0), (200, 0.1)] {
            let c = config(use_case, n, density, 1);
            let m = c.resolve_connectivity().unwrap();
            let connections = m.as_ref().map_or(0, |m| m.nonzero_count() as u64);
            let measured = measured_ops_per_step(&c, m.as_ref()).unwrap();
            assert_eq!(measured, SURROGATE_OPS.ops_per_step(use_case, n, connections), "{use_case} n={n}");
        }
    }
}

#[test]
fn surrogate_delta_against_planning_model() {
    // all-to-all: connection count is exactly n², as in the planning model
    for use_case in UseCase::ALL {
        let c = config(use_case, 96, 1.0, 1);
        let measured = measured_ops_per_step(&c, None).unwrap() as i64;
        let planning = flop_count(use_case, 96, 1.0).unwrap() as i64;
        let conns = if use_case == UseCase::Ngj { 0 } else { 96 * 96 };
        assert_eq!(planning - measured, SURROGATE_OPS.delta(use_case, 96, conns));
        assert!(planning > measured);
    }
}

#[test]
fn trace_file_round_trip_is_bitwise() {
    let mut c = config(UseCase::Rgj, 12, 0.5, 200);
    c.inputs = EvokedInputSchedule::new(vec![Pulse {
        start_step: 10,
        end_step: 60,
        amplitude: 7.0,
        target: PulseTarget::Neurons(vec![0, 5]),
    }]);
    c.record = RecordSpec {
        stride: 7,
        neurons: Some(vec![11, 0, 5]),
    };
    let trace = simulate(&c).unwrap();
    assert_eq!(trace.rows.len() as u64, 3 * c.record.recorded_steps(200));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trace(&path, &trace).unwrap();
    let back = read_trace(&path).unwrap();
    assert!(back.bitwise_eq(&trace));
}

#[test]
fn explicit_matrix_equals_generated() {
    let c = config(UseCase::Sgj, 30, 0.6, 100);
    let m = c.resolve_connectivity().unwrap().unwrap();
    let again = ConnectivityMatrix::parse_csv(&m.to_csv(), std::path::Path::new("m.csv")).unwrap();
    let mut a = Simulation::<f64>::with_matrix(c.clone(), Some(&again)).unwrap();
    let b = simulate(&c).unwrap();
    assert!(a.run().unwrap().bitwise_eq(&b));
}

#[test]
fn heterogeneous_initial_states_stay_deterministic_in_parallel() {
    let mut c = config(UseCase::Rgj, 50, 0.8, 400);
    let states: Vec<NeuronState> = (0..50)
        .map(|i| {
            let mut s = NeuronState::resting_default();
            s.vdend += i as f64 * 0.3;
            s
        })
        .collect();
    let mut seq = Simulation::<f64>::new(c.clone()).unwrap();
    seq.set_initial_states(states.clone()).unwrap();
    let a = seq.run().unwrap();
    c.backend = Backend::Parallel { workers: 6 };
    let mut par = Simulation::<f64>::new(c).unwrap();
    par.set_initial_states(states).unwrap();
    let b = par.run().unwrap();
    assert!(a.bitwise_eq(&b));
    // coupling pulls the spread together
    let last = |t: &brainframe::Trace| {
        let v: Vec<f64> = t.rows.iter().rev().take(50).map(|r| r.vaxon_mv).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(last(&a).is_finite());
}
