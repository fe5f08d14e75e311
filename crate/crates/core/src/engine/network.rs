//! Double-buffered network state and the per-neuron step.

use std::ops::Range;

use crate::connectivity::ConnectivityMatrix;
use crate::error::{Error, Result};
use crate::model::gap_junction::{realistic_term, simplified_term};
use crate::model::{CellKernel, ConductanceSet, NeuronState, UseCase};
use crate::real::Real;

/// Nonzero connections of every row, ascending column order.
#[derive(Clone, Debug)]
pub struct GjTopology<T: Real> {
    offsets: Vec<usize>,
    sources: Vec<u32>,
    weights: Vec<T>,
}

impl<T: Real> GjTopology<T> {
    pub fn from_matrix(m: &ConnectivityMatrix) -> Self {
        let n = m.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut sources = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for i in 0..n {
            for (j, &w) in m.row(i).iter().enumerate() {
                if w != 0.0 {
                    sources.push(j as u32);
                    weights.push(T::from_f64(w));
                }
            }
            offsets.push(sources.len());
        }
        GjTopology {
            offsets,
            sources,
            weights,
        }
    }

    pub fn empty(n: usize) -> Self {
        GjTopology {
            offsets: vec![0; n + 1],
            sources: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn connection_count(&self) -> usize {
        self.sources.len()
    }

    #[inline]
    fn row(&self, i: usize) -> (&[u32], &[T]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.sources[r.clone()], &self.weights[r])
    }
}

/// Immutable per-simulation model: kernel, topology, use case and step size.
#[derive(Clone, Debug)]
pub struct Network<T: Real> {
    kernel: CellKernel<T>,
    topology: GjTopology<T>,
    use_case: UseCase,
    dt: T,
}

impl<T: Real> Network<T> {
    /// `matrix` is required for RGJ/SGJ and ignored for NGJ.
    pub fn new(
        use_case: UseCase,
        n: usize,
        matrix: Option<&ConnectivityMatrix>,
        cond: &ConductanceSet,
        dt: f64,
    ) -> Result<Self> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::Config(format!("dt must be finite and >= 0, got {dt}")));
        }
        let topology = match (use_case, matrix) {
            (UseCase::Ngj, _) => GjTopology::empty(n),
            (_, Some(m)) if m.n() == n => GjTopology::from_matrix(m),
            (_, Some(m)) => {
                return Err(Error::Config(format!(
                    "connectivity is {}x{} but the network has {n} cells",
                    m.n(),
                    m.n()
                )))
            }
            (_, None) => return Err(Error::Config(format!("{use_case} requires a connectivity matrix"))),
        };
        Ok(Network {
            kernel: CellKernel::new(cond)?,
            topology,
            use_case,
            dt: T::from_f64(dt),
        })
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn use_case(&self) -> UseCase {
        self.use_case
    }

    pub fn topology(&self) -> &GjTopology<T> {
        &self.topology
    }

    /// Gap-junction current entering neuron `i`'s dendrite, from `current`
    /// only, accumulated in ascending source index.
    #[inline]
    pub fn gap_junction_current(&self, i: usize, current: &[NeuronState<T>]) -> T {
        let prev = current[i].vdend;
        let (sources, weights) = self.topology.row(i);
        match self.use_case {
            UseCase::Ngj => T::zero(),
            UseCase::Rgj => {
                let ic = sources
                    .iter()
                    .zip(weights)
                    .fold(T::zero(), |ic, (&j, &w)| ic + realistic_term(prev, current[j as usize].vdend, w));
                // Ic leaves the dendrite
                T::zero() - ic
            }
            UseCase::Sgj => sources
                .iter()
                .zip(weights)
                .fold(T::zero(), |ic, (&j, &w)| ic + simplified_term(prev, current[j as usize].vdend, w)),
        }
    }

    /// Computes the next state of neurons `range` into `out`
    /// (`out.len() == range.len()`).
    #[inline]
    pub fn update_range(&self, range: Range<usize>, current: &[NeuronState<T>], evoked: &[T], out: &mut [NeuronState<T>]) {
        debug_assert_eq!(range.len(), out.len());
        for (i, slot) in range.zip(out.iter_mut()) {
            let i_gj = self.gap_junction_current(i, current);
            *slot = self.kernel.step(&current[i], i_gj, evoked[i], self.dt);
        }
    }
}

/// Read (`current`) and write (`next`) buffers of the whole network.
#[derive(Clone, Debug)]
pub struct NetworkState<T: Real> {
    current: Vec<NeuronState<T>>,
    next: Vec<NeuronState<T>>,
    step_index: u64,
}

impl<T: Real> NetworkState<T> {
    pub fn uniform(n: usize, init: NeuronState<T>) -> Self {
        NetworkState {
            current: vec![init; n],
            next: vec![init; n],
            step_index: 0,
        }
    }

    pub fn from_states(states: Vec<NeuronState<T>>) -> Self {
        NetworkState {
            next: states.clone(),
            current: states,
            step_index: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.current.len()
    }

    pub fn current(&self) -> &[NeuronState<T>] {
        &self.current
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    /// Both buffers, for one step's compute phase.
    pub(crate) fn buffers(&mut self) -> (&[NeuronState<T>], &mut [NeuronState<T>]) {
        (&self.current, &mut self.next)
    }

    /// Write buffer, exposed so tests can poison it between steps.
    #[doc(hidden)]
    pub fn next_buffer_mut(&mut self) -> &mut [NeuronState<T>] {
        &mut self.next
    }

    /// Checks the freshly written buffer, then swaps. On a non-finite value
    /// the buffers are left unswapped and the offending step is reported.
    pub(crate) fn commit(&mut self) -> Result<()> {
        if let Some(neuron) = self.next.iter().position(|s| !s.is_finite()) {
            return Err(Error::Divergence {
                step: self.step_index,
                neuron,
            });
        }
        std::mem::swap(&mut self.current, &mut self.next);
        self.step_index += 1;
        Ok(())
    }
}

/// One sequential network step: gap-junction currents from `current`, cell
/// updates into `next`, then the swap.
pub fn step<T: Real>(state: &mut NetworkState<T>, network: &Network<T>, inputs_at_step: &[T]) -> Result<()> {
    let n = network.n();
    if state.n() != n {
        return Err(Error::InputShape {
            what: "network state",
            expected: n,
            got: state.n(),
        });
    }
    if inputs_at_step.len() != n {
        return Err(Error::InputShape {
            what: "evoked inputs",
            expected: n,
            got: inputs_at_step.len(),
        });
    }
    let (current, next) = state.buffers();
    network.update_range(0..n, current, inputs_at_step, next);
    state.commit()
}
