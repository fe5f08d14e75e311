use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Scalars stored per neuron: 3 voltages, 9 gates, 7 reserved.
pub const STATE_LEN: usize = 19;
/// Parameters stored per neuron.
pub const CONDUCTANCE_LEN: usize = 20;

pub const GATES: usize = 9;
pub const RESERVED: usize = 7;

/// Compartment order used for gate indexing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compartment {
    Dendrite = 0,
    Soma = 1,
    Axon = 2,
}

/// Gate order within a compartment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    M = 0,
    H = 1,
    N = 2,
}

#[inline]
pub const fn gate_index(c: Compartment, g: Gate) -> usize {
    3 * c as usize + g as usize
}

/// Per-cell state. Voltages in mV, gates dimensionless in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuronState<T: Real = f64> {
    pub vdend: T,
    pub vsoma: T,
    pub vaxon: T,
    pub gates: [T; GATES],
    pub reserved: [T; RESERVED],
}

impl<T: Real> NeuronState<T> {
    pub fn new(vdend: T, vsoma: T, vaxon: T, gates: [T; GATES]) -> Self {
        NeuronState {
            vdend,
            vsoma,
            vaxon,
            gates,
            reserved: [T::zero(); RESERVED],
        }
    }

    /// The documented default initial state: every compartment at -65 mV with
    /// gates at their steady-state values for that voltage.
    pub fn resting_default() -> Self {
        let v = T::from_f64(DEFAULT_INITIAL_MV);
        let phi = T::one();
        let (m, h, n) = (
            crate::model::cell::steady_state_m(v, phi),
            crate::model::cell::steady_state_h(v, phi),
            crate::model::cell::steady_state_n(v, phi),
        );
        NeuronState::new(v, v, v, [m, h, n, m, h, n, m, h, n])
    }

    pub fn gate(&self, c: Compartment, g: Gate) -> T {
        self.gates[gate_index(c, g)]
    }

    /// The full stored layout, in storage order.
    pub fn to_array(&self) -> [T; STATE_LEN] {
        let mut out = [T::zero(); STATE_LEN];
        out[0] = self.vdend;
        out[1] = self.vsoma;
        out[2] = self.vaxon;
        out[3..3 + GATES].copy_from_slice(&self.gates);
        out[3 + GATES..].copy_from_slice(&self.reserved);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.vdend.is_finite()
            && self.vsoma.is_finite()
            && self.vaxon.is_finite()
            && self.gates.iter().all(|g| g.is_finite())
    }

    pub fn cast<U: Real>(&self) -> NeuronState<U> {
        NeuronState {
            vdend: U::from_f64(self.vdend.to_f64()),
            vsoma: U::from_f64(self.vsoma.to_f64()),
            vaxon: U::from_f64(self.vaxon.to_f64()),
            gates: self.gates.map(|g| U::from_f64(g.to_f64())),
            reserved: self.reserved.map(|r| U::from_f64(r.to_f64())),
        }
    }
}

impl<T: Real> Default for NeuronState<T> {
    fn default() -> Self {
        Self::resting_default()
    }
}

pub const DEFAULT_INITIAL_MV: f64 = -65.0;

/// Channel and membrane parameters of one cell.
///
/// Conductances in mS/cm², reversal potentials in mV, capacitances in µF/cm².
/// `rate_scale` multiplies every gating rate (temperature factor).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceSet {
    pub g_na_dend: f64,
    pub g_k_dend: f64,
    pub g_leak_dend: f64,
    pub c_m_dend: f64,
    pub g_na_soma: f64,
    pub g_k_soma: f64,
    pub g_leak_soma: f64,
    pub c_m_soma: f64,
    pub g_na_axon: f64,
    pub g_k_axon: f64,
    pub g_leak_axon: f64,
    pub c_m_axon: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub e_leak_dend: f64,
    pub e_leak_soma: f64,
    pub e_leak_axon: f64,
    /// Dendrite <-> soma coupling.
    pub g_int_dend_soma: f64,
    /// Soma <-> axon coupling.
    pub g_int_soma_axon: f64,
    pub rate_scale: f64,
}

/// Shipped default parameter table. All tests pin these values.
pub const DEFAULT_CONDUCTANCES: ConductanceSet = ConductanceSet {
    g_na_dend: 40.0,
    g_k_dend: 12.0,
    g_leak_dend: 0.3,
    c_m_dend: 1.0,
    g_na_soma: 120.0,
    g_k_soma: 36.0,
    g_leak_soma: 0.3,
    c_m_soma: 1.0,
    g_na_axon: 120.0,
    g_k_axon: 36.0,
    g_leak_axon: 0.3,
    c_m_axon: 1.0,
    e_na: 50.0,
    e_k: -77.0,
    e_leak_dend: -54.387,
    e_leak_soma: -54.387,
    e_leak_axon: -54.387,
    g_int_dend_soma: 0.5,
    g_int_soma_axon: 1.0,
    rate_scale: 1.0,
};

impl Default for ConductanceSet {
    fn default() -> Self {
        DEFAULT_CONDUCTANCES
    }
}

impl ConductanceSet {
    pub fn to_array(&self) -> [f64; CONDUCTANCE_LEN] {
        [
            self.g_na_dend,
            self.g_k_dend,
            self.g_leak_dend,
            self.c_m_dend,
            self.g_na_soma,
            self.g_k_soma,
            self.g_leak_soma,
            self.c_m_soma,
            self.g_na_axon,
            self.g_k_axon,
            self.g_leak_axon,
            self.c_m_axon,
            self.e_na,
            self.e_k,
            self.e_leak_dend,
            self.e_leak_soma,
            self.e_leak_axon,
            self.g_int_dend_soma,
            self.g_int_soma_axon,
            self.rate_scale,
        ]
    }

    /// Same parameters with every channel and coupling conductance set to 0.
    pub fn without_conductances(&self) -> Self {
        ConductanceSet {
            g_na_dend: 0.0,
            g_k_dend: 0.0,
            g_leak_dend: 0.0,
            g_na_soma: 0.0,
            g_k_soma: 0.0,
            g_leak_soma: 0.0,
            g_na_axon: 0.0,
            g_k_axon: 0.0,
            g_leak_axon: 0.0,
            g_int_dend_soma: 0.0,
            g_int_soma_axon: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("g_na_dend", self.g_na_dend),
            ("g_k_dend", self.g_k_dend),
            ("g_leak_dend", self.g_leak_dend),
            ("c_m_dend", self.c_m_dend),
            ("g_na_soma", self.g_na_soma),
            ("g_k_soma", self.g_k_soma),
            ("g_leak_soma", self.g_leak_soma),
            ("c_m_soma", self.c_m_soma),
            ("g_na_axon", self.g_na_axon),
            ("g_k_axon", self.g_k_axon),
            ("g_leak_axon", self.g_leak_axon),
            ("c_m_axon", self.c_m_axon),
            ("g_int_dend_soma", self.g_int_dend_soma),
            ("g_int_soma_axon", self.g_int_soma_axon),
            ("rate_scale", self.rate_scale),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NumericDomain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("e_na", self.e_na), ("e_k", self.e_k)] {
            if !v.is_finite() {
                return Err(Error::NumericDomain(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_counts_match_profile() {
        let s = NeuronState::<f64>::resting_default();
        assert_eq!(s.to_array().len(), 19);
        assert_eq!(DEFAULT_CONDUCTANCES.to_array().len(), 20);
        assert!(s.reserved.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn default_state_gates_in_unit_interval() {
        let s = NeuronState::<f64>::resting_default();
        assert!(s.gates.iter().all(|g| (0.0..=1.0).contains(g)));
        assert_eq!(s.vdend, -65.0);
    }

    #[test]
    fn gate_indexing() {
        let mut s = NeuronState::<f64>::resting_default();
        s.gates = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert_eq!(s.gate(Compartment::Soma, Gate::N), 5.0);
        assert_eq!(s.gate(Compartment::Axon, Gate::M), 6.0);
    }

    #[test]
    fn negative_conductance_rejected() {
        let mut c = DEFAULT_CONDUCTANCES;
        assert!(c.validate().is_ok());
        c.g_k_soma = -1.0;
        assert!(matches!(c.validate(), Err(Error::NumericDomain(_))));
    }
}
