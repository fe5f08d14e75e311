//! Three-compartment cell update.
//!
//! Each compartment (dendrite, soma, axon) carries Hodgkin-Huxley Na/K/leak
//! channels with the standard 1952 rate functions (modern -65 mV resting
//! convention), plus linear coupling `g_int * (V_other - V_self)` between
//! dendrite and soma and between soma and axon. Gap-junction and evoked
//! currents enter the dendrite only.
//!
//! Voltages advance by explicit forward Euler. Gates advance with the
//! exponential-Euler form `g + (g_inf - g) * (1 - exp(-dt (a + b)))`, which is
//! a convex combination of `g` and `g_inf` for every `dt >= 0`, so gates stay
//! in `[0, 1]` for any finite voltage.

use crate::error::{Error, Result};
use crate::model::state::{ConductanceSet, NeuronState, GATES};
use crate::real::Real;

/// Default integration step in ms (50 µs).
pub const DEFAULT_DT_MS: f64 = 0.05;

/// Measured arithmetic ops of one [`cell_update`] with the [`crate::real::Counted`]
/// scalar, away from the removable singularities of the `m`/`n` rates.
pub const CELL_UPDATE_OPS: u64 = 274;

#[inline(always)]
fn c<T: Real>(x: f64) -> T {
    T::from_f64(x)
}

/// `x / (1 - exp(-x / y))` with its removable singularity at `x = 0`.
#[inline(always)]
fn vtrap<T: Real>(x: T, y: T) -> T {
    let u = x / y;
    if u.to_f64().abs() < 1e-9 {
        y * (T::one() + u / c(2.0))
    } else {
        x / -(-u).exp_m1()
    }
}

#[inline(always)]
pub(crate) fn alpha_m<T: Real>(v: T) -> T {
    c::<T>(0.1) * vtrap(v + c(40.0), c(10.0))
}
#[inline(always)]
pub(crate) fn beta_m<T: Real>(v: T) -> T {
    c::<T>(4.0) * (-(v + c(65.0)) / c(18.0)).exp()
}
#[inline(always)]
pub(crate) fn alpha_h<T: Real>(v: T) -> T {
    c::<T>(0.07) * (-(v + c(65.0)) / c(20.0)).exp()
}
#[inline(always)]
pub(crate) fn beta_h<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-(v + c(35.0)) / c(10.0)).exp())
}
#[inline(always)]
pub(crate) fn alpha_n<T: Real>(v: T) -> T {
    c::<T>(0.01) * vtrap(v + c(55.0), c(10.0))
}
#[inline(always)]
pub(crate) fn beta_n<T: Real>(v: T) -> T {
    c::<T>(0.125) * (-(v + c(65.0)) / c(80.0)).exp()
}

pub fn steady_state_m<T: Real>(v: T, phi: T) -> T {
    let (a, b) = (phi * alpha_m(v), phi * beta_m(v));
    a / (a + b)
}
pub fn steady_state_h<T: Real>(v: T, phi: T) -> T {
    let (a, b) = (phi * alpha_h(v), phi * beta_h(v));
    a / (a + b)
}
pub fn steady_state_n<T: Real>(v: T, phi: T) -> T {
    let (a, b) = (phi * alpha_n(v), phi * beta_n(v));
    a / (a + b)
}

#[inline(always)]
fn relax_gate<T: Real>(g: T, alpha: T, beta: T, dt: T) -> T {
    let rate = alpha + beta;
    let g_inf = alpha / rate;
    let k = -(-(dt * rate)).exp_m1();
    (g + (g_inf - g) * k).clamp_to(T::zero(), T::one())
}

#[derive(Clone, Copy, Debug)]
struct Channels<T> {
    g_na: T,
    g_k: T,
    g_leak: T,
    e_leak: T,
}

/// Returns the updated gates `[m, h, n]` and the ionic current (outward
/// positive, µA/cm²) evaluated at the old state.
#[inline(always)]
fn compartment<T: Real>(v: T, gates: [T; 3], ch: Channels<T>, e_na: T, e_k: T, phi: T, dt: T) -> ([T; 3], T) {
    let [m, h, n] = gates;
    let i_ion = ch.g_na * m * m * m * h * (v - e_na) + ch.g_k * n * n * n * n * (v - e_k) + ch.g_leak * (v - ch.e_leak);
    let next = [
        relax_gate(m, phi * alpha_m(v), phi * beta_m(v), dt),
        relax_gate(h, phi * alpha_h(v), phi * beta_h(v), dt),
        relax_gate(n, phi * alpha_n(v), phi * beta_n(v), dt),
    ];
    (next, i_ion)
}

/// Total membrane current per compartment `[dend, soma, axon]` (µA/cm²,
/// inward positive) at `state`. `dV/dt = current / C_m`.
pub fn membrane_currents<T: Real>(state: &NeuronState<T>, cond: &ConductanceSet, i_gj: T, i_evoked: T) -> [T; 3] {
    let p = Params::<T>::from(cond);
    let (_, i_d) = compartment(state.vdend, gates_of(state, 0), p.dend, p.e_na, p.e_k, p.phi, T::zero());
    let (_, i_s) = compartment(state.vsoma, gates_of(state, 1), p.soma, p.e_na, p.e_k, p.phi, T::zero());
    let (_, i_a) = compartment(state.vaxon, gates_of(state, 2), p.axon, p.e_na, p.e_k, p.phi, T::zero());
    let ds = p.g_ds * (state.vsoma - state.vdend);
    let sa = p.g_sa * (state.vaxon - state.vsoma);
    [-i_d + ds + i_gj + i_evoked, -i_s - ds + sa, -i_a - sa]
}

#[inline(always)]
fn gates_of<T: Real>(s: &NeuronState<T>, comp: usize) -> [T; 3] {
    [s.gates[3 * comp], s.gates[3 * comp + 1], s.gates[3 * comp + 2]]
}

#[derive(Clone, Copy, Debug)]
struct Params<T> {
    dend: Channels<T>,
    soma: Channels<T>,
    axon: Channels<T>,
    c_dend: T,
    c_soma: T,
    c_axon: T,
    e_na: T,
    e_k: T,
    g_ds: T,
    g_sa: T,
    phi: T,
}

impl<T: Real> From<&ConductanceSet> for Params<T> {
    fn from(p: &ConductanceSet) -> Self {
        Params {
            dend: Channels {
                g_na: c(p.g_na_dend),
                g_k: c(p.g_k_dend),
                g_leak: c(p.g_leak_dend),
                e_leak: c(p.e_leak_dend),
            },
            soma: Channels {
                g_na: c(p.g_na_soma),
                g_k: c(p.g_k_soma),
                g_leak: c(p.g_leak_soma),
                e_leak: c(p.e_leak_soma),
            },
            axon: Channels {
                g_na: c(p.g_na_axon),
                g_k: c(p.g_k_axon),
                g_leak: c(p.g_leak_axon),
                e_leak: c(p.e_leak_axon),
            },
            c_dend: c(p.c_m_dend),
            c_soma: c(p.c_m_soma),
            c_axon: c(p.c_m_axon),
            e_na: c(p.e_na),
            e_k: c(p.e_k),
            g_ds: c(p.g_int_dend_soma),
            g_sa: c(p.g_int_soma_axon),
            phi: c(p.rate_scale),
        }
    }
}

/// Precomputed form of a [`ConductanceSet`] for the hot loop.
#[derive(Clone, Copy, Debug)]
pub struct CellKernel<T: Real> {
    p: Params<T>,
}

impl<T: Real> CellKernel<T> {
    pub fn new(cond: &ConductanceSet) -> Result<Self> {
        cond.validate()?;
        for (name, cm) in [("c_m_dend", cond.c_m_dend), ("c_m_soma", cond.c_m_soma), ("c_m_axon", cond.c_m_axon)] {
            if cm <= 0.0 {
                return Err(Error::NumericDomain(format!("{name} must be > 0 to integrate, got {cm}")));
            }
        }
        Ok(CellKernel { p: Params::from(cond) })
    }

    /// One step without input validation. Non-finite results propagate.
    #[inline]
    pub fn step(&self, s: &NeuronState<T>, i_gj: T, i_evoked: T, dt: T) -> NeuronState<T> {
        let p = &self.p;
        let (gd, i_d) = compartment(s.vdend, gates_of(s, 0), p.dend, p.e_na, p.e_k, p.phi, dt);
        let (gs, i_s) = compartment(s.vsoma, gates_of(s, 1), p.soma, p.e_na, p.e_k, p.phi, dt);
        let (ga, i_a) = compartment(s.vaxon, gates_of(s, 2), p.axon, p.e_na, p.e_k, p.phi, dt);
        let ds = p.g_ds * (s.vsoma - s.vdend);
        let sa = p.g_sa * (s.vaxon - s.vsoma);

        let vdend = s.vdend + dt * (-i_d + ds + i_gj + i_evoked) / p.c_dend;
        let vsoma = s.vsoma + dt * (-i_s - ds + sa) / p.c_soma;
        let vaxon = s.vaxon + dt * (-i_a - sa) / p.c_axon;

        let mut gates = [T::zero(); GATES];
        gates[0..3].copy_from_slice(&gd);
        gates[3..6].copy_from_slice(&gs);
        gates[6..9].copy_from_slice(&ga);
        NeuronState {
            vdend,
            vsoma,
            vaxon,
            gates,
            reserved: s.reserved,
        }
    }
}

/// Advances one cell by `dt` ms. `i_gj` is the gap-junction current entering
/// the dendrite, `i_evoked` the externally applied current (both µA/cm²).
/// Returns the new state and its axon voltage.
pub fn cell_update<T: Real>(
    state: &NeuronState<T>,
    cond: &ConductanceSet,
    i_gj: T,
    i_evoked: T,
    dt: T,
) -> Result<(NeuronState<T>, T)> {
    if !state.is_finite() {
        return Err(Error::NumericDomain("non-finite neuron state".into()));
    }
    if !i_gj.is_finite() || !i_evoked.is_finite() {
        return Err(Error::NumericDomain("non-finite input current".into()));
    }
    if !dt.is_finite() || dt < T::zero() {
        return Err(Error::NumericDomain(format!("dt must be finite and >= 0, got {dt:?}")));
    }
    let next = CellKernel::new(cond)?.step(state, i_gj, i_evoked, dt);
    Ok((next, next.vaxon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::state::DEFAULT_CONDUCTANCES;
    use crate::real::Counted;

    const DT: f64 = DEFAULT_DT_MS;

    /// Iterates the kernel from the default state until the state stops moving.
    fn converge_to_rest() -> NeuronState<f64> {
        let k = CellKernel::<f64>::new(&DEFAULT_CONDUCTANCES).unwrap();
        let mut s = NeuronState::<f64>::resting_default();
        for _ in 0..400_000 {
            s = k.step(&s, 0.0, 0.0, DT);
        }
        s
    }

    #[test]
    fn dt_zero_is_identity() {
        let mut s = NeuronState::<f64>::resting_default();
        s.vdend = -20.0;
        s.gates[4] = 0.123;
        let (next, va) = cell_update(&s, &DEFAULT_CONDUCTANCES, 3.0, 7.0, 0.0).unwrap();
        assert_eq!(next, s);
        assert_eq!(va, s.vaxon);
    }

    #[test]
    fn zero_conductances_keep_voltages_and_relax_gates() {
        let cond = DEFAULT_CONDUCTANCES.without_conductances();
        let mut s = NeuronState::<f64>::resting_default();
        s.vdend = -30.0;
        s.vsoma = -50.0;
        s.vaxon = 10.0;
        s.gates = [0.5; GATES];
        let (next, _) = cell_update(&s, &cond, 0.0, 0.0, DT).unwrap();
        assert_eq!((next.vdend, next.vsoma, next.vaxon), (s.vdend, s.vsoma, s.vaxon));
        // each gate moves toward its steady state at the compartment voltage
        let m_inf: f64 = steady_state_m(-30.0, 1.0);
        assert!((next.gates[0] - 0.5).signum() == (m_inf - 0.5).signum());
        assert!((next.gates[0] - 0.5).abs() < (m_inf - 0.5).abs());
        let expected_m: f64 = relax_gate(0.5, alpha_m(-30.0), beta_m(-30.0), DT);
        assert_eq!(next.gates[0], expected_m);
    }

    #[test]
    fn resting_fixed_point_is_stationary() {
        let rest = converge_to_rest();
        let (next, _) = cell_update(&rest, &DEFAULT_CONDUCTANCES, 0.0, 0.0, DT).unwrap();
        for (a, b) in next.to_array().iter().zip(rest.to_array().iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(rest.vsoma < -60.0 && rest.vsoma > -70.0, "rest at {}", rest.vsoma);
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let s = NeuronState::<f64>::resting_default();
        assert!(cell_update(&s, &DEFAULT_CONDUCTANCES, f64::NAN, 0.0, DT).is_err());
        assert!(cell_update(&s, &DEFAULT_CONDUCTANCES, 0.0, f64::INFINITY, DT).is_err());
        let mut bad = s;
        bad.vsoma = f64::NAN;
        assert!(matches!(
            cell_update(&bad, &DEFAULT_CONDUCTANCES, 0.0, 0.0, DT),
            Err(Error::NumericDomain(_))
        ));
    }

    #[test]
    fn zero_capacitance_rejected() {
        let mut cond = DEFAULT_CONDUCTANCES;
        cond.c_m_axon = 0.0;
        let s = NeuronState::<f64>::resting_default();
        assert!(cell_update(&s, &cond, 0.0, 0.0, DT).is_err());
    }

    #[test]
    fn rates_continuous_across_singularity() {
        for v0 in [-40.0f64, -55.0] {
            let at = alpha_m(v0) + alpha_n(v0);
            let near = alpha_m(v0 + 1e-7) + alpha_n(v0 + 1e-7);
            assert!((at - near).abs() < 1e-7, "{at} {near}");
        }
    }

    #[test]
    fn documented_cell_op_count() {
        let s = NeuronState::<Counted>::resting_default();
        let k = CellKernel::<Counted>::new(&DEFAULT_CONDUCTANCES).unwrap();
        Counted::take_count();
        let _ = k.step(&s, Counted(0.0), Counted(0.0), Counted(DT));
        assert_eq!(Counted::take_count(), CELL_UPDATE_OPS);
    }

    #[test]
    fn f32_tracks_f64_over_short_run() {
        let k64 = CellKernel::<f64>::new(&DEFAULT_CONDUCTANCES).unwrap();
        let k32 = CellKernel::<f32>::new(&DEFAULT_CONDUCTANCES).unwrap();
        let mut a = NeuronState::<f64>::resting_default();
        let mut b = NeuronState::<f32>::resting_default();
        for _ in 0..200 {
            a = k64.step(&a, 0.0, 5.0, DT);
            b = k32.step(&b, 0.0, 5.0, DT as f32);
        }
        assert!((a.vdend - b.vdend as f64).abs() < 1e-2);
    }
}
