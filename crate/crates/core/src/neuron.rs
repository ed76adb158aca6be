//! LIF neuron state and the per-tick primitives acting on it.
//!
//! Potentials are dimensionless, in units of the base threshold (1). One tick
//! is one millisecond.

use crate::activity::ActivityTime;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::synapse::{Synapse, Tick};

#[derive(Clone, Debug, PartialEq)]
pub struct SectionParams<T> {
    /// Membrane leakage time constant in ticks.
    pub tau_v: T,
    pub initial_activity: ActivityTime,
}

impl<T: Scalar> SectionParams<T> {
    pub fn new(tau_v: T, initial_activity: ActivityTime) -> Result<Self> {
        if !(tau_v > T::zero()) || !tau_v.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "membrane time constant must be positive, got {tau_v}"
            )));
        }
        Ok(SectionParams {
            tau_v,
            initial_activity,
        })
    }

    /// Per-tick multiplicative decay `exp(-1/tau_v)`.
    pub fn decay(&self) -> T {
        (-self.tau_v.recip()).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuronState<T> {
    pub u: T,
    pub h: T,
    pub a: ActivityTime,
    pub last_fire_tick: Option<Tick>,
    pub last_fire_forced: bool,
}

impl<T: Scalar> NeuronState<T> {
    pub fn new(initial_activity: ActivityTime) -> Self {
        NeuronState {
            u: T::zero(),
            h: T::one(),
            a: initial_activity,
            last_fire_tick: None,
            last_fire_forced: false,
        }
    }

    pub fn is_active(&self) -> bool {
        self.a.is_active()
    }
}

/// Outcome of [`fire_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Firing {
    pub fired: bool,
    pub forced: bool,
}

/// Exact one-tick integration of the leak term.
pub fn leak_step<T: Scalar>(u: T, tau_v: T) -> T {
    debug_assert!(tau_v > T::zero());
    u * (-tau_v.recip()).exp()
}

/// Delivers a spike arriving on a plastic or fixed synapse at tick `now`.
///
/// Inactive neurons ignore the potential change; the arrival is recorded on
/// the synapse either way.
pub fn integrate_spike<T: Scalar>(
    state: &mut NeuronState<T>,
    synapse: &mut Synapse<T>,
    now: Tick,
) -> Result<()> {
    if !synapse.kind.changes_potential() {
        return Err(Error::NotPotentialSynapse { kind: synapse.kind });
    }
    if state.is_active() {
        state.u = state.u + synapse.weight;
    }
    synapse.last_pre_spike_tick = Some(now);
    Ok(())
}

/// Threshold crossing with subtractive reset.
pub fn fire_check<T: Scalar>(
    state: &mut NeuronState<T>,
    had_fixed_input_this_tick: bool,
    now: Tick,
) -> Firing {
    if state.is_active() && state.u > state.h {
        state.u = state.u - state.h;
        state.last_fire_tick = Some(now);
        state.last_fire_forced = had_fixed_input_this_tick;
        Firing {
            fired: true,
            forced: had_fixed_input_this_tick,
        }
    } else {
        Firing {
            fired: false,
            forced: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synapse::{Source, SynapseKind};

    fn active(u: f64) -> NeuronState<f64> {
        let mut s = NeuronState::new(ActivityTime::INFINITE);
        s.u = u;
        s
    }

    fn fixed(w: f64) -> Synapse<f64> {
        Synapse::new(Source::Input(0), 0, SynapseKind::Fixed, w, 0)
    }

    #[test]
    fn leak_matches_closed_form() {
        assert_eq!(leak_step(0.0, 3.0), 0.0);
        assert!((leak_step(0.5f64, 3.0) - 0.358_265_655_286_894_6).abs() < 1e-12);
        assert!((leak_step(1.0f64, 1.0) - 0.367_879_441_171_442_3).abs() < 1e-12);
        assert!((leak_step(1.0f32, 1.0) - 0.367_879_45).abs() < 1e-6);
    }

    #[test]
    fn integrate_active_and_inactive() {
        let mut s = active(0.2);
        let mut syn = fixed(0.3);
        integrate_spike(&mut s, &mut syn, 7).unwrap();
        assert!((s.u - 0.5).abs() < 1e-15);
        assert_eq!(syn.last_pre_spike_tick, Some(7));

        let mut s = active(0.2);
        s.a = ActivityTime::ZERO;
        let mut syn = fixed(0.3);
        integrate_spike(&mut s, &mut syn, 8).unwrap();
        assert_eq!(s.u, 0.2);
        assert_eq!(syn.last_pre_spike_tick, Some(8));

        let mut s = active(0.2);
        integrate_spike(&mut s, &mut fixed(-10.0), 0).unwrap();
        assert!((s.u + 9.8).abs() < 1e-12);
    }

    #[test]
    fn integrate_rejects_gating_and_reward() {
        let mut s = active(0.0);
        let mut syn = Synapse::new(Source::Neuron(1), 0, SynapseKind::Reward, 0.15, 0);
        assert!(integrate_spike(&mut s, &mut syn, 0).is_err());
        let mut syn = Synapse::new_gating(
            Source::Neuron(1),
            0,
            crate::activity::GatingWeight::new(-10).unwrap(),
            0,
        );
        assert!(integrate_spike(&mut s, &mut syn, 0).is_err());
        assert_eq!(s.u, 0.0);
    }

    #[test]
    fn fire_check_examples() {
        let mut s = active(1.2);
        let f = fire_check(&mut s, false, 3);
        assert!(f.fired && !f.forced);
        assert!((s.u - 0.2).abs() < 1e-12);
        assert_eq!(s.last_fire_tick, Some(3));

        let mut s = active(1.2);
        let f = fire_check(&mut s, true, 3);
        assert!(f.fired && f.forced);
        assert!(s.last_fire_forced);

        let mut s = active(0.9);
        let f = fire_check(&mut s, true, 3);
        assert!(!f.fired);
        assert_eq!(s.u, 0.9);
        assert_eq!(s.last_fire_tick, None);
    }

    #[test]
    fn inactive_never_fires() {
        let mut s = active(50.0);
        s.a = ActivityTime::finite(-3);
        assert!(!fire_check(&mut s, false, 0).fired);
        assert_eq!(s.u, 50.0);
    }

    #[test]
    fn section_params_reject_nonpositive_tau() {
        assert!(SectionParams::new(0.0, ActivityTime::INFINITE).is_err());
        assert!(SectionParams::new(-1.0, ActivityTime::INFINITE).is_err());
        assert!(SectionParams::new(3.0f32, ActivityTime::INFINITE).is_ok());
    }
}
