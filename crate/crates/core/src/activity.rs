//! Activity time: the counter that switches a neuron between the active and
//! inactive regimes.
//!
//! A neuron is active iff its activity time is positive. The counter is
//! advanced once per tick and overwritten by spikes arriving at gating
//! synapses.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Signed tick counter with an absorbing `+INF` value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityTime(i64);

impl ActivityTime {
    /// Strictly greater than every finite activity time.
    pub const INFINITE: ActivityTime = ActivityTime(i64::MAX);
    pub const ZERO: ActivityTime = ActivityTime(0);

    /// Finite activity time. `i64::MAX` is reserved for [`Self::INFINITE`].
    pub fn finite(ticks: i64) -> Self {
        assert!(ticks != i64::MAX, "i64::MAX is the infinite sentinel");
        ActivityTime(ticks)
    }

    pub fn is_infinite(self) -> bool {
        self == Self::INFINITE
    }

    pub fn is_active(self) -> bool {
        self.0 > 0
    }

    /// Finite value, `None` for `+INF`.
    pub fn ticks(self) -> Option<i64> {
        (!self.is_infinite()).then_some(self.0)
    }

    /// Per-tick update.
    pub fn advance(self) -> Self {
        match self.0 {
            i64::MAX => self,
            a if a < -1 => ActivityTime(a + 1),
            -1 => Self::INFINITE,
            0 => self,
            a => ActivityTime(a - 1),
        }
    }

    /// Effect of a spike on a gating synapse of weight `omega`.
    ///
    /// Negative weights can only shorten the activity time, positive ones can
    /// only extend it. The target's current regime does not matter.
    pub fn gate(self, omega: GatingWeight) -> Self {
        let w = ActivityTime(omega.get());
        if omega.get() < 0 {
            self.min(w)
        } else {
            self.max(w)
        }
    }
}

impl fmt::Debug for ActivityTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ticks() {
            Some(a) => write!(f, "{a}"),
            None => f.write_str("+INF"),
        }
    }
}

impl fmt::Display for ActivityTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Nonzero integer weight of a gating synapse, in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GatingWeight(i64);

impl GatingWeight {
    pub fn new(omega: i64) -> Result<Self, Error> {
        if omega == 0 || omega == i64::MAX || omega == i64::MIN {
            return Err(Error::InvalidGatingWeight(omega as f64));
        }
        Ok(GatingWeight(omega))
    }

    /// Config weights are written as decimals; they are rounded to whole ticks.
    pub fn from_config(weight: f64) -> Result<Self, Error> {
        let rounded = weight.round();
        if !rounded.is_finite() || rounded == 0.0 || rounded.abs() > 1e15 {
            return Err(Error::InvalidGatingWeight(weight));
        }
        Self::new(rounded as i64)
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

/// Free-function form of [`ActivityTime::advance`].
pub fn update_activity_time(a: ActivityTime) -> ActivityTime {
    a.advance()
}

/// Free-function form of [`ActivityTime::gate`].
pub fn apply_gating_spike(a: ActivityTime, omega: GatingWeight) -> ActivityTime {
    a.gate(omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(a: i64) -> ActivityTime {
        ActivityTime::finite(a)
    }

    fn gw(w: i64) -> GatingWeight {
        GatingWeight::new(w).unwrap()
    }

    #[test]
    fn advance_examples() {
        assert_eq!(at(5).advance(), at(4));
        assert_eq!(at(-1).advance(), ActivityTime::INFINITE);
        assert_eq!(at(0).advance(), at(0));
        assert_eq!(at(-10).advance(), at(-9));
        assert_eq!(ActivityTime::INFINITE.advance(), ActivityTime::INFINITE);
    }

    #[test]
    fn gate_examples() {
        assert_eq!(ActivityTime::INFINITE.gate(gw(-10)), at(-10));
        assert_eq!(at(0).gate(gw(1)), at(1));
        assert_eq!(at(9).gate(gw(1)), at(9));
        assert_eq!(ActivityTime::INFINITE.gate(gw(1)), ActivityTime::INFINITE);
    }

    #[test]
    fn zero_gating_weight_rejected() {
        assert!(GatingWeight::new(0).is_err());
        assert!(GatingWeight::from_config(0.2).is_err());
        assert_eq!(GatingWeight::from_config(-10.0).unwrap().get(), -10);
    }

    #[test]
    fn negative_countdown_reaches_infinity() {
        for k in 2..40 {
            let mut a = at(-k);
            for _ in 0..k - 1 {
                assert!(!a.is_active());
                a = a.advance();
            }
            assert_eq!(a, at(-1));
            assert_eq!(a.advance(), ActivityTime::INFINITE);
        }
    }

    #[test]
    fn positive_countdown_deactivates_after_k_ticks() {
        for k in 1..40 {
            let mut a = at(k);
            for _ in 0..k {
                assert!(a.is_active());
                a = a.advance();
            }
            assert!(!a.is_active());
            assert_eq!(a, at(0));
        }
    }

    #[test]
    fn display_marks_infinity() {
        assert_eq!(ActivityTime::INFINITE.to_string(), "+INF");
        assert_eq!(at(-3).to_string(), "-3");
    }
}
