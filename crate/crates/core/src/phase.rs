//! Phase arithmetic and leg indexing shared by every module.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Footfall / beat anchor phase.
pub const FOOTFALL_PHASE: f64 = 1.5 * PI;

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(−π, π]`.
#[inline]
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_2pi(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// 2-D ring encoding `(cos φ, sin φ)`.
///
/// The argument of `sin` goes through `black_box` so optimized builds cannot
/// fuse the pair into one `sincos` call, which can differ by an ulp and would
/// make run logs depend on the build profile.
#[inline]
pub fn ring(phi: f64) -> [f64; 2] {
    [phi.cos(), std::hint::black_box(phi).sin()]
}

/// Signed wrapped difference between two ring points, `φ − θ ∈ (−π, π]`.
pub fn ring_error(phi_obs: [f64; 2], theta_obs: [f64; 2]) -> f64 {
    let s = phi_obs[1] * theta_obs[0] - phi_obs[0] * theta_obs[1];
    let c = phi_obs[0] * theta_obs[0] + phi_obs[1] * theta_obs[1];
    let e = s.atan2(c);
    if e <= -PI {
        PI
    } else {
        e
    }
}

/// Legs in the fixed oscillator order RF, LF, RH, LH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Leg {
    RF,
    LF,
    RH,
    LH,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::RF, Leg::LF, Leg::RH, Leg::LH];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 1-based leg number as used in the gait literature (RF = 1).
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Option<Leg> {
        Leg::ALL.get(n.checked_sub(1)?).copied()
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Leg::RF => "RF",
            Leg::LF => "LF",
            Leg::RH => "RH",
            Leg::LH => "LH",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_ranges() {
        assert_eq!(wrap_2pi(TAU), 0.0);
        assert_eq!(wrap_2pi(-1e-18), 0.0);
        assert!((wrap_2pi(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert_eq!(wrap_pi(PI), PI);
        assert_eq!(wrap_pi(-PI), PI);
        assert!((wrap_pi(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn ring_error_sign() {
        let e = ring_error(ring(0.3), ring(0.1));
        assert!((e - 0.2).abs() < 1e-12);
        assert!((ring_error(ring(PI), ring(0.0)) - PI).abs() < 1e-12);
    }

    #[test]
    fn leg_numbers() {
        assert_eq!(Leg::from_number(1), Some(Leg::RF));
        assert_eq!(Leg::from_number(4), Some(Leg::LH));
        assert_eq!(Leg::from_number(0), None);
        assert_eq!(Leg::from_number(5), None);
        assert_eq!(Leg::LH.number(), 4);
    }
}
