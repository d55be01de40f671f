use core::fmt;
use core::ops::{Add, AddAssign, Sub};

/// Simulation clock value in integer nanoseconds.
///
/// Integer time keeps event ordering and trace digests exact across runs;
/// floating seconds only appear at the reporting boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs_f64(secs: f64) -> SimTime {
        debug_assert!(secs >= 0.0 && secs.is_finite());
        SimTime(libm::round(secs * 1e9) as u64)
    }

    pub fn from_nanos(ns: u64) -> SimTime {
        SimTime(ns)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}", self.as_secs_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_roundtrip_is_exact_for_millis() {
        let t = SimTime::from_secs_f64(0.001);
        assert_eq!(t.as_nanos(), 1_000_000);
        assert_eq!(SimTime::from_secs_f64(2.8).as_nanos(), 2_800_000_000);
    }

    #[test]
    fn ordering() {
        assert!(SimTime::from_secs_f64(1.0) < SimTime::from_secs_f64(1.5));
    }
}
