//! Outward-rounded arithmetic on nonnegative `f64` intervals.
//!
//! Every operation rounds to nearest and then steps one ulp outward, which
//! encloses the exact result without touching the FPU rounding mode.

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Interval {
    pub lo: f64,
    pub hi: f64,
}

const EXACT_LIMIT: u128 = 1 << 53;

impl Interval {
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn from_u128(n: u128) -> Self {
        let f = n as f64;
        if n <= EXACT_LIMIT {
            Interval { lo: f, hi: f }
        } else {
            Interval {
                lo: f.next_down(),
                hi: f.next_up(),
            }
        }
    }

    pub fn mul(self, other: Interval) -> Self {
        Interval {
            lo: (self.lo * other.lo).next_down().max(0.0),
            hi: (self.hi * other.hi).next_up(),
        }
    }

    /// `self / other` for strictly positive `other`.
    pub fn div(self, other: Interval) -> Self {
        debug_assert!(other.lo > 0.0);
        Interval {
            lo: (self.lo / other.hi).next_down().max(0.0),
            hi: (self.hi / other.lo).next_up(),
        }
    }

    pub fn pow(self, exp: u32) -> Self {
        (0..exp).fold(Interval::ONE, |acc, _| acc.mul(self))
    }

    /// `1 - self` for `self` inside `[0, 1]`, clamped to `[0, 1]`.
    pub fn one_minus(self) -> Self {
        Interval {
            lo: (1.0 - self.hi).next_down().max(0.0),
            hi: (1.0 - self.lo).next_up().min(1.0),
        }
    }

    /// Product of two factors known to lie in `[0, 1]`; the upper end never
    /// exceeds the upper end of `self`.
    pub fn mul_unit(self, factor: Interval) -> Self {
        let p = self.mul(factor);
        Interval {
            lo: p.lo,
            hi: p.hi.min(self.hi),
        }
    }

    #[cfg(test)]
    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}
