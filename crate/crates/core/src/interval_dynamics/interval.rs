use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{format_rational, int, Rational, Scalar};

/// A closed interval `[lo, hi]` with exact rational endpoints, `lo < hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidInterval {
                lo: format_rational(&lo),
                hi: format_rational(&hi),
            });
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: int(0), hi: int(1) }
    }

    /// Closed hull of two (unordered) points; `None` if they coincide.
    pub fn spanning(p: Rational, q: Rational) -> Option<Self> {
        if p < q {
            Some(Interval { lo: p, hi: q })
        } else if q < p {
            Some(Interval { lo: q, hi: p })
        } else {
            None
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains<S: Scalar>(&self, x: &S) -> bool {
        use std::cmp::Ordering::*;
        matches!(x.order_rational(&self.lo), Some(Greater | Equal)) && matches!(x.order_rational(&self.hi), Some(Less | Equal))
    }

    /// `[lo, hi)`, or `[lo, hi]` when `include_hi`.
    pub fn contains_half_open<S: Scalar>(&self, x: &S, include_hi: bool) -> bool {
        use std::cmp::Ordering::*;
        matches!(x.order_rational(&self.lo), Some(Greater | Equal))
            && match x.order_rational(&self.hi) {
                Some(Less) => true,
                Some(Equal) => include_hi,
                _ => false,
            }
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Intersection of positive length.
    pub fn overlap(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo > other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi < other.hi { &self.hi } else { &other.hi };
        (lo < hi).then(|| Interval { lo: lo.clone(), hi: hi.clone() })
    }

    pub fn overlap_length(&self, other: &Interval) -> Rational {
        self.overlap(other).map(|i| i.length()).unwrap_or_else(Rational::zero)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (f64::from_rational(&self.lo), f64::from_rational(&self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", format_rational(&self.lo), format_rational(&self.hi))
    }
}
