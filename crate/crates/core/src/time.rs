//! Exact timestamps and half-open time intervals.
//!
//! Timestamps are read from decimal literals and kept as rationals so that
//! interval membership at the endpoints never depends on float rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(Ratio<i64>);

impl Time {
    pub const ZERO: Time = Time(Ratio::new_raw(0, 1));

    pub fn from_integer(v: i64) -> Self {
        Time(Ratio::from_integer(v))
    }

    pub fn new(numer: i64, denom: i64) -> Self {
        Time(Ratio::new(numer, denom))
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_negative(self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    /// Whether `self` is an integer multiple of `period` (period > 0).
    pub fn is_multiple_of(self, period: Time) -> bool {
        (self.0 / period.0).is_integer()
    }

    pub fn mul_int(self, n: i64) -> Self {
        Time(self.0 * n)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl Neg for Time {
    type Output = Time;
    fn neg(self) -> Time {
        Time(-self.0)
    }
}

impl FromStr for Time {
    type Err = String;

    /// Accepts `[-+]digits[.digits]` and the `p/q` form that `Display`
    /// uses for non-terminating values.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let bad = || format!("invalid fraction `{s}`");
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q <= 0 {
                return Err(bad());
            }
            return Ok(Time(Ratio::new(p, q)));
        }
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int.is_empty() && frac.is_empty()) || !digits_ok(int) || !digits_ok(frac) {
            return Err(format!("invalid decimal literal `{s}`"));
        }
        if frac.len() > 15 {
            return Err(format!("too many fractional digits in `{s}`"));
        }
        let mut numer: i64 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            numer = numer
                .checked_mul(10)
                .and_then(|n| n.checked_add(i64::from(b - b'0')))
                .ok_or_else(|| format!("decimal literal `{s}` out of range"))?;
        }
        let denom = 10i64.pow(frac.len() as u32);
        let r = Ratio::new(numer, denom);
        Ok(Time(if neg { -r } else { r }))
    }
}

impl fmt::Display for Time {
    /// Exact decimal rendering; falls back to `p/q` for non-terminating values.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        let (numer, denom) = (*r.numer(), *r.denom());
        if denom == 1 {
            return write!(f, "{numer}");
        }
        let mut d = denom;
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        if d != 1 {
            return write!(f, "{numer}/{denom}");
        }
        let places = twos.max(fives);
        let scale = 10i128.pow(places) / i128::from(denom);
        let scaled = i128::from(numer) * scale;
        let sign = if scaled < 0 { "-" } else { "" };
        let abs = scaled.unsigned_abs();
        let pow = 10u128.pow(places);
        let frac = format!("{:0width$}", abs % pow, width = places as usize);
        write!(f, "{sign}{}.{}", abs / pow, frac.trim_end_matches('0'))
    }
}

/// Upper end of an interval: a finite time or +∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(Time),
    Infinite,
}

impl Bound {
    pub fn finite(self) -> Option<Time> {
        match self {
            Bound::Finite(t) => Some(t),
            Bound::Infinite => None,
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => a.cmp(b),
            (Bound::Finite(_), Bound::Infinite) => Ordering::Less,
            (Bound::Infinite, Bound::Finite(_)) => Ordering::Greater,
            (Bound::Infinite, Bound::Infinite) => Ordering::Equal,
        }
    }
}

/// Half-open interval `[lo, hi)` with `0 <= lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Time,
    hi: Bound,
}

impl Interval {
    pub fn new(lo: Time, hi: Bound) -> Result<Self> {
        if lo.is_negative() {
            return Err(Error::Interval {
                pos: 0,
                msg: format!("lower bound {lo} is negative"),
            });
        }
        if let Bound::Finite(h) = hi {
            if lo >= h {
                return Err(Error::Interval {
                    pos: 0,
                    msg: format!("lower bound {lo} is not below upper bound {h}"),
                });
            }
        }
        Ok(Interval { lo, hi })
    }

    pub fn bounded(lo: i64, hi: i64) -> Result<Self> {
        Interval::new(Time::from_integer(lo), Bound::Finite(Time::from_integer(hi)))
    }

    pub fn lo(&self) -> Time {
        self.lo
    }

    pub fn hi(&self) -> Bound {
        self.hi
    }

    pub fn contains(&self, d: Time) -> bool {
        d >= self.lo && Bound::Finite(d) < self.hi
    }

    /// `d` lies past the upper end (`d >= hi`).
    pub fn is_past(&self, d: Time) -> bool {
        Bound::Finite(d) >= self.hi
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(t) => t.fmt(f),
            Bound::Infinite => f.write_str("inf"),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Bound::Finite(h) => write!(f, "[{},{})", self.lo, h),
            Bound::Infinite => write!(f, "[{},inf)", self.lo),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        for s in ["0", "1", "-4", "0.5", "-0.25", "12.125", "0.1"] {
            let t: Time = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        let t: Time = "3.50".parse().unwrap();
        assert_eq!(t.to_string(), "3.5");
        assert_eq!(Time::new(1, 3).to_string(), "1/3");
        assert_eq!("1/3".parse::<Time>().unwrap(), Time::new(1, 3));
        assert_eq!("-7/6".parse::<Time>().unwrap().to_string(), "-7/6");
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", ".", "1e3", "abc", "1.2.3", "--1", "1/0", "1/-2", "/3"] {
            assert!(s.parse::<Time>().is_err(), "{s}");
        }
    }

    #[test]
    fn exact_sums() {
        let a: Time = "0.1".parse().unwrap();
        let b: Time = "0.2".parse().unwrap();
        assert_eq!(a + b, "0.3".parse().unwrap());
    }

    #[test]
    fn interval_membership_is_half_open() {
        let i = Interval::bounded(1, 3).unwrap();
        assert!(!i.contains(Time::from_integer(0)));
        assert!(i.contains(Time::from_integer(1)));
        assert!(i.contains("2.999".parse().unwrap()));
        assert!(!i.contains(Time::from_integer(3)));
        assert!(i.is_past(Time::from_integer(3)));
        assert!(Interval::bounded(3, 1).is_err());
        assert!(Interval::bounded(2, 2).is_err());
        let open = Interval::new(Time::ZERO, Bound::Infinite).unwrap();
        assert!(open.contains(Time::from_integer(1_000_000)));
        assert_eq!(open.to_string(), "[0,inf)");
    }
}
