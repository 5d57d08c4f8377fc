use crate::error::{Error, Result};
use crate::logic::formula::Formula;
use crate::time::{Bound, Interval, Time};

fn plus(b: Bound, i: &Interval) -> Bound {
    match (b, i.hi()) {
        (Bound::Finite(x), Bound::Finite(h)) => Bound::Finite(x + h),
        _ => Bound::Infinite,
    }
}

/// History a past-time formula needs to be evaluable: `|pi| = 0`,
/// `|P_[a,b) f| = |H_[a,b) f| = |f| + b`, `|f S_[a,b) g| = max(|f|, |g|) + b`.
pub fn necessary_length(psi: &Formula) -> Result<Bound> {
    Ok(match psi {
        Formula::True | Formula::False | Formula::Atom(_) => Bound::Finite(Time::ZERO),
        Formula::Not(f) => necessary_length(f)?,
        Formula::And(a, b) | Formula::Or(a, b) => necessary_length(a)?.max(necessary_length(b)?),
        Formula::Once(i, f) | Formula::Historically(i, f) => plus(necessary_length(f)?, i),
        Formula::Since(i, a, b) => plus(necessary_length(a)?.max(necessary_length(b)?), i),
        Formula::Until(..) | Formula::Eventually(..) | Formula::Always(..) => {
            return Err(Error::Direction {
                found: "future",
                allowed: "past",
            })
        }
    })
}

/// Future counterpart of [`necessary_length`]: how far past `t(k)` a trace
/// must extend for `phi` to be decided at `k`.
pub fn required_horizon(phi: &Formula) -> Result<Bound> {
    Ok(match phi {
        Formula::True | Formula::False | Formula::Atom(_) => Bound::Finite(Time::ZERO),
        Formula::Not(f) => required_horizon(f)?,
        Formula::And(a, b) | Formula::Or(a, b) => required_horizon(a)?.max(required_horizon(b)?),
        Formula::Eventually(i, f) | Formula::Always(i, f) => plus(required_horizon(f)?, i),
        Formula::Until(i, a, b) => plus(required_horizon(a)?.max(required_horizon(b)?), i),
        Formula::Since(..) | Formula::Once(..) | Formula::Historically(..) => {
            return Err(Error::Direction {
                found: "past",
                allowed: "future",
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse;

    fn nl(s: &str) -> Result<Bound> {
        necessary_length(&parse(s).unwrap())
    }

    fn rh(s: &str) -> Result<Bound> {
        required_horizon(&parse(s).unwrap())
    }

    fn fin(v: i64) -> Bound {
        Bound::Finite(Time::from_integer(v))
    }

    #[test]
    fn necessary_length_examples() {
        assert_eq!(nl("a").unwrap(), fin(0));
        assert_eq!(nl("H[0,2)(P[1,3) a)").unwrap(), fin(5));
        assert_eq!(nl("!a").unwrap(), fin(0));
        assert_eq!(nl("a S[0,4) P[0,1) b").unwrap(), fin(5));
        assert_eq!(nl("P[0,inf) a").unwrap(), Bound::Infinite);
        assert!(matches!(nl("F[0,1) a"), Err(Error::Direction { .. })));
    }

    #[test]
    fn required_horizon_examples() {
        assert_eq!(rh("F[0,10)(r1 & F[0,15) r2) & G[0,40) !obs").unwrap(), fin(40));
        assert_eq!(rh("a").unwrap(), fin(0));
        assert_eq!(rh("G[0,5) F[0,5) a").unwrap(), fin(10));
        assert_eq!(rh("true").unwrap(), fin(0));
        assert!(matches!(rh("P[0,1) a"), Err(Error::Direction { .. })));
    }
}
