//! Closed-form optima for two peers.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{int, Rational};

/// The four candidate strategies for two peers sharing capacity `C_1` and a
/// file in two parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwoByTwoCase {
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for TwoByTwoCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoByTwo {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
    pub makespan: Rational,
    pub case: TwoByTwoCase,
}

/// Evaluates all four strategies; the minimum wins, ties resolved in the
/// order A, C, D, B.
pub fn two_by_two_cases(cs: &Rational, c1: &Rational) -> Result<TwoByTwo> {
    if !cs.is_positive() || !c1.is_positive() {
        return Err(Error::InvalidArgument("both capacities must be positive".into()));
    }
    let half = Rational::new(1.into(), 2.into());
    let s = Rational::one() / cs;
    let p = Rational::one() / c1;
    let a = int(2) * &s;
    let b = &half * &s + &half * &p + (&half * &s).max(&half * &p);
    let c = &half * &s + s.clone().max(&half * &p);
    let d = s.clone() + &half * &p;
    let (makespan, case) = [(&a, TwoByTwoCase::A), (&c, TwoByTwoCase::C), (&d, TwoByTwoCase::D), (&b, TwoByTwoCase::B)]
        .into_iter()
        .fold(None::<(&Rational, TwoByTwoCase)>, |best, (v, label)| match best {
            Some((bv, _)) if bv <= v => best,
            _ => Some((v, label)),
        })
        .map(|(v, l)| (v.clone(), l))
        .expect("four candidates");
    Ok(TwoByTwo { a, b, c, d, makespan, case })
}

pub fn two_by_two_makespan(cs: &Rational, c1: &Rational) -> Result<(Rational, TwoByTwoCase)> {
    two_by_two_cases(cs, c1).map(|t| (t.makespan, t.case))
}

/// Two peers, one part: either both fetch from the server or one relays.
pub fn n2_m1_makespan(cs: &Rational, c1: &Rational) -> Result<Rational> {
    if !cs.is_positive() || c1.is_negative() {
        return Err(Error::InvalidArgument("need C_S > 0 and C_1 >= 0".into()));
    }
    let s = Rational::one() / cs;
    if c1.is_zero() {
        return Ok(int(2) * s);
    }
    let relay = Rational::one() / c1;
    Ok(s.clone() + s.min(relay))
}
