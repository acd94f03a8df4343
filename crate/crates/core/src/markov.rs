//! Exact expected completion time of the randomized single-part strategy.
//!
//! State `i` counts peers holding the file. In a round each of the `N - i`
//! needy peers picks a target uniformly at random; every useful target (the
//! server or a holder) that receives at least one request serves exactly one.
//! With `h = i + 1` useful targets, `v` useless ones and `T = h + v` choices,
//! the number of request sequences occupying exactly `o` useful targets
//! obeys
//!
//! ```text
//! ways'[o]     += ways[o] * (o + v)
//! ways'[o + 1] += ways[o] * (h - o)
//! ```
//!
//! and `p(i, i + o) = ways[o] / T^(N - i)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::rational::{self, Rational};
use crate::sim::Scenario;

/// Largest chain built.
pub const MAX_PEERS: usize = 512;
/// Largest chain whose hitting times are solved in exact rationals.
pub const MAX_EXACT_PEERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisseminationChain {
    pub n_peers: usize,
    pub scenario: Scenario,
    /// `rows[i][m]` is the probability of moving from `i` to `i + m`.
    rows: Vec<Vec<Rational>>,
}

impl DisseminationChain {
    pub fn p(&self, from: usize, to: usize) -> Rational {
        if to < from {
            Rational::zero()
        } else {
            self.rows[from].get(to - from).cloned().unwrap_or_else(Rational::zero)
        }
    }

    pub fn row(&self, from: usize) -> &[Rational] {
        &self.rows[from]
    }

    /// Expected rounds to full dissemination from every state, in `f64`.
    pub fn hitting_times(&self) -> Result<Vec<f64>> {
        let n = self.n_peers;
        let mut k = vec![0.0f64; n + 1];
        for i in (0..n).rev() {
            let row = &self.rows[i];
            if row[0].is_one() {
                return Err(Error::AbsorbingBeforeTarget { state: i });
            }
            let stay = rational::to_f64(&(Rational::one() - &row[0]));
            let ahead: f64 = row.iter().enumerate().skip(1).map(|(m, p)| rational::to_f64(p) * k[i + m]).sum();
            k[i] = (1.0 + ahead) / stay;
        }
        Ok(k)
    }

    /// Exact hitting times; limited to [`MAX_EXACT_PEERS`] peers.
    pub fn hitting_times_exact(&self) -> Result<Vec<Rational>> {
        let n = self.n_peers;
        if n > MAX_EXACT_PEERS {
            return Err(Error::SizeGuard(format!("exact hitting times limited to N <= {MAX_EXACT_PEERS}")));
        }
        let mut k = vec![Rational::zero(); n + 1];
        for i in (0..n).rev() {
            let row = &self.rows[i];
            if row[0].is_one() {
                return Err(Error::AbsorbingBeforeTarget { state: i });
            }
            let ahead = row.iter().enumerate().skip(1).fold(Rational::zero(), |acc, (m, p)| acc + p * &k[i + m]);
            k[i] = (Rational::one() + ahead) / (Rational::one() - &row[0]);
        }
        Ok(k)
    }
}

/// Transition row of state `held` out of `n_peers`.
fn transition_row(n_peers: usize, held: usize, scenario: Scenario) -> Vec<Rational> {
    let requesters = n_peers - held;
    let useful = held + 1;
    let useless = match scenario {
        Scenario::List => 0,
        Scenario::NoList => n_peers - 1 - held.min(n_peers - 1),
    };
    let choices = BigUint::from(useful + useless);
    let width = useful.min(requesters) + 1;
    let mut ways = vec![BigUint::zero(); width];
    ways[0] = BigUint::one();
    for r in 0..requesters {
        let top = useful.min(r + 1);
        for o in (0..=top.min(width - 1)).rev() {
            let mut w = &ways[o] * BigUint::from(o + useless);
            if o > 0 {
                w += &ways[o - 1] * BigUint::from(useful - (o - 1));
            }
            ways[o] = w;
        }
    }
    let total = BigInt::from(num_traits::pow(choices, requesters));
    ways.into_iter().map(|w| Rational::new(BigInt::from(w), total.clone())).collect()
}

pub fn build_chain(n_peers: usize, scenario: Scenario) -> Result<DisseminationChain> {
    build_chain_with(n_peers, scenario, Execution::default())
}

/// Rows are independent and computed with `exec`.
pub fn build_chain_with(n_peers: usize, scenario: Scenario, exec: Execution) -> Result<DisseminationChain> {
    if n_peers == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if n_peers > MAX_PEERS {
        return Err(Error::SizeGuard(format!("exact chains limited to N <= {MAX_PEERS}")));
    }
    let rows = map_range(exec, n_peers + 1, |i| transition_row(n_peers, i, scenario));
    Ok(DisseminationChain { n_peers, scenario, rows })
}

/// Expected rounds from the empty start.
pub fn expected_makespan(chain: &DisseminationChain) -> Result<f64> {
    Ok(chain.hitting_times()?[0])
}

pub fn expected_makespan_exact(chain: &DisseminationChain) -> Result<Rational> {
    Ok(chain.hitting_times_exact()?.swap_remove(0))
}

fn factorial(n: i64) -> Option<BigInt> {
    (n >= 0).then(|| (1..=n).fold(BigInt::one(), |acc, v| acc * v))
}

/// The closed-form occupancy expression for the no-list chain, evaluated
/// term by term as written; terms containing the factorial of a negative
/// number vanish. It makes state 0 absorbing and is kept only for
/// comparison with [`build_chain`].
pub fn occupancy_formula_transition(n_peers: usize, held: usize, gained: usize) -> Result<Rational> {
    if n_peers < 2 || held > n_peers || gained > n_peers - held {
        return Err(Error::InvalidArgument("need N >= 2 and 0 <= i <= i + m <= N".into()));
    }
    let (n, i, m) = (n_peers as i64, held as i64, gained as i64);
    let mut sum = Rational::zero();
    for j in (i - m).max(0)..=i {
        let (Some(a), Some(b), Some(c)) = (factorial(i - j), factorial(i - m), factorial(j - i + m)) else {
            continue;
        };
        let sign = if (j - i + m) % 2 == 0 { 1 } else { -1 };
        let coeff = Rational::new(BigInt::from(sign) * factorial(i).unwrap(), a * b * c);
        let base = Rational::new(BigInt::from(n - 1 - j), BigInt::from(n - 1));
        sum += coeff * num_traits::pow(base, (n - i) as usize);
    }
    Ok(sum)
}
