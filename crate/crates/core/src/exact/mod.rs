//! Minimal makespan for arbitrary capacities: grid feasibility search with
//! bisection over the horizon, plus closed forms and a round-based oracle for
//! tiny instances.

mod brute;
mod closed_form;
mod discretized;
mod search;

pub use brute::{brute_force_rounds, brute_force_rounds_guarded, DEFAULT_GUARD};
pub use closed_form::{n2_m1_makespan, two_by_two_cases, two_by_two_makespan, TwoByTwo, TwoByTwoCase};
pub use discretized::DiscretizedProblem;
pub use search::SearchOptions;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{ContinuousSchedule, Instance};
use crate::rational::{self, Rational};
use crate::verify::verify_schedule;
use search::{to_schedule, Grid, Searcher};

/// Lcm of capacity denominators and lcm of the nonzero rescaled capacities.
fn capacity_lcms(inst: &Instance) -> (BigInt, BigInt) {
    let caps: Vec<&Rational> = std::iter::once(&inst.server_capacity).chain(&inst.peer_capacities).collect();
    let den = caps.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let l = caps
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| (*c * Rational::from_integer(den.clone())).to_integer())
        .fold(BigInt::one(), |acc, c| acc.lcm(&c));
    (den, l)
}

/// A step small enough that some optimal schedule starts and ends every job on
/// its multiples: `D / (M L)^(M N)` with `D` the lcm of capacity denominators
/// and `L` the lcm of the capacities rescaled to integers.
pub fn exact_tau(inst: &Instance) -> Rational {
    let (den, l) = capacity_lcms(inst);
    let base = BigInt::from(inst.n_parts) * l;
    let exp = inst.n_parts * inst.n_peers;
    Rational::new(den, num_traits::pow(base, exp))
}

/// `D / (M L)`: divides every job length, so searches on it are also exact.
pub fn default_tau(inst: &Instance) -> Rational {
    let (den, l) = capacity_lcms(inst);
    Rational::new(den, BigInt::from(inst.n_parts) * l)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Exact,
    /// Optimal on the grid; the true optimum is at most `gap` smaller.
    Approximate { gap: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    /// Makespan of `schedule` (jobs at exact length, so at most `grid_makespan`).
    pub makespan: Rational,
    /// Smallest feasible horizon on the grid.
    pub grid_makespan: Rational,
    /// Certified lower bound on the true optimum.
    pub lower_bound: Rational,
    pub tau: Rational,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub schedule: ContinuousSchedule,
}

impl SolveResult {
    pub fn gap_bound(&self) -> Rational {
        match &self.status {
            SolveStatus::Exact => Rational::zero(),
            SolveStatus::Approximate { gap } => gap.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let schedule: serde_json::Value = serde_json::from_str(&self.schedule.to_json()).expect("schedule JSON");
        json!({
            "status": match self.status { SolveStatus::Exact => "exact", SolveStatus::Approximate { .. } => "approximate" },
            "makespan": rational::format(&self.makespan),
            "makespan_decimal": rational::to_f64(&self.makespan),
            "grid_makespan": rational::format(&self.grid_makespan),
            "lower_bound": rational::format(&self.lower_bound),
            "gap_bound": rational::format(&self.gap_bound()),
            "tau": rational::format(&self.tau),
            "nodes_explored": self.nodes_explored,
            "schedule": schedule,
        })
    }
}

/// Canonical schedule finishing by `horizon` with every job starting on the
/// `tau` grid and lasting its length rounded up to the grid, or `None` when
/// none exists.
pub fn feasible(inst: &Instance, horizon: &Rational, tau: &Rational) -> Result<Option<ContinuousSchedule>> {
    feasible_with(inst, horizon, tau, SearchOptions::default())
}

pub fn feasible_with(
    inst: &Instance,
    horizon: &Rational,
    tau: &Rational,
    options: SearchOptions,
) -> Result<Option<ContinuousSchedule>> {
    let grid = Grid::new(inst, tau)?;
    if !(horizon / tau).is_integer() {
        return Err(Error::InvalidArgument("tau must divide the horizon".into()));
    }
    let mut searcher = Searcher::new(inst, &grid, options)?;
    Ok(searcher.solve(grid.ticks_in(horizon))?.map(|jobs| to_schedule(inst, &grid, &jobs)))
}

pub fn min_makespan(inst: &Instance, tau: &Rational) -> Result<SolveResult> {
    min_makespan_with(inst, tau, SearchOptions::default())
}

/// Bisection over the horizon in grid ticks. The server must upload every
/// part at least once, so `M` server jobs bound from below; the server
/// sending everything alone bounds from above.
pub fn min_makespan_with(inst: &Instance, tau: &Rational, options: SearchOptions) -> Result<SolveResult> {
    crate::model::validate_instance(inst)?;
    let grid = Grid::new(inst, tau)?;
    let mut searcher = Searcher::new(inst, &grid, options)?;
    let server = grid.durations[0].expect("server capacity is positive");
    let m = inst.n_parts as u64;
    let mut lo = m * server - 1;
    let mut hi = inst.n_peers as u64 * m * server;
    let mut best = searcher.solve(hi)?.expect("the server alone can serve everyone");
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match searcher.solve(mid)? {
            Some(jobs) => {
                hi = mid;
                best = jobs;
            }
            None => lo = mid,
        }
    }
    let schedule = to_schedule(inst, &grid, &best);
    let report = verify_schedule(inst, &schedule, false);
    assert!(report.valid, "search produced an invalid schedule: {:?}", report.violations);
    let makespan = schedule.makespan()?;
    let grid_makespan = &grid.tick * Rational::from_integer(hi.into());
    let nm = Rational::from_integer((inst.n_peers * inst.n_parts).into());
    let (status, lower_bound) = if grid.exact {
        (SolveStatus::Exact, makespan.clone())
    } else {
        let gap = nm * tau;
        let server_bound = Rational::one() / &inst.server_capacity;
        let volume_bound = Rational::from_integer(inst.n_peers.into()) / inst.total_capacity();
        let lb = (&grid_makespan - &gap).max(server_bound).max(volume_bound).min(makespan.clone());
        (SolveStatus::Approximate { gap }, lb)
    };
    Ok(SolveResult {
        makespan,
        grid_makespan,
        lower_bound,
        tau: tau.clone(),
        status,
        nodes_explored: searcher.nodes,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn unit(n: usize, m: usize) -> Instance {
        Instance::equal(n, m, int(1)).unwrap()
    }

    #[test]
    fn exact_tau_examples() {
        assert_eq!(exact_tau(&Instance::new(1, 1, int(1), vec![int(1)]).unwrap()), int(1));
        assert_eq!(exact_tau(&unit(2, 2)), ratio(1, 16));
        assert_eq!(exact_tau(&Instance::new(2, 1, int(2), vec![int(3), int(3)]).unwrap()), ratio(1, 36));
    }

    #[test]
    fn feasibility_examples() {
        let one = Instance::new(1, 1, int(1), vec![int(1)]).unwrap();
        let s = feasible(&one, &int(1), &int(1)).unwrap().unwrap();
        assert_eq!(s.uploads.len(), 1);
        assert_eq!((s.uploads[0].start.clone(), s.uploads[0].end.clone()), (int(0), int(1)));

        let three = unit(3, 2);
        assert!(feasible(&three, &ratio(3, 2), &ratio(1, 2)).unwrap().is_some());
        assert!(feasible(&three, &ratio(7, 5), &ratio(1, 10)).unwrap().is_none());
        assert!(feasible(&three, &ratio(7, 5), &ratio(1, 2)).is_err());
    }

    #[test]
    fn min_makespan_examples() {
        let lone = Instance::new(2, 1, int(1), vec![int(1), int(0)]).unwrap();
        assert_eq!(min_makespan(&lone, &default_tau(&lone)).unwrap().makespan, int(2));
        let fast = Instance::new(2, 1, int(1), vec![int(2), int(2)]).unwrap();
        let r = min_makespan(&fast, &default_tau(&fast)).unwrap();
        assert_eq!((r.makespan, r.status), (ratio(3, 2), SolveStatus::Exact));
        let r = min_makespan(&unit(3, 2), &exact_tau(&unit(3, 2))).unwrap();
        assert_eq!(r.makespan, ratio(3, 2));
        assert_eq!(r.grid_makespan, r.makespan);
    }

    #[test]
    fn rounded_grid_reports_gap() {
        let inst = Instance::new(2, 2, int(1), vec![int(3), int(3)]).unwrap();
        let tau = ratio(1, 16);
        let r = min_makespan(&inst, &tau).unwrap();
        let gap = r.gap_bound();
        assert_eq!(gap, ratio(1, 4));
        let truth = two_by_two_makespan(&int(1), &int(3)).unwrap().0;
        assert!(r.lower_bound <= truth && truth <= r.makespan);
        assert!(r.makespan <= &r.lower_bound + &gap);
    }

    #[test]
    fn node_limit_is_reported() {
        let inst = unit(4, 2);
        let err = min_makespan_with(&inst, &default_tau(&inst), SearchOptions { node_limit: Some(3) }).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
