//! Fluid limit (infinitely many parts): closed-form makespans and explicit
//! two-hop transfer plans when several users each hold a file that every
//! other user wants.
//!
//! In a plan, `alpha[i][i]` is the fraction of file `i` its owner sends
//! straight to everyone, and `alpha[i][j]` the fraction sent to `j`, which
//! forwards it to the remaining `N - 2` users.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluidInstance {
    #[serde(with = "rational::serde_vec")]
    pub file_sizes: Vec<Rational>,
    #[serde(with = "rational::serde_vec")]
    pub capacities: Vec<Rational>,
}

impl FluidInstance {
    pub fn new(file_sizes: Vec<Rational>, capacities: Vec<Rational>) -> Result<Self> {
        let fi = FluidInstance { file_sizes, capacities };
        fi.validate()?;
        Ok(fi)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(Error::InvalidInstance { field, reason: reason.into() });
        if self.file_sizes.len() < 2 {
            return bad("file_sizes", "need at least two users");
        }
        if self.capacities.len() != self.file_sizes.len() {
            return bad("capacities", "one capacity per user");
        }
        if self.capacities.iter().any(|c| !c.is_positive()) {
            return bad("capacities", "must be positive");
        }
        if self.file_sizes.iter().any(|f| f.is_negative()) {
            return bad("file_sizes", "must be nonnegative");
        }
        if self.file_sizes.iter().all(|f| f.is_zero()) {
            return Err(Error::DegenerateInstance("every file is empty".into()));
        }
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.file_sizes.len()
    }

    pub fn total_size(&self) -> Rational {
        self.file_sizes.iter().sum()
    }

    pub fn total_capacity(&self) -> Rational {
        self.capacities.iter().sum()
    }

    /// `(N - 1) F / C`: time to move all data if every upload were shared
    /// perfectly.
    pub fn volume_time(&self) -> Rational {
        int(self.n_users() as i64 - 1) * self.total_size() / self.total_capacity()
    }

    /// User with the largest `F_i / C_i`, lowest index on ties.
    pub fn leader(&self) -> usize {
        let ratio = |i: usize| &self.file_sizes[i] / &self.capacities[i];
        (0..self.n_users()).fold(0, |best, i| if ratio(i) > ratio(best) { i } else { best })
    }
}

/// `max(F_1/C_1, ..., F_N/C_N, (N - 1) F / C)`.
pub fn fluid_general_makespan(fi: &FluidInstance) -> Rational {
    let leader = fi.leader();
    let own = &fi.file_sizes[leader] / &fi.capacities[leader];
    own.max(fi.volume_time())
}

/// One server holding the file, `N` clients of capacity `C_1`. Returns the
/// makespan and the fraction of the file each client obtains from the other
/// clients rather than the server.
pub fn fluid_single_server(n_clients: usize, cs: &Rational, c1: &Rational) -> Result<(Rational, Rational)> {
    if n_clients == 0 || !cs.is_positive() || c1.is_negative() {
        return Err(Error::InvalidArgument("need N >= 1, C_S > 0, C_1 >= 0".into()));
    }
    if n_clients == 1 {
        return Ok((Rational::one() / cs, Rational::zero()));
    }
    let n = int(n_clients as i64);
    if c1 / (&n - int(1)) <= cs / &n {
        let denom = cs + &n * c1;
        Ok((&n / &denom, &n * c1 / denom))
    } else {
        Ok((Rational::one() / cs, (&n - int(1)) / n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPlan {
    #[serde(with = "rational::serde_matrix")]
    pub alpha: Vec<Vec<Rational>>,
    #[serde(with = "rational::serde_str")]
    pub makespan: Rational,
}

impl TransferPlan {
    /// Constant rate on each first-hop link: `alpha[i][j] * F_i / T`.
    pub fn rates(&self, fi: &FluidInstance) -> Vec<Vec<Rational>> {
        self.alpha
            .iter()
            .zip(&fi.file_sizes)
            .map(|(row, f)| row.iter().map(|a| a * f / &self.makespan).collect())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityReduction {
    /// User whose own upload time `F/C` is the bottleneck.
    pub leader: usize,
    /// Share weights; `None` for users without a file.
    pub gamma: Vec<Option<Rational>>,
    pub delta: Rational,
    pub reduced_capacities: Vec<Rational>,
}

/// Lowers every capacity except the bottleneck user's so the volume term
/// `(N - 1) F / C'` rises to exactly `F_1 / C_1`:
/// `C'_i = delta C_i + (1 - delta) F_i C_1 / F_1`.
pub fn reduce_capacities(fi: &FluidInstance) -> Result<CapacityReduction> {
    fi.validate()?;
    let n = fi.n_users();
    if n < 3 {
        return Err(Error::NotCase2("two users need no capacity reduction".into()));
    }
    let leader = fi.leader();
    let (f1, c1) = (&fi.file_sizes[leader], &fi.capacities[leader]);
    if f1 / c1 <= fi.volume_time() {
        return Err(Error::NotCase2("the volume term already dominates".into()));
    }
    let (f, c) = (fi.total_size(), fi.total_capacity());
    let delta = int(n as i64 - 2) * &f * c1 / (f1 * &c - &f * c1);
    let keep = Rational::one() - &delta;
    let reduced_capacities = fi
        .file_sizes
        .iter()
        .zip(&fi.capacities)
        .map(|(fi_, ci)| &delta * ci + &keep * fi_ * c1 / f1)
        .collect();
    let gamma = fi
        .file_sizes
        .iter()
        .zip(&fi.capacities)
        .map(|(fi_, ci)| {
            (!fi_.is_zero()).then(|| (&delta * ci / fi_ * f1 / c1 + &keep) / int(n as i64 - 1))
        })
        .collect();
    Ok(CapacityReduction { leader, gamma, delta, reduced_capacities })
}

/// Symmetric two-hop plan: `alpha[i][j] = a_j` with
/// `a_j = (N-1) C_j / ((N-2) C) - F_j / ((N-2) F)`, computed on reduced
/// capacities when one user's own upload is the bottleneck.
pub fn build_transfer_plan(fi: &FluidInstance) -> Result<TransferPlan> {
    fi.validate()?;
    let n = fi.n_users();
    let makespan = fluid_general_makespan(fi);
    if n == 2 {
        let alpha = (0..2).map(|i| (0..2).map(|j| if i == j { int(1) } else { int(0) }).collect()).collect();
        return Ok(TransferPlan { alpha, makespan });
    }
    let caps = match reduce_capacities(fi) {
        Ok(r) => r.reduced_capacities,
        Err(Error::NotCase2(_)) => fi.capacities.clone(),
        Err(e) => return Err(e),
    };
    let (f, c) = (fi.total_size(), caps.iter().sum::<Rational>());
    let nm2 = int(n as i64 - 2);
    let share: Vec<Rational> = (0..n)
        .map(|j| int(n as i64 - 1) * &caps[j] / (&nm2 * &c) - &fi.file_sizes[j] / (&nm2 * &f))
        .collect();
    let alpha = (0..n).map(|_| share.clone()).collect();
    Ok(TransferPlan { alpha, makespan })
}

/// Data user `i` must upload under `plan`.
pub fn upload_volume(fi: &FluidInstance, plan: &TransferPlan, i: usize) -> Rational {
    let n = fi.n_users();
    let a = &plan.alpha;
    let f = &fi.file_sizes;
    let mut v = &a[i][i] * &f[i] * int(n as i64 - 1);
    for k in (0..n).filter(|&k| k != i) {
        v += &a[i][k] * &f[i];
        v += &a[k][i] * &f[k] * int(n as i64 - 2);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// `upload_volume / C_i` per user.
    pub completion_times: Vec<Rational>,
}

pub fn verify_plan(fi: &FluidInstance, plan: &TransferPlan) -> PlanReport {
    let n = fi.n_users();
    let mut violations = Vec::new();
    if plan.alpha.len() != n || plan.alpha.iter().any(|row| row.len() != n) {
        violations.push(format!("alpha must be {n}x{n}"));
        return PlanReport { valid: false, violations, completion_times: Vec::new() };
    }
    for (i, row) in plan.alpha.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            if a.is_negative() {
                violations.push(format!("alpha[{i}][{j}] = {a} is negative"));
            }
        }
        if fi.file_sizes[i].is_zero() {
            continue;
        }
        let sum: Rational = row.iter().sum();
        if !sum.is_one() {
            violations.push(format!("row {i} sums to {sum}"));
        }
        for r in (0..n).filter(|&r| r != i) {
            // Direct from the owner, as the relay itself, or through another relay.
            let relayed: Rational = (0..n).filter(|&j| j != i && j != r).map(|j| &row[j]).sum();
            let received = &row[i] + &row[r] + relayed;
            if !received.is_one() {
                violations.push(format!("user {r} receives {received} of file {i}"));
            }
        }
    }
    let expected = fluid_general_makespan(fi);
    if plan.makespan != expected {
        violations.push(format!("plan makespan {} differs from the optimum {expected}", plan.makespan));
    }
    let completion_times: Vec<Rational> = (0..n).map(|i| upload_volume(fi, plan, i) / &fi.capacities[i]).collect();
    for (i, t) in completion_times.iter().enumerate() {
        if t > &plan.makespan {
            violations.push(format!("user {i} needs {t} to upload, beyond {}", plan.makespan));
        }
    }
    PlanReport { valid: violations.is_empty(), violations, completion_times }
}
