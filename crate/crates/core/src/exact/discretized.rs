//! Interval-indexed view of a grid-aligned schedule: transfer indicators,
//! accumulated download proportions and completion flags per time step, with
//! the constraint checks of the integer-programming formulation.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{ContinuousSchedule, Instance, NodeId, SERVER};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct DiscretizedProblem {
    pub instance: Instance,
    pub tau: Rational,
    /// Number of intervals of length `tau`.
    pub horizon: usize,
    /// `(downloader, uploader, part, first interval, end interval)`.
    active: Vec<(NodeId, NodeId, usize, usize, usize)>,
}

impl DiscretizedProblem {
    /// Every upload must start and end on a multiple of `tau` and fit in
    /// `horizon` intervals.
    pub fn from_schedule(inst: &Instance, tau: &Rational, horizon: usize, sched: &ContinuousSchedule) -> Result<Self> {
        let to_index = |t: &Rational| -> Result<usize> {
            let q = t / tau;
            if !q.is_integer() || q < Rational::zero() {
                return Err(Error::InvalidArgument(format!("time {t} is not on the grid")));
            }
            usize::try_from(q.to_integer()).map_err(|_| Error::SizeGuard("grid index overflow".into()))
        };
        let mut active = Vec::with_capacity(sched.uploads.len());
        for u in &sched.uploads {
            let (a, b) = (to_index(&u.start)?, to_index(&u.end)?);
            if b > horizon {
                return Err(Error::InvalidArgument(format!("upload ends after the horizon: {u:?}")));
            }
            active.push((u.downloader, u.uploader, u.part, a, b));
        }
        Ok(DiscretizedProblem { instance: inst.clone(), tau: tau.clone(), horizon, active })
    }

    /// Whether `downloader` receives `part` from `uploader` during interval `t`.
    pub fn x(&self, downloader: NodeId, uploader: NodeId, part: usize, t: usize) -> bool {
        self.active.iter().any(|&(i, j, k, a, b)| (i, j, k) == (downloader, uploader, part) && a <= t && t < b)
    }

    /// Proportion of `part` held by `downloader` at the start of interval `t`.
    pub fn p(&self, downloader: NodeId, part: usize, t: usize) -> Rational {
        let m = Rational::from_integer(self.instance.n_parts.into());
        self.active
            .iter()
            .filter(|&&(i, _, k, _, _)| (i, k) == (downloader, part))
            .map(|&(_, j, _, a, b)| {
                let steps = t.min(b).saturating_sub(a);
                &m * &self.tau * self.instance.capacity(j) * Rational::from_integer(steps.into())
            })
            .fold(Rational::zero(), |acc, v| acc + v)
    }

    /// Completion flag: 1 exactly when the proportion has reached 1.
    pub fn xi(&self, downloader: NodeId, part: usize, t: usize) -> bool {
        self.p(downloader, part, t).is_one()
    }

    /// Number of completed `(peer, part)` pairs at the horizon; the
    /// schedule is complete iff this equals `N * M`.
    pub fn objective(&self) -> usize {
        let inst = &self.instance;
        (1..=inst.n_peers)
            .flat_map(|i| (1..=inst.n_parts).map(move |k| (i, k)))
            .filter(|&(i, k)| self.xi(i, k, self.horizon))
            .count()
    }

    /// Names of violated constraints with a short explanation each.
    pub fn violations(&self) -> Vec<String> {
        let inst = &self.instance;
        let mut out = Vec::new();
        let nodes = 0..inst.n_nodes();
        for t in 0..self.horizon {
            for j in nodes.clone() {
                let serving = self.active.iter().filter(|&&(_, jj, _, a, b)| jj == j && a <= t && t < b).count();
                if serving > 1 {
                    out.push(format!("connection: node {j} serves {serving} transfers in interval {t}"));
                }
            }
        }
        for &(i, j, k, a, b) in &self.active {
            if j != SERVER && !self.xi(j, k, a) {
                out.push(format!("source availability: node {j} sends part {k} at {a} before holding it"));
            }
            for t in a..b {
                if self.p(i, k, t).is_one() {
                    out.push(format!("stopping: peer {i} still receives part {k} at {t}"));
                }
            }
            if b < self.horizon && !self.xi(i, k, b) {
                out.push(format!("continuity: transfer of part {k} to {i} stops at {b} before completion"));
            }
        }
        for i in 1..=inst.n_peers {
            for k in 1..=inst.n_parts {
                let senders = self.active.iter().filter(|&&(ii, _, kk, _, _)| (ii, kk) == (i, k)).count();
                if senders > 1 {
                    out.push(format!("exclusivity: peer {i} receives part {k} {senders} times"));
                }
                for t in 0..=self.horizon {
                    if self.p(i, k, t) > Rational::one() {
                        out.push(format!("link: proportion of part {k} at peer {i} exceeds 1 at {t}"));
                        break;
                    }
                }
            }
        }
        out
    }
}
