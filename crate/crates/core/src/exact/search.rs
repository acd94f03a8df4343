//! Depth-first feasibility search over whole jobs on a time grid.
//!
//! Time advances from one job completion to the next. At each such event the
//! idle uploaders, in ascending id order, either start one job (tried in
//! `(part, downloader)` order) or wait. The first schedule found under this
//! order is the canonical one, so results never depend on execution order.
//!
//! Pruning, all optimality-preserving:
//! * an uploader that waits may not later upload a part it already held when
//!   it started waiting until it has started some other job (such an upload
//!   could have started at the wait instead); a waiting server is therefore
//!   idle for good;
//! * downloaders in identical states are interchangeable, only the first is
//!   tried;
//! * failed event states are memoized under peer and part relabeling,
//!   together with the remaining horizon;
//! * capacity and earliest-delivery bounds.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{ContinuousSchedule, Instance, NodeId, Upload, SERVER};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Abort with [`Error::BudgetExceeded`] after this many search nodes.
    pub node_limit: Option<u64>,
}

/// Job lengths of every node expressed in a common tick.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    /// Length of one tick: `tau` times the gcd of the rounded job lengths.
    pub tick: Rational,
    pub durations: Vec<Option<u64>>,
    /// Whether `tau` divides every job length, i.e. no rounding happened.
    pub exact: bool,
    class: Vec<u64>,
}

impl Grid {
    pub fn new(inst: &Instance, tau: &Rational) -> Result<Self> {
        if tau <= &Rational::zero() {
            return Err(Error::InvalidArgument("tau must be positive".into()));
        }
        let mut exact = true;
        let mut raw: Vec<Option<BigInt>> = Vec::with_capacity(inst.n_nodes());
        for node in 0..inst.n_nodes() {
            raw.push(inst.job_duration(node).map(|d| {
                let q = d / tau;
                exact &= q.is_integer();
                q.ceil().to_integer()
            }));
        }
        let scale = raw.iter().flatten().fold(BigInt::zero(), |g, d| g.gcd(d));
        let mut durations = Vec::with_capacity(raw.len());
        for d in &raw {
            durations.push(match d {
                Some(d) => Some(
                    (d / &scale)
                        .to_u64()
                        .filter(|&v| v <= 1 << 40)
                        .ok_or_else(|| Error::SizeGuard("job lengths too far apart for the time grid".into()))?,
                ),
                None => None,
            });
        }
        let mut caps: Vec<&Rational> = (0..inst.n_nodes()).map(|n| inst.capacity(n)).collect();
        caps.sort();
        caps.dedup();
        let class = (0..inst.n_nodes()).map(|n| caps.binary_search(&inst.capacity(n)).unwrap() as u64).collect();
        Ok(Grid { tick: tau * Rational::from_integer(scale), durations, exact, class })
    }

    /// Whole ticks available in `horizon`.
    pub fn ticks_in(&self, horizon: &Rational) -> u64 {
        (horizon / &self.tick).floor().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Job {
    pub uploader: NodeId,
    pub downloader: NodeId,
    pub part: usize,
    pub start: u64,
}

#[derive(Clone)]
struct State {
    now: u64,
    busy: Vec<u64>,
    held: Vec<u64>,
    incoming: Vec<u64>,
    blocked: Vec<u64>,
    /// `(end, downloader, part)` of running jobs.
    inflight: Vec<(u64, NodeId, usize)>,
    assigned: usize,
    jobs: Vec<Job>,
}

pub(crate) struct Searcher {
    n_peers: usize,
    n_parts: usize,
    full: u64,
    durations: Vec<Option<u64>>,
    class: Vec<u64>,
    min_duration: u64,
    perms: Vec<Vec<usize>>,
    failed: HashMap<Vec<u64>, u64>,
    pub nodes: u64,
    limit: Option<u64>,
}

impl Searcher {
    pub fn new(inst: &Instance, grid: &Grid, options: SearchOptions) -> Result<Self> {
        if inst.n_parts > 63 {
            return Err(Error::SizeGuard("exact search supports at most 63 parts".into()));
        }
        let perms = if inst.n_parts <= 4 { permutations(inst.n_parts) } else { vec![(0..inst.n_parts).collect()] };
        Ok(Searcher {
            n_peers: inst.n_peers,
            n_parts: inst.n_parts,
            full: (1u64 << inst.n_parts) - 1,
            durations: grid.durations.clone(),
            class: grid.class.clone(),
            min_duration: grid.durations.iter().flatten().copied().min().expect("server has a duration"),
            perms,
            failed: HashMap::new(),
            nodes: 0,
            limit: options.node_limit,
        })
    }

    fn total(&self) -> usize {
        self.n_peers * self.n_parts
    }

    /// Finds the canonical schedule finishing within `horizon` ticks.
    pub fn solve(&mut self, horizon: u64) -> Result<Option<Vec<Job>>> {
        let n = self.n_peers + 1;
        let mut held = vec![0u64; n];
        held[SERVER] = self.full;
        let st = State {
            now: 0,
            busy: vec![0; n],
            held,
            incoming: vec![0; n],
            blocked: vec![0; n],
            inflight: Vec::new(),
            assigned: 0,
            jobs: Vec::new(),
        };
        self.step(st, horizon)
    }

    fn count_node(&mut self) -> Result<()> {
        self.nodes += 1;
        match self.limit {
            Some(limit) if self.nodes > limit => Err(Error::BudgetExceeded { nodes: self.nodes - 1 }),
            _ => Ok(()),
        }
    }

    fn step(&mut self, st: State, h: u64) -> Result<Option<Vec<Job>>> {
        if st.assigned == self.total() {
            return Ok(Some(st.jobs));
        }
        self.count_node()?;
        if !self.bounds_hold(&st, h) {
            return Ok(None);
        }
        let key = self.key(&st);
        let remaining = h - st.now;
        if self.failed.get(&key).is_some_and(|&r| r >= remaining) {
            return Ok(None);
        }
        let free: Vec<NodeId> =
            (0..=self.n_peers).filter(|&u| self.durations[u].is_some() && st.busy[u] <= st.now).collect();
        let found = self.decide(&st, &free, 0, h)?;
        if found.is_none() {
            let entry = self.failed.entry(key).or_insert(0);
            *entry = (*entry).max(remaining);
        }
        Ok(found)
    }

    fn decide(&mut self, st: &State, free: &[NodeId], idx: usize, h: u64) -> Result<Option<Vec<Job>>> {
        if idx == free.len() {
            return self.advance(st, h);
        }
        self.count_node()?;
        let u = free[idx];
        let d = self.durations[u].expect("free uploaders have capacity");
        let end = st.now + d;
        if end <= h {
            let avail = st.held[u] & !st.blocked[u];
            for k in 0..self.n_parts {
                if avail >> k & 1 == 0 {
                    continue;
                }
                let mut tried: Vec<Vec<u64>> = Vec::new();
                for p in 1..=self.n_peers {
                    if p == u || (st.held[p] | st.incoming[p]) >> k & 1 == 1 {
                        continue;
                    }
                    let sig = self.signature(st, p, &free[idx + 1..]);
                    if tried.contains(&sig) {
                        continue;
                    }
                    tried.push(sig);
                    let mut next = st.clone();
                    next.busy[u] = end;
                    next.blocked[u] = 0;
                    next.incoming[p] |= 1 << k;
                    next.inflight.push((end, p, k));
                    next.assigned += 1;
                    next.jobs.push(Job { uploader: u, downloader: p, part: k + 1, start: st.now });
                    if let Some(found) = self.decide(&next, free, idx + 1, h)? {
                        return Ok(Some(found));
                    }
                }
            }
        }
        let mut next = st.clone();
        next.blocked[u] = st.held[u];
        self.decide(&next, free, idx + 1, h)
    }

    fn advance(&mut self, st: &State, h: u64) -> Result<Option<Vec<Job>>> {
        if st.assigned == self.total() {
            return Ok(Some(st.jobs.clone()));
        }
        let Some(next_time) = st.inflight.iter().map(|&(e, _, _)| e).min() else {
            return Ok(None);
        };
        debug_assert!(next_time > st.now && next_time <= h);
        let mut next = st.clone();
        next.now = next_time;
        next.inflight.retain(|&(e, p, k)| {
            if e <= next_time {
                next.held[p] |= 1 << k;
                next.incoming[p] &= !(1 << k);
                false
            } else {
                true
            }
        });
        self.step(next, h)
    }

    /// Everything about peer `p` that matters for the rest of the search.
    fn signature(&self, st: &State, p: NodeId, pending: &[NodeId]) -> Vec<u64> {
        let mut sig = vec![
            self.class[p],
            st.held[p],
            st.incoming[p],
            st.busy[p].saturating_sub(st.now),
            st.blocked[p],
            u64::from(pending.contains(&p)),
        ];
        let mut arrivals: Vec<(u64, usize)> =
            st.inflight.iter().filter(|&&(_, q, _)| q == p).map(|&(e, _, k)| (e - st.now, k)).collect();
        arrivals.sort_unstable();
        sig.extend(arrivals.into_iter().flat_map(|(e, k)| [e, k as u64]));
        sig
    }

    /// Canonical encoding of an event state, minimized over part relabelings.
    fn key(&self, st: &State) -> Vec<u64> {
        let relabel = |mask: u64, perm: &[usize]| -> u64 {
            (0..self.n_parts).filter(|&k| mask >> k & 1 == 1).fold(0, |acc, k| acc | 1 << perm[k])
        };
        let mut best: Option<Vec<u64>> = None;
        for perm in &self.perms {
            let mut peers: Vec<Vec<u64>> = (1..=self.n_peers)
                .map(|p| {
                    let mut row = vec![
                        self.class[p],
                        relabel(st.held[p], perm),
                        relabel(st.incoming[p], perm),
                        st.busy[p].saturating_sub(st.now),
                        relabel(st.blocked[p], perm),
                    ];
                    let mut arrivals: Vec<(u64, usize)> = st
                        .inflight
                        .iter()
                        .filter(|&&(_, q, _)| q == p)
                        .map(|&(e, _, k)| (e - st.now, perm[k]))
                        .collect();
                    arrivals.sort_unstable();
                    row.push(arrivals.len() as u64);
                    row.extend(arrivals.into_iter().flat_map(|(e, k)| [e, k as u64]));
                    row
                })
                .collect();
            peers.sort_unstable();
            let mut key = vec![st.busy[SERVER].saturating_sub(st.now), u64::from(st.blocked[SERVER] != 0)];
            key.extend(peers.into_iter().flatten());
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
        best.expect("at least the identity permutation")
    }

    fn bounds_hold(&self, st: &State, h: u64) -> bool {
        let remaining = (self.total() - st.assigned) as u64;
        let mut slots = 0u64;
        for u in 0..=self.n_peers {
            let Some(d) = self.durations[u] else { continue };
            if u == SERVER && st.blocked[u] != 0 {
                continue;
            }
            let from = st.busy[u].max(st.now);
            slots += h.saturating_sub(from) / d;
        }
        if slots < remaining {
            return false;
        }
        for p in 1..=self.n_peers {
            let missing = self.full & !(st.held[p] | st.incoming[p]);
            for k in 0..self.n_parts {
                if missing >> k & 1 == 1 && !self.deliverable(st, p, k, h) {
                    return false;
                }
            }
        }
        true
    }

    /// Some node could still start sending part `k` to peer `p` in time.
    fn deliverable(&self, st: &State, p: NodeId, k: usize, h: u64) -> bool {
        (0..=self.n_peers).any(|j| {
            let Some(d) = self.durations[j] else { return false };
            if j == p || (j == SERVER && st.blocked[j] != 0) {
                return false;
            }
            let free_at = st.busy[j].max(st.now);
            let has_part = if st.held[j] >> k & 1 == 1 {
                st.now
            } else if st.incoming[j] >> k & 1 == 1 {
                st.inflight.iter().filter(|&&(_, q, kk)| q == j && kk == k).map(|&(e, _, _)| e).min().unwrap()
            } else {
                st.now + self.min_duration
            };
            let mut start = free_at.max(has_part);
            if st.blocked[j] >> k & 1 == 1 {
                start = start.max(free_at + d);
            }
            start + d <= h
        })
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    heap_permute(m, &mut cur, &mut out);
    out.sort();
    out
}

fn heap_permute(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k {
        heap_permute(k - 1, cur, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

/// Converts grid jobs to uploads with exact durations.
pub(crate) fn to_schedule(inst: &Instance, grid: &Grid, jobs: &[Job]) -> ContinuousSchedule {
    let mut uploads: Vec<Upload> = jobs
        .iter()
        .map(|j| {
            let start = &grid.tick * Rational::from_integer(j.start.into());
            let end = &start + inst.job_duration(j.uploader).expect("uploaders have capacity");
            Upload { uploader: j.uploader, downloader: j.downloader, part: j.part, start, end }
        })
        .collect();
    uploads.sort_by(|a, b| (&a.start, a.uploader).cmp(&(&b.start, b.uploader)));
    ContinuousSchedule { uploads }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_complete() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
        let mut p = permutations(4);
        p.dedup();
        assert_eq!(p.len(), 24);
    }
}
