//! Independent checker for continuous schedules.
//!
//! The verifier knows nothing about how a schedule was produced; every solver
//! in this crate is tested by feeding its output through [`verify_schedule`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::model::{ContinuousSchedule, Instance, Upload, SERVER};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Node ids, part numbers or interval bounds out of range.
    Range,
    SourceAvailability,
    Connection,
    Exclusivity,
    Completeness,
    Duration,
    Download,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Constraint::Range => "range",
            Constraint::SourceAvailability => "source_availability",
            Constraint::Connection => "connection",
            Constraint::Exclusivity => "exclusivity",
            Constraint::Completeness => "completeness",
            Constraint::Duration => "duration",
            Constraint::Download => "download",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Indices into `ContinuousSchedule::uploads`.
    pub uploads: Vec<usize>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub time: Option<Rational>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplicaSnapshot {
    #[serde(with = "rational::serde_str")]
    pub time: Rational,
    /// `counts[k - 1]` peers hold part `k` at `time`.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub makespan: Option<Rational>,
    pub replicas: Vec<ReplicaSnapshot>,
}

impl VerificationReport {
    pub fn has(&self, constraint: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}

fn ser_opt_rational<S: serde::Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&rational::format(r)),
        None => s.serialize_none(),
    }
}

/// Checks source availability, connection, exclusivity, completeness and
/// duration, plus one-download-at-a-time when `check_downloads` is set.
pub fn verify_schedule(
    inst: &Instance,
    sched: &ContinuousSchedule,
    check_downloads: bool,
) -> VerificationReport {
    let mut violations = Vec::new();
    let mut push = |constraint, uploads: Vec<usize>, time: Option<Rational>, detail: String| {
        violations.push(Violation { constraint, uploads, time, detail })
    };
    let n = inst.n_peers;
    let m = inst.n_parts;
    let part_size = Rational::one() / Rational::from_integer(m.into());

    let in_range = |u: &Upload| {
        u.uploader <= n
            && u.downloader != SERVER
            && u.downloader <= n
            && u.uploader != u.downloader
            && (1..=m).contains(&u.part)
            && !u.start.is_negative()
            && u.end > u.start
    };

    // First delivery time per (peer, part).
    let mut delivered: HashMap<(usize, usize), Rational> = HashMap::new();
    let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (idx, u) in sched.uploads.iter().enumerate() {
        if !in_range(u) {
            push(Constraint::Range, vec![idx], Some(u.start.clone()), format!("{u:?}"));
            continue;
        }
        by_pair.entry((u.downloader, u.part)).or_default().push(idx);
        delivered
            .entry((u.downloader, u.part))
            .and_modify(|t| {
                if u.end < *t {
                    *t = u.end.clone()
                }
            })
            .or_insert_with(|| u.end.clone());

        let cap = inst.capacity(u.uploader);
        if cap.is_zero() || (&u.end - &u.start) * cap != part_size {
            push(
                Constraint::Duration,
                vec![idx],
                Some(u.start.clone()),
                format!("node {} needs exactly 1/(M*C) per part", u.uploader),
            );
        }
    }

    for (&(peer, part), idxs) in &by_pair {
        if idxs.len() > 1 {
            push(
                Constraint::Exclusivity,
                idxs.clone(),
                None,
                format!("peer {peer} receives part {part} {} times", idxs.len()),
            );
        }
    }
    for peer in 1..=n {
        for part in 1..=m {
            if !by_pair.contains_key(&(peer, part)) {
                push(Constraint::Completeness, vec![], None, format!("peer {peer} never receives part {part}"));
            }
        }
    }

    for (idx, u) in sched.uploads.iter().enumerate() {
        if u.uploader == SERVER || !in_range(u) {
            continue;
        }
        match delivered.get(&(u.uploader, u.part)) {
            Some(t) if *t <= u.start => {}
            _ => push(
                Constraint::SourceAvailability,
                vec![idx],
                Some(u.start.clone()),
                format!("peer {} uploads part {} before holding it", u.uploader, u.part),
            ),
        }
    }

    let overlaps = |key: fn(&Upload) -> usize, constraint: Constraint, push: &mut dyn FnMut(Constraint, Vec<usize>, Option<Rational>, String)| {
        let mut per_node: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, u) in sched.uploads.iter().enumerate() {
            if in_range(u) {
                per_node.entry(key(u)).or_default().push(idx);
            }
        }
        for (node, mut idxs) in per_node {
            idxs.sort_by(|&a, &b| sched.uploads[a].start.cmp(&sched.uploads[b].start));
            let mut latest: Option<usize> = None;
            for idx in idxs {
                let u = &sched.uploads[idx];
                if let Some(prev) = latest {
                    if sched.uploads[prev].end > u.start {
                        push(
                            constraint,
                            vec![prev, idx],
                            Some(u.start.clone()),
                            format!("node {node} has overlapping transfers"),
                        );
                    }
                }
                if latest.is_none_or(|p| sched.uploads[p].end < u.end) {
                    latest = Some(idx);
                }
            }
        }
    };
    overlaps(|u| u.uploader, Constraint::Connection, &mut push);
    if check_downloads {
        overlaps(|u| u.downloader, Constraint::Download, &mut push);
    }

    let makespan = sched.uploads.iter().map(|u| &u.end).max().cloned();
    let replicas = replica_snapshots(inst, &delivered);
    VerificationReport { valid: violations.is_empty(), violations, makespan, replicas }
}

fn replica_snapshots(inst: &Instance, delivered: &HashMap<(usize, usize), Rational>) -> Vec<ReplicaSnapshot> {
    let times: BTreeSet<&Rational> = delivered.values().collect();
    let mut by_time: Vec<(&Rational, usize)> = delivered.iter().map(|(&(_, k), t)| (t, k)).collect();
    by_time.sort();
    let mut counts = vec![0usize; inst.n_parts];
    let mut out = Vec::with_capacity(times.len() + 1);
    out.push(ReplicaSnapshot { time: Rational::zero(), counts: counts.clone() });
    let mut cursor = 0;
    for t in times {
        while cursor < by_time.len() && by_time[cursor].0 <= t {
            counts[by_time[cursor].1 - 1] += 1;
            cursor += 1;
        }
        if out.last().is_some_and(|s| &s.time == t) {
            out.last_mut().unwrap().counts = counts.clone();
        } else {
            out.push(ReplicaSnapshot { time: t.clone(), counts: counts.clone() });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RoundSchedule, Transfer};
    use crate::rational::{int, ratio};

    fn up(uploader: usize, downloader: usize, part: usize, s: Rational, e: Rational) -> Upload {
        Upload { uploader, downloader, part, start: s, end: e }
    }

    #[test]
    fn single_upload_is_valid() {
        let inst = Instance::equal(1, 1, int(1)).unwrap();
        let sched = ContinuousSchedule { uploads: vec![up(0, 1, 1, int(0), int(1))] };
        let report = verify_schedule(&inst, &sched, true);
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.makespan, Some(int(1)));
    }

    /// The three-round N=3, M=2 schedule drawn row by row: each row is a
    /// round, bold entries come from the server.
    fn three_peer_diagram() -> RoundSchedule {
        let t = |uploader, downloader, part| Transfer { uploader, downloader, part };
        RoundSchedule {
            n_parts: 2,
            rounds: vec![
                vec![t(0, 1, 1)],
                vec![t(0, 2, 2), t(1, 3, 1)],
                vec![t(2, 1, 2), t(3, 2, 1), t(0, 3, 2)],
            ],
        }
    }

    #[test]
    fn three_peer_diagram_is_valid_with_makespan_three_halves() {
        let inst = Instance::equal(3, 2, int(1)).unwrap();
        let rs = three_peer_diagram();
        rs.check(3).unwrap();
        let report = verify_schedule(&inst, &rs.to_continuous(&int(1)), true);
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.makespan, Some(ratio(3, 2)));
        let last = report.replicas.last().unwrap();
        assert_eq!(last.counts, vec![3, 3]);
    }

    #[test]
    fn upload_before_download_violates_source_availability() {
        let inst = Instance::equal(2, 2, int(1)).unwrap();
        let h = ratio(1, 2);
        let sched = ContinuousSchedule {
            uploads: vec![
                up(1, 2, 2, int(0), h.clone()),
                up(0, 1, 1, int(0), h.clone()),
                up(0, 1, 2, h.clone(), int(1)),
                up(0, 2, 1, int(1), ratio(3, 2)),
            ],
        };
        let report = verify_schedule(&inst, &sched, false);
        assert!(!report.valid);
        assert!(report.has(Constraint::SourceAvailability));
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn overlapping_uploads_violate_connection() {
        let inst = Instance::equal(2, 1, int(1)).unwrap();
        let sched = ContinuousSchedule {
            uploads: vec![up(0, 1, 1, int(0), int(1)), up(0, 2, 1, ratio(1, 2), ratio(3, 2))],
        };
        let report = verify_schedule(&inst, &sched, false);
        assert!(report.has(Constraint::Connection));
    }

    #[test]
    fn wrong_duration_duplicate_and_missing_are_reported() {
        let inst = Instance::equal(2, 1, int(2)).unwrap();
        let sched = ContinuousSchedule {
            uploads: vec![up(0, 1, 1, int(0), int(1)), up(0, 1, 1, int(1), ratio(3, 2))],
        };
        let report = verify_schedule(&inst, &sched, false);
        assert!(report.has(Constraint::Duration));
        assert!(report.has(Constraint::Exclusivity));
        assert!(report.has(Constraint::Completeness));
    }

    #[test]
    fn concurrent_downloads_only_flagged_when_requested() {
        let inst = Instance::equal(2, 2, int(1)).unwrap();
        let h = ratio(1, 2);
        let sched = ContinuousSchedule {
            uploads: vec![
                up(0, 1, 1, int(0), h.clone()),
                up(0, 1, 2, h.clone(), int(1)),
                up(1, 2, 1, h.clone(), int(1)),
                up(0, 2, 2, int(1), ratio(3, 2)),
            ],
        };
        assert!(verify_schedule(&inst, &sched, true).valid);
        let clash = ContinuousSchedule {
            uploads: vec![
                up(0, 1, 1, int(0), h.clone()),
                up(0, 2, 2, h.clone(), int(1)),
                up(1, 2, 1, h.clone(), int(1)),
                up(2, 1, 2, int(1), ratio(3, 2)),
            ],
        };
        assert!(verify_schedule(&inst, &clash, false).valid);
        assert!(verify_schedule(&inst, &clash, true).has(Constraint::Download));
    }

    #[test]
    fn bad_ids_are_range_violations() {
        let inst = Instance::equal(1, 1, int(1)).unwrap();
        let sched = ContinuousSchedule {
            uploads: vec![up(0, 0, 1, int(0), int(1)), up(0, 1, 3, int(0), int(1)), up(0, 1, 1, int(0), int(1))],
        };
        let report = verify_schedule(&inst, &sched, false);
        assert_eq!(report.violations.iter().filter(|v| v.constraint == Constraint::Range).count(), 2);
    }

    #[test]
    fn verification_is_deterministic() {
        let inst = Instance::equal(3, 2, int(1)).unwrap();
        let sched = three_peer_diagram().to_continuous(&int(1));
        assert_eq!(verify_schedule(&inst, &sched, true), verify_schedule(&inst, &sched, true));
    }
}
