//! Problem instances and schedules under the uplink-sharing model.
//!
//! Node `0` is always the server; peers are `1..=n_peers`. The file has size
//! 1 MB and is split into `n_parts` parts of `1/n_parts` MB, numbered from 1.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub type NodeId = usize;

pub const SERVER: NodeId = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub n_peers: usize,
    pub n_parts: usize,
    #[serde(with = "rational::serde_str")]
    pub server_capacity: Rational,
    #[serde(with = "rational::serde_vec")]
    pub peer_capacities: Vec<Rational>,
}

impl Instance {
    pub fn new(
        n_peers: usize,
        n_parts: usize,
        server_capacity: Rational,
        peer_capacities: Vec<Rational>,
    ) -> Result<Self> {
        let inst = Instance { n_peers, n_parts, server_capacity, peer_capacities };
        validate_instance(&inst)?;
        Ok(inst)
    }

    /// Every node (server included) has the same capacity.
    pub fn equal(n_peers: usize, n_parts: usize, capacity: Rational) -> Result<Self> {
        Self::new(n_peers, n_parts, capacity.clone(), vec![capacity; n_peers])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("instance JSON: {e}")))?;
        validate_instance(&inst)?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn capacity(&self, node: NodeId) -> &Rational {
        if node == SERVER {
            &self.server_capacity
        } else {
            &self.peer_capacities[node - 1]
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_peers + 1
    }

    /// Time for `node` to upload one part at full rate; `None` for a zero-capacity peer.
    pub fn job_duration(&self, node: NodeId) -> Option<Rational> {
        let cap = self.capacity(node);
        if cap.is_zero() {
            None
        } else {
            Some(Rational::one() / (Rational::from_integer(self.n_parts.into()) * cap))
        }
    }

    pub fn total_capacity(&self) -> Rational {
        self.peer_capacities.iter().fold(self.server_capacity.clone(), |acc, c| acc + c)
    }
}

/// Checks the structural invariants of an [`Instance`].
pub fn validate_instance(inst: &Instance) -> Result<()> {
    let bad = |field, reason: &str| Err(Error::InvalidInstance { field, reason: reason.into() });
    if inst.n_peers == 0 {
        return bad("n_peers", "must be at least 1");
    }
    if inst.n_parts == 0 {
        return bad("n_parts", "must be at least 1");
    }
    if !inst.server_capacity.is_positive() {
        return bad("server_capacity", "must be positive");
    }
    if inst.peer_capacities.len() != inst.n_peers {
        return Err(Error::InvalidInstance {
            field: "peer_capacities",
            reason: format!(
                "expected {} entries, found {}",
                inst.n_peers,
                inst.peer_capacities.len()
            ),
        });
    }
    if inst.peer_capacities.iter().any(|c| c.is_negative()) {
        return bad("peer_capacities", "must be nonnegative");
    }
    Ok(())
}

/// One job: the upload of a single part from one node to one peer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Upload {
    pub uploader: NodeId,
    pub downloader: NodeId,
    pub part: usize,
    #[serde(with = "rational::serde_str")]
    pub start: Rational,
    #[serde(with = "rational::serde_str")]
    pub end: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuousSchedule {
    pub uploads: Vec<Upload>,
}

impl ContinuousSchedule {
    pub fn makespan(&self) -> Result<Rational> {
        schedule_makespan(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("schedule JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    /// Sorts uploads by `(start, uploader, downloader, part)`.
    pub fn normalize(&mut self) {
        self.uploads.sort_by(|a, b| {
            (&a.start, a.uploader, a.downloader, a.part).cmp(&(&b.start, b.uploader, b.downloader, b.part))
        });
    }
}

/// Latest end time over all uploads.
pub fn schedule_makespan(sched: &ContinuousSchedule) -> Result<Rational> {
    sched.uploads.iter().map(|u| &u.end).max().cloned().ok_or(Error::EmptySchedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transfer {
    pub uploader: NodeId,
    pub downloader: NodeId,
    pub part: usize,
}

/// Synchronous rounds; each round lasts one part-time (`1/(M*C)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSchedule {
    pub n_parts: usize,
    pub rounds: Vec<Vec<Transfer>>,
}

impl RoundSchedule {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn n_transfers(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    /// Round invariants: one upload and one download per node per round, and
    /// every uploader held its part at the start of the round.
    pub fn check(&self, n_peers: usize) -> Result<()> {
        let m = self.n_parts;
        let mut held = vec![vec![false; m + 1]; n_peers + 1];
        held[SERVER].iter_mut().for_each(|h| *h = true);
        for (r, round) in self.rounds.iter().enumerate() {
            let mut up = vec![false; n_peers + 1];
            let mut down = vec![false; n_peers + 1];
            for t in round {
                if t.uploader > n_peers || t.downloader == SERVER || t.downloader > n_peers {
                    return Err(Error::InvalidSchedule(format!("round {}: bad node in {t:?}", r + 1)));
                }
                if t.part == 0 || t.part > m {
                    return Err(Error::InvalidSchedule(format!("round {}: bad part in {t:?}", r + 1)));
                }
                if std::mem::replace(&mut up[t.uploader], true) {
                    return Err(Error::InvalidSchedule(format!(
                        "round {}: node {} uploads twice",
                        r + 1,
                        t.uploader
                    )));
                }
                if std::mem::replace(&mut down[t.downloader], true) {
                    return Err(Error::InvalidSchedule(format!(
                        "round {}: peer {} downloads twice",
                        r + 1,
                        t.downloader
                    )));
                }
                if !held[t.uploader][t.part] {
                    return Err(Error::InvalidSchedule(format!(
                        "round {}: node {} does not hold part {}",
                        r + 1,
                        t.uploader,
                        t.part
                    )));
                }
            }
            for t in round {
                held[t.downloader][t.part] = true;
            }
        }
        Ok(())
    }

    /// Round `r` (0-based) occupies `[r/(M*C), (r+1)/(M*C))`.
    pub fn to_continuous(&self, capacity: &Rational) -> ContinuousSchedule {
        let slot = Rational::one() / (Rational::from_integer(self.n_parts.into()) * capacity);
        let uploads = self
            .rounds
            .iter()
            .enumerate()
            .flat_map(|(r, round)| {
                let start = &slot * Rational::from_integer(r.into());
                let end = &start + &slot;
                round.iter().map(move |t| Upload {
                    uploader: t.uploader,
                    downloader: t.downloader,
                    part: t.part,
                    start: start.clone(),
                    end: end.clone(),
                })
            })
            .collect();
        ContinuousSchedule { uploads }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn minimal_instance_is_valid() {
        assert!(Instance::new(1, 1, int(1), vec![int(1)]).is_ok());
    }

    #[test]
    fn zero_server_capacity_rejected() {
        let err = Instance::new(2, 1, int(0), vec![int(1), int(1)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInstance { field: "server_capacity", .. }));
    }

    #[test]
    fn capacity_length_mismatch_rejected() {
        let err = Instance::new(2, 1, int(1), vec![int(1); 3]).unwrap_err();
        assert!(matches!(err, Error::InvalidInstance { field: "peer_capacities", .. }));
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(Instance::new(0, 1, int(1), vec![]).is_err());
        assert!(Instance::new(1, 0, int(1), vec![int(1)]).is_err());
        assert!(Instance::new(1, 1, int(1), vec![int(-1)]).is_err());
    }

    #[test]
    fn instance_json_accepts_numbers_and_fractions() {
        let text = r#"{"n_peers": 2, "n_parts": 1, "server_capacity": 0.1, "peer_capacities": ["1/3", 2]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.server_capacity, ratio(1, 10));
        assert_eq!(inst.peer_capacities, vec![ratio(1, 3), int(2)]);
        let round_trip = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(round_trip, inst);
        assert!(inst.to_json().contains("\"1/10\""));
    }

    #[test]
    fn makespan_is_latest_end() {
        let up = |s: Rational, e: Rational| Upload { uploader: 0, downloader: 1, part: 1, start: s, end: e };
        let one = ContinuousSchedule { uploads: vec![up(int(0), int(1))] };
        assert_eq!(one.makespan().unwrap(), int(1));
        let two = ContinuousSchedule {
            uploads: vec![up(int(0), ratio(1, 2)), up(ratio(1, 2), ratio(5, 4))],
        };
        assert_eq!(two.makespan().unwrap(), ratio(5, 4));
        assert_eq!(ContinuousSchedule::default().makespan(), Err(Error::EmptySchedule));
    }
}
