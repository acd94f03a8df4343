//! Optimal dissemination when every node has the same upload capacity.
//!
//! With `n = floor(log2 N)` and `x = N - 2^n + 1`, the construction runs in
//! four phases:
//!
//! 1. rounds `1..=n` seed: every holder copies its single part to an empty
//!    peer while the server injects part `min(round, M)`;
//! 2. round `n + 1` uses every holder and splits the peers into the classes
//!    `B12, B1p, B1, B2, Bp` (see [`ClassSizes`]);
//! 3. rounds `n + 2 ..= n + M - 1` rotate: part `c` is completed, part
//!    `c + 1` reaches `2^n` copies and the classes are rebuilt for `c + 1`;
//! 4. round `n + M` completes the last two parts.
//!
//! Every round doubles the copies of each not-yet-saturated part, so the
//! replica counts follow [`table_count`] exactly. Ties inside a class are
//! broken by ascending peer id.

use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Instance, NodeId, RoundSchedule, Transfer, SERVER};
use crate::rational::{floor_log2, Rational};
use crate::verify::verify_schedule;

/// `M + floor(log2 N)`.
pub fn optimal_rounds(n_peers: usize, n_parts: usize) -> usize {
    n_parts + floor_log2(n_peers as u64) as usize
}

/// `(1 + floor(log2 N) / M) / C`.
pub fn optimal_makespan_equal(n_peers: usize, n_parts: usize, capacity: &Rational) -> Rational {
    let n = Rational::from_integer((floor_log2(n_peers as u64) as u64).into());
    let m = Rational::from_integer(n_parts.into());
    (Rational::one() + n / m) / capacity
}

/// Class sizes at the start of a rotation round, where `c` is the lowest part
/// not yet held by everyone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSizes {
    /// Holding `c` and `c + 1`.
    pub b12: usize,
    /// Holding `c` and one later part.
    pub b1p: usize,
    /// Holding only `c`.
    pub b1: usize,
    /// Holding only `c + 1`.
    pub b2: usize,
    /// Holding only one later part.
    pub bp: usize,
}

impl ClassSizes {
    pub fn expected(n_peers: usize) -> Self {
        let n = floor_log2(n_peers as u64);
        let half = 1usize << n >> 1;
        let x = n_peers + 1 - (1 << n);
        let (fl, ce) = (x / 2, x.div_ceil(2));
        ClassSizes { b12: half - fl, b1p: half - ce, b1: x, b2: fl, bp: ce - 1 }
    }
}

/// Replica count of part `k` at the end of round `n + j` for the optimal
/// construction; values below one read as zero.
pub fn table_count(n_peers: usize, n_parts: usize, j: usize, k: usize) -> usize {
    let n = floor_log2(n_peers as u64) as i64;
    let (j, k, m) = (j as i64, k as i64, n_parts as i64);
    let pow = |e: i64| if e < 0 { 0 } else { 1usize << e };
    if k < j {
        n_peers
    } else if k == j {
        pow(n)
    } else if k == m {
        pow(n - m + 1 + j).saturating_sub(1)
    } else {
        pow(n - k + j)
    }
}

struct Builder {
    n_peers: usize,
    n_parts: usize,
    n: usize,
    x: usize,
    held: Vec<Vec<bool>>,
    rounds: Vec<Vec<Transfer>>,
}

impl Builder {
    fn new(n_peers: usize, n_parts: usize) -> Self {
        let n = floor_log2(n_peers as u64) as usize;
        let mut held = vec![vec![false; n_parts + 1]; n_peers + 1];
        held[SERVER][1..].iter_mut().for_each(|h| *h = true);
        Builder { n_peers, n_parts, n, x: n_peers + 1 - (1 << n), held, rounds: Vec::new() }
    }

    fn peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        1..=self.n_peers
    }

    fn parts_of(&self, peer: NodeId) -> Vec<usize> {
        (1..=self.n_parts).filter(|&k| self.held[peer][k]).collect()
    }

    fn holders_of(&self, part: usize) -> Vec<NodeId> {
        self.peers().filter(|&p| self.held[p][part]).collect()
    }

    fn empties(&self) -> Vec<NodeId> {
        self.peers().filter(|&p| self.parts_of(p).is_empty()).collect()
    }

    fn commit(&mut self, mut round: Vec<Transfer>) {
        round.sort();
        for t in &round {
            debug_assert!(self.held[t.uploader][t.part], "{t:?} uploads an unheld part");
            debug_assert!(!self.held[t.downloader][t.part], "{t:?} is redundant");
        }
        for t in &round {
            self.held[t.downloader][t.part] = true;
        }
        self.rounds.push(round);
    }

    fn finish(self) -> RoundSchedule {
        RoundSchedule { n_parts: self.n_parts, rounds: self.rounds }
    }

    /// Rounds `1..=n`: each holder copies its part into an empty peer.
    fn seed(&mut self) {
        for round in 1..=self.n {
            let mut uploads: Vec<(NodeId, usize)> = vec![(SERVER, round.min(self.n_parts))];
            for p in self.peers() {
                if let [k] = self.parts_of(p)[..] {
                    uploads.push((p, k));
                }
            }
            let empties = self.empties();
            let transfers = pair(&uploads, &empties[..uploads.len()]);
            self.commit(transfers);
        }
    }

    /// Single part: everyone holding the file doubles the population.
    fn doubling(&mut self) {
        while !self.empties().is_empty() {
            let mut uploads = vec![(SERVER, 1)];
            uploads.extend(self.holders_of(1).into_iter().map(|p| (p, 1)));
            let empties = self.empties();
            let k = uploads.len().min(empties.len());
            self.commit(pair(&uploads[..k], &empties[..k]));
        }
    }

    /// Round `n + 1` for two parts: ends with `2^n - x` complete peers, `x`
    /// holding only part 1 and `x - 1` holding only part 2.
    fn split_two_parts(&mut self) {
        let a1 = self.holders_of(1);
        let a2 = self.holders_of(2);
        let a0 = self.empties();
        let half = 1usize << self.n >> 1;
        let x = self.x;
        let (fl, ce) = (x / 2, x.div_ceil(2));
        let mut round = Vec::new();
        if x == 1 {
            let mut targets = a2.clone();
            targets.push(a0[0]);
            round.extend(copies(&a1, 1, &targets));
            round.extend(copies(&a2, 2, &a1[..a2.len()]));
            round.push(Transfer { uploader: SERVER, downloader: a1[a2.len()], part: 2 });
        } else {
            let targets: Vec<NodeId> = a2[..half - fl].iter().chain(&a0[..fl]).copied().collect();
            round.extend(copies(&a1, 1, &targets));
            let targets: Vec<NodeId> = a1[..half - ce].iter().chain(&a0[fl..fl + ce - 1]).copied().collect();
            round.extend(copies(&a2, 2, &targets));
            round.push(Transfer { uploader: SERVER, downloader: a0[fl + ce - 1], part: 2 });
        }
        self.commit(round);
    }

    /// Round `n + 1` for three or more parts: every holder uploads and the
    /// peers fall into the classes of [`ClassSizes`] for `c = 1`. Holders of
    /// part 3 are kept in `Bp` where possible so the next rotation can place
    /// enough copies of part 3.
    fn split_many_parts(&mut self) {
        let p1 = self.holders_of(1);
        let q2 = self.holders_of(2);
        let mut qp: Vec<NodeId> = self.peers().filter(|&p| self.parts_of(p).first().is_some_and(|&k| k >= 3)).collect();
        qp.sort_by_key(|&p| (self.held[p][3], p));
        let e = self.empties();
        let server_part = (self.n + 1).min(self.n_parts);
        let x = self.x as i64;
        let (fl, ce) = (x / 2, (x + 1) / 2);

        let u2 = q2.len() as i64 + i64::from(server_part == 2);
        let up = qp.len() as i64 + i64::from(server_part >= 3);
        let b = fl.min(u2);
        let c = (ce - 1).min(up);
        let a = x - b - c;
        let q2r = q2.len() as i64 + b - fl;
        let qpr = qp.len() as i64 + c - (ce - 1);
        let p2 = u2 - b;
        let pp = up - c;
        for v in [a, b, c, q2r, qpr, p2, pp] {
            assert!(v >= 0, "class split infeasible for N={}, M={}", self.n_peers, self.n_parts);
        }
        let (a, b, c, q2r, qpr, p2, pp) =
            (a as usize, b as usize, c as usize, q2r as usize, qpr as usize, p2 as usize, pp as usize);
        assert_eq!(a + q2r + qpr, p1.len());
        assert!(p2 + pp <= p1.len());

        let mut round = Vec::new();
        let targets: Vec<NodeId> = e[..a].iter().chain(&q2[..q2r]).chain(&qp[..qpr]).copied().collect();
        round.extend(copies(&p1, 1, &targets));

        let mut part2: Vec<(NodeId, usize)> = q2.iter().map(|&p| (p, 2)).collect();
        if server_part == 2 {
            part2.insert(0, (SERVER, 2));
        }
        let targets: Vec<NodeId> = e[a..a + b].iter().chain(&p1[..p2]).copied().collect();
        round.extend(pair(&part2, &targets));

        let mut later: Vec<(NodeId, usize)> = qp.iter().map(|&p| (p, self.parts_of(p)[0])).collect();
        if server_part >= 3 {
            later.push((SERVER, server_part));
        }
        later.sort_by_key(|&(node, k)| (k, node));
        let targets: Vec<NodeId> = e[a + b..a + b + c].iter().chain(&p1[p2..p2 + pp]).copied().collect();
        round.extend(pair(&later, &targets));
        self.commit(round);
    }

    /// Rotation round with `c` the lowest incomplete part.
    fn rotate(&mut self, c: usize) {
        let m = self.n_parts;
        let x = self.x;
        let (fl, ce) = (x / 2, x.div_ceil(2));
        let (mut b12, mut b1p, mut b1, mut b2, mut bp) = (vec![], vec![], vec![], vec![], vec![]);
        for p in self.peers() {
            let parts = self.parts_of(p);
            debug_assert!(parts.iter().take(c - 1).copied().eq(1..c), "peer {p} lacks an early part");
            let later: Vec<usize> = parts.iter().copied().filter(|&k| k >= c + 2).collect();
            assert!(later.len() <= 1, "peer {p} holds {parts:?} entering rotation {c}");
            match (self.held[p][c], self.held[p][c + 1], later.first()) {
                (true, true, None) => b12.push(p),
                (true, false, Some(&k)) => b1p.push((p, k)),
                (true, false, None) => b1.push(p),
                (false, true, None) => b2.push(p),
                (false, false, Some(&k)) => bp.push((p, k)),
                _ => panic!("peer {p} holds {parts:?} entering rotation {c}"),
            }
        }
        let sizes = ClassSizes { b12: b12.len(), b1p: b1p.len(), b1: b1.len(), b2: b2.len(), bp: bp.len() };
        assert_eq!(sizes, ClassSizes::expected(self.n_peers), "rotation {c}");

        let mut round = Vec::new();
        // Everyone gets part c.
        let needs_c: Vec<NodeId> = b2.iter().copied().chain(bp.iter().map(|&(p, _)| p)).collect();
        round.extend(copies(&b1[..x - 1], c, &needs_c));

        // Part c + 1 reaches 2^n copies.
        let (b1_a, b1_b) = b1.split_at(ce);
        let mut sources: Vec<NodeId> = b12.iter().chain(&b2).copied().collect();
        sources.sort();
        let targets: Vec<NodeId> = b1p.iter().map(|&(p, _)| p).chain(b1_a.iter().copied()).collect();
        round.extend(copies(&sources, c + 1, &targets));

        // Later parts double.
        let mut later: Vec<(NodeId, usize)> = b1p.iter().chain(&bp).copied().collect();
        later.push((SERVER, (self.n + 1 + c).min(m)));
        later.sort_by_key(|&(node, k)| (k, node));
        let targets: Vec<NodeId> = if c + 2 == m {
            b1_b.iter().chain(&b12).copied().collect()
        } else {
            // Exactly fl peers may end holding only part c + 2.
            let h = bp.iter().filter(|&&(_, k)| k == c + 2).count();
            let need = fl - h;
            let next = later.iter().take_while(|&&(_, k)| k == c + 2).count();
            assert!(next >= need && later.len() - next >= h, "rotation {c}: too few copies of part {}", c + 2);
            let (head, rest) = later.split_at(next);
            let ordered: Vec<(NodeId, usize)> =
                head[..need].iter().chain(&rest[..h]).chain(&head[need..]).chain(&rest[h..]).copied().collect();
            later = ordered;
            b1_b.iter().chain(&b12).copied().collect()
        };
        round.extend(pair(&later, &targets));
        self.commit(round);
    }

    /// Last round: `x` peers lack part `M`, `x - 1` lack part `M - 1`.
    fn complete(&mut self) {
        let m = self.n_parts;
        let lacks_last: Vec<NodeId> = self.peers().filter(|&p| !self.held[p][m]).collect();
        let lacks_prev: Vec<NodeId> = self.peers().filter(|&p| !self.held[p][m - 1]).collect();
        assert_eq!(lacks_last.len(), self.x);
        assert_eq!(lacks_prev.len(), self.x - 1);
        let mut round = copies(&lacks_last[..self.x - 1], m - 1, &lacks_prev);
        round.push(Transfer { uploader: SERVER, downloader: lacks_last[0], part: m });
        round.extend(copies(&lacks_prev, m, &lacks_last[1..]));
        self.commit(round);
    }
}

fn pair(uploads: &[(NodeId, usize)], targets: &[NodeId]) -> Vec<Transfer> {
    assert_eq!(uploads.len(), targets.len(), "uploaders and receivers must match");
    uploads
        .iter()
        .zip(targets)
        .map(|(&(uploader, part), &downloader)| Transfer { uploader, downloader, part })
        .collect()
}

fn copies(sources: &[NodeId], part: usize, targets: &[NodeId]) -> Vec<Transfer> {
    let uploads: Vec<(NodeId, usize)> = sources.iter().map(|&p| (p, part)).collect();
    pair(&uploads, targets)
}

/// Builds a schedule with exactly `M + floor(log2 N)` rounds that respects one
/// upload and one download per node per round.
pub fn build_schedule(n_peers: usize, n_parts: usize) -> Result<RoundSchedule> {
    if n_peers == 0 || n_parts == 0 {
        return Err(Error::InvalidArgument("N and M must be positive".into()));
    }
    let mut b = Builder::new(n_peers, n_parts);
    if n_peers == 1 {
        for k in 1..=n_parts {
            b.commit(vec![Transfer { uploader: SERVER, downloader: 1, part: k }]);
        }
        return Ok(b.finish());
    }
    if n_parts == 1 {
        b.doubling();
        return Ok(b.finish());
    }
    b.seed();
    if n_parts == 2 {
        b.split_two_parts();
    } else {
        b.split_many_parts();
        for c in 1..=n_parts - 2 {
            b.rotate(c);
        }
    }
    b.complete();
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplicaProfile {
    /// `counts[t][k - 1]`: peers holding part `k` at the end of round `t + 1`.
    pub counts: Vec<Vec<usize>>,
}

impl ReplicaProfile {
    pub fn count(&self, round: usize, part: usize) -> usize {
        self.counts[round - 1][part - 1]
    }

    /// Rows of `round,part,count`, header included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,part,count\n");
        for (t, row) in self.counts.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", t + 1, k + 1, c));
            }
        }
        out
    }
}

/// Per-round replica counts of a round schedule, after checking it.
pub fn replica_profile(sched: &RoundSchedule, n_peers: usize, n_parts: usize) -> Result<ReplicaProfile> {
    if sched.n_parts != n_parts {
        return Err(Error::InvalidSchedule(format!("schedule has {} parts, expected {n_parts}", sched.n_parts)));
    }
    sched.check(n_peers)?;
    let inst = Instance::equal(n_peers, n_parts, Rational::one())?;
    let report = verify_schedule(&inst, &sched.to_continuous(&Rational::one()), true);
    if !report.valid {
        return Err(Error::InvalidSchedule(format!("{} violations, first: {:?}", report.violations.len(), report.violations[0])));
    }
    let mut held = vec![vec![false; n_parts + 1]; n_peers + 1];
    let mut counts = Vec::with_capacity(sched.rounds.len());
    let mut current = vec![0usize; n_parts];
    for round in &sched.rounds {
        for t in round {
            if !std::mem::replace(&mut held[t.downloader][t.part], true) {
                current[t.part - 1] += 1;
            }
        }
        counts.push(current.clone());
    }
    Ok(ReplicaProfile { counts })
}

/// Upload opportunities left unused: per round, nodes holding at least one
/// part minus the transfers made.
pub fn unused_upload_slots(sched: &RoundSchedule, n_peers: usize) -> usize {
    let mut has_any = vec![false; n_peers + 1];
    has_any[SERVER] = true;
    let mut unused = 0;
    for round in &sched.rounds {
        let capable = has_any.iter().filter(|&&h| h).count();
        unused += capable - round.len();
        for t in round {
            has_any[t.downloader] = true;
        }
    }
    unused
}
