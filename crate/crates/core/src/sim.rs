//! Monte-Carlo simulation of randomized decentralized dissemination.
//!
//! Rounds are synchronous. Every peer still missing a part picks one target:
//!
//! * `List`: uniformly among the server and the peers holding at least one
//!   part it needs;
//! * `NoList`: uniformly among the server and the other `N - 1` peers; a
//!   target with nothing useful wastes the request.
//!
//! Each target with useful requests serves one requester chosen uniformly,
//! sending a part chosen uniformly from those it holds and the requester
//! lacks. All choices use the state at the start of the round.
//!
//! Randomness: replication `r` of a run seeded with `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `r`. Sweeps derive the
//! seed of each grid point from the master seed with SplitMix64 over
//! `(N, M, scenario)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exec::{map_range, map_slice, Execution};
use crate::rational::floor_log2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    List,
    NoList,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::List => "list",
            Scenario::NoList => "nolist",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "list" => Ok(Scenario::List),
            "nolist" | "no-list" => Ok(Scenario::NoList),
            other => Err(Error::InvalidArgument(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub n_peers: usize,
    pub n_parts: usize,
    pub scenario: Scenario,
    pub seed: u64,
    pub replications: usize,
    /// Allows `NoList` with several parts, which has no reference behaviour.
    pub nolist_multipart: bool,
}

impl SimConfig {
    pub fn new(n_peers: usize, n_parts: usize, scenario: Scenario, seed: u64, replications: usize) -> Self {
        SimConfig { n_peers, n_parts, scenario, seed, replications, nolist_multipart: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_peers == 0 || self.n_parts == 0 || self.replications == 0 {
            return Err(Error::InvalidArgument("N, M and replications must be positive".into()));
        }
        if self.n_parts > 64 {
            return Err(Error::SizeGuard("the simulator supports at most 64 parts".into()));
        }
        if self.scenario == Scenario::NoList && self.n_parts > 1 && !self.nolist_multipart {
            return Err(Error::InvalidArgument("nolist with more than one part requires the extension flag".into()));
        }
        Ok(())
    }
}

/// Part sets of every node; index 0 is the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwarmState {
    pub held: Vec<u64>,
    pub n_parts: usize,
    pub round: usize,
}

impl SwarmState {
    pub fn new(n_peers: usize, n_parts: usize) -> Self {
        let mut held = vec![0u64; n_peers + 1];
        held[0] = full_mask(n_parts);
        SwarmState { held, n_parts, round: 0 }
    }

    pub fn n_peers(&self) -> usize {
        self.held.len() - 1
    }

    pub fn is_complete(&self) -> bool {
        let full = full_mask(self.n_parts);
        self.held.iter().all(|&h| h == full)
    }

    /// Peers holding part `part` (1-based).
    pub fn replicas(&self, part: usize) -> usize {
        self.held[1..].iter().filter(|&&h| h >> (part - 1) & 1 == 1).count()
    }
}

fn full_mask(n_parts: usize) -> u64 {
    if n_parts == 64 {
        u64::MAX
    } else {
        (1u64 << n_parts) - 1
    }
}

/// Uniform element of a nonempty mask.
fn pick_bit<R: Rng>(mask: u64, rng: &mut R) -> usize {
    let mut idx = rng.random_range(0..mask.count_ones());
    let mut bits = mask;
    loop {
        let b = bits.trailing_zeros();
        if idx == 0 {
            return b as usize;
        }
        idx -= 1;
        bits &= bits - 1;
    }
}

/// Scratch space reused across rounds.
#[derive(Default)]
struct Workspace {
    holders: Vec<Vec<u32>>,
    requests: Vec<u32>,
    winner: Vec<u32>,
    targeted: Vec<u32>,
}

impl Workspace {
    fn prepare(&mut self, state: &SwarmState) {
        let n = state.held.len();
        self.requests.clear();
        self.requests.resize(n, 0);
        self.winner.resize(n, 0);
        self.targeted.clear();
        self.holders.resize_with(state.n_parts, Vec::new);
        for h in &mut self.holders {
            h.clear();
        }
        for (p, &mask) in state.held.iter().enumerate().skip(1) {
            let mut bits = mask;
            while bits != 0 {
                self.holders[bits.trailing_zeros() as usize].push(p as u32);
                bits &= bits - 1;
            }
        }
    }
}

/// Uniform target among the server and peers holding a part in `needed`:
/// draw a part weighted by its holder count plus the server, draw one of
/// those nodes, accept with probability one over the number of needed parts
/// it holds.
fn list_target<R: Rng>(state: &SwarmState, ws: &Workspace, needed: u64, rng: &mut R) -> usize {
    let weight = |k: u32| ws.holders[k as usize].len() as u64 + 1;
    let mut total = 0u64;
    let mut bits = needed;
    while bits != 0 {
        total += weight(bits.trailing_zeros());
        bits &= bits - 1;
    }
    loop {
        let mut r = rng.random_range(0..total);
        let mut bits = needed;
        let part = loop {
            let k = bits.trailing_zeros();
            let w = weight(k);
            if r < w {
                break k;
            }
            r -= w;
            bits &= bits - 1;
        };
        let holders = &ws.holders[part as usize];
        let idx = rng.random_range(0..=holders.len());
        let node = if idx == holders.len() { 0 } else { holders[idx] as usize };
        let multiplicity = (state.held[node] & needed).count_ones();
        if multiplicity == 1 || rng.random_range(0..multiplicity) == 0 {
            return node;
        }
    }
}

fn run_round<R: Rng>(state: &mut SwarmState, scenario: Scenario, ws: &mut Workspace, rng: &mut R) -> usize {
    ws.prepare(state);
    let full = full_mask(state.n_parts);
    let n = state.n_peers();
    for p in 1..=n {
        let needed = full & !state.held[p];
        if needed == 0 {
            continue;
        }
        let target = match scenario {
            Scenario::List => list_target(state, ws, needed, rng),
            Scenario::NoList => {
                // Server or one of the other peers: skip over `p` itself.
                let t = rng.random_range(0..n);
                if t >= p {
                    t + 1
                } else {
                    t
                }
            }
        };
        if state.held[target] & needed == 0 {
            continue;
        }
        ws.requests[target] += 1;
        if ws.requests[target] == 1 {
            ws.targeted.push(target as u32);
            ws.winner[target] = p as u32;
        } else if rng.random_range(0..ws.requests[target]) == 0 {
            ws.winner[target] = p as u32;
        }
    }
    let mut transfers = Vec::with_capacity(ws.targeted.len());
    for &t in &ws.targeted {
        let t = t as usize;
        let p = ws.winner[t] as usize;
        let useful = state.held[t] & !state.held[p];
        transfers.push((p, pick_bit(useful, rng)));
    }
    for &(p, k) in &transfers {
        state.held[p] |= 1 << k;
    }
    state.round += 1;
    transfers.len()
}

/// Advances `state` by one synchronous round and returns the number of parts
/// transferred.
pub fn simulate_round<R: Rng>(state: &mut SwarmState, scenario: Scenario, rng: &mut R) -> usize {
    run_round(state, scenario, &mut Workspace::default(), rng)
}

/// Rounds until every peer holds every part.
pub fn run_once<R: Rng>(n_peers: usize, n_parts: usize, scenario: Scenario, rng: &mut R) -> usize {
    let mut state = SwarmState::new(n_peers, n_parts);
    let mut ws = Workspace::default();
    while !state.is_complete() {
        let moved = run_round(&mut state, scenario, &mut ws, rng);
        assert!(scenario != Scenario::List || moved > 0, "list round {} made no progress", state.round);
    }
    let floor = n_parts + floor_log2(n_peers as u64) as usize;
    assert!(state.round >= floor, "{} rounds beat the lower bound {floor}", state.round);
    state.round
}

/// The generator used by replication `replication` of a run seeded `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub samples: Vec<u64>,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    /// Normal-approximation 95% interval for the mean.
    pub ci95: (f64, f64),
}

impl TrialStats {
    pub fn from_samples(samples: Vec<u64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let se = sd / n.sqrt();
        let mut stats = TrialStats { samples, mean, sd, se, ci95: (mean, mean) };
        stats.ci95 = stats.interval(0.95);
        stats
    }

    /// Normal-approximation interval at confidence `level`.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
        (self.mean - z * self.se, self.mean + z * self.se)
    }

    pub fn min(&self) -> u64 {
        self.samples.iter().copied().min().unwrap_or(0)
    }
}

pub fn simulate(config: &SimConfig) -> Result<TrialStats> {
    simulate_with(config, Execution::default())
}

/// Replications run under `exec`; the result does not depend on it.
pub fn simulate_with(config: &SimConfig, exec: Execution) -> Result<TrialStats> {
    config.validate()?;
    let samples = map_range(exec, config.replications, |r| {
        let mut rng = replication_rng(config.seed, r as u64);
        run_once(config.n_peers, config.n_parts, config.scenario, &mut rng) as u64
    });
    Ok(TrialStats::from_samples(samples))
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one grid point.
pub fn grid_seed(master: u64, n_peers: usize, n_parts: usize, scenario: Scenario) -> u64 {
    let tag = match scenario {
        Scenario::List => 1,
        Scenario::NoList => 2,
    };
    [n_peers as u64, n_parts as u64, tag].into_iter().fold(splitmix64(master), |acc, v| splitmix64(acc ^ v))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepGrid {
    pub scenarios: Vec<Scenario>,
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
}

impl SweepGrid {
    /// `N = 2, 4, ..., 2^max_exp`.
    pub fn powers_of_two(max_exp: u32) -> Vec<usize> {
        (1..=max_exp).map(|e| 1usize << e).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_peers: usize,
    pub n_parts: usize,
    pub scenario: Scenario,
    pub stats: TrialStats,
}

/// One row per grid point, ordered by `(scenario, M, N)` as listed. Grid
/// points run under `exec`, replications inside each point sequentially.
pub fn sweep(grid: &SweepGrid, exec: Execution) -> Result<Vec<SweepRow>> {
    if grid.scenarios.is_empty() || grid.n_values.is_empty() || grid.m_values.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let mut points = Vec::new();
    for &scenario in &grid.scenarios {
        for &m in &grid.m_values {
            for &n in &grid.n_values {
                let seed = grid_seed(grid.master_seed, n, m, scenario);
                let config = SimConfig::new(n, m, scenario, seed, grid.replications);
                config.validate()?;
                points.push(config);
            }
        }
    }
    let stats = map_slice(exec, &points, |c| simulate_with(c, Execution::Sequential));
    points
        .iter()
        .zip(stats)
        .map(|(c, s)| Ok(SweepRow { n_peers: c.n_peers, n_parts: c.n_parts, scenario: c.scenario, stats: s? }))
        .collect()
}
