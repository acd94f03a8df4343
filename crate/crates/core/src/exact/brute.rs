//! Breadth-first search over round-based schedules for tiny instances.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Largest instance accepted by [`brute_force_rounds`].
pub const DEFAULT_GUARD: (usize, usize) = (4, 3);

/// Minimum number of rounds (one upload and one download per node per round)
/// to give every peer every part, found by exhaustive search.
pub fn brute_force_rounds(n_peers: usize, n_parts: usize) -> Result<usize> {
    brute_force_rounds_guarded(n_peers, n_parts, DEFAULT_GUARD)
}

pub fn brute_force_rounds_guarded(n_peers: usize, n_parts: usize, guard: (usize, usize)) -> Result<usize> {
    if n_peers == 0 || n_parts == 0 {
        return Err(Error::InvalidArgument("N and M must be positive".into()));
    }
    if n_peers > guard.0 || n_parts > guard.1 || n_parts > 16 {
        return Err(Error::SizeGuard(format!(
            "exhaustive round search limited to N <= {}, M <= {}; got N={n_peers}, M={n_parts}",
            guard.0, guard.1
        )));
    }
    let full: u16 = ((1u32 << n_parts) - 1) as u16;
    let start = vec![0u16; n_peers];
    let mut frontier: HashSet<Vec<u16>> = HashSet::from([start]);
    let mut seen = frontier.clone();
    for round in 1.. {
        let mut next = HashSet::new();
        for state in &frontier {
            let mut out = Vec::new();
            successors(state, full, &mut out);
            for mut s in out {
                if s.iter().all(|&m| m == full) {
                    return Ok(round);
                }
                s.sort_unstable();
                if seen.insert(s.clone()) {
                    next.insert(s);
                }
            }
        }
        frontier = next;
        assert!(!frontier.is_empty(), "search space exhausted without completion");
    }
    unreachable!()
}

/// All states reachable in one round. Uploader index 0 is the server; peer
/// `p` is uploader `p + 1`.
fn successors(state: &[u16], full: u16, out: &mut Vec<Vec<u16>>) {
    let n = state.len();
    let mut used = vec![false; n + 1];
    let mut next = state.to_vec();
    assign(state, full, 0, &mut used, &mut next, out);
    debug_assert!(out.len() <= (n + 2).pow(n as u32 * 2));
}

fn assign(state: &[u16], full: u16, d: usize, used: &mut [bool], next: &mut [u16], out: &mut Vec<Vec<u16>>) {
    if d == state.len() {
        out.push(next.to_vec());
        return;
    }
    assign(state, full, d + 1, used, next, out);
    let missing = full & !state[d];
    for u in 0..used.len() {
        if used[u] || u == d + 1 {
            continue;
        }
        let offer = if u == 0 { full } else { state[u - 1] } & missing;
        let mut bits = offer;
        while bits != 0 {
            let k = bits & bits.wrapping_neg();
            bits &= bits - 1;
            used[u] = true;
            next[d] = state[d] | k;
            assign(state, full, d + 1, used, next, out);
            next[d] = state[d];
            used[u] = false;
        }
    }
}
