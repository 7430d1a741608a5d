//! Naive oracles shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::collections::VecDeque;

use openmedium::soup::Direction;

/// Straight-line restatement of template addressing: returns
/// `(match start, forward, distance)`.
pub fn naive_search(
    soup: &[u8],
    from: usize,
    dir: Direction,
    template: &[u8],
    limit: usize,
) -> Option<(usize, bool, usize)> {
    let n = soup.len();
    let len = template.len();
    if len == 0 {
        return None;
    }
    let limit = limit.min(n);
    let matches_at = |s: usize| (0..len).all(|i| soup[(s + i) % n] == 1 - template[i]);
    let fwd = (0..limit).find(|&d| matches_at((from + 1 + len + d) % n));
    let bwd = (1..=limit).find(|&d| matches_at((from + n * 2 - d) % n));
    let f = fwd.map(|d| ((from + 1 + len + d) % n, true, d));
    let b = bwd.map(|d| ((from + n * 2 - d) % n, false, d));
    match dir {
        Direction::Forward => f,
        Direction::Backward => b,
        Direction::Nearest => match (f, b) {
            (Some(f), Some(b)) => Some(if b.2 < f.2 { b } else { f }),
            (f, b) => f.or(b),
        },
    }
}

/// Breadth-first components; each sorted, ordered by smallest member.
pub fn bfs_components(n: usize, edges: &[(u32, u32)], excluded: &[bool]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut seen = excluded.to_vec();
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s as u32];
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v as u32);
                    q.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Whether `hits` out of `trials` Bernoulli(p) draws lies within three
/// standard deviations of the mean.
pub fn within_three_sigma(hits: u64, trials: u64, p: f64) -> bool {
    let mean = trials as f64 * p;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - mean).abs() <= 3.0 * sigma
}
