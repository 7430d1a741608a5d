//! Stasis detection over genotype abundance histories.
//!
//! A run is *active* at step `now` if some genotype first seen within the
//! last `window` steps (`first_seen + window > now`) held an abundance of at
//! least `min_abundance` for `persistence` consecutive steps. Otherwise it is
//! in *stasis*, unless less than `window` steps of history exist, in which
//! case the verdict is *indeterminate*.
//!
//! Abundances are piecewise constant between recorded change points; a run
//! starting at step `r` and still going at `now` has length `now + 1 - r`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StasisParams {
    pub window: u64,
    pub persistence: u64,
    pub min_abundance: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Indeterminate,
    Active,
    Stasis,
}

impl VerdictKind {
    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::Indeterminate => "indeterminate",
            VerdictKind::Active => "active",
            VerdictKind::Stasis => "stasis",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StasisVerdict {
    /// Window as an inclusive step range.
    pub from: u64,
    pub to: u64,
    pub kind: VerdictKind,
    /// The qualifying genotype first seen most recently.
    pub newest_persistent: Option<u64>,
}

impl StasisVerdict {
    pub fn active(&self) -> bool {
        self.kind == VerdictKind::Active
    }
}

fn window_from(now: u64, window: u64) -> u64 {
    (now + 1).saturating_sub(window)
}

/// Change points `(step, abundance)` per genotype, steps strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbundanceHistory {
    pub start: u64,
    pub series: BTreeMap<u64, Vec<(u64, u64)>>,
}

impl AbundanceHistory {
    pub fn new(start: u64) -> Self {
        AbundanceHistory { start, series: BTreeMap::new() }
    }

    /// Records the abundance of `genotype` as of the end of `step`.
    pub fn record(&mut self, step: u64, genotype: u64, abundance: u64) {
        let s = self.series.entry(genotype).or_default();
        match s.last_mut() {
            Some(last) if last.0 == step => last.1 = abundance,
            Some(last) if last.1 == abundance => {}
            Some(last) => {
                assert!(last.0 < step, "history steps must increase");
                s.push((step, abundance));
            }
            None => s.push((step, abundance)),
        }
    }
}

/// Pure verdict from a full history.
pub fn detect_stasis(history: &AbundanceHistory, now: u64, p: &StasisParams) -> StasisVerdict {
    let from = window_from(now, p.window);
    let mut verdict = StasisVerdict { from, to: now, kind: VerdictKind::Stasis, newest_persistent: None };
    if now.saturating_sub(history.start) < p.window {
        verdict.kind = VerdictKind::Indeterminate;
        return verdict;
    }
    let mut best: Option<(u64, u64)> = None;
    for (&g, points) in &history.series {
        let points: Vec<(u64, u64)> = points.iter().copied().filter(|&(s, _)| s <= now).collect();
        let Some(first_seen) = points.iter().find(|&&(_, a)| a > 0).map(|&(s, _)| s) else {
            continue;
        };
        if first_seen < from {
            continue;
        }
        let mut persisted = false;
        let mut run_start: Option<u64> = None;
        for &(s, a) in &points {
            match (run_start, a >= p.min_abundance) {
                (None, true) => run_start = Some(s),
                (Some(r), false) => {
                    persisted |= s - r >= p.persistence;
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(r) = run_start {
            persisted |= now + 1 - r >= p.persistence;
        }
        if persisted && best.is_none_or(|b| (first_seen, g) > b) {
            best = Some((first_seen, g));
        }
    }
    if let Some((_, g)) = best {
        verdict.kind = VerdictKind::Active;
        verdict.newest_persistent = Some(g);
    }
    verdict
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Track {
    first_seen: u64,
    abundance: u64,
    run_start: Option<u64>,
    persisted: bool,
}

/// Incremental form of [`detect_stasis`]: feed one abundance per genotype
/// per step (the value at the end of that step), in step order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StasisTracker {
    params: StasisParams,
    start: u64,
    tracks: BTreeMap<u64, Track>,
    by_first_seen: BTreeSet<(u64, u64)>,
    /// Genotypes pruned from the window; their first sighting stays old.
    #[serde(default)]
    expired: BTreeSet<u64>,
}

impl StasisTracker {
    pub fn new(params: StasisParams, start: u64) -> Self {
        StasisTracker {
            params,
            start,
            tracks: BTreeMap::new(),
            by_first_seen: BTreeSet::new(),
            expired: BTreeSet::new(),
        }
    }

    pub fn params(&self) -> &StasisParams {
        &self.params
    }

    pub fn update(&mut self, step: u64, genotype: u64, abundance: u64) {
        let n_min = self.params.min_abundance;
        let w = self.params.persistence;
        let t = match self.tracks.get_mut(&genotype) {
            Some(t) => t,
            None if abundance == 0 || self.expired.contains(&genotype) => return,
            None => {
                self.by_first_seen.insert((step, genotype));
                self.tracks.entry(genotype).or_insert(Track {
                    first_seen: step,
                    abundance: 0,
                    run_start: None,
                    persisted: false,
                })
            }
        };
        match (t.run_start, abundance >= n_min) {
            (None, true) => t.run_start = Some(step),
            (Some(r), false) => {
                t.persisted |= step - r >= w;
                t.run_start = None;
            }
            _ => {}
        }
        t.abundance = abundance;
    }

    /// Verdict as of the end of step `now`. Genotypes whose first sighting
    /// has left the window are dropped; they can never qualify again.
    pub fn verdict(&mut self, now: u64) -> StasisVerdict {
        let p = self.params;
        let from = window_from(now, p.window);
        let mut verdict = StasisVerdict { from, to: now, kind: VerdictKind::Stasis, newest_persistent: None };
        if now.saturating_sub(self.start) < p.window {
            verdict.kind = VerdictKind::Indeterminate;
            return verdict;
        }
        while let Some(&(fs, g)) = self.by_first_seen.first() {
            if fs >= from {
                break;
            }
            self.by_first_seen.pop_first();
            self.tracks.remove(&g);
            self.expired.insert(g);
        }
        for &(_, g) in self.by_first_seen.iter().rev() {
            let t = &self.tracks[&g];
            let ongoing = t.run_start.is_some_and(|r| now + 1 - r >= p.persistence);
            if t.persisted || ongoing {
                verdict.kind = VerdictKind::Active;
                verdict.newest_persistent = Some(g);
                break;
            }
        }
        verdict
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: StasisParams = StasisParams { window: 100, persistence: 10, min_abundance: 5 };

    #[test]
    fn short_history_is_indeterminate() {
        let h = AbundanceHistory::new(0);
        assert_eq!(detect_stasis(&h, 50, &P).kind, VerdictKind::Indeterminate);
        let mut t = StasisTracker::new(P, 0);
        assert_eq!(t.verdict(99).kind, VerdictKind::Indeterminate);
        assert_eq!(t.verdict(100).kind, VerdictKind::Stasis);
    }

    #[test]
    fn new_persistent_genotype_is_active() {
        let mut h = AbundanceHistory::new(0);
        h.record(0, 1, 50);
        h.record(150, 2, 5);
        let v = detect_stasis(&h, 159, &P);
        assert_eq!(v.kind, VerdictKind::Active);
        assert_eq!(v.newest_persistent, Some(2));
        // one step short of the persistence requirement
        assert_eq!(detect_stasis(&h, 158, &P).kind, VerdictKind::Stasis);
    }

    #[test]
    fn old_genotypes_do_not_count() {
        let mut h = AbundanceHistory::new(0);
        h.record(0, 1, 50);
        assert_eq!(detect_stasis(&h, 500, &P).kind, VerdictKind::Stasis);
    }

    #[test]
    fn interrupted_runs_do_not_add_up() {
        let mut h = AbundanceHistory::new(0);
        h.record(150, 2, 5);
        h.record(155, 2, 4);
        h.record(156, 2, 5);
        h.record(160, 2, 0);
        assert_eq!(detect_stasis(&h, 200, &P).kind, VerdictKind::Stasis);
        let mut t = StasisTracker::new(P, 0);
        for (s, a) in [(150, 5), (155, 4), (156, 5), (160, 0)] {
            t.update(s, 2, a);
        }
        assert_eq!(t.verdict(200).kind, VerdictKind::Stasis);
    }
}
