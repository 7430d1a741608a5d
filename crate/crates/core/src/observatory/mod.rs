//! Read-only analysis of world snapshots: genotypes, diversity, parasites,
//! stasis and audits. Nothing here mutates a world.

pub mod audit;
pub mod components;
pub mod genotype;
pub mod metrics;
pub mod parasite;
pub mod registry;
pub mod stasis;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::event::{Event, EventKind};
use crate::hash::fnv1a64;
use crate::world::World;

pub use audit::{audit_chem, audit_soup, AuditViolation};
pub use components::{components_of_graph, connected_components};
pub use genotype::{chem_genotype, soup_genotype, Class, Genotype};
pub use metrics::{format_sig6, shannon, MetricsFrame, METRICS_HEADER};
pub use parasite::{detect_parasites, is_parasite};
pub use registry::{csv_field, GenotypeRecord, Registry, GENOTYPES_HEADER};
pub use stasis::{detect_stasis, AbundanceHistory, StasisParams, StasisTracker, StasisVerdict, VerdictKind};

fn hex_cells(cells: &[u8]) -> String {
    cells.iter().map(|&c| char::from_digit(c as u32 & 0xf, 16).expect("nibble")).collect()
}

/// Live genotype abundances (chem: bonded components of two or more atoms).
pub fn chem_census(world: &crate::chem::ChemWorld) -> BTreeMap<u64, (Genotype, u64)> {
    let mut out: BTreeMap<u64, (Genotype, u64)> = BTreeMap::new();
    for comp in connected_components(world) {
        if comp.len() < 2 {
            continue;
        }
        let g = chem_genotype(world, &comp);
        out.entry(g.id).or_insert((g, 0)).1 += 1;
    }
    out
}

/// Accumulated analysis state. Serialisable so a resumed run continues
/// with identical metrics and stasis flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observatory {
    parasite_fraction: f64,
    registry: Registry,
    tracker: StasisTracker,
    live: BTreeMap<u64, u64>,
    births: u64,
    deaths: u64,
    new_genotypes: u64,
    verdict: VerdictKind,
}

impl Observatory {
    pub fn new(config: &RunConfig) -> Self {
        let params = StasisParams {
            window: config.stasis_window,
            persistence: config.stasis_persistence,
            min_abundance: config.stasis_min_abundance,
        };
        Observatory {
            parasite_fraction: config.parasite_fraction,
            registry: Registry::default(),
            tracker: StasisTracker::new(params, 0),
            live: BTreeMap::new(),
            births: 0,
            deaths: 0,
            new_genotypes: 0,
            verdict: VerdictKind::Indeterminate,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Current abundance per live genotype.
    pub fn abundances(&self) -> &BTreeMap<u64, u64> {
        &self.live
    }

    pub fn abundance(&self, genotype: u64) -> u64 {
        self.live.get(&genotype).copied().unwrap_or(0)
    }

    pub fn last_verdict(&self) -> VerdictKind {
        self.verdict
    }

    pub fn verdict(&mut self, now: u64) -> StasisVerdict {
        self.tracker.verdict(now)
    }

    fn set_abundance(&mut self, step: u64, g: u64, a: u64) {
        if a == 0 {
            self.live.remove(&g);
        } else {
            self.live.insert(g, a);
        }
        self.registry.set_abundance(step, g, a);
        self.tracker.update(step, g, a);
    }

    /// Soup births and deaths update abundances as they happen; the net
    /// change per genotype is applied at the end of the step.
    pub fn observe_events(&mut self, step: u64, world: &World, events: &[Event]) {
        let World::Soup(soup) = world else { return };
        let mut changed: BTreeMap<u64, i64> = BTreeMap::new();
        for e in events {
            let Some(g) = e.genotype else { continue };
            match e.kind {
                EventKind::Birth => {
                    self.births += 1;
                    *changed.entry(g).or_default() += 1;
                    if !self.registry.contains(g) || self.registry.get(g).is_some_and(|r| r.canonical.is_empty()) {
                        let (start, len) = (e.addr.unwrap_or(0), e.value.unwrap_or(0));
                        let n = soup.soup_size() as u64;
                        let cells: Vec<u8> =
                            (0..len).map(|i| soup.cells()[((start + i) % n) as usize]).collect();
                        let canonical = if fnv1a64(&cells) == g { hex_cells(&cells) } else { String::new() };
                        if self.registry.insert(step, g, canonical, len) {
                            self.new_genotypes += 1;
                        }
                    }
                }
                EventKind::Death => {
                    self.deaths += 1;
                    *changed.entry(g).or_default() -= 1;
                }
                _ => {}
            }
        }
        for (g, d) in changed {
            if d == 0 {
                continue;
            }
            let a = (self.abundance(g) as i64 + d).max(0) as u64;
            self.set_abundance(step, g, a);
        }
    }

    /// Takes a metrics frame after `step`. Observatory events (stasis
    /// flags) are appended to `out`.
    pub fn frame(&mut self, step: u64, world: &World, out: &mut Vec<Event>) -> MetricsFrame {
        let (population, free_resource, parasite_count) = match world {
            World::Soup(soup) => {
                let live: Vec<u64> = self.live.keys().copied().collect();
                for g in live {
                    self.registry.touch(step, g);
                }
                (
                    soup.population() as u64,
                    soup.free_cells(),
                    detect_parasites(soup, self.parasite_fraction).len() as u64,
                )
            }
            World::Chem(chem) => {
                let census = chem_census(chem);
                let mut gone: BTreeSet<u64> = self.live.keys().copied().collect();
                for (&g, (geno, n)) in &census {
                    gone.remove(&g);
                    let canonical = String::from_utf8_lossy(&geno.canonical).into_owned();
                    if self.registry.insert(step, g, canonical, geno.length as u64) {
                        self.new_genotypes += 1;
                    }
                    let before = self.abundance(g);
                    if *n > before {
                        self.births += n - before;
                    } else {
                        self.deaths += before - n;
                    }
                    if *n != before {
                        self.set_abundance(step, g, *n);
                    } else {
                        self.registry.touch(step, g);
                    }
                }
                for g in gone {
                    self.deaths += self.abundance(g);
                    self.set_abundance(step, g, 0);
                }
                let population = census.values().map(|(_, n)| n).sum();
                (population, chem.free_food(), 0)
            }
        };
        let dominant = self
            .live
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .and_then(|(&g, _)| self.registry.get(g))
            .map_or(0, |r| r.length);
        let frame = MetricsFrame {
            step,
            population,
            free_resource,
            genotype_richness: self.live.len() as u64,
            shannon_diversity: shannon(self.live.values().copied()),
            dominant_genotype_length: dominant,
            births: std::mem::take(&mut self.births),
            deaths: std::mem::take(&mut self.deaths),
            parasite_count,
            new_genotypes: std::mem::take(&mut self.new_genotypes),
        };
        let v = self.tracker.verdict(step);
        if v.kind != self.verdict {
            self.verdict = v.kind;
            let mut e = Event::new(step, EventKind::StasisFlag).detail(v.kind.name());
            if let Some(g) = v.newest_persistent {
                e = e.genotype(g);
            }
            out.push(e);
        }
        frame
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("observatory state serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
