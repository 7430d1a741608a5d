//! Canned verification scenarios shared by the CLI and the test suites.

use std::fmt;
use std::path::PathBuf;

use crate::chem::ChemWorld;
use crate::config::{RunConfig, WorldKind};
use crate::engine::{EngineError, Simulation};
use crate::event::Event;
use crate::hash::fnv1a64;
use crate::observatory::chem_census;
use crate::soup::ancestor_genome;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Ancestor,
    Replicator,
    Conservation,
    Determinism,
}

impl Scenario {
    pub const ALL: [Scenario; 4] =
        [Scenario::Ancestor, Scenario::Replicator, Scenario::Conservation, Scenario::Determinism];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Ancestor => "ancestor",
            Scenario::Replicator => "replicator",
            Scenario::Conservation => "conservation",
            Scenario::Determinism => "determinism",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub scenario: Scenario,
    pub passed: bool,
    pub evidence: Vec<String>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", if self.passed { "PASS" } else { "FAIL" }, self.scenario.name())?;
        for line in &self.evidence {
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

/// Inputs a scenario may take from the command line.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Genome file for the ancestor scenario (default: the shipped ancestor).
    pub genome: Option<PathBuf>,
    pub seed: u64,
}

pub fn run_scenario(s: Scenario, opts: &VerifyOptions) -> Result<Report, EngineError> {
    match s {
        Scenario::Ancestor => ancestor(opts),
        Scenario::Replicator => replicator(opts.seed),
        Scenario::Conservation => conservation(opts.seed, 100_000),
        Scenario::Determinism => determinism(opts.seed),
    }
}

pub fn ancestor_config(seed: u64) -> RunConfig {
    RunConfig { world_kind: WorldKind::Soup, seed, p_copy_flip: 0.0, p_cosmic: 0.0, ..RunConfig::default() }
}

/// Copy-loop cost of one replication: six instructions per copied cell.
pub fn copy_loop_budget(genome_len: usize) -> u64 {
    6 * genome_len as u64
}

fn ancestor(opts: &VerifyOptions) -> Result<Report, EngineError> {
    let reference = ancestor_genome();
    let mut config = ancestor_config(opts.seed);
    if let Some(path) = &opts.genome {
        config.genome_path = path.display().to_string();
    }
    let (mut sim, _) = Simulation::new(config)?;
    let budget = 10 * copy_loop_budget(reference.len());
    let mut events = Vec::new();
    let population = |sim: &Simulation| sim.world().as_soup().map_or(0, |w| w.population());
    while population(&sim) < 2 && sim.instructions_executed() < budget && !sim.is_extinct() {
        events.clear();
        sim.step(&mut events);
    }
    let soup = sim.world().as_soup().expect("soup world");
    let want = fnv1a64(&reference);
    let identical = soup.organisms().all(|o| o.genotype == want && soup.body_cells(o.body) == reference);
    let passed = soup.population() >= 2 && identical;
    Ok(Report {
        scenario: Scenario::Ancestor,
        passed,
        evidence: vec![
            format!("population {} after {} instructions (budget {budget})", soup.population(), sim.instructions_executed()),
            format!("all genotypes identical to the {}-cell ancestor: {identical}", reference.len()),
        ],
    })
}

pub fn replicator_config(seed: u64) -> RunConfig {
    RunConfig { world_kind: WorldKind::Atoms, seed, ..RunConfig::default() }
}

/// Steps until the seeded chain genotype reaches abundance 2, within
/// `budget` steps; returns the step and the peak abundance.
pub fn chain_doubling(config: RunConfig, budget: u64) -> Result<(Option<u64>, u64), EngineError> {
    let (mut sim, _) = Simulation::new(config)?;
    let genotype = {
        let census = chem_census(sim.world().as_chem().expect("chem world"));
        *census.keys().next().expect("seeded chain")
    };
    let mut peak = 1;
    let mut events = Vec::new();
    for _ in 0..budget {
        sim.step(&mut events);
        let n = chem_census(sim.world().as_chem().expect("chem world")).get(&genotype).map_or(0, |(_, n)| *n);
        peak = peak.max(n);
        if n >= 2 {
            return Ok((Some(sim.step_number()), peak));
        }
    }
    Ok((None, peak))
}

pub const REPLICATOR_BUDGET: u64 = 5000;

fn replicator(seed: u64) -> Result<Report, EngineError> {
    let fed = replicator_config(seed);
    let starved = RunConfig { food_a: 0, food_b: 0, food_e: 0, ..fed.clone() };
    let (doubled, _) = chain_doubling(fed, REPLICATOR_BUDGET)?;
    let (starved_doubled, starved_peak) = chain_doubling(starved, REPLICATOR_BUDGET)?;
    Ok(Report {
        scenario: Scenario::Replicator,
        passed: doubled.is_some() && starved_doubled.is_none(),
        evidence: vec![
            match doubled {
                Some(s) => format!("with food: chain abundance reached 2 at step {s}"),
                None => format!("with food: chain abundance stayed below 2 for {REPLICATOR_BUDGET} steps"),
            },
            format!("without food: peak chain abundance {starved_peak} over {REPLICATOR_BUDGET} steps"),
        ],
    })
}

pub fn conservation_config(seed: u64) -> RunConfig {
    RunConfig {
        world_kind: WorldKind::Atoms,
        seed,
        p_bond_break: 1e-4,
        p_state_reset: 1e-4,
        motion_enabled: true,
        ..RunConfig::default()
    }
}

/// Runs `steps` chem steps auditing the census every `metrics_interval`
/// steps. Returns the number of audit frames and the first violation.
pub fn conservation_run(config: RunConfig, steps: u64) -> Result<(u64, Option<String>), EngineError> {
    let interval = config.metrics_interval;
    let (mut sim, _) = Simulation::new(config)?;
    let mut events = Vec::new();
    let mut frames = 0;
    for _ in 0..steps {
        sim.step(&mut events);
        if (sim.step_number() - 1) % interval == 0 || sim.step_number() == steps {
            frames += 1;
            if let Err(v) = sim.audit() {
                return Ok((frames, Some(v.to_string())));
            }
        }
    }
    Ok((frames, None))
}

fn conservation(seed: u64, steps: u64) -> Result<Report, EngineError> {
    let config = conservation_config(seed);
    let census = {
        let (sim, _) = Simulation::new(config.clone())?;
        sim.initial_census().copied().expect("census")
    };
    let (frames, violation) = conservation_run(config, steps)?;
    let mut evidence = vec![format!("{steps} steps, {frames} audit frames, initial census {census:?}")];
    evidence.push(match &violation {
        None => "census unchanged at every frame".to_owned(),
        Some(v) => v.clone(),
    });
    Ok(Report { scenario: Scenario::Conservation, passed: violation.is_none(), evidence })
}

/// Event log bytes and final checkpoint of an in-memory run.
pub fn replay(config: RunConfig, steps: u64) -> Result<(Vec<u8>, Vec<u8>), EngineError> {
    let (mut sim, seed_events) = Simulation::new(RunConfig { steps, ..config })?;
    let mut log = Vec::new();
    let push = |evs: &[Event], log: &mut Vec<u8>| {
        for e in evs {
            log.extend_from_slice(e.to_line().as_bytes());
            log.push(b'\n');
        }
    };
    push(&seed_events, &mut log);
    let mut events = Vec::new();
    while sim.step_number() < steps && !sim.is_extinct() {
        events.clear();
        sim.step(&mut events);
        push(&events, &mut log);
    }
    Ok((log, sim.to_checkpoint()))
}

/// Runs `a` steps, round-trips through a checkpoint, runs `b` more.
pub fn split_run(config: RunConfig, a: u64, b: u64) -> Result<Vec<u8>, EngineError> {
    let (mut sim, _) = Simulation::new(RunConfig { steps: a + b, ..config })?;
    let mut events = Vec::new();
    for _ in 0..a {
        sim.step(&mut events);
    }
    let mut sim = Simulation::from_checkpoint(&sim.to_checkpoint()).expect("fresh checkpoint decodes");
    for _ in 0..b {
        sim.step(&mut events);
    }
    Ok(sim.to_checkpoint())
}

fn determinism(seed: u64) -> Result<Report, EngineError> {
    let mut evidence = Vec::new();
    let mut passed = true;
    for config in [
        RunConfig { world_kind: WorldKind::Soup, seed, soup_size: 20_000, ..RunConfig::default() },
        RunConfig { world_kind: WorldKind::Atoms, seed, ..RunConfig::default() },
    ] {
        let kind = config.world_kind;
        let (log1, ck1) = replay(config.clone(), 2000)?;
        let (log2, ck2) = replay(config.clone(), 2000)?;
        let same = log1 == log2 && ck1 == ck2;
        evidence.push(format!("{kind}: two runs of 2000 steps identical: {same} ({} log bytes)", log1.len()));
        passed &= same;
        for (a, b) in [(100, 100), (1, 999)] {
            let (_, whole) = replay(config.clone(), a + b)?;
            let split = split_run(config.clone(), a, b)?;
            let same = whole == split;
            evidence.push(format!("{kind}: run({}) equals run({a}) + resume({b}): {same}", a + b));
            passed &= same;
        }
    }
    Ok(Report { scenario: Scenario::Determinism, passed, evidence })
}

/// Abundance of the first genotype seen in a chem world; a small helper for
/// fixtures that track the seeded chain.
pub fn seeded_chain_abundance(world: &ChemWorld, genotype: u64) -> u64 {
    chem_census(world).get(&genotype).map_or(0, |(_, n)| *n)
}
