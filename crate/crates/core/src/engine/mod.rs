//! The simulation core: one world, a step counter and the running hash of
//! every engine event. Observation and file output live elsewhere.

pub mod checkpoint;
pub mod run;

use thiserror::Error;

use crate::chem::{load_rules, Census, ChemError, ChemWorld};
use crate::config::{ConfigError, RunConfig, WorldKind};
use crate::event::{Event, EventKind};
use crate::hash::Fnv1a;
use crate::observatory::{audit_chem, audit_soup, AuditViolation};
use crate::soup::{ancestor_genome, parse_genome, GenomeError, SoupParams, SoupWorld, StepOutcome};
use crate::world::World;

pub use checkpoint::{CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use run::{resume_run, start_run, RunError, RunOptions, RunSummary};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("genome: {0}")]
    Genome(#[from] GenomeError),
    #[error("chemistry setup: {0}")]
    Chem(#[from] ChemError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    config: RunConfig,
    world: World,
    step: u64,
    hash: u64,
    initial_census: Option<Census>,
    extinct: bool,
}

impl Simulation {
    /// Builds and seeds the configured world. Seeding events carry step 0.
    pub fn new(config: RunConfig) -> Result<(Self, Vec<Event>), EngineError> {
        config.validate()?;
        let mut events = Vec::new();
        let (world, initial_census) = match config.world_kind {
            WorldKind::Soup => {
                let genome = if config.genome_path.is_empty() {
                    ancestor_genome()
                } else {
                    let text = std::fs::read_to_string(&config.genome_path)
                        .map_err(|source| ConfigError::Io { path: config.genome_path.clone(), source })?;
                    parse_genome(&text)?
                };
                let mut w = SoupWorld::new(SoupParams::from_config(&config), config.seed);
                w.seed_genome(&genome, &mut events)?;
                (World::Soup(w), None)
            }
            WorldKind::Atoms => {
                let w = ChemWorld::from_config(&config, load_rules(&config)?)?;
                let census = w.census();
                (World::Chem(w), Some(census))
            }
        };
        let mut sim = Simulation { config, world, step: 0, hash: Fnv1a::new().finish(), initial_census, extinct: false };
        sim.record(&events);
        Ok((sim, events))
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Number of the last completed step (0 before the first).
    pub fn step_number(&self) -> u64 {
        self.step
    }

    pub fn event_hash(&self) -> u64 {
        self.hash
    }

    pub fn is_extinct(&self) -> bool {
        self.extinct
    }

    pub fn initial_census(&self) -> Option<&Census> {
        self.initial_census.as_ref()
    }

    pub fn instructions_executed(&self) -> u64 {
        match &self.world {
            World::Soup(w) => w.instructions_executed(),
            World::Chem(_) => 0,
        }
    }

    pub(crate) fn set_target_steps(&mut self, steps: u64) {
        self.config.steps = steps;
    }

    fn record(&mut self, events: &[Event]) {
        let mut h = Fnv1a::from_state(self.hash);
        for e in events {
            e.hash_into(&mut h);
        }
        self.hash = h.finish();
    }

    /// Runs one step; its events are appended to `events` and hashed.
    pub fn step(&mut self, events: &mut Vec<Event>) -> StepOutcome {
        let start = events.len();
        self.step += 1;
        let outcome = match &mut self.world {
            World::Soup(w) => w.step(self.step, events),
            World::Chem(w) => {
                w.step(self.step);
                StepOutcome::Continue
            }
        };
        self.extinct = outcome == StepOutcome::Extinct;
        self.record(&events[start..]);
        outcome
    }

    /// Checks conservation (chem) or cell accounting (soup).
    pub fn audit(&self) -> Result<(), AuditViolation> {
        match &self.world {
            World::Soup(w) => audit_soup(w, self.step),
            World::Chem(w) => audit_chem(w, self.initial_census.as_ref().expect("chem census"), self.step),
        }
    }

    /// Audits and, on a violation, returns the hashed `audit_violation`
    /// event describing it.
    pub fn audit_event(&mut self) -> Option<(AuditViolation, Event)> {
        let v = self.audit().err()?;
        let e = Event::new(self.step, EventKind::AuditViolation)
            .addr(v.expected)
            .value(v.actual)
            .detail(v.what.clone());
        self.record(std::slice::from_ref(&e));
        Some((v, e))
    }

    /// Test-only access for fault injection.
    #[doc(hidden)]
    pub fn world_mut_for_fault_injection(&mut self) -> &mut World {
        &mut self.world
    }
}
