//! Deterministic virtual-world evolution engine.
//!
//! Two media share one runtime: a program soup of self-copying instruction
//! strings ([`soup`]) and a conserved-matter atom chemistry ([`chem`]). The
//! [`observatory`] analyses immutable snapshots of either.

pub mod chem;
pub mod codec;
pub mod config;
pub mod engine;
pub mod event;
pub mod hash;
pub mod observatory;
pub mod rng;
pub mod soup;
pub mod verify;
pub mod world;

pub use config::{ConfigError, RunConfig, WorldKind};
pub use engine::Simulation;
pub use event::{Event, EventKind};
pub use rng::RngStream;
pub use world::World;
