//! Tierra-style program soup.

pub mod gaps;
pub mod isa;
pub mod search;
pub mod world;

pub use isa::{disassemble, parse_genome, GenomeError, Op};
pub use search::{template_search, Direction, Found};
pub use world::{mutate_copy, Cpu, Organism, SoupParams, SoupWorld, Span, StepOutcome};

/// The shipped reference ancestor (`assets/ancestor.soup`).
pub const ANCESTOR_SOURCE: &str = include_str!("../../assets/ancestor.soup");

pub fn ancestor_genome() -> Vec<u8> {
    parse_genome(ANCESTOR_SOURCE).expect("shipped ancestor parses")
}
