//! The embodied medium: atoms, bonds and local reaction rules.

pub mod rules;
pub mod world;

pub use rules::{parse_rule, ReactionRule, RuleError, RuleHit, RuleTable, TypePat};
pub use world::{
    load_rules, parse_payload, Atom, Census, ChemError, ChemParams, ChemWorld, DECAY_RULES, REPLICATOR_RULES,
};
