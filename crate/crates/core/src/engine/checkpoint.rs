//! Binary checkpoints (`.vwld`). Layout (little-endian):
//!
//! ```text
//! "VWLD"                magic
//! u32                   format version (1)
//! u64 len + bytes       config text, out_dir cleared
//! u64                   last completed step
//! u64                   event hash
//! u8                    extinct flag
//! u8                    world kind: 0 soup, 1 atoms
//! u64 len + bytes       world section
//! u64 len + bytes       rng section (stream counters)
//! atoms only: u64 len + bytes rule source, 6 x u64 initial census
//! u64                   FNV-1a 64 of every preceding byte
//! ```
//!
//! Observatory state is not part of a checkpoint; it lives in a JSON
//! sidecar so that checkpoints are identical with or without observation.

use thiserror::Error;

use crate::chem::rules::TYPE_COUNT;
use crate::chem::{ChemParams, ChemWorld, RuleTable};
use crate::codec::{DecodeError, Reader, Writer};
use crate::config::{RunConfig, WorldKind};
use crate::hash::fnv1a64;
use crate::soup::{SoupParams, SoupWorld};
use crate::world::World;

use super::Simulation;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VWLD";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    NotCheckpoint,
    #[error("unsupported version {0} (expected {CHECKPOINT_VERSION})")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Corrupt(#[from] DecodeError),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Corrupt(DecodeError(msg.into()))
}

impl Simulation {
    pub fn to_checkpoint(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        let mut cfg = self.config.clone();
        cfg.out_dir = String::new();
        w.str(&cfg.to_text());
        w.u64(self.step);
        w.u64(self.hash);
        w.bool(self.extinct);
        let mut body = Writer::new();
        let mut rngs = Writer::new();
        match &self.world {
            World::Soup(s) => {
                w.u8(0);
                s.encode(&mut body);
                s.encode_rngs(&mut rngs);
            }
            World::Chem(c) => {
                w.u8(1);
                c.encode(&mut body);
                c.encode_rngs(&mut rngs);
            }
        }
        w.bytes(&body.into_bytes());
        w.bytes(&rngs.into_bytes());
        if let World::Chem(c) = &self.world {
            w.str(c.rules().source());
            for v in self.initial_census.expect("chem census") {
                w.u64(v);
            }
        }
        let mut bytes = w.into_bytes();
        let sum = fnv1a64(&bytes);
        bytes.extend_from_slice(&sum.to_le_bytes());
        bytes
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(CheckpointError::NotCheckpoint);
        }
        let mut r = Reader::new(&bytes[4..]);
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        if bytes.len() < 16 {
            return Err(corrupt("file too short"));
        }
        let (payload, trailer) = bytes.split_at(bytes.len() - 8);
        if fnv1a64(payload).to_le_bytes() != trailer {
            return Err(corrupt("checksum mismatch (truncated or modified file)"));
        }
        let mut r = Reader::new(&payload[8..]);
        let config = RunConfig::parse(r.str()?).map_err(|e| corrupt(format!("embedded config: {e}")))?;
        let step = r.u64()?;
        let hash = r.u64()?;
        let extinct = r.bool()?;
        let kind = r.u8()?;
        let body = r.bytes()?;
        let rngs = r.bytes()?;
        let (world, initial_census) = match (kind, config.world_kind) {
            (0, WorldKind::Soup) => {
                let w = SoupWorld::decode(
                    SoupParams::from_config(&config),
                    config.seed,
                    &mut Reader::new(body),
                    &mut Reader::new(rngs),
                )?;
                (World::Soup(w), None)
            }
            (1, WorldKind::Atoms) => {
                let rules = RuleTable::parse(r.str()?, config.max_state)
                    .map_err(|e| corrupt(format!("embedded rules: {e}")))?;
                let mut census = [0u64; TYPE_COUNT];
                for c in census.iter_mut() {
                    *c = r.u64()?;
                }
                let w = ChemWorld::decode(
                    ChemParams::from_config(&config),
                    rules,
                    config.seed,
                    &mut Reader::new(body),
                    &mut Reader::new(rngs),
                )?;
                (World::Chem(w), Some(census))
            }
            _ => return Err(corrupt(format!("world kind {kind} does not match config"))),
        };
        if !r.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Simulation { config, world, step, hash, initial_census, extinct })
    }

    pub fn load_checkpoint(path: &std::path::Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path)
            .map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
        Self::from_checkpoint(&bytes)
    }
}
