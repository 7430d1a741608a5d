//! Run configuration.
//!
//! The config file is flat `key = value` text (TOML syntax, no tables).
//! Every key is optional; the defaults table lives in `docs/config.md` and in
//! [`RunConfig::default`]. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldKind {
    Soup,
    Atoms,
}

impl fmt::Display for WorldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorldKind::Soup => "soup",
            WorldKind::Atoms => "atoms",
        })
    }
}

/// Inclusive rectangle of barrier cells, from a `rect x0 y0 x1 y1` entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BarrierRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BarrierRect {
    pub fn parse(entry: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = entry.split_whitespace().collect();
        let bad = || ConfigError::Invalid(format!("barrier entry {entry:?}: expected `rect x0 y0 x1 y1`"));
        if parts.len() != 5 || parts[0] != "rect" {
            return Err(bad());
        }
        let n: Vec<u32> = parts[1..]
            .iter()
            .map(|p| p.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if n[0] > n[2] || n[1] > n[3] {
            return Err(ConfigError::Invalid(format!(
                "barrier entry {entry:?}: x0 <= x1 and y0 <= y1 required"
            )));
        }
        Ok(BarrierRect { x0: n[0], y0: n[1], x1: n[2], y1: n[3] })
    }

    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| (x, y)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub world_kind: WorldKind,
    pub seed: u64,
    pub steps: u64,
    pub strict_audit: bool,

    // soup
    pub soup_size: u32,
    pub slice_base: u32,
    pub slice_pow: f64,
    pub fill_threshold: f64,
    pub fill_hysteresis: f64,
    pub p_copy_flip: f64,
    pub p_cosmic: f64,
    pub max_org_size: u32,
    pub search_limit: u32,
    pub error_promotion: bool,
    /// Empty means the built-in `ancestor.soup`.
    pub genome_path: String,

    // chem
    pub grid_width: u32,
    pub grid_height: u32,
    pub max_state: u8,
    /// Empty means the built-in `replicator.rules`.
    pub rules_path: String,
    pub p_bond_break: f64,
    pub p_state_reset: f64,
    pub motion_enabled: bool,
    pub barriers: Vec<String>,
    pub seed_payload: String,
    pub food_a: u32,
    pub food_b: u32,
    pub food_e: u32,

    // observatory
    pub metrics_interval: u64,
    pub stasis_window: u64,
    pub stasis_persistence: u64,
    pub stasis_min_abundance: u64,
    pub parasite_fraction: f64,
    pub parasite_window: u64,

    // output
    pub out_dir: String,
    /// Soup: executed instructions between checkpoints; atoms: steps.
    /// Zero selects the default (100000 instructions / 1000 steps).
    pub checkpoint_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world_kind: WorldKind::Soup,
            seed: 0,
            steps: 1000,
            strict_audit: true,

            soup_size: 60_000,
            slice_base: 16,
            slice_pow: 0.0,
            fill_threshold: 0.8,
            fill_hysteresis: 0.02,
            p_copy_flip: 1.0 / 2000.0,
            p_cosmic: 1e-6,
            max_org_size: 1024,
            search_limit: 1024,
            error_promotion: true,
            genome_path: String::new(),

            grid_width: 64,
            grid_height: 64,
            max_state: 9,
            rules_path: String::new(),
            p_bond_break: 1e-6,
            p_state_reset: 1e-6,
            motion_enabled: true,
            barriers: Vec::new(),
            seed_payload: "ab".to_owned(),
            food_a: 150,
            food_b: 150,
            food_e: 100,

            metrics_interval: 1000,
            stasis_window: 100_000,
            stasis_persistence: 10_000,
            stasis_min_abundance: 10,
            parasite_fraction: 0.5,
            parasite_window: 1000,

            out_dir: "run".to_owned(),
            checkpoint_every: 0,
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} out of range: {p} not in [0, 1]")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical text form, as embedded in checkpoints.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Applies a `key=value` override in the config grammar.
    pub fn with_override(&self, assignment: &str) -> Result<Self, ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("override {assignment:?}: expected key=value")))?;
        let key = key.trim();
        let value = value.trim();
        let mut table: toml::Table =
            toml::from_str(&self.to_text()).map_err(|e| ConfigError::Syntax(e.message().to_owned()))?;
        if !table.contains_key(key) {
            return Err(ConfigError::Syntax(format!("unknown field `{key}`")));
        }
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("key present"),
            // Bare words are taken as strings so `world_kind=atoms` works.
            Err(_) => toml::Value::String(value.to_owned()),
        };
        table.insert(key.to_owned(), parsed);
        let text = toml::to_string(&table).expect("table serialises");
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in [
            ("p_copy_flip", self.p_copy_flip),
            ("p_cosmic", self.p_cosmic),
            ("p_bond_break", self.p_bond_break),
            ("p_state_reset", self.p_state_reset),
            ("parasite_fraction", self.parasite_fraction),
        ] {
            check_prob(name, p)?;
        }
        if !(self.fill_threshold > 0.0 && self.fill_threshold <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "fill_threshold out of range: {} not in (0, 1]",
                self.fill_threshold
            )));
        }
        if !(self.fill_hysteresis > 0.0 && self.fill_hysteresis < self.fill_threshold) {
            return Err(ConfigError::Invalid(format!(
                "fill_hysteresis out of range: need 0 < {} < fill_threshold",
                self.fill_hysteresis
            )));
        }
        if self.max_org_size == 0 {
            return Err(ConfigError::Invalid("max_org_size must be >= 1".into()));
        }
        if (self.soup_size as u64) < 2 * self.max_org_size as u64 {
            return Err(ConfigError::Invalid(format!(
                "soup_size >= 2*max_org_size required ({} < 2*{})",
                self.soup_size, self.max_org_size
            )));
        }
        if self.slice_base == 0 {
            return Err(ConfigError::Invalid("slice_base must be >= 1".into()));
        }
        if !self.slice_pow.is_finite() || self.slice_pow < 0.0 {
            return Err(ConfigError::Invalid("slice_pow must be finite and >= 0".into()));
        }
        if self.search_limit == 0 {
            return Err(ConfigError::Invalid("search_limit must be >= 1".into()));
        }
        if self.grid_width < 8 || self.grid_height < 8 {
            return Err(ConfigError::Invalid(format!(
                "grid dimensions ≥ 8 required (got {}x{})",
                self.grid_width, self.grid_height
            )));
        }
        if self.grid_width > u16::MAX as u32 + 1 || self.grid_height > u16::MAX as u32 + 1 {
            return Err(ConfigError::Invalid("grid dimensions ≤ 65536 required".into()));
        }
        if self.max_state > 9 {
            return Err(ConfigError::Invalid("max_state must be in 0..=9".into()));
        }
        if self.metrics_interval == 0 {
            return Err(ConfigError::Invalid("metrics_interval must be >= 1".into()));
        }
        if self.parasite_window == 0 {
            return Err(ConfigError::Invalid("parasite_window must be >= 1".into()));
        }
        if self.stasis_persistence > self.stasis_window {
            return Err(ConfigError::Invalid(
                "stasis_persistence must not exceed stasis_window".into(),
            ));
        }
        if self.seed_payload.is_empty() || !self.seed_payload.chars().all(|c| c == 'a' || c == 'b') {
            return Err(ConfigError::Invalid(
                "seed_payload must be a non-empty sequence over {a,b}".into(),
            ));
        }
        for b in self.barrier_rects()? {
            if b.x1 >= self.grid_width || b.y1 >= self.grid_height {
                return Err(ConfigError::Invalid(format!(
                    "barrier rect {b:?} lies outside the {}x{} grid",
                    self.grid_width, self.grid_height
                )));
            }
        }
        Ok(())
    }

    pub fn barrier_rects(&self) -> Result<Vec<BarrierRect>, ConfigError> {
        self.barriers.iter().map(|s| BarrierRect::parse(s)).collect()
    }

    pub fn checkpoint_cadence(&self) -> u64 {
        match (self.checkpoint_every, self.world_kind) {
            (0, WorldKind::Soup) => 100_000,
            (0, WorldKind::Atoms) => 1000,
            (n, _) => n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse("world_kind = \"soup\"\nseed = 42\n").unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.soup_size, 60_000);
        assert_eq!(c.slice_base, 16);
        assert_eq!(c.max_org_size, 1024);
    }

    #[test]
    fn fill_threshold_range() {
        let e = RunConfig::parse("world_kind = \"soup\"\nfill_threshold = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("fill_threshold out of range"), "{e}");
    }

    #[test]
    fn grid_too_small() {
        let e = RunConfig::parse("world_kind = \"atoms\"\nseed = 7\ngrid_width = 4\n").unwrap_err();
        assert!(e.to_string().contains("grid dimensions ≥ 8"), "{e}");
    }

    #[test]
    fn unknown_key_named() {
        let e = RunConfig::parse("bogus_key = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus_key"), "{e}");
    }

    #[test]
    fn hysteresis_below_threshold() {
        let e = RunConfig::parse("fill_threshold = 0.5\nfill_hysteresis = 0.6\n").unwrap_err();
        assert!(e.to_string().contains("fill_hysteresis"), "{e}");
    }

    #[test]
    fn soup_must_hold_two_organisms() {
        assert!(RunConfig::parse("soup_size = 100\nmax_org_size = 60\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.p_cosmic = 1.0 / 3.0;
        c.barriers = vec!["rect 0 0 3 3".into()];
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides() {
        let c = RunConfig::default();
        let c = c.with_override("world_kind=atoms").unwrap();
        assert_eq!(c.world_kind, WorldKind::Atoms);
        let c = c.with_override("seed = 9").unwrap();
        assert_eq!(c.seed, 9);
        assert!(c.with_override("nope=1").is_err());
        assert!(c.with_override("p_cosmic=2.0").is_err());
    }

    #[test]
    fn barrier_parse() {
        assert_eq!(
            BarrierRect::parse("rect 1 2 3 4").unwrap(),
            BarrierRect { x0: 1, y0: 2, x1: 3, y1: 4 }
        );
        assert!(BarrierRect::parse("rect 1 2 3").is_err());
        assert!(BarrierRect::parse("rect 3 2 1 4").is_err());
    }
}
