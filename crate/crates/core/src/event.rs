//! Engine events and the canonical event log.
//!
//! Events are rendered one JSON object per line with a fixed field order.
//! The checkpointed log hash is FNV-1a over a compact binary encoding of each
//! event (see `docs/checkpoint-format.md`), so hashing does not depend on
//! whether the text log is written at all.

use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hash::Fnv1a;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth,
    Death,
    Reap,
    Error,
    Mutation,
    AuditViolation,
    StasisFlag,
    Extinction,
}

impl EventKind {
    fn code(self) -> u8 {
        match self {
            EventKind::Birth => 0,
            EventKind::Death => 1,
            EventKind::Reap => 2,
            EventKind::Error => 3,
            EventKind::Mutation => 4,
            EventKind::AuditViolation => 5,
            EventKind::StasisFlag => 6,
            EventKind::Extinction => 7,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Reap => "reap",
            EventKind::Error => "error",
            EventKind::Mutation => "mutation",
            EventKind::AuditViolation => "audit_violation",
            EventKind::StasisFlag => "stasis_flag",
            EventKind::Extinction => "extinction",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub step: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "hex_opt"
    )]
    pub genotype: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addr: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<u64>,
    #[serde(default, skip_serializing_if = "str::is_empty")]
    pub detail: Cow<'static, str>,
}

impl Event {
    pub fn new(step: u64, kind: EventKind) -> Self {
        Event {
            step,
            kind,
            org: None,
            parent: None,
            genotype: None,
            addr: None,
            value: None,
            detail: Cow::Borrowed(""),
        }
    }

    pub fn org(mut self, id: u64) -> Self {
        self.org = Some(id);
        self
    }

    pub fn parent(mut self, id: u64) -> Self {
        self.parent = Some(id);
        self
    }

    pub fn genotype(mut self, id: u64) -> Self {
        self.genotype = Some(id);
        self
    }

    pub fn addr(mut self, a: u64) -> Self {
        self.addr = Some(a);
        self
    }

    pub fn value(mut self, v: u64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn detail(mut self, d: impl Into<Cow<'static, str>>) -> Self {
        self.detail = d.into();
        self
    }

    /// One canonical log line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serialises")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    /// Feeds the binary encoding into a running hash.
    pub fn hash_into(&self, h: &mut Fnv1a) {
        h.write(&self.step.to_le_bytes());
        h.write(&[self.kind.code()]);
        let fields = [self.org, self.parent, self.genotype, self.addr, self.value];
        let mut mask = 0u8;
        for (i, f) in fields.iter().enumerate() {
            if f.is_some() {
                mask |= 1 << i;
            }
        }
        h.write(&[mask]);
        for v in fields.iter().flatten() {
            h.write(&v.to_le_bytes());
        }
        h.write(&(self.detail.len() as u32).to_le_bytes());
        h.write(self.detail.as_bytes());
    }
}

mod hex_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_str(&format!("{x:016x}")),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        match s {
            Some(s) => u64::from_str_radix(&s, 16)
                .map(Some)
                .map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}
