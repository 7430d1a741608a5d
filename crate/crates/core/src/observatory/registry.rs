//! Genotype registry.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const GENOTYPES_HEADER: &str = "genotype_id,canonical,first_seen,last_seen,max_abundance";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenotypeRecord {
    pub id: u64,
    /// Soup: one hex digit per opcode. Chem: the canonical letters.
    /// Empty if not yet captured.
    pub canonical: String,
    pub length: u64,
    pub first_seen: u64,
    pub last_seen: u64,
    pub abundance: u64,
    pub max_abundance: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    records: BTreeMap<u64, GenotypeRecord>,
}

impl Registry {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&GenotypeRecord> {
        self.records.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &GenotypeRecord> {
        self.records.values()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.records.contains_key(&id)
    }

    /// Adds a record on first sighting. Returns true if it was new.
    pub fn insert(&mut self, step: u64, id: u64, canonical: String, length: u64) -> bool {
        if let Some(r) = self.records.get_mut(&id) {
            if r.canonical.is_empty() {
                r.canonical = canonical;
            }
            return false;
        }
        self.records.insert(
            id,
            GenotypeRecord { id, canonical, length, first_seen: step, last_seen: step, abundance: 0, max_abundance: 0 },
        );
        true
    }

    pub fn set_abundance(&mut self, step: u64, id: u64, abundance: u64) {
        if let Some(r) = self.records.get_mut(&id) {
            r.abundance = abundance;
            r.max_abundance = r.max_abundance.max(abundance);
            if abundance > 0 {
                r.last_seen = step;
            }
        }
    }

    pub fn touch(&mut self, step: u64, id: u64) {
        if let Some(r) = self.records.get_mut(&id) {
            r.last_seen = step;
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(GENOTYPES_HEADER);
        out.push('\n');
        for r in self.records.values() {
            out.push_str(&format!(
                "{:016x},{},{},{},{}\n",
                r.id,
                csv_field(&r.canonical),
                r.first_seen,
                r.last_seen,
                r.max_abundance
            ));
        }
        out
    }
}

/// Quotes a CSV field when it contains a separator or quote.
pub fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}
