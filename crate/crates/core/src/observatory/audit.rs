//! Conservation and memory-accounting audits.

use thiserror::Error;

use crate::chem::rules::type_letter;
use crate::chem::{Census, ChemWorld};
use crate::soup::SoupWorld;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("audit violation at step {step}: {what}: expected {expected}, actual {actual}")]
pub struct AuditViolation {
    pub step: u64,
    pub what: String,
    pub expected: u64,
    pub actual: u64,
}

/// Bodies + allocations + free cells must account for the whole soup.
pub fn audit_soup(world: &SoupWorld, step: u64) -> Result<(), AuditViolation> {
    let mut owned = 0u64;
    for o in world.organisms() {
        owned += o.body.len as u64;
        owned += o.child.map_or(0, |c| c.len as u64);
    }
    let free = world.free_cells();
    let n = world.soup_size() as u64;
    if owned + free != n {
        return Err(AuditViolation { step, what: "soup cell accounting".into(), expected: n, actual: owned + free });
    }
    if world.occupied_cells() != owned {
        return Err(AuditViolation {
            step,
            what: "occupied cell counter".into(),
            expected: owned,
            actual: world.occupied_cells(),
        });
    }
    Ok(())
}

/// The per-type census must equal the initial one exactly.
pub fn audit_chem(world: &ChemWorld, initial: &Census, step: u64) -> Result<(), AuditViolation> {
    let now = world.census();
    for (t, (&want, &got)) in initial.iter().zip(now.iter()).enumerate() {
        if want != got {
            return Err(AuditViolation {
                step,
                what: format!("census of type {}", type_letter(t as u8)),
                expected: want,
                actual: got,
            });
        }
    }
    Ok(())
}
