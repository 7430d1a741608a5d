//! The two media behind one type.

use crate::chem::ChemWorld;
use crate::config::WorldKind;
use crate::soup::SoupWorld;

#[derive(Clone, Debug, PartialEq)]
pub enum World {
    Soup(SoupWorld),
    Chem(ChemWorld),
}

impl World {
    pub fn kind(&self) -> WorldKind {
        match self {
            World::Soup(_) => WorldKind::Soup,
            World::Chem(_) => WorldKind::Atoms,
        }
    }

    pub fn as_soup(&self) -> Option<&SoupWorld> {
        match self {
            World::Soup(w) => Some(w),
            World::Chem(_) => None,
        }
    }

    pub fn as_chem(&self) -> Option<&ChemWorld> {
        match self {
            World::Chem(w) => Some(w),
            World::Soup(_) => None,
        }
    }
}
