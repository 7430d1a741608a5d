//! Genotype extraction. Ids are FNV-1a 64 over the canonical bytes.

use crate::chem::rules::type_letter;
use crate::chem::world::TYPE_E;
use crate::chem::ChemWorld;
use crate::hash::fnv1a64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    /// A soup organism's body.
    Program,
    /// A simple bonded path with e-caps at both ends.
    Chain,
    /// Any other bonded component.
    NonChain,
    /// A lone atom.
    Singleton,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Genotype {
    pub id: u64,
    pub class: Class,
    /// Soup: opcode bytes. Chain: payload letters, the smaller of both
    /// readings. Non-chain: `{a1,b2,...}` sorted type/degree pairs.
    /// Singleton: the type letter.
    pub canonical: Vec<u8>,
    /// Soup: cells. Chain: payload atoms. Otherwise: atom count.
    pub length: usize,
}

pub fn soup_genotype(cells: &[u8]) -> Genotype {
    Genotype { id: fnv1a64(cells), class: Class::Program, canonical: cells.to_vec(), length: cells.len() }
}

/// Classifies one component (atom ids) of the bond graph.
pub fn chem_genotype(world: &ChemWorld, component: &[u32]) -> Genotype {
    let atoms = world.atoms();
    if component.len() == 1 {
        let l = type_letter(atoms[component[0] as usize].kind) as u8;
        return Genotype { id: fnv1a64(&[l]), class: Class::Singleton, canonical: vec![l], length: 1 };
    }
    if let Some(payload) = chain_payload(world, component) {
        let mut rev = payload.clone();
        rev.reverse();
        let canonical = payload.min(rev);
        return Genotype { id: fnv1a64(&canonical), class: Class::Chain, length: canonical.len(), canonical };
    }
    let mut pairs: Vec<(u8, usize)> = component
        .iter()
        .map(|&i| (type_letter(atoms[i as usize].kind) as u8, world.bonds_of(i).len()))
        .collect();
    pairs.sort_unstable();
    let body: Vec<String> = pairs.iter().map(|&(t, d)| format!("{}{}", t as char, d)).collect();
    let canonical = format!("{{{}}}", body.join(",")).into_bytes();
    Genotype { id: fnv1a64(&canonical), class: Class::NonChain, canonical, length: component.len() }
}

/// Payload letters read from one cap to the other, if the component is a
/// simple path whose two ends are type e.
fn chain_payload(world: &ChemWorld, component: &[u32]) -> Option<Vec<u8>> {
    let mut ends = Vec::with_capacity(2);
    for &i in component {
        match world.bonds_of(i).len() {
            1 => ends.push(i),
            2 => {}
            _ => return None,
        }
    }
    if ends.len() != 2 {
        return None;
    }
    let atoms = world.atoms();
    if ends.iter().any(|&e| atoms[e as usize].kind != TYPE_E) {
        return None;
    }
    let mut seq = Vec::with_capacity(component.len());
    let (mut prev, mut cur) = (u32::MAX, ends[0]);
    loop {
        seq.push(cur);
        match world.bonds_of(cur).iter().copied().find(|&j| j != prev) {
            Some(j) => {
                prev = cur;
                cur = j;
            }
            None => break,
        }
    }
    if seq.len() != component.len() {
        return None;
    }
    Some(seq[1..seq.len() - 1].iter().map(|&i| type_letter(atoms[i as usize].kind) as u8).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::world::{ChemParams, TYPE_A, TYPE_B};
    use crate::chem::RuleTable;
    use crate::observatory::connected_components;

    fn world() -> ChemWorld {
        let p = ChemParams { width: 16, height: 16, p_bond_break: 0.0, p_state_reset: 0.0, motion_enabled: false };
        ChemWorld::new(p, RuleTable::parse("", 9).unwrap(), 1)
    }

    #[test]
    fn chain_reads_lexicographic_minimum() {
        let mut w = world();
        w.seed_chain(&[TYPE_B, TYPE_A, TYPE_B, TYPE_A], 2, 2).unwrap();
        let comps = connected_components(&w);
        assert_eq!(comps.len(), 1);
        let g = chem_genotype(&w, &comps[0]);
        assert_eq!(g.class, Class::Chain);
        assert_eq!(g.canonical, b"abab");
        assert_eq!(g.id, fnv1a64(b"abab"));
        assert_eq!(g.length, 4);
    }

    #[test]
    fn single_atom_is_its_letter() {
        let mut w = world();
        w.place_atom(TYPE_B, 0, 3, 3).unwrap();
        let g = chem_genotype(&w, &[0]);
        assert_eq!(g.class, Class::Singleton);
        assert_eq!(g.canonical, b"b");
    }

    #[test]
    fn branched_component_is_non_chain() {
        let mut w = world();
        let c = w.place_atom(TYPE_E, 1, 5, 5).unwrap();
        for (x, y) in [(4, 5), (6, 5), (5, 6)] {
            let a = w.place_atom(TYPE_A, 1, x, y).unwrap();
            w.bond(c, a);
        }
        let g = chem_genotype(&w, &[0, 1, 2, 3]);
        assert_eq!(g.class, Class::NonChain);
        assert_eq!(g.canonical, b"{a1,a1,a1,e3}");
    }

    #[test]
    fn uncapped_path_is_non_chain() {
        let mut w = world();
        let a = w.place_atom(TYPE_A, 1, 5, 5).unwrap();
        let b = w.place_atom(TYPE_B, 1, 6, 5).unwrap();
        w.bond(a, b);
        assert_eq!(chem_genotype(&w, &[a, b]).class, Class::NonChain);
    }

    #[test]
    fn soup_ids_are_content_hashes() {
        assert_eq!(soup_genotype(&[1, 2, 3]).id, soup_genotype(&[1, 2, 3]).id);
        assert_ne!(soup_genotype(&[1, 2, 3]).id, soup_genotype(&[3, 2, 1]).id);
    }
}
