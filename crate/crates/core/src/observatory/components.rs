//! Bond-graph components of a chemistry snapshot.

use crate::chem::ChemWorld;

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
    }
}

/// Partitions nodes `0..n` (minus `excluded`) by the edge list. Each
/// component is sorted ascending; components are ordered by their smallest
/// member.
pub fn components_of_graph(n: usize, edges: &[(u32, u32)], excluded: &[bool]) -> Vec<Vec<u32>> {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        if !excluded[a as usize] && !excluded[b as usize] {
            uf.union(a, b);
        }
    }
    let mut slot = vec![u32::MAX; n];
    let mut out: Vec<Vec<u32>> = Vec::new();
    for i in 0..n as u32 {
        if excluded[i as usize] {
            continue;
        }
        let r = uf.find(i) as usize;
        if slot[r] == u32::MAX {
            slot[r] = out.len() as u32;
            out.push(Vec::new());
        }
        out[slot[r] as usize].push(i);
    }
    out
}

/// Components of the bond graph, barrier atoms excluded.
pub fn connected_components(world: &ChemWorld) -> Vec<Vec<u32>> {
    let excluded: Vec<bool> = world.atoms().iter().map(|a| a.fixed).collect();
    components_of_graph(world.atoms().len(), &world.bond_list(), &excluded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_nodes_are_singletons() {
        let c = components_of_graph(3, &[], &[false; 3]);
        assert_eq!(c, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn excluded_nodes_drop_out() {
        let c = components_of_graph(4, &[(0, 1), (1, 2)], &[false, true, false, false]);
        assert_eq!(c, vec![vec![0], vec![2], vec![3]]);
    }
}
