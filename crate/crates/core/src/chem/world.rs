//! Conserved-matter chemistry on a toroidal grid.
//!
//! Atoms carry an immutable type and a small integer state, occupy one cell
//! each and may bond to atoms in their Moore neighbourhood. A step is three
//! uniform phases: reactions, motion, perturbation. No phase creates or
//! destroys atoms or looks at anything but atoms, bonds, rules and its RNG.

use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};
use crate::config::RunConfig;
use crate::rng::RngStream;

use super::rules::{RuleError, RuleTable, TYPE_COUNT};

pub const STREAM_REACT: &str = "chem.react";
pub const STREAM_MOVE: &str = "chem.move";
pub const STREAM_PERTURB: &str = "chem.perturb";
pub const STREAM_SEED: &str = "chem.seed";

pub const TYPE_A: u8 = 0;
pub const TYPE_B: u8 = 1;
pub const TYPE_E: u8 = 4;
pub const TYPE_F: u8 = 5;

/// State of a start cap; the end cap and payload are placed in state 1.
pub const START_STATE: u8 = 8;
pub const END_STATE: u8 = 1;
pub const PAYLOAD_STATE: u8 = 1;

pub const MAX_BONDS: usize = 8;
const EMPTY: u32 = 0;

pub const REPLICATOR_RULES: &str = include_str!("../../assets/replicator.rules");
pub const DECAY_RULES: &str = include_str!("../../assets/decay.rules");

// Moore neighbourhood, then the four "forward" half-offsets used to visit
// each unordered adjacent pair once.
const MOORE: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
const HALF: [(i32, i32); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Debug, Error)]
pub enum ChemError {
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("cell ({x}, {y}) is already occupied")]
    Occupied { x: u32, y: u32 },
    #[error("not enough empty cells: need {need}, have {have}")]
    Crowded { need: u64, have: u64 },
    #[error("seed payload must be a non-empty sequence over {{a,b}}")]
    BadPayload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Atom {
    pub kind: u8,
    pub state: u8,
    /// Barrier atoms never move, react or bond.
    pub fixed: bool,
    pub cell: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bonds {
    len: u8,
    ids: [u32; MAX_BONDS],
}

impl Bonds {
    pub fn as_slice(&self) -> &[u32] {
        &self.ids[..self.len as usize]
    }

    #[inline]
    fn contains(&self, j: u32) -> bool {
        self.as_slice().contains(&j)
    }

    fn push(&mut self, j: u32) {
        assert!((self.len as usize) < MAX_BONDS, "bond capacity exceeded");
        self.ids[self.len as usize] = j;
        self.len += 1;
    }

    fn remove(&mut self, j: u32) {
        let n = self.len as usize;
        if let Some(k) = self.ids[..n].iter().position(|&x| x == j) {
            self.ids.copy_within(k + 1..n, k);
            self.len -= 1;
        }
    }

    fn replace(&mut self, from: u32, to: u32) {
        for x in &mut self.ids[..self.len as usize] {
            if *x == from {
                *x = to;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChemParams {
    pub width: u32,
    pub height: u32,
    pub p_bond_break: f64,
    pub p_state_reset: f64,
    pub motion_enabled: bool,
}

impl ChemParams {
    pub fn from_config(c: &RunConfig) -> Self {
        ChemParams {
            width: c.grid_width,
            height: c.grid_height,
            p_bond_break: c.p_bond_break,
            p_state_reset: c.p_state_reset,
            motion_enabled: c.motion_enabled,
        }
    }
}

pub type Census = [u64; TYPE_COUNT];

#[derive(Clone, Debug)]
pub struct ChemWorld {
    params: ChemParams,
    rules: RuleTable,
    grid: Vec<u32>,
    atoms: Vec<Atom>,
    bonds: Vec<Bonds>,
    step: u64,
    rng_react: RngStream,
    rng_move: RngStream,
    rng_perturb: RngStream,
    // scratch, not part of the state
    pairs: Vec<(u32, u32)>,
    reacted: Vec<bool>,
    order: Vec<u32>,
}

impl PartialEq for ChemWorld {
    fn eq(&self, other: &Self) -> bool {
        self.to_bytes() == other.to_bytes()
    }
}

impl ChemWorld {
    pub fn new(params: ChemParams, rules: RuleTable, seed: u64) -> Self {
        let cells = params.width as usize * params.height as usize;
        ChemWorld {
            params,
            rules,
            grid: vec![EMPTY; cells],
            atoms: Vec::new(),
            bonds: Vec::new(),
            step: 0,
            rng_react: RngStream::new(seed, STREAM_REACT),
            rng_move: RngStream::new(seed, STREAM_MOVE),
            rng_perturb: RngStream::new(seed, STREAM_PERTURB),
            pairs: Vec::new(),
            reacted: Vec::new(),
            order: Vec::new(),
        }
    }

    /// Builds the configured world: barriers, the seed chain at the grid
    /// centre, then scattered food.
    pub fn from_config(c: &RunConfig, rules: RuleTable) -> Result<Self, ChemError> {
        let mut w = ChemWorld::new(ChemParams::from_config(c), rules, c.seed);
        for rect in c.barrier_rects().map_err(|_| ChemError::BadPayload)? {
            for (x, y) in rect.cells() {
                w.place_barrier(x, y)?;
            }
        }
        let payload = parse_payload(&c.seed_payload)?;
        let len = payload.len() as u32 + 2;
        let x0 = (c.grid_width.saturating_sub(len)) / 2;
        let y0 = c.grid_height / 2;
        w.seed_chain(&payload, x0, y0)?;
        let mut rng = RngStream::new(c.seed, STREAM_SEED);
        w.scatter(TYPE_A, c.food_a, &mut rng)?;
        w.scatter(TYPE_B, c.food_b, &mut rng)?;
        w.scatter(TYPE_E, c.food_e, &mut rng)?;
        Ok(w)
    }

    pub fn params(&self) -> &ChemParams {
        &self.params
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn width(&self) -> u32 {
        self.params.width
    }

    pub fn height(&self) -> u32 {
        self.params.height
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds_of(&self, i: u32) -> &[u32] {
        self.bonds[i as usize].as_slice()
    }

    pub fn bonded(&self, i: u32, j: u32) -> bool {
        self.bonds[i as usize].contains(j)
    }

    /// Every bond once, as `(i, j)` with `i < j`.
    pub fn bond_list(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (i, b) in self.bonds.iter().enumerate() {
            for &j in b.as_slice() {
                if (i as u32) < j {
                    out.push((i as u32, j));
                }
            }
        }
        out
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.iter().map(|b| b.len as usize).sum::<usize>() / 2
    }

    pub fn step_number(&self) -> u64 {
        self.step
    }

    pub fn rng_streams(&self) -> [&RngStream; 3] {
        [&self.rng_react, &self.rng_move, &self.rng_perturb]
    }

    pub fn xy(&self, cell: u32) -> (u32, u32) {
        (cell % self.params.width, cell / self.params.width)
    }

    pub fn cell_at(&self, x: u32, y: u32) -> u32 {
        y * self.params.width + x
    }

    pub fn atom_at(&self, x: u32, y: u32) -> Option<u32> {
        match self.grid[self.cell_at(x, y) as usize] {
            EMPTY => None,
            v => Some(v - 1),
        }
    }

    /// Atoms per type.
    pub fn census(&self) -> Census {
        let mut c = [0u64; TYPE_COUNT];
        for a in &self.atoms {
            c[a.kind as usize] += 1;
        }
        c
    }

    /// Free atoms of the food types (unbonded, state 0, not barrier).
    pub fn free_food(&self) -> u64 {
        self.atoms
            .iter()
            .zip(&self.bonds)
            .filter(|(a, b)| !a.fixed && a.state == 0 && b.len == 0)
            .count() as u64
    }

    #[inline(always)]
    fn offset(&self, cell: u32, dx: i32, dy: i32) -> u32 {
        let w = self.params.width as i32;
        let h = self.params.height as i32;
        let x = (cell % self.params.width) as i32;
        let y = (cell / self.params.width) as i32;
        let nx = (x + dx).rem_euclid(w);
        let ny = (y + dy).rem_euclid(h);
        (ny * w + nx) as u32
    }

    /// Toroidal Chebyshev distance <= 1.
    #[inline(always)]
    pub fn adjacent_cells(&self, a: u32, b: u32) -> bool {
        let w = self.params.width;
        let h = self.params.height;
        let (ax, ay) = (a % w, a / w);
        let (bx, by) = (b % w, b / w);
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        dx.min(w - dx) <= 1 && dy.min(h - dy) <= 1
    }

    pub fn place_atom(&mut self, kind: u8, state: u8, x: u32, y: u32) -> Result<u32, ChemError> {
        self.place(Atom { kind, state, fixed: false, cell: self.cell_at(x, y) })
    }

    pub fn place_barrier(&mut self, x: u32, y: u32) -> Result<u32, ChemError> {
        self.place(Atom { kind: TYPE_F, state: 0, fixed: true, cell: self.cell_at(x, y) })
    }

    fn place(&mut self, atom: Atom) -> Result<u32, ChemError> {
        if self.grid[atom.cell as usize] != EMPTY {
            let (x, y) = self.xy(atom.cell);
            return Err(ChemError::Occupied { x, y });
        }
        let i = self.atoms.len() as u32;
        self.atoms.push(atom);
        self.bonds.push(Bonds::default());
        self.grid[atom.cell as usize] = i + 1;
        Ok(i)
    }

    /// Bonds two adjacent, unbonded, non-barrier atoms.
    pub fn bond(&mut self, i: u32, j: u32) {
        assert!(i != j && !self.bonded(i, j));
        assert!(!self.atoms[i as usize].fixed && !self.atoms[j as usize].fixed);
        assert!(self.adjacent_cells(self.atoms[i as usize].cell, self.atoms[j as usize].cell));
        self.bonds[i as usize].push(j);
        self.bonds[j as usize].push(i);
    }

    fn unbond(&mut self, i: u32, j: u32) {
        self.bonds[i as usize].remove(j);
        self.bonds[j as usize].remove(i);
    }

    /// Places a horizontal chain `e(start) payload... e(end)` from `(x, y)`
    /// with consecutive atoms bonded. Returns the atom ids in chain order.
    pub fn seed_chain(&mut self, payload: &[u8], x: u32, y: u32) -> Result<Vec<u32>, ChemError> {
        let w = self.params.width;
        let mut kinds = Vec::with_capacity(payload.len() + 2);
        kinds.push((TYPE_E, START_STATE));
        kinds.extend(payload.iter().map(|&t| (t, PAYLOAD_STATE)));
        kinds.push((TYPE_E, END_STATE));
        if kinds.len() as u32 > w {
            return Err(ChemError::Crowded { need: kinds.len() as u64, have: w as u64 });
        }
        for k in 0..kinds.len() as u32 {
            if self.atom_at((x + k) % w, y).is_some() {
                return Err(ChemError::Occupied { x: (x + k) % w, y });
            }
        }
        let mut ids = Vec::with_capacity(kinds.len());
        for (k, &(t, s)) in kinds.iter().enumerate() {
            ids.push(self.place_atom(t, s, (x + k as u32) % w, y)?);
        }
        for p in ids.windows(2) {
            self.bond(p[0], p[1]);
        }
        Ok(ids)
    }

    /// Scatters `count` free atoms of `kind` in state 0 on uniformly random
    /// empty cells.
    pub fn scatter(&mut self, kind: u8, count: u32, rng: &mut RngStream) -> Result<(), ChemError> {
        let cells = self.grid.len() as u64;
        let have = cells - self.atoms.len() as u64;
        if count as u64 > have {
            return Err(ChemError::Crowded { need: count as u64, have });
        }
        for _ in 0..count {
            loop {
                let c = rng.below(cells) as u32;
                if self.grid[c as usize] == EMPTY {
                    self.place(Atom { kind, state: 0, fixed: false, cell: c })?;
                    break;
                }
            }
        }
        Ok(())
    }

    /// One step: reactions, motion, perturbation.
    pub fn step(&mut self, step: u64) {
        self.step = step;
        self.apply_reactions();
        if self.params.motion_enabled {
            self.move_atoms();
        }
        self.perturb();
    }

    /// Collects every adjacent reactive pair, shuffles them with the
    /// reaction stream and fires the first matching rule for each pair whose
    /// atoms have not yet reacted this step. Returns the number of reactions.
    pub fn apply_reactions(&mut self) -> u32 {
        if self.rules.is_empty() {
            return 0;
        }
        let mut pairs = std::mem::take(&mut self.pairs);
        pairs.clear();
        for (i, a) in self.atoms.iter().enumerate() {
            if a.fixed {
                continue;
            }
            for &(dx, dy) in &HALF {
                let c = self.offset(a.cell, dx, dy);
                let g = self.grid[c as usize];
                if g == EMPTY {
                    continue;
                }
                let j = g - 1;
                let b = &self.atoms[j as usize];
                if b.fixed {
                    continue;
                }
                let bonded = self.bonds[i].contains(j);
                if self.rules.find(a.kind, a.state, b.kind, b.state, bonded).is_some() {
                    pairs.push((i as u32, j));
                }
            }
        }
        self.rng_react.shuffle(&mut pairs);
        self.reacted.clear();
        self.reacted.resize(self.atoms.len(), false);
        let mut fired = 0;
        for &(i, j) in &pairs {
            if self.reacted[i as usize] || self.reacted[j as usize] {
                continue;
            }
            let (a, b) = (self.atoms[i as usize], self.atoms[j as usize]);
            let bonded = self.bonds[i as usize].contains(j);
            let Some(hit) = self.rules.find(a.kind, a.state, b.kind, b.state, bonded) else {
                continue;
            };
            let rule = self.rules.rules()[hit.rule];
            let (l, r) = if hit.swapped { (j, i) } else { (i, j) };
            self.atoms[l as usize].state = rule.after[0];
            self.atoms[r as usize].state = rule.after[1];
            if bonded && !rule.bonded_after {
                self.unbond(i, j);
            } else if !bonded && rule.bonded_after {
                self.bonds[i as usize].push(j);
                self.bonds[j as usize].push(i);
            }
            self.reacted[i as usize] = true;
            self.reacted[j as usize] = true;
            fired += 1;
        }
        self.pairs = pairs;
        fired
    }

    /// Each non-barrier atom, in shuffled order, proposes a random Moore
    /// neighbour cell; the move happens if the cell is empty and every bond
    /// partner stays adjacent.
    pub fn move_atoms(&mut self) -> u32 {
        let mut order = std::mem::take(&mut self.order);
        order.clear();
        order.extend((0..self.atoms.len() as u32).filter(|&i| !self.atoms[i as usize].fixed));
        self.rng_move.shuffle(&mut order);
        let mut moved = 0;
        for &i in &order {
            let (dx, dy) = MOORE[self.rng_move.below(8) as usize];
            let from = self.atoms[i as usize].cell;
            let to = self.offset(from, dx, dy);
            if self.grid[to as usize] != EMPTY {
                continue;
            }
            let ok = self.bonds[i as usize]
                .as_slice()
                .iter()
                .all(|&p| self.adjacent_cells(to, self.atoms[p as usize].cell));
            if ok {
                self.grid[from as usize] = EMPTY;
                self.grid[to as usize] = i + 1;
                self.atoms[i as usize].cell = to;
                moved += 1;
            }
        }
        self.order = order;
        moved
    }

    /// Breaks each bond with `p_bond_break` (bonds visited as `(i, j)`,
    /// `i < j`, in atom then bond-list order) and resets each non-barrier
    /// atom's state to 0 with `p_state_reset` (atom order).
    pub fn perturb(&mut self) -> (u32, u32) {
        let mut broken = 0;
        let pb = self.params.p_bond_break;
        if pb > 0.0 {
            let bonds = self.bond_list();
            let n = bonds.len() as u64;
            let mut k = 0u64;
            loop {
                let skip = self.rng_perturb.geometric_skip(pb);
                if skip >= n - k {
                    break;
                }
                k += skip;
                let (i, j) = bonds[k as usize];
                self.unbond(i, j);
                broken += 1;
                k += 1;
            }
        }
        let mut reset = 0;
        let ps = self.params.p_state_reset;
        if ps > 0.0 {
            let mobile: Vec<u32> = (0..self.atoms.len() as u32).filter(|&i| !self.atoms[i as usize].fixed).collect();
            let n = mobile.len() as u64;
            let mut k = 0u64;
            loop {
                let skip = self.rng_perturb.geometric_skip(ps);
                if skip >= n - k {
                    break;
                }
                k += skip;
                self.atoms[mobile[k as usize] as usize].state = 0;
                reset += 1;
                k += 1;
            }
        }
        (broken, reset)
    }

    /// Test-only fault injection: removes an atom outright, breaking
    /// conservation. The last atom takes over the removed index.
    #[doc(hidden)]
    pub fn fault_inject_delete_atom(&mut self, i: u32) {
        let partners: Vec<u32> = self.bonds_of(i).to_vec();
        for p in partners {
            self.unbond(i, p);
        }
        self.grid[self.atoms[i as usize].cell as usize] = EMPTY;
        let last = self.atoms.len() as u32 - 1;
        if i != last {
            let moved = self.atoms[last as usize];
            self.atoms[i as usize] = moved;
            self.bonds[i as usize] = self.bonds[last as usize];
            self.grid[moved.cell as usize] = i + 1;
            let partners: Vec<u32> = self.bonds[i as usize].as_slice().to_vec();
            for p in partners {
                self.bonds[p as usize].replace(last, i);
            }
        }
        self.atoms.pop();
        self.bonds.pop();
    }

    /// Checks occupancy, grid/atom agreement, bond symmetry and locality,
    /// and barrier inertness. Returns a description of the first problem.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = 0usize;
        for (c, &g) in self.grid.iter().enumerate() {
            if g == EMPTY {
                continue;
            }
            seen += 1;
            let a = self.atoms.get(g as usize - 1).ok_or("grid points past atom table")?;
            if a.cell as usize != c {
                return Err(format!("atom {} recorded at {} but found at {c}", g - 1, a.cell));
            }
        }
        if seen != self.atoms.len() {
            return Err(format!("{} atoms but {seen} occupied cells", self.atoms.len()));
        }
        for (i, b) in self.bonds.iter().enumerate() {
            let s = b.as_slice();
            for (k, &j) in s.iter().enumerate() {
                if j as usize == i {
                    return Err(format!("self-bond on atom {i}"));
                }
                if s[..k].contains(&j) {
                    return Err(format!("duplicate bond {i}-{j}"));
                }
                if !self.bonds[j as usize].contains(i as u32) {
                    return Err(format!("asymmetric bond {i}-{j}"));
                }
                if !self.adjacent_cells(self.atoms[i].cell, self.atoms[j as usize].cell) {
                    return Err(format!("bond {i}-{j} stretched beyond the Moore neighbourhood"));
                }
            }
            if self.atoms[i].fixed && !s.is_empty() {
                return Err(format!("barrier atom {i} is bonded"));
            }
        }
        Ok(())
    }

    // ---- checkpoint section ----

    pub fn encode(&self, w: &mut Writer) {
        w.u32(self.params.width);
        w.u32(self.params.height);
        w.u64(self.step);
        w.u32(self.atoms.len() as u32);
        for (a, b) in self.atoms.iter().zip(&self.bonds) {
            w.u8(a.kind);
            w.u8(a.state);
            w.bool(a.fixed);
            w.u32(a.cell);
            w.u8(b.len);
            for &j in b.as_slice() {
                w.u32(j);
            }
        }
    }

    pub fn encode_rngs(&self, w: &mut Writer) {
        w.u64(self.rng_react.counter());
        w.u64(self.rng_move.counter());
        w.u64(self.rng_perturb.counter());
    }

    pub fn decode(
        params: ChemParams,
        rules: RuleTable,
        seed: u64,
        r: &mut Reader,
        rng: &mut Reader,
    ) -> Result<Self, DecodeError> {
        let (wd, ht) = (r.u32()?, r.u32()?);
        if wd != params.width || ht != params.height {
            return Err(DecodeError(format!(
                "grid {wd}x{ht} does not match config {}x{}",
                params.width, params.height
            )));
        }
        let mut w = ChemWorld::new(params, rules, seed);
        w.step = r.u64()?;
        let n = r.u32()?;
        let cells = w.grid.len() as u32;
        if n > cells {
            return Err(DecodeError("more atoms than cells".into()));
        }
        for _ in 0..n {
            let a = Atom { kind: r.u8()?, state: r.u8()?, fixed: r.bool()?, cell: r.u32()? };
            if a.kind as usize >= TYPE_COUNT || a.cell >= cells || a.state > 9 {
                return Err(DecodeError("atom field out of range".into()));
            }
            let len = r.u8()?;
            if len as usize > MAX_BONDS {
                return Err(DecodeError("too many bonds".into()));
            }
            let mut b = Bonds::default();
            for _ in 0..len {
                let j = r.u32()?;
                if j >= n {
                    return Err(DecodeError("bond partner out of range".into()));
                }
                b.push(j);
            }
            if w.grid[a.cell as usize] != EMPTY {
                return Err(DecodeError("two atoms in one cell".into()));
            }
            w.grid[a.cell as usize] = w.atoms.len() as u32 + 1;
            w.atoms.push(a);
            w.bonds.push(b);
        }
        w.check_invariants().map_err(DecodeError)?;
        w.rng_react = RngStream::at(seed, STREAM_REACT, rng.u64()?);
        w.rng_move = RngStream::at(seed, STREAM_MOVE, rng.u64()?);
        w.rng_perturb = RngStream::at(seed, STREAM_PERTURB, rng.u64()?);
        Ok(w)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        self.encode_rngs(&mut w);
        w.into_bytes()
    }
}

/// `"ab"` -> `[TYPE_A, TYPE_B]`.
pub fn parse_payload(s: &str) -> Result<Vec<u8>, ChemError> {
    if s.is_empty() {
        return Err(ChemError::BadPayload);
    }
    s.chars()
        .map(|c| match c {
            'a' => Ok(TYPE_A),
            'b' => Ok(TYPE_B),
            _ => Err(ChemError::BadPayload),
        })
        .collect()
}

/// Loads the rule table named by the config (the built-in replicator rules
/// when `rules_path` is empty).
pub fn load_rules(c: &RunConfig) -> Result<RuleTable, crate::config::ConfigError> {
    use crate::config::ConfigError;
    let text = if c.rules_path.is_empty() {
        REPLICATOR_RULES.to_owned()
    } else {
        std::fs::read_to_string(&c.rules_path).map_err(|source| ConfigError::Io { path: c.rules_path.clone(), source })?
    };
    RuleTable::parse(&text, c.max_state).map_err(|e| ConfigError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: u32, h: u32) -> ChemParams {
        ChemParams { width: w, height: h, p_bond_break: 0.0, p_state_reset: 0.0, motion_enabled: false }
    }

    fn world(rules: &str) -> ChemWorld {
        ChemWorld::new(params(16, 16), RuleTable::parse(rules, 9).unwrap(), 1)
    }

    #[test]
    fn adjacent_pair_bonds() {
        let mut w = world("a1+b1 -> a2#b2\n");
        let a = w.place_atom(TYPE_A, 1, 3, 3).unwrap();
        let b = w.place_atom(TYPE_B, 1, 4, 4).unwrap();
        assert_eq!(w.apply_reactions(), 1);
        assert_eq!(w.atoms()[a as usize].state, 2);
        assert_eq!(w.atoms()[b as usize].state, 2);
        assert!(w.bonded(a, b));
    }

    #[test]
    fn distant_pair_does_not_react() {
        let mut w = world("a1+b1 -> a2#b2\n");
        w.place_atom(TYPE_A, 1, 3, 3).unwrap();
        w.place_atom(TYPE_B, 1, 5, 3).unwrap();
        assert_eq!(w.apply_reactions(), 0);
        assert_eq!(w.bond_count(), 0);
    }

    #[test]
    fn pairs_wrap_around_the_torus() {
        let mut w = world("a1+b1 -> a2#b2\n");
        w.place_atom(TYPE_A, 1, 15, 0).unwrap();
        w.place_atom(TYPE_B, 1, 0, 15).unwrap();
        assert_eq!(w.apply_reactions(), 1);
    }

    #[test]
    fn barrier_is_inert() {
        let mut w = world("x0+y0 -> x1#y1\n");
        w.place_barrier(5, 5).unwrap();
        w.place_atom(TYPE_A, 0, 6, 5).unwrap();
        assert_eq!(w.apply_reactions(), 0);
    }

    #[test]
    fn forced_bond_break_and_census() {
        let mut p = params(16, 16);
        p.p_bond_break = 1.0;
        p.p_state_reset = 1.0;
        let mut w = ChemWorld::new(p, RuleTable::parse("", 9).unwrap(), 3);
        w.seed_chain(&[TYPE_A, TYPE_B, TYPE_A], 2, 2).unwrap();
        let before = w.census();
        w.perturb();
        assert_eq!(w.bond_count(), 0);
        assert!(w.atoms().iter().all(|a| a.state == 0));
        assert_eq!(w.census(), before);
    }

    #[test]
    fn seeded_chain_shape() {
        let mut w = world("");
        let ids = w.seed_chain(&[TYPE_A, TYPE_B], 1, 1).unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(w.bond_count(), 3);
        let kinds: Vec<u8> = ids.iter().map(|&i| w.atoms()[i as usize].kind).collect();
        assert_eq!(kinds, vec![TYPE_E, TYPE_A, TYPE_B, TYPE_E]);
        assert_eq!(w.atoms()[ids[0] as usize].state, START_STATE);
        assert_eq!(w.atoms()[ids[3] as usize].state, END_STATE);
    }

    #[test]
    fn identity_without_rules_motion_or_noise() {
        let mut w = world("");
        w.seed_chain(&[TYPE_A], 1, 1).unwrap();
        let mut rng = RngStream::new(1, STREAM_SEED);
        w.scatter(TYPE_B, 20, &mut rng).unwrap();
        let before = w.clone();
        w.step(1);
        assert_eq!(w.atoms(), before.atoms());
        assert_eq!(w.bond_list(), before.bond_list());
    }

    #[test]
    fn fault_hook_breaks_census() {
        let mut w = world("");
        w.seed_chain(&[TYPE_A, TYPE_B], 1, 1).unwrap();
        let before = w.census();
        w.fault_inject_delete_atom(1);
        assert_eq!(w.census()[TYPE_A as usize], before[TYPE_A as usize] - 1);
        w.check_invariants().unwrap();
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut c = RunConfig { world_kind: crate::config::WorldKind::Atoms, seed: 5, ..RunConfig::default() };
        c.p_bond_break = 0.01;
        let mut w = ChemWorld::from_config(&c, load_rules(&c).unwrap()).unwrap();
        for s in 1..=50 {
            w.step(s);
        }
        let mut body = Writer::new();
        w.encode(&mut body);
        let mut rngs = Writer::new();
        w.encode_rngs(&mut rngs);
        let (body, rngs) = (body.into_bytes(), rngs.into_bytes());
        let back = ChemWorld::decode(
            w.params().clone(),
            w.rules().clone(),
            5,
            &mut Reader::new(&body),
            &mut Reader::new(&rngs),
        )
        .unwrap();
        assert_eq!(back, w);
    }
}
