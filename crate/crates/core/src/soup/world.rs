//! The program soup: circular memory, organisms with virtual CPUs, a reaper
//! queue and a round-robin slicer.
//!
//! Reproduction happens only when an organism executes `divide`; nothing in
//! this module scores or ranks organisms.

use std::borrow::Cow;

use crate::codec::{DecodeError, Reader, Writer};
use crate::config::RunConfig;
use crate::event::{Event, EventKind};
use crate::hash::fnv1a64;
use crate::rng::RngStream;

use super::gaps::FreeIndex;
use super::isa::{GenomeError, Op};
use super::search::{read_template, template_search, Direction, MAX_TEMPLATE};

pub const STACK_DEPTH: usize = 10;
const NIL: u32 = u32::MAX;

pub const STREAM_COPY: &str = "soup.copy_mutation";
pub const STREAM_COSMIC: &str = "soup.cosmic";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cpu {
    pub ax: u32,
    pub bx: u32,
    pub cx: u32,
    pub stack: [u32; STACK_DEPTH],
    pub sp: u8,
    pub ip: u32,
    pub errors: u32,
}

impl Cpu {
    pub fn fresh(ip: u32) -> Self {
        Cpu { ip, ..Cpu::default() }
    }

    pub fn stack(&self) -> &[u32] {
        &self.stack[..self.sp as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: u32,
    pub len: u32,
}

impl Span {
    #[inline(always)]
    pub fn contains(&self, addr: u32, soup_size: u32) -> bool {
        let off = if addr >= self.start { addr - self.start } else { addr + soup_size - self.start };
        off < self.len
    }

    pub fn end(&self, soup_size: u32) -> u32 {
        ((self.start as u64 + self.len as u64) % soup_size as u64) as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Organism {
    pub id: u64,
    pub body: Span,
    pub child: Option<Span>,
    pub cpu: Cpu,
    pub parent: Option<u64>,
    pub birth_step: u64,
    pub genotype: u64,
    pub executed_own: u64,
    pub executed_foreign: u64,
    reap_prev: u32,
    reap_next: u32,
    ring_prev: u32,
    ring_next: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Extinct,
}

/// Soup parameters copied out of the run config.
#[derive(Clone, Debug, PartialEq)]
pub struct SoupParams {
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
    pub parasite_window: u64,
}

impl SoupParams {
    pub fn from_config(c: &RunConfig) -> Self {
        SoupParams {
            soup_size: c.soup_size,
            slice_base: c.slice_base,
            slice_pow: c.slice_pow,
            fill_threshold: c.fill_threshold,
            fill_hysteresis: c.fill_hysteresis,
            p_copy_flip: c.p_copy_flip,
            p_cosmic: c.p_cosmic,
            max_org_size: c.max_org_size,
            search_limit: c.search_limit,
            error_promotion: c.error_promotion,
            parasite_window: c.parasite_window,
        }
    }
}

// owner[] encoding: 0 free, 2*slot+1 body, 2*slot+2 child allocation.

#[derive(Clone, Debug)]
pub struct SoupWorld {
    params: SoupParams,
    cells: Vec<u8>,
    owner: Vec<u32>,
    free: FreeIndex,
    occupied: u64,
    slots: Vec<Option<Organism>>,
    free_slots: Vec<u32>,
    reap_head: u32,
    reap_tail: u32,
    ring_cur: u32,
    population: u32,
    next_id: u64,
    cycle_left: u64,
    instructions: u64,
    step: u64,
    rng_copy: RngStream,
    rng_cosmic: RngStream,
}

impl PartialEq for SoupWorld {
    fn eq(&self, other: &Self) -> bool {
        self.to_bytes() == other.to_bytes()
    }
}

impl SoupWorld {
    /// An empty soup of blank (nop0) cells.
    pub fn new(params: SoupParams, seed: u64) -> Self {
        let n = params.soup_size as usize;
        SoupWorld {
            params,
            cells: vec![0; n],
            owner: vec![0; n],
            free: FreeIndex::new(n),
            occupied: 0,
            slots: Vec::new(),
            free_slots: Vec::new(),
            reap_head: NIL,
            reap_tail: NIL,
            ring_cur: NIL,
            population: 0,
            next_id: 1,
            cycle_left: 0,
            instructions: 0,
            step: 0,
            rng_copy: RngStream::new(seed, STREAM_COPY),
            rng_cosmic: RngStream::new(seed, STREAM_COSMIC),
        }
    }

    pub fn params(&self) -> &SoupParams {
        &self.params
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn soup_size(&self) -> u32 {
        self.params.soup_size
    }

    pub fn population(&self) -> u32 {
        self.population
    }

    pub fn occupied_cells(&self) -> u64 {
        self.occupied
    }

    /// Cells not owned by any body or allocation, counted directly.
    pub fn free_cells(&self) -> u64 {
        self.owner.iter().filter(|&&o| o == 0).count() as u64
    }

    pub fn instructions_executed(&self) -> u64 {
        self.instructions
    }

    pub fn rng_streams(&self) -> [&RngStream; 2] {
        [&self.rng_copy, &self.rng_cosmic]
    }

    /// Live organisms in slot order.
    pub fn organisms(&self) -> impl Iterator<Item = &Organism> {
        self.slots.iter().flatten()
    }

    pub fn organism(&self, id: u64) -> Option<&Organism> {
        self.organisms().find(|o| o.id == id)
    }

    pub fn body_cells(&self, span: Span) -> Vec<u8> {
        let n = self.params.soup_size;
        (0..span.len).map(|i| self.cells[((span.start + i) % n) as usize]).collect()
    }

    /// Organism ids from reaper head (next to die) to tail.
    pub fn reaper_order(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.population as usize);
        let mut s = self.reap_head;
        while s != NIL {
            let o = self.slot(s);
            out.push(o.id);
            s = o.reap_next;
        }
        out
    }

    /// Organism ids in scheduler order starting from the current one.
    pub fn ring_order(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.population as usize);
        if self.ring_cur == NIL {
            return out;
        }
        let mut s = self.ring_cur;
        loop {
            let o = self.slot(s);
            out.push(o.id);
            s = o.ring_next;
            if s == self.ring_cur {
                break;
            }
        }
        out
    }

    pub fn current_organism(&self) -> Option<u64> {
        (self.ring_cur != NIL).then(|| self.slot(self.ring_cur).id)
    }

    #[inline(always)]
    fn slot(&self, s: u32) -> &Organism {
        self.slots[s as usize].as_ref().expect("live slot")
    }

    #[inline(always)]
    fn slot_mut(&mut self, s: u32) -> &mut Organism {
        self.slots[s as usize].as_mut().expect("live slot")
    }

    fn slot_of(&self, id: u64) -> Option<u32> {
        self.slots
            .iter()
            .position(|o| o.as_ref().is_some_and(|o| o.id == id))
            .map(|s| s as u32)
    }

    fn mark(&mut self, span: Span, tag: u32) {
        let n = self.params.soup_size;
        for i in 0..span.len {
            let a = ((span.start + i) % n) as usize;
            debug_assert!(tag == 0 || self.owner[a] == 0, "overlapping ownership");
            self.owner[a] = tag;
        }
        let (start, len, n) = (span.start as usize, span.len as usize, n as usize);
        let head = len.min(n - start);
        self.free.set_range(start, start + head, tag == 0);
        self.free.set_range(0, len - head, tag == 0);
        if tag == 0 {
            self.occupied -= span.len as u64;
        } else {
            self.occupied += span.len as u64;
        }
    }

    fn span_is_free(&self, span: Span) -> bool {
        let n = self.params.soup_size;
        (0..span.len).all(|i| self.owner[((span.start + i) % n) as usize] == 0)
    }

    /// Creates an organism over `body` and links it into the reaper tail and
    /// the scheduler ring (just before the current organism).
    fn spawn(&mut self, body: Span, parent: Option<u64>, genotype: u64) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        let org = Organism {
            id,
            body,
            child: None,
            cpu: Cpu::fresh(body.start),
            parent,
            birth_step: self.step,
            genotype,
            executed_own: 0,
            executed_foreign: 0,
            reap_prev: NIL,
            reap_next: NIL,
            ring_prev: NIL,
            ring_next: NIL,
        };
        let s = match self.free_slots.pop() {
            Some(s) => {
                self.slots[s as usize] = Some(org);
                s
            }
            None => {
                self.slots.push(Some(org));
                (self.slots.len() - 1) as u32
            }
        };
        self.mark(body, 2 * s + 1);
        // reaper tail
        let tail = self.reap_tail;
        self.slot_mut(s).reap_prev = tail;
        if tail == NIL {
            self.reap_head = s;
        } else {
            self.slot_mut(tail).reap_next = s;
        }
        self.reap_tail = s;
        // ring
        if self.ring_cur == NIL {
            let o = self.slot_mut(s);
            o.ring_prev = s;
            o.ring_next = s;
            self.ring_cur = s;
            self.cycle_left = 1;
        } else {
            let cur = self.ring_cur;
            let prev = self.slot(cur).ring_prev;
            {
                let o = self.slot_mut(s);
                o.ring_prev = prev;
                o.ring_next = cur;
            }
            self.slot_mut(prev).ring_next = s;
            self.slot_mut(cur).ring_prev = s;
        }
        self.population += 1;
        s
    }

    fn kill(&mut self, s: u32, events: &mut Vec<Event>) {
        let org = self.slot(s).clone();
        self.mark(org.body, 0);
        if let Some(c) = org.child {
            self.mark(c, 0);
        }
        // unlink reaper
        if org.reap_prev == NIL {
            self.reap_head = org.reap_next;
        } else {
            self.slot_mut(org.reap_prev).reap_next = org.reap_next;
        }
        if org.reap_next == NIL {
            self.reap_tail = org.reap_prev;
        } else {
            self.slot_mut(org.reap_next).reap_prev = org.reap_prev;
        }
        // unlink ring
        if org.ring_next == s {
            self.ring_cur = NIL;
        } else {
            self.slot_mut(org.ring_prev).ring_next = org.ring_next;
            self.slot_mut(org.ring_next).ring_prev = org.ring_prev;
            if self.ring_cur == s {
                self.ring_cur = org.ring_next;
            }
        }
        self.slots[s as usize] = None;
        self.free_slots.push(s);
        self.population -= 1;
        events.push(
            Event::new(self.step, EventKind::Death)
                .org(org.id)
                .genotype(org.genotype),
        );
    }

    /// Moves the organism one place toward the reaper head.
    fn promote(&mut self, s: u32) {
        let prev = self.slot(s).reap_prev;
        if prev == NIL {
            return;
        }
        let pp = self.slot(prev).reap_prev;
        let next = self.slot(s).reap_next;
        // pp <-> s <-> prev <-> next
        if pp == NIL {
            self.reap_head = s;
        } else {
            self.slot_mut(pp).reap_next = s;
        }
        if next == NIL {
            self.reap_tail = prev;
        } else {
            self.slot_mut(next).reap_prev = prev;
        }
        {
            let o = self.slot_mut(s);
            o.reap_prev = pp;
            o.reap_next = prev;
        }
        let p = self.slot_mut(prev);
        p.reap_prev = s;
        p.reap_next = next;
    }

    fn occupancy_above(&self, fraction: f64) -> bool {
        self.occupied as f64 > fraction * self.params.soup_size as f64
    }

    /// Kills reaper-queue heads while occupancy exceeds the threshold, down to
    /// `threshold - hysteresis`. Returns the number killed.
    pub fn reap(&mut self, events: &mut Vec<Event>) -> u32 {
        if !self.occupancy_above(self.params.fill_threshold) {
            return 0;
        }
        self.reap_down(false, events)
    }

    fn reap_down(&mut self, at_least_one: bool, events: &mut Vec<Event>) -> u32 {
        let floor = self.params.fill_threshold - self.params.fill_hysteresis;
        let mut killed = 0;
        while self.reap_head != NIL && (self.occupancy_above(floor) || (at_least_one && killed == 0)) {
            let h = self.reap_head;
            self.kill(h, events);
            killed += 1;
        }
        if killed > 0 {
            events.push(Event::new(self.step, EventKind::Reap).value(killed as u64));
        }
        killed
    }

    /// Places a genome at address 0 as a new organism. Fails if the genome is
    /// too long or the target cells are owned.
    pub fn seed_genome(&mut self, genome: &[u8], events: &mut Vec<Event>) -> Result<u64, GenomeError> {
        self.seed_genome_at(0, genome, events)
    }

    pub fn seed_genome_at(&mut self, start: u32, genome: &[u8], events: &mut Vec<Event>) -> Result<u64, GenomeError> {
        if genome.is_empty() {
            return Err(GenomeError::Empty);
        }
        if genome.len() > self.params.max_org_size as usize {
            return Err(GenomeError::TooLong { len: genome.len(), max: self.params.max_org_size as usize });
        }
        let n = self.params.soup_size;
        let span = Span { start: start % n, len: genome.len() as u32 };
        assert!(self.span_is_free(span), "seed target overlaps a live organism");
        for (i, &c) in genome.iter().enumerate() {
            self.cells[((span.start + i as u32) % n) as usize] = c & 0x0f;
        }
        let genotype = fnv1a64(genome);
        let s = self.spawn(span, None, genotype);
        let id = self.slot(s).id;
        events.push(
            Event::new(self.step, EventKind::Birth)
                .org(id)
                .genotype(genotype)
                .addr(span.start as u64)
                .value(span.len as u64),
        );
        Ok(id)
    }

    /// Instruction budget for a body of `len` cells.
    pub fn budget(&self, len: u32) -> u64 {
        let b = (self.params.slice_base as f64 * (len as f64).powf(self.params.slice_pow)).round();
        (b as u64).max(1)
    }

    /// One scheduler turn. `step` is the number of the step being executed.
    pub fn step(&mut self, step: u64, events: &mut Vec<Event>) -> StepOutcome {
        self.step = step;
        if self.ring_cur == NIL {
            events.push(Event::new(step, EventKind::Extinction));
            return StepOutcome::Extinct;
        }
        let cur = self.ring_cur;
        let cur_id = self.slot(cur).id;
        let budget = self.budget(self.slot(cur).body.len);
        let mut alive = true;
        for _ in 0..budget {
            self.execute(cur, events);
            if self.slots[cur as usize].as_ref().map(|o| o.id) != Some(cur_id) {
                alive = false;
                break;
            }
        }
        if alive {
            self.ring_cur = self.slot(cur).ring_next;
        }
        self.reap(events);
        self.cycle_left = self.cycle_left.saturating_sub(1);
        if self.cycle_left == 0 {
            self.cosmic_ray(events);
            self.cycle_left = self.population.max(1) as u64;
        }
        if self.population == 0 {
            events.push(Event::new(step, EventKind::Extinction));
            return StepOutcome::Extinct;
        }
        StepOutcome::Continue
    }

    /// Flips one random bit in each cell independently with probability
    /// `p_cosmic`.
    pub fn cosmic_ray(&mut self, events: &mut Vec<Event>) -> u64 {
        let p = self.params.p_cosmic;
        let n = self.cells.len() as u64;
        let mut flips = 0;
        let mut a: u64 = 0;
        loop {
            let skip = self.rng_cosmic.geometric_skip(p);
            if skip >= n - a.min(n) {
                break;
            }
            a += skip;
            if a >= n {
                break;
            }
            let bit = self.rng_cosmic.below(4) as u8;
            self.cells[a as usize] ^= 1 << bit;
            flips += 1;
            events.push(
                Event::new(self.step, EventKind::Mutation)
                    .addr(a)
                    .value(self.cells[a as usize] as u64)
                    .detail("cosmic"),
            );
            a += 1;
        }
        flips
    }

    fn fault(&mut self, s: u32, ip: u32, detail: &'static str, events: &mut Vec<Event>) {
        let o = self.slot_mut(s);
        o.cpu.errors = o.cpu.errors.saturating_add(1);
        let id = o.id;
        events.push(
            Event::new(self.step, EventKind::Error)
                .org(id)
                .addr(ip as u64)
                .detail(Cow::Borrowed(detail)),
        );
        if self.params.error_promotion {
            self.promote(s);
        }
    }

    /// Executes one instruction for the organism in slot `s`.
    pub(crate) fn execute(&mut self, s: u32, events: &mut Vec<Event>) {
        let n = self.params.soup_size;
        let nu = n as usize;
        self.instructions += 1;
        let window = self.params.parasite_window;
        let ip = {
            let o = self.slot_mut(s);
            let ip = o.cpu.ip;
            if o.body.contains(ip, n) {
                o.executed_own += 1;
            } else {
                o.executed_foreign += 1;
            }
            // decaying window: halve both counters once it fills twice over
            if o.executed_own + o.executed_foreign >= 2 * window {
                o.executed_own /= 2;
                o.executed_foreign /= 2;
            }
            ip
        };
        let next = |a: u32, k: u32| -> u32 {
            let v = a as u64 + k as u64;
            (v % n as u64) as u32
        };
        let op = Op::from_cell(self.cells[ip as usize]);
        match op {
            Op::Nop0 | Op::Nop1 => {
                self.slot_mut(s).cpu.ip = next(ip, 1);
            }
            Op::Ifz => {
                let cx = self.slot(s).cpu.cx;
                let new_ip = if cx != 0 {
                    let mut t = [0u8; MAX_TEMPLATE];
                    let following = next(ip, 1);
                    let tl = read_template(&self.cells, following as usize, &mut t) as u32;
                    next(ip, 2 + tl)
                } else {
                    next(ip, 1)
                };
                self.slot_mut(s).cpu.ip = new_ip;
            }
            Op::Jmp | Op::Adrf | Op::Adrb => {
                let mut t = [0u8; MAX_TEMPLATE];
                let tl = read_template(&self.cells, ip as usize, &mut t);
                let after = next(ip, 1 + tl as u32);
                let dir = match op {
                    Op::Jmp => Direction::Nearest,
                    Op::Adrf => Direction::Forward,
                    _ => Direction::Backward,
                };
                let found = if tl == 0 {
                    None
                } else {
                    template_search(&self.cells, ip as usize, dir, &t[..tl], self.params.search_limit as usize)
                };
                match found {
                    None => {
                        self.slot_mut(s).cpu.ip = after;
                        let d = if tl == 0 { "empty template" } else { "template not found" };
                        self.fault(s, ip, d, events);
                    }
                    Some(f) => {
                        let cpu = &mut self.slot_mut(s).cpu;
                        match op {
                            Op::Jmp => cpu.ip = f.one_past(nu) as u32,
                            Op::Adrf => {
                                cpu.ax = f.one_past(nu) as u32;
                                cpu.ip = after;
                            }
                            _ => {
                                cpu.ax = f.start as u32;
                                cpu.ip = after;
                            }
                        }
                    }
                }
            }
            Op::SubAb => {
                let cpu = &mut self.slot_mut(s).cpu;
                cpu.cx = ((cpu.ax as u64 + n as u64 - cpu.bx as u64) % n as u64) as u32;
                cpu.ip = next(ip, 1);
            }
            Op::Xchg => {
                let cpu = &mut self.slot_mut(s).cpu;
                std::mem::swap(&mut cpu.ax, &mut cpu.bx);
                cpu.ip = next(ip, 1);
            }
            Op::MovIi => {
                let (dst, src, allowed) = {
                    let o = self.slot(s);
                    let dst = o.cpu.ax % n;
                    let src = o.cpu.bx % n;
                    let allowed = o.body.contains(dst, n) || o.child.is_some_and(|c| c.contains(dst, n));
                    (dst, src, allowed)
                };
                self.slot_mut(s).cpu.ip = next(ip, 1);
                if allowed {
                    let mut v = self.cells[src as usize];
                    if self.rng_copy.bernoulli(self.params.p_copy_flip) {
                        v = mutate_bit(v, &mut self.rng_copy);
                        let id = self.slot(s).id;
                        events.push(
                            Event::new(self.step, EventKind::Mutation)
                                .org(id)
                                .addr(dst as u64)
                                .value(v as u64)
                                .detail("copy"),
                        );
                    }
                    self.cells[dst as usize] = v;
                } else {
                    self.fault(s, ip, "write violation", events);
                }
            }
            Op::IncA => {
                let cpu = &mut self.slot_mut(s).cpu;
                cpu.ax = next(cpu.ax, 1);
                cpu.ip = next(ip, 1);
            }
            Op::IncB => {
                let cpu = &mut self.slot_mut(s).cpu;
                cpu.bx = next(cpu.bx, 1);
                cpu.ip = next(ip, 1);
            }
            Op::DecC => {
                let cpu = &mut self.slot_mut(s).cpu;
                cpu.cx = next(cpu.cx, n - 1);
                cpu.ip = next(ip, 1);
            }
            Op::PushAx => {
                let cpu = &mut self.slot_mut(s).cpu;
                cpu.ip = next(ip, 1);
                if (cpu.sp as usize) < STACK_DEPTH {
                    cpu.stack[cpu.sp as usize] = cpu.ax;
                    cpu.sp += 1;
                } else {
                    self.fault(s, ip, "stack overflow", events);
                }
            }
            Op::PopAx => {
                let cpu = &mut self.slot_mut(s).cpu;
                cpu.ip = next(ip, 1);
                if cpu.sp > 0 {
                    cpu.sp -= 1;
                    cpu.ax = cpu.stack[cpu.sp as usize];
                } else {
                    self.fault(s, ip, "stack underflow", events);
                }
            }
            Op::Mal => {
                self.slot_mut(s).cpu.ip = next(ip, 1);
                self.malloc_child(s, ip, events);
            }
            Op::Divide => {
                self.slot_mut(s).cpu.ip = next(ip, 1);
                self.divide(s, ip, events);
            }
        }
    }

    /// First free gap of `size` cells scanning forward (with wrap) from
    /// `from`. Skips over owned blocks using the ownership map.
    pub fn find_gap(&self, from: u32, size: u32) -> Option<u32> {
        let n = self.params.soup_size as usize;
        let (from, size) = (from as usize % n, size as usize);
        if size == 0 || size > n {
            return None;
        }
        if let Some(s) = self.free.first_window(from, size as u32) {
            return Some(s as u32);
        }
        // a window wrapping past the end, then one before `from`
        let tail = (from..n).rev().take(size).take_while(|&a| self.owner[a] == 0).count();
        if tail > 0 && tail < size {
            let rest = size - tail;
            if rest <= from && self.owner[..rest].iter().all(|&o| o == 0) {
                return Some((n - tail) as u32);
            }
        }
        match self.free.first_window(0, size as u32) {
            Some(s) if s + size <= from => Some(s as u32),
            _ => None,
        }
    }

    fn malloc_child(&mut self, s: u32, ip: u32, events: &mut Vec<Event>) {
        let (size, has_child, body, id) = {
            let o = self.slot(s);
            (o.cpu.cx, o.child.is_some(), o.body, o.id)
        };
        if has_child {
            self.fault(s, ip, "allocation exists", events);
            return;
        }
        if size == 0 || size > self.params.max_org_size {
            self.fault(s, ip, "bad allocation size", events);
            return;
        }
        let from = body.end(self.params.soup_size);
        let gap = match self.find_gap(from, size) {
            Some(g) => Some(g),
            None => {
                self.reap_down(true, events);
                if self.slots[s as usize].as_ref().map(|o| o.id) != Some(id) {
                    // the allocating organism was itself reaped
                    return;
                }
                self.find_gap(from, size)
            }
        };
        match gap {
            Some(start) => {
                let span = Span { start, len: size };
                self.mark(span, 2 * s + 2);
                let o = self.slot_mut(s);
                o.child = Some(span);
                o.cpu.ax = start;
            }
            None => self.fault(s, ip, "no space", events),
        }
    }

    fn divide(&mut self, s: u32, ip: u32, events: &mut Vec<Event>) {
        let Some(span) = self.slot(s).child else {
            self.fault(s, ip, "no allocation", events);
            return;
        };
        let parent_id = self.slot(s).id;
        self.mark(span, 0);
        self.slot_mut(s).child = None;
        let genotype = fnv1a64(&self.body_cells(span));
        let c = self.spawn(span, Some(parent_id), genotype);
        let child_id = self.slot(c).id;
        events.push(
            Event::new(self.step, EventKind::Birth)
                .org(child_id)
                .parent(parent_id)
                .genotype(genotype)
                .addr(span.start as u64)
                .value(span.len as u64),
        );
    }

    /// Test and fixture access: run `count` instructions for one organism.
    pub fn execute_organism(&mut self, id: u64, count: u64, events: &mut Vec<Event>) {
        let s = self.slot_of(id).expect("organism exists");
        for _ in 0..count {
            if self.slots[s as usize].as_ref().map(|o| o.id) != Some(id) {
                break;
            }
            self.execute(s, events);
        }
    }

    /// Fixture access to a CPU.
    pub fn cpu_mut(&mut self, id: u64) -> Option<&mut Cpu> {
        let s = self.slot_of(id)?;
        Some(&mut self.slot_mut(s).cpu)
    }

    /// Fixture access: overwrite soup cells directly (opcodes masked to 4 bits).
    pub fn poke(&mut self, addr: u32, cells: &[u8]) {
        let n = self.params.soup_size;
        for (i, &c) in cells.iter().enumerate() {
            self.cells[((addr + i as u32) % n) as usize] = c & 0x0f;
        }
    }

    // ---- checkpoint section ----

    pub fn encode(&self, w: &mut Writer) {
        w.u32(self.params.soup_size);
        w.raw(&self.cells);
        w.u64(self.occupied);
        w.u64(self.next_id);
        w.u64(self.cycle_left);
        w.u64(self.instructions);
        w.u64(self.step);
        w.u32(self.reap_head);
        w.u32(self.reap_tail);
        w.u32(self.ring_cur);
        w.u32(self.population);
        w.u32(self.free_slots.len() as u32);
        for &f in &self.free_slots {
            w.u32(f);
        }
        w.u32(self.slots.len() as u32);
        for slot in &self.slots {
            match slot {
                None => w.u8(0),
                Some(o) => {
                    w.u8(1);
                    w.u64(o.id);
                    w.u32(o.body.start);
                    w.u32(o.body.len);
                    match o.child {
                        None => w.u8(0),
                        Some(c) => {
                            w.u8(1);
                            w.u32(c.start);
                            w.u32(c.len);
                        }
                    }
                    w.u32(o.cpu.ax);
                    w.u32(o.cpu.bx);
                    w.u32(o.cpu.cx);
                    for v in o.cpu.stack {
                        w.u32(v);
                    }
                    w.u8(o.cpu.sp);
                    w.u32(o.cpu.ip);
                    w.u32(o.cpu.errors);
                    w.u64(o.parent.map_or(0, |p| p));
                    w.u64(o.birth_step);
                    w.u64(o.genotype);
                    w.u64(o.executed_own);
                    w.u64(o.executed_foreign);
                    w.u32(o.reap_prev);
                    w.u32(o.reap_next);
                    w.u32(o.ring_prev);
                    w.u32(o.ring_next);
                }
            }
        }
    }

    pub fn encode_rngs(&self, w: &mut Writer) {
        w.u64(self.rng_copy.counter());
        w.u64(self.rng_cosmic.counter());
    }

    pub fn decode(params: SoupParams, seed: u64, r: &mut Reader, rng: &mut Reader) -> Result<Self, DecodeError> {
        let size = r.u32()?;
        if size != params.soup_size {
            return Err(DecodeError(format!("soup size {size} does not match config {}", params.soup_size)));
        }
        let cells = r.raw(size as usize)?.to_vec();
        if cells.iter().any(|&c| c > 15) {
            return Err(DecodeError("cell opcode out of range".into()));
        }
        let mut w = SoupWorld::new(params, seed);
        w.cells = cells;
        w.occupied = r.u64()?;
        w.next_id = r.u64()?;
        w.cycle_left = r.u64()?;
        w.instructions = r.u64()?;
        w.step = r.u64()?;
        w.reap_head = r.u32()?;
        w.reap_tail = r.u32()?;
        w.ring_cur = r.u32()?;
        w.population = r.u32()?;
        let nf = r.u32()? as usize;
        w.free_slots = (0..nf).map(|_| r.u32()).collect::<Result<_, _>>()?;
        let ns = r.u32()? as usize;
        let bad = |what: &str| DecodeError(format!("inconsistent organism table: {what}"));
        let n = size;
        for _ in 0..ns {
            if r.u8()? == 0 {
                w.slots.push(None);
                continue;
            }
            let id = r.u64()?;
            let body = Span { start: r.u32()?, len: r.u32()? };
            let child = match r.u8()? {
                0 => None,
                _ => Some(Span { start: r.u32()?, len: r.u32()? }),
            };
            let mut cpu = Cpu { ax: r.u32()?, bx: r.u32()?, cx: r.u32()?, ..Cpu::default() };
            for v in cpu.stack.iter_mut() {
                *v = r.u32()?;
            }
            cpu.sp = r.u8()?;
            cpu.ip = r.u32()?;
            cpu.errors = r.u32()?;
            if cpu.sp as usize > STACK_DEPTH || cpu.ip >= n || body.start >= n || body.len == 0 {
                return Err(bad("cpu or body out of range"));
            }
            let parent = match r.u64()? {
                0 => None,
                p => Some(p),
            };
            w.slots.push(Some(Organism {
                id,
                body,
                child,
                cpu,
                parent,
                birth_step: r.u64()?,
                genotype: r.u64()?,
                executed_own: r.u64()?,
                executed_foreign: r.u64()?,
                reap_prev: r.u32()?,
                reap_next: r.u32()?,
                ring_prev: r.u32()?,
                ring_next: r.u32()?,
            }));
        }
        // rebuild ownership map
        let mut occupied = 0u64;
        for s in 0..w.slots.len() {
            let Some(o) = w.slots[s].clone() else { continue };
            for (span, tag) in std::iter::once((o.body, 2 * s as u32 + 1)).chain(o.child.map(|c| (c, 2 * s as u32 + 2))) {
                for i in 0..span.len {
                    let a = ((span.start as u64 + i as u64) % n as u64) as usize;
                    if w.owner[a] != 0 {
                        return Err(bad("overlapping spans"));
                    }
                    w.owner[a] = tag;
                }
                occupied += span.len as u64;
            }
        }
        w.free = FreeIndex::from_fn(n as usize, |a| w.owner[a] == 0);
        if occupied != w.occupied {
            return Err(bad("occupancy mismatch"));
        }
        let seed_ = seed;
        w.rng_copy = RngStream::at(seed_, STREAM_COPY, rng.u64()?);
        w.rng_cosmic = RngStream::at(seed_, STREAM_COSMIC, rng.u64()?);
        Ok(w)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        self.encode_rngs(&mut w);
        w.into_bytes()
    }
}

/// Flips one uniformly chosen bit of a 4-bit opcode.
pub fn mutate_bit(v: u8, rng: &mut RngStream) -> u8 {
    (v ^ (1 << rng.below(4))) & 0x0f
}

/// Copy-mutation channel: with probability `p` flips one bit.
pub fn mutate_copy(v: u8, p: f64, rng: &mut RngStream) -> u8 {
    if rng.bernoulli(p) {
        mutate_bit(v, rng)
    } else {
        v
    }
}
