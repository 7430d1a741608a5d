mod common;

use openmedium::event::EventKind;
use openmedium::soup::search::MAX_TEMPLATE;
use openmedium::soup::{mutate_copy, template_search, Direction, Op, SoupParams, SoupWorld, Span};
use openmedium::RngStream;
use proptest::prelude::*;

fn params(n: u32) -> SoupParams {
    SoupParams {
        soup_size: n,
        slice_base: 16,
        slice_pow: 0.0,
        fill_threshold: 0.8,
        fill_hysteresis: 0.05,
        p_copy_flip: 0.0,
        p_cosmic: 0.0,
        max_org_size: n,
        search_limit: n,
        error_promotion: false,
        parasite_window: 1000,
    }
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Forward), Just(Direction::Backward), Just(Direction::Nearest)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn template_search_matches_oracle(
        soup in prop::collection::vec(0u8..4, 2..=64),
        from_seed in any::<usize>(),
        template in prop::collection::vec(0u8..2, 1..=MAX_TEMPLATE),
        dir in direction(),
        limit in 1usize..80,
    ) {
        let from = from_seed % soup.len();
        let got = template_search(&soup, from, dir, &template, limit)
            .map(|f| (f.start, f.forward, f.distance));
        prop_assert_eq!(got, common::naive_search(&soup, from, dir, &template, limit));
    }
}

/// Lays organisms into a fresh soup at the given (offset, len) pairs,
/// skipping any that would overlap.
fn populated(n: u32, blocks: &[(u32, u32)]) -> SoupWorld {
    let mut w = SoupWorld::new(params(n), 1);
    let mut ev = Vec::new();
    let mut taken = vec![false; n as usize];
    for &(start, len) in blocks {
        if len >= n {
            continue;
        }
        let start = start % n;
        let cells: Vec<usize> = (0..len).map(|i| ((start + i) % n) as usize).collect();
        if cells.iter().any(|&c| taken[c]) {
            continue;
        }
        for &c in &cells {
            taken[c] = true;
        }
        w.seed_genome_at(start, &vec![Op::Nop0 as u8; len as usize], &mut ev).unwrap();
    }
    w
}

fn owned_cells(w: &SoupWorld) -> Vec<bool> {
    let n = w.soup_size();
    let mut owned = vec![false; n as usize];
    for o in w.organisms() {
        for span in std::iter::once(o.body).chain(o.child) {
            for i in 0..span.len {
                owned[((span.start + i) % n) as usize] = true;
            }
        }
    }
    owned
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn find_gap_matches_enumeration(
        n in 16u32..200,
        blocks in prop::collection::vec((any::<u32>(), 1u32..20), 0..12),
        from_seed in any::<u32>(),
        size in 1u32..40,
    ) {
        let w = populated(n, &blocks);
        let owned = owned_cells(&w);
        let from = from_seed % n;
        // first start at or after `from`, without wrapping back past it
        let expect = (0..n)
            .filter(|k| k + size <= n)
            .map(|k| (from + k) % n)
            .find(|&s| (0..size).all(|i| !owned[((s + i) % n) as usize]));
        prop_assert_eq!(w.find_gap(from, size), expect);
    }

    #[test]
    fn writes_outside_own_cells_are_refused(
        target in 0u32..256,
        src in 0u32..256,
        value in 0u8..16,
        org_at in 0u32..256,
    ) {
        let n = 256;
        let mut w = SoupWorld::new(params(n), 3);
        let mut ev = Vec::new();
        let id = w.seed_genome_at(org_at, &[Op::MovIi as u8, Op::Nop0 as u8, Op::Nop0 as u8], &mut ev).unwrap();
        let body = Span { start: org_at, len: 3 };
        if !body.contains(src, n) {
            w.poke(src, &[value]);
        }
        {
            let c = w.cpu_mut(id).unwrap();
            c.ax = target;
            c.bx = src;
        }
        let before = w.cells().to_vec();
        ev.clear();
        w.execute_organism(id, 1, &mut ev);
        let inside = w.organism(id).unwrap().body.contains(target, n);
        if inside {
            let mut expect = before.clone();
            expect[target as usize] = before[src as usize];
            prop_assert_eq!(w.cells(), &expect[..]);
            prop_assert_eq!(w.organism(id).unwrap().cpu.errors, 0);
        } else {
            prop_assert_eq!(w.cells(), &before[..]);
            prop_assert!(ev.iter().any(|e| e.kind == EventKind::Error && e.detail == "write violation"));
            prop_assert_eq!(w.organism(id).unwrap().cpu.errors, 1);
        }
    }
}

#[test]
fn copy_mutation_rate_within_three_sigma() {
    let trials = 1_000_000u64;
    let p = 1e-3;
    let mut rng = RngStream::new(42, "soup.copy_mutation");
    let mut flips = 0u64;
    for i in 0..trials {
        let v = (i % 16) as u8;
        let m = mutate_copy(v, p, &mut rng);
        if m != v {
            assert_eq!((m ^ v).count_ones(), 1, "a mutation flips exactly one bit");
            flips += 1;
        }
    }
    assert!(common::within_three_sigma(flips, trials, p), "{flips} flips in {trials} trials");
}

#[test]
fn zero_mutation_rate_copies_exactly() {
    let mut rng = RngStream::new(7, "soup.copy_mutation");
    assert!((0..100_000u32).all(|i| mutate_copy((i % 16) as u8, 0.0, &mut rng) == (i % 16) as u8));
}
