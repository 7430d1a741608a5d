use openmedium::chem::rules::TYPE_COUNT;
use openmedium::chem::{ChemParams, ChemWorld, ReactionRule, RuleTable, TypePat, REPLICATOR_RULES};
use proptest::prelude::*;

fn params(w: u32, h: u32, p_break: f64, p_reset: f64, motion: bool) -> ChemParams {
    ChemParams { width: w, height: h, p_bond_break: p_break, p_state_reset: p_reset, motion_enabled: motion }
}

fn type_pat() -> impl Strategy<Value = TypePat> {
    prop_oneof![(0u8..5).prop_map(TypePat::Concrete), (0u8..2).prop_map(TypePat::Var)]
}

fn rule() -> impl Strategy<Value = ReactionRule> {
    (type_pat(), type_pat(), [0u8..10, 0u8..10], any::<bool>(), [0u8..10, 0u8..10], any::<bool>()).prop_map(
        |(t1, t2, before, bonded_before, after, bonded_after)| ReactionRule {
            types: [t1, t2],
            before,
            bonded_before,
            after,
            bonded_after,
        },
    )
}

fn rule_table() -> impl Strategy<Value = RuleTable> {
    prop_oneof![
        Just(RuleTable::parse(REPLICATOR_RULES, 9).unwrap()),
        prop::collection::vec(rule(), 1..12).prop_map(|rules| {
            let text = rules.iter().map(|r| format!("{r}\n")).collect::<String>();
            RuleTable::from_rules(rules, text)
        }),
    ]
}

#[derive(Clone, Debug)]
struct Layout {
    // (x, y, kind, state); kind 5 means barrier
    atoms: Vec<(u32, u32, u8, u8)>,
    bond_tries: Vec<(usize, usize)>,
}

fn layout() -> impl Strategy<Value = Layout> {
    (
        prop::collection::vec((0u32..12, 0u32..12, 0u8..6, 0u8..10), 1..80),
        prop::collection::vec((any::<usize>(), any::<usize>()), 0..60),
    )
        .prop_map(|(atoms, bond_tries)| Layout { atoms, bond_tries })
}

fn build(layout: &Layout, rules: RuleTable, p: ChemParams, seed: u64) -> ChemWorld {
    let mut w = ChemWorld::new(p, rules, seed);
    for &(x, y, kind, state) in &layout.atoms {
        let _ = if kind == 5 { w.place_barrier(x, y) } else { w.place_atom(kind, state, x, y) };
    }
    let n = w.atoms().len();
    for &(a, b) in &layout.bond_tries {
        let (i, j) = ((a % n) as u32, (b % n) as u32);
        let (ai, aj) = (w.atoms()[i as usize], w.atoms()[j as usize]);
        if i != j && !ai.fixed && !aj.fixed && !w.bonded(i, j) && w.adjacent_cells(ai.cell, aj.cell) {
            w.bond(i, j);
        }
    }
    w
}

fn census(w: &ChemWorld) -> [u64; TYPE_COUNT] {
    w.census()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn physics_preserves_invariants(
        layout in layout(),
        rules in rule_table(),
        seed in any::<u64>(),
        motion in any::<bool>(),
    ) {
        let mut w = build(&layout, rules, params(12, 12, 0.02, 0.02, motion), seed);
        prop_assert_eq!(w.check_invariants(), Ok(()));
        let start = census(&w);
        let barriers: Vec<_> = w.atoms().iter().enumerate().filter(|(_, a)| a.fixed).map(|(i, a)| (i, *a)).collect();
        for step in 1..=40 {
            w.step(step);
            prop_assert_eq!(w.check_invariants(), Ok(()));
            prop_assert_eq!(census(&w), start);
            for &(i, a) in &barriers {
                prop_assert_eq!(w.atoms()[i], a);
                prop_assert!(w.bonds_of(i as u32).is_empty());
            }
            for (i, j) in w.bond_list() {
                let (a, b) = (w.atoms()[i as usize], w.atoms()[j as usize]);
                prop_assert!(w.adjacent_cells(a.cell, b.cell), "bond {}-{} stretched", i, j);
            }
        }
    }

    #[test]
    fn same_seed_same_trajectory(layout in layout(), rules in rule_table(), seed in any::<u64>()) {
        let mut a = build(&layout, rules.clone(), params(12, 12, 0.01, 0.01, true), seed);
        let mut b = build(&layout, rules, params(12, 12, 0.01, 0.01, true), seed);
        for step in 1..=20 {
            a.step(step);
            b.step(step);
        }
        prop_assert_eq!(a.to_bytes(), b.to_bytes());
    }
}

#[test]
fn contested_atom_reacts_once_and_both_partners_win_sometimes() {
    let rules = RuleTable::parse("a1+b1 -> a2#b2\n", 9).unwrap();
    let (mut left, mut right) = (0, 0);
    for seed in 0..100 {
        let mut w = ChemWorld::new(params(16, 16, 0.0, 0.0, false), rules.clone(), seed);
        let l = w.place_atom(0, 1, 5, 5).unwrap();
        let b = w.place_atom(1, 1, 6, 5).unwrap();
        let r = w.place_atom(0, 1, 7, 5).unwrap();
        w.step(1);
        assert_eq!(w.bond_count(), 1, "seed {seed}");
        assert_eq!(w.atoms()[b as usize].state, 2);
        if w.bonded(l, b) {
            left += 1;
            assert_eq!(w.atoms()[r as usize].state, 1);
        } else {
            assert!(w.bonded(r, b));
            right += 1;
            assert_eq!(w.atoms()[l as usize].state, 1);
        }
    }
    assert!(left > 0 && right > 0, "left {left}, right {right}");
}

#[test]
fn moves_never_land_on_occupied_cells() {
    // a fully packed 3x3 torus cannot move at all
    let mut w = ChemWorld::new(params(3, 3, 0.0, 0.0, true), RuleTable::parse("", 9).unwrap(), 5);
    for y in 0..3 {
        for x in 0..3 {
            w.place_atom(0, 0, x, y).unwrap();
        }
    }
    let before = w.atoms().to_vec();
    for step in 1..=50 {
        w.step(step);
    }
    assert_eq!(w.atoms(), &before[..]);
}

#[test]
fn barriers_block_motion() {
    let mut w = ChemWorld::new(params(8, 8, 0.0, 0.0, true), RuleTable::parse("", 9).unwrap(), 9);
    // wall off column 0 and column 4 on the torus, atom inside columns 1..4
    for y in 0..8 {
        w.place_barrier(0, y).unwrap();
        w.place_barrier(4, y).unwrap();
    }
    let a = w.place_atom(0, 0, 2, 3).unwrap();
    for step in 1..=500 {
        w.step(step);
        let (x, _) = w.xy(w.atoms()[a as usize].cell);
        assert!((1..4).contains(&x), "atom crossed a barrier at step {step}");
    }
}

#[test]
fn perturbation_off_keeps_isolated_states() {
    let mut w = ChemWorld::new(params(10, 10, 0.0, 0.0, true), RuleTable::parse(REPLICATOR_RULES, 9).unwrap(), 1);
    w.place_atom(2, 7, 1, 1).unwrap();
    w.place_atom(3, 3, 6, 6).unwrap();
    for step in 1..=200 {
        w.step(step);
    }
    assert_eq!(w.atoms()[0].state, 7);
    assert_eq!(w.atoms()[1].state, 3);
}
