//! Reaction rule grammar.
//!
//! One rule per line, e.g. `a1+b1 -> a2#b2`. `+` means unbonded, `#` bonded.
//! Types `a`..`f` are concrete; `x` and `y` are wildcards (the same letter
//! binds the same type within a rule, different letters may coincide).
//! States are single digits. `;` starts a comment.

use std::fmt;

use thiserror::Error;

pub const TYPE_LETTERS: [char; 6] = ['a', 'b', 'c', 'd', 'e', 'f'];
pub const TYPE_COUNT: usize = 6;
pub const STATE_COUNT: usize = 10;

pub fn type_letter(t: u8) -> char {
    TYPE_LETTERS[t as usize]
}

pub fn type_index(c: char) -> Option<u8> {
    TYPE_LETTERS.iter().position(|&l| l == c).map(|i| i as u8)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypePat {
    Concrete(u8),
    /// 0 for `x`, 1 for `y`.
    Var(u8),
}

impl fmt::Display for TypePat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypePat::Concrete(t) => write!(f, "{}", type_letter(*t)),
            TypePat::Var(0) => f.write_str("x"),
            TypePat::Var(_) => f.write_str("y"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReactionRule {
    pub types: [TypePat; 2],
    pub before: [u8; 2],
    pub bonded_before: bool,
    pub after: [u8; 2],
    pub bonded_after: bool,
}

impl fmt::Display for ReactionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = |b: bool| if b { '#' } else { '+' };
        write!(
            f,
            "{}{}{}{}{} -> {}{}{}{}{}",
            self.types[0],
            self.before[0],
            sep(self.bonded_before),
            self.types[1],
            self.before[1],
            self.types[0],
            self.after[0],
            sep(self.bonded_after),
            self.types[1],
            self.after[1]
        )
    }
}

impl ReactionRule {
    /// Matches `(t1, s1)` against the left pattern and `(t2, s2)` against the
    /// right one.
    pub fn matches(&self, t1: u8, s1: u8, t2: u8, s2: u8, bonded: bool) -> bool {
        if bonded != self.bonded_before || s1 != self.before[0] || s2 != self.before[1] {
            return false;
        }
        let mut binding = [None::<u8>; 2];
        for (pat, t) in self.types.iter().zip([t1, t2]) {
            match *pat {
                TypePat::Concrete(c) => {
                    if c != t {
                        return false;
                    }
                }
                TypePat::Var(v) => match binding[v as usize] {
                    Some(b) if b != t => return false,
                    _ => binding[v as usize] = Some(t),
                },
            }
        }
        true
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("rules line {line}: {cause}")]
pub struct RuleError {
    pub line: usize,
    pub cause: String,
}

#[derive(Clone, Copy)]
struct Side {
    types: [TypePat; 2],
    states: [u8; 2],
    bonded: bool,
}

fn parse_side(text: &str, max_state: u8) -> Result<Side, String> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let sep_pos = chars
        .iter()
        .position(|&c| c == '+' || c == '#')
        .ok_or_else(|| format!("`{text}`: expected two atoms joined by `+` or `#`"))?;
    let atom = |part: &[char]| -> Result<(TypePat, u8), String> {
        if part.len() != 2 {
            let s: String = part.iter().collect();
            return Err(format!("atom count changed or malformed atom `{s}`"));
        }
        let ty = match part[0] {
            'x' => TypePat::Var(0),
            'y' => TypePat::Var(1),
            c => TypePat::Concrete(type_index(c).ok_or_else(|| format!("unknown atom type `{c}`"))?),
        };
        let st = part[1]
            .to_digit(10)
            .ok_or_else(|| format!("state `{}` is not a digit", part[1]))? as u8;
        if st > max_state {
            return Err(format!("state {st} exceeds max_state {max_state}"));
        }
        Ok((ty, st))
    };
    let rest = &chars[sep_pos + 1..];
    if rest.iter().any(|&c| c == '+' || c == '#') {
        return Err("atom count changed: more than two atoms".into());
    }
    let (t1, s1) = atom(&chars[..sep_pos])?;
    let (t2, s2) = atom(rest)?;
    Ok(Side { types: [t1, t2], states: [s1, s2], bonded: chars[sep_pos] == '#' })
}

pub fn parse_rule(text: &str, max_state: u8) -> Result<ReactionRule, String> {
    let (lhs, rhs) = text.split_once("->").ok_or_else(|| "missing `->`".to_string())?;
    let l = parse_side(lhs, max_state)?;
    let r = parse_side(rhs, max_state)?;
    if l.types != r.types {
        return Err("type not conserved".into());
    }
    Ok(ReactionRule {
        types: l.types,
        before: l.states,
        bonded_before: l.bonded,
        after: r.states,
        bonded_after: r.bonded,
    })
}

/// An ordered rule table plus a precomputed first-match lookup.
#[derive(Clone, Debug)]
pub struct RuleTable {
    rules: Vec<ReactionRule>,
    source: String,
    // index: ((t1*10+s1)*60 + t2*10+s2)*2 + bonded -> 0 none, else
    // (rule_index + 1) << 1 | swapped
    lookup: Vec<u32>,
}

impl PartialEq for RuleTable {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

#[inline(always)]
fn key(t1: u8, s1: u8, t2: u8, s2: u8, bonded: bool) -> usize {
    let a = t1 as usize * STATE_COUNT + s1 as usize;
    let b = t2 as usize * STATE_COUNT + s2 as usize;
    (a * TYPE_COUNT * STATE_COUNT + b) * 2 + bonded as usize
}

/// Rule application for an ordered pair: which rule and whether the pair
/// must be swapped to line up with the rule's left/right atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleHit {
    pub rule: usize,
    pub swapped: bool,
}

impl RuleTable {
    pub fn parse(text: &str, max_state: u8) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            rules.push(parse_rule(line, max_state).map_err(|cause| RuleError { line: i + 1, cause })?);
        }
        Ok(Self::from_rules(rules, text.to_owned()))
    }

    pub fn from_rules(rules: Vec<ReactionRule>, source: String) -> Self {
        let n = TYPE_COUNT * STATE_COUNT;
        let mut lookup = vec![0u32; n * n * 2];
        for t1 in 0..TYPE_COUNT as u8 {
            for s1 in 0..STATE_COUNT as u8 {
                for t2 in 0..TYPE_COUNT as u8 {
                    for s2 in 0..STATE_COUNT as u8 {
                        for bonded in [false, true] {
                            let hit = rules.iter().enumerate().find_map(|(i, r)| {
                                if r.matches(t1, s1, t2, s2, bonded) {
                                    Some(((i as u32 + 1) << 1) | 0)
                                } else if r.matches(t2, s2, t1, s1, bonded) {
                                    Some(((i as u32 + 1) << 1) | 1)
                                } else {
                                    None
                                }
                            });
                            lookup[key(t1, s1, t2, s2, bonded)] = hit.unwrap_or(0);
                        }
                    }
                }
            }
        }
        RuleTable { rules, source, lookup }
    }

    pub fn rules(&self) -> &[ReactionRule] {
        &self.rules
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// First rule (file order) matching the pair in either orientation,
    /// trying `(first, second)` before `(second, first)` for each rule.
    #[inline(always)]
    pub fn find(&self, t1: u8, s1: u8, t2: u8, s2: u8, bonded: bool) -> Option<RuleHit> {
        let v = self.lookup[key(t1, s1, t2, s2, bonded)];
        (v != 0).then(|| RuleHit { rule: (v >> 1) as usize - 1, swapped: v & 1 == 1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonding_rule() {
        let r = parse_rule("a1+b1 -> a2#b2", 9).unwrap();
        assert_eq!(r.types, [TypePat::Concrete(0), TypePat::Concrete(1)]);
        assert_eq!(r.before, [1, 1]);
        assert!(!r.bonded_before);
        assert_eq!(r.after, [2, 2]);
        assert!(r.bonded_after);
        assert_eq!(r.to_string(), "a1+b1 -> a2#b2");
    }

    #[test]
    fn type_change_rejected() {
        assert_eq!(parse_rule("a1+b1 -> c2#b2", 9).unwrap_err(), "type not conserved");
        let e = RuleTable::parse("; ok\na1+b1 -> a2#b2\na1+b1 -> c2#b2\n", 9).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().contains("type not conserved"));
    }

    #[test]
    fn wildcard_binds_same_type() {
        let r = parse_rule("x3#x4 -> x0+x0", 9).unwrap();
        assert!(r.matches(2, 3, 2, 4, true));
        assert!(!r.matches(2, 3, 1, 4, true));
        let xy = parse_rule("x3#y4 -> x0+y0", 9).unwrap();
        assert!(xy.matches(2, 3, 1, 4, true));
        assert!(xy.matches(2, 3, 2, 4, true));
    }

    #[test]
    fn state_bound_and_atom_count() {
        assert!(parse_rule("a1+b1 -> a2#b2", 1).unwrap_err().contains("exceeds max_state"));
        assert!(parse_rule("a1+b1 -> a2#b2#c2", 9).is_err());
        assert!(parse_rule("a1 -> a2", 9).is_err());
        assert!(parse_rule("a1+b1 a2#b2", 9).is_err());
        assert!(parse_rule("g1+b1 -> g2#b2", 9).is_err());
    }

    #[test]
    fn lookup_first_match_and_orientation() {
        let t = RuleTable::parse("a1+b1 -> a2#b2\nx1+y1 -> x5+y5\n", 9).unwrap();
        assert_eq!(t.find(0, 1, 1, 1, false), Some(RuleHit { rule: 0, swapped: false }));
        assert_eq!(t.find(1, 1, 0, 1, false), Some(RuleHit { rule: 0, swapped: true }));
        assert_eq!(t.find(2, 1, 2, 1, false), Some(RuleHit { rule: 1, swapped: false }));
        assert_eq!(t.find(0, 1, 1, 1, true), None);
    }
}
