//! The 16-opcode instruction set. Opcode numbers are frozen.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Op {
    Nop0 = 0,
    Nop1 = 1,
    /// Skip the next instruction (and its template) unless CX == 0.
    Ifz = 2,
    /// IP <- one past the nearest complemented template, tie -> forward.
    Jmp = 3,
    /// AX <- one past the nearest forward match.
    Adrf = 4,
    /// AX <- first cell of the nearest backward match.
    Adrb = 5,
    SubAb = 6,
    Xchg = 7,
    /// soup[AX] <- soup[BX]; write-protected, subject to copy mutation.
    MovIi = 8,
    IncA = 9,
    IncB = 10,
    DecC = 11,
    PushAx = 12,
    PopAx = 13,
    Mal = 14,
    Divide = 15,
}

pub const OPS: [Op; 16] = [
    Op::Nop0,
    Op::Nop1,
    Op::Ifz,
    Op::Jmp,
    Op::Adrf,
    Op::Adrb,
    Op::SubAb,
    Op::Xchg,
    Op::MovIi,
    Op::IncA,
    Op::IncB,
    Op::DecC,
    Op::PushAx,
    Op::PopAx,
    Op::Mal,
    Op::Divide,
];

impl Op {
    #[inline(always)]
    pub fn from_cell(c: u8) -> Op {
        OPS[(c & 0x0f) as usize]
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Op::Nop0 => "nop0",
            Op::Nop1 => "nop1",
            Op::Ifz => "ifz",
            Op::Jmp => "jmp",
            Op::Adrf => "adrf",
            Op::Adrb => "adrb",
            Op::SubAb => "sub_ab",
            Op::Xchg => "xchg",
            Op::MovIi => "mov_ii",
            Op::IncA => "inc_a",
            Op::IncB => "inc_b",
            Op::DecC => "dec_c",
            Op::PushAx => "push_ax",
            Op::PopAx => "pop_ax",
            Op::Mal => "mal",
            Op::Divide => "divide",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Op> {
        let lower = s.to_ascii_lowercase();
        OPS.iter().copied().find(|op| op.mnemonic() == lower)
    }

    #[inline(always)]
    pub fn is_nop(c: u8) -> bool {
        c <= 1
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenomeError {
    #[error("line {line}: unknown mnemonic `{word}`")]
    UnknownMnemonic { line: usize, word: String },
    #[error("line {line}: expected one mnemonic per line, found `{text}`")]
    ExtraTokens { line: usize, text: String },
    #[error("genome is empty")]
    Empty,
    #[error("genome length {len} exceeds max_org_size {max}")]
    TooLong { len: usize, max: usize },
}

/// Parses a genome file: one mnemonic per line, `;` comments, case-insensitive.
pub fn parse_genome(text: &str) -> Result<Vec<u8>, GenomeError> {
    let mut cells = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let word = words.next().expect("non-empty line");
        if words.next().is_some() {
            return Err(GenomeError::ExtraTokens { line: i + 1, text: line.to_owned() });
        }
        let op = Op::from_mnemonic(word).ok_or_else(|| GenomeError::UnknownMnemonic {
            line: i + 1,
            word: word.to_owned(),
        })?;
        cells.push(op as u8);
    }
    if cells.is_empty() {
        return Err(GenomeError::Empty);
    }
    Ok(cells)
}

/// One mnemonic per line, no comments.
pub fn disassemble(cells: &[u8]) -> String {
    let mut out = String::with_capacity(cells.len() * 7);
    for &c in cells {
        out.push_str(Op::from_cell(c).mnemonic());
        out.push('\n');
    }
    out
}
