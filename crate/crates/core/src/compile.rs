//! Compile Turing machines, two-head one-tape machines and nondeterministic
//! cellular automata into forbidden-pattern sets over (at most) 3x2
//! supports, and run/verify finite space-time diagrams.
//!
//! Diagrams are finite rectangles, bottom row = input, time growing upward.
//! Both extreme columns hold a dedicated wall letter; walls persist
//! vertically, never host a head, and a head is not allowed to step into
//! them. With walls in place, every tape cell of a diagram has both
//! horizontal neighbours, so the 3x2 rules pin the whole diagram from its
//! bottom row (which is what makes the deterministic-uniqueness checks
//! meaningful on finite windows).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::shift::{self, Alphabet, Dim, Forbidden, Generator, Letter, Pattern, ShiftSpec};

pub type StateId = usize;
pub type SymId = u8;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("transition table not total on non-halt states")]
    PartialTable,
    #[error("machine needs at least the symbols 0, 1 and End")]
    MissingSymbols,
    #[error("head left the simulation window at step {0}")]
    Boundary(usize),
    #[error("two heads wrote different symbols to one cell at step {0}")]
    WriteConflict(usize),
    #[error("composite alphabet too large to enumerate: {0} letters")]
    TooManyLetters(usize),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
    S,
}

/// Single-head, single-tape machine. Symbol ids index `symbols`; the table
/// must contain every (non-halt state, symbol) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TMSpec {
    pub symbols: Vec<String>,
    pub states: usize,
    pub halt: StateId,
    pub table: BTreeMap<(StateId, SymId), (StateId, SymId, Move)>,
}

impl TMSpec {
    pub fn validate(&self) -> Result<(), CompileError> {
        for need in ["0", "1", "End"] {
            if !self.symbols.iter().any(|s| s == need) {
                return Err(CompileError::MissingSymbols);
            }
        }
        for q in 0..self.states {
            if q == self.halt {
                continue;
            }
            for s in 0..self.symbols.len() as SymId {
                if !self.table.contains_key(&(q, s)) {
                    return Err(CompileError::PartialTable);
                }
            }
        }
        Ok(())
    }

    /// Halt state is absorbing: stay put, rewrite the same symbol.
    pub fn step(&self, q: StateId, s: SymId) -> (StateId, SymId, Move) {
        if q == self.halt {
            (q, s, Move::S)
        } else {
            self.table[&(q, s)]
        }
    }

    /// Machine that halts immediately.
    pub fn no_op() -> Self {
        TMSpec {
            symbols: vec!["0".into(), "1".into(), "End".into()],
            states: 1,
            halt: 0,
            table: BTreeMap::new(),
        }
    }

    /// Walks right over 1s and appends one more 1 (unary successor).
    pub fn unary_successor() -> Self {
        let mut table = BTreeMap::new();
        // state 0 = scan, state 1 = halt; symbols 0,1,End
        table.insert((0, 1), (0, 1, Move::R));
        table.insert((0, 0), (1, 1, Move::S));
        table.insert((0, 2), (1, 1, Move::S));
        TMSpec { symbols: vec!["0".into(), "1".into(), "End".into()], states: 2, halt: 1, table }
    }

    /// MSB-first binary increment: run to the end marker, then carry leftward.
    pub fn binary_increment() -> Self {
        let mut table = BTreeMap::new();
        // state 0 = seek right, state 1 = carry left, state 2 = halt
        table.insert((0, 0), (0, 0, Move::R));
        table.insert((0, 1), (0, 1, Move::R));
        table.insert((0, 2), (1, 2, Move::L));
        table.insert((1, 1), (1, 0, Move::L));
        table.insert((1, 0), (2, 1, Move::S));
        table.insert((1, 2), (2, 2, Move::S));
        TMSpec { symbols: vec!["0".into(), "1".into(), "End".into()], states: 3, halt: 2, table }
    }
}

/// Two heads on one tape; the transition is keyed on the internal state and
/// both scanned symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoHeadTMSpec {
    pub symbols: Vec<String>,
    pub states: usize,
    pub halt: StateId,
    pub table: BTreeMap<(StateId, SymId, SymId), (StateId, SymId, SymId, Move, Move)>,
}

impl TwoHeadTMSpec {
    pub fn validate(&self) -> Result<(), CompileError> {
        for q in 0..self.states {
            if q == self.halt {
                continue;
            }
            for a in 0..self.symbols.len() as SymId {
                for b in 0..self.symbols.len() as SymId {
                    if !self.table.contains_key(&(q, a, b)) {
                        return Err(CompileError::PartialTable);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step(&self, q: StateId, a: SymId, b: SymId) -> (StateId, SymId, SymId, Move, Move) {
        if q == self.halt {
            (q, a, b, Move::S, Move::S)
        } else {
            self.table[&(q, a, b)]
        }
    }

    /// Both heads sit still forever.
    pub fn stationary() -> Self {
        let mut table = BTreeMap::new();
        for a in 0..2u8 {
            for b in 0..2u8 {
                table.insert((0, a, b), (0, a, b, Move::S, Move::S));
            }
        }
        TwoHeadTMSpec { symbols: vec!["0".into(), "1".into()], states: 1, halt: 0, table }
    }

    /// Head 2 reads bits left to right and head 1 writes them down at its own
    /// position, also moving right: copies a block from one zone to another.
    pub fn copier() -> Self {
        let mut table = BTreeMap::new();
        // state 0 = copying; stop when head 2 reads the End marker (2)
        for a in 0..3u8 {
            for b in 0..3u8 {
                if b == 2 {
                    table.insert((0, a, b), (1, a, b, Move::S, Move::S));
                } else {
                    table.insert((0, a, b), (0, b, b, Move::R, Move::R));
                }
            }
        }
        TwoHeadTMSpec { symbols: vec!["0".into(), "1".into(), "End".into()], states: 2, halt: 1, table }
    }
}

/// One-dimensional nondeterministic cellular automaton with radius-1
/// neighbourhood and an absorbing error letter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NCASpec {
    pub letters: Vec<String>,
    pub error_letter: Letter,
    /// Local relation; missing entries mean the empty set (no valid
    /// continuation).
    pub rule: BTreeMap<(Letter, Letter, Letter), Vec<Letter>>,
}

impl NCASpec {
    pub fn validate(&self) -> Result<(), CompileError> {
        if self.error_letter as usize >= self.letters.len() {
            return Err(CompileError::Invalid("error letter out of range".into()));
        }
        Ok(())
    }

    pub fn options(&self, l: Letter, m: Letter, r: Letter) -> Vec<Letter> {
        let mut v = self.rule.get(&(l, m, r)).cloned().unwrap_or_default();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Identity automaton over `{0, 1}` plus an error letter.
    pub fn identity() -> Self {
        let mut rule = BTreeMap::new();
        for l in 0..2u8 {
            for m in 0..2u8 {
                for r in 0..2u8 {
                    rule.insert((l, m, r), vec![m]);
                }
            }
        }
        NCASpec { letters: vec!["0".into(), "1".into(), "err".into()], error_letter: 2, rule }
    }

    /// Fully nondeterministic: every neighbourhood allows both 0 and 1.
    pub fn two_choice() -> Self {
        let mut rule = BTreeMap::new();
        for l in 0..2u8 {
            for m in 0..2u8 {
                for r in 0..2u8 {
                    rule.insert((l, m, r), vec![0, 1]);
                }
            }
        }
        NCASpec { letters: vec!["0".into(), "1".into(), "err".into()], error_letter: 2, rule }
    }

    /// Rule-90 style: next letter is the xor of the two neighbours.
    pub fn xor() -> Self {
        let mut rule = BTreeMap::new();
        for l in 0..2u8 {
            for m in 0..2u8 {
                for r in 0..2u8 {
                    rule.insert((l, m, r), vec![l ^ r]);
                }
            }
        }
        NCASpec { letters: vec!["0".into(), "1".into(), "err".into()], error_letter: 2, rule }
    }
}

/// Composite-letter space-time rule for one machine; this is the payload the
/// compiled `ShiftSpec`s carry, so admissibility checks can run off the
/// transition table instead of a materialised pattern list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MachineRule {
    Tm(TMSpec),
    TwoHead(TwoHeadTMSpec),
    Nca(NCASpec),
}

/// Wall letter is always id 0 in the composite alphabet.
pub const WALL: Letter = 0;

impl MachineRule {
    pub fn letter_count(&self) -> usize {
        match self {
            MachineRule::Tm(m) => 1 + m.symbols.len() * (1 + m.states),
            MachineRule::TwoHead(m) => {
                let s = m.symbols.len();
                1 + s * 4 * (m.states * s * s)
            }
            MachineRule::Nca(a) => 1 + a.letters.len(),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        let names: Vec<String> = (0..self.letter_count())
            .map(|i| if i == 0 { "wall".to_string() } else { format!("c{i}") })
            .collect();
        Alphabet::new(names).unwrap()
    }

    /// Letters (other than walls) that are forbidden on their own.
    pub fn error_letters(&self) -> Vec<Letter> {
        match self {
            MachineRule::Nca(a) => vec![nca_letter(a.error_letter)],
            _ => vec![],
        }
    }

    /// All valid middle-top letters over a bottom triple.
    pub fn valid_tops(&self, l: Letter, m: Letter, r: Letter) -> Vec<Letter> {
        match self {
            MachineRule::Tm(spec) => tm_valid_tops(spec, l, m, r),
            MachineRule::TwoHead(spec) => twohead_valid_tops(spec, l, m, r),
            MachineRule::Nca(spec) => nca_valid_tops(spec, l, m, r),
        }
    }

    /// Any rule violation inside `p`: stray error letters, broken wall
    /// columns, or a 3x2 placement whose middle-top letter is not a valid
    /// continuation of its bottom triple.
    pub fn scan(&self, p: &Pattern) -> bool {
        for (_, letter) in p.iter() {
            if self.error_letters().contains(&letter) {
                return true;
            }
        }
        for ((x, y), letter) in p.iter() {
            if let Some(above) = p.get((x, y + 1)) {
                if (letter == WALL) != (above == WALL) {
                    return true;
                }
            }
        }
        for ((x, y), m) in p.iter() {
            let (l, r, up) = (p.get((x - 1, y)), p.get((x + 1, y)), p.get((x, y + 1)));
            if let (Some(l), Some(r), Some(up)) = (l, r, up) {
                // corners of the 3x2 rectangle must exist too
                if p.get((x - 1, y + 1)).is_some() && p.get((x + 1, y + 1)).is_some() {
                    if !self.valid_tops(l, m, r).contains(&up) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Deterministic enumeration of the compiled forbidden patterns:
    /// error letters first, then wall persistence, then inconsistent 3x2
    /// rectangles in lexicographic order of their six letters.
    pub fn forbidden_prefix(&self, budget: usize) -> Vec<Pattern> {
        let mut out = Vec::new();
        for e in self.error_letters() {
            if out.len() >= budget {
                return out;
            }
            out.push(Pattern::from_cells([((0, 0), e)]));
        }
        let a = self.letter_count() as Letter;
        for v in 1..a {
            if out.len() >= budget {
                return out;
            }
            out.push(Pattern::from_cells([((0, 0), WALL), ((0, 1), v)]));
            if out.len() >= budget {
                return out;
            }
            out.push(Pattern::from_cells([((0, 0), v), ((0, 1), WALL)]));
        }
        let n = a as u64;
        let total = n.saturating_pow(4);
        'outer: for code in 0..total {
            let mut c = code;
            let mut t = [0 as Letter; 4];
            for slot in t.iter_mut() {
                *slot = (c % n) as Letter;
                c /= n;
            }
            let (l, m, r, up) = (t[0], t[1], t[2], t[3]);
            let valids = self.valid_tops(l, m, r);
            if valids.contains(&up) {
                continue;
            }
            // expand the free corners: every completion is forbidden, and we
            // enumerate them explicitly so supports are full 3x2 rectangles
            for ul in 0..a {
                for ur in 0..a {
                    if out.len() >= budget {
                        break 'outer;
                    }
                    out.push(Pattern::from_cells([
                        ((0, 0), l),
                        ((1, 0), m),
                        ((2, 0), r),
                        ((0, 1), ul),
                        ((1, 1), up),
                        ((2, 1), ur),
                    ]));
                }
            }
        }
        out
    }

    pub fn nth_forbidden(&self, i: usize) -> Option<Pattern> {
        self.forbidden_prefix(i + 1).into_iter().nth(i)
    }

    /// Total number of compiled forbidden patterns (guarded: refuses huge
    /// composite alphabets).
    pub fn forbidden_count(&self) -> usize {
        let a = self.letter_count();
        assert!(a.pow(4) <= 100_000_000, "composite alphabet too large to enumerate");
        let mut bad = 0usize;
        for l in 0..a as Letter {
            for m in 0..a as Letter {
                for r in 0..a as Letter {
                    let valid = self.valid_tops(l, m, r).len();
                    bad += a - valid;
                }
            }
        }
        self.error_letters().len() + 2 * (a - 1) + bad * a * a
    }
}

// --- composite letter codecs ---

/// TM composite letter: wall, or (symbol, optional head carrying a state).
pub fn tm_letter(m: &TMSpec, sym: SymId, head: Option<StateId>) -> Letter {
    let per_sym = 1 + m.states;
    (1 + sym as usize * per_sym + head.map_or(0, |q| 1 + q)) as Letter
}

pub fn tm_decode(m: &TMSpec, letter: Letter) -> Option<(SymId, Option<StateId>)> {
    if letter == WALL {
        return None;
    }
    let per_sym = 1 + m.states;
    let v = letter as usize - 1;
    let sym = (v / per_sym) as SymId;
    let h = v % per_sym;
    Some((sym, if h == 0 { None } else { Some(h - 1) }))
}

/// NCA composite letter: wall or a CA letter shifted by one.
pub fn nca_letter(l: Letter) -> Letter {
    l + 1
}

pub fn nca_decode(letter: Letter) -> Option<Letter> {
    if letter == WALL {
        None
    } else {
        Some(letter - 1)
    }
}

/// Two-head composite letter: wall, or
/// (symbol, head1?, head2?, shared (state, sym1, sym2)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoHeadCell {
    pub sym: SymId,
    pub h1: bool,
    pub h2: bool,
    pub shared: (StateId, SymId, SymId),
}

pub fn twohead_letter(m: &TwoHeadTMSpec, c: TwoHeadCell) -> Letter {
    let s = m.symbols.len();
    let shared = (c.shared.0 * s + c.shared.1 as usize) * s + c.shared.2 as usize;
    let head = (c.h1 as usize) * 2 + c.h2 as usize;
    (1 + ((c.sym as usize * 4 + head) * (m.states * s * s) + shared)) as Letter
}

pub fn twohead_decode(m: &TwoHeadTMSpec, letter: Letter) -> Option<TwoHeadCell> {
    if letter == WALL {
        return None;
    }
    let s = m.symbols.len();
    let block = m.states * s * s;
    let v = letter as usize - 1;
    let shared = v % block;
    let rest = v / block;
    let head = rest % 4;
    let sym = (rest / 4) as SymId;
    let sym2 = (shared % s) as SymId;
    let sym1 = ((shared / s) % s) as SymId;
    let state = shared / (s * s);
    Some(TwoHeadCell { sym, h1: head >= 2, h2: head % 2 == 1, shared: (state, sym1, sym2) })
}

fn tm_valid_tops(m: &TMSpec, l: Letter, mid: Letter, r: Letter) -> Vec<Letter> {
    if mid == WALL {
        // heads may not step into the wall
        if sends_head(m, l, Move::R) || sends_head(m, r, Move::L) {
            return vec![];
        }
        return vec![WALL];
    }
    let Some((sym, head)) = tm_decode(m, mid) else { return vec![] };
    if sym as usize >= m.symbols.len() {
        return vec![];
    }
    // a head walking off into a wall neighbour has no continuation
    if l == WALL && sends_head_dir(m, mid, Move::L) {
        return vec![];
    }
    if r == WALL && sends_head_dir(m, mid, Move::R) {
        return vec![];
    }
    let new_sym = match head {
        Some(q) => m.step(q, sym).1,
        None => sym,
    };
    let mut incoming: Vec<StateId> = Vec::new();
    if let Some(q) = head {
        let (q2, _, mv) = m.step(q, sym);
        if mv == Move::S {
            incoming.push(q2);
        }
    }
    if let Some((s2, Some(q))) = decode_non_wall(m, l) {
        let (q2, _, mv) = m.step(q, s2);
        if mv == Move::R {
            incoming.push(q2);
        }
    }
    if let Some((s2, Some(q))) = decode_non_wall(m, r) {
        let (q2, _, mv) = m.step(q, s2);
        if mv == Move::L {
            incoming.push(q2);
        }
    }
    match incoming.len() {
        0 => vec![tm_letter(m, new_sym, None)],
        1 => vec![tm_letter(m, new_sym, Some(incoming[0]))],
        _ => vec![], // head collision
    }
}

fn decode_non_wall(m: &TMSpec, letter: Letter) -> Option<(SymId, Option<StateId>)> {
    if letter == WALL {
        None
    } else {
        tm_decode(m, letter).filter(|(s, h)| {
            (*s as usize) < m.symbols.len() && h.map_or(true, |q| q < m.states)
        })
    }
}

fn sends_head(m: &TMSpec, letter: Letter, dir: Move) -> bool {
    match decode_non_wall(m, letter) {
        Some((s, Some(q))) => m.step(q, s).2 == dir,
        _ => false,
    }
}

fn sends_head_dir(m: &TMSpec, letter: Letter, dir: Move) -> bool {
    sends_head(m, letter, dir)
}

fn nca_valid_tops(a: &NCASpec, l: Letter, mid: Letter, r: Letter) -> Vec<Letter> {
    if mid == WALL {
        return vec![WALL];
    }
    let Some(m) = nca_decode(mid) else { return vec![] };
    if m as usize >= a.letters.len() {
        return vec![];
    }
    // cells next to a wall are frozen
    if l == WALL || r == WALL {
        return vec![nca_letter(m)];
    }
    let (Some(lv), Some(rv)) = (nca_decode(l), nca_decode(r)) else { return vec![] };
    if lv as usize >= a.letters.len() || rv as usize >= a.letters.len() {
        return vec![];
    }
    a.options(lv, m, rv).into_iter().map(nca_letter).collect()
}

fn twohead_valid_tops(m: &TwoHeadTMSpec, l: Letter, mid: Letter, r: Letter) -> Vec<Letter> {
    let s = m.symbols.len();
    let dec = |x: Letter| -> Option<TwoHeadCell> {
        twohead_decode(m, x).filter(|c| {
            (c.sym as usize) < s
                && c.shared.0 < m.states
                && (c.shared.1 as usize) < s
                && (c.shared.2 as usize) < s
        })
    };
    if mid == WALL {
        let head_in = |n: Letter, toward: Move| -> bool {
            dec(n).is_some_and(|c| {
                let (_, _, _, mv1, mv2) = m.step(c.shared.0, c.shared.1, c.shared.2);
                (c.h1 && mv1 == toward) || (c.h2 && mv2 == toward)
            })
        };
        if head_in(l, Move::R) || head_in(r, Move::L) {
            return vec![];
        }
        return vec![WALL];
    }
    let Some(c) = dec(mid) else { return vec![] };
    // internal state and scanned symbols are replicated row-wide
    for n in [l, r] {
        if n != WALL {
            match dec(n) {
                Some(nc) if nc.shared == c.shared => {}
                _ => return vec![],
            }
        }
    }
    let (q, x1, x2) = c.shared;
    // head cells must agree with the shared scanned symbols
    if (c.h1 && c.sym != x1) || (c.h2 && c.sym != x2) {
        return vec![];
    }
    let (q2, w1, w2, mv1, mv2) = m.step(q, x1, x2);
    if c.h1 && c.h2 && w1 != w2 {
        return vec![];
    }
    if l == WALL && ((c.h1 && mv1 == Move::L) || (c.h2 && mv2 == Move::L)) {
        return vec![];
    }
    if r == WALL && ((c.h1 && mv1 == Move::R) || (c.h2 && mv2 == Move::R)) {
        return vec![];
    }
    let new_sym = if c.h1 && c.h2 {
        w1
    } else if c.h1 {
        w1
    } else if c.h2 {
        w2
    } else {
        c.sym
    };
    let h1_next = (c.h1 && mv1 == Move::S)
        || dec(l).is_some_and(|n| n.h1 && mv1 == Move::R)
        || dec(r).is_some_and(|n| n.h1 && mv1 == Move::L);
    let h2_next = (c.h2 && mv2 == Move::S)
        || dec(l).is_some_and(|n| n.h2 && mv2 == Move::R)
        || dec(r).is_some_and(|n| n.h2 && mv2 == Move::L);
    // next-row shared: state determined, scanned symbols pinned only at the
    // new head cells (row coherence propagates the rest)
    let mut out = Vec::new();
    for y1 in 0..s as SymId {
        for y2 in 0..s as SymId {
            if h1_next && y1 != new_sym {
                continue;
            }
            if h2_next && y2 != new_sym {
                continue;
            }
            out.push(twohead_letter(
                m,
                TwoHeadCell { sym: new_sym, h1: h1_next, h2: h2_next, shared: (q2, y1, y2) },
            ));
        }
    }
    out
}

// --- compilation entry points ---

pub fn tm_to_sft(m: &TMSpec) -> Result<ShiftSpec, CompileError> {
    m.validate()?;
    let rule = MachineRule::Tm(m.clone());
    Ok(ShiftSpec {
        alphabet: rule.alphabet(),
        forbidden: Forbidden::Generator(Generator::SpaceTime(rule)),
        dims: Dim::Two,
    })
}

pub fn twohead_to_sft(m: &TwoHeadTMSpec) -> Result<ShiftSpec, CompileError> {
    m.validate()?;
    let rule = MachineRule::TwoHead(m.clone());
    Ok(ShiftSpec {
        alphabet: rule.alphabet(),
        forbidden: Forbidden::Generator(Generator::SpaceTime(rule)),
        dims: Dim::Two,
    })
}

pub fn nca_to_sft(a: &NCASpec) -> Result<ShiftSpec, CompileError> {
    a.validate()?;
    let rule = MachineRule::Nca(a.clone());
    Ok(ShiftSpec {
        alphabet: rule.alphabet(),
        forbidden: Forbidden::Generator(Generator::SpaceTime(rule)),
        dims: Dim::Two,
    })
}

/// A finite space-time rectangle over a composite alphabet; `rows[0]` is the
/// input row, walls included at both ends of every row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpaceTimeDiagram {
    pub rows: Vec<Vec<Letter>>,
}

impl SpaceTimeDiagram {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn to_pattern(&self) -> Pattern {
        let mut p = Pattern::new();
        for (y, row) in self.rows.iter().enumerate() {
            for (x, &l) in row.iter().enumerate() {
                p.set((x as i32, y as i32), l);
            }
        }
        p
    }
}

/// Deterministic choice policy used to resolve NCA nondeterminism in the
/// reference executor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChoiceOracle {
    First,
    Last,
    /// Per-step, per-cell indices into the sorted option set, consumed
    /// row-major; missing entries fall back to `First`.
    Seq(Vec<usize>),
}

impl ChoiceOracle {
    fn pick(&self, counter: &mut usize, options: &[Letter]) -> Letter {
        let idx = match self {
            ChoiceOracle::First => 0,
            ChoiceOracle::Last => options.len() - 1,
            ChoiceOracle::Seq(v) => {
                let i = v.get(*counter).copied().unwrap_or(0);
                *counter += 1;
                i.min(options.len() - 1)
            }
        };
        options[idx]
    }
}

/// Run a single-head machine inside a window of `tape.len()` cells; the
/// returned diagram has `steps + 1` rows and `tape.len() + 2` columns.
pub fn simulate_tm(
    m: &TMSpec,
    tape: &[SymId],
    head: usize,
    state: StateId,
    steps: usize,
) -> Result<SpaceTimeDiagram, CompileError> {
    m.validate()?;
    let w = tape.len();
    let row_of = |t: &[SymId], h: usize, q: StateId| -> Vec<Letter> {
        let mut row = vec![WALL];
        for (i, &s) in t.iter().enumerate() {
            row.push(tm_letter(m, s, if i == h { Some(q) } else { None }));
        }
        row.push(WALL);
        row
    };
    let mut tape = tape.to_vec();
    let mut h = head;
    let mut q = state;
    let mut rows = vec![row_of(&tape, h, q)];
    for step in 1..=steps {
        let (q2, s2, mv) = m.step(q, tape[h]);
        tape[h] = s2;
        q = q2;
        match mv {
            Move::L => {
                if h == 0 {
                    return Err(CompileError::Boundary(step));
                }
                h -= 1;
            }
            Move::R => {
                if h + 1 >= w {
                    return Err(CompileError::Boundary(step));
                }
                h += 1;
            }
            Move::S => {}
        }
        rows.push(row_of(&tape, h, q));
    }
    Ok(SpaceTimeDiagram { rows })
}

pub fn simulate_twohead(
    m: &TwoHeadTMSpec,
    tape: &[SymId],
    head1: usize,
    head2: usize,
    state: StateId,
    steps: usize,
) -> Result<SpaceTimeDiagram, CompileError> {
    m.validate()?;
    let w = tape.len();
    let row_of = |t: &[SymId], h1: usize, h2: usize, q: StateId| -> Vec<Letter> {
        let shared = (q, t[h1], t[h2]);
        let mut row = vec![WALL];
        for (i, &s) in t.iter().enumerate() {
            row.push(twohead_letter(
                m,
                TwoHeadCell { sym: s, h1: i == h1, h2: i == h2, shared },
            ));
        }
        row.push(WALL);
        row
    };
    let mut tape = tape.to_vec();
    let (mut h1, mut h2, mut q) = (head1, head2, state);
    let mut rows = vec![row_of(&tape, h1, h2, q)];
    for step in 1..=steps {
        let (q2, w1, w2, mv1, mv2) = m.step(q, tape[h1], tape[h2]);
        if h1 == h2 && w1 != w2 {
            return Err(CompileError::WriteConflict(step));
        }
        tape[h1] = w1;
        tape[h2] = w2;
        q = q2;
        let shift = |h: usize, mv: Move| -> Result<usize, CompileError> {
            match mv {
                Move::L => h.checked_sub(1).ok_or(CompileError::Boundary(step)),
                Move::R => {
                    if h + 1 >= w {
                        Err(CompileError::Boundary(step))
                    } else {
                        Ok(h + 1)
                    }
                }
                Move::S => Ok(h),
            }
        };
        h1 = shift(h1, mv1)?;
        h2 = shift(h2, mv2)?;
        rows.push(row_of(&tape, h1, h2, q));
    }
    Ok(SpaceTimeDiagram { rows })
}

/// Run an NCA; cells adjacent to the walls are frozen, everything else steps
/// under the choice oracle.
pub fn simulate_nca(
    a: &NCASpec,
    input: &[Letter],
    steps: usize,
    oracle: &ChoiceOracle,
) -> Result<SpaceTimeDiagram, CompileError> {
    a.validate()?;
    let row_of = |t: &[Letter]| -> Vec<Letter> {
        let mut row = vec![WALL];
        row.extend(t.iter().map(|&l| nca_letter(l)));
        row.push(WALL);
        row
    };
    let mut cur = input.to_vec();
    let mut rows = vec![row_of(&cur)];
    let mut counter = 0usize;
    for step in 1..=steps {
        let mut next = cur.clone();
        for i in 0..cur.len() {
            if i == 0 || i + 1 == cur.len() {
                continue; // frozen next to the wall
            }
            let options = a.options(cur[i - 1], cur[i], cur[i + 1]);
            if options.is_empty() {
                return Err(CompileError::Invalid(format!(
                    "empty relation at cell {i}, step {step}"
                )));
            }
            next[i] = oracle.pick(&mut counter, &options);
        }
        cur = next;
        rows.push(row_of(&cur));
    }
    Ok(SpaceTimeDiagram { rows })
}

/// Local admissibility of a diagram for the compiled rule; for deterministic
/// specs this pins the whole diagram to its bottom row.
pub fn verify_spacetime(d: &SpaceTimeDiagram, rule: &MachineRule) -> bool {
    !rule.scan(&d.to_pattern())
}

pub use shift::locally_admissible as locally_admissible_budgeted;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_op_rows_identical() {
        let m = TMSpec::no_op();
        let d = simulate_tm(&m, &[0, 1, 0], 1, 0, 3).unwrap();
        assert_eq!(d.height(), 4);
        for r in &d.rows {
            assert_eq!(r, &d.rows[0]);
        }
        assert!(verify_spacetime(&d, &MachineRule::Tm(m)));
    }

    #[test]
    fn unary_successor_diagram_admissible() {
        let m = TMSpec::unary_successor();
        // input 11 on a 4-cell window -> 6x4 diagram
        let d = simulate_tm(&m, &[1, 1, 0, 0], 0, 0, 3).unwrap();
        assert_eq!((d.width(), d.height()), (6, 4));
        assert!(verify_spacetime(&d, &MachineRule::Tm(m.clone())));
        // the successor appended a 1
        let top = &d.rows[3];
        let syms: Vec<SymId> = top[1..5]
            .iter()
            .map(|&l| tm_decode(&m, l).unwrap().0)
            .collect();
        assert_eq!(syms, vec![1, 1, 1, 0]);
    }

    #[test]
    fn binary_increment_trace() {
        let m = TMSpec::binary_increment();
        // 011 -> 100, End marker after the number
        let d = simulate_tm(&m, &[0, 1, 1, 2], 0, 0, 8).unwrap();
        let top = d.rows.last().unwrap();
        let syms: Vec<SymId> = top[1..5]
            .iter()
            .map(|&l| tm_decode(&m, l).unwrap().0)
            .collect();
        assert_eq!(syms, vec![1, 0, 0, 2]);
        assert!(verify_spacetime(&d, &MachineRule::Tm(m)));
    }

    #[test]
    fn tm_mutation_breaks_admissibility() {
        let m = TMSpec::binary_increment();
        let rule = MachineRule::Tm(m.clone());
        let d = simulate_tm(&m, &[0, 1, 1, 2], 0, 0, 6).unwrap();
        assert!(verify_spacetime(&d, &rule));
        for y in 1..d.height() {
            for x in 1..d.width() - 1 {
                let mut bad = d.clone();
                bad.rows[y][x] = if bad.rows[y][x] == tm_letter(&m, 0, None) {
                    tm_letter(&m, 1, None)
                } else {
                    tm_letter(&m, 0, None)
                };
                assert!(!verify_spacetime(&bad, &rule), "flip at ({x},{y}) not caught");
            }
        }
    }

    #[test]
    fn bottom_row_change_recomputed_ok() {
        let m = TMSpec::binary_increment();
        let rule = MachineRule::Tm(m.clone());
        let d2 = simulate_tm(&m, &[1, 1, 0, 2], 0, 0, 6).unwrap();
        assert!(verify_spacetime(&d2, &rule));
    }

    #[test]
    fn nca_identity_constant_columns() {
        let a = NCASpec::identity();
        let d = simulate_nca(&a, &[0, 1, 1, 0], 3, &ChoiceOracle::First).unwrap();
        for r in &d.rows {
            assert_eq!(r, &d.rows[0]);
        }
        assert!(verify_spacetime(&d, &MachineRule::Nca(a)));
    }

    #[test]
    fn nca_two_choice_everything_admissible() {
        let a = NCASpec::two_choice();
        let rule = MachineRule::Nca(a.clone());
        let d0 = simulate_nca(&a, &[0, 1, 0, 1], 2, &ChoiceOracle::First).unwrap();
        let d1 = simulate_nca(&a, &[0, 1, 0, 1], 2, &ChoiceOracle::Last).unwrap();
        assert_ne!(d0, d1);
        assert!(verify_spacetime(&d0, &rule));
        assert!(verify_spacetime(&d1, &rule));
    }

    #[test]
    fn xor_diagram_admissible_and_rigid() {
        let a = NCASpec::xor();
        let rule = MachineRule::Nca(a.clone());
        // 8x5: six tape cells plus walls
        let d = simulate_nca(&a, &[0, 1, 1, 0, 1, 0], 4, &ChoiceOracle::First).unwrap();
        assert_eq!((d.width(), d.height()), (8, 5));
        assert!(verify_spacetime(&d, &rule));
        for y in 1..d.height() {
            for x in 1..d.width() - 1 {
                let mut bad = d.clone();
                let cur = nca_decode(bad.rows[y][x]).unwrap();
                bad.rows[y][x] = nca_letter(1 - cur);
                assert!(!verify_spacetime(&bad, &rule), "flip at ({x},{y}) not caught");
            }
        }
    }

    #[test]
    fn twohead_stationary_rows_constant() {
        let m = TwoHeadTMSpec::stationary();
        let d = simulate_twohead(&m, &[0, 1, 1], 0, 2, 0, 3).unwrap();
        for r in &d.rows {
            assert_eq!(r, &d.rows[0]);
        }
        assert!(verify_spacetime(&d, &MachineRule::TwoHead(m)));
    }

    #[test]
    fn twohead_copier_diagram_admissible() {
        let m = TwoHeadTMSpec::copier();
        // head 2 walks a 3-bit block (101) toward head 1's zone
        let d = simulate_twohead(&m, &[0, 0, 0, 0, 1, 0, 1, 2], 0, 4, 0, 3).unwrap();
        assert!(verify_spacetime(&d, &MachineRule::TwoHead(m.clone())));
        let top = d.rows.last().unwrap();
        let syms: Vec<SymId> = top[1..4]
            .iter()
            .map(|&l| twohead_decode(&m, l).unwrap().sym)
            .collect();
        assert_eq!(syms, vec![1, 0, 1]);
    }

    #[test]
    fn twohead_mismatched_shared_state_rejected() {
        let m = TwoHeadTMSpec::copier();
        let rule = MachineRule::TwoHead(m.clone());
        let d = simulate_twohead(&m, &[0, 0, 0, 1, 2], 0, 3, 0, 1).unwrap();
        assert!(verify_spacetime(&d, &rule));
        let mut bad = d.clone();
        let mut cell = twohead_decode(&m, bad.rows[0][2]).unwrap();
        cell.shared.1 = 1 - cell.shared.1;
        bad.rows[0][2] = twohead_letter(&m, cell);
        assert!(!verify_spacetime(&bad, &rule));
    }

    #[test]
    fn forbidden_count_matches_direct_enumeration() {
        let m = TMSpec::no_op();
        let rule = MachineRule::Tm(m);
        let a = rule.letter_count();
        // oracle: walk all 3x2 rectangles and count inconsistent ones
        let mut bad6 = 0usize;
        for l in 0..a as Letter {
            for mid in 0..a as Letter {
                for r in 0..a as Letter {
                    let valids = rule.valid_tops(l, mid, r);
                    bad6 += (a - valids.len()) * a * a;
                }
            }
        }
        let expect = 2 * (a - 1) + bad6;
        assert_eq!(rule.forbidden_count(), expect);
        // prefix enumeration agrees on a sample
        let prefix = rule.forbidden_prefix(50);
        assert_eq!(prefix.len(), 50);
        for p in &prefix {
            assert!(rule.scan(p));
        }
    }

    #[test]
    fn deterministic_uniqueness_small_windows() {
        // every admissible rectangle with the simulated bottom row equals the
        // simulated diagram (tape width 2, heights up to 3)
        let m = TMSpec::unary_successor();
        let rule = MachineRule::Tm(m.clone());
        let d = simulate_tm(&m, &[1, 0], 0, 0, 2).unwrap();
        assert!(verify_spacetime(&d, &rule));
        let a = rule.letter_count() as Letter;
        let w = d.width();
        let h = d.height();
        let mut found = 0usize;
        // enumerate the 4 interior cells (walls are pinned by the wall rules)
        let cells: Vec<(usize, usize)> =
            (1..h).flat_map(|y| (1..w - 1).map(move |x| (x, y))).collect();
        let total = (a as u64).pow(cells.len() as u32);
        for code in 0..total {
            let mut cand = d.clone();
            let mut c = code;
            for &(x, y) in &cells {
                cand.rows[y][x] = (c % a as u64) as Letter;
                c /= a as u64;
            }
            if verify_spacetime(&cand, &rule) {
                found += 1;
                assert_eq!(cand, d);
            }
        }
        assert_eq!(found, 1);
    }

    #[test]
    fn nca_soundness_completeness_small() {
        // admissible diagrams with a fixed bottom row == diagrams reachable
        // under some choice sequence
        let a = NCASpec::two_choice();
        let rule = MachineRule::Nca(a.clone());
        let input = [0u8, 1, 0, 1];
        let steps = 2;
        let mut reachable = std::collections::BTreeSet::new();
        // interior cells get free choices; enumerate all choice sequences
        let free = (input.len() - 2) * steps;
        for code in 0..(1u32 << free) {
            let seq: Vec<usize> = (0..free).map(|i| ((code >> i) & 1) as usize).collect();
            let d = simulate_nca(&a, &input, steps, &ChoiceOracle::Seq(seq)).unwrap();
            reachable.insert(d);
        }
        let base = simulate_nca(&a, &input, steps, &ChoiceOracle::First).unwrap();
        let cells: Vec<(usize, usize)> = (1..=steps)
            .flat_map(|y| (1..base.width() - 1).map(move |x| (x, y)))
            .collect();
        let letters = 1 + a.letters.len() as Letter;
        let mut admissible = std::collections::BTreeSet::new();
        let total = (letters as u64).pow(cells.len() as u32);
        for code in 0..total {
            let mut cand = base.clone();
            let mut c = code;
            for &(x, y) in &cells {
                cand.rows[y][x] = (c % letters as u64) as Letter;
                c /= letters as u64;
            }
            if verify_spacetime(&cand, &rule) {
                admissible.insert(cand);
            }
        }
        assert_eq!(admissible, reachable);
    }
}
