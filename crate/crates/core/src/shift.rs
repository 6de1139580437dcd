//! Alphabets, finite patterns, forbidden-pattern sets and bounded admissibility
//! search. Everything else in the crate is built on the types defined here.
//!
//! Patterns are sparse maps from grid positions to letter ids, so the support
//! does not have to be rectangular. Windows (rectangular carriers with an
//! origin) are a thin layer on top.
//!
//! Global admissibility is undecidable in general; [`admissible_with_margin`]
//! is the computable surrogate used throughout: a pattern is accepted when it
//! extends to a locally admissible rectangle enlarged by a margin on every
//! side, with an explicit `Inconclusive` outcome when the backtracking search
//! hits its node budget.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::compile::MachineRule;

pub type Letter = u8;
pub type Pos = (i32, i32);

/// Letter id conventions shared by the built-in shifts.
pub const WHITE: Letter = 0;
pub const BLACK: Letter = 1;
pub const RED: Letter = 2;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ShiftError {
    #[error("alphabet must be non-empty with unique names")]
    BadAlphabet,
    #[error("letter id {0} out of range")]
    BadLetter(Letter),
    #[error("pattern must have a rectangular support")]
    NotRectangular,
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    letters: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self, ShiftError> {
        let letters: Vec<String> = names.into_iter().map(Into::into).collect();
        let unique: BTreeSet<&String> = letters.iter().collect();
        if letters.is_empty() || unique.len() != letters.len() {
            return Err(ShiftError::BadAlphabet);
        }
        Ok(Alphabet { letters })
    }

    /// `{white, black}`, ids 0 and 1.
    pub fn binary() -> Self {
        Alphabet::new(vec!["white", "black"]).unwrap()
    }

    /// `{white, black, red}`, ids 0, 1 and 2.
    pub fn three() -> Self {
        Alphabet::new(vec!["white", "black", "red"]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, id: Letter) -> Option<&str> {
        self.letters.get(id as usize).map(|s| s.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<Letter> {
        self.letters.iter().position(|n| n == name).map(|i| i as Letter)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.letters.len() as Letter).map(move |i| i)
    }
}

/// A finite partial map from grid positions to letters.
/// Serialized as a list of `[x, y, letter]` triples.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    cells: BTreeMap<Pos, Letter>,
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let triples: Vec<(i32, i32, Letter)> =
            self.cells.iter().map(|(&(x, y), &l)| (x, y, l)).collect();
        triples.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let triples = Vec::<(i32, i32, Letter)>::deserialize(d)?;
        Ok(Pattern::from_cells(triples.into_iter().map(|(x, y, l)| ((x, y), l))))
    }
}

impl Pattern {
    pub fn new() -> Self {
        Pattern { cells: BTreeMap::new() }
    }

    pub fn from_cells<I: IntoIterator<Item = (Pos, Letter)>>(it: I) -> Self {
        Pattern { cells: it.into_iter().collect() }
    }

    /// Parse a picture, last line = row `y = 0`, `x` grows rightward.
    /// Glyphs: `.` white, `#` black, `r` red, digits for higher ids,
    /// space or `?` for a hole in the support.
    pub fn from_rows(rows: &[&str]) -> Self {
        let mut cells = BTreeMap::new();
        let h = rows.len();
        for (i, row) in rows.iter().enumerate() {
            let y = (h - 1 - i) as i32;
            for (x, ch) in row.chars().enumerate() {
                let letter = match ch {
                    '.' => WHITE,
                    '#' => BLACK,
                    'r' => RED,
                    ' ' | '?' => continue,
                    d if d.is_ascii_digit() => d as u8 - b'0',
                    other => panic!("bad glyph {other:?}"),
                };
                cells.insert((x as i32, y), letter);
            }
        }
        Pattern { cells }
    }

    /// Solid `w x h` rectangle anchored at the origin.
    pub fn rect(w: u32, h: u32, fill: Letter) -> Self {
        let mut cells = BTreeMap::new();
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                cells.insert((x, y), fill);
            }
        }
        Pattern { cells }
    }

    pub fn get(&self, pos: Pos) -> Option<Letter> {
        self.cells.get(&pos).copied()
    }

    pub fn set(&mut self, pos: Pos, letter: Letter) {
        self.cells.insert(pos, letter);
    }

    pub fn unset(&mut self, pos: Pos) {
        self.cells.remove(&pos);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pos, Letter)> + '_ {
        self.cells.iter().map(|(&p, &l)| (p, l))
    }

    pub fn support(&self) -> impl Iterator<Item = Pos> + '_ {
        self.cells.keys().copied()
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Self {
        Pattern {
            cells: self.cells.iter().map(|(&(x, y), &l)| ((x + dx, y + dy), l)).collect(),
        }
    }

    /// Translate so the bounding-box corner sits at the origin.
    pub fn normalized(&self) -> Self {
        match self.bounding_box() {
            Some(((x0, y0), _)) => self.translate(-x0, -y0),
            None => self.clone(),
        }
    }

    pub fn bounding_box(&self) -> Option<(Pos, Pos)> {
        let mut it = self.cells.keys();
        let &(x, y) = it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (x, y, x, y);
        for &(px, py) in self.cells.keys() {
            x0 = x0.min(px);
            x1 = x1.max(px);
            y0 = y0.min(py);
            y1 = y1.max(py);
        }
        Some(((x0, y0), (x1, y1)))
    }

    pub fn width(&self) -> u32 {
        self.bounding_box().map_or(0, |((x0, _), (x1, _))| (x1 - x0 + 1) as u32)
    }

    pub fn height(&self) -> u32 {
        self.bounding_box().map_or(0, |((_, y0), (_, y1))| (y1 - y0 + 1) as u32)
    }

    pub fn is_rectangular(&self) -> bool {
        self.len() as u64 == self.width() as u64 * self.height() as u64
    }

    pub fn count_letter(&self, letter: Letter) -> usize {
        self.cells.values().filter(|&&l| l == letter).count()
    }

    /// Union of two patterns with disjoint or agreeing supports.
    pub fn union(&self, other: &Pattern) -> Result<Pattern, ShiftError> {
        let mut cells = self.cells.clone();
        for (&p, &l) in &other.cells {
            if let Some(&prev) = cells.get(&p) {
                if prev != l {
                    return Err(ShiftError::Invalid(format!("conflicting letters at {p:?}")));
                }
            }
            cells.insert(p, l);
        }
        Ok(Pattern { cells })
    }

    /// Restriction to an inclusive rectangle.
    pub fn crop(&self, (x0, y0): Pos, (x1, y1): Pos) -> Pattern {
        Pattern {
            cells: self
                .cells
                .iter()
                .filter(|(&(x, y), _)| x >= x0 && x <= x1 && y >= y0 && y <= y1)
                .map(|(&p, &l)| (p, l))
                .collect(),
        }
    }
}

impl Default for Pattern {
    fn default() -> Self {
        Pattern::new()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(((x0, y0), (x1, y1))) = self.bounding_box() else {
            return write!(f, "(empty)");
        };
        for y in (y0..=y1).rev() {
            for x in x0..=x1 {
                let ch = match self.get((x, y)) {
                    None => ' ',
                    Some(WHITE) => '.',
                    Some(BLACK) => '#',
                    Some(RED) => 'r',
                    Some(d) => (b'0' + d) as char,
                };
                write!(f, "{ch}")?;
            }
            if y > y0 {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Rectangular carrier: an origin-anchored `w x h` pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub origin: Pos,
    pub width: u32,
    pub height: u32,
    pub contents: Pattern,
}

impl Window {
    pub fn new(origin: Pos, width: u32, height: u32, contents: Pattern) -> Result<Self, ShiftError> {
        let expect = width as usize * height as usize;
        if contents.len() != expect {
            return Err(ShiftError::NotRectangular);
        }
        for y in 0..height as i32 {
            for x in 0..width as i32 {
                if contents.get((origin.0 + x, origin.1 + y)).is_none() {
                    return Err(ShiftError::NotRectangular);
                }
            }
        }
        Ok(Window { origin, width, height, contents })
    }
}

/// Does some translate of `query` lie inside `host` with matching letters?
pub fn occurs(host: &Pattern, query: &Pattern) -> bool {
    if query.is_empty() {
        return true;
    }
    if query.len() > host.len() {
        return false;
    }
    let q = query.normalized();
    let qcells: Vec<(Pos, Letter)> = q.iter().collect();
    let (q0, l0) = qcells[0];
    // anchor the first query cell on every compatible host cell
    for (hpos, hletter) in host.iter() {
        if hletter != l0 {
            continue;
        }
        let dx = hpos.0 - q0.0;
        let dy = hpos.1 - q0.1;
        let ok = qcells
            .iter()
            .all(|&((x, y), l)| host.get((x + dx, y + dy)) == Some(l));
        if ok {
            return true;
        }
    }
    false
}

/// Whether windows are cut along one row (`1 x n`) or as squares (`n x n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
}

/// Indexed deterministic enumerators of forbidden patterns for the shifts that
/// need infinitely many of them. `nth` fixes the enumeration order once and
/// for all; `scan` is the exact occurrence test used where a window-complete
/// answer is needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// Two black cells on one row separated by an odd number of whites.
    OddGapPairs,
    /// 1D mirror shift on `{white, black, red}`: two reds in one row, or a
    /// red with asymmetric flanks.
    Mirror1d,
    /// 2D mirror shift: at most one full red row, and the half-planes above
    /// and below it mirror images of each other.
    Mirror2d,
    /// Semi-mirror: black below the red line forces black above.
    SemiMirror2d,
    /// Squares (side >= 2) with an all-red top row and an all-black bottom
    /// row; the interior is unconstrained, so the support is just those two
    /// rows.
    HiddenSquare,
    /// Squares with more black cells than allowed by a density exponent
    /// `eps = p/q` evaluated at a fixed approximation index.
    Density(crate::sparse::DensityBound),
    /// 3x2 space-time consistency rules compiled from a machine.
    SpaceTime(MachineRule),
}

impl Generator {
    /// The `i`-th forbidden pattern, if the enumeration is still going.
    pub fn nth(&self, i: usize) -> Option<Pattern> {
        match self {
            Generator::OddGapPairs => {
                // gap 1, 3, 5, ...
                let gap = 2 * i as i32 + 1;
                let mut p = Pattern::new();
                p.set((0, 0), BLACK);
                for g in 1..=gap {
                    p.set((g, 0), WHITE);
                }
                p.set((gap + 1, 0), BLACK);
                Some(p)
            }
            Generator::Mirror1d => mirror_nth(i, Dim::One),
            Generator::Mirror2d => mirror_nth(i, Dim::Two),
            Generator::SemiMirror2d => semi_mirror_nth(i),
            Generator::HiddenSquare => {
                let k = i as i32 + 2;
                let mut p = Pattern::new();
                for x in 0..k {
                    p.set((x, 0), BLACK);
                    p.set((x, k - 1), RED);
                }
                Some(p)
            }
            Generator::Density(b) => b.nth(i),
            Generator::SpaceTime(rule) => rule.nth_forbidden(i),
        }
    }

    pub fn enumerate(&self, budget: usize) -> Vec<Pattern> {
        match self {
            // single pass; nth would re-walk the rectangle codes every call
            Generator::SpaceTime(rule) => rule.forbidden_prefix(budget),
            _ => (0..budget).map_while(|i| self.nth(i)).collect(),
        }
    }

    /// Index bound that covers every forbidden pattern fitting in a `w x h`
    /// window, so budgeted admissibility is window-exact.
    pub fn budget_for_window(&self, w: u32, h: u32) -> usize {
        let d = w.max(h) as usize;
        match self {
            Generator::OddGapPairs => d / 2 + 1,
            Generator::Mirror1d | Generator::Mirror2d => 4 * d * d + 4 * d + 8,
            Generator::SemiMirror2d => 2 * d * d + 4 * d + 8,
            Generator::HiddenSquare => d.saturating_sub(1),
            Generator::Density(b) => b.budget_for_window(w, h),
            Generator::SpaceTime(rule) => rule.forbidden_count(),
        }
    }

    /// Exact check: does any forbidden pattern of this generator occur in `p`?
    pub fn scan(&self, p: &Pattern) -> bool {
        match self {
            Generator::OddGapPairs => scan_odd_gap(p),
            Generator::Mirror1d | Generator::Mirror2d => scan_mirror(p, false),
            Generator::SemiMirror2d => scan_mirror(p, true),
            Generator::HiddenSquare => !crate::epitomes::hidden_square_free(p),
            Generator::Density(b) => b.scan(p),
            Generator::SpaceTime(rule) => rule.scan(p),
        }
    }
}

fn mirror_nth(i: usize, dim: Dim) -> Option<Pattern> {
    // Interleave three families:
    //   0: two reds in one column at distance d (2D) / two reds in one row (1D)
    //   1: red next to a non-red on one row (reds form full rows; 2D only)
    //   2: red with asymmetric flanks at distance d
    let fam = i % 4;
    let j = i / 4;
    match (fam, dim) {
        (0, Dim::Two) => {
            let d = j as i32 + 1;
            Some(Pattern::from_cells([((0, 0), RED), ((0, d), RED)]))
        }
        (0, Dim::One) => {
            let d = j as i32 + 1;
            Some(Pattern::from_cells([((0, 0), RED), ((d, 0), RED)]))
        }
        (1, Dim::Two) => {
            let b = if j % 2 == 0 { WHITE } else { BLACK };
            if j < 4 {
                let (l, r) = if j < 2 { (RED, b) } else { (b, RED) };
                Some(Pattern::from_cells([((0, 0), l), ((1, 0), r)]))
            } else {
                None
            }
        }
        (1, Dim::One) => None,
        (_, dim) => {
            // asymmetric flanks: a at -d, red at 0, b at +d with a != b
            let (j2, d0) = (j % 2, j / 2);
            let d = d0 as i32 + 1;
            let (a, b) = if j2 == 0 { (BLACK, WHITE) } else { (WHITE, BLACK) };
            let axis = |k: i32| -> Pos {
                match dim {
                    Dim::One => (k, 0),
                    Dim::Two => (0, k),
                }
            };
            Some(Pattern::from_cells([(axis(-d), a), ((0, 0), RED), (axis(d), b)]))
        }
    }
}

fn semi_mirror_nth(i: usize) -> Option<Pattern> {
    let fam = i % 3;
    let j = i / 3;
    match fam {
        0 => {
            let d = j as i32 + 1;
            Some(Pattern::from_cells([((0, 0), RED), ((0, d), RED)]))
        }
        1 => {
            if j < 4 {
                let b = if j % 2 == 0 { WHITE } else { BLACK };
                let (l, r) = if j < 2 { (RED, b) } else { (b, RED) };
                Some(Pattern::from_cells([((0, 0), l), ((1, 0), r)]))
            } else {
                None
            }
        }
        _ => {
            // black below the line without black above
            let d = j as i32 + 1;
            Some(Pattern::from_cells([((0, -d), BLACK), ((0, 0), RED), ((0, d), WHITE)]))
        }
    }
}

fn scan_odd_gap(p: &Pattern) -> bool {
    let blacks: Vec<Pos> = p.iter().filter(|&(_, l)| l == BLACK).map(|(q, _)| q).collect();
    for &(x, y) in &blacks {
        for &(x2, y2) in &blacks {
            if y2 != y || x2 <= x {
                continue;
            }
            let gap = x2 - x - 1;
            if gap % 2 == 1 && (x + 1..x2).all(|u| p.get((u, y)) == Some(WHITE)) {
                return true;
            }
        }
    }
    false
}

fn scan_mirror(p: &Pattern, semi: bool) -> bool {
    let reds: Vec<Pos> = p.iter().filter(|&(_, l)| l == RED).map(|(q, _)| q).collect();
    for &(x, y) in &reds {
        // another red in the same column
        if reds.iter().any(|&(x2, y2)| x2 == x && y2 != y) {
            return true;
        }
        // reds must sit on full red rows
        for nx in [x - 1, x + 1] {
            if let Some(l) = p.get((nx, y)) {
                if l != RED {
                    return true;
                }
            }
        }
        // symmetry across the red row
        let mut d = 1;
        loop {
            let above = p.get((x, y + d));
            let below = p.get((x, y - d));
            match (above, below) {
                (Some(a), Some(b)) if a != RED && b != RED => {
                    let bad = if semi { b == BLACK && a != BLACK } else { a != b };
                    if bad {
                        return true;
                    }
                }
                (None, None) => break,
                _ => {}
            }
            d += 1;
            if d > 4096 {
                break;
            }
        }
    }
    false
}

/// Forbidden-pattern store: an explicit finite list or an indexed generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Forbidden {
    Explicit(Vec<Pattern>),
    Generator(Generator),
}

/// A shift given by its alphabet and forbidden patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub alphabet: Alphabet,
    pub forbidden: Forbidden,
    pub dims: Dim,
}

impl ShiftSpec {
    pub fn explicit(alphabet: Alphabet, patterns: Vec<Pattern>, dims: Dim) -> Self {
        // dedup up to translation
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for p in patterns {
            let n = p.normalized();
            if seen.insert(n.clone()) {
                list.push(n);
            }
        }
        ShiftSpec { alphabet, forbidden: Forbidden::Explicit(list), dims }
    }

    pub fn generated(alphabet: Alphabet, generator: Generator, dims: Dim) -> Self {
        ShiftSpec { alphabet, forbidden: Forbidden::Generator(generator), dims }
    }

    /// The full binary shift: no forbidden patterns.
    pub fn full_binary() -> Self {
        ShiftSpec::explicit(Alphabet::binary(), vec![], Dim::Two)
    }

    /// `S1`: one forbidden pattern, two horizontally adjacent blacks.
    pub fn s1(dims: Dim) -> Self {
        ShiftSpec::explicit(
            Alphabet::binary(),
            vec![Pattern::from_cells([((0, 0), BLACK), ((1, 0), BLACK)])],
            dims,
        )
    }

    /// `S2`: pairs of blacks separated by an odd number of whites.
    pub fn s2() -> Self {
        ShiftSpec::generated(Alphabet::binary(), Generator::OddGapPairs, Dim::One)
    }

    /// Black rectangles on a white background: four forbidden corner shapes.
    pub fn rectangles() -> Self {
        let ps = vec![
            Pattern::from_cells([((0, 0), BLACK), ((1, 1), BLACK), ((0, 1), WHITE)]),
            Pattern::from_cells([((0, 0), BLACK), ((1, 1), BLACK), ((1, 0), WHITE)]),
            Pattern::from_cells([((0, 1), BLACK), ((1, 0), BLACK), ((0, 0), WHITE)]),
            Pattern::from_cells([((0, 1), BLACK), ((1, 0), BLACK), ((1, 1), WHITE)]),
        ];
        ShiftSpec::explicit(Alphabet::binary(), ps, Dim::Two)
    }

    pub fn mirror_1d() -> Self {
        ShiftSpec::generated(Alphabet::three(), Generator::Mirror1d, Dim::One)
    }

    pub fn mirror_2d() -> Self {
        ShiftSpec::generated(Alphabet::three(), Generator::Mirror2d, Dim::Two)
    }

    pub fn semi_mirror_2d() -> Self {
        ShiftSpec::generated(Alphabet::three(), Generator::SemiMirror2d, Dim::Two)
    }

    /// Kass-Madden shift: no hidden red-and-black squares.
    pub fn hidden_square() -> Self {
        ShiftSpec::generated(Alphabet::three(), Generator::HiddenSquare, Dim::Two)
    }

    /// Forbidden patterns visible under the given budget (explicit lists
    /// ignore the budget).
    pub fn forbidden_within(&self, budget: usize) -> Vec<Pattern> {
        match &self.forbidden {
            Forbidden::Explicit(v) => v.clone(),
            Forbidden::Generator(g) => g.enumerate(budget),
        }
    }

    /// Budget covering every forbidden pattern that fits a `w x h` window.
    pub fn window_budget(&self, w: u32, h: u32) -> usize {
        match &self.forbidden {
            Forbidden::Explicit(v) => v.len(),
            Forbidden::Generator(g) => g.budget_for_window(w, h),
        }
    }

    /// Exact local admissibility (window-complete, independent of budgets).
    pub fn admits_window(&self, p: &Pattern) -> bool {
        match &self.forbidden {
            Forbidden::Explicit(v) => v.iter().all(|f| !occurs(p, f)),
            Forbidden::Generator(g) => !g.scan(p),
        }
    }
}

/// True iff no enumerated forbidden pattern occurs in `p`.
pub fn locally_admissible(p: &Pattern, spec: &ShiftSpec, generator_budget: usize) -> bool {
    spec.forbidden_within(generator_budget).iter().all(|f| !occurs(p, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admissibility {
    Admissible,
    NotAdmissible,
    /// The search hit its node budget before deciding.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_nodes: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_nodes: 2_000_000 }
    }
}

/// Backtracking extension search: does `p` extend to a locally admissible
/// rectangle enlarged by `margin` cells on every side?
pub fn admissible_with_margin(
    p: &Pattern,
    spec: &ShiftSpec,
    margin: u32,
    generator_budget: usize,
    limits: SearchLimits,
) -> Result<Admissibility, ShiftError> {
    if !p.is_rectangular() || p.is_empty() {
        return Err(ShiftError::NotRectangular);
    }
    let forbidden: Vec<Pattern> = spec
        .forbidden_within(generator_budget)
        .iter()
        .map(|f| f.normalized())
        .collect();
    let ((x0, y0), (x1, y1)) = p.bounding_box().unwrap();
    let m = margin as i32;
    let (ex0, ex1) = (x0 - m, x1 + m);
    let (ey0, ey1) = match spec.dims {
        Dim::One => (y0, y1),
        Dim::Two => (y0 - m, y1 + m),
    };

    let mut board = p.clone();
    if !forbidden.iter().all(|f| !occurs(&board, f)) {
        return Ok(Admissibility::NotAdmissible);
    }

    let mut free: Vec<Pos> = Vec::new();
    for y in ey0..=ey1 {
        for x in ex0..=ex1 {
            if board.get((x, y)).is_none() {
                free.push((x, y));
            }
        }
    }

    let letters: Vec<Letter> = spec.alphabet.letters().collect();
    let mut nodes: u64 = 0;
    let verdict = extend_rec(&mut board, &free, 0, &forbidden, &letters, &mut nodes, limits.max_nodes);
    Ok(match verdict {
        Some(true) => Admissibility::Admissible,
        Some(false) => Admissibility::NotAdmissible,
        None => Admissibility::Inconclusive,
    })
}

fn extend_rec(
    board: &mut Pattern,
    free: &[Pos],
    idx: usize,
    forbidden: &[Pattern],
    letters: &[Letter],
    nodes: &mut u64,
    max_nodes: u64,
) -> Option<bool> {
    if idx == free.len() {
        return Some(true);
    }
    let pos = free[idx];
    let mut hit_limit = false;
    for &l in letters {
        *nodes += 1;
        if *nodes > max_nodes {
            return None;
        }
        board.set(pos, l);
        if no_violation_at(board, pos, forbidden) {
            match extend_rec(board, free, idx + 1, forbidden, letters, nodes, max_nodes) {
                Some(true) => {
                    board.unset(pos);
                    return Some(true);
                }
                Some(false) => {}
                None => hit_limit = true,
            }
        }
        board.unset(pos);
        if hit_limit {
            return None;
        }
    }
    Some(false)
}

/// Check only placements of forbidden patterns that cover `pos` and are fully
/// assigned; sound for incremental search.
fn no_violation_at(board: &Pattern, pos: Pos, forbidden: &[Pattern]) -> bool {
    for f in forbidden {
        for (fp, _) in f.iter() {
            let dx = pos.0 - fp.0;
            let dy = pos.1 - fp.1;
            let mut all = true;
            for ((fx, fy), fl) in f.iter() {
                match board.get((fx + dx, fy + dy)) {
                    Some(l) if l == fl => {}
                    Some(_) => {
                        all = false;
                        break;
                    }
                    None => {
                        all = false;
                        break;
                    }
                }
            }
            if all {
                return false;
            }
        }
    }
    true
}

/// Result of a count that may be blurred by inconclusive sub-searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountResult {
    Exact(u64),
    /// `at_least ..= at_most`
    Range(u64, u64),
}

impl CountResult {
    pub fn exact(self) -> Option<u64> {
        match self {
            CountResult::Exact(n) => Some(n),
            CountResult::Range(_, _) => None,
        }
    }
}

/// Number of distinct `n x n` (or `1 x n`) patterns passing
/// [`admissible_with_margin`].
pub fn block_complexity(
    spec: &ShiftSpec,
    n: u32,
    margin: u32,
    generator_budget: usize,
    limits: SearchLimits,
) -> Result<CountResult, ShiftError> {
    let (w, h) = match spec.dims {
        Dim::One => (n, 1),
        Dim::Two => (n, n),
    };
    let cells = (w * h) as u32;
    let a = spec.alphabet.len() as u64;
    let total = a.checked_pow(cells).ok_or_else(|| ShiftError::TooLarge("window".into()))?;
    if total > 50_000_000 {
        return Err(ShiftError::TooLarge(format!("{total} windows")));
    }
    let mut lo = 0u64;
    let mut hi = 0u64;
    for code in 0..total {
        let mut c = code;
        let mut p = Pattern::new();
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                p.set((x, y), (c % a) as Letter);
                c /= a;
            }
        }
        match admissible_with_margin(&p, spec, margin, generator_budget, limits)? {
            Admissibility::Admissible => {
                lo += 1;
                hi += 1;
            }
            Admissibility::NotAdmissible => {}
            Admissibility::Inconclusive => hi += 1,
        }
    }
    Ok(if lo == hi { CountResult::Exact(lo) } else { CountResult::Range(lo, hi) })
}

/// Enumerate every assignment of a `w x h` window, in row-major lex order.
pub fn all_windows(alphabet: &Alphabet, w: u32, h: u32) -> impl Iterator<Item = Pattern> + '_ {
    let a = alphabet.len() as u64;
    let cells = w * h;
    let total = a.pow(cells);
    (0..total).map(move |code| {
        let mut c = code;
        let mut p = Pattern::new();
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                p.set((x, y), (c % a) as Letter);
                c /= a;
            }
        }
        p
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adm(p: &Pattern, spec: &ShiftSpec, margin: u32) -> Admissibility {
        let budget = spec.window_budget(p.width() + 2 * margin, p.height() + 2 * margin);
        admissible_with_margin(p, spec, margin, budget, SearchLimits::default()).unwrap()
    }

    #[test]
    fn occurs_single_cell() {
        let host = Pattern::rect(3, 3, WHITE);
        assert!(occurs(&host, &Pattern::rect(1, 1, WHITE)));
        assert!(!occurs(&host, &Pattern::rect(1, 1, BLACK)));
    }

    #[test]
    fn occurs_word_scan() {
        let host = Pattern::from_rows(&["..#.#"]);
        let query = Pattern::from_rows(&["#.#"]);
        assert!(occurs(&host, &query));
        let query2 = Pattern::from_rows(&["##"]);
        assert!(!occurs(&host, &query2));
    }

    #[test]
    fn occurs_translation_invariant_spot() {
        let host = Pattern::from_rows(&[".#.", "#.#"]);
        let query = Pattern::from_rows(&["#.#"]);
        assert!(occurs(&host, &query));
        assert!(occurs(&host.translate(7, -3), &query));
        assert!(occurs(&host, &query.translate(-2, 5)));
    }

    #[test]
    fn locally_admissible_s1_s2() {
        let s1 = ShiftSpec::s1(Dim::One);
        assert!(!locally_admissible(&Pattern::from_rows(&["##"]), &s1, 0));
        assert!(locally_admissible(&Pattern::from_rows(&[".."]), &s1, 0));
        let s2 = ShiftSpec::s2();
        assert!(!locally_admissible(&Pattern::from_rows(&["#.#"]), &s2, 1));
        // budget 0 enumerates nothing, so the same pattern passes
        assert!(locally_admissible(&Pattern::from_rows(&["#.#"]), &s2, 0));
    }

    #[test]
    fn margin_search_examples() {
        let s1 = ShiftSpec::s1(Dim::Two);
        let black = Pattern::rect(1, 1, BLACK);
        assert_eq!(adm(&black, &s1, 2), Admissibility::Admissible);
        let bb = Pattern::from_rows(&["##"]);
        assert_eq!(adm(&bb, &s1, 1), Admissibility::NotAdmissible);
        let rects = ShiftSpec::rectangles();
        let sq = Pattern::rect(2, 2, BLACK);
        assert_eq!(adm(&sq, &rects, 1), Admissibility::Admissible);
    }

    #[test]
    fn margin_antitone_spot() {
        // only the pair "white black" is allowed horizontally, so a black
        // cell is locally fine but admits no right neighbour at all
        let spec = ShiftSpec::explicit(
            Alphabet::binary(),
            vec![
                Pattern::from_rows(&[".."]),
                Pattern::from_rows(&["##"]),
                Pattern::from_rows(&["#."]),
            ],
            Dim::One,
        );
        let b = Pattern::rect(1, 1, BLACK);
        assert_eq!(adm(&b, &spec, 0), Admissibility::Admissible);
        assert_eq!(adm(&b, &spec, 1), Admissibility::NotAdmissible);
        // antitone on a richer spec: admissible at a larger margin implies
        // admissible at a smaller one
        let rects = ShiftSpec::rectangles();
        for p in all_windows(&Alphabet::binary(), 2, 2) {
            let big = adm(&p, &rects, 2);
            if big == Admissibility::Admissible {
                assert_eq!(adm(&p, &rects, 1), Admissibility::Admissible);
                assert_eq!(adm(&p, &rects, 0), Admissibility::Admissible);
            }
        }
    }

    #[test]
    fn block_complexity_examples() {
        let full = ShiftSpec::full_binary();
        let c = block_complexity(&full, 2, 1, 0, SearchLimits::default()).unwrap();
        assert_eq!(c, CountResult::Exact(16));

        let s1 = ShiftSpec::s1(Dim::One);
        let c = block_complexity(&s1, 2, 2, 0, SearchLimits::default()).unwrap();
        assert_eq!(c, CountResult::Exact(3));
    }

    #[test]
    fn block_complexity_s2_margin4() {
        // brute-force oracle: admissible length-3 words are all words except
        // the odd-gap pair #.#, and each extends with margin 4
        let s2 = ShiftSpec::s2();
        let budget = s2.window_budget(3 + 8, 1);
        let c = block_complexity(&s2, 3, 4, budget, SearchLimits::default()).unwrap();
        assert_eq!(c, CountResult::Exact(7));
    }

    #[test]
    fn display_round_trip() {
        let p = Pattern::from_rows(&["r..", ".#."]);
        let shown = format!("{p}");
        assert_eq!(shown, "r..\n.#.");
    }

    #[test]
    fn window_checks_rectangularity() {
        let ok = Window::new((0, 0), 2, 1, Pattern::from_rows(&[".#"]));
        assert!(ok.is_ok());
        let bad = Window::new((0, 0), 2, 2, Pattern::from_rows(&[".#"]));
        assert!(bad.is_err());
    }
}
