//! The enhanced cellular-automaton computing model: a tape of cells that are
//! principal (numbered head-like cells, globally visible), secondary
//! (unboundedly many independent helpers) or inactive, with an internal state
//! known to every cell and "jump" signals that relocate a principal to the
//! nearest secondary in one macro step.
//!
//! Every cell update depends only on the cell's own content, the internal
//! state, and the principal observations; the jump is the one nonlocal-looking
//! primitive and is charged as a single step (its wire length is logged for
//! diagnostics). Although the underlying relation is nondeterministic, every
//! run here is a deterministic function of its input, which is what the
//! determinism tests pin down.
//!
//! The list-search routine follows the signal-jump plan: a lockstep prefix
//! match, a walk-back of the survivors to their element-start marks, and a
//! constant number of jumps. List identity is carried by the element-start
//! marks (one mark per list), which is how the two-matches-in-one-list error
//! is recognized. The measured step count is at most `2q + 8`, published as
//! `LIST_SEARCH_STEP_FACTOR` times `q`.

use serde::{Deserialize, Serialize};

use crate::flow::Dir;

pub type MarkId = u16;

/// Marks used by the standalone list layout: a query element, `k` lists with
/// per-list element marks, and the end cell.
pub mod marks {
    use super::MarkId;

    pub const INPUT_START: MarkId = 1;
    pub const QUERY_END: MarkId = 2;
    pub const INPUT_END: MarkId = 3;

    pub fn elem_start(list: usize) -> MarkId {
        100 + 2 * list as MarkId
    }

    pub fn elem_end(list: usize) -> MarkId {
        101 + 2 * list as MarkId
    }

    pub fn list_of_elem_start(mark: MarkId) -> Option<usize> {
        if mark >= 100 && mark % 2 == 0 {
            Some(((mark - 100) / 2) as usize)
        } else {
            None
        }
    }
}

/// The sparse-module deployment catalog: field delimiters and element
/// delimiters per side, plus the left Field-5 interior mark. Exactly 75
/// marks.
pub fn sparse_mark_catalog() -> Vec<MarkId> {
    let mut out = Vec::new();
    let mut next: MarkId = 1000;
    let push = |n: usize, out: &mut Vec<MarkId>, next: &mut MarkId| {
        for _ in 0..n {
            out.push(*next);
            *next += 1;
        }
    };
    push(2, &mut out, &mut next); // field 2 start/end
    push(2 * 2 * 4, &mut out, &mut next); // fields 3 and 4, per side
    push(4 * 4 + 1, &mut out, &mut next); // field 5 incl. the left interior mark
    push(4 * 4, &mut out, &mut next); // field 6
    push(2 * 4, &mut out, &mut next); // field 7
    push(4 * 4, &mut out, &mut next); // field 8
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activity {
    Principal(u8),
    Secondary,
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub id: u8,
    pub dir: Dir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub bit: u8,
    pub mark: Option<MarkId>,
    pub activity: Activity,
    /// Transient jump-signal decoration; the local consistency rule flags
    /// contradictory neighbours.
    pub signal: Option<Signal>,
}

impl Cell {
    pub fn plain(bit: u8) -> Self {
        Cell { bit, mark: None, activity: Activity::Inactive, signal: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VmError {
    NoSecondaryFound { id: u8, dir: Dir },
    PrincipalCountBroken,
    ContradictorySignals { at: usize },
    OffTape,
    MalformedInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VMState {
    pub cells: Vec<Cell>,
    pub internal: u32,
    pub k: u8,
    pub step: u64,
    pub error: Option<VmError>,
    /// Wire lengths of the jumps taken, in order.
    pub wires: Vec<u32>,
}

/// One-step programs for the externally driven interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Program {
    NoOp,
    Move { id: u8, dir: Dir },
}

impl VMState {
    pub fn new(cells: Vec<Cell>, k: u8) -> Self {
        VMState { cells, internal: 0, k, step: 0, error: None, wires: Vec::new() }
    }

    pub fn principal_pos(&self, id: u8) -> Option<usize> {
        self.cells
            .iter()
            .position(|c| c.activity == Activity::Principal(id))
    }

    fn principal_ids(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self
            .cells
            .iter()
            .filter_map(|c| match c.activity {
                Activity::Principal(i) => Some(i),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Conservation check: exactly `k` principals with distinct ids 1..=k.
    pub fn principals_ok(&self) -> bool {
        let ids = self.principal_ids();
        ids.len() == self.k as usize
            && ids.iter().enumerate().all(|(i, &id)| id == i as u8 + 1)
    }

    fn charge(&mut self) {
        self.step += 1;
    }

    fn check_invariants(&mut self) {
        if self.error.is_some() {
            return;
        }
        // neighbouring inactive cells with contradictory signals
        for i in 0..self.cells.len().saturating_sub(1) {
            let (a, b) = (&self.cells[i], &self.cells[i + 1]);
            if a.activity == Activity::Inactive && b.activity == Activity::Inactive {
                if let (Some(sa), Some(sb)) = (a.signal, b.signal) {
                    if sa != sb {
                        self.error = Some(VmError::ContradictorySignals { at: i });
                        return;
                    }
                }
            }
        }
        if !self.principals_ok() {
            self.error = Some(VmError::PrincipalCountBroken);
        }
    }

    /// Synchronous step under a one-step program; errors are absorbing.
    pub fn step(&mut self, program: Program) {
        if self.error.is_some() {
            return;
        }
        self.check_invariants();
        if self.error.is_some() {
            return;
        }
        self.charge();
        match program {
            Program::NoOp => {}
            Program::Move { id, dir } => {
                let Some(pos) = self.principal_pos(id) else {
                    self.error = Some(VmError::PrincipalCountBroken);
                    return;
                };
                let next = match dir {
                    Dir::Left => pos.checked_sub(1),
                    Dir::Right => (pos + 1 < self.cells.len()).then_some(pos + 1),
                    _ => None,
                };
                let Some(next) = next else {
                    self.error = Some(VmError::OffTape);
                    return;
                };
                self.cells[pos].activity = Activity::Secondary;
                self.cells[next].activity = Activity::Principal(id);
            }
        }
        self.check_invariants();
    }

    /// Jump: the nearest secondary in the given direction becomes the
    /// principal; the old principal's cell takes `old_becomes`. One macro
    /// step; the wire length is logged. No secondary reachable sets the
    /// error flag (the "not found" sentinel).
    pub fn jump(&mut self, id: u8, dir: Dir, old_becomes: Activity) {
        if self.error.is_some() {
            return;
        }
        self.charge();
        let Some(pos) = self.principal_pos(id) else {
            self.error = Some(VmError::PrincipalCountBroken);
            return;
        };
        let mut at = pos as isize;
        let delta: isize = match dir {
            Dir::Left => -1,
            Dir::Right => 1,
            _ => {
                self.error = Some(VmError::OffTape);
                return;
            }
        };
        loop {
            at += delta;
            if at < 0 || at as usize >= self.cells.len() {
                self.error = Some(VmError::NoSecondaryFound { id, dir });
                return;
            }
            if self.cells[at as usize].activity == Activity::Secondary {
                break;
            }
        }
        self.cells[pos].activity = old_becomes;
        self.cells[at as usize].activity = Activity::Principal(id);
        self.wires.push(pos.abs_diff(at as usize) as u32);
        self.check_invariants();
    }

    /// Lockstep comparison micro-step of the match phase: every secondary
    /// whose bit differs from the observed principal bit deactivates, the
    /// rest move right together with the principal (the end cell, marked
    /// `INPUT_END`, never moves).
    fn lockstep_match(&mut self, advance: bool) {
        if self.error.is_some() {
            return;
        }
        self.charge();
        let pos = match self.principal_pos(1) {
            Some(p) => p,
            None => {
                self.error = Some(VmError::PrincipalCountBroken);
                return;
            }
        };
        let observed = self.cells[pos].bit;
        let len = self.cells.len();
        let mut next_secondary = vec![false; len];
        for i in 0..len {
            if self.cells[i].activity != Activity::Secondary {
                continue;
            }
            if self.cells[i].mark == Some(marks::INPUT_END) {
                next_secondary[i] = true;
                continue;
            }
            if self.cells[i].bit != observed {
                continue; // deactivates
            }
            if advance {
                if i + 1 < len {
                    next_secondary[i + 1] = true;
                }
            } else {
                next_secondary[i] = true;
            }
        }
        for i in 0..len {
            if self.cells[i].activity == Activity::Secondary {
                self.cells[i].activity = Activity::Inactive;
            }
        }
        for (i, &s) in next_secondary.iter().enumerate() {
            if s {
                self.cells[i].activity = Activity::Secondary;
            }
        }
        if advance {
            if pos + 1 >= len {
                self.error = Some(VmError::OffTape);
                return;
            }
            self.cells[pos].activity = Activity::Inactive;
            self.cells[pos + 1].activity = Activity::Principal(1);
        }
        self.check_invariants();
    }

    /// Walk-back micro-step: every secondary not sitting on an element-start
    /// mark (and not the end cell) moves one cell left, in lockstep.
    fn walk_back_once(&mut self) {
        if self.error.is_some() {
            return;
        }
        self.charge();
        let len = self.cells.len();
        let mut next_secondary = vec![false; len];
        for i in 0..len {
            if self.cells[i].activity != Activity::Secondary {
                continue;
            }
            let stays = self.cells[i].mark == Some(marks::INPUT_END)
                || self.cells[i]
                    .mark
                    .is_some_and(|m| marks::list_of_elem_start(m).is_some());
            if stays {
                next_secondary[i] = true;
            } else if i > 0 {
                next_secondary[i - 1] = true;
            }
        }
        for i in 0..len {
            if self.cells[i].activity == Activity::Secondary {
                self.cells[i].activity = Activity::Inactive;
            }
        }
        for (i, &s) in next_secondary.iter().enumerate() {
            if s {
                self.cells[i].activity = Activity::Secondary;
            }
        }
        self.check_invariants();
    }
}

/// Input layout for the list-search run: a query of `q` bits and `k` lists of
/// fixed-width elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListLayout {
    pub query: Vec<u8>,
    pub lists: Vec<Vec<Vec<u8>>>,
}

impl ListLayout {
    pub fn q(&self) -> usize {
        self.query.len()
    }

    /// Raw delimiter-detectable tape: each payload bit is the token `(0, b)`,
    /// element boundaries `(1, 0)`, list boundaries `(1, 0)(1, 0)`, and the
    /// end token `(1, 1)`.
    pub fn encode_raw(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let put_bits = |out: &mut Vec<u8>, bits: &[u8]| {
            for &b in bits {
                out.push(0);
                out.push(b);
            }
        };
        put_bits(&mut out, &self.query);
        for list in &self.lists {
            out.push(1);
            out.push(0);
            out.push(1);
            out.push(0);
            for (i, e) in list.iter().enumerate() {
                if i > 0 {
                    out.push(1);
                    out.push(0);
                }
                put_bits(&mut out, e);
            }
        }
        out.push(1);
        out.push(1);
        out
    }

    pub fn decode_raw(raw: &[u8]) -> Result<ListLayout, VmError> {
        let mut tokens = Vec::new();
        if raw.len() % 2 != 0 {
            return Err(VmError::MalformedInput);
        }
        for pair in raw.chunks(2) {
            tokens.push((pair[0], pair[1]));
        }
        if tokens.pop() != Some((1, 1)) {
            return Err(VmError::MalformedInput);
        }
        // split on single and double separators
        let mut groups: Vec<Vec<Vec<u8>>> = vec![vec![Vec::new()]];
        let mut i = 0;
        while i < tokens.len() {
            match tokens[i] {
                (0, b) => {
                    groups.last_mut().unwrap().last_mut().unwrap().push(b);
                    i += 1;
                }
                (1, 0) => {
                    if tokens.get(i + 1) == Some(&(1, 0)) {
                        groups.push(vec![Vec::new()]);
                        i += 2;
                    } else {
                        groups.last_mut().unwrap().push(Vec::new());
                        i += 1;
                    }
                }
                _ => return Err(VmError::MalformedInput),
            }
        }
        if groups.is_empty() || groups[0].len() != 1 {
            return Err(VmError::MalformedInput);
        }
        let query = groups.remove(0).remove(0);
        if query.is_empty() {
            return Err(VmError::MalformedInput);
        }
        // a lone empty element is how an empty list reads back (elements are
        // never empty, so this is unambiguous)
        let lists = groups
            .into_iter()
            .map(|g| if g.len() == 1 && g[0].is_empty() { Vec::new() } else { g })
            .collect();
        Ok(ListLayout { query, lists })
    }
}

/// Initialize the marked tape by sweeping the raw delimiter-detectable input
/// once; the sweep costs one step per raw cell, comfortably inside the `5q`
/// budget.
pub fn init_marks(layout: &ListLayout) -> Result<(VMState, u64), VmError> {
    let raw = layout.encode_raw();
    // the sweep validates the encoding
    let decoded = ListLayout::decode_raw(&raw)?;
    if &decoded != layout {
        return Err(VmError::MalformedInput);
    }
    let sweep_steps = raw.len() as u64;
    let q = layout.q();
    if layout.query.is_empty() {
        return Err(VmError::MalformedInput);
    }
    for list in &layout.lists {
        for e in list {
            if e.len() < q {
                return Err(VmError::MalformedInput);
            }
        }
    }
    let mut cells: Vec<Cell> = Vec::new();
    for (i, &b) in layout.query.iter().enumerate() {
        let mut c = Cell::plain(b);
        if i == 0 {
            c.mark = Some(marks::INPUT_START);
        }
        if i + 1 == q {
            c.mark = Some(marks::QUERY_END);
        }
        cells.push(c);
    }
    if q == 1 {
        cells[0].mark = Some(marks::QUERY_END);
    }
    for (li, list) in layout.lists.iter().enumerate() {
        for e in list {
            for (i, &b) in e.iter().enumerate() {
                let mut c = Cell::plain(b);
                if i == 0 {
                    c.mark = Some(marks::elem_start(li));
                }
                if i + 1 == e.len() && i != 0 {
                    c.mark = Some(marks::elem_end(li));
                }
                cells.push(c);
            }
        }
    }
    let mut end = Cell::plain(0);
    end.mark = Some(marks::INPUT_END);
    cells.push(end);

    // initial activities: query start is the principal, element starts and
    // the end cell are secondary
    let mut vm = VMState::new(cells, 1);
    vm.cells[0].activity = Activity::Principal(1);
    for c in vm.cells.iter_mut().skip(1) {
        if c.mark.is_some_and(|m| marks::list_of_elem_start(m).is_some())
            || c.mark == Some(marks::INPUT_END)
        {
            c.activity = Activity::Secondary;
        }
    }
    Ok((vm, sweep_steps))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchOutcome {
    Unique { list: usize, index: usize },
    Pair { first: (usize, usize), second: (usize, usize) },
    Error(VmError),
    /// Error forced by the search semantics rather than a broken state:
    /// no match, two matches in one list, or three or more matches.
    Reject(RejectReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    NoMatch,
    SameList,
    TooMany,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRun {
    pub outcome: SearchOutcome,
    pub vm_steps: u64,
    pub wires: Vec<u32>,
}

/// Published step-bound constant: measured runs satisfy
/// `vm_steps <= LIST_SEARCH_STEP_FACTOR * q` for every instance (the actual
/// count is at most `2q + 8`).
pub const LIST_SEARCH_STEP_FACTOR: u64 = 12;

/// Element-start position -> (list, index) table.
fn elem_positions(layout: &ListLayout) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut at = layout.q();
    for (li, list) in layout.lists.iter().enumerate() {
        for (ei, e) in list.iter().enumerate() {
            out.push((at, li, ei));
            at += e.len();
        }
    }
    out
}

/// Run the list-search routine: is the query a prefix of exactly one element
/// overall, or of exactly two elements in two distinct lists?
pub fn list_search(layout: &ListLayout) -> Result<SearchRun, VmError> {
    let (mut vm, _sweep) = init_marks(layout)?;
    let q = layout.q();
    let positions = elem_positions(layout);
    let locate = |pos: usize| -> Option<(usize, usize)> {
        positions
            .iter()
            .find(|&&(p, _, _)| p == pos)
            .map(|&(_, l, e)| (l, e))
    };
    let end_pos = vm.cells.len() - 1;

    // phase 1: lockstep prefix match over the q query bits
    for t in 0..q {
        vm.lockstep_match(t + 1 < q);
        if vm.error.is_some() {
            return Ok(SearchRun {
                outcome: SearchOutcome::Error(vm.error.unwrap()),
                vm_steps: vm.step,
                wires: vm.wires,
            });
        }
    }
    // phase 2: survivors walk back to their element-start marks
    for _ in 0..q.saturating_sub(1) {
        vm.walk_back_once();
    }
    // phase 3: constant number of jumps
    vm.jump(1, Dir::Right, Activity::Inactive);
    let finish = |vm: VMState, outcome: SearchOutcome| SearchRun {
        outcome,
        vm_steps: vm.step,
        wires: vm.wires,
    };
    if vm.error.is_some() {
        return Ok(finish(vm.clone(), SearchOutcome::Error(vm.error.unwrap())));
    }
    let p1 = vm.principal_pos(1).unwrap();
    if p1 == end_pos {
        return Ok(finish(vm, SearchOutcome::Reject(RejectReason::NoMatch)));
    }
    // the landing cell's mark carries its list identity
    let l1 = vm.cells[p1]
        .mark
        .and_then(marks::list_of_elem_start)
        .ok_or(VmError::MalformedInput)?;
    let first = locate(p1).ok_or(VmError::MalformedInput)?;
    debug_assert_eq!(first.0, l1);
    vm.jump(1, Dir::Right, Activity::Secondary);
    if vm.error.is_some() {
        return Ok(finish(vm.clone(), SearchOutcome::Error(vm.error.unwrap())));
    }
    let p2 = vm.principal_pos(1).unwrap();
    if p2 == end_pos {
        // unique: hop back onto the single matched element
        vm.jump(1, Dir::Left, Activity::Secondary);
        let back = vm.principal_pos(1).unwrap();
        debug_assert_eq!(back, p1);
        return Ok(finish(
            vm,
            SearchOutcome::Unique { list: first.0, index: first.1 },
        ));
    }
    let l2 = vm.cells[p2]
        .mark
        .and_then(marks::list_of_elem_start)
        .ok_or(VmError::MalformedInput)?;
    let second = locate(p2).ok_or(VmError::MalformedInput)?;
    if l2 == l1 {
        return Ok(finish(vm, SearchOutcome::Reject(RejectReason::SameList)));
    }
    vm.jump(1, Dir::Right, Activity::Secondary);
    if vm.error.is_some() {
        return Ok(finish(vm.clone(), SearchOutcome::Error(vm.error.unwrap())));
    }
    let p3 = vm.principal_pos(1).unwrap();
    if p3 != end_pos {
        return Ok(finish(vm, SearchOutcome::Reject(RejectReason::TooMany)));
    }
    // return to the second, then the first match
    vm.jump(1, Dir::Left, Activity::Secondary);
    debug_assert_eq!(vm.principal_pos(1), Some(p2));
    vm.jump(1, Dir::Left, Activity::Secondary);
    debug_assert_eq!(vm.principal_pos(1), Some(p1));
    Ok(finish(vm, SearchOutcome::Pair { first, second }))
}

/// Direct linear-scan oracle with the same outcome contract.
pub fn list_search_oracle(layout: &ListLayout) -> SearchOutcome {
    let q = &layout.query;
    let mut hits: Vec<(usize, usize)> = Vec::new();
    for (li, list) in layout.lists.iter().enumerate() {
        for (ei, e) in list.iter().enumerate() {
            if e.len() >= q.len() && e[..q.len()] == q[..] {
                hits.push((li, ei));
            }
        }
    }
    match hits.len() {
        0 => SearchOutcome::Reject(RejectReason::NoMatch),
        1 => SearchOutcome::Unique { list: hits[0].0, index: hits[0].1 },
        // a shared list among the first two matches is detected before any
        // third match is looked at
        _ if hits[0].0 == hits[1].0 => SearchOutcome::Reject(RejectReason::SameList),
        2 => SearchOutcome::Pair { first: hits[0], second: hits[1] },
        _ => SearchOutcome::Reject(RejectReason::TooMany),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout(query: &[u8], lists: &[&[&[u8]]]) -> ListLayout {
        ListLayout {
            query: query.to_vec(),
            lists: lists
                .iter()
                .map(|l| l.iter().map(|e| e.to_vec()).collect())
                .collect(),
        }
    }

    #[test]
    fn noop_is_identity() {
        let cells = vec![Cell::plain(0), Cell::plain(1), Cell::plain(0)];
        let mut vm = VMState::new(cells, 0);
        let before = vm.cells.clone();
        vm.step(Program::NoOp);
        assert_eq!(vm.cells, before);
        assert!(vm.error.is_none());
    }

    #[test]
    fn principal_moves_right() {
        let mut cells: Vec<Cell> = (0..6).map(|i| Cell::plain(i as u8 % 2)).collect();
        cells[1].activity = Activity::Principal(1);
        let mut vm = VMState::new(cells, 1);
        let bits: Vec<u8> = vm.cells.iter().map(|c| c.bit).collect();
        for _ in 0..3 {
            vm.step(Program::Move { id: 1, dir: Dir::Right });
        }
        assert_eq!(vm.principal_pos(1), Some(4));
        assert_eq!(vm.cells.iter().map(|c| c.bit).collect::<Vec<_>>(), bits);
        assert!(vm.error.is_none());
    }

    #[test]
    fn contradictory_signals_flag_error() {
        let mut cells = vec![Cell::plain(0), Cell::plain(0), Cell::plain(0)];
        cells[0].signal = Some(Signal { id: 1, dir: Dir::Left });
        cells[1].signal = Some(Signal { id: 1, dir: Dir::Right });
        cells[2].activity = Activity::Principal(1);
        let mut vm = VMState::new(cells, 1);
        vm.step(Program::NoOp);
        assert!(matches!(vm.error, Some(VmError::ContradictorySignals { .. })));
        // errors are absorbing
        let snapshot = vm.clone();
        vm.step(Program::Move { id: 1, dir: Dir::Left });
        assert_eq!(vm.cells, snapshot.cells);
    }

    #[test]
    fn jump_lengths_logged() {
        let mut cells: Vec<Cell> = (0..20).map(|_| Cell::plain(0)).collect();
        cells[0].activity = Activity::Principal(1);
        cells[1].activity = Activity::Secondary;
        let mut vm = VMState::new(cells, 1);
        vm.jump(1, Dir::Right, Activity::Inactive);
        assert_eq!(vm.principal_pos(1), Some(1));
        assert_eq!(vm.wires, vec![1]);

        let mut cells: Vec<Cell> = (0..20).map(|_| Cell::plain(0)).collect();
        cells[0].activity = Activity::Principal(1);
        cells[17].activity = Activity::Secondary;
        let mut vm = VMState::new(cells, 1);
        vm.jump(1, Dir::Right, Activity::Inactive);
        assert_eq!(vm.principal_pos(1), Some(17));
        assert_eq!(vm.wires, vec![17]);
        assert_eq!(vm.step, 1, "a jump is one macro step");
    }

    #[test]
    fn jump_without_target_errors() {
        let mut cells: Vec<Cell> = (0..5).map(|_| Cell::plain(0)).collect();
        cells[2].activity = Activity::Principal(1);
        let mut vm = VMState::new(cells, 1);
        vm.jump(1, Dir::Right, Activity::Inactive);
        assert!(matches!(vm.error, Some(VmError::NoSecondaryFound { .. })));
    }

    #[test]
    fn init_marks_examples() {
        // empty field list: only global start/end-ish marks
        let l = layout(&[1], &[]);
        let (vm, steps) = init_marks(&l).unwrap();
        let marks_present: Vec<MarkId> = vm.cells.iter().filter_map(|c| c.mark).collect();
        assert_eq!(marks_present, vec![marks::QUERY_END, marks::INPUT_END]);
        assert!(steps <= 5 * vm.cells.len() as u64);

        // one 2-element list: element marks on starts and ends
        let l = layout(&[1, 0], &[&[&[1, 0, 1], &[0, 1, 1]]]);
        let (vm, _) = init_marks(&l).unwrap();
        let starts = vm
            .cells
            .iter()
            .filter(|c| c.mark.is_some_and(|m| marks::list_of_elem_start(m).is_some()))
            .count();
        let ends = vm
            .cells
            .iter()
            .filter(|c| c.mark == Some(marks::elem_end(0)))
            .count();
        assert_eq!((starts, ends), (2, 2));
    }

    #[test]
    fn sparse_catalog_size() {
        let cat = sparse_mark_catalog();
        assert_eq!(cat.len(), 75);
        let unique: std::collections::BTreeSet<_> = cat.iter().collect();
        assert_eq!(unique.len(), 75);
    }

    #[test]
    fn search_examples_from_contract() {
        // e = 01, L1 = [011, 100], L2 = [110] -> unique(L1, 0)
        let run = list_search(&layout(&[0, 1], &[&[&[0, 1, 1], &[1, 0, 0]], &[&[1, 1, 0]]]))
            .unwrap();
        assert_eq!(run.outcome, SearchOutcome::Unique { list: 0, index: 0 });

        // e = 1, L1 = [10], L2 = [11] -> pair
        let run = list_search(&layout(&[1], &[&[&[1, 0]], &[&[1, 1]]])).unwrap();
        assert_eq!(
            run.outcome,
            SearchOutcome::Pair { first: (0, 0), second: (1, 0) }
        );

        // e = 0, L1 = [00, 01], L2 = [] -> two matches in one list
        let run = list_search(&layout(&[0], &[&[&[0, 0], &[0, 1]], &[]])).unwrap();
        assert_eq!(run.outcome, SearchOutcome::Reject(RejectReason::SameList));
    }

    fn random_layout(rng: &mut ChaCha8Rng) -> ListLayout {
        let q = rng.random_range(1..=16usize);
        let qp = q + rng.random_range(0..=4usize);
        let k = rng.random_range(1..=4usize);
        let query: Vec<u8> = (0..q).map(|_| rng.random_range(0..2u8)).collect();
        let lists: Vec<Vec<Vec<u8>>> = (0..k)
            .map(|_| {
                let elems = rng.random_range(0..=8usize);
                (0..elems)
                    .map(|_| {
                        // bias some elements toward sharing the query prefix
                        let mut e: Vec<u8> =
                            (0..qp).map(|_| rng.random_range(0..2u8)).collect();
                        if rng.random_bool(0.3) {
                            e[..q].copy_from_slice(&query);
                        }
                        e
                    })
                    .collect()
            })
            .collect();
        ListLayout { query, lists }
    }

    #[test]
    fn agrees_with_oracle_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ea7c4);
        for i in 0..1000 {
            let l = random_layout(&mut rng);
            let run = list_search(&l).unwrap();
            let expect = list_search_oracle(&l);
            assert_eq!(run.outcome, expect, "instance {i}: {l:?}");
            assert!(
                run.vm_steps <= LIST_SEARCH_STEP_FACTOR * l.q() as u64,
                "instance {i}: {} steps for q={}",
                run.vm_steps,
                l.q()
            );
            assert!(run.vm_steps <= 2 * l.q() as u64 + 8);
        }
    }

    #[test]
    fn determinism_given_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let l = random_layout(&mut rng);
            let a = list_search(&l).unwrap();
            let b = list_search(&l).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn principal_conservation_through_search() {
        let l = layout(&[1, 0], &[&[&[1, 0, 1]], &[&[1, 0, 0]]]);
        let (mut vm, _) = init_marks(&l).unwrap();
        assert!(vm.principals_ok());
        for t in 0..l.q() {
            vm.lockstep_match(t + 1 < l.q());
            assert!(vm.principals_ok());
        }
    }
}
