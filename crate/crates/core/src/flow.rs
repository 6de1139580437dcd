//! Integer flows on super-tile grid graphs: validation of the four defining
//! conditions, max-flow (shortest augmenting paths), min-cut confirmation,
//! decomposition into elementary paths and cycles, and the routing of
//! produced units to ordered consumption slots that the sparse field model
//! builds on.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("graph failed validation: {0:?}")]
    InvalidGraph(Vec<Violation>),
    #[error("flow violates {0}")]
    InvalidFlow(String),
    #[error("routing infeasible: {0}")]
    Infeasible(String),
}

/// One grid vertex, counted from the bottom-left corner.
pub type Vertex = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Source,
    Sink,
    Grid(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    Left,
    Right,
    Up,
    Down,
}

impl Dir {
    pub fn all() -> [Dir; 4] {
        [Dir::Left, Dir::Right, Dir::Up, Dir::Down]
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::Left => Dir::Right,
            Dir::Right => Dir::Left,
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }

    pub fn step(self, (x, y): Vertex, n: usize) -> Option<Vertex> {
        match self {
            Dir::Left => x.checked_sub(1).map(|x| (x, y)),
            Dir::Right => (x + 1 < n).then_some((x + 1, y)),
            Dir::Down => y.checked_sub(1).map(|y| (x, y)),
            Dir::Up => (y + 1 < n).then_some((x, y + 1)),
        }
    }
}

/// The flow graph of one super-tile: an `N x N` grid with uniform arc
/// capacity `rho`, capacity-bounded source arcs, `F` unit sink arcs, and the
/// per-square capacity bounds of condition 4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperTileFlowGraph {
    pub n: usize,
    pub rho: u32,
    /// Source arc capacities per grid vertex (each in `1..=rho`).
    pub source_arcs: BTreeMap<Vertex, u32>,
    /// Sink arc endpoints (unit capacity each; a vertex may repeat).
    pub sink_arcs: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    EmptyGrid,
    VertexOutOfRange(Vertex),
    SourceCapOutOfRange { vertex: Vertex, cap: u32 },
    SinkCountMismatch { sinks: usize, f: u64 },
    SquareSourceBound { c: usize, corner: Vertex, sum: u64, bound: u64 },
    SquareSinkBound { c: usize, corner: Vertex, count: u64, bound: u64 },
}

impl SuperTileFlowGraph {
    /// Total capacity leaving the source.
    pub fn f(&self) -> u64 {
        self.source_arcs.values().map(|&c| c as u64).sum()
    }

    /// Check all four defining conditions; violations are reported, never
    /// thrown.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 || self.rho == 0 {
            out.push(Violation::EmptyGrid);
            return out;
        }
        for (&v, &cap) in &self.source_arcs {
            if v.0 >= self.n || v.1 >= self.n {
                out.push(Violation::VertexOutOfRange(v));
            }
            if cap < 1 || cap > self.rho {
                out.push(Violation::SourceCapOutOfRange { vertex: v, cap });
            }
        }
        for &v in &self.sink_arcs {
            if v.0 >= self.n || v.1 >= self.n {
                out.push(Violation::VertexOutOfRange(v));
            }
        }
        if !out.is_empty() {
            return out;
        }
        let f = self.f();
        if self.sink_arcs.len() as u64 != f {
            out.push(Violation::SinkCountMismatch { sinks: self.sink_arcs.len(), f });
        }
        // prefix sums for source capacities and sink multiplicities
        let n = self.n;
        let mut src = vec![vec![0u64; n + 1]; n + 1];
        let mut snk = vec![vec![0u64; n + 1]; n + 1];
        for (&(x, y), &cap) in &self.source_arcs {
            src[y + 1][x + 1] += cap as u64;
        }
        for &(x, y) in &self.sink_arcs {
            snk[y + 1][x + 1] += 1;
        }
        for grid in [&mut src, &mut snk] {
            for y in 1..=n {
                for x in 1..=n {
                    grid[y][x] += grid[y - 1][x] + grid[y][x - 1];
                    let sub = grid[y - 1][x - 1];
                    grid[y][x] -= sub;
                }
            }
        }
        let rect = |g: &Vec<Vec<u64>>, x0: usize, y0: usize, c: usize| -> u64 {
            g[y0 + c][x0 + c] + g[y0][x0] - g[y0][x0 + c] - g[y0 + c][x0]
        };
        for c in 1..=n {
            let bound = self.rho as u64 * c as u64;
            for y0 in 0..=n - c {
                for x0 in 0..=n - c {
                    let s = rect(&src, x0, y0, c);
                    if s > bound {
                        out.push(Violation::SquareSourceBound {
                            c,
                            corner: (x0, y0),
                            sum: s,
                            bound,
                        });
                    }
                    let k = rect(&snk, x0, y0, c);
                    if k > bound {
                        out.push(Violation::SquareSinkBound {
                            c,
                            corner: (x0, y0),
                            count: k,
                            bound,
                        });
                    }
                }
            }
        }
        out
    }

    /// Canonical arc list: source arcs, grid arcs (both directions), then one
    /// unit arc per sink slot, in a fixed order.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::new();
        for (&v, &cap) in &self.source_arcs {
            arcs.push(Arc { from: Node::Source, to: Node::Grid(v.0, v.1), cap });
        }
        for y in 0..self.n {
            for x in 0..self.n {
                for d in [Dir::Right, Dir::Up] {
                    if let Some((x2, y2)) = d.step((x, y), self.n) {
                        arcs.push(Arc { from: Node::Grid(x, y), to: Node::Grid(x2, y2), cap: self.rho });
                        arcs.push(Arc { from: Node::Grid(x2, y2), to: Node::Grid(x, y), cap: self.rho });
                    }
                }
            }
        }
        for &v in &self.sink_arcs {
            arcs.push(Arc { from: Node::Grid(v.0, v.1), to: Node::Sink, cap: 1 });
        }
        arcs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: Node,
    pub to: Node,
    pub cap: u32,
}

/// Per-arc flow values, indexed by position in [`SuperTileFlowGraph::arcs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub values: Vec<u32>,
}

impl Flow {
    pub fn value(&self, g: &SuperTileFlowGraph) -> u64 {
        g.arcs()
            .iter()
            .zip(&self.values)
            .filter(|(a, _)| a.from == Node::Source)
            .map(|(_, &v)| v as u64)
            .sum()
    }
}

/// Capacity and conservation checks for a candidate flow.
pub fn validate_flow(g: &SuperTileFlowGraph, f: &Flow) -> Result<(), FlowError> {
    let arcs = g.arcs();
    if f.values.len() != arcs.len() {
        return Err(FlowError::InvalidFlow("arc count".into()));
    }
    let mut balance: BTreeMap<Node, i64> = BTreeMap::new();
    for (a, &v) in arcs.iter().zip(&f.values) {
        if v > a.cap {
            return Err(FlowError::InvalidFlow(format!("capacity on {a:?}")));
        }
        *balance.entry(a.from).or_default() -= v as i64;
        *balance.entry(a.to).or_default() += v as i64;
    }
    for (node, b) in balance {
        if !matches!(node, Node::Source | Node::Sink) && b != 0 {
            return Err(FlowError::InvalidFlow(format!("conservation at {node:?}")));
        }
    }
    Ok(())
}

fn node_index(g: &SuperTileFlowGraph, node: Node) -> usize {
    match node {
        Node::Source => 0,
        Node::Sink => 1,
        Node::Grid(x, y) => 2 + y * g.n + x,
    }
}

/// Max flow by shortest augmenting paths; the returned flow has value exactly
/// `F` on every valid graph.
pub fn max_flow(g: &SuperTileFlowGraph) -> Result<Flow, FlowError> {
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(FlowError::InvalidGraph(violations));
    }
    let arcs = g.arcs();
    let vcount = 2 + g.n * g.n;
    // residual network: each arc and a paired reverse
    let mut heads: Vec<Vec<usize>> = vec![Vec::new(); vcount];
    let mut to: Vec<usize> = Vec::new();
    let mut cap: Vec<i64> = Vec::new();
    for a in &arcs {
        let (u, v) = (node_index(g, a.from), node_index(g, a.to));
        heads[u].push(to.len());
        to.push(v);
        cap.push(a.cap as i64);
        heads[v].push(to.len());
        to.push(u);
        cap.push(0);
    }
    let (s, t) = (0usize, 1usize);
    loop {
        // BFS for a shortest augmenting path
        let mut prev: Vec<Option<usize>> = vec![None; vcount];
        let mut seen = vec![false; vcount];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        'bfs: while let Some(u) = queue.pop_front() {
            for &e in &heads[u] {
                if cap[e] > 0 && !seen[to[e]] {
                    seen[to[e]] = true;
                    prev[to[e]] = Some(e);
                    if to[e] == t {
                        break 'bfs;
                    }
                    queue.push_back(to[e]);
                }
            }
        }
        if !seen[t] {
            break;
        }
        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            let e = prev[v].unwrap();
            bottleneck = bottleneck.min(cap[e]);
            v = to[e ^ 1];
        }
        let mut v = t;
        while v != s {
            let e = prev[v].unwrap();
            cap[e] -= bottleneck;
            cap[e ^ 1] += bottleneck;
            v = to[e ^ 1];
        }
    }
    let values: Vec<u32> = arcs
        .iter()
        .enumerate()
        .map(|(i, a)| (a.cap as i64 - cap[2 * i]) as u32)
        .collect();
    Ok(Flow { values })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinCutReport {
    pub f: u64,
    pub source_side_cut: u64,
    pub sink_side_cut: u64,
    /// Exhaustive minimum over all s-p cuts, only computed for `n <= 3`.
    pub exhaustive_min: Option<u64>,
}

/// Cut value of the partition with `in_source[v] = true` meaning the grid
/// vertex sits on the source side.
fn cut_value(g: &SuperTileFlowGraph, in_source: &[bool]) -> u64 {
    let side = |node: Node| -> bool {
        match node {
            Node::Source => true,
            Node::Sink => false,
            Node::Grid(x, y) => in_source[y * g.n + x],
        }
    };
    g.arcs()
        .iter()
        .filter(|a| side(a.from) && !side(a.to))
        .map(|a| a.cap as u64)
        .sum()
}

/// Report `F` together with the two canonical cuts, and for `n <= 3` confirm
/// exhaustively that no cut is cheaper.
pub fn min_cut_check(g: &SuperTileFlowGraph) -> Result<MinCutReport, FlowError> {
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(FlowError::InvalidGraph(violations));
    }
    let f = g.f();
    let cells = g.n * g.n;
    let all_sink = vec![false; cells];
    let all_source = vec![true; cells];
    let source_side_cut = cut_value(g, &all_sink);
    let sink_side_cut = cut_value(g, &all_source);
    let exhaustive_min = if g.n <= 3 {
        let mut best = u64::MAX;
        for mask in 0..(1u64 << cells) {
            let side: Vec<bool> = (0..cells).map(|i| mask >> i & 1 == 1).collect();
            best = best.min(cut_value(g, &side));
        }
        Some(best)
    } else {
        None
    };
    Ok(MinCutReport { f, source_side_cut, sink_side_cut, exhaustive_min })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Arc-index sequences from the source to the sink.
    pub paths: Vec<Vec<usize>>,
    /// Arc-index cycles.
    pub cycles: Vec<Vec<usize>>,
}

/// Peel a flow into `value(f)` elementary paths plus elementary cycles; the
/// per-arc multiplicities reconstruct the flow exactly.
pub fn decompose(g: &SuperTileFlowGraph, f: &Flow) -> Result<Decomposition, FlowError> {
    validate_flow(g, f)?;
    let arcs = g.arcs();
    let mut left: Vec<u32> = f.values.clone();
    // adjacency over arcs with remaining flow
    let _vcount = 2 + g.n * g.n;
    let out_arcs = |left: &Vec<u32>, u: usize| -> Option<usize> {
        arcs.iter()
            .enumerate()
            .find(|(i, a)| left[*i] > 0 && node_index(g, a.from) == u)
            .map(|(i, _)| i)
    };
    let mut paths = Vec::new();
    let mut cycles = Vec::new();
    let (s, t) = (0usize, 1usize);
    // walk from the source until all source arcs are spent; whenever the
    // trail revisits a node, the loop since that visit peels off as a cycle
    'outer: while let Some(first) = out_arcs(&left, s) {
        let mut seq = vec![first];
        let mut nodes = vec![s, node_index(g, arcs[first].to)];
        loop {
            let at = *nodes.last().unwrap();
            if at == t {
                for &e in &seq {
                    left[e] -= 1;
                }
                paths.push(seq);
                continue 'outer;
            }
            let e = out_arcs(&left, at).ok_or_else(|| {
                FlowError::InvalidFlow("conservation broke during peeling".into())
            })?;
            seq.push(e);
            let next = node_index(g, arcs[e].to);
            if let Some(pos) = nodes.iter().position(|&v| v == next) {
                let cyc: Vec<usize> = seq.split_off(pos);
                for &ce in &cyc {
                    left[ce] -= 1;
                }
                cycles.push(cyc);
                nodes.truncate(pos + 1);
            } else {
                nodes.push(next);
            }
        }
    }
    // leftover circulation: pure cycles
    while let Some(start) = (0..arcs.len()).find(|&i| left[i] > 0) {
        let mut seq = vec![start];
        let mut nodes = vec![node_index(g, arcs[start].from), node_index(g, arcs[start].to)];
        loop {
            let at = *nodes.last().unwrap();
            if let Some(pos) = nodes.iter().position(|&v| v == at) {
                if pos + 1 < nodes.len() {
                    let cyc: Vec<usize> = seq.split_off(pos);
                    for &ce in &cyc {
                        left[ce] -= 1;
                    }
                    cycles.push(cyc);
                    break;
                }
            }
            let e = out_arcs(&left, at).ok_or_else(|| {
                FlowError::InvalidFlow("conservation broke during cycle peeling".into())
            })?;
            seq.push(e);
            nodes.push(node_index(g, arcs[e].to));
        }
    }
    Ok(Decomposition { paths, cycles })
}

/// Check the reconstruction identity arc by arc.
pub fn reconstructs(g: &SuperTileFlowGraph, f: &Flow, d: &Decomposition) -> bool {
    let mut counts = vec![0u32; g.arcs().len()];
    for seq in d.paths.iter().chain(&d.cycles) {
        for &e in seq {
            counts[e] += 1;
        }
    }
    counts == f.values
}

/// The twenty wire arrows of the field model: an outgoing side, a transit
/// pair, or an incoming side; `Stay` covers the degenerate producer-at-slot
/// commodity whose initial tile is also final.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arrow {
    Outgoing(Dir),
    Transit { enter: Dir, leave: Dir },
    Incoming(Dir),
    Stay,
}

impl Arrow {
    /// Stable numbering: outgoing 1..4, transit 5..16, incoming 17..20,
    /// stay 0.
    pub fn id(self) -> u8 {
        let dir_ix = |d: Dir| match d {
            Dir::Left => 0u8,
            Dir::Right => 1,
            Dir::Up => 2,
            Dir::Down => 3,
        };
        match self {
            Arrow::Stay => 0,
            Arrow::Outgoing(d) => 1 + dir_ix(d),
            Arrow::Transit { enter, leave } => {
                let e = dir_ix(enter);
                let l = dir_ix(leave);
                let l_adj = if l > e { l - 1 } else { l };
                5 + e * 3 + l_adj
            }
            Arrow::Incoming(d) => 17 + dir_ix(d),
        }
    }

    pub fn enter(self) -> Option<Dir> {
        match self {
            Arrow::Transit { enter, .. } => Some(enter),
            Arrow::Incoming(d) => Some(d),
            _ => None,
        }
    }

    pub fn leave(self) -> Option<Dir> {
        match self {
            Arrow::Transit { leave, .. } => Some(leave),
            Arrow::Outgoing(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commodity {
    pub origin: Vertex,
    pub slot_index: usize,
    pub slot: Vertex,
    /// Grid vertices visited, origin first.
    pub path: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Routing {
    pub commodities: Vec<Commodity>,
    /// Per-child arrow tables: for each visited vertex, (commodity, arrow).
    pub tables: BTreeMap<Vertex, Vec<(usize, Arrow)>>,
}

/// Route one produced unit per source capacity to the ordered consumption
/// slots, through an induced super-tile flow graph with grid capacity `rho`.
pub fn route_points(
    n: usize,
    rho: u32,
    production: &BTreeMap<Vertex, u32>,
    slots: &[Vertex],
) -> Result<Routing, FlowError> {
    let g = SuperTileFlowGraph {
        n,
        rho,
        source_arcs: production.clone(),
        sink_arcs: slots.to_vec(),
    };
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(FlowError::Infeasible(format!("{violations:?}")));
    }
    let flow = max_flow(&g)?;
    if flow.value(&g) != g.f() {
        return Err(FlowError::Infeasible("max flow below F".into()));
    }
    let d = decompose(&g, &flow)?;
    debug_assert!(reconstructs(&g, &flow, &d));
    let arcs = g.arcs();
    // sink arcs appear after source and grid arcs, in slot order
    let first_sink = arcs.iter().position(|a| a.to == Node::Sink).unwrap_or(arcs.len());
    let mut commodities = Vec::new();
    let mut tables: BTreeMap<Vertex, Vec<(usize, Arrow)>> = BTreeMap::new();
    for seq in &d.paths {
        let verts: Vec<Vertex> = seq
            .iter()
            .filter_map(|&e| match arcs[e].to {
                Node::Grid(x, y) => Some((x, y)),
                _ => None,
            })
            .collect();
        let slot_index = seq.last().map(|&e| e - first_sink).unwrap();
        let id = commodities.len();
        for (i, &v) in verts.iter().enumerate() {
            let enter = if i == 0 {
                None
            } else {
                let p = verts[i - 1];
                Some(dir_between(v, p))
            };
            let leave = if i + 1 == verts.len() {
                None
            } else {
                let q = verts[i + 1];
                Some(dir_between(v, q))
            };
            let arrow = match (enter, leave) {
                (None, None) => Arrow::Stay,
                (None, Some(d)) => Arrow::Outgoing(d),
                (Some(e), Some(l)) => Arrow::Transit { enter: e, leave: l },
                (Some(e), None) => Arrow::Incoming(e),
            };
            tables.entry(v).or_default().push((id, arrow));
        }
        commodities.push(Commodity {
            origin: verts[0],
            slot_index,
            slot: *verts.last().unwrap(),
            path: verts,
        });
    }
    Ok(Routing { commodities, tables })
}

/// Side of `v` facing its 4-neighbour `w`.
fn dir_between(v: Vertex, w: Vertex) -> Dir {
    if w.0 + 1 == v.0 {
        Dir::Left
    } else if w.0 == v.0 + 1 {
        Dir::Right
    } else if w.1 + 1 == v.1 {
        Dir::Down
    } else {
        Dir::Up
    }
}

/// Seeded generator of valid graphs (rejection sampling against the square
/// bounds).
pub fn random_valid_graph<R: Rng>(rng: &mut R, n: usize, rho: u32) -> SuperTileFlowGraph {
    loop {
        let fmax = (rho as u64 * n as u64).min(n as u64 * n as u64);
        let f = rng.random_range(1..=fmax);
        let mut source_arcs: BTreeMap<Vertex, u32> = BTreeMap::new();
        let mut left = f;
        let mut guard = 0;
        while left > 0 && guard < 10_000 {
            guard += 1;
            let v = (rng.random_range(0..n), rng.random_range(0..n));
            if source_arcs.contains_key(&v) {
                continue;
            }
            let cap = rng.random_range(1..=(rho as u64).min(left)) as u32;
            source_arcs.insert(v, cap);
            left -= cap as u64;
        }
        if left > 0 {
            continue;
        }
        let mut sink_arcs = Vec::new();
        let mut counts: BTreeMap<Vertex, u32> = BTreeMap::new();
        let mut guard = 0;
        while (sink_arcs.len() as u64) < f && guard < 10_000 {
            guard += 1;
            let v = (rng.random_range(0..n), rng.random_range(0..n));
            let c = counts.entry(v).or_default();
            if *c >= rho {
                continue;
            }
            *c += 1;
            sink_arcs.push(v);
        }
        if (sink_arcs.len() as u64) < f {
            continue;
        }
        sink_arcs.sort_unstable();
        let g = SuperTileFlowGraph { n, rho, source_arcs, sink_arcs };
        if g.validate().is_empty() {
            return g;
        }
    }
}
