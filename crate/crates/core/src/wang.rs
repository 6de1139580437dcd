//! Wang tilesets, backtracking tiling search, and the two-way compilation
//! between shifts of finite type and tilesets.
//!
//! The compilation follows the classical normalization: forbidden patterns
//! are padded to `c x c` (c the maximal forbidden dimension), the colors are
//! the allowed `c x c` squares, and one tile is added per allowed
//! `(c+1) x (c+1)` square, with west = south = its bottom-left sub-square,
//! north = top-left, east = bottom-right.
//!
//! On finite windows the correspondence needs a convention for boundary
//! cells: the tile map is evaluated only where the full `(c+1) x (c+1)`
//! neighbourhood exists, so the pattern-count identities below quantify over
//! *consistent* tilings (those whose overlapping square claims agree), which
//! are in bijection with the locally admissible `(w+c) x (h+c)` patterns.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::shift::{
    all_windows, Alphabet, Dim, Letter, Pattern, ShiftError, ShiftSpec,
};

pub type ColorId = u32;
pub type TileId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WangTile {
    pub north: ColorId,
    pub east: ColorId,
    pub south: ColorId,
    pub west: ColorId,
}

impl WangTile {
    pub fn new(north: ColorId, east: ColorId, south: ColorId, west: ColorId) -> Self {
        WangTile { north, east, south, west }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WangTileSet {
    /// Number of colors; ids are `0..colors`. Optional payload bits per
    /// color for sets whose colors encode data.
    pub colors: u32,
    pub color_bits: Option<Vec<Vec<u8>>>,
    pub tiles: Vec<WangTile>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum WangError {
    #[error("the shift admits no {0}x{0} square: empty shift")]
    EmptyShift(u32),
    #[error("forbidden set must be an explicit finite list")]
    NeedsExplicitList,
    #[error("search window too large: {0} cells")]
    TooLarge(u64),
    #[error("boundary constraint length mismatch")]
    BadBoundary,
}

impl WangTileSet {
    pub fn new(colors: u32, tiles: Vec<WangTile>) -> Self {
        let mut tiles = tiles;
        tiles.sort_unstable();
        tiles.dedup();
        WangTileSet { colors, color_bits: None, tiles }
    }

    /// Single tile, all edges one color.
    pub fn unit() -> Self {
        WangTileSet::new(1, vec![WangTile::new(0, 0, 0, 0)])
    }

    /// Two tiles forcing a checkerboard of phases.
    pub fn checkerboard() -> Self {
        WangTileSet::new(
            2,
            vec![WangTile::new(0, 0, 1, 1), WangTile::new(1, 1, 0, 0)],
        )
    }
}

/// A `w x h` tiling, row-major from the bottom-left.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tiling {
    pub w: u32,
    pub h: u32,
    pub tiles: Vec<TileId>,
}

impl Tiling {
    pub fn get(&self, x: u32, y: u32) -> TileId {
        self.tiles[(y * self.w + x) as usize]
    }
}

/// Fixed colors on the outer edges of the search rectangle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub north: Option<Vec<ColorId>>,
    pub east: Option<Vec<ColorId>>,
    pub south: Option<Vec<ColorId>>,
    pub west: Option<Vec<ColorId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    First,
    Count,
    /// Enumerate up to the given number of tilings.
    Enumerate(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchResult {
    First(Option<Tiling>),
    Count(u64),
    Enumerate(Vec<Tiling>),
}

/// Depth-first search over row-major cells; first-solution mode follows
/// tile-id lexicographic order, so results are reproducible.
pub fn tile_rectangle(
    ts: &WangTileSet,
    w: u32,
    h: u32,
    boundary: &Boundary,
    mode: SearchMode,
) -> Result<SearchResult, WangError> {
    let cells = w as u64 * h as u64;
    if cells > 10_000 {
        return Err(WangError::TooLarge(cells));
    }
    for (side, len) in [
        (&boundary.north, w),
        (&boundary.south, w),
        (&boundary.east, h),
        (&boundary.west, h),
    ] {
        if let Some(v) = side {
            if v.len() != len as usize {
                return Err(WangError::BadBoundary);
            }
        }
    }
    let mut grid: Vec<Option<TileId>> = vec![None; cells as usize];
    let mut count = 0u64;
    let mut found: Vec<Tiling> = Vec::new();
    let limit = match mode {
        SearchMode::First => 1,
        SearchMode::Enumerate(l) => l,
        SearchMode::Count => u64::MAX,
    };
    let keep = !matches!(mode, SearchMode::Count);

    fn admissible(
        ts: &WangTileSet,
        grid: &[Option<TileId>],
        w: u32,
        h: u32,
        boundary: &Boundary,
        idx: usize,
        t: TileId,
    ) -> bool {
        let (x, y) = (idx as u32 % w, idx as u32 / w);
        let tile = ts.tiles[t];
        if x > 0 {
            if let Some(left) = grid[idx - 1] {
                if ts.tiles[left].east != tile.west {
                    return false;
                }
            }
        } else if let Some(westc) = &boundary.west {
            if westc[y as usize] != tile.west {
                return false;
            }
        }
        if y > 0 {
            if let Some(below) = grid[idx - w as usize] {
                if ts.tiles[below].north != tile.south {
                    return false;
                }
            }
        } else if let Some(southc) = &boundary.south {
            if southc[x as usize] != tile.south {
                return false;
            }
        }
        if x == w - 1 {
            if let Some(eastc) = &boundary.east {
                if eastc[y as usize] != tile.east {
                    return false;
                }
            }
        }
        if y == h - 1 {
            if let Some(northc) = &boundary.north {
                if northc[x as usize] != tile.north {
                    return false;
                }
            }
        }
        true
    }

    fn dfs(
        ts: &WangTileSet,
        grid: &mut Vec<Option<TileId>>,
        w: u32,
        h: u32,
        boundary: &Boundary,
        idx: usize,
        count: &mut u64,
        found: &mut Vec<Tiling>,
        limit: u64,
        keep: bool,
    ) {
        if *count >= limit && keep {
            return;
        }
        if idx == grid.len() {
            *count += 1;
            if keep {
                found.push(Tiling {
                    w,
                    h,
                    tiles: grid.iter().map(|t| t.unwrap()).collect(),
                });
            }
            return;
        }
        for t in 0..ts.tiles.len() {
            if admissible(ts, grid, w, h, boundary, idx, t) {
                grid[idx] = Some(t);
                dfs(ts, grid, w, h, boundary, idx + 1, count, found, limit, keep);
                grid[idx] = None;
                if keep && *count >= limit {
                    return;
                }
            }
        }
    }

    dfs(ts, &mut grid, w, h, boundary, 0, &mut count, &mut found, limit, keep);
    Ok(match mode {
        SearchMode::First => SearchResult::First(found.into_iter().next()),
        SearchMode::Count => SearchResult::Count(count),
        SearchMode::Enumerate(_) => SearchResult::Enumerate(found),
    })
}

pub fn count_tilings(ts: &WangTileSet, w: u32, h: u32) -> Result<u64, WangError> {
    match tile_rectangle(ts, w, h, &Boundary::default(), SearchMode::Count)? {
        SearchResult::Count(c) => Ok(c),
        _ => unreachable!(),
    }
}

/// Everything the compilation knows about its tileset: the square patterns
/// behind colors and tiles, and the letter each tile projects to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftCompilation {
    pub tileset: WangTileSet,
    /// Side of the color squares.
    pub c: u32,
    /// Allowed `c x c` squares, indexed by color id.
    pub color_patterns: Vec<Pattern>,
    /// Allowed `(c+1) x (c+1)` squares, indexed by tile id.
    pub square_of_tile: Vec<Pattern>,
    /// Bottom-left letter of each tile's square.
    pub letter_of_tile: Vec<Letter>,
}

/// Compile an explicit-list SFT into a Wang tileset whose tilings are
/// isomorphic to the shift's configurations.
pub fn sft_to_wang(spec: &ShiftSpec) -> Result<SftCompilation, WangError> {
    let forbidden = match &spec.forbidden {
        crate::shift::Forbidden::Explicit(v) => v.clone(),
        crate::shift::Forbidden::Generator(_) => return Err(WangError::NeedsExplicitList),
    };
    let c = forbidden
        .iter()
        .map(|f| f.width().max(f.height()))
        .max()
        .unwrap_or(1)
        .max(1);
    let admissible = |p: &Pattern| forbidden.iter().all(|f| !crate::shift::occurs(p, f));
    let mut color_patterns: Vec<Pattern> = Vec::new();
    let mut color_ids: BTreeMap<Pattern, ColorId> = BTreeMap::new();
    for p in all_windows(&spec.alphabet, c, c) {
        if admissible(&p) {
            color_ids.insert(p.clone(), color_patterns.len() as ColorId);
            color_patterns.push(p);
        }
    }
    if color_patterns.is_empty() {
        return Err(WangError::EmptyShift(c));
    }
    let mut tiles = Vec::new();
    let mut square_of_tile = Vec::new();
    let mut letter_of_tile = Vec::new();
    let last = c as i32;
    for sq in all_windows(&spec.alphabet, c + 1, c + 1) {
        if !admissible(&sq) {
            continue;
        }
        let bl = sq.crop((0, 0), (last - 1, last - 1)).normalized();
        let tl = sq.crop((0, 1), (last - 1, last)).normalized();
        let br = sq.crop((1, 0), (last, last - 1)).normalized();
        let (Some(&blc), Some(&tlc), Some(&brc)) =
            (color_ids.get(&bl), color_ids.get(&tl), color_ids.get(&br))
        else {
            // a sub-square of an admissible square is admissible, so the
            // lookups cannot fail; defensive skip regardless
            continue;
        };
        tiles.push(WangTile { north: tlc, east: brc, south: blc, west: blc });
        letter_of_tile.push(sq.get((0, 0)).unwrap());
        square_of_tile.push(sq);
    }
    let tileset = WangTileSet {
        colors: color_patterns.len() as u32,
        color_bits: None,
        tiles,
    };
    Ok(SftCompilation { tileset, c, color_patterns, square_of_tile, letter_of_tile })
}

impl SftCompilation {
    /// The tiling a locally admissible `(w+c) x (h+c)` pattern maps to.
    pub fn tiling_of_pattern(&self, p: &Pattern, w: u32, h: u32) -> Option<Tiling> {
        let q = p.normalized();
        let c = self.c as i32;
        let mut tiles = Vec::new();
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                let sq = q.crop((x, y), (x + c, y + c)).normalized();
                let t = self.square_of_tile.iter().position(|s| s == &sq)?;
                tiles.push(t);
            }
        }
        Some(Tiling { w, h, tiles })
    }

    /// The `(w+c) x (h+c)` pattern behind a tiling, when all overlapping
    /// square claims agree (the consistency convention for finite windows).
    pub fn pattern_of_tiling(&self, t: &Tiling) -> Option<Pattern> {
        let mut out = Pattern::new();
        for y in 0..t.h {
            for x in 0..t.w {
                let sq = &self.square_of_tile[t.get(x, y)];
                for ((dx, dy), l) in sq.iter() {
                    let pos = (x as i32 + dx, y as i32 + dy);
                    match out.get(pos) {
                        None => out.set(pos, l),
                        Some(prev) if prev == l => {}
                        Some(_) => return None,
                    }
                }
            }
        }
        Some(out)
    }

    /// Tilings of the `w x h` grid whose square claims are globally
    /// consistent; these are in bijection with the locally admissible
    /// `(w+c) x (h+c)` patterns.
    pub fn consistent_tilings(&self, w: u32, h: u32) -> Result<Vec<Tiling>, WangError> {
        let all = match tile_rectangle(&self.tileset, w, h, &Boundary::default(), SearchMode::Enumerate(u64::MAX))? {
            SearchResult::Enumerate(v) => v,
            _ => unreachable!(),
        };
        Ok(all
            .into_iter()
            .filter(|t| self.pattern_of_tiling(t).is_some())
            .collect())
    }
}

/// A tileset is itself an SFT: one letter per tile, forbidden patterns are
/// the mismatched adjacent pairs (sizes 1x2 and 2x1).
pub fn wang_to_sft(ts: &WangTileSet) -> ShiftSpec {
    let names: Vec<String> = (0..ts.tiles.len()).map(|i| format!("t{i}")).collect();
    let alphabet = Alphabet::new(names).unwrap();
    let mut forbidden = Vec::new();
    for (a, ta) in ts.tiles.iter().enumerate() {
        for (b, tb) in ts.tiles.iter().enumerate() {
            if ta.east != tb.west {
                forbidden.push(Pattern::from_cells([
                    ((0, 0), a as Letter),
                    ((1, 0), b as Letter),
                ]));
            }
            if ta.north != tb.south {
                forbidden.push(Pattern::from_cells([
                    ((0, 0), a as Letter),
                    ((0, 1), b as Letter),
                ]));
            }
        }
    }
    ShiftSpec::explicit(alphabet, forbidden, Dim::Two)
}

/// Letters of a tiling under the compilation's projection.
pub fn project_tiling(comp: &SftCompilation, t: &Tiling) -> Pattern {
    let mut p = Pattern::new();
    for y in 0..t.h {
        for x in 0..t.w {
            p.set((x as i32, y as i32), comp.letter_of_tile[t.get(x, y)]);
        }
    }
    p
}

pub fn tileset_to_json(ts: &WangTileSet) -> String {
    serde_json::to_string_pretty(ts).expect("tileset serialization")
}

pub fn tileset_from_json(s: &str) -> Result<WangTileSet, ShiftError> {
    serde_json::from_str(s).map_err(|e| ShiftError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::{locally_admissible, SearchLimits, WHITE};

    #[test]
    fn unit_tileset_counts() {
        let ts = WangTileSet::unit();
        assert_eq!(count_tilings(&ts, 2, 2).unwrap(), 1);
    }

    #[test]
    fn checkerboard_two_phases() {
        let ts = WangTileSet::checkerboard();
        assert_eq!(count_tilings(&ts, 2, 2).unwrap(), 2);
        // first solution is reproducible
        let first = match tile_rectangle(&ts, 2, 2, &Boundary::default(), SearchMode::First).unwrap()
        {
            SearchResult::First(Some(t)) => t,
            _ => panic!("no tiling"),
        };
        assert_eq!(first.tiles, vec![0, 1, 1, 0]);
    }

    #[test]
    fn boundary_monotone() {
        let ts = WangTileSet::checkerboard();
        let free = count_tilings(&ts, 2, 2).unwrap();
        let constrained = match tile_rectangle(
            &ts,
            2,
            2,
            &Boundary { south: Some(vec![1, 0]), ..Default::default() },
            SearchMode::Count,
        )
        .unwrap()
        {
            SearchResult::Count(c) => c,
            _ => unreachable!(),
        };
        assert!(constrained <= free);
        assert_eq!(constrained, 1);
    }

    #[test]
    fn one_letter_sft_compiles_to_unit() {
        let spec = ShiftSpec::explicit(Alphabet::new(vec!["x"]).unwrap(), vec![], Dim::Two);
        let comp = sft_to_wang(&spec).unwrap();
        assert_eq!(comp.tileset.tiles.len(), 1);
        assert_eq!(comp.tileset.colors, 1);
        assert_eq!(comp.letter_of_tile, vec![0]);
    }

    #[test]
    fn empty_shift_detected() {
        // forbid both letters as 1x1 patterns: nothing is admissible
        let spec = ShiftSpec::explicit(
            Alphabet::binary(),
            vec![Pattern::rect(1, 1, 0), Pattern::rect(1, 1, 1)],
            Dim::Two,
        );
        assert_eq!(sft_to_wang(&spec), Err(WangError::EmptyShift(1)));
    }

    fn count_locally_admissible(spec: &ShiftSpec, n: u32) -> u64 {
        all_windows(&spec.alphabet, n, n)
            .filter(|p| spec.admits_window(p))
            .count() as u64
    }

    #[test]
    fn rectangle_shift_tilings_biject_with_patterns() {
        let spec = ShiftSpec::rectangles();
        let comp = sft_to_wang(&spec).unwrap();
        assert_eq!(comp.c, 2);
        for grid in 1..=2u32 {
            let n = grid + comp.c;
            let tilings = comp.consistent_tilings(grid, grid).unwrap();
            let patterns: Vec<Pattern> = all_windows(&spec.alphabet, n, n)
                .filter(|p| spec.admits_window(p))
                .collect();
            assert_eq!(tilings.len(), patterns.len(), "grid {grid}");
            // explicit bijection both ways
            for p in &patterns {
                let t = comp.tiling_of_pattern(p, grid, grid).expect("pattern maps");
                assert!(tilings.contains(&t));
                assert_eq!(comp.pattern_of_tiling(&t).unwrap(), p.normalized());
            }
        }
    }

    #[test]
    fn s1_2d_pattern_counts_equal() {
        let spec = ShiftSpec::s1(Dim::Two);
        let comp = sft_to_wang(&spec).unwrap();
        let tilings = comp.consistent_tilings(1, 1).unwrap();
        let n = 1 + comp.c;
        assert_eq!(tilings.len() as u64, count_locally_admissible(&spec, n));
    }

    #[test]
    fn tiling_count_matches_block_complexity_oracle() {
        let spec = ShiftSpec::rectangles();
        let comp = sft_to_wang(&spec).unwrap();
        let tilings = comp.consistent_tilings(1, 1).unwrap();
        let bc = crate::shift::block_complexity(&spec, 3, 1, 0, SearchLimits::default())
            .unwrap()
            .exact()
            .unwrap();
        assert_eq!(tilings.len() as u64, bc);
    }

    #[test]
    fn wang_to_sft_mismatch_pairs() {
        // 1 tile, all edges same color: no forbidden patterns
        let sft = wang_to_sft(&WangTileSet::unit());
        match &sft.forbidden {
            crate::shift::Forbidden::Explicit(v) => assert!(v.is_empty()),
            _ => panic!(),
        }

        // two tiles with incompatible east/west colors everywhere: exactly
        // the horizontal mismatches among the eight candidate pairs
        let ts = WangTileSet::new(
            2,
            vec![WangTile::new(0, 0, 0, 1), WangTile::new(0, 1, 0, 0)],
        );
        let sft = wang_to_sft(&ts);
        let v = match &sft.forbidden {
            crate::shift::Forbidden::Explicit(v) => v.clone(),
            _ => panic!(),
        };
        // oracle: enumerate all 2 * |tiles|^2 adjacent pairs directly
        let mut expect = 0;
        for a in &ts.tiles {
            for b in &ts.tiles {
                if a.east != b.west {
                    expect += 1;
                }
                if a.north != b.south {
                    expect += 1;
                }
            }
        }
        assert_eq!(v.len(), expect);
        assert_eq!(expect, 2);
    }

    #[test]
    fn wang_round_trip_small_windows() {
        let ts = WangTileSet::checkerboard();
        let sft = wang_to_sft(&ts);
        for n in 1..=3u32 {
            let tilings = count_tilings(&ts, n, n).unwrap();
            let patterns = all_windows(&sft.alphabet, n, n)
                .filter(|p| locally_admissible(p, &sft, 0))
                .count() as u64;
            assert_eq!(tilings, patterns);
        }
    }

    #[test]
    fn projection_recovers_letters() {
        let spec = ShiftSpec::s1(Dim::Two);
        let comp = sft_to_wang(&spec).unwrap();
        let p = all_windows(&spec.alphabet, 3, 3)
            .filter(|p| spec.admits_window(p))
            .nth(5)
            .unwrap();
        let t = comp.tiling_of_pattern(&p, 1, 1).unwrap();
        let proj = project_tiling(&comp, &t);
        assert_eq!(proj.get((0, 0)), p.get((0, 0)));
        let _ = WHITE;
    }
}
