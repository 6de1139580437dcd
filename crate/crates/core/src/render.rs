//! SVG, PPM and DOT emitters for patterns, tilings, flow routings and role
//! maps. Pure string builders, no drawing dependencies.

use std::fmt::Write;

use crate::compile::SpaceTimeDiagram;
use crate::fixpoint::{CellRole, SimGeometry};
use crate::flow::{Arrow, Routing, SuperTileFlowGraph};
use crate::shift::{Pattern, BLACK, RED, WHITE};
use crate::wang::{Tiling, WangTileSet};

const CELL: i32 = 20;

fn svg_open(w: i32, h: i32) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n"
    )
}

fn color_of_letter(l: u8) -> &'static str {
    match l {
        WHITE => "#f8f8f4",
        BLACK => "#222222",
        RED => "#d23b3b",
        3 => "#3b6fd2",
        _ => "#8c8c8c",
    }
}

/// Hue-spread palette for arbitrary id spaces.
pub fn palette(id: u32, total: u32) -> String {
    let hue = (id as f64) * 360.0 / total.max(1) as f64;
    format!("hsl({hue:.0},65%,60%)")
}

/// Cells as colored squares, y growing upward.
pub fn svg_pattern(p: &Pattern) -> String {
    let Some(((x0, y0), (x1, y1))) = p.bounding_box() else {
        return svg_open(CELL, CELL) + "</svg>\n";
    };
    let w = (x1 - x0 + 1) * CELL;
    let h = (y1 - y0 + 1) * CELL;
    let mut s = svg_open(w, h);
    for ((x, y), l) in p.iter() {
        let px = (x - x0) * CELL;
        let py = (y1 - y) * CELL;
        let _ = writeln!(
            s,
            "<rect x=\"{px}\" y=\"{py}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#999\" stroke-width=\"0.5\"/>",
            color_of_letter(l)
        );
    }
    s + "</svg>\n"
}

/// Classic Wang rendering: each tile is four edge-colored triangles.
pub fn svg_tiling(ts: &WangTileSet, t: &Tiling) -> String {
    let w = t.w as i32 * CELL;
    let h = t.h as i32 * CELL;
    let mut s = svg_open(w, h);
    for y in 0..t.h {
        for x in 0..t.w {
            let tile = ts.tiles[t.get(x, y)];
            let px = x as i32 * CELL;
            let py = (t.h - 1 - y) as i32 * CELL;
            let (cx, cy) = (px + CELL / 2, py + CELL / 2);
            let corners = [
                (px, py),
                (px + CELL, py),
                (px + CELL, py + CELL),
                (px, py + CELL),
            ];
            let tri = |a: (i32, i32), b: (i32, i32), color: u32| {
                format!(
                    "<polygon points=\"{},{} {},{} {},{}\" fill=\"{}\" stroke=\"#555\" stroke-width=\"0.4\"/>\n",
                    a.0, a.1, b.0, b.1, cx, cy,
                    palette(color, ts.colors)
                )
            };
            s += &tri(corners[0], corners[1], tile.north);
            s += &tri(corners[1], corners[2], tile.east);
            s += &tri(corners[3], corners[2], tile.south);
            s += &tri(corners[0], corners[3], tile.west);
        }
    }
    s + "</svg>\n"
}

/// Arrow field of a routing over an `n x n` child grid.
pub fn svg_routing(n: usize, routing: &Routing) -> String {
    let w = n as i32 * CELL;
    let mut s = svg_open(w, w);
    for y in 0..n {
        for x in 0..n {
            let px = x as i32 * CELL;
            let py = (n - 1 - y) as i32 * CELL;
            let _ = writeln!(
                s,
                "<rect x=\"{px}\" y=\"{py}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"#fcfcf8\" stroke=\"#bbb\" stroke-width=\"0.5\"/>"
            );
        }
    }
    let total = routing.commodities.len().max(1) as u32;
    for (id, c) in routing.commodities.iter().enumerate() {
        let color = palette(id as u32, total);
        let center = |v: (usize, usize)| -> (i32, i32) {
            (
                v.0 as i32 * CELL + CELL / 2,
                (n - 1 - v.1) as i32 * CELL + CELL / 2,
            )
        };
        for pair in c.path.windows(2) {
            let (a, b) = (center(pair[0]), center(pair[1]));
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                a.0, a.1, b.0, b.1
            );
        }
        let (ox, oy) = center(c.origin);
        let (sx, sy) = center(c.slot);
        let _ = writeln!(s, "<circle cx=\"{ox}\" cy=\"{oy}\" r=\"4\" fill=\"{color}\"/>");
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            sx - 4,
            sy - 4
        );
    }
    s + "</svg>\n"
}

/// Role map of one super-tile, one colored cell per role family.
pub fn svg_role_map(geom: &SimGeometry) -> String {
    let n = geom.n as i32;
    let scale = (CELL / 2).max(4);
    let mut s = svg_open(n * scale, n * scale);
    let roles = geom.roles();
    for j in 0..geom.n {
        for i in 0..geom.n {
            let fill = match roles.get(i, j) {
                CellRole::SuperColorBit { .. } => "#d23b3b",
                CellRole::Cable { .. } => "#e8a33d",
                CellRole::Literal { .. } => "#7b4bd2",
                CellRole::Arrival { .. } => "#3b6fd2",
                CellRole::Memory => "#9fc2e8",
                CellRole::IDiagram => "#63b363",
                CellRole::UDiagram => "#2e7d5b",
                CellRole::ADiagram => "#a9d9a9",
                CellRole::Interface { .. } => "#d2c23b",
                CellRole::Block => "#efefe9",
            };
            let px = i as i32 * scale;
            let py = (n - 1 - j as i32) * scale;
            let _ = writeln!(
                s,
                "<rect x=\"{px}\" y=\"{py}\" width=\"{scale}\" height=\"{scale}\" fill=\"{fill}\"/>"
            );
        }
    }
    s + "</svg>\n"
}

/// Binary PPM (P6) of a space-time diagram, wall cells in red.
pub fn ppm_diagram(d: &SpaceTimeDiagram) -> Vec<u8> {
    let w = d.width();
    let h = d.height();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for row in d.rows.iter().rev() {
        for &cell in row {
            let rgb: [u8; 3] = match cell {
                crate::compile::WALL => [210, 59, 59],
                c => {
                    let v = 40 + (c as u16 * 37 % 180) as u8;
                    [v, v, 255 - v / 2]
                }
            };
            out.extend_from_slice(&rgb);
        }
    }
    out
}

/// DOT export of a super-tile flow graph.
pub fn dot_flow_graph(g: &SuperTileFlowGraph) -> String {
    let mut s = String::from("digraph supertile {\n  rankdir=LR;\n  s [shape=diamond];\n  p [shape=diamond];\n");
    for a in g.arcs() {
        let name = |n: crate::flow::Node| match n {
            crate::flow::Node::Source => "s".to_string(),
            crate::flow::Node::Sink => "p".to_string(),
            crate::flow::Node::Grid(x, y) => format!("v{x}_{y}"),
        };
        let _ = writeln!(s, "  {} -> {} [label=\"{}\"];", name(a.from), name(a.to), a.cap);
    }
    s + "}\n"
}

/// Short glyph row dump of a VM trace cell row.
pub fn vm_row_glyphs(cells: &[crate::ncavm::Cell]) -> String {
    cells
        .iter()
        .map(|c| match c.activity {
            crate::ncavm::Activity::Principal(i) => {
                char::from_digit(i as u32, 10).unwrap_or('P')
            }
            crate::ncavm::Activity::Secondary => {
                if c.bit == 0 {
                    'o'
                } else {
                    'i'
                }
            }
            crate::ncavm::Activity::Inactive => {
                if c.bit == 0 {
                    '.'
                } else {
                    ','
                }
            }
        })
        .collect()
}

/// Legend describing the arrow taxonomy, used by reports.
pub fn arrow_name(a: Arrow) -> String {
    match a {
        Arrow::Stay => "stay".into(),
        Arrow::Outgoing(d) => format!("out:{d:?}"),
        Arrow::Incoming(d) => format!("in:{d:?}"),
        Arrow::Transit { enter, leave } => format!("{enter:?}->{leave:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_outputs_are_wellformed() {
        let p = Pattern::from_rows(&["r.#", ".#."]);
        let svg = svg_pattern(&p);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<rect").count(), 6);

        let ts = WangTileSet::checkerboard();
        let t = match crate::wang::tile_rectangle(
            &ts,
            2,
            2,
            &Default::default(),
            crate::wang::SearchMode::First,
        )
        .unwrap()
        {
            crate::wang::SearchResult::First(Some(t)) => t,
            _ => panic!(),
        };
        let svg = svg_tiling(&ts, &t);
        assert_eq!(svg.matches("<polygon").count(), 16);
    }

    #[test]
    fn ppm_header() {
        let d = SpaceTimeDiagram { rows: vec![vec![0, 1, 0], vec![0, 0, 0]] };
        let ppm = ppm_diagram(&d);
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 18);
    }
}
