//! A desk-scale workbench for two-dimensional symbolic dynamics.
//!
//! The crate is organized around finite patterns over small alphabets and
//! the constructions that connect them:
//!
//! * [`shift`] — alphabets, sparse patterns, forbidden-pattern sets (explicit
//!   or generated), bounded admissibility search, block complexity;
//! * [`wang`] — Wang tilesets, backtracking tiling search, and the two-way
//!   compilation between shifts of finite type and tilesets;
//! * [`compile`] — Turing machines, two-head machines, and nondeterministic
//!   cellular automata compiled into 3x2 space-time constraints, with
//!   reference executors;
//! * [`ncavm`] — the enhanced cellular-automaton computing model with
//!   principal/secondary cells, jump signals, and the fast list search;
//! * [`flow`] — super-tile grid flow graphs: validation, max flow, min-cut
//!   confirmation, path/cycle decomposition, and point routing;
//! * [`epitomes`] — epitome families (mirror, semi-mirror, Kass-Madden),
//!   their enforcing neighbourhoods, value counting, and extension-set
//!   chains;
//! * [`hierarchy`] — the toy decompressor, resource-bounded complexity by
//!   enumeration, standard-pattern families, the recursive coloring, and the
//!   busy-beaver search;
//! * [`sparse`] — the density-eps field model: rank hierarchy, the eight
//!   fields, the synthesizer, and the C-G verifier;
//! * [`fixpoint`] — the self-simulation tileset generator with explicit
//!   cable geometry;
//! * [`sofic1d`] — one-dimensional follower-set analysis;
//! * [`render`] — SVG/PPM/DOT emitters.

pub mod compile;
pub mod epitomes;
pub mod fixpoint;
pub mod flow;
pub mod hierarchy;
pub mod ncavm;
pub mod render;
pub mod shift;
pub mod sofic1d;
pub mod sparse;
pub mod wang;

pub use shift::{Alphabet, Pattern, ShiftSpec};
