//! One-dimensional follower-set analysis: bounded-depth follower sets of
//! admissible words, their equivalence classes, and class-count growth.
//! Stabilization of the class count across depths is soficity *evidence*,
//! never proof.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::shift::{Dim, Letter, Pattern, ShiftSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowerTable {
    pub depth: u32,
    pub max_len: u32,
    /// One representative word per class.
    pub representatives: Vec<Vec<Letter>>,
    pub class_count: usize,
}

fn word_pattern(w: &[Letter]) -> Pattern {
    Pattern::from_cells(w.iter().enumerate().map(|(i, &l)| ((i as i32, 0), l)))
}

fn words(alphabet: usize, len: u32) -> Vec<Vec<Letter>> {
    let mut out: Vec<Vec<Letter>> = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..alphabet as Letter).map(move |l| {
                    let mut v = w.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

/// Depth-`d` follower set: admissible length-`d` right extensions.
pub fn follower_set(spec: &ShiftSpec, w: &[Letter], d: u32) -> BTreeSet<Vec<Letter>> {
    let a = spec.alphabet.len();
    let mut out = BTreeSet::new();
    for v in words(a, d) {
        let mut joint = w.to_vec();
        joint.extend_from_slice(&v);
        if spec.admits_window(&word_pattern(&joint)) {
            out.insert(v);
        }
    }
    out
}

/// Group the admissible words of length at most `max_len` by their depth-`d`
/// follower sets.
pub fn follower_classes(spec: &ShiftSpec, max_len: u32, d: u32) -> FollowerTable {
    assert_eq!(spec.dims, Dim::One, "follower analysis is one-dimensional");
    let a = spec.alphabet.len();
    let mut classes: BTreeMap<BTreeSet<Vec<Letter>>, Vec<Letter>> = BTreeMap::new();
    for len in 0..=max_len {
        for w in words(a, len) {
            if len > 0 && !spec.admits_window(&word_pattern(&w)) {
                continue;
            }
            let fs = follower_set(spec, &w, d);
            classes.entry(fs).or_insert(w);
        }
    }
    let representatives: Vec<Vec<Letter>> = classes.into_values().collect();
    FollowerTable { depth: d, max_len, class_count: representatives.len(), representatives }
}

/// Class counts for several depths; equality across them is the
/// stabilization evidence.
pub fn stabilized_class_count(spec: &ShiftSpec, max_len: u32, d: u32) -> Option<usize> {
    let counts: Vec<usize> = (d..d + 3)
        .map(|depth| follower_classes(spec, max_len, depth).class_count)
        .collect();
    (counts[0] == counts[1] && counts[1] == counts[2]).then_some(counts[0])
}

/// Per-length class counts (all admissible words of that exact length).
pub fn class_growth(spec: &ShiftSpec, lengths: &[u32], d: u32) -> Vec<(u32, usize)> {
    let a = spec.alphabet.len();
    lengths
        .iter()
        .map(|&len| {
            let mut sets: BTreeSet<BTreeSet<Vec<Letter>>> = BTreeSet::new();
            for w in words(a, len) {
                if !spec.admits_window(&word_pattern(&w)) {
                    continue;
                }
                sets.insert(follower_set(spec, &w, d));
            }
            (len, sets.len())
        })
        .collect()
}

/// Distinct follower classes among the words `prefix . red` with a
/// black/white prefix of length `n` (the mirror growth witness).
pub fn mirror_red_suffixed_classes(n: u32, d: u32) -> usize {
    use crate::shift::RED;
    let spec = ShiftSpec::mirror_1d();
    let mut sets: BTreeSet<BTreeSet<Vec<Letter>>> = BTreeSet::new();
    for prefix in words(2, n) {
        let mut w = prefix.clone();
        w.push(RED);
        if !spec.admits_window(&word_pattern(&w)) {
            continue;
        }
        sets.insert(follower_set(&spec, &w, d));
    }
    sets.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_one_class() {
        let full = ShiftSpec::explicit(crate::shift::Alphabet::binary(), vec![], Dim::One);
        let t = follower_classes(&full, 4, 3);
        assert_eq!(t.class_count, 1);
    }

    #[test]
    fn s2_three_classes() {
        let s2 = ShiftSpec::s2();
        let t = follower_classes(&s2, 5, 3);
        assert_eq!(t.class_count, 3);
        assert_eq!(stabilized_class_count(&s2, 5, 3), Some(3));
    }

    #[test]
    fn s1_two_classes() {
        let s1 = ShiftSpec::s1(Dim::One);
        let t = follower_classes(&s1, 5, 3);
        assert_eq!(t.class_count, 2);
        assert_eq!(stabilized_class_count(&s1, 5, 3), Some(2));
    }

    #[test]
    fn depth_monotone_counts() {
        for spec in [ShiftSpec::s1(Dim::One), ShiftSpec::s2()] {
            let mut prev = 0;
            for d in 1..=4 {
                let c = follower_classes(&spec, 4, d).class_count;
                assert!(c >= prev, "depth {d}");
                prev = c;
            }
        }
    }

    #[test]
    fn renaming_invariance() {
        // swap the two letters of S1: the class count is unchanged
        let swapped = ShiftSpec::explicit(
            crate::shift::Alphabet::binary(),
            vec![Pattern::from_cells([((0, 0), 0), ((1, 0), 0)])],
            Dim::One,
        );
        assert_eq!(
            follower_classes(&ShiftSpec::s1(Dim::One), 4, 3).class_count,
            follower_classes(&swapped, 4, 3).class_count,
        );
    }

    #[test]
    fn mirror_growth() {
        assert!(mirror_red_suffixed_classes(2, 3) >= 4);
        assert!(mirror_red_suffixed_classes(3, 4) >= 8);
        let full = ShiftSpec::explicit(crate::shift::Alphabet::binary(), vec![], Dim::One);
        let growth = class_growth(&full, &[1, 2, 3], 2);
        assert!(growth.iter().all(|&(_, c)| c == 1));
    }
}
