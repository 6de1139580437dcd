use shiftlab_core::shift::*;
use std::collections::BTreeMap;

fn main() {
    let alphabet = Alphabet::new(vec!["x"]).unwrap();
    let mut color_ids: BTreeMap<Pattern, u32> = BTreeMap::new();
    for p in all_windows(&alphabet, 1, 1) {
        color_ids.insert(p.clone(), 0);
    }
    for sq in all_windows(&alphabet, 2, 2) {
        let bl = sq.crop((0,0),(0,0)).normalized();
        println!("lookup: {:?}", color_ids.get(&bl));
        let tl = sq.crop((0, 1), (0, 1)).normalized();
        println!("tl {:?} lookup {:?}", tl, color_ids.get(&tl));
    }
}
