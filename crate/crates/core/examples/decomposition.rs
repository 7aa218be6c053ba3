//! Residue pieces and linear cells of a two-variable formula, checked
//! against point membership on sampled group elements.
//!
//!     cargo run --example decomposition

use k0group::evaluator::Evaluator;
use k0group::formula::Formula;
use k0group::group_model::GroupDescriptor;

fn main() {
    let group = GroupDescriptor::cofinite(&[7]).validate().unwrap();
    let ev = Evaluator::for_group(&group).unwrap();
    let f = Formula::parse("div(7, x0 + 2*x1) and x0 < x1 and x1 < 3").unwrap();
    let dec = ev.decompose(&f, 2).unwrap();
    println!(
        "L = {}, L_K = {}, {} cells",
        dec.l,
        dec.l_k,
        dec.cell_count()
    );
    for piece in dec.pieces.iter().filter(|p| p.reduced.is_some()).take(3) {
        println!(
            "residues {:?}: {}",
            piece.residues,
            piece.reduced.as_ref().unwrap()
        );
        for c in &piece.cells {
            println!("    {c}");
        }
    }
    let mut agree = 0;
    for seed in 0..300 {
        let x = group.sample_elements_seeded(seed, 2, 50, 10);
        let expect = f.holds(&group, &x) as usize;
        assert_eq!(dec.membership_count(&group, &x), expect);
        agree += 1;
    }
    println!("{agree} sampled points agree with the formula");
}
