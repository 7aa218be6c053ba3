//! Residue classes modulo 7 partition `G`, and every class has the value of
//! the whole line. With `p = 7` this forces `6·(2X+1) = 0`.
//!
//!     cargo run --example torsion

use k0group::evaluator::Evaluator;
use k0group::formula::Formula;
use k0group::group_model::GroupDescriptor;

fn main() {
    let group = GroupDescriptor::cofinite(&[7]).validate().unwrap();
    let ev = Evaluator::for_group(&group).unwrap();
    let spec = *ev.spec();
    let mut sum = spec.zero();
    for i in 0..7 {
        let f = Formula::parse(&format!("div(7, x0 + {i})")).unwrap();
        let v = ev.value(&f).unwrap();
        println!("[{f}] = {v}");
        sum = sum + v;
    }
    println!("sum = {sum}, whole line = {}", spec.line());
    println!("6·(2X+1) = {}", spec.line().scale(6));
}
