//! Evaluate a formula given on the command line and print its trace summary.
//!
//!     cargo run --example eval_formula -- "div(7, x0 - x1) and 0 < x1"

use k0group::evaluator::evaluate;
use k0group::formula::Formula;
use k0group::group_model::GroupDescriptor;
use k0group::k0ring::RingSpec;

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "0 < x0 and 0 < x1".to_string());
    let group = GroupDescriptor::cofinite(&[7]).validate().unwrap();
    let spec = RingSpec::new(group.q().unwrap()).unwrap();
    let f = match Formula::parse(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let (value, trace) = evaluate(&group, &spec, &f).unwrap();
    println!("[{f}] = {value}");
    println!("normalized: {}", trace.formula);
    println!(
        "L = {}, {} of {} residue tuples kept, {} cells",
        trace.l,
        trace.surviving_tuples(),
        trace.tuples.len(),
        trace.cell_count()
    );
    for t in trace.tuples.iter().filter(|t| t.kept) {
        for c in &t.cells {
            println!("  {:?}  {}  ->  {}", t.residues, c.cell, c.value);
        }
    }
}
