//! Linear cylindrical cells for a divisibility-free conjunction.
//!
//!     cargo run --example cell_decomposition

use k0group::formula::Rel;
use k0group::group_model::ratio;
use k0group::lincell::{decompose, sample_point, AffineFn, LinearAtom};

fn main() {
    let lin = |a: i64, b: i64, c: i64| AffineFn::new(vec![ratio(a, 1), ratio(b, 1)], ratio(c, 1));
    // 0 < x0 < 1, x0 < x1 < 2
    let atoms = [
        LinearAtom::new(lin(-1, 0, 0), Rel::Lt),
        LinearAtom::new(lin(1, 0, -1), Rel::Lt),
        LinearAtom::new(lin(1, -1, 0), Rel::Lt),
        LinearAtom::new(lin(0, 1, -2), Rel::Lt),
    ];
    for cell in decompose(&atoms, 2) {
        let pt: Vec<String> = sample_point(&cell)
            .iter()
            .map(ToString::to_string)
            .collect();
        println!("{cell}    sample ({})", pt.join(", "));
        println!("    {}", cell.to_json());
    }
}
