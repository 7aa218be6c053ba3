//! The six interval values over `Z[1/p : p != 7]`, once from the table and
//! once through the full evaluation pipeline.
//!
//!     cargo run --example interval_table

use k0group::evaluator::Evaluator;
use k0group::formula::Formula;
use k0group::group_model::{ratio, GroupDescriptor};
use k0group::k0ring::{interval_value, Endpoint};

fn main() {
    let group = GroupDescriptor::cofinite(&[7]).validate().unwrap();
    let ev = Evaluator::for_group(&group).unwrap();
    let spec = *ev.spec();
    let at = |a, b| Endpoint::at(&group, ratio(a, b));
    let rows = [
        ("(0, 1)", "0 < x0 and x0 < 1", at(0, 1), at(1, 1)),
        ("(0, 1/7)", "0 < 7*x0 and 7*x0 < 1", at(0, 1), at(1, 7)),
        ("(1/7, 2/7)", "1 < 7*x0 and 7*x0 < 2", at(1, 7), at(2, 7)),
        ("(0, +inf)", "0 < x0", at(0, 1), Endpoint::PosInf),
        ("(1/7, +inf)", "7*x0 > 1", at(1, 7), Endpoint::PosInf),
        (
            "(-inf, +inf)",
            "x0 = x0",
            Endpoint::NegInf,
            Endpoint::PosInf,
        ),
    ];
    for (name, text, lo, hi) in rows {
        let table = interval_value(&spec, &lo, &hi);
        let pipeline = ev.value(&Formula::parse(text).unwrap()).unwrap();
        assert_eq!(table, pipeline);
        println!("{name:<14} {pipeline}");
    }
}
