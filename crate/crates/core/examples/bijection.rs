//! Two definable bijections: halving `(0,1)` onto `(0,1/2)`, and splitting
//! `(0,1)` into two copies of `(0,1/7)`.
//!
//!     cargo run --example bijection

use k0group::formula::{AffineMap, Formula};
use k0group::group_model::{ratio, GroupDescriptor};
use k0group::harness::{scaling, BijectionPiece, BijectionSpec, Bounds, Checker};

fn main() {
    let group = GroupDescriptor::cofinite(&[7]).validate().unwrap();
    let checker = Checker::new(&group, Bounds::default()).unwrap();
    let p = |s: &str| Formula::parse(s).unwrap();
    let unit = p("0 < x0 and x0 < 1");

    let halve = scaling(1, 0, ratio(1, 2));
    let r = checker.check_bijection_invariance(&unit, &halve, &p("0 < 2*x0 and 2*x0 < 1"));
    println!(
        "x -> x/2: {}",
        if r.passed() { "values agree" } else { "FAILED" }
    );

    let affine = |a: i64, b: i64, c: i64, d: i64, n| AffineMap {
        target_arity: n,
        rows: vec![(vec![ratio(a, b)], ratio(c, d))],
    };
    let mut low = affine(1, 1, 0, 1, 1);
    low.rows.push((vec![ratio(0, 1)], ratio(0, 1)));
    let mut high = affine(-1, 6, 1, 6, 1);
    high.rows.push((vec![ratio(0, 1)], ratio(1, 1)));
    let inverse = |a, c| AffineMap {
        target_arity: 2,
        rows: vec![(vec![ratio(a, 1), ratio(0, 1)], ratio(c, 1))],
    };
    let split = BijectionSpec {
        input_arity: 1,
        output_arity: 2,
        pieces: vec![
            BijectionPiece {
                guard: p("0 < 7*x0 and 7*x0 < 1"),
                map: low,
            },
            BijectionPiece {
                guard: p("1 < 7*x0 and x0 < 1"),
                map: high,
            },
        ],
        inverse: Some(Box::new(BijectionSpec {
            input_arity: 2,
            output_arity: 1,
            pieces: vec![
                BijectionPiece {
                    guard: p("x1 = 0"),
                    map: inverse(1, 0),
                },
                BijectionPiece {
                    guard: p("x1 = 1"),
                    map: inverse(-6, 1),
                },
            ],
            inverse: None,
        })),
    };
    let copies = p("0 < 7*x0 and 7*x0 < 1 and (x1 = 0 or x1 = 1)");
    let r = checker.check_bijection_invariance(&unit, &split, &copies);
    println!(
        "(0,1) -> two copies of (0,1/7): {}",
        if r.passed() { "values agree" } else { "FAILED" }
    );
    let v = checker.evaluator().value(&copies).unwrap();
    println!("[(0,1)] = {v} = 2·(-1/2)");
}
