//! Run a property suite from a JSON config (the bundled default when no
//! path is given) and print one line per check.
//!
//!     cargo run --release --example harness_suite -- crates/core/data/suites/default.json

use k0group::harness::{run_suite, SuiteConfig};

fn main() {
    let cfg = match std::env::args().nth(1) {
        Some(path) => SuiteConfig::load(path).expect("readable suite config"),
        None => SuiteConfig::reference(),
    };
    let report = run_suite(&cfg).expect("suite runs");
    for g in &report.groups {
        println!("{} (q = {})", g.group, g.q);
        for c in &g.checks {
            println!(
                "  {:<16} {:>5} trials, {} failures, {:.2}s",
                c.name,
                c.trials,
                c.failures.len(),
                c.elapsed.as_secs_f64()
            );
        }
    }
    std::process::exit(if report.passed() { 0 } else { 1 });
}
