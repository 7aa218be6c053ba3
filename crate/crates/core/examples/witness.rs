//! A prime `Q ≡ -1 (mod n)`, `Q ≡ 2 (mod q)`, found by CRT and a scan.
//!
//!     cargo run --example witness -- 7 3

use k0group::cli::cmd_witness;

fn main() {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let (n, q) = match args[..] {
        [n, q, ..] => (n, q),
        _ => (7, 3),
    };
    match cmd_witness(n, q, 10_000_000) {
        Ok(w) => print!("{}", w.to_text()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code() as i32);
        }
    }
}
