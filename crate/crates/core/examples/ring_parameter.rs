//! Torsion parameter `q` and its certificate for a few groups.
//!
//!     cargo run --example ring_parameter

use k0group::group_model::{GroupDescriptor, QEvidence, DEFAULT_SCAN_BOUND};

fn main() {
    let groups = [
        GroupDescriptor::cofinite(&[7]),
        GroupDescriptor::cofinite(&[31]),
        GroupDescriptor::cofinite(&[3]),
        GroupDescriptor::cofinite(&[7, 13, 19]),
        GroupDescriptor::finite(&[2, 3, 5]),
    ];
    for desc in groups {
        let group = desc.validate().expect("valid descriptor");
        let cert = group.compute_q(DEFAULT_SCAN_BOUND).expect("scan succeeds");
        print!("{group}: q = {}", cert.q);
        match &cert.evidence {
            QEvidence::ExactGcd { gcd_trace, .. } => print!(", gcd trace {gcd_trace:?}"),
            QEvidence::DirichletWitnesses {
                base_prime,
                witnesses,
            } => {
                print!(", base prime {base_prime}");
                for w in witnesses {
                    print!(", {} ∤ {}-1", w.odd_prime, w.prime);
                }
            }
        }
        println!(" (verified: {})", cert.verify(&group));
    }
}
