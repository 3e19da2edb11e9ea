//! Scaling regimes from (ε, δ, r) schedules.
//!
//!     cargo run --release --example classify

use neumann_sieve::regime::{classify, RegimeSequences, Sequence};

fn main() {
    let two = |e: f64| Sequence::power(2.0, e);
    let cases = [
        ("r = 2^-4j, δ = 2^-5j", -5.0, -4.0),
        ("r = δ = 2^-4j", -4.0, -4.0),
        ("r = 2^-7j/3, δ = 2^-3j/2", -1.5, -7.0 / 3.0),
        ("r = 2^-6j, δ = 2^-7j", -7.0, -6.0),
        ("r = 2^-3j, δ = 2^-4j", -4.0, -3.0),
    ];
    for (name, d, r) in cases {
        let seq = RegimeSequences { eps: two(-1.0), delta: two(d), r: two(r), n: 3, p: 1.5 };
        match classify(&seq) {
            Ok(rep) => {
                println!("{name:<26} {:?}: ℓ = {:?}, R = {:?}, consistency = {:?}", rep.label, rep.ell, rep.coefficient(), rep.consistency)
            }
            Err(e) => println!("{name:<26} error: {e}"),
        }
    }
    let thick = RegimeSequences { eps: two(-1.0), delta: two(-1.0), r: two(-2.0), n: 3, p: 1.5 };
    println!("δ = ε: {}", classify(&thick).unwrap_err());
}
