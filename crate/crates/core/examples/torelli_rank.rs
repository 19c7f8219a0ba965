//! Support matrix certificate for `t_1, t_3, …, t_{2D−1}`.
//!
//! `cargo run --release --example torelli_rank -- 100`

use std::time::Instant;

use swcalc::families::{Engine, Value};
use swcalc::torelli::rank_certificate;

fn main() {
    let size: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let start = Instant::now();
    let cert = rank_certificate(size, &Engine::default()).expect("diagonal certified");
    let elapsed = start.elapsed();

    if size <= 12 {
        let m = &cert.witness;
        print!("      ");
        for d in &m.ds {
            print!("{d:>3}");
        }
        println!();
        for (i, row) in m.entries.iter().enumerate() {
            print!("t_{:<3} ", m.ds[i]);
            for e in row {
                match e.value.reduce() {
                    Value::Mod2(b) => print!("{b:>3}"),
                    _ => print!("  ?"),
                }
            }
            println!();
        }
    }
    println!(
        "D = {size}: rank >= {}, lower unitriangular: {}, {:.2?}",
        cert.rank_lower_bound, cert.triangular, elapsed
    );
}
