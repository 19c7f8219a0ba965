//! Sums of the families invariant over the divisibility classes `O_q`.

use swcalc::families::Engine;
use swcalc::torelli::{build_td, sw_oq, OqClass};

fn main() {
    let engine = Engine::default();
    for q in [1, 3, 5] {
        let t = build_td(q).unwrap();
        let bound = 3 * q;
        let members = OqClass::new(q).unwrap().enumerate(&t.x, bound).unwrap();
        let r = sw_oq(&engine, &t.x, &t.td, q, bound).unwrap();
        println!(
            "q = {q}, bound {bound}: {} members, {} unknown, total {}, certified part {}, support captured {}",
            members.len(),
            r.unknown_terms,
            r.value,
            r.certified_partial_sum,
            r.support_captured
        );
        for s in [&t.sd, &t.sd.conjugate()] {
            println!("  term at {:?}: {}", s.coords(), r.term(s.coords()).unwrap().value.value);
        }
    }
}
