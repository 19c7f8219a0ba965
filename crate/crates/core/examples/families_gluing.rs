//! Families invariants through the rewrite engine, with audit traces and replay.

use swcalc::families::{parse_diffeo, replay, Chamber, Engine, PsiTable};
use swcalc::manifold::parse_manifold;
use swcalc::torelli::build_td;

fn main() {
    let engine = Engine::default();
    let t = build_td(3).unwrap();
    println!("t_3 = {}", t.td);
    println!("s_3 = {:?}, divisibility {}", t.sd.coords(), t.sd.divisibility());

    let zero = engine.sw_family(&t.x, &t.sd, &t.td, Chamber::Zero).unwrap();
    println!("zero chamber: {}", zero.value);
    for name in zero.trace() {
        println!("  {name}");
    }
    println!("replay: {}", replay(&zero.derivation).unwrap());

    let constant = engine.sw_family(&t.x, &t.sd, &t.td, Chamber::Constant).unwrap();
    println!("constant chamber: {} via {}", constant.value, constant.trace()[0]);

    let x = parse_manifold("E1 # S2xS2").unwrap();
    let psis = PsiTable::default();
    for text in ["id # rho@1", "inv(td(1)) * td(1)", "td(1) * td(1)"] {
        let f = parse_diffeo(text, &x, &psis).unwrap();
        match engine.sw_family(&x, &t.sd, &f, Chamber::Zero) {
            Ok(v) => println!("{f}: {}", v.value),
            Err(e) => println!("{f}: {e}"),
        }
    }
}
