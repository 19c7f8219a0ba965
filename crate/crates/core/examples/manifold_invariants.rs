//! Connected sums of standard atoms, their invariants and `d(s) = −1` structures.

use swcalc::manifold::{expected_dimension, parse_manifold, spinc_family, E1LogModel};

fn main() {
    for text in ["2CP2 # 10CP2bar", "E1 # S2xS2", "E1(2,5) # S2xS2", "K3 # CP2bar", "S2xS2 # S2xS2"] {
        let x = parse_manifold(text).unwrap();
        let inv = x.invariants();
        println!(
            "{:<22} b+ {} b- {:>2} sigma {:>3} e {:>2} spin {:<5} psc {}",
            x.to_string(),
            inv.b_plus, inv.b_minus, inv.sigma, inv.euler, inv.is_spin, inv.is_psc
        );
    }
    for bad in ["E1(2,4)", "E1(1,3)", "CP2 # # CP2"] {
        println!("{bad:<22} error: {}", parse_manifold(bad).unwrap_err());
    }

    let model = E1LogModel::new(2, 5).unwrap();
    println!("E1(2,5): k = {}, K = {}, t' = {}", model.k, model.canonical, model.t_prime);

    let x = parse_manifold("2CP2 # 10CP2bar").unwrap();
    let classes = spinc_family(&x, 3).unwrap();
    println!("{x}: {} structures with d = -1 and |c_i| <= 3", classes.len());
    for s in classes.iter().take(3) {
        println!("  {:?} square {} d {}", s.coords(), s.square(), expected_dimension(&x, s));
    }
}
