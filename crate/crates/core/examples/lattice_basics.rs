//! Unimodular lattices: signature, parity, characteristic vectors, `sgn₊`.

use std::sync::Arc;

use swcalc::lattice::{
    enumerate_characteristics, random_automorphism, sgn_plus_default, IntersectionLattice, LatticeAutomorphism,
    LatticeVector,
};

fn main() {
    let z19 = IntersectionLattice::odd(1, 9);
    let h = IntersectionLattice::hyperbolic();
    let l = Arc::new(z19.direct_sum(&h));
    let (p, q) = l.signature();
    println!("Z^(1,9) + H: rank {}, signature ({p},{q}), even: {}", l.rank(), l.is_even());
    println!("characteristic parity: {:?}", l.characteristic_parity());

    let e8 = IntersectionLattice::e8_negative();
    println!("-E8: sigma {}, even: {}", e8.sigma(), e8.is_even());

    // reflecting in an e_i flips a negative direction, in h a positive one
    let e1 = LatticeVector::basis(&l, 1);
    let h0 = LatticeVector::basis(&l, 0);
    for (name, v) in [("e1", &e1), ("h", &h0)] {
        let r = LatticeAutomorphism::reflection(v).unwrap();
        println!("reflection in {name}: det {}, sgn+ {}", r.determinant(), sgn_plus_default(&r));
    }

    let small = Arc::new(IntersectionLattice::odd(1, 2));
    let chars = enumerate_characteristics(&small, -1, 3);
    println!("characteristic c with c^2 = -1, |c_i| <= 3 on Z^(1,2): {}", chars.len());
    for c in chars.iter().take(6) {
        println!("  {c}  divisibility {}", c.divisibility());
    }

    let phi = random_automorphism(&l, 42, 20);
    let t = LatticeVector::new(&l, vec![-3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0]).unwrap();
    let image = phi.apply(&t).unwrap();
    println!(
        "random word (seed 42): sgn+ {}, c = {t} -> {image}, square {} -> {}, divisibility {} -> {}",
        sgn_plus_default(&phi),
        t.square(),
        image.square(),
        t.divisibility(),
        image.divisibility()
    );
}
