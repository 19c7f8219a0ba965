use num_integer::Integer;
use proptest::prelude::*;
use swcalc::kahler::{KahlerChamber, KahlerModel, NumericalSemigroup};
use swcalc::lattice::LatticeVector;
use swcalc::manifold::{expected_dimension, spinc_family, Atom, E1LogModel, ManifoldExpr};

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        Just(Atom::CP2),
        Just(Atom::CP2bar),
        Just(Atom::S2xS2),
        Just(Atom::K3),
        Just(Atom::E1),
        (2i64..8, 2i64..8).prop_filter_map("coprime", |(m, n)| Atom::e1_log(m, n).ok()),
    ]
}

fn coprime_pairs(max: i64) -> impl Iterator<Item = (i64, i64)> {
    (2..=max).flat_map(move |m| (2..=max).map(move |n| (m, n))).filter(|(m, n)| m.gcd(n) == 1)
}

/// Brute-force membership in `⟨m, n⟩`.
fn in_semigroup(m: i64, n: i64, a: i64) -> bool {
    a >= 0 && (0..=a / m).any(|x| (a - m * x) % n == 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn euler_and_signature_consistent(atoms in prop::collection::vec(atom(), 1..6)) {
        if let Ok(x) = ManifoldExpr::new(atoms) {
            let inv = x.invariants();
            prop_assert_eq!(inv.euler - 2, (inv.b_plus + inv.b_minus) as i64);
            prop_assert_eq!(inv.sigma, inv.b_plus as i64 - inv.b_minus as i64);
        }
    }

    #[test]
    fn expected_dimension_is_integral(atoms in prop::collection::vec(atom(), 1..5), shift in prop::collection::vec(-5i64..=5, 48)) {
        let Ok(x) = ManifoldExpr::new(atoms) else { return Ok(()) };
        let l = x.lattice();
        let w = l.characteristic_parity();
        let coords: Vec<i64> = w.iter().zip(shift.iter().cycle()).map(|(&p, &s)| p as i64 + 2 * s).collect();
        let c = LatticeVector::new(l, coords).unwrap();
        prop_assume!(!c.is_zero() || l.is_even());
        let s = x.spinc(c.coords().to_vec()).unwrap();
        let num = s.square() - x.sigma();
        prop_assert_eq!(num.rem_euclid(4), 0);
        prop_assert_eq!(expected_dimension(&x, &s), num / 4 - x.b_plus() as i64 - 1);
    }

    #[test]
    fn wall_crossing_jump(m in 2i64..=30, n in 2i64..=30, a in -40i64..=940) {
        prop_assume!(m.gcd(&n) == 1);
        let model = KahlerModel::e1_log(m, n).unwrap();
        let l = model.line(a);
        let plus = model.sw_chambered(&l, KahlerChamber::Plus).unwrap().unwrap();
        let minus = model.sw_chambered(&l, KahlerChamber::Minus).unwrap().unwrap();
        if model.l2_minus_kl(&l).unwrap() >= 0 {
            prop_assert_eq!(plus - minus, 1);
        } else {
            prop_assert_eq!((plus, minus), (0, 0));
        }
    }

    #[test]
    fn charge_conjugation(m in 2i64..=30, n in 2i64..=30, a in -10i64..=900) {
        prop_assume!(m.gcd(&n) == 1);
        let model = KahlerModel::e1_log(m, n).unwrap();
        let k = m * n - m - n;
        let minus = model.sw_chambered(&model.line(a), KahlerChamber::Minus).unwrap();
        let plus_conj = model.sw_chambered(&model.line(k - a), KahlerChamber::Plus).unwrap();
        prop_assert_eq!(minus, plus_conj.map(|v| -v));
    }
}

#[test]
fn spinc_families_closed_under_negation() {
    for text in [vec![Atom::E1, Atom::S2xS2], vec![Atom::S2xS2, Atom::S2xS2], vec![Atom::CP2, Atom::CP2, Atom::CP2bar]] {
        let x = ManifoldExpr::new(text).unwrap();
        let fam = spinc_family(&x, 3).unwrap();
        for s in &fam {
            assert!(fam.contains(&s.conjugate()), "{:?}", s.coords());
            assert_eq!(expected_dimension(&x, s), -1);
        }
    }
}

#[test]
fn e1_log_models_up_to_fifty() {
    let mut count = 0;
    for (m, n) in coprime_pairs(50) {
        let model = E1LogModel::new(m, n).unwrap();
        assert_eq!(model.k, m * n - m - n);
        assert_eq!(model.canonical, model.t_prime.scale(model.k));
        assert_eq!(model.fiber, model.t_prime.scale(m * n));
        assert_eq!(model.fiber_m.scale(m), model.fiber);
        assert_eq!(model.fiber_n.scale(n), model.fiber);
        assert_eq!(model.canonical.square(), 0);
        assert!(model.t_prime.is_primitive());
        count += 1;
    }
    assert!(count > 1000);
}

#[test]
fn semigroup_symmetry_exhaustive() {
    for (m, n) in coprime_pairs(30) {
        let sg = NumericalSemigroup::new(m, n).unwrap();
        let f = m * n - m - n;
        assert_eq!(sg.frobenius_number(), f);
        for a in -5..=m * n + 5 {
            assert_eq!(sg.contains(a), in_semigroup(m, n, a), "{a} in <{m},{n}>");
        }
        for a in 0..=f {
            assert_ne!(sg.contains(a), sg.contains(f - a));
        }
    }
}

#[test]
fn zero_chamber_antisymmetry_and_positive_canonical_degree() {
    for (m, n) in coprime_pairs(30) {
        let model = KahlerModel::e1_log(m, n).unwrap();
        let k = m * n - m - n;
        assert!(model.k_degree() > 0.into());
        for a in 0..=k {
            let lhs = model.sw_zero_chamber(&model.line(a));
            let rhs = model.sw_zero_chamber(&model.line(k - a));
            match (lhs, rhs) {
                (Ok(Some(x)), Ok(Some(y))) => assert_eq!(x, -y, "a = {a} on E1({m},{n})"),
                (Err(_), Err(_)) => {}
                other => panic!("a = {a} on E1({m},{n}): {other:?}"),
            }
        }
    }
}
