use std::sync::Arc;
use std::time::{Duration, Instant};

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swcalc::families::{chamber_defined, replay, Chamber, CertifiedValue, DiffeoExpr, Engine, Rule, Value};
use swcalc::kahler::{KahlerChamber, KahlerModel};
use swcalc::lattice::{
    random_automorphism, sgn_plus, sgn_plus_default, IntersectionLattice, LatticeVector, PositiveSubspaceBasis,
};
use swcalc::manifold::expected_dimension;
use swcalc::rational::{q, Q};
use swcalc::torelli::{blowup_lift, build_td, rank_certificate, TdFamily};

const FUZZ_SEED: u64 = 0x5eed_2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Harness {
    failures: usize,
    audit: Vec<CertifiedValue>,
}

impl Harness {
    fn run(&mut self, id: u32, name: &str, limit: Duration, body: impl FnOnce(&mut Vec<CertifiedValue>) -> Outcome) {
        let start = Instant::now();
        let out = body(&mut self.audit);
        let elapsed = start.elapsed();
        let in_time = elapsed < limit;
        let pass = out.pass && in_time;
        if !pass {
            self.failures += 1;
        }
        println!(
            "[{}] {id}. {name}: {} ({:.2?}, limit {:?}{})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed,
            limit,
            if in_time { "" } else { ", over time" }
        );
    }
}

/// `a ∈ ⟨m, n⟩` by direct search.
fn in_semigroup(m: i64, n: i64, a: i64) -> bool {
    a >= 0 && (0..=a / m).any(|x| (a - m * x) % n == 0)
}

/// Zero-chamber value at `a t′` from the effectivity case split, membership by search.
fn sw_zero_oracle(m: i64, n: i64, a: i64) -> i64 {
    let k = m * n - m - n;
    let member = in_semigroup(m, n, a);
    if member && 2 * a < k {
        1
    } else if !member && k < 2 * a && a <= k {
        -1
    } else {
        0
    }
}

fn coprime_pairs(max: i64) -> Vec<(i64, i64)> {
    (2..=max).flat_map(|m| (2..=max).map(move |n| (m, n))).filter(|(m, n)| m.gcd(n) == 1).collect()
}

fn criterion_1(audit: &mut Vec<CertifiedValue>) -> Outcome {
    let engine = Engine::default();
    let mut bad = Vec::new();
    let mut count = 0;
    for d in (1..=199).step_by(2) {
        let t = build_td(d).expect("t_d");
        let v = t.diagonal_value(&engine).expect("query in scope");
        let parts: Vec<Value> = v.derivation.premises.iter().map(|p| p.value).collect();
        // t_d = f_d ∘ f_0 splits as 1 + 0
        if v.value != Value::Mod2(1) || v.derivation.rule != Rule::R3Composition || parts != [Value::Mod2(1), Value::Mod2(0)] {
            bad.push(d);
        }
        count += 1;
        audit.push(v);
    }
    check(bad.is_empty(), format!("{count} queries t_1..t_199 certify 1 (mod 2) as 1 + 0; failing d: {bad:?}"))
}

fn criterion_2(audit: &mut Vec<CertifiedValue>) -> Outcome {
    let engine = Engine::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for size in [50, 100] {
        match rank_certificate(size, &engine) {
            Ok(cert) => {
                let f2 = cert.witness.f2_rank();
                ok &= cert.triangular && cert.rank_lower_bound >= size && f2 == Some(size);
                notes.push(format!("D={size}: triangular {}, rank {}, F2 rank {f2:?}", cert.triangular, cert.rank_lower_bound));
                audit.extend(cert.witness.entries.into_iter().flatten());
            }
            Err(e) => {
                ok = false;
                notes.push(format!("D={size}: {e}"));
            }
        }
    }
    check(ok, notes.join("; "))
}

fn criterion_3() -> Outcome {
    let mut cases = 0u64;
    let mut bad = Vec::new();
    for (m, n) in coprime_pairs(30) {
        let model = KahlerModel::e1_log(m, n).unwrap();
        for a in 0..=m * n {
            let l = model.line(a);
            let rr = model.l2_minus_kl(&l).unwrap();
            let plus = model.sw_chambered(&l, KahlerChamber::Plus).unwrap();
            let minus = model.sw_chambered(&l, KahlerChamber::Minus).unwrap();
            let jump = plus.zip(minus).map(|(p, q)| p - q);
            if rr != 0 || jump != Some(1) {
                bad.push((m, n, a));
            }
            cases += 1;
        }
    }
    check(bad.is_empty(), format!("{cases} cases, L^2 - KL = 0 and SW+ - SW- = 1 on all; failures {:?}", &bad[..bad.len().min(5)]))
}

fn criterion_4() -> Outcome {
    let mut cases = 0u64;
    let mut bad = Vec::new();
    for (m, n) in coprime_pairs(30) {
        let model = KahlerModel::e1_log(m, n).unwrap();
        let k = m * n - m - n;
        for a in 0..=k {
            let lhs = model.sw_zero_chamber(&model.line(a)).unwrap();
            let rhs = model.sw_zero_chamber(&model.line(k - a)).unwrap();
            let symmetric = in_semigroup(m, n, a) != in_semigroup(m, n, k - a);
            let oracle = sw_zero_oracle(m, n, a);
            if lhs.is_none() || lhs != rhs.map(|v| -v) || !symmetric || lhs != Some(oracle) {
                bad.push((m, n, a));
            }
            cases += 1;
        }
    }
    check(bad.is_empty(), format!("{cases} cases antisymmetric and equal to the semigroup oracle; failures {:?}", &bad[..bad.len().min(5)]))
}

fn criterion_5(audit: &mut Vec<CertifiedValue>) -> Outcome {
    let engine = Engine::default();
    let mut bad = Vec::new();
    let mut steps = 0;
    for d in [1, 3, 5] {
        let lift = blowup_lift(&build_td(d).unwrap(), 5, &engine).unwrap();
        if lift.base_value.value != Value::Mod2(1) {
            bad.push(format!("t_{d} base {}", lift.base_value.value));
        }
        for (i, step) in lift.steps.iter().enumerate() {
            let ok = step.value.value == lift.base_value.value
                && step.expected_dimension == -1
                && step.value.derivation.rule == Rule::R2Blowup
                && step.x.b_minus() == 11 + i;
            if !ok {
                bad.push(format!("t_{d} step {}", i + 1));
            }
            steps += 1;
        }
        audit.push(lift.base_value);
        audit.extend(lift.steps.into_iter().map(|s| s.value));
    }
    check(bad.is_empty(), format!("{steps} lifts X_11..X_15 keep value via R2 and d = -1; failures {bad:?}"))
}

fn box_vectors(l: &Arc<IntersectionLattice>, bound: i64) -> impl Iterator<Item = LatticeVector> + '_ {
    let n = l.rank() as u32;
    let side = 2 * bound + 1;
    (0..side.pow(n)).map(move |idx| {
        let coords = (0..n).map(|i| (idx / side.pow(i)) % side - bound).collect();
        LatticeVector::new(l, coords).unwrap()
    })
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(FUZZ_SEED);
    let mut notes = Vec::new();
    let mut ok = true;

    let mut forms = Vec::new();
    for r in 1..=4usize {
        for p in 0..=r {
            forms.push(IntersectionLattice::odd(p, r - p));
        }
    }
    forms.push(IntersectionLattice::hyperbolic());
    forms.push(IntersectionLattice::hyperbolic().direct_sum(&IntersectionLattice::odd(1, 1)));
    forms.push(IntersectionLattice::hyperbolic().direct_sum(&IntersectionLattice::hyperbolic()));
    let mut exhaustive = 0u64;
    for form in forms {
        let l = Arc::new(form);
        for v in box_vectors(&l, 5).filter(LatticeVector::is_characteristic) {
            ok &= (v.square() - l.sigma()).rem_euclid(8) == 0;
            exhaustive += 1;
        }
    }
    notes.push(format!("van der Blij on {exhaustive} characteristic vectors of rank <= 4"));

    let z = Arc::new(IntersectionLattice::odd(2, 10));
    for _ in 0..10_000 {
        let coords = (0..12).map(|_| 2 * rng.gen_range(-20i64..=20) + 1).collect();
        let c = LatticeVector::new(&z, coords).unwrap();
        ok &= c.is_characteristic() && (c.square() - z.sigma()).rem_euclid(8) == 0;
    }
    notes.push("1e4 fuzzed on Z^(2,10)".into());

    let base = PositiveSubspaceBasis::from_diagonalization(&z);
    let mut distinct = 0;
    for _ in 0..1_000 {
        let f = random_automorphism(&z, rng.gen(), 10);
        let g = random_automorphism(&z, rng.gen(), 10);
        let fg = f.compose(&g).unwrap();
        ok &= sgn_plus_default(&fg) == sgn_plus_default(&f) * sgn_plus_default(&g);
        let moved = base.transformed(&random_automorphism(&z, rng.gen(), 6));
        let tilted: Vec<Vec<Q>> = moved
            .vectors()
            .iter()
            .map(|v| v.iter().map(|x| x + q(rng.gen_range(-2i64..=2)) / q(9)).collect())
            .collect();
        let other = PositiveSubspaceBasis::new(&z, tilted).unwrap_or(moved);
        if other.vectors() != base.vectors() {
            distinct += 1;
        }
        ok &= sgn_plus(&f, &base) == sgn_plus(&f, &other);
    }
    ok &= distinct >= 100;
    notes.push(format!("sgn+ on 1e3 pairs, {distinct} with a distinct basis"));

    let x = Arc::new(IntersectionLattice::odd(1, 9).direct_sum(&IntersectionLattice::hyperbolic()));
    let w = x.characteristic_parity();
    for _ in 0..1_000 {
        let phi = random_automorphism(&x, rng.gen(), rng.gen_range(1..30));
        let scale = 2 * rng.gen_range(0i64..6) + 1;
        let coords = w.iter().map(|&p| (p as i64 + 2 * rng.gen_range(-4i64..=4)) * scale).collect();
        let c = LatticeVector::new(&x, coords).unwrap();
        let image = phi.apply(&c).unwrap();
        ok &= image.square() == c.square() && image.divisibility() == c.divisibility();
    }
    notes.push("1e3 reflection words keep square and divisibility".into());
    check(ok, notes.join("; "))
}

fn compositions(ts: &[TdFamily]) -> Vec<(String, DiffeoExpr)> {
    let mut out = Vec::new();
    for a in ts {
        out.push((format!("t_{}", a.d), a.td.clone()));
        out.push((format!("inv(t_{})", a.d), DiffeoExpr::inverse(&a.td)));
        for b in ts {
            out.push((format!("t_{} * t_{}", a.d, b.d), DiffeoExpr::compose(&a.td, &b.td).unwrap()));
        }
        let inv = DiffeoExpr::inverse(&a.td);
        for b in ts.iter().take(4) {
            let c = DiffeoExpr::compose(&DiffeoExpr::compose(&a.td, &b.td).unwrap(), &inv).unwrap();
            out.push((format!("t_{} * t_{} * inv(t_{})", a.d, b.d, a.d), c));
        }
    }
    out
}

fn criterion_7(audit: &mut Vec<CertifiedValue>) -> Outcome {
    let engine = Engine::default();
    let ts: Vec<TdFamily> = (1..=15).step_by(2).map(|d| build_td(d).unwrap()).collect();
    let x = ts[0].x.clone();
    let mut queries = 0;
    let mut distinct_paths = 0;
    let mut skipped = 0;
    let mut bad = Vec::new();
    for (name, f) in compositions(&ts) {
        for col in &ts {
            let s = &col.sd;
            if !f.preserves(s)
                || expected_dimension(&x, s) != -1
                || !chamber_defined(&x, s, &f, Chamber::Zero)
                || !chamber_defined(&x, s, &f, Chamber::Constant)
            {
                skipped += 1;
                continue;
            }
            let zero = engine.sw_family(&x, s, &f, Chamber::Zero).unwrap();
            let constant = engine.sw_family(&x, s, &f, Chamber::Constant).unwrap();
            if !zero.value.is_certified() || zero.value != constant.value {
                bad.push(format!("{name} at s_{}: {} vs {}", col.d, zero.value, constant.value));
            }
            if zero.trace() != constant.trace() {
                distinct_paths += 1;
            }
            queries += 1;
            audit.push(zero);
            audit.push(constant);
        }
    }
    // blowup lifts need c^2 >= 0 for the zero chamber, so they only enter when in scope
    for t in ts.iter().take(3) {
        let lift = blowup_lift(t, 2, &engine).unwrap();
        for step in &lift.steps {
            if chamber_defined(&step.x, &step.s, &step.f, Chamber::Zero) {
                let zero = engine.sw_family(&step.x, &step.s, &step.f, Chamber::Zero).unwrap();
                if zero.value != step.value.value {
                    bad.push(format!("lift of t_{}", t.d));
                }
                queries += 1;
            } else {
                skipped += 1;
            }
        }
    }
    check(
        bad.is_empty() && queries > 0 && distinct_paths > 0,
        format!("{queries} queries agree exactly ({distinct_paths} by structurally different derivations, {skipped} out of scope); disagreements {bad:?}"),
    )
}

fn criterion_8(audit: &[CertifiedValue]) -> Outcome {
    let mut bad = 0;
    let mut nodes = 0;
    let mut certified = 0;
    for v in audit {
        if v.value.is_certified() {
            certified += 1;
        }
        nodes += v.derivation.size();
        match replay(&v.derivation) {
            Ok(r) if r == v.value && v.derivation.value == v.value => {}
            _ => bad += 1,
        }
    }
    check(
        bad == 0 && certified == audit.len(),
        format!("{} outputs ({certified} certified, {nodes} derivation nodes) replayed; {bad} mismatches", audit.len()),
    )
}

fn main() {
    let mut h = Harness { failures: 0, audit: Vec::new() };
    let s = Duration::from_secs;
    h.run(1, "t_d reproduces 0 + 1 = 1 (mod 2) for odd d <= 199", s(5), criterion_1);
    h.run(2, "rank certificates for D = 50 and D = 100", s(30), criterion_2);
    h.run(3, "wall-crossing jump on E1(m,n), m, n <= 30", s(5), |_| criterion_3());
    h.run(4, "charge-conjugation antisymmetry of the zero chamber", s(5), |_| criterion_4());
    h.run(5, "blowup tower for t_1, t_3, t_5", s(5), criterion_5);
    h.run(6, "lattice property suite", s(30), |_| criterion_6());
    h.run(7, "constant and zero chambers coincide", s(10), criterion_7);
    let audit = std::mem::take(&mut h.audit);
    h.run(8, "every certified output replays bit-exactly", s(30), |_| criterion_8(&audit));
    println!("{} of 8 criteria passed", 8 - h.failures);
    if h.failures > 0 {
        std::process::exit(1);
    }
}
