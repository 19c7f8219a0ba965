//! Connected sums of standard simply-connected 4-manifolds, their invariants
//! and spin^c classes.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{enumerate_characteristics, IntersectionLattice, LatticeError, LatticeVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ManifoldError {
    #[error("manifold expression has no summands")]
    Empty,
    #[error("E1({m},{n}) needs coprime multiplicities")]
    NotCoprime { m: i64, n: i64 },
    #[error("E1({m},{n}) needs m, n >= 2")]
    MultiplicityTooSmall { m: i64, n: i64 },
    #[error("spin form with signature {0} violates Rochlin's theorem")]
    Rochlin(i64),
    #[error("class is not characteristic")]
    NotCharacteristic,
    #[error("zero is not a characteristic of an odd form")]
    ZeroOnOddForm,
    #[error("spin^c families need b+ = 2, got {0}")]
    BPlusNotTwo(usize),
    #[error("summand index {index} out of range for {len} summands")]
    SummandIndex { index: usize, len: usize },
    #[error("canonical model invariant failed: {0}")]
    ModelInvariant(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A standard atom of the connected-sum algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    CP2,
    CP2bar,
    S2xS2,
    K3,
    E1,
    E1Log { m: i64, n: i64 },
}

impl Atom {
    pub fn e1_log(m: i64, n: i64) -> Result<Atom, ManifoldError> {
        if m < 2 || n < 2 {
            return Err(ManifoldError::MultiplicityTooSmall { m, n });
        }
        if m.gcd(&n) != 1 {
            return Err(ManifoldError::NotCoprime { m, n });
        }
        Ok(Atom::E1Log { m, n })
    }

    /// Gram block in the atom's own chart.
    pub fn lattice(&self) -> IntersectionLattice {
        static CACHE: OnceLock<[IntersectionLattice; 5]> = OnceLock::new();
        let cache = CACHE.get_or_init(|| {
            [Atom::CP2, Atom::CP2bar, Atom::S2xS2, Atom::K3, Atom::E1].map(|a| a.build_lattice())
        });
        let slot = match self {
            Atom::CP2 => 0,
            Atom::CP2bar => 1,
            Atom::S2xS2 => 2,
            Atom::K3 => 3,
            Atom::E1 | Atom::E1Log { .. } => 4,
        };
        cache[slot].clone()
    }

    fn build_lattice(&self) -> IntersectionLattice {
        match self {
            Atom::CP2 => IntersectionLattice::diagonal(&[1], &["h"]).expect("unimodular"),
            Atom::CP2bar => IntersectionLattice::diagonal(&[-1], &["e"]).expect("unimodular"),
            Atom::S2xS2 => IntersectionLattice::hyperbolic(),
            Atom::E1 | Atom::E1Log { .. } => e1_chart(),
            Atom::K3 => {
                let e8 = IntersectionLattice::e8_negative();
                let h = IntersectionLattice::hyperbolic();
                e8.with_prefix("E8a.")
                    .direct_sum(&e8.with_prefix("E8b."))
                    .direct_sum(&h.with_prefix("H1."))
                    .direct_sum(&h.with_prefix("H2."))
                    .direct_sum(&h.with_prefix("H3."))
            }
        }
    }

    pub fn is_psc(&self) -> bool {
        matches!(self, Atom::CP2 | Atom::CP2bar | Atom::S2xS2 | Atom::E1)
    }

    pub fn name(&self) -> String {
        match self {
            Atom::CP2 => "CP2".into(),
            Atom::CP2bar => "CP2bar".into(),
            Atom::S2xS2 => "S2xS2".into(),
            Atom::K3 => "K3".into(),
            Atom::E1 => "E1".into(),
            Atom::E1Log { m, n } => format!("E1({m},{n})"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `Z^{1,9}` with basis `h, e1, …, e9`.
fn e1_chart() -> IntersectionLattice {
    let mut labels = vec!["h".to_string()];
    labels.extend((1..=9).map(|i| format!("e{i}")));
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut entries = vec![-1; 10];
    entries[0] = 1;
    IntersectionLattice::diagonal(&entries, &refs).expect("unimodular")
}

/// Coordinates of `3h − e1 − … − e9` in the `E(1)` chart.
pub fn t_prime_coords() -> Vec<i64> {
    let mut c = vec![-1; 10];
    c[0] = 3;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariants {
    pub b_plus: usize,
    pub b_minus: usize,
    pub sigma: i64,
    pub euler: i64,
    pub is_spin: bool,
    pub is_psc: bool,
}

/// An ordered connected sum `X_1 # … # X_r`.
#[derive(Debug, Clone)]
pub struct ManifoldExpr {
    summands: Vec<Atom>,
    offsets: Vec<usize>,
    lattice: Arc<IntersectionLattice>,
}

impl PartialEq for ManifoldExpr {
    fn eq(&self, other: &Self) -> bool {
        self.summands == other.summands
    }
}

impl Eq for ManifoldExpr {}

fn rochlin_check(lattice: &IntersectionLattice) -> Result<(), ManifoldError> {
    if lattice.is_even() && lattice.sigma().rem_euclid(16) != 0 {
        return Err(ManifoldError::Rochlin(lattice.sigma()));
    }
    Ok(())
}

impl ManifoldExpr {
    pub fn new(summands: Vec<Atom>) -> Result<Self, ManifoldError> {
        if summands.is_empty() {
            return Err(ManifoldError::Empty);
        }
        for a in &summands {
            if let Atom::E1Log { m, n } = *a {
                Atom::e1_log(m, n)?;
            }
        }
        let mut lattice = IntersectionLattice::zero();
        let mut offsets = Vec::with_capacity(summands.len());
        for (i, a) in summands.iter().enumerate() {
            offsets.push(lattice.rank());
            lattice = lattice.direct_sum(&a.lattice().with_prefix(&format!("{}@{i}:", a.name())));
        }
        rochlin_check(&lattice)?;
        Ok(ManifoldExpr { summands, offsets, lattice: Arc::new(lattice) })
    }

    pub fn atom(a: Atom) -> Self {
        ManifoldExpr::new(vec![a]).expect("single atoms are valid")
    }

    /// `2CP² # n·conj-CP²`.
    pub fn x_n(n: usize) -> Self {
        let mut s = vec![Atom::CP2; 2];
        s.extend(std::iter::repeat_n(Atom::CP2bar, n));
        ManifoldExpr::new(s).expect("valid")
    }

    pub fn summands(&self) -> &[Atom] {
        &self.summands
    }

    pub fn lattice(&self) -> &Arc<IntersectionLattice> {
        &self.lattice
    }

    /// Coordinate range of summand `i` in the combined lattice.
    pub fn summand_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.offsets[i];
        start..start + self.summands[i].lattice().rank()
    }

    pub fn connected_sum(&self, other: &ManifoldExpr) -> Result<ManifoldExpr, ManifoldError> {
        let mut s = self.summands.clone();
        s.extend_from_slice(&other.summands);
        ManifoldExpr::new(s)
    }

    /// Summands `lo..hi` as their own expression.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<ManifoldExpr, ManifoldError> {
        if hi > self.summands.len() || lo >= hi {
            return Err(ManifoldError::SummandIndex { index: hi, len: self.summands.len() });
        }
        ManifoldExpr::new(self.summands[lo..hi].to_vec())
    }

    /// The expression with summand `i` removed.
    pub fn without(&self, i: usize) -> Result<ManifoldExpr, ManifoldError> {
        if i >= self.summands.len() {
            return Err(ManifoldError::SummandIndex { index: i, len: self.summands.len() });
        }
        let mut s = self.summands.clone();
        s.remove(i);
        ManifoldExpr::new(s)
    }

    pub fn invariants(&self) -> Invariants {
        let (b_plus, b_minus) = self.lattice.signature();
        Invariants {
            b_plus,
            b_minus,
            sigma: self.lattice.sigma(),
            euler: 2 + (b_plus + b_minus) as i64,
            is_spin: self.lattice.is_even(),
            is_psc: self.summands.iter().all(Atom::is_psc),
        }
    }

    pub fn sigma(&self) -> i64 {
        self.lattice.sigma()
    }

    pub fn b_plus(&self) -> usize {
        self.lattice.signature().0
    }

    pub fn b_minus(&self) -> usize {
        self.lattice.signature().1
    }

    pub fn spinc(&self, coords: Vec<i64>) -> Result<SpinCClass, ManifoldError> {
        SpinCClass::new(LatticeVector::new(&self.lattice, coords)?)
    }
}

impl fmt::Display for ManifoldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.summands.len() {
            let a = self.summands[i];
            let mut j = i;
            while j < self.summands.len() && self.summands[j] == a {
                j += 1;
            }
            let count = j - i;
            parts.push(if count == 1 { a.name() } else { format!("{count}{}", a.name()) });
            i = j;
        }
        f.write_str(&parts.join(" # "))
    }
}

/// A spin^c structure, recorded by its characteristic `c(s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinCClass {
    c: LatticeVector,
}

impl SpinCClass {
    pub fn new(c: LatticeVector) -> Result<Self, ManifoldError> {
        if !c.is_characteristic() {
            return Err(ManifoldError::NotCharacteristic);
        }
        if c.is_zero() && !c.lattice().is_even() {
            return Err(ManifoldError::ZeroOnOddForm);
        }
        Ok(SpinCClass { c })
    }

    pub fn c(&self) -> &LatticeVector {
        &self.c
    }

    pub fn coords(&self) -> &[i64] {
        self.c.coords()
    }

    pub fn square(&self) -> i64 {
        self.c.square()
    }

    pub fn divisibility(&self) -> u64 {
        self.c.divisibility()
    }

    /// Charge conjugate, `c ↦ −c`.
    pub fn conjugate(&self) -> SpinCClass {
        SpinCClass { c: self.c.neg() }
    }

    /// Coordinates on summand `i` of `x`.
    pub fn component(&self, x: &ManifoldExpr, i: usize) -> Vec<i64> {
        self.c.coords()[x.summand_range(i)].to_vec()
    }
}

impl fmt::Display for SpinCClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.c.fmt(f)
    }
}

/// `d(s) = (c² − σ)/4 − b₊ − 1`.
pub fn expected_dimension(x: &ManifoldExpr, s: &SpinCClass) -> i64 {
    let num = s.square() - x.sigma();
    debug_assert_eq!(num.rem_euclid(8), 0, "van der Blij");
    num / 4 - x.b_plus() as i64 - 1
}

/// Characteristics with `d(s) = −1`, i.e. `c² = 10 − b₋`, inside the box `|c_i| ≤ bound`.
pub fn spinc_family(x: &ManifoldExpr, bound: i64) -> Result<Vec<SpinCClass>, ManifoldError> {
    if x.b_plus() != 2 {
        return Err(ManifoldError::BPlusNotTwo(x.b_plus()));
    }
    let square = 10 - x.b_minus() as i64;
    enumerate_characteristics(x.lattice(), square, bound)
        .into_iter()
        .map(SpinCClass::new)
        .collect()
}

/// `s1 # s2` on `x1 # x2`.
pub fn connected_sum_spinc(
    x1: &ManifoldExpr,
    s1: &SpinCClass,
    x2: &ManifoldExpr,
    s2: &SpinCClass,
) -> Result<(ManifoldExpr, SpinCClass), ManifoldError> {
    let x = x1.connected_sum(x2)?;
    let mut coords = s1.coords().to_vec();
    coords.extend_from_slice(s2.coords());
    let s = x.spinc(coords)?;
    Ok((x, s))
}

/// Classes on `E(1)_{m,n}` in the fixed chart: `K = k t′` with `k = mn − m − n`.
#[derive(Debug, Clone)]
pub struct E1LogModel {
    pub m: i64,
    pub n: i64,
    pub k: i64,
    pub t_prime: LatticeVector,
    pub canonical: LatticeVector,
    pub fiber: LatticeVector,
    pub fiber_m: LatticeVector,
    pub fiber_n: LatticeVector,
}

impl E1LogModel {
    pub fn new(m: i64, n: i64) -> Result<Self, ManifoldError> {
        let atom = Atom::e1_log(m, n)?;
        let lattice = Arc::new(atom.lattice());
        let t_prime = LatticeVector::new(&lattice, t_prime_coords())?;
        let k = m * n - m - n;
        let model = E1LogModel {
            m,
            n,
            k,
            canonical: t_prime.scale(k),
            fiber: t_prime.scale(m * n),
            fiber_m: t_prime.scale(n),
            fiber_n: t_prime.scale(m),
            t_prime,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ManifoldError> {
        let fail = |what: &str| Err(ManifoldError::ModelInvariant(what.into()));
        if !(self.t_prime.is_primitive() && self.t_prime.square() == 0 && self.t_prime.is_characteristic()) {
            return fail("t' primitive characteristic of square 0");
        }
        if self.canonical.square() != 0 {
            return fail("K^2 = 0");
        }
        if self.canonical.divisibility() != self.k.unsigned_abs() {
            return fail("div K = mn - m - n");
        }
        if self.fiber_n.scale(self.n) != self.fiber || self.fiber_m.scale(self.m) != self.fiber {
            return fail("n F_n = F = m F_m");
        }
        let rhs = self
            .fiber
            .neg()
            .add(&self.fiber_n.scale(self.n - 1))?
            .add(&self.fiber_m.scale(self.m - 1))?;
        if rhs != self.canonical {
            return fail("K = -F + (n-1)F_n + (m-1)F_m");
        }
        Ok(())
    }

    pub fn lattice(&self) -> &Arc<IntersectionLattice> {
        self.t_prime.lattice()
    }
}

/// Byte-offset syntax error from one of the expression parsers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError { offset, message: message.into() }
    }
}

pub(crate) struct Cursor<'a> {
    pub text: &'a str,
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    pub fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    pub fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    pub fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::new(self.pos, format!("expected '{c}'")))
        }
    }

    /// Case-insensitive keyword match, longest candidates should be tried first.
    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        if rest.len() >= kw.len() && rest.is_char_boundary(kw.len()) && rest[..kw.len()].eq_ignore_ascii_case(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    pub fn integer(&mut self) -> Result<Option<(usize, i64)>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let neg = rest.starts_with('-');
        let body = if neg { &rest[1..] } else { rest };
        let digits = body.bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return Ok(None);
        }
        let len = digits + usize::from(neg);
        let value: i64 = rest[..len]
            .parse()
            .map_err(|_| ParseError::new(start, "integer out of range"))?;
        self.pos += len;
        Ok(Some((start, value)))
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.text.len()
    }
}

fn parse_atom(cur: &mut Cursor<'_>) -> Result<Atom, ParseError> {
    let start = {
        cur.skip_ws();
        cur.pos
    };
    for (kw, atom) in [("CP2bar", Atom::CP2bar), ("CP2", Atom::CP2), ("S2xS2", Atom::S2xS2), ("K3", Atom::K3)] {
        if cur.eat_keyword(kw) {
            return Ok(atom);
        }
    }
    if cur.eat_keyword("E1") {
        if !cur.eat('(') {
            return Ok(Atom::E1);
        }
        let m = cur.integer()?.ok_or_else(|| ParseError::new(cur.pos, "expected multiplicity m"))?.1;
        cur.expect(',')?;
        let n = cur.integer()?.ok_or_else(|| ParseError::new(cur.pos, "expected multiplicity n"))?.1;
        cur.expect(')')?;
        return Atom::e1_log(m, n).map_err(|e| ParseError::new(start, e.to_string()));
    }
    Err(ParseError::new(start, "expected an atom: CP2, CP2bar, S2xS2, K3, E1 or E1(m,n)"))
}

/// Parses expressions such as `2CP2 # 10CP2bar` or `E1(2,5) # S2xS2`.
pub fn parse_manifold(text: &str) -> Result<ManifoldExpr, ParseError> {
    let mut cur = Cursor::new(text);
    let mut summands = Vec::new();
    loop {
        let count = match cur.integer()? {
            Some((at, c)) if c < 1 => return Err(ParseError::new(at, "repetition count must be positive")),
            Some((_, c)) => {
                cur.eat('×');
                cur.eat('*');
                c as usize
            }
            None => 1,
        };
        let atom = parse_atom(&mut cur)?;
        summands.extend(std::iter::repeat_n(atom, count));
        if cur.at_end() {
            break;
        }
        if !cur.eat('#') {
            return Err(ParseError::new(cur.pos, "expected '#' or end of input"));
        }
    }
    ManifoldExpr::new(summands).map_err(|e| ParseError::new(0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_of_examples() {
        let x = parse_manifold("E1(2,3) # S2xS2").unwrap();
        assert_eq!(x.lattice().signature(), (2, 10));
        assert_eq!(ManifoldExpr::atom(Atom::CP2).lattice().gram(), &[vec![1]]);
        let x = ManifoldExpr::x_n(10);
        assert_eq!(x.lattice().signature(), (2, 10));
        assert_eq!(x.sigma(), -8);
        assert_eq!(x.lattice().labels()[2], "CP2bar@2:e");
    }

    #[test]
    fn invariants_examples() {
        let inv = |s: &str| parse_manifold(s).unwrap().invariants();
        let x10 = inv("2CP2 # 10CP2bar");
        assert_eq!(
            (x10.b_plus, x10.b_minus, x10.sigma, x10.euler, x10.is_spin, x10.is_psc),
            (2, 10, -8, 14, false, true)
        );
        let k3 = inv("K3");
        assert_eq!((k3.b_plus, k3.b_minus, k3.sigma, k3.euler, k3.is_spin, k3.is_psc), (3, 19, -16, 24, true, false));
        let e = inv("E1(2,3)");
        assert_eq!((e.b_plus, e.b_minus, e.sigma, e.euler, e.is_spin, e.is_psc), (1, 9, -8, 12, false, false));
        assert!(inv("E1").is_psc);
    }

    #[test]
    fn rochlin_guard_rejects_even_forms_of_bad_signature() {
        assert_eq!(rochlin_check(&IntersectionLattice::e8_negative()), Err(ManifoldError::Rochlin(-8)));
        assert!(rochlin_check(&Atom::K3.lattice()).is_ok());
    }

    #[test]
    fn expected_dimension_examples() {
        let x = ManifoldExpr::x_n(10);
        let mut c = vec![1; 12];
        c[0] = 3;
        let s = x.spinc(c).unwrap();
        assert_eq!(s.square(), 0);
        assert_eq!(expected_dimension(&x, &s), -1);

        let cp2 = ManifoldExpr::atom(Atom::CP2);
        assert_eq!(expected_dimension(&cp2, &cp2.spinc(vec![3]).unwrap()), 0);

        let model = E1LogModel::new(2, 3).unwrap();
        let e = ManifoldExpr::atom(Atom::e1_log(2, 3).unwrap());
        let k = SpinCClass::new(model.canonical.rebase(e.lattice()).unwrap()).unwrap();
        assert_eq!(expected_dimension(&e, &k), 0);
    }

    #[test]
    fn spinc_family_small_bound() {
        let x = ManifoldExpr::x_n(10);
        // every ±1 vector has square 2 - 10 < 0
        assert!(spinc_family(&x, 1).unwrap().is_empty());
        assert!(spinc_family(&x, 0).unwrap().is_empty());
        let k3 = ManifoldExpr::atom(Atom::K3);
        assert_eq!(spinc_family(&k3, 1), Err(ManifoldError::BPlusNotTwo(3)));
    }

    #[test]
    fn connected_sum_spinc_example() {
        let e = ManifoldExpr::atom(Atom::e1_log(2, 3).unwrap());
        let model = E1LogModel::new(2, 3).unwrap();
        let s_can = e.spinc(model.canonical.neg().coords().to_vec()).unwrap();
        let h = ManifoldExpr::atom(Atom::S2xS2);
        let s0 = h.spinc(vec![0, 0]).unwrap();
        let (x, s) = connected_sum_spinc(&e, &s_can, &h, &s0).unwrap();
        assert_eq!(x.to_string(), "E1(2,3) # S2xS2");
        assert_eq!(s.square(), 0);
        assert_eq!(s.component(&x, 1), vec![0, 0]);
        assert_eq!(expected_dimension(&x, &s), -1);
    }

    #[test]
    fn spinc_rejects_non_characteristic_and_zero() {
        let x = ManifoldExpr::x_n(1);
        assert_eq!(x.spinc(vec![1, 1, 0]), Err(ManifoldError::NotCharacteristic));
        let odd = ManifoldExpr::atom(Atom::CP2);
        assert_eq!(odd.spinc(vec![0]), Err(ManifoldError::NotCharacteristic));
        let h = ManifoldExpr::atom(Atom::S2xS2);
        assert!(h.spinc(vec![0, 0]).is_ok());
    }

    #[test]
    fn e1_log_models_hold_up_to_fifty() {
        for m in 2..=50 {
            for n in 2..=50 {
                if m.gcd(&n) == 1 {
                    let model = E1LogModel::new(m, n).unwrap();
                    assert_eq!(model.canonical.divisibility() as i64, m * n - m - n);
                }
            }
        }
        assert!(E1LogModel::new(2, 4).is_err());
    }

    #[test]
    fn parser_accepts_spacing_and_runs() {
        let x = parse_manifold("  2 CP2#10CP2bar ").unwrap();
        assert_eq!(x.summands().len(), 12);
        assert_eq!(x.to_string(), "2CP2 # 10CP2bar");
        assert_eq!(parse_manifold(&x.to_string()).unwrap(), x);
        assert_eq!(parse_manifold("E1(2,5) # S2xS2").unwrap().summands().len(), 2);
        assert_eq!(parse_manifold("cp2bar").unwrap().summands(), &[Atom::CP2bar]);
    }

    #[test]
    fn parser_errors_carry_offsets() {
        let e = parse_manifold("E1(2,4)").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.message.contains("coprime"));
        assert!(parse_manifold("E1(1,3)").unwrap_err().message.contains(">= 2"));
        assert_eq!(parse_manifold("CP2 # Foo").unwrap_err().offset, 6);
        assert_eq!(parse_manifold("CP2 CP2").unwrap_err().offset, 4);
        assert_eq!(parse_manifold("0CP2").unwrap_err().offset, 0);
        assert!(parse_manifold("").is_err());
    }
}
