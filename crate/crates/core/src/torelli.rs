//! The Torelli families `t_d = f_d ∘ f_0` on `X = E(1) # S²×S²`, their support
//! matrices and rank certificates, blowup lifts, and the divisibility sums
//! `SW_{X,O_q}`.

use serde::Serialize;
use thiserror::Error;

use crate::families::{Chamber, CertifiedValue, DiffeoExpr, DiffeoNode, Engine, EngineError, Value};
use crate::kahler::KahlerModel;
use crate::lattice::{enumerate_characteristics, LatticeAutomorphism, LatticeVector};
use crate::manifold::{expected_dimension, Atom, E1LogModel, ManifoldError, ManifoldExpr, SpinCClass};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertError {
    #[error("t_d needs odd d >= 1, got {0}")]
    BadD(i64),
    #[error("q must be odd and positive, got {0}")]
    BadQ(i64),
    #[error("matrix size must be at least 1")]
    EmptyMatrix,
    #[error("invariant failed for t_{d}: {what}")]
    Invariant { d: i64, what: String },
    #[error("diagonal entry for d = {d} is {value}, not certified odd")]
    DiagonalNotOdd { d: i64, value: Value },
    #[error("off-diagonal entry ({row}, {col}) is not certified")]
    Uncertified { row: i64, col: i64 },
    #[error("sum over O_q needs sgn+(f) = +1")]
    OrientationReversing,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// `X = E1 # S2xS2`, the `E(1)`-chart presentation of `2CP² # 10·conj-CP²`.
pub fn base_manifold() -> ManifoldExpr {
    ManifoldExpr::new(vec![Atom::E1, Atom::S2xS2]).expect("valid")
}

#[derive(Debug, Clone)]
pub struct TdFamily {
    pub d: i64,
    pub x: ManifoldExpr,
    /// `E1(2,d+2) # S2xS2`.
    pub x_d: ManifoldExpr,
    pub psi: LatticeAutomorphism,
    pub f0: DiffeoExpr,
    pub fd: DiffeoExpr,
    pub td: DiffeoExpr,
    pub sd: SpinCClass,
}

/// `f_0 = id # ρ`, `f_d = ψ_d (id # ρ) ψ_d⁻¹`, `t_d = f_d ∘ f_0`, and
/// `s_d = (ψ_d⁻¹)^*(s_can # s₀)`, with `ψ_d` the chart identity.
pub fn build_td(d: i64) -> Result<TdFamily, CertError> {
    if d < 1 || d % 2 == 0 {
        return Err(CertError::BadD(d));
    }
    let x = base_manifold();
    let e1 = ManifoldExpr::atom(Atom::E1);
    let h = ManifoldExpr::atom(Atom::S2xS2);
    let rho = DiffeoExpr::rho(&h, 0)?;
    let f0 = DiffeoExpr::conn_sum(&DiffeoExpr::identity(&e1), &rho)?;

    let e1d = ManifoldExpr::atom(Atom::e1_log(2, d + 2)?);
    let x_d = e1d.connected_sum(&h)?;
    let psi = LatticeAutomorphism::identity(x_d.lattice());
    let inner = DiffeoExpr::conn_sum(&DiffeoExpr::identity(&e1d), &rho)?;
    let fd = DiffeoExpr::relabel(&format!("psi{d}"), &psi, &inner, &x)?;
    let td = DiffeoExpr::compose(&fd, &f0)?;

    let model = E1LogModel::new(2, d + 2)?;
    let mut c = model.canonical.neg().coords().to_vec();
    c.extend([0, 0]);
    let s_src = x_d.spinc(c)?;
    let image = psi.apply(s_src.c()).map_err(ManifoldError::from)?;
    let sd = x.spinc(image.coords().to_vec())?;

    let family = TdFamily { d, x, x_d, psi, f0, fd, td, sd };
    family.check()?;
    Ok(family)
}

impl TdFamily {
    fn check(&self) -> Result<(), CertError> {
        let fail = |what: &str| Err(CertError::Invariant { d: self.d, what: what.into() });
        if !self.td.is_torelli() {
            return fail("t_d Torelli");
        }
        if self.sd.divisibility() != self.d as u64 || self.sd.square() != 0 {
            return fail("c(s_d) of square 0 and divisibility d");
        }
        if !self.f0.preserves(&self.sd) || !self.fd.preserves(&self.sd) {
            return fail("f_0 and f_d preserve s_d");
        }
        if self.f0.sgn_plus() != -1 || self.fd.sgn_plus() != -1 {
            return fail("sgn+(f_0) = sgn+(f_d) = -1");
        }
        Ok(())
    }

    /// `SW⁰_{X, s_d}(t_d)`.
    pub fn diagonal_value(&self, engine: &Engine) -> Result<CertifiedValue, CertError> {
        Ok(engine.sw_family(&self.x, &self.sd, &self.td, Chamber::Zero)?)
    }
}

/// Rows `t_{d′}`, columns `s_d`, for `d, d′ ∈ {1, 3, …, 2D − 1}`.
#[derive(Debug, Clone)]
pub struct SupportMatrix {
    pub ds: Vec<i64>,
    /// `entries[i][j] = SW⁰_{X, s_{ds[j]}}(t_{ds[i]})`.
    pub entries: Vec<Vec<CertifiedValue>>,
}

#[derive(Serialize)]
struct MatrixJson<'a> {
    schema: &'static str,
    #[serde(rename = "D")]
    d: usize,
    ds: &'a [i64],
    entries: Vec<(i64, i64, serde_json::Value)>,
    rank: usize,
    triangular: bool,
}

impl SupportMatrix {
    pub fn size(&self) -> usize {
        self.ds.len()
    }

    pub fn value(&self, i: usize, j: usize) -> Value {
        self.entries[i][j].value
    }

    /// Unit diagonal and zero above it, all certified mod 2.
    pub fn is_lower_unitriangular(&self) -> bool {
        (0..self.size()).all(|i| {
            (0..self.size()).all(|j| {
                let v = self.value(i, j).reduce();
                match i.cmp(&j) {
                    std::cmp::Ordering::Equal => v == Value::Mod2(1),
                    std::cmp::Ordering::Less => v == Value::Mod2(0),
                    std::cmp::Ordering::Greater => v.is_certified(),
                }
            })
        })
    }

    /// Rank over `F₂`; `None` if an entry is unknown.
    pub fn f2_rank(&self) -> Option<usize> {
        let mut rows: Vec<Vec<u8>> = Vec::with_capacity(self.size());
        for row in &self.entries {
            let mut r = Vec::with_capacity(row.len());
            for e in row {
                match e.value.reduce() {
                    Value::Mod2(b) => r.push(b),
                    _ => return None,
                }
            }
            rows.push(r);
        }
        let n = self.size();
        let mut rank = 0;
        for col in 0..n {
            let Some(p) = (rank..n).find(|&r| rows[r][col] == 1) else { continue };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[col] == 1 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        Some(rank)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut entries = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                entries.push((self.ds[i], self.ds[j], e.value.reduce().to_json()));
            }
        }
        let json = MatrixJson {
            schema: crate::cli::SCHEMA,
            d: self.size(),
            ds: &self.ds,
            entries,
            rank: self.f2_rank().unwrap_or(0),
            triangular: self.is_lower_unitriangular(),
        };
        serde_json::to_value(json).expect("serializable")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("row_d,col_d,value\n");
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let v = match e.value.reduce() {
                    Value::Mod2(b) => b.to_string(),
                    _ => "unknown".into(),
                };
                s.push_str(&format!("{},{},{v}\n", self.ds[i], self.ds[j]));
            }
        }
        s
    }
}

/// The odd numbers `1, 3, …, 2D − 1`.
pub fn odd_range(size: usize) -> Vec<i64> {
    (0..size as i64).map(|i| 2 * i + 1).collect()
}

pub fn evaluate_matrix(size: usize, engine: &Engine) -> Result<SupportMatrix, CertError> {
    if size == 0 {
        return Err(CertError::EmptyMatrix);
    }
    let ds = odd_range(size);
    let families: Vec<TdFamily> = ds.iter().map(|&d| build_td(d)).collect::<Result<_, _>>()?;
    let rows: Vec<Result<Vec<CertifiedValue>, CertError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = families
            .iter()
            .map(|row| {
                let families = &families;
                scope.spawn(move || {
                    families
                        .iter()
                        .map(|col| Ok(engine.sw_family(&row.x, &col.sd, &row.td, Chamber::Zero)?))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("row worker panicked")).collect()
    });
    let entries = rows.into_iter().collect::<Result<_, _>>()?;
    Ok(SupportMatrix { ds, entries })
}

#[derive(Debug, Clone)]
pub struct RankCertificate {
    pub rank_lower_bound: usize,
    pub triangular: bool,
    pub witness: SupportMatrix,
}

/// Checks a support matrix: every diagonal entry must be certified odd.
/// A unitriangular matrix certifies full rank; otherwise the `F₂` rank of a
/// fully certified matrix is used.
pub fn certify(witness: SupportMatrix) -> Result<RankCertificate, CertError> {
    for (i, &d) in witness.ds.iter().enumerate() {
        let v = witness.value(i, i);
        if v.reduce() != Value::Mod2(1) {
            return Err(CertError::DiagonalNotOdd { d, value: v });
        }
    }
    let triangular = witness.is_lower_unitriangular();
    let rank_lower_bound = if triangular {
        witness.size()
    } else {
        for (i, row) in witness.entries.iter().enumerate() {
            if let Some(j) = row.iter().position(|e| !e.value.is_certified()) {
                return Err(CertError::Uncertified { row: witness.ds[i], col: witness.ds[j] });
            }
        }
        witness.f2_rank().expect("all certified")
    };
    Ok(RankCertificate { rank_lower_bound, triangular, witness })
}

pub fn rank_certificate(size: usize, engine: &Engine) -> Result<RankCertificate, CertError> {
    certify(evaluate_matrix(size, engine)?)
}

#[derive(Debug, Clone)]
pub struct LiftStep {
    pub x: ManifoldExpr,
    pub s: SpinCClass,
    pub f: DiffeoExpr,
    pub expected_dimension: i64,
    pub value: CertifiedValue,
}

/// `t_d # id # … # id` on `X_{10+k}` with `s_d # κ # … # κ`, `c(κ) = e`.
#[derive(Debug, Clone)]
pub struct BlowupLift {
    pub base: TdFamily,
    pub base_value: CertifiedValue,
    pub steps: Vec<LiftStep>,
}

pub fn blowup_lift(family: &TdFamily, times: usize, engine: &Engine) -> Result<BlowupLift, CertError> {
    let base_value = engine.sw_family(&family.x, &family.sd, &family.td, Chamber::Constant)?;
    let cp2bar = ManifoldExpr::atom(Atom::CP2bar);
    let kappa = cp2bar.spinc(vec![1])?;
    let id_bar = DiffeoExpr::identity(&cp2bar);
    let (mut x, mut s, mut f) = (family.x.clone(), family.sd.clone(), family.td.clone());
    let mut steps = Vec::with_capacity(times);
    for _ in 0..times {
        let (nx, ns) = crate::manifold::connected_sum_spinc(&x, &s, &cp2bar, &kappa)?;
        f = DiffeoExpr::conn_sum(&f, &id_bar)?;
        x = nx;
        s = ns;
        let value = engine.sw_family(&x, &s, &f, Chamber::Constant)?;
        steps.push(LiftStep { expected_dimension: expected_dimension(&x, &s), x: x.clone(), s: s.clone(), f: f.clone(), value });
    }
    Ok(BlowupLift { base: family.clone(), base_value, steps })
}

/// Structures whose characteristic is `q` times a primitive class, among `c² = 10 − b₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OqClass {
    pub q: i64,
}

impl OqClass {
    pub fn new(q: i64) -> Result<Self, CertError> {
        if q < 1 || q % 2 == 0 {
            return Err(CertError::BadQ(q));
        }
        Ok(OqClass { q })
    }

    pub fn contains(&self, x: &ManifoldExpr, s: &SpinCClass) -> bool {
        s.c().is_characteristic()
            && s.square() == 10 - x.b_minus() as i64
            && s.divisibility() == self.q as u64
    }

    /// Members with every coordinate at most `bound` in absolute value, in
    /// lexicographic order of the primitive part.
    pub fn enumerate(&self, x: &ManifoldExpr, bound: i64) -> Result<Vec<SpinCClass>, CertError> {
        let target = 10 - x.b_minus() as i64;
        let q2 = self.q * self.q;
        if target % q2 != 0 {
            return Ok(Vec::new());
        }
        // q odd, so c = q·y is characteristic exactly when y is
        let mut out = Vec::new();
        for y in enumerate_characteristics(x.lattice(), target / q2, bound / self.q) {
            if y.is_primitive() {
                out.push(x.spinc(y.scale(self.q).coords().to_vec())?);
            }
        }
        Ok(out)
    }
}

/// Coordinate radius outside of which the engine's rules certify nothing
/// nonzero, or `None` when some leaf has no such bound.
pub fn certifiable_support_radius(f: &DiffeoExpr) -> Option<i64> {
    fn leaf_radius(x: &ManifoldExpr) -> Option<i64> {
        if x.invariants().is_psc {
            return Some(0);
        }
        match x.summands() {
            [atom @ Atom::E1Log { .. }] => {
                let model = KahlerModel::for_atom(*atom).ok()?;
                let k = model.canonical().divisibility() as i64;
                // c = (2a - k) t' with 0 <= a <= k
                Some(k * model.t_prime().coords().iter().map(|c| c.abs()).max().unwrap_or(0))
            }
            _ => None,
        }
    }
    match f.node() {
        DiffeoNode::Identity => Some(0),
        DiffeoNode::Rho { summand } => leaf_radius(&f.source().without(*summand).ok()?),
        DiffeoNode::ConnSum(a, g) if g.source().summands() == [Atom::S2xS2] => {
            leaf_radius(a.source()).or_else(|| certifiable_support_radius(a))
        }
        DiffeoNode::ConnSum(a, g) => Some(certifiable_support_radius(a)?.max(certifiable_support_radius(g)?).max(1)),
        DiffeoNode::Compose(a, b) => Some(certifiable_support_radius(a)?.max(certifiable_support_radius(b)?)),
        DiffeoNode::Inverse(a) => certifiable_support_radius(a),
        DiffeoNode::Relabel { psi, conjugand, .. } => {
            let norm = psi.matrix().iter().map(|r| r.iter().map(|x| x.abs()).sum::<i64>()).max().unwrap_or(1);
            Some(certifiable_support_radius(conjugand)? * norm)
        }
    }
}

#[derive(Debug, Clone)]
pub struct OqTerm {
    pub s: SpinCClass,
    pub value: CertifiedValue,
}

#[derive(Debug, Clone)]
pub struct OqReport {
    pub q: i64,
    pub bound: i64,
    /// Sum of all terms; unknown if any term is.
    pub value: Value,
    /// Sum of the certified terms only.
    pub certified_partial_sum: Value,
    pub unknown_terms: usize,
    pub support_radius: Option<i64>,
    /// `bound` reaches the radius outside of which nothing is certifiable.
    pub support_captured: bool,
    pub terms: Vec<OqTerm>,
}

impl OqReport {
    pub fn term(&self, coords: &[i64]) -> Option<&OqTerm> {
        self.terms.iter().find(|t| t.s.coords() == coords)
    }
}

/// `Σ_{s ∈ O_q, |c(s)|∞ ≤ bound} SW⁰_{X,s}(f)`; terms whose structure `f` moves
/// are unknown.
pub fn sw_oq(engine: &Engine, x: &ManifoldExpr, f: &DiffeoExpr, q: i64, bound: i64) -> Result<OqReport, CertError> {
    let class = OqClass::new(q)?;
    if f.sgn_plus() != 1 {
        return Err(CertError::OrientationReversing);
    }
    let mut terms = Vec::new();
    let mut total = Value::Int(0);
    let mut partial = Value::Int(0);
    let mut unknown_terms = 0;
    for s in class.enumerate(x, bound)? {
        let value = if f.preserves(&s) {
            engine.sw_family(x, &s, f, Chamber::Zero)?
        } else {
            let derivation = crate::families::Derivation {
                rule: crate::families::Rule::Fallback,
                chamber: Chamber::Zero,
                manifold: x.to_string(),
                spinc: s.coords().to_vec(),
                diffeo: f.to_string(),
                value: Value::Unknown,
                sign: None,
                leaf: None,
                reduced: false,
                premises: Vec::new(),
            };
            CertifiedValue { value: Value::Unknown, derivation }
        };
        total = total.add(value.value);
        if value.value.is_certified() {
            partial = partial.add(value.value);
        } else {
            unknown_terms += 1;
        }
        terms.push(OqTerm { s, value });
    }
    let support_radius = certifiable_support_radius(f);
    Ok(OqReport {
        q,
        bound,
        value: total,
        certified_partial_sum: partial,
        unknown_terms,
        support_captured: support_radius.is_some_and(|r| bound >= r),
        support_radius,
        terms,
    })
}

/// The class `a t′ ⊕ 0` on `X` as a lattice vector.
pub fn line_class(x: &ManifoldExpr, a: i64) -> LatticeVector {
    let mut c: Vec<i64> = crate::manifold::t_prime_coords().iter().map(|v| v * a).collect();
    c.resize(x.lattice().rank(), 0);
    LatticeVector::new(x.lattice(), c).expect("rank matches")
}
