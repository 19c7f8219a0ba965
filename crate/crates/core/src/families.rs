//! Symbolic diffeomorphisms and the certified rewrite engine for
//! 1-parameter families Seiberg–Witten invariants over `S¹`.
//!
//! The engine never guesses: each result is `Int`, `Mod2` or `Unknown`, and
//! every certified value carries a [`Derivation`] naming the rule applied at
//! each node. [`replay`] recomputes a derivation from its leaves.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kahler::{KahlerError, KahlerModel};
use crate::lattice::{sgn_plus_default, LatticeAutomorphism, LatticeError, LatticeVector};
use crate::manifold::{
    expected_dimension, parse_manifold, Atom, Cursor, ManifoldError, ManifoldExpr, ParseError, SpinCClass,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("diffeomorphism acts on {found}, query is on {expected}")]
    WrongSource { expected: String, found: String },
    #[error("composition needs equal sources: {0} vs {1}")]
    SourceMismatch(String, String),
    #[error("summand {0} is not S2xS2")]
    NotS2xS2(usize),
    #[error("families invariants need b+ = 2, got {0}")]
    BPlus(usize),
    #[error("expected dimension is {0}, families invariants need -1")]
    Dimension(i64),
    #[error("diffeomorphism does not preserve the spin^c structure")]
    NotPreserved,
    #[error("{0} chamber is not defined for this query")]
    ChamberUndefined(Chamber),
    #[error("automorphism {name} acts on {found}, expected {expected}")]
    PsiShape { name: String, expected: String, found: String },
    #[error("unknown automorphism name {0}")]
    UnknownPsi(String),
    #[error("replay mismatch at {rule}: recorded {recorded}, recomputed {recomputed}")]
    ReplayMismatch { rule: Rule, recorded: Value, recomputed: Value },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Kahler(#[from] KahlerError),
}

/// The constructor of a [`DiffeoExpr`].
#[derive(Debug, Clone)]
pub enum DiffeoNode {
    Identity,
    /// `−1` on the `H` block of an `S2xS2` summand.
    Rho { summand: usize },
    ConnSum(DiffeoExpr, DiffeoExpr),
    /// `f ∘ g`.
    Compose(DiffeoExpr, DiffeoExpr),
    Inverse(DiffeoExpr),
    /// `ψ ∘ f ∘ ψ⁻¹` for `ψ : source(f) → target`.
    Relabel { name: String, psi: LatticeAutomorphism, psi_sign: i8, conjugand: DiffeoExpr },
}

#[derive(Debug)]
struct DiffeoInner {
    source: ManifoldExpr,
    node: DiffeoNode,
    induced: LatticeAutomorphism,
    sgn_plus: OnceLock<i8>,
}

/// A symbolic diffeomorphism together with its action on `H²`.
#[derive(Debug, Clone)]
pub struct DiffeoExpr(Arc<DiffeoInner>);

impl PartialEq for DiffeoExpr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.source() != other.source() {
            return false;
        }
        match (self.node(), other.node()) {
            (DiffeoNode::Identity, DiffeoNode::Identity) => true,
            (DiffeoNode::Rho { summand: a }, DiffeoNode::Rho { summand: b }) => a == b,
            (DiffeoNode::ConnSum(a, b), DiffeoNode::ConnSum(c, d)) => a == c && b == d,
            (DiffeoNode::Compose(a, b), DiffeoNode::Compose(c, d)) => a == c && b == d,
            (DiffeoNode::Inverse(a), DiffeoNode::Inverse(b)) => a == b,
            (
                DiffeoNode::Relabel { name: n1, psi: p1, conjugand: c1, .. },
                DiffeoNode::Relabel { name: n2, psi: p2, conjugand: c2, .. },
            ) => n1 == n2 && p1 == p2 && c1 == c2,
            _ => false,
        }
    }
}

impl Eq for DiffeoExpr {}

impl DiffeoExpr {
    fn build(source: ManifoldExpr, node: DiffeoNode, induced: LatticeAutomorphism) -> Self {
        DiffeoExpr(Arc::new(DiffeoInner { source, node, induced, sgn_plus: OnceLock::new() }))
    }

    pub fn identity(x: &ManifoldExpr) -> Self {
        DiffeoExpr::build(x.clone(), DiffeoNode::Identity, LatticeAutomorphism::identity(x.lattice()))
    }

    pub fn rho(x: &ManifoldExpr, summand: usize) -> Result<Self, EngineError> {
        if x.summands().get(summand) != Some(&Atom::S2xS2) {
            return Err(EngineError::NotS2xS2(summand));
        }
        let n = x.lattice().rank();
        let block = x.summand_range(summand);
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i == j, block.contains(&i)) {
                        (true, true) => -1,
                        (true, false) => 1,
                        _ => 0,
                    })
                    .collect()
            })
            .collect();
        let induced = LatticeAutomorphism::new(x.lattice(), matrix)?;
        Ok(DiffeoExpr::build(x.clone(), DiffeoNode::Rho { summand }, induced))
    }

    pub fn conn_sum(f: &DiffeoExpr, g: &DiffeoExpr) -> Result<Self, EngineError> {
        let x = f.source().connected_sum(g.source())?;
        let induced = LatticeAutomorphism::block_sum(f.induced(), g.induced(), x.lattice())?;
        Ok(DiffeoExpr::build(x, DiffeoNode::ConnSum(f.clone(), g.clone()), induced))
    }

    pub fn compose(f: &DiffeoExpr, g: &DiffeoExpr) -> Result<Self, EngineError> {
        if f.source() != g.source() {
            return Err(EngineError::SourceMismatch(f.source().to_string(), g.source().to_string()));
        }
        let induced = f.induced().compose(g.induced())?;
        Ok(DiffeoExpr::build(f.source().clone(), DiffeoNode::Compose(f.clone(), g.clone()), induced))
    }

    pub fn inverse(f: &DiffeoExpr) -> Self {
        DiffeoExpr::build(f.source().clone(), DiffeoNode::Inverse(f.clone()), f.induced().inverse())
    }

    /// `ψ ∘ f ∘ ψ⁻¹` on `target`, where `ψ` is an isometry from `H²(source(f))`
    /// to `H²(target)`, both carrying the same Gram matrix.
    pub fn relabel(
        name: &str,
        psi: &LatticeAutomorphism,
        conjugand: &DiffeoExpr,
        target: &ManifoldExpr,
    ) -> Result<Self, EngineError> {
        let src = conjugand.source().lattice();
        if !src.same_form(target.lattice()) || !psi.lattice().same_form(src) {
            return Err(EngineError::PsiShape {
                name: name.into(),
                expected: target.to_string(),
                found: conjugand.source().to_string(),
            });
        }
        let psi = psi.rebase(src)?;
        let inner = psi.compose(conjugand.induced())?.compose(&psi.inverse())?;
        let induced = inner.rebase(target.lattice())?;
        let psi_sign = sgn_plus_default(&psi);
        let node = DiffeoNode::Relabel { name: name.into(), psi, psi_sign, conjugand: conjugand.clone() };
        Ok(DiffeoExpr::build(target.clone(), node, induced))
    }

    pub fn source(&self) -> &ManifoldExpr {
        &self.0.source
    }

    pub fn node(&self) -> &DiffeoNode {
        &self.0.node
    }

    pub fn induced(&self) -> &LatticeAutomorphism {
        &self.0.induced
    }

    /// Acts trivially on `H²(X; Z)`.
    pub fn is_torelli(&self) -> bool {
        self.induced().is_identity()
    }

    pub fn sgn_plus(&self) -> i8 {
        *self.0.sgn_plus.get_or_init(|| sgn_plus_default(self.induced()))
    }

    pub fn preserves(&self, s: &SpinCClass) -> bool {
        self.induced().apply(s.c()).map(|v| &v == s.c()).unwrap_or(false)
    }

    /// Literally the identity: `id` or a connected sum of identities.
    pub fn is_structural_identity(&self) -> bool {
        match self.node() {
            DiffeoNode::Identity => true,
            DiffeoNode::ConnSum(f, g) => f.is_structural_identity() && g.is_structural_identity(),
            _ => false,
        }
    }

    /// 1-based position of `summand` among the `S2xS2` summands of the source.
    fn rho_ordinal(&self, summand: usize) -> usize {
        self.source().summands()[..=summand].iter().filter(|a| **a == Atom::S2xS2).count()
    }
}

impl fmt::Display for DiffeoExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            DiffeoNode::Identity => f.write_str("id"),
            DiffeoNode::Rho { summand } => write!(f, "rho@{}", self.rho_ordinal(*summand)),
            DiffeoNode::ConnSum(a, b) => write!(f, "({a} # {b})"),
            DiffeoNode::Compose(a, b) => write!(f, "({a} * {b})"),
            DiffeoNode::Inverse(a) => write!(f, "inv({a})"),
            DiffeoNode::Relabel { name, conjugand, .. } => write!(f, "conj({name}, {conjugand})"),
        }
    }
}

/// `SW^0` (unperturbed) or `SW^c` (constant section under a trivial monodromy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chamber {
    Zero,
    Constant,
}

impl fmt::Display for Chamber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chamber::Zero => "zero",
            Chamber::Constant => "constant",
        })
    }
}

/// A rewrite rule of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// The product family has vanishing invariant.
    R0Identity,
    /// `SW⁰_{X′#S²×S², s′#s₀}(f′ # g) = SW⁰(X′, s′) mod 2` when `sgn₊(g) = −1`.
    R1S2xS2Collapse,
    /// `SW^c_{X′#CP2bar, s′#κ}(f′ # g) = SW^c_{X′, s′}(f′)` for Torelli `f′, g`.
    R2Blowup,
    /// The invariant is a homomorphism in `f`.
    R3Composition,
    /// `SW_{X,s}(ψ f ψ⁻¹) = sgn₊(ψ) SW_{X′,ψ⁻¹ s}(f)`.
    R4Conjugation,
    /// Homomorphism applied to `f⁻¹`.
    R5Inverse,
    /// The constant and zero chambers agree when both are defined.
    ChamberCoincidence,
    Fallback,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::R0Identity => "R0_identity",
            Rule::R1S2xS2Collapse => "R1_s2xs2_collapse",
            Rule::R2Blowup => "R2_blowup",
            Rule::R3Composition => "R3_composition",
            Rule::R4Conjugation => "R4_conjugation",
            Rule::R5Inverse => "R5_inverse",
            Rule::ChamberCoincidence => "chamber_coincidence",
            Rule::Fallback => "fallback_unknown",
        }
    }

    pub const DEFAULT_ORDER: [Rule; 6] = [
        Rule::R0Identity,
        Rule::R3Composition,
        Rule::R4Conjugation,
        Rule::R1S2xS2Collapse,
        Rule::R2Blowup,
        Rule::R5Inverse,
    ];
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Three-valued result; `Unknown` absorbs everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Value {
    Int(i64),
    Mod2(u8),
    Unknown,
}

impl Value {
    pub fn reduce(self) -> Value {
        match self {
            Value::Int(k) => Value::Mod2(k.rem_euclid(2) as u8),
            v => v,
        }
    }

    pub fn add(self, other: Value) -> Value {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Value::Int(a + b),
            (Value::Unknown, _) | (_, Value::Unknown) => Value::Unknown,
            (a, b) => match (a.reduce(), b.reduce()) {
                (Value::Mod2(x), Value::Mod2(y)) => Value::Mod2(x ^ y),
                _ => unreachable!("reduce yields Mod2 or Unknown"),
            },
        }
    }

    pub fn neg(self) -> Value {
        match self {
            Value::Int(k) => Value::Int(-k),
            v => v,
        }
    }

    pub fn times_sign(self, sign: i8) -> Value {
        if sign < 0 {
            self.neg()
        } else {
            self
        }
    }

    pub fn is_certified(&self) -> bool {
        !matches!(self, Value::Unknown)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Mod2(_) => "mod2",
            Value::Unknown => "unknown",
        }
    }

    /// Equal as integers when both are integers, otherwise equal mod 2.
    pub fn agrees_with(&self, other: &Value) -> Option<bool> {
        match (self, other) {
            (Value::Unknown, _) | (_, Value::Unknown) => None,
            (Value::Int(a), Value::Int(b)) => Some(a == b),
            (a, b) => Some(a.reduce() == b.reduce()),
        }
    }

    /// JSON scalar: the number, or the string `"unknown"`.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(k) => serde_json::json!(k),
            Value::Mod2(b) => serde_json::json!(b),
            Value::Unknown => serde_json::json!("unknown"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(k) => write!(f, "{k}"),
            Value::Mod2(b) => write!(f, "{b} (mod 2)"),
            Value::Unknown => f.write_str("unknown"),
        }
    }
}

/// Unparametrised invariant consumed by a gluing step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Leaf {
    /// Zero-chamber invariant of a Kähler surface at the line bundle `L`.
    Kahler { surface: String, line_bundle: Vec<i64>, sw_zero: i64 },
    /// Positive scalar curvature forces vanishing.
    Psc { manifold: String },
}

/// One node in the audit tree of an evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub rule: Rule,
    pub chamber: Chamber,
    pub manifold: String,
    pub spinc: Vec<i64>,
    pub diffeo: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf: Option<Leaf>,
    /// Set when the node's value was reduced mod 2 after combining premises.
    pub reduced: bool,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    /// Rule names in preorder, leaves included.
    pub fn trace(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut out);
        out
    }

    fn walk(&self, out: &mut Vec<String>) {
        out.push(self.rule.name().to_string());
        match &self.leaf {
            Some(Leaf::Kahler { .. }) => out.push("leaf_kahler_zero_chamber".into()),
            Some(Leaf::Psc { .. }) => out.push("leaf_psc_vanishing".into()),
            None => {}
        }
        for p in &self.premises {
            p.walk(out);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: Value,
    pub derivation: Derivation,
}

impl CertifiedValue {
    pub fn trace(&self) -> Vec<String> {
        self.derivation.trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Integer,
    Mod2,
}

/// Whether the chamber is a well-defined chamber for `(X, s, f)`.
///
/// The zero chamber needs `c(s)² ≥ 0` and `c(s)` non-torsion, which for a
/// simply-connected `X` means `c(s) ≠ 0`. The constant chamber needs `f` Torelli.
pub fn chamber_defined(_x: &ManifoldExpr, s: &SpinCClass, f: &DiffeoExpr, chamber: Chamber) -> bool {
    match chamber {
        Chamber::Zero => s.square() >= 0 && !s.c().is_zero(),
        Chamber::Constant => f.is_torelli(),
    }
}

/// `s` with the coordinates of summand `i` removed, on `x.without(i)`.
fn drop_summand(x: &ManifoldExpr, s: &SpinCClass, i: usize) -> Option<(ManifoldExpr, SpinCClass, Vec<i64>)> {
    let rest = x.without(i).ok()?;
    let range = x.summand_range(i);
    let removed = s.coords()[range.clone()].to_vec();
    let coords: Vec<i64> = s
        .coords()
        .iter()
        .enumerate()
        .filter(|(j, _)| !range.contains(j))
        .map(|(_, c)| *c)
        .collect();
    let s_rest = rest.spinc(coords).ok()?;
    Some((rest, s_rest, removed))
}

/// The rewrite engine. Rules are tried in `order`; in the constant chamber the
/// coincidence bridge is tried after them, and `Unknown` is the fallback.
#[derive(Debug, Clone)]
pub struct Engine {
    pub order: Vec<Rule>,
    pub arithmetic: Arithmetic,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { order: Rule::DEFAULT_ORDER.to_vec(), arithmetic: Arithmetic::Integer }
    }
}

struct Query<'a> {
    x: &'a ManifoldExpr,
    s: &'a SpinCClass,
    f: &'a DiffeoExpr,
    chamber: Chamber,
}

impl Engine {
    pub fn with_order(order: Vec<Rule>) -> Self {
        Engine { order, ..Engine::default() }
    }

    pub fn mod2() -> Self {
        Engine { arithmetic: Arithmetic::Mod2, ..Engine::default() }
    }

    /// Checks every precondition of a families query.
    pub fn check(&self, x: &ManifoldExpr, s: &SpinCClass, f: &DiffeoExpr, chamber: Chamber) -> Result<(), EngineError> {
        if f.source() != x {
            return Err(EngineError::WrongSource { expected: x.to_string(), found: f.source().to_string() });
        }
        if !x.lattice().same_form(s.c().lattice()) {
            return Err(EngineError::Lattice(LatticeError::ParentMismatch));
        }
        if x.b_plus() != 2 {
            return Err(EngineError::BPlus(x.b_plus()));
        }
        let d = expected_dimension(x, s);
        if d != -1 {
            return Err(EngineError::Dimension(d));
        }
        if !f.preserves(s) {
            return Err(EngineError::NotPreserved);
        }
        if !chamber_defined(x, s, f, chamber) {
            return Err(EngineError::ChamberUndefined(chamber));
        }
        Ok(())
    }

    /// `SW^φ_{X,s}(f)` for `φ` the zero or constant chamber.
    pub fn sw_family(
        &self,
        x: &ManifoldExpr,
        s: &SpinCClass,
        f: &DiffeoExpr,
        chamber: Chamber,
    ) -> Result<CertifiedValue, EngineError> {
        self.check(x, s, f, chamber)?;
        let derivation = self.eval(&Query { x, s, f, chamber });
        Ok(CertifiedValue { value: derivation.value, derivation })
    }

    fn eval(&self, q: &Query<'_>) -> Derivation {
        for rule in &self.order {
            if let Some(d) = self.try_rule(*rule, q) {
                return self.finish(q, d);
            }
        }
        if q.chamber == Chamber::Constant {
            if let Some(d) = self.try_coincidence(q) {
                return self.finish(q, d);
            }
        }
        self.finish(q, self.node(q, Rule::Fallback, Value::Unknown, Vec::new()))
    }

    fn node(&self, q: &Query<'_>, rule: Rule, value: Value, premises: Vec<Derivation>) -> Derivation {
        Derivation {
            rule,
            chamber: q.chamber,
            manifold: q.x.to_string(),
            spinc: q.s.coords().to_vec(),
            diffeo: q.f.to_string(),
            value,
            sign: None,
            leaf: None,
            reduced: false,
            premises,
        }
    }

    fn finish(&self, q: &Query<'_>, mut d: Derivation) -> Derivation {
        let reduce = q.f.sgn_plus() < 0 || self.arithmetic == Arithmetic::Mod2;
        if reduce && matches!(d.value, Value::Int(_)) {
            d.value = d.value.reduce();
            d.reduced = true;
        }
        d
    }

    /// Subquery evaluation, or `None` when its own preconditions fail.
    fn sub(&self, x: &ManifoldExpr, s: &SpinCClass, f: &DiffeoExpr, chamber: Chamber) -> Option<Derivation> {
        self.check(x, s, f, chamber).ok()?;
        Some(self.eval(&Query { x, s, f, chamber }))
    }

    fn try_rule(&self, rule: Rule, q: &Query<'_>) -> Option<Derivation> {
        match rule {
            Rule::R0Identity => q.f.is_structural_identity().then(|| self.node(q, rule, Value::Int(0), Vec::new())),
            Rule::R3Composition => {
                let DiffeoNode::Compose(f1, f2) = q.f.node() else { return None };
                let d1 = self.sub(q.x, q.s, f1, q.chamber)?;
                let d2 = self.sub(q.x, q.s, f2, q.chamber)?;
                let v = d1.value.add(d2.value);
                Some(self.node(q, rule, v, vec![d1, d2]))
            }
            Rule::R4Conjugation => {
                let DiffeoNode::Relabel { psi, psi_sign, conjugand, .. } = q.f.node() else { return None };
                let src = conjugand.source();
                let back = psi.inverse().apply(&q.s.c().rebase(psi.lattice()).ok()?).ok()?;
                let s_src = src.spinc(back.coords().to_vec()).ok()?;
                let d = self.sub(src, &s_src, conjugand, q.chamber)?;
                let sign = *psi_sign;
                let mut node = self.node(q, rule, d.value.times_sign(sign), vec![d]);
                node.sign = Some(sign);
                Some(node)
            }
            Rule::R5Inverse => {
                let DiffeoNode::Inverse(g) = q.f.node() else { return None };
                let d = self.sub(q.x, q.s, g, q.chamber)?;
                Some(self.node(q, rule, d.value.neg(), vec![d]))
            }
            Rule::R1S2xS2Collapse => self.try_collapse(q),
            Rule::R2Blowup => self.try_blowup(q),
            Rule::ChamberCoincidence => self.try_coincidence(q),
            Rule::Fallback => None,
        }
    }

    fn try_collapse(&self, q: &Query<'_>) -> Option<Derivation> {
        if q.chamber != Chamber::Zero || q.s.square() < 0 {
            return None;
        }
        let (idx, f_rest) = match q.f.node() {
            DiffeoNode::ConnSum(f1, g) if g.source().summands() == [Atom::S2xS2] && g.sgn_plus() == -1 => {
                (q.x.summands().len() - 1, f1.clone())
            }
            DiffeoNode::Rho { summand } if q.x.summands().len() > 1 => {
                let rest = q.x.without(*summand).ok()?;
                (*summand, DiffeoExpr::identity(&rest))
            }
            _ => return None,
        };
        let (x_rest, s_rest, removed) = drop_summand(q.x, q.s, idx)?;
        if removed.iter().any(|&c| c != 0) || !f_rest.preserves(&s_rest) {
            return None;
        }
        let leaf = zero_chamber_leaf(&x_rest, &s_rest)?;
        let v = match &leaf {
            Leaf::Kahler { sw_zero, .. } => *sw_zero,
            Leaf::Psc { .. } => 0,
        };
        let mut node = self.node(q, Rule::R1S2xS2Collapse, Value::Mod2(v.rem_euclid(2) as u8), Vec::new());
        node.leaf = Some(leaf);
        Some(node)
    }

    fn try_blowup(&self, q: &Query<'_>) -> Option<Derivation> {
        if q.chamber != Chamber::Constant {
            return None;
        }
        let DiffeoNode::ConnSum(f1, g) = q.f.node() else { return None };
        if g.source().summands() != [Atom::CP2bar] || !f1.is_torelli() || !g.is_torelli() {
            return None;
        }
        let idx = q.x.summands().len() - 1;
        let (x_rest, s_rest, kappa) = drop_summand(q.x, q.s, idx)?;
        if kappa[0].abs() != 1 {
            return None;
        }
        let d = self.sub(&x_rest, &s_rest, f1, Chamber::Constant)?;
        let v = d.value;
        Some(self.node(q, Rule::R2Blowup, v, vec![d]))
    }

    fn try_coincidence(&self, q: &Query<'_>) -> Option<Derivation> {
        if q.chamber != Chamber::Constant || !chamber_defined(q.x, q.s, q.f, Chamber::Zero) {
            return None;
        }
        let d = self.sub(q.x, q.s, q.f, Chamber::Zero)?;
        if !d.value.is_certified() {
            return None;
        }
        let v = d.value;
        Some(self.node(q, Rule::ChamberCoincidence, v, vec![d]))
    }

    /// Evaluates both chambers; `true` when they agree or either is unknown.
    pub fn chamber_coincidence_check(
        &self,
        x: &ManifoldExpr,
        s: &SpinCClass,
        f: &DiffeoExpr,
    ) -> Result<bool, EngineError> {
        let zero = self.sw_family(x, s, f, Chamber::Zero)?;
        let constant = self.sw_family(x, s, f, Chamber::Constant)?;
        Ok(zero.value.agrees_with(&constant.value).unwrap_or(true))
    }
}

/// `SW⁰(X′, s′)` for a `b₊ = 1` manifold the Kähler or PSC models can evaluate.
fn zero_chamber_leaf(x: &ManifoldExpr, s: &SpinCClass) -> Option<Leaf> {
    if x.invariants().is_psc {
        return Some(Leaf::Psc { manifold: x.to_string() });
    }
    let [atom] = x.summands() else { return None };
    let model = KahlerModel::for_atom(*atom).ok()?;
    let l = model.line_bundle_of(s.c())?;
    let v = model.sw_zero_chamber(&l).ok()??;
    Some(Leaf::Kahler { surface: atom.name(), line_bundle: l.coords().to_vec(), sw_zero: v })
}

/// Recomputes a derivation bottom-up from its leaves and checks it against the
/// recorded values at every node.
pub fn replay(d: &Derivation) -> Result<Value, EngineError> {
    let premises: Vec<Value> = d.premises.iter().map(replay).collect::<Result<_, _>>()?;
    let raw = match d.rule {
        Rule::R0Identity => Value::Int(0),
        Rule::R3Composition => {
            let [a, b] = premises[..] else { return Err(mismatch(d, Value::Unknown)) };
            a.add(b)
        }
        Rule::R4Conjugation => {
            let [a] = premises[..] else { return Err(mismatch(d, Value::Unknown)) };
            a.times_sign(d.sign.unwrap_or(0))
        }
        Rule::R5Inverse => {
            let [a] = premises[..] else { return Err(mismatch(d, Value::Unknown)) };
            a.neg()
        }
        Rule::R2Blowup | Rule::ChamberCoincidence => {
            let [a] = premises[..] else { return Err(mismatch(d, Value::Unknown)) };
            a
        }
        Rule::R1S2xS2Collapse => match &d.leaf {
            Some(Leaf::Psc { manifold }) => {
                let x = parse_manifold(manifold)?;
                if !x.invariants().is_psc {
                    return Err(mismatch(d, Value::Unknown));
                }
                Value::Mod2(0)
            }
            Some(Leaf::Kahler { surface, line_bundle, sw_zero }) => {
                let x = parse_manifold(surface)?;
                let [atom] = x.summands() else { return Err(mismatch(d, Value::Unknown)) };
                let model = KahlerModel::for_atom(*atom)?;
                let l = LatticeVector::new(model.lattice(), line_bundle.clone())?;
                match model.sw_zero_chamber(&l)? {
                    Some(v) if v == *sw_zero => Value::Int(v).reduce(),
                    _ => return Err(mismatch(d, Value::Unknown)),
                }
            }
            None => return Err(mismatch(d, Value::Unknown)),
        },
        Rule::Fallback => Value::Unknown,
    };
    let value = if d.reduced { raw.reduce() } else { raw };
    if value != d.value {
        return Err(mismatch(d, value));
    }
    Ok(value)
}

fn mismatch(d: &Derivation, recomputed: Value) -> EngineError {
    EngineError::ReplayMismatch { rule: d.rule, recorded: d.value, recomputed }
}

/// A named isometry from `H²(source)` to the lattice it is conjugated into.
#[derive(Debug, Clone)]
pub struct NamedPsi {
    pub source: ManifoldExpr,
    pub matrix: LatticeAutomorphism,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixSpec {
    Keyword(String),
    Rows(Vec<Vec<i64>>),
}

#[derive(Deserialize)]
struct PsiSpec {
    source: String,
    matrix: MatrixSpec,
}

/// Automorphisms available to `conj(NAME, f)`.
///
/// `psi<d>` for odd `d ≥ 1` is always available: the chart identity from
/// `E1(2,d+2) # S2xS2`.
#[derive(Debug, Clone, Default)]
pub struct PsiTable {
    entries: BTreeMap<String, NamedPsi>,
}

impl PsiTable {
    /// Reads `{name: {"source": EXPR, "matrix": [[..]] | "identity"}}`.
    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        let raw: BTreeMap<String, PsiSpec> = serde_json::from_str(text)
            .map_err(|e| ParseError::new(e.column().saturating_sub(1), format!("psi table: {e}")))?;
        let mut table = PsiTable::default();
        for (name, entry) in raw {
            let source = parse_manifold(&entry.source)?;
            let matrix = match entry.matrix {
                MatrixSpec::Keyword(k) if k == "identity" => LatticeAutomorphism::identity(source.lattice()),
                MatrixSpec::Keyword(k) => return Err(ParseError::new(0, format!("unknown matrix keyword {k}")).into()),
                MatrixSpec::Rows(rows) => LatticeAutomorphism::new(source.lattice(), rows)?,
            };
            table.insert(&name, NamedPsi { source, matrix });
        }
        Ok(table)
    }

    pub fn insert(&mut self, name: &str, psi: NamedPsi) {
        self.entries.insert(name.to_string(), psi);
    }

    pub fn get(&self, name: &str) -> Result<NamedPsi, EngineError> {
        if let Some(p) = self.entries.get(name) {
            return Ok(p.clone());
        }
        if let Some(d) = name.strip_prefix("psi").and_then(|r| r.parse::<i64>().ok()) {
            if d >= 1 && d % 2 == 1 {
                let source = ManifoldExpr::new(vec![Atom::e1_log(2, d + 2)?, Atom::S2xS2])?;
                let matrix = LatticeAutomorphism::identity(source.lattice());
                return Ok(NamedPsi { source, matrix });
            }
        }
        Err(EngineError::UnknownPsi(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ast {
    Id,
    Rho(usize),
    Sum(Box<Ast>, Box<Ast>),
    Comp(Box<Ast>, Box<Ast>),
    Inv(Box<Ast>),
    Conj(String, Box<Ast>),
}

fn parse_ast(text: &str) -> Result<Ast, ParseError> {
    let mut cur = Cursor::new(text);
    let ast = parse_comp(&mut cur)?;
    if !cur.at_end() {
        return Err(ParseError::new(cur.pos, "unexpected trailing input"));
    }
    Ok(ast)
}

fn parse_comp(cur: &mut Cursor<'_>) -> Result<Ast, ParseError> {
    let mut lhs = parse_sum(cur)?;
    while cur.eat('*') || cur.eat('∘') {
        let rhs = parse_sum(cur)?;
        lhs = Ast::Comp(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_sum(cur: &mut Cursor<'_>) -> Result<Ast, ParseError> {
    let mut lhs = parse_primary(cur)?;
    while cur.eat('#') {
        let rhs = parse_primary(cur)?;
        lhs = Ast::Sum(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_primary(cur: &mut Cursor<'_>) -> Result<Ast, ParseError> {
    cur.skip_ws();
    let start = cur.pos;
    if cur.eat('(') {
        let inner = parse_comp(cur)?;
        cur.expect(')')?;
        return Ok(inner);
    }
    if cur.eat_keyword("inv") {
        cur.expect('(')?;
        let inner = parse_comp(cur)?;
        cur.expect(')')?;
        return Ok(Ast::Inv(Box::new(inner)));
    }
    if cur.eat_keyword("conj") {
        cur.expect('(')?;
        cur.skip_ws();
        let name_start = cur.pos;
        let name: String = cur.rest().chars().take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '-').collect();
        if name.is_empty() {
            return Err(ParseError::new(name_start, "expected automorphism name"));
        }
        cur.pos += name.len();
        cur.expect(',')?;
        let inner = parse_comp(cur)?;
        cur.expect(')')?;
        return Ok(Ast::Conj(name, Box::new(inner)));
    }
    if cur.eat_keyword("td") {
        cur.expect('(')?;
        let (at, d) = cur.integer()?.ok_or_else(|| ParseError::new(cur.pos, "expected odd d"))?;
        cur.expect(')')?;
        if d < 1 || d % 2 == 0 {
            return Err(ParseError::new(at, "td(d) needs odd d >= 1"));
        }
        let base = || Box::new(Ast::Sum(Box::new(Ast::Id), Box::new(Ast::Rho(1))));
        return Ok(Ast::Comp(Box::new(Ast::Conj(format!("psi{d}"), base())), base()));
    }
    if cur.eat_keyword("rho") {
        cur.expect('@')?;
        let (at, k) = cur.integer()?.ok_or_else(|| ParseError::new(cur.pos, "expected S2xS2 ordinal"))?;
        if k < 1 {
            return Err(ParseError::new(at, "rho ordinal is 1-based"));
        }
        return Ok(Ast::Rho(k as usize));
    }
    if cur.eat_keyword("id") {
        return Ok(Ast::Id);
    }
    Err(ParseError::new(start, "expected id, rho@K, inv(..), conj(NAME, ..), td(d) or '('"))
}

fn elaborate(ast: &Ast, x: &ManifoldExpr, psis: &PsiTable) -> Result<DiffeoExpr, EngineError> {
    match ast {
        Ast::Id => Ok(DiffeoExpr::identity(x)),
        Ast::Rho(k) => {
            let pos = x
                .summands()
                .iter()
                .enumerate()
                .filter(|(_, a)| **a == Atom::S2xS2)
                .nth(k - 1)
                .map(|(i, _)| i)
                .ok_or_else(|| ParseError::new(0, format!("rho@{k}: {x} has fewer S2xS2 summands")))?;
            DiffeoExpr::rho(x, pos)
        }
        Ast::Comp(a, b) => DiffeoExpr::compose(&elaborate(a, x, psis)?, &elaborate(b, x, psis)?),
        Ast::Inv(a) => Ok(DiffeoExpr::inverse(&elaborate(a, x, psis)?)),
        Ast::Conj(name, a) => {
            let psi = psis.get(name)?;
            let inner = elaborate(a, &psi.source, psis)?;
            DiffeoExpr::relabel(name, &psi.matrix, &inner, x)
        }
        Ast::Sum(a, b) => {
            let n = x.summands().len();
            let mut last_err = None;
            // smallest right-hand factor first
            for split in (1..n).rev() {
                let left = x.slice(0, split)?;
                let right = x.slice(split, n)?;
                match (elaborate(a, &left, psis), elaborate(b, &right, psis)) {
                    (Ok(f), Ok(g)) => return DiffeoExpr::conn_sum(&f, &g),
                    (Err(e), _) | (_, Err(e)) => last_err = Some(e),
                }
            }
            Err(last_err.unwrap_or_else(|| ParseError::new(0, format!("cannot split {x} into two summands")).into()))
        }
    }
}

/// Parses a diffeomorphism expression against the manifold it acts on.
///
/// `f # g` is split so that `g` gets the shortest tail of summands on which
/// both sides make sense; `*` binds looser than `#`.
pub fn parse_diffeo(text: &str, x: &ManifoldExpr, psis: &PsiTable) -> Result<DiffeoExpr, EngineError> {
    let ast = parse_ast(text)?;
    elaborate(&ast, x, psis)
}
