//! Chambered Seiberg–Witten invariants of `E(1)` and `E(1)_{m,n}`.
//!
//! Line bundles are lattice classes `L`; the spin^c structure `s_L` has
//! characteristic `c(s_L) = 2L − K`, so the canonical structure is `L = 0` with
//! `c(s_can) = −K`. Degrees are taken against `ω = h/3`, normalised so that
//! `deg t′ = 1` for `t′ = 3h − Σ e_i`.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{IntersectionLattice, LatticeError, LatticeVector};
use crate::manifold::{t_prime_coords, Atom, E1LogModel, ManifoldError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KahlerError {
    #[error("{0} is not an E(1)-type Kähler model")]
    UnsupportedSurface(String),
    #[error("Riemann-Roch gives a non-integral value for this class")]
    NonIntegral,
    #[error("zero chamber undefined: {0}")]
    ChamberUndefined(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// `⟨m, n⟩ = { xm + yn : x, y ≥ 0 }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericalSemigroup {
    m: i64,
    n: i64,
    // membership for 0..mn; everything from (m-1)(n-1) on is a member
    table: Vec<bool>,
}

impl NumericalSemigroup {
    pub fn new(m: i64, n: i64) -> Result<Self, KahlerError> {
        Atom::e1_log(m, n)?;
        let size = (m * n) as usize;
        let mut table = vec![false; size];
        table[0] = true;
        for a in 1..size {
            let am = a as i64;
            table[a] = (am >= m && table[(am - m) as usize]) || (am >= n && table[(am - n) as usize]);
        }
        Ok(NumericalSemigroup { m, n, table })
    }

    pub fn generators(&self) -> (i64, i64) {
        (self.m, self.n)
    }

    pub fn contains(&self, a: i64) -> bool {
        if a < 0 {
            return false;
        }
        match self.table.get(a as usize) {
            Some(&b) => b,
            None => true,
        }
    }

    /// Largest non-member, by scanning the membership table.
    pub fn frobenius_number(&self) -> i64 {
        (0..self.table.len()).rev().find(|&a| !self.table[a]).map_or(-1, |a| a as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WallSide {
    Plus,
    Minus,
    OnWall,
}

impl fmt::Display for WallSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WallSide::Plus => "PLUS",
            WallSide::Minus => "MINUS",
            WallSide::OnWall => "ON_WALL",
        })
    }
}

/// The two chambers of a `b₊ = 1` surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KahlerChamber {
    Plus,
    Minus,
}

/// A Kähler surface with `b₁ = 0`, `b₊ = 1` on the `Z^{1,9}` chart.
#[derive(Debug, Clone)]
pub struct KahlerModel {
    surface: Atom,
    canonical: LatticeVector,
    t_prime: LatticeVector,
    semigroup: Option<NumericalSemigroup>,
    psc: bool,
}

/// `deg_ω` for `ω = h/3`.
fn degree(v: &LatticeVector) -> Ratio<i64> {
    Ratio::new(v.coords()[0], 3)
}

impl KahlerModel {
    pub fn for_atom(atom: Atom) -> Result<Self, KahlerError> {
        match atom {
            Atom::E1 => {
                let lattice = Arc::new(atom.lattice());
                let t_prime = LatticeVector::new(&lattice, t_prime_coords())?;
                Ok(KahlerModel { surface: atom, canonical: t_prime.neg(), t_prime, semigroup: None, psc: true })
            }
            Atom::E1Log { m, n } => {
                let model = E1LogModel::new(m, n)?;
                Ok(KahlerModel {
                    surface: atom,
                    canonical: model.canonical.clone(),
                    t_prime: model.t_prime.clone(),
                    semigroup: Some(NumericalSemigroup::new(m, n)?),
                    psc: false,
                })
            }
            other => Err(KahlerError::UnsupportedSurface(other.name())),
        }
    }

    pub fn e1_log(m: i64, n: i64) -> Result<Self, KahlerError> {
        KahlerModel::for_atom(Atom::e1_log(m, n)?)
    }

    /// Synthetic model on the `E(1)` chart with canonical class `K = k t′` and an
    /// optional effectivity oracle. `K` need not be characteristic, which makes
    /// on-wall and non-integral cases reachable in tests.
    pub fn synthetic(k: i64, semigroup: Option<NumericalSemigroup>) -> Self {
        let lattice = Arc::new(Atom::E1.lattice());
        let t_prime = LatticeVector::new(&lattice, t_prime_coords()).expect("rank 10");
        KahlerModel { surface: Atom::E1, canonical: t_prime.scale(k), t_prime, semigroup, psc: false }
    }

    pub fn surface(&self) -> Atom {
        self.surface
    }

    pub fn canonical(&self) -> &LatticeVector {
        &self.canonical
    }

    pub fn t_prime(&self) -> &LatticeVector {
        &self.t_prime
    }

    pub fn lattice(&self) -> &Arc<IntersectionLattice> {
        self.t_prime.lattice()
    }

    pub fn is_psc(&self) -> bool {
        self.psc
    }

    pub fn semigroup(&self) -> Option<&NumericalSemigroup> {
        self.semigroup.as_ref()
    }

    /// `deg_ω(K)`.
    pub fn k_degree(&self) -> Ratio<i64> {
        degree(&self.canonical)
    }

    pub fn line(&self, a: i64) -> LatticeVector {
        self.t_prime.scale(a)
    }

    fn own(&self, l: &LatticeVector) -> Result<LatticeVector, KahlerError> {
        Ok(l.rebase(self.lattice())?)
    }

    pub fn deg(&self, l: &LatticeVector) -> Result<Ratio<i64>, KahlerError> {
        Ok(degree(&self.own(l)?))
    }

    /// `a` with `L = a t′`, if `L` lies on the `t′`-line.
    pub fn line_coefficient(&self, l: &LatticeVector) -> Option<i64> {
        let l = self.own(l).ok()?;
        let a = l.coords()[0] / 3;
        (self.t_prime.scale(a) == l).then_some(a)
    }

    /// `L² − K·L = 2(χ(L) − 1)`; equals `d(s_L)` when `K² = 0`.
    pub fn l2_minus_kl(&self, l: &LatticeVector) -> Result<i64, KahlerError> {
        let l = self.own(l)?;
        Ok(l.square() - self.canonical.pair(&l)?)
    }

    /// `χ(L) = 1 + (L² − K·L)/2`.
    pub fn riemann_roch_chi(&self, l: &LatticeVector) -> Result<i64, KahlerError> {
        let v = self.l2_minus_kl(l)?;
        if v.is_odd() {
            return Err(KahlerError::NonIntegral);
        }
        Ok(1 + v / 2)
    }

    /// `c(s_L) = 2L − K`.
    pub fn characteristic(&self, l: &LatticeVector) -> Result<LatticeVector, KahlerError> {
        Ok(self.own(l)?.scale(2).sub(&self.canonical)?)
    }

    /// Inverse of [`KahlerModel::characteristic`]; `None` when `c + K` is odd.
    pub fn line_bundle_of(&self, c: &LatticeVector) -> Option<LatticeVector> {
        let c = self.own(c).ok()?;
        let sum = c.add(&self.canonical).ok()?;
        if sum.coords().iter().any(|x| x.is_odd()) {
            return None;
        }
        LatticeVector::new(self.lattice(), sum.coords().iter().map(|x| x / 2).collect()).ok()
    }

    /// `d(s_L) = (c² − σ)/4 − b₊ − 1` with `σ = −8`, `b₊ = 1`.
    pub fn expected_dimension(&self, l: &LatticeVector) -> Result<i64, KahlerError> {
        let c2 = self.characteristic(l)?.square();
        if (c2 + 8) % 4 != 0 {
            return Err(KahlerError::NonIntegral);
        }
        Ok((c2 + 8) / 4 - 2)
    }

    /// Effectivity on the `t′`-line: `h⁰(a t′) > 0 ⟺ a ∈ ⟨m, n⟩`.
    pub fn h0_positive(&self, l: &LatticeVector) -> Option<bool> {
        let a = self.line_coefficient(l)?;
        self.semigroup.as_ref().map(|s| s.contains(a))
    }

    /// Side of the wall containing the zero perturbation, from the sign of
    /// `deg K − 2 deg L`.
    pub fn wall_side(&self, l: &LatticeVector) -> Result<WallSide, KahlerError> {
        let tau = self.k_degree() - self.deg(l)? * 2;
        Ok(match tau.numer().signum() * tau.denom().signum() {
            1 => WallSide::Plus,
            -1 => WallSide::Minus,
            _ => WallSide::OnWall,
        })
    }

    /// `SW^±(X, s_L)`: zero below the dimension bound, otherwise `(1, 0)` when
    /// `h⁰(L) > 0` and `(0, −1)` when `h²(L) > 0`.
    pub fn sw_chambered(&self, l: &LatticeVector, chamber: KahlerChamber) -> Result<Option<i64>, KahlerError> {
        if self.l2_minus_kl(l)? < 0 {
            return Ok(Some(0));
        }
        Ok(self.h0_positive(l).map(|h0| match (h0, chamber) {
            (true, KahlerChamber::Plus) => 1,
            (true, KahlerChamber::Minus) => 0,
            (false, KahlerChamber::Plus) => 0,
            (false, KahlerChamber::Minus) => -1,
        }))
    }

    /// Whether the zero chamber for `s_L` is a well-defined chamber.
    pub fn zero_chamber_defined(&self, l: &LatticeVector) -> Result<bool, KahlerError> {
        let c = self.characteristic(l)?;
        Ok(c.square() >= 0 && !c.is_zero() && self.wall_side(l)? != WallSide::OnWall)
    }

    /// `SW⁰(X, s_L)`.
    ///
    /// With `h⁰(L) > 0` and `0 ≤ deg L < deg K / 2` the value is `1`; with
    /// `h⁰(L) = 0` and `deg K / 2 < deg L ≤ deg K` it is `−1`; otherwise `0`.
    /// On `E(1)_{m,n}` every class off the `t′`-line has vanishing invariant,
    /// and PSC models vanish outright.
    pub fn sw_zero_chamber(&self, l: &LatticeVector) -> Result<Option<i64>, KahlerError> {
        let c = self.characteristic(l)?;
        if c.square() < 0 {
            return Err(KahlerError::ChamberUndefined(format!("c(s_L)^2 = {} < 0", c.square())));
        }
        if c.is_zero() {
            return Err(KahlerError::ChamberUndefined("c(s_L) is torsion".into()));
        }
        if self.wall_side(l)? == WallSide::OnWall {
            return Err(KahlerError::ChamberUndefined("zero perturbation lies on the wall".into()));
        }
        if self.psc {
            return Ok(Some(0));
        }
        if self.l2_minus_kl(l)? < 0 {
            return Ok(Some(0));
        }
        let Some(h0) = self.h0_positive(l) else {
            return Ok(match self.surface {
                Atom::E1Log { .. } if self.line_coefficient(l).is_none() => Some(0),
                _ => None,
            });
        };
        let deg = self.deg(l)?;
        let half_k = self.k_degree() / 2;
        let zero = Ratio::from_integer(0);
        Ok(Some(if h0 && zero <= deg && deg < half_k {
            1
        } else if !h0 && half_k < deg && deg <= self.k_degree() {
            -1
        } else {
            0
        }))
    }
}

/// Nonzero zero-chamber invariants along `a t′` for `−bound ≤ a ≤ k + bound`.
pub fn basic_classes_zero(model: &KahlerModel, bound: i64) -> Result<Vec<(LatticeVector, i64)>, KahlerError> {
    if !matches!(model.surface, Atom::E1Log { .. }) {
        return Err(KahlerError::UnsupportedSurface(model.surface.name()));
    }
    let k = model.canonical.divisibility() as i64;
    let mut out = Vec::new();
    for a in -bound..=k + bound {
        let l = model.line(a);
        if let Some(v) = model.sw_zero_chamber(&l)? {
            if v != 0 {
                out.push((l, v));
            }
        }
    }
    Ok(out)
}

/// `a,sw_zero` table of [`basic_classes_zero`].
pub fn basic_classes_csv(model: &KahlerModel, bound: i64) -> Result<String, KahlerError> {
    let mut s = String::from("a,sw_zero\n");
    for (l, v) in basic_classes_zero(model, bound)? {
        let a = model.line_coefficient(&l).expect("on the t'-line");
        s.push_str(&format!("{a},{v}\n"));
    }
    Ok(s)
}
