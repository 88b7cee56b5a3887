//! Quantum-disk algebras, the representations `π±` and the symbol maps
//! `σ`, `ρ` and `ρ•`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisVector, BlockOperator, Entry, Space, Spin};
use crate::qcore::QParam;
use crate::spectral::{corner_action, fit_decay, BGenerator, Corner, DecayFit, SpinorRep};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn prune<K: Ord>(map: &mut BTreeMap<K, C64>) {
    map.retain(|_, v| *v != ZERO);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiskSign {
    Plus,
    Minus,
}

impl DiskSign {
    pub fn sign(self) -> f64 {
        match self {
            DiskSign::Plus => 1.0,
            DiskSign::Minus => -1.0,
        }
    }
}

/// A normal-ordered monomial `coeff · aˡ bᵐ` (`a^{-l} = (a*)ˡ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskMonomial {
    pub sign: DiskSign,
    pub l: i32,
    pub m: u32,
    pub coeff: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiskLetter {
    A,
    AStar,
    B,
}

/// Element of `A(D²_{q±})` in the basis `aˡbᵐ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskElement {
    pub sign: DiskSign,
    q: f64,
    terms: BTreeMap<(i32, u32), C64>,
}

/// `aˡ¹ · aˡ²` in normal form.
fn a_power_product(q: f64, l1: i32, l2: i32) -> BTreeMap<(i32, u32), C64> {
    if l1 == 0 || l2 == 0 || (l1 > 0) == (l2 > 0) {
        return BTreeMap::from([((l1 + l2, 0), ONE)]);
    }
    let mut out = BTreeMap::new();
    if l1 > 0 {
        // a^{l1} (a*)^k = X − q^{−2(k−1)} X b²,  X = a^{l1−1} (a*)^{k−1}
        let k = -l2;
        for ((l, m), c) in a_power_product(q, l1 - 1, l2 + 1) {
            *out.entry((l, m)).or_insert(ZERO) += c;
            *out.entry((l, m + 2)).or_insert(ZERO) -= c * q.powi(-2 * (k - 1));
        }
    } else {
        // (a*)^k a^{l2} = Y − q^{2 l2} Y b²,  Y = (a*)^{k−1} a^{l2−1}
        for ((l, m), c) in a_power_product(q, l1 + 1, l2 - 1) {
            *out.entry((l, m)).or_insert(ZERO) += c;
            *out.entry((l, m + 2)).or_insert(ZERO) -= c * q.powi(2 * l2);
        }
    }
    prune(&mut out);
    out
}

impl DiskElement {
    pub fn zero(q: &QParam, sign: DiskSign) -> Self {
        Self {
            sign,
            q: q.q(),
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(q: &QParam, sign: DiskSign, l: i32, m: u32, coeff: C64) -> Self {
        let mut e = Self::zero(q, sign);
        if coeff != ZERO {
            e.terms.insert((l, m), coeff);
        }
        e
    }

    pub fn one(q: &QParam, sign: DiskSign) -> Self {
        Self::monomial(q, sign, 0, 0, ONE)
    }

    pub fn letter(q: &QParam, sign: DiskSign, letter: DiskLetter) -> Self {
        match letter {
            DiskLetter::A => Self::monomial(q, sign, 1, 0, ONE),
            DiskLetter::AStar => Self::monomial(q, sign, -1, 0, ONE),
            DiskLetter::B => Self::monomial(q, sign, 0, 1, ONE),
        }
    }

    /// Reduces a word in `a`, `a*`, `b` to normal form.
    pub fn normal_form(q: &QParam, sign: DiskSign, word: &[DiskLetter]) -> Self {
        word.iter().fold(Self::one(q, sign), |acc, &l| {
            acc.mul(&Self::letter(q, sign, l))
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn terms(&self) -> &BTreeMap<(i32, u32), C64> {
        &self.terms
    }

    pub fn monomials(&self) -> Vec<DiskMonomial> {
        self.terms
            .iter()
            .map(|(&(l, m), &coeff)| DiskMonomial {
                sign: self.sign,
                l,
                m,
                coeff,
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            *out.terms.entry(*k).or_insert(ZERO) += v;
        }
        prune(&mut out.terms);
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| *v *= c);
        prune(&mut out.terms);
        out
    }

    /// Product of two monomials: `aˡ¹bᵐ¹ · aˡ²bᵐ² = q^{m₁l₂} aˡ¹aˡ² b^{m₁+m₂}`.
    pub fn monomial_product(q: f64, (l1, m1): (i32, u32), (l2, m2): (i32, u32)) -> BTreeMap<(i32, u32), C64> {
        let f = q.powi(m1 as i32 * l2);
        a_power_product(q, l1, l2)
            .into_iter()
            .map(|((l, m), c)| ((l, m + m1 + m2), c * f))
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.sign, other.sign);
        let mut out = Self {
            sign: self.sign,
            q: self.q,
            terms: BTreeMap::new(),
        };
        for (&k1, &c1) in &self.terms {
            for (&k2, &c2) in &other.terms {
                for (k, c) in Self::monomial_product(self.q, k1, k2) {
                    *out.terms.entry(k).or_insert(ZERO) += c1 * c2 * c;
                }
            }
        }
        prune(&mut out.terms);
        out
    }

    /// `(c aˡbᵐ)* = c̄ q^{−ml} a^{−l} bᵐ`.
    pub fn star(&self) -> Self {
        let mut out = Self {
            sign: self.sign,
            q: self.q,
            terms: BTreeMap::new(),
        };
        for (&(l, m), c) in &self.terms {
            *out.terms.entry((-l, m)).or_insert(ZERO) += c.conj() * self.q.powi(-(m as i32) * l);
        }
        prune(&mut out.terms);
        out
    }

    /// `π±(aˡbᵐ) ε_k`, returned as target index and coefficient.
    pub fn monomial_action(q: f64, sign: DiskSign, l: i32, m: u32, k: u32) -> Option<(u32, f64)> {
        let mut c = (sign.sign() * q.powi(k as i32)).powi(m as i32);
        let mut k = k as i64;
        if l >= 0 {
            for _ in 0..l {
                c *= (1.0 - q.powi(2 * k as i32 + 2)).sqrt();
                k += 1;
            }
        } else {
            for _ in 0..(-l) {
                if k == 0 {
                    return None;
                }
                c *= (1.0 - q.powi(2 * k as i32)).sqrt();
                k -= 1;
            }
        }
        Some((k as u32, c))
    }

    /// `π±(x) ε_k` as a sparse vector.
    pub fn apply(&self, k: u32) -> BTreeMap<u32, C64> {
        let mut out = BTreeMap::new();
        for (&(l, m), &c) in &self.terms {
            if let Some((t, w)) = Self::monomial_action(self.q, self.sign, l, m, k) {
                *out.entry(t).or_insert(ZERO) += c * w;
            }
        }
        prune(&mut out);
        out
    }

    /// Matrix of `π±(x)` compressed to `span{ε₀ … ε_N}`.
    pub fn pi_pm_matrix(&self, trunc_n: u32) -> DMatrix<C64> {
        let dim = trunc_n as usize + 1;
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..=trunc_n {
            for (t, c) in self.apply(k) {
                if t <= trunc_n {
                    m[(t as usize, k as usize)] += c;
                }
            }
        }
        m
    }

    /// `σ`: `a ↦ u`, `b ↦ 0`.
    pub fn sigma(&self) -> Laurent {
        let mut terms = BTreeMap::new();
        for (&(l, m), &c) in &self.terms {
            if m == 0 {
                *terms.entry(l).or_insert(ZERO) += c;
            }
        }
        prune(&mut terms);
        Laurent { terms }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(&other.scale(-ONE))
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Laurent polynomial in the unitary generator `u` of `A(S¹)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Laurent {
    pub terms: BTreeMap<i32, C64>,
}

impl Laurent {
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = BTreeMap::new();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                *terms.entry(a + b).or_insert(ZERO) += x * y;
            }
        }
        prune(&mut terms);
        Self { terms }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<i32> =
            self.terms.keys().chain(other.terms.keys()).copied().collect();
        keys.iter()
            .map(|k| {
                (self.terms.get(k).copied().unwrap_or_default()
                    - other.terms.get(k).copied().unwrap_or_default())
                .norm()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CosphereKey {
    pub l1: i32,
    pub m1: u32,
    pub l2: i32,
    pub m2: u32,
    /// Winding of the circle factor `uⁿ`.
    pub n: i32,
}

/// Finite sum of `aˡ¹bᵐ¹ ⊗ aˡ²bᵐ² ⊗ uⁿ` in `A(D²_{q+}) ⊗ A(D²_{q−}) ⊗ A(S¹)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosphereElement {
    q: f64,
    terms: BTreeMap<CosphereKey, C64>,
}

/// Element of `A(D²_{q+}) ⊗ A(D²_{q−})`, keyed by `(l1, m1, l2, m2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorDisk {
    pub q: f64,
    pub terms: BTreeMap<(i32, u32, i32, u32), C64>,
}

impl CosphereElement {
    pub fn zero(q: &QParam) -> Self {
        Self {
            q: q.q(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(q: &QParam) -> Self {
        Self::term(q, CosphereKey { l1: 0, m1: 0, l2: 0, m2: 0, n: 0 }, ONE)
    }

    pub fn term(q: &QParam, key: CosphereKey, c: C64) -> Self {
        let mut e = Self::zero(q);
        if c != ZERO {
            e.terms.insert(key, c);
        }
        e
    }

    /// `x₊ ⊗ x₋ ⊗ uⁿ`.
    pub fn tensor(x_plus: &DiskElement, x_minus: &DiskElement, n: i32) -> Self {
        let mut terms = BTreeMap::new();
        for (&(l1, m1), &c1) in x_plus.terms() {
            for (&(l2, m2), &c2) in x_minus.terms() {
                *terms.entry(CosphereKey { l1, m1, l2, m2, n }).or_insert(ZERO) += c1 * c2;
            }
        }
        prune(&mut terms);
        Self { q: x_plus.q(), terms }
    }

    pub fn terms(&self) -> &BTreeMap<CosphereKey, C64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            *out.terms.entry(*k).or_insert(ZERO) += v;
        }
        prune(&mut out.terms);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| *v *= c);
        prune(&mut out.terms);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = BTreeMap::new();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let left = DiskElement::monomial_product(self.q, (k1.l1, k1.m1), (k2.l1, k2.m1));
                let right = DiskElement::monomial_product(self.q, (k1.l2, k1.m2), (k2.l2, k2.m2));
                let c = c1 * c2;
                for (&(l1, m1), x) in &left {
                    for (&(l2, m2), y) in &right {
                        let key = CosphereKey { l1, m1, l2, m2, n: k1.n + k2.n };
                        *terms.entry(key).or_insert(ZERO) += c * x * y;
                    }
                }
            }
        }
        prune(&mut terms);
        Self { q: self.q, terms }
    }

    pub fn star(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let f = self.q.powi(-(k.m1 as i32) * k.l1) * self.q.powi(-(k.m2 as i32) * k.l2);
            let key = CosphereKey { l1: -k.l1, m1: k.m1, l2: -k.l2, m2: k.m2, n: -k.n };
            *terms.entry(key).or_insert(ZERO) += c.conj() * f;
        }
        prune(&mut terms);
        Self { q: self.q, terms }
    }

    /// Symbol of `δᵏ`: multiplies a winding-`n` term by `nᵏ`.
    pub fn delta_k(&self, k: u32) -> Self {
        let mut out = self.clone();
        for (key, v) in out.terms.iter_mut() {
            *v *= (key.n as f64).powi(k as i32);
        }
        prune(&mut out.terms);
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `ρ•` applied to `ε_x ⊗ ε_y`: the circle factor is forgotten.
    pub fn apply_bullet(&self, x: u32, y: u32) -> BTreeMap<(u32, u32), C64> {
        let mut out = BTreeMap::new();
        for (k, c) in &self.terms {
            let Some((tx, cx)) = DiskElement::monomial_action(self.q, DiskSign::Plus, k.l1, k.m1, x)
            else {
                continue;
            };
            let Some((ty, cy)) = DiskElement::monomial_action(self.q, DiskSign::Minus, k.l2, k.m2, y)
            else {
                continue;
            };
            *out.entry((tx, ty)).or_insert(ZERO) += c * cx * cy;
        }
        prune(&mut out);
        out
    }

    /// `Q(ρ ⊗ 1₂)Q` on the truncated spinor space, winding `n` acting as a
    /// shift of `2j` by `n`.
    pub fn realize(&self, space: &Arc<Space>) -> BlockOperator {
        PsiSymbol::from_b(self.clone()).realize(space)
    }
}

/// Grade-zero part of a cosphere element.
pub fn grade_zero_symbol(e: &CosphereElement) -> CosphereElement {
    CosphereElement {
        q: e.q,
        terms: e
            .terms
            .iter()
            .filter(|(k, _)| k.n == 0)
            .map(|(k, c)| (*k, *c))
            .collect(),
    }
}

/// Projection onto the two disk factors of a winding-zero element.
pub fn r_project(e: &CosphereElement) -> Result<TensorDisk> {
    if let Some(k) = e.terms.keys().find(|k| k.n != 0) {
        return Err(Error::NonZeroWinding(format!("term with winding {}", k.n)));
    }
    Ok(TensorDisk {
        q: e.q,
        terms: e
            .terms
            .iter()
            .map(|(k, c)| ((k.l1, k.m1, k.l2, k.m2), *c))
            .collect(),
    })
}

/// Symbol of an element of `Ψ⁰ = B + P↑B`: one cosphere element per spin
/// sector.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiSymbol {
    pub up: CosphereElement,
    pub dn: CosphereElement,
}

impl PsiSymbol {
    /// Symbol of an element of `B` (same on both sectors).
    pub fn from_b(e: CosphereElement) -> Self {
        Self { up: e.clone(), dn: e }
    }

    /// `ρ(P↑) = P↑`.
    pub fn p_up(q: &QParam) -> Self {
        Self {
            up: CosphereElement::one(q),
            dn: CosphereElement::zero(q),
        }
    }

    pub fn p_dn(q: &QParam) -> Self {
        Self {
            up: CosphereElement::zero(q),
            dn: CosphereElement::one(q),
        }
    }

    /// `F = P↑ − P↓`.
    pub fn sign_f(q: &QParam) -> Self {
        Self {
            up: CosphereElement::one(q),
            dn: CosphereElement::one(q).scale(-ONE),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            up: self.up.mul(&other.up),
            dn: self.dn.mul(&other.dn),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            up: self.up.add(&other.up),
            dn: self.dn.add(&other.dn),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            up: self.up.scale(c),
            dn: self.dn.scale(c),
        }
    }

    pub fn sector(&self, s: Spin) -> &CosphereElement {
        match s {
            Spin::Up => &self.up,
            Spin::Down => &self.dn,
        }
    }

    pub fn realize(&self, space: &Arc<Space>) -> BlockOperator {
        let entries: Vec<Entry> = space
            .basis()
            .iter()
            .enumerate()
            .flat_map(|(col, v)| {
                let e = self.sector(v.s);
                e.terms
                    .iter()
                    .filter_map(|(k, c)| {
                        let (tx, cx) =
                            DiskElement::monomial_action(e.q, DiskSign::Plus, k.l1, k.m1, v.x)?;
                        let (ty, cy) =
                            DiskElement::monomial_action(e.q, DiskSign::Minus, k.l2, k.m2, v.y)?;
                        let t = BasisVector::new(
                            v.two_j as i64 + k.n as i64,
                            tx as i64,
                            ty as i64,
                            v.s,
                        )?;
                        let row = space.index_of(&t)?;
                        Some(Entry {
                            row: row as u32,
                            col: col as u32,
                            value: c * cx * cy,
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        BlockOperator::from_entries(space, entries)
    }
}

/// `ρ` on a generator of `B`.
pub fn rho(q: &QParam, g: BGenerator) -> CosphereElement {
    let key = |l1, m1, l2, m2, n| CosphereKey { l1, m1, l2, m2, n };
    let t = |k, c: f64| CosphereElement::term(q, k, C64::new(c, 0.0));
    match g {
        BGenerator::APlus => t(key(1, 0, 1, 0, 1), 1.0),
        BGenerator::AMinus => t(key(0, 1, 0, 1, -1), -q.q()),
        BGenerator::BPlus => t(key(1, 0, 0, 1, 1), -1.0),
        BGenerator::BMinus => t(key(0, 1, -1, 0, -1), -1.0),
        BGenerator::ASlash | BGenerator::BSlash => CosphereElement::zero(q),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PsiGenerator {
    B(BGenerator),
    PUp,
}

/// `ρ` on the generators of `Ψ⁰`.
pub fn rho_on_generators(q: &QParam) -> BTreeMap<PsiGenerator, PsiSymbol> {
    let mut out: BTreeMap<PsiGenerator, PsiSymbol> = BGenerator::ALL
        .iter()
        .map(|&g| (PsiGenerator::B(g), PsiSymbol::from_b(rho(q, g))))
        .collect();
    out.insert(PsiGenerator::PUp, PsiSymbol::p_up(q));
    out
}

/// A generator of `B` or its adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BLetter {
    pub generator: BGenerator,
    pub adjoint: bool,
}

impl BLetter {
    pub fn plain(generator: BGenerator) -> Self {
        Self {
            generator,
            adjoint: false,
        }
    }

    pub fn star(generator: BGenerator) -> Self {
        Self {
            generator,
            adjoint: true,
        }
    }

    pub fn name(&self) -> String {
        if self.adjoint {
            format!("{}*", self.generator.name())
        } else {
            self.generator.name().to_string()
        }
    }

    pub fn winding(&self) -> i32 {
        if self.adjoint {
            -self.generator.winding()
        } else {
            self.generator.winding()
        }
    }

    pub fn symbol(&self, q: &QParam) -> CosphereElement {
        let r = rho(q, self.generator);
        if self.adjoint {
            r.star()
        } else {
            r
        }
    }

    pub fn operator(&self, rep: &SpinorRep) -> BlockOperator {
        let op = rep.b_generator(self.generator);
        if self.adjoint {
            op.adjoint()
        } else {
            op
        }
    }

    /// Image of a single basis vector, without building the operator.
    pub fn apply(&self, q: &QParam, v: &BasisVector) -> Vec<(BasisVector, f64)> {
        let (corners, flip) = generator_corners(self.generator);
        let keep = |src: &BasisVector, tgt: &BasisVector| (src.s != tgt.s) == flip;
        let mut out = Vec::new();
        for &c in corners {
            if self.adjoint {
                for (w, coeff) in corner_adjoint_action(c, q, v) {
                    if keep(&w, v) {
                        out.push((w, coeff));
                    }
                }
            } else {
                for (w, coeff) in corner_action(c, q, v) {
                    if keep(v, &w) {
                        out.push((w, coeff));
                    }
                }
            }
        }
        out
    }
}

fn generator_corners(g: BGenerator) -> (&'static [Corner], bool) {
    match g {
        BGenerator::APlus => (&[Corner::APlus], false),
        BGenerator::AMinus => (&[Corner::AMinus], false),
        BGenerator::BPlus => (&[Corner::BPlus], false),
        BGenerator::BMinus => (&[Corner::BMinus], false),
        BGenerator::ASlash => (&[Corner::APlus, Corner::AMinus], true),
        BGenerator::BSlash => (&[Corner::BPlus, Corner::BMinus], true),
    }
}

/// Column of the adjoint of a corner operator: all `w` whose image has a
/// component along `v`.
pub fn corner_adjoint_action(corner: Corner, q: &QParam, v: &BasisVector) -> Vec<(BasisVector, f64)> {
    let mut out = Vec::new();
    for dx in -1..=1i64 {
        for dy in -1..=1i64 {
            for s in Spin::BOTH {
                let Some(w) = BasisVector::new(
                    v.two_j as i64 - corner.shift() as i64,
                    v.x as i64 + dx,
                    v.y as i64 + dy,
                    s,
                ) else {
                    continue;
                };
                for (t, c) in corner_action(corner, q, &w) {
                    if t == *v {
                        out.push((w, c));
                    }
                }
            }
        }
    }
    out
}

/// A word in the generators of `B` and their adjoints.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BWord(pub Vec<BLetter>);

impl BWord {
    pub fn from_generators(gens: &[BGenerator]) -> Self {
        Self(gens.iter().map(|&g| BLetter::plain(g)).collect())
    }

    pub fn name(&self) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0.iter().map(|g| g.name()).collect::<Vec<_>>().join("·")
    }

    pub fn symbol(&self, q: &QParam) -> CosphereElement {
        self.0
            .iter()
            .fold(CosphereElement::one(q), |acc, g| acc.mul(&g.symbol(q)))
    }

    pub fn operator(&self, rep: &SpinorRep) -> BlockOperator {
        let mut gens = BTreeMap::new();
        for &g in &self.0 {
            gens.entry(g).or_insert_with(|| g.operator(rep));
        }
        self.operator_with(&gens, rep.space())
    }

    /// Operator from pre-built letter operators.
    pub fn operator_with(
        &self,
        gens: &BTreeMap<BLetter, BlockOperator>,
        space: &Arc<Space>,
    ) -> BlockOperator {
        match self.0.as_slice() {
            [] => BlockOperator::identity(space),
            [first, rest @ ..] => rest
                .iter()
                .try_fold(gens[first].clone(), |acc, g| acc.compose(&gens[g]))
                .expect("same space"),
        }
    }

    /// `T v` for a single basis vector, letters applied right to left.
    pub fn apply(&self, q: &QParam, v: &BasisVector) -> BTreeMap<BasisVector, f64> {
        let mut state = BTreeMap::from([(*v, 1.0)]);
        for letter in self.0.iter().rev() {
            let mut next = BTreeMap::new();
            for (w, c) in &state {
                for (t, d) in letter.apply(q, w) {
                    *next.entry(t).or_insert(0.0) += c * d;
                }
            }
            state = next;
        }
        state.retain(|_, c| *c != 0.0);
        state
    }

    /// Diagonal of `T` on a truncated space, column by column; every level is
    /// exact because no truncated operator is involved.
    pub fn diagonal_on(&self, q: &QParam, space: &Space) -> Vec<C64> {
        space
            .basis()
            .par_iter()
            .map(|v| C64::new(self.apply(q, v).get(v).copied().unwrap_or(0.0), 0.0))
            .collect()
    }

    /// All words of length `≤ max_len`, in lexicographic order per length.
    pub fn all_up_to(max_len: usize, alphabet: &[BLetter]) -> Vec<BWord> {
        let mut out = vec![BWord(vec![])];
        let mut layer = vec![BWord(vec![])];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for &g in alphabet {
                    let mut v = w.0.clone();
                    v.push(g);
                    next.push(BWord(v));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn winding(&self) -> i32 {
        self.0.iter().map(|g| g.winding()).sum()
    }
}

/// Values `Π(T v^j_{x,y,s})` along a list of levels and their limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitOracle {
    pub per_level: Vec<(u32, BTreeMap<(u32, u32), C64>)>,
    pub limit: BTreeMap<(u32, u32), C64>,
    pub last_increment: f64,
}

fn sparse_distance(a: &BTreeMap<(u32, u32), C64>, b: &BTreeMap<(u32, u32), C64>) -> f64 {
    let keys: std::collections::BTreeSet<&(u32, u32)> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| {
            (a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default()).norm()
        })
        .fold(0.0, f64::max)
}

pub fn bullet_distance(a: &BTreeMap<(u32, u32), C64>, b: &BTreeMap<(u32, u32), C64>) -> f64 {
    sparse_distance(a, b)
}

/// Limit oracle for `ρ•(T) ε_{x,y}` with `T` given as an operator on the
/// truncated space.
pub fn rho_bullet_limit_oracle(
    t: &BlockOperator,
    x: u32,
    y: u32,
    s: Spin,
    j_list: &[u32],
    decay_tol: f64,
) -> Result<LimitOracle> {
    let space = t.space();
    limit_oracle_from(x, y, s, j_list, decay_tol, |v| {
        let col = space
            .index_of(v)
            .ok_or_else(|| Error::Precondition(format!("{v} outside the truncation")))?;
        Ok(t.column(col)
            .into_iter()
            .map(|(row, c)| (space.vector(row), c))
            .collect())
    })
}

/// Same oracle for a word in the `B` generators, evaluated column by column
/// with no truncation.
pub fn rho_bullet_limit_oracle_word(
    word: &BWord,
    q: &QParam,
    x: u32,
    y: u32,
    s: Spin,
    j_list: &[u32],
    decay_tol: f64,
) -> Result<LimitOracle> {
    limit_oracle_from(x, y, s, j_list, decay_tol, |v| {
        Ok(word
            .apply(q, v)
            .into_iter()
            .map(|(w, c)| (w, C64::new(c, 0.0)))
            .collect())
    })
}

fn limit_oracle_from(
    x: u32,
    y: u32,
    s: Spin,
    j_list: &[u32],
    decay_tol: f64,
    image: impl Fn(&BasisVector) -> Result<Vec<(BasisVector, C64)>>,
) -> Result<LimitOracle> {
    let mut per_level = Vec::new();
    for &two_j in j_list {
        let v = BasisVector::new(two_j as i64, x as i64, y as i64, s).ok_or_else(|| {
            Error::Precondition(format!("no basis vector (2j={two_j}, x={x}, y={y}, {s:?})"))
        })?;
        let mut projected = BTreeMap::new();
        for (w, c) in image(&v)? {
            *projected.entry((w.x, w.y)).or_insert(ZERO) += c;
        }
        prune(&mut projected);
        per_level.push((two_j, projected));
    }
    let last_increment = match per_level.len() {
        0 | 1 => f64::INFINITY,
        k => sparse_distance(&per_level[k - 1].1, &per_level[k - 2].1),
    };
    if last_increment > decay_tol {
        return Err(Error::NonConvergent {
            what: format!("limit oracle at (x={x}, y={y})"),
            increment: last_increment,
            tolerance: decay_tol,
        });
    }
    let limit = per_level.last().map(|p| p.1.clone()).unwrap_or_default();
    Ok(LimitOracle {
        per_level,
        limit,
        last_increment,
    })
}

/// Comparison of an approximate-representation corner with its tensor
/// formula, and decay of the smoothing difference of the matching `B`
/// generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub corner: Corner,
    /// `max |ua − Q(ρ(ã) ⊗ 1₂)Q|` over all entries.
    pub tensor_mismatch: f64,
    /// Per-level decay of `ã − Q(ρ(ã) ⊗ 1₂)Q`.
    pub smoothing_decay: DecayFit,
}

pub fn correspondence_check(
    rep: &SpinorRep,
    approx: &crate::spectral::ApproxRep,
    corner: Corner,
) -> Result<CorrespondenceReport> {
    let q = rep.q;
    let g = match corner {
        Corner::APlus => BGenerator::APlus,
        Corner::AMinus => BGenerator::AMinus,
        Corner::BPlus => BGenerator::BPlus,
        Corner::BMinus => BGenerator::BMinus,
    };
    let space = rep.space();
    let realized = rho(&q, g).realize(space);
    let tensor_mismatch = approx.corner(corner).sub(&realized)?.max_abs();
    let diff = rep.b_generator(g).sub(&realized)?;
    let trunc = space.truncation();
    let smoothing_decay = fit_decay(&diff.entry_decay_profile(), &q, 4, trunc.interior_max());
    Ok(CorrespondenceReport {
        corner,
        tensor_mismatch,
        smoothing_decay,
    })
}
