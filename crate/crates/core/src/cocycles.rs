//! Cyclic cochains over the quantum group algebra: the `(b, B)` operators,
//! the local cocycles computed from symbols, trace cochains computed on the
//! truncated spinor representation, and the index pairing of the
//! fundamental unitary.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BlockOperator, Space, Spin};
use crate::qcore::QParam;
use crate::residues::{
    fit_levels, level_polynomial, nc_integral_b, nc_integral_by_shift, regularized_trace_at_zero,
    FitSector, Projection, RegularizedTrace,
};
use crate::spectral::{build_dirac_on, d_commutator, f_commutator, nabla_k, BGenerator, Generator, SpinorRep};
use crate::symbol::{rho, CosphereElement, PsiSymbol};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    AStar,
    B,
    BStar,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::AStar, Letter::B, Letter::BStar];

    pub fn star(self) -> Self {
        match self {
            Letter::A => Letter::AStar,
            Letter::AStar => Letter::A,
            Letter::B => Letter::BStar,
            Letter::BStar => Letter::B,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Letter::A => "a",
            Letter::AStar => "a*",
            Letter::B => "b",
            Letter::BStar => "b*",
        }
    }
}

/// Noncommutative polynomial in `a, a*, b, b*`, kept unreduced: the
/// relations are enforced by the realizations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgElement {
    terms: BTreeMap<Vec<Letter>, C64>,
}

impl AlgElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::word(&[])
    }

    pub fn word(letters: &[Letter]) -> Self {
        Self {
            terms: BTreeMap::from([(letters.to_vec(), ONE)]),
        }
    }

    pub fn letter(l: Letter) -> Self {
        Self::word(&[l])
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Letter>, C64> {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            *out.terms.entry(w.clone()).or_insert(ZERO) += c;
        }
        out.terms.retain(|_, c| *c != ZERO);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| *v *= c);
        out.terms.retain(|_, c| *c != ZERO);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                *out.terms.entry(w).or_insert(ZERO) += c1 * c2;
            }
        }
        out.terms.retain(|_, c| *c != ZERO);
        out
    }

    pub fn star(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.iter().rev().map(|l| l.star()).collect(), c.conj()))
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    /// Exact bit-level key, usable in hash maps.
    pub fn key(&self) -> ElementKey {
        ElementKey(
            self.terms
                .iter()
                .map(|(w, c)| (w.clone(), [c.re.to_bits(), c.im.to_bits()]))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElementKey(Vec<(Vec<Letter>, [u64; 2])>);

impl fmt::Display for AlgElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let word = if w.is_empty() {
                    "1".to_string()
                } else {
                    w.iter().map(|l| l.name()).collect::<Vec<_>>().join("")
                };
                if *c == ONE {
                    word
                } else if c.im == 0.0 {
                    format!("{}·{word}", c.re)
                } else {
                    format!("({c})·{word}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Unital algebra on which cochains are evaluated.
pub trait UnitalAlgebra: Clone + Send + Sync + 'static {
    fn unit() -> Self;
    fn mul(&self, other: &Self) -> Self;
}

impl UnitalAlgebra for AlgElement {
    fn unit() -> Self {
        AlgElement::one()
    }

    fn mul(&self, other: &Self) -> Self {
        AlgElement::mul(self, other)
    }
}

type CochainFn<A> = dyn Fn(&[A]) -> Result<C64> + Send + Sync;

/// Multilinear functional on `arity` algebra elements.
#[derive(Clone)]
pub struct Cochain<A> {
    name: String,
    arity: usize,
    f: Arc<CochainFn<A>>,
}

impl<A> fmt::Debug for Cochain<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cochain")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

impl<A: UnitalAlgebra> Cochain<A> {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        f: impl Fn(&[A]) -> Result<C64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            arity,
            f: Arc::new(f),
        }
    }

    pub fn zero(arity: usize) -> Self {
        Self::new("0", arity, |_| Ok(ZERO))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, args: &[A]) -> Result<C64> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: args.len(),
            });
        }
        (self.f)(args)
    }

    /// Hochschild coboundary: arity `m` to `m + 1`.
    pub fn b(&self) -> Self {
        let m = self.arity;
        if m == 0 {
            return Self::zero(1);
        }
        let phi = self.clone();
        Self::new(format!("b({})", self.name), m + 1, move |a: &[A]| {
            let mut acc = ZERO;
            for j in 0..m {
                let mut args: Vec<A> = Vec::with_capacity(m);
                args.extend_from_slice(&a[..j]);
                args.push(a[j].mul(&a[j + 1]));
                args.extend_from_slice(&a[j + 2..]);
                acc += sign(j) * phi.eval(&args)?;
            }
            let mut args: Vec<A> = Vec::with_capacity(m);
            args.push(a[m].mul(&a[0]));
            args.extend_from_slice(&a[1..m]);
            Ok(acc + sign(m) * phi.eval(&args)?)
        })
    }

    /// `B₀`: arity `n + 1` to `n`.
    pub fn b0(&self) -> Self {
        let phi = self.clone();
        let n = self.arity.saturating_sub(1);
        Self::new(format!("B0({})", self.name), n, move |a: &[A]| {
            let mut left = vec![A::unit()];
            left.extend_from_slice(a);
            let mut right = a.to_vec();
            right.push(A::unit());
            Ok(phi.eval(&left)? - sign(n) * phi.eval(&right)?)
        })
    }

    /// Signed cyclic sum `N`.
    pub fn cyclic_sum(&self) -> Self {
        let psi = self.clone();
        let n = self.arity;
        Self::new(format!("N({})", self.name), n, move |a: &[A]| {
            if n == 0 {
                return psi.eval(a);
            }
            let mut acc = ZERO;
            for j in 0..n {
                let mut args = a[j..].to_vec();
                args.extend_from_slice(&a[..j]);
                acc += sign((n - 1) * j) * psi.eval(&args)?;
            }
            Ok(acc)
        })
    }

    /// Connes boundary `B = N B₀`: arity `n + 1` to `n`.
    pub fn big_b(&self) -> Self {
        if self.arity <= 1 {
            return Self::zero(0);
        }
        let mut out = self.b0().cyclic_sum();
        out.name = format!("B({})", self.name);
        out
    }

    pub fn lin_comb(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: other.arity,
            });
        }
        let (x, y) = (self.clone(), other.clone());
        Ok(Self::new(
            format!("{alpha}·{} + {beta}·{}", self.name, other.name),
            self.arity,
            move |a: &[A]| Ok(alpha * x.eval(a)? + beta * y.eval(a)?),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(ONE, other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(ONE, other, -ONE)
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Symbols `ρ(π(x))` of algebra elements, cached per word.
#[derive(Debug)]
pub struct SymbolCache {
    q: QParam,
    letters: BTreeMap<Letter, CosphereElement>,
    words: Mutex<HashMap<Vec<Letter>, CosphereElement>>,
}

impl SymbolCache {
    pub fn new(q: &QParam) -> Self {
        let a = rho(q, BGenerator::APlus).add(&rho(q, BGenerator::AMinus));
        let b = rho(q, BGenerator::BPlus).add(&rho(q, BGenerator::BMinus));
        let letters = BTreeMap::from([
            (Letter::A, a.clone()),
            (Letter::AStar, a.star()),
            (Letter::B, b.clone()),
            (Letter::BStar, b.star()),
        ]);
        Self {
            q: *q,
            letters,
            words: Mutex::new(HashMap::new()),
        }
    }

    pub fn q(&self) -> &QParam {
        &self.q
    }

    pub fn word(&self, w: &[Letter]) -> CosphereElement {
        if let Some(e) = self.words.lock().expect("symbol cache").get(w) {
            return e.clone();
        }
        let e = match w {
            [] => CosphereElement::one(&self.q),
            [l] => self.letters[l].clone(),
            _ => {
                let (x, y) = w.split_at(w.len() / 2);
                self.word(x).mul(&self.word(y))
            }
        };
        self.words
            .lock()
            .expect("symbol cache")
            .insert(w.to_vec(), e.clone());
        e
    }

    pub fn symbol(&self, x: &AlgElement) -> CosphereElement {
        x.terms
            .iter()
            .fold(CosphereElement::zero(&self.q), |acc, (w, c)| acc.add(&self.word(w).scale(*c)))
    }
}

/// Cochains defined by noncommutative integrals of symbols.
#[derive(Debug)]
pub struct LocalCocycles {
    symbols: SymbolCache,
}

impl LocalCocycles {
    pub fn new(q: &QParam) -> Self {
        Self {
            symbols: SymbolCache::new(q),
        }
    }

    pub fn symbols(&self) -> &SymbolCache {
        &self.symbols
    }

    fn a0_delta(&self, a0: &AlgElement, a1: &AlgElement, s: u32) -> CosphereElement {
        self.symbols
            .symbol(a0)
            .mul(&self.symbols.symbol(a1).delta_k(s))
    }

    /// `φ₁` with `δ`-powers and `F`.
    pub fn phi1(&self, a0: &AlgElement, a1: &AlgElement) -> Result<C64> {
        let mut acc = ZERO;
        for (s, c) in [(1, 1.0), (2, -0.5), (3, 0.25)] {
            acc += c * nc_integral_b(&self.a0_delta(a0, a1, s), s, Projection::Sign)?;
        }
        Ok(acc)
    }

    /// `ψ₁` with `δ`-powers and `P↑`.
    pub fn psi1(&self, a0: &AlgElement, a1: &AlgElement) -> Result<C64> {
        let mut acc = ZERO;
        for (s, c) in [(1, 2.0), (2, -1.0), (3, 2.0 / 3.0)] {
            acc += c * nc_integral_b(&self.a0_delta(a0, a1, s), s, Projection::Up)?;
        }
        Ok(acc)
    }

    pub fn phi3(&self, a: &[AlgElement; 4]) -> Result<C64> {
        let x = a[1..].iter().fold(self.symbols.symbol(&a[0]), |acc, ai| {
            acc.mul(&self.symbols.symbol(ai).delta_k(1))
        });
        Ok(nc_integral_b(&x, 3, Projection::Sign)? / 12.0)
    }

    pub fn phi2(&self, a: &[AlgElement; 3]) -> Result<C64> {
        let x = self
            .symbols
            .symbol(&a[0])
            .mul(&self.symbols.symbol(&a[1]).delta_k(1))
            .mul(&self.symbols.symbol(&a[2]).delta_k(2));
        Ok(nc_integral_b(&x, 3, Projection::Sign)? / 24.0)
    }

    /// `φ'₂`, evaluated with the opposite association of the product and the
    /// level-shift form of the residue formula.
    pub fn phi2_prime(&self, a: &[AlgElement; 3]) -> Result<C64> {
        let tail = self
            .symbols
            .symbol(&a[1])
            .delta_k(1)
            .mul(&self.symbols.symbol(&a[2]).delta_k(2));
        let x = self.symbols.symbol(&a[0]).mul(&tail);
        Ok(-nc_integral_by_shift(&PsiSymbol::from_b(x), 3, Projection::Sign)? / 24.0)
    }
}

/// A trace sum with the size of its last included level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSum {
    pub value: C64,
    pub tail: f64,
}

/// Trace-based cochains on the truncated spinor representation.
#[derive(Debug)]
pub struct TraceCocycles {
    rep: SpinorRep,
    symbols: SymbolCache,
    letters: BTreeMap<Letter, BlockOperator>,
    ops: Mutex<HashMap<Vec<Letter>, Arc<BlockOperator>>>,
    diags: Mutex<HashMap<Vec<Letter>, Arc<Vec<C64>>>>,
    derived: Mutex<HashMap<(ElementKey, Derived), Arc<BlockOperator>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Derived {
    Plain,
    FCommutator,
    /// `∇ˢ([D, ·])`
    Nabla(u32),
}

impl TraceCocycles {
    pub fn new(rep: SpinorRep) -> Self {
        let a = rep.pi(Generator::A).clone();
        let b = rep.pi(Generator::B).clone();
        let letters = BTreeMap::from([
            (Letter::AStar, a.adjoint()),
            (Letter::A, a),
            (Letter::BStar, b.adjoint()),
            (Letter::B, b),
        ]);
        Self {
            symbols: SymbolCache::new(&rep.q),
            rep,
            letters,
            ops: Mutex::new(HashMap::new()),
            diags: Mutex::new(HashMap::new()),
            derived: Mutex::new(HashMap::new()),
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        self.rep.space()
    }

    pub fn rep(&self) -> &SpinorRep {
        &self.rep
    }

    fn word_operator(&self, w: &[Letter]) -> Arc<BlockOperator> {
        if let Some(op) = self.ops.lock().expect("operator cache").get(w) {
            return op.clone();
        }
        let op = Arc::new(match w {
            [] => BlockOperator::identity(self.space()),
            [l] => self.letters[l].clone(),
            _ => {
                let (x, y) = w.split_at(w.len() / 2);
                self.word_operator(x)
                    .compose(&self.word_operator(y))
                    .expect("same space")
            }
        });
        self.ops
            .lock()
            .expect("operator cache")
            .insert(w.to_vec(), op.clone());
        op
    }

    /// `π(x)` on the truncated space.
    pub fn operator(&self, x: &AlgElement) -> Arc<BlockOperator> {
        self.derived_operator(x, Derived::Plain)
    }

    fn derived_operator(&self, x: &AlgElement, kind: Derived) -> Arc<BlockOperator> {
        let key = (x.key(), kind);
        if let Some(op) = self.derived.lock().expect("operator cache").get(&key) {
            return op.clone();
        }
        let op = match kind {
            Derived::Plain => match x.terms.iter().next() {
                Some((w, c)) if x.terms.len() == 1 && *c == ONE => self.word_operator(w),
                _ => Arc::new(x.terms.iter().fold(BlockOperator::zero(self.space()), |acc, (w, c)| {
                    acc.lin_comb(ONE, &self.word_operator(w), *c).expect("same space")
                })),
            },
            Derived::FCommutator => Arc::new(f_commutator(&self.operator(x))),
            Derived::Nabla(s) => Arc::new(nabla_k(&d_commutator(&self.operator(x)), s)),
        };
        self.derived
            .lock()
            .expect("operator cache")
            .insert(key, op.clone());
        op
    }

    fn word_diagonal(&self, w: &[Letter]) -> Arc<Vec<C64>> {
        if let Some(d) = self.diags.lock().expect("diagonal cache").get(w) {
            return d.clone();
        }
        let d = Arc::new(match w {
            [] => vec![ONE; self.space().dim()],
            [_] => self.word_operator(w).diagonal_vector(),
            _ => {
                let (x, y) = w.split_at(w.len() / 2);
                self.word_operator(x)
                    .product_diagonal(&self.word_operator(y))
                    .expect("same space")
            }
        });
        self.diags
            .lock()
            .expect("diagonal cache")
            .insert(w.to_vec(), d.clone());
        d
    }

    /// Diagonal of `π(x)`.
    pub fn diagonal(&self, x: &AlgElement) -> Vec<C64> {
        let mut out = vec![ZERO; self.space().dim()];
        for (w, c) in &x.terms {
            for (o, d) in out.iter_mut().zip(self.word_diagonal(w).iter()) {
                *o += c * d;
            }
        }
        out
    }

    fn exact_levels(&self, diag: &[C64]) -> TraceSum {
        let (up, dn) = BlockOperator::level_sector_sums(self.space(), diag);
        let top = self.space().truncation().interior_max() as usize;
        let per_level: Vec<C64> = (0..=top).map(|n| up[n] + dn[n]).collect();
        TraceSum {
            value: per_level.iter().sum(),
            tail: per_level.last().map(|c| c.norm()).unwrap_or(0.0),
        }
    }

    /// `Tr(π(a₀)[F, π(a₁)])` over the levels below the guard band.
    pub fn chi1(&self, a0: &AlgElement, a1: &AlgElement) -> TraceSum {
        let comm = self.derived_operator(a1, Derived::FCommutator);
        let diag = self
            .operator(a0)
            .product_diagonal(&comm)
            .expect("same space");
        self.exact_levels(&diag)
    }

    /// `Tr(P_s π(x)|D|⁻ᶻ)` at `z = 0`.
    pub fn regularized(&self, x: &AlgElement, sector: Spin) -> Result<RegularizedTrace> {
        let poly = level_polynomial(&self.symbols.symbol(x), sector);
        regularized_trace_at_zero(self.space(), &self.diagonal(x), &poly, sector)
    }

    /// `φ₀(x) = Tr(F π(x)|D|⁻ᶻ)` at `z = 0`.
    pub fn phi0(&self, x: &AlgElement) -> Result<C64> {
        Ok(self.regularized(x, Spin::Up)?.value - self.regularized(x, Spin::Down)?.value)
    }

    /// `φ'₀(x) = Tr(π(x)|D|⁻ᶻ)` at `z = 0`.
    pub fn phi0_prime(&self, x: &AlgElement) -> Result<C64> {
        Ok(self.regularized(x, Spin::Up)?.value + self.regularized(x, Spin::Down)?.value)
    }

    /// `β(x) = 2 Tr(P↑ π(x)|D|⁻ᶻ)` at `z = 0`.
    pub fn beta(&self, x: &AlgElement) -> Result<C64> {
        Ok(2.0 * self.regularized(x, Spin::Up)?.value)
    }

    /// `φ₁` in the form with `[D, a₁]` and powers of `∇ = [D², ·]`, each
    /// residue read off a polynomial fit of the per-level traces.
    pub fn phi1_nabla(&self, a0: &AlgElement, a1: &AlgElement) -> Result<C64> {
        let left = self.operator(a0);
        let mut acc = ZERO;
        for (s, c) in [(0u32, 1.0), (1, -0.25), (2, 0.125)] {
            let y = self.derived_operator(a1, Derived::Nabla(s));
            let diag = left.product_diagonal(&y)?;
            let fit = fit_levels(self.space(), &diag, FitSector::Both, s as usize + 2)?;
            acc += c * fit.coefficients[2 * s as usize];
        }
        Ok(acc)
    }
}

/// 2×2 matrix over the algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgMatrix(pub [[AlgElement; 2]; 2]);

impl AlgMatrix {
    /// `U = (a, b; −q b*, a*)`.
    pub fn fundamental_unitary(q: &QParam) -> Self {
        let l = AlgElement::letter;
        Self([
            [l(Letter::A), l(Letter::B)],
            [l(Letter::BStar).scale(C64::new(-q.q(), 0.0)), l(Letter::AStar)],
        ])
    }

    pub fn identity() -> Self {
        Self([
            [AlgElement::one(), AlgElement::zero()],
            [AlgElement::zero(), AlgElement::one()],
        ])
    }

    /// `(U*)_{kl} = (U_{lk})*`.
    pub fn adjoint(&self) -> Self {
        let u = &self.0;
        Self([
            [u[0][0].star(), u[1][0].star()],
            [u[0][1].star(), u[1][1].star()],
        ])
    }

    pub fn mul(&self, other: &Self) -> Self {
        let entry = |i: usize, j: usize| {
            self.0[i][0]
                .mul(&other.0[0][j])
                .add(&self.0[i][1].mul(&other.0[1][j]))
        };
        Self([[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]])
    }

    pub fn entry(&self, k: usize, l: usize) -> &AlgElement {
        &self.0[k][l]
    }
}

/// The index of `P↑ U P↑` from three independent routes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    /// `Σ_{kl} ψ₁((U*)_{kl}, U_{lk})`
    pub psi1_pairing: C64,
    /// `Σ_{kl} Tr(π((U*)_{kl})[F, π(U_{lk})])`
    pub chern_pairing: C64,
    /// `Tr(P̃ − Ũ*P̃Ũ)` over the exact levels.
    pub trace_formula_index: f64,
    /// `Tr(P̃ − ŨP̃Ũ*)`, the index of the adjoint class.
    pub adjoint_trace_index: f64,
    /// Partial sums of the trace formula, one per level.
    pub trace_partial_sums: Vec<(u32, f64)>,
    /// Largest deviation from the identity of `UU*` and `U*U` on the exact
    /// levels.
    pub unitarity_defect: f64,
    pub final_index: i64,
}

/// `Tr(P̃ − W̃*P̃W̃)` per level, for `W` a 2×2 matrix over the algebra.
fn trace_formula_levels(tc: &TraceCocycles, w: &AlgMatrix) -> Vec<(u32, f64)> {
    let space = tc.space();
    let dirac = build_dirac_on(space);
    let top = space.truncation().interior_max();
    let mut diag = vec![ZERO; space.dim()];
    for i in 0..2 {
        for l in 0..2 {
            let op = tc.operator(w.entry(l, i));
            let right = dirac.p_up.compose(&op).expect("same space");
            let d = op.adjoint().product_diagonal(&right).expect("same space");
            diag.iter_mut().zip(d).for_each(|(x, y)| *x += y);
        }
    }
    let (up, dn) = BlockOperator::level_sector_sums(space, &diag);
    let mut acc = 0.0;
    (0..=top)
        .map(|n| {
            let level = n as usize;
            let p_trace = 2.0 * crate::hilbert::Truncation::up_dimension(n) as f64;
            acc += p_trace - (up[level] + dn[level]).re;
            (n, acc)
        })
        .collect()
}

fn unitarity_defect(tc: &TraceCocycles, u: &AlgMatrix) -> f64 {
    let top = tc.space().truncation().interior_max();
    let mut worst: f64 = 0.0;
    for prod in [u.mul(&u.adjoint()), u.adjoint().mul(u)] {
        for k in 0..2 {
            for l in 0..2 {
                let op = tc.operator(prod.entry(k, l));
                let defect = if k == l {
                    op.sub(&BlockOperator::identity(tc.space())).expect("same space").max_abs_within(top)
                } else {
                    op.max_abs_within(top)
                };
                worst = worst.max(defect);
            }
        }
    }
    worst
}

/// Pairs `[U]` with the cocycles `ψ₁` and `χ₁` and evaluates the trace
/// formula, all with the convention `ind = −½·pairing`.
pub fn index_pairing(local: &LocalCocycles, traces: &TraceCocycles, u: &AlgMatrix) -> Result<IndexResult> {
    let tol = local.symbols().q().tol();
    let unitarity_defect = unitarity_defect(traces, u);
    if unitarity_defect > tol.relation_tol {
        return Err(Error::Precondition(format!(
            "U is not unitary on the exact levels (defect {unitarity_defect:e})"
        )));
    }
    let us = u.adjoint();
    let mut psi1_pairing = ZERO;
    let mut chern_pairing = ZERO;
    for k in 0..2 {
        for l in 0..2 {
            psi1_pairing += local.psi1(us.entry(k, l), u.entry(l, k))?;
            chern_pairing += traces.chi1(us.entry(k, l), u.entry(l, k)).value;
        }
    }
    let trace_partial_sums = trace_formula_levels(traces, u);
    let trace_formula_index = trace_partial_sums.last().map(|p| p.1).unwrap_or(0.0);
    let adjoint_trace_index = trace_formula_levels(traces, &us)
        .last()
        .map(|p| p.1)
        .unwrap_or(0.0);

    let from_psi = -0.5 * psi1_pairing.re;
    let final_index = from_psi.round() as i64;
    let routes = [
        ("psi1 pairing", from_psi),
        ("chern pairing", -0.5 * chern_pairing.re),
        ("trace formula", trace_formula_index),
    ];
    if (from_psi - final_index as f64).abs() >= 0.01 || psi1_pairing.im.abs() > tol.residue_tol {
        return Err(Error::RouteDisagreement(format!(
            "psi1 pairing {psi1_pairing} is not −2 times an integer"
        )));
    }
    for (name, v) in routes {
        if (v - final_index as f64).abs() > tol.residue_tol {
            return Err(Error::RouteDisagreement(format!(
                "{name} gives {v}, expected {final_index}"
            )));
        }
    }
    Ok(IndexResult {
        psi1_pairing,
        chern_pairing,
        trace_formula_index,
        adjoint_trace_index,
        trace_partial_sums,
        unitarity_defect,
        final_index,
    })
}

/// Monomials in `a, a*, b, b*` of degree at most two.
pub fn monomial_pool() -> Vec<AlgElement> {
    let mut pool = vec![AlgElement::one()];
    pool.extend(Letter::ALL.iter().map(|&l| AlgElement::letter(l)));
    for &x in &Letter::ALL {
        for &y in &Letter::ALL {
            pool.push(AlgElement::word(&[x, y]));
        }
    }
    pool
}

/// Maximum violation of one cochain identity over a set of tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub tuples: usize,
    pub max_violation: f64,
    pub worst_tuple: Option<String>,
}

/// Evaluates `lhs` on every tuple and records the largest modulus.
pub fn check_vanishing<A: UnitalAlgebra + fmt::Display>(
    identity: &str,
    lhs: &Cochain<A>,
    tuples: &[Vec<A>],
) -> Result<IdentityCheck> {
    let values: Vec<(f64, usize)> = tuples
        .par_iter()
        .enumerate()
        .map(|(i, t)| lhs.eval(t).map(|v| (v.norm(), i)))
        .collect::<Result<_>>()?;
    let worst = values
        .iter()
        .copied()
        .fold(None::<(f64, usize)>, |acc, x| match acc {
            Some(a) if a.0 >= x.0 => Some(a),
            _ => Some(x),
        });
    Ok(IdentityCheck {
        identity: identity.to_string(),
        tuples: tuples.len(),
        max_violation: worst.map(|w| w.0).unwrap_or(0.0),
        worst_tuple: worst.map(|w| {
            let parts: Vec<String> = tuples[w.1].iter().map(|x| x.to_string()).collect();
            format!("({})", parts.join(", "))
        }),
    })
}

/// The cochains of the odd local index theorem as [`Cochain`] values.
#[derive(Clone, Debug)]
pub struct CochainFamily {
    pub phi1: Cochain<AlgElement>,
    pub phi1_nabla: Cochain<AlgElement>,
    pub phi3: Cochain<AlgElement>,
    pub phi2: Cochain<AlgElement>,
    pub phi2_prime: Cochain<AlgElement>,
    pub psi1: Cochain<AlgElement>,
    pub chi1: Cochain<AlgElement>,
    pub phi0: Cochain<AlgElement>,
    pub phi0_prime: Cochain<AlgElement>,
    pub beta: Cochain<AlgElement>,
}

impl CochainFamily {
    pub fn new(local: Arc<LocalCocycles>, traces: Arc<TraceCocycles>) -> Self {
        let l = local.clone();
        let phi1 = Cochain::new("phi1", 2, move |a: &[AlgElement]| l.phi1(&a[0], &a[1]));
        let l = local.clone();
        let psi1 = Cochain::new("psi1", 2, move |a: &[AlgElement]| l.psi1(&a[0], &a[1]));
        let l = local.clone();
        let phi3 = Cochain::new("phi3", 4, move |a: &[AlgElement]| {
            l.phi3(&[a[0].clone(), a[1].clone(), a[2].clone(), a[3].clone()])
        });
        let l = local.clone();
        let phi2 = Cochain::new("phi2", 3, move |a: &[AlgElement]| {
            l.phi2(&[a[0].clone(), a[1].clone(), a[2].clone()])
        });
        let l = local;
        let phi2_prime = Cochain::new("phi2'", 3, move |a: &[AlgElement]| {
            l.phi2_prime(&[a[0].clone(), a[1].clone(), a[2].clone()])
        });
        let t = traces.clone();
        let phi1_nabla = Cochain::new("phi1[nabla]", 2, move |a: &[AlgElement]| t.phi1_nabla(&a[0], &a[1]));
        let t = traces.clone();
        let chi1 = Cochain::new("chi1", 2, move |a: &[AlgElement]| Ok(t.chi1(&a[0], &a[1]).value));
        let t = traces.clone();
        let phi0 = Cochain::new("phi0", 1, move |a: &[AlgElement]| t.phi0(&a[0]));
        let t = traces.clone();
        let phi0_prime = Cochain::new("phi0'", 1, move |a: &[AlgElement]| t.phi0_prime(&a[0]));
        let t = traces;
        let beta = Cochain::new("beta", 1, move |a: &[AlgElement]| t.beta(&a[0]));
        Self {
            phi1,
            phi1_nabla,
            phi3,
            phi2,
            phi2_prime,
            psi1,
            chi1,
            phi0,
            phi0_prime,
            beta,
        }
    }
}
