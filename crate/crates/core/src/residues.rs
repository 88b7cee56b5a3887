//! τ-functionals on the disk algebras, noncommutative integrals `∮T|D|⁻ᵏ`
//! from the symbol, and a numeric residue oracle built from per-level traces.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BlockOperator, Space, Spin};
use crate::qcore::hurwitz_zeta_residue_and_values;
use crate::symbol::{grade_zero_symbol, r_project, CosphereElement, DiskElement, DiskSign, PsiSymbol, TensorDisk};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TauFunctional {
    /// `τ₁`
    One,
    /// `τ₀↑`
    ZeroUp,
    /// `τ₀↓`
    ZeroDown,
}

/// Value of a τ-functional on the monomial `aˡbᵐ` of the disk with the given
/// sign. For `m ≥ 1` both τ₀ give `Σ_k (±q^k)^m = (±1)^m / (1 − q^m)`.
pub fn tau_monomial(f: TauFunctional, sign: DiskSign, l: i32, m: u32, q: f64) -> f64 {
    if l != 0 {
        return 0.0;
    }
    match (f, m) {
        (TauFunctional::One, 0) => 1.0,
        (TauFunctional::One, _) => 0.0,
        (TauFunctional::ZeroUp, 0) => -0.5,
        (TauFunctional::ZeroDown, 0) => 0.5,
        (_, m) => sign.sign().powi(m as i32) / (1.0 - q.powi(m as i32)),
    }
}

pub fn tau_eval(f: TauFunctional, x: &DiskElement) -> C64 {
    x.terms()
        .iter()
        .map(|(&(l, m), c)| c * tau_monomial(f, x.sign, l, m, x.q()))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub n: u32,
    pub value: C64,
    pub error: f64,
}

/// Convergence table of the truncated-trace definition of a τ-functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauConvergence {
    pub functional: TauFunctional,
    pub closed_form: C64,
    pub rows: Vec<TauRow>,
}

impl TauConvergence {
    /// `max_N |error(N)| · Nᵖ` over the rows with `N ≥ from`.
    pub fn weighted_error(&self, power: i32, from: u32) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.n >= from)
            .map(|r| r.error * (r.n as f64).powi(power))
            .fold(0.0, f64::max)
    }
}

/// `Tr_N π±(x) − (N+3/2)τ₁(x)` (resp. `N+½` for `τ₀↓`) for every `N` in the
/// list; for `τ₁` the row is the last diagonal entry `Tr_N − Tr_{N−1}`.
pub fn tau_truncated_trace_oracle(f: TauFunctional, x: &DiskElement, n_list: &[u32]) -> TauConvergence {
    let closed_form = tau_eval(f, x);
    let tau1 = tau_eval(TauFunctional::One, x);
    let partial = |n: u32| -> C64 {
        (0..=n)
            .map(|k| x.apply(k).get(&k).copied().unwrap_or(ZERO))
            .sum()
    };
    let rows = n_list
        .iter()
        .map(|&n| {
            let value = match f {
                TauFunctional::One => x.apply(n).get(&n).copied().unwrap_or(ZERO),
                TauFunctional::ZeroUp => partial(n) - tau1 * (n as f64 + 1.5),
                TauFunctional::ZeroDown => partial(n) - tau1 * (n as f64 + 0.5),
            };
            TauRow {
                n,
                value,
                error: (value - closed_form).norm(),
            }
        })
        .collect();
    TauConvergence {
        functional: f,
        closed_form,
        rows,
    }
}

/// `(f ⊗ g)` on an element of the tensor product of the two disks.
pub fn tensor_eval(f: TauFunctional, g: TauFunctional, t: &TensorDisk) -> C64 {
    t.terms
        .iter()
        .map(|(&(l1, m1, l2, m2), c)| {
            c * tau_monomial(f, DiskSign::Plus, l1, m1, t.q) * tau_monomial(g, DiskSign::Minus, l2, m2, t.q)
        })
        .sum()
}

/// Grade-zero, r-projected part of a cosphere element.
fn zero_part(e: &CosphereElement) -> TensorDisk {
    r_project(&grade_zero_symbol(e)).expect("grade-zero part has no winding")
}

/// Coefficients `(c₀, c₁, c₂)` of the per-level trace polynomial in
/// `λ = |D|` of one spin sector.
pub fn level_polynomial(e: &CosphereElement, sector: Spin) -> [C64; 3] {
    use TauFunctional::*;
    let t = zero_part(e);
    let (lo, hi) = match sector {
        Spin::Up => (ZeroUp, ZeroDown),
        Spin::Down => (ZeroDown, ZeroUp),
    };
    [
        tensor_eval(lo, hi, &t),
        tensor_eval(One, hi, &t) + tensor_eval(lo, One, &t),
        tensor_eval(One, One, &t),
    ]
}

/// A linear combination `one·τ₁ + zero_up·τ₀↑`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct TauCombination {
    one: f64,
    zero_up: f64,
}

impl TauCombination {
    fn eval_pair(self, other: Self, t: &TensorDisk) -> C64 {
        use TauFunctional::*;
        let parts = [(One, self.one), (ZeroUp, self.zero_up)];
        let other_parts = [(One, other.one), (ZeroUp, other.zero_up)];
        let mut acc = ZERO;
        for (f, a) in parts {
            for (g, b) in other_parts {
                if a != 0.0 && b != 0.0 {
                    acc += tensor_eval(f, g, t) * (a * b);
                }
            }
        }
        acc
    }
}

/// Same coefficients as [`level_polynomial`], derived from the asymptotics
/// `Tr_N(x) ≈ (N+3/2)τ₁(x) + τ₀↑(x)` by shifting the level index of each
/// factor: a sector whose `x`-range has top index `n + dx`, whose `y`-range
/// has top index `n + dy` and whose `|D|` is `n + e`.
pub fn level_polynomial_by_shift(e: &CosphereElement, sector: Spin) -> [C64; 3] {
    let (dx, dy, offset) = match sector {
        Spin::Up => (0.0, 1.0, 1.5),
        Spin::Down => (0.0, -1.0, 0.5),
    };
    let t = zero_part(e);
    let one = TauCombination { one: 1.0, zero_up: 0.0 };
    let shifted = |d: f64| TauCombination {
        one: d + 1.5 - offset,
        zero_up: 1.0,
    };
    let (a, b) = (shifted(dx), shifted(dy));
    [
        a.eval_pair(b, &t),
        one.eval_pair(b, &t) + a.eval_pair(one, &t),
        one.eval_pair(one, &t),
    ]
}

/// Spectral projection inserted in front of `|D|⁻ᵏ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    None,
    Up,
    Down,
    /// `F = P↑ − P↓`
    Sign,
}

fn residue_index(k: u32) -> Result<usize> {
    match k {
        1..=3 => Ok(k as usize - 1),
        _ => Err(Error::Precondition(format!("residues exist only at k = 1, 2, 3, got {k}"))),
    }
}

/// `∮ P T |D|⁻ᵏ` with the sector-wise symbol of `T`.
pub fn nc_integral(symbol: &PsiSymbol, k: u32, projection: Projection) -> Result<C64> {
    let i = residue_index(k)?;
    let up = || level_polynomial(&symbol.up, Spin::Up)[i];
    let dn = || level_polynomial(&symbol.dn, Spin::Down)[i];
    Ok(match projection {
        Projection::None => up() + dn(),
        Projection::Up => up(),
        Projection::Down => dn(),
        Projection::Sign => up() - dn(),
    })
}

/// [`nc_integral`] computed through [`level_polynomial_by_shift`].
pub fn nc_integral_by_shift(symbol: &PsiSymbol, k: u32, projection: Projection) -> Result<C64> {
    let i = residue_index(k)?;
    let up = || level_polynomial_by_shift(&symbol.up, Spin::Up)[i];
    let dn = || level_polynomial_by_shift(&symbol.dn, Spin::Down)[i];
    Ok(match projection {
        Projection::None => up() + dn(),
        Projection::Up => up(),
        Projection::Down => dn(),
        Projection::Sign => up() - dn(),
    })
}

/// `∮ P T |D|⁻ᵏ` for `T ∈ B` (same symbol on both sectors).
pub fn nc_integral_b(e: &CosphereElement, k: u32, projection: Projection) -> Result<C64> {
    nc_integral(&PsiSymbol::from_b(e.clone()), k, projection)
}

/// Which per-level traces enter the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSector {
    Up,
    Down,
    /// Up level `n` and down level `n+1` share `λ = n + 3/2`.
    Both,
}

/// Per-level traces `(n, λ, t)` of a diagonal vector, for levels up to
/// `top`.
pub fn level_series(space: &Space, diag: &[C64], sector: FitSector, top: u32) -> Vec<(u32, f64, C64)> {
    let (up, dn) = BlockOperator::level_sector_sums(space, diag);
    let top = top.min(space.truncation().max_two_j) as usize;
    match sector {
        FitSector::Up => (0..=top).map(|n| (n as u32, n as f64 + 1.5, up[n])).collect(),
        FitSector::Down => (1..=top).map(|n| (n as u32, n as f64 + 0.5, dn[n])).collect(),
        FitSector::Both => (0..top)
            .map(|n| (n as u32, n as f64 + 1.5, up[n] + dn[n + 1]))
            .collect(),
    }
}

/// Least-squares polynomial `Σ cᵢ λⁱ` through the points; returns the
/// coefficients and the largest absolute residual.
pub fn fit_polynomial(points: &[(f64, C64)], degree: usize) -> Result<(Vec<C64>, f64)> {
    if points.len() <= degree {
        return Err(Error::Precondition(format!(
            "{} points cannot determine a degree-{degree} polynomial",
            points.len()
        )));
    }
    let scale = points.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let a = DMatrix::from_fn(points.len(), degree + 1, |r, c| (points[r].0 / scale).powi(c as i32));
    let svd = a.clone().svd(true, true);
    let solve = |rhs: DVector<f64>| -> Result<DVector<f64>> {
        svd.solve(&rhs, 1e-14)
            .map_err(|e| Error::Precondition(format!("least squares: {e}")))
    };
    let re = solve(DVector::from_iterator(points.len(), points.iter().map(|p| p.1.re)))?;
    let im = solve(DVector::from_iterator(points.len(), points.iter().map(|p| p.1.im)))?;
    let coeffs: Vec<C64> = (0..=degree)
        .map(|i| C64::new(re[i], im[i]) / scale.powi(i as i32))
        .collect();
    let residual = points
        .iter()
        .map(|&(x, y)| (y - eval_polynomial(&coeffs, x)).norm())
        .fold(0.0, f64::max);
    Ok((coeffs, residual))
}

pub fn eval_polynomial(coeffs: &[C64], x: f64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c)
}

/// Fit of per-level traces by a polynomial in `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueFit {
    pub sector: FitSector,
    /// First and last level of the fit window.
    pub window: (u32, u32),
    /// `c₀, c₁, …` in powers of `λ`.
    pub coefficients: Vec<C64>,
    /// Largest residual inside the window.
    pub window_residual: f64,
    /// `|t_n − poly(λ_n)|` for every exact level.
    pub residuals: Vec<(u32, f64)>,
}

impl ResidueFit {
    /// Residue at `z = k` of `Σ t_n λ_n^{−z}`: the coefficient of `λ^{k−1}`.
    pub fn residue(&self, k: u32) -> C64 {
        self.coefficients
            .get(k as usize - 1)
            .copied()
            .unwrap_or(ZERO)
    }

    /// Maxima of the residuals over consecutive blocks of `block` levels,
    /// starting at level `from`.
    pub fn residual_blocks(&self, from: u32, block: usize) -> Vec<f64> {
        let tail: Vec<f64> = self
            .residuals
            .iter()
            .filter(|(n, _)| *n >= from)
            .map(|r| r.1)
            .collect();
        tail.chunks(block)
            .filter(|c| c.len() == block)
            .map(|c| c.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// The residuals fall geometrically until they reach `floor`: block
    /// maxima strictly decrease while above it.
    pub fn decays_geometrically(&self, from: u32, block: usize, floor: f64) -> bool {
        let blocks = self.residual_blocks(from, block);
        blocks.len() >= 2
            && blocks
                .windows(2)
                .all(|w| w[1] <= floor || w[1] < w[0])
    }
}

/// Number of levels in the default fit window.
pub const FIT_WINDOW_LEVELS: u32 = 9;

/// Fits a degree-`degree` polynomial to the top exact levels of a diagonal.
pub fn fit_levels(space: &Space, diag: &[C64], sector: FitSector, degree: usize) -> Result<ResidueFit> {
    let top = space.truncation().interior_max();
    let series = level_series(space, diag, sector, top);
    let last = series.last().map(|p| p.0).ok_or_else(|| {
        Error::InvalidTruncation("no exact levels below the guard band".into())
    })?;
    let first = last.saturating_sub(FIT_WINDOW_LEVELS - 1);
    let window: Vec<(f64, C64)> = series
        .iter()
        .filter(|p| p.0 >= first)
        .map(|p| (p.1, p.2))
        .collect();
    let (coefficients, window_residual) = fit_polynomial(&window, degree)?;
    let residuals = series
        .iter()
        .map(|&(n, x, y)| (n, (y - eval_polynomial(&coefficients, x)).norm()))
        .collect();
    Ok(ResidueFit {
        sector,
        window: (first, last),
        coefficients,
        window_residual,
        residuals,
    })
}

/// Quadratic fit of the per-level traces of `T`.
pub fn residue_fit_oracle(t: &BlockOperator, sector: FitSector) -> Result<ResidueFit> {
    fit_levels(t.space(), &t.diagonal_vector(), sector, 2)
}

/// Analytic against numeric residues of one operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueReport {
    pub term: String,
    pub analytic: BTreeMap<u32, C64>,
    pub numeric: BTreeMap<u32, C64>,
    pub discrepancy: BTreeMap<u32, f64>,
    pub fit: ResidueFit,
}

impl ResidueReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancy.values().copied().fold(0.0, f64::max)
    }
}

/// Compares `∮T|D|⁻ᵏ`, `k = 1, 2, 3`, from the symbol with the quadratic fit
/// of the traces of `T` over both sectors.
pub fn residue_report(term: &str, space: &Space, diag: &[C64], symbol: &PsiSymbol) -> Result<ResidueReport> {
    let fit = fit_levels(space, diag, FitSector::Both, 2)?;
    let mut analytic = BTreeMap::new();
    let mut numeric = BTreeMap::new();
    let mut discrepancy = BTreeMap::new();
    for k in 1..=3 {
        let a = nc_integral(symbol, k, Projection::None)?;
        let n = fit.residue(k);
        analytic.insert(k, a);
        numeric.insert(k, n);
        discrepancy.insert(k, (a - n).norm());
    }
    Ok(ResidueReport {
        term: term.to_string(),
        analytic,
        numeric,
        discrepancy,
        fit,
    })
}

/// Value at `z = 0` of `Tr(P_s T |D|⁻ᶻ)` for one spin sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedTrace {
    pub value: C64,
    /// Zeta part `Σ cₖ ζ(−k, offset)`.
    pub polynomial_part: C64,
    /// Summed `t_n − poly(λ_n)` over the exact levels.
    pub remainder_part: C64,
    /// Largest remainder term among the last three exact levels.
    pub tail: f64,
}

/// Analytic continuation to `z = 0` of `Σ_n t_n λ_n^{−z}` where the per-level
/// traces `t_n` of one sector equal `poly(λ_n)` up to rapid decay.
///
/// Up levels have `λ = n + 3/2`, `n ≥ 0`. Down levels have `λ = n + 1/2`
/// and the sum starts at the empty level `n = 0`, so both sectors use a
/// Hurwitz zeta with the offset of their own `n = 0` eigenvalue.
pub fn regularized_trace_at_zero(
    space: &Space,
    diag: &[C64],
    poly: &[C64; 3],
    sector: Spin,
) -> Result<RegularizedTrace> {
    let (up, dn) = BlockOperator::level_sector_sums(space, diag);
    let (levels, offset) = match sector {
        Spin::Up => (up, 1.5),
        Spin::Down => (dn, 0.5),
    };
    let zeta = hurwitz_zeta_residue_and_values(offset)?;
    let top = space.truncation().interior_max() as usize;
    let polynomial_part: C64 = poly
        .iter()
        .enumerate()
        .map(|(k, c)| c * zeta.value(-(k as i32)).expect("tabulated"))
        .sum();
    let terms: Vec<C64> = (0..=top)
        .map(|n| levels[n] - eval_polynomial(poly, n as f64 + offset))
        .collect();
    let remainder_part: C64 = terms.iter().sum();
    let tail = terms.iter().rev().take(3).map(|t| t.norm()).fold(0.0, f64::max);
    Ok(RegularizedTrace {
        value: polynomial_part + remainder_part,
        polynomial_part,
        remainder_part,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Truncation;
    use crate::qcore::QParam;
    use crate::spectral::BGenerator;
    use crate::symbol::{rho, DiskLetter};

    const ONE: C64 = C64::new(1.0, 0.0);

    fn q5() -> QParam {
        QParam::new(0.5).unwrap()
    }

    #[test]
    fn tau_values_on_small_elements() {
        let q = q5();
        for sign in [DiskSign::Plus, DiskSign::Minus] {
            let one = DiskElement::one(&q, sign);
            assert_eq!(tau_eval(TauFunctional::One, &one), ONE);
            assert_eq!(tau_eval(TauFunctional::ZeroUp, &one).re, -0.5);
            assert_eq!(tau_eval(TauFunctional::ZeroDown, &one).re, 0.5);
            let a = DiskElement::letter(&q, sign, DiskLetter::A);
            assert_eq!(tau_eval(TauFunctional::ZeroUp, &a), ZERO);
        }
        let b2 = DiskElement::monomial(&q, DiskSign::Minus, 0, 2, ONE);
        assert!((tau_eval(TauFunctional::ZeroUp, &b2).re - 1.0 / 0.75).abs() < 1e-15);
        let b1 = DiskElement::letter(&q, DiskSign::Minus, DiskLetter::B);
        assert_eq!(tau_eval(TauFunctional::ZeroDown, &b1).re, -2.0);
        let t = tau_truncated_trace_oracle(TauFunctional::ZeroDown, &b1, &[80]);
        assert!(t.rows[0].error < 1e-15);
    }

    #[test]
    fn truncated_trace_examples() {
        let q = q5();
        let one = DiskElement::one(&q, DiskSign::Plus);
        let t = tau_truncated_trace_oracle(TauFunctional::ZeroUp, &one, &[0, 3, 10]);
        assert!(t.rows.iter().all(|r| r.value == C64::new(-0.5, 0.0)));
        let b = DiskElement::letter(&q, DiskSign::Plus, DiskLetter::B);
        let t = tau_truncated_trace_oracle(TauFunctional::ZeroUp, &b, &[60]);
        assert!((t.rows[0].value.re - 2.0).abs() < 1e-15);
        let a = DiskElement::letter(&q, DiskSign::Minus, DiskLetter::A);
        let t = tau_truncated_trace_oracle(TauFunctional::ZeroDown, &a, &[1, 5, 9]);
        assert!(t.rows.iter().all(|r| r.value == ZERO));
    }

    #[test]
    fn integrals_of_unit_and_projector() {
        let q = q5();
        let one = PsiSymbol::from_b(CosphereElement::one(&q));
        assert_eq!(nc_integral(&one, 3, Projection::None).unwrap(), C64::new(2.0, 0.0));
        assert_eq!(nc_integral(&one, 2, Projection::None).unwrap(), ZERO);
        let p = PsiSymbol::p_up(&q);
        assert_eq!(nc_integral(&p, 1, Projection::None).unwrap(), C64::new(-0.25, 0.0));
        assert!(nc_integral(&one, 4, Projection::None).is_err());
        let ap = PsiSymbol::from_b(rho(&q, BGenerator::APlus));
        for k in 1..=3 {
            assert_eq!(nc_integral(&ap, k, Projection::None).unwrap(), ZERO);
        }
    }

    #[test]
    fn shift_route_matches_table() {
        let q = QParam::new(0.7).unwrap();
        let a = rho(&q, BGenerator::APlus).add(&rho(&q, BGenerator::AMinus));
        let b = rho(&q, BGenerator::BPlus).add(&rho(&q, BGenerator::BMinus));
        let samples = [
            a.mul(&a.star()),
            b.mul(&b.star()).mul(&b.star().mul(&b)),
            a.star().mul(&b).mul(&b.star()).mul(&a),
            CosphereElement::one(&q),
        ];
        for e in &samples {
            for s in Spin::BOTH {
                let x = level_polynomial(e, s);
                let y = level_polynomial_by_shift(e, s);
                for i in 0..3 {
                    assert!((x[i] - y[i]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn fit_of_identity_is_exact_quadratic() {
        let sp = Space::new(Truncation::new(14, 2).unwrap());
        let id = BlockOperator::identity(&sp);
        let f = residue_fit_oracle(&id, FitSector::Up).unwrap();
        let want = [-0.25, 0.0, 1.0];
        for (c, w) in f.coefficients.iter().zip(want) {
            assert!((c.re - w).abs() < 1e-9, "{:?}", f.coefficients);
        }
        assert_eq!(f.window, (4, 12));
    }

    #[test]
    fn fit_polynomial_recovers_cubic() {
        let pts: Vec<(f64, C64)> = (0..10)
            .map(|i| {
                let x = 30.0 + i as f64;
                (x, C64::new(2.0 - x + 0.5 * x * x - 0.125 * x * x * x, 1.0))
            })
            .collect();
        let (c, r) = fit_polynomial(&pts, 3).unwrap();
        let want = [2.0, -1.0, 0.5, -0.125];
        for (a, b) in c.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-7);
        }
        assert!((c[0].im - 1.0).abs() < 1e-9);
        assert!(r < 1e-8);
        assert!(fit_polynomial(&pts[..3], 3).is_err());
    }
}
