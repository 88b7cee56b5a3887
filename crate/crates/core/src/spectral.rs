//! Spinor representation, Dirac operator and the derivations `δ`, `∇`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hilbert::{BasisVector, BlockOperator, Space, Spin, Truncation};
use crate::qcore::QParam;
use crate::C64;

/// The four corner generators of `π(a) = a₊ + a₋`, `π(b) = b₊ + b₋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Corner {
    APlus,
    AMinus,
    BPlus,
    BMinus,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::APlus, Corner::AMinus, Corner::BPlus, Corner::BMinus];

    /// Change of `2j` produced by the corner.
    pub fn shift(self) -> i32 {
        match self {
            Corner::APlus | Corner::BPlus => 1,
            Corner::AMinus | Corner::BMinus => -1,
        }
    }
}

/// Generators of the algebra `B` spanned by `δᵏ(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BGenerator {
    APlus,
    AMinus,
    BPlus,
    BMinus,
    ASlash,
    BSlash,
}

impl BGenerator {
    pub const ALL: [BGenerator; 6] = [
        BGenerator::APlus,
        BGenerator::AMinus,
        BGenerator::BPlus,
        BGenerator::BMinus,
        BGenerator::ASlash,
        BGenerator::BSlash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BGenerator::APlus => "ã₊",
            BGenerator::AMinus => "ã₋",
            BGenerator::BPlus => "b̃₊",
            BGenerator::BMinus => "b̃₋",
            BGenerator::ASlash => "ã_/",
            BGenerator::BSlash => "b̃_/",
        }
    }

    /// Winding under the geodesic grading (`0` for the corner generators,
    /// which preserve `|D|`).
    pub fn winding(self) -> i32 {
        match self {
            BGenerator::APlus | BGenerator::BPlus => 1,
            BGenerator::AMinus | BGenerator::BMinus => -1,
            BGenerator::ASlash | BGenerator::BSlash => 0,
        }
    }
}

/// Generators `a`, `b` of the quantum group algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Generator {
    A,
    B,
}

type Terms = Vec<(Option<BasisVector>, f64)>;

/// Coefficient formulas of the spinor representation, one function per
/// source sector of each corner generator.
///
/// Every term acting on a down vector carries the prefactor
/// `q^{(x+y-2j)/2}`, and the down-to-up term of `b₋` enters with an overall
/// minus sign; with these conventions all five defining relations hold.
pub mod formula {
    use super::*;

    struct Ctx<'a> {
        q: &'a QParam,
        n: i64,
        x: i64,
        y: i64,
    }

    impl Ctx<'_> {
        fn br(&self, m: i64) -> f64 {
            self.q.qn(m)
        }
        fn sb(&self, m: i64) -> f64 {
            debug_assert!(m >= 0, "bracket [{m}] negative");
            self.q.qn(m.max(0)).sqrt()
        }
        fn qh(&self, twice: i64) -> f64 {
            self.q.pow_half(twice as i32)
        }
        fn pre_up(&self) -> f64 {
            self.qh(self.x + self.y - self.n - 1)
        }
        fn pre_dn(&self) -> f64 {
            self.qh(self.x + self.y - self.n)
        }
        fn v(&self, n: i64, x: i64, y: i64, s: Spin) -> Option<BasisVector> {
            BasisVector::new(n, x, y, s)
        }
    }

    fn ctx<'a>(q: &'a QParam, v: &BasisVector) -> Ctx<'a> {
        Ctx {
            q,
            n: v.two_j as i64,
            x: v.x as i64,
            y: v.y as i64,
        }
    }

    pub fn a_plus_up(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = c.pre_up() * c.sb(x + 1);
        vec![
            (
                c.v(n + 1, x + 1, y + 1, Spin::Up),
                p * c.qh(-(n + 1)) * c.sb(y + 1) / c.br(n + 2),
            ),
            (
                c.v(n + 1, x + 1, y, Spin::Down),
                p * c.qh(1) * c.sb(n - y + 1) / (c.br(n + 1) * c.br(n + 2)),
            ),
        ]
    }

    pub fn a_plus_down(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = c.pre_dn() * c.sb(x + 1);
        vec![(
            c.v(n + 1, x + 1, y + 1, Spin::Down),
            p * c.qh(-n) * c.sb(y + 1) / c.br(n + 1),
        )]
    }

    pub fn a_minus_up(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = c.pre_up() * c.sb(n - x);
        vec![(
            c.v(n - 1, x, y, Spin::Up),
            p * c.qh(n + 2) * c.sb(n - y + 1) / c.br(n + 1),
        )]
    }

    pub fn a_minus_down(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = c.pre_dn() * c.sb(n - x);
        vec![
            (
                c.v(n - 1, x, y + 1, Spin::Up),
                -p * c.qh(1) * c.sb(y + 1) / (c.br(n) * c.br(n + 1)),
            ),
            (
                c.v(n - 1, x, y, Spin::Down),
                p * c.qh(n + 1) * c.sb(n - y - 1) / c.br(n),
            ),
        ]
    }

    pub fn b_plus_up(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = c.pre_up() * c.sb(x + 1);
        vec![
            (
                c.v(n + 1, x + 1, y, Spin::Up),
                p * c.sb(n - y + 2) / c.br(n + 2),
            ),
            (
                c.v(n + 1, x + 1, y - 1, Spin::Down),
                -p * c.qh(-(n + 2)) * c.sb(y) / (c.br(n + 1) * c.br(n + 2)),
            ),
        ]
    }

    pub fn b_plus_down(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = c.pre_dn() * c.sb(x + 1);
        vec![(
            c.v(n + 1, x + 1, y, Spin::Down),
            p * c.qh(-1) * c.sb(n - y) / c.br(n + 1),
        )]
    }

    pub fn b_minus_up(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = -c.pre_up() * c.sb(n - x);
        vec![(
            c.v(n - 1, x, y - 1, Spin::Up),
            p * c.qh(-1) * c.sb(y) / c.br(n + 1),
        )]
    }

    pub fn b_minus_down(q: &QParam, v: &BasisVector) -> Terms {
        let c = ctx(q, v);
        let (n, x, y) = (c.n, c.x, c.y);
        let p = -c.pre_dn() * c.sb(n - x);
        vec![
            (
                c.v(n - 1, x, y, Spin::Up),
                p * c.qh(n) * c.sb(n - y) / (c.br(n) * c.br(n + 1)),
            ),
            (c.v(n - 1, x, y - 1, Spin::Down), p * c.sb(y) / c.br(n)),
        ]
    }

    /// All terms of a corner applied to `v`, including targets outside the
    /// index ranges (reported as `None`).
    pub fn corner_terms(corner: Corner, q: &QParam, v: &BasisVector) -> Terms {
        match (corner, v.s) {
            (Corner::APlus, Spin::Up) => a_plus_up(q, v),
            (Corner::APlus, Spin::Down) => a_plus_down(q, v),
            (Corner::AMinus, Spin::Up) => a_minus_up(q, v),
            (Corner::AMinus, Spin::Down) => a_minus_down(q, v),
            (Corner::BPlus, Spin::Up) => b_plus_up(q, v),
            (Corner::BPlus, Spin::Down) => b_plus_down(q, v),
            (Corner::BMinus, Spin::Up) => b_minus_up(q, v),
            (Corner::BMinus, Spin::Down) => b_minus_down(q, v),
        }
    }
}

/// Action of a corner generator on a basis vector with invalid targets
/// removed.
pub fn corner_action(corner: Corner, q: &QParam, v: &BasisVector) -> Vec<(BasisVector, f64)> {
    formula::corner_terms(corner, q, v)
        .into_iter()
        .filter_map(|(t, c)| t.map(|t| (t, c)))
        .collect()
}

/// Terms whose target violates the index ranges but whose coefficient is
/// nonzero. Always empty for a consistent formula table.
pub fn range_violations(q: &QParam, trunc: Truncation) -> Vec<(Corner, BasisVector, f64)> {
    let mut out = Vec::new();
    for v in crate::hilbert::enumerate_basis(trunc) {
        for corner in Corner::ALL {
            for (t, c) in formula::corner_terms(corner, q, &v) {
                if t.is_none() && c != 0.0 {
                    out.push((corner, v, c));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SpinorRep {
    pub q: QParam,
    pub a_plus: BlockOperator,
    pub a_minus: BlockOperator,
    pub b_plus: BlockOperator,
    pub b_minus: BlockOperator,
    pub pi_a: BlockOperator,
    pub pi_b: BlockOperator,
}

pub fn build_spinor_rep(q: &QParam, trunc: Truncation) -> SpinorRep {
    build_spinor_rep_on(q, &Space::new(trunc))
}

pub fn build_spinor_rep_on(q: &QParam, space: &Arc<Space>) -> SpinorRep {
    let op = |c: Corner| BlockOperator::from_action(space, |v| corner_action(c, q, v));
    let a_plus = op(Corner::APlus);
    let a_minus = op(Corner::AMinus);
    let b_plus = op(Corner::BPlus);
    let b_minus = op(Corner::BMinus);
    let pi_a = a_plus.add(&a_minus).expect("same space");
    let pi_b = b_plus.add(&b_minus).expect("same space");
    SpinorRep {
        q: *q,
        a_plus,
        a_minus,
        b_plus,
        b_minus,
        pi_a,
        pi_b,
    }
}

fn same_spin(op: &BlockOperator) -> BlockOperator {
    op.filter_entries(|r, c| r.s == c.s)
}

fn spin_flip(op: &BlockOperator, from: Spin, to: Spin) -> BlockOperator {
    op.filter_entries(|r, c| c.s == from && r.s == to)
}

impl SpinorRep {
    pub fn space(&self) -> &Arc<Space> {
        self.pi_a.space()
    }

    pub fn corner(&self, c: Corner) -> &BlockOperator {
        match c {
            Corner::APlus => &self.a_plus,
            Corner::AMinus => &self.a_minus,
            Corner::BPlus => &self.b_plus,
            Corner::BMinus => &self.b_minus,
        }
    }

    pub fn pi(&self, g: Generator) -> &BlockOperator {
        match g {
            Generator::A => &self.pi_a,
            Generator::B => &self.pi_b,
        }
    }

    /// Diagonal-corner and other-corner generators of `B`:
    /// `ã± = P↑a±P↑ + P↓a±P↓`, `ã_/ = P↓a₊P↑ + P↑a₋P↓`, likewise for `b`.
    pub fn b_generator(&self, g: BGenerator) -> BlockOperator {
        match g {
            BGenerator::APlus => same_spin(&self.a_plus),
            BGenerator::AMinus => same_spin(&self.a_minus),
            BGenerator::BPlus => same_spin(&self.b_plus),
            BGenerator::BMinus => same_spin(&self.b_minus),
            BGenerator::ASlash => spin_flip(&self.a_plus, Spin::Up, Spin::Down)
                .add(&spin_flip(&self.a_minus, Spin::Down, Spin::Up))
                .expect("same space"),
            BGenerator::BSlash => spin_flip(&self.b_plus, Spin::Up, Spin::Down)
                .add(&spin_flip(&self.b_minus, Spin::Down, Spin::Up))
                .expect("same space"),
        }
    }
}

/// Largest entry of one defining relation `lhs − rhs` on the guard
/// interior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub relation: String,
    pub max_error: f64,
}

/// The five defining relations of the quantum group evaluated on the
/// truncated representation.
pub fn relation_residuals(rep: &SpinorRep) -> Result<Vec<RelationResidual>> {
    let a = rep.pi(Generator::A);
    let b = rep.pi(Generator::B);
    let (a_s, b_s) = (a.adjoint(), b.adjoint());
    let q = C64::new(rep.q.q(), 0.0);
    let id = BlockOperator::identity(rep.space());
    let one = C64::new(1.0, 0.0);
    let pairs = [
        ("ba = q ab", b.compose(a)?, a.compose(b)?.scale(q)),
        ("b*a = q ab*", b_s.compose(a)?, a.compose(&b_s)?.scale(q)),
        ("bb* = b*b", b.compose(&b_s)?, b_s.compose(b)?),
        (
            "a*a + q²b*b = 1",
            a_s.compose(a)?.lin_comb(one, &b_s.compose(b)?, q * q)?,
            id.clone(),
        ),
        ("aa* + bb* = 1", a.compose(&a_s)?.add(&b.compose(&b_s)?)?, id),
    ];
    pairs
        .into_iter()
        .map(|(name, lhs, rhs)| {
            Ok(RelationResidual {
                relation: name.to_string(),
                max_error: lhs.sub(&rhs)?.max_abs_interior(),
            })
        })
        .collect()
}

/// `D`, `|D|`, `F = D/|D|` and the spectral projectors.
#[derive(Clone, Debug)]
pub struct DiracPackage {
    pub d: BlockOperator,
    pub abs_d: BlockOperator,
    pub f: BlockOperator,
    pub p_up: BlockOperator,
    pub p_dn: BlockOperator,
}

pub fn build_dirac(trunc: Truncation) -> DiracPackage {
    build_dirac_on(&Space::new(trunc))
}

pub fn build_dirac_on(space: &Arc<Space>) -> DiracPackage {
    let diag = |f: &dyn Fn(&BasisVector) -> f64| {
        BlockOperator::diagonal(space, |v| C64::new(f(v), 0.0))
    };
    let d = diag(&|v| v.eigenvalue());
    let abs_d = diag(&|v| v.abs_eigenvalue());
    let f = diag(&|v| v.eigenvalue() / v.abs_eigenvalue());
    let p_up = diag(&|v| if v.s == Spin::Up { 1.0 } else { 0.0 });
    let p_dn = diag(&|v| if v.s == Spin::Down { 1.0 } else { 0.0 });
    DiracPackage {
        d,
        abs_d,
        f,
        p_up,
        p_dn,
    }
}

/// `δ(T) = [|D|, T]`.
pub fn delta(t: &BlockOperator) -> BlockOperator {
    t.map_entries(|r, c, v| v * (r.abs_eigenvalue() - c.abs_eigenvalue()))
}

/// `δᵏ(T)`.
pub fn delta_k(t: &BlockOperator, k: u32) -> BlockOperator {
    t.map_entries(|r, c, v| v * (r.abs_eigenvalue() - c.abs_eigenvalue()).powi(k as i32))
}

/// `∇(T) = [D², T]`.
pub fn nabla(t: &BlockOperator) -> BlockOperator {
    t.map_entries(|r, c, v| v * (r.abs_eigenvalue().powi(2) - c.abs_eigenvalue().powi(2)))
}

/// `∇ˢ(T)`.
pub fn nabla_k(t: &BlockOperator, s: u32) -> BlockOperator {
    t.map_entries(|r, c, v| {
        v * (r.abs_eigenvalue().powi(2) - c.abs_eigenvalue().powi(2)).powi(s as i32)
    })
}

/// `[D, T]`.
pub fn d_commutator(t: &BlockOperator) -> BlockOperator {
    t.map_entries(|r, c, v| v * (r.eigenvalue() - c.eigenvalue()))
}

/// `[F, T]`.
pub fn f_commutator(t: &BlockOperator) -> BlockOperator {
    t.map_entries(|r, c, v| v * (r.s.sign() - c.s.sign()))
}

/// Part of `T` commuting with `|D|`: entries between vectors of equal
/// `|D|`-eigenvalue.
pub fn grade_zero(t: &BlockOperator) -> BlockOperator {
    t.filter_entries(|r, c| r.abs_eigenvalue() == c.abs_eigenvalue())
}

/// Operators of the approximate representation.
#[derive(Clone, Debug)]
pub struct ApproxRep {
    pub ua_plus: BlockOperator,
    pub ua_minus: BlockOperator,
    pub ub_plus: BlockOperator,
    pub ub_minus: BlockOperator,
}

/// Action of an approximate-representation corner on `v`.
pub fn approx_action(corner: Corner, q: &QParam, v: &BasisVector) -> Vec<(BasisVector, f64)> {
    let q = q.q();
    let (n, x, y) = (v.two_j as i64, v.x as i64, v.y as i64);
    let (xi, yi) = (x as i32, y as i32);
    let (target, c) = match corner {
        Corner::APlus => (
            BasisVector::new(n + 1, x + 1, y + 1, v.s),
            (1.0 - q.powi(2 * xi + 2)).sqrt() * (1.0 - q.powi(2 * yi + 2)).sqrt(),
        ),
        Corner::AMinus => (BasisVector::new(n - 1, x, y, v.s), q.powi(xi + yi + 1)),
        Corner::BPlus => (
            BasisVector::new(n + 1, x + 1, y, v.s),
            q.powi(yi) * (1.0 - q.powi(2 * xi + 2)).sqrt(),
        ),
        Corner::BMinus => (
            BasisVector::new(n - 1, x, y - 1, v.s),
            -q.powi(xi) * (1.0 - q.powi(2 * yi)).sqrt(),
        ),
    };
    target.map(|t| vec![(t, c)]).unwrap_or_default()
}

pub fn build_approx_rep(q: &QParam, trunc: Truncation) -> ApproxRep {
    build_approx_rep_on(q, &Space::new(trunc))
}

pub fn build_approx_rep_on(q: &QParam, space: &Arc<Space>) -> ApproxRep {
    let op = |c: Corner| BlockOperator::from_action(space, |v| approx_action(c, q, v));
    ApproxRep {
        ua_plus: op(Corner::APlus),
        ua_minus: op(Corner::AMinus),
        ub_plus: op(Corner::BPlus),
        ub_minus: op(Corner::BMinus),
    }
}

impl ApproxRep {
    pub fn corner(&self, c: Corner) -> &BlockOperator {
        match c {
            Corner::APlus => &self.ua_plus,
            Corner::AMinus => &self.ua_minus,
            Corner::BPlus => &self.ub_plus,
            Corner::BMinus => &self.ub_minus,
        }
    }

    pub fn pi(&self, g: Generator) -> BlockOperator {
        match g {
            Generator::A => self.ua_plus.add(&self.ua_minus),
            Generator::B => self.ub_plus.add(&self.ub_minus),
        }
        .expect("same space")
    }
}

/// `π(x) − π_approx(x)`.
pub fn smoothing_remainder(rep: &SpinorRep, approx: &ApproxRep, g: Generator) -> Result<BlockOperator> {
    rep.pi(g).sub(&approx.pi(g))
}

/// Geometric decay diagnostics of a per-level profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub profile: Vec<(u32, f64)>,
    /// Smallest `C` with `profile(2j) ≤ C·q^{2j}` for `2j ≥ start`.
    pub constant: f64,
    /// `profile(2j + 2) / profile(2j)` for `2j ≥ start`.
    pub ratios_per_j_step: Vec<(u32, f64)>,
    pub max_ratio: f64,
}

pub fn fit_decay(profile: &[(u32, f64)], q: &QParam, start: u32, upto: u32) -> DecayFit {
    let used: Vec<(u32, f64)> = profile
        .iter()
        .copied()
        .filter(|(n, _)| *n >= start && *n <= upto)
        .collect();
    let constant = used
        .iter()
        .map(|(n, p)| p / q.q().powi(*n as i32))
        .fold(0.0, f64::max);
    let ratios: Vec<(u32, f64)> = used
        .iter()
        .filter_map(|(n, p)| {
            used.iter()
                .find(|(m, _)| *m == n + 2)
                .map(|(_, p2)| (*n, if *p == 0.0 { 0.0 } else { p2 / p }))
        })
        .collect();
    let max_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    DecayFit {
        profile: profile.to_vec(),
        constant,
        ratios_per_j_step: ratios,
        max_ratio,
    }
}

/// Trace-norm partial sums of `[F, π(x)]` at increasing truncations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub generator: Generator,
    pub partial_sums: Vec<(u32, f64)>,
    pub last_increment: f64,
    pub tolerance: f64,
    pub converged: bool,
}

pub fn fredholm_module_summability_check(rep: &SpinorRep) -> Vec<SummabilityReport> {
    let max = rep.space().truncation().max_two_j;
    let tol = rep.q.tol().decay_tol;
    [Generator::A, Generator::B]
        .into_iter()
        .map(|g| {
            let comm = f_commutator(rep.pi(g));
            let partial_sums: Vec<(u32, f64)> = (0..=max)
                .map(|l| (l, comm.restrict_levels(l).trace_norm()))
                .collect();
            let last_increment = match partial_sums.len() {
                0 | 1 => f64::INFINITY,
                k => (partial_sums[k - 1].1 - partial_sums[k - 2].1).abs(),
            };
            SummabilityReport {
                generator: g,
                partial_sums,
                last_increment,
                tolerance: tol,
                converged: last_increment < tol,
            }
        })
        .collect()
}
