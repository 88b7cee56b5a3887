use num_complex::Complex64 as C64;
use proptest::prelude::*;
use suq2_core::hilbert::{enumerate_basis, BasisVector, BlockOperator, Entry, Space, Spin, Truncation};
use suq2_core::qcore::QParam;
use suq2_core::spectral::{build_dirac_on, build_spinor_rep_on, Generator};

#[test]
fn basis_is_sorted_and_counted() {
    let t = Truncation::new(10, 3).unwrap();
    let basis = enumerate_basis(t);
    assert_eq!(basis.len(), t.dimension());
    assert!(basis.windows(2).all(|w| w[0] < w[1]));
    assert!(basis.iter().all(|v| v.is_valid()));
    let up = basis.iter().filter(|v| v.s == Spin::Up && v.two_j == 4).count();
    assert_eq!(up, Truncation::up_dimension(4));
}

#[test]
fn invalid_vectors_rejected() {
    assert!(BasisVector::new(2, 3, 0, Spin::Up).is_none());
    assert!(BasisVector::new(0, 0, 0, Spin::Down).is_none());
    assert!(BasisVector::new(1, 0, 0, Spin::Down).is_some());
}

#[test]
fn compose_adds_level_shifts() {
    let q = QParam::new(0.5).unwrap();
    let sp = Space::new(Truncation::new(10, 3).unwrap());
    let rep = build_spinor_rep_on(&q, &sp);
    let prod = rep.a_plus.compose(&rep.a_minus).unwrap();
    for e in prod.entries() {
        assert_eq!(sp.vector(e.row as usize).two_j, sp.vector(e.col as usize).two_j);
    }
    let up2 = rep.a_plus.compose(&rep.a_plus).unwrap();
    for e in up2.entries() {
        assert_eq!(sp.vector(e.row as usize).two_j, sp.vector(e.col as usize).two_j + 2);
    }
}

#[test]
fn trace_cyclicity_on_the_interior() {
    let q = QParam::new(0.4).unwrap();
    let sp = Space::new(Truncation::new(12, 4).unwrap());
    let rep = build_spinor_rep_on(&q, &sp);
    let dirac = build_dirac_on(&sp);
    let a = rep.pi(Generator::A).restrict_levels(8);
    let b = rep.pi(Generator::B).adjoint().compose(&dirac.p_up).unwrap().restrict_levels(8);
    let ab = a.compose(&b).unwrap().truncated_trace(12);
    let ba = b.compose(&a).unwrap().truncated_trace(12);
    assert!((ab - ba).norm() < 1e-12, "{ab} vs {ba}");
}

fn random_operator(sp: &std::sync::Arc<Space>, seed: &[(usize, usize, f64, f64)]) -> BlockOperator {
    let n = sp.dim();
    let entries = seed
        .iter()
        .map(|&(r, c, re, im)| Entry {
            row: (r % n) as u32,
            col: (c % n) as u32,
            value: C64::new(re, im),
        })
        .collect();
    BlockOperator::from_entries(sp, entries)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_is_an_involution_and_antimultiplicative(
        x in prop::collection::vec((0usize..500, 0usize..500, -1.0f64..1.0, -1.0f64..1.0), 1..40),
        y in prop::collection::vec((0usize..500, 0usize..500, -1.0f64..1.0, -1.0f64..1.0), 1..40),
    ) {
        let sp = Space::new(Truncation::new(6, 2).unwrap());
        let a = random_operator(&sp, &x);
        let b = random_operator(&sp, &y);
        prop_assert_eq!(a.adjoint().adjoint().sub(&a).unwrap().max_abs(), 0.0);
        let lhs = a.compose(&b).unwrap().adjoint();
        let rhs = b.adjoint().compose(&a.adjoint()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn compose_is_associative_and_matches_matvec(
        x in prop::collection::vec((0usize..500, 0usize..500, -1.0f64..1.0, -1.0f64..1.0), 1..30),
        y in prop::collection::vec((0usize..500, 0usize..500, -1.0f64..1.0, -1.0f64..1.0), 1..30),
        z in prop::collection::vec((0usize..500, 0usize..500, -1.0f64..1.0, -1.0f64..1.0), 1..30),
    ) {
        let sp = Space::new(Truncation::new(6, 2).unwrap());
        let (a, b, c) = (random_operator(&sp, &x), random_operator(&sp, &y), random_operator(&sp, &z));
        let l = a.compose(&b).unwrap().compose(&c).unwrap();
        let r = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(l.sub(&r).unwrap().max_abs() < 1e-13);
        let v: Vec<C64> = (0..sp.dim()).map(|i| C64::new((i as f64).sin(), (i as f64).cos())).collect();
        let ab_v = a.compose(&b).unwrap().matvec(&v);
        let a_b_v = a.matvec(&b.matvec(&v));
        for (p, q) in ab_v.iter().zip(&a_b_v) {
            prop_assert!((p - q).norm() < 1e-13);
        }
    }
}
