use num_complex::Complex64 as C64;
use proptest::prelude::*;
use suq2_core::hilbert::{BlockOperator, Space, Truncation};
use suq2_core::qcore::QParam;
use suq2_core::spectral::*;
use suq2_core::suites::delta_structure;

#[test]
fn delta_structure_is_exact() {
    for q in [0.3, 0.5, 0.8] {
        let qp = QParam::new(q).unwrap();
        let sp = Space::new(Truncation::new(12, 4).unwrap());
        let rep = build_spinor_rep_on(&qp, &sp);
        for c in Corner::ALL {
            assert_eq!(delta_structure(&rep, c).unwrap(), (0.0, 0.0), "{c:?}");
        }
    }
}

#[test]
fn delta_powers_compose() {
    let qp = QParam::new(0.5).unwrap();
    let sp = Space::new(Truncation::new(10, 3).unwrap());
    let rep = build_spinor_rep_on(&qp, &sp);
    let x = rep.pi(Generator::A).compose(rep.pi(Generator::B)).unwrap();
    let twice = delta(&delta(&x));
    assert!(delta_k(&x, 2).sub(&twice).unwrap().max_abs() < 1e-12);
    let n2 = nabla(&nabla(&x));
    assert!(nabla_k(&x, 2).sub(&n2).unwrap().max_abs() < 1e-9);
}

#[test]
fn grade_zero_commutes_with_abs_d() {
    let qp = QParam::new(0.5).unwrap();
    let sp = Space::new(Truncation::new(8, 2).unwrap());
    let rep = build_spinor_rep_on(&qp, &sp);
    let x = rep.pi(Generator::A).compose(&rep.pi(Generator::A).adjoint()).unwrap();
    let g = grade_zero(&x);
    assert_eq!(delta(&g).nnz(), 0);
    assert_eq!(grade_zero(&g).sub(&g).unwrap().max_abs(), 0.0);
}

#[test]
fn smoothing_remainder_decays_at_small_q() {
    let qp = QParam::new(0.3).unwrap();
    let sp = Space::new(Truncation::new(20, 4).unwrap());
    let rep = build_spinor_rep_on(&qp, &sp);
    let ap = build_approx_rep_on(&qp, &sp);
    for g in [Generator::A, Generator::B] {
        let r = smoothing_remainder(&rep, &ap, g).unwrap();
        let fit = fit_decay(&r.entry_decay_profile(), &qp, 4, 16);
        assert!(fit.max_ratio <= 0.09 * (1.0 + 1e-10), "{g:?}: {}", fit.max_ratio);
        assert!(fit.constant < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relations_hold_for_any_q(q in 0.05f64..0.95) {
        let qp = QParam::new(q).unwrap();
        let sp = Space::new(Truncation::new(8, 2).unwrap());
        let rep = build_spinor_rep_on(&qp, &sp);
        for r in relation_residuals(&rep).unwrap() {
            prop_assert!(r.max_error < 1e-12, "{} {}", r.relation, r.max_error);
        }
    }

    #[test]
    fn delta_is_a_derivation(q in 0.1f64..0.9, i in 0usize..4, j in 0usize..4) {
        let qp = QParam::new(q).unwrap();
        let sp = Space::new(Truncation::new(8, 2).unwrap());
        let rep = build_spinor_rep_on(&qp, &sp);
        let ops: Vec<BlockOperator> = Corner::ALL.iter().map(|&c| rep.corner(c).clone()).collect();
        let (s, t) = (&ops[i], &ops[j].adjoint());
        let st = s.compose(t).unwrap();
        let lhs = delta(&st);
        let rhs = delta(s).compose(t).unwrap().add(&s.compose(&delta(t)).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
        let f = f_commutator(&st);
        let f2 = f_commutator(s).compose(t).unwrap().add(&s.compose(&f_commutator(t)).unwrap()).unwrap();
        prop_assert!(f.sub(&f2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn approx_rep_shifts_abs_d_by_one(q in 0.1f64..0.9) {
        let qp = QParam::new(q).unwrap();
        let sp = Space::new(Truncation::new(8, 2).unwrap());
        let ap = build_approx_rep_on(&qp, &sp);
        for c in Corner::ALL {
            let x = ap.corner(c);
            let s = C64::new(c.shift() as f64, 0.0);
            prop_assert_eq!(delta(x).sub(&x.scale(s)).unwrap().nnz(), 0);
        }
    }
}
