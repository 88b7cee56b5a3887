use num_complex::Complex64 as C64;
use proptest::prelude::*;
use suq2_core::hilbert::{Space, Truncation};
use suq2_core::qcore::QParam;
use suq2_core::residues::*;
use suq2_core::spectral::BGenerator;
use suq2_core::symbol::{BLetter, BWord, CosphereElement, DiskElement, DiskSign, PsiSymbol};

fn b_word() -> impl Strategy<Value = Vec<BLetter>> {
    let corners = [BGenerator::APlus, BGenerator::AMinus, BGenerator::BPlus, BGenerator::BMinus];
    prop::collection::vec(
        (0usize..4, any::<bool>()).prop_map(move |(i, adj)| {
            if adj {
                BLetter::star(corners[i])
            } else {
                BLetter::plain(corners[i])
            }
        }),
        0..4,
    )
}

#[test]
fn unit_anchors() {
    let q = QParam::new(0.5).unwrap();
    let one = CosphereElement::one(&q);
    let want = [(3, 2.0), (2, 0.0), (1, -0.5)];
    for (k, v) in want {
        let got = nc_integral_b(&one, k, Projection::None).unwrap();
        assert!((got - C64::new(v, 0.0)).norm() < 1e-14, "k={k}: {got}");
    }
    let p = nc_integral(&PsiSymbol::p_up(&q), 1, Projection::None).unwrap();
    assert!((p - C64::new(-0.25, 0.0)).norm() < 1e-14);
    assert!(nc_integral_b(&one, 4, Projection::None).is_err());
}

#[test]
fn minus_disk_tau_zero_closed_form() {
    let q = QParam::new(0.5).unwrap();
    for m in 1..=5u32 {
        let b = DiskElement::monomial(&q, DiskSign::Minus, 0, m, C64::new(1.0, 0.0));
        let closed = tau_eval(TauFunctional::ZeroDown, &b).re;
        assert!((closed - (-1f64).powi(m as i32) / (1.0 - 0.5f64.powi(m as i32))).abs() < 1e-15);
        let conv = tau_truncated_trace_oracle(TauFunctional::ZeroDown, &b, &[8, 16, 32, 64]);
        assert!(conv.rows.last().unwrap().error < 1e-12, "m={m}");
    }
}

#[test]
fn fitted_residues_match_symbols() {
    let q = QParam::new(0.5).unwrap();
    let sp = Space::new(Truncation::new(42, 4).unwrap());
    let a = BLetter::plain(BGenerator::APlus);
    let b = BLetter::plain(BGenerator::BMinus);
    let words = [
        BWord(vec![]),
        BWord(vec![a, BLetter::star(BGenerator::APlus)]),
        BWord(vec![BLetter::star(BGenerator::BMinus), b]),
        BWord(vec![BLetter::plain(BGenerator::AMinus), BLetter::star(BGenerator::BPlus)]),
    ];
    for w in words {
        let diag = w.diagonal_on(&q, &sp);
        let report = residue_report(&w.name(), &sp, &diag, &PsiSymbol::from_b(w.symbol(&q))).unwrap();
        assert!(report.max_discrepancy() < 1e-6, "{}: {:?}", w.name(), report.discrepancy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn top_residue_is_tracial(q in 0.1f64..0.9, w1 in b_word(), w2 in b_word()) {
        let qp = QParam::new(q).unwrap();
        let x = BWord(w1).symbol(&qp);
        let y = BWord(w2).symbol(&qp);
        let xy = nc_integral_b(&x.mul(&y), 3, Projection::None).unwrap();
        let yx = nc_integral_b(&y.mul(&x), 3, Projection::None).unwrap();
        prop_assert!((xy - yx).norm() < 1e-12 * (1.0 + xy.norm()));
    }

    #[test]
    fn shift_route_agrees(q in 0.1f64..0.9, w in b_word(), k in 1u32..=3) {
        let qp = QParam::new(q).unwrap();
        let sym = PsiSymbol::from_b(BWord(w).symbol(&qp));
        for p in [Projection::None, Projection::Up, Projection::Down, Projection::Sign] {
            let a = nc_integral(&sym, k, p).unwrap();
            let b = nc_integral_by_shift(&sym, k, p).unwrap();
            prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
        }
    }
}
