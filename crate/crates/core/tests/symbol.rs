use num_complex::Complex64 as C64;
use proptest::prelude::*;
use suq2_core::qcore::QParam;
use suq2_core::spectral::BGenerator;
use suq2_core::symbol::*;

fn disk_letter() -> impl Strategy<Value = DiskLetter> {
    prop_oneof![Just(DiskLetter::A), Just(DiskLetter::AStar), Just(DiskLetter::B)]
}

fn disk_sign() -> impl Strategy<Value = DiskSign> {
    prop_oneof![Just(DiskSign::Plus), Just(DiskSign::Minus)]
}

fn b_letter() -> impl Strategy<Value = BLetter> {
    let corners = [BGenerator::APlus, BGenerator::AMinus, BGenerator::BPlus, BGenerator::BMinus];
    (0usize..4, any::<bool>()).prop_map(move |(i, adj)| {
        if adj {
            BLetter::star(corners[i])
        } else {
            BLetter::plain(corners[i])
        }
    })
}

fn disk_scale(x: &DiskElement) -> f64 {
    x.terms().values().map(|c| c.norm()).fold(1.0, f64::max)
}

fn disk_close(x: &DiskElement, y: &DiskElement) -> bool {
    x.max_abs_diff(y) <= 1e-12 * disk_scale(x).max(disk_scale(y))
}

fn cosphere_close(x: &CosphereElement, y: &CosphereElement) -> bool {
    let scale = |e: &CosphereElement| e.terms().values().map(|c| c.norm()).fold(1.0, f64::max);
    x.max_abs_diff(y) <= 1e-12 * scale(x).max(scale(y))
}

#[test]
fn disk_relations_in_normal_form() {
    let q = QParam::new(0.5).unwrap();
    for sign in [DiskSign::Plus, DiskSign::Minus] {
        let nf = |w: &[DiskLetter]| DiskElement::normal_form(&q, sign, w);
        let ba = nf(&[DiskLetter::B, DiskLetter::A]);
        let ab = nf(&[DiskLetter::A, DiskLetter::B]).scale(C64::new(0.5, 0.0));
        assert!(ba.max_abs_diff(&ab) < 1e-15, "{sign:?}");
        let aa_star = nf(&[DiskLetter::A, DiskLetter::AStar]);
        let a_star_a = nf(&[DiskLetter::AStar, DiskLetter::A]);
        assert!(!aa_star.max_abs_diff(&a_star_a).is_nan());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn normal_form_is_confluent(
        q in 0.1f64..0.9,
        sign in disk_sign(),
        w1 in prop::collection::vec(disk_letter(), 0..5),
        w2 in prop::collection::vec(disk_letter(), 0..5),
    ) {
        let qp = QParam::new(q).unwrap();
        let joined: Vec<DiskLetter> = w1.iter().chain(&w2).copied().collect();
        let whole = DiskElement::normal_form(&qp, sign, &joined);
        let split = DiskElement::normal_form(&qp, sign, &w1).mul(&DiskElement::normal_form(&qp, sign, &w2));
        prop_assert!(disk_close(&whole, &split), "{whole:?} vs {split:?}");
    }

    #[test]
    fn disk_star_is_an_anti_homomorphism(
        q in 0.1f64..0.9,
        sign in disk_sign(),
        w1 in prop::collection::vec(disk_letter(), 0..5),
        w2 in prop::collection::vec(disk_letter(), 0..5),
    ) {
        let qp = QParam::new(q).unwrap();
        let x = DiskElement::normal_form(&qp, sign, &w1);
        let y = DiskElement::normal_form(&qp, sign, &w2);
        prop_assert!(disk_close(&x.mul(&y).star(), &y.star().mul(&x.star())), "{:?} vs {:?}", x.mul(&y).star(), y.star().mul(&x.star()));
        prop_assert!(disk_close(&x.star().star(), &x));
        prop_assert!(x.mul(&y).sigma().max_abs_diff(&x.sigma().mul(&y.sigma())) <= 1e-12 * disk_scale(&x.mul(&y)));
    }

    #[test]
    fn disk_representation_is_multiplicative(
        q in 0.1f64..0.9,
        sign in disk_sign(),
        w in prop::collection::vec(disk_letter(), 1..5),
    ) {
        let qp = QParam::new(q).unwrap();
        let n = 16u32;
        let whole = DiskElement::normal_form(&qp, sign, &w).pi_pm_matrix(n);
        let mut prod = DiskElement::one(&qp, sign).pi_pm_matrix(n);
        for l in &w {
            prod *= DiskElement::letter(&qp, sign, *l).pi_pm_matrix(n);
        }
        let safe = n as usize - w.len();
        for i in 0..safe {
            for j in 0..safe {
                prop_assert!((whole[(i, j)] - prod[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rho_respects_products_and_adjoints(
        q in 0.1f64..0.9,
        w1 in prop::collection::vec(b_letter(), 0..4),
        w2 in prop::collection::vec(b_letter(), 0..4),
    ) {
        let qp = QParam::new(q).unwrap();
        let x = BWord(w1.clone()).symbol(&qp);
        let y = BWord(w2.clone()).symbol(&qp);
        let joined = BWord(w1.iter().chain(&w2).copied().collect()).symbol(&qp);
        prop_assert!(cosphere_close(&joined, &x.mul(&y)));
        prop_assert!(cosphere_close(&x.mul(&y).star(), &y.star().mul(&x.star())), "{:?} vs {:?}", x.mul(&y).star(), y.star().mul(&x.star()));
        let lhs = x.mul(&y).delta_k(1);
        let rhs = x.delta_k(1).mul(&y).add(&x.mul(&y.delta_k(1)));
        prop_assert!(cosphere_close(&lhs, &rhs));
    }
}
