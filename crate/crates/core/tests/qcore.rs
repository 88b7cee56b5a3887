use proptest::prelude::*;
use suq2_core::qcore::{bernoulli_numbers, bernoulli_polynomial, hurwitz_zeta_residue_and_values, q_number, QParam};

/// Regularized `Σ_{n≥0} p(n + a)` for a polynomial `p` of degree ≤ 3 by
/// Euler–Maclaurin: `−P(a) + p(a)/2 − Σ B_{2k}/(2k)! p^{(2k−1)}(a)`.
pub fn euler_maclaurin(coeffs: &[f64], a: f64) -> f64 {
    let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let antiderivative: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * a.powi(k as i32 + 1) / (k as f64 + 1.0))
        .sum();
    let d1: f64 = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64 * a.powi(k as i32 - 1))
        .sum();
    let d3: f64 = coeffs.get(3).map(|c| 6.0 * c).unwrap_or(0.0);
    -antiderivative + p(a) / 2.0 - d1 / 12.0 + d3 / 720.0
}

#[test]
fn zeta_special_values_match_euler_maclaurin() {
    for a in [0.5, 1.5, 0.25, 2.75, 7.0] {
        let table = hurwitz_zeta_residue_and_values(a).unwrap();
        for k in 0..=3usize {
            let mut mono = vec![0.0; k + 1];
            mono[k] = 1.0;
            let want = euler_maclaurin(&mono, a);
            let got = table.value(-(k as i32)).unwrap();
            assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()), "a={a} k={k}: {got} vs {want}");
        }
        assert_eq!(table.residue_at_one, 1.0);
    }
}

#[test]
fn down_sector_offset_is_consistent_with_the_up_offset() {
    let half = hurwitz_zeta_residue_and_values(0.5).unwrap();
    let three_halves = hurwitz_zeta_residue_and_values(1.5).unwrap();
    for k in 0..=4 {
        let lhs = half.value(-k).unwrap() - 0.5f64.powi(k);
        assert!((lhs - three_halves.value(-k).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn unit_polynomial_regularizes_to_zero_on_both_sectors() {
    // λ² − ¼ over λ = n + 3/2 (up) and λ = n + ½ (down)
    let p = [-0.25, 0.0, 1.0];
    assert!(euler_maclaurin(&p, 1.5).abs() < 1e-15);
    assert!(euler_maclaurin(&p, 0.5).abs() < 1e-15);
}

#[test]
fn bernoulli_values() {
    let b = bernoulli_numbers(8);
    let want = [1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0, 0.0, 1.0 / 42.0, 0.0, -1.0 / 30.0];
    for (x, y) in b.iter().zip(want) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn invalid_offsets_rejected() {
    assert!(hurwitz_zeta_residue_and_values(0.0).is_err());
    assert!(hurwitz_zeta_residue_and_values(f64::NAN).is_err());
}

proptest! {
    #[test]
    fn bernoulli_difference_equation(n in 1usize..8, x in -3.0f64..3.0) {
        let lhs = bernoulli_polynomial(n, x + 1.0) - bernoulli_polynomial(n, x);
        let rhs = n as f64 * x.powi(n as i32 - 1);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn q_number_matches_definition(q in 0.05f64..0.95, n in 0i64..30) {
        let qp = QParam::new(q).unwrap();
        let got = q_number(n, &qp).unwrap();
        let def = (q.powi(-(n as i32)) - q.powi(n as i32)) / (1.0 / q - q);
        prop_assert!((got - def).abs() <= 1e-12 * def.abs().max(1.0));
    }

    #[test]
    fn q_number_recursion(q in 0.05f64..0.95, n in 1i64..25) {
        let qp = QParam::new(q).unwrap();
        let lhs = qp.qn(n + 1);
        let rhs = (q + 1.0 / q) * qp.qn(n) - qp.qn(n - 1);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}
