use std::fmt;

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use suq2_core::cocycles::*;
use suq2_core::hilbert::{Space, Truncation};
use suq2_core::qcore::QParam;
use suq2_core::spectral::build_spinor_rep_on;

#[derive(Clone, Debug)]
struct M3(Matrix3<C64>);

impl UnitalAlgebra for M3 {
    fn unit() -> Self {
        M3(Matrix3::identity())
    }

    fn mul(&self, other: &Self) -> Self {
        M3(self.0 * other.0)
    }
}

impl fmt::Display for M3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M3")
    }
}

fn random_matrix(rng: &mut ChaCha8Rng) -> M3 {
    M3(Matrix3::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
}

/// `(a₀, …, aₙ) ↦ Tr(a₀X₀a₁X₁⋯aₙXₙ)` for fixed random `Xᵢ`.
fn trace_cochain(rng: &mut ChaCha8Rng, arity: usize) -> Cochain<M3> {
    let xs: Vec<Matrix3<C64>> = (0..arity).map(|_| random_matrix(rng).0).collect();
    Cochain::new(format!("tr{arity}"), arity, move |a: &[M3]| {
        let prod = a.iter().zip(&xs).fold(Matrix3::identity(), |acc, (m, x)| acc * m.0 * x);
        Ok(prod.trace())
    })
}

fn tuples(rng: &mut ChaCha8Rng, arity: usize, count: usize) -> Vec<Vec<M3>> {
    (0..count).map(|_| (0..arity).map(|_| random_matrix(rng)).collect()).collect()
}

#[test]
fn boundary_operators_square_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for arity in 1..=4 {
        let phi = trace_cochain(&mut rng, arity);
        let bb = phi.b().b();
        let t = tuples(&mut rng, arity + 2, 20);
        let c = check_vanishing("bb", &bb, &t).unwrap();
        assert!(c.max_violation < 1e-10, "b² arity {arity}: {}", c.max_violation);

        if arity >= 2 {
            let big = phi.big_b().big_b();
            let t = tuples(&mut rng, arity - 2, 20);
            let c = check_vanishing("BB", &big, &t).unwrap();
            assert!(c.max_violation < 1e-10, "B² arity {arity}: {}", c.max_violation);
        }

        let anti = phi.b().big_b().add(&phi.big_b().b()).unwrap();
        let t = tuples(&mut rng, arity, 20);
        let c = check_vanishing("bB+Bb", &anti, &t).unwrap();
        assert!(c.max_violation < 1e-10, "bB+Bb arity {arity}: {}", c.max_violation);
    }
}

#[test]
fn arity_mismatch_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phi = trace_cochain(&mut rng, 2);
    assert!(phi.eval(&tuples(&mut rng, 3, 1)[0]).is_err());
    assert!(phi.add(&trace_cochain(&mut rng, 3)).is_err());
}

#[test]
fn local_cochain_identities_on_low_degree_elements() {
    let q = QParam::new(0.5).unwrap();
    let local = LocalCocycles::new(&q);
    let pool = monomial_pool();
    let phi1 = Cochain::new("phi1", 2, {
        let l = LocalCocycles::new(&q);
        move |a: &[AlgElement]| l.phi1(&a[0], &a[1])
    });
    let small = &pool[..8];
    let mut t = Vec::new();
    for x in small {
        for y in small {
            for z in small {
                t.push(vec![x.clone(), y.clone(), z.clone()]);
            }
        }
    }
    let c = check_vanishing("b phi1", &phi1.b(), &t).unwrap();
    assert!(c.max_violation < 1e-10, "{c:?}");
    let one = AlgElement::one();
    assert!(local.phi1(&one, &one).unwrap().norm() < 1e-14);
}

#[test]
fn regularized_traces_at_fixed_points() {
    let q = QParam::new(0.5).unwrap();
    let sp = Space::new(Truncation::new(42, 4).unwrap());
    let tc = TraceCocycles::new(build_spinor_rep_on(&q, &sp));
    let one = AlgElement::one();
    let bb_star = AlgElement::word(&[Letter::B, Letter::BStar]);
    let a_star_a = AlgElement::word(&[Letter::AStar, Letter::A]);
    let close = |z: C64, v: f64, tol: f64| (z - C64::new(v, 0.0)).norm() < tol;

    assert!(close(tc.beta(&one).unwrap(), 0.0, 1e-12));
    assert!(close(tc.phi0(&one).unwrap(), 0.0, 1e-12));
    assert!(close(tc.phi0_prime(&one).unwrap(), 0.0, 1e-12));
    assert!(close(tc.beta(&bb_star).unwrap(), 2.0 / 9.0, 1e-8));
    assert!(close(tc.beta(&a_star_a).unwrap(), -1.0 / 18.0, 1e-8));
    assert!(close(tc.phi0(&bb_star).unwrap(), 0.0, 1e-8));
    assert!(close(tc.phi0_prime(&a_star_a).unwrap(), -1.0 / 18.0, 1e-8));
    let chi = tc.chi1(&AlgElement::letter(Letter::AStar), &AlgElement::letter(Letter::A));
    assert!(chi.value.norm() < 1e-8 && chi.tail < 1e-8, "{chi:?}");
}

#[test]
fn index_of_the_fundamental_unitary() {
    let q = QParam::new(0.5).unwrap();
    let sp = Space::new(Truncation::new(20, 4).unwrap());
    let tc = TraceCocycles::new(build_spinor_rep_on(&q, &sp));
    let local = LocalCocycles::new(&q);
    let u = AlgMatrix::fundamental_unitary(&q);
    let r = index_pairing(&local, &tc, &u).unwrap();
    assert_eq!(r.final_index, 1);
    assert!((r.psi1_pairing + C64::new(2.0, 0.0)).norm() < 1e-8 || (r.psi1_pairing - C64::new(2.0, 0.0)).norm() < 1e-8, "{:?}", r.psi1_pairing);
    assert!((r.trace_formula_index - 1.0).abs() < 1e-8);
    assert!(r.unitarity_defect < 1e-12);
}

#[test]
fn element_adjoint_reverses_words() {
    let x = AlgElement::word(&[Letter::A, Letter::B, Letter::BStar]).add(&AlgElement::one().scale(C64::new(0.0, 2.0)));
    let y = AlgElement::word(&[Letter::AStar]);
    assert_eq!(x.mul(&y).star(), y.star().mul(&x.star()));
    assert_eq!(x.star().star(), x);
}
