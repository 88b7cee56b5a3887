//! Deformation parameter, q-numbers and Hurwitz zeta special values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working floating precision. Only IEEE double is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    #[default]
    Double,
}

/// Named tolerance set shared by every check in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities between operators (relations, adjoints, ...).
    pub relation_tol: f64,
    /// Residues, cocycle values and anything passing through a fit.
    pub residue_tol: f64,
    /// Cauchy increments of rapidly decaying sums.
    pub decay_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relation_tol: 1e-10,
            residue_tol: 1e-6,
            decay_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("relation_tol", self.relation_tol),
            ("residue_tol", self.residue_tol),
            ("decay_tol", self.decay_tol),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// The deformation parameter `0 < q < 1` together with its tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QParam {
    q: f64,
    pub precision: Precision,
    pub tolerances: Tolerances,
}

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        Self::with_tolerances(q, Tolerances::default())
    }

    pub fn with_tolerances(q: f64, tolerances: Tolerances) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidQ(q));
        }
        tolerances.validate()?;
        Ok(Self {
            q,
            precision: Precision::Double,
            tolerances,
        })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn tol(&self) -> &Tolerances {
        &self.tolerances
    }

    /// `q^e` for a half-integer exponent given as `twice_e / 2`.
    #[inline]
    pub fn pow_half(&self, twice_e: i32) -> f64 {
        if twice_e % 2 == 0 {
            self.q.powi(twice_e / 2)
        } else {
            self.q.powi(twice_e).sqrt()
        }
    }

    /// The q-number `[n]`, see [`q_number`].
    pub fn qn(&self, n: i64) -> f64 {
        q_number(n, self).expect("q-number of a negative integer")
    }
}

/// The q-number `[N] = (q^{-N} - q^N) / (q^{-1} - q)`.
///
/// Evaluated as `q^{1-N} (1 - q^{2N}) / (1 - q^2)`, which is the same
/// quantity without the explicit difference of two large numbers.
pub fn q_number(n: i64, q: &QParam) -> Result<f64> {
    if n < 0 {
        return Err(Error::NegativeQNumber(n));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let q = q.q();
    let n = i32::try_from(n).map_err(|_| Error::NegativeQNumber(n as i64))?;
    Ok(q.powi(1 - n) * (1.0 - q.powi(2 * n)) / (1.0 - q * q))
}

/// Bernoulli numbers `B_0 .. B_n` (convention `B_1 = -1/2`).
pub fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        let mut acc = 0.0;
        let mut binom = 1.0; // C(m+1, k)
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -acc / (m + 1) as f64;
    }
    b
}

/// Bernoulli polynomial `B_n(x) = Σ_k C(n,k) B_k x^{n-k}`.
pub fn bernoulli_polynomial(n: usize, x: f64) -> f64 {
    let b = bernoulli_numbers(n);
    let mut binom = 1.0;
    let mut acc = 0.0;
    for (k, bk) in b.iter().enumerate() {
        acc += binom * bk * x.powi((n - k) as i32);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// Special values of the Hurwitz zeta function `ζ(s, offset)` at
/// non-positive integers, plus its residue at `s = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaTable {
    pub hurwitz_offset: f64,
    /// `-n -> ζ(-n, offset)`.
    pub special_values: BTreeMap<i32, f64>,
    pub residue_at_one: f64,
}

impl ZetaTable {
    /// `ζ(arg, offset)` for a tabulated non-positive integer `arg`.
    pub fn value(&self, arg: i32) -> Option<f64> {
        self.special_values.get(&arg).copied()
    }
}

/// Tabulates `ζ(-n, a) = -B_{n+1}(a) / (n + 1)` for `n = 0, 1, 2, 3, 4`.
pub fn hurwitz_zeta_residue_and_values(offset: f64) -> Result<ZetaTable> {
    if !(offset > 0.0) || !offset.is_finite() {
        return Err(Error::InvalidOffset(offset));
    }
    let special_values = (0..=4)
        .map(|n: i32| {
            let k = (n + 1) as usize;
            (-n, -bernoulli_polynomial(k, offset) / k as f64)
        })
        .collect();
    Ok(ZetaTable {
        hurwitz_offset: offset,
        special_values,
        residue_at_one: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_number_small_values() {
        let q = QParam::new(0.5).unwrap();
        assert_eq!(q_number(0, &q).unwrap(), 0.0);
        for qq in [0.1, 0.5, 0.9] {
            let q = QParam::new(qq).unwrap();
            assert!((q_number(1, &q).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((q_number(2, &q).unwrap() - 2.5).abs() < 1e-15);
        assert!(matches!(q_number(-1, &q), Err(Error::NegativeQNumber(-1))));
    }

    #[test]
    fn q_number_definition_and_monotone() {
        for qq in [0.3, 0.5, 0.8] {
            let q = QParam::new(qq).unwrap();
            let mut prev = 0.0;
            for n in 0..=200i64 {
                let v = q_number(n, &q).unwrap();
                let lhs = v * (1.0 / qq - qq);
                let rhs = qq.powi(-(n as i32)) - qq.powi(n as i32);
                assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0), "n={n}");
                if n > 0 {
                    assert!(v > prev);
                }
                prev = v;
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(QParam::new(0.0).is_err());
        assert!(QParam::new(1.0).is_err());
        assert!(QParam::new(1.5).is_err());
        assert!(QParam::new(f64::NAN).is_err());
        let bad = Tolerances {
            residue_tol: 0.0,
            ..Tolerances::default()
        };
        assert!(QParam::with_tolerances(0.5, bad).is_err());
        assert!(hurwitz_zeta_residue_and_values(0.0).is_err());
    }

    #[test]
    fn bernoulli_known_values() {
        let b = bernoulli_numbers(6);
        let expect = [1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0, 0.0, 1.0 / 42.0];
        for (x, y) in b.iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
        // B_2(x) = x^2 - x + 1/6
        assert!((bernoulli_polynomial(2, 1.5) - 11.0 / 12.0).abs() < 1e-15);
        // B_3(x) = x^3 - 3x^2/2 + x/2
        assert!((bernoulli_polynomial(3, 1.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zeta_table_at_three_halves() {
        let t = hurwitz_zeta_residue_and_values(1.5).unwrap();
        assert!((t.value(0).unwrap() + 1.0).abs() < 1e-15);
        assert!((t.value(-1).unwrap() + 11.0 / 24.0).abs() < 1e-15);
        assert!((t.value(-2).unwrap() + 0.25).abs() < 1e-15);
        assert_eq!(t.residue_at_one, 1.0);
        let half = hurwitz_zeta_residue_and_values(0.5).unwrap();
        // ζ(s, 1/2) = ζ(s, 3/2) + (1/2)^{-s}
        for n in 0..=4 {
            let shift = 0.5f64.powi(n);
            assert!((half.value(-n).unwrap() - t.value(-n).unwrap() - shift).abs() < 1e-14);
        }
    }
}
