//! Truncated operator model of the isospectral spectral triple on quantum SU(2).
//!
//! The crate builds the spinor representation of `SU_q(2)` and its Dirac
//! operator on a finite set of `j`-levels, the cosphere-bundle symbol calculus
//! on the two quantum disks, the residue functionals of the dimension spectrum
//! `{1, 2, 3}`, and the local cyclic cocycles whose pairing with the unitary
//!
//! ```text
//!     U = ( a      b  )
//!         ( -q b*  a* )
//! ```
//!
//! gives `ind(P U P) = 1`.
//!
//! Module map:
//!
//! - [`qcore`]: q-numbers, tolerances, Hurwitz zeta special values.
//! - [`hilbert`]: spinor basis and the block-sparse operator type.
//! - [`spectral`]: spinor and approximate representations, `D`, `|D|`, `F`,
//!   the derivations `δ` and `∇`, grade-zero projection.
//! - [`symbol`]: quantum-disk algebras, `π±`, the symbol maps `σ`, `ρ`, `ρ•`.
//! - [`residues`]: `τ`-functionals and noncommutative integrals.
//! - [`cocycles`]: `(b, B)` operators, `χ₁`, `φ₁`, `φ₃`, `ψ₁`, η-cochains and
//!   the index pairing.
//! - [`suites`]: verification suites and the report format used by the CLI.

pub mod cocycles;
pub mod error;
pub mod hilbert;
pub mod qcore;
pub mod residues;
pub mod spectral;
pub mod suites;
pub mod symbol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
