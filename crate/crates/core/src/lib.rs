//! Skolem function synthesis for quantifier-free Presburger arithmetic.
//!
//! The crate is organized around a small number of layers:
//!
//! * [`exactnum`] — arbitrary-precision integers/rationals and the exact
//!   linear algebra (determinants, Cramer solves, Hadamard bounds) used by
//!   affine candidate generation.
//! * [`formula`] — NNF trees over linear inequalities and modulo
//!   constraints, with an s-expression surface syntax.
//! * [`circuit`] — the arithmetic circuit IR (linear combination, `max`,
//!   zero-conditional `E`, floor division `div_m`) Skolem functions are
//!   compiled into.
//! * [`qelim`] — a Cooper-style quantifier elimination and decision engine.
//! * [`oracle`] — bounded brute-force ground truth used by every test.
//! * [`normal_forms`] — checkers and compilers for modulo-tameness and the
//!   PSyNF / PSySyNF knowledge-compilation forms.
//! * [`synth`] — the synthesis pipelines: the polynomial one-output route
//!   (interval-computing circuits plus a coalesce-and-sort network), the
//!   sequential multi-output driver, and the general affine-candidate
//!   algorithm.
//! * [`analysis`] — circuit analyses (modular assignments, period bounds)
//!   and the Chinese-remainder reduction from Boolean functional synthesis.

pub mod analysis;
pub mod budgets;
pub mod circuit;
pub mod error;
pub mod exactnum;
pub mod formula;
pub mod normal_forms;
pub mod oracle;
pub mod qelim;
pub mod synth;

pub use budgets::Budgets;
pub use error::{Error, Result};
