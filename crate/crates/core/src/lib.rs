//! Exact-enumeration laboratory for the Burkholder square-function inequality
//! on finite filtrations, built around the Bregman divergence of `|x|^p`.
//!
//! * [`scalar`]: signed powers, `F_p`, `G_p` and the tabulated constants.
//! * [`tree`] and [`generators`]: finite trees, adapted processes, closures.
//! * [`functionals`]: `S_n`, `X_n^*`, moments and the ratio `E S_n^p / E (X_n^*)^p`.
//! * [`verify`]: every identity and inequality behind the bound as a [`CheckReport`].
//! * [`search`] and [`scan`]: derivative-free extremal search over martingales.
//! * [`format`] and [`cli`]: file formats and the `bdglab` front end.

// `!(x <= y)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod family;
pub mod format;
pub mod functionals;
pub mod generators;
pub mod numeric;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod scan;
pub mod search;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{bdg_ratio, maximal_function, square_function, PathFunctionals};
pub use report::{CheckReport, Outcome, SuiteReport};
pub use scalar::{bregman_divergence, burkholder_constants, g_weight, signed_power, PExponent};
pub use tree::{AdaptedProcess, OutcomeTree};
pub use verify::{run_suite, SuiteConfig, Tolerances};
