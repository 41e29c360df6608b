//! Exact motivic Donaldson–Thomas engine for parabolic Higgs bundles and
//! parabolic connections on the projective line over a finite field.
//!
//! The crate is organised bottom-up:
//!
//! * [`coeffring`] — the localized ring `Q[q, q^-1, (q^i - 1)^-1]` of motivic scalars;
//! * [`partitions`] — partitions, hook data and truncated Laurent series in `z`;
//! * [`symfunc`] — modified Macdonald and Hall–Littlewood polynomials;
//! * [`gammaring`] — truncated power series over flag-type indices with plethystic operations;
//! * [`dt`] — global factor tables, DT invariants and motivic classes of moduli stacks;
//! * [`kacmoody`] — star-shaped quivers, root tests and non-emptiness criteria;
//! * [`oracle`] — brute-force finite-field counts used as independent checks;
//! * [`verify`] — self-check suites shared by tests and the command-line tool.

pub mod coeffring;
pub mod dt;
pub mod error;
pub mod gammaring;
pub mod kacmoody;
pub mod oracle;
pub mod partitions;
pub mod symfunc;
pub mod verify;

pub use coeffring::{MotScalar, Rational};
pub use error::{Error, Result};
pub use partitions::{Partition, ZSeries};
pub use symfunc::{QZPoly, SymFun};
