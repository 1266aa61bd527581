//! Finite fields, rank-metric codes and semifield spread sets, with the
//! invariants and equivalence tests needed to classify semifields of order
//! `q^{ns}` whose right nucleus contains `F_{q^s}`.

pub mod classify;
pub mod embed;
pub mod equivalence;
pub mod error;
pub mod gf;
pub mod invariants;
pub mod io;
pub mod lemmas;
pub mod linalg;
pub mod params;
pub mod small;
pub mod spreadset;

pub use error::{Error, Result};
pub use gf::{Automorphism, FieldElement, FieldSpec};
pub use linalg::Mat;
pub use params::CodeParams;
pub use spreadset::MatrixCode;
