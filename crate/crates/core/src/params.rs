use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf::{is_prime, FieldSpec};

/// The ambient space `M_n(F_{q^s})` with `q` prime.
#[derive(Debug, PartialEq, Eq)]
pub struct CodeParams {
    q: u32,
    n: usize,
    s: u32,
    big: FieldSpec,
    base: FieldSpec,
}

impl CodeParams {
    pub fn new(q: u32, n: usize, s: u32) -> Result<Arc<Self>> {
        if !is_prime(q) {
            return Err(Error::UnsupportedParameters(format!("q = {q} must be prime")));
        }
        let big = FieldSpec::new(q, s, None)?;
        Self::with_field(q, n, big)
    }

    /// Uses `big` as F_{q^s}; `s` is its degree over the prime field.
    pub fn with_field(q: u32, n: usize, big: FieldSpec) -> Result<Arc<Self>> {
        if !is_prime(q) {
            return Err(Error::UnsupportedParameters(format!("q = {q} must be prime")));
        }
        if big.p() != q {
            return Err(Error::UnsupportedParameters("field characteristic differs from q".into()));
        }
        if n == 0 || n > 8 {
            return Err(Error::UnsupportedParameters(format!("n = {n} outside 1..=8")));
        }
        let base = FieldSpec::new(q, 1, None)?;
        Ok(Arc::new(CodeParams { q, n, s: big.degree(), big, base }))
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn s(&self) -> u32 {
        self.s
    }
    /// F_{q^s}
    pub fn big(&self) -> &FieldSpec {
        &self.big
    }
    /// F_q
    pub fn base(&self) -> &FieldSpec {
        &self.base
    }
    /// F_q-dimension of a full spread set.
    pub fn full_dim(&self) -> usize {
        self.n * self.s as usize
    }
    pub fn entries(&self) -> usize {
        self.n * self.n
    }
}
