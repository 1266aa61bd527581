//! Exact arithmetic in finite fields GF(p^d).
//!
//! Elements are stored as integer codes: the coefficient vector of the element
//! in the power basis `1, θ, …, θ^{d−1}` read little-endian in base `p`, where
//! `θ` is a root of the field modulus. Multiplication goes through log/antilog
//! tables built from a primitive element.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field we are willing to tabulate.
pub const MAX_FIELD_SIZE: u64 = 1 << 24;

/// An element of a finite field, identified by its code.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The Frobenius power `x ↦ x^{p^power}`. Every automorphism of a finite
/// field fixes the prime field, so these are all of them.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Automorphism {
    pub power: u32,
}

impl Automorphism {
    pub const IDENTITY: Automorphism = Automorphism { power: 0 };

    pub fn new(power: u32) -> Self {
        Automorphism { power }
    }

    pub fn is_identity(self) -> bool {
        self.power == 0
    }

    /// `self ∘ other` inside a field of the given degree.
    pub fn compose(self, other: Automorphism, degree: u32) -> Automorphism {
        Automorphism { power: (self.power + other.power) % degree.max(1) }
    }

    pub fn inverse(self, degree: u32) -> Automorphism {
        let d = degree.max(1);
        Automorphism { power: (d - self.power % d) % d }
    }
}

/// Serializable description of a field: `{p, d, modulus: [c_0..c_d]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDesc {
    pub p: u32,
    pub d: u32,
    pub modulus: Vec<u32>,
}

struct FieldInner {
    p: u32,
    d: u32,
    size: u32,
    modulus: Vec<u32>,
    generator: u32,
    theta: u32,
    /// exp[i] = g^i for i in 0..2(size-1)
    exp: Vec<u32>,
    /// log[x] for x != 0; log[0] unused
    log: Vec<u32>,
    /// p^i for each digit position
    place: Vec<u32>,
}

/// A finite field GF(p^d) with a fixed modulus. Cheap to clone.
#[derive(Clone)]
pub struct FieldSpec(Arc<FieldInner>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.d == other.0.d && self.0.modulus == other.0.modulus)
    }
}
impl Eq for FieldSpec {}

impl std::hash::Hash for FieldSpec {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.0.p, self.0.d, &self.0.modulus).hash(state);
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}; {:?})", self.0.p, self.0.d, self.0.modulus)
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2u32;
    while (i as u64) * (i as u64) <= n as u64 {
        if n % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// If `q` is a power of `p`, return the exponent.
pub fn log_base(p: u32, q: u32) -> Option<u32> {
    if q < 1 || p < 2 {
        return None;
    }
    let mut e = 0;
    let mut acc = 1u64;
    while acc < q as u64 {
        acc *= p as u64;
        e += 1;
    }
    (acc == q as u64).then_some(e)
}

// ---- polynomials over F_p, little-endian coefficient vectors ----

fn poly_trim(a: &mut Vec<u32>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    let mut e = p as u64 - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

/// Remainder of `a` modulo `b` (b nonzero, any leading coefficient).
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    let lead_inv = inv_mod_p(b[db], p);
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let c = (r[dr] as u64 * lead_inv as u64 % p as u64) as u32;
        if c != 0 {
            for i in 0..=db {
                let t = (c as u64 * b[i] as u64 % p as u64) as u32;
                let idx = dr - db + i;
                r[idx] = (r[idx] + p - t) % p;
            }
        }
        r.pop();
        poly_trim(&mut r);
        if r.is_empty() {
            r.push(0);
        }
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
        }
    }
    let mut r = poly_rem(&prod, m, p);
    r.resize(m.len() - 1, 0);
    r
}

fn poly_powmod(base: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
    let d = m.len() - 1;
    let mut result = vec![0u32; d];
    result[0] = 1;
    let mut b = base.to_vec();
    b.resize(d, 0);
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &b, m, p);
        }
        b = poly_mulmod(&b, &b, m, p);
        e >>= 1;
    }
    result
}

/// Irreducibility by trial division against every monic polynomial of degree
/// at most `deg/2`.
pub fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let d = modulus.len() - 1;
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    for deg in 1..=d / 2 {
        let count = (p as u64).pow(deg as u32);
        for t in 0..count {
            let mut g = Vec::with_capacity(deg + 1);
            let mut x = t;
            for _ in 0..deg {
                g.push((x % p as u64) as u32);
                x /= p as u64;
            }
            g.push(1);
            let r = poly_rem(modulus, &g, p);
            if r.iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn digits_of(code: u64, p: u32, d: u32) -> Vec<u32> {
    let mut v = Vec::with_capacity(d as usize);
    let mut x = code;
    for _ in 0..d {
        v.push((x % p as u64) as u32);
        x /= p as u64;
    }
    v
}

fn code_of(digits: &[u32], p: u32) -> u32 {
    digits.iter().rev().fold(0u64, |acc, &c| acc * p as u64 + c as u64) as u32
}

fn is_primitive_poly_elem(g: &[u32], modulus: &[u32], p: u32, order: u64, factors: &[u64]) -> bool {
    let d = modulus.len() - 1;
    let mut one = vec![0u32; d];
    one[0] = 1;
    if g.iter().all(|&c| c == 0) {
        return false;
    }
    if poly_powmod(g, order, modulus, p) != one {
        return false;
    }
    factors.iter().all(|&r| poly_powmod(g, order / r, modulus, p) != one)
}

fn builtin_modulus(p: u32, d: u32) -> Option<Vec<u32>> {
    match (p, d) {
        (2, 1) => Some(vec![1, 1]),
        (2, 2) => Some(vec![1, 1, 1]),
        (2, 4) => Some(vec![1, 1, 0, 0, 1]),
        (2, 8) => Some(vec![1, 0, 1, 1, 1, 0, 0, 0, 1]),
        _ => None,
    }
}

/// The lexicographically first primitive polynomial of degree `d` over F_p
/// (coefficients c_0..c_{d-1} read as a little-endian base-p integer).
fn search_primitive_modulus(p: u32, d: u32) -> Vec<u32> {
    let order = (p as u64).pow(d) - 1;
    let factors = prime_factors(order);
    let count = (p as u64).pow(d);
    for t in 1..count {
        let mut m = digits_of(t, p, d);
        if m[0] == 0 {
            continue;
        }
        m.push(1);
        if !is_irreducible(&m, p) {
            continue;
        }
        let mut x = vec![0u32; d as usize];
        if d == 1 {
            x[0] = (p - m[0]) % p;
        } else {
            x[1] = 1;
        }
        if is_primitive_poly_elem(&x, &m, p, order, &factors) {
            return m;
        }
    }
    unreachable!("primitive polynomials exist in every degree")
}

impl FieldSpec {
    /// Builds GF(p^d). Without a modulus the built-in table is used (falling
    /// back to the first primitive polynomial in lexicographic order). The
    /// designated primitive element is θ when θ is primitive, otherwise the
    /// smallest primitive code.
    pub fn new(p: u32, d: u32, modulus: Option<Vec<u32>>) -> Result<Self> {
        Self::build(p, d, modulus, None)
    }

    /// Like [`FieldSpec::new`] but with an explicitly designated generator.
    pub fn with_generator(p: u32, d: u32, modulus: Option<Vec<u32>>, generator: u32) -> Result<Self> {
        Self::build(p, d, modulus, Some(generator))
    }

    /// The default field of order `q`.
    pub fn of_order(q: u32) -> Result<Self> {
        let p = (2..=q).find(|&c| q % c == 0).ok_or(Error::UnsupportedField { p: q, d: 1 })?;
        let d = log_base(p, q).ok_or(Error::UnsupportedField { p, d: 0 })?;
        Self::new(p, d, None)
    }

    pub fn from_desc(desc: &FieldDesc) -> Result<Self> {
        Self::new(desc.p, desc.d, Some(desc.modulus.clone()))
    }

    pub fn desc(&self) -> FieldDesc {
        FieldDesc { p: self.0.p, d: self.0.d, modulus: self.0.modulus.clone() }
    }

    fn build(p: u32, d: u32, modulus: Option<Vec<u32>>, generator: Option<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if d == 0 || (p as u64).checked_pow(d).map_or(true, |s| s > MAX_FIELD_SIZE) {
            return Err(Error::UnsupportedField { p, d });
        }
        let modulus = match modulus {
            Some(m) => {
                if m.len() != d as usize + 1 || m[d as usize] != 1 || m.iter().any(|&c| c >= p) {
                    return Err(Error::BadModulus { p, expected: d });
                }
                if !is_irreducible(&m, p) {
                    return Err(Error::ReducibleModulus(m));
                }
                m
            }
            None => builtin_modulus(p, d).unwrap_or_else(|| search_primitive_modulus(p, d)),
        };
        let size = (p as u64).pow(d);
        let order = size - 1;
        let factors = prime_factors(order);
        let theta_digits: Vec<u32> = if d == 1 {
            vec![(p - modulus[0]) % p]
        } else {
            let mut v = vec![0u32; d as usize];
            v[1] = 1;
            v
        };
        let theta = code_of(&theta_digits, p);
        let generator = match generator {
            Some(g) => {
                if g as u64 >= size {
                    return Err(Error::InvalidElement { code: g, size: size as u32 });
                }
                let gd = digits_of(g as u64, p, d);
                if !is_primitive_poly_elem(&gd, &modulus, p, order, &factors) {
                    return Err(Error::NotPrimitive(g));
                }
                g
            }
            None => {
                if is_primitive_poly_elem(&theta_digits, &modulus, p, order, &factors) {
                    theta
                } else {
                    (1..size as u32)
                        .find(|&g| {
                            let gd = digits_of(g as u64, p, d);
                            is_primitive_poly_elem(&gd, &modulus, p, order, &factors)
                        })
                        .expect("finite fields have primitive elements")
                }
            }
        };
        let n1 = order as usize;
        let mut exp = vec![0u32; 2 * n1.max(1)];
        let mut log = vec![0u32; size as usize];
        let gdig = digits_of(generator as u64, p, d);
        let mut cur = vec![0u32; d as usize];
        cur[0] = 1;
        for i in 0..n1 {
            let c = code_of(&cur, p);
            exp[i] = c;
            log[c as usize] = i as u32;
            cur = poly_mulmod(&cur, &gdig, &modulus, p);
        }
        for i in n1..2 * n1 {
            exp[i] = exp[i - n1];
        }
        if n1 == 0 {
            exp[0] = 1;
        }
        let place = (0..d).map(|i| p.pow(i)).collect();
        Ok(FieldSpec(Arc::new(FieldInner { p, d, size: size as u32, modulus, generator, theta, exp, log, place })))
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.0.p
    }
    #[inline]
    pub fn degree(&self) -> u32 {
        self.0.d
    }
    #[inline]
    pub fn size(&self) -> u32 {
        self.0.size
    }
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }
    /// The designated primitive element.
    pub fn generator(&self) -> FieldElement {
        FieldElement(self.0.generator)
    }
    /// The root θ of the modulus; the power basis is built on it.
    pub fn theta(&self) -> FieldElement {
        FieldElement(self.0.theta)
    }
    #[inline]
    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }
    #[inline]
    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    pub fn elem(&self, code: u32) -> Result<FieldElement> {
        if code < self.0.size {
            Ok(FieldElement(code))
        } else {
            Err(Error::InvalidElement { code, size: self.0.size })
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.0.size).map(FieldElement)
    }

    pub fn digits(&self, x: FieldElement) -> Vec<u32> {
        digits_of(x.0 as u64, self.0.p, self.0.d)
    }

    pub fn from_digits(&self, digits: &[u32]) -> FieldElement {
        FieldElement(code_of(digits, self.0.p))
    }

    /// The element of the prime field with integer value `c mod p`.
    pub fn from_int(&self, c: u32) -> FieldElement {
        FieldElement(c % self.0.p)
    }

    #[inline]
    pub fn add(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if self.0.p == 2 {
            FieldElement(x.0 ^ y.0)
        } else {
            self.add_slow(x.0, y.0, false)
        }
    }

    #[inline]
    pub fn sub(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if self.0.p == 2 {
            FieldElement(x.0 ^ y.0)
        } else {
            self.add_slow(x.0, y.0, true)
        }
    }

    pub fn neg(&self, x: FieldElement) -> FieldElement {
        self.sub(FieldElement::ZERO, x)
    }

    fn add_slow(&self, mut x: u32, mut y: u32, negate: bool) -> FieldElement {
        let p = self.0.p;
        let mut out = 0u32;
        for &pl in &self.0.place {
            let a = x % p;
            let b = y % p;
            let c = if negate { (a + p - b) % p } else { (a + b) % p };
            out += c * pl;
            x /= p;
            y /= p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if x.0 == 0 || y.0 == 0 {
            return FieldElement::ZERO;
        }
        let inner = &*self.0;
        FieldElement(inner.exp[(inner.log[x.0 as usize] + inner.log[y.0 as usize]) as usize])
    }

    pub fn inv(&self, x: FieldElement) -> Result<FieldElement> {
        if x.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.inv_nonzero(x))
    }

    #[inline]
    pub(crate) fn inv_nonzero(&self, x: FieldElement) -> FieldElement {
        let inner = &*self.0;
        let n1 = inner.size - 1;
        FieldElement(inner.exp[((n1 - inner.log[x.0 as usize]) % n1) as usize])
    }

    pub fn div(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn pow(&self, x: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if x.0 == 0 {
            return FieldElement::ZERO;
        }
        let n1 = (self.0.size - 1) as u64;
        let l = self.0.log[x.0 as usize] as u64;
        FieldElement(self.0.exp[((l * (e % n1)) % n1) as usize])
    }

    /// Discrete log base the designated generator.
    pub fn log(&self, x: FieldElement) -> Option<u32> {
        (x.0 != 0).then(|| self.0.log[x.0 as usize])
    }

    /// `g^i` for the designated generator `g`.
    pub fn exp(&self, i: u64) -> FieldElement {
        FieldElement(self.0.exp[(i % (self.0.size as u64 - 1).max(1)) as usize])
    }

    pub fn multiplicative_order(&self, x: FieldElement) -> Option<u64> {
        let l = self.log(x)? as u64;
        let n1 = (self.0.size - 1) as u64;
        Some(n1 / gcd(l, n1))
    }

    /// `x^{q^j}` where `q` is the order of a subfield.
    pub fn frobenius(&self, base_order: u32, x: FieldElement, j: u32) -> Result<FieldElement> {
        let e = self.subfield_degree(base_order)?;
        Ok(self.apply(Automorphism::new((e * j) % self.0.d), x))
    }

    /// Degree over F_p of the subfield of the given order.
    pub fn subfield_degree(&self, order: u32) -> Result<u32> {
        match log_base(self.0.p, order) {
            Some(e) if e >= 1 && self.0.d % e == 0 => Ok(e),
            _ => Err(Error::NotSubfield(order)),
        }
    }

    /// All automorphisms, as Frobenius powers 0..d.
    pub fn automorphisms(&self) -> Vec<Automorphism> {
        (0..self.0.d).map(Automorphism::new).collect()
    }

    pub fn check_automorphism(&self, a: Automorphism) -> Result<()> {
        if a.power < self.0.d {
            Ok(())
        } else {
            Err(Error::InvalidAutomorphism { power: a.power, degree: self.0.d })
        }
    }

    #[inline]
    pub fn apply(&self, a: Automorphism, x: FieldElement) -> FieldElement {
        if a.power == 0 || x.0 == 0 {
            return x;
        }
        let inner = &*self.0;
        let n1 = (inner.size - 1) as u64;
        let e = (inner.p as u64).pow(a.power) % n1;
        FieldElement(inner.exp[((inner.log[x.0 as usize] as u64 * e) % n1) as usize])
    }

    /// Table of `a` over all element codes.
    pub fn automorphism_table(&self, a: Automorphism) -> Vec<u32> {
        self.elements().map(|x| self.apply(a, x).0).collect()
    }

    pub fn is_prime_field_element(&self, x: FieldElement) -> bool {
        x.0 < self.0.p
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// An injective ring homomorphism between fields of the same characteristic,
/// determined by the image of the source's designated generator.
#[derive(Clone, Debug)]
pub struct FieldEmbedding {
    source: FieldSpec,
    target: FieldSpec,
    generator_image: FieldElement,
    table: Vec<u32>,
}

impl FieldEmbedding {
    pub fn new(source: &FieldSpec, target: &FieldSpec, generator_image: FieldElement) -> Result<Self> {
        if source.p() != target.p() || target.degree() % source.degree() != 0 {
            return Err(Error::InvalidEmbedding(format!("{:?} does not embed in {:?}", source, target)));
        }
        target.elem(generator_image.0)?;
        let n_src = (source.size() - 1) as u64;
        if target.multiplicative_order(generator_image) != Some(n_src) {
            return Err(Error::InvalidEmbedding(format!(
                "image {} does not have multiplicative order {}",
                generator_image.0, n_src
            )));
        }
        // the image must be a root of the generator's minimal polynomial
        let minpoly = minimal_polynomial(source, source.generator());
        let mut acc = FieldElement::ZERO;
        for &c in minpoly.iter().rev() {
            acc = target.add(target.mul(acc, generator_image), target.from_int(c));
        }
        if !acc.is_zero() {
            return Err(Error::InvalidEmbedding("image is not a conjugate of the source generator".into()));
        }
        let mut table = vec![0u32; source.size() as usize];
        for x in source.elements().skip(1) {
            let l = source.log(x).unwrap() as u64;
            table[x.0 as usize] = target.pow(generator_image, l).0;
        }
        Ok(FieldEmbedding { source: source.clone(), target: target.clone(), generator_image, table })
    }

    /// The embedding whose generator image is the first suitable power of the
    /// target generator.
    pub fn canonical(source: &FieldSpec, target: &FieldSpec) -> Result<Self> {
        if source.p() != target.p() || target.degree() % source.degree() != 0 {
            return Err(Error::InvalidEmbedding(format!("{:?} does not embed in {:?}", source, target)));
        }
        let n_src = (source.size() - 1) as u64;
        let n_tgt = (target.size() - 1) as u64;
        let step = n_tgt / n_src.max(1);
        for t in 1..=n_src.max(1) {
            if gcd(t, n_src.max(1)) != 1 {
                continue;
            }
            let cand = target.exp(step * t);
            if let Ok(e) = Self::new(source, target, cand) {
                return Ok(e);
            }
        }
        Err(Error::InvalidEmbedding("no conjugate of the source generator found".into()))
    }

    pub fn source(&self) -> &FieldSpec {
        &self.source
    }
    pub fn target(&self) -> &FieldSpec {
        &self.target
    }
    pub fn generator_image(&self) -> FieldElement {
        self.generator_image
    }

    #[inline]
    pub fn embed(&self, x: FieldElement) -> FieldElement {
        FieldElement(self.table[x.0 as usize])
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }
}

/// Minimal polynomial over F_p, little-endian, monic.
pub fn minimal_polynomial(f: &FieldSpec, x: FieldElement) -> Vec<u32> {
    let mut conj = vec![x];
    let mut y = f.apply(Automorphism::new(1), x);
    while y != x {
        conj.push(y);
        y = f.apply(Automorphism::new(1), y);
    }
    // product of (t - c) over conjugates, coefficients in f
    let mut poly = vec![FieldElement::ONE];
    for &c in &conj {
        let mut next = vec![FieldElement::ZERO; poly.len() + 1];
        for (i, &a) in poly.iter().enumerate() {
            next[i + 1] = f.add(next[i + 1], a);
            next[i] = f.sub(next[i], f.mul(a, c));
        }
        poly = next;
    }
    poly.iter().map(|c| c.0).collect()
}
