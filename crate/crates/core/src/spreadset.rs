//! F_q-subspaces of `M_n(F_{q^s})`, semifield spread sets and the seed sets
//! used to grow them one dimension at a time.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf::{Automorphism, FieldElement as Fe, FieldEmbedding, FieldSpec};
use crate::linalg::{rref_in_place, Mat};
use crate::params::CodeParams;
use crate::small;

/// An F_q-subspace of `M_n(F_{q^s})` given by an independent basis.
/// Equality is span equality.
#[derive(Clone, Debug)]
pub struct MatrixCode {
    params: Arc<CodeParams>,
    basis: Vec<Mat>,
    echelon: Vec<Vec<Fe>>,
}

impl PartialEq for MatrixCode {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.echelon == other.echelon
    }
}
impl Eq for MatrixCode {}

/// F_q coordinates of a matrix: entry `e` (row-major), digit `t` at `e·s + t`.
fn vectorize_over_base(params: &CodeParams, a: &[Fe]) -> Vec<Fe> {
    let s = params.s() as usize;
    let big = params.big();
    let mut v = Vec::with_capacity(a.len() * s);
    for &x in a {
        v.extend(big.digits(x).into_iter().map(Fe));
    }
    v
}

fn devectorize(params: &CodeParams, v: &[Fe]) -> Vec<Fe> {
    let s = params.s() as usize;
    let big = params.big();
    v.chunks_exact(s).map(|c| big.from_digits(&c.iter().map(|x| x.0).collect::<Vec<_>>())).collect()
}

fn echelon_rows(params: &CodeParams, basis: &[&[Fe]]) -> (Vec<Vec<Fe>>, usize) {
    let width = params.entries() * params.s() as usize;
    let mut data: Vec<Fe> = basis.iter().flat_map(|b| vectorize_over_base(params, b)).collect();
    let piv = rref_in_place(params.base(), basis.len(), width, &mut data);
    let rows = data.chunks_exact(width).take(piv.len()).map(|r| r.to_vec()).collect();
    (rows, piv.len())
}

impl MatrixCode {
    pub fn new(params: &Arc<CodeParams>, basis: Vec<Mat>) -> Result<Self> {
        let n = params.n();
        for b in &basis {
            if b.field() != params.big() {
                return Err(Error::FieldMismatch);
            }
            if b.rows() != n || b.cols() != n {
                return Err(Error::DimensionMismatch(format!("expected {n}x{n} matrices")));
            }
        }
        let flat: Vec<&[Fe]> = basis.iter().map(|b| b.data()).collect();
        let (echelon, rank) = echelon_rows(params, &flat);
        if rank < basis.len() {
            return Err(Error::Dependent);
        }
        Ok(MatrixCode { params: params.clone(), basis, echelon })
    }

    pub fn zero(params: &Arc<CodeParams>) -> Self {
        MatrixCode { params: params.clone(), basis: Vec::new(), echelon: Vec::new() }
    }

    pub fn params(&self) -> &Arc<CodeParams> {
        &self.params
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }
    pub(crate) fn basis_flat(&self) -> Vec<&[Fe]> {
        self.basis.iter().map(|b| b.data()).collect()
    }

    /// All `q^k` span elements, flattened row-major.
    pub fn span_flat(&self) -> Vec<Fe> {
        let p = &self.params;
        small::span(p.big(), p.q(), p.n(), &self.basis_flat())
    }

    pub fn elements(&self) -> Vec<Mat> {
        let n = self.params.n();
        self.span_flat()
            .chunks_exact(n * n)
            .map(|c| Mat::from_vec(self.params.big(), n, n, c.to_vec()).unwrap())
            .collect()
    }

    pub fn contains(&self, a: &Mat) -> bool {
        let mut flat = self.basis_flat();
        flat.push(a.data());
        echelon_rows(&self.params, &flat).1 == self.dim()
    }

    pub fn extend(&self, a: &Mat) -> Result<MatrixCode> {
        let mut basis = self.basis.clone();
        basis.push(a.clone());
        MatrixCode::new(&self.params, basis)
    }

    /// True iff every nonzero span element is invertible.
    pub fn is_semifield_code(&self) -> bool {
        let n = self.params.n();
        let f = self.params.big();
        self.span_flat().chunks_exact(n * n).skip(1).all(|m| !small::det(f, n, m).is_zero())
    }

    /// Checks `⟨self, a⟩` assuming `self` already passes. Only the coset
    /// `a + self` needs testing: other new elements are F_q-multiples of it.
    pub fn is_semifield_extension(&self, a: &Mat) -> bool {
        let n = self.params.n();
        let f = self.params.big();
        let nn = n * n;
        let mut buf = vec![Fe::ZERO; nn];
        self.span_flat().chunks_exact(nn).all(|m| {
            small::add_into(f, m, a.data(), &mut buf);
            !small::det(f, n, &buf).is_zero()
        })
    }

    /// Reduced echelon basis of the F_q-vectorization.
    pub fn echelon_basis(&self) -> MatrixCode {
        let n = self.params.n();
        let basis = self
            .echelon
            .iter()
            .map(|r| Mat::from_vec(self.params.big(), n, n, devectorize(&self.params, r)).unwrap())
            .collect();
        MatrixCode { params: self.params.clone(), basis, echelon: self.echelon.clone() }
    }

    /// Full spread sets get the basis whose `(i + js)`-th member has first row
    /// `θ^i e_j`; smaller codes get their echelon basis.
    pub fn canonical_basis(&self) -> Result<MatrixCode> {
        let p = &self.params;
        if self.dim() < p.full_dim() {
            return Ok(self.echelon_basis());
        }
        let idx = self.first_row_index()?;
        let n = p.n();
        let basis = (0..p.full_dim())
            .map(|k| {
                let row = seed_first_row(p, k);
                idx.lookup(&row).cloned().ok_or_else(|| Error::NotSpreadSet("first-row map is not onto".into()))
            })
            .collect::<Result<Vec<Mat>>>()?;
        debug_assert!(basis.iter().all(|b| b.rows() == n));
        MatrixCode::new(p, basis)
    }

    pub fn first_row_index(&self) -> Result<FirstRowIndex> {
        let n = self.params.n();
        let mut map = HashMap::new();
        for m in self.elements() {
            let key: Vec<Fe> = m.row(0).to_vec();
            if map.insert(key, m).is_some() {
                return Err(Error::DuplicateFirstRow);
            }
        }
        Ok(FirstRowIndex { n, map })
    }

    /// `{X A^ρ Y : A ∈ C}`
    pub fn transform(&self, x: &Mat, y: &Mat, rho: Automorphism) -> Result<MatrixCode> {
        let basis = self
            .basis
            .iter()
            .map(|a| x.mul(&a.map_entries(rho)?)?.mul(y))
            .collect::<Result<Vec<_>>>()?;
        MatrixCode::new(&self.params, basis)
    }
}

/// First-row lookup over a whole code.
pub struct FirstRowIndex {
    n: usize,
    map: HashMap<Vec<Fe>, Mat>,
}

impl FirstRowIndex {
    pub fn len(&self) -> usize {
        self.map.len()
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
    pub fn lookup(&self, row: &[Fe]) -> Option<&Mat> {
        if row.len() != self.n {
            return None;
        }
        self.map.get(row)
    }
}

/// `θ^i e_j` for seed index `k = i + j·s` (0-based).
pub fn seed_first_row(params: &CodeParams, k: usize) -> Vec<Fe> {
    let s = params.s() as usize;
    let (i, j) = (k % s, k / s);
    let mut row = vec![Fe::ZERO; params.n()];
    row[j] = params.big().pow(params.big().theta(), i as u64);
    row
}

/// The sets `S_1..S_{ns}` of invertible matrices with prescribed first rows.
/// `S_k` (1-based) has first row `θ^i e_j` with `k = i + (j−1)s + 1`.
#[derive(Clone, Debug)]
pub struct SeedSets {
    params: Arc<CodeParams>,
    sets: Vec<Vec<Vec<Fe>>>,
}

impl SeedSets {
    /// Each set lists its matrices with the lower rows read as a base-|F|
    /// number, most significant entry first, in increasing order.
    pub fn new(params: &Arc<CodeParams>) -> Self {
        let n = params.n();
        let f = params.big();
        let nsize = f.size() as u64;
        let rest = (n - 1) * n;
        let total = nsize.pow(rest as u32);
        let sets = (0..params.full_dim())
            .map(|k| {
                let row = seed_first_row(params, k);
                let mut out = Vec::new();
                let mut m = vec![Fe::ZERO; n * n];
                m[..n].copy_from_slice(&row);
                for t in 0..total {
                    let mut x = t;
                    for e in (0..rest).rev() {
                        m[n + e] = Fe((x % nsize) as u32);
                        x /= nsize;
                    }
                    if small::rank(f, n, &m) == n {
                        out.push(m.clone());
                    }
                }
                out
            })
            .collect();
        SeedSets { params: params.clone(), sets }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Members of `S_{k+1}` (0-based `k`), flattened matrices.
    pub fn set(&self, k: usize) -> &[Vec<Fe>] {
        &self.sets[k]
    }

    pub fn set_mats(&self, k: usize) -> Vec<Mat> {
        let n = self.params.n();
        self.sets[k].iter().map(|m| Mat::from_vec(self.params.big(), n, n, m.clone()).unwrap()).collect()
    }

    pub fn params(&self) -> &Arc<CodeParams> {
        &self.params
    }
}

/// Spread set `{R_y}` of a product on `(F_{q^s})^n` that is F_q-bilinear and
/// F_{q^s}-linear on the left. `R_y` has rows `e_r ⋆ y`, so `x ⋆ y = x R_y`.
pub fn spread_from_mult<F>(params: &Arc<CodeParams>, mult: F) -> Result<MatrixCode>
where
    F: Fn(&[Fe], &[Fe]) -> Vec<Fe>,
{
    let n = params.n();
    let f = params.big();
    let unit = |j: usize, c: Fe| {
        let mut v = vec![Fe::ZERO; n];
        v[j] = c;
        v
    };
    let mut basis = Vec::with_capacity(params.full_dim());
    for k in 0..params.full_dim() {
        let y = seed_first_row(params, k);
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            let row = mult(&unit(r, Fe::ONE), &y);
            if row.len() != n {
                return Err(Error::DimensionMismatch("product has the wrong length".into()));
            }
            data.extend(row);
        }
        for r in 0..n {
            for i in 0..params.s() as u64 {
                let lam = f.pow(f.theta(), i);
                let lhs = mult(&unit(r, lam), &y);
                let rhs: Vec<Fe> = data[r * n..(r + 1) * n].iter().map(|&x| f.mul(lam, x)).collect();
                if lhs != rhs {
                    return Err(Error::NotLeftLinear);
                }
            }
        }
        basis.push(Mat::from_vec(f, n, n, data)?);
    }
    let code = MatrixCode::new(params, basis).map_err(|e| match e {
        Error::Dependent => Error::ZeroDivisor,
        other => other,
    })?;
    if !code.is_semifield_code() {
        return Err(Error::ZeroDivisor);
    }
    Ok(code)
}

/// A product `g` on F_{q^{ns}} written in coordinates over F_{q^s} with
/// respect to `1, ω, …, ω^{n−1}`, ω the root of the F_{q^{ns}} modulus.
pub fn extension_product<G>(params: &Arc<CodeParams>, g: G) -> Result<impl Fn(&[Fe], &[Fe]) -> Vec<Fe>>
where
    G: Fn(&FieldSpec, Fe, Fe) -> Fe,
{
    let n = params.n();
    let small_f = params.big().clone();
    let large = FieldSpec::new(params.q(), params.s() * n as u32, None)?;
    let emb = FieldEmbedding::canonical(&small_f, &large)?;
    let omega = large.theta();
    let opow: Vec<Fe> = (0..n as u64).map(|r| large.pow(omega, r)).collect();
    let to_large = {
        let large = large.clone();
        move |x: &[Fe]| x.iter().zip(&opow).fold(Fe::ZERO, |acc, (&c, &w)| large.add(acc, large.mul(emb.embed(c), w)))
    };
    let mut coords = vec![Vec::new(); large.size() as usize];
    let nsize = small_f.size() as u64;
    for t in 0..nsize.pow(n as u32) {
        let mut x = t;
        let v: Vec<Fe> = (0..n)
            .map(|_| {
                let c = Fe((x % nsize) as u32);
                x /= nsize;
                c
            })
            .collect();
        let z = to_large(&v);
        if !coords[z.0 as usize].is_empty() {
            return Err(Error::InvalidEmbedding("powers of ω are dependent".into()));
        }
        coords[z.0 as usize] = v;
    }
    Ok(move |x: &[Fe], y: &[Fe]| coords[g(&large, to_large(x), to_large(y)).0 as usize].clone())
}

pub fn field_mult(params: &Arc<CodeParams>) -> Result<impl Fn(&[Fe], &[Fe]) -> Vec<Fe>> {
    extension_product(params, |l, x, y| l.mul(x, y))
}

/// The spread set of the field F_{q^{ns}}.
pub fn desarguesian(params: &Arc<CodeParams>) -> Result<MatrixCode> {
    spread_from_mult(params, field_mult(params)?)
}

/// Spread set of the twisted field `x ⋆ y = xy − c x^{q^s} y^{q^t}` on
/// F_{q^{ns}}, where `c` is a code in F_{q^{ns}}. Fails with
/// [`Error::ZeroDivisor`] when `c` is a value of `x^{q^s−1} y^{q^t−1}`.
pub fn twisted_field(params: &Arc<CodeParams>, c: u32, t: u32) -> Result<MatrixCode> {
    let (q, s) = (params.q(), params.s());
    let mult = extension_product(params, move |l, x, y| {
        let xs = l.frobenius(q, x, s).expect("q is the prime subfield order");
        let yt = l.frobenius(q, y, t).expect("q is the prime subfield order");
        l.sub(l.mul(x, y), l.mul(Fe(c), l.mul(xs, yt)))
    })?;
    spread_from_mult(params, mult)
}

/// The first `c` (in code order) for which [`twisted_field`] is a semifield.
pub fn first_twisted_field(params: &Arc<CodeParams>, t: u32) -> Result<MatrixCode> {
    let size = (params.q() as u64).pow(params.s() * params.n() as u32) as u32;
    for c in 1..size {
        match twisted_field(params, c, t) {
            Ok(code) => return Ok(code),
            Err(Error::ZeroDivisor) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ZeroDivisor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_set_sizes() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let s = SeedSets::new(&p);
        assert_eq!(s.len(), 8);
        for k in 0..8 {
            assert_eq!(s.set(k).len(), 240);
            let row = seed_first_row(&p, k);
            for m in s.set(k) {
                assert_eq!(&m[..2], &row[..]);
                assert_eq!(small::rank(p.big(), 2, m), 2);
            }
        }
        // the first member of S_1 is the identity
        assert_eq!(s.set(0)[0], small::identity(2));
    }

    #[test]
    fn seed_sets_n1() {
        let p = CodeParams::new(2, 1, 4).unwrap();
        let s = SeedSets::new(&p);
        for k in 0..4 {
            assert_eq!(s.set(k), &[vec![p.big().pow(p.big().theta(), k as u64)]]);
        }
    }

    #[test]
    fn desarguesian_is_semifield() {
        for (n, s) in [(2usize, 1u32), (2, 2), (2, 4), (3, 1), (1, 4)] {
            let p = CodeParams::new(2, n, s).unwrap();
            let c = desarguesian(&p).unwrap();
            assert_eq!(c.dim(), n * s as usize);
            assert!(c.is_semifield_code());
        }
    }

    #[test]
    fn f4_over_f2() {
        let p = CodeParams::new(2, 2, 1).unwrap();
        let c = desarguesian(&p).unwrap();
        assert_eq!(c.dim(), 2);
        // R_1 = I; R_ω is the matrix of x ↦ xω in the basis {1, ω}, ω^2 = ω + 1
        assert_eq!(c.basis()[0].codes(), vec![1, 0, 0, 1]);
        assert_eq!(c.basis()[1].codes(), vec![0, 1, 1, 1]);
    }

    #[test]
    fn zero_divisor_detected() {
        let p = CodeParams::new(2, 2, 2).unwrap();
        let f = p.big().clone();
        // componentwise product has zero divisors
        let r = spread_from_mult(&p, |x: &[Fe], y: &[Fe]| vec![f.mul(x[0], y[0]), f.mul(x[1], y[1])]);
        assert!(matches!(r, Err(Error::ZeroDivisor)));
    }

    #[test]
    fn left_linearity_violation() {
        let p = CodeParams::new(2, 2, 2).unwrap();
        let f = p.big().clone();
        let frob = Automorphism::new(1);
        let r = spread_from_mult(&p, |x: &[Fe], y: &[Fe]| {
            vec![f.mul(f.apply(frob, x[0]), y[0]), f.mul(f.apply(frob, x[1]), y[1])]
        });
        assert!(matches!(r, Err(Error::NotLeftLinear)));
    }

    #[test]
    fn twisted_field_is_semifield() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let c = first_twisted_field(&p, 2).unwrap();
        assert!(c.is_semifield_code());
        assert_eq!(c.dim(), 8);
        // x^16 y^4 only avoids a subgroup of index 3
        assert!(matches!(twisted_field(&p, 1, 2), Err(Error::ZeroDivisor)));
    }

    #[test]
    fn rank_one_span_is_not_semifield() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let f = p.big();
        let i = Mat::identity(f, 2);
        let e11 = Mat::from_codes(f, 2, 2, &[1, 0, 0, 0]).unwrap();
        let c = MatrixCode::new(&p, vec![i.clone(), i.add(&e11).unwrap()]).unwrap();
        assert!(!c.is_semifield_code());
        let c1 = MatrixCode::new(&p, vec![i]).unwrap();
        assert!(!c1.is_semifield_extension(&Mat::from_codes(f, 2, 2, &[0, 0, 0, 1]).unwrap()));
    }

    #[test]
    fn canonical_basis_desarguesian() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let c = desarguesian(&p).unwrap();
        let cb = c.canonical_basis().unwrap();
        assert_eq!(cb.canonical_basis().unwrap().basis(), cb.basis());
        for (k, b) in cb.basis().iter().enumerate() {
            assert_eq!(b.row(0), &seed_first_row(&p, k)[..]);
        }
        // right multiplication by θ^i on F_256 ⊇ F_16 is diag(θ^i, θ^i)
        let f = p.big();
        for i in 0..4u64 {
            let t = f.pow(f.theta(), i);
            assert_eq!(cb.basis()[i as usize], Mat::diag(f, &[t, t]));
        }
        let idx = c.first_row_index().unwrap();
        assert_eq!(idx.len(), 256);
        for m in c.elements() {
            assert_eq!(idx.lookup(m.row(0)), Some(&m));
        }
    }

    #[test]
    fn canonical_basis_is_span_invariant() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let c = desarguesian(&p).unwrap();
        let mut b = c.basis().to_vec();
        b.reverse();
        b[0] = b[0].add(&b[3]).unwrap();
        let c2 = MatrixCode::new(&p, b).unwrap();
        assert_eq!(c, c2);
        assert_eq!(c.canonical_basis().unwrap().basis(), c2.canonical_basis().unwrap().basis());
    }

    #[test]
    fn canonical_basis_requires_spread_set() {
        let p = CodeParams::new(2, 2, 1).unwrap();
        let f = p.big();
        let c = MatrixCode::new(
            &p,
            vec![Mat::from_codes(f, 2, 2, &[1, 0, 0, 0]).unwrap(), Mat::from_codes(f, 2, 2, &[0, 0, 1, 0]).unwrap()],
        )
        .unwrap();
        assert!(c.canonical_basis().is_err());
    }

    #[test]
    fn dependent_basis_rejected() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let i = Mat::identity(p.big(), 2);
        assert!(matches!(MatrixCode::new(&p, vec![i.clone(), i]), Err(Error::Dependent)));
    }
}
