//! Decision procedures for equivalence of matrix codes under
//! `C ↦ X C^ρ Y` and of vector codes under `D ↦ D^ρ Q`, plus an exhaustive
//! oracle for tiny parameters.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::gf::{Automorphism, FieldElement as Fe, FieldSpec};
use crate::invariants::VectorCode;
use crate::linalg::{nullspace, Mat};
use crate::small::{self, FirstRowLookup};
use crate::spreadset::MatrixCode;

/// Largest `|GL(n, q^s)|² · |Aut|` the brute-force oracle accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000_000;
/// Largest nullspace (in bits) enumerated by the vector-code decider.
const MAX_NULLSPACE_BITS: u32 = 26;

/// `{X A^ρ Y : A ∈ C} = C′`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixEquivWitness {
    pub x: Mat,
    pub y: Mat,
    pub rho: Automorphism,
}

impl MatrixEquivWitness {
    pub fn verify(&self, c: &MatrixCode, c2: &MatrixCode) -> Result<bool> {
        if !self.x.is_invertible() || !self.y.is_invertible() {
            return Ok(false);
        }
        Ok(&c.transform(&self.x, &self.y, self.rho)? == c2)
    }

    /// Witness for the reverse direction.
    pub fn inverse(&self) -> Result<MatrixEquivWitness> {
        let d = self.x.field().degree();
        let rho_inv = self.rho.inverse(d);
        Ok(MatrixEquivWitness {
            x: self.x.inverse()?.map_entries(rho_inv)?,
            y: self.y.inverse()?.map_entries(rho_inv)?,
            rho: rho_inv,
        })
    }
}

/// `{v^ρ Q : v ∈ D} = E` with `Q` invertible over the prime field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorEquivWitness {
    pub q: Mat,
    pub rho: Automorphism,
}

impl VectorEquivWitness {
    pub fn verify(&self, d: &VectorCode, e: &VectorCode) -> Result<bool> {
        if !self.q.is_invertible() {
            return Ok(false);
        }
        Ok(&apply_vector_map(d, self.rho, &self.q)? == e)
    }
}

/// `D^ρ Q`
pub fn apply_vector_map(d: &VectorCode, rho: Automorphism, q: &Mat) -> Result<VectorCode> {
    let f = d.field();
    let k = d.length();
    if q.rows() != k || q.cols() != k || q.field().p() != f.p() || q.field().degree() != 1 {
        return Err(Error::DimensionMismatch(format!("Q must be {k}x{k} over the prime field")));
    }
    let rows: Vec<Vec<Fe>> = d
        .generator()
        .iter()
        .map(|row| {
            let row: Vec<Fe> = row.iter().map(|&x| f.apply(rho, x)).collect();
            (0..k)
                .map(|b| (0..k).fold(Fe::ZERO, |acc, a| f.add(acc, f.mul(row[a], q.get(a, b)))))
                .collect()
        })
        .collect();
    VectorCode::from_rows(f, d.base_order(), k, &rows)
}

fn check_params(c: &MatrixCode, c2: &MatrixCode) -> Result<()> {
    if c.params() != c2.params() {
        return Err(Error::ParameterMismatch("codes live in different matrix spaces".into()));
    }
    if c.dim() != c2.dim() {
        return Err(Error::ParameterMismatch(format!("dimensions {} and {} differ", c.dim(), c2.dim())));
    }
    Ok(())
}

/// Complete decision of `C ≅ C′`. All-invertible codes use a conjugacy
/// search; other codes fall back to [`brute_force_matrix_equiv_witness`].
pub fn matrix_code_equivalent(c: &MatrixCode, c2: &MatrixCode) -> Result<Option<MatrixEquivWitness>> {
    check_params(c, c2)?;
    let f = c.params().big();
    let n = c.params().n();
    if c.dim() == 0 {
        return Ok(Some(MatrixEquivWitness {
            x: Mat::identity(f, n),
            y: Mat::identity(f, n),
            rho: Automorphism::IDENTITY,
        }));
    }
    match (c.is_semifield_code(), c2.is_semifield_code()) {
        (true, true) => {
            let target = EquivTarget::new(c2)?;
            target.test(c)
        }
        (false, false) => brute_force_matrix_equiv_witness(c, c2),
        _ => Ok(None),
    }
}

/// Preprocessed right-hand side `C′` of the conjugacy search, reusable
/// across many tests against the same code.
pub struct EquivTarget {
    code: MatrixCode,
    b0: Vec<Fe>,
    /// elements of `C′ B0⁻¹`, flattened, index `Σ c_i q^i`
    elems: Vec<Fe>,
    lookup: FirstRowLookup,
    /// element indices grouped by determinant code
    by_det: Vec<Vec<u32>>,
    /// indices of one nonzero element per F_q-line
    lines: Vec<u32>,
}

impl EquivTarget {
    /// `c2` must have all nonzero elements invertible.
    pub fn new(c2: &MatrixCode) -> Result<Self> {
        let p = c2.params();
        let (f, n, q) = (p.big(), p.n(), p.q());
        if c2.dim() == 0 {
            return Err(Error::NotSpreadSet("zero code".into()));
        }
        let b0 = c2.basis()[0].data().to_vec();
        let b0i = small::inverse(f, n, &b0).ok_or(Error::Singular)?;
        let basis: Vec<Vec<Fe>> = c2.basis().iter().map(|b| small::mul(f, n, b.data(), &b0i)).collect();
        let refs: Vec<&[Fe]> = basis.iter().map(|b| b.as_slice()).collect();
        let elems = small::span(f, q, n, &refs);
        let lookup = FirstRowLookup::build(f, n, &elems)
            .ok_or_else(|| Error::NotSpreadSet("nonzero singular element".into()))?;
        let nn = n * n;
        let mut by_det = vec![Vec::new(); f.size() as usize];
        for (i, e) in elems.chunks_exact(nn).enumerate().skip(1) {
            by_det[small::det(f, n, e).0 as usize].push(i as u32);
        }
        let lines = (1..elems.len() / nn).filter(|&i| lowest_digit(i, q as usize) == 1).map(|i| i as u32).collect();
        Ok(EquivTarget { code: c2.clone(), b0, elems, lookup, by_det, lines })
    }

    pub fn code(&self) -> &MatrixCode {
        &self.code
    }

    fn elem(&self, i: usize, nn: usize) -> &[Fe] {
        &self.elems[i * nn..(i + 1) * nn]
    }

    fn contains(&self, m: &[Fe], nn: usize) -> bool {
        let n = self.code.params().n();
        self.lookup.get(&m[..n]).is_some_and(|i| self.elem(i, nn) == m)
    }

    /// Searches for `X, Y, ρ` with `X C^ρ Y = C′`. `c` must be all-invertible.
    pub fn test(&self, c: &MatrixCode) -> Result<Option<MatrixEquivWitness>> {
        check_params(c, &self.code)?;
        let p = c.params();
        let (f, n, q) = (p.big(), p.n(), p.q());
        let nn = n * n;
        let a0 = c.basis()[0].data();
        let a0i = small::inverse(f, n, a0).ok_or(Error::Singular)?;
        let cn: Vec<Vec<Fe>> = c.basis().iter().map(|a| small::mul(f, n, a.data(), &a0i)).collect();

        for rho in f.automorphisms() {
            let basis: Vec<Vec<Fe>> = cn.iter().map(|a| small::apply_aut(f, rho, a)).collect();
            if let Some((x, b)) = self.search_conjugator(f, n, q, nn, &basis)? {
                // Y = (A0^ρ)⁻¹ X⁻¹ B B0
                let a0r_inv = small::apply_aut(f, rho, &a0i);
                let xi = small::inverse(f, n, &x).ok_or(Error::Singular)?;
                let bb0 = small::mul(f, n, &b, &self.b0);
                let y = small::mul(f, n, &small::mul(f, n, &a0r_inv, &xi), &bb0);
                let w = MatrixEquivWitness {
                    x: Mat::from_vec(f, n, n, x)?,
                    y: Mat::from_vec(f, n, n, y)?,
                    rho,
                };
                debug_assert!(w.verify(c, &self.code)?);
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    /// Finds `X` and `B ∈ C′B0⁻¹` with `X ⟨basis⟩ X⁻¹ B = C′B0⁻¹`.
    fn search_conjugator(
        &self,
        f: &FieldSpec,
        n: usize,
        q: u32,
        nn: usize,
        basis: &[Vec<Fe>],
    ) -> Result<Option<(Vec<Fe>, Vec<Fe>)>> {
        let refs: Vec<&[Fe]> = basis.iter().map(|b| b.as_slice()).collect();
        let src = small::span(f, q, n, &refs);
        // anchor: a non-scalar element whose (det, trace) class is rarest
        let mut classes: std::collections::HashMap<(u32, u32), u32> = std::collections::HashMap::new();
        for e in src.chunks_exact(nn).skip(1) {
            *classes.entry((small::det(f, n, e).0, small::trace(f, n, e).0)).or_insert(0) += 1;
        }
        let anchor = src
            .chunks_exact(nn)
            .skip(1)
            .filter(|e| !small::is_scalar(n, e))
            .min_by_key(|e| classes[&(small::det(f, n, e).0, small::trace(f, n, e).0)]);

        let mut buf = vec![Fe::ZERO; nn];
        let mut buf2 = vec![Fe::ZERO; nn];
        for &bi in &self.lines {
            let b = self.elem(bi as usize, nn);
            let Some(anchor) = anchor else {
                // scalar source: X = I works iff every A_i B lies in the target
                let ok = basis.iter().all(|a| {
                    small::mul_into(f, n, a, b, &mut buf);
                    self.contains(&buf, nn)
                });
                if ok {
                    return Ok(Some((small::identity(n), b.to_vec())));
                }
                continue;
            };
            let binv = small::inverse(f, n, b).ok_or(Error::Singular)?;
            let want_det = f.mul(small::det(f, n, anchor), small::det(f, n, b));
            let want_tr = small::trace(f, n, anchor);
            for &ei in &self.by_det[want_det.0 as usize] {
                let e = self.elem(ei as usize, nn);
                if small::trace_of_product(f, n, e, &binv) != want_tr {
                    continue;
                }
                let a2 = small::mul(f, n, e, &binv);
                // X · anchor = a2 · X
                let sols = conjugators(f, n, anchor, &a2);
                if sols.is_empty() {
                    continue;
                }
                let found = for_each_projective(f, &sols, |x| {
                    let Some(xi) = small::inverse(f, n, x) else { return false };
                    basis.iter().all(|a| {
                        small::mul_into(f, n, x, a, &mut buf);
                        small::mul_into(f, n, &buf, &xi, &mut buf2);
                        small::mul_into(f, n, &buf2, b, &mut buf);
                        self.contains(&buf, nn)
                    })
                });
                if let Some(x) = found {
                    return Ok(Some((x, b.to_vec())));
                }
            }
        }
        Ok(None)
    }
}

fn lowest_digit(mut i: usize, q: usize) -> usize {
    while i % q == 0 {
        i /= q;
    }
    i % q
}

/// Basis of `{X : X A = A′ X}` as flattened matrices.
fn conjugators(f: &FieldSpec, n: usize, a: &[Fe], a2: &[Fe]) -> Vec<Vec<Fe>> {
    let nn = n * n;
    let mut sys = vec![Fe::ZERO; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let row = &mut sys[(i * n + j) * nn..(i * n + j + 1) * nn];
            for l in 0..n {
                // (X A)_ij = Σ_l x_il a_lj ;  (A′ X)_ij = Σ_l a′_il x_lj
                row[i * n + l] = f.add(row[i * n + l], a[l * n + j]);
                row[l * n + j] = f.sub(row[l * n + j], a2[i * n + l]);
            }
        }
    }
    nullspace(f, nn, nn, &sys)
}

/// Calls `check` on one vector per line of the span of `basis` (leading
/// coefficient 1) until it returns true.
fn for_each_projective<F>(f: &FieldSpec, basis: &[Vec<Fe>], mut check: F) -> Option<Vec<Fe>>
where
    F: FnMut(&[Fe]) -> bool,
{
    let d = basis.len();
    let size = f.size() as u64;
    let len = basis[0].len();
    let mut v = vec![Fe::ZERO; len];
    for lead in 0..d {
        let count = size.pow((d - lead - 1) as u32);
        for t in 0..count {
            v.copy_from_slice(&basis[lead]);
            let mut x = t;
            for row in &basis[lead + 1..] {
                let c = Fe((x % size) as u32);
                x /= size;
                if !c.is_zero() {
                    small::scale_add_into(f, c, row, &mut v);
                }
            }
            if check(&v) {
                return Some(v);
            }
        }
    }
    None
}

/// Invertible `n × n` matrices over `f`, flattened, in code order.
pub fn general_linear_group(f: &FieldSpec, n: usize) -> Result<Vec<Vec<Fe>>> {
    let size = f.size() as u64;
    let total = size
        .checked_pow((n * n) as u32)
        .filter(|&t| t <= 1 << 26)
        .ok_or_else(|| Error::GuardExceeded("matrix space too large to enumerate".into()))?;
    let mut out = Vec::new();
    let mut m = vec![Fe::ZERO; n * n];
    for t in 0..total {
        let mut x = t;
        for e in m.iter_mut().rev() {
            *e = Fe((x % size) as u32);
            x /= size;
        }
        if small::rank(f, n, &m) == n {
            out.push(m.clone());
        }
    }
    Ok(out)
}

/// Exhaustive search over `GL(n, q^s)² × Aut(F_{q^s})`.
pub fn brute_force_matrix_equiv_witness(c: &MatrixCode, c2: &MatrixCode) -> Result<Option<MatrixEquivWitness>> {
    check_params(c, c2)?;
    let p = c.params();
    let (f, n) = (p.big(), p.n());
    let nn = n * n;
    let auts = f.automorphisms();
    // |GL(n, Q)| = Π (Q^n − Q^i)
    let qn = (f.size() as u128).pow(n as u32);
    let gl: u128 = (0..n as u32).map(|i| qn - (f.size() as u128).pow(i)).product();
    if gl * gl * auts.len() as u128 > BRUTE_FORCE_LIMIT as u128 {
        return Err(Error::GuardExceeded(format!("|GL|² · |Aut| = {} exceeds {BRUTE_FORCE_LIMIT}", gl * gl * auts.len() as u128)));
    }
    let group = general_linear_group(f, n)?;
    let target: HashSet<Vec<Fe>> = c2.span_flat().chunks_exact(nn).map(|e| e.to_vec()).collect();
    let mut buf = vec![Fe::ZERO; nn];
    let mut buf2 = vec![Fe::ZERO; nn];
    for rho in auts {
        let basis: Vec<Vec<Fe>> = c.basis().iter().map(|a| small::apply_aut(f, rho, a.data())).collect();
        for x in &group {
            let xa: Vec<Vec<Fe>> = basis.iter().map(|a| small::mul(f, n, x, a)).collect();
            for y in &group {
                let ok = xa.iter().all(|m| {
                    small::mul_into(f, n, m, y, &mut buf);
                    buf2.copy_from_slice(&buf);
                    target.contains(&buf2)
                });
                if ok {
                    return Ok(Some(MatrixEquivWitness {
                        x: Mat::from_vec(f, n, n, x.clone())?,
                        y: Mat::from_vec(f, n, n, y.clone())?,
                        rho,
                    }));
                }
            }
        }
    }
    Ok(None)
}

pub fn brute_force_matrix_equiv(c: &MatrixCode, c2: &MatrixCode) -> Result<bool> {
    Ok(brute_force_matrix_equiv_witness(c, c2)?.is_some())
}

/// Complete decision of `D ≅ E` with a rank-weight distribution pre-check.
pub fn vector_code_equivalent(d: &VectorCode, e: &VectorCode) -> Result<Option<VectorEquivWitness>> {
    vector_code_equivalent_with(d, e, false)
}

/// For each `ρ`, the `Q` with `D^ρ Q ⊆ E` form an F_q-space cut out by
/// `G_D^ρ Q H_Eᵀ = 0`; an invertible member is searched for by enumeration.
pub(crate) fn vector_code_equivalent_with(
    d: &VectorCode,
    e: &VectorCode,
    skip_distribution: bool,
) -> Result<Option<VectorEquivWitness>> {
    if d.field() != e.field() || d.length() != e.length() || d.base_order() != e.base_order() {
        return Err(Error::ParameterMismatch("vector codes differ in field or length".into()));
    }
    let f = d.field();
    let k = d.length();
    let r = d.dim();
    let base = FieldSpec::new(f.p(), 1, None)?;
    if r != e.dim() {
        return Ok(None);
    }
    if r == 0 || r == k {
        return Ok(Some(VectorEquivWitness { q: Mat::identity(&base, k), rho: Automorphism::IDENTITY }));
    }
    if !skip_distribution && d.rank_weight_distribution()? != e.rank_weight_distribution()? {
        return Ok(None);
    }
    let ge: Vec<Fe> = e.generator().iter().flatten().copied().collect();
    let h = nullspace(f, r, k, &ge);
    let s = f.degree() as usize;
    let cols = k * k;
    for rho in f.automorphisms() {
        let g: Vec<Vec<Fe>> = d.generator().iter().map(|row| row.iter().map(|&x| f.apply(rho, x)).collect()).collect();
        // Σ_{a,b} G_ia H_jb Q_ab = 0, split into F_q digits
        let mut sys = Vec::with_capacity(r * h.len() * s * cols);
        for gi in &g {
            for hj in &h {
                let coeffs: Vec<Vec<u32>> = (0..cols).map(|ab| f.digits(f.mul(gi[ab / k], hj[ab % k]))).collect();
                for t in 0..s {
                    sys.extend(coeffs.iter().map(|c| Fe(c[t])));
                }
            }
        }
        let rows = sys.len() / cols;
        let sols = nullspace(&base, rows, cols, &sys);
        if sols.is_empty() {
            continue;
        }
        let bits = sols.len() as f64 * (base.size() as f64).log2();
        if bits > MAX_NULLSPACE_BITS as f64 {
            return Err(Error::GuardExceeded(format!("vector equivalence nullspace of dimension {}", sols.len())));
        }
        if let Some(q) = find_invertible(&base, k, &sols) {
            let w = VectorEquivWitness { q: Mat::from_vec(&base, k, k, q)?, rho };
            debug_assert!(w.verify(d, e)?);
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// An invertible `k × k` matrix in the span of `sols` (flattened row-major).
fn find_invertible(base: &FieldSpec, k: usize, sols: &[Vec<Fe>]) -> Option<Vec<Fe>> {
    if base.p() == 2 && k <= 64 {
        let pack = |v: &[Fe]| -> Vec<u64> {
            (0..k).map(|a| (0..k).fold(0u64, |acc, b| acc | ((v[a * k + b].0 as u64) << b))).collect()
        };
        let packed: Vec<Vec<u64>> = sols.iter().map(|v| pack(v)).collect();
        let mut cur = vec![0u64; k];
        let total = 1u64 << sols.len();
        for i in 1..total {
            for (c, x) in cur.iter_mut().zip(&packed[i.trailing_zeros() as usize]) {
                *c ^= x;
            }
            if bit_rank(&cur) == k {
                let mut out = vec![Fe::ZERO; k * k];
                for a in 0..k {
                    for b in 0..k {
                        out[a * k + b] = Fe(((cur[a] >> b) & 1) as u32);
                    }
                }
                return Some(out);
            }
        }
        return None;
    }
    let p = base.size() as u64;
    let total = p.pow(sols.len() as u32);
    let mut v = vec![Fe::ZERO; k * k];
    for t in 1..total {
        v.fill(Fe::ZERO);
        let mut x = t;
        for s in sols {
            let c = Fe((x % p) as u32);
            x /= p;
            if !c.is_zero() {
                small::scale_add_into(base, c, s, &mut v);
            }
        }
        if small::rank(base, k, &v) == k {
            return Some(v);
        }
    }
    None
}

fn bit_rank(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::with_capacity(rows.len());
    for &r in rows {
        let mut x = r;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x == 0 {
            return basis.len();
        }
        basis.push(x);
        basis.sort_unstable_by(|a, b| b.cmp(a));
    }
    basis.len()
}
