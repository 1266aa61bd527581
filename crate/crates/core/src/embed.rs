//! The embedding chain `M_n(F_{q^s}) → M_{ns}(F_q) → M_{ns}(F_{q^m})` and the
//! diagonal form that turns `φ̄(A)` into `A ⊕ A^σ ⊕ … ⊕ A^{σ^{s−1}}`.

use crate::error::{Error, Result};
use crate::gf::{Automorphism, FieldElement, FieldSpec};
use crate::linalg::Mat;

/// Regular representation of F_{q^s} over its prime field F_q, with respect
/// to the power basis `1, θ, …, θ^{s−1}`.
#[derive(Clone, Debug)]
pub struct RegularRep {
    big: FieldSpec,
    base: FieldSpec,
    /// φ(θ^j) for every element, cached as column-major digit blocks
    cache: Vec<Vec<FieldElement>>,
}

impl RegularRep {
    pub fn new(big: &FieldSpec) -> Result<Self> {
        let base = FieldSpec::new(big.p(), 1, None)?;
        let s = big.degree() as usize;
        let theta = big.theta();
        let powers: Vec<FieldElement> = (0..s as u64).map(|j| big.pow(theta, j)).collect();
        let cache = big
            .elements()
            .map(|a| {
                let mut m = vec![FieldElement::ZERO; s * s];
                for (j, &tj) in powers.iter().enumerate() {
                    for (i, d) in big.digits(big.mul(a, tj)).into_iter().enumerate() {
                        m[i * s + j] = FieldElement(d);
                    }
                }
                m
            })
            .collect();
        Ok(RegularRep { big: big.clone(), base, cache })
    }

    pub fn big(&self) -> &FieldSpec {
        &self.big
    }
    pub fn base(&self) -> &FieldSpec {
        &self.base
    }
    pub fn s(&self) -> usize {
        self.big.degree() as usize
    }

    /// Matrix of `y ↦ αy`; column `j` holds the coordinates of `α θ^j`.
    pub fn phi(&self, alpha: FieldElement) -> Mat {
        let s = self.s();
        Mat::from_vec(&self.base, s, s, self.cache[alpha.0 as usize].clone()).expect("valid by construction")
    }

    pub(crate) fn phi_block(&self, alpha: FieldElement) -> &[FieldElement] {
        &self.cache[alpha.0 as usize]
    }

    /// Block matrix `(φ(a_ij))`.
    pub fn phibar(&self, a: &Mat) -> Result<Mat> {
        if a.field() != &self.big {
            return Err(Error::FieldMismatch);
        }
        if !a.is_square() {
            return Err(Error::DimensionMismatch("φ̄ expects a square matrix".into()));
        }
        let n = a.rows();
        let s = self.s();
        let ns = n * s;
        let mut out = vec![FieldElement::ZERO; ns * ns];
        for i in 0..n {
            for j in 0..n {
                let blk = self.phi_block(a.get(i, j));
                for u in 0..s {
                    for v in 0..s {
                        out[(i * s + u) * ns + j * s + v] = blk[u * s + v];
                    }
                }
            }
        }
        Mat::from_vec(&self.base, ns, ns, out)
    }
}

/// `A ⊕ A^σ ⊕ ⋯ ⊕ A^{σ^{s−1}}` with `σ: x ↦ x^q`.
pub fn psi(a: &Mat, base_order: u32) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("ψ expects a square matrix".into()));
    }
    let f = a.field();
    let e = f.subfield_degree(base_order)?;
    let s = f.degree() / e;
    let blocks: Vec<Mat> =
        (0..s).map(|j| a.map_entries(Automorphism::new(e * j))).collect::<Result<_>>()?;
    Mat::block_diag(&blocks)
}

/// Row `i` is `(v_1^{σ^i}, …, v_s^{σ^i})`.
pub fn moore_matrix(f: &FieldSpec, base_order: u32, basis: &[FieldElement]) -> Result<Mat> {
    let s = basis.len();
    let mut data = Vec::with_capacity(s * s);
    for i in 0..s as u32 {
        for &v in basis {
            data.push(f.frobenius(base_order, v, i)?);
        }
    }
    let z = Mat::from_vec(f, s, s, data)?;
    if !z.is_invertible() {
        return Err(Error::Dependent);
    }
    Ok(z)
}

/// `diag(α, α^q, …, α^{q^{s−1}})`
pub fn dickson_diag(f: &FieldSpec, base_order: u32, alpha: FieldElement, s: usize) -> Result<Mat> {
    let entries: Vec<FieldElement> =
        (0..s as u32).map(|j| f.frobenius(base_order, alpha, j)).collect::<Result<_>>()?;
    Ok(Mat::diag(f, &entries))
}

fn diagonalizes(rep: &RegularRep, z: &Mat) -> Result<bool> {
    let f = rep.big();
    let zi = z.inverse()?;
    let phi = rep.phi(f.theta()).lift_prime(f)?;
    let lhs = z.mul(&phi)?.mul(&zi)?;
    Ok(lhs == dickson_diag(f, f.p(), f.theta(), rep.s())?)
}

/// Trace-dual basis of the power basis.
fn dual_power_basis(f: &FieldSpec) -> Result<Vec<FieldElement>> {
    let s = f.degree() as usize;
    let trace = |x: FieldElement| {
        let mut acc = FieldElement::ZERO;
        for j in 0..s as u32 {
            acc = f.add(acc, f.apply(Automorphism::new(j), x));
        }
        acc.0
    };
    // solve Tr(v_i θ^j) = δ_ij over F_p in the coordinates of v_i
    let theta = f.theta();
    let base = FieldSpec::new(f.p(), 1, None)?;
    let mut sys = vec![FieldElement::ZERO; s * s];
    for j in 0..s {
        for c in 0..s {
            let e_c = f.pow(theta, c as u64);
            sys[j * s + c] = FieldElement(trace(f.mul(e_c, f.pow(theta, j as u64))));
        }
    }
    let t = Mat::from_vec(&base, s, s, sys)?;
    let ti = t.inverse()?;
    Ok((0..s)
        .map(|i| {
            let digits: Vec<u32> = (0..s).map(|c| ti.get(c, i).0).collect();
            f.from_digits(&digits)
        })
        .collect())
}

/// A Moore matrix `Z` with `Z φ(α) Z⁻¹ = diag(α, α^q, …)`: the power basis is
/// tried first, then its trace-dual basis.
pub fn diagonalizing_moore(rep: &RegularRep) -> Result<Mat> {
    let f = rep.big();
    let theta = f.theta();
    let power: Vec<FieldElement> = (0..rep.s() as u64).map(|j| f.pow(theta, j)).collect();
    let z = moore_matrix(f, f.p(), &power)?;
    if diagonalizes(rep, &z)? {
        return Ok(z);
    }
    let z = moore_matrix(f, f.p(), &dual_power_basis(f)?)?;
    if diagonalizes(rep, &z)? {
        return Ok(z);
    }
    Err(Error::Format("no Moore matrix on the power or dual basis diagonalizes φ".into()))
}

/// Permutation taking position `a·s + u` to `u·n + a`.
pub fn block_perm(field: &FieldSpec, n: usize, s: usize) -> Mat {
    let ns = n * s;
    let mut p = Mat::zeros(field, ns, ns);
    for a in 0..n {
        for u in 0..s {
            p.set(u * n + a, a * s + u, FieldElement::ONE);
        }
    }
    p
}

/// `P · (I_n ⊗ Z)`, the conjugator carrying `φ̄(A)` to `ψ(A)`.
pub fn psi_conjugator(rep: &RegularRep, n: usize) -> Result<Mat> {
    let f = rep.big();
    let z = diagonalizing_moore(rep)?;
    let zbar = Mat::identity(f, n).kron(&z)?;
    block_perm(f, n, rep.s()).mul(&zbar)
}
