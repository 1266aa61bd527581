//! Allocation-light helpers on row-major `n × n` slices, used by the search
//! loops where building [`Mat`](crate::linalg::Mat) values would dominate.

use std::collections::HashMap;

use crate::gf::{Automorphism, FieldElement as Fe, FieldSpec};
use crate::linalg::{det_small, rank_small};

pub fn mul_into(f: &FieldSpec, n: usize, a: &[Fe], b: &[Fe], out: &mut [Fe]) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = Fe::ZERO;
            for l in 0..n {
                acc = f.add(acc, f.mul(a[i * n + l], b[l * n + j]));
            }
            out[i * n + j] = acc;
        }
    }
}

pub fn mul(f: &FieldSpec, n: usize, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    let mut out = vec![Fe::ZERO; n * n];
    mul_into(f, n, a, b, &mut out);
    out
}

pub fn add_into(f: &FieldSpec, a: &[Fe], b: &[Fe], out: &mut [Fe]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = f.add(x, y);
    }
}

pub fn scale_add_into(f: &FieldSpec, c: Fe, a: &[Fe], acc: &mut [Fe]) {
    for (o, &x) in acc.iter_mut().zip(a) {
        *o = f.add(*o, f.mul(c, x));
    }
}

pub fn det(f: &FieldSpec, n: usize, a: &[Fe]) -> Fe {
    det_small(f, n, a)
}

pub fn rank(f: &FieldSpec, n: usize, a: &[Fe]) -> usize {
    rank_small(f, n, a)
}

pub fn trace(f: &FieldSpec, n: usize, a: &[Fe]) -> Fe {
    (0..n).fold(Fe::ZERO, |acc, i| f.add(acc, a[i * n + i]))
}

/// Trace of `a · b` without forming the product.
pub fn trace_of_product(f: &FieldSpec, n: usize, a: &[Fe], b: &[Fe]) -> Fe {
    let mut acc = Fe::ZERO;
    for i in 0..n {
        for l in 0..n {
            acc = f.add(acc, f.mul(a[i * n + l], b[l * n + i]));
        }
    }
    acc
}

pub fn inverse(f: &FieldSpec, n: usize, a: &[Fe]) -> Option<Vec<Fe>> {
    if n == 2 {
        let d = det(f, 2, a);
        if d.is_zero() {
            return None;
        }
        let di = f.inv_nonzero(d);
        return Some(vec![f.mul(a[3], di), f.neg(f.mul(a[1], di)), f.neg(f.mul(a[2], di)), f.mul(a[0], di)]);
    }
    let w = 2 * n;
    let mut aug = vec![Fe::ZERO; n * w];
    for r in 0..n {
        aug[r * w..r * w + n].copy_from_slice(&a[r * n..(r + 1) * n]);
        aug[r * w + n + r] = Fe::ONE;
    }
    let piv = crate::linalg::rref_in_place(f, n, w, &mut aug);
    if piv.len() < n || piv[n - 1] >= n {
        return None;
    }
    let mut out = vec![Fe::ZERO; n * n];
    for r in 0..n {
        out[r * n..(r + 1) * n].copy_from_slice(&aug[r * w + n..r * w + w]);
    }
    Some(out)
}

pub fn apply_aut(f: &FieldSpec, rho: Automorphism, a: &[Fe]) -> Vec<Fe> {
    a.iter().map(|&x| f.apply(rho, x)).collect()
}

pub fn is_scalar(n: usize, a: &[Fe]) -> bool {
    (0..n).all(|i| (0..n).all(|j| if i == j { a[i * n + j] == a[0] } else { a[i * n + j].is_zero() }))
}

pub fn identity(n: usize) -> Vec<Fe> {
    let mut m = vec![Fe::ZERO; n * n];
    for i in 0..n {
        m[i * n + i] = Fe::ONE;
    }
    m
}

#[inline]
pub fn first_row_key(field_size: u32, n: usize, a: &[Fe]) -> u64 {
    a[..n].iter().rev().fold(0u64, |acc, x| acc * field_size as u64 + x.0 as u64)
}

/// All `q^k` elements of the F_q-span of `basis`, flattened. Element index
/// `Σ c_i q^i` holds `Σ c_i A_i`.
pub fn span(f: &FieldSpec, q: u32, n: usize, basis: &[&[Fe]]) -> Vec<Fe> {
    let nn = n * n;
    let total = (q as usize).pow(basis.len() as u32);
    let mut out = vec![Fe::ZERO; total * nn];
    let mut len = 1usize;
    for b in basis {
        for c in 1..q {
            let cf = f.from_int(c);
            let scaled: Vec<Fe> = b.iter().map(|&x| f.mul(cf, x)).collect();
            let off = c as usize * len;
            for j in 0..len {
                for e in 0..nn {
                    out[(off + j) * nn + e] = f.add(out[j * nn + e], scaled[e]);
                }
            }
        }
        len *= q as usize;
    }
    out
}

/// Map from first row to span element. Only meaningful when the first-row
/// map is injective (all nonzero elements invertible).
pub struct FirstRowLookup {
    field_size: u32,
    n: usize,
    dense: Option<Vec<u32>>,
    sparse: HashMap<u64, u32>,
}

const NONE: u32 = u32::MAX;

impl FirstRowLookup {
    /// Returns `None` if two elements share a first row.
    pub fn build(f: &FieldSpec, n: usize, elems: &[Fe]) -> Option<Self> {
        let nn = n * n;
        let size = f.size();
        let keyspace = (size as u64).checked_pow(n as u32);
        let mut lk = FirstRowLookup { field_size: size, n, dense: None, sparse: HashMap::new() };
        if let Some(ks) = keyspace.filter(|&k| k <= 1 << 22) {
            lk.dense = Some(vec![NONE; ks as usize]);
        }
        for (idx, e) in elems.chunks_exact(nn).enumerate() {
            let key = first_row_key(size, n, e);
            match &mut lk.dense {
                Some(d) => {
                    if d[key as usize] != NONE {
                        return None;
                    }
                    d[key as usize] = idx as u32;
                }
                None => {
                    if lk.sparse.insert(key, idx as u32).is_some() {
                        return None;
                    }
                }
            }
        }
        Some(lk)
    }

    #[inline]
    pub fn get(&self, row: &[Fe]) -> Option<usize> {
        let key = first_row_key(self.field_size, self.n, row);
        match &self.dense {
            Some(d) => {
                let v = d[key as usize];
                (v != NONE).then_some(v as usize)
            }
            None => self.sparse.get(&key).map(|&v| v as usize),
        }
    }
}
