//! Dense matrices over a [`FieldSpec`].

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{Automorphism, FieldElement, FieldEmbedding, FieldSpec};

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    field: FieldSpec,
    data: Vec<FieldElement>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(r).iter().map(|x| x.0.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, field: field.clone(), data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Mat {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = FieldElement::ONE;
        }
        m
    }

    pub fn from_vec(field: &FieldSpec, rows: usize, cols: usize, data: Vec<FieldElement>) -> Result<Mat> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {}x{} matrix", data.len(), rows, cols)));
        }
        for &x in &data {
            field.elem(x.0)?;
        }
        Ok(Mat { rows, cols, field: field.clone(), data })
    }

    /// From row-major codes, validating every entry.
    pub fn from_codes(field: &FieldSpec, rows: usize, cols: usize, codes: &[u32]) -> Result<Mat> {
        Mat::from_vec(field, rows, cols, codes.iter().map(|&c| FieldElement(c)).collect())
    }

    pub fn from_rows(field: &FieldSpec, rows: &[Vec<u32>]) -> Result<Mat> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let codes: Vec<u32> = rows.iter().flatten().copied().collect();
        Mat::from_codes(field, r, c, &codes)
    }

    pub fn diag(field: &FieldSpec, entries: &[FieldElement]) -> Mat {
        let n = entries.len();
        let mut m = Mat::zeros(field, n, n);
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }
    pub fn data(&self) -> &[FieldElement] {
        &self.data
    }
    pub fn codes(&self) -> Vec<u32> {
        self.data.iter().map(|x| x.0).collect()
    }
    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|x| x.0).collect()).collect()
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, x: FieldElement) {
        self.data[r * self.cols + c] = x;
    }
    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    fn same_shape(&self, other: &Mat) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Ok(Mat { data, ..self.clone() })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Ok(Mat { data, ..self.clone() })
    }

    pub fn scale(&self, c: FieldElement) -> Mat {
        let f = &self.field;
        Mat { data: self.data.iter().map(|&a| f.mul(c, a)).collect(), ..self.clone() }
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = f.add(out.data[idx], f.mul(a, other.get(l, j)));
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    /// Reduced row echelon form and pivot columns. Pivots are chosen as the
    /// first nonzero entry in column order.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let pivots = rref_in_place(&self.field, m.rows, m.cols, &mut m.data);
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        let mut data = self.data.clone();
        rank_in_place(&self.field, self.rows, self.cols, &mut data)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let f = &self.field;
        let mut aug = Mat::zeros(f, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.data[r * 2 * n + c] = self.get(r, c);
            }
            aug.data[r * 2 * n + n + r] = FieldElement::ONE;
        }
        let (red, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return Err(Error::Singular);
        }
        let mut out = Mat::zeros(f, n, n);
        for r in 0..n {
            for c in 0..n {
                out.data[r * n + c] = red.data[r * 2 * n + n + c];
            }
        }
        Ok(out)
    }

    /// Kronecker product; block `(i, j)` is `a_ij · B`.
    pub fn kron(&self, other: &Mat) -> Result<Mat> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        let f = &self.field;
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Mat::zeros(f, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * c + j * other.cols + l] = f.mul(a, other.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Column-major stacking: entry `(i, j)` lands at `j·rows + i`.
    pub fn vec(&self) -> Mat {
        let mut out = Mat::zeros(&self.field, self.rows * self.cols, 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    /// Inverse of [`Mat::vec`].
    pub fn unvec(v: &Mat, rows: usize, cols: usize) -> Result<Mat> {
        if v.rows * v.cols != rows * cols {
            return Err(Error::DimensionMismatch("unvec size".into()));
        }
        let mut out = Mat::zeros(&v.field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = v.data[j * rows + i];
            }
        }
        Ok(out)
    }

    /// Applies a field automorphism entrywise.
    pub fn map_entries(&self, rho: Automorphism) -> Result<Mat> {
        self.field.check_automorphism(rho)?;
        let f = &self.field;
        Ok(Mat { data: self.data.iter().map(|&a| f.apply(rho, a)).collect(), ..self.clone() })
    }

    /// Pushes every entry through a field embedding.
    pub fn embed(&self, e: &FieldEmbedding) -> Result<Mat> {
        if e.source() != &self.field {
            return Err(Error::FieldMismatch);
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            field: e.target().clone(),
            data: self.data.iter().map(|&a| e.embed(a)).collect(),
        })
    }

    /// Reinterprets a matrix with prime-field entries over another field of
    /// the same characteristic.
    pub fn lift_prime(&self, target: &FieldSpec) -> Result<Mat> {
        if target.p() != self.field.p() || self.data.iter().any(|x| !self.field.is_prime_field_element(*x)) {
            return Err(Error::FieldMismatch);
        }
        Ok(Mat { rows: self.rows, cols: self.cols, field: target.clone(), data: self.data.clone() })
    }

    pub fn block_diag(blocks: &[Mat]) -> Result<Mat> {
        let field = blocks.first().ok_or_else(|| Error::DimensionMismatch("no blocks".into()))?.field.clone();
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(&field, r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            if b.field != field {
                return Err(Error::FieldMismatch);
            }
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.data[(r0 + i) * c + c0 + j] = b.get(i, j);
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        Ok(out)
    }
}

/// Row reduction of a row-major buffer; returns pivot columns.
pub fn rref_in_place(f: &FieldSpec, rows: usize, cols: usize, data: &mut [FieldElement]) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !data[i * cols + c].is_zero()) else { continue };
        if pr != r {
            for j in 0..cols {
                data.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = f.inv_nonzero(data[r * cols + c]);
        if inv != FieldElement::ONE {
            for j in c..cols {
                data[r * cols + j] = f.mul(data[r * cols + j], inv);
            }
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = data[i * cols + c];
            if factor.is_zero() {
                continue;
            }
            for j in c..cols {
                let t = f.mul(factor, data[r * cols + j]);
                data[i * cols + j] = f.sub(data[i * cols + j], t);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Rank by forward elimination; clobbers the buffer.
pub fn rank_in_place(f: &FieldSpec, rows: usize, cols: usize, data: &mut [FieldElement]) -> usize {
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !data[i * cols + c].is_zero()) else { continue };
        if pr != r {
            for j in c..cols {
                data.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = f.inv_nonzero(data[r * cols + c]);
        for i in r + 1..rows {
            let x = data[i * cols + c];
            if x.is_zero() {
                continue;
            }
            let factor = f.mul(x, inv);
            for j in c..cols {
                let t = f.mul(factor, data[r * cols + j]);
                data[i * cols + j] = f.sub(data[i * cols + j], t);
            }
        }
        r += 1;
    }
    r
}

/// Determinant of a small square matrix given row-major.
pub fn det_small(f: &FieldSpec, n: usize, a: &[FieldElement]) -> FieldElement {
    match n {
        0 => FieldElement::ONE,
        1 => a[0],
        2 => f.sub(f.mul(a[0], a[3]), f.mul(a[1], a[2])),
        _ => {
            let mut m = a.to_vec();
            let mut det = FieldElement::ONE;
            for c in 0..n {
                let Some(pr) = (c..n).find(|&i| !m[i * n + c].is_zero()) else { return FieldElement::ZERO };
                if pr != c {
                    for j in 0..n {
                        m.swap(pr * n + j, c * n + j);
                    }
                    det = f.neg(det);
                }
                let piv = m[c * n + c];
                det = f.mul(det, piv);
                let inv = f.inv_nonzero(piv);
                for i in c + 1..n {
                    let x = m[i * n + c];
                    if x.is_zero() {
                        continue;
                    }
                    let factor = f.mul(x, inv);
                    for j in c..n {
                        let t = f.mul(factor, m[c * n + j]);
                        m[i * n + j] = f.sub(m[i * n + j], t);
                    }
                }
            }
            det
        }
    }
}

/// Rank of a small square matrix; copies into a stack buffer when possible.
pub fn rank_small(f: &FieldSpec, n: usize, a: &[FieldElement]) -> usize {
    if n == 2 {
        if a.iter().all(|x| x.is_zero()) {
            return 0;
        }
        return if det_small(f, 2, a).is_zero() { 1 } else { 2 };
    }
    if n * n <= 64 {
        let mut buf = [FieldElement::ZERO; 64];
        buf[..n * n].copy_from_slice(a);
        rank_in_place(f, n, n, &mut buf[..n * n])
    } else {
        let mut buf = a.to_vec();
        rank_in_place(f, n, n, &mut buf)
    }
}

/// Nullspace basis of a row-major `rows × cols` system `M x = 0`.
pub fn nullspace(f: &FieldSpec, rows: usize, cols: usize, data: &[FieldElement]) -> Vec<Vec<FieldElement>> {
    let mut m = data.to_vec();
    let pivots = rref_in_place(f, rows, cols, &mut m);
    let mut is_pivot = vec![false; cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![FieldElement::ZERO; cols];
        v[free] = FieldElement::ONE;
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = f.neg(m[r * cols + free]);
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf16() -> FieldSpec {
        FieldSpec::new(2, 4, None).unwrap()
    }

    #[test]
    fn rank_examples() {
        let f = gf16();
        assert_eq!(Mat::zeros(&f, 2, 2).rank(), 0);
        assert_eq!(Mat::identity(&f, 3).rank(), 3);
        let t = f.theta();
        let m = Mat::from_vec(&f, 2, 2, vec![FieldElement::ONE, t, t, f.mul(t, t)]).unwrap();
        assert_eq!(m.rank(), 1);
        assert!(!m.is_invertible());
    }

    #[test]
    fn inverse_examples() {
        let f = gf16();
        let i = Mat::identity(&f, 3);
        assert_eq!(i.inverse().unwrap(), i);
        let sing = Mat::from_codes(&f, 2, 2, &[1, 2, 2, 4]).unwrap();
        assert!(matches!(sing.inverse(), Err(Error::Singular)));
        let d = Mat::diag(&f, &[f.theta(), FieldElement::ONE]);
        assert_eq!(d.inverse().unwrap(), Mat::diag(&f, &[FieldElement(9), FieldElement::ONE]));
    }

    #[test]
    fn vec_is_column_major() {
        let f = gf16();
        let a = Mat::from_codes(&f, 2, 2, &[1, 2, 3, 4]).unwrap();
        assert_eq!(a.vec().codes(), vec![1, 3, 2, 4]);
        assert_eq!(Mat::unvec(&a.vec(), 2, 2).unwrap(), a);
        assert!(Mat::zeros(&f, 3, 2).vec().is_zero());
    }

    #[test]
    fn kron_shapes() {
        let f = gf16();
        let a = Mat::from_codes(&f, 2, 2, &[1, 2, 3, 4]).unwrap();
        assert_eq!(Mat::identity(&f, 1).kron(&a).unwrap(), a);
        let b = Mat::identity(&f, 4);
        let k = a.kron(&b).unwrap();
        assert_eq!((k.rows(), k.cols()), (8, 8));
        assert_eq!(k.get(4, 0), FieldElement(3));
        assert_eq!(k.get(5, 1), FieldElement(3));
        assert!(k.get(4, 1).is_zero());
        let g4 = FieldSpec::new(2, 2, None).unwrap();
        assert!(matches!(a.kron(&Mat::identity(&g4, 2)), Err(Error::FieldMismatch)));
    }

    #[test]
    fn map_entries_rejects_bad_power() {
        let f = gf16();
        let a = Mat::identity(&f, 2);
        assert!(a.map_entries(Automorphism::new(4)).is_err());
        assert_eq!(a.map_entries(Automorphism::new(3)).unwrap(), a);
    }

    #[test]
    fn det_matches_rank() {
        let f = FieldSpec::new(2, 2, None).unwrap();
        for code in 0..(4u32.pow(4)) {
            let c: Vec<u32> = (0..4).map(|i| (code >> (2 * i)) & 3).collect();
            let m = Mat::from_codes(&f, 2, 2, &c).unwrap();
            assert_eq!(det_small(&f, 2, m.data()).is_zero(), m.rank() < 2);
            assert_eq!(rank_small(&f, 2, m.data()), m.rank());
        }
    }

    #[test]
    fn nullspace_dimension() {
        let f = gf16();
        let m = Mat::from_codes(&f, 2, 3, &[1, 2, 3, 2, 4, 6]).unwrap();
        let ns = nullspace(&f, 2, 3, m.data());
        assert_eq!(ns.len(), 3 - m.rank());
        for v in ns {
            let col = Mat::from_vec(&f, 3, 1, v).unwrap();
            assert!(m.mul(&col).unwrap().is_zero());
        }
    }
}
