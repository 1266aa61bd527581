//! JSON file formats. Matrices are row-major nested arrays of element codes;
//! every file records the field modulus.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::equivalence::{MatrixEquivWitness, VectorEquivWitness};
use crate::error::{Error, Result};
use crate::gf::{Automorphism, FieldDesc, FieldSpec};
use crate::invariants::VectorCode;
use crate::linalg::Mat;
use crate::params::CodeParams;
use crate::spreadset::MatrixCode;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadSetFile {
    pub field: FieldDesc,
    pub subfield_order: u32,
    pub n: usize,
    pub s: u32,
    pub basis: Vec<Vec<Vec<u32>>>,
}

impl SpreadSetFile {
    pub fn from_code(code: &MatrixCode) -> Self {
        let p = code.params();
        SpreadSetFile {
            field: p.big().desc(),
            subfield_order: p.q(),
            n: p.n(),
            s: p.s(),
            basis: code.basis().iter().map(|m| m.to_rows()).collect(),
        }
    }

    pub fn to_code(&self) -> Result<MatrixCode> {
        let big = FieldSpec::from_desc(&self.field)?;
        if big.degree() != self.s {
            return Err(Error::Format(format!("field degree {} does not match s = {}", big.degree(), self.s)));
        }
        let params = CodeParams::with_field(self.subfield_order, self.n, big)?;
        self.to_code_in(&params)
    }

    /// Parses into an existing parameter set, which must match the file.
    pub fn to_code_in(&self, params: &Arc<CodeParams>) -> Result<MatrixCode> {
        if params.big().desc() != self.field || params.q() != self.subfield_order || params.n() != self.n {
            return Err(Error::ParameterMismatch("spread-set file parameters differ".into()));
        }
        let basis = self
            .basis
            .iter()
            .map(|rows| {
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                    return Err(Error::Format(format!("basis matrices must be {}x{}", self.n, self.n)));
                }
                Mat::from_rows(params.big(), rows)
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixCode::new(params, basis)
    }
}

pub fn read_spread_set(path: &Path) -> Result<MatrixCode> {
    let file: SpreadSetFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.to_code()
}

pub fn write_spread_set(path: &Path, code: &MatrixCode) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&SpreadSetFile::from_code(code))?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorCodeFile {
    pub field: FieldDesc,
    pub subfield_order: u32,
    pub length: usize,
    pub generator: Vec<Vec<u32>>,
}

impl VectorCodeFile {
    pub fn from_code(d: &VectorCode) -> Self {
        VectorCodeFile {
            field: d.field().desc(),
            subfield_order: d.base_order(),
            length: d.length(),
            generator: d.generator().iter().map(|r| r.iter().map(|x| x.0).collect()).collect(),
        }
    }

    pub fn to_code(&self) -> Result<VectorCode> {
        let f = FieldSpec::from_desc(&self.field)?;
        let rows = self
            .generator
            .iter()
            .map(|r| r.iter().map(|&c| f.elem(c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        VectorCode::from_rows(&f, self.subfield_order, self.length, &rows)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryFile {
    pub codes: Vec<VectorCodeFile>,
}

/// `{x, y, rho}` with `rho` the Frobenius power.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixWitnessFile {
    pub field: FieldDesc,
    pub x: Vec<Vec<u32>>,
    pub y: Vec<Vec<u32>>,
    pub rho: u32,
}

impl MatrixWitnessFile {
    pub fn from_witness(w: &MatrixEquivWitness) -> Self {
        MatrixWitnessFile { field: w.x.field().desc(), x: w.x.to_rows(), y: w.y.to_rows(), rho: w.rho.power }
    }

    pub fn to_witness(&self) -> Result<MatrixEquivWitness> {
        let f = FieldSpec::from_desc(&self.field)?;
        let rho = Automorphism::new(self.rho);
        f.check_automorphism(rho)?;
        Ok(MatrixEquivWitness { x: Mat::from_rows(&f, &self.x)?, y: Mat::from_rows(&f, &self.y)?, rho })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorWitnessFile {
    pub q: Vec<Vec<u32>>,
    pub rho: u32,
}

impl VectorWitnessFile {
    pub fn from_witness(w: &VectorEquivWitness) -> Self {
        VectorWitnessFile { q: w.q.to_rows(), rho: w.rho.power }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spreadset::desarguesian;

    #[test]
    fn spread_set_round_trip() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let c = desarguesian(&p).unwrap();
        let file = SpreadSetFile::from_code(&c);
        let text = serde_json::to_string(&file).unwrap();
        let back: SpreadSetFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_code().unwrap(), c);
        assert_eq!(back.field.modulus, vec![1, 1, 0, 0, 1]);
    }

    #[test]
    fn malformed_basis_rejected() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut file = SpreadSetFile::from_code(&desarguesian(&p).unwrap());
        file.basis[0].pop();
        assert!(file.to_code().is_err());
        file.basis[0] = vec![vec![1, 99], vec![0, 1]];
        assert!(file.to_code().is_err());
    }
}
