//! Randomized checks of the structural identities behind the fast
//! invariants, reported per property with a counterexample on failure.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::embed::{diagonalizing_moore, dickson_diag, psi, psi_conjugator, RegularRep};
use crate::error::{Error, Result};
use crate::gf::{FieldElement as Fe, FieldSpec};
use crate::invariants::{m_ranks_direct, m_ranks_fast};
use crate::linalg::Mat;
use crate::params::CodeParams;
use crate::spreadset::MatrixCode;

/// Largest `(q^m)^k` for which the direct m-rank oracle is run.
const DIRECT_LIMIT: u64 = 1 << 16;

#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LemmaReport {
    pub q: u32,
    pub n: usize,
    pub s: u32,
    pub m: u32,
    pub properties: Vec<PropertyResult>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.failures == 0)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LemmaOptions {
    pub seed: u64,
    /// Perturbs `φ̄` before it is compared (negative control).
    pub corrupt_phibar: bool,
}

pub fn random_matrix<R: Rng>(rng: &mut R, f: &FieldSpec, rows: usize, cols: usize) -> Mat {
    let data = (0..rows * cols).map(|_| Fe(rng.gen_range(0..f.size()))).collect();
    Mat::from_vec(f, rows, cols, data).expect("codes in range")
}

pub fn random_invertible<R: Rng>(rng: &mut R, f: &FieldSpec, n: usize) -> Mat {
    loop {
        let m = random_matrix(rng, f, n, n);
        if m.is_invertible() {
            return m;
        }
    }
}

/// A uniformly random `k`-dimensional F_q-subspace (by rejection).
pub fn random_subspace<R: Rng>(rng: &mut R, params: &std::sync::Arc<CodeParams>, k: usize) -> MatrixCode {
    let n = params.n();
    loop {
        let basis = (0..k).map(|_| random_matrix(rng, params.big(), n, n)).collect();
        if let Ok(c) = MatrixCode::new(params, basis) {
            return c;
        }
    }
}

struct Checker {
    result: PropertyResult,
}

impl Checker {
    fn new(name: &'static str) -> Self {
        Checker { result: PropertyResult { name, ..Default::default() } }
    }
    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.result.trials += 1;
        if !ok {
            self.result.failures += 1;
            if self.result.counterexample.is_none() {
                self.result.counterexample = Some(detail());
            }
        }
    }
}

fn phibar_checked(rep: &RegularRep, a: &Mat, corrupt: bool) -> Result<Mat> {
    let mut m = rep.phibar(a)?;
    if corrupt {
        let x = m.get(0, 0);
        m.set(0, 0, rep.base().add(x, Fe::ONE));
    }
    Ok(m)
}

/// Runs `trials` random instances of each property.
pub fn verify_lemmas(params: &std::sync::Arc<CodeParams>, m: u32, trials: usize, opts: LemmaOptions) -> Result<LemmaReport> {
    if m == 0 {
        return Err(Error::UnsupportedParameters("m must be positive".into()));
    }
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let f = params.big();
    let (n, s, q) = (params.n(), params.s() as usize, params.q());
    let rep = RegularRep::new(f)?;
    let mut report = LemmaReport { q, n, s: params.s(), m, properties: Vec::new() };
    if trials == 0 {
        return Ok(report);
    }

    let mut vec_kron = Checker::new("vec_kronecker");
    for _ in 0..trials {
        let (x, a, y) = (random_matrix(&mut rng, f, n, n), random_matrix(&mut rng, f, n, n), random_matrix(&mut rng, f, n, n));
        let lhs = x.mul(&a)?.mul(&y)?.vec();
        let rhs = y.transpose().kron(&x)?.mul(&a.vec())?;
        vec_kron.record(lhs == rhs, || format!("X={:?} A={:?} Y={:?}", x.to_rows(), a.to_rows(), y.to_rows()));
    }

    let z = diagonalizing_moore(&rep)?;
    let zi = z.inverse()?;
    let mut dickson = Checker::new("dickson_diagonalization");
    for _ in 0..trials {
        let alpha = Fe(rng.gen_range(0..f.size()));
        let lhs = z.mul(&rep.phi(alpha).lift_prime(f)?)?.mul(&zi)?;
        dickson.record(lhs == dickson_diag(f, q, alpha, s)?, || format!("alpha={}", alpha.0));
    }

    let conj = psi_conjugator(&rep, n)?;
    let conj_inv = conj.inverse()?;
    let mut psi_conj = Checker::new("psi_conjugation");
    for _ in 0..trials {
        let a = random_matrix(&mut rng, f, n, n);
        let pb = phibar_checked(&rep, &a, opts.corrupt_phibar)?.lift_prime(f)?;
        let lhs = conj.mul(&pb)?.mul(&conj_inv)?;
        psi_conj.record(lhs == psi(&a, q)?, || format!("A={:?}", a.to_rows()));
    }

    let mut multiset = Checker::new("rank_multiset_identity");
    let mut fast_direct = Checker::new("m_ranks_fast_equals_direct");
    let mut divisible = Checker::new("m_rank_divisibility");
    let qm = (q as u64).pow(m);
    let max_direct = (1..=params.full_dim()).take_while(|&k| qm.pow(k as u32) <= DIRECT_LIMIT).last().unwrap_or(0);
    for t in 0..trials {
        let k = 1 + t % params.full_dim();
        let c = random_subspace(&mut rng, params, k);
        let mut ok = true;
        for a in c.elements() {
            let r = a.rank();
            let rp = phibar_checked(&rep, &a, opts.corrupt_phibar)?.rank();
            let rq = psi(&a, q)?.rank();
            if rp != s * r || rq != s * r {
                ok = false;
                multiset.record(false, || format!("A={:?}: rank {r}, phibar {rp}, psi {rq}", a.to_rows()));
                break;
            }
        }
        if ok {
            multiset.record(true, String::new);
        }

        let kd = 1 + t % max_direct.max(1);
        let c = if kd == k { c } else { random_subspace(&mut rng, params, kd) };
        let fast = m_ranks_fast(&c, m)?;
        if max_direct > 0 {
            let direct = m_ranks_direct(&c, m)?;
            fast_direct.record(fast == direct, || {
                format!("basis={:?}: fast {fast} direct {direct}", c.basis().iter().map(|b| b.to_rows()).collect::<Vec<_>>())
            });
        }
        if s % m as usize == 0 {
            let step = s / m as usize;
            divisible.record(fast.nonzero_ranks().all(|r| r % step == 0), || format!("ranks {fast}"));
        }
    }

    report.properties = [vec_kron, dickson, psi_conj, multiset, fast_direct, divisible]
        .into_iter()
        .map(|c| c.result)
        .filter(|r| r.trials > 0)
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters_pass() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let r = verify_lemmas(&p, 2, 10, LemmaOptions::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.properties.len(), 6);
    }

    #[test]
    fn zero_trials_is_empty() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let r = verify_lemmas(&p, 2, 0, LemmaOptions::default()).unwrap();
        assert!(r.passed());
        assert!(r.properties.is_empty());
    }

    #[test]
    fn corruption_is_reported() {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let r = verify_lemmas(&p, 2, 10, LemmaOptions { seed: 1, corrupt_phibar: true }).unwrap();
        assert!(!r.passed());
        let bad: Vec<_> = r.properties.iter().filter(|p| p.failures > 0).collect();
        assert!(bad.iter().any(|p| p.name == "psi_conjugation" && p.counterexample.is_some()));
    }
}
