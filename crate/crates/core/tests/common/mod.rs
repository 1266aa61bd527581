//! Independent oracles shared by the integration tests: exhaustive
//! enumeration of all-invertible subspaces and orbit computation under the
//! full isotopy group.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use semiclass::linalg::Mat;
use semiclass::{CodeParams, FieldElement, MatrixCode};

/// Sorted element list of a subspace, each matrix packed into a `u64`.
pub type SpaceKey = Vec<u64>;

pub fn pack(m: &Mat, field_size: u64) -> u64 {
    m.codes().iter().fold(0, |acc, &c| acc * field_size + c as u64)
}

pub fn space_key(elems: &[Mat], field_size: u64) -> SpaceKey {
    let mut k: Vec<u64> = elems.iter().map(|m| pack(m, field_size)).collect();
    k.sort_unstable();
    k
}

/// Every `n × n` matrix over the big field, in code order.
pub fn all_matrices(params: &CodeParams) -> Vec<Mat> {
    let f = params.big();
    let size = f.size() as u64;
    let nn = params.n() * params.n();
    (0..size.pow(nn as u32))
        .map(|mut t| {
            let mut codes = vec![0u32; nn];
            for c in codes.iter_mut().rev() {
                *c = (t % size) as u32;
                t /= size;
            }
            Mat::from_codes(f, params.n(), params.n(), &codes).unwrap()
        })
        .collect()
}

/// Elements of the F_q-span of `basis`, by direct summation.
pub fn span(params: &CodeParams, basis: &[Mat]) -> Vec<Mat> {
    let f = params.big();
    let q = params.q();
    let mut out = vec![Mat::zeros(f, params.n(), params.n())];
    for b in basis {
        let mut next = Vec::with_capacity(out.len() * q as usize);
        for c in 0..q {
            let sb = b.scale(f.from_int(c));
            next.extend(out.iter().map(|e| e.add(&sb).unwrap()));
        }
        out = next;
    }
    out
}

pub struct Enumerated {
    /// element lists of every all-invertible full-dimension subspace
    pub spaces: Vec<Vec<Mat>>,
    pub index: HashMap<SpaceKey, usize>,
}

/// All full-dimension F_q-subspaces of `M_n(F_{q^s})` whose nonzero
/// elements are invertible, grown one invertible matrix at a time.
pub fn enumerate_spread_sets(params: &CodeParams) -> Enumerated {
    let size = params.big().size() as u64;
    let invertible: Vec<Mat> = all_matrices(params).into_iter().filter(|m| m.is_invertible()).collect();
    let mut level: HashMap<SpaceKey, Vec<Mat>> = HashMap::new();
    level.insert(vec![0], span(params, &[]));
    for _ in 0..params.full_dim() {
        let mut next: HashMap<SpaceKey, Vec<Mat>> = HashMap::new();
        for elems in level.values() {
            let members: HashSet<u64> = elems.iter().map(|m| pack(m, size)).collect();
            for a in &invertible {
                if members.contains(&pack(a, size)) {
                    continue;
                }
                let coset: Vec<Mat> = elems.iter().map(|e| e.add(a).unwrap()).collect();
                if !coset.iter().all(|m| m.is_invertible()) {
                    continue;
                }
                let mut grown = elems.clone();
                grown.extend((1..params.q()).flat_map(|c| {
                    let sa = a.scale(params.big().from_int(c));
                    elems.iter().map(move |e| e.add(&sa).unwrap())
                }));
                next.entry(space_key(&grown, size)).or_insert(grown);
            }
        }
        level = next;
    }
    let mut spaces: Vec<(SpaceKey, Vec<Mat>)> = level.into_iter().collect();
    spaces.sort_by(|a, b| a.0.cmp(&b.0));
    let index = spaces.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
    Enumerated { spaces: spaces.into_iter().map(|(_, v)| v).collect(), index }
}

/// Invertible matrices over the big field.
pub fn gl(params: &CodeParams) -> Vec<Mat> {
    all_matrices(params).into_iter().filter(|m| m.is_invertible()).collect()
}

/// Image `X S^ρ Y` of an element list.
pub fn act(elems: &[Mat], x: &Mat, y: &Mat, rho: u32) -> Vec<Mat> {
    let rho = semiclass::Automorphism::new(rho);
    elems.iter().map(|e| x.mul(&e.map_entries(rho).unwrap()).unwrap().mul(y).unwrap()).collect()
}

/// Orbit id of every enumerated space under `GL × GL × Aut`.
pub fn orbits(params: &CodeParams, en: &Enumerated) -> Vec<usize> {
    let size = params.big().size() as u64;
    let group = gl(params);
    let auts = params.big().degree();
    let mut orbit = vec![usize::MAX; en.spaces.len()];
    let mut next_id = 0;
    for i in 0..en.spaces.len() {
        if orbit[i] != usize::MAX {
            continue;
        }
        for rho in 0..auts {
            for x in &group {
                for y in &group {
                    let img = space_key(&act(&en.spaces[i], x, y, rho), size);
                    let j = en.index[&img];
                    orbit[j] = next_id;
                }
            }
        }
        next_id += 1;
    }
    orbit
}

pub fn code_of(params: &Arc<CodeParams>, elems: &[Mat]) -> MatrixCode {
    let mut basis: Vec<Mat> = Vec::new();
    for e in elems {
        if let Ok(c) = MatrixCode::new(params, basis.iter().cloned().chain([e.clone()]).collect()) {
            basis = c.basis().to_vec();
        }
    }
    MatrixCode::new(params, basis).unwrap()
}

pub fn key_of(code: &MatrixCode) -> SpaceKey {
    space_key(&code.elements(), code.params().big().size() as u64)
}

pub fn fe(x: u32) -> FieldElement {
    FieldElement(x)
}

/// A random spread set grown by depth-first search over the seed sets,
/// trying extensions in random order.
pub fn random_spread_set<R: rand::Rng>(rng: &mut R, params: &Arc<CodeParams>) -> MatrixCode {
    use rand::seq::SliceRandom;
    let seeds = semiclass::spreadset::SeedSets::new(params);
    let sets: Vec<Vec<Mat>> = (0..params.full_dim()).map(|k| seeds.set_mats(k)).collect();
    fn grow<R: rand::Rng>(rng: &mut R, c: MatrixCode, sets: &[Vec<Mat>], budget: &mut u64) -> Option<MatrixCode> {
        let k = c.dim();
        if k == sets.len() {
            return Some(c);
        }
        let mut order: Vec<usize> = (0..sets[k].len()).collect();
        order.shuffle(rng);
        for i in order {
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            let a = &sets[k][i];
            if c.is_semifield_extension(a) {
                if let Some(done) = grow(rng, c.extend(a).unwrap(), sets, budget) {
                    return Some(done);
                }
            }
        }
        None
    }
    loop {
        let mut budget = 200_000;
        if let Some(c) = grow(rng, MatrixCode::zero(params), &sets, &mut budget) {
            return c;
        }
    }
}

/// For every projective line of `F_{q^s}^{n²}` met by the q-system
/// `{vec(A) : A ∈ C}` in an F_q-space of dimension at least two, the number
/// of unordered pairs of its vectors spanning that line; returned as a
/// sorted `(pairs, lines)` histogram. Invariant under `ΓL(n², q^s)`.
pub fn line_profile(code: &MatrixCode) -> Vec<(usize, usize)> {
    let f = code.params().big();
    let n = code.params().n();
    let vecs: Vec<Vec<FieldElement>> = code
        .elements()
        .iter()
        .filter(|a| a.codes().iter().any(|&c| c != 0))
        .map(|a| (0..n).flat_map(|c| (0..n).map(move |r| a.get(r, c))).collect())
        .collect();
    let line_key = |u: &[FieldElement], v: &[FieldElement]| -> Option<Vec<u32>> {
        let mut m = [u.to_vec(), v.to_vec()];
        let mut row = 0;
        for c in 0..u.len() {
            if row == 2 {
                break;
            }
            let Some(p) = (row..2).find(|&i| !m[i][c].is_zero()) else { continue };
            m.swap(row, p);
            let inv = f.inv(m[row][c]).unwrap();
            m[row].iter_mut().for_each(|x| *x = f.mul(*x, inv));
            let pivot = m[row].clone();
            let other = &mut m[1 - row];
            let t = other[c];
            other.iter_mut().zip(&pivot).for_each(|(x, &y)| *x = f.sub(*x, f.mul(t, y)));
            row += 1;
        }
        (row == 2).then(|| m.concat().iter().map(|x| x.0).collect())
    };
    let mut lines: HashMap<Vec<u32>, usize> = HashMap::new();
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            if let Some(key) = line_key(&vecs[i], &vecs[j]) {
                *lines.entry(key).or_default() += 1;
            }
        }
    }
    let mut hist: HashMap<usize, usize> = HashMap::new();
    for pairs in lines.into_values() {
        *hist.entry(pairs).or_default() += 1;
    }
    let mut hist: Vec<(usize, usize)> = hist.into_iter().collect();
    hist.sort_unstable();
    hist
}
