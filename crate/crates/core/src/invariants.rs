//! Isotopy invariants of spread sets: m-ranks of the embedded spaces
//! `E_m(C) = ⟨φ̄(C)⟩_{F_{q^m}}`, the vector rank-metric code `D(C)`, and the
//! composite key `i(C)` used to bucket candidates during classification.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embed::RegularRep;
use crate::equivalence::vector_code_equivalent_with;
use crate::error::{Error, Result};
use crate::gf::{FieldElement as Fe, FieldEmbedding, FieldSpec};
use crate::linalg::{rank_in_place, rref_in_place};
use crate::params::CodeParams;
use crate::small;
use crate::spreadset::MatrixCode;

/// Enumeration ceiling for span sizes.
const MAX_ENUMERATION: u64 = 1 << 36;
/// Ceiling on half-table sizes in [`MRankPlan`].
const MAX_HALF_TABLE: u64 = 1 << 22;

/// Multiset of ranks, stored as rank → multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RankMultiset(BTreeMap<usize, u64>);

impl RankMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rank: usize, count: u64) {
        if count > 0 {
            *self.0.entry(rank).or_insert(0) += count;
        }
    }

    pub fn get(&self, rank: usize) -> u64 {
        self.0.get(&rank).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.0.iter().map(|(&r, &c)| (r, c))
    }

    /// Ranks occurring on nonzero elements.
    pub fn nonzero_ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied().filter(|&r| r > 0)
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut m = Self::new();
        for (r, c) in counts {
            m.add(r, c);
        }
        m
    }
}

/// `rank:count` pairs in increasing rank, separated by `;`.
impl fmt::Display for RankMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(r, c)| format!("{r}:{c}")).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for RankMultiset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut m = RankMultiset::new();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            let (r, c) = part.split_once(':').ok_or_else(|| Error::Format(format!("bad rank entry {part:?}")))?;
            let r = r.trim().parse().map_err(|_| Error::Format(format!("bad rank {r:?}")))?;
            let c = c.trim().parse().map_err(|_| Error::Format(format!("bad count {c:?}")))?;
            m.add(r, c);
        }
        Ok(m)
    }
}

impl Serialize for RankMultiset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RankMultiset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / crate::gf::gcd(a as u64, b as u64) as u32 * b
}

fn checked_size(base: u64, exp: usize) -> Result<u64> {
    base.checked_pow(exp as u32)
        .filter(|&v| v <= MAX_ENUMERATION)
        .ok_or_else(|| Error::GuardExceeded(format!("span of size {base}^{exp} is too large to enumerate")))
}

/// `dim_{F_{q^m}} E_m(C)`.
fn embedded_dimension(rep: &RegularRep, fm: &FieldSpec, code: &MatrixCode) -> Result<usize> {
    let k = code.dim();
    if k == 0 {
        return Ok(0);
    }
    let mut rows = Vec::new();
    for a in code.basis() {
        rows.extend(rep.phibar(a)?.data().iter().copied());
    }
    let cols = rows.len() / k;
    // entries of φ̄ lie in the prime field, which has the same codes in F_{q^m}
    Ok(rank_in_place(fm, k, cols, &mut rows))
}

/// The `m`-ranks by elimination and enumeration of `E_m(C)` itself.
pub fn m_ranks_direct(code: &MatrixCode, m: u32) -> Result<RankMultiset> {
    let params = code.params();
    let fm = FieldSpec::new(params.q(), m, None)?;
    let rep = RegularRep::new(params.big())?;
    let k = code.dim();
    let mut out = RankMultiset::new();
    out.add(0, 1);
    if k == 0 {
        return Ok(out);
    }
    let ns = params.full_dim();
    let width = ns * ns;
    let mut rows = Vec::with_capacity(k * width);
    for a in code.basis() {
        rows.extend(rep.phibar(a)?.data().iter().copied());
    }
    let d = rref_in_place(&fm, k, width, &mut rows).len();
    rows.truncate(d * width);
    let qm = fm.size() as u64;
    checked_size(qm, d)?;
    if let Some(packed) = PackedRows::new(&fm, ns, &rows, d) {
        packed.ranks_into(&mut out);
        return Ok(out);
    }
    ranks_by_elimination(&fm, ns, &rows, d, &mut out);
    Ok(out)
}

fn ranks_by_elimination(fm: &FieldSpec, ns: usize, rows: &[Fe], d: usize, out: &mut RankMultiset) {
    let width = ns * ns;
    let qm = fm.size() as u64;
    // one representative per F_{q^m}-line: leading coefficient 1
    let scaled: Vec<Vec<Vec<Fe>>> = (0..d)
        .map(|i| fm.elements().map(|c| rows[i * width..(i + 1) * width].iter().map(|&x| fm.mul(c, x)).collect()).collect())
        .collect();
    let mut buf = vec![Fe::ZERO; width];
    let mut coeffs = vec![0u32; d];
    for lead in 0..d {
        let tail = d - lead - 1;
        let count = qm.pow(tail as u32);
        for t in 0..count {
            let mut x = t;
            for c in coeffs.iter_mut().take(d).skip(lead + 1) {
                *c = (x % qm) as u32;
                x /= qm;
            }
            buf.copy_from_slice(&scaled[lead][1]);
            for (i, &c) in coeffs.iter().enumerate().skip(lead + 1) {
                if c != 0 {
                    for (o, &x) in buf.iter_mut().zip(&scaled[i][c as usize]) {
                        *o = fm.add(*o, x);
                    }
                }
            }
            out.add(rank_in_place(fm, ns, ns, &mut buf), qm - 1);
        }
    }
}

/// `ns × ns` matrices over F_{2^m} with each row packed into a `u64`
/// (entry `j` in bits `jm..(j+1)m`), for the direct enumeration.
struct PackedRows {
    m: u32,
    ns: usize,
    qm: u64,
    /// `scaled[i][c]`: basis matrix `i` times the field element with code `c`
    scaled: Vec<Vec<Vec<u64>>>,
    /// `mul[c]`: byte-wise product table for a chunk of entries
    mul: Vec<[u8; 256]>,
    per_byte: usize,
    inv: Vec<u32>,
}

impl PackedRows {
    fn new(fm: &FieldSpec, ns: usize, rows: &[Fe], d: usize) -> Option<Self> {
        let m = fm.degree();
        if fm.p() != 2 || m > 8 || ns * m as usize > 64 {
            return None;
        }
        let per_byte = (8 / m) as usize;
        let mask = (1u32 << m) - 1;
        let mul: Vec<[u8; 256]> = fm
            .elements()
            .map(|c| {
                let mut t = [0u8; 256];
                for (b, slot) in t.iter_mut().enumerate() {
                    let mut v = 0u32;
                    for e in 0..per_byte {
                        let x = (b as u32 >> (e as u32 * m)) & mask;
                        v |= fm.mul(c, Fe(x)).0 << (e as u32 * m);
                    }
                    *slot = v as u8;
                }
                t
            })
            .collect();
        let width = ns * ns;
        let pack = |mat: &[Fe]| -> Vec<u64> {
            (0..ns)
                .map(|r| (0..ns).fold(0u64, |acc, j| acc | (mat[r * ns + j].0 as u64) << (j as u32 * m)))
                .collect()
        };
        let scaled = (0..d)
            .map(|i| {
                fm.elements()
                    .map(|c| pack(&rows[i * width..(i + 1) * width].iter().map(|&x| fm.mul(c, x)).collect::<Vec<_>>()))
                    .collect()
            })
            .collect();
        let inv = fm.elements().map(|x| if x.is_zero() { 0 } else { fm.inv_nonzero(x).0 }).collect();
        Some(PackedRows { m, ns, qm: fm.size() as u64, scaled, mul, per_byte, inv })
    }

    fn scale(&self, c: u32, row: u64) -> u64 {
        let t = &self.mul[c as usize];
        let bits = (self.per_byte as u32 * self.m) as usize;
        let chunks = (self.ns * self.m as usize).div_ceil(bits);
        let cmask = (1u64 << bits) - 1;
        (0..chunks).fold(0u64, |acc, i| acc | (t[((row >> (i * bits)) & cmask) as usize] as u64) << (i * bits))
    }

    fn rank(&self, a: &mut [u64]) -> usize {
        let mask = (1u64 << self.m) - 1;
        let mut rank = 0;
        for col in 0..self.ns {
            let shift = col as u32 * self.m;
            let Some(p) = (rank..self.ns).find(|&r| (a[r] >> shift) & mask != 0) else { continue };
            a.swap(rank, p);
            let pinv = self.inv[((a[rank] >> shift) & mask) as usize];
            let pivot = self.scale(pinv, a[rank]);
            for r in rank + 1..self.ns {
                let v = ((a[r] >> shift) & mask) as u32;
                if v != 0 {
                    a[r] ^= self.scale(v, pivot);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Adds the rank of every nonzero element, one per F_{2^m}-line
    /// weighted by `2^m − 1`.
    fn ranks_into(&self, out: &mut RankMultiset) {
        let d = self.scaled.len();
        let ns = self.ns;
        let mut counts = vec![0u64; ns + 1];
        let mut buf = vec![0u64; ns];
        let mut work = vec![0u64; ns];
        let mut coeffs = vec![0u64; d];
        for lead in 0..d {
            buf.copy_from_slice(&self.scaled[lead][1]);
            coeffs.iter_mut().for_each(|c| *c = 0);
            loop {
                work.copy_from_slice(&buf);
                counts[self.rank(&mut work)] += 1;
                // odometer step on the coefficients after `lead`
                let mut i = lead + 1;
                loop {
                    if i == d {
                        break;
                    }
                    let old = coeffs[i];
                    let new = (old + 1) % self.qm;
                    for ((b, x), y) in buf.iter_mut().zip(&self.scaled[i][old as usize]).zip(&self.scaled[i][new as usize]) {
                        *b ^= x ^ y;
                    }
                    coeffs[i] = new;
                    if new != 0 {
                        break;
                    }
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
        }
        for (r, &c) in counts.iter().enumerate() {
            out.add(r, c * (self.qm - 1));
        }
    }
}

/// Precomputed data for [`m_ranks_fast`] at fixed `(params, m)`.
///
/// With `L = lcm(m, s)` and `M(β) = Σ β_i A_i` over `F_{q^L}`,
/// `rank Σ α_i φ̄(A_i) = Σ_{j<s} rank M(α^{σ^{-j}})`.
#[derive(Clone, Debug)]
pub struct MRankPlan {
    params: Arc<CodeParams>,
    m: u32,
    fm: FieldSpec,
    fl: FieldSpec,
    emb_s: FieldEmbedding,
    emb_m: FieldEmbedding,
    rep: RegularRep,
    /// `(t, w)`: the conjugate `α^{σ^t}` occurs `w` times in the sum
    weights: Vec<(u32, u64)>,
    /// `σ^t` on F_{q^m} as a code table, for each `t` in `weights`
    frob: Vec<Vec<u32>>,
}

impl MRankPlan {
    pub fn new(params: &Arc<CodeParams>, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::UnsupportedParameters("m must be positive".into()));
        }
        let s = params.s();
        let l = lcm(m, s);
        let fm = FieldSpec::new(params.q(), m, None)?;
        let fl = FieldSpec::new(params.q(), l, None)?;
        let emb_s = FieldEmbedding::canonical(params.big(), &fl)?;
        let emb_m = FieldEmbedding::canonical(&fm, &fl)?;
        let rep = RegularRep::new(params.big())?;
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for j in 0..s {
            *counts.entry((m - j % m) % m).or_insert(0) += 1;
        }
        let weights: Vec<(u32, u64)> = counts.into_iter().collect();
        let frob = weights.iter().map(|&(t, _)| fm.automorphism_table(crate::gf::Automorphism::new(t))).collect();
        Ok(MRankPlan { params: params.clone(), m, fm, fl, emb_s, emb_m, rep, weights, frob })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ranks(&self, code: &MatrixCode) -> Result<RankMultiset> {
        if code.params() != &self.params {
            return Err(Error::ParameterMismatch("code and plan parameters differ".into()));
        }
        let k = code.dim();
        let mut out = RankMultiset::new();
        if k == 0 {
            out.add(0, 1);
            return Ok(out);
        }
        let n = self.params.n();
        let nn = n * n;
        let qm = self.fm.size() as u64;
        checked_size(qm, k)?;
        let fl = &self.fl;
        let basis: Vec<Vec<Fe>> =
            code.basis().iter().map(|a| a.data().iter().map(|&x| self.emb_s.embed(x)).collect()).collect();

        let h = k.div_ceil(2);
        if qm.pow(h as u32) > MAX_HALF_TABLE {
            return Err(Error::GuardExceeded("m-rank half table too large".into()));
        }
        let half = |range: std::ops::Range<usize>| -> (Vec<Fe>, Vec<Vec<u32>>) {
            let len = range.len();
            let size = qm.pow(len as u32) as usize;
            let mut table = vec![Fe::ZERO; size * nn];
            let mut filled = 1usize;
            for i in range {
                for c in 1..qm as u32 {
                    let cl = self.emb_m.embed(Fe(c));
                    let off = c as usize * filled;
                    for j in 0..filled {
                        for e in 0..nn {
                            table[(off + j) * nn + e] = fl.add(table[j * nn + e], fl.mul(cl, basis[i][e]));
                        }
                    }
                }
                filled *= qm as usize;
            }
            let perms = self
                .frob
                .iter()
                .map(|tab| {
                    (0..size as u64)
                        .map(|idx| {
                            let (mut x, mut out, mut place) = (idx, 0u64, 1u64);
                            for _ in 0..len {
                                out += tab[(x % qm) as usize] as u64 * place;
                                x /= qm;
                                place *= qm;
                            }
                            out as u32
                        })
                        .collect()
                })
                .collect();
            (table, perms)
        };
        let (lo_t, lo_p) = half(0..h);
        let (hi_t, hi_p) = half(h..k);
        let lo_size = qm.pow(h as u32) as usize;
        let hi_size = qm.pow((k - h) as u32) as usize;
        // leading (lowest-index) nonzero digit equal to 1
        let normalized = |mut idx: usize| -> bool {
            while idx % qm as usize == 0 {
                idx /= qm as usize;
            }
            idx % qm as usize == 1
        };

        let mut hist = vec![0u64; n * self.params.s() as usize + 1];
        let mut buf = vec![Fe::ZERO; nn];
        let mut eval = |lo: usize, hi: usize| -> usize {
            let mut total = 0usize;
            for (w, (lp, hp)) in self.weights.iter().zip(lo_p.iter().zip(&hi_p)) {
                let a = &lo_t[lp[lo] as usize * nn..][..nn];
                let b = &hi_t[hp[hi] as usize * nn..][..nn];
                small::add_into(fl, a, b, &mut buf);
                total += w.1 as usize * small::rank(fl, n, &buf);
            }
            total
        };
        for lo in (1..lo_size).filter(|&i| normalized(i)) {
            for hi in 0..hi_size {
                hist[eval(lo, hi)] += 1;
            }
        }
        for hi in (1..hi_size).filter(|&i| normalized(i)) {
            hist[eval(0, hi)] += 1;
        }

        let d = embedded_dimension(&self.rep, &self.fm, code)?;
        let redundancy = qm.pow((k - d) as u32);
        out.add(0, 1);
        for (r, &c) in hist.iter().enumerate() {
            out.add(r, c * (qm - 1));
        }
        // every element of E_m(C) arises from exactly `redundancy` tuples
        let counts: Vec<(usize, u64)> = out.iter().collect();
        let mut scaled = RankMultiset::new();
        for (r, c) in counts {
            if c % redundancy != 0 {
                return Err(Error::DimensionMismatch("m-rank counts not divisible by kernel size".into()));
            }
            scaled.add(r, c / redundancy);
        }
        Ok(scaled)
    }
}

/// The `m`-ranks via the direct-sum decomposition of `φ̄`.
pub fn m_ranks_fast(code: &MatrixCode, m: u32) -> Result<RankMultiset> {
    MRankPlan::new(code.params(), m)?.ranks(code)
}

/// An F_{q^s}-linear code of length `k`, held by its reduced echelon
/// generator. The empty generator is the zero code.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VectorCode {
    field: FieldSpec,
    base_order: u32,
    length: usize,
    generator: Vec<Vec<Fe>>,
}

impl VectorCode {
    /// Row space of `rows` over `field`; `base_order` is the `q` of the rank metric.
    pub fn from_rows(field: &FieldSpec, base_order: u32, length: usize, rows: &[Vec<Fe>]) -> Result<Self> {
        if base_order != field.p() {
            return Err(Error::UnsupportedParameters("rank weights are supported over the prime field only".into()));
        }
        if rows.iter().any(|r| r.len() != length) {
            return Err(Error::DimensionMismatch(format!("generator rows must have length {length}")));
        }
        let mut data: Vec<Fe> = rows.iter().flatten().copied().collect();
        let r = rref_in_place(field, rows.len(), length, &mut data).len();
        let generator = data.chunks_exact(length.max(1)).take(r).map(|c| c.to_vec()).collect();
        Ok(VectorCode { field: field.clone(), base_order, length, generator })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }
    pub fn base_order(&self) -> u32 {
        self.base_order
    }
    pub fn length(&self) -> usize {
        self.length
    }
    pub fn dim(&self) -> usize {
        self.generator.len()
    }
    pub fn generator(&self) -> &[Vec<Fe>] {
        &self.generator
    }

    /// Codeword count by rank weight, indexed `0..=length`.
    pub fn rank_weight_distribution(&self) -> Result<Vec<u64>> {
        let f = &self.field;
        let size = f.size() as u64;
        let r = self.dim();
        checked_size(size, r)?;
        let mut dist = vec![0u64; self.length + 1];
        dist[0] = 1;
        let mut buf = vec![Fe::ZERO; self.length];
        for lead in 0..r {
            let count = size.pow((r - lead - 1) as u32);
            for t in 0..count {
                buf.copy_from_slice(&self.generator[lead]);
                let mut x = t;
                for row in &self.generator[lead + 1..] {
                    let c = Fe((x % size) as u32);
                    x /= size;
                    if !c.is_zero() {
                        small::scale_add_into(f, c, row, &mut buf);
                    }
                }
                dist[rank_weight(f, self.base_order, &buf)?] += size - 1;
            }
        }
        Ok(dist)
    }
}

/// `dim_{F_q} ⟨v_1, …, v_k⟩` for `q` the characteristic.
pub fn rank_weight(f: &FieldSpec, base_order: u32, v: &[Fe]) -> Result<usize> {
    if base_order != f.p() {
        return Err(Error::UnsupportedParameters("rank weights are supported over the prime field only".into()));
    }
    if f.p() == 2 {
        let mut basis = [0u32; 32];
        let mut rank = 0;
        for &x in v {
            let mut x = x.0;
            for b in basis.iter().take(rank) {
                x = x.min(x ^ b);
            }
            if x != 0 {
                basis[rank] = x;
                rank += 1;
                basis[..rank].sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        return Ok(rank);
    }
    let d = f.degree() as usize;
    let base = FieldSpec::new(f.p(), 1, None)?;
    let mut data: Vec<Fe> = v.iter().flat_map(|&x| f.digits(x).into_iter().map(Fe)).collect();
    Ok(rank_in_place(&base, v.len(), d, &mut data))
}

/// `D(C)`: the row space of the `n² × k` matrix whose columns are the
/// column-major vectorizations of the canonical basis of `C`.
pub fn vector_code(code: &MatrixCode) -> Result<VectorCode> {
    let params = code.params();
    let cb = code.canonical_basis()?;
    let k = cb.dim();
    let nn = params.entries();
    let vecs: Vec<Vec<Fe>> = cb.basis().iter().map(|a| a.vec().data().to_vec()).collect();
    let rows: Vec<Vec<Fe>> = (0..nn).map(|e| vecs.iter().map(|v| v[e]).collect()).collect();
    VectorCode::from_rows(params.big(), params.q(), k, &rows)
}

#[derive(Clone, Debug)]
struct RegistryEntry {
    code: VectorCode,
    dist: Vec<u64>,
}

/// Representatives of the vector-code classes seen so far; labels are
/// indices into the representative list.
#[derive(Clone, Debug, Default)]
pub struct VectorClassRegistry {
    entries: Vec<RegistryEntry>,
    memo: HashMap<VectorCode, usize>,
}

impl VectorClassRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assumes the given codes are pairwise inequivalent.
    pub fn from_representatives(codes: Vec<VectorCode>) -> Result<Self> {
        let mut reg = Self::new();
        for code in codes {
            let dist = code.rank_weight_distribution()?;
            reg.memo.insert(code.clone(), reg.entries.len());
            reg.entries.push(RegistryEntry { code, dist });
        }
        Ok(reg)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    pub fn representatives(&self) -> impl Iterator<Item = &VectorCode> {
        self.entries.iter().map(|e| &e.code)
    }

    /// Labels of representatives with length `k`.
    pub fn labels_of_length(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().enumerate().filter(move |(_, e)| e.code.length == k).map(|(i, _)| i)
    }

    /// Label of a registered code equivalent to `d`, searching newest first.
    pub fn find(&self, d: &VectorCode) -> Result<Option<usize>> {
        if let Some(&l) = self.memo.get(d) {
            return Ok(Some(l));
        }
        let dist = d.rank_weight_distribution()?;
        self.find_with_dist(d, &dist)
    }

    fn find_with_dist(&self, d: &VectorCode, dist: &[u64]) -> Result<Option<usize>> {
        for (i, e) in self.entries.iter().enumerate().rev() {
            if e.code.length != d.length || e.code.dim() != d.dim() || e.dist != dist {
                continue;
            }
            if vector_code_equivalent_with(d, &e.code, true)?.is_some() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Label of `d`, registering it as a new class when no match exists.
    pub fn label(&mut self, d: &VectorCode) -> Result<usize> {
        if let Some(&l) = self.memo.get(d) {
            return Ok(l);
        }
        let dist = d.rank_weight_distribution()?;
        let l = match self.find_with_dist(d, &dist)? {
            Some(l) => l,
            None => {
                self.entries.push(RegistryEntry { code: d.clone(), dist });
                self.entries.len() - 1
            }
        };
        self.memo.insert(d.clone(), l);
        Ok(l)
    }

    /// Records `label` for `d` without searching.
    pub(crate) fn remember(&mut self, d: VectorCode, label: usize) {
        self.memo.insert(d, label);
    }
}

pub fn vclass_label(d: &VectorCode, registry: &mut VectorClassRegistry) -> Result<usize> {
    registry.label(d)
}

/// `i(C)`: the 2-rank multiset together with the class label of `D(C)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvariantKey {
    pub ranks: RankMultiset,
    pub vclass: usize,
}

pub fn invariant_key(code: &MatrixCode, registry: &mut VectorClassRegistry) -> Result<InvariantKey> {
    let plan = MRankPlan::new(code.params(), 2)?;
    invariant_key_with(code, registry, &plan)
}

pub fn invariant_key_with(
    code: &MatrixCode,
    registry: &mut VectorClassRegistry,
    plan: &MRankPlan,
) -> Result<InvariantKey> {
    Ok(InvariantKey { ranks: plan.ranks(code)?, vclass: registry.label(&vector_code(code)?)? })
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hash of the multiset, over invertible `B ∈ C`, of the multisets of
/// `(tr, det)` of `A B⁻¹` for `A ∈ C`, minimized over field automorphisms.
/// `X C^ρ Y` sends `A B⁻¹` to `X (A B⁻¹)^ρ X⁻¹`, so the value is an
/// isotopy invariant; unequal values prove inequivalence.
pub fn ratio_profile(code: &MatrixCode) -> Result<u64> {
    if code.params().n() == 2 {
        Ok(ratio_profile_2x2(code))
    } else {
        Ok(ratio_profile_generic(code))
    }
}

struct PairHasher {
    size: u64,
    tables: Vec<Vec<u32>>,
    /// `mixed[a][tr * size + det]`, when the field is small
    mixed: Option<Vec<Vec<u64>>>,
}

impl PairHasher {
    fn new(f: &FieldSpec) -> Self {
        let size = f.size() as u64;
        let tables: Vec<Vec<u32>> = f.automorphisms().into_iter().map(|a| f.automorphism_table(a)).collect();
        let mixed = (size <= 256).then(|| {
            tables
                .iter()
                .map(|t| (0..size * size).map(|i| mix(t[(i / size) as usize] as u64 * size + t[(i % size) as usize] as u64)).collect())
                .collect()
        });
        PairHasher { size, tables, mixed }
    }

    fn add_block(&self, totals: &mut [u64], pairs: &[(u32, u32)]) {
        for (a, total) in totals.iter_mut().enumerate() {
            let inner = match &self.mixed {
                Some(m) => {
                    let m = &m[a];
                    pairs.iter().fold(0u64, |acc, &(tr, d)| acc.wrapping_add(m[tr as usize * self.size as usize + d as usize]))
                }
                None => {
                    let t = &self.tables[a];
                    pairs.iter().fold(0u64, |acc, &(tr, d)| acc.wrapping_add(mix(t[tr as usize] as u64 * self.size + t[d as usize] as u64)))
                }
            };
            *total = total.wrapping_add(mix(inner));
        }
    }
}

fn ratio_profile_generic(code: &MatrixCode) -> u64 {
    let p = code.params();
    let (f, n) = (p.big(), p.n());
    let nn = n * n;
    let elems = code.span_flat();
    let hasher = PairHasher::new(f);
    let mut totals = vec![0u64; hasher.tables.len()];
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(elems.len() / nn);
    let mut prod = vec![Fe::ZERO; nn];
    for b in elems.chunks_exact(nn) {
        let Some(bi) = small::inverse(f, n, b) else { continue };
        pairs.clear();
        for a in elems.chunks_exact(nn) {
            small::mul_into(f, n, a, &bi, &mut prod);
            pairs.push((small::trace(f, n, &prod).0, small::det(f, n, &prod).0));
        }
        hasher.add_block(&mut totals, &pairs);
    }
    totals.into_iter().min().unwrap_or(0)
}

/// For `2 × 2` matrices `A B⁻¹ = A adj(B) / det B` and `tr(A adj B)` is
/// linear in `A`, so the traces over the span follow from `k` of them.
fn ratio_profile_2x2(code: &MatrixCode) -> u64 {
    let p = code.params();
    let (f, q) = (p.big(), p.q());
    let elems = code.span_flat();
    let basis = code.basis_flat();
    let count = elems.len() / 4;
    let dets: Vec<Fe> = elems.chunks_exact(4).map(|a| f.sub(f.mul(a[0], a[3]), f.mul(a[1], a[2]))).collect();
    let scalars: Vec<Fe> = (0..q).map(|c| f.from_int(c)).collect();
    let hasher = PairHasher::new(f);
    let mut totals = vec![0u64; hasher.tables.len()];
    let mut traces = vec![Fe::ZERO; count];
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(count);
    for (b, &db) in elems.chunks_exact(4).zip(&dets) {
        let Ok(dinv) = f.inv(db) else { continue };
        let adj = [b[3], f.neg(b[1]), f.neg(b[2]), b[0]];
        let mut len = 1usize;
        for a in &basis {
            let t = small::trace_of_product(f, 2, a, &adj);
            for (c, &cf) in scalars.iter().enumerate().skip(1) {
                let ct = f.mul(cf, t);
                for j in 0..len {
                    traces[c * len + j] = f.add(traces[j], ct);
                }
            }
            len *= q as usize;
        }
        pairs.clear();
        pairs.extend(traces.iter().zip(&dets).map(|(&t, &d)| (f.mul(t, dinv).0, f.mul(d, dinv).0)));
        hasher.add_block(&mut totals, &pairs);
    }
    totals.into_iter().min().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::spreadset::desarguesian;

    fn p224() -> Arc<CodeParams> {
        CodeParams::new(2, 2, 4).unwrap()
    }

    #[test]
    fn packed_enumeration_matches_generic() {
        use rand::SeedableRng;
        let p = p224();
        let rep = RegularRep::new(p.big()).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for (m, k) in [(1, 5), (2, 4), (3, 2), (4, 2)] {
            let fm = FieldSpec::new(2, m, None).unwrap();
            let c = crate::lemmas::random_subspace(&mut rng, &p, k);
            let mut rows: Vec<Fe> = c.basis().iter().flat_map(|a| rep.phibar(a).unwrap().data().to_vec()).collect();
            let d = rref_in_place(&fm, k, 64, &mut rows).len();
            rows.truncate(d * 64);
            let (mut a, mut b) = (RankMultiset::new(), RankMultiset::new());
            PackedRows::new(&fm, 8, &rows, d).unwrap().ranks_into(&mut a);
            ranks_by_elimination(&fm, 8, &rows, d, &mut b);
            assert_eq!(a, b, "m = {m}");
        }
    }

    #[test]
    fn ratio_profile_2x2_matches_generic() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for params in [p224(), CodeParams::new(3, 2, 2).unwrap()] {
            for k in 1..=params.full_dim().min(5) {
                let c = crate::lemmas::random_subspace(&mut rng, &params, k);
                assert_eq!(ratio_profile_2x2(&c), ratio_profile_generic(&c));
            }
        }
        let d = desarguesian(&p224()).unwrap();
        assert_eq!(ratio_profile_2x2(&d), ratio_profile_generic(&d));
    }

    #[test]
    fn multiset_format_round_trip() {
        let m = RankMultiset::from_counts([(0, 1), (8, 255)]);
        assert_eq!(m.to_string(), "0:1;8:255");
        assert_eq!("0:1;8:255".parse::<RankMultiset>().unwrap(), m);
        assert!("0-1".parse::<RankMultiset>().is_err());
    }

    #[test]
    fn one_ranks_of_field() {
        let c = desarguesian(&p224()).unwrap();
        let expect = RankMultiset::from_counts([(0, 1), (8, 255)]);
        assert_eq!(m_ranks_fast(&c, 1).unwrap(), expect);
        assert_eq!(m_ranks_direct(&c, 1).unwrap(), expect);
    }

    #[test]
    fn zero_space() {
        let c = MatrixCode::zero(&p224());
        assert_eq!(m_ranks_fast(&c, 2).unwrap(), RankMultiset::from_counts([(0, 1)]));
        assert_eq!(m_ranks_direct(&c, 2).unwrap(), RankMultiset::from_counts([(0, 1)]));
    }

    #[test]
    fn two_ranks_field_fast_matches_direct() {
        let c = desarguesian(&p224()).unwrap();
        let fast = m_ranks_fast(&c, 2).unwrap();
        assert_eq!(fast, m_ranks_direct(&c, 2).unwrap());
        assert_eq!(fast.total(), 65536);
        assert!(fast.nonzero_ranks().all(|r| [4, 6, 8].contains(&r)));
    }

    #[test]
    fn rank_weight_examples() {
        let f = FieldSpec::new(2, 4, None).unwrap();
        let t = f.theta();
        assert_eq!(rank_weight(&f, 2, &[Fe::ZERO; 8]).unwrap(), 0);
        assert_eq!(rank_weight(&f, 2, &[Fe::ONE, Fe::ZERO, Fe::ONE]).unwrap(), 1);
        let v: Vec<Fe> = (0..4).map(|i| f.pow(t, i)).chain([Fe::ZERO; 4]).collect();
        assert_eq!(rank_weight(&f, 2, &v).unwrap(), 4);
        let g9 = FieldSpec::new(3, 2, None).unwrap();
        assert_eq!(rank_weight(&g9, 3, &[Fe(1), Fe(2)]).unwrap(), 1);
        assert_eq!(rank_weight(&g9, 3, &[Fe(1), g9.theta()]).unwrap(), 2);
    }

    #[test]
    fn vector_code_shape() {
        let c = desarguesian(&p224()).unwrap();
        let d = vector_code(&c).unwrap();
        assert_eq!(d.length(), 8);
        assert!(d.dim() <= 4);
        let dist = d.rank_weight_distribution().unwrap();
        assert_eq!(dist[0], 1);
        assert_eq!(dist.iter().sum::<u64>(), 16u64.pow(d.dim() as u32));
    }

    #[test]
    fn registry_labels() {
        let p = p224();
        let c = desarguesian(&p).unwrap();
        let d = vector_code(&c).unwrap();
        let mut reg = VectorClassRegistry::new();
        assert_eq!(reg.label(&d).unwrap(), 0);
        assert_eq!(reg.label(&d).unwrap(), 0);
        let f = p.big();
        let x = Mat::from_codes(f, 2, 2, &[1, 3, 0, 7]).unwrap();
        let y = Mat::from_codes(f, 2, 2, &[5, 0, 2, 1]).unwrap();
        let c2 = c.transform(&x, &y, crate::gf::Automorphism::new(1)).unwrap();
        assert_eq!(reg.label(&vector_code(&c2).unwrap()).unwrap(), 0);
        assert_eq!(reg.len(), 1);
    }
}
