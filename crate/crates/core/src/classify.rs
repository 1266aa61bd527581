//! Iterative classification: `T_{k+1}` is built from `T_k` by adjoining one
//! seed from `S_{k+1}`, discarding subspaces with singular elements,
//! bucketing by invariants and resolving each bucket with equivalence tests.
//!
//! The surviving representative of each class is the first candidate of that
//! class in `(parent, seed)` order, so the output does not depend on how
//! buckets are scheduled across threads.
//!
//! A representative of `T_k` is stored as its `(parent, seed)` link into
//! `T_{k−1}`; its basis is the chain of seed matrices, which for a full
//! spread set is already the canonical first-row basis.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equivalence::EquivTarget;
use crate::error::{Error, Result};
use crate::gf::{FieldDesc, FieldElement as Fe, FieldSpec};
use crate::invariants::{ratio_profile, vector_code, InvariantKey, MRankPlan, RankMultiset, VectorClassRegistry, VectorCode};
use crate::io::{SpreadSetFile, VectorCodeFile};
use crate::linalg::Mat;
use crate::params::CodeParams;
use crate::small;
use crate::spreadset::{MatrixCode, SeedSets};

pub const CHECKPOINT_VERSION: u32 = 2;

/// Steps at which candidates are keyed by `i(C)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeySteps {
    /// every step
    All,
    /// only the step producing full spread sets
    #[default]
    Final,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Bucket candidates by invariants; otherwise every candidate is tested
    /// against every representative.
    pub use_invariants: bool,
    /// Start from `T_1 = {⟨I⟩}` instead of all of `S_1`.
    pub identity_seed: bool,
    /// Candidates per invariant-computation batch.
    pub chunk_size: usize,
    /// Also bucket by [`ratio_profile`].
    pub refine_buckets: bool,
    pub key_steps: KeySteps,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            use_invariants: true,
            identity_seed: false,
            chunk_size: 20_000,
            refine_buckets: true,
            key_steps: KeySteps::Final,
        }
    }
}

impl ClassifyConfig {
    /// Buckets by `i(C)` alone at every step.
    pub fn invariant_key_only() -> Self {
        ClassifyConfig { refine_buckets: false, key_steps: KeySteps::All, ..Default::default() }
    }

    /// A single bucket per step.
    pub fn without_invariants() -> Self {
        ClassifyConfig { use_invariants: false, ..Default::default() }
    }
}

/// Counters for one `k → k+1` step. The `distinct_*` fields count over the
/// new representatives and are zero at steps without `i(C)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub k: usize,
    pub candidates: u64,
    pub survivors: u64,
    pub representatives: u64,
    pub buckets: u64,
    pub invariant_hits: u64,
    pub invariant_misses: u64,
    pub equivalence_tests: u64,
    pub distinct_rank_multisets: u64,
    pub distinct_vector_classes: u64,
    pub distinct_keys: u64,
    pub secs_generate: f64,
    pub secs_invariants: f64,
    pub secs_merge: f64,
}

impl StepStats {
    pub const CSV_HEADER: &'static str = "k,candidates,survivors,representatives,buckets,invariant_hits,invariant_misses,equivalence_tests,distinct_rank_multisets,distinct_vector_classes,distinct_keys,secs_generate,secs_invariants,secs_merge";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3}",
            self.k,
            self.candidates,
            self.survivors,
            self.representatives,
            self.buckets,
            self.invariant_hits,
            self.invariant_misses,
            self.equivalence_tests,
            self.distinct_rank_multisets,
            self.distinct_vector_classes,
            self.distinct_keys,
            self.secs_generate,
            self.secs_invariants,
            self.secs_merge
        )
    }
}

#[derive(Clone, Debug)]
pub struct Representative {
    pub code: MatrixCode,
    pub key: Option<InvariantKey>,
    /// index in `T_{k−1}` and seed index in `S_k` this class was first seen as
    pub parent: usize,
    pub seed: usize,
}

/// A candidate `⟨T_k[parent], S_{k+1}[seed]⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub parent: u32,
    pub seed: u32,
}

/// Candidate indices grouped into buckets; each bucket lists its members in
/// increasing index order.
#[derive(Clone, Debug, Default)]
pub struct Buckets {
    order: Vec<u32>,
    bounds: Vec<usize>,
}

impl Buckets {
    /// All `n` candidates in one bucket.
    pub fn single(n: usize) -> Self {
        if n == 0 {
            return Buckets::default();
        }
        Buckets { order: (0..n as u32).collect(), bounds: vec![0, n] }
    }

    /// Groups indices `0..keys.len()` by equal key.
    pub fn by_key<K: Ord + Copy + Send + Sync>(keys: &[K]) -> Self {
        let mut order: Vec<u32> = (0..keys.len() as u32).collect();
        order.par_sort_unstable_by_key(|&i| (keys[i as usize], i));
        let mut bounds = vec![0];
        for w in 1..order.len() {
            if keys[order[w] as usize] != keys[order[w - 1] as usize] {
                bounds.push(w);
            }
        }
        if !order.is_empty() {
            bounds.push(order.len());
        }
        Buckets { order, bounds }
    }

    pub fn len(&self) -> usize {
        self.bounds.len().saturating_sub(1)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.order[self.range(i)]
    }

    fn range(&self, i: usize) -> Range<usize> {
        self.bounds[i]..self.bounds[i + 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }
}

/// Per-candidate invariants of one step.
#[derive(Clone, Debug, Default)]
pub struct CandidateKeys {
    /// interned `i(C)` values, empty when not computed
    pub table: Vec<InvariantKey>,
    /// index into `table` per candidate
    pub key_ids: Vec<u32>,
    /// ratio profile per candidate, empty when not computed
    pub profiles: Vec<u64>,
}

pub struct ClassificationState {
    params: Arc<CodeParams>,
    config: ClassifyConfig,
    k: usize,
    /// `levels[j][i]` = `(parent, seed)` of `T_j[i]`; `levels[0]` is the zero code
    levels: Vec<Vec<(u32, u32)>>,
    /// `i(C)` of the members of `T_k`, when computed at step `k`
    keys: Option<Vec<InvariantKey>>,
    registry: VectorClassRegistry,
    stats: Vec<StepStats>,
    seeds: SeedSets,
    plan: MRankPlan,
}

impl ClassificationState {
    pub fn new(params: &Arc<CodeParams>, config: ClassifyConfig) -> Result<Self> {
        Ok(ClassificationState {
            params: params.clone(),
            config,
            k: 0,
            levels: vec![vec![(0, 0)]],
            keys: None,
            registry: VectorClassRegistry::new(),
            stats: Vec::new(),
            seeds: SeedSets::new(params),
            plan: MRankPlan::new(params, 2)?,
        })
    }

    pub fn params(&self) -> &Arc<CodeParams> {
        &self.params
    }
    pub fn config(&self) -> &ClassifyConfig {
        &self.config
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn registry(&self) -> &VectorClassRegistry {
        &self.registry
    }
    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }
    pub fn seeds(&self) -> &SeedSets {
        &self.seeds
    }
    pub fn is_complete(&self) -> bool {
        self.k == self.params.full_dim()
    }

    pub fn set_config(&mut self, config: ClassifyConfig) {
        self.config = config;
    }

    /// Drops the steps after `k`.
    pub fn truncate(&mut self, k: usize) {
        if k < self.k {
            self.levels.truncate(k + 1);
            self.stats.truncate(k);
            self.keys = None;
            self.k = k;
        }
    }

    /// `|T_k|`
    pub fn num_representatives(&self) -> usize {
        self.levels[self.k].len()
    }

    /// Seed matrices along the chain of `T_k[i]`, flattened, in basis order.
    fn chain_basis(&self, mut i: usize) -> Vec<&[Fe]> {
        let mut basis = vec![&[][..]; self.k];
        for j in (1..=self.k).rev() {
            let (p, s) = self.levels[j][i];
            basis[j - 1] = &self.seeds.set(j - 1)[s as usize];
            i = p as usize;
        }
        basis
    }

    fn code_from_flat(&self, flat: &[&[Fe]]) -> Result<MatrixCode> {
        let n = self.params.n();
        let mats = flat.iter().map(|m| Mat::from_vec(self.params.big(), n, n, m.to_vec())).collect::<Result<Vec<_>>>()?;
        MatrixCode::new(&self.params, mats)
    }

    /// `T_k[i]` with its chain basis.
    pub fn representative_code(&self, i: usize) -> Result<MatrixCode> {
        self.code_from_flat(&self.chain_basis(i))
    }

    pub fn representative(&self, i: usize) -> Result<Representative> {
        let (parent, seed) = self.levels[self.k][i];
        Ok(Representative {
            code: self.representative_code(i)?.canonical_basis()?,
            key: self.keys.as_ref().map(|k| k[i].clone()),
            parent: parent as usize,
            seed: seed as usize,
        })
    }

    /// All of `T_k`, materialized.
    pub fn representatives(&self) -> Result<Vec<Representative>> {
        (0..self.num_representatives()).map(|i| self.representative(i)).collect()
    }

    /// The subspace spanned by the parent and the seed.
    pub fn candidate_code(&self, c: Candidate) -> Result<MatrixCode> {
        let mut basis = self.chain_basis(c.parent as usize);
        basis.push(&self.seeds.set(self.k)[c.seed as usize]);
        self.code_from_flat(&basis)
    }

    /// All all-invertible candidates for the next step, in canonical order,
    /// and the number of pairs examined.
    pub fn generate_candidates(&self) -> (Vec<Candidate>, u64) {
        if self.k == 0 && self.config.identity_seed {
            // the first member of S_1 is the identity
            return (vec![Candidate { parent: 0, seed: 0 }], 1);
        }
        let f = self.params.big();
        let (n, q) = (self.params.n(), self.params.q());
        let nn = n * n;
        let seeds = self.seeds.set(self.k);
        let parents = self.num_representatives();
        let cands: Vec<Candidate> = (0..parents)
            .into_par_iter()
            .flat_map_iter(|ri| {
                let span = small::span(f, q, n, &self.chain_basis(ri));
                let mut buf = vec![Fe::ZERO; nn];
                let ok: Vec<Candidate> = seeds
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| {
                        span.chunks_exact(nn).all(|m| {
                            small::add_into(f, m, a, &mut buf);
                            !small::det(f, n, &buf).is_zero()
                        })
                    })
                    .map(|(si, _)| Candidate { parent: ri as u32, seed: si as u32 })
                    .collect();
                ok.into_iter()
            })
            .collect();
        (cands, (parents * seeds.len()) as u64)
    }

    fn keyed_step(&self) -> bool {
        match self.config.key_steps {
            KeySteps::All => true,
            KeySteps::Final => self.k + 1 == self.params.full_dim(),
        }
    }

    /// Invariants of each candidate: `i(C)` when this step is keyed and the
    /// ratio profile when refinement is on. Registers new vector classes.
    pub fn candidate_keys(&mut self, cands: &[Candidate]) -> Result<CandidateKeys> {
        let with_key = self.keyed_step();
        let with_profile = self.config.refine_buckets;
        let mut rank_ids: HashMap<RankMultiset, u32> = HashMap::new();
        let mut code_ids: HashMap<VectorCode, u32> = HashMap::new();
        let mut ranks: Vec<RankMultiset> = Vec::new();
        let mut codes: Vec<VectorCode> = Vec::new();
        let mut ids: Vec<(u32, u32)> = Vec::new();
        let mut profiles = Vec::new();
        for chunk in cands.chunks(self.config.chunk_size.max(1)) {
            let batch: Vec<(Option<(RankMultiset, VectorCode)>, u64)> = chunk
                .par_iter()
                .map(|&c| {
                    let code = self.candidate_code(c)?;
                    let profile = if with_profile { ratio_profile(&code)? } else { 0 };
                    let key = if with_key { Some((self.plan.ranks(&code)?, vector_code(&code)?)) } else { None };
                    Ok((key, profile))
                })
                .collect::<Result<_>>()?;
            for (key, profile) in batch {
                if with_profile {
                    profiles.push(profile);
                }
                if let Some((r, d)) = key {
                    let rid = *rank_ids.entry(r.clone()).or_insert_with(|| {
                        ranks.push(r);
                        (ranks.len() - 1) as u32
                    });
                    let did = *code_ids.entry(d.clone()).or_insert_with(|| {
                        codes.push(d);
                        (codes.len() - 1) as u32
                    });
                    ids.push((rid, did));
                }
            }
        }
        let mut out = CandidateKeys { profiles, ..Default::default() };
        if with_key {
            let labels = self.label_codes(&codes)?;
            let mut key_index: HashMap<(u32, usize), u32> = HashMap::new();
            for (rid, did) in ids {
                let pair = (rid, labels[did as usize]);
                let id = *key_index.entry(pair).or_insert_with(|| {
                    out.table.push(InvariantKey { ranks: ranks[rid as usize].clone(), vclass: pair.1 });
                    (out.table.len() - 1) as u32
                });
                out.key_ids.push(id);
            }
        }
        Ok(out)
    }

    /// Vector-class labels for interned codes: a parallel lookup against the
    /// existing registry, then sequential registration in first-seen order.
    fn label_codes(&mut self, codes: &[VectorCode]) -> Result<Vec<usize>> {
        let registry = &self.registry;
        let found: Vec<Option<usize>> = codes.par_iter().map(|d| registry.find(d)).collect::<Result<_>>()?;
        let mut labels = Vec::with_capacity(codes.len());
        for (d, f) in codes.iter().zip(found) {
            let l = match f {
                Some(l) => {
                    self.registry.remember(d.clone(), l);
                    l
                }
                None => self.registry.label(d)?,
            };
            labels.push(l);
        }
        Ok(labels)
    }

    /// Buckets from computed keys; a single bucket when invariants are off.
    pub fn bucket(&self, n: usize, keys: &CandidateKeys) -> Buckets {
        if !self.config.use_invariants {
            return Buckets::single(n);
        }
        let composite: Vec<(u32, u64)> = (0..n)
            .map(|i| (keys.key_ids.get(i).copied().unwrap_or(0), keys.profiles.get(i).copied().unwrap_or(0)))
            .collect();
        Buckets::by_key(&composite)
    }

    /// Resolves candidates into class representatives. Returns the indices
    /// of the first candidate of each class, ascending, and the number of
    /// equivalence tests run.
    pub fn resolve_buckets(&self, cands: &[Candidate], buckets: &Buckets) -> Result<(Vec<u32>, u64)> {
        let results: Vec<(Vec<u32>, u64)> = (0..buckets.len())
            .into_par_iter()
            .map(|b| {
                let bucket = buckets.get(b);
                let mut targets: Vec<EquivTarget> = Vec::new();
                let mut firsts = Vec::new();
                let mut tests = 0u64;
                for &ci in bucket {
                    let code = self.candidate_code(cands[ci as usize])?;
                    let mut matched = false;
                    for t in &targets {
                        tests += 1;
                        if t.test(&code)?.is_some() {
                            matched = true;
                            break;
                        }
                    }
                    if !matched {
                        if bucket.len() > 1 {
                            targets.push(EquivTarget::new(&code)?);
                        }
                        firsts.push(ci);
                    }
                }
                Ok((firsts, tests))
            })
            .collect::<Result<_>>()?;
        let tests = results.iter().map(|r| r.1).sum();
        let mut firsts: Vec<u32> = results.into_iter().flat_map(|r| r.0).collect();
        firsts.par_sort_unstable();
        Ok((firsts, tests))
    }

    /// One step `T_k → T_{k+1}`.
    pub fn extend_step(&mut self) -> Result<&StepStats> {
        if self.is_complete() {
            return Err(Error::Checkpoint("classification already complete".into()));
        }
        let mut st = StepStats { k: self.k + 1, ..Default::default() };

        let t = Instant::now();
        let (cands, examined) = self.generate_candidates();
        st.candidates = examined;
        st.survivors = cands.len() as u64;
        st.secs_generate = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let keys = if self.config.use_invariants { self.candidate_keys(&cands)? } else { CandidateKeys::default() };
        let buckets = self.bucket(cands.len(), &keys);
        st.buckets = buckets.len() as u64;
        if self.config.use_invariants {
            st.invariant_misses = buckets.len() as u64;
            st.invariant_hits = st.survivors - st.invariant_misses;
        }
        st.secs_invariants = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (firsts, tests) = self.resolve_buckets(&cands, &buckets)?;
        st.equivalence_tests = tests;
        let level: Vec<(u32, u32)> = firsts.iter().map(|&ci| (cands[ci as usize].parent, cands[ci as usize].seed)).collect();
        let new_keys: Option<Vec<InvariantKey>> = (!keys.key_ids.is_empty())
            .then(|| firsts.iter().map(|&ci| keys.table[keys.key_ids[ci as usize] as usize].clone()).collect());
        st.secs_merge = t.elapsed().as_secs_f64();

        st.representatives = level.len() as u64;
        if let Some(ks) = &new_keys {
            let count = |f: &dyn Fn(&InvariantKey) -> String| -> u64 {
                let mut set: Vec<String> = ks.iter().map(f).collect();
                set.sort();
                set.dedup();
                set.len() as u64
            };
            st.distinct_rank_multisets = count(&|k| k.ranks.to_string());
            st.distinct_vector_classes = count(&|k| k.vclass.to_string());
            st.distinct_keys = count(&|k| format!("{}|{}", k.ranks, k.vclass));
        }

        self.levels.push(level);
        self.keys = new_keys;
        self.k += 1;
        self.stats.push(st);
        Ok(self.stats.last().expect("just pushed"))
    }

    /// Runs the remaining steps, saving a checkpoint after each one.
    pub fn run(&mut self, checkpoint: Option<&Path>, mut progress: impl FnMut(&StepStats)) -> Result<()> {
        while !self.is_complete() {
            let st = self.extend_step()?.clone();
            progress(&st);
            if let Some(path) = checkpoint {
                self.save(path)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            format_version: CHECKPOINT_VERSION,
            field: self.params.big().desc(),
            q: self.params.q(),
            n: self.params.n(),
            s: self.params.s(),
            config: self.config.clone(),
            k: self.k,
            levels: self.levels.clone(),
            keys: self.keys.clone(),
            registry: self.registry.representatives().map(VectorCodeFile::from_code).collect(),
            stats: self.stats.clone(),
        };
        let tmp = path.with_extension("tmp");
        {
            let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
            serde_json::to_writer(&mut out, &file)?;
            out.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: CheckpointFile =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("unreadable checkpoint: {e}")))?;
        if file.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {} (expected {CHECKPOINT_VERSION})",
                file.format_version
            )));
        }
        let big = FieldSpec::from_desc(&file.field)?;
        if big.degree() != file.s {
            return Err(Error::Checkpoint("field degree does not match s".into()));
        }
        let params = CodeParams::with_field(file.q, file.n, big)?;
        if file.k > params.full_dim() || file.levels.len() != file.k + 1 {
            return Err(Error::Checkpoint(format!("inconsistent dimension {}", file.k)));
        }
        let mut state = ClassificationState::new(&params, file.config)?;
        if file.levels[0] != [(0, 0)] {
            return Err(Error::Checkpoint("level 0 must hold the zero code".into()));
        }
        for j in 1..file.levels.len() {
            let (prev, seeds) = (file.levels[j - 1].len(), state.seeds.set(j - 1).len());
            if file.levels[j].iter().any(|&(p, s)| p as usize >= prev || s as usize >= seeds) {
                return Err(Error::Checkpoint(format!("level {j} refers outside its parent level or seed set")));
            }
        }
        if file.keys.as_ref().is_some_and(|k| k.len() != file.levels[file.k].len()) {
            return Err(Error::Checkpoint("key count differs from representative count".into()));
        }
        let codes = file.registry.iter().map(|c| c.to_code()).collect::<Result<Vec<_>>>()?;
        state.k = file.k;
        state.levels = file.levels;
        state.keys = file.keys;
        state.registry = VectorClassRegistry::from_representatives(codes)?;
        state.stats = file.stats;
        Ok(state)
    }

    /// Writes one spread-set file per representative, `stats.csv`,
    /// `invariants.csv` and `registry.json` into `dir`.
    pub fn write_results(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut inv = String::from("class_id,rank_multiset,vclass_label\n");
        for i in 0..self.num_representatives() {
            let r = self.representative(i)?;
            let file = SpreadSetFile::from_code(&r.code);
            fs::write(dir.join(format!("class_{:04}.json", i + 1)), serde_json::to_string(&file)?)?;
            match &r.key {
                Some(k) => inv.push_str(&format!("{},{},{}\n", i + 1, k.ranks, k.vclass)),
                None => inv.push_str(&format!("{},,\n", i + 1)),
            }
        }
        let mut stats = String::from(StepStats::CSV_HEADER);
        stats.push('\n');
        for s in &self.stats {
            stats.push_str(&s.csv_row());
            stats.push('\n');
        }
        fs::write(dir.join("stats.csv"), stats)?;
        fs::write(dir.join("invariants.csv"), inv)?;
        let reg = crate::io::RegistryFile { codes: self.registry.representatives().map(VectorCodeFile::from_code).collect() };
        fs::write(dir.join("registry.json"), serde_json::to_string_pretty(&reg)?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    field: FieldDesc,
    q: u32,
    n: usize,
    s: u32,
    config: ClassifyConfig,
    k: usize,
    levels: Vec<Vec<(u32, u32)>>,
    keys: Option<Vec<InvariantKey>>,
    registry: Vec<VectorCodeFile>,
    stats: Vec<StepStats>,
}

/// Classifies all-invertible `ns`-dimensional subspaces of `M_n(F_{q^s})`.
pub fn classify(q: u32, n: usize, s: u32, config: ClassifyConfig) -> Result<ClassificationState> {
    let params = CodeParams::new(q, n, s)?;
    let mut state = ClassificationState::new(&params, config)?;
    state.run(None, |_| {})?;
    Ok(state)
}
