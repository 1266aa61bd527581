mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use semiclass::invariants::{
    invariant_key, m_ranks_direct, m_ranks_fast, ratio_profile, vector_code, RankMultiset, VectorClassRegistry,
};
use semiclass::lemmas::{random_invertible, random_subspace};
use semiclass::spreadset::{desarguesian, first_twisted_field};
use semiclass::{Automorphism, CodeParams, MatrixCode};

fn random_spread_set(rng: &mut StdRng, p: &std::sync::Arc<CodeParams>) -> MatrixCode {
    let base = if rand::Rng::gen_bool(rng, 0.5) { desarguesian(p).unwrap() } else { first_twisted_field(p, 2).unwrap() };
    let x = random_invertible(rng, p.big(), 2);
    let y = random_invertible(rng, p.big(), 2);
    let rho = Automorphism::new(rand::Rng::gen_range(rng, 0..p.s()));
    base.transform(&x, &y, rho).unwrap()
}

#[test]
fn one_ranks_of_spread_sets_are_full() {
    let p = CodeParams::new(2, 2, 4).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let expected = RankMultiset::from_counts([(0, 1), (8, 255)]);
    for _ in 0..10 {
        let c = random_spread_set(&mut rng, &p);
        assert_eq!(m_ranks_fast(&c, 1).unwrap(), expected);
    }
    assert_eq!(m_ranks_direct(&desarguesian(&p).unwrap(), 1).unwrap(), expected);
}

/// The field's spread set spans a 2-dimensional F_16-algebra, so `D` is the
/// space of its F_16-linear functionals: dimension 2, and every nonzero
/// functional maps the field onto F_16, giving rank weight 4.
#[test]
fn vector_code_of_the_field() {
    let p = CodeParams::new(2, 2, 4).unwrap();
    let d = vector_code(&desarguesian(&p).unwrap()).unwrap();
    assert_eq!((d.length(), d.dim()), (8, 2));
    assert_eq!(d.rank_weight_distribution().unwrap(), vec![1, 0, 0, 0, 255, 0, 0, 0, 0]);
}

/// Spread sets with different line profiles never share a vector-class label.
#[test]
fn vector_labels_agree_with_line_profiles() {
    let p = CodeParams::new(2, 2, 4).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let mut registry = VectorClassRegistry::new();
    let mut profile_of: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for _ in 0..40 {
        let c = common::random_spread_set(&mut rng, &p);
        let profile = common::line_profile(&c);
        let x = random_invertible(&mut rng, p.big(), 2);
        let y = random_invertible(&mut rng, p.big(), 2);
        let image = c.transform(&x, &y, Automorphism::new(rand::Rng::gen_range(&mut rng, 0..4))).unwrap();
        assert_eq!(common::line_profile(&image), profile);
        let label = registry.label(&vector_code(&c).unwrap()).unwrap();
        assert_eq!(profile_of.entry(label).or_insert_with(|| profile.clone()), &profile);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_m_ranks_match_direct(seed in any::<u64>(), case in 0usize..4, k in 1usize..=4) {
        let (s, m) = [(2, 1), (2, 2), (4, 2), (4, 4)][case];
        let p = CodeParams::new(2, 2, s).unwrap();
        // keep the direct enumeration over F_{2^m}^k small
        let k = k.min(16 / m as usize).min(p.full_dim());
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_subspace(&mut rng, &p, k);
        prop_assert_eq!(m_ranks_fast(&c, m).unwrap(), m_ranks_direct(&c, m).unwrap());
    }

    #[test]
    fn m_ranks_divisible_by_s_over_m(seed in any::<u64>(), k in 1usize..=8, m in prop::sample::select(vec![1u32, 2, 4])) {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_subspace(&mut rng, &p, k);
        let r = m_ranks_fast(&c, m).unwrap();
        prop_assert_eq!(r.total(), 1u64 << (m as usize * k));
        prop_assert!(r.nonzero_ranks().all(|x| x % (4 / m as usize) == 0));
    }

    #[test]
    fn invariant_key_is_isotopy_invariant(seed in any::<u64>()) {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_spread_set(&mut rng, &p);
        let x = random_invertible(&mut rng, p.big(), 2);
        let y = random_invertible(&mut rng, p.big(), 2);
        let rho = Automorphism::new(rand::Rng::gen_range(&mut rng, 0..4));
        let t = c.transform(&x, &y, rho).unwrap();
        let mut reg = VectorClassRegistry::new();
        prop_assert_eq!(invariant_key(&c, &mut reg).unwrap(), invariant_key(&t, &mut reg).unwrap());
        prop_assert_eq!(ratio_profile(&c).unwrap(), ratio_profile(&t).unwrap());
    }

    #[test]
    fn ratio_profile_invariant_on_partial_codes(seed in any::<u64>(), k in 1usize..=5) {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_subspace(&mut rng, &p, k);
        let x = random_invertible(&mut rng, p.big(), 2);
        let y = random_invertible(&mut rng, p.big(), 2);
        let rho = Automorphism::new(rand::Rng::gen_range(&mut rng, 0..4));
        prop_assert_eq!(ratio_profile(&c).unwrap(), ratio_profile(&c.transform(&x, &y, rho).unwrap()).unwrap());
    }

    #[test]
    fn vector_code_of_spread_set_has_no_zero_weight_words(seed in any::<u64>()) {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let d = vector_code(&random_spread_set(&mut rng, &p)).unwrap();
        let dist = d.rank_weight_distribution().unwrap();
        prop_assert_eq!(dist[0], 1);
        prop_assert_eq!(dist.iter().sum::<u64>(), 1u64 << (4 * d.dim()));
    }

    #[test]
    fn degenerate_vector_codes_are_handled(seed in any::<u64>(), k in 1usize..=3) {
        // few basis matrices give a vector code of small dimension
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_subspace(&mut rng, &p, k);
        let d = vector_code(&c).unwrap();
        prop_assert!(d.dim() <= d.length());
        let dist = d.rank_weight_distribution().unwrap();
        prop_assert_eq!(dist.iter().sum::<u64>(), 1u64 << (4 * d.dim()));
    }
}
