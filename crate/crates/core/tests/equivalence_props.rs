mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use semiclass::equivalence::{brute_force_matrix_equiv, matrix_code_equivalent};
use semiclass::invariants::{invariant_key, VectorClassRegistry};
use semiclass::lemmas::{random_invertible, random_subspace};
use semiclass::spreadset::{desarguesian, first_twisted_field};
use semiclass::{Automorphism, CodeParams, MatrixCode};

fn random_image(rng: &mut StdRng, c: &MatrixCode) -> MatrixCode {
    let p = c.params();
    let x = random_invertible(rng, p.big(), p.n());
    let y = random_invertible(rng, p.big(), p.n());
    c.transform(&x, &y, Automorphism::new(rng.gen_range(0..p.s()))).unwrap()
}

fn any_spread_set(rng: &mut StdRng) -> MatrixCode {
    let p = CodeParams::new(2, 2, 4).unwrap();
    let base = if rng.gen_bool(0.5) { desarguesian(&p).unwrap() } else { first_twisted_field(&p, 2).unwrap() };
    random_image(rng, &base)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn witnesses_verify_and_invert(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let c = any_spread_set(&mut rng);
        let d = random_image(&mut rng, &c);
        let w = matrix_code_equivalent(&c, &d).unwrap().expect("images are equivalent");
        prop_assert!(w.verify(&c, &d).unwrap());
        prop_assert!(w.inverse().unwrap().verify(&d, &c).unwrap());
        let back = matrix_code_equivalent(&d, &c).unwrap().expect("symmetric");
        prop_assert!(back.verify(&d, &c).unwrap());
    }

    #[test]
    fn decision_is_symmetric(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let c = any_spread_set(&mut rng);
        let d = any_spread_set(&mut rng);
        let ab = matrix_code_equivalent(&c, &d).unwrap();
        let ba = matrix_code_equivalent(&d, &c).unwrap();
        prop_assert_eq!(ab.is_some(), ba.is_some());
        if let Some(w) = ab {
            prop_assert!(w.verify(&c, &d).unwrap());
        }
    }

    #[test]
    fn different_keys_mean_inequivalent(seed in any::<u64>(), k in 1usize..=4) {
        let p = CodeParams::new(2, 2, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_subspace(&mut rng, &p, k);
        let d = random_subspace(&mut rng, &p, k);
        prop_assume!(c.is_semifield_code() == d.is_semifield_code());
        prop_assume!(c.is_semifield_code());
        let mut reg = VectorClassRegistry::new();
        if invariant_key(&c, &mut reg).unwrap() != invariant_key(&d, &mut reg).unwrap() {
            prop_assert!(matrix_code_equivalent(&c, &d).unwrap().is_none());
        }
    }

    #[test]
    fn agrees_with_brute_force_at_2_2_2(seed in any::<u64>(), k in 1usize..=4, related in any::<bool>()) {
        let p = CodeParams::new(2, 2, 2).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let c = random_subspace(&mut rng, &p, k);
        let d = if related { random_image(&mut rng, &c) } else { random_subspace(&mut rng, &p, k) };
        let fast = matrix_code_equivalent(&c, &d).unwrap();
        prop_assert_eq!(fast.is_some(), brute_force_matrix_equiv(&c, &d).unwrap());
        if let Some(w) = fast {
            prop_assert!(w.verify(&c, &d).unwrap());
        }
    }
}
