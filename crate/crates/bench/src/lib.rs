//! Fixtures shared by the criterion benches under `benches/`.

use rand::seq::index;
use tgt_core::{
    build_scheme, construct_disjunct, construct_good, rng_from_seed, DefectiveSet, DisjunctConfig,
    GoodConfig, Scheme, SchemeParams,
};

/// A certified scheme built from `seed`.
pub fn fixture(n: usize, d: usize, u: usize, e: usize, p: f64, seed: u64) -> Scheme {
    let params = SchemeParams::new(n, d, u, e, p).expect("valid parameters");
    let mut rng = rng_from_seed(seed);
    let (m, _) = construct_disjunct(n, d, &DisjunctConfig::default(), &mut rng)
        .expect("disjunct construction");
    let (g, _) =
        construct_good(&params, &GoodConfig::default(), &mut rng).expect("good construction");
    build_scheme(params, g, m).expect("consistent dimensions")
}

/// A defective set of exactly `size` items.
pub fn defectives(n: usize, size: usize, seed: u64) -> DefectiveSet {
    DefectiveSet::new(index::sample(&mut rng_from_seed(seed), n, size).into_vec())
}
