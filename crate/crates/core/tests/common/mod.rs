#![allow(dead_code)]

use permloglin::fit::explicit_l_mle;
use permloglin::perm::{factorial, enumerate_permutations, DistributionTable, MarginalAtoms};
use permloglin::subspaces::{generators, Family, GeneratorFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive table with independent uniform weights in [0.05, 1).
pub fn random_table(n: usize, seed: u64) -> DistributionTable {
    let mut r = rng(seed);
    let w = (0..factorial(n)).map(|_| r.gen_range(0.05..1.0)).collect();
    DistributionTable::from_weights(n, w).unwrap()
}

/// Generic positive L-decomposable table.
pub fn random_l_table(n: usize, seed: u64) -> DistributionTable {
    explicit_l_mle(&random_table(n, seed), false).unwrap().fitted
}

/// `p = c exp(sum_B theta_B(|pi_B|))` with random log-parameters on every
/// atom of the family's generators.
pub fn random_log_linear_table(kind: Family, n: usize, seed: u64, scale: f64) -> DistributionTable {
    let mut r = rng(seed);
    let mut logs = vec![0.0; factorial(n)];
    for g in generators(&GeneratorFamily::new(kind, n)) {
        let atoms = MarginalAtoms::new(&g).unwrap();
        let theta: Vec<f64> = (0..atoms.num_atoms()).map(|_| r.gen_range(-scale..scale)).collect();
        for (x, &a) in logs.iter_mut().zip(atoms.atom_ids()) {
            *x += theta[a as usize];
        }
    }
    DistributionTable::from_weights(n, logs.into_iter().map(f64::exp).collect()).unwrap()
}

/// Counts `round(p * scale)`, at least one.
pub fn counts_of(p: &DistributionTable, scale: f64) -> permloglin::fit::EmpiricalData {
    let counts = p.probs().iter().map(|&q| ((q * scale).round() as u64).max(1)).collect();
    permloglin::fit::EmpiricalData::new(p.n(), counts).unwrap()
}

pub fn perms(n: usize) -> &'static [permloglin::perm::Permutation] {
    enumerate_permutations(n).unwrap()
}
