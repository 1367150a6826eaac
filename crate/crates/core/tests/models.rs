mod common;

use common::*;
use permloglin::classic::{classic_distribution, sample, ClassicKind, ClassicSpec};
use permloglin::decompose::{check_partition_independence, is_decomposable, right_multiply, DEFAULT_TOL};
use permloglin::fit::{
    alternating_fit, empirical, fit_counts, ipfp_fit, search_relabelling, EmpiricalData, FitOptions, Side,
};
use permloglin::perm::{relabel_distribution, right_invariance_group, Permutation, SetPartition};
use permloglin::subspaces::{Family, GeneratorFamily};

const GENERIC_SEED: u64 = 7;

fn model(kind: ClassicKind, n: usize) -> permloglin::perm::DistributionTable {
    classic_distribution(&ClassicSpec::generic(kind, n, GENERIC_SEED).unwrap()).unwrap()
}

fn holds(p: &permloglin::perm::DistributionTable, f: Family) -> bool {
    is_decomposable(p, f, DEFAULT_TOL).unwrap().verdict
}

#[test]
fn classical_models_decompose_as_stated() {
    for n in [4, 5] {
        let luce = model(ClassicKind::Luce, n);
        assert!(holds(&luce, Family::L) && holds(&luce, Family::LS) && !holds(&luce, Family::LPrime));
        let bs = model(ClassicKind::BabingtonSmith, n);
        assert!(holds(&bs, Family::L) && !holds(&bs, Family::LPrime));
        for kind in [ClassicKind::Mbt, ClassicKind::QuasiIndependence] {
            assert!(holds(&model(kind, n), Family::Bi), "{kind:?}");
        }
        for kind in [ClassicKind::Multistage, ClassicKind::RepeatedInsertion] {
            let p = model(kind, n);
            assert!(holds(&p, Family::L) && holds(&p, Family::LPrime), "{kind:?}");
        }
    }
}

#[test]
fn quasi_independence_pairwise_property() {
    for n in [4, 5] {
        let p = model(ClassicKind::QuasiIndependence, n);
        for a in 0..n {
            for b in a + 1..n {
                let rest: Vec<usize> = (0..n).filter(|&x| x != a && x != b).collect();
                let z = SetPartition::new(n, vec![vec![a, b], rest]).unwrap();
                let v = check_partition_independence(&p, &z, DEFAULT_TOL).unwrap();
                assert!(v.holds, "n={n} Z1={{{a},{b}}}: {}", v.max_violation);
            }
        }
        // a generic table fails it
        let q = random_table(n, 3);
        let z = SetPartition::new(n, vec![vec![0, 1], (2..n).collect()]).unwrap();
        assert!(!check_partition_independence(&q, &z, DEFAULT_TOL).unwrap().holds);
    }
}

#[test]
fn witnesses_for_five_points() {
    let n = 5;
    let group = right_invariance_group(n);
    for sigma in perms(n).iter().filter(|s| !group.contains(s)) {
        let (_, q) = permloglin::decompose::right_multiplication_witness(sigma).unwrap().unwrap();
        assert!(holds(&q, Family::Bi));
        assert!(!holds(&right_multiply(&q, sigma).unwrap(), Family::L), "{sigma}");
    }
}

#[test]
fn alternating_projections_match_ipfp() {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let r = random_table(4, 40 + seed);
        let alt = alternating_fit(&r, &FitOptions::default()).unwrap();
        let ipf = ipfp_fit(&GeneratorFamily::new(Family::Bi, 4), &r, &FitOptions::default()).unwrap();
        assert!(alt.converged && ipf.converged);
        worst = worst.max((alt.log_likelihood - ipf.log_likelihood).abs());
    }
    assert!(worst <= 1e-4, "{worst}");

    let bi = random_log_linear_table(Family::Bi, 4, 8, 1.0);
    let alt = alternating_fit(&bi, &FitOptions::default()).unwrap();
    assert!(alt.fitted.max_abs_diff(&bi) < 1e-9);
}

#[test]
fn mbt_fit_reproduces_marginals() {
    let r = model(ClassicKind::Mbt, 4);
    let rep = ipfp_fit(&GeneratorFamily::new(Family::Bi, 4), &r, &FitOptions::default()).unwrap();
    assert!(rep.converged && rep.max_marginal_gap <= 1e-9);
    assert!(rep.fitted.max_abs_diff(&r) < 1e-9);
}

#[test]
fn search_finds_natural_order_for_l_data() {
    let p = random_l_table(4, 21);
    let data = counts_of(&p, 1e7);
    let res = search_relabelling(&data, &GeneratorFamily::new(Family::L, 4), Side::Right, &FitOptions::default()).unwrap();
    assert_eq!(res.sigma, Permutation::identity(4));
    assert_eq!(res.rho, Permutation::identity(4));
    // three classes of eight
    assert_eq!(res.candidates_evaluated, 3);
}

fn class_rep(s: &Permutation) -> Permutation {
    right_invariance_group(s.len()).iter().map(|g| g.compose(s).unwrap()).min().unwrap()
}

#[test]
fn search_recovers_a_scrambled_bi_labelling() {
    let n = 4;
    let p = random_log_linear_table(Family::Bi, n, 17, 1.5);
    let sigma0 = Permutation::from_one_based(&[2, 4, 1, 3]).unwrap();
    let rho0 = Permutation::from_one_based(&[3, 1, 4, 2]).unwrap();
    let scrambled = relabel_distribution(&p, &sigma0, &rho0).unwrap();
    let data = counts_of(&scrambled, 1e7);
    let res = search_relabelling(&data, &GeneratorFamily::new(Family::Bi, n), Side::Both, &FitOptions::default()).unwrap();
    assert_eq!(res.sigma, class_rep(&sigma0.inverse()));
    assert_eq!(res.rho, class_rep(&rho0.inverse()));
    assert!(res.best.relabelling.is_some());
}

#[test]
fn mbt_fits_equally_under_every_relabelling() {
    // the BI model contains every relabelling of an MBT table, so all ties
    let n = 4;
    let data = counts_of(&model(ClassicKind::Mbt, n), 1e6);
    let fam = GeneratorFamily::new(Family::Bi, n);
    let base = fit_counts(&fam, &data, &FitOptions::default()).unwrap().log_likelihood;
    for (s, r) in [(5, 0), (11, 17), (0, 23)] {
        let sigma = Permutation::unrank(n, s).unwrap();
        let rho = Permutation::unrank(n, r).unwrap();
        let moved = fit_counts(&fam, &data.relabel(&sigma, &rho).unwrap(), &FitOptions::default()).unwrap();
        assert!((moved.log_likelihood - base).abs() < 1e-6 * base.abs());
    }
}

#[test]
fn sampled_data_fit() {
    let p = model(ClassicKind::Luce, 4);
    let data = sample(&p, 20_000, 5).unwrap();
    assert_eq!(data.total(), 20_000);
    let rep = fit_counts(&GeneratorFamily::new(Family::L, 4), &data, &FitOptions::default()).unwrap();
    assert_eq!(rep.df, 23 - 17);
    // a correct model gives GOF of the order of df
    assert!(rep.gof_chi_square < 40.0, "{}", rep.gof_chi_square);
    let r = empirical(&data).unwrap();
    assert!(r.max_abs_diff(&p) < 0.02);
    let again: EmpiricalData = sample(&p, 20_000, 5).unwrap();
    assert_eq!(again, data);
}
