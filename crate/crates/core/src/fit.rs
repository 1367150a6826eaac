//! Maximum-likelihood fitting of product-partition models: the explicit
//! estimate for L and L', iterative proportional fitting for every family,
//! alternating projections, and the chi-square report.
//!
//! Fits on a bare distribution `r` measure likelihood and chi-square per unit
//! mass (as if `m = 1`); [`gof_report`] rescales to the actual sample size.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{canonical_lambda, distribution_from_lambda, inverse_distribution};
use crate::error::{Error, Result};
use crate::perm::{factorial, group, relabel_distribution, right_invariance_group, DistributionTable, Limits, MarginalAtoms, Permutation, HARD_MAX_N};
use crate::subspaces::{formula_dimension, generators, rank_dimension, Family, GeneratorFamily};

/// Slack allowed when checking that the IPFP likelihood never decreases.
pub const MONOTONICITY_SLACK: f64 = 1e-12;

/// Expected cell counts below this trigger a warning on the nominal df.
pub const SMALL_EXPECTED_COUNT: f64 = 5.0;

/// Observed counts per permutation, indexed by lexicographic rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalData {
    n: usize,
    counts: Vec<u64>,
}

impl EmpiricalData {
    pub fn new(n: usize, counts: Vec<u64>) -> Result<Self> {
        Limits::new(HARD_MAX_N)?.check(n)?;
        if counts.len() != factorial(n) {
            return Err(Error::Size(format!("{} counts for n = {n}, expected {n}!", counts.len())));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidData("all counts are zero".into()));
        }
        Ok(EmpiricalData { n, counts })
    }

    /// Merges repeated permutations by summing their counts.
    pub fn from_pairs<'a>(n: usize, pairs: impl IntoIterator<Item = (&'a Permutation, u64)>) -> Result<Self> {
        Limits::new(HARD_MAX_N)?.check(n)?;
        let mut counts = vec![0u64; factorial(n)];
        for (pi, c) in pairs {
            if pi.len() != n {
                return Err(Error::Size(format!("permutation {pi} in data for n = {n}")));
            }
            counts[pi.rank()] += c;
        }
        Self::new(n, counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, pi: &Permutation) -> u64 {
        self.counts[pi.rank()]
    }

    /// Sample size `m`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Observed permutations with their counts, in lexicographic order.
    pub fn observed(&self) -> impl Iterator<Item = (&'static Permutation, u64)> + '_ {
        group(self.n)
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(pi, &c)| (pi, c))
    }

    /// Counts moved from `pi` to `rho pi sigma^-1`.
    pub fn relabel(&self, sigma: &Permutation, rho: &Permutation) -> Result<Self> {
        if sigma.len() != self.n || rho.len() != self.n {
            return Err(Error::Size("relabelling size does not match the data".into()));
        }
        let sigma_inv = sigma.inverse();
        let mut counts = vec![0u64; self.counts.len()];
        for (pi, c) in self.observed() {
            counts[rho.compose_unchecked(pi).compose_unchecked(&sigma_inv).rank()] += c;
        }
        Ok(EmpiricalData { n: self.n, counts })
    }

    /// Counts moved from `pi` to `pi^-1`.
    pub fn inverse(&self) -> Self {
        let mut counts = vec![0u64; self.counts.len()];
        for (pi, c) in self.observed() {
            counts[pi.inverse().rank()] += c;
        }
        EmpiricalData { n: self.n, counts }
    }
}

/// Relative frequencies `r(pi) = count(pi) / m`.
pub fn empirical(data: &EmpiricalData) -> Result<DistributionTable> {
    DistributionTable::from_weights(data.n, data.counts.iter().map(|&c| c as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Uniform,
    Custom(DistributionTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_cycles: usize,
    pub marginal_tol: f64,
    pub likelihood_tol: f64,
    pub start: Start,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_cycles: 10_000,
            marginal_tol: 1e-9,
            likelihood_tol: 1e-12,
            start: Start::Uniform,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_cycles == 0 {
            return Err(Error::InvalidParameters("max_cycles must be at least 1".into()));
        }
        if !(self.marginal_tol > 0.0 && self.likelihood_tol > 0.0) {
            return Err(Error::InvalidParameters("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relabelling {
    pub sigma: Permutation,
    pub rho: Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub family: Family,
    pub n: usize,
    #[serde(skip)]
    pub fitted: DistributionTable,
    pub log_likelihood: f64,
    #[serde(rename = "gof")]
    pub gof_chi_square: f64,
    pub df: i64,
    /// `(GOF - df) / sqrt(df)`; absent when `df = 0`.
    #[serde(rename = "u")]
    pub u_statistic: Option<f64>,
    #[serde(rename = "cycles")]
    pub cycles_used: usize,
    pub converged: bool,
    pub max_marginal_gap: f64,
    pub fitted_positive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relabelling: Option<Relabelling>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Log-likelihood after every cycle (IPFP) or round (alternating fit).
    #[serde(skip)]
    pub likelihood_trace: Vec<f64>,
}

/// Free parameters of the family: the closed form where there is one, the
/// rank oracle otherwise.
pub fn free_parameters(family: &GeneratorFamily) -> Result<usize> {
    match formula_dimension(family) {
        Err(Error::UnsupportedFamily(_)) => rank_dimension(family),
        other => other,
    }
}

/// `(n! - 1) - free parameters`.
pub fn degrees_of_freedom(family: &GeneratorFamily) -> Result<i64> {
    Ok(factorial(family.n) as i64 - 1 - free_parameters(family)? as i64)
}

/// `sum w(pi) log p(pi)` over cells with positive weight.
pub fn log_likelihood(p: &DistributionTable, weights: &[f64]) -> f64 {
    p.probs()
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&q, &w)| if q > 0.0 { w * q.ln() } else { f64::NEG_INFINITY })
        .sum()
}

struct Marginals {
    atoms: Vec<MarginalAtoms>,
    target: Vec<Vec<f64>>,
}

impl Marginals {
    fn new(family: &GeneratorFamily, r: &DistributionTable) -> Result<Self> {
        let atoms: Vec<MarginalAtoms> = generators(family)
            .iter()
            .map(MarginalAtoms::new)
            .collect::<Result<_>>()?;
        let target = atoms.iter().map(|a| a.atom_sums(r.probs())).collect();
        Ok(Marginals { atoms, target })
    }

    /// Largest total-variation distance between fitted and target marginal
    /// laws over the generators.
    fn gap(&self, p: &[f64]) -> f64 {
        self.atoms
            .iter()
            .zip(&self.target)
            .map(|(a, t)| {
                0.5 * a.atom_sums(p).iter().zip(t).map(|(x, y)| (x - y).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn check_pair(family: &GeneratorFamily, r: &DistributionTable) -> Result<()> {
    if family.n != r.n() {
        return Err(Error::Size(format!("family on n = {} for a table on S_{}", family.n, r.n())));
    }
    Ok(())
}

/// Chi-square, df and U for `fitted` against cell weights with total `m`.
fn finish_report(
    family: &GeneratorFamily,
    fitted: DistributionTable,
    weights: &[f64],
    m: f64,
    mut warnings: Vec<String>,
) -> Result<FitReport> {
    let mut gof = 0.0;
    for (pi, (&q, &w)) in fitted.permutations().iter().zip(fitted.probs().iter().zip(weights)) {
        if q > 0.0 {
            let expected = m * q;
            gof += (w - expected).powi(2) / expected;
        } else if w > 0.0 {
            return Err(Error::SupportMismatch(pi.to_string()));
        }
    }
    let df = degrees_of_freedom(family)?;
    let u = (df > 0).then(|| (gof - df as f64) / (df as f64).sqrt());
    if df <= 0 {
        warnings.push("df is 0: U statistic undefined".into());
    }
    let fitted_positive = fitted.is_positive();
    if !fitted_positive {
        warnings.push("fitted distribution has zeros (structural zeros in the data)".into());
    }
    Ok(FitReport {
        family: family.kind,
        n: family.n,
        log_likelihood: log_likelihood(&fitted, weights),
        gof_chi_square: gof,
        df,
        u_statistic: u,
        cycles_used: 0,
        converged: true,
        max_marginal_gap: 0.0,
        fitted_positive,
        relabelling: None,
        warnings,
        likelihood_trace: Vec::new(),
        fitted,
    })
}

/// Iterative proportional fitting: cycle over the generators, rescaling the
/// current table on every atom to the empirical atom mass.
pub fn ipfp_fit(family: &GeneratorFamily, r: &DistributionTable, opts: &FitOptions) -> Result<FitReport> {
    check_pair(family, r)?;
    opts.validate()?;
    let marginals = Marginals::new(family, r)?;
    let mut p = match &opts.start {
        Start::Uniform => DistributionTable::uniform(r.n())?.into_probs(),
        Start::Custom(q) => {
            check_pair(family, q)?;
            q.probs().to_vec()
        }
    };
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let mut gap = f64::INFINITY;
    let mut cycles = 0;
    while cycles < opts.max_cycles {
        cycles += 1;
        for (atoms, target) in marginals.atoms.iter().zip(&marginals.target) {
            let current = atoms.atom_sums(&p);
            let factors: Vec<f64> = current
                .iter()
                .zip(target)
                .map(|(&c, &t)| if c > 0.0 { t / c } else { 0.0 })
                .collect();
            for (x, &id) in p.iter_mut().zip(atoms.atom_ids()) {
                *x *= factors[id as usize];
            }
        }
        let ll: f64 = p
            .iter()
            .zip(r.probs())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&q, &w)| if q > 0.0 { w * q.ln() } else { f64::NEG_INFINITY })
            .sum();
        if let Some(&prev) = trace.last() {
            if ll < prev - MONOTONICITY_SLACK * f64::max(1.0, f64::abs(prev)) {
                warnings.push(format!("log-likelihood decreased in cycle {cycles}: {prev} -> {ll}"));
            }
        }
        trace.push(ll);
        gap = marginals.gap(&p);
        if gap <= opts.marginal_tol {
            break;
        }
    }
    let converged = gap <= opts.marginal_tol;
    if !converged {
        warnings.push(format!(
            "no convergence within {} cycles: marginal gap {gap:e}",
            opts.max_cycles
        ));
    }
    let fitted = DistributionTable::from_weights(r.n(), p)?;
    let mut report = finish_report(family, fitted, r.probs(), 1.0, warnings)?;
    report.cycles_used = cycles;
    report.converged = converged;
    report.max_marginal_gap = gap;
    report.likelihood_trace = trace;
    Ok(report)
}

fn explicit_table(r: &DistributionTable, primed: bool) -> Result<DistributionTable> {
    if primed {
        let q = inverse_distribution(r);
        Ok(inverse_distribution(&distribution_from_lambda(&canonical_lambda(&q))?))
    } else {
        distribution_from_lambda(&canonical_lambda(r))
    }
}

/// Closed-form MLE for L (or L' when `primed`): the distribution rebuilt from
/// the empirical conditional probabilities.
pub fn explicit_l_mle(r: &DistributionTable, primed: bool) -> Result<FitReport> {
    let kind = if primed { Family::LPrime } else { Family::L };
    let family = GeneratorFamily::new(kind, r.n());
    let fitted = explicit_table(r, primed)?;
    let gap = Marginals::new(&family, r)?.gap(fitted.probs());
    let mut report = finish_report(&family, fitted, r.probs(), 1.0, Vec::new())?;
    report.cycles_used = 1;
    report.max_marginal_gap = gap;
    report.likelihood_trace = vec![report.log_likelihood];
    Ok(report)
}

/// Alternates the explicit L and L' estimates, starting from `r`, until the
/// likelihood of `r` changes by at most `likelihood_tol` over a round.
///
/// Each step is a likelihood projection onto a family containing BI, so by
/// the Pythagorean identity a limit point is the BI estimate.
pub fn alternating_fit(r: &DistributionTable, opts: &FitOptions) -> Result<FitReport> {
    opts.validate()?;
    let family = GeneratorFamily::new(Family::Bi, r.n());
    let mut p = match &opts.start {
        Start::Uniform => r.clone(),
        Start::Custom(q) => q.clone(),
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    while rounds < opts.max_cycles {
        rounds += 1;
        p = explicit_table(&explicit_table(&p, false)?, true)?;
        let ll = log_likelihood(&p, r.probs());
        let done = trace.last().is_some_and(|&prev: &f64| (ll - prev).abs() <= opts.likelihood_tol);
        trace.push(ll);
        if done {
            converged = true;
            break;
        }
    }
    let gap = Marginals::new(&family, r)?.gap(p.probs());
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!("no convergence within {} rounds", opts.max_cycles));
    }
    let mut report = finish_report(&family, p, r.probs(), 1.0, warnings)?;
    report.cycles_used = rounds;
    report.converged = converged;
    report.max_marginal_gap = gap;
    report.likelihood_trace = trace;
    Ok(report)
}

/// Fits the family by the explicit estimate for L and L', IPFP otherwise.
pub fn fit_family(family: &GeneratorFamily, r: &DistributionTable, opts: &FitOptions) -> Result<FitReport> {
    match family.kind {
        Family::L => explicit_l_mle(r, false),
        Family::LPrime => explicit_l_mle(r, true),
        _ => ipfp_fit(family, r, opts),
    }
}

/// Likelihood, Pearson chi-square, nominal df and U of `fitted` against the
/// observed counts. Fitting diagnostics are left at their defaults.
pub fn gof_report(fitted: &DistributionTable, data: &EmpiricalData, family: &GeneratorFamily) -> Result<FitReport> {
    if fitted.n() != data.n || family.n != data.n {
        return Err(Error::Size("fitted table, data and family must share n".into()));
    }
    let m = data.total() as f64;
    let weights: Vec<f64> = data.counts.iter().map(|&c| c as f64).collect();
    let mut warnings = Vec::new();
    let smallest = fitted.min_prob() * m;
    if smallest < SMALL_EXPECTED_COUNT {
        warnings.push(format!(
            "expected cell count {smallest:.3} below {SMALL_EXPECTED_COUNT}: nominal df may be unreliable"
        ));
    }
    finish_report(family, fitted.clone(), &weights, m, warnings)
}

/// Fits the family to observed counts and reports on the count scale.
pub fn fit_counts(family: &GeneratorFamily, data: &EmpiricalData, opts: &FitOptions) -> Result<FitReport> {
    opts.validate()?;
    let r = empirical(data)?;
    let fit = fit_family(family, &r, opts)?;
    let mut report = gof_report(&fit.fitted, data, family)?;
    report.cycles_used = fit.cycles_used;
    report.converged = fit.converged;
    report.max_marginal_gap = fit.max_marginal_gap;
    report.likelihood_trace = fit.likelihood_trace;
    for w in fit.warnings {
        if !report.warnings.contains(&w) {
            report.warnings.push(w);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Side {
    Left,
    Right,
    Both,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "both" => Ok(Side::Both),
            _ => Err(Error::Label(format!("unknown side '{s}'"))),
        }
    }
}

/// How much of `S_n` acting on one side leaves the model unchanged.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Invariance {
    None,
    Eight,
    All,
}

/// `(domain side, range side)` invariance of each family.
fn invariance(kind: Family) -> (Invariance, Invariance) {
    use Invariance::*;
    match kind {
        Family::L | Family::LS => (Eight, All),
        Family::LPrime | Family::LSPrime => (All, Eight),
        Family::Bi | Family::BiS => (Eight, Eight),
        Family::QuasiIndependence | Family::Saturated | Family::Uniform => (All, All),
    }
}

/// One representative per class of relabellings that give the same fit:
/// the lexicographically smallest `g o s` over the invariance group.
fn candidates(n: usize, searched: bool, inv: Invariance) -> Vec<Permutation> {
    if !searched || inv == Invariance::All {
        return vec![Permutation::identity(n)];
    }
    let all = group(n);
    if inv == Invariance::None {
        return all.to_vec();
    }
    let g8 = right_invariance_group(n);
    let reps: BTreeSet<Permutation> = all
        .iter()
        .map(|s| g8.iter().map(|g| g.compose_unchecked(s)).min().expect("group is not empty"))
        .collect();
    reps.into_iter().collect()
}

pub const SEARCH_BOTH_MAX_N: usize = 6;
pub const SEARCH_ONE_SIDE_MAX_N: usize = 7;

/// Relative likelihood difference treated as a tie.
pub const SEARCH_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub sigma: Permutation,
    pub rho: Permutation,
    pub best: FitReport,
    pub candidates_evaluated: usize,
}

/// Exhaustive search for the relabelling `(sigma, rho)` whose relabelled data
/// fit the family best. Relabellings the family is invariant under are not
/// searched; ties go to the lexicographically smallest pair.
pub fn search_relabelling(
    data: &EmpiricalData,
    family: &GeneratorFamily,
    side: Side,
    opts: &FitOptions,
) -> Result<SearchResult> {
    let n = data.n;
    if family.n != n {
        return Err(Error::Size("family and data must share n".into()));
    }
    let cap = if side == Side::Both { SEARCH_BOTH_MAX_N } else { SEARCH_ONE_SIDE_MAX_N };
    if n > cap {
        return Err(Error::Size(format!("relabelling search on side {side:?} supports n <= {cap}")));
    }
    let (dom, ran) = invariance(family.kind);
    let sigmas = candidates(n, side != Side::Left, dom);
    let rhos = candidates(n, side != Side::Right, ran);
    let pairs: Vec<(&Permutation, &Permutation)> =
        sigmas.iter().flat_map(|s| rhos.iter().map(move |r| (s, r))).collect();
    let r = empirical(data)?;
    let scores: Vec<f64> = pairs
        .par_iter()
        .map(|(s, rho)| {
            let q = relabel_distribution(&r, s, rho)?;
            Ok(fit_family(family, &q, opts)?.log_likelihood)
        })
        .collect::<Result<_>>()?;
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = best - SEARCH_TIE_TOL * best.abs().max(1.0);
    let (sigma, rho) = pairs
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s >= threshold)
        .map(|(pair, _)| *pair)
        .min()
        .expect("at least one candidate");
    let relabelled = data.relabel(sigma, rho)?;
    let mut report = fit_counts(family, &relabelled, opts)?;
    report.relabelling = Some(Relabelling {
        sigma: sigma.clone(),
        rho: rho.clone(),
    });
    Ok(SearchResult {
        sigma: sigma.clone(),
        rho: rho.clone(),
        best: report,
        candidates_evaluated: pairs.len(),
    })
}
