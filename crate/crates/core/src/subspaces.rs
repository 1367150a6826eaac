//! Generator families of the log-linear permutation models, the cross-section
//! statistics `(a, q)`, the indicator bases built from them, and parameter
//! counts both in closed form and by exact rank.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{enumerate_permutations_with, factorial, Limits, MarginalAtoms, Permutation, ProductPartition, SetPartition};
use crate::rank::{exact_rank, SpanProjector};

/// Largest `n` accepted by the rank oracle (`n!` rows).
pub const RANK_MAX_N: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    L,
    LPrime,
    LS,
    LSPrime,
    Bi,
    BiS,
    QuasiIndependence,
    Saturated,
    Uniform,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::L,
        Family::LPrime,
        Family::LS,
        Family::LSPrime,
        Family::Bi,
        Family::BiS,
        Family::QuasiIndependence,
        Family::Saturated,
        Family::Uniform,
    ];

    /// The six decomposability families.
    pub const DECOMPOSABLE: [Family; 6] = [
        Family::L,
        Family::LPrime,
        Family::LS,
        Family::LSPrime,
        Family::Bi,
        Family::BiS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::L => "L",
            Family::LPrime => "L_PRIME",
            Family::LS => "L_S",
            Family::LSPrime => "L_S_PRIME",
            Family::Bi => "BI",
            Family::BiS => "BI_S",
            Family::QuasiIndependence => "QUASI_INDEPENDENCE",
            Family::Saturated => "SATURATED",
            Family::Uniform => "UNIFORM",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('\'', "prime").replace(['-', '_'], "");
        Ok(match key.as_str() {
            "l" => Family::L,
            "lprime" | "lp" => Family::LPrime,
            "ls" => Family::LS,
            "lsprime" | "lsp" => Family::LSPrime,
            "bi" | "b" => Family::Bi,
            "bis" => Family::BiS,
            "quasiindependence" | "qi" => Family::QuasiIndependence,
            "saturated" | "sat" => Family::Saturated,
            "uniform" | "u" => Family::Uniform,
            _ => return Err(Error::Label(format!("unknown family '{s}'"))),
        })
    }
}

/// A model family on a fixed board size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorFamily {
    pub kind: Family,
    pub n: usize,
}

impl GeneratorFamily {
    pub fn new(kind: Family, n: usize) -> Self {
        GeneratorFamily { kind, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Bold,
    Thin,
    Full,
    Trivial,
}

/// Bold `({1:k-1},{k},{k+1:n})`, thin `({1:k},{k+1:n})`, full or trivial
/// partition of `{1..n}`; `k` is 1-based and empty atoms are dropped.
pub fn section_partition(kind: SectionKind, k: usize, n: usize) -> Result<SetPartition> {
    let check_k = || {
        if k == 0 || k > n {
            Err(Error::Label(format!("section index k = {k} outside 1..={n}")))
        } else {
            Ok(())
        }
    };
    match kind {
        SectionKind::Bold => {
            check_k()?;
            SetPartition::new(n, vec![(0..k - 1).collect(), vec![k - 1], (k..n).collect()])
        }
        SectionKind::Thin => {
            check_k()?;
            SetPartition::new(n, vec![(0..k).collect(), (k..n).collect()])
        }
        SectionKind::Full => Ok(SetPartition::full(n)),
        SectionKind::Trivial => Ok(SetPartition::trivial(n)),
    }
}

fn bold(k: usize, n: usize) -> SetPartition {
    section_partition(SectionKind::Bold, k, n).expect("k in range")
}

fn thin(k: usize, n: usize) -> SetPartition {
    section_partition(SectionKind::Thin, k, n).expect("k in range")
}

fn product(rows: SetPartition, cols: SetPartition) -> ProductPartition {
    ProductPartition::new(rows, cols).expect("same board size")
}

/// The product partitions generating the family's log-linear model, in the
/// fixed cycling order used by the fitting routines.
pub fn generators(family: &GeneratorFamily) -> Vec<ProductPartition> {
    let n = family.n;
    let full = || SetPartition::full(n);
    let gens: Vec<ProductPartition> = match family.kind {
        Family::L => (1..=n).map(|k| product(bold(k, n), full())).collect(),
        Family::LPrime => (1..=n).map(|k| product(full(), bold(k, n))).collect(),
        Family::LS => (1..n).map(|k| product(thin(k, n), full())).collect(),
        Family::LSPrime => (1..n).map(|k| product(full(), thin(k, n))).collect(),
        Family::Bi => (1..=n)
            .flat_map(|k| (1..=n).map(move |l| product(bold(k, n), bold(l, n))))
            .collect(),
        Family::BiS => (1..n)
            .flat_map(|k| (1..n).map(move |l| product(thin(k, n), thin(l, n))))
            .collect(),
        Family::QuasiIndependence => (0..n)
            .map(|i| {
                let rest: Vec<usize> = (0..n).filter(|&x| x != i).collect();
                let rows = SetPartition::new(n, vec![vec![i], rest]).expect("two atoms");
                product(rows, full())
            })
            .collect(),
        Family::Saturated => vec![product(full(), full())],
        Family::Uniform => vec![],
    };
    if gens.is_empty() {
        vec![product(SetPartition::trivial(n), SetPartition::trivial(n))]
    } else {
        gens
    }
}

/// Cross-section statistics for 1-based `k, l`:
/// `a` counts rooks in the upper-left `k x l` rectangle, `q` codes the rooks
/// of row `k` and column `l` (quadrant 1..4, or 5 when they coincide).
pub fn stats_aq(pi: &Permutation, k: usize, l: usize) -> (usize, u8) {
    let a = (0..k).filter(|&i| pi.get(i) < l).count();
    let row_k = pi.get(k - 1) + 1;
    if row_k == l {
        return (a, 5);
    }
    let col_l = pi.images().iter().position(|&v| v as usize == l - 1).unwrap() + 1;
    let q = match (row_k > l, col_l < k) {
        (true, true) => 1,
        (false, true) => 2,
        (false, false) => 3,
        (true, false) => 4,
    };
    (a, q)
}

fn check_kl(k: usize, l: usize, n: usize) -> Result<()> {
    if k == 0 || l == 0 || k > n || l > n {
        return Err(Error::Label(format!("(k, l) = ({k}, {l}) outside 1..={n}")));
    }
    Ok(())
}

/// The `(a, q)` pairs for which the indicator of `{a^{kl} = a, q^{kl} = q}`
/// is not identically zero.
pub fn nontrivial_pairs(k: usize, l: usize, n: usize) -> Result<Vec<(usize, u8)>> {
    check_kl(k, l, n)?;
    let lo = (k + l).saturating_sub(n);
    let hi = k.min(l);
    let mut out = Vec::new();
    for a in lo..=hi {
        let mut allowed: Vec<u8> = (1..=5).collect();
        let mut restrict = |set: &[u8]| allowed.retain(|q| set.contains(q));
        if a == 0 {
            restrict(&[4]);
        }
        if a == 1 {
            restrict(&[1, 3, 4, 5]);
        }
        if a == k && k < l {
            restrict(&[2, 3, 5]);
        }
        if a == l && l < k {
            restrict(&[1, 2, 5]);
        }
        if a == k && k == l {
            restrict(&[2, 5]);
        }
        out.extend(allowed.into_iter().map(|q| (a, q)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BasisKind {
    Rho,
    Nu,
    Mu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub kind: BasisKind,
    pub k: usize,
    pub l: usize,
    pub a: usize,
    /// `q` for `Rho`, `1 | 2` for `Mu`, unused (0) for `Nu`.
    pub idx: usize,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (k, l, a, i) = (self.k, self.l, self.a, self.idx);
        match self.kind {
            BasisKind::Rho => write!(f, "rho[k={k},l={l}](a={a},q={i})"),
            BasisKind::Nu => write!(f, "nu[k={k},l={l}](a={a})"),
            BasisKind::Mu => write!(f, "mu[k={k},l={l}](a={a},{i})"),
        }
    }
}

/// A vector on `S_n` indexed by lexicographic rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisVector {
    pub label: BasisLabel,
    pub coords: Vec<i64>,
}

impl BasisVector {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn dot(&self, other: &[i64]) -> i64 {
        self.coords.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// Coefficients `c_q` (q = 1..5) of the two `mu^{kl}_a` vectors.
fn mu_coefficients(k: usize, l: usize, a: usize, idx: usize) -> [i64; 5] {
    let (k, l, a) = (k as i64, l as i64, a as i64);
    match idx {
        1 => [0, -1, 0, 0, a - 1],
        _ => [
            -(l - a) * a,
            (k - a) * (l - a),
            -(k - a) * a,
            a * a,
            (k - a) * (l - a),
        ],
    }
}

pub fn basis_vector(kind: BasisKind, k: usize, l: usize, a: usize, idx: usize, n: usize) -> Result<BasisVector> {
    check_kl(k, l, n)?;
    if a > n {
        return Err(Error::Label(format!("a = {a} exceeds n = {n}")));
    }
    let coeffs: [i64; 5] = match kind {
        BasisKind::Rho => {
            if !(1..=5).contains(&idx) {
                return Err(Error::Label(format!("q = {idx} outside 1..=5")));
            }
            let mut c = [0; 5];
            c[idx - 1] = 1;
            c
        }
        BasisKind::Nu => [1; 5],
        BasisKind::Mu => {
            if !(1..=2).contains(&idx) {
                return Err(Error::Label(format!("mu index {idx} outside 1..=2")));
            }
            mu_coefficients(k, l, a, idx)
        }
    };
    let perms = enumerate_permutations_with(n, Limits::new(crate::perm::HARD_MAX_N)?)?;
    let coords = perms
        .iter()
        .map(|pi| {
            let (pa, q) = stats_aq(pi, k, l);
            if pa == a {
                coeffs[q as usize - 1]
            } else {
                0
            }
        })
        .collect();
    let idx = if kind == BasisKind::Nu { 0 } else { idx };
    Ok(BasisVector {
        label: BasisLabel { kind, k, l, a, idx },
        coords,
    })
}

/// The non-zero `mu^{kl}_{a,i}` for one cross-section, `2 <= k, l <= n`.
pub fn mu_vectors(k: usize, l: usize, n: usize) -> Result<Vec<BasisVector>> {
    check_kl(k, l, n)?;
    let mut out = Vec::new();
    for a in (k + l).saturating_sub(n)..=k.min(l) {
        for idx in 1..=2 {
            let v = basis_vector(BasisKind::Mu, k, l, a, idx, n)?;
            if !v.is_zero() {
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// All non-zero `mu` vectors over `2 <= k, l <= n`.
pub fn mu_basis(n: usize) -> Result<Vec<BasisVector>> {
    let mut out = Vec::new();
    for k in 2..=n {
        for l in 2..=n {
            out.extend(mu_vectors(k, l, n)?);
        }
    }
    Ok(out)
}

/// `nu^{kl}_a` for `1 <= k, l <= n-1`, `max(0, k+l-n) < a <= min(k, l)`.
pub fn nu_basis(n: usize) -> Result<Vec<BasisVector>> {
    let mut out = Vec::new();
    for k in 1..n {
        for l in 1..n {
            for a in ((k + l).saturating_sub(n) + 1)..=k.min(l) {
                out.push(basis_vector(BasisKind::Nu, k, l, a, 0, n)?);
            }
        }
    }
    Ok(out)
}

/// `rho^{kl}_{a5}` for `1 <= k, l <= n-1`, `max(1, k+l-n) < a <= min(k, l)`.
pub fn rho5_basis(n: usize) -> Result<Vec<BasisVector>> {
    let mut out = Vec::new();
    for k in 1..n {
        for l in 1..n {
            for a in ((k + l).saturating_sub(n).max(1) + 1)..=k.min(l) {
                out.push(basis_vector(BasisKind::Rho, k, l, a, 5, n)?);
            }
        }
    }
    Ok(out)
}

/// Number of independent `mu` solutions for each feasible `a` of the `(k, l)`
/// cross-section. The two `mu` vectors of one `a` are orthogonal, so the
/// count is the number of non-zero ones.
pub fn mu_deltas(k: usize, l: usize, n: usize) -> Result<Vec<(usize, usize)>> {
    check_kl(k, l, n)?;
    ((k + l).saturating_sub(n)..=k.min(l))
        .map(|a| {
            let mut delta = 0;
            for idx in 1..=2 {
                if !basis_vector(BasisKind::Mu, k, l, a, idx, n)?.is_zero() {
                    delta += 1;
                }
            }
            Ok((a, delta))
        })
        .collect()
}

/// `dim(F^k ∩ G^l)` as the sum of the per-`a` solution counts.
pub fn subspace_intersection_dim(k: usize, l: usize, n: usize) -> Result<usize> {
    if k < 2 || l < 2 {
        return Err(Error::Label(format!("(k, l) = ({k}, {l}) needs 2 <= k, l <= n")));
    }
    Ok(mu_deltas(k, l, n)?.iter().map(|&(_, d)| d).sum())
}

/// `dim(F^k ∩ G^l)` by inclusion-exclusion over the atom counts of the bold and
/// thin cross-sections; the four subspaces involved intersect orthogonally.
pub fn intersection_dim_by_atoms(k: usize, l: usize, n: usize) -> Result<usize> {
    if k < 2 || l < 2 || k > n || l > n {
        return Err(Error::Label(format!("(k, l) = ({k}, {l}) needs 2 <= k, l <= n")));
    }
    let atoms = |rows: SetPartition, cols: SetPartition| -> Result<usize> {
        Ok(MarginalAtoms::new(&product(rows, cols))?.num_atoms())
    };
    let both_bold = atoms(bold(k, n), bold(l, n))?;
    let row_thin = atoms(thin(k, n), bold(l, n))?;
    let col_thin = atoms(bold(k, n), thin(l, n))?;
    let both_thin = atoms(thin(k, n), thin(l, n))?;
    Ok(both_bold + both_thin - row_thin - col_thin)
}

/// Closed-form number of free parameters.
pub fn formula_dimension(family: &GeneratorFamily) -> Result<usize> {
    let n = family.n as u64;
    let pow2 = 1u64 << n;
    let count = match family.kind {
        // 2^n (n/2 - 1) + 1
        Family::L | Family::LPrime => {
            if n == 1 {
                0
            } else {
                (pow2 / 2) * (n - 2) + 1
            }
        }
        // 2^n - n - 1
        Family::LS | Family::LSPrime => pow2 - n - 1,
        // sum_{i=1}^{n-1} i^2
        Family::Bi => (1..n).map(|i| i * i).sum(),
        // sum_{j=0}^{floor((n-1)/2)} (n - 2j - 1)^2
        Family::BiS => (0..=(n - 1) / 2).map(|j| (n - 2 * j - 1).pow(2)).sum(),
        Family::Saturated => factorial(family.n) as u64 - 1,
        Family::Uniform => 0,
        Family::QuasiIndependence => return Err(Error::UnsupportedFamily(family.kind)),
    };
    Ok(count as usize)
}

/// Deduplicated atom indicator vectors of every generator of the family.
pub fn indicator_columns(family: &GeneratorFamily) -> Result<Vec<Vec<i64>>> {
    let mut seen = HashSet::new();
    let mut cols = Vec::new();
    for g in generators(family) {
        for col in MarginalAtoms::new(&g)?.indicators() {
            if seen.insert(col.clone()) {
                cols.push(col);
            }
        }
    }
    Ok(cols)
}

/// Free parameters via the exact rank of the generators' atom indicators.
pub fn rank_dimension(family: &GeneratorFamily) -> Result<usize> {
    if family.n == 0 || family.n > RANK_MAX_N {
        return Err(Error::Size(format!(
            "rank oracle supports 1 <= n <= {RANK_MAX_N}, got {}",
            family.n
        )));
    }
    Ok(exact_rank(&indicator_columns(family)?).rank - 1)
}

/// Orthogonal projector onto the family's log-linear subspace.
pub fn family_projector(family: &GeneratorFamily) -> Result<SpanProjector> {
    if family.n == 0 || family.n > RANK_MAX_N {
        return Err(Error::Size(format!(
            "projection supports 1 <= n <= {RANK_MAX_N}, got {}",
            family.n
        )));
    }
    Ok(SpanProjector::new(&indicator_columns(family)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub family: Family,
    pub n: usize,
    /// Closed-form free-parameter count, absent for families without one.
    pub formula_dim: Option<usize>,
    /// Free-parameter count from the rank oracle.
    pub rank_dim: usize,
    pub free_parameters: usize,
}

pub fn dimension_report(family: &GeneratorFamily) -> Result<DimensionReport> {
    let formula_dim = match formula_dimension(family) {
        Ok(d) => Some(d),
        Err(Error::UnsupportedFamily(_)) => None,
        Err(e) => return Err(e),
    };
    let rank_dim = rank_dimension(family)?;
    if let Some(f) = formula_dim {
        if f != rank_dim {
            return Err(Error::Numerical(format!(
                "{} on n = {}: closed form {f} but rank {rank_dim}",
                family.kind, family.n
            )));
        }
    }
    Ok(DimensionReport {
        family: family.kind,
        n: family.n,
        formula_dim,
        rank_dim,
        free_parameters: rank_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::enumerate_permutations;
    use std::collections::BTreeSet;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn section_examples() {
        assert_eq!(
            section_partition(SectionKind::Bold, 3, 5).unwrap(),
            "1,2|3|4,5".parse().unwrap()
        );
        assert_eq!(
            section_partition(SectionKind::Thin, 2, 4).unwrap(),
            "1,2|3,4".parse().unwrap()
        );
        assert_eq!(
            section_partition(SectionKind::Bold, 1, 4).unwrap(),
            section_partition(SectionKind::Thin, 1, 4).unwrap()
        );
        assert_eq!(
            section_partition(SectionKind::Bold, 4, 4).unwrap(),
            section_partition(SectionKind::Thin, 3, 4).unwrap()
        );
        assert_eq!(section_partition(SectionKind::Thin, 4, 4).unwrap().size(), 1);
        assert!(section_partition(SectionKind::Bold, 0, 4).is_err());
        assert!(section_partition(SectionKind::Thin, 5, 4).is_err());
    }

    #[test]
    fn generator_counts() {
        assert_eq!(generators(&GeneratorFamily::new(Family::L, 5)).len(), 5);
        assert_eq!(generators(&GeneratorFamily::new(Family::Bi, 4)).len(), 16);
        assert_eq!(generators(&GeneratorFamily::new(Family::BiS, 4)).len(), 9);
        let uniform = generators(&GeneratorFamily::new(Family::Uniform, 3));
        assert_eq!(uniform.len(), 1);
        assert_eq!(uniform[0].rows().size() * uniform[0].cols().size(), 1);
    }

    #[test]
    fn stats_examples() {
        assert_eq!(stats_aq(&Permutation::identity(4), 2, 2), (2, 5));
        assert_eq!(stats_aq(&p("2 1 4 3"), 2, 3), (2, 3));
        assert_eq!(stats_aq(&p("4 3 2 1"), 1, 1), (0, 4));
    }

    fn brute_pairs(k: usize, l: usize, n: usize) -> BTreeSet<(usize, u8)> {
        enumerate_permutations(n)
            .unwrap()
            .iter()
            .map(|pi| stats_aq(pi, k, l))
            .collect()
    }

    #[test]
    fn nontrivial_pair_examples() {
        let pairs = nontrivial_pairs(2, 2, 4).unwrap();
        assert_eq!(
            pairs,
            vec![(0, 4), (1, 1), (1, 3), (1, 4), (1, 5), (2, 2), (2, 5)]
        );
        assert_eq!(nontrivial_pairs(1, 1, 2).unwrap(), vec![(0, 4), (1, 5)]);
    }

    #[test]
    fn nontrivial_pairs_match_brute_force() {
        for n in 2..=6 {
            for k in 1..=n {
                for l in 1..=n {
                    let formula: BTreeSet<_> = nontrivial_pairs(k, l, n).unwrap().into_iter().collect();
                    assert_eq!(formula, brute_pairs(k, l, n), "n={n} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn basis_vector_examples() {
        let rho = basis_vector(BasisKind::Rho, 1, 1, 1, 5, 3).unwrap();
        let support: Vec<_> = enumerate_permutations(3)
            .unwrap()
            .iter()
            .zip(&rho.coords)
            .filter(|(_, &c)| c == 1)
            .map(|(pi, _)| pi.clone())
            .collect();
        assert_eq!(support, vec![p("1 2 3"), p("1 3 2")]);

        let n = 4;
        for k in 1..=n {
            for l in 1..=n {
                for a in 0..=n {
                    let nu = basis_vector(BasisKind::Nu, k, l, a, 0, n).unwrap();
                    let mut sum = vec![0; nu.coords.len()];
                    for q in 1..=5 {
                        let r = basis_vector(BasisKind::Rho, k, l, a, q, n).unwrap();
                        for (s, c) in sum.iter_mut().zip(&r.coords) {
                            *s += c;
                        }
                    }
                    assert_eq!(nu.coords, sum);
                }
            }
        }

        let mu = basis_vector(BasisKind::Mu, 2, 3, 1, 1, 4).unwrap();
        let rho2 = basis_vector(BasisKind::Rho, 2, 3, 1, 2, 4).unwrap();
        assert_eq!(mu.coords, rho2.coords.iter().map(|c| -c).collect::<Vec<_>>());

        assert!(basis_vector(BasisKind::Rho, 1, 1, 0, 6, 3).is_err());
        assert!(basis_vector(BasisKind::Mu, 1, 1, 0, 3, 3).is_err());
        assert!(basis_vector(BasisKind::Nu, 4, 1, 0, 0, 3).is_err());
    }

    #[test]
    fn closed_forms() {
        let f = |kind, n| formula_dimension(&GeneratorFamily::new(kind, n)).unwrap();
        assert_eq!(f(Family::Bi, 5), 30);
        assert_eq!(f(Family::L, 5), 49);
        assert_eq!(f(Family::LPrime, 5), 49);
        assert_eq!(f(Family::LS, 5), 26);
        assert_eq!(f(Family::BiS, 5), 20);
        assert_eq!(f(Family::Saturated, 5), 119);
        assert_eq!(f(Family::Uniform, 5), 0);
        assert!(matches!(
            formula_dimension(&GeneratorFamily::new(Family::QuasiIndependence, 5)),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn rank_examples() {
        let r = |kind, n| rank_dimension(&GeneratorFamily::new(kind, n)).unwrap();
        assert_eq!(r(Family::Bi, 4), 14);
        assert_eq!(r(Family::LS, 4), 11);
        for n in 1..=5 {
            assert_eq!(r(Family::Uniform, n), 0);
        }
        assert_eq!(r(Family::QuasiIndependence, 4), 9);
        assert!(rank_dimension(&GeneratorFamily::new(Family::L, 8)).is_err());
    }

    #[test]
    fn intersection_dim_examples() {
        assert_eq!(subspace_intersection_dim(3, 3, 5).unwrap(), 4);
        assert_eq!(
            subspace_intersection_dim(2, 4, 4).unwrap(),
            intersection_dim_by_atoms(2, 4, 4).unwrap()
        );
        for n in 3..=5 {
            for k in 2..=n {
                for l in 2..=n {
                    let mus = mu_vectors(k, l, n).unwrap();
                    let rank = exact_rank(&mus.iter().map(|m| m.coords.clone()).collect::<Vec<_>>()).rank;
                    let by_delta = subspace_intersection_dim(k, l, n).unwrap();
                    assert_eq!(rank, by_delta, "n={n} k={k} l={l}");
                    assert_eq!(by_delta, intersection_dim_by_atoms(k, l, n).unwrap(), "n={n} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            let json = serde_json::to_string(&f).unwrap();
            assert_eq!(json, format!("\"{}\"", f.name()));
        }
        assert_eq!("l'".parse::<Family>().unwrap(), Family::LPrime);
        assert_eq!("bi-s".parse::<Family>().unwrap(), Family::BiS);
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn dimension_report_json_shape() {
        let rep = dimension_report(&GeneratorFamily::new(Family::QuasiIndependence, 4)).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["family"], "QUASI_INDEPENDENCE");
        assert!(v["formula_dim"].is_null());
        assert_eq!(v["rank_dim"], 9);
        assert_eq!(v["free_parameters"], 9);
    }
}
