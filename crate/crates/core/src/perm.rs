//! Permutations of `{1..n}`, set partitions, product partitions of the
//! `n x n` board and the distributions indexed by the whole of `S_n`.
//!
//! Internally every position and value is 0-based. The text forms
//! (`"2 3 1"`, `"1,2|3,4,5"`) and all `Display` output are 1-based.
//!
//! The canonical identifier of a permutation is its rank in the
//! lexicographic enumeration of `S_n`, see [`Permutation::rank`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on `n` for anything that materializes all of `S_n`.
pub const DEFAULT_MAX_N: usize = 9;
/// Absolute refusal threshold, regardless of configuration.
pub const HARD_MAX_N: usize = 11;

const NORMALIZED_TOL: f64 = 1e-12;
const RENORMALIZE_TOL: f64 = 1e-9;

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Size limits for dense enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    max_n: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_n: DEFAULT_MAX_N }
    }
}

impl Limits {
    pub fn new(max_n: usize) -> Result<Self> {
        if max_n > HARD_MAX_N {
            return Err(Error::Size(format!(
                "cap {max_n} exceeds the hard limit {HARD_MAX_N}"
            )));
        }
        Ok(Limits { max_n })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_n {
            return Err(Error::Size(format!("n = {n} outside 1..={}", self.max_n)));
        }
        Ok(())
    }
}

/// A permutation in one-line form: `image[i] = pi(i)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<u8>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n as u8).collect(),
        }
    }

    /// Builds a permutation from 0-based images.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        if n > u8::MAX as usize {
            return Err(Error::Size(format!("n = {n} too large")));
        }
        let mut seen = vec![false; n];
        for &v in images {
            if v >= n || seen[v] {
                return Err(Error::InvalidPermutation(format!(
                    "{:?} is not a bijection on 0..{n}",
                    images
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation {
            image: images.iter().map(|&v| v as u8).collect(),
        })
    }

    /// Builds a permutation from 1-based images, as written in the text form.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation(format!(
                "{images:?} contains 0; images are 1-based"
            )));
        }
        let zero: Vec<usize> = images.iter().map(|&v| v - 1).collect();
        Self::from_images(&zero).map_err(|_| {
            Error::InvalidPermutation(format!(
                "{images:?} is not a bijection on 1..={}",
                images.len()
            ))
        })
    }

    /// The reversal `k -> n + 1 - k`.
    pub fn reversal(n: usize) -> Self {
        Permutation {
            image: (0..n as u8).rev().collect(),
        }
    }

    /// The transposition exchanging the 0-based points `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut p = Self::identity(n);
        p.image.swap(i, j);
        p
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    /// 0-based image of the 0-based point `i`.
    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.image[i] as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.image
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.image.iter().map(|&v| v as usize + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u8; self.len()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v as usize] = i as u8;
        }
        Permutation { image: inv }
    }

    /// `(self o other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Size(format!(
                "cannot compose permutations of sizes {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Permutation) -> Self {
        Permutation {
            image: other.image.iter().map(|&i| self.image[i as usize]).collect(),
        }
    }

    /// Rank in the lexicographic enumeration of `S_n` (Lehmer code).
    pub fn rank(&self) -> usize {
        let n = self.len();
        let mut rank = 0;
        for i in 0..n {
            let smaller_after = self.image[i + 1..]
                .iter()
                .filter(|&&v| v < self.image[i])
                .count();
            rank = rank * (n - i) + smaller_after;
        }
        rank
    }

    pub fn unrank(n: usize, mut rank: usize) -> Result<Self> {
        let total = factorial(n);
        if rank >= total {
            return Err(Error::Size(format!("rank {rank} >= {n}! = {total}")));
        }
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            let base = n - i;
            digits[i] = rank % base;
            rank /= base;
        }
        let mut pool: Vec<u8> = (0..n as u8).collect();
        let image = digits.iter().map(|&d| pool.remove(d)).collect();
        Ok(Permutation { image })
    }

    /// Bitmask of `{pi(0), .., pi(k-1)}`.
    #[inline]
    pub fn prefix_mask(&self, k: usize) -> u32 {
        self.image[..k].iter().fold(0u32, |m, &v| m | (1 << v))
    }

    fn next_lexicographic(&mut self) -> bool {
        let v = &mut self.image;
        let n = v.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && v[i - 1] >= v[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while v[j] <= v[i - 1] {
            j -= 1;
        }
        v.swap(i - 1, j);
        v[i..].reverse();
        true
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.image.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", *v as usize + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let images = s
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| {
                    Error::InvalidPermutation(format!("'{t}' is not a positive integer"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if images.is_empty() {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        Self::from_one_based(&images)
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

static GROUPS: [OnceLock<Vec<Permutation>>; HARD_MAX_N + 1] =
    [const { OnceLock::new() }; HARD_MAX_N + 1];

fn cached_group(n: usize) -> &'static [Permutation] {
    GROUPS[n].get_or_init(|| {
        let mut out = Vec::with_capacity(factorial(n));
        let mut p = Permutation::identity(n);
        loop {
            out.push(p.clone());
            if !p.next_lexicographic() {
                break;
            }
        }
        out
    })
}

/// All of `S_n` in lexicographic order, under the default cap.
pub fn enumerate_permutations(n: usize) -> Result<&'static [Permutation]> {
    enumerate_permutations_with(n, Limits::default())
}

pub fn enumerate_permutations_with(n: usize, limits: Limits) -> Result<&'static [Permutation]> {
    limits.check(n)?;
    Ok(cached_group(n))
}

/// Internal access for sizes already validated by a [`DistributionTable`].
pub(crate) fn group(n: usize) -> &'static [Permutation] {
    debug_assert!((1..=HARD_MAX_N).contains(&n));
    cached_group(n)
}

/// A partition of `{0..n}` into non-empty atoms, stored with atoms sorted by
/// their minimum so that structural equality is partition equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: usize,
    atoms: Vec<Vec<usize>>,
    atom_of: Vec<usize>,
}

impl SetPartition {
    /// Empty atoms are dropped; every point of `0..n` must be covered once.
    pub fn new(n: usize, atoms: Vec<Vec<usize>>) -> Result<Self> {
        let mut atoms: Vec<Vec<usize>> = atoms
            .into_iter()
            .filter(|a| !a.is_empty())
            .map(|mut a| {
                a.sort_unstable();
                a
            })
            .collect();
        atoms.sort_by_key(|a| a[0]);
        let mut atom_of = vec![usize::MAX; n];
        for (idx, atom) in atoms.iter().enumerate() {
            for &x in atom {
                if x >= n {
                    return Err(Error::InvalidPartition(format!(
                        "element {} outside 1..={n}",
                        x + 1
                    )));
                }
                if atom_of[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "element {} appears in two atoms",
                        x + 1
                    )));
                }
                atom_of[x] = idx;
            }
        }
        if let Some(missing) = atom_of.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "element {} is not covered",
                missing + 1
            )));
        }
        Ok(SetPartition { n, atoms, atom_of })
    }

    /// The one-atom partition.
    pub fn trivial(n: usize) -> Self {
        Self::new(n, vec![(0..n).collect()]).expect("trivial partition")
    }

    /// The full partition into singletons.
    pub fn full(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| vec![i]).collect()).expect("full partition")
    }

    pub fn from_sections(sections: &ConsecutiveSections) -> Self {
        Self::new(
            sections.n(),
            sections.blocks().map(|r| r.collect()).collect(),
        )
        .expect("consecutive partition")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    #[inline]
    pub fn atom_of(&self, x: usize) -> usize {
        self.atom_of[x]
    }

    /// True when every atom of `self` lies inside an atom of `coarser`.
    pub fn refines(&self, coarser: &SetPartition) -> bool {
        self.n == coarser.n
            && self.atoms.iter().all(|a| {
                let target = coarser.atom_of(a[0]);
                a.iter().all(|&x| coarser.atom_of(x) == target)
            })
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetPartition({self})")
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, x) in atom.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", x + 1)?;
            }
        }
        Ok(())
    }
}

impl FromStr for SetPartition {
    type Err = Error;

    /// Parses `"1,2|3,4,5"`; `n` is the largest element.
    fn from_str(s: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for chunk in s.trim().split('|') {
            let atom = chunk
                .split(',')
                .map(|t| {
                    let t = t.trim();
                    match t.parse::<usize>() {
                        Ok(v) if v >= 1 => Ok(v - 1),
                        _ => Err(Error::InvalidPartition(format!(
                            "'{t}' is not a positive integer"
                        ))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            atoms.push(atom);
        }
        let n = atoms.iter().flatten().map(|&x| x + 1).max().unwrap_or(0);
        Self::new(n, atoms)
    }
}

/// Cut points `0 < k_1 < ... < k_j < n` of a consecutive partition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConsecutiveSections {
    n: usize,
    cuts: Vec<usize>,
}

impl ConsecutiveSections {
    pub fn new(n: usize, cuts: Vec<usize>) -> Result<Self> {
        let increasing = cuts.windows(2).all(|w| w[0] < w[1]);
        let in_range = cuts.iter().all(|&c| c > 0 && c < n);
        if !increasing || !in_range {
            return Err(Error::InvalidPartition(format!(
                "sections {cuts:?} must be strictly increasing within 1..{n}"
            )));
        }
        Ok(ConsecutiveSections { n, cuts })
    }

    /// Every consecutive partition of `{1..n}`, including the trivial one.
    pub fn all(n: usize) -> Vec<ConsecutiveSections> {
        let inner = n.saturating_sub(1);
        (0u32..(1 << inner))
            .map(|mask| ConsecutiveSections {
                n,
                cuts: (1..n).filter(|&c| mask & (1 << (c - 1)) != 0).collect(),
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// 0-based position ranges of the blocks.
    pub fn blocks(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        let starts = std::iter::once(0).chain(self.cuts.iter().copied());
        let ends = self.cuts.iter().copied().chain(std::iter::once(self.n));
        starts.zip(ends).map(|(a, b)| a..b)
    }

    pub fn num_blocks(&self) -> usize {
        self.cuts.len() + 1
    }
}

/// A tiling of the board by `rows x cols` blocks `R_i x C_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductPartition {
    rows: SetPartition,
    cols: SetPartition,
}

impl ProductPartition {
    pub fn new(rows: SetPartition, cols: SetPartition) -> Result<Self> {
        if rows.n() != cols.n() {
            return Err(Error::Size(format!(
                "row partition of {} and column partition of {}",
                rows.n(),
                cols.n()
            )));
        }
        Ok(ProductPartition { rows, cols })
    }

    pub fn n(&self) -> usize {
        self.rows.n()
    }

    pub fn rows(&self) -> &SetPartition {
        &self.rows
    }

    pub fn cols(&self) -> &SetPartition {
        &self.cols
    }
}

impl fmt::Display for ProductPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) x ({})", self.rows, self.cols)
    }
}

/// Rook counts per block of a product partition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarginalTable {
    rows: usize,
    cols: usize,
    counts: Vec<u8>,
}

impl MarginalTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.cols + j] as usize
    }

    pub fn flattened(&self) -> &[u8] {
        &self.counts
    }

    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }
}

/// `t_ij = |{s : s in R_i, pi(s) in C_j}|`.
pub fn marginal(pi: &Permutation, b: &ProductPartition) -> MarginalTable {
    let (r, c) = (b.rows.size(), b.cols.size());
    let mut counts = vec![0u8; r * c];
    for s in 0..pi.len() {
        counts[b.rows.atom_of(s) * c + b.cols.atom_of(pi.get(s))] += 1;
    }
    MarginalTable {
        rows: r,
        cols: c,
        counts,
    }
}

/// The partition of `S_n` induced by `pi -> |pi_B|`.
///
/// Atom ids follow the lexicographic order of the flattened count matrices.
#[derive(Clone, Debug)]
pub struct MarginalAtoms {
    atom_of: Vec<u32>,
    tables: Vec<MarginalTable>,
}

impl MarginalAtoms {
    pub fn new(b: &ProductPartition) -> Result<Self> {
        let perms = enumerate_permutations_with(b.n(), Limits::new(HARD_MAX_N)?)?;
        let per_perm: Vec<MarginalTable> = perms.iter().map(|p| marginal(p, b)).collect();
        let keys: BTreeMap<&MarginalTable, u32> = per_perm
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i as u32))
            .collect();
        let atom_of = per_perm.iter().map(|t| keys[t]).collect();
        let tables = keys.keys().map(|&t| t.clone()).collect();
        Ok(MarginalAtoms { atom_of, tables })
    }

    pub fn num_atoms(&self) -> usize {
        self.tables.len()
    }

    /// Atom id of the permutation with lexicographic rank `idx`.
    #[inline]
    pub fn atom_of(&self, idx: usize) -> usize {
        self.atom_of[idx] as usize
    }

    pub fn atom_ids(&self) -> &[u32] {
        &self.atom_of
    }

    pub fn table(&self, atom: usize) -> &MarginalTable {
        &self.tables[atom]
    }

    /// Sums `values` (indexed by permutation rank) over each atom.
    pub fn atom_sums(&self, values: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.num_atoms()];
        for (idx, &v) in values.iter().enumerate() {
            sums[self.atom_of[idx] as usize] += v;
        }
        sums
    }

    /// 0/1 indicator vectors of the atoms, one per atom.
    pub fn indicators(&self) -> Vec<Vec<i64>> {
        let mut cols = vec![vec![0i64; self.atom_of.len()]; self.num_atoms()];
        for (idx, &a) in self.atom_of.iter().enumerate() {
            cols[a as usize][idx] = 1;
        }
        cols
    }
}

/// `i`-th set is `{pi(k_{i-1}+1), .., pi(k_i)}` (0-based values).
pub fn unordered_marginal(pi: &Permutation, sections: &ConsecutiveSections) -> Vec<BTreeSet<usize>> {
    sections
        .blocks()
        .map(|r| r.map(|i| pi.get(i)).collect())
        .collect()
}

/// A probability distribution on `S_n`, indexed by lexicographic rank.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    n: usize,
    probs: Vec<f64>,
}

impl DistributionTable {
    /// Accepts totals within 1e-12 of one as is, renormalizes totals within
    /// 1e-9, and refuses anything further off.
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        Self::check_len(n, probs.len())?;
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {bad} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        let dev = (total - 1.0).abs();
        if dev <= NORMALIZED_TOL {
            Ok(DistributionTable { n, probs })
        } else if dev <= RENORMALIZE_TOL {
            Ok(DistributionTable {
                n,
                probs: probs.into_iter().map(|p| p / total).collect(),
            })
        } else {
            Err(Error::Normalization { total })
        }
    }

    /// Normalizes arbitrary non-negative weights with positive total.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        Self::check_len(n, weights.len())?;
        if let Some(bad) = weights.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {bad} is negative or not finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(DistributionTable {
            n,
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    fn check_len(n: usize, len: usize) -> Result<()> {
        Limits::new(HARD_MAX_N)?.check(n)?;
        if len != factorial(n) {
            return Err(Error::Size(format!("{len} entries for n = {n}, expected {n}!")));
        }
        Ok(())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Limits::new(HARD_MAX_N)?.check(n)?;
        let len = factorial(n);
        Ok(DistributionTable {
            n,
            probs: vec![1.0 / len as f64; len],
        })
    }

    pub fn point_mass(pi: &Permutation) -> Result<Self> {
        let n = pi.len();
        Limits::new(HARD_MAX_N)?.check(n)?;
        let mut probs = vec![0.0; factorial(n)];
        probs[pi.rank()] = 1.0;
        Ok(DistributionTable { n, probs })
    }

    /// Builds `p(pi) = f(pi)` normalized by summation.
    pub fn from_fn(n: usize, f: impl Fn(&Permutation) -> f64) -> Result<Self> {
        Limits::new(HARD_MAX_N)?.check(n)?;
        let weights = group(n).iter().map(f).collect();
        Self::from_weights(n, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, pi: &Permutation) -> f64 {
        self.probs[pi.rank()]
    }

    pub fn permutations(&self) -> &'static [Permutation] {
        group(self.n)
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.min_prob() > 0.0
    }

    /// Max-norm distance to another table of the same size.
    pub fn max_abs_diff(&self, other: &DistributionTable) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Table with the same mass moved from `pi` to `map(pi)`.
    pub(crate) fn pushforward(&self, map: impl Fn(&Permutation) -> Permutation) -> Self {
        let mut probs = vec![0.0; self.len()];
        for (pi, &p) in group(self.n).iter().zip(&self.probs) {
            probs[map(pi).rank()] += p;
        }
        DistributionTable { n: self.n, probs }
    }
}

/// `result(tau) = p(rho^-1 tau sigma)`: relabel the domain by `sigma` and the
/// range by `rho`, so that a point mass at `pi` moves to `rho pi sigma^-1`.
pub fn relabel_distribution(
    p: &DistributionTable,
    sigma: &Permutation,
    rho: &Permutation,
) -> Result<DistributionTable> {
    if sigma.len() != p.n() || rho.len() != p.n() {
        return Err(Error::Size(format!(
            "relabelling of sizes ({}, {}) for a distribution on S_{}",
            sigma.len(),
            rho.len(),
            p.n()
        )));
    }
    let sigma_inv = sigma.inverse();
    Ok(p.pushforward(|pi| rho.compose_unchecked(pi).compose_unchecked(&sigma_inv)))
}

/// The group generated by right multiplication with the reversal and the
/// transposition of the first two points; eight elements for `n >= 4`.
/// Sorted lexicographically.
pub fn right_invariance_group(n: usize) -> Vec<Permutation> {
    let mut gens = vec![Permutation::reversal(n)];
    if n >= 2 {
        gens.push(Permutation::transposition(n, 0, 1));
    }
    let mut seen: BTreeSet<Permutation> = BTreeSet::new();
    let mut frontier = vec![Permutation::identity(n)];
    while let Some(g) = frontier.pop() {
        if seen.insert(g.clone()) {
            for s in &gens {
                frontier.push(g.compose_unchecked(s));
            }
        }
    }
    seen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().map(|x| x - 1).collect()
    }

    #[test]
    fn enumeration_small_cases() {
        let s1 = enumerate_permutations(1).unwrap();
        assert_eq!(s1, &[p("1")]);
        let s3 = enumerate_permutations(3).unwrap();
        assert_eq!(s3.len(), 6);
        assert_eq!(s3[0], p("1 2 3"));
        assert_eq!(s3[5], p("3 2 1"));
        assert_eq!(enumerate_permutations(5).unwrap().len(), 120);
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(enumerate_permutations(0), Err(Error::Size(_))));
        assert!(matches!(enumerate_permutations(10), Err(Error::Size(_))));
        assert!(Limits::new(12).is_err());
        assert!(Limits::new(11).is_ok());
    }

    #[test]
    fn rank_matches_enumeration_order() {
        for n in 1..=6 {
            for (i, pi) in enumerate_permutations(n).unwrap().iter().enumerate() {
                assert_eq!(pi.rank(), i);
                assert_eq!(&Permutation::unrank(n, i).unwrap(), pi);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(p("1 2 3").inverse(), p("1 2 3"));
        assert_eq!(p("2 3 1").inverse(), p("3 1 2"));
        assert_eq!(p("2 1 4 3").inverse(), p("2 1 4 3"));
    }

    #[test]
    fn compose_examples() {
        let sigma = p("3 1 4 2");
        assert_eq!(Permutation::identity(4).compose(&sigma).unwrap(), sigma);
        assert_eq!(p("2 3 1").compose(&p("2 3 1")).unwrap(), p("3 1 2"));
        assert_eq!(sigma.compose(&sigma.inverse()).unwrap(), Permutation::identity(4));
        assert!(matches!(p("1 2").compose(&p("1 2 3")), Err(Error::Size(_))));
    }

    #[test]
    fn parse_rejects_non_bijections() {
        assert!("1 1".parse::<Permutation>().is_err());
        assert!("0 1".parse::<Permutation>().is_err());
        assert!("1 3".parse::<Permutation>().is_err());
        assert!("".parse::<Permutation>().is_err());
        assert_eq!(p("2 3 1").to_string(), "2 3 1");
    }

    #[test]
    fn partition_text_form() {
        let z: SetPartition = "1,2|3,4,5".parse().unwrap();
        assert_eq!(z.n(), 5);
        assert_eq!(z.size(), 2);
        assert_eq!(z.to_string(), "1,2|3,4,5");
        let reordered: SetPartition = "4,3,5|2,1".parse().unwrap();
        assert_eq!(z, reordered);
        assert!("1,2|2,3".parse::<SetPartition>().is_err());
        assert!("1,3".parse::<SetPartition>().is_err());
    }

    #[test]
    fn marginal_examples() {
        let b = ProductPartition::new("1|2,3".parse().unwrap(), "1,2|3".parse().unwrap()).unwrap();
        let t = marginal(&p("2 3 1"), &b);
        assert_eq!(t.to_rows(), vec![vec![1, 0], vec![1, 1]]);

        let trivial = ProductPartition::new(SetPartition::trivial(4), SetPartition::trivial(4)).unwrap();
        assert_eq!(marginal(&p("3 1 4 2"), &trivial).to_rows(), vec![vec![4]]);

        // bold cross-section H_33 for n = 5: sections {1,2},{3},{4,5}
        let bold: SetPartition = "1,2|3|4,5".parse().unwrap();
        let h33 = ProductPartition::new(bold.clone(), bold).unwrap();
        let t = marginal(&Permutation::identity(5), &h33);
        assert_eq!(t.to_rows(), vec![vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
    }

    #[test]
    fn unordered_marginal_examples() {
        let k1 = ConsecutiveSections::new(3, vec![1]).unwrap();
        assert_eq!(unordered_marginal(&p("3 1 2"), &k1), vec![set(&[3]), set(&[1, 2])]);
        let k2 = ConsecutiveSections::new(4, vec![2]).unwrap();
        assert_eq!(
            unordered_marginal(&Permutation::identity(4), &k2),
            vec![set(&[1, 2]), set(&[3, 4])]
        );
        let k12 = ConsecutiveSections::new(3, vec![1, 2]).unwrap();
        assert_eq!(
            unordered_marginal(&p("2 3 1"), &k12),
            vec![set(&[2]), set(&[3]), set(&[1])]
        );
        assert!(ConsecutiveSections::new(3, vec![2, 1]).is_err());
        assert!(ConsecutiveSections::new(3, vec![3]).is_err());
        assert_eq!(ConsecutiveSections::all(4).len(), 8);
    }

    #[test]
    fn distribution_normalization_rules() {
        assert!(DistributionTable::new(2, vec![0.5, 0.5]).is_ok());
        let renorm = DistributionTable::new(2, vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((renorm.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            DistributionTable::new(2, vec![0.5, 0.6]),
            Err(Error::Normalization { .. })
        ));
        assert!(DistributionTable::new(2, vec![1.5, -0.5]).is_err());
        assert!(DistributionTable::new(3, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn relabel_examples() {
        let n = 4;
        let sigma = p("2 4 1 3");
        let rho = p("3 1 2 4");
        let q = DistributionTable::from_fn(n, |pi| 1.0 + pi.rank() as f64).unwrap();
        let id = Permutation::identity(n);
        assert_eq!(relabel_distribution(&q, &id, &id).unwrap(), q);

        let u = DistributionTable::uniform(n).unwrap();
        assert_eq!(relabel_distribution(&u, &sigma, &rho).unwrap(), u);

        let pi0 = p("4 3 1 2");
        let moved = relabel_distribution(&DistributionTable::point_mass(&pi0).unwrap(), &sigma, &rho).unwrap();
        let target = rho.compose(&pi0).unwrap().compose(&sigma.inverse()).unwrap();
        assert_eq!(moved.prob(&target), 1.0);
    }

    #[test]
    fn invariance_group_sizes() {
        assert_eq!(right_invariance_group(4).len(), 8);
        assert_eq!(right_invariance_group(5).len(), 8);
        assert_eq!(right_invariance_group(3).len(), 6);
        assert_eq!(right_invariance_group(2).len(), 2);
    }

    #[test]
    fn marginal_atoms_are_ordered_by_table() {
        let b = ProductPartition::new(SetPartition::full(3), SetPartition::full(3)).unwrap();
        let atoms = MarginalAtoms::new(&b).unwrap();
        assert_eq!(atoms.num_atoms(), 6);
        for w in (0..6).collect::<Vec<_>>().windows(2) {
            assert!(atoms.table(w[0]) < atoms.table(w[1]));
        }
    }
}
