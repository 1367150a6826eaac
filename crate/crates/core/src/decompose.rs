//! Decomposability of distributions on `S_n`.
//!
//! A distribution is L-decomposable when the law of the next element depends
//! on the ordered prefix only through its underlying set. The verdicts here
//! are computed from conditional probabilities, cross-checked against the
//! round trip through the canonical decomposition, and the conditional
//! independence characterizations are available as separate checks.
//!
//! Sets are bitmasks over 0-based elements.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{factorial, relabel_distribution, right_invariance_group, ConsecutiveSections, DistributionTable, Permutation, SetPartition};
use crate::subspaces::{basis_vector, family_projector, BasisKind, Family, GeneratorFamily};

/// Default tolerance on conditional-probability differences.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `Lambda(x, C)` on pairs with `x` outside `C`, plus the constant `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaDecomposition {
    n: usize,
    values: Vec<f64>,
    constant: f64,
}

impl LambdaDecomposition {
    pub fn zeros(n: usize, constant: f64) -> Self {
        LambdaDecomposition {
            n,
            values: vec![0.0; (1usize << n) * n],
            constant,
        }
    }

    /// Evaluates `f(x, C)` on every pair with `x` not in `C`.
    pub fn from_fn(n: usize, constant: f64, mut f: impl FnMut(usize, u32) -> f64) -> Self {
        let mut out = Self::zeros(n, constant);
        for mask in 0u32..(1 << n) {
            for x in (0..n).filter(|&x| mask & (1 << x) == 0) {
                out.set(x, mask, f(x, mask));
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    #[inline]
    pub fn get(&self, x: usize, set: u32) -> f64 {
        self.values[set as usize * self.n + x]
    }

    pub fn set(&mut self, x: usize, set: u32, value: f64) {
        self.values[set as usize * self.n + x] = value;
    }

    fn weight(&self, pi: &Permutation) -> f64 {
        let mut w = self.constant;
        let mut mask = 0u32;
        for k in 0..self.n {
            let x = pi.get(k);
            w *= self.get(x, mask);
            mask |= 1 << x;
        }
        w
    }
}

struct Canonical {
    lambda: LambdaDecomposition,
    /// `P(Pi{1:|C|} = C)` per set.
    prefix_mass: Vec<f64>,
}

fn canonical_with_mass(p: &DistributionTable) -> Canonical {
    let n = p.n();
    let mut mass = vec![0.0; 1 << n];
    let mut joint = vec![0.0; (1 << n) * n];
    for (pi, &w) in p.permutations().iter().zip(p.probs()) {
        if w == 0.0 {
            continue;
        }
        let mut mask = 0u32;
        for k in 0..n {
            let x = pi.get(k);
            mass[mask as usize] += w;
            joint[mask as usize * n + x] += w;
            mask |= 1 << x;
        }
    }
    let mut lambda = LambdaDecomposition::zeros(n, 1.0);
    for mask in 0..(1usize << n) {
        if mass[mask] > 0.0 {
            for x in (0..n).filter(|&x| mask & (1 << x) == 0) {
                lambda.values[mask * n + x] = joint[mask * n + x] / mass[mask];
            }
        }
    }
    Canonical {
        lambda,
        prefix_mass: mass,
    }
}

/// `Lambda(x, C) = P(Pi(|C|+1) = x | Pi{1:|C|} = C)` where the condition has
/// positive probability, 0 elsewhere; constant 1.
pub fn canonical_lambda(p: &DistributionTable) -> LambdaDecomposition {
    canonical_with_mass(p).lambda
}

/// `p(pi) = c * prod_k Lambda(pi(k+1), pi{1:k})`; the products must sum to
/// one within 1e-9.
pub fn distribution_from_lambda(lambda: &LambdaDecomposition) -> Result<DistributionTable> {
    let n = lambda.n;
    let weights: Vec<f64> = crate::perm::group(n).iter().map(|pi| lambda.weight(pi)).collect();
    if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidLambda(format!("product {bad} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidLambda(format!("products sum to {total}, not 1")));
    }
    DistributionTable::new(n, weights)
}

/// Rewrites any L-decomposition of a distribution as its canonical one.
///
/// With `W(S)` the total weight of all completions of a prefix set `S` and
/// `V(S)` the total weight of all orderings reaching `S`, the canonical value
/// is `Lambda(x, C) W(C + x) / W(C)` wherever `V(C) W(C) > 0`.
pub fn canonicalize(lambda: &LambdaDecomposition) -> LambdaDecomposition {
    let n = lambda.n;
    let full = (1u32 << n) - 1;
    let mut future = vec![0.0; 1 << n];
    future[full as usize] = 1.0;
    for mask in (0..full).rev() {
        future[mask as usize] = (0..n)
            .filter(|&y| mask & (1 << y) == 0)
            .map(|y| lambda.get(y, mask) * future[(mask | (1 << y)) as usize])
            .sum();
    }
    let mut past = vec![0.0; 1 << n];
    past[0] = 1.0;
    for mask in 1..=full {
        past[mask as usize] = (0..n)
            .filter(|&x| mask & (1 << x) != 0)
            .map(|x| {
                let prev = mask & !(1 << x);
                past[prev as usize] * lambda.get(x, prev)
            })
            .sum();
    }
    LambdaDecomposition::from_fn(n, 1.0, |x, c| {
        let (w, v) = (future[c as usize], past[c as usize]);
        if w * v > 0.0 {
            lambda.get(x, c) * future[(c | (1 << x)) as usize] / w
        } else {
            0.0
        }
    })
}

/// `p'(pi) = p(pi^-1)`.
pub fn inverse_distribution(p: &DistributionTable) -> DistributionTable {
    p.pushforward(|pi| pi.inverse())
}

/// `p_{o sigma}(pi) = p(pi sigma)`.
pub fn right_multiply(p: &DistributionTable, sigma: &Permutation) -> Result<DistributionTable> {
    relabel_distribution(p, sigma, &Permutation::identity(p.n()))
}

/// `p_{sigma o}(pi) = p(sigma pi)`.
pub fn left_multiply(p: &DistributionTable, sigma: &Permutation) -> Result<DistributionTable> {
    relabel_distribution(p, &Permutation::identity(p.n()), &sigma.inverse())
}

/// Largest disagreement between next-element laws given two ordered prefixes
/// with the same underlying set, over `2 <= k <= n-2`. Prefixes of zero
/// probability are skipped.
fn conditional_violation(p: &DistributionTable) -> f64 {
    let n = p.n();
    let perms = p.permutations();
    let probs = p.probs();
    let mut worst = 0.0f64;
    for k in 2..n.saturating_sub(1) {
        let block = factorial(n - k);
        let sub = factorial(n - k - 1);
        let mut ranges: HashMap<u32, Vec<(f64, f64)>> = HashMap::new();
        for (b, chunk) in probs.chunks(block).enumerate() {
            let mass: f64 = chunk.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            let mask = perms[b * block].prefix_mask(k);
            let entry = ranges
                .entry(mask)
                .or_insert_with(|| vec![(f64::INFINITY, f64::NEG_INFINITY); n]);
            for (j, part) in chunk.chunks(sub).enumerate() {
                let x = perms[b * block + j * sub].get(k);
                let cond = part.iter().sum::<f64>() / mass;
                let (lo, hi) = &mut entry[x];
                *lo = lo.min(cond);
                *hi = hi.max(cond);
            }
        }
        for entry in ranges.values() {
            for &(lo, hi) in entry {
                if hi >= lo {
                    worst = worst.max(hi - lo);
                }
            }
        }
    }
    worst
}

fn round_trip_violation(canonical: &LambdaDecomposition, p: &DistributionTable) -> f64 {
    p.permutations()
        .iter()
        .zip(p.probs())
        .map(|(pi, &w)| (canonical.weight(pi) - w).abs())
        .fold(0.0, f64::max)
}

/// Largest deviation of the canonical decomposition from the closest one of
/// the form `Lambda(x, C) = F(C + x) / sum_y F(C + y)`.
///
/// Potentials `log F` are propagated along a spanning forest of the sets of
/// each size; the canonical values are then predicted from them.
fn set_potential_violation(c: &Canonical) -> f64 {
    let lambda = &c.lambda;
    let n = lambda.n;
    let full = 1u32 << n;
    let reachable = |mask: u32| c.prefix_mass[mask as usize] > 0.0;
    let outside = move |mask: u32| (0..n).filter(move |&x| mask & (1 << x) == 0);

    let mut potential: Vec<Option<f64>> = vec![None; full as usize];
    let mut edges: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
    let mut live = vec![false; full as usize];
    for mask in (0..full - 1).filter(|&m| reachable(m)) {
        let positive: Vec<usize> = outside(mask).filter(|&x| lambda.get(x, mask) > 0.0).collect();
        let Some(&x0) = positive.first() else { continue };
        let anchor = mask | (1 << x0);
        live[anchor as usize] = true;
        for &x in &positive[1..] {
            let w = (lambda.get(x, mask) / lambda.get(x0, mask)).ln();
            let node = mask | (1 << x);
            live[node as usize] = true;
            edges.entry(anchor).or_default().push((node, w));
            edges.entry(node).or_default().push((anchor, -w));
        }
    }
    for start in 0..full {
        if !live[start as usize] || potential[start as usize].is_some() {
            continue;
        }
        potential[start as usize] = Some(0.0);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let gu = potential[u as usize].unwrap();
            for &(v, w) in edges.get(&u).into_iter().flatten() {
                if potential[v as usize].is_none() {
                    potential[v as usize] = Some(gu + w);
                    queue.push_back(v);
                }
            }
        }
    }

    let mut worst = 0.0f64;
    for mask in (0..full - 1).filter(|&m| reachable(m)) {
        let logs: Vec<(usize, f64)> = outside(mask)
            .filter_map(|x| potential[(mask | (1 << x)) as usize].map(|g| (x, g)))
            .collect();
        let top = logs.iter().map(|&(_, g)| g).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logs.iter().map(|&(_, g)| (g - top).exp()).sum();
        for x in outside(mask) {
            let predicted = match potential[(mask | (1 << x)) as usize] {
                Some(g) if z > 0.0 => (g - top).exp() / z,
                _ => 0.0,
            };
            worst = worst.max((predicted - lambda.get(x, mask)).abs());
        }
    }
    worst
}

/// Outcome of one decomposability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: bool,
    pub max_violation: f64,
    /// Max-norm gap between `p` and its reconstruction from the canonical
    /// decomposition(s) involved.
    #[serde(skip)]
    pub round_trip_violation: f64,
}

impl Verdict {
    fn and(self, other: Verdict) -> Verdict {
        Verdict {
            verdict: self.verdict && other.verdict,
            max_violation: self.max_violation.max(other.max_violation),
            round_trip_violation: self.round_trip_violation.max(other.round_trip_violation),
        }
    }
}

fn l_verdict(p: &DistributionTable, canonical: &Canonical, tol: f64) -> Result<Verdict> {
    let cond = conditional_violation(p);
    let rt = round_trip_violation(&canonical.lambda, p);
    let (by_cond, by_rt) = (cond <= tol, rt <= tol);
    if by_cond != by_rt {
        let failing = if by_cond { rt } else { cond };
        if failing > 100.0 * tol {
            return Err(Error::Numerical(format!(
                "conditional check ({cond:e}) and canonical round trip ({rt:e}) disagree"
            )));
        }
    }
    Ok(Verdict {
        verdict: by_cond,
        max_violation: cond,
        round_trip_violation: rt,
    })
}

fn ls_verdict(p: &DistributionTable, tol: f64) -> Result<Verdict> {
    let canonical = canonical_with_mass(p);
    let base = l_verdict(p, &canonical, tol)?;
    let pot = set_potential_violation(&canonical);
    Ok(Verdict {
        verdict: base.verdict && pot <= tol,
        max_violation: base.max_violation.max(pot),
        round_trip_violation: base.round_trip_violation,
    })
}

/// Tests membership in one of the six decomposability families.
pub fn is_decomposable(p: &DistributionTable, family: Family, tol: f64) -> Result<Verdict> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameters(format!("tolerance {tol} must be positive")));
    }
    match family {
        Family::L => l_verdict(p, &canonical_with_mass(p), tol),
        Family::LPrime => {
            let q = inverse_distribution(p);
            l_verdict(&q, &canonical_with_mass(&q), tol)
        }
        Family::LS => ls_verdict(p, tol),
        Family::LSPrime => ls_verdict(&inverse_distribution(p), tol),
        Family::Bi => Ok(is_decomposable(p, Family::L, tol)?.and(is_decomposable(p, Family::LPrime, tol)?)),
        Family::BiS => Ok(is_decomposable(p, Family::LS, tol)?.and(is_decomposable(p, Family::LSPrime, tol)?)),
        other => Err(Error::UnsupportedFamily(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposabilityReport {
    #[serde(flatten)]
    pub families: BTreeMap<Family, Verdict>,
    pub tolerance: f64,
}

impl DecomposabilityReport {
    pub fn verdict(&self, family: Family) -> Option<bool> {
        self.families.get(&family).map(|v| v.verdict)
    }
}

pub fn decomposability_report(p: &DistributionTable, tol: f64) -> Result<DecomposabilityReport> {
    let l = is_decomposable(p, Family::L, tol)?;
    let lp = is_decomposable(p, Family::LPrime, tol)?;
    let ls = is_decomposable(p, Family::LS, tol)?;
    let lsp = is_decomposable(p, Family::LSPrime, tol)?;
    let families = BTreeMap::from([
        (Family::L, l),
        (Family::LPrime, lp),
        (Family::LS, ls),
        (Family::LSPrime, lsp),
        (Family::Bi, l.and(lp)),
        (Family::BiS, ls.and(lsp)),
    ]);
    Ok(DecomposabilityReport {
        families,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CiMode {
    Consecutive,
    Rectangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiVerdict {
    pub holds: bool,
    pub max_violation: f64,
}

/// Max over conditioning events `E` of positive probability and over `pi` in
/// `E` of `|P(pi | E) - prod_j P(component_j(pi) | E)|`.
fn factorization_violation<K, C>(p: &DistributionTable, condition: K, components: C) -> f64
where
    K: Fn(&Permutation) -> Vec<u32>,
    C: Fn(&Permutation) -> Vec<Vec<u8>>,
{
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (idx, pi) in p.permutations().iter().enumerate() {
        groups.entry(condition(pi)).or_default().push(idx);
    }
    let perms = p.permutations();
    let probs = p.probs();
    let mut worst = 0.0f64;
    for members in groups.values() {
        let total: f64 = members.iter().map(|&i| probs[i]).sum();
        if total <= 0.0 {
            continue;
        }
        // zero-mass members stay in: their product of marginals must vanish too
        let parts: Vec<Vec<Vec<u8>>> = members.iter().map(|&i| components(&perms[i])).collect();
        let mut marginals: Vec<HashMap<&[u8], f64>> = vec![HashMap::new(); parts[0].len()];
        for (m, &i) in members.iter().enumerate() {
            for (j, comp) in parts[m].iter().enumerate() {
                *marginals[j].entry(comp.as_slice()).or_default() += probs[i];
            }
        }
        for (m, &i) in members.iter().enumerate() {
            let product: f64 = parts[m]
                .iter()
                .enumerate()
                .map(|(j, comp)| marginals[j][comp.as_slice()] / total)
                .product();
            worst = worst.max((probs[i] / total - product).abs());
        }
    }
    worst
}

fn set_mask(values: impl Iterator<Item = usize>) -> u32 {
    values.fold(0, |m, v| m | (1 << v))
}

/// Conditional independence of the ordered marginals `Pi_{Z_i}` given the
/// unordered marginals `{Pi_{Z_i}}`, for an arbitrary partition `Z` of the
/// positions.
pub fn check_partition_independence(p: &DistributionTable, z: &SetPartition, tol: f64) -> Result<CiVerdict> {
    if z.n() != p.n() {
        return Err(Error::Size(format!("partition of {} for S_{}", z.n(), p.n())));
    }
    let v = factorization_violation(
        p,
        |pi| z.atoms().iter().map(|a| set_mask(a.iter().map(|&i| pi.get(i)))).collect(),
        |pi| {
            z.atoms()
                .iter()
                .map(|a| a.iter().map(|&i| pi.get(i) as u8).collect())
                .collect()
        },
    );
    Ok(CiVerdict {
        holds: v <= tol,
        max_violation: v,
    })
}

/// Consecutive mode factorizes `P(Pi = pi | {Pi_kappa})` over the blocks of
/// `kappa`; rectangle mode factorizes `P(Pi = pi | {Pi_kappa}, {Pi^-1_lambda})`
/// over the rectangles `kappa_i x lambda_j`.
pub fn check_conditional_independence(
    p: &DistributionTable,
    mode: CiMode,
    kappa: &ConsecutiveSections,
    lambda: Option<&ConsecutiveSections>,
    tol: f64,
) -> Result<CiVerdict> {
    let n = p.n();
    if kappa.n() != n || lambda.is_some_and(|l| l.n() != n) {
        return Err(Error::Size(format!("sections do not match S_{n}")));
    }
    match mode {
        CiMode::Consecutive => check_partition_independence(p, &SetPartition::from_sections(kappa), tol),
        CiMode::Rectangle => {
            let lambda = lambda.ok_or_else(|| {
                Error::InvalidParameters("rectangle mode needs column sections".into())
            })?;
            let rows: Vec<_> = kappa.blocks().collect();
            let cols: Vec<_> = lambda.blocks().collect();
            let col_of: Vec<usize> = (0..n)
                .map(|v| cols.iter().position(|r| r.contains(&v)).unwrap())
                .collect();
            let v = factorization_violation(
                p,
                |pi| {
                    let mut key: Vec<u32> = rows.iter().map(|r| set_mask(r.clone().map(|i| pi.get(i)))).collect();
                    key.extend(cols.iter().map(|c| set_mask(r_positions(pi, c))));
                    key
                },
                |pi| {
                    let mut parts = Vec::with_capacity(rows.len() * cols.len());
                    for r in &rows {
                        for j in 0..cols.len() {
                            let cell: Vec<u8> = r
                                .clone()
                                .filter(|&a| col_of[pi.get(a)] == j)
                                .flat_map(|a| [a as u8, pi.get(a) as u8])
                                .collect();
                            parts.push(cell);
                        }
                    }
                    parts
                },
            );
            Ok(CiVerdict {
                holds: v <= tol,
                max_violation: v,
            })
        }
    }
}

fn r_positions<'a>(pi: &'a Permutation, values: &'a std::ops::Range<usize>) -> impl Iterator<Item = usize> + 'a {
    (0..pi.len()).filter(move |&a| values.contains(&pi.get(a)))
}

/// Consecutive-mode check over every consecutive partition.
pub fn consecutive_sweep(p: &DistributionTable, tol: f64) -> Result<CiVerdict> {
    let all = ConsecutiveSections::all(p.n());
    let worst = all
        .par_iter()
        .map(|k| check_conditional_independence(p, CiMode::Consecutive, k, None, tol).map(|v| v.max_violation))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CiVerdict {
        holds: worst <= tol,
        max_violation: worst,
    })
}

/// Rectangle-mode check over every pair of consecutive partitions.
pub fn rectangle_sweep(p: &DistributionTable, tol: f64) -> Result<CiVerdict> {
    let all = ConsecutiveSections::all(p.n());
    let pairs: Vec<_> = all.iter().flat_map(|k| all.iter().map(move |l| (k, l))).collect();
    let worst = pairs
        .par_iter()
        .map(|(k, l)| check_conditional_independence(p, CiMode::Rectangle, k, Some(l), tol).map(|v| v.max_violation))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CiVerdict {
        holds: worst <= tol,
        max_violation: worst,
    })
}

/// Max-norm residual of `log p` after projection onto the family's
/// log-linear subspace. Defined for strictly positive `p` only.
pub fn log_linear_residual(p: &DistributionTable, family: Family) -> Result<f64> {
    if !p.is_positive() {
        return Err(Error::InvalidDistribution(
            "log-linear residual needs a strictly positive distribution".into(),
        ));
    }
    let proj = family_projector(&GeneratorFamily::new(family, p.n()))?;
    let logs: Vec<f64> = p.probs().iter().map(|x| x.ln()).collect();
    Ok(proj.residual(&logs))
}

/// For `sigma` outside the eight-element right-invariance group, a positive
/// bi-decomposable `p = c exp(rho^{ss}_{s5})` whose right multiple
/// `p_{o sigma}` is not L-decomposable, with the index `s` used.
///
/// Finds `2 <= a <= n-2` with `sigma^-1{1:a}` neither `{1:a}` nor
/// `{n-a+1:n}`, then a separating index: either `d*` outside the image of
/// `{1:a}` lying strictly between two images of `{1:a}`, or `c*` inside it
/// lying strictly between two images of its complement.
pub fn right_multiplication_witness(sigma: &Permutation) -> Result<Option<(usize, DistributionTable)>> {
    let n = sigma.len();
    if n < 4 || right_invariance_group(n).contains(sigma) {
        return Ok(None);
    }
    let star = sigma.inverse();
    let separates = |x: usize, lo: usize, hi: usize| (lo < x && x < hi) || (hi < x && x < lo);
    for a in 2..=n - 2 {
        let inside: Vec<usize> = (0..a).map(|c| star.get(c)).collect();
        let outside: Vec<usize> = (a..n).map(|d| star.get(d)).collect();
        let mut sorted = inside.clone();
        sorted.sort_unstable();
        let head: Vec<usize> = (0..a).collect();
        let tail: Vec<usize> = (n - a..n).collect();
        if sorted == head || sorted == tail {
            continue;
        }
        let mut separator = None;
        'search: for &d in &outside {
            for &c in &inside {
                for &e in &inside {
                    if separates(d, c, e) {
                        separator = Some(d);
                        break 'search;
                    }
                }
            }
        }
        if separator.is_none() {
            'search2: for &c in &inside {
                for &d in &outside {
                    for &f in &outside {
                        if separates(c, d, f) {
                            separator = Some(c);
                            break 'search2;
                        }
                    }
                }
            }
        }
        let s = separator.expect("a set that is not an interval at either end has a separator") + 1;
        let rho = basis_vector(BasisKind::Rho, s, s, s, 5, n)?;
        let p = DistributionTable::new(
            n,
            normalize_exp(&rho.coords),
        )?;
        return Ok(Some((s, p)));
    }
    Err(Error::Numerical(format!("no separating section found for {sigma}")))
}

fn normalize_exp(exponents: &[i64]) -> Vec<f64> {
    let w: Vec<f64> = exponents.iter().map(|&e| (e as f64).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::enumerate_permutations;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn random_table(n: usize, seed: u64) -> DistributionTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..factorial(n)).map(|_| rng.gen_range(0.05..1.0)).collect();
        DistributionTable::from_weights(n, w).unwrap()
    }

    fn random_l_table(n: usize, seed: u64) -> DistributionTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = LambdaDecomposition::from_fn(n, 1.0, |_, _| rng.gen_range(0.1..1.0));
        distribution_from_lambda(&canonicalize(&raw)).unwrap()
    }

    #[test]
    fn canonical_lambda_of_uniform() {
        let n = 4;
        let lam = canonical_lambda(&DistributionTable::uniform(n).unwrap());
        for mask in 0u32..(1 << n) {
            let size = mask.count_ones() as usize;
            for x in (0..n).filter(|&x| mask & (1 << x) == 0) {
                assert!((lam.get(x, mask) - 1.0 / (n - size) as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn canonical_lambda_of_point_mass() {
        let lam = canonical_lambda(&DistributionTable::point_mass(&p("2 1 3")).unwrap());
        // elements 1,2,3 are bits 0,1,2
        assert_eq!(lam.get(1, 0b000), 1.0);
        assert_eq!(lam.get(0, 0b010), 1.0);
        assert_eq!(lam.get(2, 0b011), 1.0);
        assert_eq!(lam.get(0, 0b000), 0.0);
        assert_eq!(lam.get(2, 0b000), 0.0);
        assert_eq!(lam.get(2, 0b010), 0.0);
        // unreachable set
        assert_eq!(lam.get(1, 0b001), 0.0);
    }

    #[test]
    fn lambda_round_trips() {
        let n = 4;
        let u = LambdaDecomposition::from_fn(n, 1.0, |_, c| 1.0 / (n - c.count_ones() as usize) as f64);
        assert_eq!(distribution_from_lambda(&u).unwrap().max_abs_diff(&DistributionTable::uniform(n).unwrap()), 0.0);

        let q = random_l_table(5, 3);
        let back = distribution_from_lambda(&canonical_lambda(&q)).unwrap();
        assert!(back.max_abs_diff(&q) < 1e-15);

        let bad = LambdaDecomposition::from_fn(3, 1.0, |_, _| 1.0);
        assert!(matches!(distribution_from_lambda(&bad), Err(Error::InvalidLambda(_))));
    }

    #[test]
    fn canonicalize_matches_canonical_lambda() {
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw = LambdaDecomposition::from_fn(n, 0.37, |_, _| rng.gen_range(0.1..2.0));
        let weights: Vec<f64> = enumerate_permutations(n).unwrap().iter().map(|pi| raw.weight(pi)).collect();
        let q = DistributionTable::from_weights(n, weights).unwrap();
        let direct = canonical_lambda(&q);
        let converted = canonicalize(&raw);
        for (a, b) in direct.values.iter().zip(&converted.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_distribution_examples() {
        let u = DistributionTable::uniform(4).unwrap();
        assert_eq!(inverse_distribution(&u), u);
        let pi0 = p("2 3 4 1");
        let inv = inverse_distribution(&DistributionTable::point_mass(&pi0).unwrap());
        assert_eq!(inv.prob(&pi0.inverse()), 1.0);
        let q = random_table(4, 5);
        assert_eq!(inverse_distribution(&inverse_distribution(&q)), q);
    }

    #[test]
    fn small_n_is_always_l_decomposable() {
        for seed in 0..5 {
            let q = random_table(3, seed);
            assert!(is_decomposable(&q, Family::L, DEFAULT_TOL).unwrap().verdict);
            assert!(is_decomposable(&q, Family::LPrime, DEFAULT_TOL).unwrap().verdict);
        }
    }

    #[test]
    fn uniform_passes_everything() {
        let u = DistributionTable::uniform(5).unwrap();
        let rep = decomposability_report(&u, DEFAULT_TOL).unwrap();
        for f in Family::DECOMPOSABLE {
            assert!(rep.verdict(f).unwrap(), "{f}");
        }
        for mode in [CiMode::Consecutive, CiMode::Rectangle] {
            let k = ConsecutiveSections::new(5, vec![2, 3]).unwrap();
            let v = check_conditional_independence(&u, mode, &k, Some(&k), DEFAULT_TOL).unwrap();
            assert!(v.holds);
            assert!(v.max_violation < 1e-15);
        }
    }

    #[test]
    fn generic_table_fails_l() {
        let q = random_table(4, 2024);
        let v = is_decomposable(&q, Family::L, DEFAULT_TOL).unwrap();
        assert!(!v.verdict);
        assert!(v.max_violation > 10.0 * DEFAULT_TOL);
        // independent recomputation: compare P(Pi(3)=x | Pi(1..2)=(1,2)) with the (2,1) prefix
        let perms = enumerate_permutations(4).unwrap();
        let cond = |a: usize, b: usize, x: usize| {
            let prefix: f64 = perms.iter().zip(q.probs()).filter(|(pi, _)| pi.get(0) == a && pi.get(1) == b).map(|(_, w)| w).sum();
            let joint: f64 = perms
                .iter()
                .zip(q.probs())
                .filter(|(pi, _)| pi.get(0) == a && pi.get(1) == b && pi.get(2) == x)
                .map(|(_, w)| w)
                .sum();
            joint / prefix
        };
        let mut direct = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                for x in 0..4 {
                    if a != b && x != a && x != b {
                        direct = direct.max((cond(a, b, x) - cond(b, a, x)).abs());
                    }
                }
            }
        }
        assert!((direct - v.max_violation).abs() < 1e-12);
    }

    #[test]
    fn report_invariants_hold() {
        for seed in 0..4 {
            for q in [random_table(4, seed), random_l_table(4, seed)] {
                let rep = decomposability_report(&q, DEFAULT_TOL).unwrap();
                let v = |f| rep.verdict(f).unwrap();
                assert_eq!(v(Family::Bi), v(Family::L) && v(Family::LPrime));
                assert_eq!(v(Family::BiS), v(Family::LS) && v(Family::LSPrime));
                assert!(!v(Family::LS) || v(Family::L));
                assert!(!v(Family::LSPrime) || v(Family::LPrime));
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let rep = decomposability_report(&DistributionTable::uniform(4).unwrap(), DEFAULT_TOL).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["tolerance"], 1e-9);
        assert_eq!(v["L"]["verdict"], true);
        assert!(v["BI_S"]["max_violation"].is_number());
    }

    #[test]
    fn unsupported_family_is_rejected() {
        let u = DistributionTable::uniform(3).unwrap();
        assert!(matches!(
            is_decomposable(&u, Family::Saturated, DEFAULT_TOL),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(is_decomposable(&u, Family::L, 0.0).is_err());
    }

    #[test]
    fn l_decomposable_tables_satisfy_consecutive_independence() {
        let q = random_l_table(4, 8);
        for k in ConsecutiveSections::all(4) {
            assert!(check_conditional_independence(&q, CiMode::Consecutive, &k, None, DEFAULT_TOL).unwrap().holds);
        }
    }

    #[test]
    fn ls_check_accepts_set_potentials_and_rejects_generic_l() {
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let f: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(0.2..2.0)).collect();
        let raw = LambdaDecomposition::from_fn(n, 1.0, |x, c| f[(c | (1 << x)) as usize]);
        let q = distribution_from_lambda(&canonicalize(&raw)).unwrap();
        assert!(is_decomposable(&q, Family::LS, DEFAULT_TOL).unwrap().verdict);
        assert!(log_linear_residual(&q, Family::LS).unwrap() < 1e-9);

        let generic = random_l_table(n, 4);
        assert!(is_decomposable(&generic, Family::L, DEFAULT_TOL).unwrap().verdict);
        assert!(!is_decomposable(&generic, Family::LS, DEFAULT_TOL).unwrap().verdict);
        assert!(log_linear_residual(&generic, Family::LS).unwrap() > 1e-3);
    }

    #[test]
    fn witness_breaks_right_multiplication() {
        let n = 4;
        let group = right_invariance_group(n);
        for sigma in enumerate_permutations(n).unwrap() {
            let w = right_multiplication_witness(sigma).unwrap();
            if group.contains(sigma) {
                assert!(w.is_none());
                continue;
            }
            let (_, q) = w.unwrap();
            assert!(is_decomposable(&q, Family::Bi, DEFAULT_TOL).unwrap().verdict);
            let moved = right_multiply(&q, sigma).unwrap();
            assert!(!is_decomposable(&moved, Family::L, DEFAULT_TOL).unwrap().verdict, "sigma = {sigma}");
        }
    }
}
