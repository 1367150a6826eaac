//! Classical ranking models as dense tables, their printed decompositions,
//! and a sampler.
//!
//! Parameters are indexed from 0 in code and from 1 in the formulas quoted in
//! the comments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::LambdaDecomposition;
use crate::error::{Error, Result};
use crate::fit::EmpiricalData;
use crate::perm::{factorial, group, DistributionTable, Limits, HARD_MAX_N};

const PARAM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassicKind {
    Luce,
    BabingtonSmith,
    Mbt,
    Multistage,
    RepeatedInsertion,
    QuasiIndependence,
}

impl ClassicKind {
    pub const ALL: [ClassicKind; 6] = [
        ClassicKind::Luce,
        ClassicKind::BabingtonSmith,
        ClassicKind::Mbt,
        ClassicKind::Multistage,
        ClassicKind::RepeatedInsertion,
        ClassicKind::QuasiIndependence,
    ];
}

/// Model parameters. Triangular arrays are stored by stage: `theta[k-1][i-1]`
/// is `theta(i, k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicModel {
    /// Object weights summing to one.
    Luce { theta: Vec<f64> },
    /// `theta[x][y]`: probability that `x` beats `y`.
    BabingtonSmith { theta: Vec<Vec<f64>> },
    Mbt { alpha: Vec<f64> },
    /// Stage `k` has `n - k + 1` choice probabilities.
    Multistage { theta: Vec<Vec<f64>> },
    /// Candidate `k` has `k` insertion probabilities.
    RepeatedInsertion { theta: Vec<Vec<f64>> },
    /// Doubly stochastic matrix.
    QuasiIndependence { theta: Vec<Vec<f64>> },
}

/// `{kind, n, params}`, validated on construction and on deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ClassicSpec {
    n: usize,
    model: ClassicModel,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    kind: ClassicKind,
    n: usize,
    params: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct VectorParams {
    #[serde(alias = "alpha")]
    theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixParams {
    theta: Vec<Vec<f64>>,
}

impl TryFrom<RawSpec> for ClassicSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let vector = |v: serde_json::Value| -> Result<Vec<f64>> { Ok(serde_json::from_value::<VectorParams>(v)?.theta) };
        let matrix = |v: serde_json::Value| -> Result<Vec<Vec<f64>>> { Ok(serde_json::from_value::<MatrixParams>(v)?.theta) };
        let model = match raw.kind {
            ClassicKind::Luce => ClassicModel::Luce { theta: vector(raw.params)? },
            ClassicKind::Mbt => ClassicModel::Mbt { alpha: vector(raw.params)? },
            ClassicKind::BabingtonSmith => ClassicModel::BabingtonSmith { theta: matrix(raw.params)? },
            ClassicKind::Multistage => ClassicModel::Multistage { theta: matrix(raw.params)? },
            ClassicKind::RepeatedInsertion => ClassicModel::RepeatedInsertion { theta: matrix(raw.params)? },
            ClassicKind::QuasiIndependence => ClassicModel::QuasiIndependence { theta: matrix(raw.params)? },
        };
        ClassicSpec::new(raw.n, model)
    }
}

impl From<ClassicSpec> for RawSpec {
    fn from(spec: ClassicSpec) -> Self {
        let kind = spec.kind();
        let params = match spec.model {
            ClassicModel::Mbt { alpha } => serde_json::json!({ "alpha": alpha }),
            ClassicModel::Luce { theta } => serde_json::json!({ "theta": theta }),
            ClassicModel::BabingtonSmith { theta }
            | ClassicModel::Multistage { theta }
            | ClassicModel::RepeatedInsertion { theta }
            | ClassicModel::QuasiIndependence { theta } => serde_json::json!({ "theta": theta }),
        };
        RawSpec { kind, n: spec.n, params }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}

fn check_stages(theta: &[Vec<f64>], n: usize, len: impl Fn(usize) -> usize, what: &str) -> Result<()> {
    if theta.len() != n {
        return Err(invalid(format!("{what}: expected {n} stages, got {}", theta.len())));
    }
    for (k, row) in theta.iter().enumerate() {
        let want = len(k + 1);
        if row.len() != want {
            return Err(invalid(format!("{what}: stage {} has {} entries, expected {want}", k + 1, row.len())));
        }
        if row.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(invalid(format!("{what}: stage {} has a negative entry", k + 1)));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > PARAM_TOL {
            return Err(invalid(format!("{what}: stage {} sums to {s}", k + 1)));
        }
    }
    Ok(())
}

fn check_square(theta: &[Vec<f64>], n: usize, what: &str) -> Result<()> {
    if theta.len() != n || theta.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what}: expected an {n} x {n} matrix")));
    }
    Ok(())
}

impl ClassicSpec {
    pub fn new(n: usize, model: ClassicModel) -> Result<Self> {
        Limits::new(HARD_MAX_N)?.check(n)?;
        match &model {
            ClassicModel::Luce { theta } => {
                if theta.len() != n || theta.iter().any(|&t| !(t > 0.0)) {
                    return Err(invalid(format!("LUCE: need {n} positive weights")));
                }
                let s: f64 = theta.iter().sum();
                if (s - 1.0).abs() > PARAM_TOL {
                    return Err(invalid(format!("LUCE: weights sum to {s}")));
                }
            }
            ClassicModel::BabingtonSmith { theta } => {
                check_square(theta, n, "BABINGTON_SMITH")?;
                for x in 0..n {
                    for y in (0..n).filter(|&y| y != x) {
                        let t = theta[x][y];
                        if !(t > 0.0 && t < 1.0) || (t + theta[y][x] - 1.0).abs() > PARAM_TOL {
                            return Err(invalid(format!(
                                "BABINGTON_SMITH: need 0 < theta < 1 and theta_xy + theta_yx = 1 at ({}, {})",
                                x + 1,
                                y + 1
                            )));
                        }
                    }
                }
            }
            ClassicModel::Mbt { alpha } => {
                if alpha.len() != n || alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                    return Err(invalid(format!("MBT: need {n} positive alphas")));
                }
            }
            ClassicModel::Multistage { theta } => check_stages(theta, n, |k| n - k + 1, "MULTISTAGE")?,
            ClassicModel::RepeatedInsertion { theta } => check_stages(theta, n, |k| k, "REPEATED_INSERTION")?,
            ClassicModel::QuasiIndependence { theta } => {
                check_square(theta, n, "QUASI_INDEPENDENCE")?;
                if theta.iter().flatten().any(|&t| !(t >= 0.0)) {
                    return Err(invalid("QUASI_INDEPENDENCE: negative entry"));
                }
                for i in 0..n {
                    let row: f64 = theta[i].iter().sum();
                    let col: f64 = theta.iter().map(|r| r[i]).sum();
                    if (row - 1.0).abs() > PARAM_TOL || (col - 1.0).abs() > PARAM_TOL {
                        return Err(invalid("QUASI_INDEPENDENCE: matrix is not doubly stochastic"));
                    }
                }
            }
        }
        Ok(ClassicSpec { n, model })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &ClassicModel {
        &self.model
    }

    pub fn kind(&self) -> ClassicKind {
        match self.model {
            ClassicModel::Luce { .. } => ClassicKind::Luce,
            ClassicModel::BabingtonSmith { .. } => ClassicKind::BabingtonSmith,
            ClassicModel::Mbt { .. } => ClassicKind::Mbt,
            ClassicModel::Multistage { .. } => ClassicKind::Multistage,
            ClassicModel::RepeatedInsertion { .. } => ClassicKind::RepeatedInsertion,
            ClassicModel::QuasiIndependence { .. } => ClassicKind::QuasiIndependence,
        }
    }

    /// Generic parameters drawn from a ChaCha8 stream seeded with `seed`, so
    /// negative results are reproducible.
    pub fn generic(kind: ClassicKind, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut simplex = |len: usize| -> Vec<f64> {
            let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        };
        let model = match kind {
            ClassicKind::Luce => ClassicModel::Luce { theta: simplex(n) },
            ClassicKind::Mbt => ClassicModel::Mbt { alpha: simplex(n) },
            ClassicKind::Multistage => ClassicModel::Multistage {
                theta: (1..=n).map(|k| simplex(n - k + 1)).collect(),
            },
            ClassicKind::RepeatedInsertion => ClassicModel::RepeatedInsertion {
                theta: (1..=n).map(&mut simplex).collect(),
            },
            ClassicKind::BabingtonSmith => {
                let mut theta = vec![vec![0.5; n]; n];
                for x in 0..n {
                    for y in x + 1..n {
                        let t = rng.gen_range(0.1..0.9);
                        theta[x][y] = t;
                        theta[y][x] = 1.0 - t;
                    }
                }
                ClassicModel::BabingtonSmith { theta }
            }
            ClassicKind::QuasiIndependence => {
                let raw: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.1..1.0)).collect()).collect();
                ClassicModel::QuasiIndependence {
                    theta: sinkhorn(&raw, 1e-14, 100_000)?,
                }
            }
        };
        ClassicSpec::new(n, model)
    }

    /// Uniform parameters: every model reduces to the uniform distribution
    /// except MBT, which has none.
    pub fn uniform_luce(n: usize) -> Result<Self> {
        ClassicSpec::new(n, ClassicModel::Luce { theta: vec![1.0 / n as f64; n] })
    }

    /// The decomposition printed with the model, for the four models that
    /// come with one; its constant is the normalizing constant.
    ///
    /// * Luce: `theta_x / sum_{y not in C} theta_y`.
    /// * Babington-Smith: `prod_{y in C} theta_yx`.
    /// * Multistage: `theta(|complement(C) n {1:x}|, |C| + 1)`.
    /// * Repeated insertion: `theta(|C n {1:x}| + 1, x)`.
    pub fn printed_lambda(&self) -> Option<LambdaDecomposition> {
        let n = self.n;
        let below = |c: u32, x: usize| (c & ((1u32 << x) - 1)).count_ones() as usize;
        let raw = match &self.model {
            ClassicModel::Luce { theta } => LambdaDecomposition::from_fn(n, 1.0, |x, c| {
                let rest: f64 = (0..n).filter(|&y| c & (1 << y) == 0).map(|y| theta[y]).sum();
                theta[x] / rest
            }),
            ClassicModel::BabingtonSmith { theta } => LambdaDecomposition::from_fn(n, 1.0, |x, c| {
                (0..n).filter(|&y| c & (1 << y) != 0).map(|y| theta[y][x]).product()
            }),
            ClassicModel::Multistage { theta } => LambdaDecomposition::from_fn(n, 1.0, |x, c| {
                // x is counted among the remaining candidates up to x
                let rank = x + 1 - below(c, x);
                theta[c.count_ones() as usize][rank - 1]
            }),
            ClassicModel::RepeatedInsertion { theta } => {
                LambdaDecomposition::from_fn(n, 1.0, |x, c| theta[x][below(c, x)])
            }
            _ => return None,
        };
        let total: f64 = group(n).iter().map(|pi| lambda_weight(&raw, pi)).sum();
        let mut out = LambdaDecomposition::zeros(n, 1.0 / total);
        for mask in 0u32..(1 << n) {
            for x in (0..n).filter(|&x| mask & (1 << x) == 0) {
                out.set(x, mask, raw.get(x, mask));
            }
        }
        Some(out)
    }
}

fn lambda_weight(lambda: &LambdaDecomposition, pi: &crate::perm::Permutation) -> f64 {
    let mut w = 1.0;
    let mut mask = 0u32;
    for k in 0..pi.len() {
        w *= lambda.get(pi.get(k), mask);
        mask |= 1 << pi.get(k);
    }
    w
}

/// Dense table of the model, normalized by summation.
pub fn classic_distribution(spec: &ClassicSpec) -> Result<DistributionTable> {
    let n = spec.n;
    let weights: Vec<f64> = match &spec.model {
        ClassicModel::BabingtonSmith { theta } => group(n)
            .iter()
            .map(|pi| {
                let mut w = 1.0;
                for i in 0..n {
                    for j in i + 1..n {
                        w *= theta[pi.get(i)][pi.get(j)];
                    }
                }
                w
            })
            .collect(),
        ClassicModel::Mbt { alpha } => group(n)
            .iter()
            .map(|pi| (0..n).map(|i| alpha[pi.get(i)].powi((n - 1 - i) as i32)).product())
            .collect(),
        ClassicModel::QuasiIndependence { theta } => group(n)
            .iter()
            .map(|pi| (0..n).map(|i| theta[i][pi.get(i)]).product())
            .collect(),
        // the remaining models are defined stagewise by their decomposition
        _ => {
            let lambda = spec.printed_lambda().expect("stagewise models have a printed decomposition");
            group(n).iter().map(|pi| lambda_weight(&lambda, pi)).collect()
        }
    };
    DistributionTable::from_weights(n, weights)
}

/// Alternately normalizes rows and columns of a positive matrix until both
/// sums are within `tol` of one.
pub fn sinkhorn(matrix: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<Vec<Vec<f64>>> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) || matrix.iter().flatten().any(|&x| !(x > 0.0)) {
        return Err(invalid("sinkhorn needs a positive square matrix"));
    }
    let mut m = matrix.to_vec();
    for _ in 0..max_iter {
        for row in m.iter_mut() {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
        for j in 0..n {
            let s: f64 = m.iter().map(|r| r[j]).sum();
            m.iter_mut().for_each(|r| r[j] /= s);
        }
        let worst = m
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if worst <= tol {
            return Ok(m);
        }
    }
    Err(Error::Numerical(format!("sinkhorn did not converge in {max_iter} sweeps")))
}

/// `m` independent draws by inverse CDF over the lexicographic order.
pub fn sample(p: &DistributionTable, m: u64, seed: u64) -> Result<EmpiricalData> {
    if m == 0 {
        return Err(Error::InvalidParameters("sample size must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &q in p.probs() {
        acc += q;
        cdf.push(acc);
    }
    // never land on a trailing zero-probability cell
    let last = p.probs().iter().rposition(|&q| q > 0.0).expect("a distribution has mass");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; factorial(p.n())];
    for _ in 0..m {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        counts[idx] += 1;
    }
    EmpiricalData::new(p.n(), counts)
}
