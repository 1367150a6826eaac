//! Exact rank of integer vector families and orthogonal projection onto
//! their span.
//!
//! Elimination runs over `i128` with content (gcd) normalization of every
//! reduced vector. If an intermediate value overflows, the whole reduction is
//! redone over arbitrary-precision integers, so the result is always exact.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedMul, CheckedSub, Signed};

/// Rank together with the indices of a maximal independent subfamily
/// (greedy, in input order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankResult {
    pub rank: usize,
    pub independent: Vec<usize>,
}

pub fn exact_rank<V: AsRef<[i64]>>(vectors: &[V]) -> RankResult {
    let as_i128 = |v: &V| v.as_ref().iter().map(|&x| x as i128).collect::<Vec<_>>();
    if let Some(r) = echelon(vectors.iter().map(as_i128)) {
        return r;
    }
    let as_big = |v: &V| v.as_ref().iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
    echelon(vectors.iter().map(as_big)).expect("big integer elimination cannot overflow")
}

fn echelon<T, I>(vectors: I) -> Option<RankResult>
where
    T: Clone + Integer + Signed + CheckedMul + CheckedSub,
    I: Iterator<Item = Vec<T>>,
{
    let mut basis: Vec<(usize, Vec<T>)> = Vec::new();
    let mut independent = Vec::new();
    for (idx, mut v) in vectors.enumerate() {
        for (pivot, row) in &basis {
            if v[*pivot].is_zero() {
                continue;
            }
            let (scale_v, scale_row) = reduced_pair(&row[*pivot], &v[*pivot]);
            for (x, r) in v.iter_mut().zip(row) {
                if r.is_zero() {
                    *x = x.checked_mul(&scale_v)?;
                } else {
                    let a = x.checked_mul(&scale_v)?;
                    let b = r.checked_mul(&scale_row)?;
                    *x = a.checked_sub(&b)?;
                }
            }
            normalize(&mut v);
        }
        if let Some(pivot) = v.iter().position(|x| !x.is_zero()) {
            basis.push((pivot, v));
            independent.push(idx);
        }
    }
    Some(RankResult {
        rank: basis.len(),
        independent,
    })
}

/// Multipliers `(a, b)` with `a * pivot_v - b * pivot_row = 0` in lowest terms.
fn reduced_pair<T: Clone + Integer>(pivot_row: &T, pivot_v: &T) -> (T, T) {
    let g = pivot_row.gcd(pivot_v);
    (pivot_row.clone() / g.clone(), pivot_v.clone() / g)
}

fn normalize<T: Clone + Integer + Signed>(v: &mut [T]) {
    let mut g = T::zero();
    for x in v.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
    }
    if g.is_zero() {
        return;
    }
    let lead_negative = v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
    let g = if lead_negative { -g } else { g };
    if g.is_one() {
        return;
    }
    for x in v.iter_mut() {
        if !x.is_zero() {
            *x = x.clone() / g.clone();
        }
    }
}

/// Orthogonal projector onto the span of a vector family in `R^N`.
#[derive(Debug, Clone)]
pub struct SpanProjector {
    q: DMatrix<f64>,
}

impl SpanProjector {
    /// Keeps an exactly independent subfamily, then orthonormalizes it.
    pub fn new<V: AsRef<[i64]>>(vectors: &[V]) -> Self {
        let RankResult { independent, .. } = exact_rank(vectors);
        let rows = vectors.first().map_or(0, |v| v.as_ref().len());
        let mut m = DMatrix::<f64>::zeros(rows, independent.len());
        for (c, &idx) in independent.iter().enumerate() {
            for (r, &x) in vectors[idx].as_ref().iter().enumerate() {
                m[(r, c)] = x as f64;
            }
        }
        let q = if independent.is_empty() {
            m
        } else {
            m.qr().q()
        };
        SpanProjector { q }
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let y = DVector::from_column_slice(y);
        let coeffs = self.q.transpose() * &y;
        (&self.q * coeffs).iter().copied().collect()
    }

    /// `max_i |y - P y|_i`.
    pub fn residual(&self, y: &[f64]) -> f64 {
        self.project(y)
            .iter()
            .zip(y)
            .map(|(p, v)| (p - v).abs())
            .fold(0.0, f64::max)
    }
}
