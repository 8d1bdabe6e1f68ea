use crate::error::{Error, Result};

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(())
}

pub(crate) fn l2_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn chi2_unchecked(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .filter(|(a, b)| *a + *b != 0.0)
        .map(|(a, b)| (a - b) * (a - b) / (a + b))
        .sum::<f64>()
}

pub fn l2(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(l2_unchecked(a, b))
}

/// Chi-squared distance `1/2 sum (p-q)^2/(p+q)`, skipping empty bins.
pub fn chi2(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    Ok(chi2_unchecked(p, q))
}

/// Kullback-Leibler divergence in nats; `p log(p/0)` is +infinity.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let mut sum = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            sum += a * (a / b).ln();
        }
    }
    Ok(sum)
}

/// Symmetric divergence `KL(P,M) + KL(Q,M)` with `M = (P+Q)/2`, in nats.
pub fn js(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(kl(p, &m)? + kl(q, &m)?)
}

/// Directed set distance: mean over `u` of the Euclidean distance to the
/// nearest member of `v`.
pub fn set_distance(u: &[Vec<f64>], v: &[Vec<f64>]) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::InvalidInput("set distance needs two nonempty feature sets".into()));
    }
    let dim = u[0].len();
    if let Some(bad) = u.iter().chain(v).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    Ok(set_distance_unchecked(u, v))
}

pub(crate) fn set_distance_unchecked(u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let total: f64 = u
        .iter()
        .map(|a| {
            v.iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / u.len() as f64
}
