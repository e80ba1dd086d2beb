use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::ParticleCloud;

fn sorted_by_position<T: Scalar>(cloud: &ParticleCloud<T>) -> Vec<(T, T)> {
    let mut v: Vec<(T, T)> = cloud.iter().map(|(p, w)| (p[0], w)).collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    v
}

/// W₂ between two 1D clouds by monotone rearrangement.
///
/// Both clouds are sorted and their masses are split at the union of the
/// cumulative-weight breakpoints; each slice of mass moves between the
/// corresponding quantiles.
pub fn w2_distance_1d<T: Scalar>(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> Result<T> {
    for c in [mu, nu] {
        if c.dim() != 1 {
            return Err(Error::WrongDimension {
                expected: 1,
                actual: c.dim(),
            });
        }
    }
    let a = sorted_by_position(mu);
    let b = sorted_by_position(nu);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = T::zero();
    loop {
        let m = ra.min(rb);
        let d = a[i].0 - b[j].0;
        total = total + m * d * d;
        ra = ra - m;
        rb = rb - m;
        // Advance whichever side ran out; the comparison picks the exhausted one
        // even when both residuals are rounding noise.
        if ra <= rb {
            i += 1;
            if i == a.len() {
                break;
            }
            ra = ra + a[i].1;
        } else {
            j += 1;
            if j == b.len() {
                break;
            }
            rb = rb + b[j].1;
        }
    }
    Ok(total.max(T::zero()).sqrt())
}
