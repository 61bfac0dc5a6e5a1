//! Secrecy capacity `max_P [I(P, Qy) − I(P, Qz)]` with the identity prefix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::infofunc::{Distribution, Kernel};

pub const SIMPLEX_GRID: usize = 1000;
pub const MAX_ALPHABET: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyCapacity {
    /// Nats per channel use, clamped at zero.
    pub value: f64,
    pub input: Distribution,
}

struct Gap {
    bob: Kernel,
    eve: Kernel,
}

impl Gap {
    fn at(&self, p: &[f64]) -> Result<f64> {
        let d = Distribution::from_simplex_point(p.to_vec());
        Ok(self.bob.mutual_information(&d)? - self.eve.mutual_information(&d)?)
    }
}

/// Grid points of the simplex in lexicographic order.
fn grid_point(dims: usize, index: usize) -> Vec<f64> {
    let n = SIMPLEX_GRID;
    match dims {
        1 => vec![1.0],
        2 => vec![index as f64 / n as f64, (n - index) as f64 / n as f64],
        _ => {
            // index enumerates (i, j) with i + j <= n, i-major
            let mut rest = index;
            let mut i = 0;
            while rest > n - i {
                rest -= n - i + 1;
                i += 1;
            }
            let j = rest;
            vec![i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64]
        }
    }
}

fn grid_size(dims: usize) -> usize {
    let n = SIMPLEX_GRID;
    match dims {
        1 => 1,
        2 => n + 1,
        _ => (n + 1) * (n + 2) / 2,
    }
}

/// Grid search at resolution `1/1000` followed by pairwise-transfer pattern
/// search. Alphabets larger than three are rejected: the objective is not
/// concave in general and a grid does not scale.
pub fn secrecy_capacity(bob: &Channel, eve: &Channel) -> Result<SecrecyCapacity> {
    let dims = bob.input_size();
    if eve.input_size() != dims {
        return Err(Error::DimensionMismatch(format!(
            "Bob's channel has {dims} inputs, Eve's has {}",
            eve.input_size()
        )));
    }
    if dims > MAX_ALPHABET {
        return Err(Error::InvalidArgument(format!(
            "secrecy capacity search supports at most {MAX_ALPHABET} inputs, got {dims}"
        )));
    }
    let gap = Gap {
        bob: Kernel::from_channel(bob)?,
        eve: Kernel::from_channel(eve)?,
    };
    let values: Vec<f64> = (0..grid_size(dims))
        .into_par_iter()
        .map(|idx| gap.at(&grid_point(dims, idx)))
        .collect::<Result<_>>()?;
    // first maximum in lexicographic order
    let (best_idx, mut best) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let mut p = grid_point(dims, best_idx);

    let mut step = 1.0 / SIMPLEX_GRID as f64;
    while step > 1e-12 {
        let mut improved = false;
        for a in 0..dims {
            for b in 0..dims {
                if a == b || p[b] < step {
                    continue;
                }
                let mut q = p.clone();
                q[a] += step;
                q[b] -= step;
                let v = gap.at(&q)?;
                if v > best {
                    best = v;
                    p = q;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(SecrecyCapacity {
        value: best.max(0.0),
        input: Distribution::new(p)?,
    })
}
