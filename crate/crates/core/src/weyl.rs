//! Weyl dimension formula for the classical root systems, in exact integer
//! arithmetic.
//!
//! Weights are given by their coefficients on the fundamental weights
//! `φ_1, …, φ_r` (Bourbaki numbering). Everything is expressed in the
//! orthonormal `ε` basis scaled by two, so all inner products are integers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::Family;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootFamily {
    A,
    B,
    C,
    D,
}

impl RootFamily {
    pub fn min_rank(self) -> usize {
        match self {
            RootFamily::A | RootFamily::B | RootFamily::C => 1,
            RootFamily::D => 2,
        }
    }

    /// Root system of a compact classical algebra, using `B_r`/`D_r` for
    /// `so(n)`, `A_{n−1}` for `su(n)` and `C_n` for `sp(n)`.
    pub fn of_algebra(family: Family, n: usize) -> (RootFamily, usize) {
        match family {
            Family::Su => (RootFamily::A, n - 1),
            Family::Sp => (RootFamily::C, n),
            Family::So if n % 2 == 1 => (RootFamily::B, (n - 1) / 2),
            Family::So => (RootFamily::D, n / 2),
        }
    }
}

impl fmt::Display for RootFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for RootFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(RootFamily::A),
            "B" | "b" => Ok(RootFamily::B),
            "C" | "c" => Ok(RootFamily::C),
            "D" | "d" => Ok(RootFamily::D),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }
}

/// Coefficients of a highest weight on the fundamental weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightVector {
    pub coeffs: Vec<u32>,
}

impl WeightVector {
    pub fn new(coeffs: Vec<u32>) -> Self {
        Self { coeffs }
    }

    pub fn zero(rank: usize) -> Self {
        Self { coeffs: vec![0; rank] }
    }

    /// `φ_i` (1-based).
    pub fn fundamental(rank: usize, i: usize) -> Self {
        let mut coeffs = vec![0; rank];
        coeffs[i - 1] = 1;
        Self { coeffs }
    }
}

/// Twice the fundamental weights, as integer vectors in the `ε` basis.
fn doubled_fundamentals(family: RootFamily, rank: usize) -> Vec<Vec<i64>> {
    let amb = if family == RootFamily::A { rank + 1 } else { rank };
    (1..=rank)
        .map(|k| {
            let mut v = vec![0i64; amb];
            let spin = match family {
                RootFamily::B => k == rank,
                RootFamily::D => k + 1 >= rank,
                _ => false,
            };
            if spin {
                // B: ½(ε1+…+εr); D: ½(ε1+…+ε_{r−1} ∓ εr)
                for x in v.iter_mut() {
                    *x = 1;
                }
                if family == RootFamily::D && k == rank - 1 {
                    v[rank - 1] = -1;
                }
            } else {
                for x in v.iter_mut().take(k) {
                    *x = 2;
                }
            }
            v
        })
        .collect()
}

/// Positive roots in the `ε` basis.
fn positive_roots(family: RootFamily, rank: usize) -> Vec<Vec<i64>> {
    let amb = if family == RootFamily::A { rank + 1 } else { rank };
    let e = |i: usize| {
        let mut v = vec![0i64; amb];
        v[i] = 1;
        v
    };
    let add = |a: &[i64], b: &[i64], s: i64| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    let mut roots = Vec::new();
    for i in 0..amb {
        for j in (i + 1)..amb {
            roots.push(add(&e(i), &e(j), -1));
            if family != RootFamily::A {
                roots.push(add(&e(i), &e(j), 1));
            }
        }
    }
    for i in 0..amb {
        match family {
            RootFamily::B => roots.push(e(i)),
            RootFamily::C => roots.push(add(&e(i), &e(i), 1)),
            _ => {}
        }
    }
    roots
}

/// Dimension of the irreducible representation with highest weight `weight`.
pub fn weyl_dimension(family: RootFamily, rank: usize, weight: &WeightVector) -> Result<u128> {
    if rank < family.min_rank() {
        return Err(Error::InvalidWeight(format!("rank {rank} too small for {family}")));
    }
    if weight.coeffs.len() != rank {
        return Err(Error::InvalidWeight(format!(
            "{} coefficients for rank {rank}",
            weight.coeffs.len()
        )));
    }
    let fund = doubled_fundamentals(family, rank);
    let amb = fund[0].len();
    let mut lambda = vec![0i64; amb];
    let mut delta = vec![0i64; amb];
    for (k, f) in fund.iter().enumerate() {
        for t in 0..amb {
            lambda[t] += weight.coeffs[k] as i64 * f[t];
            delta[t] += f[t];
        }
    }
    let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for alpha in positive_roots(family, rank) {
        let d = dot(&delta, &alpha);
        let l = dot(&lambda, &alpha);
        num *= BigInt::from(l + d);
        den *= BigInt::from(d);
    }
    if !(&num % &den).is_zero() {
        return Err(Error::NonIntegerResult(format!("{num}/{den}")));
    }
    (num / den).to_u128().ok_or_else(|| Error::NonIntegerResult("overflow".into()))
}
