//! Exact arithmetic over Z, Q, F_l and Z/m, and the matrix normal forms
//! (Smith, Hermite, reduced echelon, Howell) every other module consumes.

pub mod int;
pub mod modular;
pub mod rat;
pub mod sparse;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};
pub use int::{hnf_rows, int_valuation, kernel_basis, smith_normal_form, IntMat, SmithDecomposition};
pub use modular::{kernel_mod, relative_invariants, ModMat};
pub use rat::{is_integer, p_power, valuation, RatMat};

/// The coefficient ring a computation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "modulus")]
pub enum RingDescriptor {
    Integers,
    Rationals,
    PrimeField(u64),
    ResidueRing(u64),
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl RingDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            RingDescriptor::PrimeField(l) if !is_prime(*l) => {
                Err(Error::InvalidConfig(format!("{l} is not prime")))
            }
            RingDescriptor::ResidueRing(m) if *m < 2 => {
                Err(Error::InvalidConfig(format!("modulus {m} < 2")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, RingDescriptor::Rationals | RingDescriptor::PrimeField(_))
    }

    pub fn label(&self) -> String {
        match self {
            RingDescriptor::Integers => "Z".into(),
            RingDescriptor::Rationals => "Q".into(),
            RingDescriptor::PrimeField(l) => format!("F{l}"),
            RingDescriptor::ResidueRing(m) => format!("Z/{m}"),
        }
    }
}

/// Runtime-ring matrix facade. Entries are always reduced to canonical form
/// for their ring: residues in `[0, m)`, rationals in lowest terms.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactMatrix {
    Int(IntMat),
    Rat(RatMat),
    Mod(ModMat),
}

impl ExactMatrix {
    pub fn ring(&self) -> RingDescriptor {
        match self {
            ExactMatrix::Int(_) => RingDescriptor::Integers,
            ExactMatrix::Rat(_) => RingDescriptor::Rationals,
            ExactMatrix::Mod(m) => {
                if is_prime(m.modulus) {
                    RingDescriptor::PrimeField(m.modulus)
                } else {
                    RingDescriptor::ResidueRing(m.modulus)
                }
            }
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            ExactMatrix::Int(m) => (m.rows, m.cols),
            ExactMatrix::Rat(m) => (m.rows, m.cols),
            ExactMatrix::Mod(m) => (m.rows, m.cols),
        }
    }

    /// Row-major decimal strings, the wire format for reports.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        let (rows, cols) = self.shape();
        (0..rows)
            .map(|i| {
                (0..cols)
                    .map(|j| match self {
                        ExactMatrix::Int(m) => m.get(i, j).to_string(),
                        ExactMatrix::Rat(m) => m.get(i, j).to_string(),
                        ExactMatrix::Mod(m) => m.get(i, j).to_string(),
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rank and kernel basis of a matrix over a field (Q or F_l).
pub fn rank_and_kernel(m: &ExactMatrix) -> Result<(usize, Vec<Vec<String>>)> {
    match m {
        ExactMatrix::Rat(q) => {
            let rank = q.rank();
            let kernel = q
                .kernel()
                .into_iter()
                .map(|v| v.into_iter().map(|x| x.to_string()).collect())
                .collect();
            Ok((rank, kernel))
        }
        ExactMatrix::Mod(f) if is_prime(f.modulus) => {
            let rank = f.rank_prime();
            let kernel = f
                .kernel_prime()
                .into_iter()
                .map(|v| v.into_iter().map(|x| x.to_string()).collect())
                .collect();
            Ok((rank, kernel))
        }
        other => Err(Error::FieldRequired(other.ring().label())),
    }
}

/// Canonical spanning form over Z/m plus the module invariants of the span.
pub fn residue_normal_form(m: &ModMat) -> (ModMat, Vec<u64>) {
    (m.howell(), m.span_invariants())
}

/// Parse a decimal or `a/b` string into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>().map_err(|_| Error::InvalidConfig(format!("bad integer {t:?}")))
    };
    if let Some((n, d)) = s.split_once('/') {
        let den = parse_int(d)?;
        if den.is_zero() {
            return Err(Error::InvalidConfig("zero denominator".into()));
        }
        Ok(BigRational::new(parse_int(n)?, den))
    } else {
        Ok(BigRational::from(parse_int(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_kernel_requires_field() {
        let m = ExactMatrix::Mod(ModMat::identity(4, 2));
        assert!(matches!(rank_and_kernel(&m), Err(Error::FieldRequired(_))));
        let z = ExactMatrix::Int(IntMat::identity(2));
        assert!(rank_and_kernel(&z).is_err());
    }

    #[test]
    fn rank_kernel_identity_q() {
        let m = ExactMatrix::Rat(RatMat::identity(3));
        let (rank, kernel) = rank_and_kernel(&m).unwrap();
        assert_eq!(rank, 3);
        assert!(kernel.is_empty());
    }

    #[test]
    fn rank_kernel_f2_example() {
        let m = ExactMatrix::Mod(ModMat::from_rows(2, vec![vec![1, 1], vec![1, 1]]));
        let (rank, kernel) = rank_and_kernel(&m).unwrap();
        assert_eq!(rank, 1);
        assert_eq!(kernel, vec![vec!["1".to_string(), "1".to_string()]]);
    }

    #[test]
    fn zero_row_rank() {
        let m = ExactMatrix::Rat(RatMat::zeros(1, 5));
        let (rank, kernel) = rank_and_kernel(&m).unwrap();
        assert_eq!(rank, 0);
        assert_eq!(kernel.len(), 5);
    }

    #[test]
    fn residue_normal_form_examples() {
        let id = ModMat::identity(4, 2);
        let (h, inv) = residue_normal_form(&id);
        assert_eq!(h, id);
        assert_eq!(inv, vec![4, 4]);

        let two = ModMat::from_rows(4, vec![vec![2]]);
        let (_, inv) = residue_normal_form(&two);
        assert_eq!(inv, vec![2]);

        let zero = ModMat::from_rows(4, vec![vec![0]]);
        let (h, inv) = residue_normal_form(&zero);
        assert_eq!(h.rows, 0);
        assert!(inv.is_empty());
    }

    #[test]
    fn rank_over_q_counts_nonzero_divisors() {
        let m = IntMat::from_i64(&[&[2, 4, 6], &[1, 2, 3], &[0, 0, 5]]);
        let snf = smith_normal_form(&m);
        let nonzero = snf.divisors.iter().filter(|d| !d.is_zero()).count();
        assert_eq!(RatMat::from_int(&m).rank(), nonzero);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-4").unwrap(), BigRational::from(BigInt::from(-4)));
        assert!(parse_rational("1/0").is_err());
    }
}
