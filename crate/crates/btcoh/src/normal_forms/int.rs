//! Dense matrices over Z with Smith and Hermite normal forms.
//!
//! Pivoting is deterministic (smallest nonzero absolute value, then lowest
//! row, then lowest column) so every normal form is reproducible.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Dense integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for IntMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = IntMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let cur = out.get(i, j) + a * b;
                        out.set(i, j, cur);
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> IntMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[a] += q * row[b]
    fn add_row(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(a, j) + q * self.get(b, j);
            self.set(a, j, v);
        }
    }

    /// col[a] += q * col[b]
    fn add_col(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, a) + q * self.get(i, b);
            self.set(i, a, v);
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let v = -self.get(a, j);
            self.set(a, j, v);
        }
    }
}

/// Smith decomposition `U * M * V = D` with unimodular `U`, `V` and
/// non-negative diagonal satisfying the divisibility chain.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
    pub divisors: Vec<BigInt>,
}

/// Deterministic pivot: smallest nonzero |entry| inside the trailing
/// submatrix, ties broken by lowest row then lowest column.
fn find_pivot(d: &IntMat, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..d.rows {
        for j in t..d.cols {
            let v = d.get(i, j);
            if v.is_zero() {
                continue;
            }
            match best {
                None => best = Some((i, j)),
                Some((bi, bj)) => {
                    if v.abs() < d.get(bi, bj).abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

pub fn smith_normal_form(m: &IntMat) -> SmithDecomposition {
    let mut d = m.clone();
    let mut u = IntMat::identity(m.rows);
    let mut v = IntMat::identity(m.cols);
    let r = m.rows.min(m.cols);

    for t in 0..r {
        'pivot: loop {
            let Some((pi, pj)) = find_pivot(&d, t) else { break 'pivot };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            // clear the pivot column
            let mut clean = true;
            for i in t + 1..d.rows {
                if !d.get(i, t).is_zero() {
                    let q = -d.get(i, t).div_floor(d.get(t, t));
                    d.add_row(i, t, &q);
                    u.add_row(i, t, &q);
                    if !d.get(i, t).is_zero() {
                        clean = false;
                    }
                }
            }
            // clear the pivot row
            for j in t + 1..d.cols {
                if !d.get(t, j).is_zero() {
                    let q = -d.get(t, j).div_floor(d.get(t, t));
                    d.add_col(j, t, &q);
                    v.add_col(j, t, &q);
                    if !d.get(t, j).is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue 'pivot;
            }
            // pivot must divide every remaining entry
            for i in t + 1..d.rows {
                for j in t + 1..d.cols {
                    if !d.get(i, j).mod_floor(d.get(t, t)).is_zero() {
                        d.add_row(t, i, &BigInt::one());
                        u.add_row(t, i, &BigInt::one());
                        continue 'pivot;
                    }
                }
            }
            break 'pivot;
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    let divisors = (0..r).map(|t| d.get(t, t).clone()).collect();
    SmithDecomposition { u, d, v, divisors }
}

/// Saturated basis of the integer kernel of `m` (columns of `V` past the
/// nonzero divisors). The returned vectors span a direct summand of Z^cols.
pub fn kernel_basis(m: &IntMat) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(m);
    let mut basis = Vec::new();
    for j in 0..m.cols {
        let zero_divisor = j >= snf.divisors.len() || snf.divisors[j].is_zero();
        if zero_divisor {
            basis.push((0..m.cols).map(|i| snf.v.get(i, j).clone()).collect());
        }
    }
    basis
}

/// Row Hermite normal form of the row span: pivots positive, entries above
/// each pivot reduced into `[0, pivot)`, zero rows dropped. Canonical for
/// the row span, so span equality can be tested by comparing outputs.
pub fn hnf_rows(m: &IntMat) -> IntMat {
    let mut a: Vec<Vec<BigInt>> = (0..m.rows).map(|i| m.row(i).to_vec()).collect();
    let rows = a.len();
    let cols = m.cols;
    let mut pivot_row = 0usize;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        // gcd-reduce the column below pivot_row
        loop {
            let mut best: Option<usize> = None;
            for i in pivot_row..rows {
                if !a[i][col].is_zero() {
                    match best {
                        None => best = Some(i),
                        Some(b) => {
                            if a[i][col].abs() < a[b][col].abs() {
                                best = Some(i);
                            }
                        }
                    }
                }
            }
            let Some(b) = best else { break };
            a.swap(pivot_row, b);
            let mut again = false;
            let piv = a[pivot_row][col].clone();
            for i in pivot_row + 1..rows {
                if !a[i][col].is_zero() {
                    let q = a[i][col].div_floor(&piv);
                    for j in col..cols {
                        let sub = &a[pivot_row][j] * &q;
                        a[i][j] -= sub;
                    }
                    if !a[i][col].is_zero() {
                        again = true;
                    }
                }
            }
            if !again {
                break;
            }
        }
        if !a[pivot_row][col].is_zero() {
            if a[pivot_row][col].is_negative() {
                for j in col..cols {
                    a[pivot_row][j] = -a[pivot_row][j].clone();
                }
            }
            pivots.push((pivot_row, col));
            pivot_row += 1;
        }
    }
    // reduce entries above pivots
    for &(pi, pj) in pivots.iter() {
        let piv = a[pi][pj].clone();
        for i in 0..pi {
            if !a[i][pj].is_zero() {
                let q = a[i][pj].div_floor(&piv);
                for j in 0..cols {
                    let sub = &a[pi][j] * &q;
                    a[i][j] -= sub;
                }
            }
        }
    }
    a.truncate(pivots.len());
    IntMat::from_rows(if a.is_empty() { vec![Vec::new()] } else { a }).with_cols(cols)
}

impl IntMat {
    fn with_cols(mut self, cols: usize) -> Self {
        if self.rows == 1 && self.cols == 0 {
            self = IntMat { rows: 0, cols, data: Vec::new() };
        }
        self
    }
}

/// p-adic valuation of a nonzero integer.
pub fn int_valuation(x: &BigInt, p: u64) -> Result<u64> {
    if x.is_zero() {
        return Err(Error::ValuationOfZero);
    }
    let p = BigInt::from(p);
    let mut v = 0u64;
    let mut x = x.clone();
    loop {
        let (q, r) = x.div_rem(&p);
        if r.is_zero() {
            v += 1;
            x = q;
        } else {
            return Ok(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_smith(m: &IntMat) {
        let snf = smith_normal_form(m);
        // reconstruct U*M*V and compare with D entrywise
        let umv = snf.u.mul(m).mul(&snf.v);
        assert_eq!(umv, snf.d, "U*M*V != D");
        // divisibility chain, non-negative
        for t in 0..snf.divisors.len() {
            assert!(!snf.divisors[t].is_negative());
            if t + 1 < snf.divisors.len() && !snf.divisors[t].is_zero() {
                assert!(
                    snf.divisors[t + 1].mod_floor(&snf.divisors[t]).is_zero(),
                    "chain broken at {t}"
                );
            }
            if snf.divisors[t].is_zero() && t + 1 < snf.divisors.len() {
                assert!(snf.divisors[t + 1].is_zero());
            }
        }
        // off-diagonal of D is zero
        for i in 0..snf.d.rows {
            for j in 0..snf.d.cols {
                if i != j {
                    assert!(snf.d.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn smith_identity() {
        let m = IntMat::identity(3);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.d, IntMat::identity(3));
        check_smith(&m);
    }

    #[test]
    fn smith_diag_4_6() {
        let m = IntMat::from_i64(&[&[4, 0], &[0, 6]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.divisors, vec![BigInt::from(2), BigInt::from(12)]);
        check_smith(&m);
    }

    #[test]
    fn smith_zero() {
        let m = IntMat::zeros(2, 2);
        let snf = smith_normal_form(&m);
        assert!(snf.d.is_zero());
        check_smith(&m);
    }

    #[test]
    fn kernel_of_singular() {
        let m = IntMat::from_i64(&[&[1, 1], &[1, 1]]);
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert!((v[0].clone() + v[1].clone()).is_zero());
    }

    #[test]
    fn hnf_span_canonical() {
        let a = IntMat::from_i64(&[&[2, 4], &[6, 8]]);
        // same row span, different generators
        let b = IntMat::from_i64(&[&[8, 12], &[2, 4], &[6, 8]]);
        assert_eq!(hnf_rows(&a), hnf_rows(&b));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(int_valuation(&BigInt::from(1), 5).unwrap(), 0);
        assert_eq!(int_valuation(&BigInt::from(12), 2).unwrap(), 2);
        assert!(int_valuation(&BigInt::zero(), 2).is_err());
    }

    proptest! {
        #[test]
        fn smith_reconstruction(rows in 1usize..4, cols in 1usize..4,
                                seed in proptest::collection::vec(-20i64..20, 16)) {
            let mut m = IntMat::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m.set(i, j, BigInt::from(seed[i * cols + j]));
                }
            }
            check_smith(&m);
        }

        #[test]
        fn hnf_invariant_under_row_ops(seed in proptest::collection::vec(-9i64..9, 9),
                                       q in -3i64..3) {
            let m = IntMat::from_rows(
                (0..3).map(|i| (0..3).map(|j| BigInt::from(seed[i * 3 + j])).collect()).collect());
            let mut n = m.clone();
            n.add_row(0, 2, &BigInt::from(q));
            prop_assert_eq!(hnf_rows(&m), hnf_rows(&n));
        }
    }
}
