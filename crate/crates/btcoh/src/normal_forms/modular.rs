//! Matrices over Z/m: reduced echelon form for prime m, Howell normal form
//! and module invariants for general m >= 2.
//!
//! The Howell form is the canonical matrix for a row span over Z/m: two
//! generating sets with equal span produce identical output. Invariants of
//! the span (its cyclic decomposition) are computed through an integral
//! lift so that they stay exact for any modulus.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::int::{hnf_rows, smith_normal_form, IntMat};
use super::rat::RatMat;

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// Multiplicative inverse mod m (requires gcd(a, m) = 1).
pub fn inv_mod(a: u64, m: u64) -> u64 {
    let (g, x, _) = egcd(a as i128, m as i128);
    assert_eq!(g, 1, "not invertible");
    (x.rem_euclid(m as i128)) as u64
}

/// A unit u mod m with u * a = gcd(a, m) mod m.
fn lifting_unit(a: u64, m: u64) -> u64 {
    if a == 0 {
        return 1;
    }
    let g = gcd_u64(a, m);
    let a1 = a / g;
    let m1 = m / g;
    // a1 is invertible mod m1; lift its inverse to a unit mod m
    let mut u = if m1 == 1 { 1 } else { inv_mod(a1 % m1, m1) };
    while gcd_u64(u, m) != 1 {
        u += m1;
    }
    u % m
}

#[derive(Clone, PartialEq, Eq)]
pub struct ModMat {
    pub modulus: u64,
    pub rows: usize,
    pub cols: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for ModMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ModMat {}x{} mod {} [", self.rows, self.cols, self.modulus)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl ModMat {
    pub fn zeros(modulus: u64, rows: usize, cols: usize) -> Self {
        assert!(modulus >= 2);
        ModMat { modulus, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(modulus: u64, n: usize) -> Self {
        let mut m = Self::zeros(modulus, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(modulus: u64, rows: Vec<Vec<u64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.into_iter().flatten().map(|x| x % modulus).collect();
        ModMat { modulus, rows: r, cols: c, data }
    }

    pub fn from_int(m: &IntMat, modulus: u64) -> Self {
        let mm = BigInt::from(modulus);
        let mut out = Self::zeros(modulus, m.rows, m.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                let r = m.get(i, j).mod_floor(&mm);
                out.set(i, j, r.to_u64().expect("residue fits"));
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.modulus;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn mul_elem(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    /// row[a] += q * row[b]
    fn add_row(&mut self, a: usize, b: usize, q: u64) {
        if q == 0 {
            return;
        }
        for j in 0..self.cols {
            let v = (self.get(a, j) as u128 + self.mul_elem(q, self.get(b, j)) as u128)
                % self.modulus as u128;
            self.data[a * self.cols + j] = v as u64;
        }
    }

    fn scale_row(&mut self, a: usize, u: u64) {
        for j in 0..self.cols {
            self.data[a * self.cols + j] = self.mul_elem(u, self.get(a, j));
        }
    }

    /// Gauss-Jordan over a prime modulus; returns pivot columns.
    pub fn rref_prime(&mut self) -> Vec<usize> {
        let m = self.modulus;
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let mut sel = None;
            for i in r..self.rows {
                if self.get(i, c) != 0 {
                    sel = Some(i);
                    break;
                }
            }
            let Some(sel) = sel else { continue };
            for j in 0..self.cols {
                self.data.swap(r * self.cols + j, sel * self.cols + j);
            }
            let inv = inv_mod(self.get(r, c), m);
            self.scale_row(r, inv);
            for i in 0..self.rows {
                if i != r && self.get(i, c) != 0 {
                    let f = m - self.get(i, c);
                    self.add_row(i, r, f);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank_prime(&self) -> usize {
        let mut m = self.clone();
        m.rref_prime().len()
    }

    /// Right-kernel basis over a prime modulus.
    pub fn kernel_prime(&self) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let pivots = m.rref_prime();
        let piv_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let md = self.modulus;
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if piv_set.contains(&free) {
                continue;
            }
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (md - m.get(r, free)) % md;
            }
            basis.push(v);
        }
        basis
    }

    /// Howell normal form of the row span. Rows are pivot-normalized so that
    /// each leading entry is a divisor of m, entries above a pivot are
    /// reduced modulo it, and the span is closed under leading-zero
    /// annihilation. Zero rows are dropped.
    pub fn howell(&self) -> ModMat {
        let m = self.modulus;
        let n = self.cols;
        let mut work: Vec<Vec<u64>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();

        // eliminate column by column with gcd transformations
        let mut result: Vec<Vec<u64>> = Vec::new();
        for c in 0..n {
            // find rows with leading column c
            let mut lead: Vec<Vec<u64>> = Vec::new();
            let mut rest: Vec<Vec<u64>> = Vec::new();
            for row in work.drain(..) {
                let lc = row.iter().position(|&x| x != 0);
                match lc {
                    Some(l) if l == c => lead.push(row),
                    Some(_) => rest.push(row),
                    None => {}
                }
            }
            work = rest;
            if lead.is_empty() {
                continue;
            }
            // combine all leading rows into one pivot row
            let mut pivot = lead.pop().unwrap();
            for row in lead {
                let a = pivot[c] as i128;
                let b = row[c] as i128;
                let (g, s, t) = egcd(a, b);
                // s*a + t*b = g; (-b/g, a/g) annihilates the leading entries
                let s = s.rem_euclid(m as i128) as u64;
                let t = t.rem_euclid(m as i128) as u64;
                let u = ((b / g).rem_euclid(m as i128)) as u64;
                let v = ((a / g).rem_euclid(m as i128)) as u64;
                let mut new_pivot = vec![0u64; n];
                let mut new_other = vec![0u64; n];
                for j in 0..n {
                    let np = (s as u128 * pivot[j] as u128 + t as u128 * row[j] as u128)
                        % m as u128;
                    let no = ((m as u128 - u as u128 % m as u128) * pivot[j] as u128
                        + v as u128 * row[j] as u128)
                        % m as u128;
                    new_pivot[j] = np as u64;
                    new_other[j] = no as u64;
                }
                debug_assert_eq!(new_pivot[c] as i128, g.rem_euclid(m as i128));
                debug_assert_eq!(new_other[c], 0);
                pivot = new_pivot;
                if new_other.iter().any(|&x| x != 0) {
                    work.push(new_other);
                }
            }
            // normalize pivot to a divisor of m
            let u = lifting_unit(pivot[c], m);
            for x in pivot.iter_mut() {
                *x = ((u as u128 * *x as u128) % m as u128) as u64;
            }
            // Howell closure: (m/d) * pivot has leading zero at c
            let d = pivot[c];
            debug_assert!(d != 0 && m % d == 0);
            if d != 1 {
                let f = m / d;
                let extra: Vec<u64> =
                    pivot.iter().map(|&x| ((f as u128 * x as u128) % m as u128) as u64).collect();
                if extra.iter().any(|&x| x != 0) {
                    work.push(extra);
                }
            }
            result.push(pivot);
        }

        // reduce entries above each pivot modulo the pivot value
        let pivcols: Vec<usize> = result
            .iter()
            .map(|r| r.iter().position(|&x| x != 0).expect("nonzero row"))
            .collect();
        for k in (0..result.len()).rev() {
            let c = pivcols[k];
            let d = result[k][c];
            for i in 0..k {
                let a = result[i][c];
                let q = a / d;
                if q != 0 {
                    for j in 0..n {
                        let sub = (q as u128 * result[k][j] as u128) % m as u128;
                        result[i][j] =
                            ((result[i][j] as u128 + m as u128 - sub) % m as u128) as u64;
                    }
                }
            }
        }
        ModMat::from_rows(m, if result.is_empty() { vec![vec![0u64; n]] } else { result })
            .drop_zero_rows()
    }

    fn drop_zero_rows(self) -> ModMat {
        let rows: Vec<Vec<u64>> = (0..self.rows)
            .map(|i| self.row(i).to_vec())
            .filter(|r| r.iter().any(|&x| x != 0))
            .collect();
        if rows.is_empty() {
            ModMat { modulus: self.modulus, rows: 0, cols: self.cols, data: Vec::new() }
        } else {
            ModMat::from_rows(self.modulus, rows)
        }
    }

    /// Cyclic invariants of the row-span module (its decomposition into
    /// Z/d summands, d > 1, in divisibility order).
    pub fn span_invariants(&self) -> Vec<u64> {
        let lifted: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        relative_invariants(&lifted, &[], self.modulus, self.cols)
    }
}

/// Generators of ker(D mod m) as integer vectors, from the Smith form of
/// the integral matrix D.
pub fn kernel_mod(d: &IntMat, m: u64) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(d);
    let mbig = BigInt::from(m);
    let mut gens = Vec::new();
    for j in 0..d.cols {
        let col: Vec<BigInt> = (0..d.cols).map(|i| snf.v.get(i, j).clone()).collect();
        let div = if j < snf.divisors.len() { snf.divisors[j].clone() } else { BigInt::zero() };
        if div.is_zero() {
            gens.push(col);
        } else {
            let g = div.gcd(&mbig);
            let f = &mbig / g;
            if f < mbig {
                gens.push(col.iter().map(|x| x * &f).collect());
            }
            // f == m would give the zero vector mod m
        }
    }
    gens
}

/// Invariants of (span(p_gens) + mZ^n) / (span(q_gens) + mZ^n), with
/// q inside p. Entries are the invariant factors > 1.
pub fn relative_invariants(
    p_gens: &[Vec<BigInt>],
    q_gens: &[Vec<BigInt>],
    m: u64,
    n: usize,
) -> Vec<u64> {
    let mbig = BigInt::from(m);
    let mut stacked: Vec<Vec<BigInt>> = p_gens.to_vec();
    for i in 0..n {
        let mut r = vec![BigInt::zero(); n];
        r[i] = mbig.clone();
        stacked.push(r);
    }
    let basis = hnf_rows(&IntMat::from_rows(stacked));
    assert_eq!(basis.rows, n, "P lattice must have full rank");
    let binv = RatMat::from_int(&basis.transpose()).inverse().expect("full rank");

    let mut q_cols: Vec<Vec<BigInt>> = q_gens.to_vec();
    for i in 0..n {
        let mut r = vec![BigInt::zero(); n];
        r[i] = mbig.clone();
        q_cols.push(r);
    }
    // express Q generators in the basis of P (columns)
    let qmat = IntMat::from_rows(q_cols).transpose();
    let coords = binv.mul(&RatMat::from_int(&qmat));
    let mut c = IntMat::zeros(n, coords.cols);
    for i in 0..n {
        for j in 0..coords.cols {
            let v = coords.get(i, j);
            assert!(super::rat::is_integer(v), "Q must be contained in P");
            c.set(i, j, v.to_integer());
        }
    }
    let snf = smith_normal_form(&c);
    assert!(snf.divisors.iter().all(|d| !d.is_zero()), "quotient must be finite");
    snf.divisors.into_iter().filter(|d| !d.is_one()).map(|d| d.to_u64().unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rref_f2_example() {
        let m = ModMat::from_rows(2, vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(m.rank_prime(), 1);
        let k = m.kernel_prime();
        assert_eq!(k, vec![vec![1, 1]]);
    }

    #[test]
    fn howell_identity_is_itself() {
        let m = ModMat::identity(4, 2);
        assert_eq!(m.howell(), m);
    }

    #[test]
    fn howell_canonical_for_span() {
        // (2) and (2 + 4k) span the same submodule of Z/8... use Z/4: rows (2) and (2,?) trivial
        let a = ModMat::from_rows(4, vec![vec![2, 0], vec![0, 1]]);
        let b = ModMat::from_rows(4, vec![vec![2, 1], vec![0, 1], vec![2, 3]]);
        assert_eq!(a.howell(), b.howell());
    }

    #[test]
    fn span_invariants_examples() {
        let r2 = ModMat::from_rows(4, vec![vec![2]]);
        assert_eq!(r2.span_invariants(), vec![2]);
        let id = ModMat::identity(4, 1);
        assert_eq!(id.span_invariants(), vec![4]);
        let z = ModMat::from_rows(4, vec![vec![0]]);
        assert_eq!(z.span_invariants(), Vec::<u64>::new());
    }

    #[test]
    fn howell_zero_divisor_closure() {
        // over Z/4 the span of (2,2) contains (0, ... ) nothing new; but the
        // span of (1,2) contains 2*(1,2)=(2,0): Howell must expose column 1
        let a = ModMat::from_rows(4, vec![vec![2, 2]]);
        let h = a.howell();
        assert_eq!(h.rows, 1);
        assert_eq!(h.row(0), &[2, 2]);
    }

    #[test]
    fn kernel_mod_diag() {
        let d = IntMat::from_i64(&[&[2, 0], &[0, 3]]);
        let gens = kernel_mod(&d, 4);
        // x with 2x0 = 0 mod 4, 3x1 = 0 mod 4: x0 in {0,2}, x1 = 0
        let mm = ModMat::from_rows(
            4,
            gens.iter()
                .map(|g| g.iter().map(|x| x.mod_floor(&BigInt::from(4)).to_u64().unwrap()).collect())
                .collect(),
        );
        let h = mm.howell();
        assert_eq!(h.rows, 1);
        assert_eq!(h.row(0), &[2, 0]);
    }

    proptest! {
        #[test]
        fn howell_invariant_under_row_ops(seed in proptest::collection::vec(0u64..12, 6),
                                          q in 0u64..12) {
            let m = ModMat::from_rows(12, vec![seed[0..3].to_vec(), seed[3..6].to_vec()]);
            let mut n = m.clone();
            n.add_row(0, 1, q);
            prop_assert_eq!(m.howell(), n.howell());
        }

        #[test]
        fn crt_invariants_split(rows in proptest::collection::vec(0u64..60, 6)) {
            // invariants over Z/60 must match the product of invariants over
            // the coprime factors 4 and 15
            let m60 = ModMat::from_rows(60, vec![rows[0..3].to_vec(), rows[3..6].to_vec()]);
            let m4 = ModMat::from_rows(4, vec![rows[0..3].iter().map(|x| x % 4).collect(),
                                               rows[3..6].iter().map(|x| x % 4).collect()]);
            let m15 = ModMat::from_rows(15, vec![rows[0..3].iter().map(|x| x % 15).collect(),
                                                 rows[3..6].iter().map(|x| x % 15).collect()]);
            let mut combined: Vec<u64> = Vec::new();
            let i4 = m4.span_invariants();
            let i15 = m15.span_invariants();
            // pair up by CRT: the module over Z/60 is the product of the two
            let mut all: Vec<u64> = Vec::new();
            let pad = i4.len().max(i15.len());
            let get = |v: &Vec<u64>, i: usize| if i < v.len() { v[v.len() - 1 - i] } else { 1 };
            for i in 0..pad {
                all.push(get(&i4, i) * get(&i15, i));
            }
            all.retain(|&x| x > 1);
            all.reverse();
            combined.extend(all);
            prop_assert_eq!(m60.span_invariants(), combined);
        }
    }
}
