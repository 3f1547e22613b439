//! Sparse row elimination for rank computations over Q and F_l.
//!
//! Rows are (column, coefficient) lists sorted by column. This is the
//! workhorse behind the Gaussian oracles, where matrices are large but
//! each row has only a handful of entries.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::modular::inv_mod;

pub type QRow = Vec<(u32, BigRational)>;
pub type FRow = Vec<(u32, u64)>;

/// Rank of the row span over Q.
pub fn rank_q(rows: impl IntoIterator<Item = QRow>) -> usize {
    let mut pivots: BTreeMap<u32, QRow> = BTreeMap::new();
    let mut rank = 0usize;
    for row in rows {
        let mut row = normalize_q(row);
        loop {
            let Some(&(lead, _)) = row.first() else { break };
            if let Some(p) = pivots.get(&lead) {
                let f = row[0].1.clone();
                row = add_scaled_q(&row, p, &-f);
            } else {
                let inv = row[0].1.recip();
                for (_, c) in row.iter_mut() {
                    *c *= &inv;
                }
                pivots.insert(lead, row);
                rank += 1;
                break;
            }
        }
    }
    rank
}

fn normalize_q(mut row: QRow) -> QRow {
    row.retain(|(_, c)| !c.is_zero());
    row.sort_by_key(|&(j, _)| j);
    row
}

fn add_scaled_q(a: &QRow, b: &QRow, f: &BigRational) -> QRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, f * &b[j].1));
            j += 1;
        } else {
            let c = &a[i].1 + f * &b[j].1;
            if !c.is_zero() {
                out.push((a[i].0, c));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Rank of the row span over F_l (l prime).
pub fn rank_mod(rows: impl IntoIterator<Item = FRow>, l: u64) -> usize {
    let mut pivots: BTreeMap<u32, FRow> = BTreeMap::new();
    let mut rank = 0usize;
    for row in rows {
        let mut row = normalize_f(row, l);
        loop {
            let Some(&(lead, c0)) = row.first() else { break };
            if let Some(p) = pivots.get(&lead) {
                row = add_scaled_f(&row, p, l - c0, l);
            } else {
                let inv = inv_mod(c0, l);
                for (_, c) in row.iter_mut() {
                    *c = (*c as u128 * inv as u128 % l as u128) as u64;
                }
                pivots.insert(lead, row);
                rank += 1;
                break;
            }
        }
    }
    rank
}

fn normalize_f(mut row: FRow, l: u64) -> FRow {
    for (_, c) in row.iter_mut() {
        *c %= l;
    }
    row.retain(|&(_, c)| c != 0);
    row.sort_by_key(|&(j, _)| j);
    row
}

fn add_scaled_f(a: &FRow, b: &FRow, f: u64, l: u64) -> FRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, (b[j].1 as u128 * f as u128 % l as u128) as u64));
            j += 1;
        } else {
            let c = (a[i].1 as u128 + b[j].1 as u128 * f as u128) % l as u128;
            if c != 0 {
                out.push((a[i].0, c as u64));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    #[test]
    fn rank_q_small() {
        let rows = vec![
            vec![(0u32, q(1)), (1, q(2))],
            vec![(0, q(2)), (1, q(4))],
            vec![(1, q(1)), (2, q(1))],
        ];
        assert_eq!(rank_q(rows), 2);
    }

    #[test]
    fn rank_mod_small() {
        let rows = vec![vec![(0u32, 1u64), (1, 1)], vec![(0, 1), (1, 1)], vec![(2, 3)]];
        assert_eq!(rank_mod(rows, 3), 1);
    }
}
