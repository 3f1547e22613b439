//! Lattice classes over Z_(p), simplices as periodic chains, combinatorial
//! distance, balls, apartments and the convexity function on them.
//!
//! A vertex is a homothety class of lattices in Q^{d+1}, stored as the
//! canonical column-Hermite matrix of its unique representative M with
//! M inside O^{d+1} and M not inside p O^{d+1}. A k-simplex is kept as a
//! decreasing chain D_0 > D_1 > ... > D_k > p D_0 anchored at its
//! lexicographically smallest vertex.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::normal_forms::{
    int_valuation, is_integer, p_power, smith_normal_form, valuation, IntMat, RatMat,
};
use crate::{Error, Result};

/// Dimension and residue characteristic of the ambient situation. The base
/// field is Q_p with uniformizer p, so the residue field is F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalParams {
    pub d: usize,
    pub p: u64,
}

impl GlobalParams {
    pub fn new(d: usize, p: u64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidConfig("d must be >= 1".into()));
        }
        let mut k = 2u64;
        let mut prime = p >= 2;
        while k * k <= p {
            if p % k == 0 {
                prime = false;
                break;
            }
            k += 1;
        }
        if !prime {
            return Err(Error::InvalidConfig(format!("p = {p} is not prime")));
        }
        Ok(GlobalParams { d, p })
    }

    pub fn n(&self) -> usize {
        self.d + 1
    }

    /// The standard vertex [O^{d+1}].
    pub fn standard_vertex(&self) -> LatticeClass {
        LatticeClass { rep: IntMat::identity(self.n()) }
    }
}

/// A homothety class of lattices; `rep` is the canonical upper-triangular
/// matrix with p-power diagonal, reduced residues above it, and at least
/// one entry of valuation zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatticeClass {
    pub rep: IntMat,
}

impl std::fmt::Debug for LatticeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LatticeClass({:?})", self.rep)
    }
}

impl PartialOrd for LatticeClass {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LatticeClass {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let n = self.rep.rows;
        for i in 0..n {
            for j in 0..n {
                let c = self.rep.get(i, j).cmp(other.rep.get(i, j));
                if c != std::cmp::Ordering::Equal {
                    return c;
                }
            }
        }
        std::cmp::Ordering::Equal
    }
}

/// Column-style Hermite form over Z_(p) of a full-rank set of generators
/// with nonnegative p-valuations. Output is the canonical integer matrix:
/// upper triangular, diagonal p^{a_i}, entries right of the diagonal in
/// `[0, p^{a_row})`.
fn p_hnf_cols(p: u64, gens: &RatMat) -> Result<IntMat> {
    let n = gens.rows;
    let c = gens.cols;
    if c < n {
        return Err(Error::NotALattice);
    }
    let mut w = gens.clone();
    // assign pivot for row i to column i, working bottom-up; columns at
    // positions >= n are spare generators that must reduce to zero
    for i in (0..n).rev() {
        let avail: Vec<usize> = (0..=i).chain(n..c).collect();
        let mut pivot: Option<(usize, i64)> = None;
        for &j in &avail {
            let v = w.get(i, j);
            if v.is_zero() {
                continue;
            }
            let val = valuation(v, p)?;
            match pivot {
                None => pivot = Some((j, val)),
                Some((_, bv)) if val < bv => pivot = Some((j, val)),
                _ => {}
            }
        }
        let Some((pj, a)) = pivot else {
            return Err(Error::NotALattice);
        };
        if a < 0 {
            return Err(Error::Internal("p_hnf_cols needs nonnegative valuations".into()));
        }
        // swap into place and scale the column by a unit to make the pivot p^a
        for r in 0..n {
            let tmp = w.get(r, pj).clone();
            w.set(r, pj, w.get(r, i).clone());
            w.set(r, i, tmp);
        }
        let unit = p_power(p, a) / w.get(i, i).clone();
        for r in 0..=i {
            let v = w.get(r, i) * &unit;
            w.set(r, i, v);
        }
        // clear row i at every remaining available position
        for &jpos in &avail {
            if jpos == i || w.get(i, jpos).is_zero() {
                continue;
            }
            let f = w.get(i, jpos) / w.get(i, i);
            for r in 0..=i {
                let v = w.get(r, jpos) - &f * w.get(r, i);
                w.set(r, jpos, v);
            }
        }
    }
    // reduce entries right of each pivot to canonical residues
    for j in 1..n {
        for i in (0..j).rev() {
            let a = valuation(w.get(i, i), p).expect("pivot nonzero") as u32;
            let modulus = BigInt::from(p).pow(a);
            let x = w.get(i, j).clone();
            let r = residue_of(&x, &modulus, p);
            let f = (x - BigRational::from(r.clone())) / w.get(i, i).clone();
            debug_assert!(valuation(&f, p).map_or(true, |v| v >= 0));
            for rr in 0..=i {
                let v = w.get(rr, j) - &f * w.get(rr, i);
                w.set(rr, j, v);
            }
        }
    }
    let mut out = IntMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = w.get(i, j);
            if !is_integer(v) {
                return Err(Error::Internal("hermite form not integral".into()));
            }
            out.set(i, j, v.to_integer());
        }
    }
    Ok(out)
}

/// Canonical integer representative of x in Z_(p) / (p^a), as an element of
/// [0, p^a). The denominator of x is a p-unit.
fn residue_of(x: &BigRational, modulus: &BigInt, _p: u64) -> BigInt {
    if modulus.is_one() {
        return BigInt::zero();
    }
    let num = x.numer().mod_floor(modulus);
    let den = x.denom().mod_floor(modulus);
    // invert den mod modulus (gcd(den, p) = 1 so it is invertible mod p^a)
    let inv = mod_inverse(&den, modulus).expect("denominator invertible");
    (num * inv).mod_floor(modulus)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Canonicalize a full-rank generator matrix (columns generate the lattice)
/// into the unique representative of its homothety class.
pub fn canonicalize(params: &GlobalParams, gens: &RatMat) -> Result<LatticeClass> {
    let n = params.n();
    if gens.rows != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} rows, got {}",
            gens.rows
        )));
    }
    if RatMat::rank(gens) < n {
        return Err(Error::NotALattice);
    }
    // scale so every entry has nonnegative valuation
    let mut min_val: i64 = 0;
    for i in 0..gens.rows {
        for j in 0..gens.cols {
            let v = gens.get(i, j);
            if !v.is_zero() {
                min_val = min_val.min(valuation(v, params.p)?);
            }
        }
    }
    let scaled = scale_rat(gens, &p_power(params.p, -min_val));
    let h = p_hnf_cols(params.p, &scaled)?;
    // homothety normalization: divide by the minimal entry valuation
    let mut m = u64::MAX;
    for i in 0..n {
        for j in 0..n {
            let v = h.get(i, j);
            if !v.is_zero() {
                m = m.min(int_valuation(v, params.p)?);
            }
        }
    }
    let div = BigInt::from(params.p).pow(m as u32);
    let mut rep = IntMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            rep.set(i, j, h.get(i, j) / &div);
        }
    }
    Ok(LatticeClass { rep })
}

fn scale_rat(m: &RatMat, c: &BigRational) -> RatMat {
    let mut out = RatMat::zeros(m.rows, m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            out.set(i, j, m.get(i, j) * c);
        }
    }
    out
}

/// Exponents (sorted ascending) of the invariant factors of `b` relative to
/// `a`: writing the lattice of `b` in the basis of `a`, the p-parts of the
/// elementary divisors are p^{e_1} <= ... <= p^{e_{d+1}}.
pub fn relative_exponents(params: &GlobalParams, a: &IntMat, b: &IntMat) -> Result<Vec<i64>> {
    let n = a.rows;
    if b.rows != n {
        return Err(Error::DimensionMismatch("lattice sizes differ".into()));
    }
    let ainv = RatMat::from_int(a).inverse().ok_or(Error::NotALattice)?;
    let c = ainv.mul(&RatMat::from_int(b));
    let mut shift: i64 = 0;
    for i in 0..n {
        for j in 0..n {
            let v = c.get(i, j);
            if !v.is_zero() {
                shift = shift.min(valuation(v, params.p)?);
            }
        }
    }
    let scaled = scale_rat(&c, &p_power(params.p, -shift));
    let mut ints = IntMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = scaled.get(i, j);
            // non-p denominators are units here; clear them row by row is
            // wrong, so clear globally: multiply by the lcm of denominators
            if !is_integer(v) {
                return relative_exponents_cleared(params, &scaled, shift);
            }
            ints.set(i, j, v.to_integer());
        }
    }
    exponents_from_int(params, &ints, shift)
}

fn relative_exponents_cleared(
    params: &GlobalParams,
    scaled: &RatMat,
    shift: i64,
) -> Result<Vec<i64>> {
    let mut lcm = BigInt::one();
    for i in 0..scaled.rows {
        for j in 0..scaled.cols {
            lcm = lcm.lcm(scaled.get(i, j).denom());
        }
    }
    if int_valuation(&lcm, params.p).unwrap_or(0) != 0 {
        return Err(Error::Internal("denominator lcm must be a p-unit".into()));
    }
    let mut ints = IntMat::zeros(scaled.rows, scaled.cols);
    for i in 0..scaled.rows {
        for j in 0..scaled.cols {
            let v = scaled.get(i, j) * BigRational::from(lcm.clone());
            ints.set(i, j, v.to_integer());
        }
    }
    exponents_from_int(params, &ints, shift)
}

fn exponents_from_int(params: &GlobalParams, ints: &IntMat, shift: i64) -> Result<Vec<i64>> {
    let snf = smith_normal_form(ints);
    let mut exps = Vec::with_capacity(snf.divisors.len());
    for d in &snf.divisors {
        if d.is_zero() {
            return Err(Error::NotALattice);
        }
        exps.push(int_valuation(d, params.p)? as i64 + shift);
    }
    exps.sort_unstable();
    Ok(exps)
}

/// Combinatorial distance between two vertices: spread of the relative
/// invariant-factor exponents.
pub fn distance(params: &GlobalParams, a: &LatticeClass, b: &LatticeClass) -> Result<usize> {
    let e = relative_exponents(params, &a.rep, &b.rep)?;
    Ok((e[e.len() - 1] - e[0]) as usize)
}

/// A simplex: lex-ordered vertex classes plus the decreasing chain
/// certificate D_0 > ... > D_k > p D_0 anchored at the smallest vertex.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Simplex {
    pub vertices: Vec<LatticeClass>,
    pub chain: Vec<IntMat>,
    /// chain position -> index into `vertices`
    pub chain_vertex: Vec<usize>,
    /// stratum dimensions e_0..e_k, summing to d+1
    pub type_vec: Vec<usize>,
}

impl std::fmt::Debug for Simplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Simplex(dim {}, type {:?})", self.dim(), self.type_vec)
    }
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.vertices.iter().all(|v| other.vertices.contains(v))
    }
}

/// Assemble a simplex from a set of vertex classes, or return `None` when
/// no periodic flag exists through them.
pub fn normalize_simplex(
    params: &GlobalParams,
    classes: &[LatticeClass],
) -> Result<Option<Simplex>> {
    let set: BTreeSet<LatticeClass> = classes.iter().cloned().collect();
    let vertices: Vec<LatticeClass> = set.into_iter().collect();
    if vertices.is_empty() || vertices.len() > params.n() {
        return Ok(None);
    }
    let anchor = &vertices[0];
    let n = params.n();
    if vertices.len() == 1 {
        return Ok(Some(Simplex {
            chain: vec![anchor.rep.clone()],
            chain_vertex: vec![0],
            type_vec: vec![n],
            vertices,
        }));
    }
    let anchor_inv = RatMat::from_int(&anchor.rep).inverse().ok_or(Error::NotALattice)?;
    // scale every other class strictly between p*anchor and anchor
    let mut scaled: Vec<(usize, IntMat, usize)> = Vec::new(); // (vertex idx, lattice, flag dim)
    for (vi, v) in vertices.iter().enumerate().skip(1) {
        let exps = relative_exponents(params, &anchor.rep, &v.rep)?;
        let (lo, hi) = (exps[0], exps[exps.len() - 1]);
        if hi - lo != 1 {
            return Ok(None);
        }
        // p^{-lo} * v.rep sits strictly between the anchor and p*anchor
        let gens = scale_rat(&RatMat::from_int(&v.rep), &p_power(params.p, -lo));
        let lat = p_hnf_cols(params.p, &gens)?;
        // flag subspace = image in anchor/p*anchor
        let coords = anchor_inv.mul(&RatMat::from_int(&lat));
        let dim = rank_mod_p(params.p, &coords)?;
        if dim == 0 || dim == n {
            return Err(Error::Internal("scaled lattice must be strictly between".into()));
        }
        scaled.push((vi, lat, dim));
    }
    // distinct dimensions, sorted decreasing, with subspace inclusions
    let mut dims: Vec<usize> = scaled.iter().map(|s| s.2).collect();
    dims.sort_unstable();
    dims.dedup();
    if dims.len() != scaled.len() {
        return Ok(None);
    }
    scaled.sort_by(|a, b| b.2.cmp(&a.2));
    for t in 0..scaled.len() - 1 {
        if !lattice_contains(params, &scaled[t].1, &scaled[t + 1].1)? {
            return Ok(None);
        }
    }
    let mut chain = vec![anchor.rep.clone()];
    let mut chain_vertex = vec![0usize];
    for (vi, lat, _) in &scaled {
        chain.push(lat.clone());
        chain_vertex.push(*vi);
    }
    let mut type_vec = Vec::with_capacity(chain.len());
    let mut dims_ext: Vec<usize> = vec![n];
    dims_ext.extend(scaled.iter().map(|s| s.2));
    dims_ext.push(0);
    for t in 0..chain.len() {
        type_vec.push(dims_ext[t] - dims_ext[t + 1]);
    }
    debug_assert_eq!(type_vec.iter().sum::<usize>(), n);
    Ok(Some(Simplex { vertices, chain, chain_vertex, type_vec }))
}

/// Rank of the mod-p reduction of a matrix with p-integral rational entries.
fn rank_mod_p(p: u64, m: &RatMat) -> Result<usize> {
    use crate::normal_forms::ModMat;
    let mut mm = ModMat::zeros(p, m.rows, m.cols);
    let pb = BigInt::from(p);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let v = m.get(i, j);
            if v.is_zero() {
                continue;
            }
            let val = valuation(v, p)?;
            if val < 0 {
                return Err(Error::Internal("mod-p reduction of non-integral entry".into()));
            }
            if val > 0 {
                continue;
            }
            let r = residue_of(v, &pb, p);
            mm.set(i, j, r.to_u64().expect("small residue"));
        }
    }
    Ok(mm.rank_prime())
}

/// Whether lattice(a) contains lattice(b) (as Z_(p)-modules).
fn lattice_contains(params: &GlobalParams, a: &IntMat, b: &IntMat) -> Result<bool> {
    let ainv = RatMat::from_int(a).inverse().ok_or(Error::NotALattice)?;
    let c = ainv.mul(&RatMat::from_int(b));
    for i in 0..c.rows {
        for j in 0..c.cols {
            let v = c.get(i, j);
            if !v.is_zero() && valuation(v, params.p)? < 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Basis of D_0 adapted to the chain: columns grouped into blocks
/// G_0,...,G_k of sizes e_0,...,e_k with
/// D_j = < G_j,...,G_k, p G_0,...,p G_{j-1} >.
pub struct AdaptedBasis {
    /// ambient column vectors f_0..f_d in block order
    pub f_cols: IntMat,
    pub block_sizes: Vec<usize>,
}

impl AdaptedBasis {
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for &s in &self.block_sizes {
            out.push(start..start + s);
            start += s;
        }
        out
    }
}

pub fn adapted_basis(params: &GlobalParams, simplex: &Simplex) -> Result<AdaptedBasis> {
    let n = params.n();
    let p = params.p;
    let d0_inv = RatMat::from_int(&simplex.chain[0]).inverse().ok_or(Error::NotALattice)?;
    let k = simplex.chain.len() - 1;
    // mod-p column spans of the chain in D_0 coordinates, from the deepest up
    use crate::normal_forms::ModMat;
    let mut blocks: Vec<Vec<Vec<u64>>> = vec![Vec::new(); k + 1];
    let mut basis: Vec<Vec<u64>> = Vec::new(); // accumulated independent vectors
    let pb = BigInt::from(p);
    for j in (0..=k).rev() {
        let coords = d0_inv.mul(&RatMat::from_int(&simplex.chain[j]));
        for col in 0..n {
            let mut v = vec![0u64; n];
            for row in 0..n {
                let x = coords.get(row, col);
                if x.is_zero() || valuation(x, p)? > 0 {
                    continue;
                }
                v[row] = residue_of(x, &pb, p).to_u64().expect("small residue");
            }
            if v.iter().all(|&x| x == 0) {
                continue;
            }
            let mut trial: Vec<Vec<u64>> = basis.clone();
            trial.push(v.clone());
            let rank = ModMat::from_rows(p, trial).rank_prime();
            if rank == basis.len() + 1 {
                basis.push(v.clone());
                blocks[j].push(v);
            }
        }
    }
    for (j, b) in blocks.iter().enumerate() {
        if b.len() != simplex.type_vec[j] {
            return Err(Error::Internal(format!(
                "adapted block {j} has size {} expected {}",
                b.len(),
                simplex.type_vec[j]
            )));
        }
    }
    // lift: f = D_0 * (integer lift of the residue vector)
    let mut f = IntMat::zeros(n, n);
    let mut col = 0usize;
    for b in blocks.iter() {
        for v in b {
            for row in 0..n {
                let mut acc = BigInt::zero();
                for t in 0..n {
                    acc += simplex.chain[0].get(row, t) * BigInt::from(v[t]);
                }
                f.set(row, col, acc);
            }
            col += 1;
        }
    }
    let ab = AdaptedBasis { f_cols: f, block_sizes: simplex.type_vec.clone() };
    verify_adapted(params, simplex, &ab)?;
    Ok(ab)
}

/// Reconstruction check: each chain lattice equals the span prescribed by
/// its block decomposition.
fn verify_adapted(params: &GlobalParams, simplex: &Simplex, ab: &AdaptedBasis) -> Result<()> {
    let n = params.n();
    let ranges = ab.block_ranges();
    for (j, dj) in simplex.chain.iter().enumerate() {
        let mut gens = RatMat::zeros(n, n);
        for (bi, range) in ranges.iter().enumerate() {
            let scale = if bi < j { BigRational::from(BigInt::from(params.p)) } else { BigRational::one() };
            for c in range.clone() {
                for r in 0..n {
                    gens.set(r, c, BigRational::from(ab.f_cols.get(r, c).clone()) * &scale);
                }
            }
        }
        let h = p_hnf_cols(params.p, &gens)?;
        if &h != dj {
            return Err(Error::Internal(format!("adapted basis fails to rebuild chain lattice {j}")));
        }
    }
    Ok(())
}

/// An apartment: a rational basis of Q^{d+1} with its base-change matrices.
pub struct Apartment {
    pub params: GlobalParams,
    /// rows are the basis vectors f_i in standard coordinates
    pub forward: RatMat,
    pub inverse: RatMat,
}

impl Apartment {
    pub fn new(params: GlobalParams, forward: RatMat) -> Result<Self> {
        if forward.rows != params.n() || forward.cols != params.n() {
            return Err(Error::DimensionMismatch("apartment basis must be square".into()));
        }
        let inverse = forward.inverse().ok_or(Error::NotALattice)?;
        Ok(Apartment { params, forward, inverse })
    }

    pub fn standard(params: GlobalParams) -> Self {
        let n = params.n();
        Apartment { params, forward: RatMat::identity(n), inverse: RatMat::identity(n) }
    }

    /// The convexity function: distance from the standard vertex to the
    /// apartment vertex with coordinates x (up to the diagonal shift).
    pub fn f_value(&self, x: &[i64]) -> Result<i64> {
        let n = self.params.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch("coordinate vector length".into()));
        }
        let p = self.params.p;
        let mut hi: Option<i64> = None;
        let mut lo: Option<i64> = None;
        for i in 0..n {
            for j in 0..n {
                let mt = self.inverse.get(i, j);
                if !mt.is_zero() {
                    let cand = x[j] - valuation(mt, p)?;
                    hi = Some(hi.map_or(cand, |h| h.max(cand)));
                }
                let mf = self.forward.get(i, j);
                if !mf.is_zero() {
                    let cand = valuation(mf, p)? + x[i];
                    lo = Some(lo.map_or(cand, |l| l.min(cand)));
                }
            }
        }
        Ok(hi.expect("invertible") - lo.expect("invertible"))
    }

    /// Generators of the lattice spanned by p^{x_i} f_i, as columns.
    pub fn vertex_lattice(&self, x: &[i64]) -> RatMat {
        let n = self.params.n();
        let mut gens = RatMat::zeros(n, n);
        for i in 0..n {
            let s = p_power(self.params.p, x[i]);
            for r in 0..n {
                gens.set(r, i, self.forward.get(i, r) * &s);
            }
        }
        gens
    }
}

/// The ball complex B(n): face closure of the closed stars of all vertices
/// within distance n-1 of the standard vertex; B(0) is the standard vertex.
pub struct BallComplex {
    pub params: GlobalParams,
    pub radius: usize,
    /// lex-sorted canonical vertex classes
    pub vertices: Vec<LatticeClass>,
    /// distance from the standard vertex, per vertex id
    pub dist: Vec<usize>,
    /// simplices grouped by dimension as sorted vertex-id tuples
    pub by_dim: Vec<Vec<Vec<usize>>>,
    /// adjacency lists of the 1-skeleton
    pub adjacency: Vec<Vec<usize>>,
}

impl BallComplex {
    pub fn vertex_id(&self, class: &LatticeClass) -> Option<usize> {
        self.vertices.binary_search(class).ok()
    }

    pub fn simplex(&self, params: &GlobalParams, ids: &[usize]) -> Result<Simplex> {
        let classes: Vec<LatticeClass> = ids.iter().map(|&i| self.vertices[i].clone()).collect();
        normalize_simplex(params, &classes)?
            .ok_or_else(|| Error::Internal("stored tuple is not a simplex".into()))
    }

    pub fn simplex_count(&self) -> usize {
        self.by_dim.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.by_dim.iter().map(Vec::len).collect()
    }
}

/// All subspace bases of F_p^n of dimension `dim`, as reduced-echelon row
/// bases (each basis is `dim` rows of length n).
pub fn subspaces_mod_p(p: u64, n: usize, dim: usize) -> Vec<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    if dim == 0 || dim > n {
        return out;
    }
    // choose pivot columns, then free entries
    let pivot_sets = combinations(n, dim);
    for pivots in pivot_sets {
        // free positions: row r, column c with c > pivots[r], c not a pivot col
        let mut free: Vec<(usize, usize)> = Vec::new();
        for (r, &pc) in pivots.iter().enumerate() {
            for c in pc + 1..n {
                if !pivots.contains(&c) {
                    free.push((r, c));
                }
            }
        }
        let total = free.len();
        let mut counter = vec![0u64; total];
        'enumerate: loop {
            let mut basis = vec![vec![0u64; n]; dim];
            for (r, &pc) in pivots.iter().enumerate() {
                basis[r][pc] = 1;
            }
            for (t, &(r, c)) in free.iter().enumerate() {
                basis[r][c] = counter[t];
            }
            out.push(basis);
            // odometer
            let mut t = 0;
            loop {
                if t == total {
                    break 'enumerate;
                }
                counter[t] += 1;
                if counter[t] < p {
                    break;
                }
                counter[t] = 0;
                t += 1;
            }
        }
    }
    out_sorted(out)
}

fn out_sorted(mut v: Vec<Vec<Vec<u64>>>) -> Vec<Vec<Vec<u64>>> {
    v.sort();
    v.dedup();
    v
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Whether span(a) is contained in span(b) over F_p.
fn subspace_leq(p: u64, a: &[Vec<u64>], b: &[Vec<u64>]) -> bool {
    use crate::normal_forms::ModMat;
    let mut rows = b.to_vec();
    rows.extend(a.iter().cloned());
    ModMat::from_rows(p, rows).rank_prime() == b.len()
}

pub fn ball_complex(params: &GlobalParams, radius: usize, cap: usize) -> Result<BallComplex> {
    let n = params.n();
    // enumerate candidate canonical matrices with diagonal exponents <= radius
    let mut classes: Vec<(LatticeClass, usize)> = Vec::new();
    let mut diag = vec![0u64; n];
    let s0 = params.standard_vertex();
    'diag: loop {
        enumerate_offdiag(params, &diag, radius, &mut classes)?;
        // odometer over diagonal exponents
        let mut t = 0;
        loop {
            if t == n {
                break 'diag;
            }
            diag[t] += 1;
            if diag[t] <= radius as u64 {
                break;
            }
            diag[t] = 0;
            t += 1;
        }
    }
    classes.sort_by(|a, b| a.0.cmp(&b.0));
    classes.dedup_by(|a, b| a.0 == b.0);
    let vertices: Vec<LatticeClass> = classes.iter().map(|(c, _)| c.clone()).collect();
    let dist: Vec<usize> = classes.iter().map(|(_, d)| *d).collect();
    debug_assert!(vertices.binary_search(&s0).is_ok());

    let vid: HashMap<LatticeClass, usize> =
        vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();

    // closed stars of inner vertices, then face closure
    let mut simplex_set: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
    for id in 0..vertices.len() {
        if radius == 0 || dist[id] > radius - 1 {
            continue;
        }
        let star = star_tuples(params, &vertices[id].rep, &vid)?;
        for tuple in star {
            // insert with face closure
            for sub in nonempty_subsets(&tuple) {
                simplex_set.insert(sub, ());
            }
            if simplex_set.len() > cap {
                return Err(Error::BallTooLarge { reached: simplex_set.len(), cap });
            }
        }
    }
    if radius == 0 {
        let sid = vid[&s0];
        simplex_set.insert(vec![sid], ());
    }
    let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for (tuple, _) in simplex_set {
        by_dim[tuple.len() - 1].push(tuple);
    }
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for e in &by_dim[1] {
        if e.len() == 2 {
            adjacency[e[0]].push(e[1]);
            adjacency[e[1]].push(e[0]);
        }
    }
    // restrict the vertex list to the ones actually appearing? vertices at
    // distance radius always appear (they are in a star) unless radius = 0
    let used: BTreeSet<usize> = by_dim.iter().flatten().flatten().copied().collect();
    if used.len() != vertices.len() {
        // relabel, dropping unused enumeration candidates
        let mut remap = vec![usize::MAX; vertices.len()];
        let mut new_vertices = Vec::new();
        let mut new_dist = Vec::new();
        for (new_id, old_id) in used.iter().enumerate() {
            remap[*old_id] = new_id;
            new_vertices.push(vertices[*old_id].clone());
            new_dist.push(dist[*old_id]);
        }
        let by_dim = by_dim
            .into_iter()
            .map(|ts| {
                ts.into_iter()
                    .map(|t| t.into_iter().map(|i| remap[i]).collect::<Vec<usize>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        let mut adjacency = vec![Vec::new(); new_vertices.len()];
        for e in &by_dim[1] {
            if e.len() == 2 {
                adjacency[e[0]].push(e[1]);
                adjacency[e[1]].push(e[0]);
            }
        }
        return Ok(BallComplex {
            params: *params,
            radius,
            vertices: new_vertices,
            dist: new_dist,
            by_dim,
            adjacency,
        });
    }
    Ok(BallComplex { params: *params, radius, vertices, dist, by_dim, adjacency })
}

fn enumerate_offdiag(
    params: &GlobalParams,
    diag: &[u64],
    radius: usize,
    out: &mut Vec<(LatticeClass, usize)>,
) -> Result<()> {
    let n = params.n();
    let p = params.p;
    let s0 = params.standard_vertex();
    // positions (i, j) with i < j, values in [0, p^{diag[i]})
    let mut positions = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            positions.push((i, j, BigInt::from(p).pow(diag[i] as u32)));
        }
    }
    let mut counter: Vec<BigInt> = positions.iter().map(|_| BigInt::zero()).collect();
    loop {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::from(p).pow(diag[i] as u32));
        }
        for (t, &(i, j, _)) in positions.iter().enumerate() {
            m.set(i, j, counter[t].clone());
        }
        // homothety-normalized candidates only; re-canonicalize to guard the
        // uniqueness of the formal shape
        let normalized = (0..n).any(|i| {
            (0..n).any(|j| !m.get(i, j).is_zero() && int_valuation(m.get(i, j), p).unwrap() == 0)
        });
        if normalized {
            let class = canonicalize(params, &RatMat::from_int(&m))?;
            debug_assert_eq!(class.rep, m, "formal shape should already be canonical");
            let d = distance(params, &s0, &class)?;
            if d <= radius {
                out.push((class, d));
            }
        }
        let mut t = 0;
        loop {
            if t == positions.len() {
                return Ok(());
            }
            counter[t] += 1;
            if counter[t] < positions[t].2 {
                break;
            }
            counter[t] = BigInt::zero();
            t += 1;
        }
        if positions.is_empty() {
            return Ok(());
        }
    }
}

/// Vertex-id tuples of all simplices containing the given vertex: one per
/// flag of proper nonzero subspaces of D/pD.
fn star_tuples(
    params: &GlobalParams,
    rep: &IntMat,
    vid: &HashMap<LatticeClass, usize>,
) -> Result<Vec<Vec<usize>>> {
    let n = params.n();
    let p = params.p;
    let base_id = vid
        .get(&LatticeClass { rep: rep.clone() })
        .copied()
        .ok_or_else(|| Error::Internal("star base vertex not enumerated".into()))?;
    // subspaces by dimension
    let mut all: Vec<(usize, Vec<Vec<u64>>, usize)> = Vec::new(); // (dim, basis, class id)
    for dim in 1..n {
        for basis in subspaces_mod_p(p, n, dim) {
            // lattice = rep * (lifted basis columns | p I)
            let mut gens = RatMat::zeros(n, dim + n);
            for (c, v) in basis.iter().enumerate() {
                for r in 0..n {
                    let mut acc = BigInt::zero();
                    for t in 0..n {
                        acc += rep.get(r, t) * BigInt::from(v[t]);
                    }
                    gens.set(r, c, BigRational::from(acc));
                }
            }
            for c in 0..n {
                for r in 0..n {
                    let v = BigRational::from(rep.get(r, c) * BigInt::from(p));
                    gens.set(r, dim + c, v);
                }
            }
            let class = canonicalize(params, &gens)?;
            let id = vid
                .get(&class)
                .copied()
                .ok_or_else(|| Error::Internal("star vertex missing from enumeration".into()))?;
            all.push((dim, basis, id));
        }
    }
    // flags: chains in the containment order
    let mut tuples = Vec::new();
    let idx: Vec<usize> = (0..all.len()).collect();
    // depth-first over chains ordered by increasing dim
    fn chains(
        p: u64,
        all: &[(usize, Vec<Vec<u64>>, usize)],
        idx: &[usize],
        cur: &mut Vec<usize>,
        tuples: &mut Vec<Vec<usize>>,
        base_id: usize,
    ) {
        for &i in idx {
            let ok = match cur.last() {
                None => true,
                Some(&j) => all[j].0 < all[i].0 && subspace_leq(p, &all[j].1, &all[i].1),
            };
            if !ok {
                continue;
            }
            cur.push(i);
            let mut t: Vec<usize> = cur.iter().map(|&x| all[x].2).collect();
            t.push(base_id);
            t.sort_unstable();
            t.dedup();
            tuples.push(t);
            chains(p, all, idx, cur, tuples, base_id);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    chains(p, &all, &idx, &mut cur, &mut tuples, base_id);
    tuples.push(vec![base_id]);
    Ok(tuples)
}

fn nonempty_subsets(tuple: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = tuple.len();
    for mask in 1u32..(1 << n) {
        let mut s = Vec::new();
        for (i, &v) in tuple.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.push(v);
            }
        }
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, p: u64) -> GlobalParams {
        GlobalParams::new(d, p).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn canonicalize_identity() {
        let pr = params(1, 2);
        let c = canonicalize(&pr, &RatMat::identity(2)).unwrap();
        assert_eq!(c, pr.standard_vertex());
    }

    #[test]
    fn canonicalize_homothety() {
        let pr = params(1, 2);
        let a = canonicalize(
            &pr,
            &RatMat::from_rows(vec![vec![q(2, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]]),
        )
        .unwrap();
        let b = canonicalize(
            &pr,
            &RatMat::from_rows(vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 2)]]),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonicalize_hermite_example() {
        let pr = params(1, 2);
        // columns (1,0) and (1,2)
        let g = RatMat::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(2, 1)]]);
        let c = canonicalize(&pr, &g).unwrap();
        // expected: diag-dominant canonical rep, idempotent
        let again = canonicalize(&pr, &RatMat::from_int(&c.rep)).unwrap();
        assert_eq!(c, again);
        // the lattice contains (1,0) and (1,2): hermite gives diag (1,2) with residue 1
        assert_eq!(c.rep, IntMat::from_i64(&[&[1, 1], &[0, 2]]));
    }

    #[test]
    fn canonicalize_rejects_rank_deficient() {
        let pr = params(1, 2);
        let g = RatMat::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(1, 1), q(2, 1)]]);
        assert!(matches!(canonicalize(&pr, &g), Err(Error::NotALattice)));
    }

    #[test]
    fn distance_examples() {
        let pr = params(1, 2);
        let s0 = pr.standard_vertex();
        assert_eq!(distance(&pr, &s0, &s0).unwrap(), 0);
        let v1 = LatticeClass { rep: IntMat::from_i64(&[&[1, 0], &[0, 2]]) };
        assert_eq!(distance(&pr, &s0, &v1).unwrap(), 1);
        let v3 = LatticeClass { rep: IntMat::from_i64(&[&[1, 0], &[0, 8]]) };
        assert_eq!(distance(&pr, &s0, &v3).unwrap(), 3);
        assert_eq!(distance(&pr, &v3, &s0).unwrap(), 3);
    }

    #[test]
    fn normalize_simplex_vertex_and_edge() {
        let pr = params(1, 2);
        let s0 = pr.standard_vertex();
        let v = normalize_simplex(&pr, &[s0.clone()]).unwrap().unwrap();
        assert_eq!(v.type_vec, vec![2]);

        let v1 = LatticeClass { rep: IntMat::from_i64(&[&[1, 0], &[0, 2]]) };
        let e = normalize_simplex(&pr, &[s0.clone(), v1]).unwrap().unwrap();
        assert_eq!(e.type_vec, vec![1, 1]);
        assert_eq!(e.dim(), 1);
        // chain is strictly decreasing with D_1 containing p D_0
        assert_eq!(e.chain.len(), 2);
    }

    #[test]
    fn normalize_simplex_rejects_distance_two() {
        let pr = params(1, 2);
        let s0 = pr.standard_vertex();
        let v2 = LatticeClass { rep: IntMat::from_i64(&[&[1, 0], &[0, 4]]) };
        assert_eq!(distance(&pr, &s0, &v2).unwrap(), 2);
        assert!(normalize_simplex(&pr, &[s0, v2]).unwrap().is_none());
    }

    #[test]
    fn ball_sizes_small() {
        let pr = params(1, 2);
        let b0 = ball_complex(&pr, 0, 100000).unwrap();
        assert_eq!(b0.counts(), vec![1, 0]);
        let b1 = ball_complex(&pr, 1, 100000).unwrap();
        assert_eq!(b1.counts(), vec![4, 3]);

        let pr3 = params(1, 3);
        let b2 = ball_complex(&pr3, 2, 100000).unwrap();
        assert_eq!(b2.counts()[0], 17);
    }

    #[test]
    fn ball_nested() {
        let pr = params(1, 2);
        let b1 = ball_complex(&pr, 1, 100000).unwrap();
        let b2 = ball_complex(&pr, 2, 100000).unwrap();
        for v in &b1.vertices {
            assert!(b2.vertex_id(v).is_some());
        }
    }

    #[test]
    fn ball_distance_bound() {
        let pr = params(1, 3);
        let b = ball_complex(&pr, 2, 100000).unwrap();
        let s0 = pr.standard_vertex();
        for (i, v) in b.vertices.iter().enumerate() {
            assert_eq!(b.dist[i], distance(&pr, &s0, v).unwrap());
            assert!(b.dist[i] <= 2);
        }
        // every simplex of dim >= 1 has a vertex within distance n-1
        for dim in 1..b.by_dim.len() {
            for t in &b.by_dim[dim] {
                assert!(t.iter().any(|&id| b.dist[id] <= 1));
            }
        }
    }

    #[test]
    fn f_value_standard() {
        let pr = params(1, 2);
        let a = Apartment::standard(pr);
        assert_eq!(a.f_value(&[0, 0]).unwrap(), 0);
        assert_eq!(a.f_value(&[0, 3]).unwrap(), 3);
        // invariance under the diagonal shift
        assert_eq!(a.f_value(&[5, 8]).unwrap(), 3);
    }

    #[test]
    fn f_value_matches_distance() {
        let pr = params(1, 2);
        let s0 = pr.standard_vertex();
        // permuted-basis apartment
        let fwd = RatMat::from_rows(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]);
        let a = Apartment::new(pr, fwd).unwrap();
        for x0 in -2i64..=2 {
            for x1 in -2i64..=2 {
                let x = [x0, x1];
                let lat = a.vertex_lattice(&x);
                let class = canonicalize(&pr, &lat).unwrap();
                let d = distance(&pr, &s0, &class).unwrap() as i64;
                assert_eq!(a.f_value(&x).unwrap(), d, "x = {x:?}");
            }
        }
    }

    #[test]
    fn adapted_basis_vertex_and_edge() {
        let pr = params(1, 2);
        let s0 = pr.standard_vertex();
        let v = normalize_simplex(&pr, &[s0.clone()]).unwrap().unwrap();
        let ab = adapted_basis(&pr, &v).unwrap();
        assert_eq!(ab.block_sizes, vec![2]);
        assert_eq!(ab.f_cols, IntMat::identity(2));

        let v1 = LatticeClass { rep: IntMat::from_i64(&[&[1, 0], &[0, 2]]) };
        let e = normalize_simplex(&pr, &[s0, v1]).unwrap().unwrap();
        let ab = adapted_basis(&pr, &e).unwrap();
        assert_eq!(ab.block_sizes, vec![1, 1]);
    }

    #[test]
    fn adapted_basis_d2_type_12() {
        let pr = params(2, 2);
        let s0 = pr.standard_vertex();
        let m = LatticeClass { rep: IntMat::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 2]]) };
        let e = normalize_simplex(&pr, &[s0, m]).unwrap().unwrap();
        let ab = adapted_basis(&pr, &e).unwrap();
        assert_eq!(ab.block_sizes, e.type_vec);
        assert_eq!(ab.block_sizes.iter().sum::<usize>(), 3);
    }

    #[test]
    fn subspace_counts() {
        assert_eq!(subspaces_mod_p(2, 3, 1).len(), 7);
        assert_eq!(subspaces_mod_p(2, 3, 2).len(), 7);
        assert_eq!(subspaces_mod_p(3, 2, 1).len(), 4);
    }
}
