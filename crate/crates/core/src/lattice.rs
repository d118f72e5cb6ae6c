//! Full-rank integer lattices in Q^d with Hermite-form canonicity.
//!
//! A lattice is stored as an integer basis matrix over a single positive
//! denominator; the integer part is kept in column Hermite form, so two
//! lattices are equal iff their stored forms are equal. These realize the
//! grid objects (pairs of nested lattices) whose quotients are the finite
//! modules of the subquotient category.

use crate::arith;
use crate::finmod::{Element, FinMod};
use crate::intmat::{self, Mat};
use crate::{Error, Result};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    rank: usize,
    /// column-HNF integer basis of (denom * L)
    basis: Mat,
    denom: i128,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice(rank {}, basis {:?} / {})", self.rank, self.basis, self.denom)
    }
}

impl Lattice {
    /// Build from a rational basis given as integer columns over a common
    /// denominator. The columns must be linearly independent.
    pub fn new(basis: Mat, denom: i128) -> Result<Self> {
        if denom <= 0 {
            return Err(Error::Invalid("denominator must be positive".into()));
        }
        let rank = basis.rows;
        let h = intmat::col_hnf(&basis);
        if h.cols != rank {
            return Err(Error::Invalid("basis is not full rank".into()));
        }
        Ok(Self::normalized(rank, h, denom))
    }

    fn normalized(rank: usize, basis: Mat, denom: i128) -> Self {
        // cancel common content between basis entries and denominator
        let mut g = denom;
        for i in 0..basis.rows {
            for j in 0..basis.cols {
                g = arith::gcd(g, basis[(i, j)]);
            }
        }
        if g > 1 {
            let mut b = basis;
            for i in 0..b.rows {
                for j in 0..b.cols {
                    b[(i, j)] /= g;
                }
            }
            Lattice { rank, basis: intmat::col_hnf(&b), denom: denom / g }
        } else {
            Lattice { rank, basis: intmat::col_hnf(&basis), denom }
        }
    }

    /// The standard lattice Z^d.
    pub fn standard(rank: usize) -> Self {
        Lattice { rank, basis: Mat::identity(rank), denom: 1 }
    }

    /// Integer lattice spanned by the given integer columns.
    pub fn from_integer_basis(basis: Mat) -> Result<Self> {
        Lattice::new(basis, 1)
    }

    pub fn scaled(rank: usize, num: i128, den: i128) -> Self {
        let mut b = Mat::identity(rank);
        for i in 0..rank {
            b[(i, i)] = num;
        }
        Self::normalized(rank, b, den)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn denom(&self) -> i128 {
        self.denom
    }

    /// det of the lattice as a rational (num, den), reduced, positive.
    pub fn det(&self) -> (i128, i128) {
        let num = self.basis.det().abs();
        let den = (0..self.rank).fold(1i128, |a, _| a * self.denom);
        let g = arith::gcd(num, den);
        (num / g, den / g)
    }

    pub fn contains(&self, other: &Lattice) -> bool {
        if self.rank != other.rank {
            return false;
        }
        // other ⊆ self iff each basis vector of other lies in self:
        // (other.basis / other.denom) in span(self.basis / self.denom)
        // i.e. self.denom * other.basis[j] in span(other.denom * self.basis)
        let mut scaled_self = self.basis.clone();
        for i in 0..scaled_self.rows {
            for j in 0..scaled_self.cols {
                scaled_self[(i, j)] *= other.denom;
            }
        }
        let h = intmat::col_hnf(&scaled_self);
        (0..other.basis.cols).all(|j| {
            let mut v = other.basis.column(j);
            for x in &mut v {
                *x *= self.denom;
            }
            intmat::lattice_contains(&h, &v)
        })
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        if self.rank != other.rank {
            return Err(Error::Mismatch("lattice ranks differ".into()));
        }
        let den = arith::lcm(self.denom, other.denom);
        let (sa, sb) = (den / self.denom, den / other.denom);
        let mut a = self.basis.clone();
        for v in 0..a.rows {
            for j in 0..a.cols {
                a[(v, j)] *= sa;
            }
        }
        let mut b = other.basis.clone();
        for v in 0..b.rows {
            for j in 0..b.cols {
                b[(v, j)] *= sb;
            }
        }
        Lattice::new(a.hcat(&b), den)
    }

    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        if self.rank != other.rank {
            return Err(Error::Mismatch("lattice ranks differ".into()));
        }
        let den = arith::lcm(self.denom, other.denom);
        let (sa, sb) = (den / self.denom, den / other.denom);
        let mut a = self.basis.clone();
        for v in 0..a.rows {
            for j in 0..a.cols {
                a[(v, j)] *= sa;
            }
        }
        let mut b = other.basis.clone();
        for v in 0..b.rows {
            for j in 0..b.cols {
                b[(v, j)] *= sb;
            }
        }
        let inter = intmat::lattice_intersection(&a, &b);
        Lattice::new(inter, den)
    }

    /// The dual lattice under the standard pairing, identified inside Q^d
    /// via the fixed standard-basis identification: basis is the inverse
    /// transpose of the rational basis.
    pub fn dual(&self) -> Lattice {
        // L = B/den; L* has basis den * (B^T)^{-1} = den * adj(B^T)/det(B^T)
        let bt = self.basis.transpose();
        let adj = bt.adjugate();
        let det = bt.det();
        // dual basis = den * adj / det
        let sign = if det < 0 { -1 } else { 1 };
        let mut num = adj;
        for i in 0..num.rows {
            for j in 0..num.cols {
                num[(i, j)] *= self.denom * sign;
            }
        }
        Self::normalized(self.rank, num, det.abs())
    }
}

/// A nested pair inner ⊆ outer; ordering of pairs widens on both sides.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LatticePair {
    inner: Lattice,
    outer: Lattice,
}

impl LatticePair {
    pub fn new(inner: Lattice, outer: Lattice) -> Result<Self> {
        if inner.rank() != outer.rank() {
            return Err(Error::Mismatch("lattice ranks differ".into()));
        }
        if !outer.contains(&inner) {
            return Err(Error::Invalid("inner lattice is not contained in outer".into()));
        }
        Ok(LatticePair { inner, outer })
    }

    pub fn inner(&self) -> &Lattice {
        &self.inner
    }

    pub fn outer(&self) -> &Lattice {
        &self.outer
    }

    /// Pair order: (L1,L2) <= (L1',L2') iff L1' ⊆ L1 ⊆ L2 ⊆ L2'.
    pub fn le(&self, other: &LatticePair) -> bool {
        self.inner.contains(&other.inner)
            && other.outer.contains(&self.outer)
            && self.outer.contains(&self.inner)
    }

    /// The connecting object below two pairs: (L1 ∩ L1', L2 + L2').
    pub fn join(&self, other: &LatticePair) -> Result<LatticePair> {
        LatticePair::new(self.inner.intersect(&other.inner)?, self.outer.sum(&other.outer)?)
    }
}

/// The quotient outer/inner as a finite module, together with the map that
/// carries outer-basis coordinates to module elements.
pub struct QuotientMap {
    pub module: FinMod,
    u: Mat,
    keep: Vec<usize>,
}

impl QuotientMap {
    /// Coordinates are with respect to the outer lattice basis.
    pub fn apply(&self, outer_coords: &[i128]) -> Element {
        let w = self.u.mul_vec(outer_coords);
        let coords: Vec<i128> = self.keep.iter().map(|&i| w[i]).collect();
        self.module.elem(&coords)
    }
}

pub fn quotient_to_module(pair: &LatticePair) -> Result<QuotientMap> {
    let rank = pair.outer.rank();
    // inner basis in outer coordinates: solve outer * C = inner (rationally)
    let den = arith::lcm(pair.inner.denom, pair.outer.denom);
    let (si, so) = (den / pair.inner.denom, den / pair.outer.denom);
    let mut inner_b = pair.inner.basis.clone();
    for i in 0..inner_b.rows {
        for j in 0..inner_b.cols {
            inner_b[(i, j)] *= si;
        }
    }
    let mut outer_b = pair.outer.basis.clone();
    for i in 0..outer_b.rows {
        for j in 0..outer_b.cols {
            outer_b[(i, j)] *= so;
        }
    }
    let mut c = Mat::zeros(rank, rank);
    for j in 0..rank {
        let col = inner_b.column(j);
        let coords = intmat::solve_hnf(&intmat::col_hnf(&outer_b), &col)
            .ok_or_else(|| Error::Invalid("inner not contained in outer".into()))?;
        // col_hnf(outer_b) == outer_b already (stored canonical, scaled by so
        // keeps echelon shape only if so == 1; recompute defensively)
        for i in 0..rank {
            c[(i, j)] = coords[i];
        }
    }
    let (u, s, _) = intmat::snf(&c);
    let mut factors = Vec::new();
    let mut keep = Vec::new();
    for i in 0..rank {
        let d = s[(i, i)].abs() as u64;
        if d == 0 {
            return Err(Error::InfiniteModule);
        }
        if d > 1 {
            factors.push(d);
            keep.push(i);
        }
    }
    let module = FinMod::new(factors, rank)?;
    Ok(QuotientMap { module, u, keep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_arithmetic() {
        let two = Lattice::scaled(1, 2, 1);
        let three = Lattice::scaled(1, 3, 1);
        let six = two.intersect(&three).unwrap();
        assert_eq!(six, Lattice::scaled(1, 6, 1));
        let one = two.sum(&three).unwrap();
        assert_eq!(one, Lattice::standard(1));
        assert_eq!(two.intersect(&two).unwrap(), two);
    }

    #[test]
    fn d2_sum() {
        // (2Z + Z) + (Z + 2Z) = Z^2
        let a = Lattice::from_integer_basis(Mat::diag(&[2, 1])).unwrap();
        let b = Lattice::from_integer_basis(Mat::diag(&[1, 2])).unwrap();
        assert_eq!(a.sum(&b).unwrap(), Lattice::standard(2));
    }

    #[test]
    fn duals() {
        assert_eq!(Lattice::standard(3).dual(), Lattice::standard(3));
        let two = Lattice::scaled(1, 2, 1);
        assert_eq!(two.dual(), Lattice::scaled(1, 1, 2));
        let l = Lattice::from_integer_basis(Mat::diag(&[2, 3])).unwrap();
        let d = l.dual();
        let expect = Lattice::new(Mat::from_rows(&[vec![3, 0], vec![0, 2]]), 6).unwrap();
        assert_eq!(d, expect);
        // involution
        for l in [
            Lattice::from_integer_basis(Mat::from_rows(&[vec![2, 1], vec![0, 3]])).unwrap(),
            Lattice::new(Mat::from_rows(&[vec![1, 1], vec![0, 4]]), 2).unwrap(),
        ] {
            assert_eq!(l.dual().dual(), l);
        }
    }

    #[test]
    fn quotients() {
        // (2Z^2, Z^2) -> (Z/2)^2
        let p = LatticePair::new(Lattice::scaled(2, 2, 1), Lattice::standard(2)).unwrap();
        let q = quotient_to_module(&p).unwrap();
        assert_eq!(q.module.factors(), &[2, 2]);
        // (Z(2,0)+Z(1,1), Z^2) -> Z/2
        let l = Lattice::from_integer_basis(Mat::from_rows(&[vec![2, 1], vec![0, 1]])).unwrap();
        let p = LatticePair::new(l, Lattice::standard(2)).unwrap();
        let q = quotient_to_module(&p).unwrap();
        assert_eq!(q.module.factors(), &[2]);
        // (L, L) -> 0
        let l = Lattice::from_integer_basis(Mat::diag(&[3, 5])).unwrap();
        let p = LatticePair::new(l.clone(), l).unwrap();
        let q = quotient_to_module(&p).unwrap();
        assert!(q.module.is_zero());
    }

    #[test]
    fn quotient_order_is_det_ratio() {
        let cases = [
            (Mat::diag(&[4, 6]), Mat::diag(&[2, 1])),
            (Mat::from_rows(&[vec![2, 1], vec![0, 3]]), Mat::identity(2)),
        ];
        for (inner_b, outer_b) in cases {
            let inner = Lattice::from_integer_basis(inner_b).unwrap();
            let outer = Lattice::from_integer_basis(outer_b).unwrap();
            if !outer.contains(&inner) {
                continue;
            }
            let p = LatticePair::new(inner.clone(), outer.clone()).unwrap();
            let q = quotient_to_module(&p).unwrap();
            let (ni, di) = inner.det();
            let (no, d_o) = outer.det();
            // |inner det / outer det| as an integer
            let order = (ni * d_o) / (no * di);
            assert_eq!(q.module.order() as i128, order);
        }
    }

    #[test]
    fn quotient_coordinate_map() {
        let p = LatticePair::new(Lattice::scaled(2, 2, 1), Lattice::standard(2)).unwrap();
        let q = quotient_to_module(&p).unwrap();
        let img = q.apply(&[1, 0]);
        assert!(!img.is_zero());
        let img2 = q.apply(&[2, 0]);
        assert!(img2.is_zero());
    }

    #[test]
    fn pair_order_and_join() {
        let small = LatticePair::new(Lattice::scaled(1, 4, 1), Lattice::standard(1)).unwrap();
        let big = LatticePair::new(Lattice::scaled(1, 8, 1), Lattice::scaled(1, 1, 2)).unwrap();
        assert!(small.le(&big));
        assert!(!big.le(&small));
        let a = LatticePair::new(Lattice::scaled(1, 2, 1), Lattice::standard(1)).unwrap();
        let c = LatticePair::new(Lattice::scaled(1, 3, 1), Lattice::standard(1)).unwrap();
        let j = a.join(&c).unwrap();
        assert!(a.le(&j) && c.le(&j));
        assert_eq!(j.inner(), &Lattice::scaled(1, 6, 1));
    }
}
