//! Finite Z-modules in invariant-factor form, their elements, homomorphisms,
//! and submodules.
//!
//! A module is `Z/d_1 + ... + Z/d_k` with `d_1 | d_2 | ... | d_k`, `d_i >= 2`,
//! together with a rank bound `d >= k` (the module is viewed as generated by
//! at most `d` elements). Submodules are identified with the full-rank
//! integer lattices `L` sandwiched between `diag(d_i) Z^k` and `Z^k`, stored
//! in column Hermite form; this makes equality of submodules a plain matrix
//! comparison.

use crate::arith;
use crate::intmat::{self, Mat};
use crate::{Bounds, Error, Result};
use itertools::Itertools;
use std::fmt;

/// The coefficient-domain seam. Only the rational integers ship; an
/// `F_q[T]`-style adapter would supply its own factorization and residue
/// sizes here and reuse everything downstream.
pub mod domain {
    /// Factor a nonzero modulus into (prime, multiplicity) pairs.
    pub fn factor(n: u64) -> Vec<(u64, u32)> {
        crate::arith::factorize(n)
    }

    /// Cardinality of the residue field at `p`.
    pub fn residue_size(p: u64) -> u64 {
        p
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinMod {
    factors: Vec<u64>,
    rank: usize,
}

impl fmt::Debug for FinMod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FinMod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", self.factors.iter().map(|d| format!("Z/{d}")).join("+"))
        }
    }
}

impl FinMod {
    pub fn new(factors: Vec<u64>, rank: usize) -> Result<Self> {
        for w in factors.windows(2) {
            if w[1] % w[0] != 0 {
                return Err(Error::Invalid(format!(
                    "invariant factors must form a divisibility chain, got {factors:?}"
                )));
            }
        }
        if factors.iter().any(|&d| d < 2) {
            return Err(Error::Invalid("invariant factors must be >= 2".into()));
        }
        if factors.len() > rank {
            return Err(Error::Invalid(format!(
                "{} invariant factors exceed rank bound {rank}",
                factors.len()
            )));
        }
        Ok(FinMod { factors, rank })
    }

    pub fn zero(rank: usize) -> Self {
        FinMod { factors: vec![], rank }
    }

    pub fn cyclic(n: u64, rank: usize) -> Self {
        assert!(rank >= 1);
        if n <= 1 {
            FinMod::zero(rank)
        } else {
            FinMod { factors: vec![n], rank }
        }
    }

    /// (Z/m)^d with full rank d.
    pub fn free_over(m: u64, d: usize) -> Self {
        assert!(m >= 2);
        FinMod { factors: vec![m; d], rank: d }
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank_bound(&self) -> usize {
        self.rank
    }

    pub fn ngens(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().product()
    }

    pub fn exponent(&self) -> u64 {
        self.factors.last().copied().unwrap_or(1)
    }

    pub fn is_zero(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        self.factors.len() <= 1
    }

    /// Primes dividing the order (the support of the module).
    pub fn support(&self) -> Vec<u64> {
        arith::support(self.exponent())
    }

    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        FinMod::new(self.factors.clone(), rank)
    }

    pub fn zero_elem(&self) -> Element {
        Element { coords: vec![0; self.factors.len()] }
    }

    pub fn elem(&self, coords: &[i128]) -> Element {
        assert_eq!(coords.len(), self.factors.len());
        Element {
            coords: coords
                .iter()
                .zip(&self.factors)
                .map(|(&c, &d)| c.rem_euclid(d as i128) as u64)
                .collect(),
        }
    }

    pub fn generator(&self, j: usize) -> Element {
        let mut coords = vec![0; self.factors.len()];
        coords[j] = 1;
        Element { coords }
    }

    pub fn elements(&self) -> Vec<Element> {
        let mut out = vec![self.zero_elem()];
        for (j, &d) in self.factors.iter().enumerate() {
            out = out
                .into_iter()
                .cartesian_product(0..d)
                .map(|(mut e, c)| {
                    e.coords[j] = c;
                    e
                })
                .collect();
        }
        out
    }

    pub fn add(&self, a: &Element, b: &Element) -> Element {
        Element {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .zip(&self.factors)
                .map(|((&x, &y), &d)| (x + y) % d)
                .collect(),
        }
    }

    pub fn neg(&self, a: &Element) -> Element {
        Element {
            coords: a
                .coords
                .iter()
                .zip(&self.factors)
                .map(|(&x, &d)| (d - x) % d)
                .collect(),
        }
    }

    pub fn smul(&self, c: i128, a: &Element) -> Element {
        Element {
            coords: a
                .coords
                .iter()
                .zip(&self.factors)
                .map(|(&x, &d)| (c * x as i128).rem_euclid(d as i128) as u64)
                .collect(),
        }
    }

    /// Does `g` generate the whole module? Only sensible for cyclic modules.
    pub fn generates(&self, g: &Element) -> bool {
        let sub = Submodule::from_elements(self, std::slice::from_ref(g));
        sub.is_full()
    }

    /// Relation lattice diag(d_1..d_k) as a matrix.
    pub fn relation_matrix(&self) -> Mat {
        Mat::diag(&self.factors.iter().map(|&d| d as i128).collect::<Vec<_>>())
    }

    pub fn identity_hom(&self) -> ModHom {
        ModHom::new(self.clone(), self.clone(), Mat::identity(self.ngens()))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Element {
    coords: Vec<u64>,
}

impl Element {
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn as_i128(&self) -> Vec<i128> {
        self.coords.iter().map(|&c| c as i128).collect()
    }
}

/// Present the cokernel Z^n / (column span of `relations`) in invariant
/// factor form. `rank` is the ambient rank bound carried by the result.
pub fn snf_present(relations: &Mat, rank: usize) -> Result<FinMod> {
    let n = relations.rows;
    if rank < n {
        return Err(Error::Invalid("rank bound below ambient rank".into()));
    }
    let divs = intmat::elementary_divisors(relations);
    if divs.len() < n || divs.iter().take(n).any(|&d| d == 0) {
        return Err(Error::InfiniteModule);
    }
    let factors: Vec<u64> = divs.iter().filter(|&&d| d.abs() > 1).map(|&d| d.unsigned_abs() as u64).collect();
    FinMod::new(factors, rank)
}

/// A homomorphism of finite modules, stored as the integer matrix of
/// generator images: column j holds the target coordinates of the image of
/// the j-th source generator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModHom {
    src: FinMod,
    dst: FinMod,
    mat: Mat,
}

impl fmt::Debug for ModHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModHom({} -> {}, {:?})", self.src, self.dst, self.mat)
    }
}

impl ModHom {
    pub fn new(src: FinMod, dst: FinMod, mat: Mat) -> Self {
        assert_eq!(mat.rows, dst.ngens());
        assert_eq!(mat.cols, src.ngens());
        let mut mat = mat;
        for i in 0..mat.rows {
            let d = dst.factors[i] as i128;
            for j in 0..mat.cols {
                mat[(i, j)] = mat[(i, j)].rem_euclid(d);
            }
        }
        let h = ModHom { src, dst, mat };
        debug_assert!(h.is_well_defined(), "hom does not respect relations");
        h
    }

    pub fn src(&self) -> &FinMod {
        &self.src
    }

    pub fn dst(&self) -> &FinMod {
        &self.dst
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn is_well_defined(&self) -> bool {
        // column j, multiplied by the order d_j of the source generator,
        // must vanish in the target
        for j in 0..self.src.ngens() {
            let dj = self.src.factors[j] as i128;
            for i in 0..self.dst.ngens() {
                if (dj * self.mat[(i, j)]) % (self.dst.factors[i] as i128) != 0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn apply(&self, x: &Element) -> Element {
        let v = self.mat.mul_vec(&x.as_i128());
        self.dst.elem(&v)
    }

    pub fn compose(&self, inner: &ModHom) -> ModHom {
        assert_eq!(inner.dst, self.src, "hom composition mismatch");
        ModHom::new(inner.src.clone(), self.dst.clone(), self.mat.mul(&inner.mat))
    }

    pub fn add(&self, other: &ModHom) -> ModHom {
        assert_eq!(self.src, other.src);
        assert_eq!(self.dst, other.dst);
        let mut m = self.mat.clone();
        for i in 0..m.rows {
            for j in 0..m.cols {
                m[(i, j)] += other.mat[(i, j)];
            }
        }
        ModHom::new(self.src.clone(), self.dst.clone(), m)
    }

    pub fn is_zero(&self) -> bool {
        self.mat.is_zero()
    }

    /// Image of the whole source, as a submodule of the target.
    pub fn image(&self) -> Submodule {
        let gens = self.mat.hcat(&self.dst.relation_matrix());
        Submodule { parent: self.dst.clone(), basis: intmat::col_hnf(&gens) }
    }

    /// Image of a submodule of the source.
    pub fn image_of(&self, s: &Submodule) -> Submodule {
        assert_eq!(s.parent, self.src);
        let gens = self.mat.mul(&s.basis).hcat(&self.dst.relation_matrix());
        Submodule { parent: self.dst.clone(), basis: intmat::col_hnf(&gens) }
    }

    /// Preimage of a submodule of the target.
    pub fn preimage_of(&self, t: &Submodule) -> Submodule {
        assert_eq!(t.parent, self.dst);
        let lat = intmat::preimage_lattice(&self.mat, &t.basis);
        // contains the source relation lattice automatically; normalize anyway
        let full = lat.hcat(&self.src.relation_matrix());
        Submodule { parent: self.src.clone(), basis: intmat::col_hnf(&full) }
    }

    pub fn kernel(&self) -> Submodule {
        self.preimage_of(&Submodule::zero(&self.dst))
    }

    pub fn is_surjective(&self) -> bool {
        self.image().is_full()
    }

    /// Invertibility test: the map is an isomorphism iff orders agree and
    /// the reduction mod every prime of the order is invertible on the
    /// p-rank block.
    pub fn is_automorphism(&self) -> bool {
        if self.src != self.dst {
            return false;
        }
        for p in self.src.support() {
            let idx: Vec<usize> = (0..self.src.ngens())
                .filter(|&i| self.src.factors[i] % p == 0)
                .collect();
            let mut block = Mat::zeros(idx.len(), idx.len());
            for (bi, &i) in idx.iter().enumerate() {
                for (bj, &j) in idx.iter().enumerate() {
                    block[(bi, bj)] = self.mat[(i, j)].rem_euclid(p as i128);
                }
            }
            if block.det().rem_euclid(p as i128) == 0 {
                return false;
            }
        }
        true
    }

    /// Inverse of an isomorphism (equal invariant factors), by solving on
    /// generators.
    pub fn inverse(&self) -> ModHom {
        assert_eq!(self.src.factors(), self.dst.factors(), "not an isomorphism");
        let n = self.src.ngens();
        // per column, find the preimage of each target generator
        let mut x = Mat::zeros(n, n);
        for j in 0..n {
            let g = self.dst.generator(j);
            let pre = self
                .fiber(&g)
                .into_iter()
                .next()
                .expect("isomorphism must be surjective");
            for i in 0..n {
                x[(i, j)] = pre.coords()[i] as i128;
            }
        }
        ModHom::new(self.dst.clone(), self.src.clone(), x)
    }

    /// All preimages of a target element (empty if not in the image).
    pub fn fiber(&self, y: &Element) -> Vec<Element> {
        // solve mat * x = y + D_dst * t over the integers
        let k_src = self.src.ngens();
        let d_dst = self.dst.relation_matrix();
        let aug = self.mat.hcat(&d_dst);
        // particular solution via SNF
        let (u, s, v) = intmat::snf(&aug);
        let rhs = u.mul_vec(&y.as_i128());
        let n = aug.rows.min(aug.cols);
        let mut part = vec![0i128; aug.cols];
        for i in 0..aug.rows {
            let sii = if i < n { s[(i, i)] } else { 0 };
            if sii == 0 {
                if rhs[i] != 0 {
                    return vec![];
                }
            } else {
                if rhs[i] % sii != 0 {
                    return vec![];
                }
                part[i] = rhs[i] / sii;
            }
        }
        let x0 = v.mul_vec(&part);
        let x0: Vec<i128> = x0[..k_src].to_vec();
        let base = self.src.elem(&x0);
        // homogeneous solutions: kernel of the map on elements
        let ker = self.kernel();
        ker.elements().iter().map(|k| self.src.add(&base, k)).collect()
    }
}

/// A submodule of a fixed parent, canonically the column-HNF basis of its
/// preimage lattice in Z^k.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Submodule {
    parent: FinMod,
    basis: Mat,
}

impl fmt::Debug for Submodule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Submodule(of {}, order {})", self.parent, self.order())
    }
}

impl Submodule {
    pub fn zero(parent: &FinMod) -> Self {
        Submodule { parent: parent.clone(), basis: intmat::col_hnf(&parent.relation_matrix()) }
    }

    pub fn full(parent: &FinMod) -> Self {
        Submodule { parent: parent.clone(), basis: Mat::identity(parent.ngens()) }
    }

    pub fn from_elements(parent: &FinMod, gens: &[Element]) -> Self {
        let k = parent.ngens();
        let mut cols: Vec<Vec<i128>> = gens.iter().map(|g| g.as_i128()).collect();
        for j in 0..k {
            let mut col = vec![0i128; k];
            col[j] = parent.factors[j] as i128;
            cols.push(col);
        }
        let mut m = Mat::zeros(k, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for i in 0..k {
                m[(i, j)] = col[i];
            }
        }
        Submodule { parent: parent.clone(), basis: intmat::col_hnf(&m) }
    }

    pub fn from_lattice(parent: &FinMod, lattice: Mat) -> Self {
        let full = lattice.hcat(&parent.relation_matrix());
        Submodule { parent: parent.clone(), basis: intmat::col_hnf(&full) }
    }

    pub fn parent(&self) -> &FinMod {
        &self.parent
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn order(&self) -> u64 {
        if self.parent.ngens() == 0 {
            return 1;
        }
        let full = self.parent.order() as i128;
        (full / self.basis.det().abs()) as u64
    }

    pub fn is_zero(&self) -> bool {
        self.order() == 1
    }

    pub fn is_full(&self) -> bool {
        self.order() == self.parent.order()
    }

    pub fn contains(&self, x: &Element) -> bool {
        intmat::lattice_contains(&self.basis, &x.as_i128())
    }

    pub fn is_subset_of(&self, other: &Submodule) -> bool {
        assert_eq!(self.parent, other.parent);
        (0..self.basis.cols)
            .all(|j| intmat::lattice_contains(&other.basis, &self.basis.column(j)))
    }

    pub fn sum(&self, other: &Submodule) -> Submodule {
        assert_eq!(self.parent, other.parent);
        Submodule {
            parent: self.parent.clone(),
            basis: intmat::col_hnf(&self.basis.hcat(&other.basis)),
        }
    }

    pub fn intersect(&self, other: &Submodule) -> Submodule {
        assert_eq!(self.parent, other.parent);
        Submodule {
            parent: self.parent.clone(),
            basis: intmat::lattice_intersection(&self.basis, &other.basis),
        }
    }

    pub fn elements(&self) -> Vec<Element> {
        self.parent
            .elements()
            .into_iter()
            .filter(|e| self.contains(e))
            .collect()
    }

    /// Sort key for deterministic enumeration order.
    fn sort_key(&self) -> Vec<i128> {
        let mut key = vec![self.basis.cols as i128];
        for j in 0..self.basis.cols {
            key.extend(self.basis.column(j));
        }
        key
    }
}

/// All submodules, each exactly once, sorted by canonical form.
pub fn enumerate_submodules(n: &FinMod, bounds: &Bounds) -> Result<Vec<Submodule>> {
    if n.order() > bounds.max_order {
        return Err(Error::TooLarge(format!(
            "module of order {} exceeds enumeration bound {}",
            n.order(),
            bounds.max_order
        )));
    }
    let k = n.ngens();
    if k == 0 {
        return Ok(vec![Submodule::full(n)]);
    }
    let e = n.exponent();
    let pivot_choices: Vec<u64> = arith::divisors(e);
    // enumerate lower-triangular reduced matrices: pivot of column j on row j,
    // entries in pivot row r, columns < r, lie in [0, pivot_r)
    let mut out: Vec<Submodule> = Vec::new();
    let mut diag = vec![1u64; k];
    enumerate_rec(n, &pivot_choices, &mut diag, 0, &mut out);
    out.sort_by_key(|s| s.sort_key());
    out.dedup();
    Ok(out)
}

fn enumerate_rec(
    n: &FinMod,
    pivot_choices: &[u64],
    diag: &mut Vec<u64>,
    level: usize,
    out: &mut Vec<Submodule>,
) {
    let k = n.ngens();
    if level == k {
        // fill sub-diagonal entries
        let positions: Vec<(usize, usize)> = (0..k)
            .flat_map(|r| (0..r).map(move |c| (r, c)))
            .collect();
        let ranges: Vec<u64> = positions.iter().map(|&(r, _)| diag[r]).collect();
        let mut idx = vec![0u64; positions.len()];
        loop {
            let mut m = Mat::zeros(k, k);
            for i in 0..k {
                m[(i, i)] = diag[i] as i128;
            }
            for (t, &(r, c)) in positions.iter().enumerate() {
                m[(r, c)] = idx[t] as i128;
            }
            // candidate lattice must contain the relation lattice
            let rel = n.relation_matrix();
            let ok = (0..k).all(|j| intmat::lattice_contains(&m, &rel.column(j)));
            if ok {
                // canonical form may differ from m; normalize
                out.push(Submodule::from_lattice(n, m));
            }
            // odometer
            let mut t = 0;
            loop {
                if t == idx.len() {
                    return;
                }
                idx[t] += 1;
                if idx[t] < ranges[t] {
                    break;
                }
                idx[t] = 0;
                t += 1;
            }
        }
    } else {
        for &p in pivot_choices {
            diag[level] = p;
            enumerate_rec(n, pivot_choices, diag, level + 1, out);
        }
    }
}

/// Complete duplicate-free list of homomorphisms M -> N.
pub fn hom_modules(m: &FinMod, n: &FinMod, bounds: &Bounds) -> Result<Vec<ModHom>> {
    let count = hom_count(m, n);
    if count > bounds.max_hom {
        return Err(Error::TooLarge(format!(
            "|Hom| = {count} exceeds bound {}",
            bounds.max_hom
        )));
    }
    let (km, kn) = (m.ngens(), n.ngens());
    // entry (i, j) ranges over multiples of n_i / gcd(m_j, n_i)
    let mut steps = Mat::zeros(kn, km);
    let mut counts: Vec<u64> = Vec::new();
    for i in 0..kn {
        for j in 0..km {
            let g = arith::gcd(m.factors[j] as i128, n.factors[i] as i128);
            steps[(i, j)] = n.factors[i] as i128 / g;
            counts.push(g as u64);
        }
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0u64; kn * km];
    loop {
        let mut mat = Mat::zeros(kn, km);
        for i in 0..kn {
            for j in 0..km {
                mat[(i, j)] = steps[(i, j)] * idx[i * km + j] as i128;
            }
        }
        out.push(ModHom::new(m.clone(), n.clone(), mat));
        let mut t = 0;
        loop {
            if t == idx.len() {
                return Ok(out);
            }
            idx[t] += 1;
            if idx[t] < counts[t] {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

/// |Hom(M, N)| without enumeration.
pub fn hom_count(m: &FinMod, n: &FinMod) -> u64 {
    let mut count: u64 = 1;
    for &dj in m.factors() {
        for &di in n.factors() {
            count = count.saturating_mul(arith::gcd(dj as i128, di as i128) as u64);
        }
    }
    count
}

/// All automorphisms, in deterministic order.
pub fn aut_group(n: &FinMod, bounds: &Bounds) -> Result<Vec<ModHom>> {
    let homs = hom_modules(n, n, bounds)?;
    Ok(homs.into_iter().filter(|h| h.is_automorphism()).collect())
}

/// |Aut(N)| by the closed formula (product over primes of the automorphism
/// counts of the p-primary parts), no enumeration.
pub fn aut_order(n: &FinMod) -> u64 {
    let mut total: u64 = 1;
    for p in n.support() {
        // exponents of p in each invariant factor, ascending
        let es: Vec<u32> = n
            .factors()
            .iter()
            .filter_map(|&d| {
                let mut e = 0;
                let mut d = d;
                while d % p == 0 {
                    d /= p;
                    e += 1;
                }
                (e > 0).then_some(e)
            })
            .collect();
        total *= aut_order_p_group(p, &es);
    }
    total
}

fn aut_order_p_group(p: u64, es: &[u32]) -> u64 {
    // Hillar-Rhea: G = sum of Z/p^{e_i}, e_1 <= ... <= e_n
    let n = es.len();
    if n == 0 {
        return 1;
    }
    let dk: Vec<usize> = (0..n)
        .map(|k| (0..n).filter(|&l| es[l] == es[k]).map(|l| l + 1).max().unwrap())
        .collect();
    let ck: Vec<usize> = (0..n)
        .map(|k| (0..n).filter(|&l| es[l] == es[k]).map(|l| l + 1).min().unwrap())
        .collect();
    let pw = |e: u64| -> u64 { (0..e).fold(1u64, |a, _| a * p) };
    let mut total: u64 = 1;
    for k in 0..n {
        total *= pw(dk[k] as u64) - pw(k as u64);
    }
    for j in 0..n {
        total *= pw(es[j] as u64).pow((n - dk[j]) as u32);
    }
    for i in 0..n {
        total *= pw(es[i] as u64 - 1).pow((n - ck[i] + 1) as u32);
    }
    total
}

/// Canonical presentation of the subquotient N2/N1 for submodules
/// N1 <= N2 of a common parent, with explicit maps in both directions.
#[derive(Clone, Debug)]
pub struct QuotPresentation {
    pub module: FinMod,
    /// basis of the N2 lattice (columns, in parent Z^k coordinates)
    l2: Mat,
    /// transform: row-selected U carrying L2-coordinates to quotient coords
    u: Mat,
    u_inv: Mat,
    /// indices of the non-unit diagonal entries in the Smith form
    keep: Vec<usize>,
    parent: FinMod,
}

impl QuotPresentation {
    pub fn new(n1: &Submodule, n2: &Submodule, rank: usize) -> Self {
        assert_eq!(n1.parent, n2.parent);
        debug_assert!(n1.is_subset_of(n2), "N1 must be contained in N2");
        let parent = n1.parent.clone();
        let k = parent.ngens();
        // express L1 in L2 coordinates
        let mut c = Mat::zeros(k, k);
        for j in 0..k {
            let col = n1.basis.column(j);
            let coords = intmat::solve_hnf(&n2.basis, &col).expect("N1 not inside N2");
            for i in 0..k {
                c[(i, j)] = coords[i];
            }
        }
        let (u, s, _) = intmat::snf(&c);
        let mut factors = Vec::new();
        let mut keep = Vec::new();
        for i in 0..k {
            let d = s[(i, i)].abs() as u64;
            if d > 1 {
                factors.push(d);
                keep.push(i);
            }
        }
        let module = FinMod::new(factors, rank).expect("SNF yields a chain");
        let u_inv = u.inv_unimodular();
        QuotPresentation { module, l2: n2.basis.clone(), u, u_inv, keep, parent }
    }

    /// Map an element of the parent lying in N2 to its class in the quotient.
    pub fn project(&self, x: &Element) -> Element {
        // find L2-coordinates of a lift of x
        let k = self.parent.ngens();
        let aug = self.l2.hcat(&self.parent.relation_matrix());
        let (u, s, v) = intmat::snf(&aug);
        let rhs = u.mul_vec(&x.as_i128());
        let n = aug.rows.min(aug.cols);
        let mut part = vec![0i128; aug.cols];
        for i in 0..aug.rows {
            let sii = if i < n { s[(i, i)] } else { 0 };
            if sii == 0 {
                assert_eq!(rhs[i], 0, "element not in N2");
            } else {
                assert_eq!(rhs[i] % sii, 0, "element not in N2");
                part[i] = rhs[i] / sii;
            }
        }
        let t = v.mul_vec(&part);
        let t: Vec<i128> = t[..k].to_vec();
        let w = self.u.mul_vec(&t);
        let coords: Vec<i128> = self.keep.iter().map(|&i| w[i]).collect();
        self.module.elem(&coords)
    }

    /// Lift a quotient generator back to an element of the parent.
    pub fn lift_generator(&self, j: usize) -> Element {
        let i = self.keep[j];
        let col = self.u_inv.column(i);
        let v = self.l2.mul_vec(&col);
        self.parent.elem(&v)
    }

    /// Lift an arbitrary quotient element to a representative in the parent.
    pub fn lift(&self, e: &Element) -> Element {
        let mut acc = self.parent.zero_elem();
        for (j, &c) in e.coords().iter().enumerate() {
            acc = self.parent.add(&acc, &self.parent.smul(c as i128, &self.lift_generator(j)));
        }
        acc
    }

    /// Image in the quotient of a submodule S with N1 <= S <= N2.
    pub fn project_submodule(&self, s: &Submodule) -> Submodule {
        let gens: Vec<Element> = (0..s.basis().cols)
            .map(|j| self.project(&self.parent.elem(&s.basis().column(j))))
            .collect();
        Submodule::from_elements(&self.module, &gens)
    }

    /// The projection N2 -> Q as a function on parent elements; and the
    /// induced hom on a chosen generator matrix of N2 is not needed —
    /// callers work through `project` / `lift_generator`.
    pub fn parent(&self) -> &FinMod {
        &self.parent
    }
}

/// Direct sum with canonical invariant-factor renormalization, plus the
/// canonical injections and projections.
pub struct DirectSum {
    pub module: FinMod,
    pub injections: Vec<ModHom>,
    pub projections: Vec<ModHom>,
}

pub fn direct_sum(parts: &[FinMod], rank: usize) -> Result<DirectSum> {
    let concat: Vec<u64> = parts.iter().flat_map(|p| p.factors().iter().copied()).collect();
    let m = concat.len();
    let rel = Mat::diag(&concat.iter().map(|&d| d as i128).collect::<Vec<_>>());
    let (u, s, _) = intmat::snf(&rel);
    let mut factors = Vec::new();
    let mut keep = Vec::new();
    for i in 0..m {
        let d = s[(i, i)].abs() as u64;
        if d > 1 {
            factors.push(d);
            keep.push(i);
        } else if d == 0 {
            return Err(Error::InfiniteModule);
        }
    }
    let module = FinMod::new(factors, rank)?;
    let u_inv = u.inv_unimodular();
    // concat coords -> canonical coords: w = U x, keep rows `keep`
    let mut inj = Vec::new();
    let mut proj = Vec::new();
    let mut offset = 0usize;
    for part in parts {
        let kp = part.ngens();
        let mut inj_m = Mat::zeros(keep.len(), kp);
        for (r, &i) in keep.iter().enumerate() {
            for j in 0..kp {
                inj_m[(r, j)] = u[(i, offset + j)];
            }
        }
        inj.push(ModHom::new(part.clone(), module.clone(), inj_m));
        let mut proj_m = Mat::zeros(kp, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            for j in 0..kp {
                proj_m[(j, c)] = u_inv[(offset + j, i)];
            }
        }
        proj.push(ModHom::new(module.clone(), part.clone(), proj_m));
        offset += kp;
    }
    Ok(DirectSum { module, injections: inj, projections: proj })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> Bounds {
        Bounds::default()
    }

    #[test]
    fn snf_present_examples() {
        // identity 2x2 -> zero module
        let z = snf_present(&Mat::identity(2), 2).unwrap();
        assert!(z.is_zero());
        // diag(2,4) -> Z/2 + Z/4
        let m = snf_present(&Mat::diag(&[2, 4]), 2).unwrap();
        assert_eq!(m.factors(), &[2, 4]);
        // [[2,1],[0,2]] -> Z/4
        let m = snf_present(&Mat::from_rows(&[vec![2, 1], vec![0, 2]]), 2).unwrap();
        assert_eq!(m.factors(), &[4]);
        // non-finite cokernel
        let e = snf_present(&Mat::from_rows(&[vec![1, 0], vec![0, 0]]), 2);
        assert!(matches!(e, Err(Error::InfiniteModule)));
    }

    #[test]
    fn snf_present_idempotent() {
        for factors in [vec![2u64, 4], vec![3, 9], vec![2, 2], vec![6]] {
            let n = FinMod::new(factors.clone(), 2).unwrap();
            let again = snf_present(&n.relation_matrix(), 2).unwrap();
            assert_eq!(again.factors(), n.factors());
        }
    }

    #[test]
    fn submodule_counts() {
        let zero = FinMod::zero(1);
        assert_eq!(enumerate_submodules(&zero, &b()).unwrap().len(), 1);
        let z4 = FinMod::cyclic(4, 1);
        assert_eq!(enumerate_submodules(&z4, &b()).unwrap().len(), 3);
        let v4 = FinMod::new(vec![2, 2], 2).unwrap();
        assert_eq!(enumerate_submodules(&v4, &b()).unwrap().len(), 5);
    }

    #[test]
    fn submodule_count_brute_force_cross_check() {
        // brute force: subsets closed under addition and negation
        for factors in [vec![4u64], vec![2, 2], vec![2, 4], vec![9]] {
            let n = FinMod::new(factors, 2).unwrap();
            let elems = n.elements();
            let mut count = 0;
            // enumerate candidate subgroups as subsets generated by each subset
            // of at most 2 elements (enough for 2-generated modules)
            let mut seen = std::collections::BTreeSet::new();
            for a in &elems {
                for bxx in &elems {
                    let s = Submodule::from_elements(&n, &[a.clone(), bxx.clone()]);
                    seen.insert(s.basis().clone().map_mod(1 << 40));
                }
            }
            count += seen.len();
            let enumerated = enumerate_submodules(&n, &b()).unwrap().len();
            assert_eq!(count, enumerated, "mismatch for {n}");
        }
    }

    #[test]
    fn submodule_order_duality() {
        // number of submodules of order m equals number of order |N|/m
        for factors in [vec![2u64, 4], vec![4, 4], vec![3, 3]] {
            let n = FinMod::new(factors, 2).unwrap();
            let subs = enumerate_submodules(&n, &b()).unwrap();
            let mut by_order = std::collections::BTreeMap::new();
            for s in &subs {
                *by_order.entry(s.order()).or_insert(0u64) += 1;
            }
            for (&m, &c) in &by_order {
                let dual = n.order() / m;
                assert_eq!(by_order.get(&dual), Some(&c), "duality fails for {n} at {m}");
            }
        }
    }

    #[test]
    fn hom_counts() {
        let zero = FinMod::zero(1);
        let z4 = FinMod::cyclic(4, 1);
        let z2 = FinMod::cyclic(2, 1);
        assert_eq!(hom_modules(&zero, &z4, &b()).unwrap().len(), 1);
        assert_eq!(hom_modules(&z4, &z2, &b()).unwrap().len(), 2);
        let v4 = FinMod::new(vec![2, 2], 2).unwrap();
        assert_eq!(hom_modules(&v4, &FinMod::cyclic(4, 2), &b()).unwrap().len(), 4);
        // closure under addition
        let homs = hom_modules(&z4, &z4, &b()).unwrap();
        for h1 in &homs {
            for h2 in &homs {
                let sum = h1.add(h2);
                assert!(homs.contains(&sum));
            }
        }
    }

    #[test]
    fn aut_counts() {
        assert_eq!(aut_group(&FinMod::cyclic(6, 1), &b()).unwrap().len(), 2);
        assert_eq!(aut_group(&FinMod::zero(1), &b()).unwrap().len(), 1);
        let v4 = FinMod::new(vec![2, 2], 2).unwrap();
        assert_eq!(aut_group(&v4, &b()).unwrap().len(), 6);
    }

    #[test]
    fn aut_order_formula_matches_enumeration() {
        for factors in [vec![], vec![6u64], vec![2, 2], vec![2, 4], vec![3, 9], vec![4, 4]] {
            let n = FinMod::new(factors, 2).unwrap();
            let formula = aut_order(&n);
            let enumerated = aut_group(&n, &b()).unwrap().len() as u64;
            assert_eq!(formula, enumerated, "Aut order mismatch for {n}");
        }
    }

    #[test]
    fn aut_closed_under_composition_and_inverse() {
        let n = FinMod::new(vec![2, 4], 2).unwrap();
        let auts = aut_group(&n, &b()).unwrap();
        for a in &auts {
            let inv = a.inverse();
            assert!(auts.contains(&inv));
            for c in &auts {
                assert!(auts.contains(&a.compose(c)));
            }
        }
    }

    #[test]
    fn quotient_presentation() {
        let n = FinMod::cyclic(8, 1);
        let subs = enumerate_submodules(&n, &b()).unwrap();
        let two = subs.iter().find(|s| s.order() == 4).unwrap(); // 2Z/8
        let four = subs.iter().find(|s| s.order() == 2).unwrap(); // 4Z/8
        let q = QuotPresentation::new(four, two, 1);
        assert_eq!(q.module.factors(), &[2]);
        let g = q.lift_generator(0);
        assert!(two.contains(&g));
        assert!(!four.contains(&g));
        assert_eq!(q.project(&g).coords(), &[1]);
    }

    #[test]
    fn direct_sum_roundtrip() {
        let a = FinMod::cyclic(3, 1);
        let c = FinMod::cyclic(2, 1);
        let ds = direct_sum(&[a.clone(), c.clone()], 2).unwrap();
        assert_eq!(ds.module.factors(), &[6]);
        for (j, part) in [a, c].iter().enumerate() {
            let id = ds.projections[j].compose(&ds.injections[j]);
            assert_eq!(id, part.identity_hom());
        }
    }

    #[test]
    fn fiber_of_hom() {
        let z4 = FinMod::cyclic(4, 1);
        let z2 = FinMod::cyclic(2, 1);
        let proj = ModHom::new(z4.clone(), z2.clone(), Mat::from_rows(&[vec![1]]));
        let f = proj.fiber(&z2.elem(&[1]));
        assert_eq!(f.len(), 2);
        for x in &f {
            assert_eq!(proj.apply(x).coords(), &[1]);
        }
    }
}
