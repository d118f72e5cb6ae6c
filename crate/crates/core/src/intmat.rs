//! Exact integer matrix arithmetic: Hermite and Smith normal forms,
//! kernels, and lattice manipulation.
//!
//! All matrices are dense with `i128` entries. Dimensions in this crate are
//! tiny (rank <= 4) and moduli are small, so fraction-free elimination never
//! comes close to overflow.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<i128>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = i128;
    fn index(&self, (i, j): (usize, usize)) -> &i128 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i128 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i128>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn diag(entries: &[i128]) -> Self {
        let n = entries.len();
        let mut m = Mat::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<i128> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<i128> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[i128]) -> Vec<i128> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Horizontal concatenation [self | other].
    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)];
            }
        }
        out
    }

    pub fn map_mod(&self, m: i128) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = v.rem_euclid(m);
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i128 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return 1;
        }
        let mut a = self.clone();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[(k, k)] == 0 {
                let pivot = (k + 1..n).find(|&i| a[(i, k)] != 0);
                match pivot {
                    Some(i) => {
                        for j in 0..n {
                            let t = a[(k, j)];
                            a[(k, j)] = a[(i, j)];
                            a[(i, j)] = t;
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[(i, j)] = (a[(i, j)] * a[(k, k)] - a[(i, k)] * a[(k, j)]) / prev;
                }
                a[(i, k)] = 0;
            }
            prev = a[(k, k)];
        }
        sign * a[(n - 1, n - 1)]
    }

    /// Inverse of a unimodular integer matrix (det = ±1).
    pub fn inv_unimodular(&self) -> Mat {
        let d = self.det();
        assert!(d == 1 || d == -1, "matrix is not unimodular (det {d})");
        let adj = self.adjugate();
        let mut out = adj;
        if d == -1 {
            for v in &mut out.data {
                *v = -*v;
            }
        }
        out
    }

    pub fn adjugate(&self) -> Mat {
        let n = self.rows;
        assert_eq!(n, self.cols);
        if n == 0 {
            return Mat::zeros(0, 0);
        }
        let mut adj = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i);
                let c = minor.det();
                adj[(i, j)] = if (i + j) % 2 == 0 { c } else { -c };
            }
        }
        adj
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Mat {
        let n = self.rows;
        let mut m = Mat::zeros(n - 1, n - 1);
        let mut r = 0;
        for i in 0..n {
            if i == skip_row {
                continue;
            }
            let mut c = 0;
            for j in 0..n {
                if j == skip_col {
                    continue;
                }
                m[(r, c)] = self[(i, j)];
                c += 1;
            }
            r += 1;
        }
        m
    }

    /// Inverse modulo m, if det is a unit mod m.
    pub fn inv_mod(&self, m: i128) -> Option<Mat> {
        let d = self.det().rem_euclid(m);
        let dinv = crate::arith::mod_inv(d, m)?;
        let adj = self.adjugate();
        let mut out = adj;
        for v in &mut out.data {
            *v = (*v * dinv).rem_euclid(m);
        }
        Some(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }
}

/// Column-style Hermite normal form of the column span of `m`.
///
/// Returns the canonical basis matrix: columns in echelon position with the
/// pivot of column j in row `pivot_row[j]`, pivots positive, and all entries
/// in a pivot row to the left of the pivot reduced into `[0, pivot)`. Zero
/// columns are dropped, so the result has full column rank and is the unique
/// such basis of the lattice spanned by the input columns.
pub fn col_hnf(m: &Mat) -> Mat {
    let rows = m.rows;
    let mut cols: Vec<Vec<i128>> = (0..m.cols).map(|j| m.column(j)).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col index in `cols`)
    let mut next = 0usize; // first unprocessed column slot
    for r in 0..rows {
        // find a column with nonzero entry in row r among unprocessed
        loop {
            let mut k = None;
            for (idx, col) in cols.iter().enumerate().skip(next) {
                if col[r] != 0 {
                    k = Some(idx);
                    break;
                }
            }
            let Some(mut k) = k else { break };
            // reduce all other unprocessed columns against cols[k] via gcd steps
            let mut again = false;
            for idx in next..cols.len() {
                if idx == k || cols[idx][r] == 0 {
                    continue;
                }
                // column gcd step on (k, idx) at row r
                let (g, x, y) = crate::arith::egcd(cols[k][r], cols[idx][r]);
                let (a, b) = (cols[k][r] / g, cols[idx][r] / g);
                let ck = cols[k].clone();
                let ci = cols[idx].clone();
                for i in 0..rows {
                    cols[k][i] = x * ck[i] + y * ci[i];
                    cols[idx][i] = -b * ck[i] + a * ci[i];
                }
                again = true;
            }
            if !again {
                // single pivot column; move it into position `next`
                cols.swap(next, k);
                k = next;
                if cols[k][r] < 0 {
                    for v in &mut cols[k] {
                        *v = -*v;
                    }
                }
                pivots.push((r, k));
                next += 1;
                break;
            }
        }
    }
    // drop zero columns (anything from `next` on is zero)
    cols.truncate(next);
    // reduce entries left of each pivot
    for pi in 0..pivots.len() {
        let (r, k) = pivots[pi];
        let p = cols[k][r];
        for j in 0..k {
            let q = cols[j][r].div_euclid(p);
            if q != 0 {
                let ck = cols[k].clone();
                for i in 0..rows {
                    cols[j][i] -= q * ck[i];
                }
            }
        }
    }
    let mut out = Mat::zeros(rows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        for i in 0..rows {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// Solve H x = v over Z where H is a column-HNF basis. Returns coordinates.
pub fn solve_hnf(h: &Mat, v: &[i128]) -> Option<Vec<i128>> {
    assert_eq!(h.rows, v.len());
    let mut rem = v.to_vec();
    let mut coords = vec![0i128; h.cols];
    let mut col = 0usize;
    for r in 0..h.rows {
        if col < h.cols && h[(r, col)] != 0 {
            let p = h[(r, col)];
            if rem[r] % p != 0 {
                return None;
            }
            let c = rem[r] / p;
            coords[col] = c;
            for i in 0..h.rows {
                rem[i] -= c * h[(i, col)];
            }
            col += 1;
        } else if rem[r] != 0 {
            return None;
        }
    }
    if rem.iter().all(|&x| x == 0) {
        Some(coords)
    } else {
        None
    }
}

pub fn lattice_contains(h: &Mat, v: &[i128]) -> bool {
    solve_hnf(h, v).is_some()
}

/// Smith normal form: returns (u, s, v) with u * m * v = s, u and v
/// unimodular, s diagonal with s_1 | s_2 | ... and nonnegative entries.
/// The computation is fully deterministic.
pub fn snf(m: &Mat) -> (Mat, Mat, Mat) {
    let mut s = m.clone();
    let mut u = Mat::identity(m.rows);
    let mut v = Mat::identity(m.cols);
    let n = m.rows.min(m.cols);
    for t in 0..n {
        loop {
            // find pivot: smallest |entry| > 0 in the remaining block, scan order
            let mut best: Option<(usize, usize)> = None;
            for i in t..s.rows {
                for j in t..s.cols {
                    if s[(i, j)] != 0
                        && best.is_none_or(|(bi, bj)| s[(i, j)].abs() < s[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            swap_rows(&mut s, &mut u, t, pi);
            swap_cols(&mut s, &mut v, t, pj);
            if s[(t, t)] < 0 {
                negate_row(&mut s, &mut u, t);
            }
            let p = s[(t, t)];
            let mut dirty = false;
            for i in t + 1..s.rows {
                let q = s[(i, t)].div_euclid(p);
                if q != 0 {
                    row_axpy(&mut s, &mut u, i, t, -q);
                }
                if s[(i, t)] != 0 {
                    dirty = true;
                }
            }
            for j in t + 1..s.cols {
                let q = s[(t, j)].div_euclid(p);
                if q != 0 {
                    col_axpy(&mut s, &mut v, j, t, -q);
                }
                if s[(t, j)] != 0 {
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // ensure pivot divides the rest of the block
            let mut offender = None;
            'outer: for i in t + 1..s.rows {
                for j in t + 1..s.cols {
                    if s[(i, j)] % p != 0 {
                        offender = Some(i);
                        break 'outer;
                    }
                }
            }
            match offender {
                Some(i) => {
                    row_axpy(&mut s, &mut u, t, i, 1);
                }
                None => break,
            }
        }
    }
    (u, s, v)
}

fn swap_rows(s: &mut Mat, u: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..s.cols {
        let t = s[(a, j)];
        s[(a, j)] = s[(b, j)];
        s[(b, j)] = t;
    }
    for j in 0..u.cols {
        let t = u[(a, j)];
        u[(a, j)] = u[(b, j)];
        u[(b, j)] = t;
    }
}

fn swap_cols(s: &mut Mat, v: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..s.rows {
        let t = s[(i, a)];
        s[(i, a)] = s[(i, b)];
        s[(i, b)] = t;
    }
    for i in 0..v.rows {
        let t = v[(i, a)];
        v[(i, a)] = v[(i, b)];
        v[(i, b)] = t;
    }
}

fn negate_row(s: &mut Mat, u: &mut Mat, r: usize) {
    for j in 0..s.cols {
        s[(r, j)] = -s[(r, j)];
    }
    for j in 0..u.cols {
        u[(r, j)] = -u[(r, j)];
    }
}

/// row a += c * row b
fn row_axpy(s: &mut Mat, u: &mut Mat, a: usize, b: usize, c: i128) {
    for j in 0..s.cols {
        s[(a, j)] = s[(a, j)] + c * s[(b, j)];
    }
    for j in 0..u.cols {
        u[(a, j)] = u[(a, j)] + c * u[(b, j)];
    }
}

/// col a += c * col b
fn col_axpy(s: &mut Mat, v: &mut Mat, a: usize, b: usize, c: i128) {
    for i in 0..s.rows {
        s[(i, a)] = s[(i, a)] + c * s[(i, b)];
    }
    for i in 0..v.rows {
        v[(i, a)] = v[(i, a)] + c * v[(i, b)];
    }
}

/// Diagonal of the Smith form (all min(rows, cols) entries, zeros included).
pub fn elementary_divisors(m: &Mat) -> Vec<i128> {
    let (_, s, _) = snf(m);
    (0..m.rows.min(m.cols)).map(|i| s[(i, i)]).collect()
}

/// Basis (columns) of the integer kernel {x : m x = 0}.
pub fn kernel(m: &Mat) -> Mat {
    let (_, s, v) = snf(m);
    let n = m.rows.min(m.cols);
    let mut keep = Vec::new();
    for j in 0..m.cols {
        if j >= n || s[(j, j)] == 0 {
            keep.push(j);
        }
    }
    let mut out = Mat::zeros(m.cols, keep.len());
    for (c, &j) in keep.iter().enumerate() {
        for i in 0..m.cols {
            out[(i, c)] = v[(i, j)];
        }
    }
    out
}

/// Basis of the lattice {y in Z^k : A y lies in the column span of B}.
/// A is r x k, B is r x l. The result is in column HNF.
pub fn preimage_lattice(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows);
    let stacked = a.hcat(b);
    let ker = kernel(&stacked);
    // project kernel vectors onto the first k coordinates
    let mut proj = Mat::zeros(a.cols, ker.cols);
    for j in 0..ker.cols {
        for i in 0..a.cols {
            proj[(i, j)] = ker[(i, j)];
        }
    }
    col_hnf(&proj)
}

/// Basis of the intersection of the column spans of B1 and B2.
pub fn lattice_intersection(b1: &Mat, b2: &Mat) -> Mat {
    assert_eq!(b1.rows, b2.rows);
    let stacked = b1.hcat(b2);
    let ker = kernel(&stacked);
    // intersection vectors are B1 * (first-block coordinates)
    let mut first = Mat::zeros(b1.cols, ker.cols);
    for j in 0..ker.cols {
        for i in 0..b1.cols {
            first[(i, j)] = ker[(i, j)];
        }
    }
    col_hnf(&b1.mul(&first))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_canonical() {
        // two bases of the same lattice must give the same HNF
        let a = Mat::from_rows(&[vec![2, 1], vec![0, 2]]);
        let b = Mat::from_rows(&[vec![1, 3], vec![2, 2]]);
        let ha = col_hnf(&a);
        let hb = col_hnf(&b);
        assert_eq!(ha.det().abs(), 4);
        assert_eq!(hb.det().abs(), 4);
        // a and b span different lattices here; check self-consistency instead
        let a2 = Mat::from_rows(&[vec![1, 2, 3], vec![2, 0, 2]]);
        let a3 = Mat::from_rows(&[vec![3, 2, 1], vec![2, 0, 2]]);
        assert_eq!(col_hnf(&a2), col_hnf(&a3));
    }

    #[test]
    fn snf_diag24() {
        let m = Mat::from_rows(&[vec![2, 1], vec![0, 2]]);
        let (u, s, v) = snf(&m);
        assert_eq!(u.mul(&m).mul(&v), s);
        assert_eq!(s[(0, 0)], 1);
        assert_eq!(s[(1, 1)], 4);
        assert_eq!(u.det().abs(), 1);
        assert_eq!(v.det().abs(), 1);
    }

    #[test]
    fn snf_divisibility() {
        let m = Mat::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        let (u, s, v) = snf(&m);
        assert_eq!(u.mul(&m).mul(&v), s);
        let d: Vec<i128> = (0..3).map(|i| s[(i, i)]).collect();
        for i in 0..2 {
            if d[i] != 0 {
                assert_eq!(d[i + 1] % d[i], 0);
            }
        }
    }

    #[test]
    fn kernel_works() {
        let m = Mat::from_rows(&[vec![1, 2, 3]]);
        let k = kernel(&m);
        assert_eq!(k.cols, 2);
        for j in 0..k.cols {
            let col = k.column(j);
            assert_eq!(m.mul_vec(&col), vec![0]);
        }
    }

    #[test]
    fn solve_in_lattice() {
        let h = col_hnf(&Mat::from_rows(&[vec![2, 0], vec![0, 3]]));
        assert!(lattice_contains(&h, &[4, 3]));
        assert!(!lattice_contains(&h, &[1, 0]));
    }

    #[test]
    fn intersect_sum() {
        // 2Z and 3Z in Z^1
        let b1 = Mat::from_rows(&[vec![2]]);
        let b2 = Mat::from_rows(&[vec![3]]);
        let i = lattice_intersection(&b1, &b2);
        assert_eq!(i[(0, 0)], 6);
        let s = col_hnf(&b1.hcat(&b2));
        assert_eq!(s[(0, 0)], 1);
    }

    #[test]
    fn preimage() {
        // {y in Z^2 : y_1 + y_2 in 2Z}
        let a = Mat::from_rows(&[vec![1, 1]]);
        let b = Mat::from_rows(&[vec![2]]);
        let l = preimage_lattice(&a, &b);
        assert_eq!(l.det().abs(), 2);
        assert!(lattice_contains(&l, &[1, 1]));
        assert!(!lattice_contains(&l, &[1, 0]));
    }

    #[test]
    fn inv_mod_works() {
        let m = Mat::from_rows(&[vec![1, 1], vec![0, 1]]);
        let inv = m.inv_mod(4).unwrap();
        let prod = m.mul(&inv).map_mod(4);
        assert_eq!(prod, Mat::identity(2).map_mod(4));
    }
}
