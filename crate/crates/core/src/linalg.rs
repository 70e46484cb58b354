//! Exact dense linear algebra over Q (row echelon) and Z (Smith form).
//!
//! Matrices are small (graph-sized), so plain Gaussian elimination with
//! arbitrary-precision rationals is the right tool. Pivoting is positional,
//! never by magnitude, so echelon forms and the bases derived from them are
//! deterministic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense matrix over Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        QMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_int_rows(rows: Vec<Vec<i64>>) -> Self {
        QMat::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| BigRational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn neg(&self) -> QMat {
        let mut m = self.clone();
        for v in &mut m.data {
            *v = -v.clone();
        }
        m
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Reduced row echelon form, with the pivot column of each nonzero row.
    /// Pivots are chosen as the first nonzero entry in column order.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, pr);
            let inv = m.get(r, c).recip();
            for j in c..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i != r && !m.get(i, c).is_zero() {
                    let f = m.get(i, c).clone();
                    for j in c..m.cols {
                        let v = m.get(i, j) - &f * m.get(r, j);
                        m.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel: one standard vector per free column, with
    /// the free coordinate set to 1 (deterministic, from the rref).
    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let pivot_of_col: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (row, &c) in pivots.iter().enumerate() {
                v[c] = Some(row);
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut vec = vec![BigRational::zero(); self.cols];
            vec[free] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                vec[pc] = -r.get(row, free).clone();
            }
            basis.push(vec);
        }
        basis
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Solve `a · x = b` for square `a`; `None` if `a` is singular.
#[allow(clippy::needless_range_loop)]
pub fn solve(a: &QMat, b: &[BigRational]) -> Option<Vec<BigRational>> {
    assert_eq!(a.nrows(), a.ncols());
    assert_eq!(a.nrows(), b.len());
    let n = a.nrows();
    let mut aug = QMat::zeros(n, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, n, b[i].clone());
    }
    let (r, pivots) = aug.rref();
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some((0..n).map(|i| r.get(i, n).clone()).collect())
}

/// A subspace of Q^n in reduced echelon form, supporting canonical reduction
/// of vectors modulo the subspace. Used to read off cokernel coordinates.
#[derive(Clone, Debug)]
pub struct EchelonSubspace {
    rref: QMat,
    pivots: Vec<usize>,
    dim_ambient: usize,
}

impl EchelonSubspace {
    /// Span of the rows of `gens` inside Q^n.
    pub fn from_row_span(gens: &QMat) -> Self {
        let (rref, pivots) = gens.rref();
        EchelonSubspace { rref, pivots, dim_ambient: gens.ncols() }
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Coordinates complementary to the pivots, i.e. the ambient indices whose
    /// standard vectors descend to the canonical basis of the quotient.
    pub fn complement(&self) -> Vec<usize> {
        let piv: std::collections::BTreeSet<usize> = self.pivots.iter().copied().collect();
        (0..self.dim_ambient).filter(|i| !piv.contains(i)).collect()
    }

    /// Canonical representative of `v` modulo the subspace: pivot coordinates
    /// are eliminated, leaving a vector supported on the complement.
    #[allow(clippy::needless_range_loop)]
    pub fn reduce(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.dim_ambient);
        let mut out = v.to_vec();
        for (row, &pc) in self.pivots.iter().enumerate() {
            if out[pc].is_zero() {
                continue;
            }
            let f = out[pc].clone();
            for j in 0..self.dim_ambient {
                let w = &out[j] - &f * self.rref.get(row, j);
                out[j] = w;
            }
        }
        out
    }

    /// Quotient coordinates of `v`: its canonical representative restricted to
    /// the complement indices.
    pub fn quotient_coords(&self, v: &[BigRational]) -> Vec<BigRational> {
        let red = self.reduce(v);
        self.complement().iter().map(|&i| red[i].clone()).collect()
    }
}

/// Dense matrix over Z, used for Smith normal form computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        IMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_int_rows(rows: Vec<Vec<i64>>) -> Self {
        IMat::from_rows(
            rows.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rational(&self) -> QMat {
        let mut q = QMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                q.set(i, j, BigRational::from_integer(self.get(i, j).clone()));
            }
        }
        q
    }

    pub fn transpose(&self) -> IMat {
        let mut t = IMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Nonzero diagonal entries of the Smith normal form, normalized positive,
    /// each dividing the next. Classic pivot-and-reduce; fine at graph scale.
    pub fn smith_divisors(&self) -> Vec<BigInt> {
        let mut m = self.clone();
        let mut divisors = Vec::new();
        let mut t = 0;
        while t < m.rows.min(m.cols) {
            let Some((pi, pj)) = smallest_nonzero(&m, t) else {
                break;
            };
            m.swap_rows(t, pi);
            m.swap_cols(t, pj);
            // Reduce column and row below/right of the pivot until clean.
            loop {
                let mut dirty = false;
                for i in t + 1..m.rows {
                    if !m.get(i, t).is_zero() {
                        let q = div_round(m.get(i, t), m.get(t, t));
                        if !q.is_zero() {
                            for j in t..m.cols {
                                let v = m.get(i, j) - &q * m.get(t, j);
                                m.set(i, j, v);
                            }
                        }
                        if !m.get(i, t).is_zero() {
                            m.swap_rows(t, i);
                            dirty = true;
                        }
                    }
                }
                for j in t + 1..m.cols {
                    if !m.get(t, j).is_zero() {
                        let q = div_round(m.get(t, j), m.get(t, t));
                        if !q.is_zero() {
                            for i in t..m.rows {
                                let v = m.get(i, j) - &q * m.get(i, t);
                                m.set(i, j, v);
                            }
                        }
                        if !m.get(t, j).is_zero() {
                            m.swap_cols(t, j);
                            dirty = true;
                        }
                    }
                }
                if !dirty {
                    break;
                }
            }
            // Ensure the pivot divides every remaining entry.
            let mut fixed = false;
            'scan: for i in t + 1..m.rows {
                for j in t + 1..m.cols {
                    if !(m.get(i, j) % m.get(t, t)).is_zero() {
                        for jj in t..m.cols {
                            let v = m.get(t, jj) + m.get(i, jj);
                            m.set(t, jj, v);
                        }
                        fixed = true;
                        break 'scan;
                    }
                }
            }
            if fixed {
                continue;
            }
            divisors.push(m.get(t, t).abs());
            t += 1;
        }
        divisors
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
}

fn smallest_nonzero(m: &IMat, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in from..m.nrows() {
        for j in from..m.ncols() {
            let v = m.get(i, j);
            if v.is_zero() {
                continue;
            }
            match best {
                None => best = Some((i, j)),
                Some((bi, bj)) => {
                    if v.abs() < m.get(bi, bj).abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

/// Rounded division, so remainders satisfy |r| <= |b|/2 and the Smith loop
/// strictly shrinks pivots.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (q, r) = num_integer::Integer::div_rem(a, b);
    if &r.abs() * &two > b.abs() {
        if (r.sign() == b.sign()) || r.is_zero() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rref_and_rank() {
        let m = QMat::from_int_rows(vec![vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        let (r, pivots) = m.rref();
        assert_eq!(pivots, vec![0, 1]);
        assert_eq!(m.rank(), 2);
        assert_eq!(r.get(0, 0), &q(1, 1));
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let m = QMat::from_int_rows(vec![vec![1, 1, 0], vec![0, 1, 1]]);
        let basis = m.kernel_basis();
        assert_eq!(basis.len(), 1);
        for v in &basis {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_inverts() {
        let a = QMat::from_int_rows(vec![vec![2, 1], vec![1, 1]]);
        let b = vec![q(1, 1), q(0, 1)];
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.mul_vec(&x), b);
    }

    #[test]
    fn quotient_coords_of_cycle_sum() {
        // im spanned by (-1,1,0) and (0,-1,1); quotient of Q^3 is 1-dimensional
        // and the class of a vector is its coordinate sum on the last basis slot.
        let gens = QMat::from_int_rows(vec![vec![-1, 1, 0], vec![0, -1, 1]]);
        let sub = EchelonSubspace::from_row_span(&gens);
        assert_eq!(sub.complement(), vec![2]);
        let coords = sub.quotient_coords(&[q(1, 1), q(1, 1), q(1, 1)]);
        assert_eq!(coords, vec![q(3, 1)]);
    }

    #[test]
    fn smith_divisors_examples() {
        let m = IMat::from_int_rows(vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        let d = m.smith_divisors();
        assert_eq!(d, vec![BigInt::from(2), BigInt::from(2), BigInt::from(156)]);

        let incidence = IMat::from_int_rows(vec![vec![-1, 1, 0], vec![0, -1, 1], vec![1, 0, -1]]);
        assert_eq!(incidence.smith_divisors(), vec![BigInt::from(1), BigInt::from(1)]);
    }
}
