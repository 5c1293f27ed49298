//! Exact integer and rational linear algebra: Smith normal form with
//! transforms, determinants, ranks, integer solving and kernels.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::scalars::Int;

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<BigInt>>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{}x{}[", self.rows, self.cols)?;
        for (i, row) in self.data.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            write!(f, "{}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

struct Entry<'a>(&'a BigInt);

impl Serialize for Entry<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

struct Row<'a>(&'a [BigInt]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for x in self.0 {
            seq.serialize_element(&Entry(x))?;
        }
        seq.end()
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for row in &self.data {
            seq.serialize_element(&Row(row))?;
        }
        seq.end()
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![vec![BigInt::zero(); cols]; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let data = (0..rows)
            .map(|i| (0..cols).map(|j| f(i, j)).collect())
            .collect();
        IntMatrix { rows, cols, data }
    }

    /// Builds from rows of machine integers. All rows must have length `cols`.
    pub fn from_rows(cols: usize, rows: &[Vec<Int>]) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Self::from_fn(rows.len(), cols, |i, j| BigInt::from(rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        self.data.iter().map(|r| r[j].clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().flatten().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.rows)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j][i].clone())
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[k][j];
                    if !b.is_zero() {
                        out.data[i][j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            &self.data[i][j] + &other.data[i][j]
        })
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        self.data
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A ⊗ I_m`: each entry becomes an `m × m` scalar block.
    pub fn kron_identity(&self, m: usize) -> IntMatrix {
        Self::from_fn(self.rows * m, self.cols * m, |i, j| {
            if i % m == j % m {
                self.data[i / m][j / m].clone()
            } else {
                BigInt::zero()
            }
        })
    }

    /// Entries reduced into `0..n`.
    pub fn reduce_mod(&self, n: &BigInt) -> IntMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| {
            let r = &self.data[i][j] % n;
            if r.is_negative() {
                r + n
            } else {
                r
            }
        })
    }

    fn is_lower_unitriangular(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                self.data[i][i].is_one() && (i + 1..self.cols).all(|j| self.data[i][j].is_zero())
            })
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 || self.is_lower_unitriangular() {
            return BigInt::one();
        }
        let mut a = self.data.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Rank over Q.
    pub fn rank(&self) -> usize {
        let mut a = self.data.clone();
        let mut rank = 0;
        let mut prev = BigInt::one();
        for col in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&i| !a[i][col].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for i in rank + 1..self.rows {
                for j in col + 1..self.cols {
                    let v = &a[i][j] * &a[rank][col] - &a[i][col] * &a[rank][j];
                    a[i][j] = v / &prev;
                }
                a[i][col] = BigInt::zero();
            }
            prev = a[rank][col].clone();
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }

    /// Rank over F_p.
    pub fn rank_mod_p(&self, p: u64) -> usize {
        let pb = BigInt::from(p);
        let p128 = p as u128;
        let mut a: Vec<Vec<u128>> = self
            .reduce_mod(&pb)
            .data
            .iter()
            .map(|r| r.iter().map(|x| x.to_u128().unwrap()).collect())
            .collect();
        let inv = |x: u128| -> u128 {
            let (mut r, mut e, mut b) = (1u128, p128 - 2, x % p128);
            while e > 0 {
                if e & 1 == 1 {
                    r = r * b % p128;
                }
                b = b * b % p128;
                e >>= 1;
            }
            r
        };
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(piv) = (rank..self.rows).find(|&i| a[i][col] != 0) else {
                continue;
            };
            a.swap(rank, piv);
            let iv = inv(a[rank][col]);
            for j in col..self.cols {
                a[rank][j] = a[rank][j] * iv % p128;
            }
            for i in 0..self.rows {
                if i != rank && a[i][col] != 0 {
                    let f = a[i][col];
                    for j in col..self.cols {
                        let sub = f * a[rank][j] % p128;
                        a[i][j] = (a[i][j] + p128 - sub) % p128;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for row in &mut self.data {
            row.swap(a, b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        for j in 0..self.cols {
            let v = &self.data[src][j] * k;
            self.data[dst][j] += v;
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        for row in &mut self.data {
            let v = &row[src] * k;
            row[dst] += v;
        }
    }

    /// Smith normal form `U · A · V = D` with unimodular `U`, `V`.
    pub fn smith(&self) -> Smith {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.clone();
        let mut u = IntMatrix::identity(m);
        let mut v = IntMatrix::identity(n);
        let mut t = 0;
        'outer: while t < m.min(n) {
            loop {
                let mut best: Option<(usize, usize)> = None;
                for i in t..m {
                    for j in t..n {
                        let x = &a.data[i][j];
                        if !x.is_zero()
                            && best.is_none_or(|(bi, bj)| x.abs() < a.data[bi][bj].abs())
                        {
                            best = Some((i, j));
                        }
                    }
                }
                let Some((pi, pj)) = best else { break 'outer };
                a.data.swap(t, pi);
                u.data.swap(t, pi);
                a.swap_cols(t, pj);
                v.swap_cols(t, pj);

                let mut clean = true;
                for i in t + 1..m {
                    if !a.data[i][t].is_zero() {
                        let q = -(&a.data[i][t] / &a.data[t][t]);
                        a.add_row(i, t, &q);
                        u.add_row(i, t, &q);
                        clean &= a.data[i][t].is_zero();
                    }
                }
                for j in t + 1..n {
                    if !a.data[t][j].is_zero() {
                        let q = -(&a.data[t][j] / &a.data[t][t]);
                        a.add_col(j, t, &q);
                        v.add_col(j, t, &q);
                        clean &= a.data[t][j].is_zero();
                    }
                }
                if !clean {
                    continue;
                }
                let piv = a.data[t][t].clone();
                let bad =
                    (t + 1..m).find(|&i| (t + 1..n).any(|j| !(&a.data[i][j] % &piv).is_zero()));
                match bad {
                    Some(i) => {
                        a.add_row(t, i, &BigInt::one());
                        u.add_row(t, i, &BigInt::one());
                    }
                    None => break,
                }
            }
            if a.data[t][t].is_negative() {
                for x in &mut a.data[t] {
                    *x = -&*x;
                }
                for x in &mut u.data[t] {
                    *x = -&*x;
                }
            }
            t += 1;
        }
        let diag: Vec<BigInt> = (0..m.min(n)).map(|i| a.data[i][i].clone()).collect();
        let rank = diag.iter().take_while(|d| !d.is_zero()).count();
        Smith { u, v, diag, rank }
    }

    /// An integer solution of `A x = b`, if one exists.
    pub fn solve_int(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        self.smith().solve(b)
    }

    /// A Z-basis of the integer kernel.
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        self.smith().kernel_basis()
    }

    /// Exact inverse over Q, `None` if singular.
    pub fn inverse_rational(&self) -> Option<Vec<Vec<BigRational>>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut row: Vec<BigRational> = self.data[i]
                    .iter()
                    .map(|x| BigRational::from_integer(x.clone()))
                    .collect();
                row.extend((0..n).map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                }));
                row
            })
            .collect();
        for col in 0..n {
            let p = (col..n).find(|&i| !a[i][col].is_zero())?;
            a.swap(col, p);
            let piv = a[col][col].clone();
            for x in &mut a[col] {
                *x /= &piv;
            }
            for i in 0..n {
                if i != col && !a[i][col].is_zero() {
                    let f = a[i][col].clone();
                    for j in col..2 * n {
                        let v = &f * &a[col][j];
                        a[i][j] -= v;
                    }
                }
            }
        }
        Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
    }

    /// Exact integer inverse, `None` unless the matrix is unimodular.
    pub fn inverse_int(&self) -> Option<IntMatrix> {
        let inv = self.inverse_rational()?;
        if inv.iter().flatten().any(|x| !x.is_integer()) {
            return None;
        }
        Some(Self::from_fn(self.rows, self.cols, |i, j| {
            inv[i][j].to_integer()
        }))
    }
}

/// Result of [`IntMatrix::smith`]: `u · a · v` is diagonal with entries `diag`,
/// each dividing the next; the first `rank` are nonzero.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub diag: Vec<BigInt>,
    pub rank: usize,
}

impl Smith {
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        let ub = self.u.mul_vec(b);
        let n = self.v.rows();
        let mut y = vec![BigInt::zero(); n];
        for (i, c) in ub.iter().enumerate() {
            if i < self.rank {
                let d = &self.diag[i];
                if !(c % d).is_zero() {
                    return None;
                }
                y[i] = c / d;
            } else if !c.is_zero() {
                return None;
            }
        }
        Some(self.v.mul_vec(&y))
    }

    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        (self.rank..self.v.cols())
            .map(|j| self.v.column(j))
            .collect()
    }

    /// Invariant factors different from 1.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diag[..self.rank]
            .iter()
            .filter(|d| !d.is_one())
            .cloned()
            .collect()
    }
}
