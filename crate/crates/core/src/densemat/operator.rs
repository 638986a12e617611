use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Which tensor factor survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

impl Operator {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("operator dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} operator", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.data[i * n + i] = ONE;
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Builds an operator from nested real rows; handy in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Column vector `|v⟩`.
    pub fn ket(v: &[C64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    /// Matrix unit `|i⟩⟨j|` on an `n`-dimensional space.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut out = Self::zeros(n, n);
        out.data[i * n + j] = ONE;
        out
    }

    /// `SWAP = Σ_{i,j} |i⟩⟨j| ⊗ |j⟩⟨i|` on `C^d ⊗ C^d`.
    pub fn swap(d: usize) -> Self {
        Self::permutation(d, &[1, 0])
    }

    /// Unnormalized maximally entangled operator `Ω = Σ_{i,j} |ii⟩⟨jj|`.
    pub fn omega(d: usize) -> Self {
        let n = d * d;
        let mut out = Self::zeros(n, n);
        for i in 0..d {
            for j in 0..d {
                out.data[(i * d + i) * n + j * d + j] = ONE;
            }
        }
        out
    }

    /// Operator permuting `k = perm.len()` tensor factors of `C^d`: the
    /// content of input slot `s` ends up in output slot `perm[s]`.
    pub fn permutation(d: usize, perm: &[usize]) -> Self {
        let k = perm.len();
        let n = d.pow(k as u32);
        let mut out = Self::zeros(n, n);
        let mut digits = vec![0usize; k];
        let mut moved = vec![0usize; k];
        for col in 0..n {
            let mut rem = col;
            for slot in (0..k).rev() {
                digits[slot] = rem % d;
                rem /= d;
            }
            for slot in 0..k {
                moved[perm[slot]] = digits[slot];
            }
            let row = moved.iter().fold(0, |acc, &x| acc * d + x);
            out.data[row * n + col] = ONE;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.cols, rhs.rows, "matmul: {}x{} times {}x{}", self.rows, self.cols, rhs.rows, rhs.cols);
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let orow = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &rhs.data[k * p..(k + 1) * p];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Operator { rows: n, cols: p, data: out }
    }

    /// `self · x · self†`.
    pub fn conjugate(&self, x: &Operator) -> Operator {
        self.matmul(x).matmul(&self.adjoint())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Hilbert–Schmidt inner product `Tr[self† · other]`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        assert_eq!((self.rows, self.cols), (other.cols, other.rows));
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * other.data[k * other.cols + i];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `max |self − other|`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint().matmul(self).max_abs_diff(&Operator::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Operator {
        let n = self.rows;
        Operator::from_fn(n, n, |i, j| (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Operator) -> Operator {
        &self.matmul(other) + &other.matmul(self)
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        kron(self, other)
    }
}

/// `a ⊗ b` with `(a⊗b)[(i,k),(j,l)] = a[i,j]·b[k,l]`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let rows = ar * br;
    let cols = ac * bc;
    let mut data = vec![ZERO; rows * cols];
    for i in 0..ar {
        for j in 0..ac {
            let x = a.data[i * ac + j];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..br {
                let row = i * br + k;
                for l in 0..bc {
                    data[row * cols + j * bc + l] = x * b.data[k * bc + l];
                }
            }
        }
    }
    Operator { rows, cols, data }
}

pub fn kron_all(factors: &[&Operator]) -> Operator {
    let mut it = factors.iter();
    let first = (*it.next().expect("kron_all needs at least one factor")).clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

/// Partial trace of a square operator on `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace(o: &Operator, dims: (usize, usize), keep: Keep) -> Result<Operator> {
    let (d1, d2) = dims;
    if !o.is_square() || o.rows != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {d1}x{d2} of a {}x{} operator",
            o.rows, o.cols
        )));
    }
    let n = o.rows;
    let out = match keep {
        Keep::First => Operator::from_fn(d1, d1, |i, j| (0..d2).map(|k| o.data[(i * d2 + k) * n + j * d2 + k]).sum()),
        Keep::Second => Operator::from_fn(d2, d2, |i, j| (0..d1).map(|k| o.data[(k * d2 + i) * n + k * d2 + j]).sum()),
    };
    Ok(out)
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_re(rhs)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.data[i * self.cols + j];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorJson {
    rows: usize,
    cols: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let part = |f: fn(&C64) -> f64| {
            (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().map(f).collect()).collect()
        };
        OperatorJson { rows: self.rows, cols: self.cols, re: part(|z| z.re), im: part(|z| z.im) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = OperatorJson::deserialize(deserializer)?;
        if raw.re.len() != raw.rows || raw.im.len() != raw.rows {
            return Err(D::Error::custom("row count does not match `rows`"));
        }
        let mut data = Vec::with_capacity(raw.rows * raw.cols);
        for (re, im) in raw.re.iter().zip(&raw.im) {
            if re.len() != raw.cols || im.len() != raw.cols {
                return Err(D::Error::custom("column count does not match `cols`"));
            }
            data.extend(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)));
        }
        Operator::new(raw.rows, raw.cols, data).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = Operator::identity(2);
        assert_eq!(kron(&i2, &i2), Operator::identity(4));
    }

    #[test]
    fn kron_of_basis_projectors() {
        let p0 = Operator::unit(2, 0, 0);
        let p1 = Operator::unit(2, 1, 1);
        assert_eq!(kron(&p0, &p1), Operator::unit(4, 1, 1));
    }

    #[test]
    fn swap_exchanges_factors() {
        let swap = Operator::swap(2);
        let ket01 = Operator::ket(&[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let ket10 = Operator::ket(&[c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert_eq!(swap.matmul(&ket01), ket10);
        // also matches the explicit sum Σ|i⟩⟨j|⊗|j⟩⟨i|
        let mut explicit = Operator::zeros(9, 9);
        for i in 0..3 {
            for j in 0..3 {
                explicit += &kron(&Operator::unit(3, i, j), &Operator::unit(3, j, i));
            }
        }
        assert_eq!(Operator::swap(3), explicit);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = Operator::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Operator::from_real_rows(&[&[0.5, 0.0, 1.0], &[0.0, 2.0, 0.0], &[1.0, 0.0, 1.5]]);
        let ab = kron(&a, &b);
        let first = partial_trace(&ab, (2, 3), Keep::First).unwrap();
        let second = partial_trace(&ab, (2, 3), Keep::Second).unwrap();
        assert!(first.max_abs_diff(&a.scale_re(4.0)) < 1e-14);
        assert!(second.max_abs_diff(&b.scale_re(5.0)) < 1e-14);
    }

    #[test]
    fn partial_trace_of_swap_is_identity() {
        // direct 4x4 summation: Tr_1[SWAP]_{ij} = Σ_k SWAP[(k,i),(k,j)]
        let swap = Operator::swap(2);
        let mut expected = Operator::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    expected[(i, j)] += swap[(k * 2 + i, k * 2 + j)];
                }
            }
        }
        assert_eq!(expected, Operator::identity(2));
        assert_eq!(partial_trace(&swap, (2, 2), Keep::Second).unwrap(), expected);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let o = Operator::identity(5);
        assert!(partial_trace(&o, (2, 2), Keep::First).is_err());
        assert!(partial_trace(&Operator::zeros(4, 2), (2, 2), Keep::First).is_err());
    }

    #[test]
    fn new_validates_length() {
        assert!(Operator::new(2, 2, vec![c(1.0); 3]).is_err());
        assert!(Operator::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn permutation_cycles() {
        let d = 2;
        // 3-cycle applied three times is the identity
        let cyc = Operator::permutation(d, &[1, 2, 0]);
        let cube = cyc.matmul(&cyc).matmul(&cyc);
        assert_eq!(cube, Operator::identity(8));
        // transposition of slots 0 and 2 equals γ12 γ23 γ12
        let g12 = kron(&Operator::swap(d), &Operator::identity(d));
        let g23 = kron(&Operator::identity(d), &Operator::swap(d));
        assert_eq!(Operator::permutation(d, &[2, 1, 0]), g12.matmul(&g23).matmul(&g12));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let o = Operator::from_fn(2, 3, |i, j| C64::new(0.1 * i as f64 + 1.0 / 3.0, -(j as f64) / 7.0));
        let s = serde_json::to_string(&o).unwrap();
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(o, back);
        assert!(s.starts_with("{\"rows\":2,\"cols\":3,\"re\":[["));
    }

    #[test]
    fn json_rejects_unknown_fields_and_ragged_rows() {
        let bad = r#"{"rows":1,"cols":1,"re":[[1.0]],"im":[[0.0]],"extra":1}"#;
        assert!(serde_json::from_str::<Operator>(bad).is_err());
        let ragged = r#"{"rows":2,"cols":2,"re":[[1.0,0.0],[0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#;
        assert!(serde_json::from_str::<Operator>(ragged).is_err());
    }
}
