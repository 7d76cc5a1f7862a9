use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct MatC {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl MatC {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::mismatch(
                "MatC::from_vec",
                format!("{rows}x{cols} nonempty"),
                format!("{} entries", data.len()),
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::mismatch(
                "MatC::from_rows",
                "rectangular rows",
                "ragged rows",
            ));
        }
        Self::from_vec(rows.len(), ncols, rows.concat())
    }

    pub fn from_real_imag(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        if re.len() != im.len() || re.iter().zip(im).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::mismatch(
                "MatC::from_real_imag",
                "re/im of equal shape",
                "different shapes",
            ));
        }
        let rows: Vec<Vec<C64>> = re
            .iter()
            .zip(im)
            .map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| ZERO)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// |v><w|
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    /// The basis projector |k><k| in dimension `n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == k && j == k { ONE } else { ZERO })
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(C64, C64) -> C64,
    ) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::mismatch(
                op,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::mismatch(
                "matmul",
                format!("rhs with {} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = vec![ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            let row = &mut out[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::mismatch("apply", self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Kronecker product, A-major: entry (i*b.rows + k, j*b.cols + l) = a(i,j) * b(k,l).
    pub fn kron(&self, other: &Self) -> Self {
        let (br, bc) = (other.rows, other.cols);
        Self::from_fn(self.rows * br, self.cols * bc, |r, c| {
            self.get(r / br, c / bc) * other.get(r % br, c % bc)
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::mismatch(
                "trace_product",
                format!("{}x{}", self.cols, self.rows),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.get(i, k) * other.get(k, i);
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |m - m^dagger|, infinite for non-square matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub(crate) fn require_hermitian(&self, tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let deviation = self.hermiticity_defect();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for MatC {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for MatC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatC {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
