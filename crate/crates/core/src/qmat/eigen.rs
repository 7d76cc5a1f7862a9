//! Cyclic complex Jacobi eigensolver for small dense Hermitian matrices.
//!
//! Each rotation acts on a (p, q) pair: a diagonal phase makes the pivot
//! real, then a real Givens rotation annihilates it. Sweeps continue until
//! the off-diagonal Frobenius norm drops below [`OFF_DIAGONAL_TOL`].

use super::matrix::{MatC, C64, ONE, ZERO};
use super::types::UnitaryOperator;
use super::HERMITIAN_TOL;
use crate::error::{Error, Result};

pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `h = V diag(values) V^dagger`, values ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: UnitaryOperator,
}

impl Eigh {
    pub fn reconstruct(&self) -> MatC {
        let v = self.vectors.matrix();
        let n = self.values.len();
        MatC::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v.get(i, k) * self.values[k] * v.get(j, k).conj())
                .sum()
        })
    }
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub fn eigh(h: &MatC) -> Result<Eigh> {
    h.require_hermitian(HERMITIAN_TOL)?;
    let n = h.rows();
    // Symmetrize so the rotations see an exactly Hermitian input.
    let mut a: Vec<C64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (h.get(i, j) + h.get(j, i).conj()) * 0.5
        })
        .collect();
    let mut v: Vec<C64> = (0..n * n)
        .map(|idx| if idx / n == idx % n { ONE } else { ZERO })
        .collect();

    let tol = OFF_DIAGONAL_TOL * h.frobenius_norm().max(1.0);
    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a, n);
    while off >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&k| a[k * n + k].re).collect();
    let vectors = MatC::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(Eigh {
        values,
        vectors: UnitaryOperator::new(vectors)?,
    })
}

/// Annihilates a[p][q] with G = D R, where D = diag(.., e^{-i phi} at q, ..)
/// makes the pivot real and R is the real Jacobi rotation.
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let phase = apq / mag;
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // 2x2 block of G in (p, q) coordinates.
    let pc = phase.conj();
    let g = [[C64::new(c, 0.0), C64::new(s, 0.0)], [pc * (-s), pc * c]];

    // A <- A G
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * g[0][0] + akq * g[1][0];
        a[k * n + q] = akp * g[0][1] + akq * g[1][1];
    }
    // A <- G^dagger A
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = g[0][0].conj() * apk + g[1][0].conj() * aqk;
        a[q * n + k] = g[0][1].conj() * apk + g[1][1].conj() * aqk;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
    a[q * n + q] = C64::new(a[q * n + q].re, 0.0);
    // V <- V G
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * g[0][0] + vkq * g[1][0];
        v[k * n + q] = vkp * g[0][1] + vkq * g[1][1];
    }
}

/// `V diag(e^{i theta lambda}) V^dagger` for Hermitian `h`.
pub fn expm_hermitian(h: &MatC, theta: f64) -> Result<UnitaryOperator> {
    let e = eigh(h)?;
    let phases: Vec<C64> = e
        .values
        .iter()
        .map(|&l| C64::from_polar(1.0, theta * l))
        .collect();
    let v = e.vectors.matrix();
    let n = phases.len();
    UnitaryOperator::new(MatC::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| v.get(i, k) * phases[k] * v.get(j, k).conj())
            .sum()
    }))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &MatC) -> Result<f64> {
    Ok(eigh(m)?.values.iter().map(|l| l.abs()).sum())
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(m: &MatC) -> Result<f64> {
    Ok(eigh(m)?
        .values
        .iter()
        .fold(0.0, |acc: f64, l| acc.max(l.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::MatC;

    fn pauli_x() -> MatC {
        MatC::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap()
    }

    #[test]
    fn diagonal_sorted() {
        let e = eigh(&MatC::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = eigh(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&pauli_x()) < 1e-12);
    }

    #[test]
    fn complex_pivot() {
        // Pauli-Y: eigenvalues -1, 1
        let y = MatC::from_rows(&[
            vec![ZERO, C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), ZERO],
        ])
        .unwrap();
        let e = eigh(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = MatC::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]).unwrap();
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&MatC::diag_real(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-15);
        assert!((trace_norm(&MatC::diag_real(&[0.25, 0.75])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expm_at_zero_is_identity() {
        let u = expm_hermitian(&pauli_x(), 0.0).unwrap();
        assert!(u.matrix().max_abs_diff(&MatC::identity(2)) < 1e-15);
    }

    #[test]
    fn expm_pauli_quarter_turn() {
        // e^{i pi/2 X} = i X
        let u = expm_hermitian(&pauli_x(), std::f64::consts::FRAC_PI_2).unwrap();
        let ix = pauli_x().scale(C64::new(0.0, 1.0));
        assert!(u.matrix().max_abs_diff(&ix) < 1e-12);
    }
}
