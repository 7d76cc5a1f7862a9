//! Mutually unbiased bases, stored as unitaries whose columns are the basis vectors.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::qmat::{MatC, UnitaryOperator, C64};

#[derive(Clone, Debug)]
pub struct MubSet {
    d: usize,
    bases: Vec<UnitaryOperator>,
}

impl MubSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[UnitaryOperator] {
        &self.bases
    }

    /// Largest deviation of |<a|b>|^2 from 1/d over vectors of distinct bases.
    pub fn unbiasedness_defect(&self) -> f64 {
        let target = 1.0 / self.d as f64;
        let mut worst: f64 = 0.0;
        for (i, p) in self.bases.iter().enumerate() {
            for q in &self.bases[i + 1..] {
                let overlaps = p
                    .matrix()
                    .dagger()
                    .matmul(q.matrix())
                    .expect("same dimension");
                for z in overlaps.as_slice() {
                    worst = worst.max((z.norm_sqr() - target).abs());
                }
            }
        }
        worst
    }
}

pub fn is_prime(n: usize) -> bool {
    n >= 2
        && (2..)
            .take_while(|k| k * k <= n)
            .all(|k| !n.is_multiple_of(k))
}

/// d + 1 for prime d, otherwise 2 (computational and Fourier only).
pub fn max_mubs(d: usize) -> usize {
    if is_prime(d) {
        d + 1
    } else {
        2
    }
}

fn qubit_bases() -> Vec<MatC> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    let i = C64::new(0.0, s);
    vec![
        MatC::identity(2),
        MatC::from_rows(&[vec![r(s), r(s)], vec![r(s), r(-s)]]).expect("2x2"),
        MatC::from_rows(&[vec![r(s), r(s)], vec![i, -i]]).expect("2x2"),
    ]
}

/// Column j has k-component w^{b k^2 + j k}/sqrt(d); b = 0 is the Fourier basis.
fn quadratic_basis(d: usize, b: usize) -> MatC {
    let norm = 1.0 / (d as f64).sqrt();
    MatC::from_fn(d, d, |k, j| {
        let e = (b * k % d * k + j * k) % d;
        C64::from_polar(norm, TAU * e as f64 / d as f64)
    })
}

pub fn mub_set(d: usize, m: usize) -> Result<MubSet> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: ">= 2",
        });
    }
    let available = max_mubs(d);
    if m == 0 || m > available {
        return Err(Error::MubUnavailable {
            d,
            requested: m,
            available,
        });
    }
    let mats: Vec<MatC> = if d == 2 {
        qubit_bases()
    } else {
        let extra = if is_prime(d) { d } else { 1 };
        std::iter::once(MatC::identity(d))
            .chain((0..extra).map(|b| quadratic_basis(d, b)))
            .collect()
    };
    let bases = mats
        .into_iter()
        .take(m)
        .map(UnitaryOperator::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(MubSet { d, bases })
}
