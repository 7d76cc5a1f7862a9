//! State families and the JSON state-spec format.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{BipartiteShape, DensityMatrix, MatC, UnitaryOperator, C64, TRACE_TOL};
use crate::rng;

/// Purity tolerance for "this state is pure".
pub const PURITY_TOL: f64 = 1e-9;

/// Schmidt weights of a pure bipartite state.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpec {
    lambdas: Vec<f64>,
}

impl SchmidtSpec {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::InvalidSchmidt(format!(
                "need at least 2 coefficients, got {}",
                lambdas.len()
            )));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidSchmidt(format!(
                "coefficient {bad} is negative or not finite"
            )));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidSchmidt(format!("coefficients sum to {sum}")));
        }
        Ok(Self { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn d(&self) -> usize {
        self.lambdas.len()
    }

    /// sum_j sqrt(lambda_j) |j>|j>
    pub fn state_vector(&self) -> Vec<C64> {
        let d = self.d();
        let mut psi = vec![C64::new(0.0, 0.0); d * d];
        for (j, l) in self.lambdas.iter().enumerate() {
            psi[j * d + j] = C64::new(l.sqrt(), 0.0);
        }
        psi
    }
}

pub fn make_pure_schmidt(spec: &SchmidtSpec) -> (DensityMatrix, BipartiteShape) {
    let d = spec.d();
    let shape = BipartiteShape::square(d).expect("schmidt spec has d >= 2");
    let psi = spec.state_vector();
    (DensityMatrix::from_trusted(MatC::outer(&psi, &psi)), shape)
}

fn check_d(d: usize) -> Result<BipartiteShape> {
    BipartiteShape::square(d)
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// |Phi+> = sum_j |jj> / sqrt(d)
pub fn max_entangled_vector(d: usize) -> Vec<C64> {
    let amp = 1.0 / (d as f64).sqrt();
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        psi[j * d + j] = C64::new(amp, 0.0);
    }
    psi
}

pub fn make_max_entangled(d: usize) -> Result<DensityMatrix> {
    check_d(d)?;
    let psi = max_entangled_vector(d);
    Ok(DensityMatrix::from_trusted(MatC::outer(&psi, &psi)))
}

/// SWAP operator F = sum_ij |i><j| (x) |j><i| on d x d.
pub fn swap_operator(d: usize) -> UnitaryOperator {
    let n = d * d;
    let f = MatC::from_fn(n, n, |r, c| {
        let (i, j) = (r / d, r % d);
        if c == j * d + i {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    UnitaryOperator::new(f).expect("permutation matrix is unitary")
}

/// x Q_s + (1 - x) Q_a with unit-trace Q_s = (I + F)/(d(d+1)), Q_a = (I - F)/(d(d-1)).
pub fn make_werner(d: usize, x: f64) -> Result<DensityMatrix> {
    check_d(d)?;
    check_x(x)?;
    let n = d * d;
    let df = d as f64;
    let id = MatC::identity(n);
    let f = swap_operator(d).matrix().clone();
    let qs = id.add(&f)?.scale_real(1.0 / (df * (df + 1.0)));
    let qa = id.sub(&f)?.scale_real(1.0 / (df * (df - 1.0)));
    Ok(DensityMatrix::from_trusted(
        qs.scale_real(x).add(&qa.scale_real(1.0 - x))?,
    ))
}

/// x |Phi+><Phi+| + (1 - x) I/d^2. Separable iff x <= 1/(d+1).
pub fn make_isotropic(d: usize, x: f64) -> Result<DensityMatrix> {
    check_d(d)?;
    check_x(x)?;
    let phi = make_max_entangled(d)?;
    let n = d * d;
    let noise = MatC::identity(n).scale_real((1.0 - x) / n as f64);
    Ok(DensityMatrix::from_trusted(
        phi.matrix().scale_real(x).add(&noise)?,
    ))
}

pub fn isotropic_is_separable(d: usize, x: f64) -> bool {
    x <= 1.0 / (d as f64 + 1.0)
}

/// x |Phi+><Phi+| + (1 - x)/d sum_j |jj><jj|, negativity x(d-1)/2.
pub fn make_cna(d: usize, x: f64) -> Result<DensityMatrix> {
    check_d(d)?;
    check_x(x)?;
    let phi = make_max_entangled(d)?;
    let n = d * d;
    let classical = MatC::from_fn(n, n, |r, c| {
        if r == c && r / d == r % d {
            C64::new((1.0 - x) / d as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(DensityMatrix::from_trusted(
        phi.matrix().scale_real(x).add(&classical)?,
    ))
}

/// Serializable description of a bipartite state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    PureSchmidt {
        lambdas: Vec<f64>,
    },
    MaxEntangled {
        d: usize,
    },
    Werner {
        d: usize,
        x: f64,
    },
    Isotropic {
        d: usize,
        x: f64,
    },
    Cna {
        d: usize,
        x: f64,
    },
    Dense {
        #[serde(rename = "dA")]
        da: usize,
        #[serde(rename = "dB")]
        db: usize,
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        im: Vec<Vec<f64>>,
    },
    Ensemble {
        weights: Vec<f64>,
        members: Vec<StateSpec>,
    },
}

/// A validated state together with its shape and, for ensemble specs, the
/// decomposition it was mixed from.
#[derive(Clone, Debug)]
pub struct PreparedState {
    pub rho: DensityMatrix,
    pub shape: BipartiteShape,
    pub ensemble: Option<Vec<(f64, DensityMatrix)>>,
}

impl StateSpec {
    pub fn prepare(&self) -> Result<PreparedState> {
        let plain = |rho: DensityMatrix, shape| PreparedState {
            rho,
            shape,
            ensemble: None,
        };
        match self {
            StateSpec::PureSchmidt { lambdas } => {
                let (rho, shape) = make_pure_schmidt(&SchmidtSpec::new(lambdas.clone())?);
                Ok(plain(rho, shape))
            }
            StateSpec::MaxEntangled { d } => Ok(plain(make_max_entangled(*d)?, check_d(*d)?)),
            StateSpec::Werner { d, x } => Ok(plain(make_werner(*d, *x)?, check_d(*d)?)),
            StateSpec::Isotropic { d, x } => Ok(plain(make_isotropic(*d, *x)?, check_d(*d)?)),
            StateSpec::Cna { d, x } => Ok(plain(make_cna(*d, *x)?, check_d(*d)?)),
            StateSpec::Dense { da, db, re, im } => {
                let shape = BipartiteShape::new(*da, *db)?;
                let mat = if im.is_empty() {
                    let zeros: Vec<Vec<f64>> = re.iter().map(|r| vec![0.0; r.len()]).collect();
                    MatC::from_real_imag(re, &zeros)?
                } else {
                    MatC::from_real_imag(re, im)?
                };
                if mat.rows() != shape.dim() || mat.cols() != shape.dim() {
                    return Err(Error::mismatch(
                        "dense state",
                        format!("{0}x{0}", shape.dim()),
                        format!("{}x{}", mat.rows(), mat.cols()),
                    ));
                }
                Ok(plain(DensityMatrix::new(mat)?, shape))
            }
            StateSpec::Ensemble { weights, members } => {
                if weights.len() != members.len() || members.is_empty() {
                    return Err(Error::InvalidEnsemble(format!(
                        "{} weights for {} members",
                        weights.len(),
                        members.len()
                    )));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > TRACE_TOL || weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidEnsemble(format!(
                        "weights must be non-negative and sum to 1 (sum {sum})"
                    )));
                }
                let mut parts = Vec::with_capacity(members.len());
                let mut shape = None;
                for member in members {
                    let p = member.prepare()?;
                    if p.ensemble.is_some() {
                        return Err(Error::InvalidEnsemble(
                            "nested ensembles are not supported".into(),
                        ));
                    }
                    if !p.rho.is_pure(PURITY_TOL) {
                        return Err(Error::InvalidEnsemble(format!(
                            "members must be pure (purity {})",
                            p.rho.purity()
                        )));
                    }
                    match shape {
                        None => shape = Some(p.shape),
                        Some(s) if s != p.shape => {
                            return Err(Error::InvalidEnsemble(
                                "members have different shapes".into(),
                            ))
                        }
                        _ => {}
                    }
                    parts.push(p.rho);
                }
                let refs: Vec<(f64, &DensityMatrix)> =
                    weights.iter().copied().zip(parts.iter()).collect();
                let rho = DensityMatrix::mixture(&refs)?;
                Ok(PreparedState {
                    rho,
                    shape: shape.expect("non-empty"),
                    ensemble: Some(weights.iter().copied().zip(parts).collect()),
                })
            }
        }
    }
}

pub fn parse_state_spec(text: &str) -> Result<PreparedState> {
    let spec: StateSpec = serde_json::from_str(text)?;
    spec.prepare()
}

fn gaussian_complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector in C^n.
pub fn random_unit_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng::stream(seed, 0x7075_7265);
    let v: Vec<C64> = (0..n).map(|_| gaussian_complex(&mut r)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Haar-random pure state on a d x d bipartite space.
pub fn random_pure(d: usize, seed: u64) -> Result<DensityMatrix> {
    check_d(d)?;
    let psi = random_unit_vector(d * d, seed);
    Ok(DensityMatrix::from_trusted(MatC::outer(&psi, &psi)))
}

/// Schmidt weights drawn uniformly from the probability simplex.
pub fn random_schmidt(d: usize, seed: u64) -> Result<SchmidtSpec> {
    check_d(d)?;
    let mut r = rng::stream(seed, 0x7363_686d);
    let w: Vec<f64> = (0..d)
        .map(|_| gaussian_complex(&mut r).norm_sqr())
        .collect();
    let total: f64 = w.iter().sum();
    SchmidtSpec::new(w.into_iter().map(|x| x / total).collect())
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> UnitaryOperator {
    let mut r = rng::stream(seed, 0x756e_6974);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian_complex(&mut r)).collect();
        // Two passes of modified Gram-Schmidt keep orthogonality at 1e-15.
        for _ in 0..2 {
            for c in &cols {
                let overlap: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= overlap * ci;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    UnitaryOperator::new(MatC::from_fn(n, n, |i, j| cols[j][i])).expect("orthonormal columns")
}

/// Random Hermitian matrix (M + M^dagger)/2 with Gaussian entries.
pub fn random_hermitian(n: usize, seed: u64) -> MatC {
    let mut r = rng::stream(seed, 0x6865_726d);
    let m = MatC::from_fn(n, n, |_, _| gaussian_complex(&mut r));
    let h = m.add(&m.dagger()).expect("square");
    h.scale_real(0.5)
}

/// Random ensemble of `k` Haar pure states on d x d with random weights.
pub fn random_ensemble(d: usize, k: usize, seed: u64) -> Result<Vec<(f64, DensityMatrix)>> {
    check_d(d)?;
    let mut r = rng::stream(seed, 0x656e_736d);
    let raw: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    (0..k)
        .map(|i| {
            Ok((
                raw[i] / total,
                random_pure(d, rng::derive_seed(seed, i as u64 + 1))?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{partial_trace, Subsystem};

    #[test]
    fn schmidt_product_and_bell() {
        let (rho, _) = make_pure_schmidt(&SchmidtSpec::new(vec![1.0, 0.0]).unwrap());
        assert!(
            rho.matrix()
                .max_abs_diff(&MatC::diag_real(&[1.0, 0.0, 0.0, 0.0]))
                < 1e-15
        );
        let (bell, _) = make_pure_schmidt(&SchmidtSpec::new(vec![0.5, 0.5]).unwrap());
        assert!(
            bell.matrix()
                .max_abs_diff(make_max_entangled(2).unwrap().matrix())
                < 1e-15
        );
    }

    #[test]
    fn schmidt_validation() {
        assert!(SchmidtSpec::new(vec![0.5, 0.6]).is_err());
        assert!(SchmidtSpec::new(vec![1.5, -0.5]).is_err());
        assert!(SchmidtSpec::new(vec![1.0]).is_err());
    }

    #[test]
    fn werner_extremes() {
        // x = 0, d = 2 is the singlet projector
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = [
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
            C64::new(-s, 0.0),
            C64::new(0.0, 0.0),
        ];
        let w0 = make_werner(2, 0.0).unwrap();
        assert!(w0.matrix().max_abs_diff(&MatC::outer(&singlet, &singlet)) < 1e-15);
        let w1 = make_werner(2, 1.0).unwrap();
        assert!((w1.matrix().trace().re - 1.0).abs() < 1e-15);
        let f = swap_operator(2);
        let expected = MatC::identity(4)
            .add(f.matrix())
            .unwrap()
            .scale_real(1.0 / 6.0);
        assert!(w1.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn isotropic_diagonal_entry() {
        let rho = make_isotropic(3, 0.5).unwrap();
        // <jj|rho|jj> = x/d + (1-x)/d^2 = 1/6 + 1/18
        assert!((rho.matrix()[(4, 4)].re - 2.0 / 9.0).abs() < 1e-15);
        assert!(isotropic_is_separable(3, 0.25) && !isotropic_is_separable(3, 0.26));
    }

    #[test]
    fn x_out_of_range() {
        for make in [make_werner, make_isotropic, make_cna] {
            let err = make(2, 1.5).unwrap_err();
            assert!(err.to_string().contains("x out of range"), "{err}");
        }
    }

    #[test]
    fn max_entangled_marginals() {
        let rho = make_max_entangled(3).unwrap();
        let shape = BipartiteShape::square(3).unwrap();
        let ra = partial_trace(&rho, shape, Subsystem::A).unwrap();
        assert!((ra.purity() - 1.0 / 3.0).abs() < 1e-15);
        for j in 0..3 {
            assert!((rho.matrix()[(j * 4, j * 4)].re - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn parse_examples() {
        let p = parse_state_spec(r#"{"kind":"pure_schmidt","lambdas":[0.5,0.25,0.25]}"#).unwrap();
        assert_eq!(p.shape.dim(), 9);
        let p = parse_state_spec(r#"{"kind":"werner","d":2,"x":0.3}"#).unwrap();
        assert!(
            p.rho
                .matrix()
                .max_abs_diff(make_werner(2, 0.3).unwrap().matrix())
                < 1e-15
        );
        let err = parse_state_spec(r#"{"kind":"werner","d":2,"x":1.5}"#).unwrap_err();
        assert!(err.to_string().contains("x out of range"));
        let err = parse_state_spec(
            r#"{"kind":"dense","dA":2,"dB":2,"re":[[0.5,0,0,0],[0,0.4,0,0],[0,0,0,0],[0,0,0,0]]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("trace"), "{err}");
        assert!(matches!(
            parse_state_spec("{not json"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn ensemble_keeps_decomposition() {
        let p = parse_state_spec(
            r#"{"kind":"ensemble","weights":[0.5,0.5],"members":[
                {"kind":"pure_schmidt","lambdas":[1.0,0.0]},
                {"kind":"pure_schmidt","lambdas":[0.0,1.0]}]}"#,
        )
        .unwrap();
        assert_eq!(p.ensemble.as_ref().unwrap().len(), 2);
        assert!(
            p.rho
                .matrix()
                .max_abs_diff(&MatC::diag_real(&[0.5, 0.0, 0.0, 0.5]))
                < 1e-15
        );
        let err = parse_state_spec(
            r#"{"kind":"ensemble","weights":[0.7,0.5],"members":[
                {"kind":"max_entangled","d":2},{"kind":"max_entangled","d":2}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidEnsemble(_)));
        let err = parse_state_spec(
            r#"{"kind":"ensemble","weights":[1.0],"members":[{"kind":"werner","d":2,"x":0.5}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidEnsemble(_)));
    }

    #[test]
    fn random_pure_reproducible() {
        let a = random_pure(3, 7).unwrap();
        let b = random_pure(3, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.purity() - 1.0).abs() < 1e-12);
        assert_ne!(a, random_pure(3, 8).unwrap());
    }
}
