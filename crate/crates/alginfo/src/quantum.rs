//! POVM validation, measurement-induced distributions, Haar sampling of
//! pure states, and the measurement-information averaging experiment.
//!
//! Linear algebra is implemented in place for the tiny dimensions
//! involved (d ≤ 64): Hermitian eigenvalues come from a Jacobi sweep on
//! the real symmetric embedding of the complex matrix.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::discrete::{discrete_info, SemiMeasure};
use crate::oracle::Oracle;

pub const PSD_TOL: f64 = 1e-9;
pub const COMPLETENESS_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-12;
pub const MAX_DIM: usize = 64;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("operator {index} is not Hermitian (residual {residual:.3e})")]
    NotHermitian { index: usize, residual: f64 },
    #[error("operator {index} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },
    #[error("operators do not sum to the identity (residual {residual:.3e})")]
    Incomplete { residual: f64 },
    #[error("dimension mismatch: operator {index} is {got}×{got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("dimension {0} is not a power of two or exceeds {MAX_DIM}")]
    BadDimension(usize),
    #[error("state has dimension {state}, POVM has {povm}")]
    StateMismatch { state: usize, povm: usize },
    #[error("POVM document parse error: {0}")]
    Format(String),
}

// ---------------------------------------------------------------------------
// Small complex matrices
// ---------------------------------------------------------------------------

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let dim = rows.len();
        let data = rows.into_iter().flatten().collect::<Vec<_>>();
        assert_eq!(data.len(), dim * dim, "square matrix required");
        CMatrix { dim, data }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    /// Projector |v⟩⟨v|.
    pub fn projector(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        m
    }

    pub fn scale(&self, c: f64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == Complex64::zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = self.get(i, j) - self.get(j, i).conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `⟨v| M |v⟩`, real part (exact for Hermitian M).
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim);
        let mut total = Complex64::zero();
        for i in 0..self.dim {
            let mut row = Complex64::zero();
            for j in 0..self.dim {
                row += self.get(i, j) * v[j];
            }
            total += v[i].conj() * row;
        }
        total.re
    }

    /// Eigenvalues of a Hermitian matrix via a Jacobi sweep on the real
    /// symmetric embedding [[X, −Y], [Y, X]] (each eigenvalue doubled).
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let m = 2 * n;
        let mut a = vec![0.0f64; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = self.get(i, j);
                a[i * m + j] = z.re;
                a[(i + n) * m + (j + n)] = z.re;
                a[i * m + (j + n)] = -z.im;
                a[(i + n) * m + j] = z.im;
            }
        }
        jacobi_eigenvalues(&mut a, m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

// ---------------------------------------------------------------------------
// POVMs and states
// ---------------------------------------------------------------------------

/// A finite measurement: positive operators summing to the identity,
/// with bitstring outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub name: String,
    pub operators: Vec<CMatrix>,
    pub labels: Vec<Bits>,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PovmValidation {
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
    pub completeness_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct PovmFile {
    name: String,
    dimension: usize,
    #[serde(rename = "outcomeLabels")]
    outcome_labels: Vec<Bits>,
    /// Complex entries as [re, im] pairs, row-major per operator.
    operators: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Povm {
    pub fn new(name: &str, operators: Vec<CMatrix>, labels: Option<Vec<Bits>>) -> Result<Self, QuantumError> {
        let dim = operators.first().map(|m| m.dim).unwrap_or(0);
        let labels = labels.unwrap_or_else(|| default_labels(operators.len()));
        let povm = Povm {
            name: name.to_string(),
            operators,
            labels,
            dim,
        };
        povm.validate()?;
        Ok(povm)
    }

    /// Projective measurement in the computational basis of n qubits.
    pub fn basis(n_qubits: u32) -> Self {
        let dim = 1usize << n_qubits;
        let operators = (0..dim)
            .map(|k| {
                let mut v = vec![Complex64::zero(); dim];
                v[k] = Complex64::one();
                CMatrix::projector(&v)
            })
            .collect();
        Povm::new(&format!("basis{n_qubits}q"), operators, None).expect("basis POVM is valid")
    }

    /// The two-outcome POVM {I/2, I/2}: measurement that learns nothing.
    pub fn trivial(n_qubits: u32) -> Self {
        let dim = 1usize << n_qubits;
        let half = CMatrix::identity(dim).scale(0.5);
        Povm::new(&format!("trivial{n_qubits}q"), vec![half.clone(), half], None)
            .expect("trivial POVM is valid")
    }

    /// Conjugated POVM {U E U†}.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self, QuantumError> {
        let ud = u.dagger();
        let operators = self
            .operators
            .iter()
            .map(|e| u.matmul(e).matmul(&ud))
            .collect();
        Povm::new(&format!("{}-rotated", self.name), operators, Some(self.labels.clone()))
    }

    pub fn validate(&self) -> Result<PovmValidation, QuantumError> {
        if self.dim == 0 || !self.dim.is_power_of_two() || self.dim > MAX_DIM {
            return Err(QuantumError::BadDimension(self.dim));
        }
        let mut herm = 0.0f64;
        let mut min_eig = f64::INFINITY;
        for (index, e) in self.operators.iter().enumerate() {
            if e.dim != self.dim {
                return Err(QuantumError::DimensionMismatch {
                    index,
                    got: e.dim,
                    expected: self.dim,
                });
            }
            let residual = e.hermiticity_residual();
            if residual > PSD_TOL {
                return Err(QuantumError::NotHermitian { index, residual });
            }
            herm = herm.max(residual);
            let eig = e.min_eigenvalue();
            if eig < -PSD_TOL {
                return Err(QuantumError::NotPositive {
                    index,
                    min_eigenvalue: eig,
                });
            }
            min_eig = min_eig.min(eig);
        }
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(self.dim), |acc, e| acc.add(e));
        let mut residual = 0.0f64;
        let id = CMatrix::identity(self.dim);
        for (a, b) in sum.data.iter().zip(&id.data) {
            residual = residual.max((a - b).norm());
        }
        if residual > COMPLETENESS_TOL {
            return Err(QuantumError::Incomplete { residual });
        }
        Ok(PovmValidation {
            hermiticity_residual: herm,
            min_eigenvalue: min_eig,
            completeness_residual: residual,
        })
    }

    /// Canonical encoding of the POVM document as bits.
    pub fn canonical_encoding(&self) -> Bits {
        Bits::from_bytes(self.to_document().as_bytes())
    }

    pub fn to_document(&self) -> String {
        let file = PovmFile {
            name: self.name.clone(),
            dimension: self.dim,
            outcome_labels: self.labels.clone(),
            operators: self
                .operators
                .iter()
                .map(|m| {
                    (0..m.dim)
                        .map(|i| {
                            (0..m.dim)
                                .map(|j| {
                                    let z = m.get(i, j);
                                    [z.re, z.im]
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("POVM serializes")
    }

    pub fn load(document: &str) -> Result<Self, QuantumError> {
        let file: PovmFile =
            serde_json::from_str(document).map_err(|e| QuantumError::Format(e.to_string()))?;
        let operators = file
            .operators
            .into_iter()
            .map(|rows| {
                CMatrix::from_rows(
                    rows.into_iter()
                        .map(|row| {
                            row.into_iter()
                                .map(|[re, im]| Complex64::new(re, im))
                                .collect()
                        })
                        .collect(),
                )
            })
            .collect();
        Povm::new(&file.name, operators, Some(file.outcome_labels))
    }
}

/// Default labels: binary indices of width ⌈log2 k⌉.
fn default_labels(k: usize) -> Vec<Bits> {
    let width = if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    };
    (0..k)
        .map(|i| {
            let mut b = Bits::empty();
            for pos in (0..width).rev() {
                b.push((i >> pos) & 1 == 1);
            }
            b
        })
        .collect()
}

/// A pure state: unit-norm complex amplitudes with seed provenance.
#[derive(Debug, Clone)]
pub struct PureState {
    pub amplitudes: Vec<Complex64>,
    pub seed: Option<u64>,
}

impl PureState {
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::zero(); dim];
        amplitudes[index] = Complex64::one();
        PureState {
            amplitudes,
            seed: None,
        }
    }

    pub fn from_amplitudes(raw: Vec<Complex64>) -> Self {
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        PureState {
            amplitudes: raw.into_iter().map(|z| z / norm).collect(),
            seed: None,
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Spherically uniform pure state: normalized complex standard normals,
/// deterministic per seed.
pub fn haar_sample(n_qubits: u32, seed: u64) -> PureState {
    let dim = 1usize << n_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let mut state = PureState::from_amplitudes(raw);
    state.seed = Some(seed);
    state
}

/// The outcome distribution `k ↦ ⟨ψ| E_k |ψ⟩` as an exact semi-measure
/// (tiny negative noise clamped, then normalized onto total 1).
pub fn measure_state(povm: &Povm, state: &PureState) -> Result<SemiMeasure, QuantumError> {
    if state.amplitudes.len() != povm.dim {
        return Err(QuantumError::StateMismatch {
            state: state.amplitudes.len(),
            povm: povm.dim,
        });
    }
    let mut raw: Vec<f64> = povm
        .operators
        .iter()
        .map(|e| e.expectation(&state.amplitudes))
        .collect();
    for w in &mut raw {
        if *w < 0.0 {
            debug_assert!(*w > -NORM_TOL, "weight {w} below noise floor");
            *w = 0.0;
        }
    }
    let mut weights: BTreeMap<Bits, BigRational> = BTreeMap::new();
    let mut total = BigRational::zero();
    for (label, w) in povm.labels.iter().zip(&raw) {
        if *w > 0.0 {
            let r = BigRational::from_float(*w).unwrap();
            total += &r;
            *weights.entry(label.clone()).or_insert_with(BigRational::zero) += r;
        }
    }
    if total > BigRational::one() {
        for w in weights.values_mut() {
            *w /= &total;
        }
    }
    Ok(SemiMeasure::new(weights).expect("clamped weights form a semi-measure"))
}

// ---------------------------------------------------------------------------
// The averaging experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct MeasurementExperiment {
    pub samples: usize,
    pub seed: u64,
    /// Mean of `2^{ii(Eψ : Eψ)}` over spherically uniform states.
    pub haar_mean_pow2: f64,
    pub haar_std_err: f64,
    pub haar_max_pow2: f64,
    /// `(label, 2^{ii})` for each computational basis state.
    pub adversarial: Vec<(String, f64)>,
}

/// Empirical mean of the measurement self-information statistic over
/// random states, contrasted with the basis states the measurement is
/// tuned to.
pub fn measurement_info_experiment(
    povm: &Povm,
    samples: usize,
    seed: u64,
    oracle: &Oracle,
) -> Result<MeasurementExperiment, QuantumError> {
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let state = haar_sample(povm.dim.trailing_zeros(), seed ^ (k as u64).wrapping_mul(0x9e3779b9));
        values.push(pow2_self_info(povm, &state, oracle)?);
    }
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(2.0);
    let adversarial = (0..povm.dim)
        .map(|i| {
            let state = PureState::basis_state(povm.dim, i);
            pow2_self_info(povm, &state, oracle)
                .map(|v| (format!("basis-{i}"), v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MeasurementExperiment {
        samples,
        seed,
        haar_mean_pow2: mean,
        haar_std_err: (var / n).sqrt(),
        haar_max_pow2: values.iter().fold(0.0f64, |a, &b| a.max(b)),
        adversarial,
    })
}

fn pow2_self_info(povm: &Povm, state: &PureState, oracle: &Oracle) -> Result<f64, QuantumError> {
    let dist = measure_state(povm, state)?;
    let info = discrete_info(&dist, &dist, oracle);
    Ok(info.finite().map(|v| v.exp2()).unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::machine::DEFAULT_BUDGET;

    fn oracle() -> &'static Oracle {
        static ORACLE: std::sync::OnceLock<Oracle> = std::sync::OnceLock::new();
        ORACLE.get_or_init(|| Oracle::new(fixtures::m2(), 18, DEFAULT_BUDGET).unwrap())
    }

    #[test]
    fn basis_povm_is_valid() {
        let p = Povm::basis(1);
        let report = p.validate().unwrap();
        assert!(report.completeness_residual < 1e-12);
        assert!(report.min_eigenvalue > -1e-12);
        assert!(Povm::trivial(1).validate().is_ok());
    }

    #[test]
    fn incomplete_povm_rejected() {
        let op = CMatrix::from_rows(vec![
            vec![Complex64::one(), Complex64::zero()],
            vec![Complex64::zero(), Complex64::zero()],
        ]);
        let err = Povm::new("bad", vec![op.clone(), op], None);
        assert!(matches!(err, Err(QuantumError::Incomplete { .. })));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut op = CMatrix::identity(2).scale(0.5);
        op.set(0, 1, Complex64::new(0.3, 0.0));
        let other = CMatrix::identity(2).scale(0.5);
        assert!(matches!(
            Povm::new("bad", vec![op, other], None),
            Err(QuantumError::NotHermitian { index: 0, .. })
        ));
    }

    #[test]
    fn negative_operator_rejected() {
        let mut op = CMatrix::zeros(2);
        op.set(0, 0, Complex64::new(1.5, 0.0));
        op.set(1, 1, Complex64::new(-0.5, 0.0));
        let mut rest = CMatrix::zeros(2);
        rest.set(0, 0, Complex64::new(-0.5, 0.0));
        rest.set(1, 1, Complex64::new(1.5, 0.0));
        assert!(matches!(
            Povm::new("bad", vec![op, rest], None),
            Err(QuantumError::NotPositive { .. })
        ));
    }

    #[test]
    fn measure_basis_states() {
        let povm = Povm::basis(1);
        let zero = PureState::basis_state(2, 0);
        let dist = measure_state(&povm, &zero).unwrap();
        assert_eq!(dist, SemiMeasure::point_mass(&"0".parse().unwrap()));

        let plus = PureState::from_amplitudes(vec![Complex64::one(), Complex64::one()]);
        let dist = measure_state(&povm, &plus).unwrap();
        let half = f64_of(&dist.get(&"0".parse().unwrap()));
        assert!((half - 0.5).abs() < 1e-12);

        let trivial = Povm::trivial(1);
        let dist = measure_state(&trivial, &zero).unwrap();
        assert!((f64_of(&dist.get(&"0".parse().unwrap())) - 0.5).abs() < 1e-12);
        assert!((f64_of(&dist.get(&"1".parse().unwrap())) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn haar_samples_are_unit_norm_and_seeded() {
        for seed in [0, 1, 42, 1 << 40] {
            let s = haar_sample(3, seed);
            assert!((s.norm() - 1.0).abs() < NORM_TOL);
        }
        let a = haar_sample(2, 7);
        let b = haar_sample(2, 7);
        assert_eq!(a.amplitudes, b.amplitudes);
        let c = haar_sample(2, 8);
        assert_ne!(a.amplitudes, c.amplitudes);
    }

    #[test]
    fn haar_moment_small_sample() {
        // E[|⟨e_i|ψ⟩|²] = 2^(−n); quick check at loose tolerance, the
        // acceptance suite runs the full 10⁴-sample version
        let n = 2u32;
        let dim = 1usize << n;
        let samples = 600;
        let mut mean = vec![0.0f64; dim];
        for k in 0..samples {
            let s = haar_sample(n, 1000 + k);
            for (i, amp) in s.amplitudes.iter().enumerate() {
                mean[i] += amp.norm_sqr();
            }
        }
        for m in mean {
            let got = m / samples as f64;
            assert!((got - 0.25).abs() < 0.04, "moment {got}");
        }
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        // Pauli X embedded: eigenvalues ±1
        let x = CMatrix::from_rows(vec![
            vec![Complex64::zero(), Complex64::one()],
            vec![Complex64::one(), Complex64::zero()],
        ]);
        let mut eigs = x.hermitian_eigenvalues();
        eigs.sort_by(f64::total_cmp);
        assert!((eigs[0] + 1.0).abs() < 1e-10);
        assert!((eigs[eigs.len() - 1] - 1.0).abs() < 1e-10);

        // Pauli Y has complex entries; eigenvalues still ±1
        let y = CMatrix::from_rows(vec![
            vec![Complex64::zero(), Complex64::new(0.0, -1.0)],
            vec![Complex64::new(0.0, 1.0), Complex64::zero()],
        ]);
        assert!((y.min_eigenvalue() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn trivial_povm_statistic_is_constant() {
        let o = oracle();
        let povm = Povm::trivial(1);
        let exp = measurement_info_experiment(&povm, 24, 5, o).unwrap();
        assert!(exp.haar_std_err < 1e-12);
        assert!((exp.haar_mean_pow2 - exp.haar_max_pow2).abs() < 1e-12);
    }

    #[test]
    fn basis_state_exceeds_haar_mean() {
        let o = oracle();
        let povm = Povm::basis(2);
        let exp = measurement_info_experiment(&povm, 64, 9, o).unwrap();
        let adversarial_max = exp
            .adversarial
            .iter()
            .map(|(_, v)| *v)
            .fold(0.0f64, f64::max);
        assert!(
            adversarial_max > exp.haar_mean_pow2 + 3.0 * exp.haar_std_err,
            "adversarial {adversarial_max} vs haar {} ± {}",
            exp.haar_mean_pow2,
            exp.haar_std_err
        );
    }

    #[test]
    fn povm_document_round_trip() {
        let povm = Povm::basis(2);
        let doc = povm.to_document();
        let again = Povm::load(&doc).unwrap();
        assert_eq!(povm, again);
        assert_eq!(povm.canonical_encoding(), again.canonical_encoding());
    }

    fn f64_of(r: &BigRational) -> f64 {
        use num_traits::ToPrimitive;
        r.to_f64().unwrap()
    }
}
