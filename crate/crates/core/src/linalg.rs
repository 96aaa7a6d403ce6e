//! Dense complex vectors and operators, and the propagator `e^{-iHt}` for small
//! non-Hermitian generators.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Eigenvector matrices with a larger condition number fall back to Padé.
pub const EIGEN_COND_LIMIT: f64 = 1e6;

/// Tolerance used for "decay only" checks on anti-Hermitian parts.
pub const DISSIPATIVE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(DVector<C64>);

impl ComplexVector {
    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn unit(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Self {
        Self(DVector::from_vec(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self(DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| C64::new(a, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn iter(&self) -> impl Iterator<Item = &C64> {
        self.0.iter()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    /// Unit-norm copy, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sq().sqrt();
        if n == 0.0 || !n.is_finite() {
            None
        } else {
            Some(self.scaled(C64::new(1.0 / n, 0.0)))
        }
    }

}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

pub fn norm_sq(v: &ComplexVector) -> f64 {
    v.norm_sq()
}

/// `⟨u|v⟩`, conjugate-linear in `u`.
pub fn overlap(u: &ComplexVector, v: &ComplexVector) -> Result<C64> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.0.dotc(&v.0))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.0[(i, i)] = d;
        }
        m
    }

    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        check_dim(entries.nrows(), entries.ncols())?;
        Ok(Self(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.0[(row, col)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.dim(), v.dim())?;
        Ok(ComplexVector(&self.0 * &v.0))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_deviation(&self, other: &OperatorMatrix) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> OperatorMatrix {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Largest eigenvalue of the Hermitian matrix `(H − H†)/(2i)`.
    ///
    /// For `H = A − iB` with `A`, `B` Hermitian this is `−λ_min(B)`, so it is
    /// non-positive exactly when the generator only removes norm.
    pub fn antihermitian_max_eigenvalue(&self) -> f64 {
        let k = (&self.0 - self.0.adjoint()) * C64::new(0.0, -0.5);
        let k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
        k.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn antihermitian_part_negative(&self) -> bool {
        self.antihermitian_max_eigenvalue() <= DISSIPATIVE_TOL
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<C64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: C64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpmMethod {
    /// Hermitian part diagonalized, anti-Hermitian part a multiple of the identity.
    Unitary,
    Eigen,
    Pade,
}

#[derive(Clone, Debug)]
enum Decomposition {
    Spectral {
        values: DVector<C64>,
        vectors: DMatrix<C64>,
        inverse: DMatrix<C64>,
    },
    Pade,
}

/// Reusable `t ↦ e^{-iHt}` for a fixed generator `H`.
#[derive(Clone, Debug)]
pub struct Propagator {
    generator: DMatrix<C64>,
    method: ExpmMethod,
    decomposition: Decomposition,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::NonFinite("generator"));
        }
        if let Some(p) = Self::unitary(h) {
            return Ok(p);
        }
        if let Some(p) = Self::eigen(h) {
            return Ok(p);
        }
        Ok(Self::pade(h))
    }

    pub fn with_method(h: &OperatorMatrix, method: ExpmMethod) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::NonFinite("generator"));
        }
        let p = match method {
            ExpmMethod::Unitary => Self::unitary(h),
            ExpmMethod::Eigen => Self::eigen(h),
            ExpmMethod::Pade => Some(Self::pade(h)),
        };
        p.ok_or_else(|| Error::domain(format!("{method:?} decomposition not applicable")))
    }

    pub fn method(&self) -> ExpmMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    fn pade(h: &OperatorMatrix) -> Self {
        Self {
            generator: h.0.clone(),
            method: ExpmMethod::Pade,
            decomposition: Decomposition::Pade,
        }
    }

    fn unitary(h: &OperatorMatrix) -> Option<Self> {
        let n = h.dim();
        let skew = (&h.0 - h.0.adjoint()) * C64::new(0.0, -0.5);
        let shift = skew.diagonal().iter().map(|d| d.re).sum::<f64>() / n.max(1) as f64;
        let scale = h.0.iter().map(|a| a.norm()).fold(1.0, f64::max);
        let uniform = skew.iter().enumerate().all(|(idx, a)| {
            let (r, c) = (idx % n, idx / n);
            let target = if r == c { C64::new(shift, 0.0) } else { C64::new(0.0, 0.0) };
            (a - target).norm() <= 1e-14 * scale
        });
        if !uniform {
            return None;
        }
        let herm = (&h.0 + h.0.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let values = eig.eigenvalues.map(|e| C64::new(e, shift));
        let inverse = eig.eigenvectors.adjoint();
        Some(Self {
            generator: h.0.clone(),
            method: ExpmMethod::Unitary,
            decomposition: Decomposition::Spectral {
                values,
                vectors: eig.eigenvectors,
                inverse,
            },
        })
    }

    fn eigen(h: &OperatorMatrix) -> Option<Self> {
        let n = h.dim();
        let schur = nalgebra::linalg::Schur::try_new(h.0.clone(), 1e-15, 10_000)?;
        let (q, t) = schur.unpack();
        let tnorm = t.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);
        let mut y = DMatrix::<C64>::zeros(n, n);
        for k in 0..n {
            y[(k, k)] = C64::new(1.0, 0.0);
            let lambda = t[(k, k)];
            for j in (0..k).rev() {
                let mut s = C64::new(0.0, 0.0);
                for i in j + 1..=k {
                    s += t[(j, i)] * y[(i, k)];
                }
                let mut d = t[(j, j)] - lambda;
                if d.norm() < smin {
                    d = C64::new(smin, 0.0);
                }
                y[(j, k)] = -s / d;
            }
        }
        let mut vectors = q * y;
        for mut col in vectors.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= C64::new(norm, 0.0);
            }
        }
        let sv = vectors.clone().singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let cond = smax / smallest;
        if !cond.is_finite() || cond >= EIGEN_COND_LIMIT {
            return None;
        }
        let inverse = vectors.clone().try_inverse()?;
        Some(Self {
            generator: h.0.clone(),
            method: ExpmMethod::Eigen,
            decomposition: Decomposition::Spectral {
                values: t.diagonal(),
                vectors,
                inverse,
            },
        })
    }

    /// `e^{-iHt}` as a matrix.
    pub fn matrix(&self, t: f64) -> Result<OperatorMatrix> {
        check_time(t)?;
        let m = match &self.decomposition {
            Decomposition::Spectral {
                values,
                vectors,
                inverse,
            } => {
                let phases = values.map(|l| (-I * l * t).exp());
                let mut scaled = vectors.clone();
                for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
                    col *= *p;
                }
                scaled * inverse
            }
            Decomposition::Pade => expm(&(&self.generator * (-I * t))),
        };
        let m = OperatorMatrix(m);
        if !m.is_finite() {
            return Err(Error::NonFinite("propagator"));
        }
        Ok(m)
    }

    /// `e^{-iHt} v`.
    pub fn apply(&self, t: f64, v: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.dim(), v.dim())?;
        check_time(t)?;
        let out = match &self.decomposition {
            Decomposition::Spectral {
                values,
                vectors,
                inverse,
            } => {
                let mut coeffs = inverse * &v.0;
                for (c, l) in coeffs.iter_mut().zip(values.iter()) {
                    *c *= (-I * l * t).exp();
                }
                ComplexVector(vectors * coeffs)
            }
            Decomposition::Pade => ComplexVector(expm(&(&self.generator * (-I * t))) * &v.0),
        };
        if !out.is_finite() {
            return Err(Error::NonFinite("propagated state"));
        }
        Ok(out)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    if t < 0.0 {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// `e^{-iHt} v` in one call.
pub fn expm_apply(h: &OperatorMatrix, t: f64, v: &ComplexVector) -> Result<ComplexVector> {
    check_dim(h.dim(), v.dim())?;
    if !v.is_finite() {
        return Err(Error::NonFinite("input state"));
    }
    Propagator::new(h)?.apply(t, v)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// `e^A` by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(0.5f64.powi(s), 0.0);
    let b = PADE13.map(|x| C64::new(x, 0.0));
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).unwrap_or_else(|| DMatrix::from_element(n, n, C64::new(f64::NAN, 0.0)));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Integrals `G = ∫₀ᵀ e^{iH†s} Q e^{-iHs} ds` for several weights `Q` and one `H`.
///
/// `⟨ψ|G|ψ⟩` is the probability of a jump with `O†O = Q` during `[0, T]`.
pub fn decay_integrals(h: &OperatorMatrix, weights: &[&OperatorMatrix], t: f64) -> Result<Vec<OperatorMatrix>> {
    Propagator::new(h)?.decay_integrals(weights, t)
}

/// `(e^z − 1)/z`.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        C64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

impl Propagator {
    /// See [`decay_integrals`]. With a spectral decomposition every exponent decays,
    /// so the integrals are formed in the eigenbasis; otherwise the block-triangular
    /// exponential of `[[−iH†, Q], [0, −iH]]` is used.
    pub fn decay_integrals(&self, weights: &[&OperatorMatrix], t: f64) -> Result<Vec<OperatorMatrix>> {
        check_time(t)?;
        let n = self.dim();
        let mut out = Vec::with_capacity(weights.len());
        for q in weights {
            check_dim(n, q.dim())?;
            let g = match &self.decomposition {
                Decomposition::Spectral { values, vectors, inverse } => {
                    let mut m = vectors.adjoint() * &q.0 * vectors;
                    for j in 0..n {
                        for k in 0..n {
                            let z = I * (values[j].conj() - values[k]) * t;
                            m[(j, k)] *= phi1(z) * t;
                        }
                    }
                    inverse.adjoint() * m * inverse
                }
                Decomposition::Pade => van_loan(&self.generator, &q.0, t),
            };
            let g = OperatorMatrix(g);
            if !g.is_finite() {
                return Err(Error::NonFinite("decay integral"));
            }
            out.push(g);
        }
        Ok(out)
    }
}

/// Upper-right block of `exp([[−iH†, Q], [0, −iH]] T)` is `e^{−iH†T} G`.
fn van_loan(h: &DMatrix<C64>, q: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let x = h * (-I);
    let x_dag = x.adjoint();
    let back = expm(&(&x_dag * C64::new(t, 0.0)));
    let mut big = DMatrix::<C64>::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&(-&x_dag));
    big.view_mut((0, n), (n, n)).copy_from(q);
    big.view_mut((n, n), (n, n)).copy_from(&x);
    let e = expm(&(big * C64::new(t, 0.0)));
    back * e.view((0, n), (n, n))
}
