//! Dense complex linear algebra on boundary-sized blocks, backed by faer.

use faer::linalg::matmul::matmul;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type DenseMatrix = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigendecomposition A = V diag(λ) V† of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl HermitianEigen {
    pub fn new(a: MatRef<'_, C64>) -> Result<Self> {
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::NumericalFailure {
            message: format!("hermitian eigendecomposition did not converge: {e:?}"),
            residual: f64::NAN,
        })?;
        let s = evd.S().column_vector();
        let values = (0..a.nrows()).map(|i| s[i].re).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// V diag(f(λ)) V†.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> DenseMatrix {
        let d = self.dim();
        let v = &self.vectors;
        let w = Mat::<C64>::from_fn(d, d, |i, j| v[(i, j)] * f(self.values[j]));
        mul(w.as_ref(), v.adjoint())
    }

    /// exp(scale · A).
    pub fn exp(&self, scale: C64) -> DenseMatrix {
        self.apply_fn(|l| (scale * l).exp())
    }

    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Taylor degree and per-factor norm bound for [`expm`]; `1/(DEGREE+1)! < 1e-18`.
const EXPM_DEGREE: usize = 19;
const EXPM_THETA: f64 = 1.0;

/// `exp(A)` for a general square matrix by scaling and squaring with a truncated
/// Taylor series in Paterson-Stockmeyer form.
pub fn expm(a: MatRef<'_, C64>) -> DenseMatrix {
    let d = a.nrows();
    let norm1 = (0..d).map(|j| (0..d).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > EXPM_THETA { (norm1 / EXPM_THETA).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let x = Mat::<C64>::from_fn(d, d, |i, j| a[(i, j)] * scale);
    let x2 = mul(x.as_ref(), x.as_ref());
    let x3 = mul(x2.as_ref(), x.as_ref());
    let x4 = mul(x2.as_ref(), x2.as_ref());
    let mut coeff = [0.0; EXPM_DEGREE + 1];
    coeff[0] = 1.0;
    for k in 1..=EXPM_DEGREE {
        coeff[k] = coeff[k - 1] / k as f64;
    }
    let chunk = |j: usize| {
        let c = &coeff[4 * j..4 * j + 4];
        Mat::<C64>::from_fn(d, d, |r, s| {
            let id = if r == s { c[0] } else { 0.0 };
            x[(r, s)] * c[1] + x2[(r, s)] * c[2] + x3[(r, s)] * c[3] + id
        })
    };
    let chunks = (EXPM_DEGREE + 1) / 4;
    let mut r = chunk(chunks - 1);
    let mut tmp = Mat::<C64>::zeros(d, d);
    for j in (0..chunks - 1).rev() {
        mul_into(tmp.as_mut(), r.as_ref(), x4.as_ref());
        r = chunk(j);
        r += &tmp;
    }
    for _ in 0..squarings {
        mul_into(tmp.as_mut(), r.as_ref(), r.as_ref());
        std::mem::swap(&mut r, &mut tmp);
    }
    r
}

pub fn mul<A, B>(a: MatRef<'_, A>, b: MatRef<'_, B>) -> DenseMatrix
where
    A: Conjugate<Canonical = C64>,
    B: Conjugate<Canonical = C64>,
{
    let mut out = Mat::<C64>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    out
}

pub fn mul_into<A, B>(dst: MatMut<'_, C64>, a: MatRef<'_, A>, b: MatRef<'_, B>)
where
    A: Conjugate<Canonical = C64>,
    B: Conjugate<Canonical = C64>,
{
    matmul(dst, Accum::Replace, a, b, ONE, Par::Seq);
}

pub fn identity(d: usize) -> DenseMatrix {
    Mat::<C64>::from_fn(d, d, |i, j| if i == j { ONE } else { ZERO })
}

/// max |A − A†|.
pub fn hermiticity_defect(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0_f64;
    for i in 0..n {
        for j in 0..=i {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// ½ Σ |eig(ρ − σ)| for Hermitian ρ, σ.
pub fn trace_distance(rho: MatRef<'_, C64>, sigma: MatRef<'_, C64>) -> Result<f64> {
    let n = rho.nrows();
    let diff = Mat::<C64>::from_fn(n, n, |i, j| rho[(i, j)] - sigma[(i, j)]);
    let e = HermitianEigen::new(diff.as_ref())?;
    Ok(0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨x|y⟩, antilinear in x.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

pub fn distance(x: &[C64], y: &[C64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalues and eigenvectors of a real symmetric tridiagonal matrix.
pub fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure {
            message: format!("tridiagonal eigendecomposition failed: {e:?}"),
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    Ok(((0..m).map(|i| s[i]).collect(), evd.U().to_owned()))
}
