//! Lanczos-based exponential action and extremal eigenvalues for Hermitian operators.

use crate::error::{Error, Result};
use crate::linalg::{self, tridiagonal_eigen, C64, ZERO};
use crate::operator::LinearOperator;

pub const MAX_KRYLOV_DIM: usize = 64;
const MAX_SUBSTEPS: usize = 100_000;

struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual after the last basis vector; zero on invariant subspace.
    tail: f64,
}

fn lanczos(a: &dyn LinearOperator, v0: &[C64], beta0: f64, m: usize) -> Lanczos {
    let mut basis: Vec<Vec<C64>> = vec![v0.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![ZERO; v0.len()];
    let mut tail = 0.0;
    for k in 0..m {
        a.apply_into(&basis[k], &mut w);
        let ak = linalg::inner(&basis[k], &w).re;
        alpha.push(ak);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = linalg::inner(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let b = linalg::norm(&w);
        tail = b;
        let scale = alpha.iter().fold(0.0_f64, |s, x| s.max(x.abs())).max(1.0);
        if b <= 1e-14 * scale || k + 1 == m {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Lanczos { basis, alpha, beta, tail }
}

/// `exp(scale · A) ψ` for Hermitian `A`, accurate to `tol` in 2-norm.
///
/// Substeps shrink until the a-posteriori Krylov error estimate drops below the
/// share of `tol` assigned to that fraction of the interval.
pub fn expm_action(a: &dyn LinearOperator, scale: C64, psi: &[C64], tol: f64) -> Result<Vec<C64>> {
    assert_eq!(a.dim(), psi.len());
    let mut v = psi.to_vec();
    if scale == ZERO {
        return Ok(v);
    }
    let mut remaining = 1.0_f64;
    let mut h = 1.0_f64;
    let mut substeps = 0;
    while remaining > 0.0 {
        substeps += 1;
        if substeps > MAX_SUBSTEPS {
            return Err(Error::NumericalFailure {
                message: "Krylov exponential exceeded the substep budget".into(),
                residual: remaining,
            });
        }
        let beta0 = linalg::norm(&v);
        if beta0 == 0.0 {
            return Ok(v);
        }
        let m = MAX_KRYLOV_DIM.min(a.dim());
        let lz = lanczos(a, &v, beta0, m);
        let (evals, evecs) = tridiagonal_eigen(&lz.alpha, &lz.beta)?;
        let k = lz.alpha.len();
        h = h.min(remaining);
        let coeffs = loop {
            let c: Vec<C64> = (0..k)
                .map(|i| {
                    (0..k).fold(ZERO, |acc, j| acc + (scale * h * evals[j]).exp() * evecs[(i, j)] * evecs[(0, j)])
                })
                .collect();
            let err = beta0 * lz.tail * c[k - 1].norm();
            if err <= tol * h || lz.tail == 0.0 {
                break c;
            }
            h *= 0.5;
            if h < 1e-12 {
                return Err(Error::NumericalFailure {
                    message: "Krylov exponential substep underflow".into(),
                    residual: err,
                });
            }
        };
        v.fill(ZERO);
        for (q, c) in lz.basis.iter().zip(&coeffs) {
            let c = c * beta0;
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi += c * qi);
        }
        remaining -= h;
        if remaining < 1e-15 {
            remaining = 0.0;
        }
        h *= 2.0;
    }
    Ok(v)
}

fn start_vector(dim: usize) -> Vec<C64> {
    let mut s = 0x9E37_79B9_7F4A_7C15_u64;
    (0..dim)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            C64::new(a, b)
        })
        .collect()
}

/// Smallest and largest eigenvalues of a Hermitian operator.
pub fn extremal_eigenvalues(a: &dyn LinearOperator, tol: f64) -> Result<(f64, f64)> {
    let dim = a.dim();
    let v0 = start_vector(dim);
    let b0 = linalg::norm(&v0);
    let mut prev: Option<(f64, f64)> = None;
    let mut m = 20.min(dim);
    loop {
        let lz = lanczos(a, &v0, b0, m);
        let (evals, _) = tridiagonal_eigen(&lz.alpha, &lz.beta)?;
        let cur = (evals[0], evals[evals.len() - 1]);
        let exhausted = lz.alpha.len() < m || m >= dim;
        if let Some(p) = prev {
            let scale = cur.0.abs().max(cur.1.abs()).max(f64::MIN_POSITIVE);
            if ((cur.0 - p.0).abs().max((cur.1 - p.1).abs())) <= tol * scale {
                return Ok(cur);
            }
        }
        if exhausted {
            return Ok(cur);
        }
        if m >= 600 {
            return Err(Error::NumericalFailure {
                message: "Lanczos eigenvalue iteration did not converge".into(),
                residual: prev.map(|p| (cur.1 - p.1).abs()).unwrap_or(f64::NAN),
            });
        }
        prev = Some(cur);
        m = (m + 20).min(dim);
    }
}

pub fn spectral_norm(a: &dyn LinearOperator, tol: f64) -> Result<f64> {
    let (lo, hi) = extremal_eigenvalues(a, tol)?;
    Ok(lo.abs().max(hi.abs()))
}
