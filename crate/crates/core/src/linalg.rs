//! Hermitian eigensolvers and unitary time evolution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::operator::Operator;

/// Dimension up to which `diagonalize` uses the dense solver.
pub const DENSE_LIMIT: usize = 4096;

/// Relative tolerance on `|H_ij - conj(H_ji)|` accepted by the solvers.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column `k` is the eigenvector of `energies[k]`.
    pub vectors: DMatrix<Complex64>,
    /// False when only the lowest part of the spectrum was computed.
    pub complete: bool,
}

impl Spectrum {
    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }
}

pub(crate) fn check_hermitian(h: &Operator) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.rows(), found: h.cols() });
    }
    let dev = h.hermitian_deviation();
    if !h.is_tagged_hermitian() || dev > HERMITIAN_TOL * h.norm_inf().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Full dense eigendecomposition of a Hermitian matrix, ascending.
pub fn eigh_dense(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (energies, vectors)
}

/// Eigendecomposition of a Hermitian operator. Dense for dimensions up to
/// [`DENSE_LIMIT`]; above that the lowest 32 states from Lanczos.
pub fn diagonalize(h: &Operator) -> Result<Spectrum> {
    check_hermitian(h)?;
    if h.rows() <= DENSE_LIMIT {
        let (energies, vectors) = eigh_dense(&h.to_dense());
        Ok(Spectrum { energies, vectors, complete: true })
    } else {
        lowest_eigenpairs(h, 32)
    }
}

/// Lowest `k` eigenpairs by Lanczos with full reorthogonalization. The
/// Krylov space grows until every requested Ritz pair has residual below
/// `1e-9 ||H||`.
pub fn lowest_eigenpairs(h: &Operator, k: usize) -> Result<Spectrum> {
    check_hermitian(h)?;
    let n = h.rows();
    let k = k.min(n);
    if k == 0 {
        return Ok(Spectrum { energies: vec![], vectors: DMatrix::zeros(n, 0), complete: n == 0 });
    }
    let (lo, hi) = h.gershgorin_bounds();
    let norm = lo.abs().max(hi.abs()).max(1e-300);
    let tol = 1e-9 * norm;
    let mut m = (2 * k + 40).min(n);
    // deterministic start vector with support on every basis state
    let start = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0));
    loop {
        let (q, alpha, beta) = lanczos(h, &start, m);
        let m_eff = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m_eff, m_eff);
        for i in 0..m_eff {
            t[(i, i)] = alpha[i];
            if i + 1 < m_eff {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m_eff).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let take = k.min(m_eff);
        let mut vectors = DMatrix::zeros(n, take);
        let mut energies = Vec::with_capacity(take);
        let mut worst: f64 = 0.0;
        for (col, &idx) in order.iter().take(take).enumerate() {
            let y = eig.eigenvectors.column(idx);
            let mut v = DVector::zeros(n);
            for (j, qj) in q.iter().enumerate() {
                v += qj * Complex64::from(y[j]);
            }
            let nv = v.norm();
            v /= Complex64::from(nv);
            let e = eig.eigenvalues[idx];
            worst = worst.max((h.matvec(&v) - &v * Complex64::from(e)).norm());
            vectors.set_column(col, &v);
            energies.push(e);
        }
        if worst < tol || m_eff >= n || m_eff < m {
            if worst >= tol {
                return Err(Error::NoConvergence(format!("Lanczos residual {worst:.3e} after {m_eff} steps")));
            }
            return Ok(Spectrum { energies, vectors, complete: take == n });
        }
        m = (2 * m).min(n);
    }
}

fn lanczos(h: &Operator, start: &DVector<Complex64>, m: usize) -> (Vec<DVector<Complex64>>, Vec<f64>, Vec<f64>) {
    let mut q = vec![start / Complex64::from(start.norm())];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    for j in 0..m {
        let mut w = h.matvec(&q[j]);
        let a = q[j].dotc(&w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = qi.dotc(&w);
                w -= qi * c;
            }
        }
        let b = w.norm();
        if j + 1 == m || b < 1e-13 * a.abs().max(1.0) {
            break;
        }
        beta.push(b);
        q.push(w / Complex64::from(b));
    }
    (q, alpha, beta)
}

#[derive(Debug, Clone, Copy)]
pub enum EvolutionMethod {
    /// Expansion in the eigenbasis; exact up to diagonalization error.
    Eigen,
    /// Adaptive RK4 on the Schrödinger equation.
    Integrator { rtol: f64 },
}

/// `psi(t) = exp(-i H t) psi0` at every requested time.
pub fn evolve_unitary(
    h: &Operator,
    psi0: &DVector<Complex64>,
    times: &[f64],
    method: EvolutionMethod,
) -> Result<Vec<DVector<Complex64>>> {
    check_hermitian(h)?;
    if psi0.len() != h.rows() {
        return Err(Error::DimensionMismatch { expected: h.rows(), found: psi0.len() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("initial state norm {} is not 1", psi0.norm())));
    }
    match method {
        EvolutionMethod::Eigen => {
            let spec = diagonalize(h)?;
            if !spec.complete {
                return Err(Error::Unsupported(
                    "eigenbasis evolution needs the full spectrum; use the integrator".into(),
                ));
            }
            Ok(evolve_in_eigenbasis(&spec, psi0, times))
        }
        EvolutionMethod::Integrator { rtol } => {
            let minus_i = Complex64::new(0.0, -1.0);
            let opts = OdeOptions { rtol, atol: rtol * 1e-2, ..Default::default() };
            integrate(|_, y| h.matvec(y) * minus_i, 0.0, psi0, times, &opts, |_| {})
        }
    }
}

/// Evolve using a precomputed complete spectrum.
pub fn evolve_in_eigenbasis(spec: &Spectrum, psi0: &DVector<Complex64>, times: &[f64]) -> Vec<DVector<Complex64>> {
    let c = spec.vectors.adjoint() * psi0;
    times
        .iter()
        .map(|&t| {
            let phased = DVector::from_fn(c.len(), |k, _| c[k] * Complex64::new(0.0, -spec.energies[k] * t).exp());
            &spec.vectors * phased
        })
        .collect()
}
