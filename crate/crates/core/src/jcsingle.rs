//! Single-cavity Jaynes-Cummings analytics.
//!
//! Manifold `n >= 1` is spanned by `(|n-1, e>, |n, g>)` and the state
//! `|0, g>` has energy 0 (no zero-point offset).

use nalgebra::Matrix2;

use crate::error::{Error, Result};

/// Energies and mixing angle of one excitation manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcManifold {
    pub n: usize,
    pub e_minus: f64,
    pub e_plus: f64,
    /// `atan2(2 g sqrt(n), omega_a - omega_c)`, in `(-pi, pi]`.
    pub alpha: f64,
}

impl JcManifold {
    pub fn new(n: usize, omega_a: f64, omega_c: f64, g: f64) -> Result<Self> {
        let (e_minus, e_plus) = jc_energies_exact(n, omega_a, omega_c, g)?;
        let alpha = (2.0 * g * (n as f64).sqrt()).atan2(omega_a - omega_c);
        Ok(JcManifold { n, e_minus, e_plus, alpha })
    }

    /// `(|n,+>, |n,->)` as coefficient pairs on `(|n-1, e>, |n, g>)`.
    pub fn dressed_states(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = (0.5 * self.alpha).sin_cos();
        ([c, s], [-s, c])
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter("manifold index n must be at least 1".into()));
    }
    Ok(())
}

/// The 2x2 block of the Jaynes-Cummings Hamiltonian in manifold `n`.
pub fn jc_manifold_matrix(n: usize, omega_a: f64, omega_c: f64, g: f64) -> Result<Matrix2<f64>> {
    check_n(n)?;
    let nf = n as f64;
    let off = g * nf.sqrt();
    Ok(Matrix2::new((nf - 1.0) * omega_c + omega_a, off, off, nf * omega_c))
}

/// Eigenvalues `(E_-, E_+)` of [`jc_manifold_matrix`].
pub fn jc_energies_exact(n: usize, omega_a: f64, omega_c: f64, g: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    let nf = n as f64;
    let mean = (nf - 0.5) * omega_c + 0.5 * omega_a;
    let half = 0.5 * ((omega_a - omega_c).powi(2) + 4.0 * g * g * nf).sqrt();
    Ok((mean - half, mean + half))
}

/// Closed form as it appears in the usual textbook write-up, evaluated
/// literally: `omega_c (n - 1/2) +- sqrt((omega_a - omega_c)^2 + g^2 n) / 2`.
///
/// It drops the factor 4 on `g^2 n` (and the `omega_a / 2` offset), so it
/// does not agree with [`jc_energies_exact`]. Kept for comparison only.
pub fn jc_energies_half_split(n: usize, omega_a: f64, omega_c: f64, g: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    let nf = n as f64;
    let half = 0.5 * ((omega_a - omega_c).powi(2) + g * g * nf).sqrt();
    Ok((omega_c * (nf - 0.5) - half, omega_c * (nf - 0.5) + half))
}

/// Laser detunings for climbing the ladder one photon at a time from `|0, g>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockadeReport {
    /// `omega_laser - (E_-(1) - E_0)`.
    pub first_photon: f64,
    /// `omega_laser - (E_+(2) - E_-(1))`.
    pub second_photon_plus: f64,
    /// `omega_laser - (E_-(2) - E_-(1))`.
    pub second_photon_minus: f64,
}

pub fn blockade_report(omega_a: f64, omega_c: f64, g: f64, omega_laser: f64) -> BlockadeReport {
    // n >= 1 is hard-coded, so these cannot fail
    let (m1, _) = jc_energies_exact(1, omega_a, omega_c, g).unwrap();
    let (m2, p2) = jc_energies_exact(2, omega_a, omega_c, g).unwrap();
    BlockadeReport {
        first_photon: omega_laser - m1,
        second_photon_plus: omega_laser - (p2 - m1),
        second_photon_minus: omega_laser - (m2 - m1),
    }
}
