//! Superconducting-circuit parameters for Kerr-resonator lattices.
//!
//! Capacitances and inductances are SI. Energies are angular frequencies
//! (`E / hbar`, rad/s), so `omega = 1 / sqrt(L C)` and
//! `sqrt(8 E_J E_C)` agree without extra factors.

use nalgebra::DMatrix;

use crate::error::{require, Error, Result};
use crate::linalg::eigh_dense;
use crate::models::{chain_bonds, BhParams, Boundary};

/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// `hbar / 2e`, Wb.
pub const PHI0: f64 = HBAR / (2.0 * E_CHARGE);

/// `e^2 / 2C` in rad/s.
pub fn charging_energy(c: f64) -> Result<f64> {
    require(c > 0.0 && c.is_finite(), || format!("capacitance {c} must be positive"))?;
    Ok(E_CHARGE * E_CHARGE / (2.0 * c) / HBAR)
}

pub fn lc_frequency(l_ind: f64, c_cap: f64) -> Result<f64> {
    require(l_ind > 0.0 && c_cap > 0.0 && l_ind.is_finite() && c_cap.is_finite(), || {
        format!("L = {l_ind}, C = {c_cap} must be positive")
    })?;
    Ok(1.0 / (l_ind * c_cap).sqrt())
}

/// Josephson inductance `Phi0^2 / E_J` (H) for `e_j` in rad/s.
pub fn josephson_inductance(e_j: f64) -> Result<f64> {
    require(e_j > 0.0 && e_j.is_finite(), || format!("E_J = {e_j} must be positive"))?;
    Ok(PHI0 * PHI0 / (e_j * HBAR))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SquidForm {
    /// `sqrt(1 + d^2 tan x)`.
    #[default]
    Tan,
    /// `sqrt(1 + d^2 tan^2 x)`.
    TanSquared,
}

/// Effective Josephson energy of two parallel junctions with flux bias
/// `phi_g` given in units of `Phi0`.
pub fn effective_ej(e_j1: f64, e_j2: f64, phi_g: f64, form: SquidForm) -> Result<f64> {
    require(e_j1 > 0.0 && e_j2 > 0.0, || format!("junction energies {e_j1}, {e_j2} must be positive"))?;
    require(phi_g.is_finite(), || "flux bias must be finite".into())?;
    let x = 0.5 * phi_g;
    let d = (e_j2 - e_j1) / (e_j2 + e_j1);
    let (s, c) = x.sin_cos();
    if d == 0.0 {
        return Ok((e_j1 + e_j2) * c);
    }
    if c.abs() < 1e-12 {
        return Err(Error::InvalidParameter(format!("tan singularity at flux bias {phi_g} Phi0")));
    }
    let t = s / c;
    let inner = match form {
        SquidForm::Tan => 1.0 + d * d * t,
        SquidForm::TanSquared => 1.0 + d * d * t * t,
    };
    if inner < 0.0 {
        return Err(Error::InvalidParameter(format!("1 + d^2 tan = {inner} is negative at flux bias {phi_g} Phi0")));
    }
    Ok((e_j1 + e_j2) * c * inner.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squid {
    pub e_j1: f64,
    pub e_j2: f64,
    /// Flux bias in units of `Phi0`.
    pub phi_g: f64,
    pub form: SquidForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonSpec {
    pub e_j: f64,
    /// `e^2 / 2C`.
    pub e_c: f64,
    /// When set, replaces `e_j` by the SQUID's effective value.
    pub squid: Option<Squid>,
}

impl TransmonSpec {
    pub fn new(e_j: f64, e_c: f64) -> Self {
        TransmonSpec { e_j, e_c, squid: None }
    }

    pub fn josephson_energy(&self) -> Result<f64> {
        match self.squid {
            Some(s) => effective_ej(s.e_j1, s.e_j2, s.phi_g, s.form),
            None => Ok(self.e_j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonParams {
    pub lambda: f64,
    /// `-E_J e^{-lambda^2} lambda^4 / 4`, entering as `-U/2 n(n-1)`.
    pub u: f64,
    pub delta_omega: f64,
    /// `1 / sqrt(L_J C) = sqrt(8 E_J E_C)`.
    pub omega_linear: f64,
    /// `50 <= E_J / E_C <= 100`.
    pub in_transmon_regime: bool,
}

fn kerr_from_ratio(e_j: f64, e_c: f64) -> (f64, f64, f64) {
    let lambda = (2.0 * e_c / e_j).powf(0.25);
    let l2 = lambda * lambda;
    let damp = (-l2).exp();
    (lambda, -e_j * damp * l2 * l2 / 4.0, l2 * e_j * damp)
}

pub fn transmon_params(spec: &TransmonSpec) -> Result<TransmonParams> {
    let e_j = spec.josephson_energy()?;
    require(e_j > 0.0 && e_j.is_finite(), || format!("E_J = {e_j} must be positive"))?;
    require(spec.e_c > 0.0 && spec.e_c.is_finite(), || format!("E_C = {} must be positive", spec.e_c))?;
    let ratio = e_j / spec.e_c;
    let in_transmon_regime = (50.0..=100.0).contains(&ratio);
    if !in_transmon_regime {
        log::warn!("E_J/E_C = {ratio:.1} is outside the transmon window 50..100");
    }
    let (lambda, u, delta_omega) = kerr_from_ratio(e_j, spec.e_c);
    Ok(TransmonParams { lambda, u, delta_omega, omega_linear: (8.0 * e_j * spec.e_c).sqrt(), in_transmon_regime })
}

/// Capacitively coupled transmon chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    /// Coupling capacitance, F.
    pub c: f64,
    /// Junction shunt capacitance, F.
    pub c_j: f64,
    /// Josephson energy per site, rad/s.
    pub e_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayParams {
    /// `C_J + 2C`.
    pub c_tilde: f64,
    pub e_c_tilde: f64,
    pub omega: f64,
    /// `-omega C / (2 C~)`, entering as `-J (a^dag a' + h.c.)`.
    pub j: f64,
    pub u: f64,
    pub delta_omega: f64,
    pub lambda: f64,
    /// `C / C~ < 0.1`, where the weak-coupling reduction is trustworthy.
    pub small_coupling: bool,
}

pub fn coupled_array_params(spec: &ArraySpec) -> Result<ArrayParams> {
    require(spec.c > 0.0 && spec.c_j > 0.0, || format!("capacitances C = {}, C_J = {} must be positive", spec.c, spec.c_j))?;
    let c_tilde = spec.c_j + 2.0 * spec.c;
    let e_c_tilde = charging_energy(c_tilde)?;
    let l_tilde = josephson_inductance(spec.e_j)?;
    let omega = lc_frequency(l_tilde, c_tilde)?;
    let (lambda, u, delta_omega) = kerr_from_ratio(spec.e_j, e_c_tilde);
    let small_coupling = spec.c / c_tilde < 0.1;
    if !small_coupling {
        log::warn!("C/(C_J+2C) = {:.3} is not small; the coupled-array reduction is unreliable", spec.c / c_tilde);
    }
    Ok(ArrayParams { c_tilde, e_c_tilde, omega, j: -omega * spec.c / (2.0 * c_tilde), u, delta_omega, lambda, small_coupling })
}

impl ArrayParams {
    /// `sum (omega + delta_omega) n - U/2 sum n(n-1) - J sum (a^dag a' + h.c.)`
    /// on an `l`-site chain.
    pub fn to_bh(&self, l: usize, boundary: Boundary) -> BhParams {
        BhParams {
            omega: vec![self.omega + self.delta_omega; l],
            bonds: chain_bonds(l, self.j, boundary),
            // BhParams carries +u/2 n(n-1)
            u: -self.u,
            mu: 0.0,
            v: 0.0,
        }
    }
}

/// One term `coeff (a^dag)^i a^j` of a normal-ordered expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalTerm {
    pub creators: usize,
    pub annihilators: usize,
    pub coeff: u64,
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Normal ordering of `(a + a^dag)^{2m}`:
/// `sum_k sum_i (2m)! / (2^k k! i! (2m-2k-i)!) (a^dag)^i a^{2m-2k-i}`.
pub fn normal_order_expand(m: usize) -> Result<Vec<NormalTerm>> {
    require((1..=6).contains(&m), || format!("m = {m} outside 1..=6"))?;
    let top = factorial(2 * m);
    let mut out = Vec::new();
    for k in 0..=m {
        for i in 0..=(2 * m - 2 * k) {
            let j = 2 * m - 2 * k - i;
            let denom = (1u64 << k) * factorial(k) * factorial(i) * factorial(j);
            out.push(NormalTerm { creators: i, annihilators: j, coeff: top / denom });
        }
    }
    Ok(out)
}

/// `(2m - 1)!!`.
pub fn double_factorial_odd(m: usize) -> u64 {
    (1..=m as u64).map(|k| 2 * k - 1).product()
}

/// Fock-space matrix of `a` truncated at `n_max`.
pub fn annihilation_matrix(n_max: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_max + 1, n_max + 1, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
}

/// Lowest levels of the quartic-truncated transmon,
/// `omega (a^dag a + 1/2) - E_J lambda^4 / 24 (a + a^dag)^4`
/// with `omega = sqrt(8 E_J E_C)` and `lambda^4 = 2 E_C / E_J`. Levels are
/// matched to Fock states `|0>, |1>, ...` by largest overlap, so spurious
/// states from the unbounded quartic never get picked.
pub fn transmon_quartic_levels(spec: &TransmonSpec, n_max: usize, count: usize) -> Result<Vec<f64>> {
    require(count >= 1 && count <= n_max / 2, || format!("need count <= n_max / 2 (count {count}, n_max {n_max})"))?;
    let e_j = spec.josephson_energy()?;
    require(e_j > 0.0 && spec.e_c > 0.0, || "E_J and E_C must be positive".into())?;
    let omega = (8.0 * e_j * spec.e_c).sqrt();
    let a = annihilation_matrix(n_max);
    let x = &a + a.transpose();
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let n = a.transpose() * &a;
    let h = (n + DMatrix::identity(n_max + 1, n_max + 1) * 0.5) * omega - x4 * (2.0 * spec.e_c / 24.0);
    let (energies, vectors) = eigh_dense(&h.map(|v| v.into()));
    let mut levels = Vec::with_capacity(count);
    for fock in 0..count {
        let best = (0..energies.len()).max_by(|&p, &q| vectors[(fock, p)].norm_sqr().total_cmp(&vectors[(fock, q)].norm_sqr())).unwrap();
        levels.push(energies[best]);
    }
    Ok(levels)
}

/// `E_12 - E_01` of [`transmon_quartic_levels`].
pub fn quartic_anharmonicity(spec: &TransmonSpec, n_max: usize) -> Result<f64> {
    let e = transmon_quartic_levels(spec, n_max, 3)?;
    Ok((e[2] - e[1]) - (e[1] - e[0]))
}
