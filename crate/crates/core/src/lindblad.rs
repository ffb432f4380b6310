//! Driven-dissipative dynamics under the Lindblad master equation.
//!
//! Density matrices are vectorized by column stacking, so
//! `vec(A X B) = (B^T (x) A) vec(X)` and the Hamiltonian part of the
//! superoperator is `-i (I (x) H - H^T (x) I)`.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::{FockBasis, LadderKind, NumberSector};
use crate::linalg::{check_hermitian, eigh_dense};
use crate::ode::{integrate, OdeOptions};
use crate::operator::{Operator, Symmetry};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Largest Hilbert-space dimension for the dense superoperator.
pub const NULL_SPACE_MAX_DIM: usize = 64;

/// Expectation values below this are treated as zero in ratio observables.
pub const RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSpec {
    pub omega_d: f64,
    /// Per-site amplitude; the drive term is `Omega_j a_j^dag + conj(Omega_j) a_j`.
    pub amps: Vec<C>,
}

impl DriveSpec {
    pub fn uniform(omega_d: f64, omega: f64, l: usize) -> Self {
        DriveSpec { omega_d, amps: vec![C::new(omega, 0.0); l] }
    }

    /// `Omega_j = -Omega e^{-i j pi / 2}`.
    pub fn alternating(omega_d: f64, omega: f64, l: usize) -> Self {
        let amps = (0..l)
            .map(|j| -omega * C::from_polar(1.0, -(j as f64) * std::f64::consts::FRAC_PI_2))
            .collect();
        DriveSpec { omega_d, amps }
    }
}

/// `H - omega_d N + sum_j (Omega_j a_j^dag + h.c.)`.
///
/// `N` counts every excitation (photons and atoms). For photon-only bases
/// this is the photon number; with atoms it is the frame in which the
/// Jaynes-Cummings coupling stays static.
pub fn rotating_frame_hamiltonian(h: &Operator, drive: &DriveSpec, basis: &FockBasis) -> Result<Operator> {
    if basis.sector() != NumberSector::Unrestricted {
        return Err(Error::BasisMismatch("a drive needs a basis without number restriction".into()));
    }
    if drive.amps.len() != basis.n_sites() {
        return Err(Error::DimensionMismatch { expected: basis.n_sites(), found: drive.amps.len() });
    }
    if drive.amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) || !drive.omega_d.is_finite() {
        return Err(Error::InvalidParameter("drive parameters must be finite".into()));
    }
    check_hermitian(h)?;
    if h.rows() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: h.rows() });
    }
    let mut out = h.add_scaled(&basis.total_number_operator(), C::from(-drive.omega_d))?;
    for (j, &amp) in drive.amps.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let ad = basis.site_operator(j, LadderKind::Create)?;
        let term = ad.scale(amp);
        let both = term.add_scaled(&term.adjoint(), C::from(1.0))?.with_symmetry(Symmetry::Hermitian);
        out = out.add_scaled(&both, C::from(1.0))?;
    }
    Ok(out.with_symmetry(Symmetry::Hermitian))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: DMatrix<C>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &DVector<C>) -> Self {
        let n = psi.norm_squared();
        DensityMatrix { rho: psi * psi.adjoint() / C::from(n) }
    }

    /// `|k><k|`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(k, k)] = C::new(1.0, 0.0);
        DensityMatrix { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * C::from(0.5);
        eigh_dense(&herm).0.first().copied().unwrap_or(0.0)
    }

    /// Trace 1 within 1e-8, Hermitian within 1e-10 and eigenvalues
    /// above -1e-7.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - C::from(1.0)).norm() > 1e-8 {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr}")));
        }
        let h = self.hermiticity_error();
        if h > 1e-10 {
            return Err(Error::NotHermitian(h));
        }
        let m = self.min_eigenvalue();
        if m < -1e-7 {
            return Err(Error::InvalidParameter(format!("density matrix has eigenvalue {m:.3e}")));
        }
        Ok(())
    }

    pub fn expectation(&self, op: &Operator) -> C {
        op.mul_dense(&self.rho).trace()
    }

    fn hermitize(&mut self) {
        self.rho = (&self.rho + self.rho.adjoint()) * C::from(0.5);
    }
}

/// Optional extra channels; photon loss is always present.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtraChannels {
    /// Atomic decay rate, collapse operator `sqrt(rate) sigma^-`.
    pub atom_decay: f64,
    /// Pure dephasing rate, collapse operator `sqrt(rate / 2) sigma_z`.
    pub atom_dephasing: f64,
}

/// `d rho / dt = -i [H, rho] + sum_k (C_k rho C_k^dag - {C_k^dag C_k, rho} / 2)`.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    h: Operator,
    collapse: Vec<Operator>,
    /// `H - (i/2) sum_k C_k^dag C_k`.
    h_eff: Operator,
}

impl Lindbladian {
    pub fn new(h: Operator, collapse: Vec<Operator>) -> Result<Self> {
        check_hermitian(&h)?;
        let d = h.rows();
        let mut k_sum = Operator::zeros(d, d, Symmetry::Hermitian);
        for c in &collapse {
            if c.rows() != d || c.cols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: c.rows() });
            }
            k_sum = k_sum.add_scaled(&c.adjoint().mul(c)?, C::from(1.0))?;
        }
        let h_eff = h.add_scaled(&k_sum, C::new(0.0, -0.5))?;
        Ok(Lindbladian { h, collapse, h_eff })
    }

    /// Loss `gamma` on every photon mode plus optional atomic channels.
    pub fn photon_loss(h: Operator, basis: &FockBasis, gamma: f64, extra: ExtraChannels) -> Result<Self> {
        if !(gamma >= 0.0) || !(extra.atom_decay >= 0.0) || !(extra.atom_dephasing >= 0.0) {
            return Err(Error::InvalidParameter("loss rates must be non-negative".into()));
        }
        if h.rows() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: h.rows() });
        }
        if matches!(basis.sector(), NumberSector::Exactly(_)) && (gamma > 0.0 || extra.atom_decay > 0.0) {
            return Err(Error::BasisMismatch("loss needs a basis that contains lower excitation numbers".into()));
        }
        let mut collapse = Vec::new();
        for j in 0..basis.n_sites() {
            if gamma > 0.0 {
                collapse.push(basis.site_operator(j, LadderKind::Annihilate)?.scale(C::from(gamma.sqrt())));
            }
            if basis.sites()[j].has_atom {
                if extra.atom_decay > 0.0 {
                    collapse.push(basis.site_operator(j, LadderKind::SigmaMinus)?.scale(C::from(extra.atom_decay.sqrt())));
                }
                if extra.atom_dephasing > 0.0 {
                    let z: Vec<f64> = (0..basis.dim()).map(|i| 2.0 * basis.atom(i, j) as f64 - 1.0).collect();
                    collapse.push(Operator::diagonal(&z).scale(C::from((0.5 * extra.atom_dephasing).sqrt())));
                }
            }
        }
        Lindbladian::new(h, collapse)
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn apply(&self, rho: &DMatrix<C>) -> DMatrix<C> {
        // -i (H_eff rho - rho H_eff^dag)
        let left = self.h_eff.mul_dense(rho);
        let right = self.h_eff.mul_dense(&rho.adjoint()).adjoint();
        let mut out = (left - right) * (-I);
        for c in &self.collapse {
            let c_rho = c.mul_dense(rho);
            out += c.mul_dense(&c_rho.adjoint()).adjoint();
        }
        out
    }

    /// Dense `d^2 x d^2` superoperator acting on column-stacked vectors.
    pub fn superoperator(&self) -> DMatrix<C> {
        let d = self.dim();
        let eye = DMatrix::<C>::identity(d, d);
        let heff = self.h_eff.to_dense();
        let mut l = (kron(&eye, &heff) - kron(&heff.adjoint().transpose(), &eye)) * (-I);
        for c in &self.collapse {
            let cd = c.to_dense();
            l += kron(&cd.map(|z| z.conj()), &cd);
        }
        l
    }

    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        self.apply(&rho.rho).norm()
    }
}

fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

fn vec_of(m: &DMatrix<C>) -> DVector<C> {
    DVector::from_column_slice(m.as_slice())
}

fn mat_of(v: &DVector<C>, d: usize) -> DMatrix<C> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// `d rho/dt` for photon loss `gamma` on every site of `basis`.
pub fn liouvillian_rhs(rho: &DensityMatrix, h: &Operator, gamma: f64, basis: &FockBasis) -> Result<DMatrix<C>> {
    if rho.dim() != h.rows() {
        return Err(Error::DimensionMismatch { expected: h.rows(), found: rho.dim() });
    }
    let l = Lindbladian::photon_loss(h.clone(), basis, gamma, ExtraChannels::default())?;
    Ok(l.apply(&rho.rho))
}

#[derive(Debug, Clone, Copy)]
pub struct MasterOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions { rtol: 1e-10, atol: 1e-13 }
    }
}

/// Integrate the master equation, re-symmetrizing after every step.
pub fn evolve_master(
    rho0: &DensityMatrix,
    l: &Lindbladian,
    times: &[f64],
    opts: &MasterOptions,
) -> Result<Vec<DensityMatrix>> {
    rho0.validate()?;
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    let d = l.dim();
    let ode = OdeOptions { rtol: opts.rtol, atol: opts.atol, ..Default::default() };
    let states = integrate(
        |_, y| vec_of(&l.apply(&mat_of(y, d))),
        0.0,
        &vec_of(&rho0.rho),
        times,
        &ode,
        |y| {
            let m = mat_of(y, d);
            *y = vec_of(&((&m + m.adjoint()) * C::from(0.5)));
        },
    )?;
    Ok(states.into_iter().map(|v| DensityMatrix { rho: mat_of(&v, d) }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NessMethod {
    NullSpace,
    LongTime,
}

impl NessMethod {
    pub fn label(&self) -> &'static str {
        match self {
            NessMethod::NullSpace => "null_space",
            NessMethod::LongTime => "long_time",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NessResult {
    pub rho: DensityMatrix,
    /// Frobenius norm of `L rho`.
    pub residual: f64,
    pub method: NessMethod,
}

#[derive(Debug, Clone, Copy)]
pub struct NessOptions {
    /// Long-time method stops once `||d rho/dt|| < tol`.
    pub tol: f64,
    /// Long-time integration gives up after this time.
    pub t_max: f64,
}

impl Default for NessOptions {
    fn default() -> Self {
        NessOptions { tol: 1e-10, t_max: 1e5 }
    }
}

/// Non-equilibrium steady state. The long-time method starts from the
/// vacuum (basis index 0).
pub fn steady_state(l: &Lindbladian, method: NessMethod, opts: &NessOptions) -> Result<NessResult> {
    let rho = match method {
        NessMethod::NullSpace => null_space_state(l)?,
        NessMethod::LongTime => long_time_state(l, opts)?,
    };
    let residual = l.residual(&rho);
    Ok(NessResult { rho, residual, method })
}

fn null_space_state(l: &Lindbladian) -> Result<DensityMatrix> {
    let d = l.dim();
    if d > NULL_SPACE_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "dense null-space solve limited to dimension {NULL_SPACE_MAX_DIM} (got {d}); use the long_time method"
        )));
    }
    let sup = l.superoperator();
    let n = d * d;
    let norm = sup.norm().max(1e-300);
    let w = C::from(norm / n as f64);
    // Replace one equation by the trace condition. With a one-dimensional
    // kernel this is regular for a generic row; a second kernel vector keeps
    // it singular whichever row is replaced.
    let mut best: Option<(f64, DVector<C>)> = None;
    for row in [0, n - 1, n / 2] {
        let mut a = sup.clone();
        a.row_mut(row).fill(ZERO);
        for k in 0..d {
            a[(row, k * d + k)] = w;
        }
        let lu = a.clone().lu();
        if !lu.is_invertible() || nearly_singular(&a, &lu, 1e-7 * norm) {
            continue;
        }
        let mut b = DVector::zeros(n);
        b[row] = w;
        let Some(x) = lu.solve(&b) else { continue };
        let r = (&sup * &x).norm();
        if best.as_ref().is_none_or(|(br, _)| r < *br) {
            best = Some((r, x));
        }
        if r < 1e-13 * norm {
            break;
        }
    }
    let (_, x) = best.ok_or(Error::DegenerateKernel(2))?;
    let mut rho = DensityMatrix { rho: mat_of(&x, d) };
    rho.hermitize();
    let tr = rho.trace();
    rho.rho /= tr;
    Ok(rho)
}

/// Whether the smallest singular value of `a` lies below `tol`, by inverse
/// iteration on `a^dag a` through the LU factors of `a` (`P a = L U`).
fn nearly_singular(a: &DMatrix<C>, lu: &LU<C, Dyn, Dyn>, tol: f64) -> bool {
    let n = a.nrows();
    let (p, lo, up) = (lu.p(), lu.l(), lu.u());
    let mut x = DVector::from_fn(n, |i, _| C::new(((i * 7) % 11) as f64 + 1.0, (i % 5) as f64 - 2.0));
    x /= C::from(x.norm());
    let mut prev = f64::INFINITY;
    for _ in 0..60 {
        // a^dag y = x  <=>  U^dag L^dag P y = x
        let Some(z) = up.ad_solve_upper_triangular(&x) else { return true };
        let Some(mut y) = lo.ad_solve_lower_triangular(&z) else { return true };
        p.inv_permute_rows(&mut y);
        let Some(v) = lu.solve(&y) else { return true };
        let nv = v.norm();
        if !nv.is_finite() || nv == 0.0 {
            return true;
        }
        x = v / C::from(nv);
        // ||a x|| bounds the smallest singular value from above
        let sigma = (a * &x).norm();
        if sigma < tol {
            return true;
        }
        if (prev - sigma).abs() <= 1e-3 * sigma {
            break;
        }
        prev = sigma;
    }
    false
}

fn long_time_state(l: &Lindbladian, opts: &NessOptions) -> Result<DensityMatrix> {
    let d = l.dim();
    let mut rho = DensityMatrix::basis_state(d, 0);
    let mut t = 0.0;
    let mut chunk = 1.0;
    let mopts = MasterOptions::default();
    loop {
        let r = l.residual(&rho);
        if r < opts.tol {
            return Ok(rho);
        }
        if t >= opts.t_max {
            return Err(Error::NoConvergence(format!("||L rho|| = {r:.3e} at t = {t}")));
        }
        rho = evolve_master(&rho, l, &[chunk], &mopts)?.pop().unwrap();
        t += chunk;
        chunk = (chunk * 1.5).min(opts.t_max - t).max(1e-3);
    }
}

/// Steady state with automatic truncation: `build(n_max)` is called with
/// increasing cutoffs until the top-level population of every site is
/// below `pop_tol` or `n_max_cap` is reached (the last result is returned
/// with a warning).
pub fn steady_state_auto<F>(
    build: F,
    n_max_start: usize,
    n_max_cap: usize,
    pop_tol: f64,
    method: NessMethod,
    opts: &NessOptions,
) -> Result<(FockBasis, NessResult, bool)>
where
    F: Fn(usize) -> Result<(FockBasis, Lindbladian)>,
{
    let mut n_max = n_max_start.max(1);
    loop {
        let (basis, l) = build(n_max)?;
        let ness = steady_state(&l, method, opts)?;
        let top = top_level_population(&ness.rho, &basis);
        if top < pop_tol {
            return Ok((basis, ness, true));
        }
        if n_max >= n_max_cap {
            log::warn!("truncation cap n_max = {n_max} reached with top-level population {top:.2e}");
            return Ok((basis, ness, false));
        }
        log::warn!("top-level population {top:.2e} at n_max = {n_max}; raising the cutoff");
        n_max += 1;
    }
}

/// Largest probability, over sites, of occupying the site's top photon level.
pub fn top_level_population(rho: &DensityMatrix, basis: &FockBasis) -> f64 {
    (0..basis.n_sites())
        .map(|j| {
            let top = basis.sites()[j].n_max;
            (0..basis.dim()).filter(|&i| basis.photons(i, j) == top).map(|i| rho.rho[(i, i)].re).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Steady-state observables. Ratio observables are `None` when a
/// denominator `<n>` is below [`RATIO_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub n: Vec<f64>,
    /// `<a_j>`, the transmitted field amplitude.
    pub a: Vec<C>,
    /// `g2[j][l] = <a_j^dag a_l^dag a_l a_j> / (<n_j><n_l>)`.
    pub g2: Vec<Vec<Option<f64>>>,
    /// `corr[j][r] = <n_j n_{j+r}> / (<n_j><n_{j+r}>)` for `j + r < L`.
    pub corr: Vec<Vec<Option<f64>>>,
    /// `|sum_even <n> - sum_odd <n>| / sum <n>`.
    pub imbalance: Option<f64>,
}

impl Observables {
    pub fn total_n(&self) -> f64 {
        self.n.iter().sum()
    }
}

pub fn observables(rho: &DensityMatrix, basis: &FockBasis) -> Result<Observables> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.dim() });
    }
    let l = basis.n_sites();
    let p: Vec<f64> = (0..basis.dim()).map(|i| rho.rho[(i, i)].re).collect();
    let mut n = vec![0.0; l];
    let mut nn = vec![vec![0.0; l]; l];
    for (i, &w) in p.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for j in 0..l {
            let nj = basis.photons(i, j) as f64;
            n[j] += w * nj;
            for k in 0..l {
                nn[j][k] += w * nj * basis.photons(i, k) as f64;
            }
        }
    }
    let mut a = Vec::with_capacity(l);
    for j in 0..l {
        let op = basis.site_operator(j, LadderKind::Annihilate)?;
        a.push(rho.expectation(&op));
    }
    let ratio = |num: f64, x: f64, y: f64| (x >= RATIO_FLOOR && y >= RATIO_FLOOR).then(|| num / (x * y));
    let g2 = (0..l)
        .map(|j| {
            (0..l)
                .map(|k| {
                    // a_j^dag a_k^dag a_k a_j = n_j n_k - delta_jk n_j
                    let num = nn[j][k] - if j == k { n[j] } else { 0.0 };
                    ratio(num, n[j], n[k])
                })
                .collect()
        })
        .collect();
    let corr = (0..l).map(|j| (0..l - j).map(|r| ratio(nn[j][j + r], n[j], n[j + r])).collect()).collect();
    let total: f64 = n.iter().sum();
    let even: f64 = n.iter().step_by(2).sum();
    let imbalance = (total >= RATIO_FLOOR).then(|| (2.0 * even - total).abs() / total);
    Ok(Observables { n, a, g2, corr, imbalance })
}

/// One cell of a drive-frequency sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub omega_d: f64,
    pub ness: NessResult,
    pub obs: Observables,
}

/// Steady states over drive frequencies on the current rayon pool. `build`
/// maps `omega_d` to the rotating-frame Lindbladian; output order follows
/// `omega_d_values`.
pub fn ness_sweep<F>(
    omega_d_values: &[f64],
    basis: &FockBasis,
    build: F,
    method: NessMethod,
    opts: &NessOptions,
) -> Result<Vec<SweepCell>>
where
    F: Fn(f64) -> Result<Lindbladian> + Sync,
{
    omega_d_values
        .par_iter()
        .map(|&w| {
            let l = build(w)?;
            let ness = steady_state(&l, method, opts)?;
            let obs = observables(&ness.rho, basis)?;
            Ok(SweepCell { omega_d: w, ness, obs })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::SiteSpec;
    use crate::models::{build_bh, BhParams, Boundary};
    use proptest::prelude::*;

    fn cavity(n_max: usize) -> FockBasis {
        FockBasis::uniform(1, SiteSpec::photon(n_max), NumberSector::Unrestricted).unwrap()
    }

    fn kerr(basis: &FockBasis, omega: f64, u: f64) -> Operator {
        build_bh(&BhParams::chain(basis.n_sites(), omega, 0.0, u, 0.0, Boundary::Open), basis).unwrap()
    }

    fn random_density(d: usize, seed: u64) -> DensityMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = DMatrix::from_fn(d, d, |_, _| C::new(next(), next()));
        let rho = &m * m.adjoint();
        let tr = rho.trace();
        DensityMatrix { rho: rho / tr }
    }

    #[test]
    fn alternating_drive_pattern() {
        let d = DriveSpec::alternating(1.0, 0.2, 4);
        let expect = [C::new(-0.2, 0.0), C::new(0.0, 0.2), C::new(0.2, 0.0), C::new(0.0, -0.2)];
        for (a, b) in d.amps.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rotating_frame_terms() {
        let basis = cavity(3);
        let h = kerr(&basis, 2.0, 0.5);
        let r = rotating_frame_hamiltonian(&h, &DriveSpec::uniform(1.5, 0.0, 1), &basis).unwrap();
        for k in 0..4 {
            let kf = k as f64;
            assert!((r.get(k, k).re - (0.5 * kf + 0.25 * kf * (kf - 1.0))).abs() < 1e-14);
        }
        let r = rotating_frame_hamiltonian(&h, &DriveSpec::uniform(2.0, 0.1, 1), &basis).unwrap();
        assert!((r.get(1, 0).re - 0.1).abs() < 1e-15 && (r.get(0, 1).re - 0.1).abs() < 1e-15);
        assert!((r.get(2, 1).re - 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.get(1, 1).re, 0.0);
        let complex = rotating_frame_hamiltonian(&h, &DriveSpec { omega_d: 2.0, amps: vec![C::new(0.0, 0.3)] }, &basis).unwrap();
        assert_eq!(complex.hermitian_deviation(), 0.0);
        assert!((complex.get(1, 0) - C::new(0.0, 0.3)).norm() < 1e-15);
        let fixed = FockBasis::uniform(1, SiteSpec::photon(3), NumberSector::Exactly(1)).unwrap();
        assert!(rotating_frame_hamiltonian(&Operator::identity(1), &DriveSpec::uniform(1.0, 0.1, 1), &fixed).is_err());
    }

    #[test]
    fn superoperator_matches_direct_rhs() {
        let basis = FockBasis::uniform(2, SiteSpec::photon(2), NumberSector::Unrestricted).unwrap();
        let h0 = build_bh(&BhParams::chain(2, 1.0, 0.3, 0.7, 0.0, Boundary::Open), &basis).unwrap();
        let h = rotating_frame_hamiltonian(&h0, &DriveSpec::alternating(0.9, 0.2, 2), &basis).unwrap();
        let l = Lindbladian::photon_loss(h, &basis, 0.3, ExtraChannels::default()).unwrap();
        let rho = random_density(basis.dim(), 3);
        let direct = l.apply(&rho.rho);
        let via = mat_of(&(l.superoperator() * vec_of(&rho.rho)), basis.dim());
        assert!((direct - via).norm() < 1e-13);
    }

    #[test]
    fn unitary_limit_is_commutator() {
        let basis = cavity(3);
        let h = kerr(&basis, 1.0, 0.4);
        let rho = random_density(4, 9);
        let rhs = liouvillian_rhs(&rho, &h, 0.0, &basis).unwrap();
        let hd = h.to_dense();
        let comm = (&hd * &rho.rho - &rho.rho * &hd) * (-I);
        assert!((rhs - comm).norm() < 1e-14);
    }

    #[test]
    fn damped_cavity_rate() {
        let basis = cavity(2);
        let gamma = 0.1;
        let rho = DensityMatrix::basis_state(3, 1);
        let rhs = liouvillian_rhs(&rho, &kerr(&basis, 1.0, 0.0), gamma, &basis).unwrap();
        let dn: f64 = (0..3).map(|k| k as f64 * rhs[(k, k)].re).sum();
        assert!((dn + gamma).abs() < 1e-15);
    }

    #[test]
    fn exponential_decay_of_single_photon() {
        let basis = cavity(2);
        let gamma = 0.1;
        let l = Lindbladian::photon_loss(kerr(&basis, 1.0, 0.0), &basis, gamma, ExtraChannels::default()).unwrap();
        let out = evolve_master(&DensityMatrix::basis_state(3, 1), &l, &[10.0], &MasterOptions::default()).unwrap();
        let n = out[0].rho[(1, 1)].re;
        assert!((n - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn pure_state_stays_pure_without_loss() {
        let basis = cavity(4);
        let h = rotating_frame_hamiltonian(&kerr(&basis, 1.0, 0.8), &DriveSpec::uniform(0.7, 0.3, 1), &basis).unwrap();
        let l = Lindbladian::photon_loss(h, &basis, 0.0, ExtraChannels::default()).unwrap();
        let times: Vec<f64> = (1..=5).map(|k| k as f64 * 2.0).collect();
        for rho in evolve_master(&DensityMatrix::basis_state(5, 0), &l, &times, &MasterOptions::default()).unwrap() {
            assert!((rho.purity() - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn total_decay_independent_of_hopping() {
        let basis = FockBasis::uniform(2, SiteSpec::photon(1), NumberSector::Unrestricted).unwrap();
        let gamma = 0.2;
        let start = basis.index_of_occupation(&[1, 0], &[0, 0]).unwrap();
        for j in [0.0, 0.5, 2.0] {
            let h = build_bh(&BhParams::chain(2, 1.0, j, 0.0, 0.0, Boundary::Open), &basis).unwrap();
            let l = Lindbladian::photon_loss(h, &basis, gamma, ExtraChannels::default()).unwrap();
            let out = evolve_master(&DensityMatrix::basis_state(basis.dim(), start), &l, &[3.0, 7.0], &MasterOptions::default()).unwrap();
            for (t, rho) in [3.0, 7.0].iter().zip(out) {
                let n = observables(&rho, &basis).unwrap().total_n();
                assert!((n - (-gamma * t).exp()).abs() < 1e-8, "J = {j}");
            }
        }
    }

    #[test]
    fn undriven_steady_state_is_vacuum() {
        let basis = FockBasis::uniform(2, SiteSpec::photon(2), NumberSector::Unrestricted).unwrap();
        let h = build_bh(&BhParams::chain(2, 1.0, 0.4, 1.0, 0.0, Boundary::Open), &basis).unwrap();
        let l = Lindbladian::photon_loss(h, &basis, 0.5, ExtraChannels::default()).unwrap();
        let ness = steady_state(&l, NessMethod::NullSpace, &NessOptions::default()).unwrap();
        assert!((ness.rho.rho[(0, 0)].re - 1.0).abs() < 1e-10);
        assert!(ness.residual < 1e-8);
        assert_eq!(observables(&ness.rho, &basis).unwrap().imbalance, None);
    }

    #[test]
    fn driven_linear_cavity() {
        let basis = cavity(10);
        let (omega, gamma) = (0.1, 0.4);
        let h = rotating_frame_hamiltonian(&kerr(&basis, 3.0, 0.0), &DriveSpec::uniform(3.0, omega, 1), &basis).unwrap();
        let l = Lindbladian::photon_loss(h, &basis, gamma, ExtraChannels::default()).unwrap();
        let ns = steady_state(&l, NessMethod::NullSpace, &NessOptions::default()).unwrap();
        let lt = steady_state(&l, NessMethod::LongTime, &NessOptions::default()).unwrap();
        let a = observables(&ns.rho, &basis).unwrap();
        let b = observables(&lt.rho, &basis).unwrap();
        assert!((a.n[0] - 0.25).abs() < 1e-6);
        assert!((a.n[0] - b.n[0]).abs() < 1e-6);
        assert!((a.g2[0][0].unwrap() - 1.0).abs() < 1e-6);
        ns.rho.validate().unwrap();
        // coherent amplitude -i Omega / (gamma / 2)
        assert!((a.a[0] - C::new(0.0, -0.5)).norm() < 1e-6);
    }

    #[test]
    fn no_loss_has_degenerate_kernel() {
        let basis = cavity(2);
        let l = Lindbladian::photon_loss(kerr(&basis, 1.0, 0.3), &basis, 0.0, ExtraChannels::default()).unwrap();
        assert!(matches!(steady_state(&l, NessMethod::NullSpace, &NessOptions::default()), Err(Error::DegenerateKernel(k)) if k >= 2));
    }

    #[test]
    fn hardcore_and_product_observables() {
        let basis = FockBasis::uniform(2, SiteSpec::photon(1), NumberSector::Unrestricted).unwrap();
        let h = rotating_frame_hamiltonian(
            &build_bh(&BhParams::chain(2, 1.0, 0.2, 0.0, 0.0, Boundary::Open), &basis).unwrap(),
            &DriveSpec::uniform(1.0, 0.3, 2),
            &basis,
        )
        .unwrap();
        let l = Lindbladian::photon_loss(h, &basis, 0.5, ExtraChannels::default()).unwrap();
        let ness = steady_state(&l, NessMethod::NullSpace, &NessOptions::default()).unwrap();
        let obs = observables(&ness.rho, &basis).unwrap();
        assert_eq!(obs.g2[0][0], Some(0.0));

        let k = basis.index_of_occupation(&[1, 0], &[0, 0]).unwrap();
        let obs = observables(&DensityMatrix::basis_state(basis.dim(), k), &basis).unwrap();
        assert_eq!(obs.imbalance, Some(1.0));
        assert_eq!(obs.g2[0][1], None);
        assert_eq!(obs.corr[0][0], Some(1.0));
    }

    #[test]
    fn atom_channels_are_opt_in() {
        let basis = FockBasis::uniform(1, SiteSpec::with_atom(1), NumberSector::Unrestricted).unwrap();
        let h = Operator::diagonal(&[0.0, 1.0, 1.0, 2.0]);
        let plain = Lindbladian::photon_loss(h.clone(), &basis, 0.1, ExtraChannels::default()).unwrap();
        let extra = Lindbladian::photon_loss(h, &basis, 0.1, ExtraChannels { atom_decay: 0.2, atom_dephasing: 0.05 }).unwrap();
        let rho = DensityMatrix::basis_state(4, 1);
        // |0,e> only decays through the atom
        assert!(plain.apply(&rho.rho).norm() < 1e-15);
        assert!((extra.apply(&rho.rho)[(1, 1)].re + 0.2).abs() < 1e-15);
    }

    #[test]
    fn auto_truncation_escalates() {
        let build = |n_max: usize| {
            let basis = cavity(n_max);
            let h = rotating_frame_hamiltonian(&kerr(&basis, 1.0, 0.0), &DriveSpec::uniform(1.0, 0.3, 1), &basis)?;
            let l = Lindbladian::photon_loss(h, &basis, 0.4, ExtraChannels::default())?;
            Ok((basis, l))
        };
        let (basis, ness, ok) = steady_state_auto(build, 2, 20, 1e-6, NessMethod::NullSpace, &NessOptions::default()).unwrap();
        assert!(ok);
        assert!(basis.sites()[0].n_max > 2);
        assert!(top_level_population(&ness.rho, &basis) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rhs_is_traceless(seed in 0u64..10_000, gamma in 0.0f64..2.0, omega in -1.0f64..1.0) {
            let basis = FockBasis::uniform(2, SiteSpec::photon(2), NumberSector::Unrestricted).unwrap();
            let h0 = build_bh(&BhParams::chain(2, 0.5, 0.3, 1.0, 0.0, Boundary::Open), &basis).unwrap();
            let h = rotating_frame_hamiltonian(&h0, &DriveSpec::uniform(0.2, omega, 2), &basis).unwrap();
            let rho = random_density(basis.dim(), seed);
            let rhs = liouvillian_rhs(&rho, &h, gamma, &basis).unwrap();
            prop_assert!(rhs.trace().norm() < 1e-12);
        }

        #[test]
        fn trajectories_keep_contracts(seed in 0u64..10_000, t in 0.5f64..6.0) {
            let basis = FockBasis::uniform(2, SiteSpec::photon(1), NumberSector::Unrestricted).unwrap();
            let h0 = build_bh(&BhParams::chain(2, 0.5, 0.3, 0.0, 0.0, Boundary::Open), &basis).unwrap();
            let h = rotating_frame_hamiltonian(&h0, &DriveSpec::alternating(0.2, 0.4, 2), &basis).unwrap();
            let l = Lindbladian::photon_loss(h, &basis, 0.3, ExtraChannels::default()).unwrap();
            let rho0 = random_density(basis.dim(), seed);
            let out = evolve_master(&rho0, &l, &[t / 2.0, t], &MasterOptions::default()).unwrap();
            for rho in out {
                prop_assert!((rho.trace() - C::from(1.0)).norm() < 1e-8);
                prop_assert!(rho.hermiticity_error() < 1e-10);
                prop_assert!(rho.min_eigenvalue() >= -1e-7);
            }
        }
    }
}
