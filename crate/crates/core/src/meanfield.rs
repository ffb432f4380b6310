//! Mean-field phase diagrams.
//!
//! Bose-Hubbard lobes come from the second-order coefficient `m^2` in the
//! dimensionless variables `mu~ = mu/(Jz)`, `U~ = U/(Jz)`. The JCH diagram is
//! variational: the on-site mean-field matrix is diagonalized for real
//! `psi >= 0` and the lowest eigenvalue plus `zJ psi^2` is minimized.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::FockBasis;

/// `m^2 / (Jz)` for filling `n >= 1`. Defined inside the window
/// `U~(n-1) < mu~ < U~ n`; the edges are poles.
pub fn bh_mf_m2(n: usize, mu_t: f64, u_t: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("lobe index n must be at least 1".into()));
    }
    let nf = n as f64;
    let a = u_t * (nf - 1.0) - mu_t;
    let b = mu_t - u_t * nf;
    let scale = mu_t.abs().max(u_t.abs()).max(1.0);
    if a.abs() <= 1e-14 * scale || b.abs() <= 1e-14 * scale {
        return Err(Error::Pole(format!("mu~ = {mu_t} at the edge of the n = {n} window for U~ = {u_t}")));
    }
    if !(a < 0.0 && b < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mu~ = {mu_t} outside the n = {n} window ({}, {})",
            u_t * (nf - 1.0),
            u_t * nf
        )));
    }
    Ok(1.0 + nf / a + (nf + 1.0) / b)
}

/// Roots of `m^2 = 0`, i.e. of
/// `mu~^2 - mu~ (U~(2n-1) - 1) + U~^2 n(n-1) + U~ = 0`, when both lie inside
/// the lobe window. `None` outside the lobe.
pub fn bh_mf_lobe_boundary(n: usize, u_t: f64) -> Option<(f64, f64)> {
    if n < 1 {
        return None;
    }
    let nf = n as f64;
    let b = u_t * (2.0 * nf - 1.0) - 1.0;
    let c = u_t * u_t * nf * (nf - 1.0) + u_t;
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // stable pairing of the two roots
    let q = 0.5 * (b + b.signum() * s);
    let (r1, r2) = if q == 0.0 { (0.5 * b, 0.5 * b) } else { (q, c / q) };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let inside = |x: f64| x > u_t * (nf - 1.0) && x < u_t * nf;
    (inside(lo) && inside(hi)).then_some((lo, hi))
}

/// Tip of lobe `n`: `U~_c = 2n+1 + 2 sqrt(n(n+1))`, where the boundary
/// discriminant `U~^2 - (4n+2) U~ + 1` vanishes.
pub fn bh_mf_lobe_tip(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let u_c = 2.0 * nf + 1.0 + 2.0 * (nf * (nf + 1.0)).sqrt();
    (u_c, 0.5 * (u_c * (2.0 * nf - 1.0) - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JchMfParams {
    pub mu: f64,
    pub omega_a: f64,
    pub omega_c: f64,
    pub g: f64,
    pub j: f64,
    /// Coordination number.
    pub z: f64,
}

impl JchMfParams {
    fn zj(&self) -> f64 {
        self.z * self.j
    }

    /// The mean-field energy has no lower bound once the bare photon mode,
    /// measured from `mu`, is softer than the hopping gain.
    pub fn is_unbounded(&self) -> bool {
        self.omega_c - self.mu <= self.zj()
    }
}

/// Excitation number of each row of [`jch_mf_matrix`].
fn level_excitations(n_max: usize) -> Vec<usize> {
    let mut n = vec![0];
    for k in 1..=n_max {
        n.push(k);
        n.push(k);
    }
    n
}

/// On-site mean-field matrix with up to `n_max` excitations, in the order
/// `|g,0>, |e,0>, |g,1>, |e,1>, |g,2>, ...`. The constant `zJ psi^2` is not
/// included.
pub fn jch_mf_matrix(psi: f64, p: &JchMfParams, n_max: usize) -> Result<DMatrix<f64>> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let dim = 2 * n_max + 1;
    let idx_g = |k: usize| if k == 0 { 0 } else { 2 * k };
    let idx_e = |k: usize| 2 * k + 1;
    let mut m = DMatrix::zeros(dim, dim);
    let hop = -p.zj() * psi;
    for k in 0..=n_max {
        let kf = k as f64;
        m[(idx_g(k), idx_g(k))] = (p.omega_c - p.mu) * kf;
        if k < n_max {
            m[(idx_e(k), idx_e(k))] = p.omega_a + p.omega_c * kf - p.mu * (kf + 1.0);
            let c = p.g * (kf + 1.0).sqrt();
            m[(idx_e(k), idx_g(k + 1))] = c;
            m[(idx_g(k + 1), idx_e(k))] = c;
            let h = hop * (kf + 1.0).sqrt();
            m[(idx_g(k), idx_g(k + 1))] = h;
            m[(idx_g(k + 1), idx_g(k))] = h;
            if k + 1 < n_max {
                m[(idx_e(k), idx_e(k + 1))] = h;
                m[(idx_e(k + 1), idx_e(k))] = h;
            }
        }
    }
    Ok(m)
}

/// Lowest eigenpair of a real symmetric matrix.
fn ground(m: DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m);
    let (k, e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, &e)| (k, e))
        .unwrap();
    (e, eig.eigenvectors.column(k).into_owned())
}

/// `E[psi] = lambda_min(M(psi)) + zJ psi^2`.
pub fn jch_mf_energy(psi: f64, p: &JchMfParams, n_max: usize) -> Result<f64> {
    Ok(ground(jch_mf_matrix(psi, p, n_max)?).0 + p.zj() * psi * psi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfOptions {
    /// Grid points for the initial scan of `psi`.
    pub psi_grid: usize,
    pub n_max_start: usize,
    pub n_max_cap: usize,
    /// Convergence of `psi_c` between consecutive truncations.
    pub tol: f64,
    /// `psi_c` below this (in the units of `g`) counts as zero.
    pub mott_threshold: f64,
}

impl Default for MfOptions {
    fn default() -> Self {
        MfOptions { psi_grid: 120, n_max_start: 3, n_max_cap: 12, tol: 1e-5, mott_threshold: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MfPhase {
    /// `psi_c = 0` with no excitations.
    Vacuum,
    /// `psi_c = 0` with integer filling `>= 1`.
    Mott,
    Superfluid,
    /// Energy unbounded below; no minimizer exists.
    Unbounded,
}

impl MfPhase {
    pub fn label(&self) -> &'static str {
        match self {
            MfPhase::Vacuum => "vacuum",
            MfPhase::Mott => "mott",
            MfPhase::Superfluid => "superfluid",
            MfPhase::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfPoint {
    pub params: JchMfParams,
    /// Infinite for unbounded cells.
    pub psi_c: f64,
    pub energy: f64,
    /// Mean excitation number per site of the minimizing state.
    pub filling: f64,
    pub n_max_used: usize,
    pub converged: bool,
    pub phase: MfPhase,
}

/// Minimize over `psi in [0, psi_max]`: grid scan then golden section.
fn minimize_psi(p: &JchMfParams, n_max: usize, grid: usize) -> Result<(f64, f64)> {
    let psi_max = (n_max as f64).sqrt() + 0.5;
    let grid = grid.max(8);
    let step = psi_max / grid as f64;
    let mut best = (0, jch_mf_energy(0.0, p, n_max)?);
    for k in 1..=grid {
        let e = jch_mf_energy(k as f64 * step, p, n_max)?;
        if e < best.1 {
            best = (k, e);
        }
    }
    let mut a = best.0.saturating_sub(1) as f64 * step;
    let mut b = (best.0 + 1).min(grid) as f64 * step;
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = jch_mf_energy(c, p, n_max)?;
    let mut fd = jch_mf_energy(d, p, n_max)?;
    while b - a > 1e-10 * psi_max {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = jch_mf_energy(c, p, n_max)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = jch_mf_energy(d, p, n_max)?;
        }
    }
    let psi = 0.5 * (a + b);
    let e = jch_mf_energy(psi, p, n_max)?;
    let e0 = jch_mf_energy(0.0, p, n_max)?;
    // a flat or rising energy at the origin means psi_c = 0
    if e0 <= e + 1e-14 * e.abs().max(1.0) {
        return Ok((0.0, e0));
    }
    Ok((psi, e))
}

fn filling_at(psi: f64, p: &JchMfParams, n_max: usize) -> Result<f64> {
    let (_, v) = ground(jch_mf_matrix(psi, p, n_max)?);
    Ok(level_excitations(n_max).iter().zip(v.iter()).map(|(&n, c)| n as f64 * c * c).sum())
}

/// Self-consistent order parameter, raising the truncation until `psi_c`
/// stops changing. A cell that hits `n_max_cap` is returned with
/// `converged = false`.
pub fn jch_mf_solve(p: &JchMfParams, opts: &MfOptions) -> Result<MfPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if opts.n_max_start < 1 || opts.n_max_cap < opts.n_max_start {
        return Err(Error::InvalidParameter("need 1 <= n_max_start <= n_max_cap".into()));
    }
    if p.is_unbounded() {
        return Ok(MfPoint {
            params: *p,
            psi_c: f64::INFINITY,
            energy: f64::NEG_INFINITY,
            filling: f64::INFINITY,
            n_max_used: opts.n_max_start,
            converged: true,
            phase: MfPhase::Unbounded,
        });
    }
    let mut n_max = opts.n_max_start;
    let (mut psi, mut energy) = minimize_psi(p, n_max, opts.psi_grid)?;
    let mut converged = false;
    while n_max < opts.n_max_cap {
        n_max += 1;
        let (next_psi, next_e) = minimize_psi(p, n_max, opts.psi_grid)?;
        let delta = (next_psi - psi).abs();
        psi = next_psi;
        energy = next_e;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    let filling = filling_at(psi, p, n_max)?;
    let phase = if psi >= opts.mott_threshold {
        MfPhase::Superfluid
    } else if filling < 0.5 {
        MfPhase::Vacuum
    } else {
        MfPhase::Mott
    };
    if !converged {
        log::warn!("mean-field psi_c not converged at n_max = {n_max} (mu = {}, zJ = {})", p.mu, p.zj());
    }
    Ok(MfPoint { params: *p, psi_c: psi, energy, filling, n_max_used: n_max, converged, phase })
}

/// Grid over `(mu - omega_c)/g` and `zJ/g` at fixed detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSpec {
    pub omega_c: f64,
    /// `omega_a - omega_c`.
    pub detuning: f64,
    pub g: f64,
    pub z: f64,
    pub mu_offsets: Vec<f64>,
    pub zj_values: Vec<f64>,
}

impl DiagramSpec {
    /// Evenly spaced axes including both end points.
    pub fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![range.0];
        }
        (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect()
    }

    fn params(&self, mu_offset: f64, zj: f64) -> JchMfParams {
        JchMfParams {
            mu: self.omega_c + mu_offset * self.g,
            omega_a: self.omega_c + self.detuning,
            omega_c: self.omega_c,
            g: self.g,
            j: zj * self.g / self.z,
            z: self.z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub spec: DiagramSpec,
    /// Row-major: `cells[i * zj_values.len() + k]` is `(mu_offsets[i], zj_values[k])`.
    pub cells: Vec<MfPoint>,
}

impl PhaseDiagram {
    pub fn cell(&self, mu_index: usize, zj_index: usize) -> &MfPoint {
        &self.cells[mu_index * self.spec.zj_values.len() + zj_index]
    }

    pub fn unconverged(&self) -> usize {
        self.cells.iter().filter(|c| !c.converged).count()
    }

    /// 4-connected components of the cells matching `phase`, each as a list
    /// of `(mu_index, zj_index)`.
    pub fn components(&self, phase: MfPhase) -> Vec<Vec<(usize, usize)>> {
        let (nm, nz) = (self.spec.mu_offsets.len(), self.spec.zj_values.len());
        let mut seen = vec![false; nm * nz];
        let mut out = Vec::new();
        for start in 0..nm * nz {
            if seen[start] || self.cells[start].phase != phase {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(c) = stack.pop() {
                let (i, k) = (c / nz, c % nz);
                comp.push((i, k));
                let mut nb = Vec::with_capacity(4);
                if i > 0 {
                    nb.push(c - nz);
                }
                if i + 1 < nm {
                    nb.push(c + nz);
                }
                if k > 0 {
                    nb.push(c - 1);
                }
                if k + 1 < nz {
                    nb.push(c + 1);
                }
                for n in nb {
                    if !seen[n] && self.cells[n].phase == phase {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Cells where `psi_c` drops by more than `slack` when `zJ` increases at
    /// fixed `mu`. Unbounded cells end a scan line.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<(usize, usize)> {
        let nz = self.spec.zj_values.len();
        let mut out = Vec::new();
        for i in 0..self.spec.mu_offsets.len() {
            for k in 1..nz {
                let (prev, cur) = (self.cell(i, k - 1), self.cell(i, k));
                if cur.phase == MfPhase::Unbounded || prev.phase == MfPhase::Unbounded {
                    break;
                }
                if cur.psi_c + slack < prev.psi_c {
                    out.push((i, k));
                }
            }
        }
        out
    }
}

/// Solve every cell concurrently on the current rayon pool; cell order in the
/// result is fixed by the grid.
pub fn jch_mf_phase_diagram(spec: &DiagramSpec, opts: &MfOptions) -> Result<PhaseDiagram> {
    if spec.mu_offsets.is_empty() || spec.zj_values.is_empty() {
        return Err(Error::InvalidParameter("phase diagram axes must be non-empty".into()));
    }
    if spec.g <= 0.0 || spec.z <= 0.0 {
        return Err(Error::InvalidParameter("g and z must be positive".into()));
    }
    if spec.zj_values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("zJ/g values must be non-negative".into()));
    }
    let nz = spec.zj_values.len();
    let cells = (0..spec.mu_offsets.len() * nz)
        .into_par_iter()
        .map(|c| jch_mf_solve(&spec.params(spec.mu_offsets[c / nz], spec.zj_values[c % nz]), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram { spec: spec.clone(), cells })
}

/// Site average of `sqrt(<N_j^2> - <N_j>^2)` with `N_j` photons plus atom.
pub fn var_n_order_parameter(state: &DVector<Complex64>, basis: &FockBasis) -> Result<f64> {
    if state.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: state.len() });
    }
    let l = basis.n_sites();
    let mut m1 = vec![0.0; l];
    let mut m2 = vec![0.0; l];
    for (i, amp) in state.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for j in 0..l {
            let n = (basis.photons(i, j) + basis.atom(i, j)) as f64;
            m1[j] += w * n;
            m2[j] += w * n * n;
        }
    }
    let norm = state.norm_squared();
    Ok((0..l).map(|j| (m2[j] / norm - (m1[j] / norm).powi(2)).max(0.0).sqrt()).sum::<f64>() / l as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{NumberSector, SiteSpec};
    use proptest::prelude::*;

    fn res(mu: f64, j: f64) -> JchMfParams {
        JchMfParams { mu, omega_a: 0.0, omega_c: 0.0, g: 1.0, j, z: 2.0 }
    }

    /// Rayleigh-Schrodinger second order in `V = -psi (a + a^dag)` for the
    /// on-site problem `-mu~ n + U~/2 n(n-1)` truncated at `n + 3`, in units
    /// of `Jz`. Returns the coefficient of `psi^2` including the `+psi^2`
    /// constant.
    fn m2_oracle(n: usize, mu_t: f64, u_t: f64) -> f64 {
        let dim = n + 4;
        let e0 = |k: usize| -mu_t * k as f64 + 0.5 * u_t * (k * k.saturating_sub(1)) as f64;
        let v = |a: usize, b: usize| -> f64 {
            if a + 1 == b {
                -(b as f64).sqrt()
            } else if b + 1 == a {
                -(a as f64).sqrt()
            } else {
                0.0
            }
        };
        let mut second = 0.0;
        for k in 0..dim {
            if k != n {
                second += v(k, n).powi(2) / (e0(n) - e0(k));
            }
        }
        1.0 + second
    }

    #[test]
    fn m2_examples() {
        assert!((bh_mf_m2(1, 0.5, 6.0).unwrap() - (1.0 - 2.0 + 2.0 / -5.5)).abs() < 1e-14);
        assert!((bh_mf_m2(1, 0.5, 6.0).unwrap() + 1.363_636_363_636_36).abs() < 1e-12);
        assert!((bh_mf_m2(1, 0.5, 2.0).unwrap() + 2.333_333_333_333_33).abs() < 1e-12);
        // deep inside the lobe at vanishing hopping
        assert!((bh_mf_m2(1, 0.5e8, 1e8).unwrap() - 1.0).abs() < 1e-6);
        assert!(matches!(bh_mf_m2(1, 0.0, 5.0), Err(Error::Pole(_))));
        assert!(matches!(bh_mf_m2(2, 10.0, 5.0), Err(Error::Pole(_))));
        assert!(matches!(bh_mf_m2(1, 7.0, 5.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn lobe_tip() {
        let (u_c, mu_tip) = bh_mf_lobe_tip(1);
        assert!((u_c - (3.0 + 2f64.sqrt() * 2.0)).abs() < 1e-14);
        assert!((mu_tip - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        // discriminant root
        assert!((u_c * u_c - 6.0 * u_c + 1.0).abs() < 1e-12);
        assert!(bh_mf_lobe_boundary(1, 4.0).is_none());
        let (lo, hi) = bh_mf_lobe_boundary(1, 10.0).unwrap();
        assert!(lo < 9.0 / 2.0 && hi > 9.0 / 2.0);
        assert!((lo + hi - 9.0).abs() < 1e-12 && (lo * hi - 10.0).abs() < 1e-12);
        for n in 1..5 {
            let (u_c, mu_tip) = bh_mf_lobe_tip(n);
            let (lo, hi) = bh_mf_lobe_boundary(n, u_c * (1.0 + 1e-12)).unwrap();
            assert!((lo - mu_tip).abs() < 1e-4 && (hi - mu_tip).abs() < 1e-4);
            assert!(bh_mf_lobe_boundary(n, u_c * (1.0 - 1e-6)).is_none());
        }
    }

    #[test]
    fn scanned_sign_change_matches_roots() {
        for (n, u_t) in [(1, 8.0), (1, 20.0), (2, 15.0), (3, 40.0)] {
            let (lo, hi) = bh_mf_lobe_boundary(n, u_t).unwrap();
            let f = |mu: f64| bh_mf_m2(n, mu, u_t).unwrap();
            let bisect = |mut a: f64, mut b: f64| {
                let fa = f(a);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if (f(m) > 0.0) == (fa > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            };
            let (w0, w1) = (u_t * (n as f64 - 1.0), u_t * n as f64);
            let samples: Vec<f64> = (1..2000).map(|k| w0 + (w1 - w0) * k as f64 / 2000.0).collect();
            let mut crossings = Vec::new();
            for w in samples.windows(2) {
                if (f(w[0]) > 0.0) != (f(w[1]) > 0.0) {
                    crossings.push(bisect(w[0], w[1]));
                }
            }
            assert_eq!(crossings.len(), 2);
            assert!((crossings[0] - lo).abs() < 1e-8 && (crossings[1] - hi).abs() < 1e-8);
        }
    }

    #[test]
    fn small_matrices_explicit() {
        let p = JchMfParams { mu: 0.3, omega_a: 1.1, omega_c: 1.0, g: 0.2, j: 0.05, z: 2.0 };
        let psi = 0.4;
        let h = -2.0 * p.j * psi;
        let m = jch_mf_matrix(psi, &p, 1).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, h, 0.0, 1.1 - 0.3, 0.2, h, 0.2, 1.0 - 0.3]);
        assert!((m - expected).norm() < 1e-15);
        let m = jch_mf_matrix(psi, &p, 2).unwrap();
        let s2 = 2f64.sqrt();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(5, 5, &[
            0.0, 0.0, h, 0.0, 0.0,
            0.0, 0.8, 0.2, h, 0.0,
            h, 0.2, 0.7, 0.0, s2 * h,
            0.0, h, 0.0, 1.1 + 1.0 - 0.6, s2 * 0.2,
            0.0, 0.0, s2 * h, s2 * 0.2, 2.0 - 0.6,
        ]);
        assert!((m - expected).norm() < 1e-15);
        assert!(jch_mf_matrix(psi, &p, 0).is_err());
    }

    #[test]
    fn zero_psi_is_block_diagonal() {
        let p = res(-0.4, 0.1);
        let e = jch_mf_energy(0.0, &p, 1).unwrap();
        assert!((e - (0.4 - 1.0)).abs() < 1e-12);
        // beyond one excitation the two-polariton level can win
        let e = jch_mf_energy(0.0, &p, 4).unwrap();
        assert!((e - (0.8 - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn solver_regimes() {
        let opts = MfOptions::default();
        let deep = jch_mf_solve(&res(-0.7, 0.005), &opts).unwrap();
        assert!(deep.converged && deep.psi_c < opts.mott_threshold);
        assert_eq!(deep.phase, MfPhase::Mott);
        assert!((deep.filling - 1.0).abs() < 1e-6);

        let sf = jch_mf_solve(&res(-0.5, 0.5), &opts).unwrap();
        assert_eq!(sf.phase, MfPhase::Unbounded);
        assert!(sf.psi_c > 0.1);
        let sf = jch_mf_solve(&res(-0.5, 0.2), &opts).unwrap();
        assert!(sf.psi_c > 0.1 && sf.phase == MfPhase::Superfluid, "{sf:?}");

        let empty = JchMfParams { mu: 0.5, omega_a: 1.0, omega_c: 1.0, g: 0.0, j: 0.1, z: 2.0 };
        let r = jch_mf_solve(&empty, &opts).unwrap();
        assert_eq!(r.psi_c, 0.0);
        assert_eq!(r.phase, MfPhase::Vacuum);
    }

    #[test]
    fn solver_grid_oracle_at_fixed_truncation() {
        let p = res(-0.6, 0.15);
        let (psi, e) = minimize_psi(&p, 6, 120).unwrap();
        let fine = (0..=20000).map(|k| k as f64 * 3.0 / 20000.0);
        let (best_psi, best_e) = fine
            .map(|x| (x, jch_mf_energy(x, &p, 6).unwrap()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(e <= best_e + 1e-12);
        assert!((psi - best_psi).abs() < 2e-3);
    }

    #[test]
    fn axis_column_is_mott_between_minus_one_and_zero() {
        let opts = MfOptions::default();
        for k in 1..20 {
            let mu = -1.0 + k as f64 / 20.0;
            let r = jch_mf_solve(&res(mu, 0.0), &opts).unwrap();
            assert_eq!(r.phase, MfPhase::Mott, "mu = {mu}");
        }
        assert_eq!(jch_mf_solve(&res(-1.05, 0.0), &opts).unwrap().phase, MfPhase::Vacuum);
        // n = 1 lobe ends where the second polariton becomes favourable
        let edge = 1.0 - 2f64.sqrt();
        assert!((jch_mf_solve(&res(edge - 1e-3, 0.0), &opts).unwrap().filling - 1.0).abs() < 1e-9);
        assert!((jch_mf_solve(&res(edge + 1e-3, 0.0), &opts).unwrap().filling - 2.0).abs() < 1e-9);
    }

    #[test]
    fn small_diagram_is_deterministic_and_monotone() {
        let spec = DiagramSpec {
            omega_c: 0.0,
            detuning: 0.0,
            g: 1.0,
            z: 2.0,
            mu_offsets: DiagramSpec::linspace((-1.2, 0.2), 6),
            zj_values: DiagramSpec::linspace((0.0, 0.5), 6),
        };
        let a = jch_mf_phase_diagram(&spec, &MfOptions::default()).unwrap();
        let b = jch_mf_phase_diagram(&spec, &MfOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.monotonicity_violations(1e-6).is_empty());
        assert_eq!(a.components(MfPhase::Mott).len(), 1);
    }

    #[test]
    fn var_n_examples() {
        let basis = FockBasis::uniform(2, SiteSpec::photon(1), NumberSector::Exactly(1)).unwrap();
        let s = Complex64::new(0.5f64.sqrt(), 0.0);
        let state = DVector::from_vec(vec![s, s]);
        assert!((var_n_order_parameter(&state, &basis).unwrap() - 0.5).abs() < 1e-14);

        let vac = FockBasis::uniform(3, SiteSpec::with_atom(1), NumberSector::Unrestricted).unwrap();
        let mut v = DVector::zeros(vac.dim());
        v[0] = Complex64::new(1.0, 0.0);
        assert_eq!(var_n_order_parameter(&v, &vac).unwrap(), 0.0);

        // product of lower polaritons (|1,g> - |0,e>)/sqrt2 on each site
        let one = FockBasis::uniform(2, SiteSpec::with_atom(1), NumberSector::Exactly(2)).unwrap();
        let mut v = DVector::zeros(one.dim());
        let site = [([1u8, 0u8], 0.5f64.sqrt()), ([0, 1], -(0.5f64.sqrt()))];
        for (a, ca) in site {
            for (b, cb) in site {
                let i = one.index_of_occupation(&[a[0], b[0]], &[a[1], b[1]]).unwrap();
                v[i] = Complex64::new(ca * cb, 0.0);
            }
        }
        assert!(var_n_order_parameter(&v, &one).unwrap() < 1e-14);
    }

    proptest! {
        #[test]
        fn m2_matches_second_order_oracle(n in 1usize..5, u_t in 0.5f64..30.0, frac in 0.02f64..0.98) {
            let nf = n as f64;
            let mu_t = u_t * (nf - 1.0 + frac);
            let m2 = bh_mf_m2(n, mu_t, u_t).unwrap();
            let oracle = m2_oracle(n, mu_t, u_t);
            prop_assert!((m2 - oracle).abs() <= 1e-6 * oracle.abs().max(1.0));
        }

        #[test]
        fn energy_even_in_psi(psi in 0.0f64..2.0, mu in -1.0f64..-0.1, j in 0.0f64..0.05, n_max in 1usize..8) {
            let p = res(mu, j);
            let a = jch_mf_energy(psi, &p, n_max).unwrap();
            let b = jch_mf_energy(-psi, &p, n_max).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
