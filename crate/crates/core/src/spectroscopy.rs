//! Time-domain many-body spectroscopy.
//!
//! Each site is prepared in a superposition of vacuum and one photon, the
//! array evolves freely, and quadratures are read out. Summing
//! `<a_p>(t)` over sites gives chi1, summing `<a_p a_q>(t)` over ordered
//! pairs `p != q` gives chi2. Their Fourier transforms have peaks at the
//! one- and two-photon eigenenergies (measured from the vacuum).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{require, Error, Result};
use crate::fockspace::{FockBasis, LadderKind, NumberSector, SiteSpec};
use crate::linalg::{diagonalize, eigh_dense, evolve_in_eigenbasis, Spectrum};
use crate::models::{build_harper, HarperParams};
use crate::operator::{Operator, Symmetry};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Uniformly sampled complex signal, `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<C>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.len().saturating_sub(1)) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Adds complex Gaussian noise with standard deviation `sigma` per
    /// quadrature. Deterministic for a given seed.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> Result<TimeSeries> {
        require(sigma >= 0.0 && sigma.is_finite(), || format!("noise level {sigma}"))?;
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = self.values.iter().map(|&v| v + C::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect();
        Ok(TimeSeries { dt: self.dt, values })
    }
}

/// Sampling grid: `n = round(t_total / dt) + 1` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_total: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_total: f64, dt: f64) -> Result<Self> {
        require(t_total > 0.0 && dt > 0.0 && t_total.is_finite(), || format!("time grid T = {t_total}, dt = {dt}"))?;
        Ok(TimeGrid { t_total, dt })
    }

    /// Nyquist span `2 pi / dt` at least twice the Gershgorin spread of `h`.
    pub fn for_operator(h: &Operator, t_total: f64) -> Result<Self> {
        let (lo, hi) = h.gershgorin_bounds();
        let spread = (hi - lo).max(1e-12);
        let n = (t_total * spread / std::f64::consts::PI).ceil().max(63.0) as usize + 1;
        TimeGrid::new(t_total, t_total / (n - 1) as f64)
    }

    pub fn len(&self) -> usize {
        (self.t_total / self.dt).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesMethod {
    /// State-vector emulation of preparation, evolution and quadrature readout.
    #[default]
    Protocol,
    /// Closed-form sum over eigenstates of the relevant number sector.
    EigenExpansion,
}

fn check_conserving(h: &Operator, basis: &FockBasis) -> Result<()> {
    if h.rows() != basis.dim() || !h.is_square() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: h.rows() });
    }
    let c = h.commutator_norm(&basis.total_number_operator())?;
    if c > 1e-10 * h.norm_inf().max(1.0) {
        return Err(Error::NotNumberConserving(c));
    }
    Ok(())
}

fn fock_index(basis: &FockBasis, occupied: &[usize]) -> Result<usize> {
    let mut photons = vec![0u8; basis.n_sites()];
    for &p in occupied {
        photons[p] += 1;
    }
    let atoms = vec![0u8; basis.n_sites()];
    basis
        .index_of_occupation(&photons, &atoms)
        .ok_or_else(|| Error::BasisMismatch(format!("basis has no Fock state with photons {photons:?}")))
}

/// Rows/columns of `h` whose states carry exactly `n` excitations, and
/// that diagonal block.
pub fn sector_block(h: &Operator, basis: &FockBasis, n: usize) -> (Vec<usize>, DMatrix<C>) {
    let idx: Vec<usize> = (0..basis.dim()).filter(|&i| basis.total_excitations(i) == n).collect();
    let dense = h.to_dense();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| dense[(idx[r], idx[c])]);
    (idx, block)
}

fn vacuum_energy(h: &Operator, basis: &FockBasis) -> Result<f64> {
    let v = basis.vacuum_index().ok_or_else(|| Error::BasisMismatch("basis has no vacuum".into()))?;
    Ok(h.get(v, v).re)
}

fn quadratures(basis: &FockBasis, p: usize) -> Result<(Operator, Operator)> {
    let a = basis.site_operator(p, LadderKind::Annihilate)?;
    let ad = a.adjoint();
    let x = ad.add_scaled(&a, C::from(1.0))?.with_symmetry(Symmetry::Hermitian);
    let y = ad.add_scaled(&a, C::from(-1.0))?.scale(I).with_symmetry(Symmetry::Hermitian);
    Ok((x, y))
}

fn full_spectrum(h: &Operator) -> Result<Spectrum> {
    let spec = diagonalize(h)?;
    if !spec.complete {
        return Err(Error::Unsupported("spectroscopy emulation needs the full spectrum of the truncated space".into()));
    }
    Ok(spec)
}

/// `chi1(t) = sum_p <a_p>(t)`, each `p` started from `(|vac> + |1_p>) / sqrt 2`.
/// `basis` must contain the vacuum and every single-photon Fock state.
pub fn chi1_series(h: &Operator, basis: &FockBasis, grid: &TimeGrid, method: SeriesMethod) -> Result<TimeSeries> {
    check_conserving(h, basis)?;
    let l = basis.n_sites();
    let times = grid.times();
    let vac = fock_index(basis, &[])?;
    let singles = (0..l).map(|p| fock_index(basis, &[p])).collect::<Result<Vec<_>>>()?;
    let e0 = vacuum_energy(h, basis)?;
    let values = match method {
        SeriesMethod::Protocol => {
            let spec = full_spectrum(h)?;
            let per_site: Vec<Vec<C>> = (0..l)
                .into_par_iter()
                .map(|p| {
                    let mut psi0 = DVector::zeros(basis.dim());
                    psi0[vac] = C::from(std::f64::consts::FRAC_1_SQRT_2);
                    psi0[singles[p]] = C::from(std::f64::consts::FRAC_1_SQRT_2);
                    let (x, y) = quadratures(basis, p)?;
                    Ok(evolve_in_eigenbasis(&spec, &psi0, &times)
                        .iter()
                        .map(|psi| {
                            let (xv, yv) = (x.expectation(psi).re, y.expectation(psi).re);
                            C::new(xv, yv) * 0.5
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            sum_columns(&per_site, times.len())
        }
        SeriesMethod::EigenExpansion => {
            let (idx, block) = sector_block(h, basis, 1);
            let (energies, vectors) = eigh_dense(&block);
            let weights: Vec<f64> = (0..energies.len())
                .map(|a| {
                    0.5 * (0..idx.len()).filter(|r| singles.contains(&idx[*r])).map(|r| vectors[(r, a)].norm_sqr()).sum::<f64>()
                })
                .collect();
            tone_sum(&energies, &weights, e0, &times)
        }
    };
    Ok(TimeSeries { dt: grid.dt, values })
}

/// `chi2(t) = sum_{p != q} <a_p a_q>(t)` over ordered pairs, each started
/// from `|0>...(|0> + |1>)_p ... (|0> + |1>)_q ... / 2`.
pub fn chi2_series(h: &Operator, basis: &FockBasis, grid: &TimeGrid, method: SeriesMethod) -> Result<TimeSeries> {
    check_conserving(h, basis)?;
    let l = basis.n_sites();
    require(l >= 2, || "chi2 needs at least two sites".into())?;
    let times = grid.times();
    let e0 = vacuum_energy(h, basis)?;
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|p| (0..l).filter(move |&q| q != p).map(move |q| (p, q))).collect();
    let values = match method {
        SeriesMethod::Protocol => {
            let spec = full_spectrum(h)?;
            let vac = fock_index(basis, &[])?;
            let quads = (0..l).map(|p| quadratures(basis, p)).collect::<Result<Vec<_>>>()?;
            let per_pair: Vec<Vec<C>> = pairs
                .par_iter()
                .map(|&(p, q)| {
                    let mut psi0 = DVector::zeros(basis.dim());
                    for k in [vac, fock_index(basis, &[p])?, fock_index(basis, &[q])?, fock_index(basis, &[p, q])?] {
                        psi0[k] = C::from(0.5);
                    }
                    let (xp, yp) = &quads[p];
                    let (xq, yq) = &quads[q];
                    // the quadratures of different sites commute, so each
                    // product is a Hermitian observable
                    let xx = xp.mul(xq)?;
                    let yy = yp.mul(yq)?;
                    let xy = xp.mul(yq)?;
                    let yx = yp.mul(xq)?;
                    Ok(evolve_in_eigenbasis(&spec, &psi0, &times)
                        .iter()
                        .map(|psi| {
                            let m = |o: &Operator| o.expectation(psi).re;
                            C::new(m(&xx) - m(&yy), m(&xy) + m(&yx)) * 0.25
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            sum_columns(&per_pair, times.len())
        }
        SeriesMethod::EigenExpansion => {
            let (idx, block) = sector_block(h, basis, 2);
            let (energies, vectors) = eigh_dense(&block);
            let rows: Vec<usize> = pairs
                .iter()
                .map(|&(p, q)| {
                    let k = fock_index(basis, &[p, q])?;
                    idx.iter()
                        .position(|&i| i == k)
                        .ok_or_else(|| Error::BasisMismatch("pair state outside the two-excitation block".into()))
                })
                .collect::<Result<_>>()?;
            let weights: Vec<f64> =
                (0..energies.len()).map(|b| 0.25 * rows.iter().map(|&r| vectors[(r, b)].norm_sqr()).sum::<f64>()).collect();
            tone_sum(&energies, &weights, e0, &times)
        }
    };
    Ok(TimeSeries { dt: grid.dt, values })
}

fn sum_columns(cols: &[Vec<C>], n: usize) -> Vec<C> {
    let mut out = vec![C::from(0.0); n];
    for col in cols {
        for (o, v) in out.iter_mut().zip(col) {
            *o += v;
        }
    }
    out
}

fn tone_sum(energies: &[f64], weights: &[f64], e0: f64, times: &[f64]) -> Vec<C> {
    times
        .iter()
        .map(|&t| energies.iter().zip(weights).map(|(&e, &w)| C::from_polar(w, -(e - e0) * t)).sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub energy: f64,
    /// `|A|` for a tone `A e^{-i E t}`.
    pub weight: f64,
    pub amplitude: C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Ascending in energy.
    pub peaks: Vec<Peak>,
    /// `2 pi / T`; tones closer than this are not separated.
    pub resolution: f64,
}

impl SpectralResult {
    pub fn energies(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.energy).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub min_weight: f64,
    /// Zero-padding factor for the DFT grid.
    pub pad: usize,
    /// Hann window instead of the default rectangular one.
    pub hann: bool,
    /// Least-squares refinement of energies and amplitudes after peak picking.
    pub refine: bool,
    /// Spectral bounds of the generating Hamiltonian relative to the vacuum.
    /// Enables the aliasing check and places the frequency window.
    pub bounds: Option<(f64, f64)>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { min_weight: 0.25, pad: 8, hann: false, refine: true, bounds: None }
    }
}

/// Fourier peak extraction. Frequencies are unwrapped into
/// `[lo - margin, lo - margin + 2 pi / dt)` when bounds are given, else
/// centred on zero.
pub fn extract_spectrum(series: &TimeSeries, opts: &ExtractOptions) -> Result<SpectralResult> {
    let n = series.len();
    if n < 64 {
        return Err(Error::InvalidParameter(format!("series has {n} samples; at least 64 are needed")));
    }
    require(series.dt > 0.0, || "series dt must be positive".into())?;
    require(opts.min_weight >= 0.0, || "min_weight must be non-negative".into())?;
    let span = 2.0 * std::f64::consts::PI / series.dt;
    let start = match opts.bounds {
        Some((lo, hi)) => {
            if span < hi - lo {
                return Err(Error::Aliasing { span, spread: hi - lo });
            }
            lo - 0.5 * (span - (hi - lo))
        }
        None => -0.5 * span,
    };
    let resolution = 2.0 * std::f64::consts::PI / series.duration();
    let wrap = |e: f64| start + (e - start).rem_euclid(span);
    let dft = Dft::new(n, opts.pad.max(1), opts.hann, series.dt);
    let mut peaks = Vec::new();
    if opts.refine {
        // CLEAN: take the strongest line, fit it, subtract, repeat. Sidelobes
        // of strong lines never get picked because their parent is gone.
        let mut resid = series.values.clone();
        while peaks.len() < n / 2 {
            let mag = dft.magnitude(&resid);
            let j = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
            if mag[j] < opts.min_weight {
                break;
            }
            let (guess, _) = dft.interpolate(&mag, j);
            let e = best_frequency(&resid, series.dt, guess, resolution);
            let amplitude = project(&resid, series.dt, e);
            if amplitude.norm() < opts.min_weight {
                break;
            }
            add_tone(&mut resid, series.dt, e, amplitude, -1.0);
            peaks.push(Peak { energy: e, weight: amplitude.norm(), amplitude });
        }
        refine(&series.values, series.dt, &mut peaks, resolution);
        peaks.retain(|p| p.weight >= opts.min_weight);
    } else {
        let mag = dft.magnitude(&series.values);
        let m = mag.len();
        for j in 0..m {
            let (a, b, c) = (mag[(j + m - 1) % m], mag[j], mag[(j + 1) % m]);
            if b < opts.min_weight || b < a || b <= c {
                continue;
            }
            let (energy, weight) = dft.interpolate(&mag, j);
            let amplitude = project(&series.values, series.dt, energy) * dft.gain();
            peaks.push(Peak { energy, weight, amplitude });
        }
    }
    for p in &mut peaks {
        p.energy = wrap(p.energy);
    }
    peaks.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(SpectralResult { peaks, resolution })
}

/// Zero-padded, optionally windowed DFT normalized so a tone `A e^{-i E t}`
/// peaks at `|A|`.
struct Dft {
    window: Vec<f64>,
    norm: f64,
    m: usize,
    bin: f64,
    plan: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Dft {
    fn new(n: usize, pad: usize, hann: bool, dt: f64) -> Self {
        let window: Vec<f64> = if hann {
            (0..n).map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()).collect()
        } else {
            vec![1.0; n]
        };
        let norm = window.iter().sum();
        let m = n * pad;
        let plan = FftPlanner::new().plan_fft_inverse(m);
        Dft { window, norm, m, bin: 2.0 * std::f64::consts::PI / dt / m as f64, plan }
    }

    fn gain(&self) -> f64 {
        self.window.len() as f64 / self.norm
    }

    /// `|X(omega_j)|` with `X(omega) = sum_k w_k x_k e^{+i omega t_k} / sum w`,
    /// `omega_j = j * bin`.
    fn magnitude(&self, x: &[C]) -> Vec<f64> {
        let mut buf: Vec<C> = x.iter().zip(&self.window).map(|(v, w)| v * *w).collect();
        buf.resize(self.m, C::from(0.0));
        self.plan.process(&mut buf);
        buf.iter().map(|z| z.norm() / self.norm).collect()
    }

    /// Parabola through the three bins around `j`: (frequency, height).
    fn interpolate(&self, mag: &[f64], j: usize) -> (f64, f64) {
        let m = mag.len();
        let (a, b, c) = (mag[(j + m - 1) % m], mag[j], mag[(j + 1) % m]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        ((j as f64 + shift) * self.bin, b - 0.25 * (a - c) * shift)
    }
}

/// `(1/n) sum_k x_k e^{+i E t_k}`, the least-squares amplitude of one tone.
fn project(x: &[C], dt: f64, e: f64) -> C {
    let step = C::from_polar(1.0, e * dt);
    let mut ph = C::from(1.0);
    let mut acc = C::from(0.0);
    for (k, v) in x.iter().enumerate() {
        if k % 64 == 0 {
            // re-anchor the phase recurrence
            ph = C::from_polar(1.0, e * dt * k as f64);
        }
        acc += v * ph;
        ph *= step;
    }
    acc / x.len() as f64
}

fn add_tone(out: &mut [C], dt: f64, e: f64, amp: C, sign: f64) {
    let step = C::from_polar(1.0, -e * dt);
    let mut ph = amp * sign;
    for (k, v) in out.iter_mut().enumerate() {
        if k % 64 == 0 {
            ph = amp * sign * C::from_polar(1.0, -e * dt * k as f64);
        }
        *v += ph;
        ph *= step;
    }
}

/// Coordinate-wise refinement: each peak's energy maximizes the projection
/// of the residual that excludes it; its amplitude is that projection.
fn refine(x: &[C], dt: f64, peaks: &mut [Peak], resolution: f64) {
    let mut resid = x.to_vec();
    for p in peaks.iter() {
        add_tone(&mut resid, dt, p.energy, p.amplitude, -1.0);
    }
    for _sweep in 0..12 {
        let mut moved: f64 = 0.0;
        for p in peaks.iter_mut() {
            add_tone(&mut resid, dt, p.energy, p.amplitude, 1.0);
            let e = best_frequency(&resid, dt, p.energy, resolution);
            moved = moved.max((e - p.energy).abs());
            p.energy = e;
            p.amplitude = project(&resid, dt, e);
            p.weight = p.amplitude.norm();
            add_tone(&mut resid, dt, p.energy, p.amplitude, -1.0);
        }
        if moved < 1e-9 * resolution {
            break;
        }
    }
}

/// Golden-section maximum of `|project(x, E)|` within half a resolution
/// of `guess`.
fn best_frequency(x: &[C], dt: f64, guess: f64, resolution: f64) -> f64 {
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let f = |e: f64| project(x, dt, e).norm();
    let (mut a, mut b) = (guess - 0.5 * resolution, guess + 0.5 * resolution);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 * resolution {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// For every extracted peak, the distance to the nearest reference level.
pub fn peak_errors(result: &SpectralResult, exact: &[f64]) -> Vec<f64> {
    result
        .peaks
        .iter()
        .map(|p| exact.iter().map(|e| (e - p.energy).abs()).fold(f64::INFINITY, f64::min))
        .collect()
}

/// One `b` column of a Harper butterfly scan.
#[derive(Debug, Clone)]
pub struct ButterflyColumn {
    pub b: f64,
    /// Extracted spectrum, or the failure for this cell.
    pub spectrum: std::result::Result<SpectralResult, Error>,
    /// Exact levels of the probed sector (relative to the vacuum).
    pub exact: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// `None` means `100 / |J|`.
    pub t_total: Option<f64>,
    pub method: SeriesMethod,
    pub extract: ExtractOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { t_total: None, method: SeriesMethod::Protocol, extract: ExtractOptions::default() }
    }
}

/// Harper Hamiltonian on all states with at most `n_photons` photons,
/// which is what the protocol needs.
pub fn harper_protocol_setup(p: &HarperParams) -> Result<(FockBasis, Operator)> {
    require((1..=2).contains(&p.n_photons), || format!("spectroscopy supports 1 or 2 photons, got {}", p.n_photons))?;
    let basis = FockBasis::uniform(p.l, SiteSpec::photon(p.n_photons), NumberSector::AtMost(p.n_photons))?;
    let h = build_harper(p, &basis)?;
    Ok((basis, h))
}

/// Spectroscopy of the Harper model over `b_values`; `template.b` is ignored.
/// chi1 for one photon, chi2 for two. Columns follow the order of `b_values`.
pub fn butterfly_scan(b_values: &[f64], template: &HarperParams, opts: &ScanOptions) -> Result<Vec<ButterflyColumn>> {
    require(template.j != 0.0, || "butterfly scan needs J != 0 to set the time scale".into())?;
    let t_total = opts.t_total.unwrap_or(100.0 / template.j.abs());
    for &b in b_values {
        require((0.0..=1.0).contains(&b), || format!("b = {b} outside [0,1]"))?;
    }
    Ok(b_values
        .par_iter()
        .map(|&b| {
            let p = HarperParams { b, ..template.clone() };
            let cell = || -> Result<(SpectralResult, Vec<f64>)> {
                let (basis, h) = harper_protocol_setup(&p)?;
                let grid = TimeGrid::for_operator(&h, t_total)?;
                let (_, block) = sector_block(&h, &basis, p.n_photons);
                let exact = eigh_dense(&block).0;
                let series = match p.n_photons {
                    1 => chi1_series(&h, &basis, &grid, opts.method)?,
                    _ => chi2_series(&h, &basis, &grid, opts.method)?,
                };
                let (lo, hi) = h.gershgorin_bounds();
                let extract = ExtractOptions { bounds: Some((lo, hi)), ..opts.extract };
                Ok((extract_spectrum(&series, &extract)?, exact))
            };
            match cell() {
                Ok((s, exact)) => ButterflyColumn { b, spectrum: Ok(s), exact },
                Err(e) => ButterflyColumn { b, spectrum: Err(e), exact: Vec::new() },
            }
        })
        .collect())
}

/// Level-spacing statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub spacings: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `bins + 1` edges on `[0, 1]`.
    pub bin_edges: Vec<f64>,
    /// Histogram normalized to unit area.
    pub density: Vec<f64>,
    /// Levels dropped as duplicates.
    pub merged: usize,
}

pub const DEGENERACY_TOL: f64 = 1e-12;

/// `r = min(s_b, s_{b-1}) / max(s_b, s_{b-1})` for sorted `energies`.
pub fn level_statistics(energies: &[f64], bins: usize) -> Result<LevelStats> {
    require(bins >= 1, || "need at least one histogram bin".into())?;
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter("non-finite level".into()));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("levels must be sorted ascending".into()));
    }
    let mut levels: Vec<f64> = Vec::with_capacity(energies.len());
    for &e in energies {
        if levels.last().is_some_and(|&last| e - last < DEGENERACY_TOL) {
            continue;
        }
        levels.push(e);
    }
    let merged = energies.len() - levels.len();
    if merged > 0 {
        log::warn!("merged {merged} degenerate levels before computing spacing ratios");
    }
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = spacings.windows(2).map(|w| w[0].min(w[1]) / w[0].max(w[1])).collect();
    let (bin_edges, density) = histogram(&ratios, bins);
    Ok(LevelStats { spacings, ratios, bin_edges, density, merged })
}

/// Unit-area histogram on `[0, 1]`.
pub fn histogram(samples: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    let mut counts = vec![0.0; bins];
    for &r in samples {
        let k = ((r * bins as f64) as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let scale = if samples.is_empty() { 0.0 } else { bins as f64 / samples.len() as f64 };
    (edges, counts.into_iter().map(|c| c * scale).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefKind {
    Poisson,
    Goe,
}

pub fn reference_pdf(r: f64, kind: RefKind) -> Result<f64> {
    require((0.0..=1.0).contains(&r), || format!("r = {r} outside [0,1]"))?;
    Ok(match kind {
        RefKind::Poisson => 2.0 / (1.0 + r).powi(2),
        RefKind::Goe => 27.0 / 4.0 * (r + r * r) / (1.0 + r + r * r).powf(2.5),
    })
}

/// `sum_bins |h_k - <P>_k| * width`, with `<P>_k` the bin average of the
/// reference density (Simpson's rule, 32 panels per bin).
pub fn l1_distance(bin_edges: &[f64], density: &[f64], kind: RefKind) -> f64 {
    bin_edges
        .windows(2)
        .zip(density)
        .map(|(w, &h)| {
            let (a, b) = (w[0], w[1]);
            let panels = 32;
            let step = (b - a) / panels as f64;
            let mut s = 0.0;
            for i in 0..=panels {
                let c = if i == 0 || i == panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += c * reference_pdf((a + i as f64 * step).clamp(0.0, 1.0), kind).unwrap();
            }
            let avg = s * step / 3.0 / (b - a);
            (h - avg).abs() * (b - a)
        })
        .sum()
}

/// `1 / sum_j w_j^2` for site weights summing to one (renormalized with a
/// warning when off by more than 1e-8).
pub fn participation_ratio(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("participation weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidParameter("participation weights are all zero".into()));
    }
    if (total - 1.0).abs() > 1e-8 {
        log::warn!("participation weights sum to {total}; renormalizing");
    }
    Ok(total * total / weights.iter().map(|w| w * w).sum::<f64>())
}

/// `<n_j> / N` for a state in a fixed-`N` photon basis.
pub fn site_weights(state: &DVector<C>, basis: &FockBasis) -> Result<Vec<f64>> {
    if state.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: state.len() });
    }
    let mut w = vec![0.0; basis.n_sites()];
    for (i, amp) in state.iter().enumerate() {
        let p = amp.norm_sqr();
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += p * basis.photons(i, j) as f64;
        }
    }
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidParameter("state has no photons".into()));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Exact spectrum of the Harper model in its fixed-photon-number sector.
pub fn harper_sector_spectrum(p: &HarperParams) -> Result<(FockBasis, Spectrum)> {
    let basis = p.basis()?;
    let spec = diagonalize(&build_harper(p, &basis)?)?;
    Ok((basis, spec))
}

/// Mean participation ratio over every eigenstate of the sector.
pub fn mean_participation_ratio(basis: &FockBasis, spec: &Spectrum) -> Result<f64> {
    let n = spec.energies.len();
    let mut total = 0.0;
    for k in 0..n {
        total += participation_ratio(&site_weights(&spec.vector(k), basis)?)?;
    }
    Ok(total / n as f64)
}

/// The irrational `b` values used when none are configured.
pub fn default_irrational_b() -> [f64; 4] {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    [1.0 / phi, 2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0, std::f64::consts::PI - 3.0]
}

/// Spacing ratios pooled over `b_values` and their unit-area histogram.
pub fn pooled_level_statistics(template: &HarperParams, b_values: &[f64], bins: usize) -> Result<LevelStats> {
    let per_b = b_values
        .par_iter()
        .map(|&b| {
            let (_, spec) = harper_sector_spectrum(&HarperParams { b, ..template.clone() })?;
            level_statistics(&spec.energies, bins)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = LevelStats { spacings: vec![], ratios: vec![], bin_edges: vec![], density: vec![], merged: 0 };
    for s in per_b {
        pooled.spacings.extend(s.spacings);
        pooled.ratios.extend(s.ratios);
        pooled.merged += s.merged;
    }
    let (edges, density) = histogram(&pooled.ratios, bins);
    pooled.bin_edges = edges;
    pooled.density = density;
    Ok(pooled)
}
