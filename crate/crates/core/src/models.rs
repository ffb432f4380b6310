//! Sparse Hamiltonians for the lattice models.
//!
//! Interaction conventions differ between models, so every parameter record
//! states its own sign. [`BhParams::u`] and [`ChiralParams::u`] are the
//! coefficient of `+u/2 n(n-1)`; [`HarperParams::u`] enters as `-u/2 n(n-1)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{FockBasis, NumberSector, SiteSpec};
use crate::operator::{Operator, Symmetry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Term `amplitude * a_from^dag a_to + h.c.`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub amplitude: Complex64,
}

impl Bond {
    /// `-J e^{i phase} a_i^dag a_k + h.c.`
    pub fn hopping(i: usize, k: usize, j: f64, phase: f64) -> Self {
        Bond { from: i, to: k, amplitude: Complex64::from_polar(-j, phase) }
    }
}

/// Nearest-neighbour bonds of a chain; a periodic chain of two sites gets a
/// single bond.
pub fn chain_bonds(l: usize, j: f64, boundary: Boundary) -> Vec<Bond> {
    let mut bonds: Vec<Bond> = (0..l.saturating_sub(1)).map(|i| Bond::hopping(i, i + 1, j, 0.0)).collect();
    if boundary == Boundary::Periodic && l > 2 {
        bonds.push(Bond::hopping(l - 1, 0, j, 0.0));
    }
    bonds
}

#[derive(Debug, Clone, PartialEq)]
pub struct BhParams {
    /// Per-site frequency; its length fixes the site count.
    pub omega: Vec<f64>,
    pub bonds: Vec<Bond>,
    /// Coefficient of `+u/2 n(n-1)`.
    pub u: f64,
    pub mu: f64,
    /// Cross-Kerr `v n_i n_k` on every bond.
    pub v: f64,
}

impl BhParams {
    pub fn chain(l: usize, omega: f64, j: f64, u: f64, mu: f64, boundary: Boundary) -> Self {
        BhParams { omega: vec![omega; l], bonds: chain_bonds(l, j, boundary), u, mu, v: 0.0 }
    }

    pub fn n_sites(&self) -> usize {
        self.omega.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JchParams {
    pub l: usize,
    pub omega_a: f64,
    pub omega_c: f64,
    pub g: f64,
    pub j: f64,
    pub mu: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarperParams {
    pub l: usize,
    pub delta: f64,
    /// Dimensionless flux in `[0, 1]`.
    pub b: f64,
    pub j: f64,
    /// Enters as `-u/2 n(n-1)`.
    pub u: f64,
    pub n_photons: usize,
}

impl HarperParams {
    pub fn site_energy(&self, j: usize) -> f64 {
        self.delta * (2.0 * PI * self.b * j as f64).cos()
    }

    /// Fixed-photon-number basis for this model.
    pub fn basis(&self) -> Result<FockBasis> {
        FockBasis::uniform(self.l, SiteSpec::photon(self.n_photons), NumberSector::Exactly(self.n_photons))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiralParams {
    pub omega: f64,
    pub j0: f64,
    /// Phases of the bonds (0,1), (1,2), (2,0).
    pub phases: [f64; 3],
    /// Coefficient of `+u/2 n(n-1)`.
    pub u: f64,
}

impl ChiralParams {
    pub fn flux(&self) -> f64 {
        self.phases.iter().sum()
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_sites(basis: &FockBasis, l: usize) -> Result<()> {
    if basis.n_sites() != l {
        return Err(Error::BasisMismatch(format!("model has {l} sites, basis has {}", basis.n_sites())));
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} parameters must be finite")));
    }
    Ok(())
}

fn push_bonds(basis: &FockBasis, bonds: &[Bond], t: &mut Vec<(usize, usize, Complex64)>) {
    for i in 0..basis.dim() {
        for bond in bonds {
            // amplitude * a_from^dag a_to maps i -> k; the conjugate term is its mirror
            if let Some((k, amp)) = basis.hop(i, bond.to, bond.from) {
                t.push((k, i, bond.amplitude * amp));
                t.push((i, k, bond.amplitude.conj() * amp));
            }
        }
    }
}

fn check_bonds(bonds: &[Bond], l: usize) -> Result<()> {
    for b in bonds {
        if b.from >= l || b.to >= l {
            return Err(Error::SiteOutOfRange { site: b.from.max(b.to), sites: l });
        }
        if b.from == b.to {
            return Err(Error::InvalidParameter(format!("bond ({}, {}) is not between two sites", b.from, b.to)));
        }
        if !(b.amplitude.re.is_finite() && b.amplitude.im.is_finite()) {
            return Err(Error::InvalidParameter("bond amplitude must be finite".into()));
        }
    }
    Ok(())
}

/// `sum_j (omega_j - mu) n_j + u/2 n_j(n_j-1) + v sum_bonds n_i n_k + hopping`.
pub fn build_bh(params: &BhParams, basis: &FockBasis) -> Result<Operator> {
    let l = params.n_sites();
    check_sites(basis, l)?;
    if basis.has_atoms() {
        return Err(Error::BasisMismatch("Bose-Hubbard basis must not contain atoms".into()));
    }
    check_bonds(&params.bonds, l)?;
    check_finite(&params.omega, "omega")?;
    check_finite(&[params.u, params.mu, params.v], "Bose-Hubbard")?;
    let mut t = Vec::new();
    for i in 0..basis.dim() {
        let mut d = 0.0;
        for s in 0..l {
            let n = basis.photons(i, s) as f64;
            d += (params.omega[s] - params.mu) * n + 0.5 * params.u * n * (n - 1.0);
        }
        if params.v != 0.0 {
            for b in &params.bonds {
                d += params.v * (basis.photons(i, b.from) * basis.photons(i, b.to)) as f64;
            }
        }
        t.push((i, i, c(d)));
    }
    push_bonds(basis, &params.bonds, &mut t);
    Ok(Operator::from_triplets(basis.dim(), basis.dim(), t, Symmetry::Hermitian))
}

/// Jaynes-Cummings-Hubbard Hamiltonian minus `mu N`. Verifies `[H, N] = 0`.
pub fn build_jch(params: &JchParams, basis: &FockBasis) -> Result<Operator> {
    check_sites(basis, params.l)?;
    if !basis.all_sites_have_atoms() {
        return Err(Error::BasisMismatch("every JCH site needs a two-level atom".into()));
    }
    check_finite(&[params.omega_a, params.omega_c, params.g, params.j, params.mu], "JCH")?;
    let mut t = Vec::new();
    for i in 0..basis.dim() {
        let mut d = 0.0;
        for s in 0..params.l {
            d += (params.omega_c - params.mu) * basis.photons(i, s) as f64
                + (params.omega_a - params.mu) * basis.atom(i, s) as f64;
        }
        t.push((i, i, c(d)));
        if params.g != 0.0 {
            for s in 0..params.l {
                // g a^dag sigma^-: |n, e> -> sqrt(n+1) |n+1, g>
                let n = basis.photons(i, s);
                if basis.atom(i, s) == 1 && n < basis.sites()[s].n_max {
                    let mut p = basis.photons_of(i).to_vec();
                    let mut a = basis.atoms_of(i).to_vec();
                    p[s] += 1;
                    a[s] = 0;
                    if let Some(k) = basis.index_of_occupation(&p, &a) {
                        let amp = c(params.g * ((n + 1) as f64).sqrt());
                        t.push((k, i, amp));
                        t.push((i, k, amp));
                    }
                }
            }
        }
    }
    push_bonds(basis, &chain_bonds(params.l, params.j, params.boundary), &mut t);
    let h = Operator::from_triplets(basis.dim(), basis.dim(), t, Symmetry::Hermitian);
    let comm = h.commutator_norm(&basis.total_number_operator())?;
    if comm > 1e-12 * h.frobenius_norm().max(1.0) {
        return Err(Error::NotNumberConserving(comm));
    }
    Ok(h)
}

/// Open-chain Harper model `delta cos(2 pi b j) n_j - u/2 n_j(n_j-1) - J hopping`.
pub fn build_harper(params: &HarperParams, basis: &FockBasis) -> Result<Operator> {
    if !(0.0..=1.0).contains(&params.b) {
        return Err(Error::InvalidParameter(format!("b = {} outside [0,1]", params.b)));
    }
    check_finite(&[params.delta, params.j, params.u], "Harper")?;
    let bh = BhParams {
        omega: (0..params.l).map(|j| params.site_energy(j)).collect(),
        bonds: chain_bonds(params.l, params.j, Boundary::Open),
        u: -params.u,
        mu: 0.0,
        v: 0.0,
    };
    build_bh(&bh, basis)
}

/// Three-site ring with static complex hoppings `j0 e^{-i phi}`.
pub fn build_chiral_effective(params: &ChiralParams, basis: &FockBasis) -> Result<Operator> {
    check_sites(basis, 3)?;
    let bonds = [(0, 1), (1, 2), (2, 0)]
        .iter()
        .zip(params.phases)
        .map(|(&(a, b), phi)| Bond { from: a, to: b, amplitude: Complex64::from_polar(params.j0, -phi) })
        .collect();
    let bh = BhParams { omega: vec![params.omega; 3], bonds, u: params.u, mu: 0.0, v: 0.0 };
    build_bh(&bh, basis)
}
