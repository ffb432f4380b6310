//! Occupation-number bases for photon lattices with optional two-level atoms.
//!
//! Each site has a local index `photons * (1 + has_atom) + atom`, so the atom
//! flag is the fast digit within a site. States are enumerated in ascending
//! lexicographic order of the local-index tuple with site 0 most significant;
//! the vacuum is always index 0 when it belongs to the basis.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{Operator, Symmetry};

/// Largest accepted per-site photon cutoff. Occupations are stored in `u8`.
pub const MAX_SITE_PHOTONS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiteSpec {
    pub n_max: usize,
    pub has_atom: bool,
}

impl SiteSpec {
    pub fn photon(n_max: usize) -> Self {
        SiteSpec { n_max, has_atom: false }
    }

    pub fn with_atom(n_max: usize) -> Self {
        SiteSpec { n_max, has_atom: true }
    }

    pub fn local_dim(&self) -> usize {
        (self.n_max + 1) * if self.has_atom { 2 } else { 1 }
    }

    fn max_excitations(&self) -> usize {
        self.n_max + self.has_atom as usize
    }
}

/// Restriction on the total excitation number `sum_j (photons_j + atom_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumberSector {
    Unrestricted,
    Exactly(usize),
    AtMost(usize),
}

impl NumberSector {
    fn admits(&self, n: usize) -> bool {
        match *self {
            NumberSector::Unrestricted => true,
            NumberSector::Exactly(k) => n == k,
            NumberSector::AtMost(k) => n <= k,
        }
    }

    fn cap(&self) -> usize {
        match *self {
            NumberSector::Unrestricted => usize::MAX,
            NumberSector::Exactly(k) | NumberSector::AtMost(k) => k,
        }
    }

    fn shifted(&self, delta: i64) -> Option<NumberSector> {
        match *self {
            NumberSector::Exactly(k) => {
                let n = k as i64 + delta;
                (n >= 0).then_some(NumberSector::Exactly(n as usize))
            }
            other => Some(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LadderKind {
    Annihilate,
    Create,
    Number,
    SigmaMinus,
    SigmaPlus,
}

impl LadderKind {
    fn excitation_change(&self) -> i64 {
        match self {
            LadderKind::Annihilate | LadderKind::SigmaMinus => -1,
            LadderKind::Create | LadderKind::SigmaPlus => 1,
            LadderKind::Number => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: Vec<SiteSpec>,
    sector: NumberSector,
    photons: Vec<u8>,
    atoms: Vec<u8>,
    index: HashMap<Box<[u8]>, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites && self.sector == other.sector
    }
}

impl FockBasis {
    pub fn new(sites: Vec<SiteSpec>, sector: NumberSector) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("a basis needs at least one site".into()));
        }
        if let Some(s) = sites.iter().find(|s| s.n_max > MAX_SITE_PHOTONS) {
            return Err(Error::InvalidParameter(format!(
                "n_max = {} exceeds the supported cutoff {MAX_SITE_PHOTONS}",
                s.n_max
            )));
        }
        let l = sites.len();
        // suffix capacity lets the enumeration prune unreachable totals
        let mut reach = vec![0usize; l + 1];
        for j in (0..l).rev() {
            reach[j] = reach[j + 1] + sites[j].max_excitations();
        }
        let mut photons = Vec::new();
        let mut atoms = Vec::new();
        let mut cur_p = vec![0u8; l];
        let mut cur_a = vec![0u8; l];
        enumerate(&sites, &reach, sector, 0, 0, &mut cur_p, &mut cur_a, &mut photons, &mut atoms);
        if photons.is_empty() {
            return Err(Error::EmptyBasis { sites: l, total: sector.cap() });
        }
        let mut basis = FockBasis { sites, sector, photons, atoms, index: HashMap::new() };
        let dim = basis.dim();
        basis.index.reserve(dim);
        for i in 0..dim {
            let key = basis.key_of(i);
            basis.index.insert(key, i);
        }
        Ok(basis)
    }

    /// `l` identical sites.
    pub fn uniform(l: usize, site: SiteSpec, sector: NumberSector) -> Result<Self> {
        Self::new(vec![site; l], sector)
    }

    pub fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sector(&self) -> NumberSector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.photons.len() / self.sites.len()
    }

    pub fn has_atoms(&self) -> bool {
        self.sites.iter().any(|s| s.has_atom)
    }

    pub fn all_sites_have_atoms(&self) -> bool {
        self.sites.iter().all(|s| s.has_atom)
    }

    pub fn photons_of(&self, i: usize) -> &[u8] {
        let l = self.sites.len();
        &self.photons[i * l..(i + 1) * l]
    }

    pub fn atoms_of(&self, i: usize) -> &[u8] {
        let l = self.sites.len();
        &self.atoms[i * l..(i + 1) * l]
    }

    pub fn photons(&self, i: usize, site: usize) -> usize {
        self.photons[i * self.sites.len() + site] as usize
    }

    pub fn atom(&self, i: usize, site: usize) -> usize {
        self.atoms[i * self.sites.len() + site] as usize
    }

    pub fn total_excitations(&self, i: usize) -> usize {
        self.photons_of(i).iter().chain(self.atoms_of(i)).map(|&x| x as usize).sum()
    }

    pub fn total_photons(&self, i: usize) -> usize {
        self.photons_of(i).iter().map(|&x| x as usize).sum()
    }

    /// Per-site local indices of state `i`.
    pub fn state_of(&self, i: usize) -> Vec<u8> {
        self.key_of(i).into_vec()
    }

    pub fn index_of(&self, local: &[u8]) -> Option<usize> {
        self.index.get(local).copied()
    }

    /// Index of the configuration with the given photon and atom occupations.
    pub fn index_of_occupation(&self, photons: &[u8], atoms: &[u8]) -> Option<usize> {
        if photons.len() != self.sites.len() || atoms.len() != self.sites.len() {
            return None;
        }
        let mut key = Vec::with_capacity(self.sites.len());
        for (j, s) in self.sites.iter().enumerate() {
            if photons[j] as usize > s.n_max || atoms[j] > s.has_atom as u8 {
                return None;
            }
            key.push(local_index(s, photons[j], atoms[j]));
        }
        self.index_of(&key)
    }

    pub fn vacuum_index(&self) -> Option<usize> {
        let zeros = vec![0u8; self.sites.len()];
        self.index_of(&zeros)
    }

    fn key_of(&self, i: usize) -> Box<[u8]> {
        self.sites
            .iter()
            .enumerate()
            .map(|(j, s)| local_index(s, self.photons(i, j) as u8, self.atom(i, j) as u8))
            .collect()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites.len() {
            return Err(Error::SiteOutOfRange { site, sites: self.sites.len() });
        }
        Ok(())
    }

    /// Basis reached by an operator that changes the excitation number by
    /// `delta`; `self` for sectors other than `Exactly`.
    pub fn shifted_basis(&self, delta: i64) -> Result<FockBasis> {
        match self.sector.shifted(delta) {
            Some(s) if s == self.sector => Ok(self.clone()),
            Some(s) => FockBasis::new(self.sites.clone(), s),
            None => Err(Error::EmptyBasis { sites: self.sites.len(), total: 0 }),
        }
    }

    /// Matrix of a single-site ladder operator. In an `Exactly(N)` sector the
    /// non-conserving kinds return the rectangular map into the `N -/+ 1`
    /// basis, which is returned alongside.
    pub fn ladder_matrix_elements(&self, site: usize, kind: LadderKind) -> Result<(Operator, FockBasis)> {
        self.check_site(site)?;
        if matches!(kind, LadderKind::SigmaMinus | LadderKind::SigmaPlus) && !self.sites[site].has_atom {
            return Err(Error::NoAtom(site));
        }
        let target = self.shifted_basis(kind.excitation_change())?;
        let op = self.ladder_into(&target, site, kind)?;
        Ok((op, target))
    }

    /// Square single-site operator on this basis. Fails for kinds that leave
    /// an `Exactly` sector.
    pub fn site_operator(&self, site: usize, kind: LadderKind) -> Result<Operator> {
        if matches!(self.sector, NumberSector::Exactly(_)) && kind.excitation_change() != 0 {
            return Err(Error::BasisMismatch(format!(
                "{kind:?} leaves the fixed-excitation sector; use ladder_matrix_elements"
            )));
        }
        Ok(self.ladder_matrix_elements(site, kind)?.0)
    }

    /// Apply a single-site operator from `self` into `target`; results outside
    /// `target` (truncation, sector cap) are dropped.
    pub fn ladder_into(&self, target: &FockBasis, site: usize, kind: LadderKind) -> Result<Operator> {
        self.check_site(site)?;
        if target.sites != self.sites {
            return Err(Error::BasisMismatch("ladder target has different sites".into()));
        }
        let spec = self.sites[site];
        let mut triplets = Vec::new();
        let mut p = vec![0u8; self.sites.len()];
        for i in 0..self.dim() {
            p.copy_from_slice(self.photons_of(i));
            let mut a = self.atoms_of(i).to_vec();
            let n = p[site] as usize;
            let amp = match kind {
                LadderKind::Number => Some(n as f64),
                LadderKind::Annihilate => (n > 0).then(|| {
                    p[site] -= 1;
                    (n as f64).sqrt()
                }),
                LadderKind::Create => (n < spec.n_max).then(|| {
                    p[site] += 1;
                    ((n + 1) as f64).sqrt()
                }),
                LadderKind::SigmaMinus => (a[site] == 1).then(|| {
                    a[site] = 0;
                    1.0
                }),
                LadderKind::SigmaPlus => (a[site] == 0).then(|| {
                    a[site] = 1;
                    1.0
                }),
            };
            if let Some(amp) = amp {
                if amp != 0.0 {
                    if let Some(k) = target.index_of_occupation(&p, &a) {
                        triplets.push((k, i, Complex64::new(amp, 0.0)));
                    }
                }
            }
        }
        let sym = if kind == LadderKind::Number { Symmetry::Hermitian } else { Symmetry::General };
        Ok(Operator::from_triplets(target.dim(), self.dim(), triplets, sym))
    }

    /// Diagonal of the total excitation number.
    pub fn total_number_operator(&self) -> Operator {
        let d: Vec<f64> = (0..self.dim()).map(|i| self.total_excitations(i) as f64).collect();
        Operator::diagonal(&d)
    }

    /// Diagonal of the total photon number.
    pub fn photon_number_operator(&self) -> Operator {
        let d: Vec<f64> = (0..self.dim()).map(|i| self.total_photons(i) as f64).collect();
        Operator::diagonal(&d)
    }

    /// Index and amplitude of `a_to^dag a_from |i>`, if it stays in the basis.
    pub fn hop(&self, i: usize, from: usize, to: usize) -> Option<(usize, f64)> {
        let nf = self.photons(i, from);
        if nf == 0 {
            return None;
        }
        let mut p = self.photons_of(i).to_vec();
        if from == to {
            return Some((i, nf as f64));
        }
        let nt = p[to] as usize;
        if nt >= self.sites[to].n_max {
            return None;
        }
        p[from] -= 1;
        p[to] += 1;
        let k = self.index_of_occupation(&p, self.atoms_of(i))?;
        Some((k, ((nf * (nt + 1)) as f64).sqrt()))
    }
}

fn local_index(s: &SiteSpec, photons: u8, atom: u8) -> u8 {
    if s.has_atom {
        photons * 2 + atom
    } else {
        photons
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    sites: &[SiteSpec],
    reach: &[usize],
    sector: NumberSector,
    j: usize,
    used: usize,
    cur_p: &mut [u8],
    cur_a: &mut [u8],
    out_p: &mut Vec<u8>,
    out_a: &mut Vec<u8>,
) {
    if j == sites.len() {
        if sector.admits(used) {
            out_p.extend_from_slice(cur_p);
            out_a.extend_from_slice(cur_a);
        }
        return;
    }
    if let NumberSector::Exactly(k) = sector {
        if used > k || used + reach[j] < k {
            return;
        }
    }
    let s = sites[j];
    for local in 0..s.local_dim() {
        let (p, a) = if s.has_atom { (local / 2, local % 2) } else { (local, 0) };
        let n = used + p + a;
        if n > sector.cap() {
            // excitations never decrease along the local index
            break;
        }
        cur_p[j] = p as u8;
        cur_a[j] = a as u8;
        enumerate(sites, reach, sector, j + 1, n, cur_p, cur_a, out_p, out_a);
    }
    cur_p[j] = 0;
    cur_a[j] = 0;
}
