//! Task runners. Each pushes tables into the bundle as it goes, so a task
//! that fails halfway still leaves its finished tables for the failure
//! manifest.

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use photolattice::circuitq::{
    coupled_array_params, quartic_anharmonicity, transmon_params, ArraySpec, Squid, TransmonSpec,
};
use photolattice::jcsingle::{jc_energies_exact, jc_energies_half_split};
use photolattice::lindblad::{
    evolve_master, observables, rotating_frame_hamiltonian, steady_state_auto, DensityMatrix, DriveSpec,
    ExtraChannels, Lindbladian, MasterOptions, NessMethod, NessOptions, NessResult, Observables,
};
use photolattice::linalg::eigh_dense;
use photolattice::meanfield::{
    bh_mf_lobe_boundary, bh_mf_lobe_tip, jch_mf_phase_diagram, DiagramSpec, MfOptions, MfPhase,
};
use photolattice::models::{
    build_bh, build_chiral_effective, build_harper, build_jch, chain_bonds, BhParams, ChiralParams, HarperParams,
    JchParams,
};
use photolattice::spectroscopy::{
    butterfly_scan, chi1_series, chi2_series, extract_spectrum, harper_protocol_setup, harper_sector_spectrum,
    l1_distance, mean_participation_ratio, peak_errors, pooled_level_statistics, reference_pdf, sector_block,
    ExtractOptions, RefKind, ScanOptions, TimeGrid,
};
use photolattice::{diagonalize, FockBasis, NumberSector, Operator, SiteSpec};

use crate::bundle::{complex_cells, complex_columns, Cell, ResultBundle, Table};
use crate::config::{DrivePattern, DriveConfig, ModelConfig, NessChoice, RunConfig, TaskConfig};

/// Units of `E/h` in GHz, for the circuit tables.
const RAD_PER_GHZ: f64 = 2.0 * std::f64::consts::PI * 1e9;

pub fn run(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let task = cfg.task.kind();
    let r = match &cfg.task {
        TaskConfig::Diagonalize { count } => run_diagonalize(cfg, *count, bundle),
        TaskConfig::MeanField { .. } => run_meanfield(cfg, bundle),
        TaskConfig::Lindblad { .. } => run_lindblad(cfg, bundle),
        TaskConfig::NessSweep { .. } => run_ness_sweep(cfg, bundle),
        TaskConfig::Spectroscopy { .. } => run_spectroscopy(cfg, bundle),
        TaskConfig::Butterfly { .. } => run_butterfly(cfg, bundle),
        TaskConfig::LevelStats { .. } => run_levelstats(cfg, bundle),
        TaskConfig::Circuit => run_circuit(cfg, bundle),
    };
    r.with_context(|| format!("task {task} on model {}", cfg.model.kind()))
}


/// `method = "auto"` solves densely up to this Hilbert-space dimension; the
/// dense LU at d = 64 (a 4096 x 4096 superoperator) takes minutes per point.
const AUTO_NULL_SPACE_DIM: usize = 32;
fn bh_params(omega: &[f64], j: f64, u: f64, mu: f64, boundary: photolattice::models::Boundary) -> BhParams {
    BhParams { omega: omega.to_vec(), bonds: chain_bonds(omega.len(), j, boundary), u, mu, v: 0.0 }
}

/// Basis and Hamiltonian of the configured model, honouring its sector.
fn model_hamiltonian(model: &ModelConfig) -> Result<(FockBasis, Operator)> {
    Ok(match model {
        ModelConfig::Bh { omega, j, u, mu, boundary, n_max, sector, .. } => {
            let basis = FockBasis::uniform(omega.len(), SiteSpec::photon(*n_max), *sector)?;
            let h = build_bh(&bh_params(omega, *j, *u, *mu, *boundary), &basis)?;
            (basis, h)
        }
        ModelConfig::Jch { l, omega_a, omega_c, g, j, mu, boundary, n_max, sector } => {
            let basis = FockBasis::uniform(*l, SiteSpec::with_atom(*n_max), *sector)?;
            let p = JchParams { l: *l, omega_a: *omega_a, omega_c: *omega_c, g: *g, j: *j, mu: *mu, boundary: *boundary };
            let h = build_jch(&p, &basis)?;
            (basis, h)
        }
        ModelConfig::Harper(p) => {
            let basis = p.basis()?;
            let h = build_harper(p, &basis)?;
            (basis, h)
        }
        ModelConfig::Chiral { omega, j0, phases, u, n_photons } => {
            let basis = FockBasis::uniform(3, SiteSpec::photon(*n_photons), NumberSector::Exactly(*n_photons))?;
            let p = ChiralParams { omega: *omega, j0: *j0, phases: *phases, u: *u };
            let h = build_chiral_effective(&p, &basis)?;
            (basis, h)
        }
        ModelConfig::TransmonArray { l, c, c_j, e_j, boundary, n_max } => {
            let ap = coupled_array_params(&ArraySpec { c: *c, c_j: *c_j, e_j: *e_j })?;
            let basis = FockBasis::uniform(*l, SiteSpec::photon(*n_max), NumberSector::Unrestricted)?;
            let h = build_bh(&ap.to_bh(*l, *boundary), &basis)?;
            (basis, h)
        }
        ModelConfig::Transmon { .. } => bail!("a single transmon has no lattice Hamiltonian; use the circuit task"),
    })
}

fn run_diagonalize(cfg: &RunConfig, count: Option<usize>, bundle: &mut ResultBundle) -> Result<()> {
    let (basis, h) = model_hamiltonian(&cfg.model)?;
    log::info!("diagonalizing dimension {}", basis.dim());
    let spec = diagonalize(&h)?;
    let n_op = basis.total_number_operator();
    let keep = count.unwrap_or(spec.energies.len()).min(spec.energies.len());
    let mut t = Table::new("energies", &["k", "energy", "excitations"]);
    for k in 0..keep {
        let v = spec.vector(k);
        t.push(vec![k.into(), spec.energies[k].into(), n_op.expectation(&v).re.into()]);
    }
    bundle.tables.push(t);

    match &cfg.model {
        ModelConfig::Jch { l: 1, omega_a, omega_c, g, n_max, .. } => {
            let mut t = Table::new(
                "jc_ladder",
                &["n", "e_minus", "e_plus", "e_minus_formula", "e_plus_formula", "splitting", "splitting_resonant"],
            );
            for n in 1..=*n_max {
                let (m, p) = jc_energies_exact(n, *omega_a, *omega_c, *g)?;
                let (mf, pf) = jc_energies_half_split(n, *omega_a, *omega_c, *g)?;
                let res = 2.0 * g * (n as f64).sqrt();
                t.push(vec![n.into(), m.into(), p.into(), mf.into(), pf.into(), (p - m).into(), res.into()]);
            }
            bundle.tables.push(t);
        }
        ModelConfig::Chiral { phases, .. } => {
            let mut t = Table::new("summary", &["flux"]);
            t.push(vec![phases.iter().sum::<f64>().into()]);
            bundle.tables.push(t);
        }
        _ => {}
    }
    Ok(())
}

fn run_meanfield(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let TaskConfig::MeanField { z, lobes, u_max, u_points, zj, zj_points, mu, mu_points } = &cfg.task else {
        unreachable!()
    };
    match &cfg.model {
        ModelConfig::Bh { .. } => {
            // dimensionless in U/zJ and mu/zJ; the model entries are not used
            let mut tips = Table::new("tips", &["n", "u_over_zj", "mu_over_zj"]);
            for n in 1..=*lobes {
                let (u_c, mu_tip) = bh_mf_lobe_tip(n);
                tips.push(vec![n.into(), u_c.into(), mu_tip.into()]);
            }
            bundle.tables.push(tips);
            let mut t = Table::new("lobes", &["n", "u_over_zj", "mu_lo", "mu_hi"]);
            for n in 1..=*lobes {
                for k in 0..*u_points {
                    let u = u_max * k as f64 / (*u_points - 1) as f64;
                    if let Some((lo, hi)) = bh_mf_lobe_boundary(n, u) {
                        t.push(vec![n.into(), u.into(), lo.into(), hi.into()]);
                    }
                }
            }
            bundle.tables.push(t);
        }
        ModelConfig::Jch { omega_a, omega_c, g, .. } => {
            let spec = DiagramSpec {
                omega_c: *omega_c,
                detuning: omega_a - omega_c,
                g: *g,
                z: *z,
                mu_offsets: DiagramSpec::linspace(*mu, *mu_points),
                zj_values: DiagramSpec::linspace(*zj, *zj_points),
            };
            let n = &cfg.numeric;
            let opts = MfOptions {
                psi_grid: n.psi_grid,
                n_max_start: n.n_max_start,
                n_max_cap: n.n_max_cap,
                tol: n.mf_tol,
                ..MfOptions::default()
            };
            let diagram = jch_mf_phase_diagram(&spec, &opts)?;
            let mut t = Table::new(
                "phase_diagram",
                &["mu_offset", "zj", "psi_c", "filling", "energy", "phase", "n_max_used", "converged"],
            );
            for (i, &m) in spec.mu_offsets.iter().enumerate() {
                for (k, &zjv) in spec.zj_values.iter().enumerate() {
                    let c = diagram.cell(i, k);
                    t.push(vec![
                        m.into(),
                        zjv.into(),
                        c.psi_c.into(),
                        c.filling.into(),
                        c.energy.into(),
                        c.phase.label().into(),
                        c.n_max_used.into(),
                        c.converged.into(),
                    ]);
                }
            }
            bundle.tables.push(t);
            let lobes = diagram.components(MfPhase::Mott);
            let mut s = Table::new("mott_components", &["component", "cells", "touches_zj0"]);
            for (k, comp) in lobes.iter().enumerate() {
                s.push(vec![k.into(), comp.len().into(), comp.iter().any(|&(_, z)| z == 0).into()]);
            }
            bundle.tables.push(s);
            let bad = diagram.unconverged();
            if bad > 0 {
                bundle.unconverged(format!("{bad} mean-field cells hit the truncation cap n_max = {}", n.n_max_cap));
            }
        }
        _ => unreachable!("rejected by validation"),
    }
    Ok(())
}

fn drive_spec(d: &DriveConfig, omega_d: f64, l: usize) -> DriveSpec {
    match d.pattern {
        DrivePattern::Uniform => DriveSpec::uniform(omega_d, d.amplitude, l),
        DrivePattern::Alternating => DriveSpec::alternating(omega_d, d.amplitude, l),
    }
}

/// Unrestricted basis and bare Hamiltonian for the driven tasks.
fn open_system(model: &ModelConfig, n_max: usize) -> photolattice::Result<(FockBasis, Operator)> {
    match model {
        ModelConfig::Bh { omega, j, u, mu, boundary, .. } => {
            let basis = FockBasis::uniform(omega.len(), SiteSpec::photon(n_max), NumberSector::Unrestricted)?;
            let h = build_bh(&bh_params(omega, *j, *u, *mu, *boundary), &basis)?;
            Ok((basis, h))
        }
        ModelConfig::Jch { l, omega_a, omega_c, g, j, mu, boundary, .. } => {
            let basis = FockBasis::uniform(*l, SiteSpec::with_atom(n_max), NumberSector::Unrestricted)?;
            let p = JchParams { l: *l, omega_a: *omega_a, omega_c: *omega_c, g: *g, j: *j, mu: *mu, boundary: *boundary };
            Ok((basis.clone(), build_jch(&p, &basis)?))
        }
        _ => unreachable!("rejected by validation"),
    }
}

fn model_n_max(model: &ModelConfig) -> usize {
    match model {
        ModelConfig::Bh { n_max, .. } | ModelConfig::Jch { n_max, .. } => *n_max,
        _ => 1,
    }
}

fn run_lindblad(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let TaskConfig::Lindblad { drive, omega_d, t_final, steps, initial } = &cfg.task else { unreachable!() };
    let (basis, h) = open_system(&cfg.model, model_n_max(&cfg.model))?;
    let l = basis.n_sites();
    let h_rf = rotating_frame_hamiltonian(&h, &drive_spec(drive, *omega_d, l), &basis)?;
    let liou = Lindbladian::photon_loss(h_rf, &basis, drive.gamma, ExtraChannels::default())?;
    let photons = if initial.is_empty() { vec![0u8; l] } else { initial.clone() };
    let k = basis
        .index_of_occupation(&photons, &vec![0u8; l])
        .ok_or_else(|| anyhow!("initial Fock state {photons:?} is not in the basis"))?;
    let rho0 = DensityMatrix::basis_state(basis.dim(), k);
    let times: Vec<f64> = (0..=*steps).map(|i| t_final * i as f64 / *steps as f64).collect();
    let opts = MasterOptions { rtol: cfg.numeric.rtol, atol: cfg.numeric.rtol * 1e-3 };
    let states = evolve_master(&rho0, &liou, &times, &opts)?;

    let mut tr = Table::new("trace", &["t", "trace_re", "trace_im", "purity"]);
    let mut pop = Table::new("populations", &["t", "site", "n"]);
    for (t, rho) in times.iter().zip(&states) {
        let z = rho.trace();
        tr.push(vec![(*t).into(), z.re.into(), z.im.into(), rho.purity().into()]);
        let obs = observables(rho, &basis)?;
        for (j, n) in obs.n.iter().enumerate() {
            pop.push(vec![(*t).into(), j.into(), (*n).into()]);
        }
    }
    bundle.tables.push(tr);
    bundle.tables.push(pop);
    Ok(())
}

struct NessCell {
    omega_d: f64,
    n_max: usize,
    ness: NessResult,
    obs: Observables,
    converged: bool,
}

fn run_ness_sweep(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let TaskConfig::NessSweep { drive, omega_d, points, method } = &cfg.task else { unreachable!() };
    let hardcore = matches!(cfg.model, ModelConfig::Bh { hardcore: true, .. });
    let start = model_n_max(&cfg.model);
    let cap = if hardcore { start } else { cfg.numeric.n_max_cap.max(start) };
    let opts = NessOptions { tol: cfg.numeric.ness_tol, ..NessOptions::default() };
    let pop_tol = if hardcore { f64::INFINITY } else { cfg.numeric.pop_tol };
    let w: Vec<f64> = DiagramSpec::linspace(*omega_d, *points);

    let cells: Vec<Result<NessCell>> = w
        .par_iter()
        .map(|&wd| {
            let build = |n_max: usize| {
                let (basis, h) = open_system(&cfg.model, n_max)?;
                let h_rf = rotating_frame_hamiltonian(&h, &drive_spec(drive, wd, basis.n_sites()), &basis)?;
                let l = Lindbladian::photon_loss(h_rf, &basis, drive.gamma, ExtraChannels::default())?;
                Ok((basis, l))
            };
            // pick the method from the largest space the cell may reach
            let probe = FockBasis::uniform(
                match &cfg.model {
                    ModelConfig::Bh { omega, .. } => omega.len(),
                    ModelConfig::Jch { l, .. } => *l,
                    _ => unreachable!(),
                },
                match cfg.model {
                    ModelConfig::Jch { .. } => SiteSpec::with_atom(cap),
                    _ => SiteSpec::photon(cap),
                },
                NumberSector::Unrestricted,
            )?;
            let m = match method {
                NessChoice::Fixed(m) => *m,
                NessChoice::Auto if probe.dim() <= AUTO_NULL_SPACE_DIM => NessMethod::NullSpace,
                NessChoice::Auto => NessMethod::LongTime,
            };
            let (basis, ness, converged) = steady_state_auto(build, start, cap, pop_tol, m, &opts)
                .with_context(|| format!("steady state at omega_d = {wd}"))?;
            let obs = observables(&ness.rho, &basis)?;
            let n_max = basis.sites()[0].n_max;
            Ok(NessCell { omega_d: wd, n_max, ness, obs, converged })
        })
        .collect();

    let l = match &cfg.model {
        ModelConfig::Bh { omega, .. } => omega.len(),
        ModelConfig::Jch { l, .. } => *l,
        _ => unreachable!(),
    };
    let mut cols: Vec<String> =
        ["omega_d", "n_max", "method", "residual", "n_total", "imbalance"].iter().map(|s| s.to_string()).collect();
    cols.extend((0..l).map(|j| format!("n_{j}")));
    cols.extend((0..l).map(|j| format!("g2_{j}{j}")));
    for j in 0..l {
        cols.extend(complex_columns(&format!("a_{j}")));
    }
    let mut tr = Table::with_columns("transmission", cols);
    let mut g2 = Table::new("g2", &["omega_d", "j", "k", "g2"]);
    let mut corr = Table::new("correlations", &["omega_d", "j", "r", "corr"]);
    let mut failures = Vec::new();
    for (cell, &wd) in cells.into_iter().zip(&w) {
        let c = match cell {
            Ok(c) => c,
            Err(e) => {
                bundle.warn(format!("omega_d = {wd}: {e:#}"));
                failures.push(wd);
                continue;
            }
        };
        if !c.converged {
            bundle.unconverged(format!("omega_d = {}: truncation cap n_max = {} reached", c.omega_d, c.n_max));
        }
        let mut row: Vec<Cell> = vec![
            c.omega_d.into(),
            c.n_max.into(),
            c.ness.method.label().into(),
            c.ness.residual.into(),
            c.obs.total_n().into(),
            c.obs.imbalance.into(),
        ];
        row.extend(c.obs.n.iter().map(|&x| Cell::from(x)));
        row.extend((0..l).map(|j| Cell::from(c.obs.g2[j][j])));
        for a in &c.obs.a {
            row.extend(complex_cells(*a));
        }
        tr.push(row);
        for j in 0..l {
            for k in 0..l {
                g2.push(vec![c.omega_d.into(), j.into(), k.into(), c.obs.g2[j][k].into()]);
            }
            for (r, v) in c.obs.corr[j].iter().enumerate() {
                corr.push(vec![c.omega_d.into(), j.into(), r.into(), (*v).into()]);
            }
        }
    }
    bundle.tables.push(tr);
    bundle.tables.push(g2);
    bundle.tables.push(corr);
    if !failures.is_empty() {
        bail!("{} of {} sweep cells failed", failures.len(), w.len());
    }
    Ok(())
}

fn run_spectroscopy(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let TaskConfig::Spectroscopy { order, t_total, method, min_weight, noise, seed } = &cfg.task else {
        unreachable!()
    };
    let (basis, h, order, j) = match &cfg.model {
        ModelConfig::Harper(p) => {
            let (basis, h) = harper_protocol_setup(p)?;
            (basis, h, p.n_photons, p.j)
        }
        ModelConfig::Bh { omega, j, u, mu, boundary, hardcore, .. } => {
            let order = order.unwrap_or(1);
            let site = if *hardcore { 1 } else { order };
            let basis = FockBasis::uniform(omega.len(), SiteSpec::photon(site), NumberSector::AtMost(order))?;
            let h = build_bh(&bh_params(omega, *j, *u, *mu, *boundary), &basis)?;
            (basis, h, order, *j)
        }
        _ => unreachable!("rejected by validation"),
    };
    let t_total = match (t_total, j) {
        (Some(t), _) => *t,
        (None, j) if j != 0.0 => 100.0 / j.abs(),
        _ => bail!("task.t_total is required when J = 0"),
    };
    let grid = TimeGrid::for_operator(&h, t_total)?;
    let mut series = match order {
        1 => chi1_series(&h, &basis, &grid, *method)?,
        _ => chi2_series(&h, &basis, &grid, *method)?,
    };
    if *noise > 0.0 {
        series = series.with_noise(*noise, *seed)?;
    }
    let mut st = Table::new("series", &["t", "re", "im"]);
    for (t, v) in series.times().iter().zip(&series.values) {
        st.push(vec![(*t).into(), v.re.into(), v.im.into()]);
    }
    bundle.tables.push(st);

    let (_, block) = sector_block(&h, &basis, order);
    let exact = eigh_dense(&block).0;
    let mut et = Table::new("exact", &["k", "energy"]);
    for (k, e) in exact.iter().enumerate() {
        et.push(vec![k.into(), (*e).into()]);
    }
    bundle.tables.push(et);

    let opts = ExtractOptions {
        min_weight: *min_weight,
        pad: cfg.numeric.pad,
        bounds: Some(h.gershgorin_bounds()),
        ..ExtractOptions::default()
    };
    let result = extract_spectrum(&series, &opts)?;
    let errs = peak_errors(&result, &exact);
    let mut pt = Table::new("peaks", &["energy", "weight", "amplitude_re", "amplitude_im", "nearest_exact_error"]);
    for (p, e) in result.peaks.iter().zip(errs) {
        let [re, im] = complex_cells(p.amplitude);
        pt.push(vec![p.energy.into(), p.weight.into(), re, im, e.into()]);
    }
    bundle.tables.push(pt);
    Ok(())
}

fn run_butterfly(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let TaskConfig::Butterfly { b_steps, b_range, t_total, min_weight } = &cfg.task else { unreachable!() };
    let ModelConfig::Harper(template) = &cfg.model else { unreachable!("rejected by validation") };
    let b_values = DiagramSpec::linspace(*b_range, *b_steps);
    let opts = ScanOptions {
        t_total: *t_total,
        extract: ExtractOptions { min_weight: *min_weight, pad: cfg.numeric.pad, ..ExtractOptions::default() },
        ..ScanOptions::default()
    };
    let columns = butterfly_scan(&b_values, template, &opts)?;
    let mut peaks = Table::new("butterfly", &["b", "energy", "weight"]);
    let mut exact = Table::new("exact", &["b", "energy"]);
    let mut summary = Table::new("columns", &["b", "peaks", "levels", "mean_abs_error", "span", "error"]);
    let mut failed = 0;
    for c in &columns {
        for e in &c.exact {
            exact.push(vec![c.b.into(), (*e).into()]);
        }
        let span = match (c.exact.first(), c.exact.last()) {
            (Some(a), Some(b)) => b - a,
            _ => f64::NAN,
        };
        match &c.spectrum {
            Ok(s) => {
                for p in &s.peaks {
                    peaks.push(vec![c.b.into(), p.energy.into(), p.weight.into()]);
                }
                let errs = peak_errors(s, &c.exact);
                let mean = if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / errs.len() as f64 };
                summary.push(vec![
                    c.b.into(),
                    s.peaks.len().into(),
                    c.exact.len().into(),
                    mean.into(),
                    span.into(),
                    Cell::Empty,
                ]);
            }
            Err(e) => {
                failed += 1;
                bundle.warn(format!("b = {}: {e}", c.b));
                summary.push(vec![c.b.into(), 0usize.into(), c.exact.len().into(), Cell::Empty, span.into(), e.to_string().into()]);
            }
        }
    }
    bundle.tables.push(peaks);
    bundle.tables.push(exact);
    bundle.tables.push(summary);
    if failed > 0 {
        bail!("{failed} of {} b values failed", columns.len());
    }
    Ok(())
}

fn run_levelstats(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let TaskConfig::LevelStats { deltas, b_values, bins } = &cfg.task else { unreachable!() };
    let ModelConfig::Harper(template) = &cfg.model else { unreachable!("rejected by validation") };
    let mut hist = Table::new("histogram", &["delta", "r_lo", "r_hi", "density", "p_poisson_mid", "p_goe_mid"]);
    let mut summary = Table::new(
        "summary",
        &["delta", "ratios", "merged", "mean_r", "l1_poisson", "l1_goe", "mean_pr"],
    );
    for &delta in deltas {
        let p = HarperParams { delta, ..template.clone() };
        let stats = pooled_level_statistics(&p, b_values, *bins)?;
        for (w, d) in stats.bin_edges.windows(2).zip(&stats.density) {
            let mid = 0.5 * (w[0] + w[1]);
            hist.push(vec![
                delta.into(),
                w[0].into(),
                w[1].into(),
                (*d).into(),
                reference_pdf(mid, RefKind::Poisson)?.into(),
                reference_pdf(mid, RefKind::Goe)?.into(),
            ]);
        }
        let prs = b_values
            .par_iter()
            .map(|&b| {
                let (basis, spec) = harper_sector_spectrum(&HarperParams { b, ..p.clone() })?;
                mean_participation_ratio(&basis, &spec)
            })
            .collect::<photolattice::Result<Vec<f64>>>()?;
        let mean_r = stats.ratios.iter().sum::<f64>() / stats.ratios.len() as f64;
        summary.push(vec![
            delta.into(),
            stats.ratios.len().into(),
            stats.merged.into(),
            mean_r.into(),
            l1_distance(&stats.bin_edges, &stats.density, RefKind::Poisson).into(),
            l1_distance(&stats.bin_edges, &stats.density, RefKind::Goe).into(),
            (prs.iter().sum::<f64>() / prs.len() as f64).into(),
        ]);
    }
    bundle.tables.push(hist);
    bundle.tables.push(summary);
    Ok(())
}

fn quantity_table(name: &str, rows: &[(&str, f64, &str)]) -> Table {
    let mut t = Table::new(name, &["quantity", "value", "unit", "ghz"]);
    for &(q, v, unit) in rows {
        let ghz = if unit == "rad/s" { Cell::from(v / RAD_PER_GHZ) } else { Cell::Empty };
        t.push(vec![q.into(), v.into(), unit.into(), ghz]);
    }
    t
}

fn run_circuit(cfg: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    match &cfg.model {
        ModelConfig::Transmon { e_j, e_c, squid } => {
            let spec = TransmonSpec {
                e_j: *e_j,
                e_c: *e_c,
                squid: squid.map(|(e_j1, e_j2, phi_g, form)| Squid { e_j1, e_j2, phi_g, form }),
            };
            let e_j = spec.josephson_energy()?;
            let p = transmon_params(&spec)?;
            if !p.in_transmon_regime {
                bundle.warn(format!("E_J/E_C = {:.1} is outside the transmon window 50..100", e_j / e_c));
            }
            let alpha = quartic_anharmonicity(&spec, 30)?;
            bundle.tables.push(quantity_table(
                "transmon",
                &[
                    ("e_j", e_j, "rad/s"),
                    ("e_c", *e_c, "rad/s"),
                    ("e_j_over_e_c", e_j / e_c, "1"),
                    ("lambda", p.lambda, "1"),
                    ("u", p.u, "rad/s"),
                    ("delta_omega", p.delta_omega, "rad/s"),
                    ("omega_linear", p.omega_linear, "rad/s"),
                    ("quartic_anharmonicity", alpha, "rad/s"),
                    ("in_transmon_regime", p.in_transmon_regime as i64 as f64, "1"),
                ],
            ));
        }
        ModelConfig::TransmonArray { l, c, c_j, e_j, boundary, n_max } => {
            let ap = coupled_array_params(&ArraySpec { c: *c, c_j: *c_j, e_j: *e_j })?;
            if !ap.small_coupling {
                bundle.warn(format!("C/(C_J+2C) = {:.3} is not small", c / ap.c_tilde));
            }
            bundle.tables.push(quantity_table(
                "array",
                &[
                    ("c", *c, "F"),
                    ("c_j", *c_j, "F"),
                    ("c_tilde", ap.c_tilde, "F"),
                    ("e_j", *e_j, "rad/s"),
                    ("e_c_tilde", ap.e_c_tilde, "rad/s"),
                    ("omega", ap.omega, "rad/s"),
                    ("j", ap.j, "rad/s"),
                    ("u", ap.u, "rad/s"),
                    ("delta_omega", ap.delta_omega, "rad/s"),
                    ("lambda", ap.lambda, "1"),
                ],
            ));
            // read the lattice parameters back out of the assembled Hamiltonian
            let bh = ap.to_bh(*l, *boundary);
            let basis = FockBasis::uniform(*l, SiteSpec::photon(*n_max), NumberSector::Unrestricted)?;
            let h = build_bh(&bh, &basis)?;
            let occ = |ph: &[u8]| {
                let mut v = vec![0u8; *l];
                v[..ph.len()].copy_from_slice(ph);
                basis.index_of_occupation(&v, &vec![0u8; *l])
            };
            let mut t = Table::new("bh_parameters", &["quantity", "formula", "from_hamiltonian"]);
            let one = occ(&[1]).ok_or_else(|| anyhow!("basis lacks a one-photon state"))?;
            let omega_h = h.get(one, one).re;
            t.push(vec!["site_frequency".into(), (ap.omega + ap.delta_omega).into(), omega_h.into()]);
            if *l >= 2 {
                let other = occ(&[0, 1]).unwrap();
                t.push(vec!["j".into(), ap.j.into(), (-h.get(one, other).re).into()]);
            }
            if *n_max >= 2 {
                let two = occ(&[2]).unwrap();
                // H|2> = 2 omega + (-U/2) 2 = 2 omega - U
                t.push(vec!["u".into(), ap.u.into(), (2.0 * omega_h - h.get(two, two).re).into()]);
            }
            bundle.tables.push(t);
            let spec = diagonalize(&h)?;
            let mut et = Table::new("energies", &["k", "energy"]);
            for (k, e) in spec.energies.iter().enumerate() {
                et.push(vec![k.into(), (*e).into()]);
            }
            bundle.tables.push(et);
        }
        _ => unreachable!("rejected by validation"),
    }
    Ok(())
}
