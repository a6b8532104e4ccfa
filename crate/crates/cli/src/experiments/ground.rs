//! Ground-state complexity over a grid of chain lengths and couplings.

use std::collections::BTreeMap;

use fockcx_core::complexity::{n_i, optimize_basis, shannon_entropy, OptimizerDiagnostics};
use fockcx_core::models::{build_hamiltonian, ModelSpec};
use fockcx_core::onebody::{correlation_entropies, correlation_matrix};
use fockcx_core::spectra::{full_spectrum_capped, ground_state_with, LanczosOptions};
use fockcx_core::{ManyBodyState, SparseOperator};
use serde::{Deserialize, Serialize};

use super::{model_name, par_map, plot_metadata, BasisSet, RunOutput};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::svg::{Plot, Series, Style};

/// One row of `ground.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_o")]
    pub n_o: usize,
    #[serde(rename = "N_p")]
    pub n_p: usize,
    pub coupling: f64,
    #[serde(rename = "S_pos")]
    pub s_pos: Option<f64>,
    #[serde(rename = "S_mom")]
    pub s_mom: Option<f64>,
    #[serde(rename = "S_nat")]
    pub s_nat: Option<f64>,
    #[serde(rename = "S_min")]
    pub s_min: f64,
    #[serde(rename = "S_opt")]
    pub s_opt: Option<f64>,
    #[serde(rename = "S_c_p")]
    pub s_c_p: Option<f64>,
    #[serde(rename = "S_c_h")]
    pub s_c_h: Option<f64>,
    #[serde(rename = "S_c")]
    pub s_c: f64,
    pub alpha: f64,
    pub opt_converged: Option<bool>,
    pub seed: u64,
}

impl GroundRow {
    /// `N_i`, the particle or hole count entering α.
    pub fn n_i(&self) -> usize {
        n_i(self.n_o, self.n_p)
    }
}

/// Row plus the details mirrored into `ground.json`.
#[derive(Clone, Debug, Serialize)]
pub struct GroundPoint {
    pub row: GroundRow,
    pub energy: f64,
    pub solver: &'static str,
    pub shannon_position: f64,
    pub diagnostics: Option<OptimizerDiagnostics>,
}

pub struct GroundSweep {
    pub output: RunOutput,
    pub points: Vec<GroundPoint>,
}

/// Lowest eigenpair; dense below `dense_threshold`, Lanczos above.
pub fn lowest_state(h: &SparseOperator, cfg: &ExperimentConfig) -> CliResult<(f64, ManyBodyState, &'static str)> {
    if h.dim() <= cfg.dense_threshold {
        let mut s = full_spectrum_capped(h, cfg.dense_cap)?;
        let st = s.states.swap_remove(0);
        Ok((s.energies[0], st, "dense"))
    } else {
        let opts = LanczosOptions { seed: cfg.seed, ..LanczosOptions::default() };
        let mut s = ground_state_with(h, 1, &opts)?;
        Ok((s.energies[0], s.states.swap_remove(0), "lanczos"))
    }
}

pub fn ground_point(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<GroundPoint> {
    let sector = spec.sector()?;
    let h = build_hamiltonian(spec, sector.clone())?;
    let (energy, state, solver) = lowest_state(&h, cfg)?;
    let bases = BasisSet::new(spec, &cfg.bases)?;
    let e = bases.entropies(&state)?;
    let ent = correlation_entropies(&correlation_matrix(&state), &[])?;
    let s_min = e.min();
    let (s_opt, diagnostics) = if cfg.optimize {
        let r = optimize_basis(&state, Some(spec), &cfg.optimizer_options())?;
        (Some(r.s_best().min(s_min)), r.diagnostics)
    } else {
        (None, None)
    };
    let ni = n_i(sector.n_orbitals(), sector.n_particles());
    let alpha = s_opt.unwrap_or(s_min) / (ni as f64 * ent.s_c);
    let row = GroundRow {
        model: model_name(spec.kind).into(),
        l: spec.length,
        n_o: sector.n_orbitals(),
        n_p: sector.n_particles(),
        coupling: spec.interaction,
        s_pos: e.position,
        s_mom: e.momentum,
        s_nat: e.natural,
        s_min,
        s_opt,
        s_c_p: ent.s_c_particle,
        s_c_h: ent.s_c_hole,
        s_c: ent.s_c,
        alpha,
        opt_converged: diagnostics.as_ref().map(|d| d.converged),
        seed: cfg.seed,
    };
    Ok(GroundPoint { row, energy, solver, shannon_position: shannon_entropy(&state), diagnostics })
}

pub fn run_ground_sweep(cfg: &ExperimentConfig) -> CliResult<GroundSweep> {
    let mut specs = Vec::new();
    for &l in &cfg.lengths {
        for &c in &cfg.couplings {
            specs.push(cfg.model_spec(l, c)?);
        }
    }
    let points = par_map(&specs, |s| {
        log::info!("ground point L = {}, coupling = {}", s.length, s.interaction);
        ground_point(cfg, s)
    })?;
    let mut output = RunOutput::start(cfg)?;
    let rows: Vec<GroundRow> = points.iter().map(|p| p.row.clone()).collect();
    output.write_csv("ground.csv", &rows)?;
    output.write_json("ground.json", &serde_json::json!({ "experiment": cfg.experiment.name(), "points": points }))?;
    output.write_text("entropies.svg", &entropy_plot(cfg, &rows).to_svg())?;
    output.write_text("alpha.svg", &alpha_plot(cfg, &rows).to_svg())?;
    Ok(GroundSweep { output, points })
}

/// Entropies against coupling at the largest length.
fn entropy_plot(cfg: &ExperimentConfig, rows: &[GroundRow]) -> Plot {
    let l = rows.iter().map(|r| r.l).max().unwrap_or(0);
    let sel: Vec<&GroundRow> = rows.iter().filter(|r| r.l == l).collect();
    let series = |name: &str, f: &dyn Fn(&GroundRow) -> Option<f64>, style| {
        Series::new(name, sel.iter().filter_map(|r| f(r).map(|v| (r.coupling, v))).collect(), style)
    };
    let mut p = Plot::new(format!("{} ground state, L = {l}", sel.first().map_or("", |r| r.model.as_str())), "coupling", "S (nats)");
    p.series.push(series("S_pos", &|r| r.s_pos, Style::LineMarkers));
    p.series.push(series("S_mom", &|r| r.s_mom, Style::LineMarkers));
    p.series.push(series("S_nat", &|r| r.s_nat, Style::LineMarkers));
    p.series.push(series("S_opt", &|r| r.s_opt, Style::Markers));
    p.series.push(series("N_i S_c / 2", &|r| Some(0.5 * r.n_i() as f64 * r.s_c), Style::Dashed));
    p.series.retain(|s| !s.points.is_empty());
    p.metadata = plot_metadata(cfg);
    p
}

/// α against `1/N_i`, one series per coupling.
fn alpha_plot(cfg: &ExperimentConfig, rows: &[GroundRow]) -> Plot {
    let mut by_c: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_c.entry(format!("coupling {}", r.coupling)).or_default().push((1.0 / r.n_i() as f64, r.alpha));
    }
    let mut p = Plot::new("α = S / (N_i S_c)", "1 / N_i", "α");
    for (k, mut pts) in by_c {
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        p.series.push(Series::new(k, pts, Style::LineMarkers));
    }
    p.metadata = plot_metadata(cfg);
    p
}
