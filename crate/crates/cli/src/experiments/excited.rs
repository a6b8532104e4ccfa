//! Complexity ratios of all eigenstates (or those sharing the ground-state
//! symmetry labels) from full diagonalization.

use std::collections::BTreeMap;

use fockcx_core::analysis::{ratio_statistics, BinWidth, ExcitedStats};
use fockcx_core::complexity::{n_i, optimize_basis};
use fockcx_core::models::{build_hamiltonian, parity_operator, translation_operator, Boundary, ModelSpec};
use fockcx_core::onebody::{correlation_entropies, correlation_matrix};
use fockcx_core::spectra::{full_spectrum_capped, label_symmetry, StateLabel};
use serde::{Deserialize, Serialize};

use super::{model_name, par_map, plot_metadata, BasisSet, RunOutput};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::svg::{Plot, Series, Style};

/// One row of `excited.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExcitedRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_o")]
    pub n_o: usize,
    #[serde(rename = "N_p")]
    pub n_p: usize,
    pub coupling: f64,
    pub index: usize,
    pub energy: f64,
    pub group: usize,
    pub momentum_index: Option<usize>,
    pub parity: Option<i8>,
    pub sector: String,
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
    #[serde(rename = "S_c")]
    pub s_c: f64,
    pub ratio: f64,
    pub degenerate: bool,
    pub seed: u64,
}

/// One row of `excited_bins.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub coupling: f64,
    pub sector: String,
    pub count: usize,
    pub excluded: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub ground_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcitedPoint {
    pub rows: Vec<ExcitedRow>,
    pub bins: Vec<(BinRow, ExcitedStats)>,
}

pub struct ExcitedSweep {
    pub output: RunOutput,
    pub points: Vec<ExcitedPoint>,
}

/// `k<m>` plus `+`/`−` parity when defined; `all` without labels.
pub fn sector_name(label: &StateLabel) -> String {
    match (label.momentum_index, label.parity) {
        (Some(m), Some(p)) => format!("k{m}{}", if p > 0.0 { "+" } else { "-" }),
        (Some(m), None) => format!("k{m}"),
        _ => "all".into(),
    }
}

pub fn excited_point(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<ExcitedPoint> {
    let sector = spec.sector()?;
    let h = build_hamiltonian(spec, sector.clone())?;
    let mut spectrum = full_spectrum_capped(&h, cfg.dense_cap)?;
    if spec.boundary == Boundary::Periodic {
        let t = translation_operator(spec, sector.clone())?;
        let p = parity_operator(spec, sector.clone())?;
        spectrum = label_symmetry(&spectrum, &t, &p, spec.length)?;
    }
    let ground_sector = sector_name(&spectrum.labels[0]);
    let groups = spectrum.groups();
    let keep: Vec<usize> = (0..spectrum.len())
        .filter(|&k| !cfg.ground_sector_only || sector_name(&spectrum.labels[k]) == ground_sector)
        .collect();
    let bases = BasisSet::new(spec, &cfg.bases)?;
    let ni = n_i(sector.n_orbitals(), sector.n_particles()) as f64;
    let opts = cfg.optimizer_options();
    let mut rows = Vec::with_capacity(keep.len());
    for &k in &keep {
        let st = &spectrum.states[k];
        let e = bases.entropies(st)?;
        let ent = correlation_entropies(&correlation_matrix(st), &[])?;
        let s_min = e.min();
        let s_opt = if cfg.optimize {
            Some(optimize_basis(st, Some(spec), &opts)?.s_best().min(s_min))
        } else {
            None
        };
        let label = &spectrum.labels[k];
        rows.push(ExcitedRow {
            model: model_name(spec.kind).into(),
            l: spec.length,
            n_o: sector.n_orbitals(),
            n_p: sector.n_particles(),
            coupling: spec.interaction,
            index: k,
            energy: spectrum.energies[k],
            group: label.group,
            momentum_index: label.momentum_index,
            parity: label.parity.map(|p| if p > 0.0 { 1 } else { -1 }),
            sector: sector_name(label),
            s_pos: e.position,
            s_mom: e.momentum,
            s_nat: e.natural,
            s_min,
            s_opt,
            s_c: ent.s_c,
            ratio: s_opt.unwrap_or(s_min) / (ni * ent.s_c),
            degenerate: groups.iter().any(|g| g.contains(&k) && g.len() > 1),
            seed: cfg.seed,
        });
    }
    drop(spectrum);
    let ground_ratio = rows.first().filter(|r| r.index == 0).map_or(f64::NAN, |r| r.ratio);
    let width = if cfg.bin_width > 0.0 { BinWidth::Fixed(cfg.bin_width) } else { BinWidth::FreedmanDiaconis };
    let mut by_sector: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        by_sector.entry(r.sector.clone()).or_default().push(r.ratio);
    }
    let mut bins = Vec::new();
    for (name, ratios) in by_sector {
        let stats = match ratio_statistics(&ratios, width) {
            Ok(s) => s,
            Err(fockcx_core::Error::EmptyBin(m)) if name != ground_sector => {
                log::warn!("skipping sector {name}: {m}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        bins.push((
            BinRow {
                model: model_name(spec.kind).into(),
                l: spec.length,
                coupling: spec.interaction,
                sector: name,
                count: stats.count,
                excluded: stats.excluded,
                mean_ratio: stats.mean,
                std_ratio: stats.std,
                ground_ratio,
            },
            stats,
        ));
    }
    Ok(ExcitedPoint { rows, bins })
}

pub fn run_excited_sweep(cfg: &ExperimentConfig) -> CliResult<ExcitedSweep> {
    let mut specs = Vec::new();
    for &l in &cfg.lengths {
        for &c in &cfg.couplings {
            specs.push(cfg.model_spec(l, c)?);
        }
    }
    let points = par_map(&specs, |s| {
        log::info!("excited point L = {}, coupling = {}", s.length, s.interaction);
        excited_point(cfg, s)
    })?;
    let mut output = RunOutput::start(cfg)?;
    let rows: Vec<ExcitedRow> = points.iter().flat_map(|p| p.rows.iter().cloned()).collect();
    let bins: Vec<BinRow> = points.iter().flat_map(|p| p.bins.iter().map(|b| b.0.clone())).collect();
    output.write_csv("excited.csv", &rows)?;
    output.write_csv("excited_bins.csv", &bins)?;
    output.write_json("excited.json", &serde_json::json!({ "experiment": cfg.experiment.name(), "points": points }))?;
    output.write_text("excited_mean.svg", &mean_plot(cfg, &bins).to_svg())?;
    output.write_text("excited_histogram.svg", &histogram_plot(cfg, &points).to_svg())?;
    Ok(ExcitedSweep { output, points })
}

/// Mean ratio (with ±1 std band edges) against coupling per length.
fn mean_plot(cfg: &ExperimentConfig, bins: &[BinRow]) -> Plot {
    let mut p = Plot::new("excited-state complexity ratio", "coupling", "S / (N_i S_c)");
    let mut by_l: BTreeMap<usize, Vec<&BinRow>> = BTreeMap::new();
    for b in bins {
        by_l.entry(b.l).or_default().push(b);
    }
    for (l, mut bs) in by_l {
        bs.sort_by(|a, b| a.coupling.partial_cmp(&b.coupling).unwrap());
        p.series.push(Series::new(format!("mean L={l}"), bs.iter().map(|b| (b.coupling, b.mean_ratio)).collect(), Style::LineMarkers));
        p.series.push(Series::new(format!("+σ L={l}"), bs.iter().map(|b| (b.coupling, b.mean_ratio + b.std_ratio)).collect(), Style::Dashed));
        p.series.push(Series::new(format!("−σ L={l}"), bs.iter().map(|b| (b.coupling, b.mean_ratio - b.std_ratio)).collect(), Style::Dashed));
        p.series.push(Series::new(format!("ground L={l}"), bs.iter().map(|b| (b.coupling, b.ground_ratio)).collect(), Style::Markers));
    }
    p.metadata = plot_metadata(cfg);
    p
}

/// Histogram outline of the ratio per point.
fn histogram_plot(cfg: &ExperimentConfig, points: &[ExcitedPoint]) -> Plot {
    let mut p = Plot::new("ratio distribution", "S / (N_i S_c)", "count");
    for pt in points {
        for (b, s) in &pt.bins {
            let mut pts = Vec::new();
            for (i, &c) in s.histogram.counts.iter().enumerate() {
                let x0 = s.histogram.lo + i as f64 * s.histogram.width;
                pts.push((x0, c as f64));
                pts.push((x0 + s.histogram.width, c as f64));
            }
            p.series.push(Series::new(format!("L={} c={} {}", b.l, b.coupling, b.sector), pts, Style::Line));
        }
    }
    p.metadata = plot_metadata(cfg);
    p
}
