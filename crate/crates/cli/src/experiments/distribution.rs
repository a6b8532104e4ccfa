//! Sorted Fock-probability distribution of one state per (L, coupling) in
//! its lowest-entropy basis.

use fockcx_core::analysis::{distribution_stats, DistributionStats};
use fockcx_core::complexity::{optimize_basis_full, renyi2_entropy};
use fockcx_core::models::{build_hamiltonian, ModelSpec};
use fockcx_core::{C64, ManyBodyState};
use serde::{Deserialize, Serialize};

use super::ground::lowest_state;
use super::{model_name, par_map, plot_metadata, BasisSet, RunOutput};
use crate::config::{ExperimentConfig, StateKind};
use crate::error::{CliError, CliResult};
use crate::svg::{Plot, Series, Style};

/// One row of `cumulative.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub coupling: f64,
    pub n: usize,
    pub ln_n_over_l: f64,
    #[serde(rename = "P_n")]
    pub p_n: f64,
    pub cumulative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionPoint {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub coupling: f64,
    pub state: String,
    pub basis: String,
    pub seed: u64,
    #[serde(skip)]
    pub stats: DistributionStats,
    pub s_p: f64,
    pub complexity: f64,
    pub sigma_n: f64,
    pub beta: Option<f64>,
    pub coverage: Vec<(f64, usize)>,
    pub cumulative_at_complexity: f64,
}

pub struct DistributionRun {
    pub output: RunOutput,
    pub points: Vec<DistributionPoint>,
}

/// Equal superposition of the first `n` basis states of the sector.
pub fn uniform_state(spec: &ModelSpec, n: usize) -> CliResult<ManyBodyState> {
    let sector = spec.sector()?;
    if n > sector.dim() {
        return Err(CliError::Config(format!("uniform:{n} exceeds the sector dimension {}", sector.dim())));
    }
    let amps = (0..sector.dim()).map(|k| if k < n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
    Ok(ManyBodyState::new(sector, amps)?)
}

pub fn distribution_point(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<DistributionPoint> {
    let (state, basis) = match cfg.state_kind()? {
        StateKind::Uniform(n) => (uniform_state(spec, n)?, "position".to_string()),
        StateKind::Ground => {
            let h = build_hamiltonian(spec, spec.sector()?)?;
            let (_, st, _) = lowest_state(&h, cfg)?;
            let (kind, fixed) = BasisSet::new(spec, &cfg.bases)?.best_state(&st)?;
            if cfg.optimize {
                let r = optimize_basis_full(&st, Some(spec), &cfg.optimizer_options())?;
                if renyi2_entropy(&r.state) < renyi2_entropy(&fixed) {
                    (r.state, "optimized".to_string())
                } else {
                    (fixed, kind.name().to_string())
                }
            } else {
                (fixed, kind.name().to_string())
            }
        }
    };
    let stats = distribution_stats(&state);
    Ok(DistributionPoint {
        model: model_name(spec.kind).into(),
        l: spec.length,
        coupling: spec.interaction,
        state: cfg.state.clone(),
        basis,
        seed: cfg.seed,
        s_p: stats.s_p,
        complexity: stats.complexity,
        sigma_n: stats.sigma_n,
        beta: stats.beta,
        coverage: stats.coverage.clone(),
        cumulative_at_complexity: stats.cumulative_at_complexity,
        stats,
    })
}

pub fn run_distribution(cfg: &ExperimentConfig) -> CliResult<DistributionRun> {
    let mut specs = Vec::new();
    for &l in &cfg.lengths {
        for &c in &cfg.couplings {
            specs.push(cfg.model_spec(l, c)?);
        }
    }
    let points = par_map(&specs, |s| distribution_point(cfg, s))?;
    let mut output = RunOutput::start(cfg)?;
    let mut rows = Vec::new();
    for p in &points {
        for (i, (&pn, &c)) in p.stats.probabilities.iter().zip(&p.stats.cumulative).enumerate() {
            let n = i + 1;
            rows.push(CumulativeRow {
                model: p.model.clone(),
                l: p.l,
                coupling: p.coupling,
                n,
                ln_n_over_l: (n as f64).ln() / p.l as f64,
                p_n: pn,
                cumulative: c,
            });
        }
    }
    output.write_csv("cumulative.csv", &rows)?;
    output.write_json("stats.json", &serde_json::json!({ "experiment": cfg.experiment.name(), "points": points }))?;
    let mut plot = Plot::new("cumulative Fock distribution", "ln(n) / L", "Σ_{m≤n} P_m");
    for p in &points {
        let pts = p.stats.cumulative.iter().enumerate().map(|(i, &c)| (((i + 1) as f64).ln() / p.l as f64, c)).collect();
        plot.series.push(Series::new(format!("L={} c={}", p.l, p.coupling), pts, Style::Line));
        plot.markers.push((p.s_p / p.l as f64, format!("S_P/L ({})", p.l)));
        if p.sigma_n > 0.0 {
            plot.markers.push((p.sigma_n.ln() / p.l as f64, format!("ln σ/L ({})", p.l)));
        }
    }
    plot.metadata = plot_metadata(cfg);
    output.write_text("cumulative.svg", &plot.to_svg())?;
    Ok(DistributionRun { output, points })
}
