//! Finite-size extrapolation of α from a `ground.csv` table.

use std::collections::BTreeMap;

use fockcx_core::analysis::{fit_alpha_scaling_in, FitAbscissa, ScalingFit};
use serde::{Deserialize, Serialize};

use super::ground::GroundRow;
use super::{plot_metadata, RunOutput};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::svg::{Plot, Series, Style};

/// One row of `fit.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub coupling: f64,
    pub abscissa: String,
    pub points: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha_extrapolated: f64,
    pub residual_norm: f64,
}

pub struct FitRun {
    pub output: RunOutput,
    pub fits: Vec<(FitRow, ScalingFit)>,
}

pub fn read_ground_csv(path: &std::path::Path) -> CliResult<Vec<GroundRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<GroundRow>, _>>()?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{} has no rows", path.display())));
    }
    Ok(rows)
}

/// Fits `α(x) = a + b x + c x²` per (model, coupling).
pub fn fit_rows(rows: &[GroundRow], abscissa: FitAbscissa) -> CliResult<Vec<(FitRow, ScalingFit)>> {
    let mut groups: BTreeMap<(String, u64), Vec<&GroundRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.model.clone(), r.coupling.to_bits())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((model, c), rs) in groups {
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|r| {
                let size = match abscissa {
                    FitAbscissa::InverseParticles => r.n_i() as f64,
                    FitAbscissa::InverseLength => r.l as f64,
                };
                (size, r.alpha)
            })
            .collect();
        let fit = fit_alpha_scaling_in(&pts, abscissa)?;
        let [a, b, cc] = fit.coefficients;
        out.push((
            FitRow {
                model,
                coupling: f64::from_bits(c),
                abscissa: match abscissa {
                    FitAbscissa::InverseParticles => "1/N_i".into(),
                    FitAbscissa::InverseLength => "1/L".into(),
                },
                points: pts.len(),
                a,
                b,
                c: cc,
                alpha_extrapolated: fit.extrapolated,
                residual_norm: fit.residual_norm,
            },
            fit,
        ));
    }
    Ok(out)
}

pub fn run_scaling_fit(cfg: &ExperimentConfig) -> CliResult<FitRun> {
    let input = cfg
        .input
        .clone()
        .unwrap_or_else(|| cfg.output.join("ground.csv"));
    if !input.is_file() {
        return Err(CliError::Config(format!("input table {} not found", input.display())));
    }
    let rows = read_ground_csv(&input)?;
    let fits = fit_rows(&rows, cfg.fit_abscissa)?;
    let mut output = RunOutput::start(cfg)?;
    let table: Vec<FitRow> = fits.iter().map(|f| f.0.clone()).collect();
    output.write_csv("fit.csv", &table)?;
    output.write_json(
        "fit.json",
        &serde_json::json!({ "experiment": cfg.experiment.name(), "input": input, "fits": fits.iter().map(|f| &f.1).collect::<Vec<_>>() }),
    )?;
    let x_label = table.first().map_or("x".to_string(), |r| r.abscissa.clone());
    let mut p = Plot::new("α extrapolation", x_label, "α");
    for (row, fit) in &fits {
        let pts: Vec<(f64, f64)> = fit.points.iter().map(|&(s, a)| (1.0 / s, a)).collect();
        let xmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
        let curve = (0..=40).map(|k| {
            let x = xmax * k as f64 / 40.0;
            (x, fit.eval(x))
        });
        p.series.push(Series::new(format!("{} c={}", row.model, row.coupling), pts, Style::Markers));
        p.series.push(Series::new(format!("fit c={}", row.coupling), curve.collect(), Style::Dashed));
    }
    p.metadata = plot_metadata(cfg);
    output.write_text("fit.svg", &p.to_svg())?;
    Ok(FitRun { output, fits })
}
