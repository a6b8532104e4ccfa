//! Haar-random states against the analytic generic-state complexity.

use fockcx_core::complexity::{natural_generator, renyi2_entropy};
use fockcx_core::generic::{alpha_g, s_cue_for_dim, sample_haar_state_stream};
use fockcx_core::onebody::{correlation_entropies, correlation_matrix};
use fockcx_core::rotation::rotate;
use serde::{Deserialize, Serialize};

use super::{model_name, par_map, plot_metadata, RunOutput};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::svg::{Plot, Series, Style};

/// One sampled state, a row of `generic_samples.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_o")]
    pub n_o: usize,
    #[serde(rename = "N_p")]
    pub n_p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub sample: usize,
    pub seed: u64,
    pub stream: u64,
    #[serde(rename = "S_pos")]
    pub s_pos: f64,
    #[serde(rename = "S_nat")]
    pub s_nat: f64,
    #[serde(rename = "S_c")]
    pub s_c: f64,
}

/// Per-sector summary, a row of `generic.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenericRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_o")]
    pub n_o: usize,
    #[serde(rename = "N_p")]
    pub n_p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub samples: usize,
    pub mean_s_pos: f64,
    pub std_s_pos: f64,
    pub mean_s_nat: f64,
    pub std_s_nat: f64,
    pub mean_s_c: f64,
    #[serde(rename = "S_cue")]
    pub s_cue: f64,
    pub minus_ln_nu: f64,
    pub alpha_g: f64,
    pub seed: u64,
}

pub struct GenericRun {
    pub output: RunOutput,
    pub summaries: Vec<GenericRow>,
    pub samples: Vec<SampleRow>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let s = if xs.len() > 1 { (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (m, s)
}

pub fn run_generic_baseline(cfg: &ExperimentConfig) -> CliResult<GenericRun> {
    let mut jobs = Vec::new();
    for &l in &cfg.lengths {
        let spec = cfg.model_spec(l, 0.0)?;
        for s in 0..cfg.samples {
            jobs.push((spec.clone(), s));
        }
    }
    let samples = par_map(&jobs, |(spec, s)| {
        let sector = spec.sector()?;
        let stream = *s as u64 + 1;
        let st = sample_haar_state_stream(sector.clone(), cfg.seed, stream)?.state;
        let ent = correlation_entropies(&correlation_matrix(&st), &[])?;
        let s_nat = renyi2_entropy(&rotate(&st, &natural_generator(&st)?)?);
        Ok(SampleRow {
            model: model_name(spec.kind).into(),
            l: spec.length,
            n_o: sector.n_orbitals(),
            n_p: sector.n_particles(),
            q: sector.dim(),
            sample: *s,
            seed: cfg.seed,
            stream,
            s_pos: renyi2_entropy(&st),
            s_nat,
            s_c: ent.s_c,
        })
    })?;
    let mut summaries = Vec::new();
    for chunk in samples.chunks(cfg.samples) {
        let r0 = &chunk[0];
        let pos: Vec<f64> = chunk.iter().map(|r| r.s_pos).collect();
        let nat: Vec<f64> = chunk.iter().map(|r| r.s_nat).collect();
        let sc: Vec<f64> = chunk.iter().map(|r| r.s_c).collect();
        let nu = r0.n_p as f64 / r0.n_o as f64;
        let (mean_s_pos, std_s_pos) = mean_std(&pos);
        let (mean_s_nat, std_s_nat) = mean_std(&nat);
        summaries.push(GenericRow {
            model: r0.model.clone(),
            l: r0.l,
            n_o: r0.n_o,
            n_p: r0.n_p,
            q: r0.q,
            samples: chunk.len(),
            mean_s_pos,
            std_s_pos,
            mean_s_nat,
            std_s_nat,
            mean_s_c: mean_std(&sc).0,
            s_cue: s_cue_for_dim(r0.q),
            minus_ln_nu: -nu.min(1.0 - nu).ln(),
            alpha_g: alpha_g(nu)?,
            seed: cfg.seed,
        });
    }
    let mut output = RunOutput::start(cfg)?;
    output.write_csv("generic.csv", &summaries)?;
    output.write_csv("generic_samples.csv", &samples)?;
    output.write_json(
        "generic.json",
        &serde_json::json!({ "experiment": cfg.experiment.name(), "summaries": summaries, "samples": samples }),
    )?;
    let mut p = Plot::new("generic states", "Q", "S (nats)");
    p.series.push(Series::new("mean S_pos", summaries.iter().map(|r| (r.q as f64, r.mean_s_pos)).collect(), Style::LineMarkers));
    p.series.push(Series::new("mean S_nat", summaries.iter().map(|r| (r.q as f64, r.mean_s_nat)).collect(), Style::LineMarkers));
    p.series.push(Series::new("ln(Q/2)", summaries.iter().map(|r| (r.q as f64, r.s_cue)).collect(), Style::Dashed));
    p.metadata = plot_metadata(cfg);
    output.write_text("generic.svg", &p.to_svg())?;
    Ok(GenericRun { output, summaries, samples })
}
