//! Experiment runners. Each writes into the configured output directory:
//! `config.resolved.toml`, `VERSION`, one or more CSV tables with a JSON
//! mirror, and SVG plots. Rows are computed in full before anything is
//! written, so a failed run leaves no partial tables.

pub mod analyze;
pub mod distribution;
pub mod excited;
pub mod generic;
pub mod ground;

use std::fs;
use std::path::PathBuf;

use fockcx_core::complexity::{momentum_generator, natural_generator, renyi2_entropy, BasisKind};
use fockcx_core::models::{Boundary, ModelKind, ModelSpec};
use fockcx_core::rotation::{rotate, RotationGenerator};
use fockcx_core::ManyBodyState;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Environment variable holding the worker count (default: all cores).
pub const THREADS_ENV: &str = "FOCKCX_THREADS";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Evaluates `f` over `items` on a bounded pool, returning results in input
/// order; the first error (in input order) wins.
pub fn par_map<T, R, F>(items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<CliResult<R>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Files written by a run.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn start(cfg: &ExperimentConfig) -> CliResult<Self> {
        fs::create_dir_all(&cfg.output)?;
        let mut out = RunOutput { dir: cfg.output.clone(), files: Vec::new() };
        out.write_text("config.resolved.toml", &cfg.to_toml())?;
        out.write_text("VERSION", &format!("fockcx {VERSION}\n"))?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        fs::write(&p, text)?;
        self.files.push(p);
        Ok(())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(p);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_text(name, &(text + "\n"))
    }
}

/// Provenance embedded in every plot.
pub fn plot_metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        ("generator".into(), format!("fockcx {VERSION}")),
        ("experiment".into(), cfg.experiment.name().into()),
        ("seed".into(), cfg.seed.to_string()),
    ]
}

pub fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Hubbard => "hubbard",
        ModelKind::Tv => "tv",
    }
}

/// Renyi-2 entropies in the configured fixed bases.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BasisEntropies {
    pub position: Option<f64>,
    pub momentum: Option<f64>,
    pub natural: Option<f64>,
}

impl BasisEntropies {
    pub fn min(&self) -> f64 {
        [self.position, self.momentum, self.natural].into_iter().flatten().fold(f64::INFINITY, f64::min)
    }
}

/// Precomputed rotations shared by all states of one model.
pub struct BasisSet {
    bases: Vec<BasisKind>,
    momentum: Option<RotationGenerator>,
}

impl BasisSet {
    pub fn new(spec: &ModelSpec, bases: &[BasisKind]) -> CliResult<Self> {
        let momentum = if bases.contains(&BasisKind::Momentum) && spec.boundary == Boundary::Periodic {
            Some(momentum_generator(spec)?)
        } else {
            None
        };
        Ok(BasisSet { bases: bases.to_vec(), momentum })
    }

    pub fn entropies(&self, state: &ManyBodyState) -> CliResult<BasisEntropies> {
        let mut e = BasisEntropies::default();
        if self.bases.contains(&BasisKind::Position) {
            e.position = Some(renyi2_entropy(state));
        }
        if let Some(g) = &self.momentum {
            e.momentum = Some(renyi2_entropy(&rotate(state, g)?));
        }
        if self.bases.contains(&BasisKind::Natural) {
            e.natural = Some(renyi2_entropy(&rotate(state, &natural_generator(state)?)?));
        }
        if e.min().is_infinite() {
            return Err(CliError::Config("no usable basis in `bases`".into()));
        }
        Ok(e)
    }

    /// The state expressed in the fixed basis of lowest entropy.
    pub fn best_state(&self, state: &ManyBodyState) -> CliResult<(BasisKind, ManyBodyState)> {
        let e = self.entropies(state)?;
        let m = e.min();
        if e.position == Some(m) {
            return Ok((BasisKind::Position, state.clone()));
        }
        if e.momentum == Some(m) {
            return Ok((BasisKind::Momentum, rotate(state, self.momentum.as_ref().unwrap())?));
        }
        Ok((BasisKind::Natural, rotate(state, &natural_generator(state)?)?))
    }
}
