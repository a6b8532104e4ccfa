//! Experiment configuration: a flat `key = value` TOML file, overridden by
//! command-line settings, resolved into [`ExperimentConfig`].
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `experiment` | `ground-sweep`, `excited-sweep`, `generic-baseline`, `distribution`, `scaling-fit` | set by the subcommand |
//! | `model` | `hubbard` or `tv` | `hubbard` |
//! | `lengths` | chain lengths `L` | `[4, 6, 8]` |
//! | `hopping` | `t` | `1.0` |
//! | `couplings` | `U` or `V` values | `[10.0]` |
//! | `filling` | `ν = N_p / N_o` | `0.5` |
//! | `boundary` | `periodic` or `open` | `periodic` |
//! | `bases` | subset of `position`, `momentum`, `natural` | all three |
//! | `optimize` | run the basis optimizer | `true` |
//! | `random_starts` | random CUE starts per optimization | `3` |
//! | `max_iterations` | CG iterations per start | `500` |
//! | `gradient` | `analytic` or `finite-difference` | `analytic` |
//! | `full_mixing` | let rotations mix spin blocks | `false` |
//! | `seed` | master seed | `0` |
//! | `samples` | Haar samples per size | `5` |
//! | `dense_cap` | largest sector diagonalized densely | `20000` |
//! | `dense_threshold` | ground states of sectors up to this size use dense diagonalization | `400` |
//! | `ground_sector_only` | keep only eigenstates sharing the ground-state labels | `true` |
//! | `bin_width` | histogram width, `0` for Freedman–Diaconis | `0.0` |
//! | `state` | `ground` or `uniform:<count>` | `ground` |
//! | `input` | CSV consumed by `analyze` | none |
//! | `fit_abscissa` | `inverse-particles` or `inverse-length` | `inverse-particles` |
//! | `output` | output directory | `out` |

use std::path::{Path, PathBuf};

use fockcx_core::analysis::FitAbscissa;
use fockcx_core::complexity::{BasisKind, GradientMethod, OptimizerOptions};
use fockcx_core::models::{Boundary, ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GroundSweep,
    ExcitedSweep,
    GenericBaseline,
    Distribution,
    ScalingFit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GroundSweep => "ground-sweep",
            ExperimentKind::ExcitedSweep => "excited-sweep",
            ExperimentKind::GenericBaseline => "generic-baseline",
            ExperimentKind::Distribution => "distribution",
            ExperimentKind::ScalingFit => "scaling-fit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelKind,
    pub lengths: Vec<usize>,
    pub hopping: f64,
    pub couplings: Vec<f64>,
    pub filling: f64,
    pub boundary: Boundary,
    pub bases: Vec<BasisKind>,
    pub optimize: bool,
    pub random_starts: usize,
    pub max_iterations: usize,
    pub gradient: GradientMethod,
    pub full_mixing: bool,
    pub seed: u64,
    pub samples: usize,
    pub dense_cap: usize,
    pub dense_threshold: usize,
    pub ground_sector_only: bool,
    pub bin_width: f64,
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub fit_abscissa: FitAbscissa,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::GroundSweep,
            model: ModelKind::Hubbard,
            lengths: vec![4, 6, 8],
            hopping: 1.0,
            couplings: vec![10.0],
            filling: 0.5,
            boundary: Boundary::Periodic,
            bases: vec![BasisKind::Position, BasisKind::Momentum, BasisKind::Natural],
            optimize: true,
            random_starts: 3,
            max_iterations: 500,
            gradient: GradientMethod::Analytic,
            full_mixing: false,
            seed: 0,
            samples: 5,
            dense_cap: 20_000,
            dense_threshold: 400,
            ground_sector_only: true,
            bin_width: 0.0,
            state: "ground".into(),
            input: None,
            fit_abscissa: FitAbscissa::InverseParticles,
            output: PathBuf::from("out"),
        }
    }
}

/// Parses one `key=value` override; values that are not valid TOML are taken
/// as strings.
pub fn parse_override(s: &str) -> CliResult<(String, toml::Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

/// Merges the config file (if any) with overrides, later entries winning.
pub fn resolve(
    file: Option<&Path>,
    experiment: ExperimentKind,
    overrides: &[(String, toml::Value)],
) -> CliResult<ExperimentConfig> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    if let Some(v) = table.get("experiment") {
        if v.as_str() != Some(experiment.name()) {
            return Err(CliError::Config(format!(
                "config declares experiment {v} but the subcommand runs `{}`",
                experiment.name()
            )));
        }
    }
    for (k, v) in overrides {
        if let toml::Value::Table(_) = v {
            return Err(CliError::Config(format!("`{k}` must be a plain value")));
        }
        table.insert(k.clone(), v.clone());
    }
    for (k, v) in &table {
        if matches!(v, toml::Value::Table(_)) {
            return Err(CliError::Config(format!("section [{k}] not allowed: the config is flat key = value")));
        }
    }
    table.insert("experiment".into(), toml::Value::String(experiment.name().into()));
    let cfg: ExperimentConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.experiment != ExperimentKind::ScalingFit {
            if self.lengths.is_empty() {
                return bad("`lengths` is empty".into());
            }
            if self.couplings.is_empty() && self.experiment != ExperimentKind::GenericBaseline {
                return bad("`couplings` is empty".into());
            }
            if !(self.filling > 0.0 && self.filling < 1.0) {
                return bad(format!("`filling` must lie in (0, 1), got {}", self.filling));
            }
            for &l in &self.lengths {
                self.model_spec(l, 0.0)?;
            }
        }
        if !self.hopping.is_finite() || self.couplings.iter().any(|c| !c.is_finite()) {
            return bad("hopping and couplings must be finite".into());
        }
        if self.bases.iter().any(|b| !matches!(b, BasisKind::Position | BasisKind::Momentum | BasisKind::Natural)) {
            return bad("`bases` may only list position, momentum and natural".into());
        }
        if self.bin_width < 0.0 {
            return bad("`bin_width` must be ≥ 0".into());
        }
        if self.experiment == ExperimentKind::GenericBaseline && self.samples == 0 {
            return bad("`samples` must be positive".into());
        }
        if self.experiment == ExperimentKind::ScalingFit && self.input.is_none() {
            return bad("`analyze` needs `input` (a ground-sweep CSV)".into());
        }
        if self.experiment == ExperimentKind::Distribution {
            self.state_kind()?;
        }
        Ok(())
    }

    /// Model at length `l` and coupling `c`; particles from `filling`.
    pub fn model_spec(&self, l: usize, c: f64) -> CliResult<ModelSpec> {
        let per_block = self.filling * l as f64;
        let n = per_block.round();
        if (per_block - n).abs() > 1e-9 {
            return Err(CliError::Config(format!(
                "filling {} does not give an integer particle number at L = {l}",
                self.filling
            )));
        }
        let n = n as usize;
        let spec = match self.model {
            ModelKind::Hubbard => ModelSpec::hubbard(l, self.hopping, c, n, n),
            ModelKind::Tv => ModelSpec::tv(l, self.hopping, c, n),
        }
        .with_boundary(self.boundary);
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            random_starts: self.random_starts,
            seed: self.seed,
            max_iterations: self.max_iterations,
            gradient: self.gradient,
            full_mixing: self.full_mixing,
            ..OptimizerOptions::default()
        }
    }

    pub fn state_kind(&self) -> CliResult<StateKind> {
        if self.state == "ground" {
            return Ok(StateKind::Ground);
        }
        if let Some(n) = self.state.strip_prefix("uniform:") {
            let n: usize = n
                .parse()
                .map_err(|_| CliError::Config(format!("bad uniform count in `state = {}`", self.state)))?;
            if n == 0 {
                return Err(CliError::Config("uniform state needs a positive count".into()));
            }
            return Ok(StateKind::Uniform(n));
        }
        Err(CliError::Config(format!("unknown `state = {}`", self.state)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Ground,
    Uniform(usize),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_as_toml() {
        assert_eq!(parse_override("seed=7").unwrap().1, toml::Value::Integer(7));
        assert_eq!(parse_override("lengths = [4, 6]").unwrap().1.as_array().unwrap().len(), 2);
        assert_eq!(parse_override("model=tv").unwrap().1, toml::Value::String("tv".into()));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn defaults_resolve_and_round_trip() {
        let cfg = resolve(None, ExperimentKind::GroundSweep, &[]).unwrap();
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let o = vec![parse_override("bogus=1").unwrap()];
        assert!(matches!(resolve(None, ExperimentKind::GroundSweep, &o), Err(CliError::Config(_))));
        let o = vec![("x".to_string(), toml::Value::Table(toml::Table::new()))];
        assert!(resolve(None, ExperimentKind::GroundSweep, &o).is_err());
    }

    #[test]
    fn non_integer_filling_rejected() {
        let o = vec![parse_override("lengths=[5]").unwrap()];
        assert!(matches!(resolve(None, ExperimentKind::GroundSweep, &o), Err(CliError::Config(_))));
    }

    #[test]
    fn state_kinds() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.state_kind().unwrap(), StateKind::Ground);
        c.state = "uniform:12".into();
        assert_eq!(c.state_kind().unwrap(), StateKind::Uniform(12));
        c.state = "uniform:x".into();
        assert!(c.state_kind().is_err());
    }
}
