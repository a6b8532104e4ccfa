//! Post-processing: finite-size fits of α, Fock-distribution compression
//! diagnostics and excited-state ratio statistics.

use std::collections::BTreeMap;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::complexity::{renyi2_entropy, ComplexityReport};
use crate::error::{Error, Result};
use crate::fock::ManyBodyState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FitAbscissa {
    /// `x = 1/N_i`.
    #[default]
    InverseParticles,
    /// `x = 1/L`.
    InverseLength,
}

/// `α(x) = a + b x + c x²`, least squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// `(size, α)` with `size` the value whose inverse is the abscissa.
    pub points: Vec<(f64, f64)>,
    pub abscissa: FitAbscissa,
    pub coefficients: [f64; 3],
    pub extrapolated: f64,
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
}

impl ScalingFit {
    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c] = self.coefficients;
        a + b * x + c * x * x
    }
}

/// Quadratic least-squares fit in `x = 1/size` over `(size, α)` points.
pub fn fit_alpha_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_alpha_scaling_in(points, FitAbscissa::InverseParticles)
}

pub fn fit_alpha_scaling_in(points: &[(f64, f64)], abscissa: FitAbscissa) -> Result<ScalingFit> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
    sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "a quadratic fit needs 3 distinct sizes, got {}",
            sizes.len()
        )));
    }
    if points.iter().any(|p| !(p.0 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InvalidArgument("fit points need positive sizes and finite α".into()));
    }
    let n = points.len();
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.0).collect();
    // Columns scaled by max|x|^k for conditioning; QR via faer.
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let design = Mat::from_fn(n, 3, |i, j| (xs[i] / scale).powi(j as i32));
    let rhs = Mat::from_fn(n, 1, |i, _| points[i].1);
    let qr = design.qr();
    let r = qr.thin_R();
    let diag_min = (0..3).map(|k| r[(k, k)].abs()).fold(f64::INFINITY, f64::min);
    let diag_max = (0..3).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if diag_min <= 1e-12 * diag_max {
        return Err(Error::RankDeficient("design matrix is numerically rank deficient".into()));
    }
    let sol = qr.solve_lstsq(rhs.as_ref());
    let coefficients = [sol[(0, 0)], sol[(1, 0)] / scale, sol[(2, 0)] / (scale * scale)];
    let mut fit = ScalingFit {
        points: points.to_vec(),
        abscissa,
        coefficients,
        extrapolated: coefficients[0],
        residuals: Vec::new(),
        residual_norm: 0.0,
    };
    fit.residuals = points.iter().zip(&xs).map(|(p, &x)| p.1 - fit.eval(x)).collect();
    fit.residual_norm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok(fit)
}

/// Coverage targets reported by [`distribution_stats`].
pub const COVERAGE_LEVELS: [f64; 3] = [0.5, 0.9, 0.99];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub probabilities: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub s_p: f64,
    /// `exp(s_p)`.
    pub complexity: f64,
    /// Standard deviation of the 1-based rank `n` under `P_n`.
    pub sigma_n: f64,
    /// `ln σ_n / s_p`; `None` when `s_p = 0`.
    pub beta: Option<f64>,
    /// `(level, n)` with `n` the smallest rank whose cumulative reaches `level`.
    pub coverage: Vec<(f64, usize)>,
    /// Cumulative probability at `n = round(C)`.
    pub cumulative_at_complexity: f64,
}

impl DistributionStats {
    /// Smallest 1-based `n` with `Σ_{m≤n} P_m ≥ level` (up to 1e-12).
    pub fn coverage_at(&self, level: f64) -> usize {
        coverage_index(&self.cumulative, level)
    }
}

fn coverage_index(cumulative: &[f64], level: f64) -> usize {
    let k = cumulative.partition_point(|&c| c < level - 1e-12);
    (k + 1).min(cumulative.len())
}

/// Sorted-probability diagnostics of `state` in its current basis.
pub fn distribution_stats(state: &ManyBodyState) -> DistributionStats {
    let mut p = state.probabilities();
    p.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &x in &p {
        acc += x;
        cumulative.push(acc);
    }
    let s_p = renyi2_entropy(state).max(0.0);
    let complexity = s_p.exp();
    let (m1, m2) = p.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, &x)| {
        let n = (i + 1) as f64;
        (a + x * n, b + x * n * n)
    });
    let sigma_n = (m2 - m1 * m1).max(0.0).sqrt();
    let beta = (s_p > 0.0).then(|| sigma_n.ln() / s_p);
    let coverage = COVERAGE_LEVELS.iter().map(|&q| (q, coverage_index(&cumulative, q))).collect();
    let n_c = (complexity.round() as usize).clamp(1, cumulative.len());
    let cumulative_at_complexity = cumulative[n_c - 1];
    DistributionStats { probabilities: p, cumulative, s_p, complexity, sigma_n, beta, coverage, cumulative_at_complexity }
}

/// Equal-width histogram over `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len()).map(|k| self.lo + k as f64 * self.width).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BinWidth {
    #[default]
    FreedmanDiaconis,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitedStats {
    pub count: usize,
    /// States whose ratio is undefined (`S_c = 0`), left out of the moments.
    pub excluded: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub histogram: Histogram,
}

/// Minimum number of states per bin.
pub const MIN_BIN_STATES: usize = 10;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean, standard deviation and histogram of ratios in one bin.
pub fn ratio_statistics(ratios: &[f64], width: BinWidth) -> Result<ExcitedStats> {
    let mut v: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    let excluded = ratios.len() - v.len();
    if v.len() < MIN_BIN_STATES {
        return Err(Error::EmptyBin(format!(
            "{} usable states, at least {MIN_BIN_STATES} needed",
            v.len()
        )));
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mean = v[0] + v.iter().map(|x| x - v[0]).sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let mut w = match width {
        BinWidth::Fixed(w) if w > 0.0 => w,
        BinWidth::Fixed(w) => return Err(Error::InvalidArgument(format!("bin width {w} must be positive"))),
        BinWidth::FreedmanDiaconis => {
            let iqr = quantile(&v, 0.75) - quantile(&v, 0.25);
            2.0 * iqr / n.cbrt()
        }
    };
    if !(w > 0.0) || hi - lo <= 0.0 {
        w = if hi > lo { (hi - lo) / (n.sqrt().ceil()) } else { 1.0 };
    }
    let bins = (((hi - lo) / w).floor() as usize + 1).min(10_000);
    let mut counts = vec![0; bins];
    for &x in &v {
        let k = (((x - lo) / w).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(ExcitedStats {
        count: v.len(),
        excluded,
        mean,
        std,
        histogram: Histogram { lo, width: w, counts },
    })
}

/// Statistics of `report.alpha` per label, for labels holding at least
/// [`MIN_BIN_STATES`] states; smaller bins are an error.
pub fn excited_state_statistics(
    reports: &[ComplexityReport],
    labels: &[String],
    width: BinWidth,
) -> Result<BTreeMap<String, ExcitedStats>> {
    if reports.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} reports but {} labels",
            reports.len(),
            labels.len()
        )));
    }
    let mut bins: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (r, l) in reports.iter().zip(labels) {
        bins.entry(l.clone()).or_default().push(r.alpha);
    }
    if bins.is_empty() {
        return Err(Error::EmptyBin("no states".into()));
    }
    bins.into_iter()
        .map(|(l, ratios)| {
            ratio_statistics(&ratios, width)
                .map_err(|e| match e {
                    Error::EmptyBin(m) => Error::EmptyBin(format!("bin {l}: {m}")),
                    other => other,
                })
                .map(|s| (l, s))
        })
        .collect()
}
