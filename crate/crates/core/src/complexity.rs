//! Fock-probability entropies and their minimization over single-particle
//! bases.
//!
//! The optimizer runs nonlinear conjugate gradients (Polak–Ribière with
//! automatic restarts, backtracking Armijo line search) over the real
//! parameters of a Hermitian generator. Each start first rotates the state
//! into its start basis; the generator `B` is then measured from that basis,
//! so the objective is `f(B) = S_2(exp(iB̂) |φ_start⟩)`.
//!
//! The gradient is exact. Perturbing the rotated state `φ` by a one-body
//! generator `G` changes `Σ P_k²` by `4 Re(i Σ_ij G_ij ⟨χ|c†_i c_j|φ⟩)` with
//! `χ_k = P_k φ_k`; the chain rule through `exp(iB)` uses
//! `d exp(i(B + tE))/dt = i G(E) exp(iB)`, `G(E) = ∫₀¹ e^{isB} E e^{−isB} ds`,
//! evaluated in the eigenbasis of `B`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ManyBodyState;
use crate::generic::sample_cue_unitary_stream;
use crate::linalg::{self, CMat};
use crate::models::{Boundary, ModelSpec};
use crate::onebody::{correlation_entropies, correlation_matrix, transition_matrix};
use crate::rotation::{generator_from_unitary, rotate, RotationGenerator};

/// `−ln Σ_k |a_k|⁴`, no cutoff.
pub fn renyi2_entropy(state: &ManyBodyState) -> f64 {
    renyi2_of_amplitudes(state.amplitudes())
}

pub fn renyi2_of_amplitudes(a: &[C64]) -> f64 {
    -a.iter().map(|x| x.norm_sqr() * x.norm_sqr()).sum::<f64>().ln()
}

/// `−Σ P_k ln P_k` with `0 ln 0 = 0`.
pub fn shannon_entropy(state: &ManyBodyState) -> f64 {
    -state
        .amplitudes()
        .iter()
        .map(|x| x.norm_sqr())
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// Number of probabilities above `threshold`; reporting only.
pub fn k_max(state: &ManyBodyState, threshold: f64) -> usize {
    state.amplitudes().iter().filter(|x| x.norm_sqr() > threshold).count()
}

pub const K_MAX_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Position,
    Momentum,
    Natural,
    ExplicitUnitary,
    Optimized,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Position => "position",
            BasisKind::Momentum => "momentum",
            BasisKind::Natural => "natural",
            BasisKind::ExplicitUnitary => "explicit-unitary",
            BasisKind::Optimized => "optimized",
        }
    }
}

/// Single-particle basis; `unitary` (with `c' = U c`) is set for explicit bases.
#[derive(Clone, Debug)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub unitary: Option<CMat>,
}

impl BasisSpec {
    pub fn of(kind: BasisKind) -> Self {
        BasisSpec { kind, unitary: None }
    }

    pub fn explicit(unitary: CMat) -> Result<Self> {
        let deviation = linalg::unitarity_defect(unitary.as_ref());
        if deviation > 1e-10 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(BasisSpec { kind: BasisKind::ExplicitUnitary, unitary: Some(unitary) })
    }
}

/// Plane-wave orbitals `U_{k,x} = e^{−2πikx/L}/√L`.
pub fn fourier_unitary(length: usize) -> CMat {
    let norm = 1.0 / (length as f64).sqrt();
    Mat::from_fn(length, length, |k, x| {
        C64::from_polar(norm, -2.0 * PI * ((k * x) % length) as f64 / length as f64)
    })
}

/// Momentum-basis unitary of the model, block-diagonal over spin.
pub fn momentum_unitary(model: &ModelSpec) -> CMat {
    let f = fourier_unitary(model.length);
    let mut u = linalg::zeros(model.n_orbitals());
    for (offset, _) in model.spin_blocks() {
        linalg::set_diagonal_block(&mut u, offset, f.as_ref());
    }
    u
}

fn sector_blocks(state: &ManyBodyState) -> Vec<(usize, usize)> {
    state.sector().blocks().iter().map(|b| (b.offset, b.len)).collect()
}

/// Generator rotating a state into the plane-wave basis.
pub fn momentum_generator(model: &ModelSpec) -> Result<RotationGenerator> {
    generator_from_unitary(momentum_unitary(model).as_ref(), Some(model.spin_blocks()))
}

/// Generator rotating `state` into its (deterministic) natural orbitals.
pub fn natural_generator(state: &ManyBodyState) -> Result<RotationGenerator> {
    let nat = correlation_matrix(state).natural_orbitals()?;
    generator_from_unitary(nat.basis_unitary().as_ref(), Some(sector_blocks(state)))
}

/// `S_{P_B}` of `state` (given in the position basis) in the basis `U`.
pub fn entropy_in_unitary_basis(state: &ManyBodyState, unitary: MatRef<'_, C64>) -> Result<f64> {
    let g = generator_from_unitary(unitary, Some(sector_blocks(state)))?;
    Ok(renyi2_entropy(&rotate(state, &g)?))
}

/// Per-start optimizer record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartDiagnostics {
    pub label: String,
    pub initial: f64,
    pub best: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDiagnostics {
    pub iterations: usize,
    pub restarts: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub best_start: String,
    pub starts: Vec<StartDiagnostics>,
}

/// Entropies of one state. `alpha` is `s_opt/(N_i S_c)` when optimized and
/// `s_min/(N_i S_c)` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub s_pb: BTreeMap<String, f64>,
    pub shannon: BTreeMap<String, f64>,
    pub s_min: f64,
    pub s_opt: Option<f64>,
    pub s_c_particle: Option<f64>,
    pub s_c_hole: Option<f64>,
    pub s_c: f64,
    pub n_i: usize,
    pub alpha: f64,
    pub k_max_position: usize,
    pub diagnostics: Option<OptimizerDiagnostics>,
}

impl ComplexityReport {
    /// Best available complexity estimate.
    pub fn s_best(&self) -> f64 {
        self.s_opt.unwrap_or(self.s_min)
    }

    /// `s_min/(N_i S_c)`.
    pub fn min_ratio(&self) -> f64 {
        self.s_min / (self.n_i as f64 * self.s_c)
    }

    fn refresh_alpha(&mut self) {
        self.alpha = self.s_best() / (self.n_i as f64 * self.s_c);
    }
}

/// `N_p` for `ν ≤ 1/2`, the hole count otherwise.
pub fn n_i(n_orbitals: usize, n_particles: usize) -> usize {
    if 2 * n_particles <= n_orbitals {
        n_particles
    } else {
        n_orbitals - n_particles
    }
}

fn base_report(state: &ManyBodyState) -> Result<ComplexityReport> {
    let ent = correlation_entropies(&correlation_matrix(state), &[])?;
    let sector = state.sector();
    let mut s_pb = BTreeMap::new();
    let mut shannon = BTreeMap::new();
    s_pb.insert(BasisKind::Position.name().to_string(), renyi2_entropy(state));
    shannon.insert(BasisKind::Position.name().to_string(), shannon_entropy(state));
    let s_min = s_pb[BasisKind::Position.name()];
    let mut r = ComplexityReport {
        s_pb,
        shannon,
        s_min,
        s_opt: None,
        s_c_particle: ent.s_c_particle,
        s_c_hole: ent.s_c_hole,
        s_c: ent.s_c,
        n_i: n_i(sector.n_orbitals(), sector.n_particles()),
        alpha: f64::NAN,
        k_max_position: k_max(state, K_MAX_THRESHOLD),
        diagnostics: None,
    };
    r.refresh_alpha();
    Ok(r)
}

fn add_basis(r: &mut ComplexityReport, kind: BasisKind, rotated: &ManyBodyState) {
    let s = renyi2_entropy(rotated);
    r.s_pb.insert(kind.name().to_string(), s);
    r.shannon.insert(kind.name().to_string(), shannon_entropy(rotated));
    r.s_min = r.s_min.min(s);
    r.refresh_alpha();
}

/// Position, momentum (periodic models) and natural-orbital entropies of a
/// position-basis state, with `s_min` their minimum.
pub fn baseline_complexities(state: &ManyBodyState, model: Option<&ModelSpec>) -> Result<ComplexityReport> {
    let mut r = base_report(state)?;
    if let Some(m) = model {
        if m.boundary == Boundary::Periodic {
            let rotated = rotate(state, &momentum_generator(m)?)?;
            add_basis(&mut r, BasisKind::Momentum, &rotated);
        }
    }
    let rotated = rotate(state, &natural_generator(state)?)?;
    add_basis(&mut r, BasisKind::Natural, &rotated);
    Ok(r)
}

/// As [`baseline_complexities`] with the momentum rotation supplied, so a
/// sweep over many states of one model builds it once.
pub fn baseline_with_momentum(
    state: &ManyBodyState,
    momentum: Option<&RotationGenerator>,
) -> Result<ComplexityReport> {
    let mut r = base_report(state)?;
    if let Some(g) = momentum {
        let rotated = rotate(state, g)?;
        add_basis(&mut r, BasisKind::Momentum, &rotated);
    }
    let rotated = rotate(state, &natural_generator(state)?)?;
    add_basis(&mut r, BasisKind::Natural, &rotated);
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    Analytic,
    /// Central differences with step `fd_step` per parameter.
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Random CUE starts in addition to identity, natural and momentum.
    pub random_starts: usize,
    pub seed: u64,
    pub gradient_tol: f64,
    pub relative_decrease_tol: f64,
    pub decrease_window: usize,
    pub max_iterations: usize,
    pub gradient: GradientMethod,
    pub fd_step: f64,
    /// Allow the generator to mix conserved orbital blocks (the state is then
    /// embedded into the full particle-number sector).
    pub full_mixing: bool,
    pub armijo_c1: f64,
    pub max_backtracks: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            random_starts: 3,
            seed: 0,
            gradient_tol: 1e-6,
            relative_decrease_tol: 1e-10,
            decrease_window: 5,
            max_iterations: 500,
            gradient: GradientMethod::Analytic,
            fd_step: 1e-4,
            full_mixing: false,
            armijo_c1: 1e-4,
            max_backtracks: 40,
        }
    }
}

/// Real parametrization of Hermitian matrices supported on diagonal blocks:
/// per block, the diagonal, then `(Re, Im)` of each upper-triangle entry.
#[derive(Clone, Debug)]
pub struct HermitianParams {
    n: usize,
    blocks: Vec<(usize, usize)>,
}

impl HermitianParams {
    pub fn new(n: usize, blocks: Vec<(usize, usize)>) -> Self {
        HermitianParams { n, blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|&(_, l)| l * l).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_matrix(&self, p: &[f64]) -> CMat {
        let mut a = linalg::zeros(self.n);
        let mut idx = 0;
        for &(o, l) in &self.blocks {
            for i in 0..l {
                a[(o + i, o + i)] = C64::new(p[idx], 0.0);
                idx += 1;
            }
            for i in 0..l {
                for j in i + 1..l {
                    let z = C64::new(p[idx], p[idx + 1]);
                    a[(o + i, o + j)] = z;
                    a[(o + j, o + i)] = z.conj();
                    idx += 2;
                }
            }
        }
        a
    }

    /// Gradient vector from `Γ` with `df = Re Σ conj(Γ_ij) E_ij`.
    pub fn gradient_from_matrix(&self, gamma: MatRef<'_, C64>) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.len());
        for &(o, l) in &self.blocks {
            for i in 0..l {
                g.push(gamma[(o + i, o + i)].re);
            }
            for i in 0..l {
                for j in i + 1..l {
                    let (a, b) = (gamma[(o + i, o + j)], gamma[(o + j, o + i)]);
                    g.push(a.re + b.re);
                    g.push(a.im - b.im);
                }
            }
        }
        g
    }
}

/// `f(B) = S_2(exp(iB̂) φ₀)` over a fixed start state.
pub struct RenyiObjective {
    start: ManyBodyState,
    params: HermitianParams,
}

impl RenyiObjective {
    pub fn new(start: ManyBodyState) -> Self {
        let blocks = sector_blocks(&start);
        let n = start.sector().n_orbitals();
        RenyiObjective { start, params: HermitianParams::new(n, blocks) }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &HermitianParams {
        &self.params
    }

    pub fn rotated(&self, p: &[f64]) -> Result<ManyBodyState> {
        let g = RotationGenerator::hermitian_projection(self.params.to_matrix(p).as_ref(), None);
        rotate(&self.start, &g)
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(renyi2_entropy(&self.rotated(p)?))
    }

    /// Value and exact gradient.
    pub fn value_and_gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let b = self.params.to_matrix(p);
        let phi = rotate(&self.start, &RotationGenerator::hermitian_projection(b.as_ref(), None))?;
        let amps = phi.amplitudes();
        let s: f64 = amps.iter().map(|x| x.norm_sqr() * x.norm_sqr()).sum();
        let chi: Vec<C64> = amps.iter().map(|x| x * x.norm_sqr()).collect();
        let m = transition_matrix(phi.sector(), &chi, amps);
        let n = b.nrows();
        let local = Mat::from_fn(n, n, |i, j| C64::new(0.0, 4.0) * m[(i, j)].conj() / s);
        let gamma = pullback_through_exp(b.as_ref(), local.as_ref())?;
        Ok((-s.ln(), self.params.gradient_from_matrix(gamma.as_ref())))
    }

    /// Central finite differences.
    pub fn fd_gradient(&self, p: &[f64], step: f64) -> Result<Vec<f64>> {
        let mut x = p.to_vec();
        let mut g = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            x[i] = p[i] + step;
            let fp = self.value(&x)?;
            x[i] = p[i] - step;
            let fm = self.value(&x)?;
            x[i] = p[i];
            g.push((fp - fm) / (2.0 * step));
        }
        Ok(g)
    }
}

/// Maps a gradient `Λ` with respect to a left perturbation `(1 + iG) e^{iB}`
/// to the gradient with respect to `B` itself.
fn pullback_through_exp(b: MatRef<'_, C64>, lambda: MatRef<'_, C64>) -> Result<CMat> {
    let n = b.nrows();
    let (theta, w) = linalg::hermitian_eigen(b)?;
    let wa = linalg::adjoint(w.as_ref());
    let l = &wa * lambda * w.as_ref();
    let h = |x: f64| {
        if x.abs() < 1e-8 {
            C64::new(1.0 - x * x / 6.0, x / 2.0)
        } else {
            (C64::from_polar(1.0, x) - 1.0) / C64::new(0.0, x)
        }
    };
    let inner = Mat::from_fn(n, n, |a, c| l[(a, c)] * h(theta[a] - theta[c]).conj());
    Ok(w.as_ref() * inner * wa)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct CgOutcome {
    params: Vec<f64>,
    value: f64,
    diag: StartDiagnostics,
}

fn eval(obj: &RenyiObjective, p: &[f64], opts: &OptimizerOptions) -> Result<(f64, Vec<f64>)> {
    match opts.gradient {
        GradientMethod::Analytic => obj.value_and_gradient(p),
        GradientMethod::FiniteDifference => Ok((obj.value(p)?, obj.fd_gradient(p, opts.fd_step)?)),
    }
}

fn conjugate_gradient(obj: &RenyiObjective, label: &str, opts: &OptimizerOptions) -> Result<CgOutcome> {
    let n = obj.n_params();
    let mut x = vec![0.0; n];
    let (mut f, mut g) = eval(obj, &x, opts)?;
    let initial = f;
    let mut evaluations = 1;
    let mut diag = StartDiagnostics {
        label: label.to_string(),
        initial,
        best: f,
        iterations: 0,
        evaluations,
        gradient_norm: inf_norm(&g),
        converged: false,
    };
    if f <= 1e-14 || n == 0 {
        diag.converged = true;
        return Ok(CgOutcome { params: x, value: f, diag });
    }
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut history = vec![f];
    let mut since_restart = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if inf_norm(&g) < opts.gradient_tol {
            converged = true;
            break;
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || since_restart >= n {
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            since_restart = 0;
        }
        let gnorm = dot(&g, &g).sqrt();
        let mut accepted = None;
        for attempt in 0..2 {
            let mut t = 1.0 / gnorm;
            for _ in 0..opts.max_backtracks {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
                let ft = obj.value(&trial)?;
                evaluations += 1;
                if ft <= f + opts.armijo_c1 * t * slope {
                    accepted = Some(trial);
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() || attempt == 1 {
                break;
            }
            // Retry once along steepest descent.
            if since_restart == 0 {
                break;
            }
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            since_restart = 0;
        }
        let Some(x_new) = accepted else { break };
        let (f_new, g_new) = eval(obj, &x_new, opts)?;
        evaluations += 1;
        iterations += 1;
        let gg = dot(&g, &g);
        let beta = if gg > 0.0 {
            (dot(&g_new, &g_new) - dot(&g_new, &g)) / gg
        } else {
            0.0
        }
        .max(0.0);
        for (di, gi) in d.iter_mut().zip(&g_new) {
            *di = -gi + beta * *di;
        }
        since_restart += 1;
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if history.len() > opts.decrease_window {
            let old = history[history.len() - 1 - opts.decrease_window];
            if (old - f) <= opts.relative_decrease_tol * old.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if f <= 1e-14 {
            converged = true;
            break;
        }
    }
    diag.best = f;
    diag.iterations = iterations;
    diag.evaluations = evaluations;
    diag.gradient_norm = inf_norm(&g);
    diag.converged = converged;
    Ok(CgOutcome { params: x, value: f, diag })
}

/// Optimization result with the state expressed in the best basis found.
#[derive(Clone, Debug)]
pub struct OptimizedBasis {
    pub report: ComplexityReport,
    pub state: ManyBodyState,
    /// Single-particle unitary (`c' = U c`) of the best basis.
    pub unitary: CMat,
}

/// Multi-start minimization of the Renyi-2 entropy over single-particle bases.
pub fn optimize_basis(
    state: &ManyBodyState,
    model: Option<&ModelSpec>,
    opts: &OptimizerOptions,
) -> Result<ComplexityReport> {
    Ok(optimize_basis_full(state, model, opts)?.report)
}

pub fn optimize_basis_full(
    state: &ManyBodyState,
    model: Option<&ModelSpec>,
    opts: &OptimizerOptions,
) -> Result<OptimizedBasis> {
    let mut report = baseline_complexities(state, model)?;
    let state = if opts.full_mixing && !state.sector().is_single_block() {
        state.embed_in_full_sector()?
    } else {
        state.clone()
    };
    let n = state.sector().n_orbitals();
    let blocks = sector_blocks(&state);

    let mut starts: Vec<(String, RotationGenerator)> = vec![("identity".into(), RotationGenerator::zero(n))];
    starts.push(("natural".into(), natural_generator(&state)?));
    if let Some(m) = model {
        if m.boundary == Boundary::Periodic && m.n_orbitals() == n {
            let g = if opts.full_mixing {
                generator_from_unitary(momentum_unitary(m).as_ref(), None)?
            } else {
                momentum_generator(m)?
            };
            starts.push(("momentum".into(), g));
        }
    }
    for r in 0..opts.random_starts {
        let mut u = linalg::zeros(n);
        for (bi, &(o, l)) in blocks.iter().enumerate() {
            let ub = sample_cue_unitary_stream(l, opts.seed, (r * blocks.len() + bi) as u64 + 1)?;
            linalg::set_diagonal_block(&mut u, o, ub.as_ref());
        }
        starts.push((format!("cue-{r}"), generator_from_unitary(u.as_ref(), Some(blocks.clone()))?));
    }

    let mut best: Option<(f64, ManyBodyState, CMat, String)> = None;
    let mut diags = Vec::with_capacity(starts.len());
    for (label, gen) in &starts {
        let start_state = rotate(&state, gen)?;
        let start_u = gen.unitary()?;
        let obj = RenyiObjective::new(start_state);
        let out = conjugate_gradient(&obj, label, opts)?;
        let final_state = obj.rotated(&out.params)?;
        let value = renyi2_entropy(&final_state).min(out.value);
        let step_u = linalg::expm_i_hermitian(obj.params().to_matrix(&out.params).as_ref())?;
        if best.as_ref().map_or(true, |b| value < b.0) {
            best = Some((value, final_state, &step_u * start_u, label.clone()));
        }
        diags.push(out.diag);
    }
    let (value, best_state, unitary, best_label) = best.expect("at least one start");
    let converged = diags.iter().any(|d| d.converged);
    let best_diag = diags.iter().find(|d| d.label == best_label).cloned().unwrap();
    report.s_opt = Some(value.min(report.s_min));
    report.s_pb.insert(BasisKind::Optimized.name().to_string(), value);
    report.shannon.insert(BasisKind::Optimized.name().to_string(), shannon_entropy(&best_state));
    report.diagnostics = Some(OptimizerDiagnostics {
        iterations: diags.iter().map(|d| d.iterations).sum(),
        restarts: diags.len(),
        gradient_norm: best_diag.gradient_norm,
        converged,
        best_start: best_label,
        starts: diags,
    });
    report.refresh_alpha();
    Ok(OptimizedBasis { report, state: best_state, unitary })
}

/// State of `state` re-expressed in the natural-orbital basis.
pub fn in_natural_basis(state: &ManyBodyState) -> Result<ManyBodyState> {
    rotate(state, &natural_generator(state)?)
}
