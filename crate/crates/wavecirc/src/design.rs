//! Derivative-free design of circuit parameters: a Nelder–Mead simplex
//! search over moment objectives, plus the scale-by-scale boundary solver.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{moment_centered, orthonormal_high_freq_moment, orthonormal_moment};
use crate::boundary::{self, ScaleGates};
use crate::circuits::{
    extract_filter_bank, BoundaryAngles, Centering, CircuitError, CircuitFamily, CircuitSpec,
    CoefficientSequence, FilterBank, Role,
};
use crate::construction::{angles_from_scaling, minimum_phase};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("iteration budget exhausted at f = {f:e}")]
    MaxIterExceeded { x: Vec<f64>, f: f64 },
    #[error("no restart reached the target: best f = {best:e}, target {target:e}")]
    ConvergenceFailure { best: f64, target: f64 },
    #[error("no boundary solution at scale {scale}: {detail}")]
    NoSolution { scale: usize, detail: String },
    #[error("shear parameter {0} is too close to ±1")]
    DegenerateShear(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

impl DesignError {
    pub fn code(&self) -> &'static str {
        match self {
            DesignError::MaxIterExceeded { .. } => "max_iter_exceeded",
            DesignError::ConvergenceFailure { .. } => "convergence_failure",
            DesignError::NoSolution { .. } => "no_solution",
            DesignError::DegenerateShear(_) => "degenerate_shear",
            DesignError::InvalidArgument(_) => "invalid_argument",
            DesignError::Circuit(_) => "circuit_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    pub simplex_init_step: f64,
    pub restarts: usize,
    pub seed: u64,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iter: 20_000,
            simplex_init_step: 0.25,
            restarts: 24,
            seed: 0,
            f_tol: 1e-30,
            x_tol: 1e-12,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), DesignError> {
        let ok = self.max_iter > 0
            && self.restarts > 0
            && self.simplex_init_step > 0.0
            && self.f_tol > 0.0
            && self.x_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(DesignError::InvalidArgument(
                "optimizer settings must all be positive".into(),
            ))
        }
    }
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0` with the adaptive-coefficient simplex method.
/// After each convergence the simplex is rebuilt around the best vertex,
/// first at the initial step and then at steps ten, a hundred and a
/// thousand times smaller; the search ends when no rebuild improves by
/// `f_tol`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, f64), DesignError> {
    cfg.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(DesignError::InvalidArgument("empty starting point".into()));
    }
    let nf = n as f64;
    let (alpha, gamma, rho, shrink) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let shrink = if n == 1 { 0.5 } else { shrink };
    let mut best = (x0.to_vec(), eval(&f, x0));
    let mut iters = 0usize;
    let mut shrink_level = 0;
    loop {
        let step = cfg.simplex_init_step * 0.1f64.powi(shrink_level);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push(best.clone());
        for i in 0..n {
            let mut x = best.0.clone();
            x[i] += step;
            let fx = eval(&f, &x);
            simplex.push((x, fx));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            let diam = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let tiny = 1e-15 * (1.0 + simplex[0].0.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            if (spread <= cfg.f_tol && diam <= cfg.x_tol) || diam <= tiny {
                break;
            }
            if iters >= cfg.max_iter {
                let (x, fx) = simplex.swap_remove(0);
                let (x, fx) = if fx <= best.1 { (x, fx) } else { best };
                return Err(DesignError::MaxIterExceeded { x, f: fx });
            }
            iters += 1;
            let mut c = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (ci, xi) in c.iter_mut().zip(x) {
                    *ci += xi / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                c.iter().zip(&simplex[n].0).map(|(ci, wi)| ci + t * (ci - wi)).collect()
            };
            let xr = along(alpha);
            let fr = eval(&f, &xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * gamma);
                let fe = eval(&f, &xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc, accept) = if fr < simplex[n].1 {
                let xc = along(alpha * rho);
                let fc = eval(&f, &xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = along(-rho);
                let fc = eval(&f, &xc);
                (xc, fc, fc < simplex[n].1)
            };
            if accept {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for v in simplex.iter_mut().skip(1) {
                for (xi, bi) in v.0.iter_mut().zip(&x_best) {
                    *xi = bi + shrink * (*xi - bi);
                }
                v.1 = eval(&f, &v.0);
            }
        }
        let cand = simplex.swap_remove(0);
        let improved = best.1 - cand.1 > cfg.f_tol;
        if cand.1 <= best.1 {
            best = cand;
        }
        if improved {
            shrink_level = 0;
        } else if shrink_level < 3 {
            shrink_level += 1;
        } else {
            return Ok(best);
        }
    }
}

/// One weighted term of a design objective. Moment terms contribute
/// `weight·m²`. Wavelet and high-frequency moments are taken against the
/// discrete orthonormal polynomials of the tap grid, which have the same
/// zero sets as the power moments when every order below a bound is
/// included. Scaling moments skip order 0, so they use centered powers,
/// i.e. moments about the sequence midpoint. The sequence difference
/// contributes `weight·‖a − b‖` with the shorter sequence padded
/// symmetrically by zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    WaveletMoment { role: Role, alpha: u32, weight: f64 },
    HighFreqMoment { role: Role, alpha: u32, weight: f64 },
    ScalingMoment { role: Role, alpha: u32, weight: f64 },
    SequenceDifference { role: Role, other: Role, weight: f64 },
}

impl Term {
    fn weight(&self) -> f64 {
        match self {
            Term::WaveletMoment { weight, .. }
            | Term::HighFreqMoment { weight, .. }
            | Term::ScalingMoment { weight, .. }
            | Term::SequenceDifference { weight, .. } => *weight,
        }
    }

    pub fn value(&self, bank: &FilterBank) -> f64 {
        match *self {
            Term::WaveletMoment { role, alpha, weight } => weight * orthonormal_moment(bank.seq(role), alpha).powi(2),
            Term::ScalingMoment { role, alpha, weight } => weight * moment_centered(bank.seq(role), alpha).powi(2),
            Term::HighFreqMoment { role, alpha, weight } => {
                weight * orthonormal_high_freq_moment(bank.seq(role), alpha).powi(2)
            }
            Term::SequenceDifference { role, other, weight } => {
                weight * padded_difference(bank.seq(role), bank.seq(other))
            }
        }
    }
}

/// ‖a − b‖ after padding the shorter sequence with equal numbers of zeros at
/// both ends.
pub fn padded_difference(a: &CoefficientSequence, b: &CoefficientSequence) -> f64 {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let pad = (long.len() - short.len()) / 2;
    long.taps
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let y = i
                .checked_sub(pad)
                .and_then(|j| short.taps.get(j))
                .copied()
                .unwrap_or(0.0);
            (x - y).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub family: CircuitFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centering: Option<Centering>,
    pub terms: Vec<Term>,
}

impl Objective {
    pub fn new(family: CircuitFamily, centering: Option<Centering>, terms: Vec<Term>) -> Result<Self, DesignError> {
        if terms.is_empty() {
            return Err(DesignError::InvalidArgument("objective needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| !(t.weight() > 0.0 && t.weight().is_finite())) {
            return Err(DesignError::InvalidArgument(format!("term weight must be positive: {t:?}")));
        }
        let roles = family.roles();
        for t in &terms {
            let used: &[Role] = match t {
                Term::WaveletMoment { role, .. }
                | Term::HighFreqMoment { role, .. }
                | Term::ScalingMoment { role, .. } => std::slice::from_ref(role),
                Term::SequenceDifference { role, other, .. } => &[*role, *other],
            };
            if let Some(r) = used.iter().find(|r| !roles.contains(r)) {
                return Err(DesignError::InvalidArgument(format!("role {r} is not produced by {family} circuits")));
            }
        }
        Ok(Objective { family, centering, terms })
    }

    pub fn spec(&self, params: &[f64]) -> Result<CircuitSpec, CircuitError> {
        let spec = CircuitSpec {
            family: self.family,
            depth: params.len(),
            params: params.to_vec(),
            centering: self.centering,
            boundary: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn value_on(&self, bank: &FilterBank) -> f64 {
        self.terms.iter().map(|t| t.value(bank)).sum()
    }

    /// Objective at `params`; infinite where the circuit is invalid.
    pub fn evaluate(&self, params: &[f64]) -> f64 {
        match self.spec(params).and_then(|s| extract_filter_bank(&s)) {
            Ok(bank) => self.value_on(&bank),
            Err(_) => f64::INFINITY,
        }
    }

    /// The same objective without sequence-difference penalties.
    pub fn constraints_only(&self) -> Objective {
        Objective {
            family: self.family,
            centering: self.centering,
            terms: self
                .terms
                .iter()
                .filter(|t| !matches!(t, Term::SequenceDifference { .. }))
                .cloned()
                .collect(),
        }
    }
}

fn wavelet_terms(roles: &[Role], alphas: std::ops::Range<u32>) -> Vec<Term> {
    roles
        .iter()
        .flat_map(|&role| alphas.clone().map(move |alpha| Term::WaveletMoment { role, alpha, weight: 1.0 }))
        .collect()
}

pub fn binary_moment_objective(order: usize) -> Objective {
    Objective::new(CircuitFamily::Binary, None, wavelet_terms(&[Role::G], 0..order as u32))
        .expect("valid binary objective")
}

pub fn ternary_max_moments_objective(depth: usize) -> Objective {
    Objective::new(
        CircuitFamily::Ternary,
        Some(Centering::Site),
        wavelet_terms(&[Role::BPlus, Role::BMinus], 0..depth as u32),
    )
    .expect("valid ternary objective")
}

/// Assignment of the ternary outputs (s⁺, b⁺, b⁻) to low/mid/high bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LmhType {
    I,
    II,
    III,
}

impl LmhType {
    /// (low, mid, high) roles and the centering of the continuing class.
    pub fn bands(self) -> (Role, Role, Role, Centering) {
        match self {
            LmhType::I => (Role::SPlus, Role::BPlus, Role::BMinus, Centering::Site),
            LmhType::II => (Role::BPlus, Role::SPlus, Role::BMinus, Centering::Edge),
            LmhType::III => (Role::BPlus, Role::BMinus, Role::SPlus, Centering::Edge),
        }
    }
}

impl fmt::Display for LmhType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LmhType::I => "I",
            LmhType::II => "II",
            LmhType::III => "III",
        })
    }
}

impl FromStr for LmhType {
    type Err = DesignError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "1" => Ok(LmhType::I),
            "II" | "2" => Ok(LmhType::II),
            "III" | "3" => Ok(LmhType::III),
            _ => Err(DesignError::InvalidArgument(format!("unknown type {s:?}, expected I, II or III"))),
        }
    }
}

pub fn ternary_lmh_objective(ty: LmhType) -> Objective {
    let (low, mid, high, centering) = ty.bands();
    let mut terms = wavelet_terms(&[mid, high], 0..3);
    for role in [low, mid] {
        terms.extend((0..3).map(|alpha| Term::HighFreqMoment { role, alpha, weight: 1.0 }));
    }
    Objective::new(CircuitFamily::Ternary, Some(centering), terms).expect("valid lmh objective")
}

pub fn multiwavelet_objective(moments: usize, penalty: f64) -> Result<Objective, DesignError> {
    let p = moments as u32;
    let mut terms = wavelet_terms(&[Role::GLeft, Role::GRight], 0..p);
    for role in [Role::HTop, Role::HBottom] {
        terms.extend((1..p).map(|alpha| Term::ScalingMoment { role, alpha, weight: 1.0 }));
    }
    if penalty > 0.0 {
        terms.push(Term::SequenceDifference { role: Role::HTop, other: Role::HBottom, weight: penalty });
    } else if penalty < 0.0 || penalty.is_nan() {
        return Err(DesignError::InvalidArgument(format!("penalty must be non-negative, got {penalty}")));
    }
    Objective::new(CircuitFamily::ModifiedTernary, None, terms)
}

pub fn quaternary_objective(moments: usize) -> Objective {
    Objective::new(
        CircuitFamily::Quaternary,
        None,
        wavelet_terms(&[Role::HMinus, Role::GPlus, Role::GMinus], 0..moments as u32),
    )
    .expect("valid quaternary objective")
}

pub fn biorthogonal_objective(moments: usize) -> Objective {
    Objective::new(
        CircuitFamily::BinaryInvertible,
        None,
        wavelet_terms(&[Role::GDec, Role::GRec], 0..moments as u32),
    )
    .expect("valid biorthogonal objective")
}

/// Target on the summed squared residuals of the design objectives.
pub const DESIGN_TARGET: f64 = 1e-16;

const SHEAR_LIMIT: f64 = 0.99;

struct Run {
    x: Vec<f64>,
    f: f64,
}

/// Runs `cfg.restarts` searches from seeded random points drawn uniformly
/// in `[lo, hi]`; stops early once `stop` accepts a result.
fn multistart<F: Fn(&[f64]) -> f64>(
    f: F,
    dim: usize,
    (lo, hi): (f64, f64),
    cfg: &OptimizerConfig,
    mut stop: impl FnMut(&Run) -> bool,
) -> Result<Vec<Run>, DesignError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut runs = Vec::new();
    for _ in 0..cfg.restarts {
        let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(lo..=hi)).collect();
        let (x, fx) = match nelder_mead(&f, &x0, cfg) {
            Ok(r) => r,
            Err(DesignError::MaxIterExceeded { x, f }) => (x, f),
            Err(e) => return Err(e),
        };
        let run = Run { x, f: fx };
        let done = stop(&run);
        runs.push(run);
        if done {
            break;
        }
    }
    Ok(runs)
}

fn best_or_fail(runs: Vec<Run>, target: f64) -> Result<Vec<f64>, DesignError> {
    let best = runs
        .into_iter()
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("at least one restart");
    if best.f <= target {
        Ok(best.x)
    } else {
        Err(DesignError::ConvergenceFailure { best: best.f, target })
    }
}

fn check_range(name: &str, v: usize, lo: usize, hi: usize) -> Result<(), DesignError> {
    if v < lo || v > hi {
        return Err(DesignError::InvalidArgument(format!("{name} must be in {lo}..={hi}, got {v}")));
    }
    Ok(())
}

/// Binary angles whose wavelet has `order` vanishing moments, returned in
/// canonical branch form: the first restart reaching the target is mapped to
/// the extremal-phase member of its factorization family and its angles are
/// recovered by peeling (peels in (−π/2, π/2], θ₁ fixed by Σh > 0).
pub fn design_binary_daubechies(order: usize, cfg: &OptimizerConfig) -> Result<Vec<f64>, DesignError> {
    check_range("order", order, 1, 10)?;
    let obj = binary_moment_objective(order);
    let runs = multistart(|x| obj.evaluate(x), order, (-FRAC_PI_2, FRAC_PI_2), cfg, |r| r.f <= DESIGN_TARGET)?;
    let x = best_or_fail(runs, DESIGN_TARGET)?;
    let bank = extract_filter_bank(&obj.spec(&x)?)?;
    let normalized = minimum_phase(bank.seq(Role::H), order)
        .and_then(|h| angles_from_scaling(&h, 1e-7))
        .map_err(|e| DesignError::InvalidArgument(format!("branch normalization failed: {e}")))?;
    Ok(normalized)
}

/// Site-centered ternary angles with `depth` vanishing moments on b⁺ and b⁻.
pub fn design_ternary_max_moments(depth: usize, cfg: &OptimizerConfig) -> Result<Vec<f64>, DesignError> {
    check_range("depth", depth, 2, 12)?;
    if depth % 2 != 0 {
        return Err(DesignError::InvalidArgument(format!("depth must be even, got {depth}")));
    }
    let obj = ternary_max_moments_objective(depth);
    let target = 1e-20;
    let runs = multistart(|x| obj.evaluate(x), depth, (-FRAC_PI_2, FRAC_PI_2), cfg, |r| r.f <= target)?;
    best_or_fail(runs, target)
}

/// Ternary angles with low/mid/high band roles per `ty`.
pub fn design_ternary_lmh(ty: LmhType, depth: usize, cfg: &OptimizerConfig) -> Result<Vec<f64>, DesignError> {
    check_range("depth", depth, 2, 12)?;
    let obj = ternary_lmh_objective(ty);
    let runs = multistart(|x| obj.evaluate(x), depth, (-PI, PI), cfg, |r| r.f <= DESIGN_TARGET)?;
    best_or_fail(runs, DESIGN_TARGET)
}

/// Modified-ternary angles. Each restart first minimizes moments plus
/// `penalty·Ω`, then re-solves the moment conditions alone from there; the
/// feasible result with the smallest Ω wins.
pub fn design_multiwavelet(
    depth: usize,
    moments: usize,
    penalty: f64,
    cfg: &OptimizerConfig,
) -> Result<Vec<f64>, DesignError> {
    check_range("depth", depth, 1, 16)?;
    check_range("moments", moments, 1, 8)?;
    let full = multiwavelet_objective(moments, penalty)?;
    let cons = full.constraints_only();
    let omega = |x: &[f64]| -> f64 {
        full.spec(x)
            .and_then(|s| extract_filter_bank(&s))
            .map(|b| padded_difference(b.seq(Role::HTop), b.seq(Role::HBottom)))
            .unwrap_or(f64::INFINITY)
    };
    let runs = multistart(|x| full.evaluate(x), depth, (-PI, PI), cfg, |_| false)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_f = f64::INFINITY;
    for run in runs {
        let (x, f) = match nelder_mead(|x| cons.evaluate(x), &run.x, cfg) {
            Ok(r) => r,
            Err(DesignError::MaxIterExceeded { x, f }) => (x, f),
            Err(e) => return Err(e),
        };
        best_f = best_f.min(f);
        if f > DESIGN_TARGET {
            continue;
        }
        let om = omega(&x);
        if best.as_ref().is_none_or(|(o, _)| om < *o) {
            best = Some((om, x));
        }
    }
    best.map(|(_, x)| x).ok_or(DesignError::ConvergenceFailure { best: best_f, target: DESIGN_TARGET })
}

/// Quaternary angles with `moments` vanishing moments on h⁻, g⁺ and g⁻.
pub fn design_quaternary(depth: usize, moments: usize, cfg: &OptimizerConfig) -> Result<Vec<f64>, DesignError> {
    check_range("depth", depth, 1, 16)?;
    check_range("moments", moments, 1, 8)?;
    let obj = quaternary_objective(moments);
    let runs = multistart(|x| obj.evaluate(x), depth, (-PI, PI), cfg, |r| r.f <= DESIGN_TARGET)?;
    best_or_fail(runs, DESIGN_TARGET)
}

/// Shear parameters of an invertible binary circuit with `moments`
/// vanishing moments on both g_d and g_r. Steps with |μ| ≥ 0.99 are rejected.
pub fn design_biorthogonal(depth: usize, moments: usize, cfg: &OptimizerConfig) -> Result<Vec<f64>, DesignError> {
    check_range("depth", depth, 1, 12)?;
    check_range("moments", moments, 1, 8)?;
    let obj = biorthogonal_objective(moments);
    let f = |x: &[f64]| {
        if x.iter().any(|m| m.abs() >= SHEAR_LIMIT) {
            f64::INFINITY
        } else {
            obj.evaluate(x)
        }
    };
    let runs = multistart(f, depth, (-0.9, 0.9), cfg, |r| r.f <= DESIGN_TARGET)?;
    let mu = best_or_fail(runs, DESIGN_TARGET)?;
    if let Some(&m) = mu.iter().find(|m| m.abs() >= SHEAR_LIMIT) {
        return Err(DesignError::DegenerateShear(m));
    }
    Ok(mu)
}

const BOUNDARY_WIRES: usize = 64;
const SIGMA_GRID: usize = 2880;

/// Boundary wavelet moment for given σ, with φ fixed by the zeroth-moment
/// balance; also returns that φ.
fn boundary_residual(bulk: (f64, f64), sigma: f64, m0: &[f64], m1: &[f64]) -> (f64, f64) {
    let mut gates = ScaleGates {
        theta1: bulk.0,
        theta2: bulk.1,
        phi: 0.0,
        sigma,
    };
    let head = |m: &[f64], g: &ScaleGates| {
        let mut w = [m[0], m[1], m[2], m[3]];
        boundary::analyze(g, &mut w);
        (w[0], w[1])
    };
    // with φ = 0 the first two outputs are the inputs to the φ rotation
    let (a0, b0) = head(m0, &gates);
    gates.phi = a0.atan2(b0);
    (head(m1, &gates).0, gates.phi)
}

/// Scale-dependent boundary angles for an open-left binary transform whose
/// bulk is the depth-2 circuit `bulk`. At each scale σ is located by a scan
/// plus bisection on the first-moment condition, with φ given in closed form
/// by the zeroth-moment condition and its branch chosen so the continuing
/// scaling wire keeps a positive sum. The root with the smallest |σ| is kept.
pub fn solve_boundary_angles(bulk: &[f64], z_max: usize, moments: usize) -> Result<BoundaryAngles, DesignError> {
    if bulk.len() != 2 || moments != 2 {
        return Err(DesignError::NoSolution {
            scale: 1,
            detail: format!(
                "only a depth-2 bulk with 2 moments is supported (got depth {}, {moments} moments)",
                bulk.len()
            ),
        });
    }
    if z_max == 0 {
        return Err(DesignError::InvalidArgument("need at least one scale".into()));
    }
    let bulk = (bulk[0], bulk[1]);
    let k = BOUNDARY_WIRES;
    let mut m0 = vec![1.0; k];
    let mut m1: Vec<f64> = (1..=k).map(|r| r as f64).collect();
    let mut out = BoundaryAngles {
        phi: Vec::with_capacity(z_max),
        sigma: Vec::with_capacity(z_max),
    };
    for z in 1..=z_max {
        let g = |s: f64| boundary_residual(bulk, s, &m0, &m1).0;
        let grid: Vec<(f64, f64)> = (0..=SIGMA_GRID)
            .map(|i| {
                let s = -PI + 2.0 * PI * i as f64 / SIGMA_GRID as f64;
                (s, g(s))
            })
            .collect();
        let scale = grid.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
        let mut roots = Vec::new();
        for w in grid.windows(2) {
            let ((mut a, fa), (mut b, fb)) = (w[0], w[1]);
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa.signum() == fb.signum() {
                continue;
            }
            let mut fa = fa;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = g(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            let r = 0.5 * (a + b);
            // a sign change across a branch jump of φ is not a root
            if g(r).abs() <= 1e-9 * scale {
                roots.push(r);
            }
        }
        let sigma = roots
            .into_iter()
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .ok_or_else(|| DesignError::NoSolution {
                scale: z,
                detail: "first-moment condition has no root".into(),
            })?;
        let (_, phi) = boundary_residual(bulk, sigma, &m0, &m1);
        out.phi.push(phi);
        out.sigma.push(sigma);
        let gates = ScaleGates {
            theta1: bulk.0,
            theta2: bulk.1,
            phi,
            sigma,
        };
        for m in [&mut m0, &mut m1] {
            boundary::analyze(&gates, m);
            let keep: Vec<f64> = m.iter().skip(1).step_by(2).take(k / 2 - 2).copied().collect();
            let step = keep[keep.len() - 1] - keep[keep.len() - 2];
            let last = keep[keep.len() - 1];
            *m = keep.clone();
            m.extend((1..=k - keep.len()).map(|i| last + step * i as f64));
        }
    }
    Ok(out)
}
