//! Diagnostics on coefficient sequences: moments, orthogonality and symmetry
//! defects, cascade refinement and frequency response.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{CoefficientSequence, FilterBank, Role, Symmetry};
use crate::numfmt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("sequence lengths differ or are odd: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cascade diverged at level {level}: max |sample| = {max_abs:e}")]
    NonContractive { level: usize, max_abs: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Σ_r r^α c_r with r = 1…L over the taps.
pub fn moment(seq: &CoefficientSequence, alpha: u32) -> f64 {
    weighted_sum(&seq.taps, alpha, |r| r as f64, false)
}

/// Σ_r (−1)^r r^α c_r with r = 1…L.
pub fn high_freq_moment(seq: &CoefficientSequence, alpha: u32) -> f64 {
    weighted_sum(&seq.taps, alpha, |r| r as f64, true)
}

fn centered(len: usize) -> impl Fn(usize) -> f64 {
    let c = (len as f64 + 1.0) / 2.0;
    let half = ((len as f64 - 1.0) / 2.0).max(1.0);
    move |r| (r as f64 - c) / half
}

/// Moment with r mapped affinely onto [−1, 1]. Vanishing of all moments up
/// to a given order does not depend on this reindexing, but the values stay
/// O(1) for long sequences, so thresholds remain meaningful when the taps
/// carry only a few significant digits.
pub fn moment_centered(seq: &CoefficientSequence, alpha: u32) -> f64 {
    weighted_sum(&seq.taps, alpha, centered(seq.len()), false)
}

/// Alternating-sign moment on the same [−1, 1] coordinates; the sign still
/// follows the 1-based tap index.
pub fn high_freq_moment_centered(seq: &CoefficientSequence, alpha: u32) -> f64 {
    weighted_sum(&seq.taps, alpha, centered(seq.len()), true)
}

/// Values at r = 1…len of the polynomials of degree 0…=alpha_max that are
/// orthonormal over those points. Degrees at or beyond `len` are zero.
pub fn gram_polynomials(len: usize, alpha_max: u32) -> Vec<Vec<f64>> {
    let x: Vec<f64> = (1..=len).map(centered(len)).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(alpha_max as usize + 1);
    let mut prev = vec![0.0; len];
    let mut cur = vec![1.0 / (len as f64).sqrt(); len];
    let mut b = 0.0;
    for _ in 0..=alpha_max {
        out.push(cur.clone());
        let a: f64 = x.iter().zip(&cur).map(|(xi, q)| xi * q * q).sum();
        let mut next: Vec<f64> = (0..len).map(|i| (x[i] - a) * cur[i] - b * prev[i]).collect();
        // one re-orthogonalization pass keeps high degrees clean
        for q in &out {
            let d: f64 = next.iter().zip(q).map(|(u, v)| u * v).sum();
            next.iter_mut().zip(q).for_each(|(u, v)| *u -= d * v);
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            cur = vec![0.0; len];
        } else {
            next.iter_mut().for_each(|v| *v /= norm);
            prev = std::mem::replace(&mut cur, next);
        }
        b = norm;
    }
    out
}

/// Σ_r q_α(r) c_r against the discrete orthonormal polynomial of degree α.
/// The first P of these vanish exactly when the first P ordinary moments do,
/// and they stay well conditioned for long sequences and high orders.
pub fn orthonormal_moment(seq: &CoefficientSequence, alpha: u32) -> f64 {
    let q = gram_polynomials(seq.len(), alpha);
    q[alpha as usize].iter().zip(&seq.taps).map(|(a, b)| a * b).sum()
}

/// Alternating-sign counterpart of [`orthonormal_moment`].
pub fn orthonormal_high_freq_moment(seq: &CoefficientSequence, alpha: u32) -> f64 {
    let q = gram_polynomials(seq.len(), alpha);
    q[alpha as usize]
        .iter()
        .zip(&seq.taps)
        .enumerate()
        .map(|(i, (a, b))| if i % 2 == 0 { -a * b } else { a * b })
        .sum()
}

fn weighted_sum(taps: &[f64], alpha: u32, x: impl Fn(usize) -> f64, alternate: bool) -> f64 {
    taps.iter()
        .enumerate()
        .map(|(i, &c)| {
            let r = i + 1;
            let sign = if alternate && r % 2 == 1 { -1.0 } else { 1.0 };
            let w = if alpha == 0 { 1.0 } else { x(r).powi(alpha as i32) };
            sign * w * c
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub alpha_max: u32,
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub values: Vec<f64>,
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub high_freq_values: Vec<f64>,
}

pub fn moment_report(seq: &CoefficientSequence, alpha_max: u32) -> MomentReport {
    MomentReport {
        alpha_max,
        values: (0..=alpha_max).map(|a| moment(seq, a)).collect(),
        high_freq_values: (0..=alpha_max).map(|a| high_freq_moment(seq, a)).collect(),
    }
}

/// max over m ≠ 0 of |Σ_r c_r c_{r+stride·m}|, plus |Σ c² − 1|.
pub fn shift_orthogonality_defect(seq: &CoefficientSequence, stride: usize) -> f64 {
    let t = &seq.taps;
    let mut worst: f64 = 0.0;
    let mut shift = stride.max(1);
    while shift < t.len() {
        let s: f64 = (0..t.len() - shift).map(|r| t[r] * t[r + shift]).sum();
        worst = worst.max(s.abs());
        shift += stride.max(1);
    }
    worst + (t.iter().map(|x| x * x).sum::<f64>() - 1.0).abs()
}

/// Largest deviation from g_r = ±(−1)^(r+1) h_{2N−r+1}, minimized over the global sign.
pub fn mirror_defect(h: &CoefficientSequence, g: &CoefficientSequence) -> Result<f64, AnalysisError> {
    let n = h.len();
    if n != g.len() || n % 2 != 0 {
        return Err(AnalysisError::LengthMismatch(n, g.len()));
    }
    let dev = |s: f64| {
        (0..n)
            .map(|i| {
                let r = i + 1;
                let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
                (g.taps[i] - s * sign * h.taps[n - 1 - i]).abs()
            })
            .fold(0.0, f64::max)
    };
    Ok(dev(1.0).min(dev(-1.0)))
}

/// Deviation from the declared symmetry class; 0 for `Symmetry::None`.
pub fn symmetry_defect(seq: &CoefficientSequence) -> f64 {
    symmetry_defect_as(&seq.taps, seq.symmetry)
}

pub fn symmetry_defect_as(taps: &[f64], class: Symmetry) -> f64 {
    let n = taps.len();
    let parity_ok = match class {
        Symmetry::None => return 0.0,
        Symmetry::SiteSymmetric => n % 2 == 1,
        Symmetry::EdgeSymmetric | Symmetry::EdgeAntisymmetric => n % 2 == 0,
    };
    if !parity_ok {
        return f64::INFINITY;
    }
    let s = if class == Symmetry::EdgeAntisymmetric { -1.0 } else { 1.0 };
    (0..n)
        .map(|i| (taps[i] - s * taps[n - 1 - i]).abs())
        .fold(0.0, f64::max)
}

/// Samples of a refinable function on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    #[serde(serialize_with = "numfmt::ser_f64")]
    pub grid_step: f64,
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub samples: Vec<f64>,
    #[serde(serialize_with = "numfmt::ser_f64")]
    pub support_start: f64,
}

impl SampledFunction {
    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|i| self.support_start + i as f64 * self.grid_step)
    }

    /// Σ samples² · grid_step.
    pub fn l2_norm_sq(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() * self.grid_step
    }
}

pub const DEFAULT_CASCADE_LEVELS: usize = 8;
const DIVERGENCE_LIMIT: f64 = 1e6;

/// Iterates the refinement relation `levels − 1` times below the `target`
/// role, which supplies level 1. Several scaling roles form a vector
/// refinement mask; consecutive coarse sites cycle through them in residue order.
pub fn cascade(
    bank: &FilterBank,
    scaling_roles: &[Role],
    target: Role,
    levels: usize,
) -> Result<SampledFunction, AnalysisError> {
    if levels == 0 {
        return Err(AnalysisError::InvalidArgument("levels must be at least 1".into()));
    }
    if scaling_roles.is_empty() {
        return Err(AnalysisError::InvalidArgument("no scaling roles".into()));
    }
    let mut roles = scaling_roles.to_vec();
    roles.sort_by_key(|r| r.residue());
    let stride = bank.family.stride() as i64;
    let per_block = roles.len() as i64;
    let m = bank.family.dilation() as f64;
    let seq = |r: Role| {
        bank.get(r)
            .ok_or_else(|| AnalysisError::InvalidArgument(format!("role {r} not in bank")))
    };

    let first = seq(target)?;
    let mut origin = first.offset;
    let mut v = first.taps.clone();
    for level in 2..=levels {
        let masks: Vec<&CoefficientSequence> = roles.iter().map(|&r| seq(r)).collect::<Result<_, _>>()?;
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for i in 0..v.len() as i64 {
            let c = origin + i;
            let block = c.div_euclid(per_block);
            let s = masks[c.rem_euclid(per_block) as usize];
            lo = lo.min(stride * block + s.offset);
            hi = hi.max(stride * block + s.offset + s.len() as i64);
        }
        let mut fine = vec![0.0; (hi - lo) as usize];
        for (i, &coef) in v.iter().enumerate() {
            let c = origin + i as i64;
            let block = c.div_euclid(per_block);
            let s = masks[c.rem_euclid(per_block) as usize];
            let start = (stride * block + s.offset - lo) as usize;
            for (k, &t) in s.taps.iter().enumerate() {
                fine[start + k] += coef * t;
            }
        }
        v = fine;
        origin = lo;
        let scale = m.powf(level as f64 / 2.0);
        let max_abs = v.iter().fold(0.0f64, |a, x| a.max(x.abs())) * scale;
        if !max_abs.is_finite() || max_abs > DIVERGENCE_LIMIT {
            return Err(AnalysisError::NonContractive { level, max_abs });
        }
    }
    let step = m.powi(-(levels as i32));
    let scale = m.powf(levels as f64 / 2.0);
    Ok(SampledFunction {
        grid_step: step,
        samples: v.into_iter().map(|x| x * scale).collect(),
        support_start: origin as f64 * step,
    })
}

/// |Σ_r c_r e^{−iωr}| on `n_points` uniform frequencies spanning [0, π].
pub fn frequency_response(seq: &CoefficientSequence, n_points: usize) -> Result<Vec<(f64, f64)>, AnalysisError> {
    if n_points < 2 {
        return Err(AnalysisError::InvalidArgument("need at least 2 points".into()));
    }
    Ok((0..n_points)
        .map(|k| {
            let w = std::f64::consts::PI * k as f64 / (n_points - 1) as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &c) in seq.taps.iter().enumerate() {
                let (s, co) = (w * (i + 1) as f64).sin_cos();
                re += c * co;
                im -= c * s;
            }
            (w, re.hypot(im))
        })
        .collect())
}
