//! Recovery of binary circuit angles from an orthogonal scaling sequence by
//! peeling one rotation layer at a time, and spectral-factorization
//! constructions of the standard scaling sequences that feed it.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::shift_orthogonality_defect;
use crate::circuits::CoefficientSequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("sequence is not shift-orthogonal: defect {defect:e} exceeds tolerance {tol:e}")]
    NotOrthogonal { defect: f64, tol: f64 },
    #[error("terminal vector is not a unit coordinate vector (residual {residual:e})")]
    ResidualTooLarge { residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeelCase {
    /// θ = arctan(h₁/h₂).
    I,
    /// h₂ vanishes; θ = arctan(−h_{2N}/h_{2N−1}).
    Ii,
    /// Both h₂ and h_{2N−1} vanish; θ = π/2.
    Iii,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelResult {
    pub theta: f64,
    pub reduced: CoefficientSequence,
    pub case: PeelCase,
}

/// An angle folded into (−π/2, π/2].
fn fold(t: f64) -> f64 {
    let r = t - PI * (t / PI).round();
    if r <= -FRAC_PI_2 {
        r + PI
    } else {
        r
    }
}

/// arctan folded into (−π/2, π/2].
fn principal_atan(x: f64) -> f64 {
    let t = x.atan();
    if t <= -FRAC_PI_2 {
        t + PI
    } else {
        t
    }
}

fn peel_core(t: &[f64], tol: f64) -> (f64, PeelCase, Vec<f64>) {
    let n = t.len();
    let case = if t[1].abs() > tol {
        PeelCase::I
    } else if t[n - 2].abs() > tol {
        PeelCase::Ii
    } else {
        PeelCase::Iii
    };
    // Both end pairs fix θ; the larger one carries less relative rounding.
    let theta = match case {
        PeelCase::Iii => FRAC_PI_2,
        PeelCase::I if t[n - 2].abs() <= tol || t[0].hypot(t[1]) >= t[n - 2].hypot(t[n - 1]) => {
            fold(t[0].atan2(t[1]))
        }
        _ => fold((-t[n - 1]).atan2(t[n - 2])),
    };
    let (s, c) = theta.sin_cos();
    let mut out = t.to_vec();
    for p in (0..n).step_by(2) {
        let (a, b) = (t[p], t[p + 1]);
        out[p] = c * a - s * b;
        out[p + 1] = s * a + c * b;
    }
    (theta, case, out)
}

/// Removes the outermost rotation layer of a length-2N sequence, returning
/// its angle and the length-(2N−2) sequence of the shallower circuit.
pub fn peel_layer(h: &CoefficientSequence, tol: f64) -> Result<PeelResult, ConstructionError> {
    let n = h.len();
    if n < 4 || n % 2 != 0 {
        return Err(ConstructionError::InvalidInput(format!(
            "peeling needs an even length of at least 4, got {n}"
        )));
    }
    let defect = shift_orthogonality_defect(h, 2);
    if !(defect <= tol) {
        return Err(ConstructionError::NotOrthogonal { defect, tol });
    }
    let (theta, case, out) = peel_core(&h.taps, tol);
    let edge = out[0].abs().max(out[n - 1].abs());
    if edge > tol {
        return Err(ConstructionError::NotOrthogonal { defect: edge, tol });
    }
    Ok(PeelResult {
        theta,
        reduced: CoefficientSequence {
            taps: out[1..n - 1].to_vec(),
            offset: h.offset + 1,
            symmetry: h.symmetry,
        },
        case,
    })
}

/// Scaling taps of the binary circuit with angles θ₁…θ_N, built outward
/// from the innermost layer.
fn scaling_taps(angles: &[f64]) -> Vec<f64> {
    let (s, c) = angles[0].sin_cos();
    let mut x = vec![s, c];
    for &theta in &angles[1..] {
        let (s, c) = theta.sin_cos();
        let mut y = Vec::with_capacity(x.len() + 2);
        y.push(0.0);
        y.extend_from_slice(&x);
        y.push(0.0);
        for p in (0..y.len()).step_by(2) {
            let (a, b) = (y[p], y[p + 1]);
            y[p] = c * a + s * b;
            y[p + 1] = -s * a + c * b;
        }
        x = y;
    }
    x
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Gauss–Newton steps on the taps. Peeling loses accuracy when an end pair is
/// small, and the loss compounds layer by layer; a few steps against the full
/// sequence bring the angles back to the conditioning of the problem itself.
fn polish(angles: &mut [f64], target: &[f64]) {
    let n = angles.len();
    let mut best = max_dev(&scaling_taps(angles), target);
    for _ in 0..8 {
        let f = scaling_taps(angles);
        let r = DVector::from_iterator(f.len(), f.iter().zip(target).map(|(a, b)| b - a));
        let mut jac = DMatrix::<f64>::zeros(f.len(), n);
        let step = 1e-6;
        for k in 0..n {
            let mut hi = angles.to_vec();
            let mut lo = angles.to_vec();
            hi[k] += step;
            lo[k] -= step;
            let (fh, fl) = (scaling_taps(&hi), scaling_taps(&lo));
            for i in 0..f.len() {
                jac[(i, k)] = (fh[i] - fl[i]) / (2.0 * step);
            }
        }
        let Ok(delta) = jac.svd(true, true).solve(&r, 1e-13) else {
            return;
        };
        let trial: Vec<f64> = angles.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
        let dev = max_dev(&scaling_taps(&trial), target);
        if !(dev < best) {
            return;
        }
        best = dev;
        angles.copy_from_slice(&trial);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleRecovery {
    /// θ₁…θ_N, first-applied layer first.
    pub angles: Vec<f64>,
    pub cases: Vec<PeelCase>,
    /// True when the terminal element came out −1 and π was added to θ₁.
    pub pi_added: bool,
}

/// Angles of the depth-N binary circuit whose scaling sequence is `h`.
pub fn angles_from_scaling(h: &CoefficientSequence, tol: f64) -> Result<Vec<f64>, ConstructionError> {
    recover_angles(h, tol).map(|r| r.angles)
}

pub fn recover_angles(h: &CoefficientSequence, tol: f64) -> Result<AngleRecovery, ConstructionError> {
    let n = h.len();
    if n < 2 || n % 2 != 0 {
        return Err(ConstructionError::InvalidInput(format!(
            "scaling sequence must have even length, got {n}"
        )));
    }
    let norm = h.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(ConstructionError::InvalidInput("sequence has no energy".into()));
    }
    let sign = if h.sum() < 0.0 { -1.0 } else { 1.0 };
    let mut cur = CoefficientSequence {
        taps: h.taps.iter().map(|x| x * sign / norm).collect(),
        offset: h.offset,
        symmetry: h.symmetry,
    };
    let mut peeled = Vec::new();
    let mut cases = Vec::new();
    let defect = shift_orthogonality_defect(&cur, 2);
    if !(defect <= tol) {
        return Err(ConstructionError::NotOrthogonal { defect, tol });
    }
    let target = cur.taps.clone();
    while cur.len() > 2 {
        let (theta, case, out) = peel_core(&cur.taps, tol);
        peeled.push(theta);
        cases.push(case);
        cur.taps = out[1..out.len() - 1].to_vec();
    }
    let (a, b) = (cur.taps[0], cur.taps[1]);
    let mut theta1 = if b.abs() > tol { principal_atan(a / b) } else { FRAC_PI_2 };
    // undo u(θ₁): the terminal vector should be (0, +1)
    let (s, c) = theta1.sin_cos();
    let pi_added = s * a + c * b < 0.0;
    if pi_added {
        theta1 += PI;
    }
    cases.reverse();
    let mut angles = vec![theta1];
    angles.extend(peeled.iter().rev());
    polish(&mut angles, &target);
    let residual = max_dev(&scaling_taps(&angles), &target);
    if !(residual <= tol) {
        return Err(ConstructionError::ResidualTooLarge { residual });
    }
    Ok(AngleRecovery {
        angles,
        cases,
        pi_added,
    })
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn poly_roots(coeffs_ascending: &[f64]) -> Vec<Complex<f64>> {
    let deg = coeffs_ascending.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs_ascending[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs_ascending[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Zeros inside the unit circle of the Daubechies product filter Q, one per
/// reciprocal pair; conjugates are both present.
fn daubechies_inner_zeros(order: usize) -> Vec<Complex<f64>> {
    let n = order as u64;
    let p: Vec<f64> = (0..n).map(|k| binomial(n - 1 + k, k)).collect();
    poly_roots(&p)
        .into_iter()
        .map(|y| {
            // z + 1/z = 2 − 4y
            let b = Complex::new(2.0, 0.0) - y * 4.0;
            let disc = (b * b - Complex::new(4.0, 0.0)).sqrt();
            let z1 = (b + disc) / 2.0;
            let z2 = (b - disc) / 2.0;
            if z1.norm() < z2.norm() {
                z1
            } else {
                z2
            }
        })
        .collect()
}

fn taps_from_zeros(order: usize, zeros: &[Complex<f64>]) -> CoefficientSequence {
    // coefficients of Π(z − z_k)·(z + 1)^N in descending powers of z
    let mut poly = vec![Complex::new(1.0, 0.0)];
    let roots = zeros
        .iter()
        .copied()
        .chain(std::iter::repeat_n(Complex::new(-1.0, 0.0), order));
    for r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    let mut taps: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let norm = taps.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sign = if taps.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    taps.iter_mut().for_each(|x| *x *= sign / norm);
    CoefficientSequence::new(taps)
}

/// Extremal-phase Daubechies scaling sequence D2N, unit norm.
pub fn daubechies_scaling(order: usize) -> Result<CoefficientSequence, ConstructionError> {
    if order == 0 {
        return Err(ConstructionError::InvalidInput("order must be positive".into()));
    }
    Ok(taps_from_zeros(order, &daubechies_inner_zeros(order)))
}

/// Minimum-phase member of the family sharing |H| with `h`, where `h` has
/// `order` zeros at z = −1: those are divided out, the remaining zeros outside
/// the unit circle are reflected inside, and the taps are rebuilt.
pub fn minimum_phase(h: &CoefficientSequence, order: usize) -> Result<CoefficientSequence, ConstructionError> {
    if h.len() != 2 * order || order == 0 {
        return Err(ConstructionError::InvalidInput(format!(
            "expected {} taps for order {order}, got {}",
            2 * order,
            h.len()
        )));
    }
    // descending powers of z; synthetic division by (z + 1)
    let mut q = h.taps.clone();
    for _ in 0..order {
        let mut out = Vec::with_capacity(q.len() - 1);
        let mut acc = 0.0;
        for &c in &q[..q.len() - 1] {
            acc = c - acc;
            out.push(acc);
        }
        q = out;
    }
    let lead = q[0];
    if lead == 0.0 || !lead.is_finite() {
        return Err(ConstructionError::InvalidInput("degenerate leading tap".into()));
    }
    let ascending: Vec<f64> = q.iter().rev().copied().collect();
    let zeros: Vec<Complex<f64>> = poly_roots(&ascending)
        .into_iter()
        .map(|z| if z.norm() > 1.0 { z.conj().inv() } else { z })
        .collect();
    Ok(taps_from_zeros(order, &zeros))
}

/// Every real unit-norm scaling sequence with N zeros at z = −1 and the
/// Daubechies magnitude response: one zero of each reciprocal pair of Q is
/// kept, conjugates together. The extremal-phase sequence comes first.
pub fn scaling_factorizations(order: usize) -> Result<Vec<CoefficientSequence>, ConstructionError> {
    if order == 0 {
        return Err(ConstructionError::InvalidInput("order must be positive".into()));
    }
    let inner = daubechies_inner_zeros(order);
    let mut groups: Vec<Vec<Complex<f64>>> = Vec::new();
    let mut used = vec![false; inner.len()];
    for i in 0..inner.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut g = vec![inner[i]];
        if inner[i].im.abs() > 1e-12 {
            let partner = (0..inner.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| {
                    let da = (inner[a] - inner[i].conj()).norm();
                    let db = (inner[b] - inner[i].conj()).norm();
                    da.total_cmp(&db)
                });
            if let Some(j) = partner {
                used[j] = true;
                g.push(inner[j]);
            }
        }
        groups.push(g);
    }
    Ok((0..(1u32 << groups.len()))
        .map(|mask| {
            let zeros: Vec<Complex<f64>> = groups
                .iter()
                .enumerate()
                .flat_map(|(k, g)| {
                    let flip = mask >> k & 1 == 1;
                    g.iter().map(move |&z| if flip { z.inv() } else { z })
                })
                .collect();
            taps_from_zeros(order, &zeros)
        })
        .collect())
}

/// The factorization whose circuit angles lie closest (max-abs, mod π) to
/// `reference`. Used to pin tabulated filters such as the symlets, whose
/// zero selection is a historical choice rather than a single criterion.
pub fn nearest_factorization(
    order: usize,
    reference: &[f64],
) -> Result<(CoefficientSequence, Vec<f64>, f64), ConstructionError> {
    if reference.len() != order {
        return Err(ConstructionError::InvalidInput(format!(
            "expected {order} reference angles, got {}",
            reference.len()
        )));
    }
    let mut best: Option<(CoefficientSequence, Vec<f64>, f64)> = None;
    for seq in scaling_factorizations(order)? {
        for cand in [seq.clone(), seq.reversed()] {
            let cand = CoefficientSequence::new(cand.taps);
            let angles = angles_from_scaling(&cand, DEFAULT_TOL)?;
            let err = angles
                .iter()
                .zip(reference)
                .map(|(a, b)| wrap_pi(a - b).abs())
                .fold(0.0, f64::max);
            if best.as_ref().is_none_or(|b| err < b.2) {
                best = Some((cand, angles, err));
            }
        }
    }
    Ok(best.expect("at least one factorization"))
}

/// Folds an angle difference into (−π/2, π/2].
pub fn wrap_pi(d: f64) -> f64 {
    let r = d - PI * (d / PI).round();
    if r <= -FRAC_PI_2 {
        r + PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{extract_filter_bank, CircuitSpec, Role};

    fn h_of(theta: &[f64]) -> CoefficientSequence {
        extract_filter_bank(&CircuitSpec::binary(theta)).unwrap().seq(Role::H).clone()
    }

    #[test]
    fn peel_d4() {
        let h = CoefficientSequence::new(vec![0.48296, 0.83651, 0.22414, -0.12940]);
        let p = peel_layer(&h, 1e-4).unwrap();
        assert!((p.theta - PI / 6.0).abs() < 1e-4);
        assert!((p.theta - (0.48296f64 / 0.83651).atan()).abs() < 1e-15);
        assert_eq!(p.reduced.len(), 2);
        assert_eq!(p.case, PeelCase::I);
    }

    #[test]
    fn peel_with_zero_edges() {
        let (a, b) = (0.6, 0.8);
        let h = CoefficientSequence::new(vec![0.0, a, b, 0.0]);
        let p = peel_layer(&h, 1e-12).unwrap();
        assert_eq!(p.case, PeelCase::I);
        assert_eq!(p.theta, 0.0);
        assert_eq!(p.reduced.taps, vec![a, b]);
        let h = CoefficientSequence::new(vec![0.0, 0.0, 1.0, 0.0]);
        let p = peel_layer(&h, 1e-12).unwrap();
        assert_eq!(p.case, PeelCase::Ii);
        assert_eq!(p.reduced.taps, vec![0.0, 1.0]);
    }

    #[test]
    fn peel_rejects_non_orthogonal() {
        let h = CoefficientSequence::new(vec![0.5, 0.5, 0.5, 0.5]);
        assert!(matches!(peel_layer(&h, 1e-9), Err(ConstructionError::NotOrthogonal { .. })));
    }

    #[test]
    fn peel_matches_generating_angle() {
        let theta = [0.4, -0.9, 1.1];
        let p = peel_layer(&h_of(&theta), 1e-12).unwrap();
        assert!((p.theta - 1.1).abs() < 1e-12);
        let shallow = h_of(&theta[..2]);
        let sign = p.reduced.sum().signum();
        let diff = p
            .reduced
            .taps
            .iter()
            .zip(&shallow.taps)
            .map(|(a, b)| (sign * a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn haar_and_d4_angles() {
        let s = 0.5f64.sqrt();
        let a = angles_from_scaling(&CoefficientSequence::new(vec![s, s]), DEFAULT_TOL).unwrap();
        assert!((a[0] - PI / 4.0).abs() < 1e-15);
        let d4 = CoefficientSequence::new(vec![0.48296, 0.83651, 0.22414, -0.12940]);
        let a = angles_from_scaling(&d4, 1e-4).unwrap();
        assert!((a[0] - 5.0 * PI / 12.0).abs() < 1e-4 && (a[1] - PI / 6.0).abs() < 1e-4);
    }

    #[test]
    fn d6_roundtrip() {
        let want = [0.466419 * PI, 0.340895 * PI, 0.124476 * PI];
        let got = angles_from_scaling(&h_of(&want), DEFAULT_TOL).unwrap();
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn sign_convention() {
        let h = h_of(&[0.7, 0.2]);
        let neg = CoefficientSequence::new(h.taps.iter().map(|x| -x).collect());
        let r = recover_angles(&neg, DEFAULT_TOL).unwrap();
        assert_eq!(r.angles, angles_from_scaling(&h, DEFAULT_TOL).unwrap());
        // a circuit whose raw h has negative sum gets π added to θ₁
        let raw = crate::circuits::extract_filter_bank_raw(&CircuitSpec::binary(&[0.7 + PI, 0.2])).unwrap();
        let r = recover_angles(raw.seq(Role::H), DEFAULT_TOL).unwrap();
        assert!((r.angles[0] - 0.7).abs() < 1e-12);
        assert!(!r.pi_added);
        let r = recover_angles(&CoefficientSequence::new(vec![0.8, -0.6]), DEFAULT_TOL).unwrap();
        assert!(r.pi_added);
        assert!((r.angles[0] - (PI - (4.0f64 / 3.0).atan())).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_highpass_is_still_a_circuit() {
        let h = CoefficientSequence::new(vec![0.5, 0.5, 0.5, -0.5]);
        let a = angles_from_scaling(&h, DEFAULT_TOL).unwrap();
        let back = h_of(&a);
        for (x, y) in back.taps.iter().zip(&h.taps) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn daubechies_matches_table_angles() {
        let d4 = daubechies_scaling(2).unwrap();
        assert_eq!(scaling_factorizations(2).unwrap()[0], d4);
        let want = [0.48296291314453414, 0.83651630373780794, 0.22414386804201339, -0.12940952255126037];
        for (a, b) in d4.taps.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let a = angles_from_scaling(&daubechies_scaling(3).unwrap(), DEFAULT_TOL).unwrap();
        for (x, y) in a.iter().zip([0.466419, 0.340895, 0.124476]) {
            assert!((x / PI - y).abs() < 1e-6);
        }
    }

    #[test]
    fn minimum_phase_recovers_daubechies() {
        let sym4 = [0.128000, 0.213974, -0.045343, -0.381317].map(|x| x * PI);
        let (h, _, _) = nearest_factorization(4, &sym4).unwrap();
        let d8 = daubechies_scaling(4).unwrap();
        let m = minimum_phase(&h, 4).unwrap();
        for (a, b) in m.taps.iter().zip(&d8.taps) {
            assert!((a - b).abs() < 1e-9, "{:?}", m.taps);
        }
    }

    #[test]
    fn nearest_factorization_picks_the_symlet() {
        let sym4 = [0.128000, 0.213974, -0.045343, -0.381317].map(|x| x * PI);
        let (h, angles, err) = nearest_factorization(4, &sym4).unwrap();
        assert!(err < 1e-5, "{err}");
        assert_eq!(h.len(), 8);
        for (a, b) in angles.iter().zip(sym4) {
            assert!(wrap_pi(a - b).abs() < 1e-5);
        }
    }
}
