//! Multi-scale transforms: the circuit is applied at each scale and its
//! scaling outputs are routed to the next, coarser scale.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundary::{self, ScaleGates};
use crate::circuits::{
    periodic_schedule, apply_schedule, Centering, CircuitError, CircuitFamily, CircuitSpec, Direction,
};
use crate::numfmt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("spec has boundary angles for {have} scales, {need} requested")]
    MissingBoundaryAngles { need: usize, have: usize },
    #[error("pyramid digest {found} does not match spec digest {expected}")]
    SpecMismatch { expected: String, found: String },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    Periodic,
    OpenLeft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub boundary: BoundaryMode,
}

impl Signal {
    pub fn periodic(samples: Vec<f64>) -> Self {
        Signal {
            samples,
            boundary: BoundaryMode::Periodic,
        }
    }

    pub fn open_left(samples: Vec<f64>) -> Self {
        Signal {
            samples,
            boundary: BoundaryMode::OpenLeft,
        }
    }
}

/// Wavelet coefficients per scale (finest first, each in lattice order) and
/// the final scaling coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandPyramid {
    pub spec_digest: String,
    #[serde(serialize_with = "numfmt::ser_vec2")]
    pub levels: Vec<Vec<f64>>,
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub residual: Vec<f64>,
}

impl SubbandPyramid {
    pub fn coefficient_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum::<usize>() + self.residual.len()
    }

    pub fn energy(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .chain(&self.residual)
            .map(|x| x * x)
            .sum()
    }
}

/// SHA-256 of the spec's canonical JSON, lowercase hex.
pub fn spec_digest(spec: &CircuitSpec) -> String {
    Sha256::digest(spec.to_json().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Residues within one period whose outputs continue to the next scale, in
/// the order they are interleaved on the coarse lattice.
fn continuing(spec: &CircuitSpec) -> &'static [usize] {
    match spec.family {
        CircuitFamily::Binary | CircuitFamily::BinaryInvertible => &[1],
        CircuitFamily::Ternary => match spec.centering {
            Some(Centering::Edge) => &[1],
            _ => &[2],
        },
        CircuitFamily::ModifiedTernary => &[1, 3],
        CircuitFamily::Quaternary => &[3],
    }
}

/// Lattice sizes at each scale, finest first, with one extra entry for the
/// residual.
fn level_sizes(spec: &CircuitSpec, n: usize, levels: usize, mode: BoundaryMode) -> Result<Vec<usize>, TransformError> {
    if levels == 0 {
        return Err(TransformError::SizeMismatch("at least one level is needed".into()));
    }
    let period = spec.family.stride();
    let keep = continuing(spec).len();
    let mut sizes = vec![n];
    let mut cur = n;
    for z in 1..=levels {
        let ok = match mode {
            BoundaryMode::Periodic => cur > 0 && cur % period == 0,
            BoundaryMode::OpenLeft => boundary::check_wires(cur).is_ok(),
        };
        if !ok {
            let need = match mode {
                BoundaryMode::Periodic => format!("a positive multiple of {period}"),
                BoundaryMode::OpenLeft => "an even number of at least 4".into(),
            };
            return Err(TransformError::SizeMismatch(format!(
                "length {n} with {levels} levels: scale {z} has {cur} sites, needs {need}"
            )));
        }
        cur = cur / period * keep;
        sizes.push(cur);
    }
    Ok(sizes)
}

fn mode_for(spec: &CircuitSpec, levels: usize, requested: BoundaryMode) -> Result<BoundaryMode, TransformError> {
    spec.validate()?;
    match (requested, &spec.boundary) {
        (BoundaryMode::Periodic, None) => Ok(BoundaryMode::Periodic),
        (BoundaryMode::Periodic, Some(_)) => Err(TransformError::InvalidSpec(
            "a spec with boundary angles transforms open_left signals".into(),
        )),
        (BoundaryMode::OpenLeft, None) => Err(TransformError::MissingBoundaryAngles { need: levels, have: 0 }),
        (BoundaryMode::OpenLeft, Some(b)) => {
            if spec.depth != 2 {
                return Err(TransformError::InvalidSpec(format!(
                    "open_left transforms need a depth-2 bulk circuit, got depth {}",
                    spec.depth
                )));
            }
            if b.len() < levels {
                return Err(TransformError::MissingBoundaryAngles { need: levels, have: b.len() });
            }
            Ok(BoundaryMode::OpenLeft)
        }
    }
}

fn scale_gates(spec: &CircuitSpec, z: usize) -> ScaleGates {
    let b = spec.boundary.as_ref().expect("checked by mode_for");
    ScaleGates {
        theta1: spec.params[0],
        theta2: spec.params[1],
        phi: b.phi[z],
        sigma: b.sigma[z],
    }
}

/// One decomposition step: returns (wavelet coefficients, coarse signal).
fn analyze_scale(spec: &CircuitSpec, mode: BoundaryMode, z: usize, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), TransformError> {
    let mut y = x.to_vec();
    let (period, keep): (usize, &[usize]) = match mode {
        BoundaryMode::Periodic => {
            let schedule = periodic_schedule(spec, y.len())?;
            apply_schedule(&schedule, &mut y, Direction::Adjoint);
            (spec.family.stride(), continuing(spec))
        }
        BoundaryMode::OpenLeft => {
            boundary::analyze(&scale_gates(spec, z), &mut y);
            (2, &[1])
        }
    };
    let mut wav = Vec::with_capacity(y.len());
    let mut coarse = Vec::with_capacity(y.len() / period * keep.len());
    for block in y.chunks(period) {
        for (r, &v) in block.iter().enumerate() {
            if !keep.contains(&r) {
                wav.push(v);
            }
        }
        coarse.extend(keep.iter().map(|&r| block[r]));
    }
    Ok((wav, coarse))
}

fn synthesize_scale(
    spec: &CircuitSpec,
    mode: BoundaryMode,
    z: usize,
    wav: &[f64],
    coarse: &[f64],
) -> Result<Vec<f64>, TransformError> {
    let (period, keep): (usize, &[usize]) = match mode {
        BoundaryMode::Periodic => (spec.family.stride(), continuing(spec)),
        BoundaryMode::OpenLeft => (2, &[1]),
    };
    let blocks = coarse.len() / keep.len();
    if coarse.len() % keep.len() != 0 || wav.len() != blocks * (period - keep.len()) {
        return Err(TransformError::SizeMismatch(format!(
            "scale {}: {} wavelet and {} scaling coefficients do not form whole blocks",
            z + 1,
            wav.len(),
            coarse.len()
        )));
    }
    let mut y = Vec::with_capacity(blocks * period);
    let (mut wi, mut ci) = (0, 0);
    for _ in 0..blocks {
        for r in 0..period {
            if keep.contains(&r) {
                y.push(coarse[ci]);
                ci += 1;
            } else {
                y.push(wav[wi]);
                wi += 1;
            }
        }
    }
    match mode {
        BoundaryMode::Periodic => {
            let schedule = periodic_schedule(spec, y.len())?;
            apply_schedule(&schedule, &mut y, Direction::InverseAdjoint);
        }
        BoundaryMode::OpenLeft => boundary::synthesize(&scale_gates(spec, z), &mut y),
    }
    Ok(y)
}

/// Decomposes `signal` over `levels` scales.
pub fn forward(signal: &Signal, spec: &CircuitSpec, levels: usize) -> Result<SubbandPyramid, TransformError> {
    let mode = mode_for(spec, levels, signal.boundary)?;
    level_sizes(spec, signal.samples.len(), levels, mode)?;
    if let Some(x) = signal.samples.iter().find(|x| !x.is_finite()) {
        return Err(TransformError::SizeMismatch(format!("non-finite sample {x}")));
    }
    let mut out = Vec::with_capacity(levels);
    let mut x = signal.samples.clone();
    for z in 0..levels {
        let (wav, coarse) = analyze_scale(spec, mode, z, &x)?;
        out.push(wav);
        x = coarse;
    }
    Ok(SubbandPyramid {
        spec_digest: spec_digest(spec),
        levels: out,
        residual: x,
    })
}

/// Reconstructs the signal; the boundary mode follows from the spec.
pub fn inverse(pyr: &SubbandPyramid, spec: &CircuitSpec) -> Result<Signal, TransformError> {
    let expected = spec_digest(spec);
    if pyr.spec_digest != expected {
        return Err(TransformError::SpecMismatch {
            expected,
            found: pyr.spec_digest.clone(),
        });
    }
    let levels = pyr.levels.len();
    let requested = if spec.boundary.is_some() {
        BoundaryMode::OpenLeft
    } else {
        BoundaryMode::Periodic
    };
    let mode = mode_for(spec, levels, requested)?;
    let mut x = pyr.residual.clone();
    for z in (0..levels).rev() {
        x = synthesize_scale(spec, mode, z, &pyr.levels[z], &x)?;
    }
    level_sizes(spec, x.len(), levels, mode)?;
    Ok(Signal { samples: x, boundary: mode })
}

/// The discrete wavelet of scale `z` (1-based) whose coefficient sits at
/// `position` in that scale's subband, on a lattice of `lattice_size` sites.
/// Open-left if the spec carries boundary angles, periodic otherwise.
pub fn wavelet_at_scale(spec: &CircuitSpec, z: usize, position: usize, lattice_size: usize) -> Result<Vec<f64>, TransformError> {
    if z == 0 {
        return Err(TransformError::SizeMismatch("scales are numbered from 1".into()));
    }
    let requested = if spec.boundary.is_some() {
        BoundaryMode::OpenLeft
    } else {
        BoundaryMode::Periodic
    };
    let mode = mode_for(spec, z, requested)?;
    let sizes = level_sizes(spec, lattice_size, z, mode)?;
    let mut levels: Vec<Vec<f64>> = sizes.windows(2).map(|w| vec![0.0; w[0] - w[1]]).collect();
    let band = &mut levels[z - 1];
    if position >= band.len() {
        return Err(TransformError::SizeMismatch(format!(
            "position {position} outside the {} coefficients of scale {z}",
            band.len()
        )));
    }
    band[position] = 1.0;
    let pyr = SubbandPyramid {
        spec_digest: spec_digest(spec),
        levels,
        residual: vec![0.0; sizes[z]],
    };
    Ok(inverse(&pyr, spec)?.samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{extract_filter_bank, Role};
    use std::f64::consts::PI;

    fn d4() -> CircuitSpec {
        CircuitSpec::binary(&[5.0 * PI / 12.0, PI / 6.0])
    }

    fn haar() -> CircuitSpec {
        CircuitSpec::binary(&[PI / 4.0])
    }

    #[test]
    fn haar_constant() {
        let p = forward(&Signal::periodic(vec![1.0; 4]), &haar(), 2).unwrap();
        assert!(p.levels.iter().flatten().all(|c| c.abs() < 1e-15));
        assert_eq!(p.residual.len(), 1);
        assert!((p.residual[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn d4_ramp_interior_vanishes() {
        let ramp: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let p = forward(&Signal::periodic(ramp.clone()), &d4(), 1).unwrap();
        // direct convolution oracle with the extracted g
        let g = extract_filter_bank(&d4()).unwrap().seq(Role::G).clone();
        let mut interior = 0;
        for (j, &c) in p.levels[0].iter().enumerate() {
            let start = 2 * j as i64 + g.offset;
            if start < 0 || start as usize + g.len() > ramp.len() {
                continue;
            }
            interior += 1;
            let direct: f64 = g.taps.iter().enumerate().map(|(k, t)| t * ramp[start as usize + k]).sum();
            assert!((c.abs() - direct.abs()).abs() < 1e-12);
            assert!(c.abs() < 1e-12, "{c}");
        }
        assert!(interior >= 5);
    }

    #[test]
    fn roundtrip_and_energy_all_families() {
        let specs = [
            d4(),
            CircuitSpec::ternary(&[0.275642799, 0.679673818], Centering::Site),
            CircuitSpec::ternary(&[0.275642799, 0.679673818], Centering::Edge),
            CircuitSpec::new(CircuitFamily::ModifiedTernary, vec![0.16, 0.39, 0.4, 0.17]).unwrap(),
            CircuitSpec::new(CircuitFamily::Quaternary, vec![-1.2, 0.1, 1.9, -0.2]).unwrap(),
        ];
        for spec in &specs {
            let n = match spec.family {
                CircuitFamily::Ternary => 54,
                _ => 48,
            };
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
            let p = forward(&Signal::periodic(x.clone()), spec, 2).unwrap();
            assert_eq!(p.coefficient_count(), n);
            let e: f64 = x.iter().map(|v| v * v).sum();
            assert!((p.energy() - e).abs() < 1e-12 * e.max(1.0), "{:?}", spec.family);
            let back = inverse(&p, spec).unwrap();
            for (a, b) in back.samples.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn biorthogonal_roundtrip() {
        let mu = vec![-0.25684952118, 0.85058116979, 0.05040158211, -0.83314630482];
        let spec = CircuitSpec::new(CircuitFamily::BinaryInvertible, mu).unwrap();
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = forward(&Signal::periodic(x.clone()), &spec, 3).unwrap();
        let back = inverse(&p, &spec).unwrap();
        for (a, b) in back.samples.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn digest_mismatch_rejected() {
        let p = forward(&Signal::periodic(vec![1.0; 8]), &haar(), 1).unwrap();
        assert!(matches!(inverse(&p, &d4()), Err(TransformError::SpecMismatch { .. })));
    }

    #[test]
    fn size_errors() {
        assert!(matches!(
            forward(&Signal::periodic(vec![1.0; 6]), &haar(), 2),
            Err(TransformError::SizeMismatch(_))
        ));
        assert!(matches!(
            forward(&Signal::open_left(vec![1.0; 16]), &d4(), 2),
            Err(TransformError::MissingBoundaryAngles { .. })
        ));
        assert!(wavelet_at_scale(&d4(), 1, 8, 16).is_err());
    }

    #[test]
    fn d4_first_scale_wavelet_is_g() {
        let w = wavelet_at_scale(&d4(), 1, 3, 16).unwrap();
        let g = extract_filter_bank(&d4()).unwrap().seq(Role::G).clone();
        let nz: Vec<f64> = w.iter().copied().filter(|v| v.abs() > 1e-15).collect();
        assert_eq!(nz.len(), 4);
        for (a, b) in nz.iter().zip(&g.taps) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
