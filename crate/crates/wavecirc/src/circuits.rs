//! Circuit families, their layer schedules on a periodic lattice, and filter
//! bank extraction by transforming unit vectors.
//!
//! Sites are 0-based. A schedule lists sublayers in the order they act on a
//! coefficient vector when computing `U·v`; the first sublayer sits on the
//! coefficient side of the circuit.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{Gate2, Gate3, GateError, Mat2, Mat3};
use crate::numfmt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("lattice size {size} is not valid for a {family} circuit: {detail}")]
    SizeMismatch {
        family: CircuitFamily,
        size: usize,
        detail: String,
    },
    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),
    #[error("operation requires a {expected} circuit, got {found}")]
    WrongFamily {
        expected: CircuitFamily,
        found: CircuitFamily,
    },
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitFamily {
    Binary,
    Ternary,
    ModifiedTernary,
    Quaternary,
    BinaryInvertible,
}

impl CircuitFamily {
    pub const ALL: [CircuitFamily; 5] = [
        CircuitFamily::Binary,
        CircuitFamily::Ternary,
        CircuitFamily::ModifiedTernary,
        CircuitFamily::Quaternary,
        CircuitFamily::BinaryInvertible,
    ];

    /// Period of the layer pattern; lattice sizes must be a multiple of it.
    pub fn stride(self) -> usize {
        match self {
            CircuitFamily::Binary | CircuitFamily::BinaryInvertible => 2,
            CircuitFamily::Ternary => 3,
            CircuitFamily::ModifiedTernary | CircuitFamily::Quaternary => 4,
        }
    }

    /// Ratio between the lattice sizes of successive scales.
    pub fn dilation(self) -> usize {
        match self {
            CircuitFamily::Ternary => 3,
            CircuitFamily::Quaternary => 4,
            _ => 2,
        }
    }

    pub fn roles(self) -> &'static [Role] {
        use Role::*;
        match self {
            CircuitFamily::Binary => &[H, G],
            CircuitFamily::Ternary => &[SPlus, BPlus, BMinus],
            CircuitFamily::ModifiedTernary => &[HTop, HBottom, GLeft, GRight],
            CircuitFamily::Quaternary => &[HPlus, HMinus, GPlus, GMinus],
            CircuitFamily::BinaryInvertible => &[HDec, GDec, HRec, GRec],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CircuitFamily::Binary => "binary",
            CircuitFamily::Ternary => "ternary",
            CircuitFamily::ModifiedTernary => "modified_ternary",
            CircuitFamily::Quaternary => "quaternary",
            CircuitFamily::BinaryInvertible => "binary_invertible",
        }
    }

    /// Length of the longest extracted sequence at depth `n`.
    pub fn max_sequence_len(self, n: usize) -> usize {
        match self {
            CircuitFamily::Binary => 2 * n,
            CircuitFamily::Ternary => 6 * n,
            CircuitFamily::ModifiedTernary => 4 * n - 1,
            CircuitFamily::Quaternary => 4 * n + 2,
            CircuitFamily::BinaryInvertible => 2 * n + 2,
        }
    }
}

impl fmt::Display for CircuitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CircuitFamily {
    type Err = CircuitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CircuitFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| CircuitError::InvalidSpec(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    Site,
    Edge,
}

/// Named output sequence of a filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "s+")]
    SPlus,
    #[serde(rename = "b+")]
    BPlus,
    #[serde(rename = "b-")]
    BMinus,
    #[serde(rename = "hT")]
    HTop,
    #[serde(rename = "hB")]
    HBottom,
    #[serde(rename = "gL")]
    GLeft,
    #[serde(rename = "gR")]
    GRight,
    #[serde(rename = "h+")]
    HPlus,
    #[serde(rename = "h-")]
    HMinus,
    #[serde(rename = "g+")]
    GPlus,
    #[serde(rename = "g-")]
    GMinus,
    #[serde(rename = "h_d")]
    HDec,
    #[serde(rename = "g_d")]
    GDec,
    #[serde(rename = "h_r")]
    HRec,
    #[serde(rename = "g_r")]
    GRec,
}

impl Role {
    pub fn name(self) -> &'static str {
        use Role::*;
        match self {
            H => "h",
            G => "g",
            SPlus => "s+",
            BPlus => "b+",
            BMinus => "b-",
            HTop => "hT",
            HBottom => "hB",
            GLeft => "gL",
            GRight => "gR",
            HPlus => "h+",
            HMinus => "h-",
            GPlus => "g+",
            GMinus => "g-",
            HDec => "h_d",
            GDec => "g_d",
            HRec => "h_r",
            GRec => "g_r",
        }
    }

    /// Position of the generating unit vector within one period of the lattice.
    pub fn residue(self) -> usize {
        use Role::*;
        match self {
            H | HDec | HRec => 1,
            G | GDec | GRec => 0,
            SPlus => 2,
            BPlus => 1,
            BMinus => 0,
            HTop => 1,
            HBottom => 3,
            GLeft => 2,
            GRight => 0,
            HPlus => 3,
            HMinus => 2,
            GPlus => 1,
            GMinus => 0,
        }
    }

    pub fn symmetry(self) -> Symmetry {
        use Role::*;
        match self {
            SPlus | HTop | HBottom => Symmetry::SiteSymmetric,
            BPlus | HPlus | GPlus => Symmetry::EdgeSymmetric,
            BMinus | HMinus | GMinus => Symmetry::EdgeAntisymmetric,
            HDec | HRec => Symmetry::EdgeSymmetric,
            GDec | GRec => Symmetry::EdgeAntisymmetric,
            H | G | GLeft | GRight => Symmetry::None,
        }
    }

    /// Low-pass roles; these are normalized to a positive sum.
    pub fn is_scaling(self) -> bool {
        use Role::*;
        matches!(self, H | SPlus | HTop | HBottom | HPlus | HDec | HRec)
    }

    fn from_reconstruction_side(self) -> bool {
        matches!(self, Role::HRec | Role::GRec)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = CircuitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CircuitFamily::ALL
            .iter()
            .flat_map(|f| f.roles().iter().copied())
            .find(|r| r.name() == s)
            .ok_or_else(|| CircuitError::InvalidSpec(format!("unknown role '{s}'")))
    }
}

/// Scale-dependent boundary angles for an open-left binary transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAngles {
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub phi: Vec<f64>,
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub sigma: Vec<f64>,
}

impl BoundaryAngles {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub family: CircuitFamily,
    pub depth: usize,
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centering: Option<Centering>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryAngles>,
}

impl CircuitSpec {
    /// Builds a spec, filling in site centering for ternary circuits.
    pub fn new(family: CircuitFamily, params: Vec<f64>) -> Result<Self, CircuitError> {
        let centering = (family == CircuitFamily::Ternary).then_some(Centering::Site);
        let spec = CircuitSpec {
            family,
            depth: params.len(),
            params,
            centering,
            boundary: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn binary(theta: &[f64]) -> Self {
        Self::new(CircuitFamily::Binary, theta.to_vec()).expect("binary spec")
    }

    pub fn ternary(theta: &[f64], centering: Centering) -> Self {
        let mut s = Self::new(CircuitFamily::Ternary, theta.to_vec()).expect("ternary spec");
        s.centering = Some(centering);
        s
    }

    pub fn with_boundary(mut self, b: BoundaryAngles) -> Result<Self, CircuitError> {
        self.boundary = Some(b);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.depth == 0 {
            return Err(CircuitError::InvalidSpec("depth must be positive".into()));
        }
        if self.params.len() != self.depth {
            return Err(CircuitError::InvalidSpec(format!(
                "depth {} but {} params",
                self.depth,
                self.params.len()
            )));
        }
        if let Some(x) = self.params.iter().find(|x| !x.is_finite()) {
            return Err(CircuitError::InvalidSpec(format!("non-finite param {x}")));
        }
        if self.family == CircuitFamily::BinaryInvertible {
            for &mu in &self.params {
                crate::gates::shear_gate(mu)?;
            }
        }
        match (self.family, self.centering) {
            (CircuitFamily::Ternary, None) => {
                return Err(CircuitError::InvalidSpec(
                    "ternary circuits need a centering".into(),
                ))
            }
            (f, Some(_)) if f != CircuitFamily::Ternary => {
                return Err(CircuitError::InvalidSpec(format!(
                    "centering is only meaningful for ternary circuits, not {f}"
                )))
            }
            _ => {}
        }
        if let Some(b) = &self.boundary {
            if self.family != CircuitFamily::Binary {
                return Err(CircuitError::InvalidSpec(
                    "boundary angles require a binary circuit".into(),
                ));
            }
            if b.phi.len() != b.sigma.len() {
                return Err(CircuitError::InvalidSpec(
                    "boundary phi and sigma lengths differ".into(),
                ));
            }
            if b.phi.iter().chain(&b.sigma).any(|x| !x.is_finite()) {
                return Err(CircuitError::InvalidSpec("non-finite boundary angle".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CircuitError> {
        let spec: CircuitSpec =
            serde_json::from_str(s).map_err(|e| CircuitError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// A local gate placed on specific lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LocalGate {
    Two(Gate2),
    Three(Gate3),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub gate: LocalGate,
    pub sites: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sublayer {
    pub name: String,
    pub placements: Vec<Placement>,
}

/// How a schedule is applied to a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `U·v`.
    Forward,
    /// `Uᵀ·v`, the decomposition direction.
    Adjoint,
    /// `U⁻¹·v`.
    Inverse,
    /// `(Uᵀ)⁻¹·v`, the reconstruction direction; equals `Forward` for unitary circuits.
    InverseAdjoint,
}

fn inv2(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

impl LocalGate {
    fn width(&self) -> usize {
        match self {
            LocalGate::Two(_) => 2,
            LocalGate::Three(_) => 3,
        }
    }

    fn apply(&self, v: &mut [f64], sites: &[usize], dir: Direction) {
        match self {
            LocalGate::Two(g) => {
                let m = g.matrix();
                let m = match (g, dir) {
                    (_, Direction::Forward) => m,
                    (_, Direction::Adjoint) => crate::gates::transpose(&m),
                    (Gate2::Shear { .. }, Direction::Inverse) => inv2(&m),
                    (Gate2::Shear { .. }, Direction::InverseAdjoint) => {
                        crate::gates::transpose(&inv2(&m))
                    }
                    (_, Direction::Inverse) => crate::gates::transpose(&m),
                    (_, Direction::InverseAdjoint) => m,
                };
                let (a, b) = (v[sites[0]], v[sites[1]]);
                v[sites[0]] = m[0][0] * a + m[0][1] * b;
                v[sites[1]] = m[1][0] * a + m[1][1] * b;
            }
            LocalGate::Three(g) => {
                let m: Mat3 = match dir {
                    Direction::Forward | Direction::InverseAdjoint => g.matrix(),
                    Direction::Adjoint | Direction::Inverse => {
                        crate::gates::transpose(&g.matrix())
                    }
                };
                let x = [v[sites[0]], v[sites[1]], v[sites[2]]];
                for i in 0..3 {
                    v[sites[i]] = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2];
                }
            }
        }
    }

    /// Structural coupling: can output `i` depend on input `j`?
    fn couples(&self, i: usize, j: usize) -> bool {
        match self {
            LocalGate::Two(Gate2::Swap) => i != j,
            _ => true,
        }
    }
}

fn rotation(theta: f64) -> LocalGate {
    LocalGate::Two(Gate2::Rotation { theta })
}

/// One sublayer of `gate` blocks repeated every `period` sites, starting at `offset`.
fn periodic_layer(name: String, n: usize, period: usize, blocks: &[(usize, LocalGate)]) -> Sublayer {
    let mut placements = Vec::new();
    for start in (0..n).step_by(period) {
        for &(off, gate) in blocks {
            let sites = (0..gate.width()).map(|i| (start + off + i) % n).collect();
            placements.push(Placement { gate, sites });
        }
    }
    Sublayer { name, placements }
}

/// Schedule without the full-support size requirement; used for coarse
/// scales of periodic multi-scale transforms.
pub(crate) fn periodic_schedule(spec: &CircuitSpec, n: usize) -> Result<Vec<Sublayer>, CircuitError> {
    spec.validate()?;
    let stride = spec.family.stride();
    if n == 0 || n % stride != 0 {
        return Err(CircuitError::SizeMismatch {
            family: spec.family,
            size: n,
            detail: format!("must be a positive multiple of {stride}"),
        });
    }
    let p = &spec.params;
    let mut layers = Vec::new();
    match spec.family {
        CircuitFamily::Binary => {
            for (k, &t) in p.iter().enumerate() {
                layers.push(periodic_layer(format!("U{}", k + 1), n, 2, &[(k % 2, rotation(t))]));
            }
        }
        CircuitFamily::Ternary => {
            layers.push(periodic_layer("U±".into(), n, 3, &[(0, rotation(FRAC_PI_4))]));
            for (k, &t) in p.iter().enumerate() {
                if k > 0 {
                    layers.push(periodic_layer("Usw".into(), n, 3, &[(0, LocalGate::Two(Gate2::Swap))]));
                }
                let v = LocalGate::Three(Gate3 { theta: t });
                layers.push(periodic_layer(format!("V{}", k + 1), n, 3, &[(1, v)]));
            }
        }
        CircuitFamily::ModifiedTernary => {
            for (k, &t) in p.iter().enumerate() {
                let v = LocalGate::Three(Gate3 { theta: t });
                layers.push(periodic_layer(format!("V{}", k + 1), n, 4, &[((2 * k) % 4, v)]));
            }
        }
        CircuitFamily::Quaternary => {
            layers.push(periodic_layer("U±".into(), n, 2, &[(0, rotation(FRAC_PI_4))]));
            for (k, &t) in p.iter().enumerate() {
                let o = if k % 2 == 0 { 1 } else { 3 };
                layers.push(periodic_layer(
                    format!("U{}", k + 1),
                    n,
                    4,
                    &[(o, rotation(t)), ((o + 2) % 4, rotation(-t))],
                ));
                layers.push(periodic_layer("Usw".into(), n, 2, &[(0, LocalGate::Two(Gate2::Swap))]));
            }
        }
        CircuitFamily::BinaryInvertible => {
            layers.push(periodic_layer("U±".into(), n, 2, &[(0, rotation(FRAC_PI_4))]));
            for (k, &mu) in p.iter().enumerate() {
                let a = LocalGate::Two(Gate2::Shear { mu });
                layers.push(periodic_layer(format!("A{}", k + 1), n, 2, &[((1 + k) % 2, a)]));
            }
        }
    }
    Ok(layers)
}

/// Gate placements per sublayer, in application order, on a periodic lattice
/// of `lattice_size` sites.
pub fn build_layer_schedule(spec: &CircuitSpec, lattice_size: usize) -> Result<Vec<Sublayer>, CircuitError> {
    spec.validate()?;
    let need = spec.family.max_sequence_len(spec.depth);
    if lattice_size < need {
        return Err(CircuitError::SizeMismatch {
            family: spec.family,
            size: lattice_size,
            detail: format!("a depth-{} filter of length {need} would wrap", spec.depth),
        });
    }
    periodic_schedule(spec, lattice_size)
}

pub fn apply_schedule(schedule: &[Sublayer], v: &mut [f64], dir: Direction) {
    let run = |layer: &Sublayer, v: &mut [f64]| {
        for p in &layer.placements {
            p.gate.apply(v, &p.sites, dir);
        }
    };
    match dir {
        Direction::Forward | Direction::InverseAdjoint => schedule.iter().for_each(|l| run(l, v)),
        Direction::Adjoint | Direction::Inverse => schedule.iter().rev().for_each(|l| run(l, v)),
    }
}

/// `U·v` on a periodic lattice of `v.len()` sites.
pub fn apply_circuit_periodic(spec: &CircuitSpec, v: &[f64]) -> Result<Vec<f64>, CircuitError> {
    apply_circuit(spec, v, Direction::Forward)
}

pub fn apply_circuit(spec: &CircuitSpec, v: &[f64], dir: Direction) -> Result<Vec<f64>, CircuitError> {
    let schedule = build_layer_schedule(spec, v.len())?;
    let mut out = v.to_vec();
    apply_schedule(&schedule, &mut out, dir);
    Ok(out)
}

fn structural_support(schedule: &[Sublayer], n: usize, site: usize, dir: Direction) -> Vec<bool> {
    let mut mask = vec![false; n];
    mask[site] = true;
    let mut run = |layer: &Sublayer| {
        for p in &layer.placements {
            let before: Vec<bool> = p.sites.iter().map(|&s| mask[s]).collect();
            for (i, &si) in p.sites.iter().enumerate() {
                mask[si] = (0..p.sites.len()).any(|j| before[j] && p.gate.couples(i, j));
            }
        }
    };
    match dir {
        Direction::Forward | Direction::InverseAdjoint => schedule.iter().for_each(&mut run),
        Direction::Adjoint | Direction::Inverse => schedule.iter().rev().for_each(&mut run),
    }
    mask
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    None,
    SiteSymmetric,
    EdgeSymmetric,
    EdgeAntisymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    #[serde(serialize_with = "numfmt::ser_vec")]
    pub taps: Vec<f64>,
    /// Lattice position of the first tap relative to the start of the period
    /// block holding the generating unit vector.
    pub offset: i64,
    pub symmetry: Symmetry,
}

impl CoefficientSequence {
    pub fn new(taps: Vec<f64>) -> Self {
        CoefficientSequence {
            taps,
            offset: 0,
            symmetry: Symmetry::None,
        }
    }

    pub fn with_symmetry(taps: Vec<f64>, symmetry: Symmetry) -> Self {
        CoefficientSequence {
            taps,
            offset: 0,
            symmetry,
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn reversed(&self) -> Self {
        let mut taps = self.taps.clone();
        taps.reverse();
        CoefficientSequence {
            taps,
            offset: self.offset,
            symmetry: self.symmetry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSequence {
    pub role: Role,
    #[serde(flatten)]
    pub seq: CoefficientSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub family: CircuitFamily,
    pub sequences: Vec<NamedSequence>,
}

impl FilterBank {
    pub fn get(&self, role: Role) -> Option<&CoefficientSequence> {
        self.sequences.iter().find(|s| s.role == role).map(|s| &s.seq)
    }

    /// Panics if the role does not belong to this bank's family.
    pub fn seq(&self, role: Role) -> &CoefficientSequence {
        self.get(role)
            .unwrap_or_else(|| panic!("role {role} not in a {} bank", self.family))
    }
}

fn extraction_lattice(spec: &CircuitSpec) -> usize {
    let stride = spec.family.stride();
    let need = 2 * spec.family.max_sequence_len(spec.depth) + 2 * stride;
    need.div_ceil(stride) * stride
}

fn extract_role(spec: &CircuitSpec, schedule: &[Sublayer], n: usize, role: Role, normalize: bool) -> CoefficientSequence {
    let stride = spec.family.stride();
    let base = (n / 2 / stride) * stride;
    let site = base + role.residue();
    let dir = if role.from_reconstruction_side() {
        Direction::InverseAdjoint
    } else {
        Direction::Forward
    };
    let mut v = vec![0.0; n];
    v[site] = 1.0;
    apply_schedule(schedule, &mut v, dir);
    let mask = structural_support(schedule, n, site, dir);
    let first = mask.iter().position(|&m| m).expect("non-empty support");
    let last = mask.iter().rposition(|&m| m).expect("non-empty support");
    let mut taps = v[first..=last].to_vec();
    if normalize {
        let norm = taps.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = if role.is_scaling() && taps.iter().sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        taps.iter_mut().for_each(|x| *x *= sign / norm);
    }
    CoefficientSequence {
        taps,
        offset: first as i64 - base as i64,
        symmetry: role.symmetry(),
    }
}

/// Unit-norm filter bank; scaling roles have a positive sum.
pub fn extract_filter_bank(spec: &CircuitSpec) -> Result<FilterBank, CircuitError> {
    extract_bank(spec, true)
}

/// Filter bank as produced by the circuit, without normalization.
pub fn extract_filter_bank_raw(spec: &CircuitSpec) -> Result<FilterBank, CircuitError> {
    extract_bank(spec, false)
}

fn extract_bank(spec: &CircuitSpec, normalize: bool) -> Result<FilterBank, CircuitError> {
    let n = extraction_lattice(spec);
    let schedule = build_layer_schedule(spec, n)?;
    let sequences = spec
        .family
        .roles()
        .iter()
        .map(|&role| NamedSequence {
            role,
            seq: extract_role(spec, &schedule, n, role, normalize),
        })
        .collect();
    Ok(FilterBank {
        family: spec.family,
        sequences,
    })
}

/// Reconstruction-side circuit of an invertible circuit: every shear negated,
/// with the per-layer factor `1/(1−μ²)` that makes it the exact inverse transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCircuit {
    pub spec: CircuitSpec,
    pub layer_scales: Vec<f64>,
}

impl DualCircuit {
    /// `(Aᵀ)⁻¹·v` assembled from the negated shears and recorded scales.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, CircuitError> {
        let schedule = periodic_schedule(&self.spec, v.len())?;
        let mut out = v.to_vec();
        // first sublayer is the orthogonal U±, the rest are shear layers
        for (k, layer) in schedule.iter().enumerate() {
            apply_schedule(std::slice::from_ref(layer), &mut out, Direction::Forward);
            if k > 0 {
                let s = self.layer_scales[k - 1];
                out.iter_mut().for_each(|x| *x *= s);
            }
        }
        Ok(out)
    }
}

pub fn dual_circuit(spec: &CircuitSpec) -> Result<DualCircuit, CircuitError> {
    if spec.family != CircuitFamily::BinaryInvertible {
        return Err(CircuitError::WrongFamily {
            expected: CircuitFamily::BinaryInvertible,
            found: spec.family,
        });
    }
    spec.validate()?;
    let mut dual = spec.clone();
    dual.params.iter_mut().for_each(|m| *m = -*m);
    let layer_scales = spec.params.iter().map(|m| 1.0 / (1.0 - m * m)).collect();
    Ok(DualCircuit {
        spec: dual,
        layer_scales,
    })
}
