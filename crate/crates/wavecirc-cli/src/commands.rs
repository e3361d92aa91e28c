use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use wavecirc::analysis::{
    cascade as run_cascade, frequency_response, mirror_defect, moment_centered, moment_report,
    high_freq_moment_centered, shift_orthogonality_defect, symmetry_defect, MomentReport,
};
use wavecirc::circuits::{
    extract_filter_bank, Centering, CircuitFamily, CircuitSpec, CoefficientSequence, Role, Symmetry,
};
use wavecirc::construction::{angles_from_scaling, daubechies_scaling, nearest_factorization};
use wavecirc::design::{
    design_binary_daubechies, design_biorthogonal, design_multiwavelet, design_quaternary, design_ternary_lmh,
    design_ternary_max_moments, solve_boundary_angles, LmhType, OptimizerConfig,
};
use wavecirc::fixtures;
use wavecirc::numfmt;
use wavecirc::transform::{forward, inverse, Signal, SubbandPyramid};

use crate::error::CliError;
use crate::io::{csv_text, emit, json_line, read_column, read_spec, read_text};
use crate::{AngleFamily, AngleSource, CsvOutput, ObjectiveKind, Optimizer, Output};

struct Floats<'a>(&'a [f64]);

impl Serialize for Floats<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        numfmt::ser_vec(self.0, s)
    }
}

fn ser_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => numfmt::ser_f64(v, s),
        None => s.serialize_none(),
    }
}

fn ser_opt_vec<S: Serializer>(x: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => numfmt::ser_vec(v, s),
        None => s.serialize_none(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(json_line)
        .map_err(|e| CliError::numerical("serialization", e))
}

fn optimizer(opt: &Optimizer) -> Result<OptimizerConfig, CliError> {
    let seed = match std::env::var("WAVECIRC_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("WAVECIRC_SEED must be an unsigned integer, got '{v}'")))?,
        Err(_) => opt.seed,
    };
    let mut cfg = OptimizerConfig::default().with_seed(seed);
    if let Some(m) = opt.max_iter {
        cfg.max_iter = m;
    }
    if let Some(r) = opt.restarts {
        cfg.restarts = r;
    }
    Ok(cfg)
}

fn table_angles(table: &fixtures::AngleTable, order: usize) -> Result<Vec<f64>, CliError> {
    let set = table.by_order(order).ok_or_else(|| {
        let have: Vec<String> = table.sets.iter().filter_map(|s| s.order).map(|o| o.to_string()).collect();
        CliError::usage(format!("Table {} has orders {}, not {order}", table.table, have.join(", ")))
    })?;
    Ok(table.radians(set))
}

pub fn angles(
    family: AngleFamily,
    order: usize,
    source: AngleSource,
    tol: f64,
    opt: &Optimizer,
    output: &Output,
) -> Result<(), CliError> {
    if order == 0 {
        return Err(CliError::usage("order must be positive"));
    }
    let angles = match (family, source) {
        (AngleFamily::Daubechies, AngleSource::Construction) => angles_from_scaling(&daubechies_scaling(order)?, tol)?,
        (AngleFamily::Daubechies, AngleSource::Design) => design_binary_daubechies(order, &optimizer(opt)?)?,
        (AngleFamily::Daubechies, AngleSource::Table) => table_angles(&fixtures::daubechies(), order)?,
        (AngleFamily::Symlet, AngleSource::Construction) => {
            let reference = table_angles(&fixtures::symlets(), order)?;
            let (h, _, _) = nearest_factorization(order, &reference)?;
            angles_from_scaling(&h, tol)?
        }
        (AngleFamily::Symlet, AngleSource::Table) => table_angles(&fixtures::symlets(), order)?,
        (AngleFamily::Coiflet, AngleSource::Construction | AngleSource::Table) => {
            table_angles(&fixtures::coiflets(), order)?
        }
        (AngleFamily::Symlet | AngleFamily::Coiflet, AngleSource::Design) => {
            return Err(CliError::usage("only daubechies angles have a design objective"))
        }
    };
    emit(output.out.as_deref(), &to_json(&Floats(&angles))?)
}

#[allow(clippy::too_many_arguments)]
pub fn design(
    family: &str,
    depth: usize,
    objective: ObjectiveKind,
    lmh_type: Option<&str>,
    moments: Option<usize>,
    penalty: f64,
    opt: &Optimizer,
    output: &Output,
) -> Result<(), CliError> {
    let family = CircuitFamily::from_str(family)?;
    let cfg = optimizer(opt)?;
    let needs = |f: CircuitFamily| {
        if family == f {
            Ok(())
        } else {
            Err(CliError::usage(format!("this objective needs --family {f}, got {family}")))
        }
    };
    let need_moments = || moments.ok_or_else(|| CliError::usage("--moments is required for this objective"));
    let spec = match objective {
        ObjectiveKind::Daubechies => {
            needs(CircuitFamily::Binary)?;
            CircuitSpec::binary(&design_binary_daubechies(depth, &cfg)?)
        }
        ObjectiveKind::MaxMoments => {
            needs(CircuitFamily::Ternary)?;
            CircuitSpec::ternary(&design_ternary_max_moments(depth, &cfg)?, Centering::Site)
        }
        ObjectiveKind::Lmh => {
            needs(CircuitFamily::Ternary)?;
            let ty: LmhType = lmh_type.ok_or_else(|| CliError::usage("--type is required for lmh"))?.parse()?;
            CircuitSpec::ternary(&design_ternary_lmh(ty, depth, &cfg)?, ty.bands().3)
        }
        ObjectiveKind::Multiwavelet => {
            needs(CircuitFamily::ModifiedTernary)?;
            let p = design_multiwavelet(depth, need_moments()?, penalty, &cfg)?;
            CircuitSpec::new(family, p)?
        }
        ObjectiveKind::Moments => {
            needs(CircuitFamily::Quaternary)?;
            CircuitSpec::new(family, design_quaternary(depth, need_moments()?, &cfg)?)?
        }
        ObjectiveKind::Biorthogonal => {
            needs(CircuitFamily::BinaryInvertible)?;
            CircuitSpec::new(family, design_biorthogonal(depth, need_moments()?, &cfg)?)?
        }
    };
    emit(output.out.as_deref(), &json_line(spec.to_json()))
}

#[derive(Serialize)]
struct SequenceReport<'a> {
    role: Role,
    #[serde(serialize_with = "numfmt::ser_vec")]
    taps: &'a [f64],
    offset: i64,
    symmetry: Symmetry,
    moments: MomentReport,
}

#[derive(Serialize)]
struct BankReport<'a> {
    family: CircuitFamily,
    sequences: Vec<SequenceReport<'a>>,
}

pub fn filters(spec: &Path, alpha_max: u32, output: &Output) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let bank = extract_filter_bank(&spec)?;
    let report = BankReport {
        family: bank.family,
        sequences: bank
            .sequences
            .iter()
            .map(|s| SequenceReport {
                role: s.role,
                taps: &s.seq.taps,
                offset: s.seq.offset,
                symmetry: s.seq.symmetry,
                moments: moment_report(&s.seq, alpha_max),
            })
            .collect(),
    };
    emit(output.out.as_deref(), &to_json(&report)?)
}

/// Roles whose outputs continue to the next scale.
fn scaling_roles(spec: &CircuitSpec) -> Vec<Role> {
    match spec.family {
        CircuitFamily::Binary => vec![Role::H],
        CircuitFamily::Ternary => match spec.centering {
            Some(Centering::Edge) => vec![Role::BPlus],
            _ => vec![Role::SPlus],
        },
        CircuitFamily::ModifiedTernary => vec![Role::HTop, Role::HBottom],
        CircuitFamily::Quaternary => vec![Role::HPlus],
        CircuitFamily::BinaryInvertible => vec![Role::HDec, Role::HRec],
    }
}

#[derive(Serialize)]
struct RoleDefects {
    role: Role,
    length: usize,
    #[serde(serialize_with = "ser_opt", skip_serializing_if = "Option::is_none")]
    orthogonality: Option<f64>,
    #[serde(serialize_with = "numfmt::ser_f64")]
    symmetry: f64,
    #[serde(serialize_with = "ser_opt_vec", skip_serializing_if = "Option::is_none")]
    moments: Option<Vec<f64>>,
    #[serde(serialize_with = "ser_opt_vec", skip_serializing_if = "Option::is_none")]
    high_freq_moments: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct VerifyReport {
    family: CircuitFamily,
    #[serde(serialize_with = "numfmt::ser_f64")]
    threshold: f64,
    #[serde(serialize_with = "numfmt::ser_f64")]
    reconstruction: f64,
    #[serde(serialize_with = "ser_opt", skip_serializing_if = "Option::is_none")]
    mirror: Option<f64>,
    sequences: Vec<RoleDefects>,
    #[serde(serialize_with = "numfmt::ser_f64")]
    worst: f64,
    pass: bool,
}

fn probe_signal(n: usize) -> Vec<f64> {
    (0..n).map(|i| (0.37 * i as f64).sin() + 0.1 * (i % 7) as f64).collect()
}

/// Largest deviation of a one-scale forward and inverse transform.
fn reconstruction_defect(spec: &CircuitSpec) -> Result<f64, CliError> {
    let stride = spec.family.stride();
    let blocks = (2 * spec.family.max_sequence_len(spec.depth)).div_ceil(stride).max(4);
    let n = stride * blocks;
    let x = probe_signal(n);
    let signal = if spec.boundary.is_some() {
        Signal::open_left(x.clone())
    } else {
        Signal::periodic(x.clone())
    };
    let y = inverse(&forward(&signal, spec, 1)?, spec)?.samples;
    Ok(x.iter().zip(&y).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn verify(
    spec_path: &Path,
    threshold: f64,
    moments: Option<u32>,
    hf_moments: Option<u32>,
    hf_roles: &[String],
    output: &Output,
) -> Result<(), CliError> {
    if !(threshold >= 0.0) {
        return Err(CliError::usage("threshold must be non-negative"));
    }
    let spec = read_spec(spec_path)?;
    let bank = extract_filter_bank(&spec)?;
    let scaling = scaling_roles(&spec);
    let hf_roles: Vec<Role> = if hf_roles.is_empty() {
        scaling.clone()
    } else {
        hf_roles.iter().map(|r| Role::from_str(r)).collect::<Result<_, _>>()?
    };
    let orthogonal = spec.family != CircuitFamily::BinaryInvertible;
    let mut checked = vec![reconstruction_defect(&spec)?];
    let mirror = if spec.family == CircuitFamily::Binary {
        Some(mirror_defect(bank.seq(Role::H), bank.seq(Role::G))?)
    } else {
        None
    };
    checked.extend(mirror);
    let mut sequences = Vec::new();
    for named in &bank.sequences {
        let seq: &CoefficientSequence = &named.seq;
        let orth = orthogonal.then(|| shift_orthogonality_defect(seq, spec.family.stride()));
        let sym = symmetry_defect(seq);
        let wavelet = !scaling.contains(&named.role);
        let m = moments
            .filter(|_| wavelet)
            .map(|p| (0..p).map(|a| moment_centered(seq, a)).collect::<Vec<_>>());
        let hf = hf_moments
            .filter(|_| hf_roles.contains(&named.role))
            .map(|q| (0..q).map(|a| high_freq_moment_centered(seq, a)).collect::<Vec<_>>());
        checked.extend(orth);
        checked.push(sym);
        checked.extend(m.as_deref().map(max_abs));
        checked.extend(hf.as_deref().map(max_abs));
        sequences.push(RoleDefects {
            role: named.role,
            length: seq.len(),
            orthogonality: orth,
            symmetry: sym,
            moments: m,
            high_freq_moments: hf,
        });
    }
    let worst = checked.iter().fold(0.0f64, |m, &x| if x.is_nan() { f64::INFINITY } else { m.max(x) });
    let pass = worst <= threshold;
    let report = VerifyReport {
        family: spec.family,
        threshold,
        reconstruction: checked[0],
        mirror,
        sequences,
        worst,
        pass,
    };
    emit(output.out.as_deref(), &to_json(&report)?)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::numerical(
            "defect_exceeds_threshold",
            format!("worst defect {worst:e} exceeds threshold {threshold:e}"),
        ))
    }
}

pub fn cascade(spec: &Path, levels: usize, role: &str, threshold: f64, output: &CsvOutput) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let bank = extract_filter_bank(&spec)?;
    let target = Role::from_str(role)?;
    if bank.get(target).is_none() {
        return Err(CliError::usage(format!("role {target} is not part of a {} bank", spec.family)));
    }
    let roles = match spec.family {
        CircuitFamily::BinaryInvertible if matches!(target, Role::HRec | Role::GRec) => vec![Role::HRec],
        CircuitFamily::BinaryInvertible => vec![Role::HDec],
        _ => scaling_roles(&spec),
    };
    let f = run_cascade(&bank, &roles, target, levels)?;
    let pts: Vec<(f64, f64)> = f.xs().zip(f.samples.iter().copied()).collect();
    let keep = |p: &&(f64, f64)| p.1.abs() >= threshold;
    let first = pts.iter().position(|p| keep(&p)).unwrap_or(pts.len());
    let last = pts.iter().rposition(|p| keep(&p)).map_or(first, |i| i + 1);
    let rows = pts[first..last.max(first)].iter().map(|&(x, v)| vec![x, v]);
    let header = output.header.then_some(&["x", "value"][..]);
    emit(output.out.as_deref(), &csv_text(header, rows)?)
}

pub fn spectrum(spec: &Path, points: usize, output: &CsvOutput) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let bank = extract_filter_bank(&spec)?;
    let responses: Vec<Vec<(f64, f64)>> = bank
        .sequences
        .iter()
        .map(|s| frequency_response(&s.seq, points))
        .collect::<Result<_, _>>()?;
    let rows = (0..points).map(|k| {
        let mut row = vec![responses[0][k].0];
        row.extend(responses.iter().map(|r| r[k].1));
        row
    });
    let names: Vec<&str> = std::iter::once("omega")
        .chain(bank.sequences.iter().map(|s| s.role.name()))
        .collect();
    let header = output.header.then_some(&names[..]);
    emit(output.out.as_deref(), &csv_text(header, rows)?)
}

pub fn transform(spec: &Path, levels: usize, input: &Path, output: &Output) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let x = read_column(input)?;
    let signal = if spec.boundary.is_some() {
        Signal::open_left(x)
    } else {
        Signal::periodic(x)
    };
    let pyr = forward(&signal, &spec, levels)?;
    emit(output.out.as_deref(), &to_json(&pyr)?)
}

pub fn reconstruct(spec: &Path, input: &Path, output: &CsvOutput) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let pyr: SubbandPyramid = serde_json::from_str(&read_text(input)?)
        .map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
    let x = inverse(&pyr, &spec)?.samples;
    let header = output.header.then_some(&["value"][..]);
    emit(output.out.as_deref(), &csv_text(header, x.into_iter().map(|v| vec![v]))?)
}

pub fn boundary(bulk: &str, scales: usize, output: &Output) -> Result<(), CliError> {
    let angles = match bulk {
        "d4" => [5.0 * PI / 12.0, PI / 6.0],
        other => return Err(CliError::usage(format!("unknown bulk circuit '{other}', supported: d4"))),
    };
    if scales == 0 {
        return Err(CliError::usage("--scales must be positive"));
    }
    let b = solve_boundary_angles(&angles, scales, 2)?;
    let spec = CircuitSpec::binary(&angles).with_boundary(b)?;
    emit(output.out.as_deref(), &json_line(spec.to_json()))
}
