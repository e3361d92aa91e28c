//! Elementary local matrices: 2×2 rotations, swaps and shears, and the
//! reflection-symmetric 3×3 gate used by ternary circuits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("shear parameter |mu| = 1 gives a singular gate (mu = {0})")]
    DegenerateShear(f64),
}

/// A 2×2 gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate2 {
    Rotation { theta: f64 },
    Swap,
    Shear { mu: f64 },
}

impl Gate2 {
    pub fn shear(mu: f64) -> Result<Self, GateError> {
        shear_gate(mu).map(|_| Gate2::Shear { mu })
    }

    pub fn matrix(&self) -> Mat2 {
        match *self {
            Gate2::Rotation { theta } => rotation_gate(theta),
            Gate2::Swap => swap_gate(),
            Gate2::Shear { mu } => [[1.0, mu], [mu, 1.0]],
        }
    }
}

/// The 3×3 reflection-symmetric gate v(θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate3 {
    pub theta: f64,
}

impl Gate3 {
    pub fn matrix(&self) -> Mat3 {
        symmetric_gate3(self.theta)
    }
}

/// u(θ) = [[cos θ, sin θ], [−sin θ, cos θ]].
pub fn rotation_gate(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

pub fn swap_gate() -> Mat2 {
    [[0.0, 1.0], [1.0, 0.0]]
}

/// v(θ), the one-parameter family of orthogonal 3×3 matrices that commute
/// with spatial reflection.
pub fn symmetric_gate3(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    let r = std::f64::consts::SQRT_2 * s;
    [
        [0.5 * (c + 1.0), 0.5 * r, 0.5 * (c - 1.0)],
        [-0.5 * r, c, -0.5 * r],
        [0.5 * (c - 1.0), 0.5 * r, 0.5 * (c + 1.0)],
    ]
}

/// a(μ) = [[1, μ], [μ, 1]]; singular when |μ| = 1.
pub fn shear_gate(mu: f64) -> Result<Mat2, GateError> {
    if (mu.abs() - 1.0).abs() == 0.0 {
        return Err(GateError::DegenerateShear(mu));
    }
    Ok([[1.0, mu], [mu, 1.0]])
}

/// Reverses the order of both rows and columns.
pub fn reflect_matrix<const N: usize>(a: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut out = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[N - 1 - i][N - 1 - j];
        }
    }
    out
}

pub fn matmul<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut out = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = (0..N).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose<const N: usize>(a: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut out = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[j][i];
        }
    }
    out
}
