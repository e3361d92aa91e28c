//! One scale of an open-left binary circuit with two bulk layers.
//!
//! Wire 0 sits at the open edge. Synthesis is `L3·L2·L1`:
//! L1 = u(φ) on (0,1) and u(θ₁) on (2,3), (4,5), …;
//! L2 = u(θ₂) on (1,2), (3,4), …;
//! L3 = u(σ) on (0,1).
//! Coarse wire 0 is the boundary wavelet, odd coarse wires are scaling
//! outputs and the remaining even wires are bulk wavelets. Pairs that would
//! run past the right end are left out, so the map stays orthogonal on any
//! even number of wires.

use crate::circuits::CircuitError;
use crate::circuits::CircuitFamily;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleGates {
    pub theta1: f64,
    pub theta2: f64,
    pub phi: f64,
    pub sigma: f64,
}

fn rot(x: &mut [f64], i: usize, theta: f64, transpose: bool) {
    let (s, c) = theta.sin_cos();
    let s = if transpose { -s } else { s };
    let (a, b) = (x[i], x[i + 1]);
    x[i] = c * a + s * b;
    x[i + 1] = -s * a + c * b;
}

fn layer1(g: &ScaleGates, x: &mut [f64], t: bool) {
    rot(x, 0, g.phi, t);
    let mut i = 2;
    while i + 1 < x.len() {
        rot(x, i, g.theta1, t);
        i += 2;
    }
}

fn layer2(g: &ScaleGates, x: &mut [f64], t: bool) {
    let mut i = 1;
    while i + 1 < x.len() {
        rot(x, i, g.theta2, t);
        i += 2;
    }
}

pub fn check_wires(n: usize) -> Result<(), CircuitError> {
    if n < 4 || n % 2 != 0 {
        return Err(CircuitError::SizeMismatch {
            family: CircuitFamily::Binary,
            size: n,
            detail: "an open-left scale needs an even number of at least 4 wires".into(),
        });
    }
    Ok(())
}

/// Coarse coefficients to fine wires.
pub fn synthesize(g: &ScaleGates, x: &mut [f64]) {
    layer1(g, x, false);
    layer2(g, x, false);
    rot(x, 0, g.sigma, false);
}

/// Fine wires to coarse coefficients; the transpose of [`synthesize`].
pub fn analyze(g: &ScaleGates, x: &mut [f64]) {
    rot(x, 0, g.sigma, true);
    layer2(g, x, true);
    layer1(g, x, true);
}
