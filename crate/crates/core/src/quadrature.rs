//! Gauss–Hermite quadrature on the real line.
//!
//! Nodes are found by Newton iteration on normalized Hermite *functions*
//! `φ_n(t) = H̃_n(t) e^{-t²/2}`, which keeps the recurrence in range for a few
//! hundred nodes. Along with the classical weights we store the scaled weights
//! `w_i e^{t_i²}`, used to integrate `∫ h(x) dx` for integrands that already
//! carry their own Gaussian decay.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Default node count for model integrals.
pub const DEFAULT_NODES: usize = 200;

/// Relative change tolerated when doubling the node count.
pub const REFINEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `weights[i] * exp(nodes[i]^2)`.
    pub scaled_weights: Vec<f64>,
}

static RULES: Lazy<Mutex<HashMap<usize, Arc<GaussHermite>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

impl GaussHermite {
    /// Rule with `n` nodes, computed once and cached process-wide.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        let mut map = RULES.lock().expect("quadrature cache poisoned");
        map.entry(n)
            .or_insert_with(|| Arc::new(GaussHermite::new(n)))
            .clone()
    }

    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let m = n.div_ceil(2);
        let mut nodes = vec![0.0; n];
        let mut scaled = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut phi_prev = 0.0;
            for _ in 0..100 {
                let (phi_n, phi_nm1) = hermite_functions(n, z, pim4);
                let deriv = (2.0 * nf).sqrt() * phi_nm1 - z * phi_n;
                let step = phi_n / deriv;
                z -= step;
                phi_prev = phi_nm1;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, phi_nm1) = hermite_functions(n, z, pim4);
            let phi_nm1 = if phi_nm1 != 0.0 { phi_nm1 } else { phi_prev };
            let sw = 1.0 / (nf * phi_nm1 * phi_nm1);
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            scaled[i] = sw;
            scaled[n - 1 - i] = sw;
        }
        // Ascending order.
        nodes.reverse();
        scaled.reverse();
        let weights = nodes
            .iter()
            .zip(&scaled)
            .map(|(t, sw)| sw * (-t * t).exp())
            .collect();
        Self {
            nodes,
            weights,
            scaled_weights: scaled,
        }
    }

    /// `∫ h(x) dx` with nodes placed at `center + scale·√2·t`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, center: f64, scale: f64, mut h: F) -> f64 {
        let s2 = scale * std::f64::consts::SQRT_2;
        let mut acc = 0.0;
        for (t, sw) in self.nodes.iter().zip(&self.scaled_weights) {
            let v = h(center + s2 * t);
            if v != 0.0 {
                acc += sw * v;
            }
        }
        acc * s2
    }

    /// Vector-valued version of [`integrate`](Self::integrate).
    pub fn integrate_vec<F>(&self, center: f64, scale: f64, dim: usize, mut h: F) -> Vec<f64>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let s2 = scale * std::f64::consts::SQRT_2;
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (t, sw) in self.nodes.iter().zip(&self.scaled_weights) {
            buf.iter_mut().for_each(|b| *b = 0.0);
            h(center + s2 * t, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                if *b != 0.0 {
                    *a += sw * b;
                }
            }
        }
        acc.iter_mut().for_each(|a| *a *= s2);
        acc
    }
}

/// Normalized Hermite functions `(φ_n(t), φ_{n-1}(t))`.
fn hermite_functions(n: usize, t: f64, pim4: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = pim4 * (-0.5 * t * t).exp();
    for k in 1..=n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * t * p - ((kf - 1.0) / kf).sqrt() * p_prev;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Integrates with [`DEFAULT_NODES`] and again with twice as many nodes,
/// failing if the two disagree beyond [`REFINEMENT_TOL`] (relative to the
/// larger of the result magnitude and `scale_hint`).
pub fn integrate_checked<F>(center: f64, scale: f64, scale_hint: f64, h: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let coarse = GaussHermite::cached(DEFAULT_NODES).integrate(center, scale, &h);
    let fine = GaussHermite::cached(2 * DEFAULT_NODES).integrate(center, scale, &h);
    let mag = fine.abs().max(scale_hint.abs()).max(f64::MIN_POSITIVE);
    if !fine.is_finite() || (fine - coarse).abs() > REFINEMENT_TOL * mag {
        return Err(Error::Quadrature(format!(
            "{DEFAULT_NODES}-node value {coarse:e} vs {}-node value {fine:e}",
            2 * DEFAULT_NODES
        )));
    }
    Ok(fine)
}

/// Vector-valued version of [`integrate_checked`].
pub fn integrate_vec_checked<F>(
    center: f64,
    scale: f64,
    dim: usize,
    scale_hint: f64,
    h: F,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    let coarse = GaussHermite::cached(DEFAULT_NODES).integrate_vec(center, scale, dim, &h);
    let fine = GaussHermite::cached(2 * DEFAULT_NODES).integrate_vec(center, scale, dim, &h);
    let mag = fine
        .iter()
        .fold(scale_hint.abs(), |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for (c, f) in coarse.iter().zip(&fine) {
        if !f.is_finite() || (f - c).abs() > REFINEMENT_TOL * mag {
            return Err(Error::Quadrature(format!(
                "{DEFAULT_NODES}-node component {c:e} vs refined {f:e}"
            )));
        }
    }
    Ok(fine)
}
