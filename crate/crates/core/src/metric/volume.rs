//! Busemann–Hausdorff density from the indicatrix body volume.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricSpec;
use crate::error::Result;
use crate::gauss::GaussLegendre;
use crate::sum::NeumaierSum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BhDensity {
    pub value: f64,
    /// Monte Carlo standard error; `None` for deterministic quadrature.
    pub standard_error: Option<f64>,
    pub samples: usize,
}

const POLAR_NODES: usize = 4096;
const MC_SAMPLES: usize = 200_000;

/// `vol(Bⁿ) / vol{y : F(x, y) < 1}`.
///
/// With the radius function `1/F(x, u)` on the unit sphere the body volume is
/// `vol(Bⁿ) · mean_u F(x, u)^{-n}`, so the density is the reciprocal of that
/// mean. `n = 2` uses the periodic trapezoid rule, `n ≥ 3` seeded Monte Carlo.
pub fn bh_density(spec: &MetricSpec, x: &[f64]) -> Result<BhDensity> {
    spec.check_structure()?;
    spec.check_point(x)?;
    let n = spec.dim();
    if n == 2 {
        let mut s = NeumaierSum::new();
        for k in 0..POLAR_NODES {
            let t = TAU * k as f64 / POLAR_NODES as f64;
            let f = spec.norm(x, &[t.cos(), t.sin()]);
            s.add(f.powi(-2));
        }
        let mean = s.total() / POLAR_NODES as f64;
        return Ok(BhDensity {
            value: 1.0 / mean,
            standard_error: None,
            samples: POLAR_NODES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dirs = super::constants::sphere_directions(n, MC_SAMPLES, &mut rng);
    let vals: Vec<f64> = dirs.iter().map(|u| spec.norm(x, u).powi(-(n as i32))).collect();
    let mean = crate::sum::neumaier(&vals) / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    let se_mean = (var / vals.len() as f64).sqrt();
    Ok(BhDensity {
        value: 1.0 / mean,
        // delta method for the reciprocal
        standard_error: Some(se_mean / (mean * mean)),
        samples: vals.len(),
    })
}

/// Deterministic version of [`bh_density`] for `n ∈ {2, 3}`, used where a
/// reproducible density of an `x`-independent norm is needed.
pub(crate) fn bh_density_quadrature(spec: &MetricSpec, x: &[f64]) -> f64 {
    let n = spec.dim();
    if n == 2 {
        let mut s = NeumaierSum::new();
        for k in 0..POLAR_NODES {
            let t = TAU * k as f64 / POLAR_NODES as f64;
            s.add(spec.norm(x, &[t.cos(), t.sin()]).powi(-2));
        }
        return POLAR_NODES as f64 / s.total();
    }
    assert_eq!(n, 3, "deterministic indicatrix quadrature supports n ≤ 3");
    let gl = GaussLegendre::new(96);
    let nphi = 256;
    let mut s = NeumaierSum::new();
    for (c, w) in gl.on(-1.0, 1.0) {
        let sn = (1.0 - c * c).sqrt();
        for k in 0..nphi {
            let ph = TAU * k as f64 / nphi as f64;
            let u = [sn * ph.cos(), sn * ph.sin(), c];
            s.add(w * spec.norm(x, &u).powi(-3));
        }
    }
    let mean = s.total() * (TAU / nphi as f64) / (4.0 * PI);
    1.0 / mean
}
