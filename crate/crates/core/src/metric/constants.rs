//! Sampled reversibility and uniformity constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MetricSpec;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Points { points: Vec<Vec<f64>> },
    /// Closed coordinate ball; sampled in the interior and on its boundary.
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub points: usize,
    pub directions: usize,
    pub seed: u64,
}

impl Default for SampleBudget {
    fn default() -> Self {
        SampleBudget {
            points: 64,
            directions: 1000,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub lambda: f64,
    pub worst_point: Vec<f64>,
    pub worst_direction: Vec<f64>,
    pub points: usize,
    pub directions: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformityReport {
    /// Reported constant, never below the squared sampled reversibility.
    pub uniformity: f64,
    pub sampled: f64,
    pub reversibility_squared: f64,
    /// Sampled value was raised to the squared reversibility.
    pub lifted: bool,
    pub points: usize,
    pub directions: usize,
}

pub(crate) fn sphere_directions(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let r = linalg::norm2(&v);
            if r > 1e-8 {
                break v.iter().map(|a| a / r).collect();
            }
        })
        .collect()
}

fn sample_points(spec: &MetricSpec, region: &Region, budget: &SampleBudget, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let pts = match region {
        Region::Points { points } => points.clone(),
        Region::Ball { center, radius } => {
            let n = center.len();
            let mut pts = vec![center.clone()];
            let dirs = sphere_directions(n, budget.points.max(2), rng);
            for (k, d) in dirs.iter().enumerate() {
                // half on the boundary sphere, half in the interior
                let s = if k % 2 == 0 {
                    1.0
                } else {
                    rng.gen::<f64>().powf(1.0 / n as f64)
                };
                pts.push(center.iter().zip(d).map(|(c, u)| c + radius * s * u).collect());
            }
            pts
        }
    };
    if pts.is_empty() {
        return Err(Error::Invalid("empty region".into()));
    }
    for p in &pts {
        spec.check_point(p)?;
    }
    Ok(pts)
}

/// `sup F(x, -y) / F(x, y)` over sampled points and directions.
pub fn reversibility(spec: &MetricSpec, region: &Region, budget: &SampleBudget) -> Result<ReversibilityReport> {
    spec.check_structure()?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let pts = sample_points(spec, region, budget, &mut rng)?;
    let dirs = sphere_directions(spec.dim(), budget.directions, &mut rng);
    let mut best = (1.0, pts[0].clone(), dirs[0].clone());
    for x in &pts {
        for y in &dirs {
            let my: Vec<f64> = y.iter().map(|a| -a).collect();
            let r = spec.norm(x, &my) / spec.norm(x, y);
            if r > best.0 {
                best = (r, x.clone(), y.clone());
            }
        }
    }
    Ok(ReversibilityReport {
        lambda: best.0,
        worst_point: best.1,
        worst_direction: best.2,
        points: pts.len(),
        directions: dirs.len(),
    })
}

/// `sup g_X(Y,Y) / g_Z(Y,Y)`; the supremum over `Y` for each sampled pair
/// `(X, Z)` is the top generalized eigenvalue of `(g_X, g_Z)`.
pub fn uniformity(spec: &MetricSpec, region: &Region, budget: &SampleBudget) -> Result<UniformityReport> {
    spec.check_structure()?;
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let pts = sample_points(spec, region, budget, &mut rng)?;
    let ndir = ((budget.directions as f64).sqrt().ceil() as usize).max(8);
    let dirs = sphere_directions(n, ndir, &mut rng);
    let mut sampled: f64 = 1.0;
    for x in &pts {
        let gs: Vec<Vec<f64>> = dirs.iter().map(|y| spec.fundamental_matrix(x, y)).collect();
        for ga in &gs {
            for gb in &gs {
                sampled = sampled.max(linalg::max_generalized_eigen(ga, gb, n)?);
            }
        }
    }
    let rev = reversibility(spec, region, budget)?;
    let lam2 = rev.lambda * rev.lambda;
    Ok(UniformityReport {
        uniformity: sampled.max(lam2),
        sampled,
        reversibility_squared: lam2,
        lifted: lam2 > sampled,
        points: pts.len(),
        directions: dirs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_constants_are_one() {
        let e = MetricSpec::euclidean(3);
        let region = Region::Ball {
            center: vec![0.0; 3],
            radius: 2.0,
        };
        let b = SampleBudget::default();
        assert!((reversibility(&e, &region, &b).unwrap().lambda - 1.0).abs() < 1e-14);
        let u = uniformity(&e, &region, &b).unwrap();
        assert!((u.uniformity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region_rejected() {
        let e = MetricSpec::euclidean(2);
        let r = Region::Points { points: vec![] };
        assert!(reversibility(&e, &r, &SampleBudget::default()).is_err());
    }
}
