//! Dormand–Prince 5(4) with step control, exact node hitting and chart exit.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `0` picks one from the span.
    pub h0: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-13,
            h0: 0.0,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    /// Requested nodes actually reached, in order.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Time at which the state left the admissible set, if it did.
    pub exit_time: Option<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `u' = f(t, u)` from `t0` through the signed, monotone `nodes`.
///
/// `f` may return [`Error::Domain`] for states outside the chart; such steps
/// are shrunk, and once the step falls below `h_min` the solution is returned
/// truncated with `exit_time` set.
pub fn dopri5<F, G>(mut f: F, inside: G, u0: &[f64], t0: f64, nodes: &[f64], opts: &OdeOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64]) -> bool,
{
    let m = u0.len();
    let mut sol = OdeSolution {
        times: Vec::with_capacity(nodes.len()),
        states: Vec::with_capacity(nodes.len()),
        exit_time: None,
        accepted: 0,
        rejected: 0,
    };
    let Some(&t_last) = nodes.last() else {
        return Ok(sol);
    };
    let dir = if t_last >= t0 { 1.0 } else { -1.0 };
    let span = (t_last - t0).abs();
    let mut h = if opts.h0 > 0.0 { opts.h0 } else { (span * 1e-3).max(1e-6) };
    let mut t = t0;
    let mut u = u0.to_vec();
    let mut k1 = f(t, &u)?;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; m]; 7];
    let mut stage = vec![0.0; m];
    let mut steps = 0;
    for &target in nodes {
        if (target - t) * dir < 0.0 {
            return Err(Error::Invalid("ODE nodes must be monotone in the integration direction".into()));
        }
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::numerical(
                    "ODE step budget exhausted",
                    format!("t = {t}, h = {h:e}, target = {target}"),
                ));
            }
            let remaining = (target - t).abs();
            let hit = h >= remaining * (1.0 - 1e-12);
            let hs = if hit { remaining } else { h };
            let hh = dir * hs;
            k[0].clone_from(&k1);
            let mut bad = false;
            for s in 1..7 {
                for i in 0..m {
                    let mut acc = u[i];
                    for j in 0..s {
                        acc += hh * A[s][j] * k[j][i];
                    }
                    stage[i] = acc;
                }
                if !inside(&stage) {
                    bad = true;
                    break;
                }
                match f(t + C[s] * hh, &stage) {
                    Ok(v) if v.iter().all(|a| a.is_finite()) => k[s] = v,
                    Ok(_) | Err(Error::Domain(_)) | Err(Error::Inadmissible(_)) => {
                        bad = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if bad {
                sol.rejected += 1;
                h = 0.25 * hs;
                if h < opts.h_min {
                    sol.exit_time = Some(t);
                    return Ok(sol);
                }
                continue;
            }
            let mut err = 0.0;
            let mut unew = vec![0.0; m];
            for i in 0..m {
                let mut y5 = u[i];
                let mut y4 = u[i];
                for s in 0..7 {
                    y5 += hh * B5[s] * k[s][i];
                    y4 += hh * B4[s] * k[s][i];
                }
                unew[i] = y5;
                let sc = opts.atol + opts.rtol * u[i].abs().max(y5.abs());
                err += ((y5 - y4) / sc).powi(2);
            }
            let err = (err / m as f64).sqrt();
            if err <= 1.0 {
                sol.accepted += 1;
                t = if hit { target } else { t + hh };
                u = unew;
                // FSAL: last stage is the derivative at the new point
                k1.clone_from(&k[6]);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !hit || fac < 1.0 {
                    h = hs * fac;
                }
            } else {
                sol.rejected += 1;
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < opts.h_min {
                    return Err(Error::numerical(
                        "ODE step size underflow",
                        format!("t = {t}, error ratio {err:e}"),
                    ));
                }
            }
        }
        sol.times.push(target);
        sol.states.push(u.clone());
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let sol = dopri5(
            |_, u| Ok(vec![u[1], -u[0]]),
            |_| true,
            &[1.0, 0.0],
            0.0,
            &[std::f64::consts::PI, std::f64::consts::TAU],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((sol.states[0][0] + 1.0).abs() < 1e-10);
        assert!((sol.states[1][0] - 1.0).abs() < 1e-10);
        assert_eq!(sol.times[1], std::f64::consts::TAU);
    }

    #[test]
    fn backward_time() {
        let sol = dopri5(|_, u| Ok(vec![u[0]]), |_| true, &[1.0], 0.0, &[-1.0], &OdeOptions::default()).unwrap();
        assert!((sol.states[0][0] - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn exit_is_flagged() {
        // u' = 1 leaves |u| < 1 at t = 1
        let sol = dopri5(|_, _| Ok(vec![1.0]), |u| u[0] < 1.0, &[0.0], 0.0, &[0.5, 2.0], &OdeOptions::default()).unwrap();
        assert_eq!(sol.times.len(), 1);
        let te = sol.exit_time.unwrap();
        assert!(te > 0.99 && te < 1.0);
    }
}
