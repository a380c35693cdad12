//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)).

use crate::error::{Error, Result};

/// Integration control parameters.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Hard bound on the state sup-norm; exceeding it aborts the run.
    pub norm_bound: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            norm_bound: 1e12,
            max_steps: 500_000_000,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 4th-order embedded weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

/// Integrates dy/dt = f(t, y) from `t0`, invoking `sample` at every uniform
/// output time `t0 + k/output_rate` (including t0) until `t_end`.
///
/// Steps are adaptively controlled and clamped to land exactly on output
/// times, so the sampled trajectory is a deterministic function of the
/// inputs and tolerances.
pub fn integrate<F, S>(
    rhs: F,
    t0: f64,
    t_end: f64,
    y0: &[f64],
    output_rate: f64,
    opts: &OdeOptions,
    mut sample: S,
) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let dt_out = 1.0 / output_rate;

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    sample(t, &y);
    let mut next_output_index: u64 = 1;
    let mut next_output = t0 + dt_out;

    rhs(t, &y, &mut k1);
    let mut h = initial_step(&y, &k1, opts, dt_out);
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { time: t });
        }
        steps += 1;

        let target = next_output.min(t_end);
        let mut hitting_output = false;
        if t + h >= target - 1e-12 * dt_out {
            h = target - t;
            hitting_output = true;
        }
        if h <= f64::EPSILON * t.abs().max(dt_out) {
            return Err(Error::StepSizeUnderflow { time: t });
        }

        // FSAL stages
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + h / 5.0, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + 3.0 * h / 10.0, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + 4.0 * h / 5.0, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + 8.0 * h / 9.0, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs(t + h, &ynew, &mut k7);

        // embedded error estimate
        let mut err: f64 = 0.0;
        for i in 0..n {
            let y4 = y[i]
                + h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                    + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            let e = (ynew[i] - y4) / sc;
            err += e * e;
        }
        let err = (err / n as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&ynew);
            k1.copy_from_slice(&k7);

            let norm = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if norm > opts.norm_bound {
                sample(t, &y);
                return Err(Error::Runaway {
                    time: t,
                    bound: opts.norm_bound,
                });
            }
            if hitting_output {
                sample(t, &y);
                if (target - t_end).abs() < 1e-12 * dt_out && next_output >= t_end {
                    break;
                }
                next_output_index += 1;
                next_output = t0 + next_output_index as f64 * dt_out;
            }
            let grow = (0.9 * err.powf(-0.2)).min(5.0);
            h *= grow.max(0.2);
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.1);
        }
    }
    Ok(())
}

fn initial_step(y: &[f64], dy: &[f64], opts: &OdeOptions, dt_out: f64) -> f64 {
    let ny = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ndy = dy.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let h = if ndy > 0.0 {
        (opts.rtol * ny.max(1.0) / ndy).max(1e-18)
    } else {
        dt_out
    };
    h.min(dt_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_is_accurate() {
        let opts = OdeOptions::default();
        let mut last = (0.0, vec![0.0]);
        integrate(
            |_t, y, dy| dy[0] = -2.0 * y[0],
            0.0,
            3.0,
            &[1.0],
            10.0,
            &opts,
            |t, y| last = (t, y.to_vec()),
        )
        .unwrap();
        assert_relative_eq!(last.0, 3.0, max_relative = 1e-12);
        assert_relative_eq!(last.1[0], (-6.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn harmonic_oscillator_phase_accuracy() {
        let opts = OdeOptions::default();
        let w = 5.0;
        let mut last = vec![0.0; 2];
        integrate(
            |_t, y, dy| {
                dy[0] = w * y[1];
                dy[1] = -w * y[0];
            },
            0.0,
            20.0,
            &[1.0, 0.0],
            16.0 * w / (2.0 * std::f64::consts::PI),
            &opts,
            |_t, y| last.copy_from_slice(y),
        )
        .unwrap();
        assert_relative_eq!(last[0], (w * 20.0f64).cos(), epsilon = 1e-6);
        assert_relative_eq!(last[1], -(w * 20.0f64).sin(), epsilon = 1e-6);
    }

    #[test]
    fn runaway_is_detected() {
        let opts = OdeOptions {
            norm_bound: 1e6,
            ..OdeOptions::default()
        };
        let r = integrate(
            |_t, y, dy| dy[0] = 10.0 * y[0],
            0.0,
            10.0,
            &[1.0],
            10.0,
            &opts,
            |_t, _y| {},
        );
        assert!(matches!(r, Err(Error::Runaway { .. })));
    }

    #[test]
    fn sampling_grid_is_uniform_and_deterministic() {
        let opts = OdeOptions::default();
        let mut ts = Vec::new();
        integrate(
            |_t, y, dy| dy[0] = -y[0],
            0.0,
            1.0,
            &[1.0],
            8.0,
            &opts,
            |t, _y| ts.push(t),
        )
        .unwrap();
        assert_eq!(ts.len(), 9);
        for (k, t) in ts.iter().enumerate() {
            assert_relative_eq!(*t, k as f64 / 8.0, epsilon = 1e-12);
        }
    }
}
