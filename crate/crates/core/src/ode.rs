//! Adaptive Dormand–Prince 5(4) integrator with FSAL and a step observer.
//!
//! The right-hand side may refuse a state (return `None`), in which case the
//! step is rejected and retried with a smaller step. The observer sees every
//! accepted step and can stop the integration or rescale the state (useful
//! for linear problems whose solutions grow exponentially).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; 0 picks one automatically.
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            h_init: 0.0,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

/// An accepted step, with enough data for cubic Hermite interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> Step<N> {
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        hermite(self.t0, self.t1, &self.y0, &self.y1, &self.f0, &self.f1, t)
    }
}

/// Cubic Hermite interpolation between two samples with derivatives.
pub fn hermite<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flow {
    Continue,
    Stop,
    /// Multiply the current state by the factor (linear systems only).
    Rescale(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    pub stopped: bool,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t_end` (either direction).
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    mut observe: O,
) -> Result<Outcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    O: FnMut(&Step<N>) -> Flow,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 =
        f(t, &y).ok_or_else(|| Error::Numerical(format!("right-hand side rejected the initial state at t = {t0}")))?;
    if span == 0.0 {
        return Ok(Outcome {
            t,
            y,
            accepted: 0,
            rejected: 0,
            stopped: false,
        });
    }

    let mut h = if opts.h_init > 0.0 {
        opts.h_init
    } else {
        initial_step(&y, &k1, opts, span)
    }
    .min(opts.h_max)
    .min(span);

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_ratio = 1e-4_f64;

    loop {
        let remaining = (t_end - t) * dir;
        if remaining <= span * 1e-15 {
            break;
        }
        if accepted + rejected >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;

        let stages = (|| {
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &y_new)?;
            Some((k3, k4, k5, k6, k7, y_new))
        })();

        let Some((k3, k4, k5, k6, k7, y_new)) = stages else {
            rejected += 1;
            h *= 0.25;
            if h < opts.h_min {
                return Err(Error::StepUnderflow { at: t });
            }
            continue;
        };

        let mut err = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 || h <= opts.h_min {
            // PI controller on accepted steps.
            let err_c = err.max(1e-10);
            let factor = (0.9 * err_c.powf(-0.7 / 5.0) * last_ratio.powf(0.4 / 5.0)).clamp(0.2, 5.0);
            last_ratio = err_c;
            let step = Step {
                t0: t,
                t1: if last { t_end } else { t + hs },
                y0: y,
                y1: y_new,
                f0: k1,
                f1: k7,
            };
            t = step.t1;
            y = y_new;
            k1 = k7;
            accepted += 1;
            match observe(&step) {
                Flow::Continue => {}
                Flow::Stop => {
                    return Ok(Outcome {
                        t,
                        y,
                        accepted,
                        rejected,
                        stopped: true,
                    })
                }
                Flow::Rescale(s) => {
                    for i in 0..N {
                        y[i] *= s;
                        k1[i] *= s;
                    }
                }
            }
            if last {
                break;
            }
            h = (h * factor).min(opts.h_max);
        } else {
            rejected += 1;
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= factor;
            if h < opts.h_min {
                return Err(Error::StepUnderflow { at: t });
            }
        }
    }

    Ok(Outcome {
        t,
        y,
        accepted,
        rejected,
        stopped: false,
    })
}

fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N], opts: &Options, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let d0 = (d0 / N as f64).sqrt();
    let d1 = (d1 / N as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.max(opts.h_min).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = Options {
            rtol: 1e-10,
            atol: 1e-14,
            ..Default::default()
        };
        let out = integrate(
            |_, y: &[f64; 1]| Some([-y[0]]),
            0.0,
            [1.0],
            5.0,
            &opts,
            |_| Flow::Continue,
        )
        .unwrap();
        assert!((out.y[0] - (-5.0f64).exp()).abs() < 1e-11);
        assert!(!out.stopped);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let opts = Options::default();
        let out = integrate(
            |_, y: &[f64; 2]| Some([y[1], -y[0]]),
            10.0,
            [10f64.cos(), -10f64.sin()],
            0.0,
            &opts,
            |_| Flow::Continue,
        )
        .unwrap();
        assert!((out.y[0] - 1.0).abs() < 1e-8);
        assert!(out.y[1].abs() < 1e-8);
    }

    #[test]
    fn observer_can_stop_and_interpolate() {
        let opts = Options::default();
        let mut crossing = None;
        let out = integrate(
            |_, y: &[f64; 2]| Some([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            &opts,
            |s| {
                if s.y1[0] < 0.0 {
                    // locate cos t = 0 by bisection on the interpolant
                    let (mut a, mut b) = (s.t0, s.t1);
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        if s.interpolate(m)[0] > 0.0 {
                            a = m
                        } else {
                            b = m
                        }
                    }
                    crossing = Some(0.5 * (a + b));
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            },
        )
        .unwrap();
        assert!(out.stopped);
        assert!((crossing.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn rejected_states_shrink_the_step() {
        // y' = -1 from y = 1: the state becomes invalid at t = 1.
        let opts = Options {
            h_init: 0.3,
            h_min: 1e-12,
            ..Default::default()
        };
        let res = integrate(
            |_, y: &[f64; 1]| if y[0] > 0.0 { Some([-1.0]) } else { None },
            0.0,
            [1.0],
            2.0,
            &opts,
            |_| Flow::Continue,
        );
        assert!(matches!(res, Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn rescale_keeps_solution_shape() {
        let opts = Options::default();
        let mut scale = 1.0;
        let out = integrate(
            |_, y: &[f64; 1]| Some([y[0]]),
            0.0,
            [1.0],
            50.0,
            &opts,
            |s| {
                if s.y1[0].abs() > 1e10 {
                    scale *= 1e-10;
                    Flow::Rescale(1e-10)
                } else {
                    Flow::Continue
                }
            },
        )
        .unwrap();
        assert!(((out.y[0] / scale).ln() - 50.0).abs() < 1e-7);
    }
}
