//! Adaptive Dormand-Prince 5(4) integrator with PI step control and the
//! classical fourth-order continuous extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            initial_step: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !positive(self.initial_step) {
            return Err(Error::InvalidConfig("initial step must be positive".into()));
        }
        if self.max_steps < 1000 {
            return Err(Error::InvalidConfig("max_steps must be at least 1000".into()));
        }
        Ok(())
    }

    /// Same configuration with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

/// One accepted step together with its interpolant.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 4],
}

impl<const N: usize> DenseStep<N> {
    /// Interpolated state at `t` (meant for `t` between `t0` and `t1`).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let [r2, r3, r4, r5] = &self.rcont;
        std::array::from_fn(|i| {
            self.y0[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])))
        })
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 {
            (self.t0, self.t1)
        } else {
            (self.t1, self.t0)
        };
        (lo..=hi).contains(&t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// True when the observer requested the stop before `t_end`.
    pub stopped: bool,
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `observer` sees every accepted step; it can stop the integration early or
/// abort it with an error (used for escape detection).
pub fn integrate<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<Outcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&DenseStep<N>) -> Result<StepControl>,
{
    cfg.validate()?;
    let span = t_end - t0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut outcome = Outcome {
        t,
        y,
        accepted: 0,
        rejected: 0,
        stopped: false,
    };
    if span == 0.0 {
        return Ok(outcome);
    }

    let mut h = dir * cfg.initial_step.min(span.abs());
    let mut k1 = rhs(t, &y);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    for _ in 0..cfg.max_steps {
        let remaining = t_end - t;
        if remaining * dir <= 0.0 {
            break;
        }
        let last = (h * dir) >= remaining * dir;
        if last {
            h = remaining;
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        let y2 = combo(&y, h, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * h, &y2);
        let y3 = combo(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * h, &y3);
        let y4 = combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * h, &y4);
        let y5 = combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * h, &y5);
        let y6 = combo(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let k6 = rhs(t + h, &y6);
        let y_new = combo(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t + h, &y_new);

        let err = if all_finite(&y_new) && all_finite(&k7) {
            let sum: f64 = (0..N)
                .map(|i| {
                    let e = h
                        * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i]);
                    let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                    (e / sc).powi(2)
                })
                .sum();
            (sum / N as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let step = DenseStep {
                t0: t,
                t1: if last { t_end } else { t + h },
                y0: y,
                y1: y_new,
                rcont: [
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                    std::array::from_fn(|i| {
                        h * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i])
                    }),
                ],
            };
            outcome.accepted += 1;
            t = step.t1;
            y = y_new;
            k1 = k7;
            outcome.t = t;
            outcome.y = y;
            if observer(&step)? == StepControl::Stop {
                outcome.stopped = true;
                return Ok(outcome);
            }
            if last {
                return Ok(outcome);
            }
            let err = err.max(1e-10);
            let mut fac = SAFETY * err.powf(-0.2 + 0.75 * BETA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = err;
            last_rejected = false;
            h *= fac;
        } else {
            outcome.rejected += 1;
            last_rejected = true;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(FAC_MIN)
            } else {
                0.1
            };
            h *= fac;
        }
    }
    if (t_end - t) * dir > 0.0 {
        return Err(Error::MaxSteps(cfg.max_steps));
    }
    Ok(outcome)
}

/// Locates a sign change of `g` inside an accepted step by bisection on the
/// interpolant. Returns `(t, y)` at the crossing.
pub fn locate_in_step<const N: usize, G>(step: &DenseStep<N>, mut g: G) -> (f64, [f64; N])
where
    G: FnMut(f64, &[f64; N]) -> f64,
{
    let (mut a, mut b) = (step.t0, step.t1);
    let mut ga = g(a, &step.y0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m, &step.eval(m));
        if (gm <= 0.0) == (ga <= 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    (b, step.eval(b))
}
