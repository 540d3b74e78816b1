//! Return map of the Abel equation on the section `theta = 0`, location of
//! its fixed points, and reconstruction of the corresponding limit cycles in
//! the plane.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abel::{cherkas_forward, cherkas_inverse, derive_coeffs, AbelCoeffs};
use crate::equilibria::{all_equilibria, eigenvalues_2x2, jacobian, Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::geometry::enclosed_equilibria;
use crate::model::{to_plane, Params, PlanePoint, PolarPoint};
use crate::ode::{integrate, locate_in_step, IntegratorConfig, StepControl};

/// `|x|` beyond which an Abel solution is treated as escaping.
pub const BLOWUP_NORM: f64 = 1e6;
/// Cycles with `|multiplier - 1|` at or below this are "multiplicity suspect".
pub const CERT_TOL: f64 = 1e-6;
/// Number of equal `theta` intervals on which Abel solutions are sampled.
pub const ABEL_SAMPLES: usize = 720;
/// Number of points in the fixed-point scan.
pub const SCAN_POINTS: usize = 512;
/// Required bound on `|Pi(x*) - x*|`.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Offset of separatrix seeds along the eigenvectors.
pub const SEPARATRIX_OFFSET: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelTrajectory {
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapSample {
    pub x0: f64,
    pub x_end: f64,
    pub d_pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub abel_fixed_point: f64,
    pub multiplier: f64,
    /// `|Pi(x*) - x*|` at the reported fixed point.
    pub residual: f64,
    pub stable: bool,
    pub hyperbolic: bool,
    pub plane_samples: Vec<PlanePoint>,
    pub enclosed_count: usize,
    pub enclosed_index_sum: i32,
}

/// A collapsing step size means the solution is escaping; running out of
/// steps is left as a failure of its own.
fn escape_error(err: Error, t: f64) -> Error {
    match err {
        Error::StepUnderflow { .. } => Error::BlowUp { t, norm: f64::INFINITY },
        other => other,
    }
}

fn abel_grid() -> Vec<f64> {
    (0..=ABEL_SAMPLES)
        .map(|k| TAU * k as f64 / ABEL_SAMPLES as f64)
        .collect()
}

/// Solves the Abel equation from `x(0) = x0` over `[0, 2 pi]` and samples the
/// solution at `ABEL_SAMPLES + 1` equally spaced angles.
pub fn integrate_abel(coeffs: &AbelCoeffs, x0: f64, cfg: &IntegratorConfig) -> Result<AbelTrajectory> {
    if !x0.is_finite() {
        return Err(Error::NonFiniteParameter { name: "x0", value: x0 });
    }
    let theta = abel_grid();
    let mut x = Vec::with_capacity(theta.len());
    x.push(x0);
    let mut last_t = 0.0;
    integrate(
        |t, y: &[f64; 1]| [coeffs.rhs(t, y[0])],
        0.0,
        [x0],
        TAU,
        cfg,
        |step| {
            last_t = step.t1;
            if step.y1[0].abs() > BLOWUP_NORM {
                return Err(Error::BlowUp { t: step.t1, norm: step.y1[0].abs() });
            }
            while x.len() < theta.len() && step.contains(theta[x.len()]) {
                x.push(step.eval(theta[x.len()])[0]);
            }
            Ok(StepControl::Continue)
        },
    )
    .map_err(|e| escape_error(e, last_t))?;
    // Rounding can leave 2 pi just past the final step.
    while x.len() < theta.len() {
        x.push(*x.last().unwrap());
    }
    Ok(AbelTrajectory { theta, x })
}

/// `Pi(x0) = x(2 pi)` and `Pi'(x0)` from the variational equation
/// `v' = (3 A x^2 + 2 B x + C) v`, `v(0) = 1`.
///
/// `v` stays positive, so `w = ln v` is integrated instead. This keeps the
/// error control relative in `v` even when `v` decays far below `abs_tol`.
pub fn return_map(coeffs: &AbelCoeffs, x0: f64, cfg: &IntegratorConfig) -> Result<ReturnMapSample> {
    if !x0.is_finite() {
        return Err(Error::NonFiniteParameter { name: "x0", value: x0 });
    }
    let mut last_t = 0.0;
    let out = integrate(
        |t, y: &[f64; 2]| [coeffs.rhs(t, y[0]), coeffs.linearization(t, y[0])],
        0.0,
        [x0, 0.0],
        TAU,
        cfg,
        |step| {
            last_t = step.t1;
            if step.y1[0].abs() > BLOWUP_NORM {
                return Err(Error::BlowUp { t: step.t1, norm: step.y1[0].abs() });
            }
            Ok(StepControl::Continue)
        },
    )
    .map_err(|e| escape_error(e, last_t))?;
    Ok(ReturnMapSample {
        x0,
        x_end: out.y[0],
        d_pi: out.y[1].exp(),
    })
}

/// Radii at which the scan starts on the section `theta = 0`, with the
/// component they belong to (inside or outside the critical curve).
fn scan_radii(params: &Params) -> Vec<(f64, bool)> {
    let scale = params.p2.abs() / (params.s2.abs() - 1.0);
    let (lo, hi) = ((1e-4 * scale).ln(), (1e4 * scale).ln());
    (0..SCAN_POINTS)
        .filter_map(|i| {
            let r = (lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).exp();
            let td = params.theta_dot(r, 0.0);
            // stay away from the critical curve, where x is unbounded
            if td.abs() < 1e-3 * (params.p2.abs() + r * params.s2.abs()) {
                return None;
            }
            let outside = td * params.p2 < 0.0;
            Some((r, outside))
        })
        .collect()
}

fn refine_fixed_point(
    coeffs: &AbelCoeffs,
    cfg: &IntegratorConfig,
    mut a: f64,
    mut ga: f64,
    mut b: f64,
) -> Result<(f64, ReturnMapSample)> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b || (b - a).abs() < 1e-13 * m.abs().max(1.0) {
            break;
        }
        let s = return_map(coeffs, m, cfg)?;
        let gm = s.x_end - m;
        if gm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x = 0.5 * (a + b);
    let mut s = return_map(coeffs, x, cfg)?;
    for _ in 0..4 {
        let g = s.x_end - x;
        let dg = s.d_pi - 1.0;
        if g.abs() < 1e-14 * x.abs().max(1.0) || dg == 0.0 {
            break;
        }
        let next = x - g / dg;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let ns = return_map(coeffs, next, cfg)?;
        if (ns.x_end - next).abs() >= g.abs() {
            break;
        }
        x = next;
        s = ns;
    }
    Ok((x, s))
}

/// Isolated fixed points `(x*, Pi'(x*))` of the return map other than `x = 0`
/// and the infinity solution. Fails only when an integration runs out of
/// steps or the configuration is invalid.
///
/// The scan runs over `r0` on the section (log-spaced over eight decades around
/// `|p2| / (|s2| - 1)`) and maps each radius to `x0`. Sign changes of
/// `Pi(x) - x` between neighbouring points that both survive a full turn, and
/// lie on the same side of the critical curve, are refined by bisection and
/// then Newton.
pub fn find_fixed_points(coeffs: &AbelCoeffs, cfg: &IntegratorConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let params = coeffs.params;
    params.check_admissible()?;
    // escaping starts are expected and simply dropped; other failures are not
    let samples: Vec<Option<(f64, f64, bool)>> = scan_radii(&params)
        .into_par_iter()
        .map(|(r, outside)| {
            let Ok(x0) = cherkas_forward(&params, r, 0.0) else {
                return Ok(None);
            };
            match return_map(coeffs, x0, cfg) {
                Ok(s) => Ok(Some((x0, s.x_end - x0, outside))),
                Err(Error::BlowUp { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let brackets: Vec<(f64, f64, f64)> = samples
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            (Some((xa, ga, oa)), Some((xb, gb, ob))) if oa == ob && ga != 0.0 => {
                ((ga > 0.0) != (gb > 0.0)).then_some((xa, ga, xb))
            }
            _ => None,
        })
        .collect();

    let mut found: Vec<(f64, f64)> = Vec::new();
    for (a, ga, b) in brackets {
        let (x, s) = refine_fixed_point(coeffs, cfg, a, ga, b)?;
        if found.iter().any(|(y, _)| (x - y).abs() < 1e-8 * x.abs().max(1.0)) {
            continue;
        }
        found.push((x, s.d_pi));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found)
}

/// Plane samples of the periodic orbit through the Abel fixed point `x_star`.
pub fn cycle_plane_samples(params: &Params, x_star: f64, cfg: &IntegratorConfig) -> Result<Vec<PlanePoint>> {
    let coeffs = derive_coeffs(params)?;
    let traj = integrate_abel(&coeffs, x_star, cfg)?;
    let mut pts = traj
        .theta
        .iter()
        .zip(&traj.x)
        .map(|(&theta, &x)| {
            let r = cherkas_inverse(params, x, theta)?;
            Ok(to_plane(PolarPoint { r, theta }))
        })
        .collect::<Result<Vec<_>>>()?;
    // theta = 2 pi and theta = 0 are the same ray; close the polygon exactly
    // when the return-map residual is already at the fixed-point tolerance.
    let first = pts[0];
    if let Some(last) = pts.last_mut() {
        if first.distance(*last) < 1e-6 {
            *last = first;
        }
    }
    Ok(pts)
}

/// All limit cycles that surround the origin, with their certificates.
pub fn find_limit_cycles(params: &Params, cfg: &IntegratorConfig) -> Result<Vec<CycleResult>> {
    let coeffs = derive_coeffs(params)?;
    let eqs = all_equilibria(params)?;
    find_fixed_points(&coeffs, cfg)?
        .into_iter()
        .map(|(x, multiplier)| {
            let residual = (return_map(&coeffs, x, cfg)?.x_end - x).abs();
            let plane_samples = cycle_plane_samples(params, x, cfg)?;
            let (enclosed_count, enclosed_index_sum) = enclosed_equilibria(&plane_samples, &eqs)?;
            // x has the sign of d(theta)/dt, so theta runs backwards in time
            // when x < 0 and the angular multiplier must be inverted.
            let stable = (multiplier < 1.0) == (x > 0.0);
            Ok(CycleResult {
                abel_fixed_point: x,
                multiplier,
                residual,
                stable,
                hyperbolic: (multiplier - 1.0).abs() > CERT_TOL,
                plane_samples,
                enclosed_count,
                enclosed_index_sum,
            })
        })
        .collect()
}

/// Time variable for plane integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeScale {
    /// The polynomial field itself.
    Original,
    /// The field divided by `|z|^8`; same orbits, far milder speeds.
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneOptions {
    pub time: TimeScale,
    /// Escape radius in the plane; `None` uses [`default_escape_radius`].
    pub escape_radius: Option<f64>,
}

impl Default for PlaneOptions {
    fn default() -> Self {
        Self {
            time: TimeScale::Original,
            escape_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneTrajectory {
    pub t: Vec<f64>,
    pub points: Vec<PlanePoint>,
    /// True when the orbit left the escape disc (only for [`trace_plane`]).
    /// Other integration failures are returned as errors.
    pub escaped: bool,
}

/// `f(z) / |z|^8 = p z + s z |z|^2 - zbar^11 / |z|^8`.
pub fn rescaled_field(params: &Params, z: Complex64) -> Complex64 {
    let r = z.norm_sqr();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    params.p() * z + params.s() * z * r - z.conj().powi(11) / (r * r * r * r)
}

/// Ten times the largest of the equilibrium radii and the critical-curve
/// radius, in the plane.
pub fn default_escape_radius(params: &Params) -> Result<f64> {
    let eq_max = all_equilibria(params)?
        .iter()
        .map(|e| e.plane.norm())
        .fold(0.0, f64::max);
    let theta_max = if params.p2 * params.s2 < 0.0 {
        (params.p2.abs() / (params.s2.abs() - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(10.0 * eq_max.max(theta_max).max(1.0))
}

fn plane_rhs(params: &Params, time: TimeScale) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let field = crate::model::CartesianField::new(params);
    move |_, y| match time {
        TimeScale::Original => {
            let (u, v) = field.eval(PlanePoint::new(y[0], y[1]));
            [u, v]
        }
        TimeScale::Rescaled => {
            let w = rescaled_field(params, Complex64::new(y[0], y[1]));
            [w.re, w.im]
        }
    }
}

fn run_plane(
    params: &Params,
    start: PlanePoint,
    t_span: f64,
    cfg: &IntegratorConfig,
    opts: &PlaneOptions,
) -> Result<(PlaneTrajectory, Option<Error>)> {
    if !start.x.is_finite() || !start.y.is_finite() {
        return Err(Error::NonFiniteParameter { name: "start", value: f64::NAN });
    }
    let escape = match opts.escape_radius {
        Some(r) => r,
        None => default_escape_radius(params)?,
    };
    let mut traj = PlaneTrajectory {
        t: vec![0.0],
        points: vec![start],
        escaped: false,
    };
    let mut escape_err = None;
    let res = integrate(
        plane_rhs(params, opts.time),
        0.0,
        [start.x, start.y],
        t_span,
        cfg,
        |step| {
            let norm = step.y1[0].hypot(step.y1[1]);
            if norm > escape {
                escape_err = Some(Error::BlowUp { t: step.t1, norm });
                return Ok(StepControl::Stop);
            }
            traj.t.push(step.t1);
            traj.points.push(PlanePoint::new(step.y1[0], step.y1[1]));
            Ok(StepControl::Continue)
        },
    );
    res?;
    traj.escaped = escape_err.is_some();
    Ok((traj, escape_err))
}

/// Integrates the planar field for a (signed) time `t_span`, recording every
/// accepted step. Fails with `BlowUp` when the orbit leaves the escape disc.
pub fn integrate_plane(
    params: &Params,
    start: PlanePoint,
    t_span: f64,
    cfg: &IntegratorConfig,
) -> Result<PlaneTrajectory> {
    integrate_plane_with(params, start, t_span, cfg, &PlaneOptions::default())
}

pub fn integrate_plane_with(
    params: &Params,
    start: PlanePoint,
    t_span: f64,
    cfg: &IntegratorConfig,
    opts: &PlaneOptions,
) -> Result<PlaneTrajectory> {
    match run_plane(params, start, t_span, cfg, opts)? {
        (_, Some(e)) => Err(e),
        (traj, None) => Ok(traj),
    }
}

/// Like [`integrate_plane_with`] but keeps the part of the orbit computed
/// before an escape; meant for drawing.
pub fn trace_plane(
    params: &Params,
    start: PlanePoint,
    t_span: f64,
    cfg: &IntegratorConfig,
    opts: &PlaneOptions,
) -> Result<PlaneTrajectory> {
    Ok(run_plane(params, start, t_span, cfg, opts)?.0)
}

/// Follows the orbit through `start` (rescaled time) until its polar angle has
/// changed by one full turn and returns the point reached.
pub fn angular_return(params: &Params, start: PlanePoint, cfg: &IntegratorConfig) -> Result<PlanePoint> {
    let start_polar = crate::model::to_polar(start);
    let dir = params.theta_dot(start_polar.r, start_polar.theta).signum();
    if dir == 0.0 {
        return Err(Error::OnCriticalSet { r: start_polar.r, theta: start_polar.theta });
    }
    let rhs = |_: f64, y: &[f64; 3]| {
        let z = Complex64::new(y[0], y[1]);
        let w = rescaled_field(params, z);
        let r = z.norm_sqr();
        // d(arg z)/dt = Im(w / z)
        let dphi = if r == 0.0 { 0.0 } else { (w * z.conj()).im / r };
        [w.re, w.im, dphi]
    };
    let mut hit = None;
    let res = integrate(rhs, 0.0, [start.x, start.y, 0.0], 1e4, cfg, |step| {
        let g = |_: f64, y: &[f64; 3]| dir * y[2] - TAU;
        if g(step.t1, &step.y1) >= 0.0 {
            hit = Some(locate_in_step(step, g).1);
            return Ok(StepControl::Stop);
        }
        Ok(StepControl::Continue)
    })?;
    match hit {
        Some(y) => Ok(PlanePoint::new(y[0], y[1])),
        None => Err(Error::PreconditionNotMet(format!(
            "orbit did not complete a turn by t = {}",
            res.t
        ))),
    }
}

/// Starting point of a separatrix sketch and the time direction to follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixSeed {
    pub start: PlanePoint,
    pub forward: bool,
    pub eigenvalue: f64,
}

/// Seeds offset by [`SEPARATRIX_OFFSET`] along both eigenvectors of a saddle
/// or saddle-node. Unstable directions are followed forward, stable ones
/// backward and the centre direction of a saddle-node both ways.
pub fn separatrix_seeds(params: &Params, eq: &Equilibrium) -> Vec<SeparatrixSeed> {
    if !matches!(eq.kind, EquilibriumKind::Saddle | EquilibriumKind::SaddleNode) || eq.polar.r == 0.0 {
        return Vec::new();
    }
    let m = jacobian(params, eq.polar);
    let lambdas = eigenvalues_2x2(&m);
    let scale = lambdas.iter().map(|l| l.norm()).fold(1.0, f64::max);
    let (r, theta) = (eq.polar.r, eq.polar.theta);
    let sr = r.sqrt();
    let mut seeds = Vec::new();
    for lambda in lambdas.iter().map(|l| l.re) {
        // eigenvector in (r, theta), then pushed forward by z = sqrt(r) e^{i theta}
        let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        let w = if b.abs() + (lambda - a).abs() >= (lambda - d).abs() + c.abs() {
            (b, lambda - a)
        } else {
            (lambda - d, c)
        };
        let dx = theta.cos() / (2.0 * sr) * w.0 - sr * theta.sin() * w.1;
        let dy = theta.sin() / (2.0 * sr) * w.0 + sr * theta.cos() * w.1;
        let n = dx.hypot(dy);
        if n == 0.0 {
            continue;
        }
        let zero = lambda.abs() <= crate::equilibria::EIGEN_ZERO_REL * scale;
        let dirs: &[bool] = if zero {
            &[true, false]
        } else if lambda > 0.0 {
            &[true]
        } else {
            &[false]
        };
        for sign in [1.0, -1.0] {
            let start = PlanePoint::new(
                eq.plane.x + sign * SEPARATRIX_OFFSET * dx / n,
                eq.plane.y + sign * SEPARATRIX_OFFSET * dy / n,
            );
            for &forward in dirs {
                seeds.push(SeparatrixSeed { start, forward, eigenvalue: lambda });
            }
        }
    }
    seeds
}

/// Separatrix sketches of every saddle and saddle-node in `eqs`, each followed
/// for `span` units of rescaled time (truncated on escape) and thinned to at
/// most 2000 points.
pub fn separatrix_curves(
    params: &Params,
    eqs: &[Equilibrium],
    span: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<PlanePoint>>> {
    let opts = PlaneOptions {
        time: TimeScale::Rescaled,
        escape_radius: Some(default_escape_radius(params)?),
    };
    let seeds: Vec<SeparatrixSeed> = eqs.iter().flat_map(|e| separatrix_seeds(params, e)).collect();
    seeds
        .par_iter()
        .map(|seed| {
            let t = if seed.forward { span } else { -span };
            let traj = trace_plane(params, seed.start, t, cfg, &opts)?;
            let stride = traj.points.len().div_ceil(2000).max(1);
            let mut pts: Vec<PlanePoint> = traj.points.iter().step_by(stride).copied().collect();
            if let Some(&last) = traj.points.last() {
                if pts.last() != Some(&last) {
                    pts.push(last);
                }
            }
            Ok(pts)
        })
        .collect()
}

/// Distance from `p` to the polygon through `poly`.
pub fn distance_to_polyline(poly: &[PlanePoint], p: PlanePoint) -> f64 {
    poly.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (ex, ey) = (b.x - a.x, b.y - a.y);
            let len2 = ex * ex + ey * ey;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.x - a.x) * ex + (p.y - a.y) * ey) / len2).clamp(0.0, 1.0)
            };
            PlanePoint::new(a.x + t * ex, a.y + t * ey).distance(p)
        })
        .fold(f64::INFINITY, f64::min)
}
