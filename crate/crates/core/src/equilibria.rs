//! Equilibria: closed-form enumeration in the fundamental sector, their
//! twelve rotated copies, linear classification, the origin's stability from
//! its Lyapunov constants, and the behavior at infinity.
//!
//! The origin is always monodromic (`r theta' = p2 (x^2 + y^2)^5` never
//! vanishes off the origin when `p2 != 0`), so it is classified as a focus or
//! a center, never as a node.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    eval_polar_field, normalize_angle, to_plane, Params, PlanePoint, PolarPoint, Rotate,
    SYMMETRY_ORDER,
};

/// `|Q| < Q_ZERO_REL * (p1^2 + p2^2)` counts as `Q = 0`.
pub const Q_ZERO_REL: f64 = 1e-9;
/// Relative threshold for a vanishing eigenvalue.
pub const EIGEN_ZERO_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Origin,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Focus,
    Center,
    Node,
    Saddle,
    SaddleNode,
}

impl EquilibriumKind {
    pub fn name(&self) -> &'static str {
        match self {
            EquilibriumKind::Focus => "focus",
            EquilibriumKind::Center => "center",
            EquilibriumKind::Node => "node",
            EquilibriumKind::Saddle => "saddle",
            EquilibriumKind::SaddleNode => "saddle-node",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub polar: PolarPoint,
    pub plane: PlanePoint,
    /// Eigenvalues of the Jacobian of the rescaled polar field. For the origin
    /// these are `p1 +- i p2`, the linear part of `f(z) / |z|^8`.
    pub eigenvalues: [Complex64; 2],
    pub kind: EquilibriumKind,
    pub stability: Stability,
    pub index: i32,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumCount {
    One,
    Thirteen,
    TwentyFive,
}

impl EquilibriumCount {
    pub fn value(&self) -> usize {
        match self {
            EquilibriumCount::One => 1,
            EquilibriumCount::Thirteen => 13,
            EquilibriumCount::TwentyFive => 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OriginKind {
    StableFocus,
    UnstableFocus,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityBehavior {
    Attractor,
    Repellor,
    HasEquilibria,
    /// `s1 = 0`, `|s2| > 1`: the averaged rate vanishes.
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionClass {
    pub count: EquilibriumCount,
    pub q_value: f64,
    pub origin_kind: OriginKind,
    pub infinity: InfinityBehavior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginStability {
    pub v1: f64,
    pub v2: f64,
    pub kind: OriginKind,
}

/// `Q = p1^2 + p2^2 - (p1 s2 - p2 s1)^2`.
pub fn quadratic_form(params: &Params) -> f64 {
    let Params { p1, p2, s1, s2 } = *params;
    let k = p1 * s2 - p2 * s1;
    p1 * p1 + p2 * p2 - k * k
}

/// Expanded form `(1 - s2^2) p1^2 + (1 - s1^2) p2^2 + 2 s1 s2 p1 p2`.
pub fn quadratic_form_expanded(params: &Params) -> f64 {
    let Params { p1, p2, s1, s2 } = *params;
    (1.0 - s2 * s2) * p1 * p1 + (1.0 - s1 * s1) * p2 * p2 + 2.0 * s1 * s2 * p1 * p2
}

pub fn q_is_zero(params: &Params, q: f64) -> bool {
    q.abs() < Q_ZERO_REL * (params.p1 * params.p1 + params.p2 * params.p2)
}

/// Jacobian of the rescaled polar field with respect to `(r, theta)`.
pub fn jacobian(params: &Params, pt: PolarPoint) -> [[f64; 2]; 2] {
    let r = pt.r;
    let (sin, cos) = (12.0 * pt.theta).sin_cos();
    [
        [
            2.0 * params.p1 + 4.0 * r * (params.s1 - cos),
            24.0 * r * r * sin,
        ],
        [params.s2 + sin, 12.0 * r * cos],
    ]
}

pub fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = 0.25 * tr * tr - det;
    let half = 0.5 * tr;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = half + half.signum() * sq;
        let small = if big != 0.0 { det / big } else { half - sq };
        let (a, b) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    } else {
        let sq = (-disc).sqrt();
        [Complex64::new(half, sq), Complex64::new(half, -sq)]
    }
}

/// Lyapunov constants of the origin in the angular return map and the
/// resulting stability in forward time.
///
/// `V1 = exp(4 pi p1 / p2) - 1`, `V2 = 4 pi s1`. The angle runs backwards in
/// time when `p2 < 0`, so the time-stability follows the sign of `p1`, or of
/// `s1` when `p1 = 0`.
pub fn origin_stability(params: &Params) -> Result<OriginStability> {
    if params.p2 == 0.0 {
        return Err(Error::Inadmissible("p2 must be nonzero".into()));
    }
    let v1 = (4.0 * PI * params.p1 / params.p2).exp() - 1.0;
    let v2 = 4.0 * PI * params.s1;
    let deciding = if params.p1 != 0.0 { params.p1 } else { params.s1 };
    let kind = if deciding > 0.0 {
        OriginKind::UnstableFocus
    } else if deciding < 0.0 {
        OriginKind::StableFocus
    } else {
        OriginKind::Center
    };
    Ok(OriginStability { v1, v2, kind })
}

/// `integral_0^{2 pi} -2 s1 / (s2 + sin 12 theta) d theta
///  = -sgn(s2) 4 pi s1 / sqrt(s2^2 - 1)`: the exponent of the angular return
/// map of the invariant circle at infinity.
pub fn infinity_integral(params: &Params) -> Result<f64> {
    let s2 = params.s2;
    if s2.abs() <= 1.0 {
        return Err(Error::Inadmissible(format!("|s2| must exceed 1 (got {s2})")));
    }
    Ok(-s2.signum() * 4.0 * PI * params.s1 / (s2 * s2 - 1.0).sqrt())
}

/// Stability of infinity in forward time. The angular exponent is multiplied
/// by `sgn(s2)`, the direction of rotation near infinity, which leaves
/// `-4 pi s1 / sqrt(s2^2 - 1)`.
pub fn infinity_analysis(params: &Params) -> Result<InfinityBehavior> {
    if params.s2.abs() <= 1.0 {
        return Ok(InfinityBehavior::HasEquilibria);
    }
    if params.s1 == 0.0 {
        return Err(Error::DegenerateInfinity);
    }
    let time_exponent = params.s2.signum() * infinity_integral(params)?;
    Ok(if time_exponent < 0.0 {
        InfinityBehavior::Attractor
    } else {
        InfinityBehavior::Repellor
    })
}

/// Angle `theta` in `[-pi/12, pi/12)` from a root of either chart:
/// `t = tan 6 theta` or `tau = cot 6 theta`.
fn angle_from_charts(t: Option<f64>, tau: Option<f64>) -> Option<f64> {
    let from_t = |t: f64| t.atan() / 6.0;
    let from_tau = |tau: f64| {
        if tau == 0.0 {
            -FRAC_PI_2 / 6.0
        } else {
            (1.0 / tau).atan() / 6.0
        }
    };
    match (t.filter(|v| v.is_finite()), tau.filter(|v| v.is_finite())) {
        (Some(t), _) if t.abs() <= 1.0 => Some(from_t(t)),
        (_, Some(tau)) if tau.abs() <= 1.0 => Some(from_tau(tau)),
        (Some(t), _) => Some(from_t(t)),
        (None, Some(tau)) => Some(from_tau(tau)),
        (None, None) => None,
    }
}

/// Equilibria with `r > 0` in the sector `theta in [-pi/12, pi/12)`.
///
/// With `k = p1 s2 - p2 s1` and `u = sqrt(Q)` the tangent chart gives
/// `tan 6 theta = (p1 +- u) / (p2 - k)` and the cotangent chart
/// `cot 6 theta = (+-u - p1) / (k + p2)`; the chart with `|.| <= 1` is used.
/// A double root (`Q = 0`) is reported once, on the `Plus` branch.
pub fn fundamental_equilibria(params: &Params) -> Result<Vec<(PolarPoint, Branch)>> {
    params.check_admissible()?;
    let Params { p1, p2, s1, s2 } = *params;
    let q = quadratic_form(params);
    let double = q_is_zero(params, q);
    if q < 0.0 && !double {
        return Ok(Vec::new());
    }
    let u = if double { 0.0 } else { q.sqrt() };
    let k = p1 * s2 - p2 * s1;
    let den_t = p2 - k;
    let den_tau = k + p2;

    let branches: &[(Branch, f64)] = if double {
        &[(Branch::Plus, 1.0)]
    } else {
        &[(Branch::Plus, 1.0), (Branch::Minus, -1.0)]
    };
    let mut out = Vec::with_capacity(2);
    for &(branch, sign) in branches {
        let t = (den_t != 0.0).then(|| (p1 + sign * u) / den_t);
        let tau = (den_tau != 0.0).then(|| (sign * u - p1) / den_tau);
        let theta = angle_from_charts(t, tau).ok_or(Error::DegenerateDenominator)?;
        let r = -p2 / params.c(theta);
        if r.is_finite() && r > 0.0 {
            out.push((PolarPoint::new(r, theta)?, branch));
        }
    }
    Ok(out)
}

fn classify_at(params: &Params, pt: PolarPoint, branch: Branch) -> Result<Equilibrium> {
    if branch == Branch::Origin || pt.r == 0.0 {
        let origin = origin_stability(params)?;
        let (kind, stability) = match origin.kind {
            OriginKind::Center => (EquilibriumKind::Center, Stability::Neutral),
            OriginKind::StableFocus => (EquilibriumKind::Focus, Stability::Stable),
            OriginKind::UnstableFocus => (EquilibriumKind::Focus, Stability::Unstable),
        };
        return Ok(Equilibrium {
            polar: PolarPoint { r: 0.0, theta: 0.0 },
            plane: PlanePoint::new(0.0, 0.0),
            eigenvalues: [
                Complex64::new(params.p1, params.p2),
                Complex64::new(params.p1, -params.p2),
            ],
            kind,
            stability,
            index: 1,
            branch: Branch::Origin,
        });
    }

    let eig = eigenvalues_2x2(&jacobian(params, pt));
    let scale = eig[0].norm().max(eig[1].norm()).max(1.0);
    let tol = EIGEN_ZERO_REL * scale;
    let zero = [eig[0].norm() < tol, eig[1].norm() < tol];
    let (kind, index, stability) = if zero[0] && zero[1] {
        return Err(Error::UnresolvedClassification { tol });
    } else if zero[0] || zero[1] {
        (EquilibriumKind::SaddleNode, 0, Stability::Unstable)
    } else if eig[0].im != 0.0 {
        let st = if eig[0].re < 0.0 {
            Stability::Stable
        } else if eig[0].re > 0.0 {
            Stability::Unstable
        } else {
            Stability::Neutral
        };
        (EquilibriumKind::Focus, 1, st)
    } else if eig[0].re * eig[1].re < 0.0 {
        (EquilibriumKind::Saddle, -1, Stability::Unstable)
    } else {
        let st = if eig[0].re < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        (EquilibriumKind::Node, 1, st)
    };
    Ok(Equilibrium {
        polar: pt,
        plane: to_plane(pt),
        eigenvalues: eig,
        kind,
        stability,
        index,
        branch,
    })
}

fn residual(params: &Params, pt: PolarPoint) -> f64 {
    let (a, b) = eval_polar_field(params, pt);
    a.hypot(b)
}

/// Classifies an equilibrium from the numerical eigenvalues of [`jacobian`].
/// The branch label is recovered by matching against the closed-form roots.
pub fn classify_equilibrium(params: &Params, pt: PolarPoint) -> Result<Equilibrium> {
    params.check_admissible()?;
    if pt.r == 0.0 {
        return classify_at(params, pt, Branch::Origin);
    }
    let res = residual(params, pt);
    if res >= 1e-8 {
        return Err(Error::PreconditionNotMet(format!(
            "not an equilibrium (residual {res:e})"
        )));
    }
    let sector = 2.0 * PI / SYMMETRY_ORDER as f64;
    let branch = fundamental_equilibria(params)?
        .into_iter()
        .min_by(|a, b| {
            let d = |p: &PolarPoint| {
                let dt = (pt.theta - p.theta).rem_euclid(sector);
                (pt.r - p.r).abs() + dt.min(sector - dt)
            };
            d(&a.0).total_cmp(&d(&b.0))
        })
        .map(|(_, b)| b)
        .unwrap_or(Branch::Plus);
    classify_at(params, pt, branch)
}

/// The origin followed by the twelve rotated copies of every fundamental
/// equilibrium (`1`, `13` or `25` entries).
pub fn all_equilibria(params: &Params) -> Result<Vec<Equilibrium>> {
    let mut out = vec![classify_at(params, PolarPoint { r: 0.0, theta: 0.0 }, Branch::Origin)?];
    for (pt, branch) in fundamental_equilibria(params)? {
        let base = classify_at(params, pt, branch)?;
        for k in 0..SYMMETRY_ORDER {
            let polar = pt.rotate(k)?;
            out.push(Equilibrium {
                polar,
                plane: to_plane(polar),
                ..base.clone()
            });
        }
    }
    Ok(out)
}

pub fn classify_region(params: &Params) -> Result<RegionClass> {
    params.check_admissible()?;
    let q = quadratic_form(params);
    // r = -p2 / c(theta) > 0 needs sgn(p2) = -sgn(s2)
    let positive_radius = params.p2 * params.s2 < 0.0;
    let count = if !positive_radius {
        EquilibriumCount::One
    } else if q_is_zero(params, q) {
        EquilibriumCount::Thirteen
    } else if q > 0.0 {
        EquilibriumCount::TwentyFive
    } else {
        EquilibriumCount::One
    };
    let infinity = match infinity_analysis(params) {
        Ok(b) => b,
        Err(Error::DegenerateInfinity) => InfinityBehavior::Undecided,
        Err(e) => return Err(e),
    };
    Ok(RegionClass {
        count,
        q_value: q,
        origin_kind: origin_stability(params)?.kind,
        infinity,
    })
}

/// Damped Newton on the rescaled polar field from a `grid_n x grid_n` grid
/// of seeds over `(0, r_max] x [0, 2 pi)`, `r_max = 2 |p2| / (|s2| - 1)`.
/// Independent of the closed form; the origin is never returned.
pub fn numeric_equilibria(params: &Params, grid_n: usize) -> Result<Vec<PolarPoint>> {
    params.check_admissible()?;
    if grid_n < 24 {
        return Err(Error::PreconditionNotMet(format!(
            "grid_n must be at least 24 (got {grid_n})"
        )));
    }
    let r_max = 2.0 * params.p2.abs() / (params.s2.abs() - 1.0);
    let scale = 1.0 + params.p1.abs() + params.p2.abs();
    let mut found: Vec<(PlanePoint, PolarPoint, f64)> = Vec::new();
    for i in 0..grid_n {
        let r0 = r_max * (i as f64 + 0.5) / grid_n as f64;
        for j in 0..grid_n {
            let theta0 = TAU * j as f64 / grid_n as f64;
            let Some((pt, res)) = newton(params, r0, theta0) else {
                continue;
            };
            if pt.r <= 1e-8 || res > 1e-10 * scale {
                continue;
            }
            let plane = to_plane(pt);
            match found.iter_mut().find(|(p, _, _)| p.distance(plane) < 1e-6) {
                Some(entry) if res < entry.2 => *entry = (plane, pt, res),
                Some(_) => {}
                None => found.push((plane, pt, res)),
            }
        }
    }
    Ok(found.into_iter().map(|(_, pt, _)| pt).collect())
}

/// Newton on `(r'/(2r), theta')`, which has the same zeros as the rescaled
/// polar field for `r > 0` but no spurious attraction towards `r = 0`.
fn newton(params: &Params, r0: f64, theta0: f64) -> Option<(PolarPoint, f64)> {
    let Params { p1, p2, s1, s2 } = *params;
    let eval = |r: f64, th: f64| {
        let (sin, cos) = (12.0 * th).sin_cos();
        (p1 + r * (s1 - cos), p2 + r * (s2 + sin))
    };
    let (mut r, mut th) = (r0, theta0);
    let mut g = eval(r, th);
    let mut norm = g.0.hypot(g.1);
    for _ in 0..200 {
        let (sin, cos) = (12.0 * th).sin_cos();
        let j = [[s1 - cos, 12.0 * r * sin], [s2 + sin, 12.0 * r * cos]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dr = (g.0 * j[1][1] - g.1 * j[0][1]) / det;
        let dt = (j[0][0] * g.1 - j[1][0] * g.0) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (rn, tn) = (r - lambda * dr, th - lambda * dt);
            let gn = eval(rn, tn);
            let nn = gn.0.hypot(gn.1);
            if rn > 0.0 && nn.is_finite() && (nn < norm || nn == 0.0) {
                r = rn;
                th = tn;
                g = gn;
                norm = nn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let step = (lambda * dr).hypot(lambda * dt);
        if !accepted || step < 1e-15 * (1.0 + r.abs()) || norm == 0.0 {
            break;
        }
    }
    let pt = PolarPoint {
        r,
        theta: normalize_angle(th),
    };
    (r > 0.0 && r.is_finite()).then(|| (pt, residual(params, pt)))
}

/// True unless one non-origin equilibrium sits on `theta = 0 (mod pi/6)` while
/// another sits on `theta = pi/12 (mod pi/6)`.
pub fn exclusion_check(params: &Params) -> Result<bool> {
    if params.s2.abs() <= 1.0 {
        return Err(Error::Inadmissible(format!(
            "|s2| must exceed 1 (got {})",
            params.s2
        )));
    }
    let eqs = all_equilibria(params)?;
    let sector = PI / 6.0;
    let on = |theta: f64, offset: f64| {
        let d = (theta - offset).rem_euclid(sector);
        d.min(sector - d) < 1e-9
    };
    let at_zero = eqs
        .iter()
        .any(|e| e.branch != Branch::Origin && on(e.polar.theta, 0.0));
    let at_half = eqs
        .iter()
        .any(|e| e.branch != Branch::Origin && on(e.polar.theta, PI / 12.0));
    Ok(!(at_zero && at_half))
}
