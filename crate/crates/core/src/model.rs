//! The vector field `z' = p z^5 zbar^4 + s z^6 zbar^5 - zbar^11` in its complex,
//! cartesian and polar forms.
//!
//! Polar coordinates follow the convention `z = sqrt(r) e^{i theta}`: the polar
//! `r` is the *square* of the euclidean radius `|z|`. Every conversion in this
//! crate, and every plot, goes through [`to_polar`] / [`to_plane`] so the two
//! radii are never mixed up.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of the symmetry group.
pub const SYMMETRY_ORDER: i64 = 12;

/// The four real parameters, `p = p1 + i p2` and `s = s1 + i s2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p1: f64,
    pub p2: f64,
    pub s1: f64,
    pub s2: f64,
}

impl Params {
    /// Accepts any finite values. Analysis entry points additionally call
    /// [`Params::check_admissible`].
    pub fn new(p1: f64, p2: f64, s1: f64, s2: f64) -> Result<Self> {
        let params = Self { p1, p2, s1, s2 };
        for (name, value) in params.named() {
            if !value.is_finite() {
                return Err(Error::NonFiniteParameter { name, value });
            }
        }
        Ok(params)
    }

    pub fn named(&self) -> [(&'static str, f64); 4] {
        [("p1", self.p1), ("p2", self.p2), ("s1", self.s1), ("s2", self.s2)]
    }

    pub fn p(&self) -> Complex64 {
        Complex64::new(self.p1, self.p2)
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(self.s1, self.s2)
    }

    /// `|s2| > 1` (no equilibria at infinity) and `p2 != 0`.
    pub fn check_admissible(&self) -> Result<()> {
        if self.s2.abs() <= 1.0 {
            return Err(Error::Inadmissible(format!(
                "|s2| must exceed 1 (got s2 = {})",
                self.s2
            )));
        }
        if self.p2 == 0.0 {
            return Err(Error::Inadmissible("p2 must be nonzero".into()));
        }
        Ok(())
    }

    pub fn is_admissible(&self) -> bool {
        self.check_admissible().is_ok()
    }

    /// `c(theta) = s2 + sin(12 theta)`, nonvanishing for admissible parameters.
    pub fn c(&self, theta: f64) -> f64 {
        self.s2 + (12.0 * theta).sin()
    }

    /// `d(theta)/dt` in rescaled time; its zero set is the critical curve.
    pub fn theta_dot(&self, r: f64, theta: f64) -> f64 {
        self.p2 + r * self.c(theta)
    }

    /// Radius (polar `r`) of the critical curve `theta' = 0` at angle `theta`,
    /// if it is positive there.
    pub fn critical_radius(&self, theta: f64) -> Option<f64> {
        let r = -self.p2 / self.c(theta);
        (r.is_finite() && r > 0.0).then_some(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { x: z.re, y: z.im }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A point in the `(r, theta)` chart, `r = |z|^2`, `theta` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    /// Normalizes `theta`; negative `r` is clamped to the origin only when it
    /// is a rounding artefact (`r > -1e-300`), otherwise rejected.
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !r.is_finite() || !theta.is_finite() || r < 0.0 {
            return Err(Error::PreconditionNotMet(format!(
                "polar point needs finite r >= 0 and finite theta (r = {r}, theta = {theta})"
            )));
        }
        Ok(Self {
            r,
            theta: normalize_angle(theta),
        })
    }
}

/// Maps an angle to `[0, 2 pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed difference `a - b` reduced to `(-pi, pi]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

pub fn to_polar(pt: PlanePoint) -> PolarPoint {
    PolarPoint {
        r: pt.x * pt.x + pt.y * pt.y,
        theta: normalize_angle(pt.y.atan2(pt.x)),
    }
}

pub fn to_plane(pt: PolarPoint) -> PlanePoint {
    let rho = pt.r.sqrt();
    let (sin, cos) = pt.theta.sin_cos();
    PlanePoint {
        x: rho * cos,
        y: rho * sin,
    }
}

pub fn eval_complex_field(params: &Params, z: Complex64) -> Complex64 {
    let zb = z.conj();
    let zz = z.norm_sqr();
    let zz4 = zz * zz * zz * zz;
    // z^5 zbar^4 = |z|^8 z, z^6 zbar^5 = |z|^10 z
    params.p() * z * zz4 + params.s() * z * (zz4 * zz) - zb.powi(11)
}

/// Raw polar form in the original time `t`.
pub fn eval_polar_field_raw(params: &Params, pt: PolarPoint) -> (f64, f64) {
    let r = pt.r;
    let r4 = (r * r) * (r * r);
    let (rdot, tdot) = eval_polar_field(params, pt);
    (r4 * rdot, r4 * tdot)
}

/// Polar form after the time rescaling `dt/ds = r^4`:
/// `r' = 2 r p1 + 2 r^2 (s1 - cos 12 theta)`, `theta' = p2 + r (s2 + sin 12 theta)`.
pub fn eval_polar_field(params: &Params, pt: PolarPoint) -> (f64, f64) {
    let r = pt.r;
    let (sin, cos) = (12.0 * pt.theta).sin_cos();
    (
        2.0 * r * params.p1 + 2.0 * r * r * (params.s1 - cos),
        params.p2 + r * (params.s2 + sin),
    )
}

/// `p1 = s1 = 0`, compared exactly.
pub fn is_hamiltonian(params: &Params) -> bool {
    params.p1 == 0.0 && params.s1 == 0.0
}

/// Action of the generator power `gamma_k = exp(2 pi i k / 12)`.
pub trait Rotate: Sized {
    fn rotate(&self, k: i64) -> Result<Self>;
}

fn check_k(k: i64) -> Result<f64> {
    if (0..SYMMETRY_ORDER).contains(&k) {
        Ok(TAU * k as f64 / SYMMETRY_ORDER as f64)
    } else {
        Err(Error::RotationOutOfRange(k))
    }
}

fn gamma(k: i64) -> Result<Complex64> {
    // exact values on the axes keep k = 0, 3, 6, 9 free of rounding
    Ok(match k {
        0 => Complex64::new(1.0, 0.0),
        3 => Complex64::new(0.0, 1.0),
        6 => Complex64::new(-1.0, 0.0),
        9 => Complex64::new(0.0, -1.0),
        _ => Complex64::from_polar(1.0, check_k(k)?),
    })
}

impl Rotate for Complex64 {
    fn rotate(&self, k: i64) -> Result<Self> {
        check_k(k)?;
        Ok(self * gamma(k)?)
    }
}

impl Rotate for PlanePoint {
    fn rotate(&self, k: i64) -> Result<Self> {
        Ok(PlanePoint::from_complex(self.to_complex().rotate(k)?))
    }
}

impl Rotate for PolarPoint {
    fn rotate(&self, k: i64) -> Result<Self> {
        let angle = check_k(k)?;
        Ok(PolarPoint {
            r: self.r,
            theta: normalize_angle(self.theta + angle),
        })
    }
}

/// Homogeneous bivariate polynomial; `coeffs[j]` multiplies `x^(d-j) y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoly {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl HomogeneousPoly {
    fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; degree + 1],
        }
    }

    fn axpy(&mut self, a: f64, other: &HomogeneousPoly) {
        debug_assert_eq!(self.degree, other.degree);
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = self.degree;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * x.powi((d - j) as i32) * y.powi(j as i32))
            .sum()
    }

    pub fn d_dx(&self, x: f64, y: f64) -> f64 {
        let d = self.degree;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| d - j > 0)
            .map(|(j, c)| c * (d - j) as f64 * x.powi((d - j - 1) as i32) * y.powi(j as i32))
            .sum()
    }

    pub fn d_dy(&self, x: f64, y: f64) -> f64 {
        let d = self.degree;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j > 0)
            .map(|(j, c)| c * j as f64 * x.powi((d - j) as i32) * y.powi(j as i32 - 1))
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Real and imaginary parts of `z^a zbar^b` as homogeneous polynomials in `x, y`.
fn expand_monomial(a: usize, b: usize) -> (HomogeneousPoly, HomogeneousPoly) {
    let i = Complex64::new(0.0, 1.0);
    let za: Vec<Complex64> = (0..=a)
        .map(|j| binomial(a, j) * i.powi(j as i32))
        .collect();
    let zb: Vec<Complex64> = (0..=b)
        .map(|j| binomial(b, j) * (-i).powi(j as i32))
        .collect();
    let mut prod = vec![Complex64::new(0.0, 0.0); a + b + 1];
    for (j, u) in za.iter().enumerate() {
        for (k, v) in zb.iter().enumerate() {
            prod[j + k] += u * v;
        }
    }
    // powers of i are exact up to a sign; strip the rounding in the zero parts
    let clean = |v: f64| if v.abs() < 1e-9 { 0.0 } else { v.round() };
    (
        HomogeneousPoly {
            degree: a + b,
            coeffs: prod.iter().map(|c| clean(c.re)).collect(),
        },
        HomogeneousPoly {
            degree: a + b,
            coeffs: prod.iter().map(|c| clean(c.im)).collect(),
        },
    )
}

struct MonomialBasis {
    m1: (HomogeneousPoly, HomogeneousPoly),
    m2: (HomogeneousPoly, HomogeneousPoly),
    m3: (HomogeneousPoly, HomogeneousPoly),
}

fn basis() -> &'static MonomialBasis {
    static BASIS: OnceLock<MonomialBasis> = OnceLock::new();
    BASIS.get_or_init(|| MonomialBasis {
        m1: expand_monomial(5, 4),
        m2: expand_monomial(6, 5),
        m3: expand_monomial(0, 11),
    })
}

/// Cartesian components `x' = P(x, y)`, `y' = Q(x, y)`, each split into its
/// degree-9 and degree-11 homogeneous parts. Built by expanding the complex
/// form, so the coefficients never depend on a hand transcription.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianField {
    pub p: [HomogeneousPoly; 2],
    pub q: [HomogeneousPoly; 2],
}

impl CartesianField {
    pub fn new(params: &Params) -> Self {
        let b = basis();
        let mut p9 = HomogeneousPoly::zero(9);
        let mut q9 = HomogeneousPoly::zero(9);
        let mut p11 = HomogeneousPoly::zero(11);
        let mut q11 = HomogeneousPoly::zero(11);
        // Re/Im of (p1 + i p2)(u + i v) = (p1 u - p2 v) + i (p1 v + p2 u)
        p9.axpy(params.p1, &b.m1.0);
        p9.axpy(-params.p2, &b.m1.1);
        q9.axpy(params.p1, &b.m1.1);
        q9.axpy(params.p2, &b.m1.0);
        p11.axpy(params.s1, &b.m2.0);
        p11.axpy(-params.s2, &b.m2.1);
        q11.axpy(params.s1, &b.m2.1);
        q11.axpy(params.s2, &b.m2.0);
        p11.axpy(-1.0, &b.m3.0);
        q11.axpy(-1.0, &b.m3.1);
        Self {
            p: [p9, p11],
            q: [q9, q11],
        }
    }

    pub fn eval(&self, pt: PlanePoint) -> (f64, f64) {
        let (x, y) = (pt.x, pt.y);
        (
            self.p.iter().map(|h| h.eval(x, y)).sum(),
            self.q.iter().map(|h| h.eval(x, y)).sum(),
        )
    }

    /// `dP/dx + dQ/dy`.
    pub fn divergence(&self, pt: PlanePoint) -> f64 {
        let (x, y) = (pt.x, pt.y);
        self.p.iter().map(|h| h.d_dx(x, y)).sum::<f64>()
            + self.q.iter().map(|h| h.d_dy(x, y)).sum::<f64>()
    }

    /// Jacobian `[[P_x, P_y], [Q_x, Q_y]]`.
    pub fn jacobian(&self, pt: PlanePoint) -> [[f64; 2]; 2] {
        let (x, y) = (pt.x, pt.y);
        let sum = |hs: &[HomogeneousPoly; 2], f: fn(&HomogeneousPoly, f64, f64) -> f64| {
            hs.iter().map(|h| f(h, x, y)).sum::<f64>()
        };
        [
            [
                sum(&self.p, HomogeneousPoly::d_dx),
                sum(&self.p, HomogeneousPoly::d_dy),
            ],
            [
                sum(&self.q, HomogeneousPoly::d_dx),
                sum(&self.q, HomogeneousPoly::d_dy),
            ],
        ]
    }
}

pub fn eval_cartesian_field(params: &Params, pt: PlanePoint) -> (f64, f64) {
    CartesianField::new(params).eval(pt)
}

pub fn cartesian_divergence(params: &Params, pt: PlanePoint) -> f64 {
    CartesianField::new(params).divergence(pt)
}
