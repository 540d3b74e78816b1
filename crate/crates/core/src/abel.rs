//! Reduction to the periodic Abel equation `dx/dtheta = A x^3 + B x^2 + C x`.
//!
//! With `c(theta) = s2 + sin 12 theta` and the Cherkas variable
//! `x = r / (p2 + r c(theta))` (that is `x = r / theta'`), substituting into the
//! rescaled polar field gives
//!
//! ```text
//! A(theta) = 2 p1 c^2 / p2 - 2 c (s1 - cos 12 theta)
//! B(theta) = -4 p1 c / p2 + 2 (s1 - cos 12 theta) - 12 cos 12 theta
//! C        = 2 p1 / p2
//! ```
//!
//! The inverse is `r = p2 x / (1 - c x)`; `x = 0` is the origin and the curve
//! `x = 1 / c(theta)` is the image of infinity. Both are periodic solutions.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::equilibria::infinity_integral;
use crate::error::{Error, Result};
use crate::model::Params;

/// Samples per period used by the grid sign checks.
pub const SIGN_GRID: usize = 4096;
/// Multipliers closer than this to 1 count as multiple solutions.
pub const MULTIPLICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelCoeffs {
    pub params: Params,
}

impl AbelCoeffs {
    pub fn a(&self, theta: f64) -> f64 {
        let Params { p1, p2, s1, .. } = self.params;
        let c = self.params.c(theta);
        let cos = (12.0 * theta).cos();
        2.0 * p1 * c * c / p2 - 2.0 * c * (s1 - cos)
    }

    pub fn b(&self, theta: f64) -> f64 {
        let Params { p1, p2, s1, .. } = self.params;
        let c = self.params.c(theta);
        let cos = (12.0 * theta).cos();
        -4.0 * p1 * c / p2 + 2.0 * (s1 - cos) - 12.0 * cos
    }

    pub fn c(&self) -> f64 {
        2.0 * self.params.p1 / self.params.p2
    }

    /// `B` as printed alongside the original reduction. It is kept only so the
    /// discrepancy with the derived coefficient can be shown in tests.
    pub fn printed_b(&self, theta: f64) -> f64 {
        let Params { p1, p2, s1, s2 } = self.params;
        let (sin, cos) = (12.0 * theta).sin_cos();
        2.0 / s2 * (-p1 * s2 - s2 * cos + 2.0 * s1 * sin + 2.0 * p2 * s1)
    }

    pub fn rhs(&self, theta: f64, x: f64) -> f64 {
        ((self.a(theta) * x + self.b(theta)) * x + self.c()) * x
    }

    /// `d(rhs)/dx = 3 A x^2 + 2 B x + C`.
    pub fn linearization(&self, theta: f64, x: f64) -> f64 {
        (3.0 * self.a(theta) * x + 2.0 * self.b(theta)) * x + self.c()
    }

    /// The periodic solution `x = 1 / c(theta)` that corresponds to infinity.
    pub fn infinity_solution(&self, theta: f64) -> f64 {
        1.0 / self.params.c(theta)
    }

    /// Angular return-map multiplier of `x = 0`: `exp(4 pi p1 / p2)`.
    pub fn zero_multiplier(&self) -> f64 {
        (TAU * self.c()).exp()
    }

    /// Angular return-map multiplier of the infinity solution,
    /// `exp(-sgn(s2) 4 pi s1 / sqrt(s2^2 - 1))`.
    pub fn infinity_multiplier(&self) -> Result<f64> {
        Ok(infinity_integral(&self.params)?.exp())
    }
}

pub fn derive_coeffs(params: &Params) -> Result<AbelCoeffs> {
    params.check_admissible()?;
    Ok(AbelCoeffs { params: *params })
}

/// `x = r / (p2 + r c(theta))`.
pub fn cherkas_forward(params: &Params, r: f64, theta: f64) -> Result<f64> {
    let den = params.theta_dot(r, theta);
    if den.abs() < 1e-12 {
        return Err(Error::OnCriticalSet { r, theta });
    }
    Ok(r / den)
}

/// `r = p2 x / (1 - c(theta) x)`.
pub fn cherkas_inverse(params: &Params, x: f64, theta: f64) -> Result<f64> {
    let den = 1.0 - params.c(theta) * x;
    if den.abs() < 1e-12 {
        return Err(Error::AtInfinity { x, theta });
    }
    Ok(params.p2 * x / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignRegion {
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub p1_inside: bool,
}

impl SignRegion {
    fn new(a: f64, b: f64, p1: f64) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Self {
            sigma_minus: lo,
            sigma_plus: hi,
            p1_inside: lo < p1 && p1 < hi,
        }
    }
}

fn require_s2(params: &Params) -> Result<()> {
    if params.s2 * params.s2 <= 1.0 {
        return Err(Error::Inadmissible(format!(
            "s2^2 must exceed 1 (got s2 = {})",
            params.s2
        )));
    }
    Ok(())
}

/// `A` changes sign exactly for `p1` strictly between
/// `(p2 s1 s2 -+ sqrt(p2^2 (s1^2 + s2^2 - 1))) / (s2^2 - 1)`.
pub fn sigma_a(params: &Params) -> Result<SignRegion> {
    require_s2(params)?;
    let Params { p1, p2, s1, s2 } = *params;
    let den = s2 * s2 - 1.0;
    let root = (p2 * p2 * (s1 * s1 + s2 * s2 - 1.0)).sqrt();
    Ok(SignRegion::new(
        (p2 * s1 * s2 - root) / den,
        (p2 * s1 * s2 + root) / den,
        p1,
    ))
}

/// The halved interval `Sigma_A / 2`, which bounds condition (ii).
pub fn sigma_b(params: &Params) -> Result<SignRegion> {
    let a = sigma_a(params)?;
    Ok(SignRegion::new(
        0.5 * a.sigma_minus,
        0.5 * a.sigma_plus,
        params.p1,
    ))
}

/// Exact interval of `p1` on which the derived `B` changes sign:
/// `(p2 s1 s2 -+ |p2| sqrt(s1^2 + 49 (s2^2 - 1))) / (2 (s2^2 - 1))`.
///
/// `-(p2/2) B = (2 p1 s2 - p2 s1) + 2 p1 sin 12 theta + 7 p2 cos 12 theta`, so
/// `B` changes sign iff `(2 p1 s2 - p2 s1)^2 < 4 p1^2 + 49 p2^2`.
pub fn b_sign_interval(params: &Params) -> Result<SignRegion> {
    require_s2(params)?;
    let Params { p1, p2, s1, s2 } = *params;
    let den = 2.0 * (s2 * s2 - 1.0);
    let root = p2.abs() * (s1 * s1 + 49.0 * (s2 * s2 - 1.0)).sqrt();
    Ok(SignRegion::new(
        (p2 * s1 * s2 - root) / den,
        (p2 * s1 * s2 + root) / den,
        p1,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremConditions {
    /// `p1` outside `(Sigma_A^-, Sigma_A^+)`.
    pub cond_i: bool,
    /// `p1` outside `(Sigma_A^- / 2, Sigma_A^+ / 2)`.
    pub cond_ii: bool,
}

pub fn theorem_conditions(params: &Params) -> Result<TheoremConditions> {
    if params.s2 <= 1.0 {
        return Err(Error::Inadmissible(format!(
            "s2 must exceed 1 (got {})",
            params.s2
        )));
    }
    if params.p2 == 0.0 {
        return Err(Error::Inadmissible("p2 must be nonzero".into()));
    }
    Ok(TheoremConditions {
        cond_i: !sigma_a(params)?.p1_inside,
        cond_ii: !sigma_b(params)?.p1_inside,
    })
}

/// Minimum and maximum of a `pi/6`-periodic function from `n` samples per
/// period, each extremum refined by golden-section search in its bracket.
pub fn periodic_range<F: Fn(f64) -> f64>(f: F, n: usize) -> (f64, f64) {
    let period = PI / 6.0;
    let h = period / n as f64;
    let samples: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
    let argmin = (0..n).min_by(|&a, &b| samples[a].total_cmp(&samples[b])).unwrap_or(0);
    let argmax = (0..n).max_by(|&a, &b| samples[a].total_cmp(&samples[b])).unwrap_or(0);
    let refine = |i: usize, sign: f64| {
        let g = |t: f64| sign * f(t);
        let (mut a, mut b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut g1, mut g2) = (g(x1), g(x2));
        for _ in 0..60 {
            if g1 < g2 {
                b = x2;
                x2 = x1;
                g2 = g1;
                x1 = b - phi * (b - a);
                g1 = g(x1);
            } else {
                a = x1;
                x1 = x2;
                g1 = g2;
                x2 = a + phi * (b - a);
                g2 = g(x2);
            }
        }
        sign * g1.min(g2).min(sign * samples[i])
    };
    (refine(argmin, 1.0), refine(argmax, -1.0))
}

pub fn a_changes_sign(coeffs: &AbelCoeffs, n: usize) -> bool {
    let (lo, hi) = periodic_range(|t| coeffs.a(t), n);
    lo < 0.0 && hi > 0.0
}

pub fn b_changes_sign(coeffs: &AbelCoeffs, n: usize) -> bool {
    let (lo, hi) = periodic_range(|t| coeffs.b(t), n);
    lo < 0.0 && hi > 0.0
}

fn multiplicity(multiplier: f64) -> usize {
    if (multiplier - 1.0).abs() > MULTIPLICITY_TOL {
        1
    } else {
        2
    }
}

/// Checks the bound of at most three solutions with `x(0) = x(2 pi)`,
/// counting multiplicities, when `A` or `B` keeps its sign. The list holds the
/// nontrivial solutions as `(x0, multiplier)`; `x = 0` and the infinity
/// solution are added here.
pub fn llibre_bound_check(coeffs: &AbelCoeffs, periodic_solutions: &[(f64, f64)]) -> Result<bool> {
    if crate::model::is_hamiltonian(&coeffs.params) {
        return Err(Error::NotApplicable(
            "center: periodic solutions form a continuum".into(),
        ));
    }
    if a_changes_sign(coeffs, SIGN_GRID) && b_changes_sign(coeffs, SIGN_GRID) {
        return Err(Error::PreconditionNotMet(
            "both A and B change sign".into(),
        ));
    }
    let total = multiplicity(coeffs.zero_multiplier())
        + multiplicity(coeffs.infinity_multiplier()?)
        + periodic_solutions
            .iter()
            .map(|&(_, m)| multiplicity(m))
            .sum::<usize>();
    Ok(total <= 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::quadratic_form;
    use crate::model::eval_polar_field;
    use crate::model::PolarPoint;
    use rand::{Rng, SeedableRng};

    fn params(p1: f64, p2: f64, s1: f64, s2: f64) -> Params {
        Params::new(p1, p2, s1, s2).unwrap()
    }

    fn random_admissible(rng: &mut impl Rng) -> Params {
        let p2 = if rng.gen_bool(0.5) {
            rng.gen_range(-2.0..-0.2)
        } else {
            rng.gen_range(0.2..2.0)
        };
        params(
            rng.gen_range(-4.0..4.0),
            p2,
            rng.gen_range(-1.5..1.5),
            rng.gen_range(1.05..3.0),
        )
    }

    #[test]
    fn c_is_constant_and_matches_origin_multiplier() {
        let co = derive_coeffs(&params(0.8, -1.3, 0.4, 1.7)).unwrap();
        assert!((co.c() - 2.0 * 0.8 / -1.3).abs() < 1e-15);
        assert!((co.zero_multiplier() - (4.0 * PI * 0.8 / -1.3).exp()).abs() < 1e-15);
        let ham = derive_coeffs(&params(0.0, -1.0, 0.0, 1.2)).unwrap();
        assert_eq!(ham.c(), 0.0);
        assert_eq!(ham.zero_multiplier(), 1.0);
        assert!(derive_coeffs(&params(0.0, -1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn coefficients_have_period_pi_over_six() {
        let co = derive_coeffs(&params(1.1, -0.7, 0.3, 1.4)).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..200 {
            let t = rng.gen_range(0.0..TAU);
            assert!((co.a(t + PI / 6.0) - co.a(t)).abs() < 1e-12);
            assert!((co.b(t + PI / 6.0) - co.b(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn abel_field_is_the_polar_field_in_cherkas_variables() {
        // dx/dtheta computed by the chain rule from the polar field
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for _ in 0..500 {
            let pr = random_admissible(&mut rng);
            let co = derive_coeffs(&pr).unwrap();
            let r = rng.gen_range(0.01..5.0);
            let t = rng.gen_range(0.0..TAU);
            let Ok(x) = cherkas_forward(&pr, r, t) else { continue };
            let (rd, td) = eval_polar_field(&pr, PolarPoint { r, theta: t });
            if td.abs() < 1e-3 {
                continue;
            }
            let dr_dtheta = rd / td;
            let c = pr.c(t);
            let dc = 12.0 * (12.0 * t).cos();
            let den = pr.p2 + r * c;
            let dx = (dr_dtheta * den - r * (c * dr_dtheta + r * dc)) / (den * den);
            let rhs = co.rhs(t, x);
            assert!((dx - rhs).abs() <= 1e-9 * (1.0 + dx.abs()), "{dx} vs {rhs}");
        }
    }

    #[test]
    fn printed_b_differs_from_derived_b() {
        let co = derive_coeffs(&params(3.5, -1.0, -0.5, 1.2)).unwrap();
        let worst = (0..64)
            .map(|i| {
                let t = i as f64 * PI / 192.0;
                (co.b(t) - co.printed_b(t)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst > 1.0);
        // the mean of the derived B is 2 pi (-4 p1 s2 / p2 + 2 s1) / 2pi
        let n = 4096;
        let mean: f64 = (0..n).map(|i| co.b(i as f64 * TAU / n as f64)).sum::<f64>() / n as f64;
        assert!((mean - (-4.0 * 3.5 * 1.2 / -1.0 + 2.0 * -0.5)).abs() < 1e-9);
    }

    #[test]
    fn infinity_curve_solves_the_abel_equation() {
        let co = derive_coeffs(&params(1.7, -1.0, -0.5, 1.2)).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.0637;
            let x = co.infinity_solution(t);
            let dx = -12.0 * (12.0 * t).cos() / co.params.c(t).powi(2);
            assert!((co.rhs(t, x) - dx).abs() < 1e-10);
        }
        // multiplier from quadrature of the linearization along it
        let n = 100_000;
        let h = TAU / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                co.linearization(t, co.infinity_solution(t)) * h
            })
            .sum();
        assert!((integral.exp() - co.infinity_multiplier().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn cherkas_examples() {
        let pr = params(0.3, -1.0, -0.5, 1.2);
        assert_eq!(cherkas_forward(&pr, 0.0, 0.4).unwrap(), 0.0);
        assert_eq!(cherkas_inverse(&pr, 0.0, 0.4).unwrap(), 0.0);
        let t = 0.05;
        let far = cherkas_forward(&pr, 1e12, t).unwrap();
        assert!((far - 1.0 / pr.c(t)).abs() < 1e-10);
        assert!(matches!(
            cherkas_forward(&pr, 1.0 / 1.2, 0.0),
            Err(Error::OnCriticalSet { .. })
        ));
        assert!(matches!(
            cherkas_inverse(&pr, 1.0 / pr.c(t), t),
            Err(Error::AtInfinity { .. })
        ));
    }

    #[test]
    fn sigma_a_reference_values() {
        let s = sigma_a(&params(0.0, -1.0, -0.5, 1.2)).unwrap();
        assert!((s.sigma_minus + 0.52423).abs() < 1e-5);
        assert!((s.sigma_plus - 3.25151).abs() < 1e-5);
        let s = sigma_a(&params(0.0, -1.0, 0.0, 2f64.sqrt())).unwrap();
        assert!((s.sigma_minus + 1.0).abs() < 1e-12 && (s.sigma_plus - 1.0).abs() < 1e-12);
        assert!(sigma_a(&params(0.0, -1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn sigma_b_is_half_sigma_a() {
        let s = sigma_b(&params(0.0, -1.0, -0.5, 1.2)).unwrap();
        assert!((s.sigma_minus + 0.262115).abs() < 1e-5);
        assert!((s.sigma_plus - 1.625755).abs() < 1e-5);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let pr = random_admissible(&mut rng);
            let a = sigma_a(&pr).unwrap();
            let b = sigma_b(&pr).unwrap();
            assert!((b.sigma_minus - 0.5 * a.sigma_minus).abs() <= 1e-14 * a.sigma_minus.abs());
            assert!((b.sigma_plus - 0.5 * a.sigma_plus).abs() <= 1e-14 * a.sigma_plus.abs());
        }
    }

    #[test]
    fn a_sign_change_matches_sigma_a_on_grid() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..200 {
            let pr = random_admissible(&mut rng);
            let s = sigma_a(&pr).unwrap();
            // keep away from the boundary where the grid cannot decide
            let margin = 1e-3 * (1.0 + s.sigma_plus.abs() + s.sigma_minus.abs());
            if (pr.p1 - s.sigma_plus).abs() < margin || (pr.p1 - s.sigma_minus).abs() < margin {
                continue;
            }
            let co = derive_coeffs(&pr).unwrap();
            assert_eq!(a_changes_sign(&co, 10_000), s.p1_inside, "{pr:?}");
        }
    }

    #[test]
    fn b_sign_change_matches_its_exact_interval_on_grid() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(10);
        for _ in 0..200 {
            let pr = random_admissible(&mut rng);
            let s = b_sign_interval(&pr).unwrap();
            let margin = 1e-3 * (1.0 + s.sigma_plus.abs() + s.sigma_minus.abs());
            if (pr.p1 - s.sigma_plus).abs() < margin || (pr.p1 - s.sigma_minus).abs() < margin {
                continue;
            }
            let co = derive_coeffs(&pr).unwrap();
            assert_eq!(b_changes_sign(&co, 10_000), s.p1_inside, "{pr:?}");
        }
        // the derived B's interval is wider than Sigma_B for the reference family
        let pr = params(2.0, -1.0, -0.5, 1.2);
        let exact = b_sign_interval(&pr).unwrap();
        let halved = sigma_b(&pr).unwrap();
        assert!(exact.sigma_minus < halved.sigma_minus && exact.sigma_plus > halved.sigma_plus);
        assert!(b_changes_sign(&derive_coeffs(&pr).unwrap(), SIGN_GRID));
    }

    #[test]
    fn a_and_b_sign_changes_are_independent() {
        // B changes sign while A does not
        let pr = params(4.0, -1.0, -0.5, 1.2);
        let co = derive_coeffs(&pr).unwrap();
        assert!(!a_changes_sign(&co, SIGN_GRID) && b_changes_sign(&co, SIGN_GRID));
        // A changes sign while B does not
        let pr = params(-40.0, -1.0, 10.0, 1.2);
        let co = derive_coeffs(&pr).unwrap();
        assert!(a_changes_sign(&co, SIGN_GRID) && !b_changes_sign(&co, SIGN_GRID));
    }

    #[test]
    fn sigma_boundary_is_the_equilibrium_count_boundary() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        for _ in 0..100 {
            let base = random_admissible(&mut rng);
            let s = sigma_a(&base).unwrap();
            for p1 in [s.sigma_minus, s.sigma_plus] {
                let pr = Params { p1, ..base };
                let q = quadratic_form(&pr);
                assert!(q.abs() <= 1e-9 * (p1 * p1 + pr.p2 * pr.p2), "{q}");
            }
        }
    }

    #[test]
    fn theorem_condition_examples() {
        let c = theorem_conditions(&params(3.5, -1.0, -0.5, 1.2)).unwrap();
        assert!(c.cond_i && c.cond_ii);
        let c = theorem_conditions(&params(1.0, -1.0, -0.5, 1.2)).unwrap();
        assert!(!c.cond_i && !c.cond_ii);
        let c = theorem_conditions(&params(2.0, -1.0, -0.5, 1.2)).unwrap();
        assert!(!c.cond_i && c.cond_ii);
        assert!(theorem_conditions(&params(2.0, -1.0, -0.5, -1.2)).is_err());
        assert!(theorem_conditions(&params(2.0, 0.0, -0.5, 1.2)).is_err());
    }

    #[test]
    fn llibre_check_accounting() {
        let co = derive_coeffs(&params(3.5, -1.0, -0.5, 1.2)).unwrap();
        assert!(llibre_bound_check(&co, &[]).unwrap());
        assert!(llibre_bound_check(&co, &[(1.0, 1e-7)]).unwrap());
        assert!(!llibre_bound_check(&co, &[(1.0, 1e-7), (2.0, 3.0)]).unwrap());
        // a multiple solution uses up two slots
        assert!(!llibre_bound_check(&co, &[(1.0, 1.0)]).unwrap());
        let ham = derive_coeffs(&params(0.0, -1.0, 0.0, 1.2)).unwrap();
        assert!(matches!(
            llibre_bound_check(&ham, &[]),
            Err(Error::NotApplicable(_))
        ));
        // inside both intervals neither coefficient keeps its sign
        let both = derive_coeffs(&params(1.0, -1.0, -0.5, 1.2)).unwrap();
        assert!(matches!(
            llibre_bound_check(&both, &[]),
            Err(Error::PreconditionNotMet(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn cherkas_round_trip(r in 0.0f64..20.0, t in 0.0f64..TAU, p2 in -2.0f64..-0.1, s2 in 1.05f64..3.0) {
            let pr = params(0.5, p2, 0.1, s2);
            if let Ok(x) = cherkas_forward(&pr, r, t) {
                if let Ok(back) = cherkas_inverse(&pr, x, t) {
                    proptest::prop_assert!((back - r).abs() <= 1e-12 * (1.0 + r) * (1.0 + x.abs()));
                }
            }
        }
    }
}
