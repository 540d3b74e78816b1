//! Serialization of analyses: a structured JSON report, CSV tables for
//! equilibria, cycles and parameter sweeps, and SVG phase portraits.
//!
//! All plane coordinates are z-plane coordinates, so `r = x^2 + y^2`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abel::{sigma_a, sigma_b, theorem_conditions, SignRegion, TheoremConditions};
use crate::dynamics::{find_limit_cycles, CycleResult};
use crate::equilibria::{
    all_equilibria, classify_region, quadratic_form, Equilibrium, EquilibriumKind, RegionClass, Stability,
};
use crate::error::{Error, Result};
use crate::model::{to_plane, Params, PlanePoint, PolarPoint};
use crate::ode::IntegratorConfig;

pub const TOOL_NAME: &str = "equicycle";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the parameters and integrator settings.
    pub config_hash: String,
}

impl Provenance {
    pub fn new(params: &Params, cfg: &IntegratorConfig) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            config_hash: config_hash(params, cfg),
        }
    }
}

/// Hex SHA-256 of the exact bit patterns of the parameters and tolerances.
pub fn config_hash(params: &Params, cfg: &IntegratorConfig) -> String {
    let mut hasher = Sha256::new();
    for v in [params.p1, params.p2, params.s1, params.s2, cfg.rel_tol, cfg.abs_tol, cfg.initial_step] {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hasher.update((cfg.max_steps as u64).to_le_bytes());
    hasher
        .finalize()
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub params: Params,
    pub region: RegionClass,
    /// Only defined for `|s2| > 1`; both are `None` otherwise.
    pub sigma_a: Option<SignRegion>,
    pub sigma_b: Option<SignRegion>,
    /// Only defined for `s2 > 1`.
    pub conditions: Option<TheoremConditions>,
    pub equilibria: Vec<Equilibrium>,
    pub cycles: Vec<CycleResult>,
    pub provenance: Provenance,
}

/// Region, sign intervals, conditions and equilibria; limit cycles only when
/// `with_cycles` is set.
pub fn analyze(params: &Params, cfg: &IntegratorConfig, with_cycles: bool) -> Result<AnalysisReport> {
    params.check_admissible()?;
    let report = AnalysisReport {
        params: *params,
        region: classify_region(params)?,
        sigma_a: sigma_a(params).ok(),
        sigma_b: sigma_b(params).ok(),
        conditions: theorem_conditions(params).ok(),
        equilibria: all_equilibria(params)?,
        cycles: if with_cycles {
            find_limit_cycles(params, cfg)?
        } else {
            Vec::new()
        },
        provenance: Provenance::new(params, cfg),
    };
    report.validate()?;
    Ok(report)
}

impl AnalysisReport {
    /// Internal consistency: list lengths match the region and every cycle
    /// encloses 1, 13 or 25 equilibria.
    pub fn validate(&self) -> Result<()> {
        if self.equilibria.len() != self.region.count.value() {
            return Err(Error::PreconditionNotMet(format!(
                "{} equilibria listed for a region with {}",
                self.equilibria.len(),
                self.region.count.value()
            )));
        }
        for c in &self.cycles {
            if ![1, 13, 25].contains(&c.enclosed_count) {
                return Err(Error::PreconditionNotMet(format!(
                    "cycle encloses {} equilibria",
                    c.enclosed_count
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        emit_json(self)
    }
}

/// Pretty JSON with a trailing newline; keys follow declaration order.
pub fn emit_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// 15 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.14e}")
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Neutral => "neutral",
    }
}

pub const CSV_HEADER: [&str; 20] = [
    "record",
    "kind",
    "branch",
    "stability",
    "index",
    "r",
    "theta",
    "x",
    "y",
    "eig1_re",
    "eig1_im",
    "eig2_re",
    "eig2_im",
    "abel_fixed_point",
    "multiplier",
    "residual",
    "hyperbolic",
    "enclosed_count",
    "enclosed_index_sum",
    "samples",
];

/// One row per equilibrium, then one per cycle. Fields that do not apply to a
/// record are left empty.
pub fn emit_csv(report: &AnalysisReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for e in &report.equilibria {
        let f = fmt_float;
        let row = [
            "equilibrium".to_string(),
            e.kind.name().to_string(),
            format!("{:?}", e.branch).to_lowercase(),
            stability_name(e.stability).to_string(),
            e.index.to_string(),
            f(e.polar.r),
            f(e.polar.theta),
            f(e.plane.x),
            f(e.plane.y),
            f(e.eigenvalues[0].re),
            f(e.eigenvalues[0].im),
            f(e.eigenvalues[1].re),
            f(e.eigenvalues[1].im),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
        w.write_record(&row).expect("in-memory write");
    }
    for c in &report.cycles {
        let start = c.plane_samples.first().copied().unwrap_or(PlanePoint::new(0.0, 0.0));
        let polar = crate::model::to_polar(start);
        let row = [
            "cycle".to_string(),
            "limit cycle".to_string(),
            String::new(),
            if c.stable { "stable" } else { "unstable" }.to_string(),
            String::new(),
            fmt_float(polar.r),
            fmt_float(polar.theta),
            fmt_float(start.x),
            fmt_float(start.y),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            fmt_float(c.abel_fixed_point),
            fmt_float(c.multiplier),
            fmt_float(c.residual),
            c.hyperbolic.to_string(),
            c.enclosed_count.to_string(),
            c.enclosed_index_sum.to_string(),
            c.plane_samples.len().to_string(),
        ];
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// One node of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Params,
    pub q: f64,
    pub region_count: usize,
    pub cond_i: Option<bool>,
    pub cond_ii: Option<bool>,
    /// `None` when cycles were not requested or the search failed.
    pub cycle_count: Option<usize>,
}

pub fn sweep_row(params: &Params, cfg: &IntegratorConfig, with_cycles: bool) -> Result<SweepRow> {
    let region = classify_region(params)?;
    let conditions = theorem_conditions(params).ok();
    let cycle_count = if with_cycles {
        find_limit_cycles(params, cfg).ok().map(|c| c.len())
    } else {
        None
    };
    Ok(SweepRow {
        params: *params,
        q: quadratic_form(params),
        region_count: region.count.value(),
        cond_i: conditions.map(|c| c.cond_i),
        cond_ii: conditions.map(|c| c.cond_ii),
        cycle_count,
    })
}

pub fn emit_sweep_grid(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p1", "p2", "s1", "s2", "q", "region_count", "cond_i", "cond_ii", "cycle_count"])
        .expect("in-memory write");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for row in rows {
        let p = row.params;
        w.write_record([
            fmt_float(p.p1),
            fmt_float(p.p2),
            fmt_float(p.s1),
            fmt_float(p.s2),
            fmt_float(row.q),
            row.region_count.to_string(),
            opt(row.cond_i.map(|b| b.to_string())),
            opt(row.cond_ii.map(|b| b.to_string())),
            opt(row.cycle_count.map(|n| n.to_string())),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// A curve to draw in a portrait besides the report's own cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitCurve {
    pub role: CurveRole,
    pub points: Vec<PlanePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveRole {
    Separatrix,
    Orbit,
}

/// The critical curve where `d(theta)/dt = 0`, if it exists.
pub fn critical_curve(params: &Params, n: usize) -> Option<Vec<PlanePoint>> {
    (0..=n)
        .map(|i| {
            let theta = TAU * (i % n) as f64 / n as f64;
            params
                .critical_radius(theta)
                .map(|r| to_plane(PolarPoint { r, theta }))
        })
        .collect()
}

const GLYPH_KINDS: [EquilibriumKind; 5] = [
    EquilibriumKind::Focus,
    EquilibriumKind::Center,
    EquilibriumKind::Node,
    EquilibriumKind::Saddle,
    EquilibriumKind::SaddleNode,
];

fn glyph_shape(kind: EquilibriumKind, g: f64) -> String {
    match kind {
        EquilibriumKind::Focus => format!(r#"<circle cx="0" cy="0" r="{g:.9}"/>"#),
        EquilibriumKind::Center => format!(
            r#"<circle cx="0" cy="0" r="{g:.9}" fill="none"/><circle cx="0" cy="0" r="{:.9}"/>"#,
            0.4 * g
        ),
        EquilibriumKind::Node => {
            let h = 0.9 * g;
            format!(r#"<rect x="{:.9}" y="{:.9}" width="{:.9}" height="{:.9}"/>"#, -h, -h, 2.0 * h, 2.0 * h)
        }
        EquilibriumKind::Saddle => format!(
            r#"<path d="M {a:.9} {a:.9} L {b:.9} {b:.9} M {a:.9} {b:.9} L {b:.9} {a:.9}" fill="none"/>"#,
            a = -g,
            b = g
        ),
        EquilibriumKind::SaddleNode => format!(
            r#"<path d="M 0 {t:.9} L {r:.9} {b:.9} L {l:.9} {b:.9} Z"/>"#,
            t = g,
            r = 0.9 * g,
            l = -0.9 * g,
            b = -0.6 * g
        ),
    }
}

fn glyph_id(kind: EquilibriumKind) -> String {
    format!("glyph-{}", kind.name())
}

fn points_attr(points: &[PlanePoint]) -> String {
    let mut s = String::new();
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.9},{:.9}", p.x, p.y);
    }
    s
}

fn path_data(points: &[PlanePoint], closed: bool) -> String {
    let mut s = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(s, "{}{:.9} {:.9} ", if i == 0 { "M " } else { "L " }, p.x, p.y);
    }
    if closed {
        s.push('Z');
    } else {
        s.pop();
    }
    s
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG 1.1 phase portrait: equilibria as glyphs keyed by kind (filled when
/// stable), cycles as closed paths, extra curves as polylines and the critical
/// curve dashed. The drawing is in z-plane coordinates with the y axis up.
pub fn emit_svg_portrait(report: &AnalysisReport, curves: &[PortraitCurve]) -> String {
    let theta_curve = critical_curve(&report.params, 720);
    let all_points = report
        .equilibria
        .iter()
        .map(|e| e.plane)
        .chain(report.cycles.iter().flat_map(|c| c.plane_samples.iter().copied()))
        .chain(curves.iter().flat_map(|c| c.points.iter().copied()))
        .chain(theta_curve.iter().flatten().copied());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all_points.filter(|p| p.x.is_finite() && p.y.is_finite()) {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    // a lone equilibrium still needs a visible window
    let span = (xmax - xmin).max(ymax - ymin).max(1.0);
    let (cx, cy) = (0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    let (w, h) = ((xmax - xmin).max(span * 0.2), (ymax - ymin).max(span * 0.2));
    let (w, h) = (1.2 * w, 1.2 * h);
    let (vx, vy) = (cx - 0.5 * w, -(cy + 0.5 * h));
    let stroke = 0.003 * span;
    let glyph = 0.012 * span;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" version="1.1" width="800" height="{:.0}" viewBox="{vx:.9} {vy:.9} {w:.9} {h:.9}">"#,
        800.0 * h / w
    );
    let p = report.params;
    let _ = writeln!(
        s,
        "<title>{}</title>",
        escape_xml(&format!(
            "Phase portrait, p = {} + {}i, s = {} + {}i; z-plane coordinates (r = x^2 + y^2)",
            p.p1, p.p2, p.s1, p.s2
        ))
    );
    let _ = writeln!(s, "<defs>");
    for kind in GLYPH_KINDS {
        let _ = writeln!(
            s,
            r#"<g id="{}" stroke="black" stroke-width="{:.9}">{}</g>"#,
            glyph_id(kind),
            0.5 * stroke,
            glyph_shape(kind, glyph)
        );
    }
    let _ = writeln!(s, "</defs>");
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" stroke-linejoin="round">"#);
    if let Some(curve) = &theta_curve {
        let _ = writeln!(
            s,
            r#"<path class="critical-curve" d="{}" fill="none" stroke="gray" stroke-width="{:.9}" stroke-dasharray="{:.9},{:.9}"/>"#,
            path_data(&curve[..curve.len() - 1], true),
            stroke,
            4.0 * stroke,
            3.0 * stroke
        );
    }
    for c in curves {
        let (class, color) = match c.role {
            CurveRole::Separatrix => ("separatrix", "steelblue"),
            CurveRole::Orbit => ("orbit", "darkgreen"),
        };
        let _ = writeln!(
            s,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="{:.9}"/>"#,
            points_attr(&c.points),
            0.7 * stroke
        );
    }
    for c in &report.cycles {
        let pts = match c.plane_samples.split_last() {
            Some((last, rest)) if rest.first() == Some(last) => rest,
            _ => &c.plane_samples[..],
        };
        let _ = writeln!(
            s,
            r#"<path class="cycle" d="{}" fill="none" stroke="crimson" stroke-width="{:.9}"/>"#,
            path_data(pts, true),
            1.5 * stroke
        );
    }
    for e in &report.equilibria {
        let fill = match e.stability {
            Stability::Stable => "black",
            Stability::Unstable => "white",
            Stability::Neutral => "gray",
        };
        let _ = writeln!(
            s,
            r##"<use xlink:href="#{}" x="{:.9}" y="{:.9}" fill="{fill}"/>"##,
            glyph_id(e.kind),
            e.plane.x,
            e.plane.y
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.9}" y="{:.9}" font-size="{:.9}" font-family="sans-serif">z-plane (x, y), r = x² + y²</text>"#,
        vx + 0.02 * w,
        vy + 0.05 * h,
        0.03 * span
    );
    let _ = writeln!(s, "</svg>");
    s
}
