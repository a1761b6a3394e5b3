//! Parameter-plane sweeps: equilibrium counts per grid cell, certificate
//! overlays, and CSV/SVG export.
//!
//! Grid values sit at cell centers, `min + (i + 1/2) (max - min) / steps`, so
//! open parameter ranges such as `(0, 4)` are never evaluated on their ends.
//! Cells are stored row-major with the `y` axis as the row index. Sweeps run
//! rows in parallel and assemble them in order, so the output does not depend
//! on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::certificates::{self, CertificateId, UpperBoundForm};
use crate::equilibria::{find_equilibria, SolverOptions};
use crate::error::{domain, Error, Result};
use crate::model::{normalize, NormalizedParams, PatchParams, ReactionKind};
use crate::sawtooth;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    /// Center of cell `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * (self.max - self.min) / self.steps as f64
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(domain(format!("{name}: steps must be at least 2, got {}", self.steps)));
        }
        if !(self.min < self.max && self.min.is_finite() && self.max.is_finite()) {
            return Err(domain(format!("{name}: need min < max, got {} and {}", self.min, self.max)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Plane {
    /// `(lambda1, lambda2)` with fixed dispersal and capacities.
    Physical { d: f64, k1: f64, k2: f64 },
    /// `(alpha, beta)` with fixed capacity ratio.
    Normalized { gamma: f64 },
}

impl Plane {
    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            Plane::Physical { .. } => ("lambda1", "lambda2"),
            Plane::Normalized { .. } => ("alpha", "beta"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classifier {
    Numeric(SolverOptions),
    SawtoothExact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub plane: Plane,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub reaction: ReactionKind,
    pub classifier: Classifier,
    pub overlays: Vec<CertificateId>,
}

impl SweepSpec {
    /// `(lambda1, lambda2)` sweep at `D = 1`, `k1 = 1` over `(0, 4)^2`
    /// with the extinction theorem overlaid.
    pub fn lambda_plane(k2: f64, steps: usize) -> Self {
        Self {
            plane: Plane::Physical { d: 1.0, k1: 1.0, k2 },
            x_axis: Axis::new(0.0, 4.0, steps),
            y_axis: Axis::new(0.0, 4.0, steps),
            reaction: ReactionKind::CUBIC_HALF,
            classifier: Classifier::Numeric(SolverOptions::default()),
            overlays: vec![CertificateId::ThmMain],
        }
    }

    /// Exact sawtooth sweep over `(0, 4)^2` in the `(alpha, beta)` plane.
    pub fn sawtooth_plane(gamma: f64, steps: usize) -> Self {
        Self {
            plane: Plane::Normalized { gamma },
            x_axis: Axis::new(0.0, 4.0, steps),
            y_axis: Axis::new(0.0, 4.0, steps),
            reaction: ReactionKind::Sawtooth,
            classifier: Classifier::SawtoothExact,
            overlays: vec![CertificateId::SawtoothPredicate],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.x_axis.validate("x axis")?;
        self.y_axis.validate("y axis")?;
        match self.plane {
            Plane::Physical { d, k1, k2 } => {
                if !(d > 0.0 && k1 > 0.0 && k2 > 0.0) {
                    return Err(domain("D, k1, k2 must be positive"));
                }
                if k2 > k1 {
                    return Err(domain("physical plane expects k2 <= k1"));
                }
                if self.x_axis.min < 0.0 || self.y_axis.min < 0.0 {
                    return Err(domain("reaction strengths must be positive"));
                }
            }
            Plane::Normalized { gamma } => {
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(domain(format!("gamma must lie in (0, 1], got {gamma}")));
                }
                if self.x_axis.min < 0.0 || self.y_axis.min < 0.0 {
                    return Err(domain("alpha and beta must be positive"));
                }
            }
        }
        if let ReactionKind::CubicAllee { a } = self.reaction {
            ReactionKind::cubic(a)?;
        }
        if let Classifier::Numeric(opts) = &self.classifier {
            opts.validate()?;
        }
        if self.classifier == Classifier::SawtoothExact && self.reaction != ReactionKind::Sawtooth {
            return Err(domain("sawtooth-exact classifier needs the sawtooth reaction"));
        }
        for &id in &self.overlays {
            self.check_overlay(id)?;
        }
        Ok(())
    }

    fn check_overlay(&self, id: CertificateId) -> Result<()> {
        let physical = matches!(self.plane, Plane::Physical { .. });
        let ok = match id {
            CertificateId::ThmMain => physical && self.reaction == ReactionKind::CUBIC_HALF,
            CertificateId::Corollary => self.reaction == ReactionKind::CUBIC_HALF,
            CertificateId::ThmGeneralA | CertificateId::ThmGeneralARederived => {
                physical && matches!(self.reaction, ReactionKind::CubicAllee { .. })
            }
            CertificateId::SawtoothPredicate => {
                self.reaction == ReactionKind::Sawtooth && self.gamma() > 0.0 && self.gamma() < 0.5
            }
        };
        if ok {
            Ok(())
        } else {
            Err(domain(format!("overlay {id} is not compatible with this sweep")))
        }
    }

    fn gamma(&self) -> f64 {
        match self.plane {
            Plane::Physical { k1, k2, .. } => k2 / k1,
            Plane::Normalized { gamma } => gamma,
        }
    }

    fn physical_params(&self, p1: f64, p2: f64) -> Result<Option<PatchParams>> {
        match self.plane {
            Plane::Physical { d, k1, k2 } => {
                let a = match self.reaction {
                    ReactionKind::CubicAllee { a } => a,
                    _ => 0.5,
                };
                PatchParams::with_viability(d, p1, p2, k1, k2, a, a).map(Some)
            }
            Plane::Normalized { .. } => Ok(None),
        }
    }

    fn normalized_params(&self, p1: f64, p2: f64) -> Result<NormalizedParams> {
        match self.plane {
            Plane::Physical { .. } => Ok(normalize(&self.physical_params(p1, p2)?.expect("physical"))),
            Plane::Normalized { gamma } => NormalizedParams::new(p1, p2, gamma),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Grid indices `(column, row)`.
    pub index: (usize, usize),
    pub p1: f64,
    pub p2: f64,
    pub count: usize,
    pub degenerate: bool,
    /// One verdict per overlay, in overlay order.
    pub certificates: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub spec: SweepSpec,
    /// Row-major, `steps_x * steps_y` entries.
    pub cells: Vec<Cell>,
}

impl RegionMap {
    pub fn width(&self) -> usize {
        self.spec.x_axis.steps
    }

    pub fn height(&self) -> usize {
        self.spec.y_axis.steps
    }

    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.width() + i]
    }

    /// Number of cells per equilibrium count.
    pub fn count_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for c in &self.cells {
            *h.entry(c.count).or_insert(0) += 1;
        }
        h
    }

    pub fn degenerate_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.degenerate).count()
    }

    fn overlay_index(&self, id: CertificateId) -> Option<usize> {
        self.spec.overlays.iter().position(|&o| o == id)
    }
}

fn classify_cell(spec: &SweepSpec, i: usize, j: usize) -> Result<Cell> {
    let (p1, p2) = (spec.x_axis.value(i), spec.y_axis.value(j));
    let n = spec.normalized_params(p1, p2)?;
    let physical = spec.physical_params(p1, p2)?;
    let (count, degenerate) = match &spec.classifier {
        Classifier::Numeric(opts) => {
            let reactions = match &physical {
                Some(p) => p.reactions(spec.reaction),
                None => spec.reaction.into(),
            };
            let set = find_equilibria(&n, reactions, opts)?;
            (set.len(), set.is_degenerate())
        }
        Classifier::SawtoothExact => {
            let sol = sawtooth::sawtooth_equilibria_exact(&n);
            (sol.len(), sol.is_degenerate())
        }
    };
    let certificates =
        spec.overlays.iter().map(|&id| overlay_verdict(id, physical.as_ref(), &n)).collect::<Result<Vec<_>>>()?;
    Ok(Cell { index: (i, j), p1, p2, count, degenerate, certificates })
}

fn overlay_verdict(id: CertificateId, physical: Option<&PatchParams>, n: &NormalizedParams) -> Result<bool> {
    let need_physical = || physical.ok_or_else(|| domain(format!("{id} needs physical parameters")));
    Ok(match id {
        CertificateId::ThmMain => certificates::check_thm_main(need_physical()?)?.holds,
        CertificateId::Corollary => certificates::check_corollary(n).holds,
        CertificateId::ThmGeneralA => {
            certificates::check_thm_general_a_with(need_physical()?, UpperBoundForm::AsPrinted)?.holds
        }
        CertificateId::ThmGeneralARederived => {
            certificates::check_thm_general_a_with(need_physical()?, UpperBoundForm::Rederived)?.holds
        }
        CertificateId::SawtoothPredicate => sawtooth::thm_sawtooth_predicate(n)?,
    })
}

/// Classifies every cell of the grid using the global rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<RegionMap> {
    spec.validate()?;
    let (nx, ny) = (spec.x_axis.steps, spec.y_axis.steps);
    let rows: Vec<Vec<Cell>> = (0..ny)
        .into_par_iter()
        .map(|j| (0..nx).map(|i| classify_cell(spec, i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionMap { spec: spec.clone(), cells: rows.into_iter().flatten().collect() })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<RegionMap> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| domain(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellDiagnostic {
    pub index: (usize, usize),
    pub p1: f64,
    pub p2: f64,
    pub count: usize,
}

impl From<&Cell> for CellDiagnostic {
    fn from(c: &Cell) -> Self {
        Self { index: c.index, p1: c.p1, p2: c.p2, count: c.count }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContainmentReport {
    pub certificate: Option<CertificateId>,
    /// Non-degenerate cells where the certificate holds.
    pub certified: usize,
    /// Those among them with exactly one equilibrium.
    pub certified_unique: usize,
    /// Certified cells with more than one equilibrium.
    pub violations: Vec<CellDiagnostic>,
    /// For equivalence certificates: uncertified cells with a unique equilibrium.
    pub inverse_violations: Vec<CellDiagnostic>,
    pub excluded_degenerate: usize,
}

impl ContainmentReport {
    /// `certified_unique / certified`; `None` when nothing is certified.
    pub fn fraction(&self) -> Option<f64> {
        (self.certified > 0).then(|| self.certified_unique as f64 / self.certified as f64)
    }
}

/// Soundness of a certificate over a map. Empty when the certificate was not overlaid.
pub fn containment_report(map: &RegionMap, certificate: CertificateId) -> ContainmentReport {
    let Some(k) = map.overlay_index(certificate) else {
        return ContainmentReport::default();
    };
    let mut report = ContainmentReport { certificate: Some(certificate), ..Default::default() };
    for c in &map.cells {
        if c.degenerate {
            report.excluded_degenerate += 1;
            continue;
        }
        let certified = c.certificates[k];
        if certified {
            report.certified += 1;
            if c.count == 1 {
                report.certified_unique += 1;
            } else {
                report.violations.push(c.into());
            }
        } else if certificate.is_iff() && c.count == 1 {
            report.inverse_violations.push(c.into());
        }
    }
    report
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text: `axis1,axis2,count,degenerate,cert_<id>...`, one row per cell.
pub fn to_csv_string(map: &RegionMap) -> String {
    let mut out = String::from("axis1,axis2,count,degenerate");
    for id in &map.spec.overlays {
        write!(out, ",cert_{id}").unwrap();
    }
    out.push('\n');
    for c in &map.cells {
        write!(out, "{},{},{},{}", num(c.p1), num(c.p2), c.count, u8::from(c.degenerate)).unwrap();
        for &b in &c.certificates {
            write!(out, ",{}", u8::from(b)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn export_csv(map: &RegionMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), to_csv_string(map).as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Cells read back from [`to_csv_string`] output.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCsv {
    pub overlays: Vec<CertificateId>,
    /// Cells in file order; grid indices are not stored and come back as `(0, 0)`.
    pub cells: Vec<Cell>,
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..4] != ["axis1", "axis2", "count", "degenerate"] {
        return Err(Error::Parse { line: 1, message: format!("unexpected header `{header}`") });
    }
    let overlays = cols[4..]
        .iter()
        .map(|c| {
            c.strip_prefix("cert_")
                .ok_or_else(|| Error::Parse { line: 1, message: format!("bad column `{c}`") })?
                .parse::<CertificateId>()
                .map_err(|e| Error::Parse { line: 1, message: e.to_string() })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let bad = |m: String| Error::Parse { line: lineno, message: m };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let flag = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(format!("`{s}` is not 0 or 1"))),
        };
        cells.push(Cell {
            index: (0, 0),
            p1: float(fields[0])?,
            p2: float(fields[1])?,
            count: fields[2].parse().map_err(|e| bad(format!("`{}`: {e}", fields[2])))?,
            degenerate: flag(fields[3])?,
            certificates: fields[4..].iter().map(|s| flag(s)).collect::<Result<Vec<_>>>()?,
        });
    }
    Ok(ParsedCsv { overlays, cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvgStyle {
    /// Side of the square plot area in pixels.
    pub plot_size: f64,
    pub margin: f64,
    pub title: Option<String>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self { plot_size: 480.0, margin: 64.0, title: None }
    }
}

const OVERLAY_COLORS: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"];

/// Fill for an equilibrium count: darker for fewer equilibria.
fn gray(count: usize) -> Option<&'static str> {
    match count {
        1 => Some("#404040"),
        3 => Some("#8c8c8c"),
        5 => Some("#cccccc"),
        _ => None,
    }
}

/// Static SVG 1.1 rendering of a region map.
pub fn to_svg_string(map: &RegionMap, style: &SvgStyle) -> String {
    let (nx, ny) = (map.width(), map.height());
    let m = style.margin;
    let size = style.plot_size;
    let (cw, ch) = (size / nx as f64, size / ny as f64);
    let legend_w = 190.0;
    let (w, h) = (size + 2.0 * m + legend_w, size + 2.0 * m);
    let (xname, yname) = map.spec.plane.axis_names();

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    )
    .unwrap();
    s.push_str(concat!(
        "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\">",
        "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>",
        "<path d=\"M0,6 L6,0\" stroke=\"#000000\" stroke-width=\"1\"/></pattern></defs>\n"
    ));
    writeln!(s, r##"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="#ffffff"/>"##).unwrap();
    if let Some(title) = &style.title {
        writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            m + size / 2.0,
            m / 2.0,
            escape(title)
        )
        .unwrap();
    }

    s.push_str("<g id=\"cells\" shape-rendering=\"crispEdges\">\n");
    for c in &map.cells {
        let (i, j) = c.index;
        let x = m + i as f64 * cw;
        let y = m + (ny - 1 - j) as f64 * ch;
        let fill = match gray(c.count) {
            Some(g) if !c.degenerate => g,
            _ => "url(#hatch)",
        };
        writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{fill}"/>"#).unwrap();
    }
    s.push_str("</g>\n");

    for (k, id) in map.spec.overlays.iter().enumerate() {
        let color = OVERLAY_COLORS[k % OVERLAY_COLORS.len()];
        writeln!(s, r#"<g id="cert-{id}" fill="none" stroke="{color}" stroke-width="2">"#).unwrap();
        for run in boundary_runs(map, k) {
            let pts: Vec<String> = run
                .iter()
                .map(|&(gi, gj)| format!("{:.3},{:.3}", m + gi as f64 * cw, m + (ny - gj) as f64 * ch))
                .collect();
            writeln!(s, r#"<polyline points="{}"/>"#, pts.join(" ")).unwrap();
        }
        s.push_str("</g>\n");
    }

    // axes
    writeln!(
        s,
        r##"<rect x="{m:.3}" y="{m:.3}" width="{size:.3}" height="{size:.3}" fill="none" stroke="#000000" stroke-width="1"/>"##
    )
    .unwrap();
    let (xa, ya) = (map.spec.x_axis, map.spec.y_axis);
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let px = m + f * size;
        let py = m + size - f * size;
        let xv = xa.min + f * (xa.max - xa.min);
        let yv = ya.min + f * (ya.max - ya.min);
        writeln!(
            s,
            r##"<line x1="{px:.3}" y1="{:.3}" x2="{px:.3}" y2="{:.3}" stroke="#000000"/>"##,
            m + size,
            m + size + 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{px:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            m + size + 18.0,
            tick(xv)
        )
        .unwrap();
        writeln!(s, r##"<line x1="{:.3}" y1="{py:.3}" x2="{m:.3}" y2="{py:.3}" stroke="#000000"/>"##, m - 5.0).unwrap();
        writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            m - 8.0,
            py + 4.0,
            tick(yv)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13" text-anchor="middle">{xname}</text>"#,
        m + size / 2.0,
        m + size + 40.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 {:.3} {:.3})">{yname}</text>"#,
        m - 42.0,
        m + size / 2.0,
        m - 42.0,
        m + size / 2.0
    )
    .unwrap();

    // legend
    let lx = m + size + 20.0;
    let mut ly = m;
    s.push_str("<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    let entries: [(&str, &str); 4] = [
        ("#404040", "1 equilibrium"),
        ("#8c8c8c", "3 equilibria"),
        ("#cccccc", "5 equilibria"),
        ("url(#hatch)", "other / degenerate"),
    ];
    for (fill, label) in entries {
        writeln!(
            s,
            r##"<rect x="{lx:.3}" y="{ly:.3}" width="14" height="14" fill="{fill}" stroke="#000000" stroke-width="0.5"/>"##
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.3}" y="{:.3}">{label}</text>"#, lx + 20.0, ly + 11.0).unwrap();
        ly += 20.0;
    }
    for (k, id) in map.spec.overlays.iter().enumerate() {
        let color = OVERLAY_COLORS[k % OVERLAY_COLORS.len()];
        writeln!(
            s,
            r#"<line x1="{lx:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="2"/>"#,
            ly + 7.0,
            lx + 14.0,
            ly + 7.0
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.3}" y="{:.3}">{id}</text>"#, lx + 20.0, ly + 11.0).unwrap();
        ly += 20.0;
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn export_svg(map: &RegionMap, path: impl AsRef<Path>, style: &SvgStyle) -> Result<()> {
    write_file(path.as_ref(), to_svg_string(map, style).as_bytes())
}

fn tick(v: f64) -> String {
    let t = format!("{v:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Boundary of the certified set of overlay `k`, as straight runs of grid
/// edges in grid-node coordinates `(i, j)` with `j` counted from the bottom.
fn boundary_runs(map: &RegionMap, k: usize) -> Vec<Vec<(usize, usize)>> {
    let (nx, ny) = (map.width(), map.height());
    let on = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && map.cell(i as usize, j as usize).certificates[k]
    };
    let mut runs = Vec::new();
    // horizontal edges along grid line j, between rows j-1 and j
    for j in 0..=ny as isize {
        let mut start: Option<usize> = None;
        for i in 0..=nx as isize {
            let edge = i < nx as isize && on(i, j - 1) != on(i, j);
            match (edge, start) {
                (true, None) => start = Some(i as usize),
                (false, Some(s0)) => {
                    runs.push(vec![(s0, j as usize), (i as usize, j as usize)]);
                    start = None;
                }
                _ => {}
            }
        }
    }
    // vertical edges along grid line i, between columns i-1 and i
    for i in 0..=nx as isize {
        let mut start: Option<usize> = None;
        for j in 0..=ny as isize {
            let edge = j < ny as isize && on(i - 1, j) != on(i, j);
            match (edge, start) {
                (true, None) => start = Some(j as usize),
                (false, Some(s0)) => {
                    runs.push(vec![(i as usize, s0), (i as usize, j as usize)]);
                    start = None;
                }
                _ => {}
            }
        }
    }
    runs
}
