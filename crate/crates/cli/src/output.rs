use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use etoc_core::{ClosedForm, Formulation, Problem, Solution, TrajectorySample, VerificationReport};
use serde::ser::{Serialize, Serializer};

pub const FREE_SPEED_HEADER: &str = "tau,x,y,theta,v,omega,c1,c2,c3,H";
pub const FIXED_SPEED_HEADER: &str = "tau,x,y,theta,v,omega,z1,z2,z3,z5";

/// Writes `contents` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn header(f: Formulation) -> &'static str {
    match f {
        Formulation::FixedV => FIXED_SPEED_HEADER,
        _ => FREE_SPEED_HEADER,
    }
}

/// One CSV row in [`header`] order.
pub fn row(f: Formulation, s: &TrajectorySample) -> Vec<f64> {
    let mut out = vec![s.tau, s.state.x, s.state.y, s.state.theta, s.control.v, s.control.omega];
    match f {
        Formulation::FixedV => out.extend(s.costates.iter().take(4)),
        _ => {
            out.extend(s.costates.iter().take(3));
            out.push(s.hamiltonian);
        }
    }
    out
}

pub fn trajectory_csv(f: Formulation, samples: &[TrajectorySample]) -> String {
    let mut out = String::from(header(f));
    out.push('\n');
    for s in samples {
        let cells: Vec<String> = row(f, s).into_iter().map(float).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Serializes the inner parameter struct of a [`Solution`].
struct Params<'a>(&'a Solution);

impl Serialize for Params<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Solution::Form1(p) => p.serialize(s),
            Solution::Form2(p) => p.serialize(s),
            Solution::FixedV(p) => p.serialize(s),
        }
    }
}

#[derive(serde::Serialize)]
struct Summary<'a> {
    formulation: Formulation,
    mu: f64,
    target: etoc_core::Target,
    params: Params<'a>,
    tf: f64,
    cost: f64,
    verification: &'a VerificationReport,
}

#[derive(serde::Serialize)]
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

#[derive(serde::Serialize)]
struct SummaryWithTrajectory<'a> {
    #[serde(flatten)]
    summary: Summary<'a>,
    trajectory: Table,
}

fn summary<'a>(problem: &Problem, sol: &'a Solution, cost: f64, report: &'a VerificationReport) -> Summary<'a> {
    Summary {
        formulation: sol.formulation(),
        mu: problem.mu,
        target: problem.target,
        params: Params(sol),
        tf: sol.tf(),
        cost,
        verification: report,
    }
}

pub fn summary_json(problem: &Problem, sol: &Solution, cost: f64, report: &VerificationReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(&summary(problem, sol, cost, report))? + "\n")
}

pub fn full_json(
    problem: &Problem,
    sol: &Solution,
    cost: f64,
    report: &VerificationReport,
    samples: &[TrajectorySample],
) -> Result<String> {
    let f = sol.formulation();
    let doc = SummaryWithTrajectory {
        summary: summary(problem, sol, cost, report),
        trajectory: Table {
            columns: header(f).split(',').collect(),
            rows: samples.iter().map(|s| row(f, s)).collect(),
        },
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// A saved summary read back for verification.
#[derive(serde::Deserialize)]
pub struct SavedSummary {
    pub formulation: Formulation,
    pub mu: f64,
    pub target: etoc_core::Target,
    pub params: serde_json::Value,
}

impl SavedSummary {
    pub fn solution(&self) -> Result<Solution> {
        let tagged = serde_json::json!({ self.formulation.as_str(): self.params });
        serde_json::from_value(tagged).context("parameters do not match the formulation")
    }

    pub fn problem(&self) -> Result<Problem> {
        let t = etoc_core::Target::polar(self.target.r, self.target.alpha)?;
        Ok(Problem::new(self.mu, t, self.formulation)?)
    }
}

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Polylines of `series` with axes through the origin, scaled to a square canvas.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Vec<(f64, f64)>]) -> String {
    let pts = series.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    let px = |x: f64| SVG_MARGIN + (x - x0) * scale;
    let py = |y: f64| SVG_SIZE - SVG_MARGIN - (y - y0) * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        SVG_SIZE / 2.0
    );
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-width="1"/>"##,
        px(x0),
        py(0.0),
        px(x0 + span),
        py(0.0)
    );
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-width="1"/>"##,
        px(0.0),
        py(y0),
        px(0.0),
        py(y0 + span)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        SVG_SIZE - SVG_MARGIN,
        py(0.0) - 4.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{y_label}</text>"#,
        px(0.0) + 4.0,
        SVG_MARGIN
    );
    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = s.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            points.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn path_series(samples: &[TrajectorySample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.state.x, s.state.y)).collect()
}

pub fn control_series(samples: &[TrajectorySample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.control.v, s.control.omega)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use etoc_core::{plan, SearchOptions, Target};

    fn solved(f: Formulation) -> (Problem, Solution) {
        let p = Problem::new(0.5, Target::polar(1.0, 0.5).unwrap(), f).unwrap();
        let (s, _) = plan::solve(&p, None, &SearchOptions::default()).unwrap();
        (p, s)
    }

    #[test]
    fn csv_headers_and_width() {
        for f in [Formulation::Form1, Formulation::Form2, Formulation::FixedV] {
            let (_, s) = solved(f);
            let csv = trajectory_csv(f, &s.samples(5).unwrap());
            let lines: Vec<&str> = csv.lines().collect();
            assert_eq!(lines.len(), 6);
            assert_eq!(lines[0], header(f));
            assert!(lines[1..].iter().all(|l| l.split(',').count() == 10));
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn summary_key_order() {
        let (p, s) = solved(Formulation::Form1);
        let report = etoc_core::verify::check_all(&s, &p, 11);
        let json = summary_json(&p, &s, 1.0, &report).unwrap();
        let keys = [
            "\"formulation\"",
            "\"mu\"",
            "\"target\"",
            "\"r\"",
            "\"alpha_rad\"",
            "\"params\"",
            "\"tf\"",
            "\"cost\"",
            "\"verification\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
    }

    #[test]
    fn saved_summary_round_trip() {
        for f in [Formulation::Form1, Formulation::Form2, Formulation::FixedV] {
            let (p, s) = solved(f);
            let report = etoc_core::verify::check_all(&s, &p, 11);
            let json = summary_json(&p, &s, 1.0, &report).unwrap();
            let saved: SavedSummary = serde_json::from_str(&json).unwrap();
            assert_eq!(saved.solution().unwrap(), s);
            assert_eq!(saved.problem().unwrap().formulation, f);
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let svg = svg_plot("t", "x", "y", &[vec![(0.0, 0.0), (1.0, 1.0)], vec![(0.0, 0.0), (1.0, -1.0)]]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
