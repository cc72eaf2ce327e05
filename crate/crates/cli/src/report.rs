//! Summaries of a results directory: one concatenated CSV table, or static
//! SVG line plots of coverage against the swept parameter.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vwlb_core::inference::IntervalMethod;
use vwlb_core::io::{parse_coverage_csv, CoverageRow};

use crate::config::RawConfig;
use crate::{read_text, write_atomic, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(format!("unknown report format `{other}` (expected csv|svg)")),
        }
    }
}

pub const SUMMARY_HEADER: &str = "param,value,n,method,coordinate,coverage,mean_length,sd_length,R";

struct Table {
    param: String,
    value: f64,
    n: usize,
    rows: Vec<CoverageRow>,
}

/// Splits `coverage_delta1.5_n500.csv` into `("delta", 1.5, 500)`.
fn parse_name(name: &str) -> Option<(String, f64, usize)> {
    let stem = name.strip_prefix("coverage_")?.strip_suffix(".csv")?;
    let (head, n) = stem.rsplit_once("_n")?;
    let split = head.find(|c: char| !c.is_ascii_alphabetic())?;
    let (param, value) = head.split_at(split);
    if param.is_empty() {
        return None;
    }
    Some((param.to_string(), value.parse().ok()?, n.parse().ok()?))
}

/// Paths a run would have produced, read from `run.txt` when present.
fn expected_inputs(dir: &Path, meta: Option<&RawConfig>) -> Vec<PathBuf> {
    let listed: Vec<PathBuf> = meta
        .map(|m| {
            m.keys()
                .filter(|k| k.starts_with("point.") && k.ends_with(".file"))
                .filter_map(|k| m.get(k))
                .map(|f| dir.join(f))
                .collect()
        })
        .unwrap_or_default();
    if listed.is_empty() {
        vec![dir.join("coverage_<param><value>_n<n>.csv")]
    } else {
        listed
    }
}

fn load_tables(dir: &Path) -> Result<(Vec<Table>, f64), Error> {
    let meta_path = dir.join("run.txt");
    let meta = if meta_path.exists() { Some(RawConfig::parse(&read_text(&meta_path)?)?) } else { None };
    let level = meta.as_ref().and_then(|m| m.get("level")).and_then(|v| v.parse().ok()).unwrap_or(0.95);
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut tables = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some((param, value, n)) = parse_name(&name) {
            let path = entry.path();
            let rows = parse_coverage_csv(&read_text(&path)?).map_err(|e| match e {
                vwlb_core::Error::Parse(m) => vwlb_core::Error::Parse(format!("{}: {m}", path.display())),
                other => other,
            })?;
            tables.push(Table { param, value, n, rows });
        }
    }
    if tables.is_empty() {
        return Err(Error::MissingInputs { expected: expected_inputs(dir, meta.as_ref()) });
    }
    tables.sort_by(|a, b| (a.n, &a.param).cmp(&(b.n, &b.param)).then(a.value.total_cmp(&b.value)));
    Ok((tables, level))
}

fn summary_csv(tables: &[Table]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for t in tables {
        for r in &t.rows {
            let s = r.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                t.param, t.value, t.n, r.method, r.coordinate, s.coverage, s.mean_length, s.sd_length, r.replicates
            );
        }
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 4] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a"];

struct Series {
    method: IntervalMethod,
    points: Vec<(f64, f64)>,
}

/// Line plot of coverage against the swept parameter on a [0, 1] axis, with
/// a dashed horizontal line at the nominal level.
fn coverage_svg(title: &str, x_label: &str, series: &[Series], level: f64) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |x: f64| MARGIN + (x - lo) / span * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<path class="axis" d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{tick}</text>"#,
            MARGIN - 6.0,
            py(tick) + 4.0
        );
    }
    let ticks: BTreeSet<u64> = xs.iter().map(|x| x.to_bits()).collect();
    for x in ticks.into_iter().map(f64::from_bits) {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{x}</text>"#,
            px(x),
            H - MARGIN + 16.0
        );
    }
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{x_label}</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<line class="reference" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="grey" stroke-dasharray="6 4"/>"#,
        MARGIN,
        W - MARGIN,
        y = py(level)
    );
    for (i, line) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> = line.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-method="{}" points="{}" stroke="{colour}" fill="none" stroke-width="2"/>"#,
            line.method,
            pts.join(" ")
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{colour}">{}</text>"#,
            W - MARGIN - 110.0,
            line.method
        );
    }
    s.push_str("</svg>\n");
    s
}

fn svg_files(tables: &[Table], level: f64, out: &Path) -> Vec<(PathBuf, String)> {
    let mut files = Vec::new();
    let groups: BTreeSet<(usize, String)> = tables.iter().map(|t| (t.n, t.param.clone())).collect();
    for (n, param) in groups {
        let group: Vec<&Table> = tables.iter().filter(|t| t.n == n && t.param == param).collect();
        let dims: BTreeSet<usize> = group.iter().flat_map(|t| t.rows.iter().map(|r| r.coordinate)).collect();
        let series_for = |coord: Option<usize>| -> Vec<Series> {
            IntervalMethod::ALL
                .iter()
                .map(|&method| {
                    let points = group
                        .iter()
                        .filter_map(|t| {
                            let cov: Vec<f64> = t
                                .rows
                                .iter()
                                .filter(|r| r.method == method && coord.is_none_or(|c| r.coordinate == c))
                                .map(|r| r.summary.coverage)
                                .collect();
                            (!cov.is_empty()).then(|| (t.value, cov.iter().sum::<f64>() / cov.len() as f64))
                        })
                        .collect();
                    Series { method, points }
                })
                .collect()
        };
        files.push((
            out.join(format!("coverage_vs_{param}_n{n}.svg")),
            coverage_svg(&format!("Coverage averaged over coordinates, n = {n}"), &param, &series_for(None), level),
        ));
        for k in dims {
            files.push((
                out.join(format!("coverage_vs_{param}_theta{k}_n{n}.svg")),
                coverage_svg(&format!("Coverage of theta_{k}, n = {n}"), &param, &series_for(Some(k)), level),
            ));
        }
    }
    files
}

/// Writes the report for the results in `dir` into `out` (default `dir`).
/// Every output is rendered before anything is written, so a failure leaves
/// no partial files.
pub fn emit_report(dir: &Path, format: ReportFormat, out: Option<&Path>) -> Result<Vec<PathBuf>, Error> {
    let (tables, level) = load_tables(dir)?;
    let out = out.unwrap_or(dir);
    let files = match format {
        ReportFormat::Csv => vec![(out.join("summary.csv"), summary_csv(&tables))],
        ReportFormat::Svg => svg_files(&tables, level, out),
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (path, text) in &files {
        write_atomic(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_round_trip() {
        assert_eq!(parse_name("coverage_delta1.5_n500.csv"), Some(("delta".into(), 1.5, 500)));
        assert_eq!(parse_name("coverage_rho0_n1000.csv"), Some(("rho".into(), 0.0, 1000)));
        assert_eq!(parse_name("coverage_rho-0.5_n10.csv"), Some(("rho".into(), -0.5, 10)));
        assert_eq!(parse_name("summary.csv"), None);
        assert_eq!(parse_name("coverage_n10.csv"), None);
    }
}
