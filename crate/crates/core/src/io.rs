//! Plain-text formats: datasets, state snapshots, draw and coverage tables.
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! parsing a written file recovers every value bit for bit.

use std::fmt::Write as _;

use crate::blr::{BlrData, BlrState};
use crate::draws::{DrawMeta, DrawSource, PosteriorDraws};
use crate::error::{Error, Result};
use crate::gmm::GmmState;
use crate::inference::{CoordinateSummary, CoverageReport, IntervalMethod};

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: `{}` is not a number", field.trim())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// One observation per line.
pub fn format_column(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn parse_column(text: &str) -> Result<Vec<f64>> {
    data_lines(text).map(|(i, l)| parse_f64(l, i)).collect()
}

/// Comma-separated design matrix, one row per line.
pub fn format_design(data: &BlrData) -> String {
    let mut out = String::new();
    for i in 0..data.n {
        let row: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Parses a design matrix; returns the row-major values and the column count.
pub fn parse_design(text: &str) -> Result<(Vec<f64>, usize)> {
    let mut values = Vec::new();
    let mut width = None;
    for (i, line) in data_lines(text) {
        let row = line.split(',').map(|f| parse_f64(f, i)).collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse(format!("line {i}: expected {w} columns, found {}", row.len())))
            }
            _ => {}
        }
        values.extend(row);
    }
    Ok((values, width.unwrap_or(0)))
}

pub fn gmm_state_snapshot(state: &GmmState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "k = {}", state.k());
    for (j, (m, s)) in state.m.iter().zip(&state.s2).enumerate() {
        let _ = writeln!(out, "m.{} = {m}", j + 1);
        let _ = writeln!(out, "s2.{} = {s}", j + 1);
    }
    for (i, row) in state.phi.chunks_exact(state.k().max(1)).enumerate() {
        let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "phi.{} = {}", i + 1, row.join(","));
    }
    out
}

pub fn blr_state_snapshot(state: &BlrState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sigma2 = {}", state.sigma2);
    let _ = writeln!(out, "xi = {}", state.xi);
    for j in 0..state.phi.len() {
        let _ = writeln!(out, "phi.{} = {}", j + 1, state.phi[j]);
        let _ = writeln!(out, "mu.{} = {}", j + 1, state.mu[j]);
        let _ = writeln!(out, "s2.{} = {}", j + 1, state.s2[j]);
    }
    out
}

/// `b,converged,elbo,theta_1..theta_d`, one row per stored draw.
pub fn format_draws_csv(draws: &PosteriorDraws) -> String {
    let mut out = String::from("b,converged,elbo");
    for k in 1..=draws.dim() {
        let _ = write!(out, ",theta_{k}");
    }
    out.push('\n');
    for i in 0..draws.n_draws() {
        let meta = draws.meta_for_row(i);
        let converged = meta.is_none_or(|m| m.converged);
        let elbo = meta.map_or(f64::NAN, |m| m.elbo);
        let _ = write!(out, "{},{},{}", draws.replicate_index(i), u8::from(converged), elbo);
        for v in draws.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_draws_csv(text: &str, source: DrawSource, master_seed: u64) -> Result<PosteriorDraws> {
    let mut lines = data_lines(text);
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty draws file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..3] != ["b", "converged", "elbo"] {
        return Err(Error::Parse("draws header must start with b,converged,elbo,theta_1".into()));
    }
    let dim = cols.len() - 3;
    let mut rows = Vec::new();
    let mut metas: Vec<(usize, DrawMeta)> = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(Error::Parse(format!("line {i}: expected {} fields", cols.len())));
        }
        let b: usize = f[0].trim().parse().map_err(|_| Error::Parse(format!("line {i}: bad replicate index")))?;
        let converged = f[1].trim() == "1";
        let elbo = parse_f64(f[2], i)?;
        let theta = f[3..].iter().map(|v| parse_f64(v, i)).collect::<Result<Vec<_>>>()?;
        metas.push((b, DrawMeta { converged, elbo, iterations: 0, failed: false }));
        rows.push((b, theta));
    }
    // Replicates missing from the file were failures.
    let total = metas.iter().map(|(b, _)| b + 1).max().unwrap_or(0);
    let mut per_draw_meta = vec![DrawMeta { converged: false, elbo: f64::NAN, iterations: 0, failed: true }; total];
    for (b, m) in metas {
        per_draw_meta[b] = m;
    }
    PosteriorDraws::new(dim, source, master_seed, rows, per_draw_meta)
}

pub const COVERAGE_HEADER: &str = "method,coordinate,coverage,mean_length,sd_length,R";

pub fn format_coverage_csv(reports: &[CoverageReport]) -> String {
    let mut out = format!("{COVERAGE_HEADER}\n");
    for report in reports {
        for (k, c) in report.per_coordinate.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                report.method,
                k + 1,
                c.coverage,
                c.mean_length,
                c.sd_length,
                report.n_replicates
            );
        }
    }
    out
}

/// One parsed row of a coverage table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRow {
    pub method: IntervalMethod,
    pub coordinate: usize,
    pub summary: CoordinateSummary,
    pub replicates: usize,
}

pub fn parse_coverage_csv(text: &str) -> Result<Vec<CoverageRow>> {
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, h)) if h == COVERAGE_HEADER => {}
        _ => return Err(Error::Parse(format!("coverage header must be `{COVERAGE_HEADER}`"))),
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("line {i}: expected 6 fields")));
            }
            let bad = |what: &str| Error::Parse(format!("line {i}: bad {what}"));
            Ok(CoverageRow {
                method: f[0].parse()?,
                coordinate: f[1].parse().map_err(|_| bad("coordinate"))?,
                summary: CoordinateSummary {
                    coverage: parse_f64(f[2], i)?,
                    mean_length: parse_f64(f[3], i)?,
                    sd_length: parse_f64(f[4], i)?,
                },
                replicates: f[5].parse().map_err(|_| bad("replicate count"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn design_rejects_ragged_rows() {
        assert!(parse_design("1,2\n3\n").is_err());
        let (v, p) = parse_design("# header comment\n1,2\n3,4\n").unwrap();
        assert_eq!((v, p), (vec![1.0, 2.0, 3.0, 4.0], 2));
    }

    #[test]
    fn draws_csv_keeps_replicate_indices() {
        let meta = vec![
            DrawMeta { converged: true, elbo: -3.5, iterations: 4, failed: false },
            DrawMeta { converged: false, elbo: f64::NAN, iterations: 0, failed: true },
            DrawMeta { converged: false, elbo: -1.0, iterations: 9, failed: false },
        ];
        let d = PosteriorDraws::new(2, DrawSource::Vwlb, 9, vec![(0, vec![1.0, 2.0]), (2, vec![0.5, -0.25])], meta)
            .unwrap();
        let text = format_draws_csv(&d);
        assert!(text.starts_with("b,converged,elbo,theta_1,theta_2\n0,1,-3.5,1,2\n2,0,-1,0.5,-0.25\n"));
        let back = parse_draws_csv(&text, DrawSource::Vwlb, 9).unwrap();
        assert_eq!(back.replicate_index(1), 2);
        assert!(back.per_draw_meta[1].failed);
        assert_eq!(back.row(1), d.row(1));
    }

    proptest! {
        #[test]
        fn column_round_trips_bitwise(v in proptest::collection::vec(proptest::num::f64::NORMAL, 1..50)) {
            prop_assert_eq!(parse_column(&format_column(&v)).unwrap(), v);
        }
    }
}
