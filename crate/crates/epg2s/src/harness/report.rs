//! Experiment tables and deterministic report rendering.
//!
//! A table holds per-utterance metric values for every condition, so every
//! printed mean can be recomputed from the stored values. Reports render as
//! markdown or tab-delimited text with fixed 3-decimal formatting; both
//! renderings parse back through the same reader, which is the basis of the
//! round-trip and audit tests.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::metrics::welch_ttest;

/// Marks a p-value as significant in rendered output.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// A named Welch comparison emitted alongside a table (for example one
/// processed-vs-unprocessed test per SNR level).
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceTest {
    pub label: String,
    pub p: f64,
}

/// Rows are experimental conditions, columns are metrics; each cell stores
/// the per-utterance values it averages. An empty cell means the metric was
/// unavailable for that condition (rendered as `n/a`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub title: String,
    pub conditions: Vec<String>,
    pub metrics: Vec<String>,
    /// `values[row][col]` = per-utterance metric values.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Column whose values feed the pairwise condition p-value matrix.
    pub p_metric: usize,
    pub tests: Vec<SignificanceTest>,
}

/// Two-sided Welch p-value with the degenerate cases pinned down: identical
/// samples compare equal (p = 1), zero-variance samples with different means
/// compare maximally different (p = 0), and undersized samples give NaN.
pub fn pairwise_p(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return f64::NAN;
    }
    if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y) {
        return 1.0;
    }
    match welch_ttest(a, b) {
        Ok(r) => r.p,
        Err(_) => 0.0,
    }
}

impl ExperimentTable {
    pub fn new(
        title: impl Into<String>,
        conditions: Vec<String>,
        metrics: Vec<String>,
        values: Vec<Vec<Vec<f64>>>,
        p_metric: usize,
    ) -> Result<Self> {
        if values.len() != conditions.len()
            || values.iter().any(|row| row.len() != metrics.len())
        {
            return Err(Error::Shape(format!(
                "table needs {} x {} cells",
                conditions.len(),
                metrics.len()
            )));
        }
        if p_metric >= metrics.len() {
            return Err(Error::Value(format!("p_metric {p_metric} out of range")));
        }
        Ok(Self {
            title: title.into(),
            conditions,
            metrics,
            values,
            p_metric,
            tests: Vec::new(),
        })
    }

    /// Mean of a cell, `None` when the metric was unavailable.
    pub fn mean(&self, row: usize, col: usize) -> Option<f64> {
        let v = &self.values[row][col];
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Symmetric unit-diagonal matrix of pairwise Welch p-values between
    /// conditions on the designated metric.
    pub fn p_matrix(&self) -> Array2<f64> {
        let n = self.conditions.len();
        let mut m = Array2::from_elem((n, n), 1.0);
        for i in 0..n {
            for j in i + 1..n {
                let p = pairwise_p(
                    &self.values[i][self.p_metric],
                    &self.values[j][self.p_metric],
                );
                m[(i, j)] = p;
                m[(j, i)] = p;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Delimited,
}

fn fmt_mean(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.3}"),
        None => "n/a".into(),
    }
}

fn fmt_p(p: f64) -> String {
    if p.is_nan() {
        "n/a".into()
    } else if p < SIGNIFICANCE_LEVEL {
        format!("{p:.3}*")
    } else {
        format!("{p:.3}")
    }
}

fn emit_row(cells: &[String], format: ReportFormat, out: &mut String) {
    match format {
        ReportFormat::Markdown => {
            out.push_str("| ");
            out.push_str(&cells.join(" | "));
            out.push_str(" |\n");
        }
        ReportFormat::Delimited => {
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
    }
}

fn emit_separator(n: usize, format: ReportFormat, out: &mut String) {
    if format == ReportFormat::Markdown {
        emit_row(&vec!["---".into(); n], format, out);
    }
}

/// Renders tables with their p-value matrices and named tests. Output is a
/// pure function of the input: identical tables give byte-identical text.
pub fn emit_report(tables: &[ExperimentTable], format: ReportFormat) -> String {
    let mut out = String::new();
    for table in tables {
        out.push_str(&format!("## {}\n\n", table.title));
        let mut header = vec!["condition".to_string()];
        header.extend(table.metrics.iter().cloned());
        emit_row(&header, format, &mut out);
        emit_separator(header.len(), format, &mut out);
        for (r, cond) in table.conditions.iter().enumerate() {
            let mut cells = vec![cond.clone()];
            cells.extend((0..table.metrics.len()).map(|c| fmt_mean(table.mean(r, c))));
            emit_row(&cells, format, &mut out);
        }
        out.push('\n');

        out.push_str(&format!("p-values ({}):\n\n", table.metrics[table.p_metric]));
        let p = table.p_matrix();
        let mut header = vec!["vs".to_string()];
        header.extend(table.conditions.iter().cloned());
        emit_row(&header, format, &mut out);
        emit_separator(header.len(), format, &mut out);
        for (i, cond) in table.conditions.iter().enumerate() {
            let mut cells = vec![cond.clone()];
            cells.extend((0..table.conditions.len()).map(|j| fmt_p(p[(i, j)])));
            emit_row(&cells, format, &mut out);
        }
        out.push('\n');

        if !table.tests.is_empty() {
            out.push_str("tests:\n\n");
            emit_row(&["test".into(), "p".into()], format, &mut out);
            emit_separator(2, format, &mut out);
            for t in &table.tests {
                emit_row(&[t.label.clone(), fmt_p(t.p)], format, &mut out);
            }
            out.push('\n');
        }
    }
    out
}

/// Per-utterance audit trail: one `table<TAB>condition<TAB>metric<TAB>index
/// <TAB>value` line per stored value, full precision.
pub fn emit_per_utterance(tables: &[ExperimentTable]) -> String {
    let mut out = String::from("table\tcondition\tmetric\tutterance\tvalue\n");
    for table in tables {
        for (r, cond) in table.conditions.iter().enumerate() {
            for (c, metric) in table.metrics.iter().enumerate() {
                for (i, v) in table.values[r][c].iter().enumerate() {
                    out.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{v:?}\n",
                        table.title, cond, metric, i
                    ));
                }
            }
        }
    }
    out
}

/// Rebuilds tables (at full precision, without named tests) from a
/// per-utterance audit file, preserving the order in which conditions and
/// metrics first appear.
pub fn tables_from_per_utterance(text: &str) -> Result<Vec<ExperimentTable>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("table\tcondition\tmetric\tutterance\tvalue") => {}
        _ => {
            return Err(Error::Format {
                path: "<per-utterance>".into(),
                message: "missing audit header".into(),
            })
        }
    }
    struct Builder {
        title: String,
        conditions: Vec<String>,
        metrics: Vec<String>,
        cells: std::collections::BTreeMap<(usize, usize), Vec<f64>>,
    }
    let mut tables: Vec<Builder> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::Format {
                path: "<per-utterance>".into(),
                message: format!("line {}: expected 5 fields", lineno + 2),
            });
        }
        let v: f64 = f[4].parse().map_err(|_| Error::Format {
            path: "<per-utterance>".into(),
            message: format!("line {}: bad value `{}`", lineno + 2, f[4]),
        })?;
        if tables.last().is_none_or(|t| t.title != f[0]) {
            tables.push(Builder {
                title: f[0].to_string(),
                conditions: Vec::new(),
                metrics: Vec::new(),
                cells: Default::default(),
            });
        }
        let t = tables.last_mut().unwrap();
        let r = match t.conditions.iter().position(|c| c == f[1]) {
            Some(r) => r,
            None => {
                t.conditions.push(f[1].to_string());
                t.conditions.len() - 1
            }
        };
        let c = match t.metrics.iter().position(|m| m == f[2]) {
            Some(c) => c,
            None => {
                t.metrics.push(f[2].to_string());
                t.metrics.len() - 1
            }
        };
        t.cells.entry((r, c)).or_default().push(v);
    }
    tables
        .into_iter()
        .map(|b| {
            let values = (0..b.conditions.len())
                .map(|r| {
                    (0..b.metrics.len())
                        .map(|c| b.cells.get(&(r, c)).cloned().unwrap_or_default())
                        .collect()
                })
                .collect();
            ExperimentTable::new(b.title, b.conditions, b.metrics, values, 0)
        })
        .collect()
}

/// A table read back from a rendered report: rounded means and p-values,
/// with significance stars turned into flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub title: String,
    pub conditions: Vec<String>,
    pub metrics: Vec<String>,
    pub means: Vec<Vec<Option<f64>>>,
    pub p_values: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub tests: Vec<(String, f64)>,
}

fn split_cells(line: &str) -> Vec<String> {
    let line = line.trim();
    let cells: Vec<&str> = if line.contains('|') {
        line.trim_matches('|').split('|').collect()
    } else {
        line.split('\t').collect()
    };
    cells.iter().map(|c| c.trim().to_string()).collect()
}

fn is_separator(cells: &[String]) -> bool {
    cells
        .iter()
        .all(|c| !c.is_empty() && c.chars().all(|ch| ch == '-' || ch == ':'))
}

fn parse_cell(s: &str) -> Result<(Option<f64>, bool)> {
    if s == "n/a" {
        return Ok((None, false));
    }
    let (body, star) = match s.strip_suffix('*') {
        Some(b) => (b, true),
        None => (s, false),
    };
    let v = body
        .parse::<f64>()
        .map_err(|_| Error::Format {
            path: "<report>".into(),
            message: format!("bad numeric cell `{s}`"),
        })?;
    Ok((Some(v), star))
}

/// Parses a rendered report (either format) back into tables.
pub fn parse_report(text: &str) -> Result<Vec<ParsedTable>> {
    #[derive(PartialEq)]
    enum Section {
        Means,
        Pvalues,
        Tests,
    }
    let mut tables: Vec<ParsedTable> = Vec::new();
    let mut section = Section::Means;
    let mut header_pending = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(title) = trimmed.strip_prefix("## ") {
            tables.push(ParsedTable {
                title: title.to_string(),
                conditions: Vec::new(),
                metrics: Vec::new(),
                means: Vec::new(),
                p_values: Vec::new(),
                significant: Vec::new(),
                tests: Vec::new(),
            });
            section = Section::Means;
            header_pending = true;
            continue;
        }
        if trimmed.starts_with("p-values") {
            section = Section::Pvalues;
            header_pending = true;
            continue;
        }
        if trimmed == "tests:" {
            section = Section::Tests;
            header_pending = true;
            continue;
        }
        let table = tables
            .last_mut()
            .ok_or_else(|| Error::Format {
                path: "<report>".into(),
                message: "data before any table title".into(),
            })?;
        let cells = split_cells(trimmed);
        if is_separator(&cells) {
            continue;
        }
        if header_pending {
            if section == Section::Means {
                table.metrics = cells[1..].to_vec();
            }
            header_pending = false;
            continue;
        }
        match section {
            Section::Means => {
                table.conditions.push(cells[0].clone());
                let row: Vec<Option<f64>> = cells[1..]
                    .iter()
                    .map(|c| parse_cell(c).map(|(v, _)| v))
                    .collect::<Result<_>>()?;
                table.means.push(row);
            }
            Section::Pvalues => {
                let mut ps = Vec::new();
                let mut stars = Vec::new();
                for c in &cells[1..] {
                    let (v, star) = parse_cell(c)?;
                    ps.push(v.unwrap_or(f64::NAN));
                    stars.push(star);
                }
                table.p_values.push(ps);
                table.significant.push(stars);
            }
            Section::Tests => {
                let (p, _) = parse_cell(&cells[1])?;
                table.tests.push((cells[0].clone(), p.unwrap_or(f64::NAN)));
            }
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> ExperimentTable {
        let mut t = ExperimentTable::new(
            "generation",
            vec!["pure_epg".into(), "ef".into(), "lf".into()],
            vec!["stoi".into(), "estoi".into(), "pesq".into()],
            vec![
                vec![vec![0.61, 0.63, 0.59], vec![0.48, 0.50, 0.47], vec![]],
                vec![vec![0.70, 0.72, 0.69], vec![0.55, 0.57, 0.54], vec![]],
                vec![vec![0.74, 0.76, 0.73], vec![0.60, 0.62, 0.59], vec![]],
            ],
            0,
        )
        .unwrap();
        t.tests.push(SignificanceTest {
            label: "lf vs pure_epg stoi".into(),
            p: pairwise_p(&[0.74, 0.76, 0.73], &[0.61, 0.63, 0.59]),
        });
        t
    }

    #[test]
    fn means_average_the_stored_values() {
        let t = sample_table();
        assert!((t.mean(0, 0).unwrap() - 0.61).abs() < 1e-12);
        assert_eq!(t.mean(0, 2), None);
    }

    #[test]
    fn p_matrix_is_symmetric_with_unit_diagonal() {
        let t = sample_table();
        let p = t.p_matrix();
        for i in 0..3 {
            assert_eq!(p[(i, i)], 1.0);
            for j in 0..3 {
                assert_eq!(p[(i, j)].to_bits(), p[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn identical_conditions_give_p_one() {
        let v = vec![vec![0.5, 0.6], vec![0.1, 0.2]];
        let t = ExperimentTable::new(
            "same",
            vec!["a".into(), "b".into()],
            vec!["m1".into(), "m2".into()],
            vec![v.clone(), v],
            0,
        )
        .unwrap();
        assert_eq!(t.p_matrix()[(0, 1)], 1.0);
    }

    #[test]
    fn identical_inputs_render_byte_identically() {
        let t = vec![sample_table(), sample_table()];
        for format in [ReportFormat::Markdown, ReportFormat::Delimited] {
            assert_eq!(emit_report(&t, format), emit_report(&t, format));
        }
    }

    #[test]
    fn empty_table_list_renders_empty() {
        assert_eq!(emit_report(&[], ReportFormat::Markdown), "");
        assert_eq!(emit_report(&[], ReportFormat::Delimited), "");
    }

    #[test]
    fn both_formats_parse_back_to_the_same_tables() {
        let tables = vec![sample_table()];
        let md = parse_report(&emit_report(&tables, ReportFormat::Markdown)).unwrap();
        let tsv = parse_report(&emit_report(&tables, ReportFormat::Delimited)).unwrap();
        assert_eq!(md, tsv);
        assert_eq!(md.len(), 1);
        assert_eq!(md[0].conditions, tables[0].conditions);
        assert_eq!(md[0].metrics, tables[0].metrics);
        // parsed means equal the 3-decimal rendering of the true means
        for r in 0..3 {
            for c in 0..3 {
                let expect = tables[0]
                    .mean(r, c)
                    .map(|v| format!("{v:.3}").parse::<f64>().unwrap());
                assert_eq!(md[0].means[r][c], expect);
            }
        }
        assert_eq!(md[0].tests.len(), 1);
    }

    #[test]
    fn audit_trail_reproduces_cell_means() {
        let tables = vec![sample_table()];
        let audit = emit_per_utterance(&tables);
        let mut sums: std::collections::BTreeMap<(String, String), (f64, usize)> =
            Default::default();
        for line in audit.lines().skip(1) {
            let f: Vec<&str> = line.split('\t').collect();
            let e = sums
                .entry((f[1].to_string(), f[2].to_string()))
                .or_insert((0.0, 0));
            e.0 += f[4].parse::<f64>().unwrap();
            e.1 += 1;
        }
        for (r, cond) in tables[0].conditions.iter().enumerate() {
            for (c, metric) in tables[0].metrics.iter().enumerate() {
                let mean = tables[0].mean(r, c);
                let key = (cond.clone(), metric.clone());
                match mean {
                    Some(m) => {
                        let (s, n) = sums[&key];
                        assert!((s / n as f64 - m).abs() < 1e-15);
                    }
                    None => assert!(!sums.contains_key(&key)),
                }
            }
        }
    }

    #[test]
    fn audit_file_round_trips_table_values() {
        let tables = vec![sample_table()];
        let rebuilt = tables_from_per_utterance(&emit_per_utterance(&tables)).unwrap();
        assert_eq!(rebuilt.len(), 1);
        assert_eq!(rebuilt[0].conditions, tables[0].conditions);
        // the all-empty pesq column leaves no trace in the audit file
        assert_eq!(rebuilt[0].metrics, &tables[0].metrics[..2]);
        for r in 0..3 {
            for c in 0..2 {
                assert_eq!(rebuilt[0].values[r][c], tables[0].values[r][c]);
            }
        }
    }

    #[test]
    fn stars_mark_small_p_values() {
        let rendered = fmt_p(0.012);
        assert_eq!(rendered, "0.012*");
        assert_eq!(fmt_p(0.5), "0.500");
        let (v, star) = parse_cell("0.012*").unwrap();
        assert_eq!(v, Some(0.012));
        assert!(star);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let r = ExperimentTable::new(
            "bad",
            vec!["a".into()],
            vec!["m".into()],
            vec![vec![vec![1.0]], vec![vec![2.0]]],
            0,
        );
        assert!(r.is_err());
    }
}
