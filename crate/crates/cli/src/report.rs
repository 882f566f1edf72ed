use std::collections::BTreeMap;
use std::fmt::Write;

use ner_forge::metrics::{Interval, MetricIntervals, MetricsReport, Scores};

/// Aligned plain-text table; the first column is left-aligned, the rest right-aligned.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(text, "{cell:<w$}");
            } else {
                let _ = write!(text, "  {cell:>w$}");
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

pub fn key_values(pairs: &[(&str, String)]) -> String {
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|(k, v)| vec![k.to_string(), v.clone()])
        .collect();
    table(&["field", "value"], &rows)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn score_row(name: &str, s: &Scores) -> Vec<String> {
    vec![
        name.to_string(),
        pct(s.precision),
        pct(s.recall),
        pct(s.f1),
        s.tp.to_string(),
        s.fp.to_string(),
        s.fn_.to_string(),
    ]
}

pub fn metrics_table(report: &MetricsReport) -> String {
    let mut rows: Vec<Vec<String>> = report
        .per_class
        .iter()
        .map(|(c, s)| score_row(c.as_str(), s))
        .collect();
    rows.push(score_row("micro", &report.micro));
    table(&["class", "precision", "recall", "f1", "tp", "fp", "fn"], &rows)
}

fn interval(i: &Interval) -> String {
    format!(
        "{} [{}, {}]",
        pct(i.mean),
        pct(i.ci_low),
        pct(i.ci_high)
    )
}

pub fn aggregate_table(run_count: usize, micro: &MetricIntervals, per_class: &BTreeMap<String, MetricIntervals>) -> String {
    let row = |name: &str, m: &MetricIntervals| {
        vec![
            name.to_string(),
            interval(&m.precision),
            interval(&m.recall),
            interval(&m.f1),
        ]
    };
    let mut rows: Vec<Vec<String>> = per_class.iter().map(|(c, m)| row(c, m)).collect();
    rows.push(row("micro", micro));
    let mut out = format!("runs: {run_count} (mean [95% CI])\n");
    out.push_str(&table(&["class", "precision", "recall", "f1"], &rows));
    out
}
