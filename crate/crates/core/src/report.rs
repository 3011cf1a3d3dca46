//! Applicant-facing attribution reports.
//!
//! A [`ReportTable`] lists each attribution unit with its reference and
//! declined values, its contribution and its signed share of the total,
//! followed by a footer with both points' probabilities and link-space
//! scores. Contributions print with three decimals and percentages with
//! one; JSON keeps full precision.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attribution::{AttributionPath, AttributionResult, AttributionSpace, PERCENT_GUARD};
use crate::error::{Error, Result};
use crate::model::{DecisionConfig, FeaturePoint, ModelSpec};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub unit: String,
    pub ref_value: Vec<f64>,
    pub declined_value: Vec<f64>,
    pub contribution: f64,
    pub pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFooter {
    pub p_ref: f64,
    pub p_declined: f64,
    pub f_ref: f64,
    pub f_declined: f64,
    /// The attribution total, copied from the result unchanged.
    pub total: f64,
    pub space: AttributionSpace,
    pub threshold: f64,
    pub path: AttributionPath,
    pub eval_count: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
    pub footer: ReportFooter,
    /// Unit names by descending signed contribution.
    pub ranking: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!(
                "unknown format '{other}' (expected json, csv or markdown)"
            )),
        }
    }
}

/// `contribution / total * 100` rounded to one decimal, or `None` when the
/// total is too small for shares to mean anything.
pub fn percentage(contribution: f64, total: f64) -> Option<f64> {
    (total.abs() >= PERCENT_GUARD).then(|| round_to(contribution / total * 100.0, 1))
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let r = (v * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn build_report(
    result: &AttributionResult,
    xd: &FeaturePoint,
    xa: &FeaturePoint,
    model: &ModelSpec,
    cfg: &DecisionConfig,
) -> Result<ReportTable> {
    model.check_point(xd)?;
    model.check_point(xa)?;
    if result.units.len() != result.contributions.len()
        || result.unit_names.len() != result.units.len()
    {
        return Err(Error::InvalidGrouping(
            "attribution result is inconsistent".into(),
        ));
    }
    if let Some(&bad) = result.units.iter().flatten().find(|&&i| i >= xd.len()) {
        return Err(Error::InvalidGrouping(format!(
            "unit refers to feature index {bad} outside the point"
        )));
    }
    let rows = result
        .units
        .iter()
        .enumerate()
        .map(|(u, members)| ReportRow {
            unit: result.unit_names[u].clone(),
            ref_value: members.iter().map(|&i| xa[i]).collect(),
            declined_value: members.iter().map(|&i| xd[i]).collect(),
            contribution: result.contributions[u],
            pct: result.percentages.as_ref().map(|p| p[u]),
        })
        .collect();
    let mut notes = Vec::new();
    if result.percentages.is_none() {
        notes.push(format!("percentages omitted: |total| < {PERCENT_GUARD:e}"));
    }
    if result.space == AttributionSpace::Probability {
        notes.push("contributions decompose p(x^D) - p(x^A)".to_string());
    }
    Ok(ReportTable {
        schema_version: REPORT_SCHEMA_VERSION,
        rows,
        footer: ReportFooter {
            p_ref: model.probability(xa.values()),
            p_declined: model.probability(xd.values()),
            f_ref: model.score(xa.values()),
            f_declined: model.score(xd.values()),
            total: result.total,
            space: result.space,
            threshold: cfg.threshold(),
            path: result.path,
            eval_count: result.eval_count,
            note: (!notes.is_empty()).then(|| notes.join("; ")),
        },
        ranking: result
            .ranking()
            .into_iter()
            .map(|u| result.unit_names[u].clone())
            .collect(),
    })
}

fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    // no "-0.000"
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn joined(values: &[f64], sep: &str) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn pct_cell(pct: Option<f64>) -> String {
    pct.map(|p| fixed(p, 1)).unwrap_or_default()
}

pub fn render_report(table: &ReportTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(table).expect("report serializes") + "\n"
        }
        ReportFormat::Csv => render_csv(table),
        ReportFormat::Markdown => render_markdown(table),
    }
}

fn render_csv(table: &ReportTable) -> String {
    let f = &table.footer;
    let mut out = String::from("unit,ref_value,declined_value,contribution,pct\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&r.unit),
            joined(&r.ref_value, ";"),
            joined(&r.declined_value, ";"),
            fixed(r.contribution, 3),
            pct_cell(r.pct)
        );
    }
    let _ = writeln!(out, "p(x),{},{},,", f.p_ref, f.p_declined);
    let _ = writeln!(out, "f(x),{},{},,", f.f_ref, f.f_declined);
    let _ = writeln!(out, "total,,,{},", fixed(f.total, 3));
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_markdown(table: &ReportTable) -> String {
    let f = &table.footer;
    let heading = match f.space {
        AttributionSpace::Link => "contribution",
        AttributionSpace::Probability => "contribution (p)",
    };
    let mut cells: Vec<[String; 4]> = vec![[
        "unit".into(),
        "x^A".into(),
        "x^D".into(),
        if table.rows.iter().any(|r| r.pct.is_some()) {
            format!("{heading} (%)")
        } else {
            heading.to_string()
        },
    ]];
    for r in &table.rows {
        let share = match r.pct {
            Some(p) => format!("{} ({}%)", fixed(r.contribution, 3), fixed(p, 1)),
            None => fixed(r.contribution, 3),
        };
        cells.push([
            r.unit.clone(),
            r.ref_value
                .iter()
                .map(|v| fixed(*v, 3))
                .collect::<Vec<_>>()
                .join("; "),
            r.declined_value
                .iter()
                .map(|v| fixed(*v, 3))
                .collect::<Vec<_>>()
                .join("; "),
            share,
        ]);
    }
    cells.push([
        "p(x)".into(),
        fixed(f.p_ref, 3),
        fixed(f.p_declined, 3),
        String::new(),
    ]);
    cells.push([
        "f(x)".into(),
        fixed(f.f_ref, 3),
        fixed(f.f_declined, 3),
        String::new(),
    ]);
    cells.push([
        "total".into(),
        String::new(),
        String::new(),
        fixed(f.total, 3),
    ]);

    let widths: Vec<usize> = (0..4)
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0).max(3))
        .collect();
    let line = |row: &[String; 4]| {
        let mut s = String::from("|");
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(s, " {:<w$} |", cell, w = widths[c]);
            } else {
                let _ = write!(s, " {:>w$} |", cell, w = widths[c]);
            }
        }
        s
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", line(&cells[0]));
    let rule: Vec<String> = widths
        .iter()
        .enumerate()
        .map(|(c, w)| {
            if c == 0 {
                format!(":{}", "-".repeat(w + 1))
            } else {
                format!("{}:", "-".repeat(w + 1))
            }
        })
        .collect();
    let _ = writeln!(out, "|{}|", rule.join("|"));
    for row in &cells[1..] {
        let _ = writeln!(out, "{}", line(row));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "reason codes: {}", table.ranking.join(", "));
    let _ = writeln!(
        out,
        "tau = {}, path = {}, evaluations = {}",
        f.threshold,
        serde_json::to_value(f.path)
            .expect("path serializes")
            .as_str()
            .unwrap_or(""),
        f.eval_count
    );
    if let Some(note) = &f.note {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

/// Frequencies of the top one and top two reason codes over many reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReasonSummary {
    pub reports: usize,
    pub top1: BTreeMap<String, usize>,
    pub top2: BTreeMap<String, usize>,
}

impl ReasonSummary {
    pub fn add(&mut self, table: &ReportTable) {
        self.reports += 1;
        for (rank, unit) in table.ranking.iter().take(2).enumerate() {
            if rank == 0 {
                *self.top1.entry(unit.clone()).or_default() += 1;
            }
            *self.top2.entry(unit.clone()).or_default() += 1;
        }
    }

    fn sorted(counts: &BTreeMap<String, usize>) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = counts.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("reason-code summary over {} declined rows\n", self.reports);
        let width = self.top2.keys().map(|k| k.len()).max().unwrap_or(0).max(4);
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}", "unit", "top-1", "top-2");
        for (unit, c2) in Self::sorted(&self.top2) {
            let c1 = self.top1.get(unit).copied().unwrap_or(0);
            let _ = writeln!(out, "{unit:<width$}  {c1:>6}  {c2:>6}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{explain, Grouping};
    use crate::dsl::parse_model_spec;
    use crate::model::FeatureSpace;

    #[test]
    fn percentage_fixtures() {
        assert_eq!(percentage(1.928, 3.241), Some(59.5));
        assert_eq!(percentage(1.010, 3.241), Some(31.2));
        assert_eq!(percentage(-0.008, 3.241), Some(-0.2));
        assert_eq!(percentage(1.0, 1e-9), None);
        assert_eq!(percentage(-0.0001, 3.0), Some(0.0));
    }

    fn sample() -> (ReportTable, AttributionResult) {
        let space = FeatureSpace::numbered(3);
        let m = parse_model_spec("logit: -3 + x1 + 2*x2 - 0.5*x3", &space).unwrap();
        let xd = space.point(vec![1.0, 1.5, 0.2]).unwrap();
        let xa = space.point(vec![0.0, 0.0, 0.0]).unwrap();
        let g = Grouping::from_names(&space, [("a", vec!["x1", "x3"]), ("b", vec!["x2"])]).unwrap();
        let r = explain(&m, &xd, &xa, &g, AttributionSpace::Link).unwrap();
        let t = build_report(&r, &xd, &xa, &m, &DecisionConfig::new(0.25).unwrap()).unwrap();
        (t, r)
    }

    #[test]
    fn table_contents() {
        let (t, r) = sample();
        assert_eq!(t.footer.total, r.total);
        assert_eq!(t.rows[0].ref_value, vec![0.0, 0.0]);
        assert_eq!(t.rows[0].declined_value, vec![1.0, 0.2]);
        assert_eq!(t.ranking, vec!["b", "a"]);
        assert!((t.footer.f_declined - t.footer.f_ref - t.footer.total).abs() < 1e-12);
        assert!(t.footer.note.is_none());
    }

    #[test]
    fn renders() {
        let (t, _) = sample();
        let json = render_report(&t, ReportFormat::Json);
        assert_eq!(serde_json::from_str::<ReportTable>(&json).unwrap(), t);

        let md = render_report(&t, ReportFormat::Markdown);
        let table_lines: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
        // header, rule, 2 units, 3 footer rows
        assert_eq!(table_lines.len(), 7);
        assert!(table_lines[2].contains("0.900 (23.1%)"));
        let width = table_lines[0].len();
        assert!(table_lines.iter().all(|l| l.len() == width));

        let csv = render_report(&t, ReportFormat::Csv);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("unit,ref_value,declined_value,contribution,pct")
        );
        assert_eq!(lines.next(), Some("a,0;0,1;0.2,0.900,23.1"));
        assert!(csv.lines().last().unwrap().starts_with("total,,,3.900"));
    }

    #[test]
    fn identical_points_note_missing_percentages() {
        let space = FeatureSpace::numbered(1);
        let m = parse_model_spec("logit: x1", &space).unwrap();
        let x = space.point(vec![0.5]).unwrap();
        let r = explain(
            &m,
            &x,
            &x,
            &Grouping::singletons(&space),
            AttributionSpace::Link,
        )
        .unwrap();
        let t = build_report(&r, &x, &x, &m, &DecisionConfig::new(0.5).unwrap()).unwrap();
        assert!(t
            .footer
            .note
            .as_deref()
            .unwrap()
            .contains("percentages omitted"));
        assert!(t.rows[0].pct.is_none());
        assert!(!render_report(&t, ReportFormat::Markdown).contains('%'));
    }

    #[test]
    fn reason_summary_counts() {
        let (t, _) = sample();
        let mut s = ReasonSummary::default();
        s.add(&t);
        s.add(&t);
        assert_eq!(s.top1.get("b"), Some(&2));
        assert_eq!(s.top2.get("a"), Some(&2));
        assert!(s.to_text().contains("over 2 declined rows"));
    }
}
