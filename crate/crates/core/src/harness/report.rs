use std::fmt::Write as _;
use std::str::FromStr;

use super::{ExperimentSummary, HarnessError, TrialSeries};
use crate::finger::FingerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(HarnessError::UnknownFormat(other.to_string())),
        }
    }
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.decimals$}"))
}

/// Render an experiment summary. The table and JSON forms cover the cells;
/// CSV lists one row per trial.
pub fn render_report(
    summary: &ExperimentSummary,
    format: ReportFormat,
) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(summary)? + "\n"),
        ReportFormat::Table => {
            let mut out = String::new();
            let header = [
                "object",
                "condition",
                "n",
                "success",
                "time_s",
                "slips",
                "deformations",
            ];
            let mut rows = vec![header.map(String::from).to_vec()];
            for c in &summary.cells {
                rows.push(vec![
                    c.object.clone(),
                    c.condition.to_string(),
                    c.n.to_string(),
                    if c.n == 0 {
                        "n/a".into()
                    } else {
                        format!("{}/{}", c.successes, c.n)
                    },
                    fmt_opt(c.mean_completion_time, 2),
                    fmt_opt(c.mean_slip, 2),
                    fmt_opt(c.mean_deformation, 2),
                ]);
            }
            let widths: Vec<usize> = (0..header.len())
                .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
                .collect();
            for (k, row) in rows.iter().enumerate() {
                let line: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (cell, w))| {
                        if i < 2 {
                            format!("{cell:<w$}")
                        } else {
                            format!("{cell:>w$}")
                        }
                    })
                    .collect();
                writeln!(out, "{}", line.join("  ").trim_end()).expect("write to string");
                if k == 0 {
                    let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                    writeln!(out, "{}", "-".repeat(total)).expect("write to string");
                }
            }
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "object",
                "condition",
                "seed",
                "success",
                "completion_time",
                "slip_count",
                "deformation_count",
                "crushed",
                "r_pose_cci",
                "r_pose_eda",
            ])?;
            let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            for t in &summary.trials {
                w.write_record([
                    t.object.clone(),
                    t.condition.to_string(),
                    t.seed.to_string(),
                    t.success.to_string(),
                    t.completion_time.to_string(),
                    t.slip_count.to_string(),
                    t.deformation_count.to_string(),
                    t.crushed.to_string(),
                    opt(t.r_pose_cci),
                    opt(t.r_pose_eda),
                ])?;
            }
            finish_csv(w)
        }
    }
}

/// Plot data for one trial: one row per tick with the zero-based pose,
/// normalised CCI and EDA per finger, front vest columns and activation.
pub fn series_csv(series: &TrialSeries) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "pose".to_string()];
    for prefix in ["cci", "eda", "vest_front"] {
        header.extend(FingerId::ALL.iter().map(|f| format!("{prefix}_{f}")));
    }
    header.push("activation".into());
    w.write_record(&header)?;
    for i in 0..series.len() {
        let mut row = vec![series.t[i].to_string(), series.pose[i].to_string()];
        row.extend(series.cci_norm[i].iter().map(f64::to_string));
        row.extend(series.eda_norm[i].iter().map(f64::to_string));
        row.extend(series.vest_front[i].iter().map(u8::to_string));
        row.push(series.activation[i].to_string());
        w.write_record(&row)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))
}
