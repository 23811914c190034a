use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{ExpError, RunMetrics, Strategy, SummaryRow};

pub const SUMMARY_HEADER: [&str; 7] = [
    "strategy",
    "drop_prob",
    "runs",
    "detection_rate_mean",
    "detection_rate_se",
    "fpr_mean",
    "fpr_se",
];

pub const VERDICT_HEADER: [&str; 8] = [
    "seed",
    "tick_time_s",
    "node_id",
    "true_label",
    "global_label",
    "n_monitors",
    "n_selfish_votes",
    "total_evidence",
];

/// Formats like C's `%.6g`: six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn label(selfish: bool) -> &'static str {
    if selfish {
        "selfish"
    } else {
        "cooperative"
    }
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), ExpError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.strategy.as_str().to_string(),
            format_sig6(r.drop_prob),
            r.runs.to_string(),
            format_sig6(r.detection_rate_mean),
            format_sig6(r.detection_rate_se),
            format_sig6(r.fpr_mean),
            format_sig6(r.fpr_se),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_verdicts<W: Write>(metrics: &RunMetrics, out: W) -> Result<(), ExpError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VERDICT_HEADER)?;
    for v in &metrics.per_tick_verdicts {
        w.write_record([
            v.seed.to_string(),
            format_sig6(v.tick_time_s),
            v.node.to_string(),
            label(v.true_selfish).to_string(),
            label(v.global_selfish).to_string(),
            v.n_monitors.to_string(),
            v.n_selfish_votes.to_string(),
            v.total_evidence.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<(), ExpError> {
    write_summary(rows, std::fs::File::create(path)?)
}

pub fn emit_verdict_csv(metrics: &RunMetrics, path: &Path) -> Result<(), ExpError> {
    write_verdicts(metrics, std::fs::File::create(path)?)
}

pub fn parse_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>, ExpError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != SUMMARY_HEADER {
        return Err(ExpError::Parse(format!(
            "unexpected summary header {header:?}"
        )));
    }
    let num = |s: &str| -> Result<f64, ExpError> {
        s.parse()
            .map_err(|_| ExpError::Parse(format!("bad number `{s}`")))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let strategy: Strategy = rec[0].parse().map_err(ExpError::Parse)?;
        rows.push(SummaryRow {
            strategy,
            drop_prob: num(&rec[1])?,
            runs: rec[2]
                .parse()
                .map_err(|_| ExpError::Parse(format!("bad run count `{}`", &rec[2])))?,
            detection_rate_mean: num(&rec[3])?,
            detection_rate_se: num(&rec[4])?,
            fpr_mean: num(&rec[5])?,
            fpr_se: num(&rec[6])?,
        });
    }
    Ok(rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, ExpError> {
    parse_summary(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    DetectionRate,
    FalsePositiveRate,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::DetectionRate => "detection_rate",
            Metric::FalsePositiveRate => "false_positive_rate",
        }
    }
}

/// One curve: `(x = drop probability, y = mean, yerr = standard error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub strategy: Strategy,
    pub metric: Metric,
    pub points: Vec<(f64, f64, f64)>,
}

impl Series {
    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.strategy.as_str(), self.metric.as_str())
    }
}

/// One series per (strategy, metric), x descending.
pub fn plotdata(summary: &[SummaryRow]) -> Vec<Series> {
    let mut strategies: Vec<Strategy> = summary.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();
    let mut out = Vec::new();
    for strategy in strategies {
        let mut rows: Vec<&SummaryRow> =
            summary.iter().filter(|r| r.strategy == strategy).collect();
        rows.sort_by(|a, b| b.drop_prob.total_cmp(&a.drop_prob));
        for metric in [Metric::DetectionRate, Metric::FalsePositiveRate] {
            let points = rows
                .iter()
                .map(|r| match metric {
                    Metric::DetectionRate => {
                        (r.drop_prob, r.detection_rate_mean, r.detection_rate_se)
                    }
                    Metric::FalsePositiveRate => (r.drop_prob, r.fpr_mean, r.fpr_se),
                })
                .collect();
            out.push(Series {
                strategy,
                metric,
                points,
            });
        }
    }
    out
}

/// Writes each series to `<dir>/<strategy>_<metric>.csv` with columns
/// `x,y,yerr`.
pub fn write_plotdata(series: &[Series], dir: &Path) -> Result<Vec<PathBuf>, ExpError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for s in series {
        let path = dir.join(s.file_name());
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["x", "y", "yerr"])?;
        for &(x, y, e) in &s.points {
            w.write_record([format_sig6(x), format_sig6(y), format_sig6(e)])?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.5), "0.5");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(format_sig6(1600.0), "1600");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(0.000012345678), "1.23457e-05");
        assert_eq!(format_sig6(0.00012345678), "0.000123457");
        assert_eq!(format_sig6(-0.25), "-0.25");
        assert_eq!(format_sig6(999999.5), "1e+06");
    }

    fn row(strategy: Strategy, p: f64) -> SummaryRow {
        SummaryRow {
            strategy,
            drop_prob: p,
            runs: 10,
            detection_rate_mean: 0.9 * p,
            detection_rate_se: 0.01,
            fpr_mean: 0.02,
            fpr_se: 0.005,
        }
    }

    #[test]
    fn summary_has_header_plus_rows_and_parses_back() {
        let rows = vec![
            row(Strategy::DropReq, 1.0),
            row(Strategy::DropReq, 0.5),
            row(Strategy::DropReq, 0.1),
        ];
        let mut buf = Vec::new();
        write_summary(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER.join(","));
        let back = parse_summary(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[2].drop_prob, 0.1);
        assert_eq!(back[1].detection_rate_mean, 0.45);
    }

    #[test]
    fn plot_series_shapes() {
        let rows = vec![
            row(Strategy::DropReq, 0.1),
            row(Strategy::DropReq, 1.0),
            row(Strategy::DropRep, 0.5),
        ];
        let series = plotdata(&rows);
        assert_eq!(series.len(), 4);
        let xs: Vec<f64> = series[0].points.iter().map(|p| p.0).collect();
        assert_eq!(xs, vec![1.0, 0.1]);
        assert_eq!(series[0].file_name(), "dropreq_detection_rate.csv");
        assert_eq!(series[3].file_name(), "droprep_false_positive_rate.csv");
        assert_eq!(series[2].points.len(), 1);
    }
}
