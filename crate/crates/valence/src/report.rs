//! CSV and JSON exports of histories, evaluation reports and timelines.

use std::fs;
use std::io::Write;
use std::path::Path;

use valence_core::metrics::{EvalReport, SequenceScores};
use valence_core::train::TrainHistory;

use crate::error::{Error, Result};

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::write(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `epoch,loss,rmse,cc,ccc,seconds`; dev columns are empty without dev data.
pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,loss,rmse,cc,ccc,seconds\n");
    for e in &history.epochs {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            e.epoch,
            e.loss,
            opt(e.dev.map(|s| s.rmse)),
            opt(e.dev.map(|s| s.cc)),
            opt(e.dev.map(|s| s.ccc)),
            e.seconds
        ));
    }
    out
}

pub fn write_history(path: &Path, history: &TrainHistory) -> Result<()> {
    write_text(path, &history_csv(history))
}

/// `sequence_id,n,rmse,cc,ccc`, one row per sequence and a final pooled row.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from("sequence_id,n,rmse,cc,ccc\n");
    let row = |s: &SequenceScores| format!("{},{},{},{},{}\n", s.sequence_id, s.n, s.scores.rmse, s.scores.cc, s.scores.ccc);
    for s in report.sequences.iter().chain([&report.pooled]) {
        out.push_str(&row(s));
    }
    out
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    write_text(path, &report_csv(report))
}

/// Reads the pooled scores back from a report CSV.
pub fn read_pooled(path: &Path) -> Result<valence_core::metrics::Scores> {
    let text = fs::read_to_string(path).map_err(Error::read(path))?;
    let line = text
        .lines()
        .find(|l| l.starts_with(valence_core::metrics::POOLED_ID))
        .ok_or_else(|| Error::parse(path, "no pooled row"))?;
    let f: Vec<f64> = line.split(',').skip(2).filter_map(|v| v.parse().ok()).collect();
    match f[..] {
        [rmse, cc, ccc] => Ok(valence_core::metrics::Scores { rmse, cc, ccc }),
        _ => Err(Error::parse(path, format!("malformed pooled row {line:?}"))),
    }
}

/// One row of the per-frame timeline export.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRow<'a> {
    pub sequence_id: &'a str,
    pub frame_index: usize,
    pub gold: f64,
    pub pred_cnn: f64,
    pub pred_cnn_rnn: Option<f64>,
    pub interpolated: bool,
}

pub fn write_timeline_csv(path: &Path, rows: &[TimelineRow<'_>]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "sequence_id,frame_index,gold,pred_cnn,pred_cnn_rnn,interpolated").expect("vec write");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.sequence_id,
            r.frame_index,
            r.gold,
            r.pred_cnn,
            opt(r.pred_cnn_rnn),
            u8::from(r.interpolated)
        )
        .expect("vec write");
    }
    fs::write(path, out).map_err(Error::write(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use valence_core::metrics::{evaluate_sequences, TimelineRef};
    use valence_core::train::EpochRecord;

    #[test]
    fn report_has_pooled_row_last() {
        let g = [0.1, 0.5, -0.2];
        let report = evaluate_sequences(&[TimelineRef { sequence_id: "s", pred: &g, gold: &g, mask: &[false; 3] }]).unwrap();
        let csv = report_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sequence_id,n,rmse,cc,ccc");
        assert_eq!(lines[1], "s,3,0,1,1");
        assert_eq!(lines[2], "__pooled__,3,0,1,1");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_report(&path, &report).unwrap();
        let pooled = read_pooled(&path).unwrap();
        assert_eq!((pooled.rmse, pooled.cc, pooled.ccc), (0.0, 1.0, 1.0));
    }

    #[test]
    fn history_leaves_dev_columns_empty() {
        let h = TrainHistory { epochs: vec![EpochRecord { epoch: 1, loss: 0.5, dev: None, seconds: 1.25 }] };
        assert_eq!(history_csv(&h), "epoch,loss,rmse,cc,ccc,seconds\n1,0.5,,,,1.250\n");
    }
}
