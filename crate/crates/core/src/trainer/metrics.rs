use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::cv::{CvReport, EpochRecord};
use crate::error::Result;

pub const METRICS_HEADER: [&str; 7] = ["epoch", "fold", "level_losses", "hcl", "class_loss", "total", "val_accuracy"];

/// Per-level dual losses joined with `;`, finest level first.
fn level_cell(record: &EpochRecord) -> String {
    let cells: Vec<String> = record.loss.per_level.iter().map(|l| l.dcl.to_string()).collect();
    cells.join(";")
}

pub fn write_metrics<W: Write>(writer: W, records: impl IntoIterator<Item = impl std::borrow::Borrow<EpochRecord>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        let r = r.borrow();
        w.write_record([
            r.epoch.to_string(),
            r.fold.to_string(),
            level_cell(r),
            r.loss.hcl.to_string(),
            r.loss.class_loss.to_string(),
            r.loss.total.to_string(),
            r.val_accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_metrics(path: impl AsRef<Path>, report: &CvReport) -> Result<()> {
    write_metrics(BufWriter::new(File::create(path)?), report.epoch_records())
}

pub fn save_report(path: impl AsRef<Path>, report: &CvReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
