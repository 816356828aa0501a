//! Text and CSV rendering of run results.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;

use crate::runner::{ClusterOutcome, KHistogram, RunReport};

fn num(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

/// Aligned table, best Rand index first.
pub fn format_report(report: &RunReport) -> String {
    let width = report.rows.iter().map(|r| r.name.len()).max().unwrap_or(6).max(6);
    let mut s = String::new();
    writeln!(s, "{}", report.title).unwrap();
    writeln!(
        s,
        "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>9}  {:>7}  note",
        "config", "purity", "F", "pairF", "RI", "time(s)", "runs"
    )
    .unwrap();
    for r in &report.rows {
        writeln!(
            s,
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>9}  {:>7}  {}",
            r.name,
            num(r.purity, 4),
            num(r.fmeasure, 4),
            num(r.pairwise_f, 4),
            num(r.rand, 4),
            num(r.time, 5),
            format!("{}/{}", r.runs, r.reps),
            r.note
        )
        .unwrap();
    }
    s
}

pub fn write_report_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "purity", "fmeasure", "pairwise_f", "rand", "time", "runs", "reps", "note"])?;
    for r in &report.rows {
        w.write_record([
            r.name.clone(),
            num(r.purity, 6),
            num(r.fmeasure, 6),
            num(r.pairwise_f, 6),
            num(r.rand, 6),
            num(r.time, 6),
            r.runs.to_string(),
            r.reps.to_string(),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_histogram(h: &KHistogram) -> String {
    let mut s = String::new();
    writeln!(s, "{}", h.title).unwrap();
    let total = h.total().max(1);
    for (k, c) in h.candidates.iter().zip(&h.counts) {
        let bar = "#".repeat((c * 40).div_ceil(total));
        writeln!(s, "k = {k:<3} {c:>5}  {bar}").unwrap();
    }
    if !h.failed.is_empty() {
        writeln!(s, "failed  {:>5}  first: rep {} ({})", h.failed.len(), h.failed[0].0, h.failed[0].1).unwrap();
    }
    let used: Vec<String> = h.combos_used.iter().map(|(c, n)| format!("{c} x{n}")).collect();
    writeln!(s, "combinations: {}", used.join(", ")).unwrap();
    s
}

pub fn write_histogram_csv<W: Write>(h: &KHistogram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "count"])?;
    for (k, c) in h.candidates.iter().zip(&h.counts) {
        w.write_record([k.to_string(), c.to_string()])?;
    }
    if !h.failed.is_empty() {
        w.write_record(["failed".to_string(), h.failed.len().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_cluster(o: &ClusterOutcome) -> String {
    let mut s = String::new();
    writeln!(s, "configuration {}", o.name).unwrap();
    if let Some(sel) = &o.selection {
        for (k, m) in sel.candidates.iter().zip(&sel.mean_silhouettes) {
            writeln!(s, "  k = {k}: mean silhouette {}", num(*m, 4)).unwrap();
        }
    }
    writeln!(s, "k = {}, cluster sizes {:?}", o.partition.k(), o.partition.sizes()).unwrap();
    if let Some(e) = &o.eval {
        writeln!(
            s,
            "purity {:.4}  F {:.4}  pairF {:.4}  RI {:.4}  time {:.5}s",
            e.purity, e.fmeasure, e.pairwise_f, e.rand, e.time_seconds
        )
        .unwrap();
    }
    s
}

/// One row per curve: its cluster, true label when known, and features.
pub fn write_assignments_csv<W: Write>(o: &ClusterOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["curve".to_string(), "cluster".to_string()];
    if o.sample.labels().is_some() {
        head.push("label".into());
    }
    head.extend(o.features.columns.iter().map(|(k, src)| match src.tag() {
        "_" => k.to_string(),
        t => format!("{k}.{t}"),
    }));
    w.write_record(&head)?;
    for i in 0..o.sample.n_curves() {
        let mut row = vec![i.to_string(), o.partition.assign()[i].to_string()];
        if let Some(l) = o.sample.labels() {
            row.push(l[i].to_string());
        }
        row.extend((0..o.features.n_cols()).map(|c| o.features.values[(i, c)].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::ReportRow;

    #[test]
    fn missing_values_print_as_na() {
        let report = RunReport {
            title: "t".into(),
            rows: vec![ReportRow {
                name: "kmeans._d.MEI".into(),
                purity: None,
                fmeasure: None,
                pairwise_f: None,
                rand: None,
                time: None,
                runs: 0,
                reps: 3,
                note: "inadmissible (3/3)".into(),
            }],
        };
        let text = format_report(&report);
        assert!(text.contains("NA") && text.contains("0/3"), "{text}");
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.lines().nth(1).unwrap().starts_with("kmeans._d.MEI,NA,NA,NA,NA,NA,0,3"), "{csv}");
    }
}
