//! Curve datasets as CSV: one curve per row, an optional first row holding
//! the grid and an optional `label` column.
//!
//! ```text
//! 1,2,3,4,label
//! 0.1,0.5,0.9,1.2,girl
//! 0.2,0.4,1.1,1.3,boy
//! ```

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use epiclust::{FunctionalSample, Grid};
use nalgebra::DMatrix;

/// Whether the first row holds grid values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderMode {
    /// Header present iff the first row has a non-numeric cell such as `label`.
    Auto,
    Present,
    Absent,
}

impl std::str::FromStr for HeaderMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(HeaderMode::Auto),
            "yes" => Ok(HeaderMode::Present),
            "no" => Ok(HeaderMode::Absent),
            _ => bail!("header must be `auto`, `yes` or `no`, got `{s}`"),
        }
    }
}

/// A parsed dataset. Labels are numbered by first appearance and
/// `label_names[i]` is the text of label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sample: FunctionalSample,
    pub label_names: Vec<String>,
}

pub fn read_csv(path: &Path, header: HeaderMode) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_csv(&text, header).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse_csv(text: &str, header: HeaderMode) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        bail!("no rows");
    }
    let has_header = match header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => rows[0].1.iter().any(|c| c.parse::<f64>().is_err()),
    };
    let width = rows[0].1.len();
    let (grid_cells, label_col, data) = if has_header {
        let (_, head) = &rows[0];
        let label_col = head.iter().position(|c| c.eq_ignore_ascii_case("label"));
        let mut grid = Vec::with_capacity(width);
        for (c, cell) in head.iter().enumerate() {
            if Some(c) == label_col {
                continue;
            }
            grid.push(
                cell.parse::<f64>()
                    .map_err(|_| anyhow!("header, column {}: `{cell}` is not a grid value", c + 1))?,
            );
        }
        (Some(grid), label_col, &rows[1..])
    } else {
        (None, None, &rows[..])
    };
    if data.is_empty() {
        bail!("no data rows");
    }
    let m = width - usize::from(label_col.is_some());
    let mut values = DMatrix::zeros(data.len(), m);
    let mut label_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(data.len());
    for (i, (line, cells)) in data.iter().enumerate() {
        if cells.len() != width {
            bail!("row {line}: expected {width} fields, found {}", cells.len());
        }
        let mut j = 0;
        for (c, cell) in cells.iter().enumerate() {
            if Some(c) == label_col {
                if cell.is_empty() {
                    bail!("row {line}, column {}: empty label", c + 1);
                }
                let id = match label_names.iter().position(|n| n == cell) {
                    Some(id) => id,
                    None => {
                        label_names.push(cell.clone());
                        label_names.len() - 1
                    }
                };
                labels.push(id);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| anyhow!("row {line}, column {}: `{cell}` is not a number", c + 1))?;
            if !v.is_finite() {
                bail!("row {line}, column {}: value is not finite", c + 1);
            }
            values[(i, j)] = v;
            j += 1;
        }
    }
    let grid = match grid_cells {
        Some(g) => Grid::new(g)?,
        None => Grid::new((0..m).map(|t| t as f64).collect())?,
    };
    let labels = label_col.map(|_| labels);
    Ok(Dataset {
        sample: FunctionalSample::new(values, grid, labels)?,
        label_names,
    })
}

/// Writes `sample` with a grid header and, when present, a `label` column.
pub fn write_csv<W: Write>(sample: &FunctionalSample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut head: Vec<String> = sample.grid().points().iter().map(|t| t.to_string()).collect();
    if sample.labels().is_some() {
        head.push("label".into());
    }
    w.write_record(&head)?;
    for i in 0..sample.n_curves() {
        let mut row: Vec<String> = sample.curve(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = sample.labels() {
            row.push(l[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_labels() {
        let d = parse_csv("1,2,3,4,label\n0,1,2,3,a\n1,1,1,1,b\n2,2,2,2,a\n", HeaderMode::Auto).unwrap();
        assert_eq!(d.sample.n_curves(), 3);
        assert_eq!(d.sample.n_points(), 4);
        assert_eq!(d.sample.grid().points(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.sample.labels(), Some(&[0, 1, 0][..]));
        assert_eq!(d.label_names, vec!["a", "b"]);
    }

    #[test]
    fn headerless_defaults_grid() {
        let d = parse_csv("0,1,2,3\n1,1,1,1\n", HeaderMode::Auto).unwrap();
        assert_eq!(d.sample.grid().points(), &[0.0, 1.0, 2.0, 3.0]);
        assert!(d.sample.labels().is_none());
        let d = parse_csv("0,1,2,3\n1,1,1,1\n5,6,7,8\n", HeaderMode::Present).unwrap();
        assert_eq!(d.sample.n_curves(), 2);
    }

    #[test]
    fn errors_name_rows_and_columns() {
        let e = parse_csv("0,1,2,3\n1,1,1\n", HeaderMode::Auto).unwrap_err();
        assert!(e.to_string().contains("row 2"), "{e}");
        let e = parse_csv("0,1,2,3\n1,x,1,1\n", HeaderMode::Absent).unwrap_err();
        assert!(e.to_string().contains("row 2, column 2"), "{e}");
        let e = parse_csv("a,b,c,d\n1,2,3,4\n5,6,7,8\n", HeaderMode::Auto).unwrap_err();
        assert!(e.to_string().contains("header, column 1"), "{e}");
    }

    #[test]
    fn round_trip() {
        let d = parse_csv("0,0.5,1,1.5,label\n0.25,1,2,3,0\n1,1,1,1e-3,1\n", HeaderMode::Auto).unwrap();
        let mut buf = Vec::new();
        write_csv(&d.sample, &mut buf).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap(), HeaderMode::Auto).unwrap();
        assert_eq!(back.sample, d.sample);
    }
}
