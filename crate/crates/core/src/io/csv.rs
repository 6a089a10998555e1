//! Plain CSV tables (comma separated, one header line, no quoting).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::diagnostics::DiagRecord;
use crate::error::{Error, Result};

/// Exact text form of a float: `parse::<f64>` gives back the same bits.
pub fn cell(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_table<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let names: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
    writeln!(w, "{}", names.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Invariant(format!(
                "row has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Header and rows of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header: Vec<String> = match lines.next() {
        Some(l) => l?.split(',').map(str::to_string).collect(),
        None => return Err(Error::Config(format!("{} is empty", path.display()))),
    };
    let mut rows = Vec::new();
    for l in lines {
        let l = l?;
        if !l.is_empty() {
            rows.push(l.split(',').map(str::to_string).collect());
        }
    }
    Ok((header, rows))
}

pub fn write_diagnostics<'a>(
    path: &Path,
    p_grid: &[f64],
    records: impl IntoIterator<Item = &'a DiagRecord>,
) -> Result<()> {
    let header = DiagRecord::column_names(p_grid);
    let rows: Vec<Vec<String>> = records
        .into_iter()
        .map(|r| r.to_row().into_iter().map(cell).collect())
        .collect();
    write_table(path, &header, &rows)
}

pub fn read_diagnostics(path: &Path) -> Result<(Vec<String>, Vec<DiagRecord>)> {
    let (header, rows) = read_table(path)?;
    let records = rows
        .iter()
        .map(|row| {
            let vals = row
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad number '{c}' in {}", path.display())))
                })
                .collect::<Result<Vec<f64>>>()?;
            DiagRecord::from_row(&vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DEFAULT_P_GRID;

    #[test]
    fn diagnostics_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let row: Vec<f64> = (0..26).map(|i| (i as f64 + 0.1).sqrt() / 7.0 * 1e-9).collect();
        let rec = DiagRecord::from_row(&row).unwrap();
        write_diagnostics(&path, &DEFAULT_P_GRID, [&rec, &rec]).unwrap();
        let (header, back) = read_diagnostics(&path).unwrap();
        assert_eq!(header, DiagRecord::column_names(&DEFAULT_P_GRID));
        assert_eq!(back.len(), 2);
        for (a, b) in back[0].to_row().iter().zip(&row) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        assert!(write_table(&path, &["a", "b"], &[vec!["1".into()]]).is_err());
    }
}
