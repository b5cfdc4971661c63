use std::path::Path;

use crate::driver::SweepRecord;
use crate::error::{Error, Result};

use super::write_atomic;

const HEADER: [&str; 6] = ["eta", "selected", "frobenius", "accuracy", "ari", "nmi"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Comma-separated table, one row per record; missing metrics are empty
/// fields.
pub fn render_sweep_table(records: &[SweepRecord]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in records {
        let row = [
            r.eta.to_string(),
            r.selected_count.to_string(),
            r.frobenius_objective.to_string(),
            opt(r.accuracy),
            opt(r.ari),
            opt(r.nmi),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_sweep_table(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<()> {
    write_atomic(path.as_ref(), render_sweep_table(records).as_bytes())
}

pub fn read_sweep_table(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let headers = reader.headers().map_err(|e| parse_err(1, 0, e.to_string()))?;
    if headers.iter().ne(HEADER) {
        return Err(parse_err(1, 0, format!("expected header {}", HEADER.join(","))));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(0, 0, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let num = |c: usize| -> Result<Option<f64>> {
            let field = row.get(c).unwrap_or("").trim();
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse()
                .map(Some)
                .map_err(|_| parse_err(line, c + 1, format!("not a number: {field:?}")))
        };
        let required = |c: usize| num(c)?.ok_or_else(|| parse_err(line, c + 1, "missing value".into()));
        let selected = row.get(1).unwrap_or("").trim();
        records.push(SweepRecord {
            eta: required(0)?,
            selected_count: selected
                .parse()
                .map_err(|_| parse_err(line, 2, format!("not a count: {selected:?}")))?,
            frobenius_objective: required(2)?,
            accuracy: num(3)?,
            ari: num(4)?,
            nmi: num(5)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_and_without_metrics() {
        let records = vec![
            SweepRecord {
                eta: 0.5,
                selected_count: 3,
                frobenius_objective: 1.0 / 3.0,
                accuracy: None,
                ari: None,
                nmi: None,
            },
            SweepRecord {
                eta: 1e3,
                selected_count: 120,
                frobenius_objective: 2.5e-7,
                accuracy: Some(0.99),
                ari: Some(-0.01),
                nmi: Some(1.0),
            },
        ];
        let text = render_sweep_table(&records);
        assert!(text.starts_with("eta,selected,frobenius,accuracy,ari,nmi\n0.5,3,"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_sweep_table(&p, &records).unwrap();
        assert_eq!(read_sweep_table(&p).unwrap(), records);
    }
}
