use std::path::Path;

use crate::error::{Error, Result};
use crate::types::DataMatrix;

use super::{write_atomic, Dataset};

/// Layout of a delimited matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsvOptions {
    /// First line holds feature names.
    pub has_header: bool,
    /// First column holds sample ids.
    pub has_rownames: bool,
    /// Field separator; `None` picks tab if the first line has a tab and no
    /// comma, comma otherwise.
    pub delimiter: Option<u8>,
}

/// Reads a samples-by-features matrix with comma or tab separators.
pub fn load_matrix_csv(path: impl AsRef<Path>, has_header: bool, has_rownames: bool) -> Result<Dataset> {
    load_matrix_csv_with(
        path,
        &CsvOptions {
            has_header,
            has_rownames,
            delimiter: None,
        },
    )
}

fn sniff(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or("");
    if first.contains('\t') && !first.contains(',') {
        b'\t'
    } else {
        b','
    }
}

pub fn load_matrix_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(opts.delimiter.unwrap_or_else(|| sniff(&text)))
        .from_reader(text.as_bytes());

    let skip = usize::from(opts.has_rownames);
    let mut header: Option<Vec<String>> = None;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if opts.has_header && header.is_none() {
            header = Some(record.iter().skip(skip).map(|s| s.trim().to_string()).collect());
            continue;
        }
        let cells = record.len().saturating_sub(skip);
        match width {
            None => width = Some(cells),
            Some(w) if w != cells => {
                return Err(parse_err(
                    line,
                    record.len().min(w + skip) + 1,
                    format!("row {line} has {cells} values, expected {w}"),
                ))
            }
            _ => {}
        }
        if opts.has_rownames {
            ids.push(record.get(0).unwrap_or("").trim().to_string());
        }
        for (c, field) in record.iter().enumerate().skip(skip) {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, c + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, c + 1, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
    }
    let d = match width {
        Some(w) if w > 0 => w,
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: "no numeric data".into(),
            })
        }
    };
    let m = values.len() / d;
    if let Some(h) = &header {
        if h.len() != d {
            return Err(parse_err(
                1,
                0,
                format!("header names {} features but rows have {d}", h.len()),
            ));
        }
    }
    let matrix = DataMatrix::from_shape_vec(m, d, values)?;
    Dataset::new(matrix, header, opts.has_rownames.then_some(ids), None)
}

/// Writes the dataset as comma-separated values with a header line and a
/// leading id column.
pub fn write_matrix_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let path = path.as_ref();
    let to_err = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut header = vec![String::new()];
    header.extend(data.feature_names.iter().cloned());
    writer.write_record(&header).map_err(to_err)?;
    let mut fields = Vec::with_capacity(data.matrix.cols() + 1);
    for (i, id) in data.sample_ids.iter().enumerate() {
        fields.clear();
        fields.push(id.clone());
        fields.extend(data.matrix.row(i).iter().map(|v| v.to_string()));
        writer.write_record(&fields).map_err(to_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, &bytes)
}
