use std::path::Path;

use crate::error::{Error, Result};
use crate::types::LabelAssignment;

use super::write_atomic;

/// Reads one integer label per line (blank lines ignored). Arbitrary integer
/// codes are renumbered `0..k` in ascending order.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelAssignment> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut codes = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let code = line.parse::<i64>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            column: 1,
            message: format!("expected an integer label, found {line:?}"),
        })?;
        codes.push(code);
    }
    if codes.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no labels found".into(),
        });
    }
    LabelAssignment::from_codes(&codes)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_renumbering() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        std::fs::write(&p, "5\n-1\n5\n\n7\n").unwrap();
        assert_eq!(load_labels(&p).unwrap().labels(), &[1, 0, 1, 2]);
        write_labels(&p, &[0, 2, 1]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "0\n2\n1\n");
    }

    #[test]
    fn bad_line_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        std::fs::write(&p, "0\n1\nx\n").unwrap();
        let err = load_labels(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
