//! Two-column CSV samples.

use std::path::Path;

use concordia_core::Sample;

use crate::CliError;

fn parse_row(record: &csv::StringRecord) -> Option<(f64, f64)> {
    if record.len() != 2 {
        return None;
    }
    let x: f64 = record[0].trim().parse().ok()?;
    let y: f64 = record[1].trim().parse().ok()?;
    Some((x, y))
}

/// Reads a sample, skipping a leading header row if its cells are not numeric.
pub fn read_sample(path: &Path) -> Result<Sample, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_sample_from(file, &path.display().to_string())
}

pub fn read_sample_from<R: std::io::Read>(reader: R, source: &str) -> Result<Sample, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut pairs = Vec::new();
    let mut first = true;
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Malformed { file: source.into(), line, reason: e.to_string() }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record) {
            Some((x, y)) if x.is_finite() && y.is_finite() => pairs.push((x, y)),
            Some(_) => {
                return Err(CliError::Malformed { file: source.into(), line, reason: "non-finite value".into() })
            }
            None if first && record.len() == 2 => {}
            None => {
                let reason = if record.len() != 2 {
                    format!("expected 2 columns, found {}", record.len())
                } else {
                    format!("non-numeric cell in {:?}", record.iter().collect::<Vec<_>>())
                };
                return Err(CliError::Malformed { file: source.into(), line, reason });
            }
        }
        first = false;
    }
    if pairs.len() < 2 {
        return Err(CliError::Malformed {
            file: source.into(),
            line: 0,
            reason: format!("need at least 2 data rows, found {}", pairs.len()),
        });
    }
    Sample::from_pairs(&pairs).map_err(CliError::Core)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Sample, CliError> {
        read_sample_from(text.as_bytes(), "test.csv")
    }

    #[test]
    fn header_is_optional() {
        assert_eq!(read("x,y\n1,2\n3,4\n").unwrap().len(), 2);
        assert_eq!(read("1,2\n3,4\n5,6\n").unwrap().len(), 3);
        assert_eq!(read(" 1 , 2\n3,4e0\n").unwrap().second(), &[2.0, 4.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "x,y\n1,2\n2,3\n3,4\n4,5\n5,6\n6,abc\n7,8\n";
        match read(text) {
            Err(CliError::Malformed { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read("1,2,3\n4,5,6\n"), Err(CliError::Malformed { line: 1, .. })));
        assert!(matches!(read("1,2\n3\n"), Err(CliError::Malformed { line: 2, .. })));
        assert!(matches!(read("x,y\n1,2\n"), Err(CliError::Malformed { .. })));
        assert!(matches!(read("1,NaN\n1,2\n"), Err(CliError::Malformed { line: 1, .. })));
    }
}
