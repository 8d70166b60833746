//! CSV point files: `.` decimals, `\n` line endings, header row on output.

use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

/// Reads rows of reals. A first row that does not parse as numbers is taken
/// as a header and skipped.
pub fn read_points<R: Read>(input: R) -> Result<Vec<Vec<f64>>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = out.first().map(Vec::len) {
                    if first != row.len() {
                        return Err(CsvError::Row { row: i + 1, msg: format!("expected {first} columns, found {}", row.len()) });
                    }
                }
                out.push(row);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CsvError::Row { row: i + 1, msg: e.to_string() }),
        }
    }
    Ok(out)
}

/// Writes `x0, ..., x{n-1}, output` rows with a header.
pub fn write_evaluations<W: Write>(out: W, points: &[Vec<f64>], values: &[f64]) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let dim = points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("output".into());
    w.write_record(&header)?;
    for (p, v) in points.iter().zip(values) {
        let mut rec: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        rec.push(format!("{v:?}"));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional_on_input() {
        let a = read_points("t,x\n0.5,1\n1,2\n".as_bytes()).unwrap();
        let b = read_points("0.5,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![vec![0.5, 1.0], vec![1.0, 2.0]]);
        assert!(read_points("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points("1,2\nx,y\n".as_bytes()).is_err());
    }

    #[test]
    fn output_round_trips() {
        let pts = vec![vec![0.1, -2.0], vec![1.0 / 3.0, 4.0]];
        let vals = vec![1e-300, -0.5];
        let mut buf = Vec::new();
        write_evaluations(&mut buf, &pts, &vals).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,x1,output\n"));
        let back = read_points(text.as_bytes()).unwrap();
        assert_eq!(back[1], vec![1.0 / 3.0, 4.0, -0.5]);
        assert_eq!(back[0][2], 1e-300);
    }
}
