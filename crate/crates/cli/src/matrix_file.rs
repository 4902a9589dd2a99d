//! Headerless comma-separated matrices, one row per line, every value with
//! 17 significant digits so that a write/read round trip is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use rodeodb_core::{Matrix, PointConfiguration};

use crate::error::{CliError, CliResult};

pub fn write_matrix_to<W: Write>(out: W, m: &Matrix) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a rectangular matrix; the error message names the offending line.
pub fn read_matrix_from<R: Read>(input: R) -> Result<Matrix, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("line {}: {len} values, expected {expected_len}", i + 1)
            }
            _ => format!("line {}: {e}", i + 1),
        })?;
        for field in record.iter() {
            let x: f64 = field.parse().map_err(|_| format!("line {}: cannot parse {field:?}", i + 1))?;
            if !x.is_finite() {
                return Err(format!("line {}: non-finite value {field:?}", i + 1));
            }
            values.push(x);
        }
        cols.get_or_insert(record.len());
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_matrix_to(std::io::BufWriter::new(file), m).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    })
}

pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_matrix_from(std::io::BufReader::new(file)).map_err(|msg| CliError::format(path, msg))
}

/// Points are stored one per row, so a `d × T` configuration becomes `T` lines.
pub fn write_points(path: &Path, p: &PointConfiguration) -> CliResult<()> {
    write_matrix(path, &p.coords().transpose())
}

pub fn read_points(path: &Path) -> CliResult<PointConfiguration> {
    let rows = read_matrix(path)?;
    if rows.is_empty() {
        return Err(CliError::format(path, "no points"));
    }
    Ok(PointConfiguration::from_rows(&rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_layout() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, -0.5, 0.1, 3e300]);
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1.0000000000000000e0,-5.0000000000000000e-1\n1.0000000000000001e-1,3.0000000000000002e300\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = read_matrix_from("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        assert!(read_matrix_from("1,x\n".as_bytes()).is_err());
        assert!(read_matrix_from("1,NaN\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            bits in proptest::collection::vec(any::<u64>(), 36),
        ) {
            let vals: Vec<f64> = bits
                .iter()
                .map(|&b| f64::from_bits(b))
                .map(|x| if x.is_finite() { x } else { 1.5 })
                .take(rows * cols)
                .collect();
            let m = Matrix::from_row_slice(rows, cols, &vals);
            let mut buf = Vec::new();
            write_matrix_to(&mut buf, &m).unwrap();
            let back = read_matrix_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back.shape(), m.shape());
            for (a, b) in back.iter().zip(m.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
