use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointConfiguration;
use crate::Matrix;

const COORD_COLUMNS: [(usize, usize); 3] = [(30, 38), (38, 46), (46, 54)];

/// Reads a PDB-format file; see [`parse_pdb`].
pub fn load_protein(path: impl AsRef<Path>) -> Result<PointConfiguration> {
    let text = std::fs::read_to_string(path)?;
    parse_pdb(&text)
}

/// One point per `ATOM`/`HETATM` record, in order of appearance, from the
/// fixed coordinate columns 31–38, 39–46 and 47–54. The cloud is centred.
pub fn parse_pdb(text: &str) -> Result<PointConfiguration> {
    let mut xyz: Vec<f64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let record = line.get(..6).unwrap_or(line).trim_end();
        if record != "ATOM" && record != "HETATM" {
            continue;
        }
        for (lo, hi) in COORD_COLUMNS {
            let field = line.get(lo..hi).ok_or_else(|| Error::MalformedRecord {
                line: lineno + 1,
                message: format!("{record} record too short for coordinate columns {}-{hi}", lo + 1),
            })?;
            let value: f64 = field.trim().parse().map_err(|_| Error::MalformedRecord {
                line: lineno + 1,
                message: format!("cannot parse coordinate {:?} in columns {}-{hi}", field.trim(), lo + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::MalformedRecord { line: lineno + 1, message: "non-finite coordinate".into() });
            }
            xyz.push(value);
        }
    }
    if xyz.is_empty() {
        return Err(Error::EmptyInput("no ATOM or HETATM records".into()));
    }
    let t = xyz.len() / 3;
    Ok(PointConfiguration::new(Matrix::from_column_slice(3, t, &xyz))?.centered())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
HEADER    TEST FIXTURE
ATOM      1  N   MET A   1      11.104   6.134  -6.504  1.00  0.00           N
ATOM      2  CA  MET A   1      11.639   6.071  -5.147  1.00  0.00           C
HETATM    3  O   HOH A 101      -1.000   0.250  12.000  1.00  0.00           O
TER
END
";

    #[test]
    fn parses_fixture_exactly() {
        let p = parse_pdb(FIXTURE).unwrap();
        assert_eq!(p.n_points(), 3);
        let raw = Matrix::from_column_slice(3, 3, &[11.104, 6.134, -6.504, 11.639, 6.071, -5.147, -1.0, 0.25, 12.0]);
        let mean = raw.column_mean();
        for j in 0..3 {
            for i in 0..3 {
                assert!((p.coords()[(i, j)] - (raw[(i, j)] - mean[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_atoms_is_empty_input() {
        let err = parse_pdb("HEADER    NOTHING\nREMARK   1\nEND\n").unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));
    }

    #[test]
    fn malformed_record_names_line() {
        let text = "HEADER\nATOM      1  N   MET A   1      11.104   abcde  -6.504  1.00\n";
        match parse_pdb(text).unwrap_err() {
            Error::MalformedRecord { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let short = "ATOM      1  N   MET A   1      11.104\n";
        assert!(matches!(parse_pdb(short).unwrap_err(), Error::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn user_supplied_1ax8_has_953_atoms() {
        // set RODEODB_PDB_1AX8 to a local copy to exercise this
        let Ok(path) = std::env::var("RODEODB_PDB_1AX8") else { return };
        assert_eq!(load_protein(path).unwrap().n_points(), 953);
    }
}
