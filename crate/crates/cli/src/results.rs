//! Append-only JSON-lines log of trial records.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rodeodb_core::experiments::{TrialRecord, TRIAL_RECORD_VERSION};

use crate::error::{CliError, CliResult};

pub struct ResultsLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl ResultsLog {
    /// Starts a new log, truncating any existing file.
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(file) })
    }

    pub fn append_to(path: &Path) -> CliResult<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(file) })
    }

    /// Writes one record and flushes, so an interrupted sweep keeps every
    /// completed line.
    pub fn append(&mut self, record: &TrialRecord) -> CliResult<()> {
        let line = serde_json::to_string(record).map_err(|e| CliError::format(&self.path, e.to_string()))?;
        writeln!(self.out, "{line}").and_then(|_| self.out.flush()).map_err(|e| CliError::io(&self.path, e))
    }
}

/// Records read back from a log.
#[derive(Debug)]
pub struct LoadedResults {
    pub records: Vec<TrialRecord>,
    /// Set when the final line was unreadable (e.g. cut off mid-write).
    pub truncated_tail: bool,
}

/// Reads a log; a bad final line is tolerated, a bad line before it is not.
pub fn read_results(path: &Path) -> CliResult<LoadedResults> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let lines: Vec<String> =
        BufReader::new(file).lines().collect::<Result<_, _>>().map_err(|e| CliError::io(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut records = Vec::new();
    let mut truncated_tail = false;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(line) {
            Ok(r) if r.v == TRIAL_RECORD_VERSION => records.push(r),
            Ok(r) => return Err(CliError::format(path, format!("line {}: unsupported schema version {}", i + 1, r.v))),
            Err(_) if Some(i) == last => truncated_tail = true,
            Err(e) => return Err(CliError::format(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(LoadedResults { records, truncated_tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rodeodb_core::experiments::{run_phase_grid, InstanceSource, PhaseGrid};
    use rodeodb_core::SolverConfig;

    fn records() -> Vec<TrialRecord> {
        let grid = PhaseGrid::new(InstanceSource::Sensors { t: 40, d: 2, box_half_width: 10.0 }, vec![8], vec![0.0], 3);
        run_phase_grid(&grid, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = records();
        let mut log = ResultsLog::create(&path).unwrap();
        recs.iter().for_each(|r| log.append(r).unwrap());
        drop(log);
        let loaded = read_results(&path).unwrap();
        assert_eq!(loaded.records, recs);
        assert!(!loaded.truncated_tail);
        for line in std::fs::read_to_string(&path).unwrap().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["v"], 1);
        }
    }

    #[test]
    fn corrupt_tail_tolerated_but_not_middle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = records();
        let mut log = ResultsLog::create(&path).unwrap();
        recs.iter().for_each(|r| log.append(r).unwrap());
        drop(log);
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"v\":1,\"experim");
        std::fs::write(&path, &text).unwrap();
        let loaded = read_results(&path).unwrap();
        assert_eq!(loaded.records.len(), 3);
        assert!(loaded.truncated_tail);

        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(1, 3);
        std::fs::write(&path, lines.join("\n")).unwrap();
        assert!(read_results(&path).is_err());
    }

    #[test]
    fn append_mode_extends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = records();
        ResultsLog::create(&path).unwrap().append(&recs[0]).unwrap();
        ResultsLog::append_to(&path).unwrap().append(&recs[1]).unwrap();
        assert_eq!(read_results(&path).unwrap().records, recs[..2].to_vec());
    }
}
