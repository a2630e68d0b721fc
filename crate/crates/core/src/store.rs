//! Append-only CSV store for sweep results.
//!
//! Rows are keyed by (domain hash, puncture hash, scale). The file is only
//! ever appended to; rereading it after a crash recovers every complete row,
//! and rows that fail to parse are moved aside into a quarantine file next
//! to the store rather than aborting the run.

use crate::connection::CutDirection;
use crate::fit::{sweep_one, FitError, SweepRecord};
use crate::geometry::LatticeRegion;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("store holds {count} rows with a different format version; pass --force to recompute past them")]
    VersionMismatch { count: usize },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Stable identifier of a region: hash of its canonical loop serialization.
pub fn domain_hash(region: &LatticeRegion) -> String {
    let spec = region.to_spec();
    let payload = serde_json::to_vec(&spec.loops).expect("loops serialize");
    let digest = Sha256::digest(&payload);
    hex_prefix(&digest)
}

/// Stable identifier of a puncture configuration, including the cut
/// direction (the spectrum does not depend on it, but the stored edge data
/// would).
pub fn sigma_hash(sigma_doubled: &[[i64; 2]], cut: CutDirection) -> String {
    let payload =
        serde_json::to_vec(&(sigma_doubled, cut)).expect("sigma serialize");
    let digest = Sha256::digest(&payload);
    hex_prefix(&digest)
}

fn hex_prefix(digest: &[u8]) -> String {
    digest[..8].iter().map(|b| format!("{:02x}", b)).collect()
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct StoredRow {
    version: u32,
    domain: String,
    sigma: String,
    l: i64,
    n: u64,
    logdet: f64,
    /// JSON-encoded map of boundary class signature -> count.
    class_counts: String,
    /// JSON-encoded list of doubled puncture coordinates.
    sigma_doubled: String,
    runtime_ms: u64,
}

impl StoredRow {
    fn to_record(&self) -> Option<SweepRecord> {
        Some(SweepRecord {
            l: self.l,
            n: self.n as usize,
            class_counts: serde_json::from_str(&self.class_counts).ok()?,
            logdet: self.logdet,
            sigma_doubled: serde_json::from_str(&self.sigma_doubled).ok()?,
            runtime_ms: self.runtime_ms,
        })
    }
}

pub struct ResultStore {
    path: PathBuf,
    rows: BTreeMap<(String, String, i64), SweepRecord>,
    quarantined: usize,
    version_mismatches: usize,
}

impl ResultStore {
    /// Open or create a store file, loading every parseable row. Corrupt
    /// lines are appended to `<path>.quarantine` and dropped.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let mut rows = BTreeMap::new();
        let mut quarantined = 0usize;
        let mut version_mismatches = 0usize;
        if path.exists() {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .from_path(path)?;
            let headers = reader.headers()?.clone();
            for raw in reader.records() {
                let Ok(raw) = raw else {
                    quarantined += 1;
                    continue;
                };
                let parsed = raw.deserialize::<StoredRow>(Some(&headers)).ok();
                match parsed {
                    // older format rows are kept out of the merge but are
                    // not corrupt; resume refuses to proceed past them
                    // without force
                    Some(row) if row.version != FORMAT_VERSION => {
                        version_mismatches += 1;
                    }
                    Some(row) => match row.to_record() {
                        Some(record) => {
                            rows.insert((row.domain, row.sigma, row.l), record);
                        }
                        None => {
                            quarantine_line(path, &raw)?;
                            quarantined += 1;
                        }
                    },
                    None => {
                        quarantine_line(path, &raw)?;
                        quarantined += 1;
                    }
                }
            }
        }
        Ok(ResultStore {
            path: path.to_path_buf(),
            rows,
            quarantined,
            version_mismatches,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn quarantined(&self) -> usize {
        self.quarantined
    }

    pub fn version_mismatches(&self) -> usize {
        self.version_mismatches
    }

    pub fn get(&self, domain: &str, sigma: &str, l: i64) -> Option<&SweepRecord> {
        self.rows.get(&(domain.to_string(), sigma.to_string(), l))
    }

    /// Append one row and flush it to disk immediately.
    pub fn put(
        &mut self,
        domain: &str,
        sigma: &str,
        record: &SweepRecord,
    ) -> Result<(), StoreError> {
        let write_header = !self.path.exists()
            || std::fs::metadata(&self.path)
                .map(|m| m.len() == 0)
                .unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| StoreError::Io {
                path: self.path.clone(),
                source: e,
            })?;
        let mut writer = csv::WriterBuilder::new()
            .has_headers(write_header)
            .from_writer(file);
        writer.serialize(StoredRow {
            version: FORMAT_VERSION,
            domain: domain.to_string(),
            sigma: sigma.to_string(),
            l: record.l,
            n: record.n as u64,
            logdet: record.logdet,
            class_counts: serde_json::to_string(&record.class_counts).expect("counts"),
            sigma_doubled: serde_json::to_string(&record.sigma_doubled).expect("sigma"),
            runtime_ms: record.runtime_ms,
        })?;
        writer.flush().map_err(|e| StoreError::Io {
            path: self.path.clone(),
            source: e,
        })?;
        self.rows.insert(
            (domain.to_string(), sigma.to_string(), record.l),
            record.clone(),
        );
        Ok(())
    }
}

fn quarantine_line(path: &Path, raw: &csv::StringRecord) -> Result<(), StoreError> {
    let qpath = path.with_extension("quarantine");
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&qpath)
        .map_err(|e| StoreError::Io {
            path: qpath.clone(),
            source: e,
        })?;
    let line: Vec<&str> = raw.iter().collect();
    writeln!(file, "{}", line.join(",")).map_err(|e| StoreError::Io {
        path: qpath,
        source: e,
    })?;
    Ok(())
}

/// Run a sweep, reusing stored rows unless `force` is set; newly computed
/// rows are appended to the store as they finish.
pub fn resume_sweep(
    store: &mut ResultStore,
    base: &LatticeRegion,
    sigma_base_doubled: &[[i64; 2]],
    ls: &[i64],
    cut: CutDirection,
    force: bool,
) -> Result<Vec<SweepRecord>, StoreError> {
    if store.version_mismatches() > 0 && !force {
        return Err(StoreError::VersionMismatch {
            count: store.version_mismatches(),
        });
    }
    let dh = domain_hash(base);
    let sh = sigma_hash(sigma_base_doubled, cut);
    let mut records: Vec<SweepRecord> = Vec::with_capacity(ls.len());
    let mut missing: Vec<i64> = Vec::new();
    for &l in ls {
        match (!force).then(|| store.get(&dh, &sh, l)).flatten() {
            Some(r) => records.push(r.clone()),
            None => missing.push(l),
        }
    }
    let computed: Vec<SweepRecord> = missing
        .par_iter()
        .map(|&l| sweep_one(base, sigma_base_doubled, l, cut))
        .collect::<Result<Vec<_>, _>>()?;
    for record in computed {
        store.put(&dh, &sh, &record)?;
        records.push(record);
    }
    records.sort_by_key(|r| r.l);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RegionSpec;

    fn unit_square() -> LatticeRegion {
        LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [1, 0], [1, 1], [0, 1]]],
            scale: 1,
        })
        .unwrap()
    }

    #[test]
    fn hashes_are_stable_and_distinguishing() {
        let sq = unit_square();
        let rect = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [2, 0], [2, 1], [0, 1]]],
            scale: 1,
        })
        .unwrap();
        assert_eq!(domain_hash(&sq), domain_hash(&sq));
        assert_ne!(domain_hash(&sq), domain_hash(&rect));
        // scale is not part of the domain identity; the key carries L
        assert_eq!(domain_hash(&sq), domain_hash(&sq.with_scale(7).unwrap()));
        assert_ne!(
            sigma_hash(&[[3, 3]], CutDirection::PosX),
            sigma_hash(&[[3, 5]], CutDirection::PosX)
        );
        assert_ne!(
            sigma_hash(&[[3, 3]], CutDirection::PosX),
            sigma_hash(&[[3, 3]], CutDirection::PosY)
        );
    }

    #[test]
    fn round_trip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let sq = unit_square();
        let ls = [4, 6, 8];
        let mut store = ResultStore::open(&path).unwrap();
        let first = resume_sweep(&mut store, &sq, &[], &ls, CutDirection::PosX, false).unwrap();
        assert_eq!(first.len(), 3);
        assert_eq!(store.len(), 3);

        // a fresh open sees the same rows and resume recomputes nothing
        let mut store2 = ResultStore::open(&path).unwrap();
        assert_eq!(store2.len(), 3);
        let again =
            resume_sweep(&mut store2, &sq, &[], &[4, 6, 8, 11], CutDirection::PosX, false)
                .unwrap();
        assert_eq!(again.len(), 4);
        for (a, b) in first.iter().zip(&again) {
            assert_eq!(a.l, b.l);
            assert_eq!(a.logdet, b.logdet);
            assert_eq!(a.class_counts, b.class_counts);
        }
    }

    #[test]
    fn force_recomputes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let sq = unit_square();
        let mut store = ResultStore::open(&path).unwrap();
        let first = resume_sweep(&mut store, &sq, &[], &[5], CutDirection::PosX, false).unwrap();
        let second = resume_sweep(&mut store, &sq, &[], &[5], CutDirection::PosX, true).unwrap();
        assert_eq!(first[0].logdet, second[0].logdet);
    }

    #[test]
    fn version_mismatch_refuses_without_force() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let sq = unit_square();
        let mut store = ResultStore::open(&path).unwrap();
        resume_sweep(&mut store, &sq, &[], &[4], CutDirection::PosX, false).unwrap();
        drop(store);

        // rewrite the row with a future format version
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replacen(&format!("{}", FORMAT_VERSION), "99", 1)).unwrap();

        let mut store = ResultStore::open(&path).unwrap();
        assert_eq!(store.version_mismatches(), 1);
        assert!(matches!(
            resume_sweep(&mut store, &sq, &[], &[4], CutDirection::PosX, false),
            Err(StoreError::VersionMismatch { count: 1 })
        ));
        let records =
            resume_sweep(&mut store, &sq, &[], &[4], CutDirection::PosX, true).unwrap();
        assert_eq!(records.len(), 1);
    }

    #[test]
    fn corrupt_rows_are_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let sq = unit_square();
        let mut store = ResultStore::open(&path).unwrap();
        resume_sweep(&mut store, &sq, &[], &[4, 6], CutDirection::PosX, false).unwrap();
        drop(store);

        // damage one line
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let damaged = format!("{}garbage\"", lines[1]);
        lines[1] = &damaged;
        std::fs::write(&path, lines.join("\n")).unwrap();

        let store = ResultStore::open(&path).unwrap();
        assert_eq!(store.len() + store.quarantined(), 2);
        assert!(store.quarantined() >= 1);
    }
}
