//! Pose databases: rows of shape (10) followed by pose (72) parameters.
//!
//! Binary files are bare little-endian f32 rows. CSV files hold one row per
//! line; blank lines and lines starting with `#` are skipped.

use std::path::Path;

use crate::body_model::{POSE_DIM, SHAPE_DIM};
use crate::error::{Error, Result};
use crate::io::bytes::{PutLe, Reader};

pub const ROW_LEN: usize = SHAPE_DIM + POSE_DIM;
const ROW_BYTES: usize = ROW_LEN * 4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseDb {
    rows: Vec<f32>,
}

impl PoseDb {
    pub fn from_rows(rows: Vec<[f32; ROW_LEN]>) -> Result<Self> {
        let db = Self {
            rows: rows.concat(),
        };
        db.validate()?;
        Ok(db)
    }

    fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Input("pose database is empty".into()));
        }
        if let Some(i) = self.rows.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation("pose", format!("non-finite value in row {}", i / ROW_LEN)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len() / ROW_LEN
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(beta, theta)` of row `i` in f64.
    pub fn get(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let row = &self.rows[i * ROW_LEN..(i + 1) * ROW_LEN];
        let beta = row[..SHAPE_DIM].iter().map(|x| *x as f64).collect();
        let theta = row[SHAPE_DIM..].iter().map(|x| *x as f64).collect();
        (beta, theta)
    }

    pub fn to_bin(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rows.len() * 4);
        out.put_f32s(&self.rows);
        out
    }

    pub fn from_bin(buf: &[u8]) -> Result<Self> {
        if !buf.len().is_multiple_of(ROW_BYTES) {
            return Err(Error::format(
                "pose db",
                format!("{} bytes is not a multiple of the {ROW_BYTES}-byte row", buf.len()),
            ));
        }
        let db = Self {
            rows: Reader::new(buf).f32s(buf.len() / 4)?,
        };
        db.validate()?;
        Ok(db)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows.chunks_exact(ROW_LEN) {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let before = rows.len();
            for cell in line.split(',') {
                let v: f32 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::format("pose db", format!("line {}: bad number {cell:?}", n + 1)))?;
                rows.push(v);
            }
            if rows.len() - before != ROW_LEN {
                return Err(Error::format(
                    "pose db",
                    format!("line {}: {} values, expected {ROW_LEN}", n + 1, rows.len() - before),
                ));
            }
        }
        let db = Self { rows };
        db.validate()?;
        Ok(db)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads CSV when the extension is `.csv`, binary rows otherwise.
pub fn load_pose_db(path: impl AsRef<Path>) -> Result<PoseDb> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_csv(path) {
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::format("pose db", "CSV is not UTF-8"))?;
        PoseDb::from_csv(text)
    } else {
        PoseDb::from_bin(&bytes)
    }
}

pub fn save_pose_db(db: &PoseDb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_csv(path) { db.to_csv().into_bytes() } else { db.to_bin() };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
