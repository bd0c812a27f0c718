//! Joint predictions keyed by sample id.
//!
//! ```text
//! magic "LHP1" | u32 version | u32 K | u32 count
//! count * (u64 sample_id | f32 joints[K*3])
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::bytes::{PutLe, Reader};

pub const MAGIC: [u8; 4] = *b"LHP1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Predictions {
    pub num_joints: usize,
    pub joints: BTreeMap<u64, Vec<[f32; 3]>>,
}

impl Predictions {
    pub fn new(num_joints: usize) -> Self {
        Self {
            num_joints,
            joints: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: u64, joints: Vec<[f32; 3]>) -> Result<()> {
        if joints.len() != self.num_joints {
            return Err(Error::Dimension(format!(
                "prediction {id} has {} joints, expected {}",
                joints.len(),
                self.num_joints
            )));
        }
        if self.joints.insert(id, joints).is_some() {
            return Err(Error::validation("sample_id", format!("duplicate prediction id {id}")));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.joints.len() * (8 + 12 * self.num_joints));
        out.extend_from_slice(&MAGIC);
        out.put_u32(VERSION);
        out.put_u32(self.num_joints as u32);
        out.put_u32(self.joints.len() as u32);
        for (id, j) in &self.joints {
            out.put_u64(*id);
            out.put_f32s(j.as_flattened());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Version {
                expected: VERSION,
                found: version,
            });
        }
        let k = r.u32()? as usize;
        let count = r.u32()? as usize;
        let record = 8 + 12 * k;
        if count.saturating_mul(record) > r.remaining() {
            return Err(Error::Truncated {
                offset: r.position(),
                needed: count.saturating_mul(record),
                available: r.remaining(),
            });
        }
        let mut out = Predictions::new(k);
        for _ in 0..count {
            let id = r.u64()?;
            let flat = r.f32s(3 * k)?;
            if !flat.iter().all(|x| x.is_finite()) {
                return Err(Error::validation("joints", format!("non-finite prediction for id {id}")));
            }
            out.insert(id, flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())?;
        }
        if r.remaining() != 0 {
            return Err(Error::format("predictions", format!("{} trailing bytes", r.remaining())));
        }
        Ok(out)
    }

    /// Splits `ids` into those with a prediction and those without. An empty
    /// intersection is an error.
    pub fn intersect(&self, ids: &[u64]) -> Result<(Vec<u64>, Vec<u64>)> {
        let (found, missing): (Vec<u64>, Vec<u64>) = ids.iter().partition(|id| self.joints.contains_key(id));
        if found.is_empty() {
            return Err(Error::Input("no sample ids in common between predictions and dataset".into()));
        }
        if !missing.is_empty() {
            log::warn!("{} samples have no prediction; evaluating {} in common", missing.len(), found.len());
        }
        Ok((found, missing))
    }
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Predictions> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Predictions::from_bytes(&bytes)
}

pub fn write_predictions(preds: &Predictions, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, preds.to_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Predictions {
        let mut p = Predictions::new(2);
        p.insert(5, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        p.insert(9, vec![[0.0; 3], [-1.0; 3]]).unwrap();
        p
    }

    #[test]
    fn round_trip() {
        let p = two();
        let back = Predictions::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.joints.len(), 2);
    }

    #[test]
    fn duplicate_id_named() {
        let mut bytes = two().to_bytes();
        let rec = 8 + 24;
        bytes[16 + rec..16 + rec + 8].copy_from_slice(&5u64.to_le_bytes());
        let err = Predictions::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("duplicate prediction id 5"), "{err}");
    }

    #[test]
    fn intersection() {
        let p = two();
        let (found, missing) = p.intersect(&[1, 5, 9, 11]).unwrap();
        assert_eq!(found, vec![5, 9]);
        assert_eq!(missing, vec![1, 11]);
        assert!(p.intersect(&[1, 2]).is_err());
    }

    #[test]
    fn huge_count_is_truncation() {
        let mut bytes = two().to_bytes();
        bytes[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(Predictions::from_bytes(&bytes), Err(Error::Truncated { .. })));
    }
}
