//! `LHM1` heatmap dumps: one heatmap triplet per sample.
//!
//! ```text
//! magic "LHM1" | u32 version | u32 K | u32 count
//! u32 bins[3] | f64 range[3][2] | f64 sigma
//! count * (u64 sample_id | f64 origin[3] | for joint k: for axis a: f32 row[bins[a]])
//! ```
//!
//! An entry's effective range is the header range shifted by its origin.

use std::path::Path;

use crate::error::{Error, Result};
use crate::heatmap::{HeatmapSpec, HeatmapTriplet};
use crate::io::bytes::{PutLe, Reader};

pub const MAGIC: [u8; 4] = *b"LHM1";
pub const VERSION: u32 = 1;
/// Bins per axis accepted when reading.
pub const MAX_BINS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapDump {
    pub spec: HeatmapSpec,
    pub num_joints: usize,
    pub entries: Vec<HeatmapEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapEntry {
    pub id: u64,
    pub origin: [f64; 3],
    pub heatmaps: HeatmapTriplet,
}

impl HeatmapDump {
    /// Spec with the range of `entry`.
    pub fn entry_spec(&self, entry: &HeatmapEntry) -> HeatmapSpec {
        let range = std::array::from_fn(|c| self.spec.range[c].map(|x| x + entry.origin[c]));
        self.spec.clone().with_range(range)
    }
}

impl HeatmapDump {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.put_u32(VERSION);
        out.put_u32(self.num_joints as u32);
        out.put_u32(self.entries.len() as u32);
        for b in self.spec.bins {
            out.put_u32(b as u32);
        }
        for [lo, hi] in self.spec.range {
            out.extend_from_slice(&lo.to_le_bytes());
            out.extend_from_slice(&hi.to_le_bytes());
        }
        out.extend_from_slice(&self.spec.sigma.to_le_bytes());
        for e in &self.entries {
            let (id, hm) = (&e.id, &e.heatmaps);
            if hm.num_joints != self.num_joints || hm.bins != self.spec.bins {
                return Err(Error::Dimension(format!("heatmap {id} does not match the dump header")));
            }
            out.put_u64(*id);
            for o in e.origin {
                out.extend_from_slice(&o.to_le_bytes());
            }
            for k in 0..self.num_joints {
                for a in 0..3 {
                    for v in hm.row(a, k) {
                        out.put_f32(*v as f32);
                    }
                }
            }
        }
        Ok(out)
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
        let bins = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
        if bins.iter().any(|b| *b == 0 || *b > MAX_BINS) {
            return Err(Error::validation("bins", format!("{bins:?} out of range")));
        }
        let mut range = [[0.0; 2]; 3];
        for axis in &mut range {
            *axis = [r.f64()?, r.f64()?];
        }
        let spec = HeatmapSpec {
            bins,
            range,
            sigma: r.f64()?,
        };
        spec.validate()?;
        let per_entry = bins.iter().sum::<usize>().saturating_mul(k).saturating_mul(4).saturating_add(32);
        if count.saturating_mul(per_entry) > r.remaining() {
            return Err(Error::Truncated {
                offset: r.position(),
                needed: count.saturating_mul(per_entry),
                available: r.remaining(),
            });
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let id = r.u64()?;
            let origin = [r.f64()?, r.f64()?, r.f64()?];
            if !origin.iter().all(|o| o.is_finite()) {
                return Err(Error::validation("origin", format!("non-finite origin in sample {id}")));
            }
            let mut hm = HeatmapTriplet::zeros(k, bins);
            for j in 0..k {
                for a in 0..3 {
                    let row = r.f32s(bins[a])?;
                    if !row.iter().all(|v| v.is_finite() && *v >= 0.0) {
                        return Err(Error::validation("heatmap", format!("invalid value in sample {id}")));
                    }
                    for (dst, v) in hm.row_mut(a, j).iter_mut().zip(row) {
                        *dst = v as f64;
                    }
                }
            }
            entries.push(HeatmapEntry {
                id,
                origin,
                heatmaps: hm,
            });
        }
        if r.remaining() != 0 {
            return Err(Error::format("heatmap dump", format!("{} trailing bytes", r.remaining())));
        }
        Ok(Self {
            spec,
            num_joints: k,
            entries,
        })
    }
}

pub fn read_heatmap_dump(path: impl AsRef<Path>) -> Result<HeatmapDump> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    HeatmapDump::from_bytes(&bytes)
}

pub fn write_heatmap_dump(dump: &HeatmapDump, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dump.to_bytes()?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::Vec3;
    use crate::heatmap::encode;

    #[test]
    fn round_trip_keeps_f32_values() {
        let spec = HeatmapSpec {
            bins: [16, 8, 4],
            ..Default::default()
        };
        let joints = vec![Vec3::new(0.1, -0.2, 0.3), Vec3::new(-1.0, 1.0, 0.0)];
        let hm = encode(&joints, &spec).unwrap().heatmaps;
        let dump = HeatmapDump {
            spec: spec.clone(),
            num_joints: 2,
            entries: vec![
                HeatmapEntry { id: 3, origin: [0.0; 3], heatmaps: hm.clone() },
                HeatmapEntry { id: 8, origin: [1.0, 2.0, -3.0], heatmaps: hm },
            ],
        };
        let bytes = dump.to_bytes().unwrap();
        let back = HeatmapDump::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.entries[1].id, 8);
        assert_eq!(back.entry_spec(&back.entries[1]).range[2], [-4.5, -1.5]);
        for cut in [0, 20, bytes.len() - 1] {
            assert!(HeatmapDump::from_bytes(&bytes[..cut]).is_err());
        }
    }
}
