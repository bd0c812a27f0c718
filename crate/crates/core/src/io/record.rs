//! `LHS1` sample records.
//!
//! Layout, little-endian, no padding:
//!
//! ```text
//! magic "LHS1" | u32 version | u32 N | u32 K
//! f32 points[N*3] | u16 labels[N] | f32 joints[K*3] | u8 visibility[K]
//! u64 seed | f32 r | f32 azimuth | u32 pose_id | u32 mask_patch_count | u8 config_hash[16]
//! ```

use crate::error::{Error, HexHash, Result};
use crate::io::bytes::{PutLe, Reader};

pub const MAGIC: [u8; 4] = *b"LHS1";
pub const VERSION: u32 = 1;
/// Bytes of the fixed-layout metadata block.
pub const META_LEN: usize = 8 + 4 + 4 + 4 + 4 + 16;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleMeta {
    pub seed: u64,
    pub r: f32,
    pub azimuth: f32,
    pub pose_id: u32,
    pub mask_patch_count: u32,
    pub config_hash: [u8; 16],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticSample {
    pub points: Vec<[f32; 3]>,
    /// Joint index, or `K` for background.
    pub labels: Vec<u16>,
    pub joints: Vec<[f32; 3]>,
    pub visibility: Vec<u8>,
    pub meta: SampleMeta,
}

impl SyntheticSample {
    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.points.len() * 14 + self.joints.len() * 13 + META_LEN
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.joints.len();
        if self.labels.len() != self.points.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} points",
                self.labels.len(),
                self.points.len()
            )));
        }
        if self.visibility.len() != k {
            return Err(Error::Dimension(format!("{} visibility flags for {k} joints", self.visibility.len())));
        }
        check_sample_fields(&self.points, &self.labels, &self.joints, &self.visibility)
    }

    pub fn visible(&self) -> Vec<bool> {
        self.visibility.iter().map(|v| *v != 0).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.put_u32(VERSION);
        out.put_u32(len_u32(self.points.len(), "N")?);
        out.put_u32(len_u32(self.joints.len(), "K")?);
        out.put_f32s(self.points.as_flattened());
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.put_f32s(self.joints.as_flattened());
        out.extend_from_slice(&self.visibility);
        let m = &self.meta;
        out.put_u64(m.seed);
        out.put_f32(m.r);
        out.put_f32(m.azimuth);
        out.put_u32(m.pose_id);
        out.put_u32(m.mask_patch_count);
        out.extend_from_slice(&m.config_hash);
        debug_assert_eq!(out.len(), self.encoded_len());
        Ok(out)
    }

    /// Decodes exactly one record; trailing bytes are an error.
    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (sample, used) = read_sample(buf, None)?;
        if used != buf.len() {
            return Err(Error::format("record", format!("{} trailing bytes", buf.len() - used)));
        }
        Ok(sample)
    }
}

fn len_u32(n: usize, field: &'static str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::validation(field, "exceeds u32"))
}

fn check_sample_fields(points: &[[f32; 3]], labels: &[u16], joints: &[[f32; 3]], vis: &[u8]) -> Result<()> {
    let k = joints.len();
    if k >= u16::MAX as usize {
        return Err(Error::validation("K", "too many joints"));
    }
    if let Some(l) = labels.iter().find(|l| **l as usize > k) {
        return Err(Error::validation("labels", format!("label {l} exceeds background class {k}")));
    }
    if !points.as_flattened().iter().all(|x| x.is_finite()) {
        return Err(Error::validation("points", "non-finite coordinate"));
    }
    if !joints.as_flattened().iter().all(|x| x.is_finite()) {
        return Err(Error::validation("joints", "non-finite coordinate"));
    }
    if vis.iter().any(|v| *v > 1) {
        return Err(Error::validation("visibility", "flags must be 0 or 1"));
    }
    Ok(())
}

fn triples(flat: Vec<f32>) -> Vec<[f32; 3]> {
    flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Decodes the record at the start of `buf`, returning it with the number of
/// bytes consumed. With `expected_hash`, a differing config hash is an error.
pub fn read_sample(buf: &[u8], expected_hash: Option<&[u8; 16]>) -> Result<(SyntheticSample, usize)> {
    let mut r = Reader::new(buf);
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Version {
            expected: VERSION,
            found: version,
        });
    }
    let n = r.u32()? as usize;
    let k = r.u32()? as usize;
    let points = triples(r.f32s(n.checked_mul(3).ok_or(Error::validation("N", "overflow"))?)?);
    let labels = r.u16s(n)?;
    let joints = triples(r.f32s(k * 3)?);
    let visibility = r.bytes(k)?;
    let meta = SampleMeta {
        seed: r.u64()?,
        r: r.f32()?,
        azimuth: r.f32()?,
        pose_id: r.u32()?,
        mask_patch_count: r.u32()?,
        config_hash: r.take(16)?.try_into().unwrap(),
    };
    check_sample_fields(&points, &labels, &joints, &visibility)?;
    if let Some(expected) = expected_hash {
        if *expected != meta.config_hash {
            return Err(Error::HashMismatch {
                expected: HexHash(*expected),
                found: HexHash(meta.config_hash),
            });
        }
    }
    let used = r.position();
    Ok((
        SyntheticSample {
            points,
            labels,
            joints,
            visibility,
            meta,
        },
        used,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_sample(seed: u64, n: usize) -> SyntheticSample {
        let mut rng = crate::rng::seeded(seed);
        SyntheticSample {
            points: (0..n).map(|_| [rng.random(), rng.random(), rng.random::<f32>() - 0.5]).collect(),
            labels: (0..n).map(|_| rng.random_range(0..=24)).collect(),
            joints: (0..24).map(|_| [rng.random(), rng.random(), rng.random()]).collect(),
            visibility: (0..24).map(|_| rng.random_range(0..=1)).collect(),
            meta: SampleMeta {
                seed: rng.random(),
                r: 7.5,
                azimuth: -1.25,
                pose_id: 42,
                mask_patch_count: 32,
                config_hash: rng.random(),
            },
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for (seed, n) in [(1, 0), (2, 1), (3, 517)] {
            let s = random_sample(seed, n);
            let bytes = s.to_bytes().unwrap();
            assert_eq!(bytes.len(), s.encoded_len());
            let back = SyntheticSample::from_bytes(&bytes).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.to_bytes().unwrap(), bytes);
        }
    }

    #[test]
    fn every_truncation_is_reported() {
        let bytes = random_sample(4, 9).to_bytes().unwrap();
        for cut in 0..bytes.len() {
            match SyntheticSample::from_bytes(&bytes[..cut]) {
                Err(Error::Truncated { .. }) => {}
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn distinct_error_kinds() {
        let s = random_sample(5, 3);
        let mut bytes = s.to_bytes().unwrap();
        assert!(matches!(
            read_sample(&bytes, Some(&[0; 16])),
            Err(Error::HashMismatch { .. })
        ));
        assert!(read_sample(&bytes, Some(&s.meta.config_hash)).is_ok());
        bytes[4] = 2;
        assert!(matches!(SyntheticSample::from_bytes(&bytes), Err(Error::Version { found: 2, .. })));
        bytes[0] = b'X';
        assert!(matches!(SyntheticSample::from_bytes(&bytes), Err(Error::Magic { .. })));
    }

    #[test]
    fn version_checked_before_fields() {
        let mut bytes = MAGIC.to_vec();
        bytes.put_u32(9);
        assert!(matches!(read_sample(&bytes, None), Err(Error::Version { .. })));
    }

    #[test]
    fn label_range_enforced() {
        let mut s = random_sample(6, 4);
        s.labels[2] = 25;
        assert!(matches!(s.to_bytes(), Err(Error::Validation { field: "labels", .. })));
    }
}
