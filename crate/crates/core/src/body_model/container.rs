//! `LBM1` body-model container.
//!
//! Little-endian: magic `LBM1`, u32 version (1), u32 N_V, u32 N_F, u32 K, then
//! f32 template[N_V*3], shape_dirs[N_V*3*10], pose_dirs[N_V*3*207],
//! joint_regressor[K*N_V], skinning_weights[N_V*K], u32 faces[N_F*3],
//! i32 parents[K].

use std::path::Path;

use super::{BodyModel, BodyModelParts, NUM_JOINTS, POSE_FEATURES, SHAPE_DIM};
use crate::error::{Error, Result};
use crate::io::bytes::{PutLe, Reader};

pub const MAGIC: [u8; 4] = *b"LBM1";
pub const VERSION: u32 = 1;

impl BodyModel {
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
        let nv = r.u32()? as usize;
        let nf = r.u32()? as usize;
        let k = r.u32()? as usize;
        if k != NUM_JOINTS {
            return Err(Error::Dimension(format!("K must be {NUM_JOINTS}, header says {k}")));
        }
        if nv == 0 || nf == 0 {
            return Err(Error::Dimension(format!("empty mesh: N_V={nv}, N_F={nf}")));
        }
        let count = |a: usize, b: usize, field: &'static str| {
            a.checked_mul(b)
                .ok_or_else(|| Error::format(field, "element count overflows"))
        };
        let template_vertices = r.f32s(count(nv, 3, "template")?)?;
        let shape_dirs = r.f32s(count(nv, 3 * SHAPE_DIM, "shape_dirs")?)?;
        let pose_dirs = r.f32s(count(nv, 3 * POSE_FEATURES, "pose_dirs")?)?;
        let joint_regressor = r.f32s(count(k, nv, "joint_regressor")?)?;
        let skinning_weights = r.f32s(count(nv, k, "skinning_weights")?)?;
        let faces = r
            .u32s(count(nf, 3, "faces")?)?
            .chunks_exact(3)
            .map(|f| [f[0], f[1], f[2]])
            .collect();
        let parents = r.i32s(k)?;
        if r.remaining() != 0 {
            return Err(Error::format(
                "trailer",
                format!("{} unexpected bytes after parents", r.remaining()),
            ));
        }
        BodyModel::from_parts(BodyModelParts {
            template_vertices,
            faces,
            shape_dirs,
            pose_dirs,
            joint_regressor,
            skinning_weights,
            parents,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.parts();
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.put_u32(VERSION);
        out.put_u32(self.num_vertices() as u32);
        out.put_u32(p.faces.len() as u32);
        out.put_u32(p.parents.len() as u32);
        out.put_f32s(&p.template_vertices);
        out.put_f32s(&p.shape_dirs);
        out.put_f32s(&p.pose_dirs);
        out.put_f32s(&p.joint_regressor);
        out.put_f32s(&p.skinning_weights);
        for f in &p.faces {
            for i in f {
                out.put_u32(*i);
            }
        }
        for parent in &p.parents {
            out.extend_from_slice(&parent.to_le_bytes());
        }
        out
    }
}

pub fn load_body_model(path: impl AsRef<Path>) -> Result<BodyModel> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    BodyModel::from_bytes(&buf)
}

pub fn save_body_model(model: &BodyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::gen_toy_model;

    #[test]
    fn round_trip() {
        let m = gen_toy_model(5);
        assert_eq!(BodyModel::from_bytes(&m.to_bytes()).unwrap(), m);
    }

    #[test]
    fn truncation_and_magic() {
        let bytes = gen_toy_model(0).to_bytes();
        assert!(matches!(
            BodyModel::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(BodyModel::from_bytes(&bad), Err(Error::Magic { .. })));
        let mut bad = bytes;
        bad[16] = 23;
        assert!(matches!(BodyModel::from_bytes(&bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_finite_names_field() {
        let mut parts = gen_toy_model(0).into_parts();
        parts.pose_dirs[17] = f32::NAN;
        match BodyModel::from_parts(parts) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "pose_dirs"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
