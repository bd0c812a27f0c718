//! ASCII PLY export of samples, and a reader for the scalar-property subset
//! of the format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::record::SyntheticSample;

pub fn sample_to_ply(sample: &SyntheticSample, comment: &str) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    for line in comment.lines() {
        let _ = writeln!(s, "comment {line}");
    }
    let _ = writeln!(s, "element vertex {}", sample.points.len());
    s.push_str("property float x\nproperty float y\nproperty float z\nproperty ushort label\n");
    let _ = writeln!(s, "element joint {}", sample.joints.len());
    s.push_str("property float x\nproperty float y\nproperty float z\nproperty uchar visible\n");
    s.push_str("end_header\n");
    for (p, l) in sample.points.iter().zip(&sample.labels) {
        let _ = writeln!(s, "{} {} {} {l}", p[0], p[1], p[2]);
    }
    for (j, v) in sample.joints.iter().zip(&sample.visibility) {
        let _ = writeln!(s, "{} {} {} {v}", j[0], j[1], j[2]);
    }
    s
}

pub fn export_ply(sample: &SyntheticSample, comment: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sample_to_ply(sample, comment)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyElement {
    pub name: String,
    pub properties: Vec<(String, String)>,
    pub rows: Vec<Vec<f64>>,
}

impl PlyElement {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|(_, n)| n == name)
    }
}

const SCALAR_TYPES: [&str; 16] = [
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8", "int16", "uint16",
    "int32", "uint32", "float32", "float64",
];

fn ply_err(line: usize, reason: impl Into<String>) -> Error {
    Error::format("ply", format!("line {line}: {}", reason.into()))
}

/// Parses an ASCII PLY file whose elements have scalar properties only.
pub fn parse_ply(text: &str) -> Result<Vec<PlyElement>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(ply_err(1, "missing `ply` signature")),
    }
    let mut elements: Vec<(PlyElement, usize)> = Vec::new();
    let mut saw_format = false;
    loop {
        let (n, line) = lines.next().ok_or_else(|| ply_err(0, "missing end_header"))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", "1.0"] => saw_format = true,
            ["format", ..] => return Err(ply_err(n, "only ascii 1.0 is supported")),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count: usize = count.parse().map_err(|_| ply_err(n, "bad element count"))?;
                elements.push((
                    PlyElement {
                        name: name.to_string(),
                        properties: Vec::new(),
                        rows: Vec::new(),
                    },
                    count,
                ));
            }
            ["property", "list", ..] => return Err(ply_err(n, "list properties are not supported")),
            ["property", ty, name] => {
                if !SCALAR_TYPES.contains(ty) {
                    return Err(ply_err(n, format!("unknown type {ty}")));
                }
                let (el, _) = elements.last_mut().ok_or_else(|| ply_err(n, "property before element"))?;
                el.properties.push((ty.to_string(), name.to_string()));
            }
            _ => return Err(ply_err(n, format!("unexpected header line {line:?}"))),
        }
    }
    if !saw_format {
        return Err(ply_err(0, "missing format line"));
    }
    let mut body = lines.filter(|(_, l)| !l.is_empty());
    let mut out = Vec::with_capacity(elements.len());
    for (mut el, count) in elements {
        for _ in 0..count {
            let (n, line) = body
                .next()
                .ok_or_else(|| ply_err(0, format!("element {} ends early", el.name)))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| ply_err(n, format!("bad number {w:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != el.properties.len() {
                return Err(ply_err(n, format!("{} values, expected {}", row.len(), el.properties.len())));
            }
            el.rows.push(row);
        }
        out.push(el);
    }
    if let Some((n, _)) = body.next() {
        return Err(ply_err(n, "data after last element"));
    }
    Ok(out)
}

/// Points, labels, joints and visibility from a PLY written by [`sample_to_ply`].
pub fn sample_from_ply(text: &str) -> Result<SyntheticSample> {
    let elements = parse_ply(text)?;
    let find = |name: &str| {
        elements
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::format("ply", format!("missing element {name}")))
    };
    let xyz = |el: &PlyElement, extra: &str| -> Result<Vec<([f32; 3], f64)>> {
        let cols: Vec<usize> = ["x", "y", "z", extra]
            .iter()
            .map(|c| el.column(c).ok_or_else(|| Error::format("ply", format!("{} lacks {c}", el.name))))
            .collect::<Result<_>>()?;
        Ok(el
            .rows
            .iter()
            .map(|r| ([r[cols[0]] as f32, r[cols[1]] as f32, r[cols[2]] as f32], r[cols[3]]))
            .collect())
    };
    let points = xyz(find("vertex")?, "label")?;
    let joints = xyz(find("joint")?, "visible")?;
    let as_int = |v: f64, max: f64| -> Result<f64> {
        if v.fract() != 0.0 || !(0.0..=max).contains(&v) {
            return Err(Error::validation("ply", format!("value {v} is not an integer in [0, {max}]")));
        }
        Ok(v)
    };
    let sample = SyntheticSample {
        labels: points
            .iter()
            .map(|(_, l)| as_int(*l, u16::MAX as f64).map(|v| v as u16))
            .collect::<Result<_>>()?,
        points: points.into_iter().map(|(p, _)| p).collect(),
        visibility: joints
            .iter()
            .map(|(_, v)| as_int(*v, 1.0).map(|v| v as u8))
            .collect::<Result<_>>()?,
        joints: joints.into_iter().map(|(p, _)| p).collect(),
        meta: Default::default(),
    };
    sample.validate()?;
    Ok(sample)
}
