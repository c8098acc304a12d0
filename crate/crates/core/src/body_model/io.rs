//! `BSM1` body model container.
//!
//! Layout (little-endian):
//!
//! ```text
//! "BSM1"  u32 N  u32 J  u32 S  u32 F  u32 flags
//! f32 template[N*3]
//! f32 shape_basis[N*3*S]
//! f32 pose_basis[N*3*9(J-1)]
//! f32 joint_regressor[J*N]
//! f32 skin_weights[N*J]
//! i32 parents[J]            (-1 marks the root)
//! u32 faces[F*3]
//! f32 uv[N*2]               if flags & 1
//! f32 colors[N*3]           if flags & 2
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{BodyModel, BodyModelParts};
use crate::error::{Error, Result};
use crate::io_util::{atomic_write, read_file};
use crate::scalar::Real;

pub const BSM1_MAGIC: &[u8; 4] = b"BSM1";

const FLAG_UV: u32 = 1;
const FLAG_COLORS: u32 = 2;
const KNOWN_FLAGS: u32 = FLAG_UV | FLAG_COLORS;

pub fn write_bsm1<T: Real, W: Write>(model: &BodyModel<T>, mut w: W) -> std::io::Result<()> {
    let p = model.parts();
    let mut flags = 0;
    if p.uv.is_some() {
        flags |= FLAG_UV;
    }
    if p.colors.is_some() {
        flags |= FLAG_COLORS;
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(BSM1_MAGIC);
    for x in [
        model.num_vertices(),
        model.num_joints(),
        model.num_shape(),
        model.faces().len(),
    ] {
        buf.extend_from_slice(&(x as u32).to_le_bytes());
    }
    buf.extend_from_slice(&flags.to_le_bytes());
    let mut put = |x: T| buf.extend_from_slice(&x.to_f32_lossy().to_le_bytes());
    p.template.iter().flatten().for_each(|&x| put(x));
    p.shape_basis.iter().for_each(|&x| put(x));
    p.pose_basis.iter().for_each(|&x| put(x));
    p.joint_regressor.iter().for_each(|&x| put(x));
    p.skin_weights.iter().for_each(|&x| put(x));
    for parent in &p.parents {
        let v: i32 = parent.map_or(-1, |q| q as i32);
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for idx in p.faces.iter().flatten() {
        buf.extend_from_slice(&idx.to_le_bytes());
    }
    if let Some(uv) = &p.uv {
        for x in uv.iter().flatten() {
            buf.extend_from_slice(&x.to_f32_lossy().to_le_bytes());
        }
    }
    if let Some(colors) = &p.colors {
        for x in colors.iter().flatten() {
            buf.extend_from_slice(&x.to_f32_lossy().to_le_bytes());
        }
    }
    w.write_all(&buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "BSM1 truncated while reading {what} at byte offset {}",
                    self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s<T: Real>(&mut self, count: usize, what: &str) -> Result<Vec<T>> {
        let len = count
            .checked_mul(4)
            .ok_or_else(|| Error::Format(format!("BSM1 {what} size overflows")))?;
        let b = self.take(len, what)?;
        Ok(b.chunks_exact(4)
            .map(|c| T::from_f32_exact(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect())
    }
}

fn triples<T: Copy>(flat: Vec<T>) -> Vec<[T; 3]> {
    flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

pub fn read_bsm1<T: Real, R: Read>(mut r: R) -> Result<BodyModel<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("reading BSM1 stream: {e}")))?;
    parse_bsm1(&bytes)
}

fn parse_bsm1<T: Real>(bytes: &[u8]) -> Result<BodyModel<T>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != BSM1_MAGIC {
        return Err(Error::Format("missing BSM1 magic".into()));
    }
    let n = c.u32("N")? as usize;
    let j = c.u32("J")? as usize;
    let s = c.u32("S")? as usize;
    let f = c.u32("F")? as usize;
    let flags = c.u32("flags")?;
    if flags & !KNOWN_FLAGS != 0 {
        return Err(Error::Format(format!("unknown BSM1 flags {flags:#x}")));
    }
    if j == 0 {
        return Err(Error::Format("BSM1 declares zero joints".into()));
    }
    let template = triples(c.f32s::<T>(n * 3, "template")?);
    let shape_basis = c.f32s(n * 3 * s, "shape basis")?;
    let pose_basis = c.f32s(n * 3 * 9 * (j - 1), "pose basis")?;
    let joint_regressor = c.f32s(j * n, "joint regressor")?;
    let skin_weights = c.f32s(n * j, "skin weights")?;
    let mut parents = Vec::with_capacity(j);
    for _ in 0..j {
        let v = c.u32("parents")? as i32;
        parents.push(match v {
            -1 => None,
            v if v >= 0 => Some(v as usize),
            v => return Err(Error::Format(format!("invalid parent index {v}"))),
        });
    }
    let mut faces = Vec::with_capacity(f);
    for _ in 0..f {
        faces.push([c.u32("faces")?, c.u32("faces")?, c.u32("faces")?]);
    }
    let uv = if flags & FLAG_UV != 0 {
        let flat: Vec<T> = c.f32s(n * 2, "uv")?;
        Some(flat.chunks_exact(2).map(|p| [p[0], p[1]]).collect())
    } else {
        None
    };
    let colors = if flags & FLAG_COLORS != 0 {
        Some(triples(c.f32s(n * 3, "colors")?))
    } else {
        None
    };
    if c.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after BSM1 payload",
            bytes.len() - c.pos
        )));
    }
    BodyModel::new(BodyModelParts {
        template,
        num_shape: s,
        shape_basis,
        pose_basis,
        joint_regressor,
        skin_weights,
        parents,
        faces,
        uv,
        colors,
    })
}

impl<T: Real> BodyModel<T> {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        parse_bsm1(&bytes).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| write_bsm1(self, w))
    }
}
