//! `FTNS` binary tensor files.
//!
//! Layout, all little-endian:
//!
//! | bytes        | field                               |
//! |--------------|-------------------------------------|
//! | 4            | magic `b"FTNS"`                     |
//! | 4            | version, `u32` (= 1)                |
//! | 4            | `ndim`, `u32`                       |
//! | 8 * ndim     | dims, `u64` each                    |
//! | 8 * prod     | payload, IEEE-754 `f64`, row-major  |
//!
//! Nothing may follow the payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, Matrix};

pub const MAGIC: [u8; 4] = *b"FTNS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl TensorFile {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = element_count(&dims)?;
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for dims {dims:?}",
                data.len()
            )));
        }
        Ok(TensorFile { dims, data })
    }

    pub fn from_feature_map(x: &FeatureMap) -> Self {
        let (c, h, w) = x.dims();
        TensorFile {
            dims: vec![c, h, w],
            data: x.data().to_vec(),
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        TensorFile {
            dims: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    /// Requires `ndim == 3` and finite values.
    pub fn into_feature_map(self) -> Result<FeatureMap> {
        match self.dims[..] {
            [c, h, w] => FeatureMap::new(c, h, w, self.data),
            _ => Err(Error::Format(format!(
                "expected a 3-d tensor, found {} dims",
                self.dims.len()
            ))),
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        let ndim = u32::try_from(self.dims.len())
            .map_err(|_| Error::Format("too many dimensions".into()))?;
        out.write_all(&ndim.to_le_bytes())?;
        for &d in &self.dims {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        read_exact(&mut input, &mut b4, "magic")?;
        if b4 != MAGIC {
            return Err(Error::Format(format!("bad magic {b4:?}")));
        }
        read_exact(&mut input, &mut b4, "version")?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        read_exact(&mut input, &mut b4, "ndim")?;
        let ndim = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        let mut dims = Vec::with_capacity(ndim.min(16));
        for _ in 0..ndim {
            read_exact(&mut input, &mut b8, "dims")?;
            let d = usize::try_from(u64::from_le_bytes(b8))
                .map_err(|_| Error::Format("dimension overflows usize".into()))?;
            dims.push(d);
        }
        let n = element_count(&dims)?;
        let mut payload = Vec::new();
        input.read_to_end(&mut payload)?;
        if payload.len() != n * 8 {
            return Err(Error::Format(format!(
                "payload is {} bytes, dims {dims:?} need {}",
                payload.len(),
                n * 8
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(TensorFile { dims, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|n| n.checked_mul(8).is_some())
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow")))
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated while reading {what}")),
        _ => Error::Io(e),
    })
}
