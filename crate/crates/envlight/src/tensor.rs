//! "ETEN" binary tensor container and the rank-4 latent-sequence view.
//!
//! File layout (all little-endian):
//!
//! ```text
//! magic   "ETEN"      4 bytes
//! version u16         currently 1
//! rank    u16         >= 1
//! dims    u64 * rank
//! payload f32 * product(dims), frame-major row-major
//! ```
//!
//! Round trips are bit-exact for finite f32 payloads.

use std::path::Path;

use crate::error::{Error, Result};

pub const ETEN_MAGIC: &[u8; 4] = b"ETEN";
pub const ETEN_VERSION: u16 = 1;

/// A rank-generic float tensor as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u64>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<u64>, data: Vec<f32>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::TensorFormat(format!(
                "payload has {} values, dims {:?} require {}",
                data.len(),
                dims,
                len
            )));
        }
        Ok(Tensor { dims, data })
    }
}

fn checked_len(dims: &[u64]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::TensorFormat("empty dims".into()));
    }
    let mut len: u64 = 1;
    for &d in dims {
        len = len
            .checked_mul(d)
            .ok_or_else(|| Error::TensorFormat("dims overflow".into()))?;
    }
    usize::try_from(len).map_err(|_| Error::TensorFormat("dims overflow".into()))
}

/// Serializes a tensor to ETEN bytes.
pub fn encode_tensor(t: &Tensor) -> Result<Vec<u8>> {
    let len = checked_len(&t.dims)?;
    if t.data.len() != len {
        return Err(Error::TensorFormat("payload length mismatch".into()));
    }
    if t.dims.len() > u16::MAX as usize {
        return Err(Error::TensorFormat("rank exceeds u16".into()));
    }
    let mut out = Vec::with_capacity(8 + t.dims.len() * 8 + t.data.len() * 4);
    out.extend_from_slice(ETEN_MAGIC);
    out.extend_from_slice(&ETEN_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.dims.len() as u16).to_le_bytes());
    for &d in &t.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses ETEN bytes.
pub fn parse_tensor(bytes: &[u8]) -> Result<Tensor> {
    let need = |n: usize, at: usize| -> Result<()> {
        if bytes.len() < at + n {
            Err(Error::TensorFormat(format!(
                "truncated file: need {} bytes at offset {}, have {}",
                n,
                at,
                bytes.len()
            )))
        } else {
            Ok(())
        }
    };
    need(8, 0)?;
    if &bytes[0..4] != ETEN_MAGIC {
        return Err(Error::TensorFormat("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != ETEN_VERSION {
        return Err(Error::TensorFormat(format!("unsupported version {}", version)));
    }
    let rank = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if rank == 0 {
        return Err(Error::TensorFormat("empty dims".into()));
    }
    need(rank * 8, 8)?;
    let dims: Vec<u64> = (0..rank)
        .map(|i| {
            let at = 8 + i * 8;
            u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
        })
        .collect();
    let len = checked_len(&dims)?;
    let payload_at = 8 + rank * 8;
    let payload_bytes = len
        .checked_mul(4)
        .ok_or_else(|| Error::TensorFormat("dims overflow".into()))?;
    if bytes.len() != payload_at + payload_bytes {
        return Err(Error::TensorFormat(format!(
            "payload length mismatch: dims {:?} require {} bytes, file has {}",
            dims,
            payload_bytes,
            bytes.len() - payload_at
        )));
    }
    let data: Vec<f32> = bytes[payload_at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor { dims, data })
}

/// Reads an ETEN file.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    parse_tensor(&std::fs::read(path)?)
}

/// Writes an ETEN file.
pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_tensor(t)?)?;
    Ok(())
}

/// Rank-4 latent sequence `[frames, height, width, channels]`, frame-major
/// row-major, all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSeq {
    dims: [usize; 4],
    data: Vec<f32>,
}

impl LatentSeq {
    pub fn new(dims: [usize; 4], data: Vec<f32>) -> Result<Self> {
        let len = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let len = len.ok_or_else(|| Error::TensorFormat("dims overflow".into()))?;
        if data.len() != len {
            return Err(Error::DimMismatch(format!(
                "data has {} values, dims {:?} require {}",
                data.len(),
                dims,
                len
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("non-finite latent value at index {}", i)));
        }
        Ok(LatentSeq { dims, data })
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        LatentSeq {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn filled(dims: [usize; 4], v: f32) -> Self {
        LatentSeq {
            dims,
            data: vec![v; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn n_frames(&self) -> usize {
        self.dims[0]
    }

    /// Dims of a single frame: `[height, width, channels]`.
    pub fn frame_dims(&self) -> [usize; 3] {
        [self.dims[1], self.dims[2], self.dims[3]]
    }

    pub fn frame_len(&self) -> usize {
        self.dims[1] * self.dims[2] * self.dims[3]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        let len = self.frame_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn same_dims(&self, other: &LatentSeq) -> bool {
        self.dims == other.dims
    }

    /// Elementwise sum; dims must match.
    pub fn add(&self, other: &LatentSeq) -> Result<LatentSeq> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise difference; dims must match.
    pub fn sub(&self, other: &LatentSeq) -> Result<LatentSeq> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &LatentSeq, f: impl Fn(f32, f32) -> f32) -> Result<LatentSeq> {
        if !self.same_dims(other) {
            return Err(Error::DimMismatch(format!(
                "latent dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(LatentSeq {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor {
            dims: self.dims.iter().map(|&d| d as u64).collect(),
            data: self.data.clone(),
        }
    }

    pub fn from_tensor(t: Tensor) -> Result<Self> {
        if t.dims.len() != 4 {
            return Err(Error::DimMismatch(format!(
                "latent sequence needs rank 4, got rank {}",
                t.dims.len()
            )));
        }
        let mut dims = [0usize; 4];
        for (d, &v) in dims.iter_mut().zip(&t.dims) {
            *d = usize::try_from(v).map_err(|_| Error::TensorFormat("dims overflow".into()))?;
        }
        LatentSeq::new(dims, t.data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_tensor(&self.to_tensor(), path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        LatentSeq::from_tensor(read_tensor(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_layout() {
        let t = Tensor::new(vec![1, 1, 1, 1], vec![3.5]).unwrap();
        let bytes = encode_tensor(&t).unwrap();
        // 4 magic + 2 version + 2 rank + 4*8 dims = 40 header bytes, 4 payload
        assert_eq!(bytes.len(), 44);
        assert_eq!(&bytes[0..4], b"ETEN");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 4);
        assert_eq!(&bytes[40..44], &3.5f32.to_le_bytes());
        assert_eq!(parse_tensor(&bytes).unwrap(), t);
    }

    #[test]
    fn rank4_zeros_roundtrip() {
        let t = Tensor::new(vec![2, 2, 2, 2], vec![0.0; 16]).unwrap();
        let back = parse_tensor(&encode_tensor(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn empty_dims_rejected() {
        assert!(Tensor::new(vec![], vec![]).is_err());
        // rank 0 on the wire
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"ETEN");
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&0u16.to_le_bytes());
        assert!(parse_tensor(&bytes).is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        let t = Tensor::new(vec![1], vec![1.0]).unwrap();
        let mut bytes = encode_tensor(&t).unwrap();
        bytes[0] = b'X';
        assert!(matches!(parse_tensor(&bytes), Err(Error::TensorFormat(_))));
    }

    #[test]
    fn dims_overflow_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"ETEN");
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.extend_from_slice(&8u64.to_le_bytes());
        assert!(matches!(parse_tensor(&bytes), Err(Error::TensorFormat(_))));
    }

    #[test]
    fn payload_mismatch_rejected() {
        let t = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_tensor(&t).unwrap();
        bytes.truncate(bytes.len() - 1);
        assert!(parse_tensor(&bytes).is_err());
        bytes.extend_from_slice(&[0; 5]);
        assert!(parse_tensor(&bytes).is_err());
    }

    #[test]
    fn latent_rejects_non_finite() {
        assert!(LatentSeq::new([1, 1, 1, 2], vec![1.0, f32::NAN]).is_err());
        assert!(LatentSeq::new([1, 1, 1, 2], vec![1.0, f32::INFINITY]).is_err());
    }

    #[test]
    fn latent_frame_view() {
        let l = LatentSeq::new([2, 1, 1, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(l.frame(0), &[1.0, 2.0]);
        assert_eq!(l.frame(1), &[3.0, 4.0]);
    }
}
