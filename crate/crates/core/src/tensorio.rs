//! Minimal tensor container shared with the training component.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "TSR1"            4 bytes magic
//! dtype             u8   0 = float32, 1 = uint8
//! ndim              u8
//! dims              ndim × u64
//! payload           product(dims) elements, row-major
//! ```
//!
//! A zero-dimensional tensor is a scalar with exactly one element.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Volume;
use crate::segeval::Mask;

pub const MAGIC: &[u8; 4] = b"TSR1";

#[derive(Clone, Debug, PartialEq)]
pub enum Tensor {
    F32 { dims: Vec<u64>, data: Vec<f32> },
    U8 { dims: Vec<u64>, data: Vec<u8> },
}

fn element_count(dims: &[u64]) -> Result<usize> {
    dims.iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::Format(format!("tensor dims {dims:?} overflow")))
}

impl Tensor {
    pub fn from_f64(dims: Vec<usize>, values: &[f64]) -> Tensor {
        Tensor::F32 {
            dims: dims.into_iter().map(|d| d as u64).collect(),
            data: values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn dims(&self) -> &[u64] {
        match self {
            Tensor::F32 { dims, .. } | Tensor::U8 { dims, .. } => dims,
        }
    }

    pub fn dtype_code(&self) -> u8 {
        match self {
            Tensor::F32 { .. } => 0,
            Tensor::U8 { .. } => 1,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Tensor::F32 { data, .. } => data.len(),
            Tensor::U8 { data, .. } => data.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Tensor::F32 { data, .. } => data.iter().map(|&v| v as f64).collect(),
            Tensor::U8 { data, .. } => data.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = element_count(self.dims())?;
        if n != self.len() {
            return Err(Error::Format(format!(
                "tensor dims {:?} need {n} elements, payload has {}",
                self.dims(),
                self.len()
            )));
        }
        if self.dims().len() > u8::MAX as usize {
            return Err(Error::Format("too many dimensions".into()));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let dims = self.dims();
        let mut out = Vec::with_capacity(6 + 8 * dims.len() + 4 * self.len());
        out.extend_from_slice(MAGIC);
        out.push(self.dtype_code());
        out.push(dims.len() as u8);
        for d in dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        match self {
            Tensor::F32 { data, .. } => data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
            Tensor::U8 { data, .. } => out.extend_from_slice(data),
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Tensor> {
        if bytes.len() < 6 {
            return Err(Error::Format("file shorter than the tensor header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4]))));
        }
        let dtype = bytes[4];
        let ndim = bytes[5] as usize;
        let header = 6 + 8 * ndim;
        if bytes.len() < header {
            return Err(Error::Format("truncated tensor dims".into()));
        }
        let dims: Vec<u64> = bytes[6..header]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let n = element_count(&dims)?;
        let payload = &bytes[header..];
        let elem = match dtype {
            0 => 4,
            1 => 1,
            other => return Err(Error::Format(format!("unknown dtype code {other}"))),
        };
        let expected = n
            .checked_mul(elem)
            .ok_or_else(|| Error::Format("payload size overflow".into()))?;
        if payload.len() < expected {
            return Err(Error::Format(format!(
                "truncated payload: {} of {expected} bytes",
                payload.len()
            )));
        }
        if payload.len() > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                payload.len() - expected
            )));
        }
        Ok(match dtype {
            0 => Tensor::F32 {
                dims,
                data: payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                    .collect(),
            },
            _ => Tensor::U8 {
                dims,
                data: payload.to_vec(),
            },
        })
    }
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    let bytes = tensor.encode()?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::decode(&bytes)
}

pub fn volume_tensor(v: &Volume) -> Tensor {
    Tensor::from_f64(vec![v.height, v.width], &v.data)
}

pub fn write_volume(path: &Path, v: &Volume) -> Result<()> {
    write_tensor(path, &volume_tensor(v))
}

/// Reads a 2D tensor of either dtype as a volume.
pub fn read_volume(path: &Path, pixel_spacing: f64) -> Result<Volume> {
    let t = read_tensor(path)?;
    let [h, w] = two_dims(&t)?;
    Volume::from_vec(h, w, pixel_spacing, t.to_f64())
}

pub fn write_mask(path: &Path, m: &Mask) -> Result<()> {
    write_tensor(
        path,
        &Tensor::U8 {
            dims: vec![m.height as u64, m.width as u64],
            data: m.data.clone(),
        },
    )
}

/// Reads a binary mask. uint8 files must already hold {0, 1}; float files are
/// thresholded at 0.5.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let t = read_tensor(path)?;
    let [h, w] = two_dims(&t)?;
    match t {
        Tensor::U8 { data, .. } => Mask::new(h, w, data),
        Tensor::F32 { data, .. } => Mask::new(h, w, data.iter().map(|&v| (v >= 0.5) as u8).collect()),
    }
}

fn two_dims(t: &Tensor) -> Result<[usize; 2]> {
    match t.dims() {
        [h, w] => Ok([*h as usize, *w as usize]),
        other => Err(Error::Format(format!("expected a 2D tensor, got dims {other:?}"))),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_3x4_float() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tsr");
        let t = Tensor::F32 {
            dims: vec![3, 4],
            data: (0..12).map(|i| i as f32 * 0.25 - 1.0).collect(),
        };
        write_tensor(&path, &t).unwrap();
        assert_eq!(read_tensor(&path).unwrap(), t);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = Tensor::U8 {
            dims: vec![2, 2],
            data: vec![0, 1, 1, 0],
        }
        .encode()
        .unwrap();
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(Tensor::decode(&bad), Err(Error::Format(_))));
        bytes.pop();
        assert!(matches!(Tensor::decode(&bytes), Err(Error::Format(_))));
        assert!(matches!(Tensor::decode(b"TSR1\x07\x00"), Err(Error::Format(_))));
    }

    #[test]
    fn scalar_has_one_element() {
        let t = Tensor::F32 {
            dims: vec![],
            data: vec![3.5],
        };
        let bytes = t.encode().unwrap();
        assert_eq!(bytes.len(), 6 + 4);
        assert_eq!(Tensor::decode(&bytes).unwrap(), t);
        let empty = Tensor::F32 {
            dims: vec![],
            data: vec![],
        };
        assert!(empty.encode().is_err());
    }

    #[test]
    fn header_layout_is_little_endian() {
        let bytes = Tensor::U8 {
            dims: vec![1, 258],
            data: vec![1; 258],
        }
        .encode()
        .unwrap();
        assert_eq!(&bytes[..6], b"TSR1\x01\x02");
        assert_eq!(&bytes[6..14], &1u64.to_le_bytes());
        assert_eq!(&bytes[14..22], &[2, 1, 0, 0, 0, 0, 0, 0]);
    }

    proptest! {
        #[test]
        fn encode_decode_is_bit_exact(dims in prop::collection::vec(0u64..5, 0..4), seed in any::<u32>()) {
            let n: u64 = dims.iter().product();
            let data: Vec<f32> = (0..n).map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 97))).collect();
            let t = Tensor::F32 { dims, data };
            let back = Tensor::decode(&t.encode().unwrap()).unwrap();
            let (Tensor::F32 { dims: d1, data: a }, Tensor::F32 { dims: d2, data: b }) = (&t, &back) else { panic!() };
            prop_assert_eq!(d1, d2);
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
