use crate::error::{Error, Result};

/// A 2D image of attenuation values stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub height: usize,
    pub width: usize,
    /// Pixel edge length in mm.
    pub pixel_spacing: f64,
    pub data: Vec<f64>,
}

impl Volume {
    pub fn zeros(height: usize, width: usize, pixel_spacing: f64) -> Self {
        Self {
            height,
            width,
            pixel_spacing,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, pixel_spacing: f64, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "volume data has {} values, expected {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite voxel value {v}")));
        }
        Ok(Self {
            height,
            width,
            pixel_spacing,
            data,
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Volume {
        Volume {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Mean over the pixels where `mask` is set.
    pub fn masked_mean(&self, mask: &[bool]) -> f64 {
        let (sum, n) = self
            .data
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Pearson correlation of two equally long sequences; 0 when either is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let da = a[i] - ma;
        let db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}
