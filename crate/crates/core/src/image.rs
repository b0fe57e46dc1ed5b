//! Row-major image containers.

use crate::error::{Error, Result};

/// Depth in meters along camera +Z. Zero marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims("depth image", width * height, data.len()));
        }
        if data.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("depth image"));
        }
        if data.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidConfig("depth image holds negative values".into()));
        }
        Ok(Self { width, height, data })
    }

    /// All-invalid image.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn num_valid(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Dense `height x width x channels` feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidConfig("feature images need at least one channel".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::dims(
                "feature image",
                "non-empty image",
                format!("{width}x{height}"),
            ));
        }
        if data.len() != width * height * channels {
            return Err(Error::dims("feature image", width * height * channels, data.len()));
        }
        if data.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("feature image"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Every pixel holds `feature`.
    pub fn constant(width: usize, height: usize, feature: &[f32]) -> Result<Self> {
        let data = feature
            .iter()
            .copied()
            .cycle()
            .take(width * height * feature.len())
            .collect();
        Self::new(width, height, feature.len(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel(&self, col: usize, row: usize) -> &[f32] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Value range of a color image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorScale {
    /// Channels in `[0, 255]`.
    Byte,
    /// Channels in `[0, 1]`.
    Unit,
}

impl ColorScale {
    pub fn max_value(self) -> f32 {
        match self {
            ColorScale::Byte => 255.0,
            ColorScale::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    channels: usize,
    scale: ColorScale,
    data: Vec<f32>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, channels: usize, scale: ColorScale, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::dims("color image", width * height * channels, data.len()));
        }
        if data.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("color image"));
        }
        let max = scale.max_value();
        if data.iter().any(|&d| !(0.0..=max).contains(&d)) {
            return Err(Error::InvalidConfig(format!("color values must lie in [0, {max}]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            scale,
            data,
        })
    }

    pub fn from_bytes(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| b as f32).collect();
        Self::new(width, height, channels, ColorScale::Byte, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn scale(&self) -> ColorScale {
        self.scale
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}
