//! 8-bit grayscale operations for thermal IR imagery.

mod histogram;
mod pnm;
mod resample;

use thiserror::Error;

use crate::textfmt::FormatError;

pub use histogram::{
    average_reference, compute_histogram, format_histogram, histogram_match, matching_lut,
    parse_histogram, parse_histogram_str, write_histogram, IntensityHistogram, HIST_HEADER,
};
pub use pnm::{decode_pnm, encode_pgm, encode_ppm, read_gray, read_pnm, write_pgm, write_ppm, Pnm};
pub use resample::upscale2x;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("image data has {found} bytes, expected {expected}")]
    DataLength { expected: usize, found: usize },
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
    #[error("cannot average an empty list of histograms")]
    NoHistograms,
    #[error("histogram has no mass")]
    EmptyHistogram,
    #[error("histogram bin {bin} has invalid weight {weight}")]
    BadWeight { bin: usize, weight: f64 },
    #[error("{origin}: {message}")]
    Pnm { origin: String, message: String },
}

/// Row-major 8-bit single-plane image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(ImageError::DataLength {
                expected,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len()
    }
}

/// Three equally sized planes, e.g. an IR image prepared for a network that
/// expects RGB input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreePlaneImage {
    planes: [GrayImage; 3],
}

impl ThreePlaneImage {
    pub fn plane(&self, index: usize) -> &GrayImage {
        &self.planes[index]
    }

    pub fn width(&self) -> u32 {
        self.planes[0].width
    }

    pub fn height(&self) -> u32 {
        self.planes[0].height
    }

    /// Pixel-interleaved bytes (`p0 p1 p2 p0 p1 p2 ...`).
    pub fn interleaved(&self) -> Vec<u8> {
        let [a, b, c] = &self.planes;
        a.data
            .iter()
            .zip(&b.data)
            .zip(&c.data)
            .flat_map(|((&x, &y), &z)| [x, y, z])
            .collect()
    }

    /// Splits pixel-interleaved bytes back into planes.
    pub fn from_interleaved(width: u32, height: u32, data: &[u8]) -> Result<Self, ImageError> {
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(ImageError::DataLength {
                expected,
                found: data.len(),
            });
        }
        let plane = |k: usize| GrayImage::new(width, height, data.iter().skip(k).step_by(3).copied().collect());
        Ok(Self {
            planes: [plane(0)?, plane(1)?, plane(2)?],
        })
    }

    /// The shared plane, if all three are identical.
    pub fn as_replicated(&self) -> Option<&GrayImage> {
        let [a, b, c] = &self.planes;
        (a == b && b == c).then_some(a)
    }
}

/// Copies the single plane into all three.
pub fn replicate_plane(img: &GrayImage) -> ThreePlaneImage {
    ThreePlaneImage {
        planes: [img.clone(), img.clone(), img.clone()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_image_validation() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        let img = GrayImage::new(2, 1, vec![3, 9]).unwrap();
        assert_eq!(img.get(1, 0), 9);
    }

    #[test]
    fn replicate_copies_every_plane() {
        let img = GrayImage::new(1, 1, vec![7]).unwrap();
        let three = replicate_plane(&img);
        assert_eq!(three.interleaved(), vec![7, 7, 7]);

        let img = GrayImage::new(3, 2, vec![1, 2, 3, 4, 5, 250]).unwrap();
        let three = replicate_plane(&img);
        for k in 0..3 {
            assert_eq!(three.plane(k), &img);
        }
        assert_eq!(three.as_replicated(), Some(&img));
        let back = ThreePlaneImage::from_interleaved(3, 2, &three.interleaved()).unwrap();
        assert_eq!(back, three);
    }

    #[test]
    fn distinct_planes_are_not_replicated() {
        let three = ThreePlaneImage::from_interleaved(1, 1, &[1, 2, 3]).unwrap();
        assert!(three.as_replicated().is_none());
    }
}
