//! Intensity histograms and histogram specification.

use std::path::Path;

use super::{GrayImage, ImageError};
use crate::textfmt::{self, push_line};

pub const HIST_HEADER: &str = "msbench-hist v1";

/// Slack when comparing CDF values from differently normalized histograms.
const CDF_EPS: f64 = 1e-12;

/// 256-bin intensity distribution. Bins hold pixel counts or, for averaged
/// references, non-negative real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityHistogram {
    bins: [f64; 256],
}

impl IntensityHistogram {
    pub fn from_bins(bins: [f64; 256]) -> Result<Self, ImageError> {
        if let Some((bin, &weight)) = bins
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(ImageError::BadWeight { bin, weight });
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[f64; 256] {
        &self.bins
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Scaled to unit mass.
    pub fn normalized(&self) -> Result<Self, ImageError> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(ImageError::EmptyHistogram);
        }
        let mut bins = self.bins;
        bins.iter_mut().for_each(|b| *b /= total);
        Ok(Self { bins })
    }

    /// Cumulative distribution; the last entry is exactly 1.
    pub fn cdf(&self) -> Result<[f64; 256], ImageError> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(ImageError::EmptyHistogram);
        }
        let mut cdf = [0.0; 256];
        let mut acc = 0.0;
        for (c, b) in cdf.iter_mut().zip(&self.bins) {
            acc += b;
            *c = (acc / total).min(1.0);
        }
        cdf[255] = 1.0;
        Ok(cdf)
    }

    /// Largest single-bin share of the total mass.
    pub fn max_mass(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            self.bins.iter().cloned().fold(0.0, f64::max) / total
        } else {
            0.0
        }
    }
}

pub fn compute_histogram(img: &GrayImage) -> IntensityHistogram {
    let mut counts = [0u64; 256];
    for &v in img.data() {
        counts[v as usize] += 1;
    }
    IntensityHistogram {
        bins: counts.map(|c| c as f64),
    }
}

/// Bin-wise mean of unit-mass versions of `histograms`, so each sample
/// contributes equally regardless of image size.
pub fn average_reference(histograms: &[IntensityHistogram]) -> Result<IntensityHistogram, ImageError> {
    if histograms.is_empty() {
        return Err(ImageError::NoHistograms);
    }
    let mut bins = [0.0; 256];
    for h in histograms {
        let unit = h.normalized()?;
        for (acc, b) in bins.iter_mut().zip(unit.bins.iter()) {
            *acc += b;
        }
    }
    let n = histograms.len() as f64;
    bins.iter_mut().for_each(|b| *b /= n);
    Ok(IntensityHistogram { bins })
}

/// Lookup table sending each source intensity `v` to the smallest `u` whose
/// reference CDF reaches the source CDF at `v`.
pub fn matching_lut(source: &IntensityHistogram, reference: &IntensityHistogram) -> Result<[u8; 256], ImageError> {
    let fs = source.cdf()?;
    let fr = reference.cdf()?;
    let mut lut = [255u8; 256];
    let mut u = 0usize;
    for v in 0..256 {
        // fs is non-decreasing, so the search can resume where it stopped.
        while u < 255 && fr[u] < fs[v] - CDF_EPS {
            u += 1;
        }
        lut[v] = u as u8;
    }
    Ok(lut)
}

/// Remaps intensities so the image's distribution follows `reference`.
pub fn histogram_match(img: &GrayImage, reference: &IntensityHistogram) -> Result<GrayImage, ImageError> {
    let lut = matching_lut(&compute_histogram(img), reference)?;
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    GrayImage::new(img.width(), img.height(), data)
}

pub fn format_histogram(hist: &IntensityHistogram) -> String {
    let mut out = String::from(HIST_HEADER);
    out.push('\n');
    for (i, w) in hist.bins.iter().enumerate() {
        push_line(&mut out, &[&i, w]);
    }
    out
}

pub fn parse_histogram_str(text: &str, origin: &str) -> Result<IntensityHistogram, ImageError> {
    let records = textfmt::records(text, origin, HIST_HEADER)?;
    let mut bins = [0.0; 256];
    let mut seen = [false; 256];
    for rec in &records {
        rec.expect_len(&["bin_index", "weight"])?;
        let index: usize = rec.parse(0, "bin_index")?;
        if index > 255 {
            return Err(rec.error(format!("bin_index {index} out of range 0..=255")).into());
        }
        if seen[index] {
            return Err(rec.error(format!("bin {index} listed twice")).into());
        }
        let weight = rec.real(1, "weight")?;
        if weight < 0.0 {
            return Err(rec.error(format!("weight must be non-negative, got {weight}")).into());
        }
        seen[index] = true;
        bins[index] = weight;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(textfmt::FormatError::Line {
            origin: origin.to_string(),
            line: records.last().map_or(1, |r| r.line),
            message: format!("expected 256 bins, bin {missing} is missing"),
        }
        .into());
    }
    IntensityHistogram::from_bins(bins)
}

pub fn parse_histogram(path: &Path) -> Result<IntensityHistogram, ImageError> {
    let text = textfmt::read_file(path)?;
    parse_histogram_str(&text, &path.display().to_string())
}

pub fn write_histogram(hist: &IntensityHistogram, path: &Path) -> Result<(), ImageError> {
    textfmt::write_file(path, &format_histogram(hist))?;
    Ok(())
}
