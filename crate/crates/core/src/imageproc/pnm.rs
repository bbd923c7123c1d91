//! Binary PGM (P5) and PPM (P6) with 8-bit samples. ASCII P2/P3 files are
//! accepted on input.

use std::fs;
use std::path::Path;

use super::{GrayImage, ImageError, ThreePlaneImage};
use crate::textfmt::FormatError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pnm {
    Gray(GrayImage),
    Rgb(ThreePlaneImage),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a str,
}

impl<'a> Cursor<'a> {
    fn fail(&self, message: impl Into<String>) -> ImageError {
        ImageError::Pnm {
            origin: self.origin.to_string(),
            message: message.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.fail(format!("expected {what}")))
    }
}

pub fn decode_pnm(bytes: &[u8], origin: &str) -> Result<Pnm, ImageError> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        origin,
    };
    let magic = bytes.get(..2).ok_or_else(|| cur.fail("file too short"))?;
    let (channels, binary) = match magic {
        b"P5" => (1, true),
        b"P6" => (3, true),
        b"P2" => (1, false),
        b"P3" => (3, false),
        _ => return Err(cur.fail("not a PGM/PPM file")),
    };
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(cur.fail(format!("only 8-bit samples are supported, maxval is {maxval}")));
    }
    let count = width as usize * height as usize * channels;
    let samples = if binary {
        // exactly one whitespace byte separates the header from the raster
        if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(cur.fail("missing whitespace after header"));
        }
        let start = cur.pos + 1;
        let raster = bytes
            .get(start..start + count)
            .ok_or_else(|| cur.fail(format!("expected {count} raster bytes")))?;
        raster.to_vec()
    } else {
        (0..count)
            .map(|_| {
                let v = cur.number("sample")?;
                if v > maxval {
                    return Err(cur.fail(format!("sample {v} exceeds maxval {maxval}")));
                }
                Ok(v as u8)
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if channels == 1 {
        Ok(Pnm::Gray(GrayImage::new(width, height, samples)?))
    } else {
        Ok(Pnm::Rgb(ThreePlaneImage::from_interleaved(width, height, &samples)?))
    }
}

pub fn read_pnm(path: &Path) -> Result<Pnm, ImageError> {
    let bytes = fs::read(path).map_err(|e| FormatError::io(path, e))?;
    decode_pnm(&bytes, &path.display().to_string())
}

/// Reads a single-plane image. Three-plane files are accepted when all planes
/// are identical, which is how IR frames are often stored.
pub fn read_gray(path: &Path) -> Result<GrayImage, ImageError> {
    match read_pnm(path)? {
        Pnm::Gray(img) => Ok(img),
        Pnm::Rgb(rgb) => rgb.as_replicated().cloned().ok_or_else(|| ImageError::Pnm {
            origin: path.display().to_string(),
            message: "three-plane image with differing planes is not a grayscale image".into(),
        }),
    }
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_ppm(img: &ThreePlaneImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.interleaved());
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ImageError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| FormatError::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| FormatError::io(path, e).into())
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<(), ImageError> {
    write_bytes(path, &encode_pgm(img))
}

pub fn write_ppm(img: &ThreePlaneImage, path: &Path) -> Result<(), ImageError> {
    write_bytes(path, &encode_ppm(img))
}

impl Pnm {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            Pnm::Gray(g) => encode_pgm(g),
            Pnm::Rgb(c) => encode_ppm(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(decode_pnm(&bytes, "m").unwrap(), Pnm::Gray(img));
    }

    #[test]
    fn ppm_round_trip() {
        let img = ThreePlaneImage::from_interleaved(2, 1, &[1, 2, 3, 4, 5, 6]).unwrap();
        let bytes = encode_ppm(&img);
        assert_eq!(&bytes[..11], b"P6\n2 1\n255\n");
        assert_eq!(decode_pnm(&bytes, "m").unwrap(), Pnm::Rgb(img));
    }

    #[test]
    fn header_comments_and_ascii() {
        let bytes = b"P2\n# made by hand\n2 2\n# max\n15\n0 5\n10 15\n";
        let Pnm::Gray(img) = decode_pnm(bytes, "m").unwrap() else {
            panic!("expected gray");
        };
        assert_eq!(img.data(), &[0, 5, 10, 15]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(decode_pnm(b"P7\n", "m").is_err());
        assert!(decode_pnm(b"P5\n2 2\n65535\n", "m").is_err());
        assert!(decode_pnm(b"P5\n2 2\n255\n\x01\x02", "m").is_err());
        assert!(decode_pnm(b"P5", "m").is_err());
    }
}
