//! IDX files as distributed with MNIST.
//!
//! Layout: a 4-byte big-endian magic (`0x00000803` = 2051 for rank-3 `u8`
//! images, `0x00000801` = 2049 for rank-1 `u8` labels), one 4-byte big-endian
//! size per dimension, then the raw bytes. Files must be exactly as long as
//! the header declares.

use std::fs;
use std::path::Path;

use crate::error::{Error, ParseError, Result};
use crate::nn::Matrix;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize) -> std::result::Result<u32, ParseError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(ParseError::Truncated {
            needed: offset + 4,
            available: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, rank: usize) -> std::result::Result<(), ParseError> {
    let found = read_u32(bytes, 0)?;
    if found == expected {
        return Ok(());
    }
    // same data type (0x08 = u8) but another rank
    if found >> 8 == expected >> 8 {
        return Err(ParseError::BadRank {
            found: (found & 0xff) as usize,
            expected: rank,
        });
    }
    Err(ParseError::BadMagic { found, expected })
}

fn check_length(bytes: &[u8], expected: usize) -> std::result::Result<(), ParseError> {
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(ParseError::Truncated {
            needed: expected,
            available: bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(ParseError::TrailingBytes {
            expected,
            found: bytes.len(),
        }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

pub fn parse_idx_images(bytes: &[u8]) -> std::result::Result<IdxImages, ParseError> {
    check_magic(bytes, IMAGE_MAGIC, 3)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let body = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .and_then(|v| v.checked_add(16))
        .ok_or(ParseError::Truncated {
            needed: usize::MAX,
            available: bytes.len(),
        })?;
    check_length(bytes, body)?;
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> std::result::Result<Vec<u8>, ParseError> {
    check_magic(bytes, LABEL_MAGIC, 1)?;
    let count = read_u32(bytes, 4)? as usize;
    check_length(bytes, count + 8)?;
    let labels = bytes[8..].to_vec();
    if let Some(&bad) = labels.iter().find(|&&l| l > 9) {
        return Err(ParseError::LabelOutOfRange(bad));
    }
    Ok(labels)
}

pub fn write_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for d in [images.count, images.rows, images.cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Images scaled to `[0, 1]` and flattened row-major, with digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitDataset {
    pub features: Matrix,
    pub digits: Vec<u8>,
}

impl DigitDataset {
    /// First `n` samples (all of them when `n` exceeds the count).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.digits.len());
        let rows: Vec<usize> = (0..n).collect();
        Self {
            features: self.features.select_rows(&rows),
            digits: self.digits[..n].to_vec(),
        }
    }
}

pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<DigitDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let images = parse_idx_images(&image_bytes).map_err(|e| Error::parse(images_path, e))?;
    let digits = parse_idx_labels(&label_bytes).map_err(|e| Error::parse(labels_path, e))?;
    if images.count != digits.len() {
        return Err(Error::parse(
            labels_path,
            ParseError::CountMismatch {
                images: images.count,
                labels: digits.len(),
            },
        ));
    }
    let d = images.rows * images.cols;
    let values = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Ok(DigitDataset {
        features: Matrix::from_vec(images.count, d, values)?,
        digits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two 2×2 images and their labels, spelled out byte by byte.
    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let images = vec![
            0x00, 0x00, 0x08, 0x03, // magic 2051
            0x00, 0x00, 0x00, 0x02, // count
            0x00, 0x00, 0x00, 0x02, // rows
            0x00, 0x00, 0x00, 0x02, // cols
            0, 255, 51, 102, // image 0
            255, 0, 0, 204, // image 1
        ];
        let labels = vec![0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 7, 4];
        (images, labels)
    }

    #[test]
    fn parses_hand_built_fixture() {
        let (img, lab) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lab");
        fs::write(&ip, &img).unwrap();
        fs::write(&lp, &lab).unwrap();
        let ds = load_mnist_idx(&ip, &lp).unwrap();
        assert_eq!(ds.features.shape(), (2, 4));
        assert_eq!(ds.features.row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(ds.features.row(1), &[1.0, 0.0, 0.0, 0.8]);
        assert_eq!(ds.digits, vec![7, 4]);
    }

    #[test]
    fn writer_round_trips() {
        let (img, lab) = fixture();
        assert_eq!(write_idx_images(&parse_idx_images(&img).unwrap()), img);
        assert_eq!(write_idx_labels(&parse_idx_labels(&lab).unwrap()), lab);
    }

    #[test]
    fn rejects_every_header_perturbation() {
        let (img, lab) = fixture();
        for byte in 0..16 {
            let mut bad = img.clone();
            bad[byte] ^= 0x01;
            assert!(parse_idx_images(&bad).is_err(), "image header byte {byte}");
        }
        for byte in 0..8 {
            let mut bad = lab.clone();
            bad[byte] ^= 0x01;
            assert!(parse_idx_labels(&bad).is_err(), "label header byte {byte}");
        }
    }

    #[test]
    fn distinct_errors() {
        let (img, lab) = fixture();
        let mut m = img.clone();
        m[2] = 0x09;
        assert!(matches!(parse_idx_images(&m), Err(ParseError::BadMagic { .. })));
        let mut r = img.clone();
        r[3] = 0x02;
        assert!(matches!(parse_idx_images(&r), Err(ParseError::BadRank { found: 2, .. })));
        assert!(matches!(
            parse_idx_images(&img[..img.len() - 1]),
            Err(ParseError::Truncated { .. })
        ));
        assert!(matches!(parse_idx_images(&img[..6]), Err(ParseError::Truncated { .. })));
        let mut extra = img.clone();
        extra.push(0);
        assert!(matches!(parse_idx_images(&extra), Err(ParseError::TrailingBytes { .. })));
        let mut badlab = lab.clone();
        badlab[9] = 12;
        assert!(matches!(parse_idx_labels(&badlab), Err(ParseError::LabelOutOfRange(12))));

        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lab");
        fs::write(&ip, &img).unwrap();
        fs::write(&lp, write_idx_labels(&[1, 2, 3])).unwrap();
        match load_mnist_idx(&ip, &lp) {
            Err(Error::Parse {
                source: ParseError::CountMismatch { images: 2, labels: 3 },
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }
}
