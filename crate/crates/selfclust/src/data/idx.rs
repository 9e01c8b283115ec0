//! IDX (MNIST-style) binary ingestion and emission.
//!
//! Layout is big-endian throughout: a 32-bit magic (0x00000803 for image
//! files, 0x00000801 for label files), the dimension sizes as 32-bit
//! integers, then row-major unsigned bytes. Pixels are scaled to [0, 1]
//! by /255 on read and quantized by round(·×255) on write.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 2051; // 0x00000803
const LABEL_MAGIC: u32 = 2049; // 0x00000801

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8], what: &'a str) -> Self {
        Cursor { buf, pos: 0, what }
    }

    fn u32(&mut self) -> Result<u32> {
        let bytes = self.take(4)?;
        Ok(u32::from_be_bytes(bytes.try_into().expect("4 bytes")))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(format!(
                "truncated {} file: wanted {} bytes at offset {}, have {}",
                self.what,
                n,
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
}

/// Loads an IDX image file, optionally paired with an IDX label file whose
/// count must match. Labels become the dataset's ground truth.
pub fn load_mnist_idx(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset> {
    let buf = fs::read(images_path)?;
    let mut cur = Cursor::new(&buf, "image");
    let magic = cur.u32()?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(format!(
            "wrong magic for image file: got {magic}, expected {IMAGE_MAGIC}"
        )));
    }
    let n = cur.u32()? as usize;
    let h = cur.u32()? as usize;
    let w = cur.u32()? as usize;
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::format(format!(
            "degenerate image file header: {n} images of {h}x{w}"
        )));
    }
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = cur.take(h * w)?;
        let pixels: Vec<f64> = raw.iter().map(|&b| f64::from(b) / 255.0).collect();
        images.push(Array2::from_shape_vec((h, w), pixels).expect("shape matches take"));
    }

    let true_labels = match labels_path {
        None => None,
        Some(path) => {
            let lbuf = fs::read(path)?;
            let mut lcur = Cursor::new(&lbuf, "label");
            let lmagic = lcur.u32()?;
            if lmagic != LABEL_MAGIC {
                return Err(Error::format(format!(
                    "wrong magic for label file: got {lmagic}, expected {LABEL_MAGIC}"
                )));
            }
            let ln = lcur.u32()? as usize;
            if ln != n {
                return Err(Error::format(format!(
                    "count mismatch: {n} images but {ln} labels"
                )));
            }
            let raw = lcur.take(ln)?;
            Some(raw.iter().map(|&b| b as usize).collect())
        }
    };

    let names = (0..n).map(|i| format!("idx-{i:05}")).collect();
    Dataset::new(images, true_labels, names)
}

/// Writes the dataset's images as an IDX image file (bytes = round(p×255)).
pub fn write_idx_images(ds: &Dataset, path: &Path) -> Result<()> {
    let (h, w) = (ds.height(), ds.width());
    let mut out = Vec::with_capacity(16 + ds.len() * h * w);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    out.extend_from_slice(&(h as u32).to_be_bytes());
    out.extend_from_slice(&(w as u32).to_be_bytes());
    for im in ds.images() {
        for &p in im.iter() {
            out.push((p * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes labels as an IDX label file. Labels must fit in a byte.
pub fn write_idx_labels(labels: &[usize], path: &Path) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&l| l > 255) {
        return Err(Error::invalid(format!(
            "label {bad} does not fit in a byte"
        )));
    }
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend(labels.iter().map(|&l| l as u8));
    fs::write(path, out)?;
    Ok(())
}
