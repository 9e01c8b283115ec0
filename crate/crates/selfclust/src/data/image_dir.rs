//! Class-per-subdirectory corpus ingestion.
//!
//! Each subdirectory of the root holds the images of one class; the
//! subdirectory index in name-sorted order becomes the ground-truth label,
//! so runs are reproducible regardless of filesystem enumeration order.
//! Supported formats: binary PGM (P5) and 8-bit grayscale-convertible PNG.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub fn load_image_dir(root: &Path) -> Result<Dataset> {
    let mut class_dirs: Vec<_> = fs::read_dir(root)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();

    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut names = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        let mut files: Vec<_> = fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|e| e.path().is_file())
            .map(|e| e.path())
            .collect();
        files.sort();
        for file in files {
            let img = image::open(&file)
                .map_err(|e| Error::format(format!("unreadable image {}: {e}", file.display())))?;
            let gray = img.into_luma8();
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            let pixels: Vec<f64> = gray.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect();
            images.push(Array2::from_shape_vec((h, w), pixels).expect("buffer is h*w"));
            labels.push(label);
            let rel = file
                .strip_prefix(root)
                .unwrap_or(&file)
                .to_string_lossy()
                .into_owned();
            names.push(rel);
        }
    }

    if images.is_empty() {
        return Err(Error::format("no samples found"));
    }
    // Dataset::new reports "inconsistent image dimensions" on mixed sizes
    // and validates the label range (contiguous by construction here).
    Dataset::new(images, Some(labels), names)
}
