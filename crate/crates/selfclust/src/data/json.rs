//! JSON dataset interchange. IDX files quantize pixels to u8, which would
//! destroy real-valued synthetic data, so generated datasets round-trip
//! through this lossless JSON schema instead:
//!
//! ```json
//! {
//!   "height": 1,
//!   "width": 6,
//!   "pixels": [[0.1, ...], ...],   // one row-major row per sample
//!   "labels": [0, 1, ...],         // or null
//!   "names": ["blob-c0-0000", ...]
//! }
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    height: usize,
    width: usize,
    pixels: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
    names: Vec<String>,
}

/// Writes a dataset as JSON with full f64 precision.
pub fn save_dataset_json(ds: &Dataset, path: &Path) -> Result<()> {
    let file = DatasetFile {
        height: ds.height(),
        width: ds.width(),
        pixels: ds
            .images()
            .iter()
            .map(|im| im.iter().copied().collect())
            .collect(),
        labels: ds.true_labels().map(|l| l.to_vec()),
        names: ds.names().to_vec(),
    };
    fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset_json`].
pub fn load_dataset_json(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text)?;
    if file.height == 0 || file.width == 0 {
        return Err(Error::format("dataset file has a zero dimension"));
    }
    let expected = file.height * file.width;
    let images = file
        .pixels
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != expected {
                return Err(Error::format(format!(
                    "sample {i} has {} pixels, expected {expected}",
                    row.len()
                )));
            }
            Array2::from_shape_vec((file.height, file.width), row)
                .map_err(|e| Error::format(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(images, file.labels, file.names)
}
