//! Dataset representation, ingestion, synthetic generation, configuration,
//! and seeded randomness.

pub mod config;
pub mod idx;
pub mod image_dir;
pub mod json;
pub mod rng;
pub mod synth;

pub use config::{BootFeature, Clusterer, Distance, LearnerParams, RunConfig};
pub use rng::{SeededRng, StreamPurpose};

use ndarray::Array2;

use crate::error::{Error, Result};

/// A set of N grayscale images with optional ground-truth labels.
///
/// Ground truth, when present, is used for evaluation only — the training
/// loop never reads it. Pixel values from file ingestion live in [0, 1];
/// synthetic datasets store raw real-valued coordinates as 1×D "images".
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<Array2<f64>>,
    true_labels: Option<Vec<usize>>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, enforcing shape and label invariants.
    pub fn new(
        images: Vec<Array2<f64>>,
        true_labels: Option<Vec<usize>>,
        names: Vec<String>,
    ) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::invalid("dataset must contain at least one image"));
        }
        let dim = images[0].dim();
        if let Some(i) = images.iter().position(|im| im.dim() != dim) {
            return Err(Error::format(format!(
                "inconsistent image dimensions: sample {i} is {:?}, expected {:?}",
                images[i].dim(),
                dim
            )));
        }
        if let Some(bad) = images
            .iter()
            .position(|im| im.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::format(format!(
                "non-finite pixel value in sample {bad}"
            )));
        }
        if names.len() != images.len() {
            return Err(Error::dim(format!(
                "{} names for {} images",
                names.len(),
                images.len()
            )));
        }
        if let Some(labels) = &true_labels {
            if labels.len() != images.len() {
                return Err(Error::dim(format!(
                    "{} labels for {} images",
                    labels.len(),
                    images.len()
                )));
            }
            let max = *labels.iter().max().expect("nonempty");
            let mut present = vec![false; max + 1];
            for &l in labels {
                present[l] = true;
            }
            if present.iter().any(|p| !p) {
                return Err(Error::invalid(
                    "true labels must cover a contiguous 0-based range",
                ));
            }
        }
        Ok(Dataset {
            images,
            true_labels,
            names,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Image height H (identical for all samples).
    pub fn height(&self) -> usize {
        self.images[0].nrows()
    }

    /// Image width W (identical for all samples).
    pub fn width(&self) -> usize {
        self.images[0].ncols()
    }

    pub fn images(&self) -> &[Array2<f64>] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &Array2<f64> {
        &self.images[i]
    }

    pub fn true_labels(&self) -> Option<&[usize]> {
        self.true_labels.as_deref()
    }

    /// Number of distinct ground-truth classes, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.true_labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Preprocessing hook: bilinear resize of every image to a common
    /// target size. Corpora whose source sizes vary must be resized before
    /// `Dataset` construction; this hook covers shrinking or growing an
    /// already-consistent dataset (e.g. to tame feature dimensionality).
    /// Bilinear interpolation is the one documented choice.
    pub fn resize(&self, new_h: usize, new_w: usize) -> Result<Dataset> {
        if new_h == 0 || new_w == 0 {
            return Err(Error::invalid("resize target must be positive"));
        }
        let images = self
            .images
            .iter()
            .map(|im| bilinear_resize(im, new_h, new_w))
            .collect();
        Dataset::new(images, self.true_labels.clone(), self.names.clone())
    }
}

/// Bilinear interpolation with edge clamping; exact identity when the size
/// is unchanged.
fn bilinear_resize(im: &Array2<f64>, new_h: usize, new_w: usize) -> Array2<f64> {
    let (h, w) = im.dim();
    if (h, w) == (new_h, new_w) {
        return im.clone();
    }
    let sy = h as f64 / new_h as f64;
    let sx = w as f64 / new_w as f64;
    Array2::from_shape_fn((new_h, new_w), |(r, c)| {
        // Align pixel centers: target center maps to source coordinates.
        let y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let y0 = y.floor() as usize;
        let x0 = x.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let x1 = (x0 + 1).min(w - 1);
        let dy = y - y0 as f64;
        let dx = x - x0 as f64;
        im[(y0, x0)] * (1.0 - dy) * (1.0 - dx)
            + im[(y0, x1)] * (1.0 - dy) * dx
            + im[(y1, x0)] * dy * (1.0 - dx)
            + im[(y1, x1)] * dy * dx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn rejects_empty() {
        let err = Dataset::new(vec![], None, vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
    }

    #[test]
    fn rejects_mixed_sizes() {
        let imgs = vec![Array2::zeros((2, 2)), Array2::zeros((2, 3))];
        let err = Dataset::new(imgs, None, names(2)).unwrap_err();
        assert!(err.to_string().contains("inconsistent image dimensions"));
    }

    #[test]
    fn rejects_label_gap() {
        // Labels {0, 2} skip 1: not a contiguous range.
        let imgs = vec![Array2::zeros((1, 1)), Array2::zeros((1, 1))];
        let err = Dataset::new(imgs, Some(vec![0, 2]), names(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
    }

    #[test]
    fn rejects_label_length_mismatch() {
        let imgs = vec![Array2::zeros((1, 1)), Array2::zeros((1, 1))];
        let err = Dataset::new(imgs, Some(vec![0]), names(2)).unwrap_err();
        assert!(matches!(err, Error::DimMismatch(_)));
    }

    #[test]
    fn accessors() {
        let imgs = vec![array![[0.0, 0.5], [1.0, 0.25]]];
        let ds = Dataset::new(imgs, Some(vec![0]), names(1)).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!((ds.height(), ds.width()), (2, 2));
        assert_eq!(ds.n_classes(), Some(1));
        assert_eq!(ds.image(0)[(1, 0)], 1.0);
    }

    #[test]
    fn resize_identity_when_same_size() {
        let imgs = vec![array![[0.0, 0.5], [1.0, 0.25]]];
        let ds = Dataset::new(imgs, None, names(1)).unwrap();
        let r = ds.resize(2, 2).unwrap();
        assert_eq!(r.image(0), ds.image(0));
    }

    #[test]
    fn resize_constant_image_stays_constant() {
        // Interpolating a constant field returns the constant everywhere.
        let imgs = vec![Array2::from_elem((4, 6), 0.7)];
        let ds = Dataset::new(imgs, None, names(1)).unwrap();
        let r = ds.resize(3, 2).unwrap();
        assert_eq!((r.height(), r.width()), (3, 2));
        for v in r.image(0).iter() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn resize_2x_downscale_averages_blocks() {
        // 2→1 along each axis with center alignment samples the midpoint of
        // each 2×2 block, which bilinear reads as the block average.
        let imgs = vec![array![[0.0, 1.0], [1.0, 0.0]]];
        let ds = Dataset::new(imgs, None, names(1)).unwrap();
        let r = ds.resize(1, 1).unwrap();
        assert!((r.image(0)[(0, 0)] - 0.5).abs() < 1e-12);
    }
}
