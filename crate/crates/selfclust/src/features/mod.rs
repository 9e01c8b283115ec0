//! Boot-stage handcrafted feature extractors: raw pixels, oriented-gradient
//! histograms (HOG), Gabor filter banks, and a PCA post-mapping.

pub mod gabor;
pub mod hog;
pub mod pca;

pub use gabor::extract_gabor;
pub use hog::extract_hog;
pub use pca::{apply_pca, fit_pca, PcaModel};

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// N×D feature matrix F, one row per image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
    feature_name: String,
}

impl FeatureMatrix {
    /// Wraps a matrix, rejecting non-finite entries.
    pub fn new(feature_name: impl Into<String>, data: Array2<f64>) -> Result<Self> {
        if let Some(((i, j), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invariant(format!(
                "non-finite feature value {v} at ({i}, {j})"
            )));
        }
        Ok(FeatureMatrix {
            data,
            feature_name: feature_name.into(),
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn feature_name(&self) -> &str {
        &self.feature_name
    }

    /// Number of samples N.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Feature dimension D.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, f64> {
        self.data.row(i)
    }

    /// A new matrix holding the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut out = Array2::zeros((idx.len(), self.dim()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&self.data.row(i));
        }
        FeatureMatrix {
            data: out,
            feature_name: self.feature_name.clone(),
        }
    }
}

/// Raw pixels: each image flattened row-major, values untouched. D = H·W.
pub fn extract_raw(ds: &Dataset) -> FeatureMatrix {
    let d = ds.height() * ds.width();
    let mut data = Array2::zeros((ds.len(), d));
    for (i, im) in ds.images().iter().enumerate() {
        for (j, &v) in im.iter().enumerate() {
            data[(i, j)] = v;
        }
    }
    FeatureMatrix {
        data,
        feature_name: "raw".into(),
    }
}

/// Dumps the matrix as CSV: header `name,dim0,...,dim{D-1}`, one row per
/// sample with its identifier followed by the feature values.
pub fn write_feature_csv(f: &FeatureMatrix, names: &[String], path: &Path) -> Result<()> {
    if names.len() != f.n() {
        return Err(Error::dim(format!(
            "{} names for {} feature rows",
            names.len(),
            f.n()
        )));
    }
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write!(w, "name")?;
    for j in 0..f.dim() {
        write!(w, ",dim{j}")?;
    }
    writeln!(w)?;
    for (i, name) in names.iter().enumerate() {
        write!(w, "{name}")?;
        for v in f.row(i) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
