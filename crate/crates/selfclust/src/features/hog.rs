//! Histograms of oriented gradients.
//!
//! Pipeline per image: central-difference gradients (clamped at borders),
//! unsigned orientation in [0, π) with magnitude-weighted linear
//! interpolation between the two adjacent bins (bin centers at i·π/bins, so
//! an exactly horizontal gradient lands entirely in bin 0), per-cell
//! histograms over a non-overlapping cell grid, then overlapping blocks of
//! block×block cells, each L2-normalized as v/√(‖v‖² + ε²) with ε = 1e-6.
//!
//! Descriptor length D = (cells_y−block+1)·(cells_x−block+1)·block²·bins.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const EPS: f64 = 1e-6;

pub fn extract_hog(ds: &Dataset, cell: usize, block: usize, bins: usize) -> Result<FeatureMatrix> {
    let (h, w) = (ds.height(), ds.width());
    if cell == 0 || block == 0 || bins == 0 {
        return Err(Error::invalid("cell, block and bins must be positive"));
    }
    if cell > h || cell > w {
        return Err(Error::invalid(format!(
            "image smaller than one cell: {h}x{w} vs cell {cell}"
        )));
    }
    if h % cell != 0 || w % cell != 0 {
        return Err(Error::invalid(format!(
            "cell {cell} must divide image dimensions {h}x{w}"
        )));
    }
    let cells_y = h / cell;
    let cells_x = w / cell;
    if block > cells_y || block > cells_x {
        return Err(Error::invalid(format!(
            "block {block} exceeds cell grid {cells_y}x{cells_x}"
        )));
    }

    let blocks_y = cells_y - block + 1;
    let blocks_x = cells_x - block + 1;
    let d = blocks_y * blocks_x * block * block * bins;
    let mut data = Array2::zeros((ds.len(), d));

    for (i, im) in ds.images().iter().enumerate() {
        let cells = cell_histograms(im, cell, bins);
        let mut out = data.row_mut(i);
        let mut pos = 0;
        for by in 0..blocks_y {
            for bx in 0..blocks_x {
                let start = pos;
                for cy in by..by + block {
                    for cx in bx..bx + block {
                        for b in 0..bins {
                            out[pos] = cells[(cy * cells_x + cx, b)];
                            pos += 1;
                        }
                    }
                }
                let norm_sq: f64 = out
                    .slice(ndarray::s![start..pos])
                    .iter()
                    .map(|v| v * v)
                    .sum();
                let inv = 1.0 / (norm_sq + EPS * EPS).sqrt();
                for v in out.slice_mut(ndarray::s![start..pos]).iter_mut() {
                    *v *= inv;
                }
            }
        }
        debug_assert_eq!(pos, d);
    }

    FeatureMatrix::new("hog", data)
}

/// Magnitude-weighted orientation histograms, one row per cell
/// (row-major cell order), `bins` columns.
fn cell_histograms(im: &Array2<f64>, cell: usize, bins: usize) -> Array2<f64> {
    let (h, w) = im.dim();
    let cells_x = w / cell;
    let cells_y = h / cell;
    let bin_width = PI / bins as f64;
    let mut hist = Array2::zeros((cells_y * cells_x, bins));
    for r in 0..h {
        for c in 0..w {
            // Central differences with indices clamped to the image.
            let gx = (im[(r, (c + 1).min(w - 1))] - im[(r, c.saturating_sub(1))]) / 2.0;
            let gy = (im[((r + 1).min(h - 1), c)] - im[(r.saturating_sub(1), c)]) / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += PI;
            }
            if theta >= PI {
                theta -= PI; // atan2(0, -x) returns exactly π
            }
            let t = theta / bin_width;
            let i0 = (t.floor() as usize).min(bins - 1);
            let frac = t - i0 as f64;
            let row = (r / cell) * cells_x + (c / cell);
            hist[(row, i0)] += mag * (1.0 - frac);
            hist[(row, (i0 + 1) % bins)] += mag * frac;
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::data::{SeededRng, StreamPurpose};

    fn ds_of(images: Vec<Array2<f64>>) -> Dataset {
        let names = (0..images.len()).map(|i| format!("s{i}")).collect();
        Dataset::new(images, None, names).unwrap()
    }

    #[test]
    fn constant_image_gives_zero_descriptor() {
        let ds = ds_of(vec![Array2::from_elem((14, 14), 0.4)]);
        let f = extract_hog(&ds, 7, 2, 9).unwrap();
        assert!(f.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_formula_28x28() {
        // cells 4×4, blocks 3×3, block²=4 histograms of 9 bins each.
        let ds = ds_of(vec![Array2::zeros((28, 28))]);
        let f = extract_hog(&ds, 7, 2, 9).unwrap();
        assert_eq!(f.dim(), 3 * 3 * 2 * 2 * 9);
        assert_eq!(f.dim(), 324);
    }

    #[test]
    fn vertical_ramp_energy_in_bin_zero() {
        // I(r,c) = c/6 has vertical iso-brightness lines: gy = 0 everywhere,
        // gx > 0, orientation exactly 0 → every vote lands in bin 0.
        let im = Array2::from_shape_fn((7, 7), |(_, c)| c as f64 / 6.0);
        let ds = ds_of(vec![im]);
        let f = extract_hog(&ds, 7, 1, 9).unwrap();
        assert_eq!(f.dim(), 9);
        assert!(f.row(0)[0] > 0.99, "bin 0 holds all energy: {:?}", f.row(0));
        for b in 1..9 {
            assert_eq!(f.row(0)[b], 0.0, "bin {b} must be empty");
        }
    }

    #[test]
    fn horizontal_ramp_energy_in_vertical_bins() {
        // I(r,c) = r/6: gradient points straight down the rows (θ = π/2).
        // With 2 bins of width π/2 the angle sits on the boundary t=1.0,
        // so the full weight lands in bin 1.
        let im = Array2::from_shape_fn((7, 7), |(r, _)| r as f64 / 6.0);
        let ds = ds_of(vec![im]);
        let f = extract_hog(&ds, 7, 1, 2).unwrap();
        assert_eq!(f.row(0)[0], 0.0);
        assert!(f.row(0)[1] > 0.99);
    }

    #[test]
    fn block_norms_at_most_one() {
        let master = SeededRng::new(77);
        let mut rng = master.substream(StreamPurpose::SynthData, 1);
        for _ in 0..10 {
            let im = Array2::from_shape_fn((12, 8), |_| rng.gen::<f64>());
            let ds = ds_of(vec![im]);
            let f = extract_hog(&ds, 4, 2, 9).unwrap();
            // Each block of block²·bins values is one normalized vector.
            let chunk = 2 * 2 * 9;
            for block in f.row(0).to_vec().chunks(chunk) {
                let norm: f64 = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= 1.0 + 1e-9, "block norm {norm}");
            }
        }
    }

    #[test]
    fn single_row_images_supported_with_unit_cell() {
        let im = Array2::from_shape_fn((1, 8), |(_, c)| (c as f64 * 0.7).sin());
        let ds = ds_of(vec![im]);
        let f = extract_hog(&ds, 1, 1, 9).unwrap();
        assert_eq!(f.dim(), 8 * 9);
    }

    #[test]
    fn parameter_errors() {
        let ds = ds_of(vec![Array2::zeros((6, 6))]);
        // Cell larger than the image.
        let err = extract_hog(&ds, 7, 1, 9).unwrap_err();
        assert!(
            err.to_string().contains("image smaller than one cell"),
            "{err}"
        );
        // Cell not dividing the side.
        assert!(extract_hog(&ds, 4, 1, 9).is_err());
        // Block exceeding the cell grid.
        assert!(extract_hog(&ds, 3, 3, 9).is_err());
    }
}
