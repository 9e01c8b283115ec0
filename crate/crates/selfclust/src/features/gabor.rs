//! Gabor filter-bank features.
//!
//! A bank of scales × orients zero-DC cosine Gabor kernels. Per filter the
//! image is convolved (valid positions only, so constants are annihilated
//! exactly) and the mean and standard deviation of the response magnitude
//! are recorded: D = 2·scales·orients, ordered scale-major as
//! [mean, std] pairs.
//!
//! Kernel for scale s, orientation θ: wavelength λ = 4·2ˢ, envelope
//! σ = 0.56·λ (≈ one-octave bandwidth), aspect γ = 0.5,
//! g(x, y) = exp(−(x'² + γ²y'²)/(2σ²))·cos(2πx'/λ) with the usual rotated
//! coordinates; the kernel mean is subtracted so the DC response is zero.
//! Envelope half-extents (⌈2.5σ⌉) are clipped to the image so small or
//! single-row images stay convolvable.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub fn extract_gabor(ds: &Dataset, scales: usize, orients: usize) -> Result<FeatureMatrix> {
    if scales == 0 || orients == 0 {
        return Err(Error::invalid("scales and orients must be >= 1"));
    }
    let (h, w) = (ds.height(), ds.width());
    let bank: Vec<Array2<f64>> = (0..scales)
        .flat_map(|s| (0..orients).map(move |o| (s, o)))
        .map(|(s, o)| {
            let lambda = 4.0 * f64::powi(2.0, s as i32);
            let theta = o as f64 * PI / orients as f64;
            kernel(lambda, theta, h, w)
        })
        .collect();
    for k in &bank {
        if k.nrows() > h || k.ncols() > w {
            return Err(Error::invalid(format!(
                "filter kernel {}x{} larger than image {h}x{w}",
                k.nrows(),
                k.ncols()
            )));
        }
    }

    let d = 2 * scales * orients;
    let mut data = Array2::zeros((ds.len(), d));
    for (i, im) in ds.images().iter().enumerate() {
        for (j, k) in bank.iter().enumerate() {
            let (mean, std) = response_stats(im, k);
            data[(i, 2 * j)] = mean;
            data[(i, 2 * j + 1)] = std;
        }
    }
    FeatureMatrix::new("gabor", data)
}

fn kernel(lambda: f64, theta: f64, img_h: usize, img_w: usize) -> Array2<f64> {
    let sigma = 0.56 * lambda;
    let gamma = 0.5;
    let reach = (2.5 * sigma).ceil() as usize;
    let ry = reach.min((img_h - 1) / 2);
    let rx = reach.min((img_w - 1) / 2);
    let (kh, kw) = (2 * ry + 1, 2 * rx + 1);
    let (ct, st) = (theta.cos(), theta.sin());
    let mut k = Array2::from_shape_fn((kh, kw), |(r, c)| {
        let y = r as f64 - ry as f64;
        let x = c as f64 - rx as f64;
        let xr = x * ct + y * st;
        let yr = -x * st + y * ct;
        (-(xr * xr + gamma * gamma * yr * yr) / (2.0 * sigma * sigma)).exp()
            * (2.0 * PI * xr / lambda).cos()
    });
    let mean = k.sum() / (kh * kw) as f64;
    k.mapv_inplace(|v| v - mean);
    k
}

/// Mean and population standard deviation of |im ⊛ k| over all valid
/// (full-overlap) positions.
fn response_stats(im: &Array2<f64>, k: &Array2<f64>) -> (f64, f64) {
    let (h, w) = im.dim();
    let (kh, kw) = k.dim();
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let count = (oh * ow) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for dr in 0..kh {
                for dc in 0..kw {
                    acc += k[(dr, dc)] * im[(r + dr, c + dc)];
                }
            }
            let mag = acc.abs();
            sum += mag;
            sum_sq += mag * mag;
        }
    }
    let mean = sum / count;
    let var = (sum_sq / count - mean * mean).max(0.0);
    (mean, var.sqrt())
}
