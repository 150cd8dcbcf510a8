//! Fourier coefficients of sampled matrix functions on the circle.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::symbol::{BlockCoefficients, Envelope};

/// Sample count used for products that leave the symbol grammar.
pub const QUAD_POINTS: usize = 4096;

/// Coefficients `-max_neg..=max_pos` of `f` by the trapezoid rule on
/// `points` equispaced nodes (one FFT per matrix entry).
pub fn fourier_blocks(
    f: impl Fn(f64) -> DMatrix<Complex64>,
    n: usize,
    max_neg: usize,
    max_pos: usize,
    points: usize,
) -> BlockCoefficients {
    let samples: Vec<DMatrix<Complex64>> =
        (0..points).map(|j| f(2.0 * PI * j as f64 / points as f64)).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(points);
    let mut pos = vec![DMatrix::zeros(n, n); max_pos + 1];
    let mut neg = vec![DMatrix::zeros(n, n); max_neg + 1];
    let scale = 1.0 / points as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); points];
    for i in 0..n {
        for j in 0..n {
            for (b, s) in buf.iter_mut().zip(&samples) {
                *b = s[(i, j)];
            }
            fft.process(&mut buf);
            for (k, block) in pos.iter_mut().enumerate() {
                block[(i, j)] = buf[k % points] * scale;
            }
            for (k, block) in neg.iter_mut().enumerate() {
                block[(i, j)] = buf[(points - k % points) % points] * scale;
            }
        }
    }
    BlockCoefficients::from_parts(n, pos, neg)
}

/// Bound on the aliasing error of each coefficient `|k| <= max_index` of a
/// product of two symbols with envelope `env`, sampled at `points` nodes.
pub fn product_alias_bound(env: &Envelope, max_index: usize, points: usize) -> f64 {
    if let Some(w) = env.band {
        if points > max_index + 2 * w {
            return 0.0;
        }
    }
    if points <= max_index {
        return f64::INFINITY;
    }
    // |(fg)^(m)| <= C^2 (|m| + 1 + 2r^2/(1-r^2)) r^|m|; the nearest alias
    // sits at distance points - max_index.
    let r = env.rate;
    let m = (points - max_index) as f64;
    let g = env.constant.powi(2) * (m + 1.0 + 2.0 * r * r / (1.0 - r * r)) * r.powf(m);
    2.0 * g / (1.0 - r.powi(points as i32)).powi(2)
}
