//! Shared fixtures for the benchmark suite.

use colorproj::compositor::{Image, Mask};
use colorproj::projection::{full_coverage, ProjectionParams};

pub fn gradient_image(size: u32) -> Image {
    Image::from_fn(size, size, |x, y| {
        let n = f64::from(size * size);
        let i = f64::from(y * size + x);
        [i / n, (i * 0.37) % n / n, 1.0 - i / n]
    })
    .expect("valid image")
}

pub fn full_mask(size: u32) -> Mask {
    Mask::all_true(size, size).expect("valid mask")
}

pub fn quad_params() -> ProjectionParams {
    ProjectionParams::new([1.0, 0.0, 1.0], 0.7, full_coverage(4).expect("k=4 covers"))
        .expect("valid params")
}

pub fn bow_tie_params() -> ProjectionParams {
    ProjectionParams::new(
        [0.1, 0.9, 0.3],
        0.5,
        vec![[0.05, 0.1], [0.95, 0.9], [0.9, 0.2], [0.1, 0.8]],
    )
    .expect("valid params")
}
