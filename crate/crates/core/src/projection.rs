//! Color-projection parameters and their search bounds.
//!
//! A projection is described by a color, a polygonal region given as
//! normalized vertices, and a blend intensity. For the optimizer the whole
//! parameter set is flattened into a vector `[r, g, b, intensity, m1, n1,
//! ..., mk, nk]` whose box constraints live in [`Bounds`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_VERTICES: usize = 3;
pub const MAX_VERTICES: usize = 16;
pub const DEFAULT_VERTEX_COUNT: usize = 4;

/// Default intensity search range. The lower end avoids invisible
/// projections, the upper end is the strongest setting we sweep.
pub const DEFAULT_INTENSITY_RANGE: (f64, f64) = (0.05, 0.8);

/// Leading non-vertex components of an encoded vector: r, g, b, intensity.
const HEAD_DIMS: usize = 4;

/// The decision vector of one attack: color, polygon, intensity.
///
/// All components are normalized reals in [0, 1]; vertex coordinates are
/// fractions of image width/height. 8-bit values appear only at I/O time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub color: [f64; 3],
    pub intensity: f64,
    pub vertices: Vec<[f64; 2]>,
}

impl ProjectionParams {
    pub fn new(color: [f64; 3], intensity: f64, vertices: Vec<[f64; 2]>) -> Result<Self> {
        let params = ProjectionParams {
            color,
            intensity,
            vertices,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.vertices.len();
        if !(MIN_VERTICES..=MAX_VERTICES).contains(&k) {
            return Err(Error::InvalidInput(format!(
                "vertex count {k} outside {MIN_VERTICES}..={MAX_VERTICES}"
            )));
        }
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !self.color.iter().copied().all(unit) {
            return Err(Error::InvalidInput(format!(
                "color {:?} outside [0,1]",
                self.color
            )));
        }
        if !unit(self.intensity) {
            return Err(Error::InvalidInput(format!(
                "intensity {} outside [0,1]",
                self.intensity
            )));
        }
        if !self.vertices.iter().flatten().copied().all(unit) {
            return Err(Error::InvalidInput("vertex outside [0,1]".into()));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Flattens to `[r, g, b, intensity, m1, n1, ..., mk, nk]`.
    pub fn encode(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(HEAD_DIMS + 2 * self.vertices.len());
        v.extend_from_slice(&self.color);
        v.push(self.intensity);
        for vert in &self.vertices {
            v.extend_from_slice(vert);
        }
        v
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(vector: &[f64]) -> Result<Self> {
        let d = vector.len();
        if d < HEAD_DIMS + 2 * MIN_VERTICES || !(d - HEAD_DIMS).is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "encoded vector length {d} is not 4 + 2k for k >= {MIN_VERTICES}"
            )));
        }
        let vertices = vector[HEAD_DIMS..]
            .chunks_exact(2)
            .map(|c| [c[0], c[1]])
            .collect();
        ProjectionParams::new([vector[0], vector[1], vector[2]], vector[3], vertices)
    }
}

/// Per-component box constraints for an encoded parameter vector.
///
/// The dimension is `4 + 2k` for a fixed vertex count `k`; `k` does not
/// change during one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        let d = lower.len();
        if !(HEAD_DIMS + 2 * MIN_VERTICES..=HEAD_DIMS + 2 * MAX_VERTICES).contains(&d)
            || !(d - HEAD_DIMS).is_multiple_of(2)
        {
            return Err(Error::InvalidInput(format!(
                "bounds dimension {d} is not 4 + 2k for k in {MIN_VERTICES}..={MAX_VERTICES}"
            )));
        }
        for i in 0..d {
            let (lo, hi) = (lower[i], upper[i]);
            if !lo.is_finite() || !hi.is_finite() || lo > hi || lo < 0.0 || hi > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "bounds component {i} invalid: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// `[0, 1]` on every component.
    pub fn unit(vertex_count: usize) -> Result<Self> {
        let d = HEAD_DIMS + 2 * vertex_count;
        Bounds::new(vec![0.0; d], vec![1.0; d])
    }

    /// Default attack bounds: `[0, 1]` everywhere except intensity,
    /// which gets [`DEFAULT_INTENSITY_RANGE`].
    pub fn standard(vertex_count: usize) -> Result<Self> {
        Bounds::unit(vertex_count)?
            .with_intensity(DEFAULT_INTENSITY_RANGE.0, DEFAULT_INTENSITY_RANGE.1)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn vertex_count(&self) -> usize {
        (self.lower.len() - HEAD_DIMS) / 2
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn with_intensity(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.lower[3] = lo;
        self.upper[3] = hi;
        Bounds::new(self.lower, self.upper)
    }

    pub fn pin_intensity(self, intensity: f64) -> Result<Self> {
        self.with_intensity(intensity, intensity)
    }

    pub fn with_color(mut self, lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        self.lower[..3].copy_from_slice(&lo);
        self.upper[..3].copy_from_slice(&hi);
        Bounds::new(self.lower, self.upper)
    }

    pub fn pin_color(self, color: [f64; 3]) -> Result<Self> {
        self.with_color(color, color)
    }

    /// Projects `vector` component-wise into `[lower, upper]`.
    pub fn clamp(&self, vector: &[f64]) -> Result<Vec<f64>> {
        if vector.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: vector.len(),
            });
        }
        Ok(vector
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect())
    }

    pub fn contains(&self, vector: &[f64]) -> bool {
        vector.len() == self.dimension()
            && vector
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }
}

/// Draws every component independently and uniformly within `bounds`.
pub fn sample_uniform<R: Rng>(bounds: &Bounds, rng: &mut R) -> ProjectionParams {
    let vector: Vec<f64> = bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(&lo, &hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
        .collect();
    ProjectionParams::decode(&vector).expect("bounds dimension yields valid params")
}

/// Vertices on the unit square's boundary whose polygon contains the whole
/// square: the four corners plus, for `k > 4`, evenly spaced points along
/// the edges. With these vertices the projection region equals the mask.
///
/// Requires `k >= 4`: three boundary vertices span at most half the square,
/// so a covering triangle does not exist.
pub fn full_coverage(k: usize) -> Result<Vec<[f64; 2]>> {
    if k < MIN_VERTICES {
        return Err(Error::InvalidInput(format!(
            "full coverage polygon needs at least {MIN_VERTICES} vertices, got {k}"
        )));
    }
    if k == 3 {
        return Err(Error::InvalidInput(
            "a triangle with vertices on the unit square cannot cover it; use k >= 4".into(),
        ));
    }
    if k > MAX_VERTICES {
        return Err(Error::InvalidInput(format!(
            "vertex count {k} exceeds maximum {MAX_VERTICES}"
        )));
    }
    const CORNERS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let extra = k - 4;
    let mut out = Vec::with_capacity(k);
    for edge in 0..4 {
        let a = CORNERS[edge];
        let b = CORNERS[(edge + 1) % 4];
        out.push(a);
        let n = extra / 4 + usize::from(edge < extra % 4);
        for j in 1..=n {
            let t = j as f64 / (n + 1) as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    Ok(out)
}

/// The three 8-bit channel levels of the color ablation grid.
pub const COLOR_GRID_LEVELS_U8: [u8; 3] = [0, 127, 255];

/// The 27 grid colors `{0, 127/255, 1}^3`, red-major order.
pub fn color_grid() -> Vec<[f64; 3]> {
    let levels = COLOR_GRID_LEVELS_U8.map(|v| v as f64 / 255.0);
    let mut grid = Vec::with_capacity(27);
    for &r in &levels {
        for &g in &levels {
            for &b in &levels {
                grid.push([r, g, b]);
            }
        }
    }
    grid
}

/// Nearest 8-bit representation of a normalized color, rounding half away
/// from zero (matches image serialization).
pub fn color_to_u8(color: [f64; 3]) -> [u8; 3] {
    color.map(|v| (v * 255.0).round() as u8)
}
