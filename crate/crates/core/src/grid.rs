//! Dense per-pixel rasters with validity masks.
//!
//! Pixels are stored row-major; pixel `(u, v)` sits at index `v * width + u`
//! and its centre is the integer coordinate `(u, v)`. Invalid pixels always
//! hold zero so that two grids with the same valid content compare equal.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::PixelPoint;

/// Per-pixel validity bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "mask of {} bits does not fit {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.bits[v * self.width + u] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        check_shape(self.width, self.height, other.width, other.height)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && b)
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits,
        })
    }
}

pub(crate) fn check_shape(w0: usize, h0: usize, w1: usize, h1: usize) -> Result<()> {
    if w0 != w1 || h0 != h1 {
        return Err(Error::ShapeMismatch(w0, h0, w1, h1));
    }
    Ok(())
}

/// A scalar raster: depth, height, gamma or planar position embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ScalarGrid {
    /// An all-invalid grid.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    /// A fully valid grid; every value must be finite.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::from_parts(width, height, values, valid)
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        mut values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} values / {} mask bits do not fit {width}x{height}",
                values.len(),
                valid.len()
            )));
        }
        for (value, &ok) in values.iter_mut().zip(&valid) {
            if !ok {
                *value = 0.0;
            } else if !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value {value} at a valid pixel"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// Builds a grid by evaluating `f` at every pixel centre. `None` marks a
    /// pixel invalid.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Self {
        let mut grid = Self::empty(width, height);
        for v in 0..height {
            for u in 0..width {
                if let Some(value) = f(u, v).filter(|x| x.is_finite()) {
                    grid.set(u, v, value);
                }
            }
        }
        grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = v * self.width + u;
        self.valid[i].then_some(self.values[i])
    }

    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        let i = v * self.width + u;
        self.values[i] = value;
        self.valid[i] = true;
    }

    pub fn invalidate(&mut self, u: usize, v: usize) {
        let i = v * self.width + u;
        self.values[i] = 0.0;
        self.valid[i] = false;
    }

    pub fn mask(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.valid.clone(),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }

    /// Valid `(u, v, value)` triples in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let width = self.width;
        self.values
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(move |(i, (&value, _))| (i % width, i / width, value))
    }

    /// Keeps only pixels that are also set in `mask`.
    pub fn restrict(&self, mask: &Mask) -> Result<Self> {
        check_shape(self.width, self.height, mask.width, mask.height)?;
        let mut out = self.clone();
        for (i, &keep) in mask.bits.iter().enumerate() {
            if !keep {
                out.values[i] = 0.0;
                out.valid[i] = false;
            }
        }
        Ok(out)
    }
}

/// Dense residual flow `u_res = p_w - p_t`, one 2-vector per target pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<Vector2<f64>>,
    valid: Vec<bool>,
}

impl FlowField {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            vectors: vec![Vector2::zeros(); width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<Vector2<f64>>,
    ) -> Self {
        let mut field = Self::empty(width, height);
        for v in 0..height {
            for u in 0..width {
                if let Some(vec) = f(u, v).filter(|x| x.x.is_finite() && x.y.is_finite()) {
                    field.set(u, v, vec);
                }
            }
        }
        field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vectors(&self) -> &[Vector2<f64>] {
        &self.vectors
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, u: usize, v: usize) -> Option<Vector2<f64>> {
        let i = v * self.width + u;
        self.valid[i].then_some(self.vectors[i])
    }

    pub fn set(&mut self, u: usize, v: usize, value: Vector2<f64>) {
        let i = v * self.width + u;
        self.vectors[i] = value;
        self.valid[i] = true;
    }

    pub fn invalidate(&mut self, u: usize, v: usize) {
        let i = v * self.width + u;
        self.vectors[i] = Vector2::zeros();
        self.valid[i] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (PixelPoint, Vector2<f64>)> + '_ {
        let width = self.width;
        self.vectors
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(move |(i, (&vec, _))| {
                (PixelPoint::new((i % width) as f64, (i / width) as f64), vec)
            })
    }

    pub(crate) fn vectors_mut(&mut self) -> &mut [Vector2<f64>] {
        &mut self.vectors
    }
}
