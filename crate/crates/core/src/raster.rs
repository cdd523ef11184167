//! Log-scale density rasters of planar measures.
//!
//! Pixel `(row, col)` covers `[col/w, (col+1)/w) × [row/h, (row+1)/h)`, so
//! row 0 is the bottom of the torus (the y axis points up). Image writers
//! flip rows when emitting top-down formats.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rgb(pub [u8; 3]);

/// Blue, cyan, green, yellow, red.
pub const DEFAULT_COLORMAP: [Rgb; 5] = [
    Rgb([0, 0, 255]),
    Rgb([0, 255, 255]),
    Rgb([0, 255, 0]),
    Rgb([255, 255, 0]),
    Rgb([255, 0, 0]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RasterSpec {
    pub width: u32,
    pub height: u32,
    /// Color stops from low to high values.
    pub colormap: Vec<Rgb>,
    /// Width, in decades, of the displayed range below the maximum.
    pub floor_decades: f64,
}

impl Default for RasterSpec {
    fn default() -> Self {
        RasterSpec { width: 128, height: 128, colormap: DEFAULT_COLORMAP.to_vec(), floor_decades: 6.0 }
    }
}

impl RasterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("raster must have at least one pixel"));
        }
        if self.colormap.len() < 2 {
            return Err(Error::invalid("colormap needs at least two stops"));
        }
        if !(self.floor_decades > 0.0 && self.floor_decades.is_finite()) {
            return Err(Error::invalid("floor_decades must be positive"));
        }
        Ok(())
    }
}

/// `log10` pixel masses; `None` marks pixels carrying no mass.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelGrid {
    width: u32,
    height: u32,
    values: Vec<Option<f64>>,
}

impl PixelGrid {
    pub fn new(width: u32, height: u32, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::invalid("pixel count does not match raster size"));
        }
        Ok(PixelGrid { width, height, values })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, row: u32, col: u32) -> Option<f64> {
        self.values[row as usize * self.width as usize + col as usize]
    }

    /// Values in row-major order, bottom row first.
    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }
}

pub fn rasterize(mu: &DiscreteMeasure, spec: &RasterSpec) -> Result<PixelGrid> {
    spec.validate()?;
    let grid = mu.grid();
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: grid.dim() });
    }
    let (w, h) = (spec.width as u128, spec.height as u128);
    let order = grid.order() as u128;
    let mut mass = vec![0.0f64; spec.width as usize * spec.height as usize];
    let mut idx = [0u64; 2];
    for &(a, m) in mu.atoms() {
        grid.decompose(a, &mut idx);
        let col = (idx[0] as u128 * w / order) as usize;
        let row = (idx[1] as u128 * h / order) as usize;
        mass[row * spec.width as usize + col] += m;
    }
    let values = mass.into_iter().map(|m| (m > 0.0).then(|| libm::log10(m))).collect();
    Ok(PixelGrid { width: spec.width, height: spec.height, values })
}

/// An RGB image plus the value range its colors span.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, bottom row first (same layout as [`PixelGrid`]).
    pub pixels: Vec<Rgb>,
    /// Value mapped to the lowest stop.
    pub range_low: f64,
    /// Value mapped to the highest stop.
    pub range_high: f64,
}

impl ColorImage {
    /// Rows from the top of the torus down, as most image formats expect.
    pub fn rows_top_down(&self) -> impl Iterator<Item = &[Rgb]> {
        self.pixels.chunks(self.width as usize).rev()
    }
}

fn lerp_channel(a: u8, b: u8, t: f64) -> u8 {
    let v = a as f64 + (b as f64 - a as f64) * t;
    libm::round(v).clamp(0.0, 255.0) as u8
}

fn color_at(colormap: &[Rgb], t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let segments = (colormap.len() - 1) as f64;
    let pos = t * segments;
    let i = (libm::floor(pos) as usize).min(colormap.len() - 2);
    let frac = pos - i as f64;
    let (lo, hi) = (colormap[i].0, colormap[i + 1].0);
    Rgb([lerp_channel(lo[0], hi[0], frac), lerp_channel(lo[1], hi[1], frac), lerp_channel(lo[2], hi[2], frac)])
}

/// Linear color scale over `[max - floor_decades, max]`; values below the
/// floor and empty pixels take the lowest stop.
pub fn colorize(values: &PixelGrid, spec: &RasterSpec) -> Result<ColorImage> {
    spec.validate()?;
    let high = values.max().unwrap_or(0.0);
    let low = high - spec.floor_decades;
    let pixels = values
        .values
        .iter()
        .map(|v| match v {
            Some(v) => color_at(&spec.colormap, (v - low) / spec.floor_decades),
            None => spec.colormap[0],
        })
        .collect();
    Ok(ColorImage { width: values.width, height: values.height, pixels, range_low: low, range_high: high })
}
