//! Rectangular pixel grids over the complex plane.
//!
//! Pixel `(i, j)` has its center at
//! `re_min + (i + 1/2) dx + i (im_min + (j + 1/2) dy)`; arrays are stored
//! row-major with `j` (imaginary part) as the slow index.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) || !(re_min.is_finite() && re_max.is_finite()) {
            return Err(Error::InvalidArgument("degenerate rectangle".into()));
        }
        if !(im_min.is_finite() && im_max.is_finite()) {
            return Err(Error::InvalidArgument("non-finite rectangle".into()));
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    /// Square `[c - h, c + h] x [c - h, c + h]`.
    pub fn centered(center: Complex64, half: f64) -> Self {
        Rect {
            re_min: center.re - half,
            re_max: center.re + half,
            im_min: center.im - half,
            im_max: center.im + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }
    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// True if the closed disk `|z - c| <= r` lies inside the rectangle.
    pub fn covers_disk(&self, c: Complex64, r: f64) -> bool {
        c.re - r >= self.re_min
            && c.re + r <= self.re_max
            && c.im - r >= self.im_min
            && c.im + r <= self.im_max
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            re_min: self.re_min.min(other.re_min),
            re_max: self.re_max.max(other.re_max),
            im_min: self.im_min.min(other.im_min),
            im_max: self.im_max.max(other.im_max),
        }
    }

    pub fn inflate(&self, by: f64) -> Rect {
        Rect {
            re_min: self.re_min - by,
            re_max: self.re_max + by,
            im_min: self.im_min - by,
            im_max: self.im_max + by,
        }
    }

    /// Largest modulus of a point in the rectangle.
    pub fn max_modulus(&self) -> f64 {
        let x = self.re_min.abs().max(self.re_max.abs());
        let y = self.im_min.abs().max(self.im_max.abs());
        math::hypot(x, y)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new((self.re_min + self.re_max) / 2.0, (self.im_min + self.im_max) / 2.0)
    }
}

/// Geometry of an `nx x ny` pixel lattice over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lattice {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument("grid resolution must be at least 2x2".into()));
        }
        Ok(Lattice { rect, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        self.rect.width() / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        self.rect.height() / self.ny as f64
    }
    pub fn pixel_area(&self) -> f64 {
        self.dx() * self.dy()
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.rect.re_min + (i as f64 + 0.5) * self.dx(),
            self.rect.im_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    pub fn center_of(&self, idx: usize) -> Complex64 {
        self.center(idx % self.nx, idx / self.nx)
    }

    /// Pixel containing `z`, if any.
    pub fn locate(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.rect.contains(z) {
            return None;
        }
        let i = math::floor((z.re - self.rect.re_min) / self.dx()) as isize;
        let j = math::floor((z.im - self.rect.im_min) / self.dy()) as isize;
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.ny as isize - 1) as usize;
        Some((i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SetProvenance {
    NamedShape,
    Julia,
    Support,
    Custom,
}

/// Analytic description kept alongside masks built from named shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "shape"))]
pub enum NamedShape {
    Circle { center: Complex64, radius: f64 },
    Segment { a: Complex64, b: Complex64 },
    Disk { center: Complex64, radius: f64 },
    SquareBoundary { center: Complex64, side: f64 },
}

impl NamedShape {
    /// Distance from `z` to the shape (zero on it).
    pub fn distance(&self, z: Complex64) -> f64 {
        match *self {
            NamedShape::Circle { center, radius } => (math::cabs(z - center) - radius).abs(),
            NamedShape::Disk { center, radius } => (math::cabs(z - center) - radius).max(0.0),
            NamedShape::Segment { a, b } => segment_distance(z, a, b),
            NamedShape::SquareBoundary { center, side } => {
                let h = side / 2.0;
                let c = [
                    center + Complex64::new(-h, -h),
                    center + Complex64::new(h, -h),
                    center + Complex64::new(h, h),
                    center + Complex64::new(-h, h),
                ];
                (0..4)
                    .map(|k| segment_distance(z, c[k], c[(k + 1) % 4]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn dilate(&self, s: f64) -> NamedShape {
        match *self {
            NamedShape::Circle { center, radius } => NamedShape::Circle { center: center * s, radius: radius * s },
            NamedShape::Disk { center, radius } => NamedShape::Disk { center: center * s, radius: radius * s },
            NamedShape::Segment { a, b } => NamedShape::Segment { a: a * s, b: b * s },
            NamedShape::SquareBoundary { center, side } => {
                NamedShape::SquareBoundary { center: center * s, side: side * s }
            }
        }
    }
}

pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return math::cabs(z - a);
    }
    let t = ((z - a) * ab.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    math::cabs(z - (a + ab * t))
}

/// Boolean mask on a lattice: a compact set at grid resolution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSet {
    pub lattice: Lattice,
    pub mask: Vec<bool>,
    pub provenance: SetProvenance,
    pub shape: Option<NamedShape>,
}

impl GridSet {
    pub fn new(lattice: Lattice, mask: Vec<bool>, provenance: SetProvenance) -> Result<Self> {
        if mask.len() != lattice.len() {
            return Err(Error::InvalidArgument("mask size does not match the lattice".into()));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::EmptyMask);
        }
        Ok(GridSet { lattice, mask, provenance, shape: None })
    }

    /// Rasterizes a named shape: a pixel is set when its center lies within
    /// `band` of the shape (for curves, `band` defaults to about one pixel).
    pub fn from_shape(lattice: Lattice, shape: NamedShape, band: Option<f64>) -> Result<Self> {
        let h = lattice.dx().max(lattice.dy());
        let band = band.unwrap_or(match shape {
            NamedShape::Disk { .. } => 0.0,
            _ => 0.5 * h * core::f64::consts::SQRT_2,
        });
        let mask = (0..lattice.len())
            .map(|idx| shape.distance(lattice.center_of(idx)) <= band)
            .collect();
        let mut set = GridSet::new(lattice, mask, SetProvenance::NamedShape)?;
        set.shape = Some(shape);
        Ok(set)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.lattice.nx + i]
    }

    /// Whether `z` falls in a set pixel.
    pub fn contains_point(&self, z: Complex64) -> bool {
        self.lattice.locate(z).is_some_and(|(i, j)| self.get(i, j))
    }

    pub fn touches_border(&self) -> bool {
        let (nx, ny) = (self.lattice.nx, self.lattice.ny);
        (0..nx).any(|i| self.get(i, 0) || self.get(i, ny - 1))
            || (0..ny).any(|j| self.get(0, j) || self.get(nx - 1, j))
    }

    /// Pixel-wise union (`other` resampled at this lattice's pixel centers).
    pub fn union(&self, other: &GridSet) -> GridSet {
        let mask = (0..self.lattice.len())
            .map(|idx| self.mask[idx] || other.contains_point(self.lattice.center_of(idx)))
            .collect();
        GridSet { lattice: self.lattice, mask, provenance: SetProvenance::Custom, shape: None }
    }

    /// Every set pixel within `pixels` (Chebyshev distance) of the set.
    pub fn dilate_pixels(&self, pixels: usize) -> GridSet {
        let (nx, ny) = (self.lattice.nx, self.lattice.ny);
        let r = pixels as isize;
        let mut mask = vec![false; self.mask.len()];
        for j in 0..ny {
            for i in 0..nx {
                if !self.get(i, j) {
                    continue;
                }
                for dj in -r..=r {
                    for di in -r..=r {
                        let (ii, jj) = (i as isize + di, j as isize + dj);
                        if ii >= 0 && jj >= 0 && (ii as usize) < nx && (jj as usize) < ny {
                            mask[jj as usize * nx + ii as usize] = true;
                        }
                    }
                }
            }
        }
        GridSet { lattice: self.lattice, mask, provenance: self.provenance, shape: None }
    }

    /// True if any set pixel center of either set lies in the other one.
    pub fn intersects(&self, other: &GridSet) -> bool {
        let hit = |a: &GridSet, b: &GridSet| {
            a.mask
                .iter()
                .enumerate()
                .any(|(idx, &m)| m && b.contains_point(a.lattice.center_of(idx)))
        };
        hit(self, other) || hit(other, self)
    }

    /// `self ⊆ other` at pixel level, with `other` sampled at our centers.
    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.mask
            .iter()
            .enumerate()
            .all(|(idx, &m)| !m || other.contains_point(self.lattice.center_of(idx)))
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(idx, _)| self.lattice.center_of(idx))
    }
}
