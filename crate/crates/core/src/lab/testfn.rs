//! Test functions with closed-form Laplacians, and the pairing
//! `∫ φ dω = (1/2π) ∫ Δφ g dA` between a measure and a Green's function.

use num_complex::Complex64;

use crate::dynamics::GridField;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Rect;
use crate::math;
use crate::measure::EmpiricalMeasure;

/// Polynomial test functions on a bounded window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PolyTest {
    ReZ,
    ImZ,
    AbsSq,
    ReZ2,
}

impl PolyTest {
    pub const ALL: [PolyTest; 4] = [PolyTest::ReZ, PolyTest::ImZ, PolyTest::AbsSq, PolyTest::ReZ2];

    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            PolyTest::ReZ => z.re,
            PolyTest::ImZ => z.im,
            PolyTest::AbsSq => z.norm_sqr(),
            PolyTest::ReZ2 => (z * z).re,
        }
    }

    pub fn laplacian(&self, _z: Complex64) -> f64 {
        match self {
            PolyTest::AbsSq => 4.0,
            _ => 0.0,
        }
    }
}

/// Compactly supported bumps `(1 - s²)^k`, `k ≥ 3` (hence `C²`).
///
/// For the disk bump `s = |z - c| / r`; for the annular bump
/// `s = (|z - c| - ρ) / δ`, so its support is the annulus `ρ - δ < |z - c| < ρ + δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum Bump {
    Disk { center: Complex64, radius: f64, order: u32 },
    Annulus { center: Complex64, radius: f64, width: f64, order: u32 },
}

impl Bump {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        Bump::Disk { center, radius, order: 3 }
    }

    pub fn annulus(center: Complex64, radius: f64, width: f64) -> Self {
        Bump::Annulus { center, radius, width, order: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        let (order, ok) = match *self {
            Bump::Disk { radius, order, .. } => (order, radius > 0.0),
            Bump::Annulus { radius, width, order, .. } => (order, width > 0.0 && radius > width),
        };
        if order < 3 || !ok {
            return Err(Error::InvalidArgument("bump needs order >= 3 and a proper support".into()));
        }
        Ok(())
    }

    /// Smallest square containing the support.
    pub fn support_rect(&self) -> Rect {
        match *self {
            Bump::Disk { center, radius, .. } => Rect::centered(center, radius),
            Bump::Annulus { center, radius, width, .. } => Rect::centered(center, radius + width),
        }
    }

    /// `(s, ds/dρ, ρ, k)` in the radial variable `ρ = |z - c|`, or `None`
    /// outside the support.
    fn radial(&self, z: Complex64) -> Option<(f64, f64, f64, i32)> {
        match *self {
            Bump::Disk { center, radius, order } => {
                let rho = math::cabs(z - center);
                let s = rho / radius;
                (s < 1.0).then_some((s, 1.0 / radius, rho, order as i32))
            }
            Bump::Annulus { center, radius, width, order } => {
                let rho = math::cabs(z - center);
                let s = (rho - radius) / width;
                (s.abs() < 1.0).then_some((s, 1.0 / width, rho, order as i32))
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match self.radial(z) {
            Some((s, _, _, k)) => powi(1.0 - s * s, k),
            None => 0.0,
        }
    }

    /// `Δφ = φ'' + φ'/ρ` in polar coordinates around the center.
    pub fn laplacian(&self, z: Complex64) -> f64 {
        let Some((s, a, rho, k)) = self.radial(z) else { return 0.0 };
        let kf = k as f64;
        let u = 1.0 - s * s;
        // d/dρ = a d/ds
        let d1 = -2.0 * kf * s * powi(u, k - 1) * a;
        let d2 = (4.0 * kf * (kf - 1.0) * s * s * powi(u, k - 2) - 2.0 * kf * powi(u, k - 1)) * a * a;
        match self {
            Bump::Disk { .. } => {
                // φ'/ρ = -2k a² u^{k-1}, finite at the center.
                d2 - 2.0 * kf * a * a * powi(u, k - 1)
            }
            Bump::Annulus { .. } => d2 + d1 / rho,
        }
    }
}

fn powi(x: f64, k: i32) -> f64 {
    let mut r = 1.0;
    for _ in 0..k.max(0) {
        r *= x;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pairing {
    /// `Σ w_i φ(z_i)`.
    pub measure_side: f64,
    /// `(1/2π) Σ Δφ g dA` over pixel centers.
    pub green_side: f64,
    pub difference: f64,
}

pub fn laplacian_pairing_check<E: Exec>(exec: &E, g: &GridField, omega: &EmpiricalMeasure, phi: &Bump) -> Result<Pairing> {
    phi.validate()?;
    let s = phi.support_rect();
    let r = g.lattice.rect;
    if !(s.re_min > r.re_min && s.re_max < r.re_max && s.im_min > r.im_min && s.im_max < r.im_max) {
        return Err(Error::SupportClipped);
    }
    let lat = g.lattice;
    let rows = exec.map_indexed(lat.ny, |j| {
        let mut acc = 0.0;
        for i in 0..lat.nx {
            let v = g.values[j * lat.nx + i];
            if v != 0.0 {
                acc += phi.laplacian(lat.center(i, j)) * v;
            }
        }
        acc
    });
    let green_side = rows.iter().sum::<f64>() * lat.pixel_area() / math::TAU;
    let measure_side = omega.integrate(|z| phi.eval(z));
    Ok(Pairing { measure_side, green_side, difference: (measure_side - green_side).abs() })
}
