//! Thin wrappers over `libm` so the rest of the crate reads like `std`.

use num_complex::Complex64;

pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ldexp(x: f64, e: i32) -> f64 {
    libm::scalbn(x, e)
}

#[inline]
pub fn cabs(z: Complex64) -> f64 {
    hypot(z.re, z.im)
}

#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::new(cos(theta), sin(theta))
}

/// Principal square root.
pub fn csqrt(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = cabs(z);
    let t = sqrt((r + z.re.abs()) / 2.0);
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        Complex64::new(z.im.abs() / (2.0 * t), if z.im >= 0.0 { t } else { -t })
    }
}

/// One step of SplitMix64. Derived seeds are `splitmix64(master ^ splitmix64(tag))`,
/// see [`derive_seed`].
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` of domain `domain` under `master`.
///
/// Per-degree seeds use domain 1, per-chain seeds domain 2, perturbation
/// trials domain 3.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(domain.wrapping_mul(0x1_0000_0001).wrapping_add(index)))
}
