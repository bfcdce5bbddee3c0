//! Color chips in CIELAB, HSL ingestion, and perceptual distance.
//!
//! Chips are stored as integer tenths, so quantization happens exactly once
//! and equality, hashing and ordering are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const L_MAX_TENTHS: i32 = 1000;
const AB_MAX_TENTHS: i32 = 1280;

// sRGB primaries to XYZ, D65 white, 2 degree observer.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
];
const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

/// A CIELAB color quantized to one decimal place.
///
/// Ordering is lexicographic over (L, a, b).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColorChip {
    l: i32,
    a: i32,
    b: i32,
}

/// Rounds to one decimal place.
pub fn quantize(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

impl ColorChip {
    pub fn new(l: f64, a: f64, b: f64) -> Result<Self> {
        if !(l.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidColor(format!("non-finite component ({l}, {a}, {b})")));
        }
        let t = |x: f64| (x * 10.0).round() as i32;
        Self::from_tenths(t(l), t(a), t(b))
    }

    pub fn from_tenths(l: i32, a: i32, b: i32) -> Result<Self> {
        if !(0..=L_MAX_TENTHS).contains(&l)
            || !(-AB_MAX_TENTHS..=AB_MAX_TENTHS).contains(&a)
            || !(-AB_MAX_TENTHS..=AB_MAX_TENTHS).contains(&b)
        {
            return Err(Error::InvalidColor(format!(
                "({}, {}, {}) outside L in [0,100], a/b in [-128,128]",
                l as f64 / 10.0,
                a as f64 / 10.0,
                b as f64 / 10.0
            )));
        }
        Ok(Self { l, a, b })
    }

    pub fn l(&self) -> f64 {
        self.l as f64 / 10.0
    }

    pub fn a(&self) -> f64 {
        self.a as f64 / 10.0
    }

    pub fn b(&self) -> f64 {
        self.b as f64 / 10.0
    }

    pub fn tenths(&self) -> [i32; 3] {
        [self.l, self.a, self.b]
    }

    pub fn lab<T: Scalar>(&self) -> [T; 3] {
        let ten = T::lit(10.0);
        [
            T::lit(self.l as f64) / ten,
            T::lit(self.a as f64) / ten,
            T::lit(self.b as f64) / ten,
        ]
    }
}

impl fmt::Debug for ColorChip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lab({:.1}, {:.1}, {:.1})", self.l(), self.a(), self.b())
    }
}

impl fmt::Display for ColorChip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.1}, {:.1}, {:.1})", self.l(), self.a(), self.b())
    }
}

/// An HSL color with hue in degrees and saturation/lightness in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HslColor<T> {
    h: T,
    s: T,
    l: T,
}

impl<T: Scalar> HslColor<T> {
    /// Hue wraps modulo 360; saturation and lightness must lie in `[0, 1]`.
    pub fn new(h: T, s: T, l: T) -> Result<Self> {
        if !(h.is_finite() && s.is_finite() && l.is_finite()) {
            return Err(Error::InvalidColor("non-finite HSL component".into()));
        }
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !unit(s) || !unit(l) {
            return Err(Error::InvalidColor(format!("HSL ({h}, {s}, {l}): s and l must lie in [0, 1]")));
        }
        let full = T::lit(360.0);
        let mut h = h % full;
        if h < T::zero() {
            h += full;
        }
        if h >= full {
            h = T::zero();
        }
        Ok(Self { h, s, l })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn l(&self) -> T {
        self.l
    }

    /// Gamma-encoded sRGB in `[0, 1]`.
    pub fn to_srgb(&self) -> [T; 3] {
        let one = T::one();
        let two = T::lit(2.0);
        let c = (one - (two * self.l - one).abs()) * self.s;
        let hp = self.h / T::lit(60.0);
        let x = c * (one - (hp % two - one).abs());
        let m = self.l - c / two;
        let z = T::zero();
        let sector = hp.floor().to_i32().unwrap_or(0);
        let (r, g, b) = match sector {
            0 => (c, x, z),
            1 => (x, c, z),
            2 => (z, c, x),
            3 => (z, x, c),
            4 => (x, z, c),
            _ => (c, z, x),
        };
        [r + m, g + m, b + m]
    }
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// HSL → sRGB → XYZ (D65) → CIELAB, quantized to 0.1.
pub fn hsl_to_cielab<T: Scalar>(c: HslColor<T>) -> ColorChip {
    srgb_to_cielab(c.to_srgb().map(Scalar::to_f64_lossy))
}

/// Gamma-encoded sRGB in `[0, 1]` to CIELAB (D65), quantized to 0.1.
pub fn srgb_to_cielab(rgb: [f64; 3]) -> ColorChip {
    let rgb = rgb.map(|v| srgb_to_linear(v.clamp(0.0, 1.0)));
    let mut xyz = [0.0; 3];
    for (row, out) in RGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2];
    }
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    let a = (500.0 * (fx - fy)).clamp(-128.0, 128.0);
    let b = (200.0 * (fy - fz)).clamp(-128.0, 128.0);
    ColorChip::new(l, a, b).expect("clamped CIELAB is in range")
}

/// Euclidean CIELAB distance between two chips.
pub fn delta_e<T: Scalar>(x: &ColorChip, y: &ColorChip) -> T {
    // Integer squared distance in tenths is exact.
    let sq: i64 = x
        .tenths()
        .iter()
        .zip(y.tenths().iter())
        .map(|(p, q)| {
            let d = (*p - *q) as i64;
            d * d
        })
        .sum();
    T::lit(sq as f64).sqrt() / T::lit(10.0)
}

/// Distance from the target to its most similar distractor.
pub fn context_ease<T: Scalar>(target: &ColorChip, distractors: &[ColorChip; 2]) -> T {
    let d0: T = delta_e(target, &distractors[0]);
    let d1: T = delta_e(target, &distractors[1]);
    d0.min(d1)
}
