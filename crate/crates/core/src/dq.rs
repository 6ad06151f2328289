//! Two-component vectors in the rotor-aligned dq frame.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A (d, q) pair. Used for currents (A) and voltages (V).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dq {
    pub d: f64,
    pub q: f64,
}

impl Dq {
    pub const ZERO: Dq = Dq { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn dot(self, other: Dq) -> f64 {
        self.d * other.d + self.q * other.q
    }

    /// Peak magnitude of the space vector.
    pub fn magnitude(self) -> f64 {
        self.d.hypot(self.q)
    }

    /// Rotated +90 degrees.
    pub fn perpendicular(self) -> Dq {
        Dq::new(-self.q, self.d)
    }

    /// Instantaneous value in phase `k` (0 = a, 1 = b, 2 = c) at electrical angle `theta`,
    /// using the amplitude-invariant transform.
    pub fn to_phase(self, theta: f64, k: usize) -> f64 {
        let angle = theta - k as f64 * 2.0 * std::f64::consts::FRAC_PI_3;
        self.d * angle.cos() - self.q * angle.sin()
    }
}

impl Add for Dq {
    type Output = Dq;
    fn add(self, rhs: Dq) -> Dq {
        Dq::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl Sub for Dq {
    type Output = Dq;
    fn sub(self, rhs: Dq) -> Dq {
        Dq::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl Neg for Dq {
    type Output = Dq;
    fn neg(self) -> Dq {
        Dq::new(-self.d, -self.q)
    }
}

impl Mul<f64> for Dq {
    type Output = Dq;
    fn mul(self, k: f64) -> Dq {
        Dq::new(self.d * k, self.q * k)
    }
}
