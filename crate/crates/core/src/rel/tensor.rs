use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat4 = [[f64; 4]; 4];

/// Contravariant components (x^0, x^1, x^2, x^3), metric (+,-,-,-).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        FourVector([x0, x1, x2, x3])
    }

    /// Four-velocity of a particle with lab velocity `v`; fails for |v| >= c.
    pub fn from_velocity(v: [f64; 3], c: f64) -> Result<Self> {
        let b2 = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / (c * c);
        if !(b2 < 1.0) {
            return Err(Error::Domain(format!("|v|/c = {} is not below 1", b2.sqrt())));
        }
        let gamma = 1.0 / (1.0 - b2).sqrt();
        Ok(FourVector([gamma * c, gamma * v[0], gamma * v[1], gamma * v[2]]))
    }

    /// Four-velocity from the spatial part u = gamma v, on shell.
    pub fn from_spatial_u(u: [f64; 3], c: f64) -> Self {
        let u0 = (c * c + u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        FourVector([u0, u[0], u[1], u[2]])
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    /// Minkowski product g_{mu nu} a^mu b^nu.
    pub fn dot(&self, other: &FourVector) -> f64 {
        let (a, b) = (&self.0, &other.0);
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    /// Euclidean length of the component array; the rounding scale of `dot`.
    pub fn euclidean(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Covariant components g_{mu nu} x^nu.
    pub fn lower(&self) -> [f64; 4] {
        [self.0[0], -self.0[1], -self.0[2], -self.0[3]]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    fn mul(self, v: FourVector) -> FourVector {
        FourVector(v.0.map(|x| self * x))
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(self.0.map(|x| -x))
    }
}

pub fn mat_vec(m: &Mat4, v: &FourVector) -> FourVector {
    FourVector(std::array::from_fn(|i| {
        m[i][0] * v.0[0] + m[i][1] * v.0[1] + m[i][2] * v.0[2] + m[i][3] * v.0[3]
    }))
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Lab-frame E (statV/cm) and B (G).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FieldTensor {
    pub e: [f64; 3],
    pub b: [f64; 3],
}

impl FieldTensor {
    pub fn new(e: [f64; 3], b: [f64; 3]) -> Self {
        FieldTensor { e, b }
    }

    pub fn zero() -> Self {
        FieldTensor::default()
    }

    /// F^{mu nu}, antisymmetric by construction.
    pub fn contravariant(&self) -> Mat4 {
        let [ex, ey, ez] = self.e;
        let [bx, by, bz] = self.b;
        [
            [0.0, -ex, -ey, -ez],
            [ex, 0.0, -bz, by],
            [ey, bz, 0.0, -bx],
            [ez, -by, bx, 0.0],
        ]
    }

    /// F^mu_nu = F^{mu lambda} g_{lambda nu}: spatial columns change sign.
    pub fn mixed(&self) -> Mat4 {
        let mut m = self.contravariant();
        for row in m.iter_mut() {
            for x in row.iter_mut().skip(1) {
                *x = -*x;
            }
        }
        m
    }

    pub fn scaled(&self, s: f64) -> FieldTensor {
        FieldTensor {
            e: self.e.map(|x| s * x),
            b: self.b.map(|x| s * x),
        }
    }

    pub fn magnitude(&self) -> f64 {
        norm3(self.e).max(norm3(self.b))
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().chain(&self.b).all(|x| x.is_finite())
    }
}

/// Spatially uniform external fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Fields {
    Static(FieldTensor),
    /// E(t) = E cos(omega t + phase), B(t) = B cos(omega t + phase).
    Harmonic {
        amplitude: FieldTensor,
        omega: f64,
        phase: f64,
    },
}

impl Fields {
    pub fn uniform(e: [f64; 3], b: [f64; 3]) -> Self {
        Fields::Static(FieldTensor::new(e, b))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Fields::Static(f) => f.is_finite(),
            Fields::Harmonic {
                amplitude,
                omega,
                phase,
            } => amplitude.is_finite() && omega.is_finite() && phase.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("field components must be finite".into()))
        }
    }

    pub fn at(&self, t: f64) -> FieldTensor {
        match *self {
            Fields::Static(f) => f,
            Fields::Harmonic {
                amplitude,
                omega,
                phase,
            } => amplitude.scaled((omega * t + phase).cos()),
        }
    }

    /// Partial time derivative; the fields do not vary in space, so the
    /// derivative along a worldline is gamma times this.
    pub fn rate(&self, t: f64) -> FieldTensor {
        match *self {
            Fields::Static(_) => FieldTensor::zero(),
            Fields::Harmonic {
                amplitude,
                omega,
                phase,
            } => amplitude.scaled(-omega * (omega * t + phase).sin()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude() == 0.0
    }

    pub fn magnitude(&self) -> f64 {
        match self {
            Fields::Static(f) => f.magnitude(),
            Fields::Harmonic { amplitude, .. } => amplitude.magnitude(),
        }
    }

    pub fn frequency(&self) -> f64 {
        match self {
            Fields::Static(_) => 0.0,
            Fields::Harmonic { omega, .. } => omega.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antisymmetric_and_first_row() {
        let f = FieldTensor::new([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]);
        let m = f.contravariant();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i][j], -m[j][i]);
            }
        }
        assert_eq!(m[0], [0.0, -1.0, -2.0, -3.0]);
        assert_eq!(m[1][2], -6.0);
        assert_eq!(m[1][3], 5.0);
        assert_eq!(m[2][3], -4.0);
    }

    #[test]
    fn mixed_lowers_second_index() {
        let f = FieldTensor::new([1.0, -2.0, 0.5], [0.3, 0.7, -1.1]);
        let (up, mixed) = (f.contravariant(), f.mixed());
        let g = [1.0, -1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(mixed[i][j], up[i][j] * g[j]);
            }
        }
    }

    #[test]
    fn velocity_round_trip() {
        let c = 3e10;
        let u = FourVector::from_velocity([1e10, -2e10, 5e9], c).unwrap();
        assert!((u.norm2() / (c * c) - 1.0).abs() < 1e-14);
        let w = FourVector::from_spatial_u(u.spatial(), c);
        assert!((w.0[0] / u.0[0] - 1.0).abs() < 1e-15);
        assert!(FourVector::from_velocity([c, 0.0, 0.0], c).is_err());
    }

    #[test]
    fn harmonic_rate_is_derivative() {
        let f = Fields::Harmonic {
            amplitude: FieldTensor::new([1.0, 0.0, 2.0], [0.0, 3.0, 0.0]),
            omega: 2.0,
            phase: 0.3,
        };
        let (t, h) = (0.7, 1e-6);
        let fd = (f.at(t + h).e[2] - f.at(t - h).e[2]) / (2.0 * h);
        assert!((fd - f.rate(t).e[2]).abs() < 1e-8);
        assert_eq!(Fields::uniform([1.0; 3], [0.0; 3]).rate(5.0), FieldTensor::zero());
    }
}
