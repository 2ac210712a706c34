//! Mapping between physical Gaussian units and internal dimensionless units.
//!
//! Integrators work with time measured in a reference time (normally the
//! radiation time tau_e), mass in the renormalized mass, and a problem-chosen
//! length. All public inputs and outputs stay physical.

use crate::error::{Error, Result};

/// Powers of mass, length and time carried by a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimension {
    pub mass: i32,
    pub length: i32,
    pub time: i32,
}

impl Dimension {
    pub const fn new(mass: i32, length: i32, time: i32) -> Self {
        Dimension { mass, length, time }
    }

    pub const DIMENSIONLESS: Dimension = Dimension::new(0, 0, 0);
    pub const TIME: Dimension = Dimension::new(0, 0, 1);
    pub const FREQUENCY: Dimension = Dimension::new(0, 0, -1);
    pub const LENGTH: Dimension = Dimension::new(0, 1, 0);
    pub const VELOCITY: Dimension = Dimension::new(0, 1, -1);
    pub const ACCELERATION: Dimension = Dimension::new(0, 1, -2);
    pub const JERK: Dimension = Dimension::new(0, 1, -3);
    pub const MASS: Dimension = Dimension::new(1, 0, 0);
    pub const FORCE: Dimension = Dimension::new(1, 1, -2);
    pub const FORCE_RATE: Dimension = Dimension::new(1, 1, -3);
    pub const FORCE_ACCEL: Dimension = Dimension::new(1, 1, -4);
    pub const ENERGY: Dimension = Dimension::new(1, 2, -2);
    pub const POWER: Dimension = Dimension::new(1, 2, -3);
    pub const STIFFNESS: Dimension = Dimension::new(1, 0, -2);
    pub const DAMPING: Dimension = Dimension::new(1, 0, -1);

    /// Dimension of the n-th time derivative of position.
    pub const fn position_derivative(n: i32) -> Self {
        Dimension::new(0, 1, -n)
    }
}

/// Reference scales defining the internal unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub time_s: f64,
    pub mass_g: f64,
    pub length_cm: f64,
}

impl Scaling {
    pub fn new(time_s: f64, mass_g: f64, length_cm: f64) -> Result<Self> {
        for (name, v) in [("time", time_s), ("mass", mass_g), ("length", length_cm)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} scale must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Scaling {
            time_s,
            mass_g,
            length_cm,
        })
    }

    /// Scaling whose force unit equals `force_dyn`: length = F T^2 / M.
    pub fn with_force_unit(time_s: f64, mass_g: f64, force_dyn: f64) -> Result<Self> {
        Scaling::new(time_s, mass_g, force_dyn.abs() * time_s * time_s / mass_g)
    }

    /// Size of one internal unit of `dim`, expressed in physical units.
    pub fn unit(&self, dim: Dimension) -> f64 {
        self.mass_g.powi(dim.mass) * self.length_cm.powi(dim.length) * self.time_s.powi(dim.time)
    }

    pub fn to_internal(&self, value: f64, dim: Dimension) -> f64 {
        value / self.unit(dim)
    }

    pub fn to_physical(&self, value: f64, dim: Dimension) -> f64 {
        value * self.unit(dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DIMS: [Dimension; 8] = [
        Dimension::TIME,
        Dimension::LENGTH,
        Dimension::VELOCITY,
        Dimension::ACCELERATION,
        Dimension::FORCE,
        Dimension::ENERGY,
        Dimension::POWER,
        Dimension::DAMPING,
    ];

    #[test]
    fn force_unit_is_respected() {
        let s = Scaling::with_force_unit(6.26e-24, 9.1e-28, 3.0e-5).unwrap();
        assert!((s.unit(Dimension::FORCE) / 3.0e-5 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_scales() {
        assert!(Scaling::new(0.0, 1.0, 1.0).is_err());
        assert!(Scaling::new(1.0, -1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            t in -30.0f64..5.0, m in -30.0f64..5.0, l in -20.0f64..10.0,
            v in -1e30f64..1e30, idx in 0usize..8,
        ) {
            let s = Scaling::new(10f64.powf(t), 10f64.powf(m), 10f64.powf(l)).unwrap();
            let d = DIMS[idx];
            let back = s.to_physical(s.to_internal(v, d), d);
            prop_assert!((back - v).abs() <= 1e-12 * v.abs());
        }
    }
}
